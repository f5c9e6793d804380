use std::time::Instant;

use anyhow::Context;

use super::config::{Cell, Param, Scheme};
use crate::comm::{comm_decode_full, comm_encode_all, HashScheme};
use crate::dist::{make_uniform_sparse, sample_iid, tv_distance};
use crate::hadamard::HadamardDim;
use crate::hr::{self, hr_aggregate, hr_encode_all, hr_intermediate, DecodeMode};
use crate::rappor::{rappor_estimate_counts, RapporCounts};
use crate::rng::{mix2, RandomStream};

// substream ids under a trial's root stream
const TARGET_STREAM: u64 = 0;
const SAMPLE_STREAM: u64 = 1;
const PRIVATIZE_STREAM: u64 = 2;
const PUBLIC_COIN_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub scheme: Scheme,
    pub k: usize,
    pub s: usize,
    pub n: usize,
    pub param: Param,
    pub trial: usize,
    pub tv_error: f64,
    pub bits_per_user: u32,
    /// Not persisted; `None` for rows read back from disk.
    pub wall_time: Option<f64>,
    pub seed: u64,
}

/// Seed of one trial. It depends on `(k, s, n)` but not on the scheme or
/// on ε/ℓ, so every scheme and privacy level in a cell sees the same
/// target distribution, samples and coins.
pub fn trial_seed(master_seed: u64, cell: &Cell, trial: usize) -> u64 {
    let cell_hash = mix2(mix2(cell.k as u64, cell.s as u64), cell.n as u64);
    mix2(mix2(master_seed, cell_hash), trial as u64)
}

pub fn run_trial(master_seed: u64, cell: &Cell, trial: usize) -> anyhow::Result<TrialResult> {
    let started = Instant::now();
    let seed = trial_seed(master_seed, cell, trial);
    let root = RandomStream::new(seed, 0);
    let p = make_uniform_sparse(cell.k, cell.s, &mut root.substream(TARGET_STREAM))
        .with_context(|| format!("cell {cell}"))?;
    let samples = sample_iid(&p, cell.n, &mut root.substream(SAMPLE_STREAM));
    let privatize = root.substream(PRIVATIZE_STREAM);

    let (estimate, bits_per_user) = match (cell.scheme, cell.param) {
        (Scheme::HrDense | Scheme::HrSparse, Param::Epsilon(eps)) => {
            let dim = HadamardDim::for_domain(cell.k);
            let msgs = hr_encode_all(&samples, eps, dim, &privatize);
            let fracs = hr_aggregate(&msgs, cell.n, dim).with_context(|| format!("cell {cell}"))?;
            let mode = if cell.scheme == Scheme::HrSparse {
                DecodeMode::Sparse(cell.s)
            } else {
                DecodeMode::Dense
            };
            let est = hr::project(&hr_intermediate(&fracs, eps, cell.k)?, mode)?;
            (est, hr::BITS_PER_USER)
        }
        (Scheme::Rappor, Param::Epsilon(eps)) => {
            let half = cell.n / 2;
            let mut halves = [RapporCounts::new(cell.k), RapporCounts::new(cell.k)];
            for (i, &x) in samples.iter().enumerate() {
                halves[(i >= half) as usize].add_encoded(x, eps, &mut privatize.substream(i as u64));
            }
            let est = rappor_estimate_counts(&halves[0], &halves[1], cell.s, eps)
                .with_context(|| format!("cell {cell}"))?;
            (est.projected, cell.k as u32)
        }
        (Scheme::CommHash, Param::Ell(ell)) => {
            let public_seed = root.substream(PUBLIC_COIN_STREAM).next_word();
            let scheme = HashScheme::new(public_seed, ell, cell.k, cell.s)?;
            let half = cell.n / 2;
            let first = comm_encode_all(&samples[..half], 0, &scheme);
            let second = comm_encode_all(&samples[half..], half, &scheme);
            let est = comm_decode_full(&first, &second, &scheme, cell.k, cell.s)
                .with_context(|| format!("cell {cell}"))?;
            (est.projected, scheme.effective_ell)
        }
        (scheme, param) => anyhow::bail!("scheme {scheme} cannot take parameter {param:?}"),
    };

    Ok(TrialResult {
        scheme: cell.scheme,
        k: cell.k,
        s: cell.s,
        n: cell.n,
        param: cell.param,
        trial,
        tv_error: tv_distance(&estimate, &p)?,
        bits_per_user,
        wall_time: Some(started.elapsed().as_secs_f64()),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(scheme: Scheme, k: usize, s: usize, n: usize, param: Param) -> Cell {
        Cell { scheme, k, s, n, param }
    }

    #[test]
    fn every_scheme_is_accurate_on_a_point_mass() {
        let n = 1_000_000;
        let cells = [
            cell(Scheme::HrDense, 64, 1, n, Param::Epsilon(1.0)),
            cell(Scheme::HrSparse, 64, 1, n, Param::Epsilon(1.0)),
            cell(Scheme::Rappor, 64, 1, n, Param::Epsilon(1.0)),
            cell(Scheme::CommHash, 64, 1, n, Param::Ell(3)),
        ];
        for c in cells {
            let r = run_trial(5, &c, 0).unwrap();
            assert!(r.tv_error <= 0.05, "{c}: {}", r.tv_error);
        }
    }

    #[test]
    fn repeatable() {
        let c = cell(Scheme::CommHash, 50, 4, 2_000, Param::Ell(2));
        let mut a = run_trial(1, &c, 3).unwrap();
        let mut b = run_trial(1, &c, 3).unwrap();
        a.wall_time = None;
        b.wall_time = None;
        assert_eq!(a, b);
    }

    #[test]
    fn bits_per_user_by_scheme() {
        let hr = run_trial(1, &cell(Scheme::HrSparse, 30, 2, 200, Param::Epsilon(1.0)), 0).unwrap();
        assert_eq!(hr.bits_per_user, 1);
        let rr = run_trial(1, &cell(Scheme::Rappor, 30, 2, 200, Param::Epsilon(1.0)), 0).unwrap();
        assert_eq!(rr.bits_per_user, 30);
        let ch = run_trial(1, &cell(Scheme::CommHash, 30, 2, 200, Param::Ell(6)), 0).unwrap();
        assert_eq!(ch.bits_per_user, 2);
    }

    #[test]
    fn too_few_users_names_the_cell() {
        let err = run_trial(1, &cell(Scheme::HrDense, 100, 2, 50, Param::Epsilon(1.0)), 0).unwrap_err();
        assert!(format!("{err:#}").contains("k=100"), "{err:#}");
    }

    #[test]
    fn sparse_projection_beats_dense_on_shared_messages() {
        let (mut dense, mut sparse) = (0.0, 0.0);
        for t in 0..50 {
            let d = run_trial(3, &cell(Scheme::HrDense, 1000, 8, 100_000, Param::Epsilon(0.9)), t).unwrap();
            let s = run_trial(3, &cell(Scheme::HrSparse, 1000, 8, 100_000, Param::Epsilon(0.9)), t).unwrap();
            assert_eq!(d.seed, s.seed);
            dense += d.tv_error;
            sparse += s.tv_error;
        }
        assert!(sparse <= dense, "sparse {sparse} dense {dense}");
    }
}
