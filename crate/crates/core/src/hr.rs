//! One-bit Hadamard Response with projection.
//!
//! Users are split into `K` groups by `user_index mod K`. A user in group
//! `j` holding `x` sends a single bit that is 1 with probability
//! `e^ε/(e^ε+1)` when `x ∈ B_j` and `1/(e^ε+1)` otherwise. The server
//! averages bits per group into `ŝ`, inverts with
//! `p̃_K = (e^ε+1)/(K(e^ε−1)) · H_K(2ŝ − 1)`, truncates to `[k]`, and projects
//! onto `Δ_k` (dense) or `Δ_{k,s}` (sparse).

use crate::bounds::Channel;
use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::hadamard::{fwht_in_place, in_column_set, sign, HadamardDim};
use crate::projection::{project_simplex, project_sparse_simplex};
use crate::rng::RandomStream;

pub const BITS_PER_USER: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HrMessage {
    pub user_index: usize,
    pub bit: bool,
}

/// Per-group fractions of ones and the group sizes they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct HrFractions {
    pub s_hat: Vec<f64>,
    pub group_sizes: Vec<usize>,
}

impl HrFractions {
    pub fn empty_groups(&self) -> Vec<usize> {
        (0..self.group_sizes.len()).filter(|&j| self.group_sizes[j] == 0).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeMode {
    /// Project onto `Δ_k`; needs no knowledge of the sparsity.
    Dense,
    /// Project onto `Δ_{k,s}`.
    Sparse(usize),
}

#[inline]
pub fn group(user_index: usize, dim: HadamardDim) -> usize {
    user_index & (dim.size() - 1)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    Ok(())
}

/// `(P(1 | x ∈ B_j), P(1 | x ∉ B_j))`.
pub fn bit_probabilities(epsilon: f64) -> (f64, f64) {
    let e = epsilon.exp();
    (e / (e + 1.0), 1.0 / (e + 1.0))
}

pub fn hr_encode(
    x: usize,
    user_index: usize,
    epsilon: f64,
    dim: HadamardDim,
    stream: &mut RandomStream,
) -> HrMessage {
    let (hi, lo) = bit_probabilities(epsilon);
    let inside = sign(x, group(user_index, dim)) == 1;
    HrMessage {
        user_index,
        bit: stream.bernoulli(if inside { hi } else { lo }),
    }
}

/// Privatize a whole sample; user `i` draws from substream `i` of `stream`.
pub fn hr_encode_all(samples: &[usize], epsilon: f64, dim: HadamardDim, stream: &RandomStream) -> Vec<HrMessage> {
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| hr_encode(x, i, epsilon, dim, &mut stream.substream(i as u64)))
        .collect()
}

pub fn hr_aggregate(messages: &[HrMessage], n: usize, dim: HadamardDim) -> Result<HrFractions> {
    let kk = dim.size();
    if n < kk {
        return Err(Error::TooFewUsers { n, dim: kk });
    }
    let mut seen = vec![false; n];
    let mut ones = vec![0usize; kk];
    let mut sizes = vec![0usize; kk];
    for m in messages {
        if m.user_index >= n {
            return Err(Error::IndexOutOfRange { index: m.user_index, size: n });
        }
        if std::mem::replace(&mut seen[m.user_index], true) {
            return Err(Error::InvalidMessages(format!("duplicate user index {}", m.user_index)));
        }
        let j = group(m.user_index, dim);
        sizes[j] += 1;
        ones[j] += m.bit as usize;
    }
    let s_hat = ones
        .iter()
        .zip(&sizes)
        .map(|(&o, &c)| if c == 0 { 0.0 } else { o as f64 / c as f64 })
        .collect();
    Ok(HrFractions { s_hat, group_sizes: sizes })
}

/// `E[ŝ]` for a known `p`: `t_j = Σ_x p(x)·P(1 | x, j)`.
pub fn noiseless_fractions(p: &Distribution, epsilon: f64, dim: HadamardDim) -> Result<Vec<f64>> {
    if p.len() >= dim.size() {
        return Err(Error::DimensionMismatch(format!("k = {} needs K > k, got K = {}", p.len(), dim.size())));
    }
    let (hi, lo) = bit_probabilities(epsilon);
    (0..dim.size())
        .map(|j| {
            let mut t = 0.0;
            for (x, &px) in p.probs().iter().enumerate() {
                t += px * if in_column_set(dim, j, x)? { hi } else { lo };
            }
            Ok(t)
        })
        .collect()
}

/// Unprojected estimate `p̃` (first `k` entries of `p̃_K`); may be negative.
pub fn hr_intermediate(fracs: &HrFractions, epsilon: f64, k: usize) -> Result<Vec<f64>> {
    check_epsilon(epsilon)?;
    let kk = fracs.s_hat.len();
    if kk <= k {
        return Err(Error::DimensionMismatch(format!("k = {k} needs K > k, got K = {kk}")));
    }
    if let Some(&j) = fracs.empty_groups().first() {
        return Err(Error::InvalidMessages(format!("group {j} received no messages")));
    }
    let e = epsilon.exp();
    let scale = (e + 1.0) / (kk as f64 * (e - 1.0));
    let mut v: Vec<f64> = fracs.s_hat.iter().map(|&s| 2.0 * s - 1.0).collect();
    fwht_in_place(&mut v)?;
    v.truncate(k);
    v.iter_mut().for_each(|x| *x *= scale);
    Ok(v)
}

pub fn project(intermediate: &[f64], mode: DecodeMode) -> Result<Distribution> {
    match mode {
        DecodeMode::Dense => project_simplex(intermediate),
        DecodeMode::Sparse(s) => project_sparse_simplex(intermediate, s),
    }
}

pub fn hr_decode(fracs: &HrFractions, epsilon: f64, k: usize, mode: DecodeMode) -> Result<Distribution> {
    project(&hr_intermediate(fracs, epsilon, k)?, mode)
}

/// Explicit channel of a group-`j` user over inputs `0..inputs`; column 0
/// is bit 0, column 1 is bit 1.
pub fn hr_channel_matrix(epsilon: f64, dim: HadamardDim, j: usize, inputs: usize) -> Result<Channel> {
    check_epsilon(epsilon)?;
    if inputs > dim.size() {
        return Err(Error::DimensionMismatch(format!("{inputs} inputs exceed K = {}", dim.size())));
    }
    let (hi, lo) = bit_probabilities(epsilon);
    let rows = (0..inputs)
        .map(|x| {
            let q = if in_column_set(dim, j, x)? { hi } else { lo };
            Ok(vec![1.0 - q, q])
        })
        .collect::<Result<Vec<_>>>()?;
    Channel::new(rows)
}
