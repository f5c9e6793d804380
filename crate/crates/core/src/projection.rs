//! Euclidean projections onto the probability simplex `Δ_k` and onto the
//! set of distributions with at most `s` positive entries.

use std::cmp::Ordering;

use crate::dist::Distribution;
use crate::error::{Error, Result};

/// Threshold `τ` such that `Σ max(v_i − τ, 0) = 1` (sort-and-threshold).
fn simplex_threshold(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            tau = candidate;
        } else {
            break;
        }
    }
    tau
}

fn check_finite(v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Empty);
    }
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter(format!("entry {i} is not finite")));
    }
    Ok(())
}

/// `argmin_{p ∈ Δ_k} ‖v − p‖₂`.
pub fn project_simplex(v: &[f64]) -> Result<Distribution> {
    check_finite(v)?;
    let tau = simplex_threshold(v);
    Distribution::new(v.iter().map(|&x| (x - tau).clamp(0.0, 1.0)).collect())
}

/// Projection onto the simplex over the coordinates in `set`; every other
/// coordinate of the output is zero.
pub fn project_simplex_on(v: &[f64], set: &[usize]) -> Result<Distribution> {
    check_finite(v)?;
    if set.is_empty() {
        return Err(Error::Empty);
    }
    if let Some(&i) = set.iter().find(|&&i| i >= v.len()) {
        return Err(Error::IndexOutOfRange { index: i, size: v.len() });
    }
    let restricted: Vec<f64> = set.iter().map(|&i| v[i]).collect();
    let tau = simplex_threshold(&restricted);
    let mut out = vec![0.0; v.len()];
    for (&i, &x) in set.iter().zip(&restricted) {
        out[i] = (x - tau).clamp(0.0, 1.0);
    }
    Distribution::new(out)
}

/// Indices of the `count` largest values, ties broken toward the smaller
/// index; returned in that rank order.
pub fn top_indices<T: PartialOrd + Copy>(values: &[T], count: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    let by_rank = |&a: &usize, &b: &usize| {
        values[b]
            .partial_cmp(&values[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    };
    let count = count.min(values.len());
    if count == 0 {
        return Vec::new();
    }
    if count < idx.len() {
        idx.select_nth_unstable_by(count - 1, by_rank);
        idx.truncate(count);
    }
    idx.sort_unstable_by(by_rank);
    idx
}

/// Projection onto `Δ_{k,s}`: keep the `s` largest entries of `v` and
/// project them onto the `s`-dimensional simplex.
pub fn project_sparse_simplex(v: &[f64], s: usize) -> Result<Distribution> {
    check_finite(v)?;
    if s == 0 || s > v.len() {
        return Err(Error::SparsityOutOfRange { k: v.len(), s });
    }
    let support = top_indices(v, s);
    project_simplex_on(v, &support)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;

    fn l2(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }

    fn random_simplex_point(k: usize, s: &mut RandomStream) -> Vec<f64> {
        let e: Vec<f64> = (0..k).map(|_| -(1.0 - s.uniform()).ln()).collect();
        let t: f64 = e.iter().sum();
        e.into_iter().map(|x| x / t).collect()
    }

    #[test]
    fn member_is_fixed() {
        let v = [0.2, 0.3, 0.5];
        let p = project_simplex(&v).unwrap();
        for (a, b) in p.probs().iter().zip(&v) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn two_point_grid_oracle() {
        // brute-force over Δ₂ at resolution 1e-4
        let v = [1.5, 0.5];
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..=10_000 {
            let a = i as f64 * 1e-4;
            let dist = l2(&v, &[a, 1.0 - a]);
            if dist < best.0 {
                best = (dist, a);
            }
        }
        assert_eq!(best.1, 1.0);
        let p = project_simplex(&v).unwrap();
        assert_eq!(p.probs(), &[1.0, 0.0]);
        assert_eq!(project_simplex(&[0.0, 0.0]).unwrap().probs(), &[0.5, 0.5]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(project_simplex(&[]).is_err());
        assert!(project_simplex(&[f64::NAN, 1.0]).is_err());
        assert!(project_sparse_simplex(&[0.1, 0.2], 3).is_err());
        assert!(project_sparse_simplex(&[0.1, 0.2], 0).is_err());
    }

    #[test]
    fn simplex_projection_is_optimal() {
        let mut s = RandomStream::new(21, 0);
        for k in 2..=6usize {
            let v: Vec<f64> = (0..k).map(|_| s.uniform() * 3.0 - 1.0).collect();
            let out = project_simplex(&v).unwrap();
            let best = l2(&v, out.probs());
            for _ in 0..100_000 {
                let p = random_simplex_point(k, &mut s);
                assert!(best <= l2(&v, &p) + 1e-6);
            }
        }
    }

    #[test]
    fn sparse_examples() {
        let p = project_sparse_simplex(&[0.9, 0.05, 0.05], 1).unwrap();
        assert_eq!(p.probs(), &[1.0, 0.0, 0.0]);
        // brute force over all single-support projections
        let v = [0.9, 0.05, 0.05];
        let best = (0..3)
            .map(|i| {
                let mut e = [0.0; 3];
                e[i] = 1.0;
                l2(&v, &e)
            })
            .fold(f64::INFINITY, f64::min);
        assert!((l2(&v, p.probs()) - best).abs() < 1e-15);

        let member = [0.0, 0.6, 0.0, 0.4];
        let q = project_sparse_simplex(&member, 2).unwrap();
        for (a, b) in q.probs().iter().zip(&member) {
            assert!((a - b).abs() < 1e-15);
        }
        let v = [0.3, -0.2, 0.7, 0.4];
        assert_eq!(project_sparse_simplex(&v, 4).unwrap(), project_simplex(&v).unwrap());
    }

    #[test]
    fn ties_prefer_smaller_index() {
        assert_eq!(top_indices(&[0.5, 0.5, 0.5], 2), vec![0, 1]);
        assert_eq!(top_indices(&[1u64, 3, 3, 2], 2), vec![1, 2]);
        let p = project_sparse_simplex(&[0.5, 0.5, 0.5], 1).unwrap();
        assert_eq!(p.probs(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn sparse_projection_beats_random_supports() {
        let mut s = RandomStream::new(31, 0);
        for k in [4usize, 8, 12] {
            for sp in [1usize, 2, 3] {
                let v: Vec<f64> = (0..k).map(|_| s.uniform() * 0.6 - 0.1).collect();
                let out = project_sparse_simplex(&v, sp).unwrap();
                assert!(out.support_size() <= sp);
                let best = l2(&v, out.probs());
                for _ in 0..10_000 {
                    let support: Vec<usize> = rand::seq::index::sample(&mut s, k, sp).into_vec();
                    let cand = project_simplex_on(&v, &support).unwrap();
                    assert!(best <= l2(&v, cand.probs()) + 1e-9);
                }
            }
        }
    }

    #[test]
    fn idempotent() {
        let mut s = RandomStream::new(41, 0);
        for _ in 0..100 {
            let v: Vec<f64> = (0..20).map(|_| s.uniform() * 2.0 - 0.5).collect();
            let once = project_simplex(&v).unwrap();
            let twice = project_simplex(once.probs()).unwrap();
            assert!(l2(once.probs(), twice.probs()) < 1e-12);
            let once = project_sparse_simplex(&v, 5).unwrap();
            let twice = project_sparse_simplex(once.probs(), 5).unwrap();
            assert!(l2(once.probs(), twice.probs()) < 1e-12);
        }
    }

    proptest::proptest! {
        #[test]
        fn sparse_output_has_bounded_support(v in proptest::collection::vec(-1.0f64..1.0, 1..40), s in 1usize..10) {
            let s = s.min(v.len());
            let p = project_sparse_simplex(&v, s).unwrap();
            proptest::prop_assert!(p.support_size() <= s);
            proptest::prop_assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
