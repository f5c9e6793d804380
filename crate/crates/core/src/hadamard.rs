//! Sylvester Hadamard matrices, accessed only through the entry oracle
//! `H(x, y) = (−1)^popcount(x & y)` and the fast Walsh-Hadamard transform.
//! Row/column 0 is the all-ones row/column.

use crate::error::{Error, Result};

/// Power-of-two Hadamard order `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HadamardDim(usize);

impl HadamardDim {
    /// Smallest power of two strictly greater than `k`, i.e. `2^⌈log₂(k+1)⌉`.
    pub fn for_domain(k: usize) -> Self {
        Self((k + 1).next_power_of_two())
    }

    pub fn new(size: usize) -> Result<Self> {
        if size == 0 || !size.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(size));
        }
        Ok(Self(size))
    }

    pub fn size(self) -> usize {
        self.0
    }

    fn check(self, i: usize) -> Result<()> {
        if i >= self.0 {
            return Err(Error::IndexOutOfRange { index: i, size: self.0 });
        }
        Ok(())
    }
}

#[inline(always)]
pub(crate) fn sign(x: usize, y: usize) -> i8 {
    if (x & y).count_ones() & 1 == 0 {
        1
    } else {
        -1
    }
}

pub fn entry(dim: HadamardDim, x: usize, y: usize) -> Result<i8> {
    dim.check(x)?;
    dim.check(y)?;
    Ok(sign(x, y))
}

/// `x ∈ B_y`, the rows where column `y` is `+1`.
pub fn in_column_set(dim: HadamardDim, y: usize, x: usize) -> Result<bool> {
    dim.check(x)?;
    dim.check(y)?;
    Ok(sign(x, y) == 1)
}

/// In-place `v ← H_K v` by radix-2 butterflies.
pub fn fwht_in_place(v: &mut [f64]) -> Result<()> {
    let len = v.len();
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(len));
    }
    let mut half = 1;
    while half < len {
        for block in v.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (s, d) = (*a + *b, *a - *b);
                *a = s;
                *b = d;
            }
        }
        half *= 2;
    }
    Ok(())
}

pub fn fwht(v: &[f64]) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    fwht_in_place(&mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;

    /// H_m built by the block recursion [[H, H], [H, −H]].
    fn recursive(m: usize) -> Vec<Vec<i64>> {
        let mut h = vec![vec![1i64]];
        while h.len() < m {
            let n = h.len();
            let mut next = vec![vec![0i64; 2 * n]; 2 * n];
            for i in 0..n {
                for j in 0..n {
                    next[i][j] = h[i][j];
                    next[i][j + n] = h[i][j];
                    next[i + n][j] = h[i][j];
                    next[i + n][j + n] = -h[i][j];
                }
            }
            h = next;
        }
        h
    }

    fn naive_product(v: &[f64]) -> Vec<f64> {
        let k = v.len();
        (0..k)
            .map(|x| (0..k).map(|y| sign(x, y) as f64 * v[y]).sum())
            .collect()
    }

    #[test]
    fn dim_for_domain() {
        assert_eq!(HadamardDim::for_domain(1).size(), 2);
        assert_eq!(HadamardDim::for_domain(7).size(), 8);
        assert_eq!(HadamardDim::for_domain(8).size(), 16);
        assert_eq!(HadamardDim::for_domain(1000).size(), 1024);
        assert_eq!(HadamardDim::for_domain(5000).size(), 8192);
        for k in 1..3000 {
            let kk = HadamardDim::for_domain(k).size();
            assert!(kk.is_power_of_two() && kk > k && kk < 2 * (k + 1));
        }
        assert!(HadamardDim::new(12).is_err());
    }

    #[test]
    fn entry_examples() {
        let d8 = HadamardDim::new(8).unwrap();
        for i in 0..8 {
            assert_eq!(entry(d8, 0, i).unwrap(), 1);
            assert_eq!(entry(d8, i, 0).unwrap(), 1);
        }
        assert_eq!(entry(HadamardDim::new(2).unwrap(), 1, 1).unwrap(), -1);
        assert!(entry(d8, 8, 0).is_err());
    }

    #[test]
    fn entry_matches_recursion_exhaustively() {
        for m in [1usize, 2, 4, 8, 16, 32, 64] {
            let dim = HadamardDim::new(m).unwrap();
            let h = recursive(m);
            for x in 0..m {
                for y in 0..m {
                    assert_eq!(entry(dim, x, y).unwrap() as i64, h[x][y], "m={m} x={x} y={y}");
                }
            }
        }
    }

    #[test]
    fn column_sets() {
        let d2 = HadamardDim::new(2).unwrap();
        let b1: Vec<usize> = (0..2).filter(|&x| in_column_set(d2, 1, x).unwrap()).collect();
        assert_eq!(b1, vec![0]);
        for m in [2usize, 4, 8, 16, 32, 64] {
            let dim = HadamardDim::new(m).unwrap();
            assert!((0..m).all(|x| in_column_set(dim, 0, x).unwrap()));
            for y in 1..m {
                let size = (0..m).filter(|&x| in_column_set(dim, y, x).unwrap()).count();
                assert_eq!(size, m / 2);
            }
        }
    }

    #[test]
    fn fwht_examples() {
        let mut e0 = vec![0.0; 8];
        e0[0] = 1.0;
        assert_eq!(fwht(&e0).unwrap(), vec![1.0; 8]);
        assert_eq!(fwht(&[1.0; 4]).unwrap(), vec![4.0, 0.0, 0.0, 0.0]);
        assert!(fwht(&[1.0; 3]).is_err());
        assert!(fwht(&[]).is_err());
    }

    #[test]
    fn fwht_twice_scales_by_k() {
        let mut s = RandomStream::new(8, 8);
        for m in [2usize, 16, 256, 1024] {
            let v: Vec<f64> = (0..m).map(|_| s.uniform() * 2.0 - 1.0).collect();
            let back = fwht(&fwht(&v).unwrap()).unwrap();
            for (a, b) in back.iter().zip(&v) {
                assert!((a - m as f64 * b).abs() <= 1e-9 * (m as f64 * b.abs()).max(1.0));
            }
        }
    }

    #[test]
    fn fwht_matches_naive() {
        let mut s = RandomStream::new(4, 4);
        for m in [1usize, 2, 8, 64, 512] {
            let v: Vec<f64> = (0..m).map(|_| s.uniform() - 0.5).collect();
            let fast = fwht(&v).unwrap();
            let slow = naive_product(&v);
            let scale = slow.iter().map(|x| x.abs()).fold(1e-300, f64::max);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() <= 1e-9 * scale);
            }
        }
    }
}
