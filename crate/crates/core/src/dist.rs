//! Discrete distributions over `[k] = {0, ..., k-1}`, divergences, sampling
//! and the packing family used by the lower-bound checks.
//!
//! All logarithms in this crate are natural logarithms.
//!
//! Two domains appear: estimation works on `[k]`; the packing family lives
//! on `{0} ∪ [k]`, realized as a vector of length `k + 1` whose index 0 is
//! the heavy symbol and whose indices `1..=k` are the packing coordinates.

use crate::bounds::Channel;
use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Absolute tolerance on the total mass of a [`Distribution`].
pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Empty);
        }
        let mut total = 0.0;
        for (i, &p) in probs.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidDistribution(format!("entry {i} = {p} outside [0, 1]")));
            }
            total += p;
        }
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("entries sum to {total}")));
        }
        Ok(Self { probs })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Empty);
        }
        Self::new(vec![1.0 / k as f64; k])
    }

    pub fn point_mass(k: usize, x: usize) -> Result<Self> {
        if x >= k {
            return Err(Error::IndexOutOfRange { index: x, size: k });
        }
        let mut probs = vec![0.0; k];
        probs[x] = 1.0;
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn support_size(&self) -> usize {
        self.probs.iter().filter(|&&p| p > 0.0).count()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&x| self.probs[x] > 0.0).collect()
    }

    /// Total mass on a set of symbols.
    pub fn mass_of(&self, set: &[usize]) -> f64 {
        set.iter().map(|&x| self.probs[x]).sum()
    }
}

impl std::ops::Index<usize> for Distribution {
    type Output = f64;

    fn index(&self, x: usize) -> &f64 {
        &self.probs[x]
    }
}

/// Total variation distance, `½‖p − q‖₁`.
pub fn tv_distance(p: &Distribution, q: &Distribution) -> Result<f64> {
    tv_distance_slices(p.probs(), q.probs())
}

/// TV distance on raw vectors (estimates before projection may be signed).
pub fn tv_distance_slices(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch { left: p.len(), right: q.len() });
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// `χ²(p, q) = Σ_{q(x) > 0} (p(x) − q(x))² / q(x)`.
pub fn chi_square(p: &Distribution, q: &Distribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch { left: p.len(), right: q.len() });
    }
    let mut total = 0.0;
    for (x, (&a, &b)) in p.probs().iter().zip(q.probs()).enumerate() {
        if b > 0.0 {
            total += (a - b) * (a - b) / b;
        } else if a > 0.0 {
            return Err(Error::SupportViolation { index: x });
        }
    }
    Ok(total)
}

/// Inverse-CDF sampler over a fixed distribution.
#[derive(Debug, Clone)]
pub struct Sampler {
    cdf: Vec<f64>,
    last_positive: usize,
}

impl Sampler {
    pub fn new(p: &Distribution) -> Self {
        let mut acc = 0.0;
        let cdf = p
            .probs()
            .iter()
            .map(|&v| {
                acc += v;
                acc
            })
            .collect();
        let last_positive = p.probs().iter().rposition(|&v| v > 0.0).unwrap_or(0);
        Self { cdf, last_positive }
    }

    pub fn draw(&self, stream: &mut RandomStream) -> usize {
        let total = self.cdf[self.cdf.len() - 1];
        let u = stream.uniform() * total;
        let idx = self.cdf.partition_point(|&c| c <= u);
        idx.min(self.last_positive)
    }
}

/// `n` i.i.d. draws from `p`.
pub fn sample_iid(p: &Distribution, n: usize, stream: &mut RandomStream) -> Vec<usize> {
    let sampler = Sampler::new(p);
    (0..n).map(|_| sampler.draw(stream)).collect()
}

/// Empirical distribution of a sample over `[k]`.
pub fn empirical(samples: &[usize], k: usize) -> Result<Distribution> {
    if samples.is_empty() {
        return Err(Error::Empty);
    }
    let mut counts = vec![0usize; k];
    for &x in samples {
        if x >= k {
            return Err(Error::IndexOutOfRange { index: x, size: k });
        }
        counts[x] += 1;
    }
    let n = samples.len() as f64;
    Distribution::new(counts.into_iter().map(|c| c as f64 / n).collect())
}

/// Uniform distribution on a support of size `s` drawn uniformly from `[k]`.
pub fn make_uniform_sparse(k: usize, s: usize, stream: &mut RandomStream) -> Result<Distribution> {
    if s == 0 || s > k {
        return Err(Error::SparsityOutOfRange { k, s });
    }
    let support = rand::seq::index::sample(stream, k, s);
    let mut probs = vec![0.0; k];
    for x in support {
        probs[x] = 1.0 / s as f64;
    }
    Distribution::new(probs)
}

/// Binary index `z ∈ {0,1}^k` with exactly `s` ones.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PackingIndex {
    bits: Vec<bool>,
    s: usize,
}

impl PackingIndex {
    pub fn new(bits: Vec<bool>, s: usize) -> Result<Self> {
        let ones = bits.iter().filter(|&&b| b).count();
        if ones != s || s == 0 {
            return Err(Error::Precondition(format!("packing index has {ones} ones, expected s = {s}")));
        }
        Ok(Self { bits, s })
    }

    pub fn from_positions(k: usize, positions: &[usize]) -> Result<Self> {
        let mut bits = vec![false; k];
        for &x in positions {
            if x >= k {
                return Err(Error::IndexOutOfRange { index: x, size: k });
            }
            bits[x] = true;
        }
        Self::new(bits, positions.len())
    }

    pub fn k(&self) -> usize {
        self.bits.len()
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Visit every index in `Z_{k,s}` in lexicographic order of positions.
    pub fn for_each(k: usize, s: usize, mut f: impl FnMut(&[usize])) {
        if s == 0 || s > k {
            return;
        }
        let mut pos: Vec<usize> = (0..s).collect();
        loop {
            f(&pos);
            // advance to the next combination
            let mut i = s;
            while i > 0 {
                i -= 1;
                if pos[i] != i + k - s {
                    pos[i] += 1;
                    for j in i + 1..s {
                        pos[j] = pos[j - 1] + 1;
                    }
                    break;
                }
                if i == 0 {
                    return;
                }
            }
        }
    }
}

fn check_packing_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && 8.0 * alpha < 1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    Ok(())
}

/// Hard instance over `{0} ∪ [k]`: mass `1 − 8α` on symbol 0 and `8α/s` on
/// each coordinate selected by `z` (stored at index `x + 1`).
pub fn make_packing_dist(z: &PackingIndex, alpha: f64) -> Result<Distribution> {
    check_packing_alpha(alpha)?;
    let mut probs = Vec::with_capacity(z.k() + 1);
    probs.push(1.0 - 8.0 * alpha);
    let w = 8.0 * alpha / z.s() as f64;
    probs.extend(z.bits().iter().map(|&b| if b { w } else { 0.0 }));
    Distribution::new(probs)
}

/// Average of the packing family: `1 − 8α` on 0, `8α/k` elsewhere.
pub fn packing_center(k: usize, alpha: f64) -> Result<Distribution> {
    check_packing_alpha(alpha)?;
    if k == 0 {
        return Err(Error::Empty);
    }
    let mut probs = vec![8.0 * alpha / k as f64; k + 1];
    probs[0] = 1.0 - 8.0 * alpha;
    Distribution::new(probs)
}

/// Output law `q(y) = Σ_x W(y|x) p(x)`.
pub fn induced_output_dist(channel: &Channel, p: &Distribution) -> Result<Distribution> {
    if channel.inputs() != p.len() {
        return Err(Error::DimensionMismatch(format!(
            "channel has {} input rows, distribution has {} entries",
            channel.inputs(),
            p.len()
        )));
    }
    let mut q = vec![0.0; channel.outputs()];
    for (x, &px) in p.probs().iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        for (qy, &w) in q.iter_mut().zip(channel.row(x)) {
            *qy += w * px;
        }
    }
    // rounding can push the sum a hair past 1 or an entry past 1
    for v in &mut q {
        *v = v.clamp(0.0, 1.0);
    }
    Distribution::new(q)
}
