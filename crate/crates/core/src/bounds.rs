//! Executable checks of the lower-bound machinery: explicit channels, the
//! ε-LDP ratio test, exact χ² contraction over the packing family, the
//! packing gap, and sample-size planning.

use serde::Serialize;
use serde_json::{json, Value};

use crate::dist::{chi_square, induced_output_dist, make_packing_dist, packing_center, PackingIndex};
use crate::error::{Error, Result};

/// Relative slack allowed on likelihood ratios in [`verify_ldp`]; absorbs
/// rounding in channels whose ratio is exactly `e^ε` in exact arithmetic.
pub const LDP_RATIO_SLACK: f64 = 1e-12;

/// Largest `C(k, s)` that [`expected_chisq_over_packing`] will enumerate.
pub const ENUMERATION_BUDGET: usize = 1_000_000;

/// Stage-one constant of the hashing scheme's sample size.
pub const STAGE_ONE_CONSTANT: f64 = 700_000.0;
/// Stage-two constant of the hashing scheme's sample size.
pub const STAGE_TWO_CONSTANT: f64 = 6_400.0;
/// Constant in front of the LDP risk bound `40·s·√log(2k/s)/√n·(e^ε+1)/(e^ε−1)`.
pub const LDP_RISK_CONSTANT: f64 = 40.0;
/// `n = c·s²·max{log(k/s), 1}/(α²ε²)`; `c = 40²·4`, the small-ε limit of
/// inverting the LDP risk bound, where `(e^ε+1)/(e^ε−1) ≈ 2/ε`.
pub const LDP_SAMPLE_CONSTANT: f64 = 6_400.0;

/// Row-stochastic matrix `W(y|x)`; rows are inputs, columns outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    rows: Vec<Vec<f64>>,
}

impl Channel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let width = rows.first().map(Vec::len).ok_or(Error::Empty)?;
        if width == 0 {
            return Err(Error::InvalidChannel("no outputs".into()));
        }
        for (x, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::InvalidChannel(format!("row {x} has {} columns, expected {width}", row.len())));
            }
            if row.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
                return Err(Error::InvalidChannel(format!("row {x} has a negative or non-finite entry")));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidChannel(format!("row {x} sums to {total}")));
            }
        }
        Ok(Self { rows })
    }

    pub fn identity(k: usize) -> Self {
        let rows = (0..k)
            .map(|x| (0..k).map(|y| if x == y { 1.0 } else { 0.0 }).collect())
            .collect();
        Self { rows }
    }

    /// `k`-ary randomized response: keep the input with probability
    /// `e^ε/(e^ε+k−1)`, otherwise report each other symbol w.p. `1/(e^ε+k−1)`.
    pub fn randomized_response(k: usize, epsilon: f64) -> Self {
        let e = epsilon.exp();
        let denom = e + k as f64 - 1.0;
        let rows = (0..k)
            .map(|x| (0..k).map(|y| if x == y { e / denom } else { 1.0 / denom }).collect())
            .collect();
        Self { rows }
    }

    /// Post-processing `W·M` by a row-stochastic `M`.
    pub fn then(&self, post: &Channel) -> Result<Channel> {
        if self.outputs() != post.inputs() {
            return Err(Error::DimensionMismatch(format!(
                "{} outputs cannot feed {} inputs",
                self.outputs(),
                post.inputs()
            )));
        }
        let rows = self
            .rows
            .iter()
            .map(|row| {
                (0..post.outputs())
                    .map(|z| row.iter().enumerate().map(|(y, &w)| w * post.rows[y][z]).sum())
                    .collect()
            })
            .collect();
        Ok(Channel { rows })
    }

    pub fn inputs(&self) -> usize {
        self.rows.len()
    }

    pub fn outputs(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x]
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.rows[x][y]
    }
}

/// True iff `W(y|x) ≤ e^ε·W(y|x')` for every output and input pair. Two
/// zeros are compatible; a positive entry against a zero is not.
pub fn verify_ldp(channel: &Channel, epsilon: f64) -> bool {
    let limit = epsilon.exp() * (1.0 + LDP_RATIO_SLACK);
    (0..channel.outputs()).all(|y| {
        let (lo, hi) = (0..channel.inputs())
            .map(|x| channel.get(x, y))
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), w| (lo.min(w), hi.max(w)));
        if hi == 0.0 {
            return true;
        }
        lo > 0.0 && hi <= limit * lo
    })
}

/// Whether `bound` caps `value` from above or from below.
#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct BoundReport {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub kind: BoundKind,
    pub satisfied: bool,
    pub context: Value,
}

impl BoundReport {
    /// Satisfied iff `value ≤ bound + 1e-9`.
    pub fn upper(name: impl Into<String>, value: f64, bound: f64, context: Value) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            kind: BoundKind::Upper,
            satisfied: value <= bound + 1e-9,
            context,
        }
    }

    /// Satisfied iff `value ≥ bound − 1e-9`.
    pub fn lower(name: impl Into<String>, value: f64, bound: f64, context: Value) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            kind: BoundKind::Lower,
            satisfied: value >= bound - 1e-9,
            context,
        }
    }
}

/// `C(n, r)` as a float (exact while the result fits in 53 bits).
pub fn binomial(n: u64, r: u64) -> f64 {
    if r > n {
        return 0.0;
    }
    let r = r.min(n - r);
    let mut acc = 1.0f64;
    for i in 0..r {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

pub fn ln_binomial(n: u64, r: u64) -> f64 {
    if r > n {
        return f64::NEG_INFINITY;
    }
    let r = r.min(n - r);
    (0..r).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

fn check_packing_channel(channel: &Channel, k: usize, s: usize) -> Result<()> {
    if channel.inputs() != k + 1 {
        return Err(Error::DimensionMismatch(format!(
            "packing channel needs k + 1 = {} input rows, got {}",
            k + 1,
            channel.inputs()
        )));
    }
    if s == 0 || s > k {
        return Err(Error::SparsityOutOfRange { k, s });
    }
    Ok(())
}

/// Exact `E_Z[χ²(p_Z^W, p_0^W)]` for `Z` uniform on `Z_{k,s}`, by enumerating
/// every packing index. `channel` acts on `{0} ∪ [k]` (k + 1 rows).
pub fn expected_chisq_over_packing(channel: &Channel, k: usize, s: usize, alpha: f64) -> Result<f64> {
    check_packing_channel(channel, k, s)?;
    let count = binomial(k as u64, s as u64);
    if count > ENUMERATION_BUDGET as f64 {
        return Err(Error::EnumerationBudget { count, budget: ENUMERATION_BUDGET });
    }
    let center = induced_output_dist(channel, &packing_center(k, alpha)?)?;
    let mut total = 0.0;
    let mut failure = None;
    PackingIndex::for_each(k, s, |pos| {
        if failure.is_some() {
            return;
        }
        let step = PackingIndex::from_positions(k, pos)
            .and_then(|z| make_packing_dist(&z, alpha))
            .and_then(|p| induced_output_dist(channel, &p))
            .and_then(|q| chi_square(&q, &center));
        match step {
            Ok(v) => total += v,
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(total / count)
}

/// The same expectation through the first and second moments of `Z`
/// (`E Z_x = s/k`, `E Z_x Z_x' = s(s−1)/(k(k−1))`), without enumeration.
pub fn expected_chisq_closed_form(channel: &Channel, k: usize, s: usize, alpha: f64) -> Result<f64> {
    check_packing_channel(channel, k, s)?;
    let center = packing_center(k, alpha)?;
    let (kf, sf) = (k as f64, s as f64);
    let diag = 1.0 / (sf * kf) - 1.0 / (kf * kf);
    let off = if k > 1 {
        (sf - 1.0) / (sf * kf * (kf - 1.0)) - 1.0 / (kf * kf)
    } else {
        0.0
    };
    let mut total = 0.0;
    for y in 0..channel.outputs() {
        let denom: f64 = (0..=k).map(|x| center[x] * channel.get(x, y)).sum();
        let (sum, sum_sq) = (1..=k).fold((0.0, 0.0), |(a, b), x| {
            let w = channel.get(x, y);
            (a + w, b + w * w)
        });
        let second_moment = 64.0 * alpha * alpha * (diag * sum_sq + off * (sum * sum - sum_sq));
        if denom > 0.0 {
            total += second_moment / denom;
        }
    }
    Ok(total)
}

/// `64·α²·(e^ε−1)²/s`, the explicit constant carried by the LDP argument.
pub fn ldp_chisq_bound(alpha: f64, epsilon: f64, s: usize) -> f64 {
    let g = epsilon.exp_m1();
    64.0 * alpha * alpha * g * g / s as f64
}

/// `8α·2^ℓ/s` for channels with `2^ℓ` outputs.
pub fn comm_chisq_bound(alpha: f64, ell: u32, s: usize) -> f64 {
    8.0 * alpha * (1u64 << ell) as f64 / s as f64
}

/// `I(Z; Y^n) ≤ n · max_W E_Z[χ²]`, in nats.
pub fn mutual_info_bound(n: f64, per_user_chisq: f64) -> f64 {
    n * per_user_chisq
}

/// Smallest `n` consistent with `(I + log 2)/gap > 0.9` when `I ≤ n·χ²`.
pub fn implied_sample_lower_bound(gap: f64, per_user_chisq: f64) -> f64 {
    ((0.9 * gap - std::f64::consts::LN_2) / per_user_chisq).max(0.0)
}

/// `N_t^max` for `Z_{k,s}`: indices within Hamming distance `t` of a fixed
/// index. Distance is always even, `2j` for `j` swapped positions.
pub fn max_neighborhood(k: usize, s: usize, t: f64) -> f64 {
    let jmax = (t / 2.0).floor() as u64;
    (0..=jmax.min(s as u64))
        .map(|j| binomial(s as u64, j) * binomial((k - s) as u64, j))
        .sum()
}

/// `C(s, ⌊s/2⌋)·C(k − ⌈s/2⌉, ⌊s/2⌋)`, the counting bound on `N_{s/2}^max`.
pub fn neighborhood_upper_bound(k: usize, s: usize) -> f64 {
    let moved = (s / 2) as u64;
    binomial(s as u64, moved) * binomial(k as u64 - (s as u64 - moved), moved)
}

/// `log|Z_{k,s}| − log N_{s/2}^max` against `(s/8)·log(k/s)`.
pub fn packing_gap(k: usize, s: usize) -> Result<BoundReport> {
    if s == 0 || 100 * s > k {
        return Err(Error::Precondition(format!("packing gap needs 1 <= s <= k/100, got k = {k}, s = {s}")));
    }
    Ok(packing_gap_unchecked(k, s))
}

/// [`packing_gap`] without the `s ≤ k/100` precondition (diagnostics only).
pub fn packing_gap_unchecked(k: usize, s: usize) -> BoundReport {
    let neighborhood = max_neighborhood(k, s, s as f64 / 2.0);
    let gap = ln_binomial(k as u64, s as u64) - neighborhood.ln();
    let target = s as f64 / 8.0 * (k as f64 / s as f64).ln();
    BoundReport::lower(
        "packing_gap",
        gap,
        target,
        json!({ "k": k, "s": s, "gap": gap, "target": target, "neighborhood": neighborhood }),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlanScheme {
    Ldp { epsilon: f64 },
    Comm { ell: u32 },
}

fn round_up_even(x: f64) -> u64 {
    let n = x.ceil() as u64;
    n + (n & 1)
}

fn log_floor(k: usize, s: usize) -> f64 {
    (k as f64 / s as f64).ln().max(1.0)
}

/// Stage sizes `(n₁, n₂)` of the hashing scheme before doubling.
pub fn comm_stage_sizes(k: usize, s: usize, alpha: f64, ell: u32) -> (f64, f64) {
    let width = ((1u64 << ell.min(62)) as f64).min(s as f64);
    let sq = (s * s) as f64;
    let stage_one = STAGE_ONE_CONSTANT * sq * log_floor(k, s) / (alpha * alpha * width);
    let stage_two = STAGE_TWO_CONSTANT * sq / (alpha * alpha * width);
    (stage_one, stage_two)
}

/// Total number of users; both halves of a two-stage scheme get equal size.
pub fn planned_sample_size(scheme: PlanScheme, k: usize, s: usize, alpha: f64) -> Result<u64> {
    if k == 0 || s == 0 || s > k {
        return Err(Error::SparsityOutOfRange { k, s });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let raw = match scheme {
        PlanScheme::Comm { ell } => {
            if ell == 0 {
                return Err(Error::InvalidParameter("ell must be positive".into()));
            }
            let (one, two) = comm_stage_sizes(k, s, alpha, ell);
            2.0 * one.max(two)
        }
        PlanScheme::Ldp { epsilon } => {
            if !(epsilon > 0.0 && epsilon.is_finite()) {
                return Err(Error::InvalidEpsilon(epsilon));
            }
            LDP_SAMPLE_CONSTANT * (s * s) as f64 * log_floor(k, s) / (alpha * alpha * epsilon * epsilon)
        }
    };
    Ok(round_up_even(raw))
}

/// `40·s·√log(2k/s)/√n·(e^ε+1)/(e^ε−1)`.
pub fn ldp_risk_bound(k: usize, s: usize, epsilon: f64, n: f64) -> f64 {
    let e = epsilon.exp();
    LDP_RISK_CONSTANT * s as f64 * (2.0 * k as f64 / s as f64).ln().sqrt() / n.sqrt() * (e + 1.0) / (e - 1.0)
}

/// Expected in-support ℓ₁ error of the hashing estimator with `n` users,
/// `√(4s·2^ℓ(2^ℓ + 2s)/(n(2^ℓ − 1)²))`.
pub fn comm_in_support_bound(s: usize, ell: u32, n: f64) -> f64 {
    let w = (1u64 << ell) as f64;
    (4.0 * s as f64 * w * (w + 2.0 * s as f64) / (n * (w - 1.0) * (w - 1.0))).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;

    fn binary_rr(epsilon: f64) -> Channel {
        Channel::randomized_response(2, epsilon)
    }

    #[test]
    fn channel_validation() {
        assert!(Channel::new(vec![vec![0.5, 0.5], vec![0.2, 0.8]]).is_ok());
        assert!(Channel::new(vec![vec![0.5, 0.6]]).is_err());
        assert!(Channel::new(vec![vec![0.5, 0.5], vec![1.0]]).is_err());
        assert!(Channel::new(vec![vec![-0.5, 1.5]]).is_err());
        assert!(Channel::new(vec![]).is_err());
    }

    #[test]
    fn ldp_examples() {
        for eps in [0.1, 0.5, 1.0, 2.0] {
            assert!(verify_ldp(&binary_rr(eps), eps));
            assert!(!verify_ldp(&binary_rr(eps), 0.99 * eps));
        }
        assert!(!verify_ldp(&Channel::identity(3), 50.0));
        let constant = Channel::new(vec![vec![0.0, 1.0]; 3]).unwrap();
        assert!(verify_ldp(&constant, 0.0));
    }

    #[test]
    fn post_processing_preserves_ldp() {
        let mut s = RandomStream::new(1, 0);
        let rr = Channel::randomized_response(5, 1.0);
        let post: Vec<Vec<f64>> = (0..5)
            .map(|_| {
                let w: Vec<f64> = (0..3).map(|_| s.uniform()).collect();
                let t: f64 = w.iter().sum();
                w.into_iter().map(|v| v / t).collect()
            })
            .collect();
        let w = rr.then(&Channel::new(post).unwrap()).unwrap();
        assert!(verify_ldp(&w, 1.0));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(24, 4), 10626.0);
        assert_eq!(binomial(3, 4), 0.0);
        assert!((ln_binomial(200, 2) - 19900f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn constant_channel_has_zero_chisq() {
        let w = Channel::new(vec![vec![0.3, 0.7]; 7]).unwrap();
        let v = expected_chisq_over_packing(&w, 6, 2, 0.05).unwrap();
        assert!(v.abs() < 1e-15);
        assert!(expected_chisq_closed_form(&w, 6, 2, 0.05).unwrap().abs() < 1e-15);
    }

    #[test]
    fn enumeration_and_moments_agree() {
        let mut s = RandomStream::new(2, 0);
        for _ in 0..10 {
            let rows: Vec<Vec<f64>> = (0..7)
                .map(|_| {
                    let w: Vec<f64> = (0..4).map(|_| s.uniform()).collect();
                    let t: f64 = w.iter().sum();
                    w.into_iter().map(|v| v / t).collect()
                })
                .collect();
            let w = Channel::new(rows).unwrap();
            let a = expected_chisq_over_packing(&w, 6, 2, 0.05).unwrap();
            let b = expected_chisq_closed_form(&w, 6, 2, 0.05).unwrap();
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn enumeration_errors() {
        let w = Channel::new(vec![vec![1.0]; 41]).unwrap();
        assert!(matches!(
            expected_chisq_over_packing(&w, 40, 20, 0.05),
            Err(Error::EnumerationBudget { .. })
        ));
        let w = Channel::new(vec![vec![1.0]; 5]).unwrap();
        assert!(expected_chisq_over_packing(&w, 6, 2, 0.05).is_err());
    }

    #[test]
    fn mutual_info_examples() {
        assert_eq!(mutual_info_bound(1e6, 0.0), 0.0);
        assert!((mutual_info_bound(100.0, 0.01) - 1.0).abs() < 1e-15);
        // rearranged Fano condition: (n·χ² + log 2)/gap > 0.9
        let (gap, chisq) = (5.0, 0.01);
        let n = implied_sample_lower_bound(gap, chisq);
        assert!((mutual_info_bound(n, chisq) + std::f64::consts::LN_2 - 0.9 * gap).abs() < 1e-9);
    }

    #[test]
    fn packing_gap_examples() {
        let r = packing_gap(128, 1).unwrap();
        assert!(r.satisfied);
        assert!((r.value - 128f64.ln()).abs() < 1e-12);
        assert!((r.bound - 128f64.ln() / 8.0).abs() < 1e-12);
        let r = packing_gap(200, 2).unwrap();
        assert!(r.satisfied);
        assert!((r.value - 19900f64.ln()).abs() < 1e-12);
        assert!((r.bound - 0.25 * 100f64.ln()).abs() < 1e-12);
        assert!(packing_gap(24, 4).is_err());
        assert!(packing_gap(99, 1).is_err());
    }

    #[test]
    fn neighborhood_closed_form_vs_brute_force() {
        // all 4-subsets of 24 as bitmasks
        let mut masks = Vec::new();
        PackingIndex::for_each(24, 4, |pos| masks.push(pos.iter().fold(0u32, |m, &p| m | (1 << p))));
        assert_eq!(masks.len(), 10626);
        let max = masks
            .iter()
            .map(|&a| masks.iter().filter(|&&b| (a ^ b).count_ones() <= 2).count())
            .max()
            .unwrap();
        assert_eq!(max as f64, max_neighborhood(24, 4, 2.0));
        assert!(max_neighborhood(24, 4, 2.0) <= neighborhood_upper_bound(24, 4));
    }

    #[test]
    fn plan_examples() {
        // k/s < e: the log term floors at 1
        let n = planned_sample_size(PlanScheme::Comm { ell: 3 }, 2, 1, 0.5).unwrap();
        assert_eq!(n, round_up_even(2.0 * STAGE_ONE_CONSTANT / 0.25));
        let n = planned_sample_size(PlanScheme::Comm { ell: 3 }, 1000, 8, 0.2).unwrap();
        let expected = 2.0 * 700_000.0 * 64.0 * 125f64.ln() / (0.04 * 8.0);
        assert_eq!(n, round_up_even(expected));
        let a = planned_sample_size(PlanScheme::Ldp { epsilon: 0.5 }, 1000, 8, 0.2).unwrap() as f64;
        let b = planned_sample_size(PlanScheme::Ldp { epsilon: 1.0 }, 1000, 8, 0.2).unwrap() as f64;
        assert!((a / b - 4.0).abs() < 1e-6);
        assert!(planned_sample_size(PlanScheme::Ldp { epsilon: 0.0 }, 10, 1, 0.1).is_err());
        assert!(planned_sample_size(PlanScheme::Comm { ell: 1 }, 10, 11, 0.1).is_err());
        assert_eq!(planned_sample_size(PlanScheme::Comm { ell: 1 }, 10, 1, 0.1).unwrap() % 2, 0);
    }

    #[test]
    fn plan_is_monotone() {
        let schemes = [PlanScheme::Ldp { epsilon: 1.0 }, PlanScheme::Comm { ell: 2 }];
        for scheme in schemes {
            let base = planned_sample_size(scheme, 1000, 8, 0.2).unwrap();
            assert!(planned_sample_size(scheme, 1000, 16, 0.2).unwrap() >= base);
            assert!(planned_sample_size(scheme, 4000, 8, 0.2).unwrap() >= base);
            assert!(planned_sample_size(scheme, 1000, 8, 0.3).unwrap() <= base);
        }
        let ell = |l| planned_sample_size(PlanScheme::Comm { ell: l }, 1000, 8, 0.2).unwrap();
        assert!((1..8).all(|l| ell(l + 1) <= ell(l)));
        let eps = |e| planned_sample_size(PlanScheme::Ldp { epsilon: e }, 1000, 8, 0.2).unwrap();
        assert!(eps(2.0) <= eps(1.0));
    }
}
