//! RAPPOR-based two-stage sparse estimator. Each user sends the one-hot
//! encoding of its symbol with every bit flipped independently with
//! probability `q = 1/(e^{ε/2}+1)`; the server keeps the `2s` columns with
//! the largest first-half sums and inverts second-half sums on them.

use crate::bounds::Channel;
use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::estimate::{two_stage, TwoStageEstimate};
use crate::rng::RandomStream;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RapporMessage {
    pub bits: Vec<bool>,
}

pub fn flip_probability(epsilon: f64) -> f64 {
    1.0 / ((epsilon / 2.0).exp() + 1.0)
}

/// `(β, γ)` with `E[bit_x] = γ·p(x) + β`: `β = q`, `γ = 1 − 2q`.
pub fn affine_params(epsilon: f64) -> (f64, f64) {
    let q = flip_probability(epsilon);
    (q, 1.0 - 2.0 * q)
}

/// Positions flipped in one encoding, ascending. Gaps between flips are
/// geometric, so the cost is proportional to the number of flips.
pub fn flip_positions(k: usize, q: f64, stream: &mut RandomStream) -> Vec<usize> {
    let mut out = Vec::new();
    if q <= 0.0 {
        return out;
    }
    if q >= 1.0 {
        return (0..k).collect();
    }
    let log_stay = (-q).ln_1p();
    let mut pos = 0usize;
    loop {
        let u = 1.0 - stream.uniform(); // (0, 1]
        let skip = (u.ln() / log_stay).floor();
        if skip >= (k - pos) as f64 {
            return out;
        }
        pos += skip as usize;
        out.push(pos);
        pos += 1;
        if pos >= k {
            return out;
        }
    }
}

pub fn rappor_encode(x: usize, epsilon: f64, k: usize, stream: &mut RandomStream) -> RapporMessage {
    let mut bits = vec![false; k];
    bits[x] = true;
    for f in flip_positions(k, flip_probability(epsilon), stream) {
        bits[f] = !bits[f];
    }
    RapporMessage { bits }
}

/// Column sums of RAPPOR messages, accumulated without storing them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RapporCounts {
    pub counts: Vec<u64>,
    pub users: usize,
}

impl RapporCounts {
    pub fn new(k: usize) -> Self {
        Self { counts: vec![0; k], users: 0 }
    }

    pub fn add(&mut self, msg: &RapporMessage) {
        for (c, &b) in self.counts.iter_mut().zip(&msg.bits) {
            *c += b as u64;
        }
        self.users += 1;
    }

    /// Same stream consumption and result as `add(&rappor_encode(..))`.
    pub fn add_encoded(&mut self, x: usize, epsilon: f64, stream: &mut RandomStream) {
        let flips = flip_positions(self.counts.len(), flip_probability(epsilon), stream);
        let mut x_flipped = false;
        for f in flips {
            if f == x {
                x_flipped = true;
            } else {
                self.counts[f] += 1;
            }
        }
        if !x_flipped {
            self.counts[x] += 1;
        }
        self.users += 1;
    }

    pub fn from_messages(k: usize, msgs: &[RapporMessage]) -> Self {
        let mut c = Self::new(k);
        msgs.iter().for_each(|m| c.add(m));
        c
    }
}

fn check(k: usize, s: usize, epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    if s == 0 || 2 * s > k {
        return Err(Error::SparsityOutOfRange { k, s });
    }
    Ok(())
}

pub fn rappor_estimate_counts(
    first: &RapporCounts,
    second: &RapporCounts,
    s: usize,
    epsilon: f64,
) -> Result<TwoStageEstimate> {
    let k = first.counts.len();
    check(k, s, epsilon)?;
    if first.users == 0 || second.users == 0 {
        return Err(Error::Empty);
    }
    let (beta, gamma) = affine_params(epsilon);
    two_stage(&first.counts, &second.counts, second.users, 2 * s, beta, gamma)
}

pub fn rappor_estimate_full(
    first_half: &[RapporMessage],
    second_half: &[RapporMessage],
    k: usize,
    s: usize,
    epsilon: f64,
) -> Result<TwoStageEstimate> {
    if let Some(m) = first_half.iter().chain(second_half).find(|m| m.bits.len() != k) {
        return Err(Error::LengthMismatch { left: m.bits.len(), right: k });
    }
    rappor_estimate_counts(
        &RapporCounts::from_messages(k, first_half),
        &RapporCounts::from_messages(k, second_half),
        s,
        epsilon,
    )
}

pub fn rappor_estimate(
    first_half: &[RapporMessage],
    second_half: &[RapporMessage],
    k: usize,
    s: usize,
    epsilon: f64,
) -> Result<Distribution> {
    Ok(rappor_estimate_full(first_half, second_half, k, s, epsilon)?.projected)
}

/// Exact channel over `inputs` one-hot inputs; output `y` is the bitmask of
/// the reported vector. Exponential in `inputs`.
pub fn rappor_channel_matrix(epsilon: f64, inputs: usize) -> Result<Channel> {
    if inputs == 0 || inputs > 16 {
        return Err(Error::InvalidParameter(format!("rappor channel enumeration needs 1..=16 inputs, got {inputs}")));
    }
    let q = flip_probability(epsilon);
    let rows = (0..inputs)
        .map(|x| {
            (0..1usize << inputs)
                .map(|y| {
                    let differing = (y ^ (1 << x)).count_ones() as i32;
                    q.powi(differing) * (1.0 - q).powi(inputs as i32 - differing)
                })
                .collect()
        })
        .collect();
    Channel::new(rows)
}
