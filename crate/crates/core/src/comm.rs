//! Public-coin ℓ-bit scheme. User `i` sends `h_i(X_i)` where `h_i` is a
//! per-user hash drawn from shared randomness. The server counts, for each
//! symbol `x`, how many messages have `x` in their preimage; the first half
//! selects the `2s` best-supported symbols and the second half estimates
//! their masses through `b(x) = p(x)(1 − 2^{−ℓ}) + 2^{−ℓ}`.
//!
//! Hash realization (bit-exact, so runs replay across implementations):
//!
//! ```text
//! user_key(i)   = mix64(public_seed ^ (i * 0x9e3779b97f4a7c15))
//! symbol_key(x) = (x + 1) * 0xd1b54a32d192ed03
//! h_i(x)        = mix64(user_key(i) ^ symbol_key(x)) & (2^ℓ − 1)
//! ```
//!
//! with wrapping 64-bit arithmetic and `mix64` the SplitMix64 finalizer.
//! Since values at `ℓ + 1` bits extend those at `ℓ` bits, preimages shrink
//! monotonically as `ℓ` grows under a fixed seed.

use rand_distr::{Binomial, Distribution as _};

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::estimate::{two_stage, TwoStageEstimate};
use crate::projection::top_indices;
use crate::rng::{mix64, RandomStream, GOLDEN_GAMMA};

const SYMBOL_MULTIPLIER: u64 = 0xd1b5_4a32_d192_ed03;

/// Largest message width supported.
pub const MAX_ELL: u32 = 32;

/// `min(ℓ, ⌈log₂ s⌉ + 1)`: beyond that many bits the scheme gains nothing.
pub fn effective_ell(ell: u32, s: usize) -> u32 {
    let log_s = if s <= 1 { 0 } else { usize::BITS - (s - 1).leading_zeros() };
    ell.min(log_s + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashScheme {
    pub public_seed: u64,
    /// Requested bits per message, kept for reporting.
    pub ell: u32,
    /// Bits actually sent.
    pub effective_ell: u32,
    pub k: usize,
}

impl HashScheme {
    pub fn new(public_seed: u64, ell: u32, k: usize, s: usize) -> Result<Self> {
        let mut scheme = Self::uncapped(public_seed, ell, k)?;
        if s == 0 || s > k {
            return Err(Error::SparsityOutOfRange { k, s });
        }
        scheme.effective_ell = effective_ell(ell, s);
        Ok(scheme)
    }

    /// Sends all `ell` bits regardless of sparsity.
    pub fn uncapped(public_seed: u64, ell: u32, k: usize) -> Result<Self> {
        if ell == 0 || ell > MAX_ELL {
            return Err(Error::InvalidParameter(format!("ell = {ell} outside 1..={MAX_ELL}")));
        }
        if k == 0 {
            return Err(Error::Empty);
        }
        Ok(Self { public_seed, ell, effective_ell: ell, k })
    }

    pub fn buckets(&self) -> u64 {
        1u64 << self.effective_ell
    }

    fn mask(&self) -> u64 {
        self.buckets() - 1
    }

    #[inline]
    fn user_key(&self, user_index: usize) -> u64 {
        mix64(self.public_seed ^ (user_index as u64).wrapping_mul(GOLDEN_GAMMA))
    }

    /// `(β, γ) = (2^{−ℓ}, 1 − 2^{−ℓ})`.
    pub fn affine_params(&self) -> (f64, f64) {
        let beta = 1.0 / self.buckets() as f64;
        (beta, 1.0 - beta)
    }
}

#[inline(always)]
fn symbol_key(x: usize) -> u64 {
    (x as u64).wrapping_add(1).wrapping_mul(SYMBOL_MULTIPLIER)
}

pub fn hash_eval(scheme: &HashScheme, user_index: usize, x: usize) -> u32 {
    (mix64(scheme.user_key(user_index) ^ symbol_key(x)) & scheme.mask()) as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CommMessage {
    pub user_index: usize,
    pub value: u32,
}

pub fn comm_encode(x: usize, user_index: usize, scheme: &HashScheme) -> CommMessage {
    CommMessage { user_index, value: hash_eval(scheme, user_index, x) }
}

pub fn comm_encode_all(samples: &[usize], offset: usize, scheme: &HashScheme) -> Vec<CommMessage> {
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| comm_encode(x, offset + i, scheme))
        .collect()
}

/// Probability that `x` lies in a user's preimage.
pub fn b_of(p_x: f64, ell: u32) -> f64 {
    let beta = (-(ell as f64)).exp2();
    p_x * (1.0 - beta) + beta
}

/// For each `x`, the number of messages with `h_i(x) == Y_i`.
pub fn preimage_counts(messages: &[CommMessage], scheme: &HashScheme, k: usize) -> Vec<u64> {
    let mut counts = vec![0u64; k];
    let keys: Vec<u64> = (0..k).map(symbol_key).collect();
    let mask = scheme.mask();
    for m in messages {
        let user = scheme.user_key(m.user_index);
        let value = m.value as u64;
        for (c, &key) in counts.iter_mut().zip(&keys) {
            *c += ((mix64(user ^ key) & mask) == value) as u64;
        }
    }
    counts
}

/// [`preimage_counts`] restricted to `symbols`; other entries stay zero.
pub fn preimage_counts_on(messages: &[CommMessage], scheme: &HashScheme, k: usize, symbols: &[usize]) -> Vec<u64> {
    let mut counts = vec![0u64; k];
    let keys: Vec<(usize, u64)> = symbols.iter().filter(|&&x| x < k).map(|&x| (x, symbol_key(x))).collect();
    let mask = scheme.mask();
    for m in messages {
        let user = scheme.user_key(m.user_index);
        let value = m.value as u64;
        for &(x, key) in &keys {
            counts[x] += ((mix64(user ^ key) & mask) == value) as u64;
        }
    }
    counts
}

/// Candidate-set size `min(2s, k)`.
pub fn candidate_size(k: usize, s: usize) -> usize {
    (2 * s).min(k)
}

pub fn comm_decode_counts(
    first_counts: &[u64],
    second_counts: &[u64],
    second_size: usize,
    scheme: &HashScheme,
    s: usize,
) -> Result<TwoStageEstimate> {
    if s == 0 {
        return Err(Error::SparsityOutOfRange { k: scheme.k, s });
    }
    let (beta, gamma) = scheme.affine_params();
    two_stage(first_counts, second_counts, second_size, candidate_size(scheme.k, s), beta, gamma)
}

pub fn comm_decode_full(
    first_half: &[CommMessage],
    second_half: &[CommMessage],
    scheme: &HashScheme,
    k: usize,
    s: usize,
) -> Result<TwoStageEstimate> {
    if first_half.is_empty() || second_half.is_empty() {
        return Err(Error::Empty);
    }
    if k != scheme.k {
        return Err(Error::LengthMismatch { left: k, right: scheme.k });
    }
    let first = preimage_counts(first_half, scheme, k);
    // only the candidate set is ever read from the second half
    let candidates = top_indices(&first, candidate_size(k, s.max(1)));
    let second = preimage_counts_on(second_half, scheme, k, &candidates);
    comm_decode_counts(&first, &second, second_half.len(), scheme, s)
}

pub fn comm_decode(
    first_half: &[CommMessage],
    second_half: &[CommMessage],
    scheme: &HashScheme,
    k: usize,
    s: usize,
) -> Result<Distribution> {
    Ok(comm_decode_full(first_half, second_half, scheme, k, s)?.projected)
}

/// Preimage counts for `users` users drawn from `p`, sampled from their
/// exact law under ideal random hashes instead of per-user simulation:
/// with `c ~ Multinomial(users, p)`, the counts are independent
/// `c_x + Bin(users − c_x, 2^{−ℓ})`. Cost is `O(k)` regardless of `users`.
pub fn ideal_preimage_counts(p: &Distribution, users: u64, ell: u32, stream: &mut RandomStream) -> Result<Vec<u64>> {
    let beta = (-(ell as f64)).exp2();
    let mut remaining = users;
    let mut mass_left = 1.0f64;
    let mut counts = Vec::with_capacity(p.len());
    let binomial = |n: u64, q: f64, stream: &mut RandomStream| -> Result<u64> {
        if n == 0 || q <= 0.0 {
            return Ok(0);
        }
        if q >= 1.0 {
            return Ok(n);
        }
        let dist = Binomial::new(n, q).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        Ok(dist.sample(stream))
    };
    for &px in p.probs() {
        let c = if mass_left > 0.0 {
            binomial(remaining, (px / mass_left).min(1.0), stream)?
        } else {
            0
        };
        remaining -= c;
        mass_left -= px;
        counts.push(c + binomial(users - c, beta, stream)?);
    }
    Ok(counts)
}

/// Packs `ℓ`-bit values little-endian within bytes: value `i` occupies bits
/// `[iℓ, (i+1)ℓ)` of the stream, bit `b` of the stream being bit `b mod 8`
/// of byte `b / 8`.
pub fn pack_values(values: &[u32], ell: u32) -> Vec<u8> {
    let total_bits = values.len() * ell as usize;
    let mut out = vec![0u8; total_bits.div_ceil(8)];
    let mut bit = 0usize;
    for &v in values {
        for b in 0..ell {
            if (v >> b) & 1 == 1 {
                out[bit / 8] |= 1 << (bit % 8);
            }
            bit += 1;
        }
    }
    out
}

pub fn unpack_values(bytes: &[u8], ell: u32, count: usize) -> Result<Vec<u32>> {
    if bytes.len() * 8 < count * ell as usize {
        return Err(Error::InvalidMessages(format!("{} bytes cannot hold {count} values of {ell} bits", bytes.len())));
    }
    let mut bit = 0usize;
    Ok((0..count)
        .map(|_| {
            let mut v = 0u32;
            for b in 0..ell {
                v |= (((bytes[bit / 8] >> (bit % 8)) & 1) as u32) << b;
                bit += 1;
            }
            v
        })
        .collect())
}
