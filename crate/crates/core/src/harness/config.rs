use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use super::DEFAULT_TRIALS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    HrDense,
    HrSparse,
    Rappor,
    CommHash,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::HrDense => "hr_dense",
            Scheme::HrSparse => "hr_sparse",
            Scheme::Rappor => "rappor",
            Scheme::CommHash => "comm_hash",
        }
    }

    pub fn is_ldp(self) -> bool {
        !matches!(self, Scheme::CommHash)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        Ok(match s {
            "hr_dense" => Scheme::HrDense,
            "hr_sparse" => Scheme::HrSparse,
            "rappor" => Scheme::Rappor,
            "comm_hash" => Scheme::CommHash,
            other => bail!("unknown scheme {other:?}"),
        })
    }
}

/// Privacy level or message width of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Param {
    Epsilon(f64),
    Ell(u32),
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Param::Epsilon(e) => write!(f, "{e}"),
            Param::Ell(l) => write!(f, "{l}"),
        }
    }
}

/// A scalar or a list in the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

impl<T> Default for OneOrMany<T> {
    fn default() -> Self {
        OneOrMany::Many(Vec::new())
    }
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scheme: Scheme,
    pub k: OneOrMany<usize>,
    pub s: OneOrMany<usize>,
    #[serde(default, skip_serializing_if = "is_empty")]
    pub epsilon: OneOrMany<f64>,
    #[serde(default, skip_serializing_if = "is_empty")]
    pub ell: OneOrMany<u32>,
    pub n: OneOrMany<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub master_seed: u64,
    pub output: PathBuf,
}

fn is_empty<T: Clone>(v: &OneOrMany<T>) -> bool {
    v.to_vec().is_empty()
}

/// One point of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub scheme: Scheme,
    pub k: usize,
    pub s: usize,
    pub n: usize,
    pub param: Param,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} k={} s={} n={} param={}", self.scheme, self.k, self.s, self.n, self.param)
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn params(&self) -> Vec<Param> {
        if self.scheme.is_ldp() {
            self.epsilon.to_vec().into_iter().map(Param::Epsilon).collect()
        } else {
            self.ell.to_vec().into_iter().map(Param::Ell).collect()
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let (eps, ell) = (self.epsilon.to_vec(), self.ell.to_vec());
        match (self.scheme.is_ldp(), eps.is_empty(), ell.is_empty()) {
            (true, false, true) | (false, true, false) => {}
            (true, _, _) => bail!("scheme {} needs a non-empty epsilon list and no ell", self.scheme),
            (false, _, _) => bail!("scheme {} needs a non-empty ell list and no epsilon", self.scheme),
        }
        if eps.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            bail!("epsilon values must be positive and finite");
        }
        if ell.iter().any(|&l| l == 0 || l > crate::comm::MAX_ELL) {
            bail!("ell values must lie in 1..={}", crate::comm::MAX_ELL);
        }
        if self.trials == 0 {
            bail!("trials must be at least 1");
        }
        let (ks, ss, ns) = (self.k.to_vec(), self.s.to_vec(), self.n.to_vec());
        if ks.is_empty() || ss.is_empty() || ns.is_empty() {
            bail!("k, s and n must be non-empty");
        }
        for &k in &ks {
            for &s in &ss {
                if s == 0 || s > k {
                    bail!("s = {s} out of range for k = {k}");
                }
                if self.scheme == Scheme::Rappor && 2 * s > k {
                    bail!("rappor needs 2s <= k, got s = {s}, k = {k}");
                }
            }
        }
        for &n in &ns {
            if n < 2 {
                bail!("n must be at least 2");
            }
            if matches!(self.scheme, Scheme::Rappor | Scheme::CommHash) && n % 2 == 1 {
                bail!("two-stage schemes need an even n, got {n}");
            }
        }
        Ok(())
    }

    /// Grid cells in the order rows are written: k, then s, then the
    /// privacy/width parameter, then n.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for k in self.k.to_vec() {
            for s in self.s.to_vec() {
                for param in self.params() {
                    for n in self.n.to_vec() {
                        out.push(Cell { scheme: self.scheme, k, s, n, param });
                    }
                }
            }
        }
        out
    }
}
