use std::fmt;

use anyhow::{bail, Context};
use serde::Serialize;

use crate::bounds::{comm_in_support_bound, comm_stage_sizes, ldp_risk_bound, planned_sample_size, PlanScheme};
use crate::comm::effective_ell;

#[derive(Debug, Clone, Serialize)]
pub struct PlanReport {
    pub scheme: String,
    pub k: usize,
    pub s: usize,
    pub alpha: f64,
    pub epsilon: Option<f64>,
    pub ell: Option<u32>,
    pub planned_n: u64,
    /// Bits actually sent per user (hashing only).
    pub effective_ell: Option<u32>,
    /// True when the requested width exceeds what the hashing scheme uses.
    pub ell_capped: bool,
    /// Stage-one and stage-two sizes before the doubling (hashing only).
    pub stage_sizes: Option<(f64, f64)>,
    /// Risk bound evaluated at `planned_n`: the TV bound for LDP, the
    /// expected in-support ℓ₁ error of the second stage for hashing.
    pub risk_bound: f64,
}

/// `scheme` is `ldp`, `comm`, or any scheme name from the config format.
pub fn plan(scheme: &str, k: usize, s: usize, alpha: f64, epsilon: Option<f64>, ell: Option<u32>) -> anyhow::Result<PlanReport> {
    let is_comm = match scheme {
        "ldp" | "hr_dense" | "hr_sparse" | "rappor" => false,
        "comm" | "comm_hash" => true,
        other => bail!("unknown scheme {other:?} (expected ldp, comm, hr_dense, hr_sparse, rappor or comm_hash)"),
    };
    let mut report = PlanReport {
        scheme: scheme.to_string(),
        k,
        s,
        alpha,
        epsilon,
        ell,
        planned_n: 0,
        effective_ell: None,
        ell_capped: false,
        stage_sizes: None,
        risk_bound: 0.0,
    };
    if is_comm {
        if epsilon.is_some() {
            bail!("--eps does not apply to the hashing scheme");
        }
        let ell = ell.context("the hashing scheme needs --ell")?;
        report.planned_n = planned_sample_size(PlanScheme::Comm { ell }, k, s, alpha)?;
        let eff = effective_ell(ell, s);
        report.effective_ell = Some(eff);
        report.ell_capped = eff < ell;
        report.stage_sizes = Some(comm_stage_sizes(k, s, alpha, ell));
        report.risk_bound = comm_in_support_bound(s, eff, report.planned_n as f64 / 2.0);
    } else {
        if ell.is_some() {
            bail!("--ell does not apply to LDP schemes");
        }
        let epsilon = epsilon.context("LDP schemes need --eps")?;
        report.planned_n = planned_sample_size(PlanScheme::Ldp { epsilon }, k, s, alpha)?;
        report.risk_bound = ldp_risk_bound(k, s, epsilon, report.planned_n as f64);
    }
    Ok(report)
}

impl fmt::Display for PlanReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scheme:        {}", self.scheme)?;
        writeln!(f, "k, s, alpha:   {}, {}, {}", self.k, self.s, self.alpha)?;
        if let Some(e) = self.epsilon {
            writeln!(f, "epsilon:       {e}")?;
        }
        if let Some(l) = self.ell {
            writeln!(f, "ell:           {l}")?;
        }
        writeln!(f, "planned n:     {}", self.planned_n)?;
        if let Some((one, two)) = self.stage_sizes {
            writeln!(f, "stage sizes:   {:.0} (support), {:.0} (estimate), n = 2 x max", one.ceil(), two.ceil())?;
        }
        if let Some(eff) = self.effective_ell {
            write!(f, "effective ell: {eff}")?;
            if self.ell_capped {
                write!(f, " (capped: just use ceil(log2 s) + 1 = {eff} bits)")?;
            }
            writeln!(f)?;
            write!(f, "in-support l1 bound at n/2: {:.6}", self.risk_bound)
        } else {
            write!(f, "TV risk bound at planned n: {:.6}", self.risk_bound)
        }
    }
}
