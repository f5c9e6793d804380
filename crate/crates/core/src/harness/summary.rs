use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use super::config::{Param, Scheme};
use super::trial::TrialResult;

/// Aggregate over the trials of one grid cell.
#[derive(Debug, Clone, Serialize)]
pub struct CellSummary {
    pub scheme: Scheme,
    pub k: usize,
    pub s: usize,
    pub n: usize,
    pub eps_or_ell: Param,
    pub mean_tv_error: f64,
    /// Sample standard deviation over `√trials`; zero with one trial.
    pub stderr: f64,
    pub trials: usize,
    /// Set when there are too few trials for a standard error.
    pub degenerate: bool,
}

#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct Key(Scheme, usize, usize, usize, u8, u64);

fn key(r: &TrialResult) -> Key {
    let (tag, bits) = match r.param {
        Param::Epsilon(e) => (0, e.to_bits()),
        Param::Ell(l) => (1, l as u64),
    };
    Key(r.scheme, r.k, r.s, r.n, tag, bits)
}

/// One summary per distinct cell, ordered by scheme, k, n, parameter, s.
pub fn summarize(results: &[TrialResult]) -> Vec<CellSummary> {
    let mut groups: BTreeMap<Key, Vec<&TrialResult>> = BTreeMap::new();
    for r in results {
        groups.entry(key(r)).or_default().push(r);
    }
    let mut out: Vec<CellSummary> = groups
        .into_values()
        .map(|rows| {
            let first = rows[0];
            let count = rows.len();
            let mean = rows.iter().map(|r| r.tv_error).sum::<f64>() / count as f64;
            let stderr = if count > 1 {
                let var = rows.iter().map(|r| (r.tv_error - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
                (var / count as f64).sqrt()
            } else {
                0.0
            };
            CellSummary {
                scheme: first.scheme,
                k: first.k,
                s: first.s,
                n: first.n,
                eps_or_ell: first.param,
                mean_tv_error: mean,
                stderr,
                trials: count,
                degenerate: count < 2,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        (a.scheme, a.k, a.n)
            .cmp(&(b.scheme, b.k, b.n))
            .then(param_order(a.eps_or_ell, b.eps_or_ell))
            .then(a.s.cmp(&b.s))
    });
    out
}

fn param_order(a: Param, b: Param) -> std::cmp::Ordering {
    match (a, b) {
        (Param::Epsilon(x), Param::Epsilon(y)) => x.total_cmp(&y),
        (Param::Ell(x), Param::Ell(y)) => x.cmp(&y),
        (Param::Epsilon(_), Param::Ell(_)) => std::cmp::Ordering::Less,
        (Param::Ell(_), Param::Epsilon(_)) => std::cmp::Ordering::Greater,
    }
}

/// Companion plot file: `out.json` gives `out.plot.csv`.
pub fn plot_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "summary".into());
    out.with_file_name(format!("{stem}.plot.csv"))
}

/// Writes the summaries as JSON to `out` and a long-format plot table
/// (`series,x_s,y_mean_tv_error,stderr`, one series per scheme/k/n/ε or ℓ)
/// next to it. Returns the plot file path.
pub fn write_summary(summaries: &[CellSummary], out: &Path) -> anyhow::Result<PathBuf> {
    let json = serde_json::to_string_pretty(summaries)?;
    std::fs::write(out, json + "\n").with_context(|| format!("writing {}", out.display()))?;
    let plot = plot_path(out);
    let mut w = BufWriter::new(File::create(&plot).with_context(|| format!("creating {}", plot.display()))?);
    writeln!(w, "series,scheme,k,n,eps_or_ell,s,mean_tv_error,stderr,trials")?;
    for c in summaries {
        let label = match c.eps_or_ell {
            Param::Epsilon(e) => format!("eps={e}"),
            Param::Ell(l) => format!("ell={l}"),
        };
        writeln!(
            w,
            "{} k={} n={} {},{},{},{},{},{},{},{},{}",
            c.scheme, c.k, c.n, label, c.scheme, c.k, c.n, c.eps_or_ell, c.s, c.mean_tv_error, c.stderr, c.trials
        )?;
    }
    w.flush()?;
    Ok(plot)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(s: usize, eps: f64, trial: usize, tv: f64) -> TrialResult {
        TrialResult {
            scheme: Scheme::HrSparse,
            k: 100,
            s,
            n: 1000,
            param: Param::Epsilon(eps),
            trial,
            tv_error: tv,
            bits_per_user: 1,
            wall_time: None,
            seed: 0,
        }
    }

    #[test]
    fn single_trial_is_degenerate() {
        let s = summarize(&[row(2, 1.0, 0, 0.3)]);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].mean_tv_error, 0.3);
        assert_eq!(s[0].stderr, 0.0);
        assert!(s[0].degenerate);
    }

    #[test]
    fn constant_column_has_zero_stderr() {
        let rows: Vec<_> = (0..5).map(|t| row(4, 1.0, t, 0.125)).collect();
        let s = summarize(&rows);
        assert_eq!(s[0].stderr, 0.0);
        assert!(!s[0].degenerate);
        assert_eq!(s[0].trials, 5);
    }

    #[test]
    fn twelve_row_fixture() {
        // 2 s-values × 2 ε-values × 3 trials; expected values worked by hand.
        let data = [
            (2, 0.5, [0.10, 0.20, 0.30]),
            (2, 0.9, [0.05, 0.05, 0.11]),
            (4, 0.5, [0.40, 0.10, 0.25]),
            (4, 0.9, [0.20, 0.22, 0.24]),
        ];
        let rows: Vec<_> = data
            .iter()
            .flat_map(|&(s, e, v)| v.into_iter().enumerate().map(move |(t, x)| row(s, e, t, x)))
            .collect();
        let out = summarize(&rows);
        // (scheme, k, n, ε, s) ordering
        let expect = [
            (2, 0.5, 0.20, 0.057_735_026_918_962_58),
            (4, 0.5, 0.25, 0.086_602_540_378_443_87),
            (2, 0.9, 0.07, 0.02),
            (4, 0.9, 0.22, 0.011_547_005_383_792_52),
        ];
        assert_eq!(out.len(), 4);
        for (c, (s, e, mean, se)) in out.iter().zip(expect) {
            assert_eq!(c.s, s);
            assert_eq!(c.eps_or_ell, Param::Epsilon(e));
            assert!((c.mean_tv_error - mean).abs() < 1e-12, "{c:?}");
            assert!((c.stderr - se).abs() < 1e-12, "{c:?}");
            assert_eq!(c.trials, 3);
        }
    }

    #[test]
    fn writes_json_and_plot() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("sum.json");
        let rows: Vec<_> = (0..3).map(|t| row(2, 0.5, t, 0.1 * t as f64)).collect();
        let plot = write_summary(&summarize(&rows), &out).unwrap();
        assert_eq!(plot, dir.path().join("sum.plot.csv"));
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(v[0]["trials"], 3);
        assert_eq!(v[0]["scheme"], "hr_sparse");
        let text = std::fs::read_to_string(plot).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().starts_with("hr_sparse k=100 n=1000 eps=0.5,"));
    }
}
