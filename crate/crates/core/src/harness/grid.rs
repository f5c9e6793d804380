use std::collections::HashSet;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context};
use rayon::prelude::*;

use super::config::{Cell, ExperimentConfig, Param, Scheme};
use super::trial::{run_trial, TrialResult};

pub const RESULTS_HEADER: &str = "scheme,k,s,n,eps_or_ell,trial,tv_error,bits_per_user,seed";

#[derive(Debug, Clone)]
pub struct GridOutcome {
    /// The full table on disk after the run, in row order.
    pub rows: Vec<TrialResult>,
    /// Trials computed by this invocation (the rest were resumed).
    pub computed: usize,
    /// Wall time summed over computed trials.
    pub trial_seconds: f64,
}

fn format_row(r: &TrialResult) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        r.scheme, r.k, r.s, r.n, r.param, r.trial, r.tv_error, r.bits_per_user, r.seed
    )
}

fn row_key(scheme: Scheme, k: usize, s: usize, n: usize, param: &str, trial: usize) -> String {
    format!("{scheme},{k},{s},{n},{param},{trial}")
}

fn parse_row(line: &str) -> anyhow::Result<TrialResult> {
    let f: Vec<&str> = line.split(',').collect();
    if f.len() != 9 {
        bail!("expected 9 fields, found {}", f.len());
    }
    let scheme: Scheme = f[0].parse()?;
    let param = if scheme.is_ldp() {
        Param::Epsilon(f[4].parse()?)
    } else {
        Param::Ell(f[4].parse()?)
    };
    Ok(TrialResult {
        scheme,
        k: f[1].parse()?,
        s: f[2].parse()?,
        n: f[3].parse()?,
        param,
        trial: f[5].parse()?,
        tv_error: f[6].parse()?,
        bits_per_user: f[7].parse()?,
        wall_time: None,
        seed: f[8].parse()?,
    })
}

/// Complete rows of a results file. A trailing line without its newline
/// (an interrupted write) is ignored.
pub fn read_results(path: &Path) -> anyhow::Result<Vec<TrialResult>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    let mut lines = complete.lines();
    match lines.next() {
        Some(h) if h == RESULTS_HEADER => {}
        Some(h) => bail!("{}: unexpected header {h:?}", path.display()),
        None => return Ok(Vec::new()),
    }
    lines
        .enumerate()
        .map(|(i, l)| parse_row(l).with_context(|| format!("{} line {}", path.display(), i + 2)))
        .collect()
}

pub fn write_results(path: &Path, rows: &[TrialResult]) -> anyhow::Result<()> {
    let mut out = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    writeln!(out, "{RESULTS_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", format_row(r))?;
    }
    out.flush()?;
    Ok(())
}

/// Open the results file for appending, creating it or dropping a partial
/// trailing line as needed. Returns rows already present.
fn prepare_output(path: &Path) -> anyhow::Result<(Vec<TrialResult>, File)> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let existing = if path.exists() {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let keep = text.rfind('\n').map_or(0, |i| i + 1);
        if keep == 0 {
            None
        } else {
            if keep < text.len() {
                fs::write(path, &text[..keep]).with_context(|| format!("truncating {}", path.display()))?;
            }
            Some(read_results(path)?)
        }
    } else {
        None
    };
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening {} for writing", path.display()))?;
    let rows = match existing {
        Some(rows) => rows,
        None => {
            file.set_len(0)?;
            writeln!(file, "{RESULTS_HEADER}")?;
            Vec::new()
        }
    };
    Ok((rows, file))
}

/// Run every `(cell, trial)` of the grid not already present in the output
/// file. Trials run on `threads` workers; rows are appended in grid order
/// in batches, so the file is always a prefix of the final table.
pub fn run_grid(config: &ExperimentConfig, threads: usize) -> anyhow::Result<GridOutcome> {
    config.validate()?;
    let (mut rows, mut file) = prepare_output(&config.output)?;
    let present: HashSet<String> = rows
        .iter()
        .map(|r| row_key(r.scheme, r.k, r.s, r.n, &r.param.to_string(), r.trial))
        .collect();
    let tasks: Vec<(Cell, usize)> = config
        .cells()
        .into_iter()
        .flat_map(|c| (0..config.trials).map(move |t| (c, t)))
        .filter(|(c, t)| !present.contains(&row_key(c.scheme, c.k, c.s, c.n, &c.param.to_string(), *t)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .context("building thread pool")?;
    let batch = (threads.max(1) * 4).max(8);
    let mut trial_seconds = 0.0;
    for chunk in tasks.chunks(batch) {
        let results: Vec<TrialResult> = pool.install(|| {
            chunk
                .par_iter()
                .map(|(cell, t)| run_trial(config.master_seed, cell, *t))
                .collect::<anyhow::Result<_>>()
        })?;
        let mut text = String::new();
        for r in &results {
            text.push_str(&format_row(r));
            text.push('\n');
            trial_seconds += r.wall_time.unwrap_or(0.0);
        }
        file.write_all(text.as_bytes())?;
        file.flush()?;
        rows.extend(results);
    }
    Ok(GridOutcome { rows, computed: tasks.len(), trial_seconds })
}
