//! `plot-data`: turn experiment CSVs into gnuplot-ready whitespace-separated
//! series files, one file per curve, under `<dir>/plots/`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

pub fn emit_plot_data(dir: &Path) -> Result<usize> {
    let plots = dir.join("plots");
    fs::create_dir_all(&plots).with_context(|| format!("creating {}", plots.display()))?;
    let mut written = 0usize;

    let rewards = dir.join("rewards.csv");
    if rewards.exists() {
        written += emit_reward_series(&rewards, &plots)?;
    }
    let timeline = dir.join("viewability_timeline.csv");
    if timeline.exists() {
        written += emit_timeline_series(&timeline, &plots)?;
    }
    let trace = dir.join("tune_trace.csv");
    if trace.exists() {
        written += emit_tune_series(&trace, &plots)?;
    }
    Ok(written)
}

/// `rewards.csv` (algo,seed,interval,reward) becomes one file per algorithm
/// with the per-interval reward averaged over seeds: `interval  reward`.
fn emit_reward_series(path: &Path, plots: &Path) -> Result<usize> {
    let text = fs::read_to_string(path)?;
    // algo -> interval -> (sum, count)
    let mut series: BTreeMap<String, BTreeMap<usize, (f64, usize)>> = BTreeMap::new();
    for line in text.lines().skip(1) {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            anyhow::bail!("malformed rewards.csv row: `{line}`");
        }
        let interval: usize = fields[2].parse()?;
        let reward: f64 = fields[3].parse()?;
        let cell = series
            .entry(fields[0].to_string())
            .or_default()
            .entry(interval)
            .or_insert((0.0, 0));
        cell.0 += reward;
        cell.1 += 1;
    }
    let mut written = 0;
    for (algo, intervals) in series {
        let mut out = String::from("# interval  mean_reward\n");
        for (interval, (sum, count)) in intervals {
            out.push_str(&format!("{interval} {}\n", sum / count as f64));
        }
        fs::write(plots.join(format!("reward_{algo}.dat")), out)?;
        written += 1;
    }
    Ok(written)
}

/// `viewability_timeline.csv` becomes one file per arm:
/// `interval  viewability  goal  threshold`.
fn emit_timeline_series(path: &Path, plots: &Path) -> Result<usize> {
    let text = fs::read_to_string(path)?;
    let mut series: BTreeMap<String, Vec<(usize, f64, f64, f64)>> = BTreeMap::new();
    for line in text.lines().skip(1) {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            anyhow::bail!("malformed viewability_timeline.csv row: `{line}`");
        }
        series.entry(fields[0].to_string()).or_default().push((
            fields[1].parse()?,
            fields[4].parse()?,
            fields[2].parse()?,
            fields[3].parse()?,
        ));
    }
    let mut written = 0;
    for (arm, mut rows) in series {
        rows.sort_by_key(|r| r.0);
        let mut out = String::from("# interval  viewability  goal  threshold\n");
        for (interval, viewability, goal, threshold) in rows {
            out.push_str(&format!("{interval} {viewability} {goal} {threshold}\n"));
        }
        fs::write(plots.join(format!("timeline_{arm}.dat")), out)?;
        written += 1;
    }
    Ok(written)
}

/// `tune_trace.csv` becomes the best-so-far curve: `eval_index  best_so_far`.
fn emit_tune_series(path: &Path, plots: &Path) -> Result<usize> {
    let text = fs::read_to_string(path)?;
    let header = text.lines().next().unwrap_or("");
    let reward_col = header
        .split(',')
        .position(|c| c == "reward")
        .context("tune_trace.csv has no reward column")?;
    let mut out = String::from("# eval_index  best_so_far\n");
    let mut best = f64::NEG_INFINITY;
    for (i, line) in text.lines().skip(1).enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let reward: f64 = fields
            .get(reward_col)
            .context("short tune_trace.csv row")?
            .parse()?;
        best = best.max(reward);
        out.push_str(&format!("{i} {best}\n"));
    }
    fs::write(plots.join("tune_best.dat"), out)?;
    Ok(1)
}
