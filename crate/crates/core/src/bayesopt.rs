//! Gaussian-process Bayesian optimization of training hyperparameters.
//!
//! A squared-exponential GP on normalized [0,1] coordinates models the
//! objective; candidates are scored by expected improvement over the best
//! observation. The loop starts with seeded random exploration, then turns
//! to EI-guided picks, persisting its trace after every evaluation so an
//! interrupted run resumes where it stopped.

use std::fs;
use std::path::Path;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{check_header, parse_field};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_factor, cholesky_solve};
use crate::rand_util::mix_seed;

/// Kernel defaults: length scale per normalized dimension, signal variance,
/// and observation noise (jitter floor).
pub const GP_LENGTH_SCALE: f64 = 0.2;
pub const GP_SIGNAL_VARIANCE: f64 = 1.0;
pub const GP_NOISE: f64 = 1e-4;
const JITTER_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log10,
}

/// One tunable dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamDim {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub scale: Scale,
    pub integer: bool,
}

impl ParamDim {
    pub fn linear(name: &str, lo: f64, hi: f64) -> Self {
        ParamDim {
            name: name.into(),
            lo,
            hi,
            scale: Scale::Linear,
            integer: false,
        }
    }

    pub fn log10(name: &str, lo: f64, hi: f64) -> Self {
        ParamDim {
            name: name.into(),
            lo,
            hi,
            scale: Scale::Log10,
            integer: false,
        }
    }

    pub fn integer(name: &str, lo: f64, hi: f64) -> Self {
        ParamDim {
            name: name.into(),
            lo,
            hi,
            scale: Scale::Linear,
            integer: true,
        }
    }

    /// Map a normalized coordinate in [0, 1] to the actual value.
    fn to_actual(&self, unit: f64) -> f64 {
        let u = unit.clamp(0.0, 1.0);
        let raw = match self.scale {
            Scale::Linear => self.lo + u * (self.hi - self.lo),
            Scale::Log10 => {
                let (llo, lhi) = (self.lo.log10(), self.hi.log10());
                10f64.powf(llo + u * (lhi - llo))
            }
        };
        if self.integer {
            raw.round().clamp(self.lo, self.hi)
        } else {
            raw.clamp(self.lo, self.hi)
        }
    }

    /// Inverse of [`ParamDim::to_actual`] (lossy for integer dims).
    fn to_unit(&self, actual: f64) -> f64 {
        let a = actual.clamp(self.lo, self.hi);
        match self.scale {
            Scale::Linear => (a - self.lo) / (self.hi - self.lo),
            Scale::Log10 => (a.log10() - self.lo.log10()) / (self.hi.log10() - self.lo.log10()),
        }
    }
}

/// The search box.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpace {
    pub dims: Vec<ParamDim>,
}

impl ParamSpace {
    pub fn new(dims: Vec<ParamDim>) -> Result<Self> {
        let space = ParamSpace { dims };
        space.validate()?;
        Ok(space)
    }

    /// The five tuned training hyperparameters with their default bounds.
    pub fn default_tuning_space() -> Self {
        ParamSpace {
            dims: vec![
                ParamDim::log10("actor_lr", 1e-5, 1e-1),
                ParamDim::log10("critic_lr", 1e-5, 1e-1),
                ParamDim::integer("epochs", 1.0, 100.0),
                ParamDim::integer("minibatch", 16.0, 512.0),
                ParamDim::linear("gamma", 0.5, 0.999),
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            return Err(Error::invalid_param("dims", "space must be nonempty"));
        }
        for dim in &self.dims {
            if !(dim.lo.is_finite() && dim.hi.is_finite()) || dim.lo >= dim.hi {
                return Err(Error::invalid_param(
                    "bounds",
                    format!("{}: lo must be below hi", dim.name),
                ));
            }
            if dim.scale == Scale::Log10 && dim.lo <= 0.0 {
                return Err(Error::invalid_param(
                    "bounds",
                    format!("{}: log scale requires lo > 0", dim.name),
                ));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn to_actual(&self, unit: &[f64]) -> Vec<f64> {
        self.dims
            .iter()
            .zip(unit)
            .map(|(d, &u)| d.to_actual(u))
            .collect()
    }

    pub fn to_unit(&self, actual: &[f64]) -> Vec<f64> {
        self.dims
            .iter()
            .zip(actual)
            .map(|(d, &a)| d.to_unit(a))
            .collect()
    }

    fn sample_unit(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..self.dims.len()).map(|_| rng.random()).collect()
    }
}

/// Exact GP regression over normalized coordinates. Observations are
/// centered on their mean, so the posterior reverts to the data mean (not
/// zero) away from the evidence.
#[derive(Debug, Clone)]
pub struct GpModel {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    value_mean: f64,
    chol: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    noise_used: f64,
}

fn kernel(a: &[f64], b: &[f64]) -> f64 {
    let dist_sq: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| ((x - y) / GP_LENGTH_SCALE).powi(2))
        .sum();
    GP_SIGNAL_VARIANCE * (-0.5 * dist_sq).exp()
}

/// Fit the GP to normalized observations. Duplicate points are handled by
/// escalating jitter rather than failing.
pub fn gp_fit(points: Vec<Vec<f64>>, values: Vec<f64>) -> Result<GpModel> {
    if points.is_empty() || points.len() != values.len() {
        return Err(Error::InsufficientData(format!(
            "GP fit needs matching nonempty observations, got {} points / {} values",
            points.len(),
            values.len()
        )));
    }
    let n = points.len();
    let mut base = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let k = kernel(&points[i], &points[j]);
            base[i][j] = k;
            base[j][i] = k;
        }
    }
    let value_mean = values.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = values.iter().map(|v| v - value_mean).collect();
    let mut jitter = GP_NOISE.max(JITTER_FLOOR);
    loop {
        let mut k = base.clone();
        for (i, row) in k.iter_mut().enumerate() {
            row[i] += jitter;
        }
        if let Some(chol) = cholesky_factor(&k) {
            let alpha = cholesky_solve(&chol, &centered);
            return Ok(GpModel {
                points,
                values,
                value_mean,
                chol,
                alpha,
                noise_used: jitter,
            });
        }
        jitter *= 10.0;
        if jitter > 1.0 {
            return Err(Error::SingularSystem);
        }
    }
}

impl GpModel {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn best_observed(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn noise_used(&self) -> f64 {
        self.noise_used
    }
}

/// Posterior mean and variance at a normalized point.
pub fn gp_posterior(model: &GpModel, point: &[f64]) -> (f64, f64) {
    let k_star: Vec<f64> = model.points.iter().map(|p| kernel(p, point)).collect();
    let mean: f64 = model.value_mean
        + k_star
            .iter()
            .zip(&model.alpha)
            .map(|(k, a)| k * a)
            .sum::<f64>();
    // var = k(x,x) - k*^T K^-1 k*
    let solved = cholesky_solve(&model.chol, &k_star);
    let reduction: f64 = k_star.iter().zip(&solved).map(|(k, s)| k * s).sum();
    let var = (GP_SIGNAL_VARIANCE - reduction).max(0.0);
    (mean, var)
}

/// Standard normal CDF (Abramowitz–Stegun 7.1.26 rational erf, |err| < 1.5e-7).
fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

fn erf(x: f64) -> f64 {
    let sign = x.signum();
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.327_591_1 * x);
    let poly = t
        * (0.254_829_592
            + t * (-0.284_496_736
                + t * (1.421_413_741 + t * (-1.453_152_027 + t * 1.061_405_429))));
    sign * (1.0 - poly * (-x * x).exp())
}

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Expected improvement of a posterior `(mean, var)` over the incumbent.
pub fn expected_improvement(mean: f64, var: f64, best: f64) -> f64 {
    let sigma = var.sqrt();
    let improvement = mean - best;
    if sigma < 1e-12 {
        return improvement.max(0.0);
    }
    let z = improvement / sigma;
    improvement * normal_cdf(z) + sigma * normal_pdf(z)
}

/// Pick the next point: with no model yet, a uniform random point; otherwise
/// the EI argmax over `n_candidates` uniform samples in normalized space.
/// Deterministic per rng state; ties keep the first candidate.
pub fn suggest(
    model: Option<&GpModel>,
    space: &ParamSpace,
    rng: &mut ChaCha8Rng,
    n_candidates: usize,
) -> Vec<f64> {
    let model = match model {
        None => return space.sample_unit(rng),
        Some(m) => m,
    };
    let best = model.best_observed();
    let mut best_point = space.sample_unit(rng);
    let (m0, v0) = gp_posterior(model, &best_point);
    let mut best_ei = expected_improvement(m0, v0, best);
    for _ in 1..n_candidates.max(1) {
        let candidate = space.sample_unit(rng);
        let (mean, var) = gp_posterior(model, &candidate);
        let ei = expected_improvement(mean, var, best);
        if ei > best_ei {
            best_ei = ei;
            best_point = candidate;
        }
    }
    best_point
}

/// One evaluated point of a tuning run, in actual (untransformed) space.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub index: usize,
    pub point: Vec<f64>,
    pub value: f64,
    /// Set when the objective failed at this point (value recorded as 0).
    pub flagged: bool,
}

/// Options of a tuning run.
#[derive(Debug, Clone, PartialEq)]
pub struct TuneOptions {
    pub budget: usize,
    pub init_points: usize,
    pub seed: u64,
    pub n_candidates: usize,
    /// When set, the trace is rewritten after every evaluation and an
    /// existing trace at this path resumes the run.
    pub trace_path: Option<std::path::PathBuf>,
}

impl Default for TuneOptions {
    fn default() -> Self {
        TuneOptions {
            budget: 40,
            init_points: 8,
            seed: 7,
            n_candidates: 4096,
            trace_path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub best_point: Vec<f64>,
    pub best_value: f64,
    pub trace: Vec<TraceEntry>,
}

/// Run (or resume) a tuning loop: `init_points` seeded-random evaluations,
/// then EI-guided ones, maximizing the objective. Objective failures are
/// recorded as flagged zero-value entries and the loop continues.
///
/// Evaluation `i` derives its randomness from `(seed, i)` alone, so a resumed
/// run retraces exactly the evaluations an uninterrupted run would have made.
pub fn tune<F>(objective: &mut F, space: &ParamSpace, opts: &TuneOptions) -> Result<TuneResult>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    space.validate()?;
    if opts.budget < opts.init_points {
        return Err(Error::invalid_param(
            "budget",
            format!(
                "budget {} must cover the {} initial points",
                opts.budget, opts.init_points
            ),
        ));
    }
    if opts.init_points == 0 {
        return Err(Error::invalid_param("init_points", "must be positive"));
    }

    let mut trace: Vec<TraceEntry> = match &opts.trace_path {
        Some(path) if path.exists() => read_trace(path, space)?,
        _ => Vec::new(),
    };

    while trace.len() < opts.budget {
        let index = trace.len();
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(opts.seed, index as u64));
        let unit = if index < opts.init_points {
            space.sample_unit(&mut rng)
        } else {
            let points: Vec<Vec<f64>> = trace.iter().map(|e| space.to_unit(&e.point)).collect();
            let values: Vec<f64> = trace.iter().map(|e| e.value).collect();
            let model = gp_fit(points, values)?;
            suggest(Some(&model), space, &mut rng, opts.n_candidates)
        };
        let point = space.to_actual(&unit);
        let (value, flagged) = match objective(&point) {
            Ok(v) => (v, false),
            Err(_) => (0.0, true),
        };
        trace.push(TraceEntry {
            index,
            point,
            value,
            flagged,
        });
        if let Some(path) = &opts.trace_path {
            write_trace(path, space, &trace)?;
        }
    }

    let best = trace
        .iter()
        .max_by(|a, b| a.value.partial_cmp(&b.value).expect("NaN objective"))
        .expect("budget is positive");
    Ok(TuneResult {
        best_point: best.point.clone(),
        best_value: best.value,
        trace,
    })
}

fn trace_header(space: &ParamSpace) -> String {
    let mut header = String::from("eval_index");
    for dim in &space.dims {
        header.push(',');
        header.push_str(&dim.name);
    }
    header.push_str(",reward,flagged");
    header
}

/// Persist the trace: `eval_index,<dim names...>,reward,flagged`.
pub fn write_trace(path: &Path, space: &ParamSpace, trace: &[TraceEntry]) -> Result<()> {
    let mut out = trace_header(space);
    out.push('\n');
    for entry in trace {
        out.push_str(&entry.index.to_string());
        for v in &entry.point {
            out.push_str(&format!(",{v}"));
        }
        out.push_str(&format!(",{},{}\n", entry.value, entry.flagged as u8));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_trace(path: &Path, space: &ParamSpace) -> Result<Vec<TraceEntry>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    check_header(path, lines.next().unwrap_or(""), &trace_header(space))?;
    let mut trace = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != space.dim() + 3 {
            return Err(Error::Parse {
                path: path.into(),
                line: line_no,
                reason: format!("expected {} fields, got {}", space.dim() + 3, fields.len()),
            });
        }
        let index: usize = parse_field(path, line_no, "eval_index", fields[0])?;
        let mut point = Vec::with_capacity(space.dim());
        for (dim, raw) in space.dims.iter().zip(&fields[1..=space.dim()]) {
            point.push(parse_field(path, line_no, &dim.name, raw)?);
        }
        let value = parse_field(path, line_no, "reward", fields[space.dim() + 1])?;
        let flagged = match fields[space.dim() + 2] {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Parse {
                    path: path.into(),
                    line: line_no,
                    reason: format!("flagged: expected 0 or 1, got `{other}`"),
                })
            }
        };
        trace.push(TraceEntry {
            index,
            point,
            value,
            flagged,
        });
    }
    Ok(trace)
}
