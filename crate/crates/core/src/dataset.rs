//! Log-level data: the per-impression record, its CSV format, chronological
//! splitting, auction-stream sampling, and a seeded synthetic generator with
//! known ground truth standing in for real purchased-inventory logs.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::sigmoid;
use crate::error::{Error, Result};
use crate::rand_util::standard_normal;

/// Exact header of the LLD CSV format.
pub const LLD_HEADER: &str =
    "timestamp,hour_of_day,device_type,domain_id,position,cost_micros,viewed,clicked";

/// Length of the fixed feature encoding (see [`encode_features`]).
pub const FEATURE_DIM: usize = 18;

pub const N_DEVICE_TYPES: usize = 4;
pub const N_POSITIONS: usize = 3;
pub const N_DOMAIN_BUCKETS: usize = 8;

/// Generator epoch, midnight-aligned so `hour_of_day` is a pure function of
/// the timestamp.
const EPOCH_START: i64 = 1_700_006_400;

/// Number of distinct synthetic domains.
const N_DOMAINS: u32 = 40;

/// One auction opportunity from the purchase logs: categorical features, the
/// final price paid, and the observed outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ImpressionRecord {
    /// Unix seconds.
    pub timestamp: i64,
    /// 0-23, consistent with `timestamp`.
    pub hour_of_day: u8,
    /// 0-3.
    pub device_type: u8,
    pub domain_id: u32,
    /// 0 above fold, 1 mid, 2 below.
    pub position: u8,
    /// Final price paid, micro-currency.
    pub cost_micros: u64,
    pub viewed: bool,
    pub clicked: bool,
}

/// Encode a record into the fixed 18-column feature vector consumed by every
/// linear model in this crate. Order:
/// `[device one-hot x4, position one-hot x3, sin(hour), cos(hour),
///   domain-hash one-hot x8, bias]`.
pub fn encode_features(rec: &ImpressionRecord) -> [f64; FEATURE_DIM] {
    let mut x = [0.0; FEATURE_DIM];
    x[(rec.device_type as usize).min(N_DEVICE_TYPES - 1)] = 1.0;
    x[N_DEVICE_TYPES + (rec.position as usize).min(N_POSITIONS - 1)] = 1.0;
    let angle = std::f64::consts::TAU * rec.hour_of_day as f64 / 24.0;
    x[7] = angle.sin();
    x[8] = angle.cos();
    x[9 + domain_bucket(rec.domain_id)] = 1.0;
    x[17] = 1.0;
    x
}

/// Hash a domain id into one of the 8 feature buckets (Knuth multiplicative).
pub fn domain_bucket(domain_id: u32) -> usize {
    ((domain_id.wrapping_mul(2_654_435_761) >> 28) & 7) as usize
}

/// Ground-truth weights shipped with the default generator; indices follow
/// the [`encode_features`] order.
pub fn default_true_view_weights() -> Vec<f64> {
    let device = [0.80, -0.35, 0.35, -0.90];
    // above fold helps, below hurts
    let position = [2.20, 0.00, -2.20];
    let hour = [0.55, -0.35];
    let domains = [1.50, -1.50, 1.00, -1.00, 0.45, -0.45, 1.20, -1.20];
    let bias = 0.35;
    let mut w = Vec::with_capacity(FEATURE_DIM);
    w.extend(device);
    w.extend(position);
    w.extend(hour);
    w.extend(domains);
    w.push(bias);
    w
}

/// Hidden interaction sign: alternates with hour parity inside every
/// (device, position, domain) cell. Hours are uniform, so the sign averages
/// to exactly zero, and neither the one-hot columns nor the smooth sin/cos
/// pair can express it.
fn interaction_sign(device_type: u8, position: u8, domain_id: u32, hour_of_day: u8) -> f64 {
    let key = (u64::from(device_type) << 40) ^ (u64::from(position) << 32) ^ u64::from(domain_id);
    let parity = (crate::rand_util::mix_seed(key, 0x1A7E) + u64::from(hour_of_day)) & 1;
    if parity == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Configuration of the synthetic LLD generator.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub n_records: usize,
    pub seed: u64,
    /// Ground-truth view-probability weights over the encoded features.
    pub true_view_weights: Vec<f64>,
    /// Base price scale in micros.
    pub cost_base_micros: u64,
    /// Strength of the price/view-probability coupling: better inventory
    /// costs more.
    pub cost_view_coupling: f64,
    /// Lognormal price noise.
    pub cost_lognormal_sigma: f64,
    pub duration_days: u32,
    /// Amplitude of the hidden interaction term in the ground-truth view
    /// logit. It is invisible to any linear model on the encoded features,
    /// which damps how strongly realized viewability responds to the
    /// threshold (the response a real campaign shows).
    pub interaction_strength: f64,
    /// Keep only records a naive cost-model bidder would have won,
    /// reproducing the won-auctions-only reporting bias of real logs.
    pub winners_only: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_records: 100_000,
            seed: 7,
            true_view_weights: default_true_view_weights(),
            cost_base_micros: 1_000,
            cost_view_coupling: 1.0,
            cost_lognormal_sigma: 0.5,
            duration_days: 28,
            interaction_strength: 2.0,
            winners_only: false,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_records == 0 {
            return Err(Error::invalid_param("n_records", "must be positive"));
        }
        if self.true_view_weights.len() != FEATURE_DIM {
            return Err(Error::invalid_param(
                "true_view_weights",
                format!(
                    "expected {FEATURE_DIM} weights, got {}",
                    self.true_view_weights.len()
                ),
            ));
        }
        if self.cost_base_micros == 0 {
            return Err(Error::invalid_param("cost_base_micros", "must be positive"));
        }
        if !self.cost_view_coupling.is_finite() || self.cost_view_coupling < 0.0 {
            return Err(Error::invalid_param(
                "cost_view_coupling",
                "must be nonnegative",
            ));
        }
        if !self.cost_lognormal_sigma.is_finite() || self.cost_lognormal_sigma <= 0.0 {
            return Err(Error::invalid_param(
                "cost_lognormal_sigma",
                "must be positive",
            ));
        }
        if !self.interaction_strength.is_finite() || self.interaction_strength < 0.0 {
            return Err(Error::invalid_param(
                "interaction_strength",
                "must be nonnegative",
            ));
        }
        if self.duration_days == 0 {
            return Err(Error::invalid_param("duration_days", "must be positive"));
        }
        Ok(())
    }
}

/// Generate a synthetic LLD set, sorted by timestamp. Identical configs give
/// byte-identical output.
pub fn generate_lld(config: &GeneratorConfig) -> Result<Vec<ImpressionRecord>> {
    Ok(generate_lld_with_latents(config)?.0)
}

/// Same as [`generate_lld`] but also returns each record's latent ground-truth
/// view probability, so estimator-recovery tests can compare against truth.
pub fn generate_lld_with_latents(
    config: &GeneratorConfig,
) -> Result<(Vec<ImpressionRecord>, Vec<f64>)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let span = config.duration_days as i64 * 86_400;
    let mut rows: Vec<(ImpressionRecord, f64)> = Vec::with_capacity(config.n_records);
    while rows.len() < config.n_records {
        let timestamp = EPOCH_START + rng.random_range(0..span);
        let hour_of_day = ((timestamp % 86_400) / 3_600) as u8;
        let device_type = pick_categorical(&mut rng, &[0.45, 0.35, 0.15, 0.05]);
        let position = pick_categorical(&mut rng, &[0.50, 0.30, 0.20]);
        // quadratic skew: low ids are the high-traffic domains
        let domain_id = ((rng.random::<f64>().powi(2)) * N_DOMAINS as f64) as u32;

        let mut rec = ImpressionRecord {
            timestamp,
            hour_of_day,
            device_type,
            domain_id: domain_id.min(N_DOMAINS - 1),
            position,
            cost_micros: 0,
            viewed: false,
            clicked: false,
        };
        let x = encode_features(&rec);
        let linear: f64 = x
            .iter()
            .zip(&config.true_view_weights)
            .map(|(xi, wi)| xi * wi)
            .sum();
        let z = linear
            + config.interaction_strength
                * interaction_sign(
                    rec.device_type,
                    rec.position,
                    rec.domain_id,
                    rec.hour_of_day,
                );
        let p_view = sigmoid(z).value();
        rec.viewed = rng.random_bool(p_view);
        rec.clicked = rng.random_bool((0.005 + 0.05 * p_view).min(1.0));
        let log_cost = config.cost_view_coupling * p_view
            + config.cost_lognormal_sigma * standard_normal(&mut rng);
        rec.cost_micros = (config.cost_base_micros as f64 * log_cost.exp()).round() as u64;

        if config.winners_only {
            // emulate reporting bias: keep records a bidder quoting the
            // conditional mean price would have won
            let naive_bid = config.cost_base_micros as f64
                * (config.cost_view_coupling * p_view
                    + 0.5 * config.cost_lognormal_sigma * config.cost_lognormal_sigma)
                    .exp();
            if (rec.cost_micros as f64) > naive_bid {
                continue;
            }
        }
        rows.push((rec, p_view));
    }
    rows.sort_by_key(|(rec, _)| rec.timestamp);
    Ok(rows.into_iter().unzip())
}

fn pick_categorical(rng: &mut ChaCha8Rng, probs: &[f64]) -> u8 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i as u8;
        }
    }
    (probs.len() - 1) as u8
}

/// Write records in the LLD CSV format (UTF-8, LF, booleans as 0/1).
pub fn write_lld(records: &[ImpressionRecord], path: &Path) -> Result<()> {
    let mut out = String::with_capacity(records.len() * 48 + LLD_HEADER.len() + 1);
    out.push_str(LLD_HEADER);
    out.push('\n');
    for rec in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            rec.timestamp,
            rec.hour_of_day,
            rec.device_type,
            rec.domain_id,
            rec.position,
            rec.cost_micros,
            rec.viewed as u8,
            rec.clicked as u8,
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Read an LLD CSV, validating the header exactly and reporting parse
/// failures with their line number.
pub fn read_lld(path: &Path) -> Result<Vec<ImpressionRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    check_header(path, header, LLD_HEADER)?;

    let mut records = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::Parse {
                path: path.into(),
                line: line_no,
                reason: format!("expected 8 fields, got {}", fields.len()),
            });
        }
        records.push(ImpressionRecord {
            timestamp: parse_field(path, line_no, "timestamp", fields[0])?,
            hour_of_day: parse_field(path, line_no, "hour_of_day", fields[1])?,
            device_type: parse_field(path, line_no, "device_type", fields[2])?,
            domain_id: parse_field(path, line_no, "domain_id", fields[3])?,
            position: parse_field(path, line_no, "position", fields[4])?,
            cost_micros: parse_field(path, line_no, "cost_micros", fields[5])?,
            viewed: parse_bool_field(path, line_no, "viewed", fields[6])?,
            clicked: parse_bool_field(path, line_no, "clicked", fields[7])?,
        });
    }
    Ok(records)
}

/// Validate an exact CSV header, naming the first column that differs.
pub(crate) fn check_header(path: &Path, found: &str, expected: &str) -> Result<()> {
    if found == expected {
        return Ok(());
    }
    let found_cols: Vec<&str> = found.split(',').collect();
    let expected_cols: Vec<&str> = expected.split(',').collect();
    for (i, want) in expected_cols.iter().enumerate() {
        match found_cols.get(i) {
            Some(got) if got == want => continue,
            Some(got) => {
                return Err(Error::Format {
                    path: path.into(),
                    reason: format!("header column {} should be `{want}`, found `{got}`", i + 1),
                })
            }
            None => {
                return Err(Error::Format {
                    path: path.into(),
                    reason: format!("header is missing column `{want}`"),
                })
            }
        }
    }
    Err(Error::Format {
        path: path.into(),
        reason: format!(
            "header has {} extra column(s), starting with `{}`",
            found_cols.len() - expected_cols.len(),
            found_cols[expected_cols.len()]
        ),
    })
}

pub(crate) fn parse_field<T: std::str::FromStr>(
    path: &Path,
    line: usize,
    column: &str,
    raw: &str,
) -> Result<T> {
    raw.parse().map_err(|_| Error::Parse {
        path: path.into(),
        line,
        reason: format!("{column}: invalid value `{raw}`"),
    })
}

pub(crate) fn parse_bool_field(path: &Path, line: usize, column: &str, raw: &str) -> Result<bool> {
    match raw {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(Error::Parse {
            path: path.into(),
            line,
            reason: format!("{column}: expected 0 or 1, got `{other}`"),
        }),
    }
}

/// Chronological split at the given fraction; sorts by timestamp first if the
/// input is out of order. No record lands in both halves.
pub fn split_train_eval(
    records: &[ImpressionRecord],
    fraction: f64,
) -> Result<(Vec<ImpressionRecord>, Vec<ImpressionRecord>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid_param(
            "fraction",
            format!("must lie in (0, 1), got {fraction}"),
        ));
    }
    if records.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 records to split, got {}",
            records.len()
        )));
    }
    let mut sorted = records.to_vec();
    if !sorted.is_sorted_by_key(|r| r.timestamp) {
        sorted.sort_by_key(|r| r.timestamp);
    }
    let cut = ((sorted.len() as f64 * fraction).round() as usize).clamp(1, sorted.len() - 1);
    let eval = sorted.split_off(cut);
    Ok((sorted, eval))
}

/// Uniformly sample `n` auction opportunities from the replay pool: without
/// replacement when `n <= pool size`, with replacement otherwise.
/// Deterministic per seed.
pub fn sample_auction_stream(
    pool: &[ImpressionRecord],
    n: usize,
    seed: u64,
) -> Result<Vec<ImpressionRecord>> {
    if pool.is_empty() {
        return Err(Error::InsufficientData(
            "cannot sample auctions from an empty pool".into(),
        ));
    }
    if n == 0 {
        return Err(Error::invalid_param("n", "must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if n <= pool.len() {
        let mut indices: Vec<usize> = (0..pool.len()).collect();
        indices.shuffle(&mut rng);
        indices.truncate(n);
        Ok(indices.into_iter().map(|i| pool[i]).collect())
    } else {
        Ok((0..n)
            .map(|_| pool[rng.random_range(0..pool.len())])
            .collect())
    }
}
