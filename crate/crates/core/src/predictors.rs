//! The two learned components of the replay simulator: a logistic-regression
//! view-probability model (proxy for the bid-time prediction a DSP would
//! supply) and a linear bid-pricing model (stand-in for the production
//! bidder). Both operate on the fixed 18-column feature encoding.

use std::fmt;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{check_header, encode_features, parse_field, ImpressionRecord, FEATURE_DIM};
use crate::domain::{sigmoid, UnitInterval};
use crate::error::{Error, Result};
use crate::linalg::solve_spd;

/// Clamp for probabilities inside log-loss terms.
const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Logistic,
    Linear,
}

impl ModelKind {
    fn as_str(self) -> &'static str {
        match self {
            ModelKind::Logistic => "logistic",
            ModelKind::Linear => "linear",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A linear model over the fixed feature encoding (the bias lives in the
/// encoding, not as a separate term).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub kind: ModelKind,
    pub weights: Vec<f64>,
}

impl LinearModel {
    pub fn new(kind: ModelKind, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != FEATURE_DIM {
            return Err(Error::ShapeMismatch(format!(
                "model expects {FEATURE_DIM} weights, got {}",
                weights.len()
            )));
        }
        Ok(LinearModel { kind, weights })
    }

    pub fn zeros(kind: ModelKind) -> Self {
        LinearModel {
            kind,
            weights: vec![0.0; FEATURE_DIM],
        }
    }

    fn dot(&self, rec: &ImpressionRecord) -> f64 {
        let x = encode_features(rec);
        self.weights.iter().zip(&x).map(|(w, xi)| w * xi).sum()
    }
}

/// Gradient-descent hyperparameters for the logistic model (and the ridge
/// strength reused by the bid model).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Full passes over the training set; 0 returns the zero-initialized
    /// model (predicts 0.5 everywhere).
    pub epochs: usize,
    pub minibatch: usize,
    pub l2: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.05,
            epochs: 10,
            minibatch: 256,
            l2: 1e-6,
            seed: 7,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::invalid_param("learning_rate", "must be positive"));
        }
        if self.minibatch == 0 {
            return Err(Error::invalid_param("minibatch", "must be positive"));
        }
        if !self.l2.is_finite() || self.l2 < 0.0 {
            return Err(Error::invalid_param("l2", "must be nonnegative"));
        }
        Ok(())
    }
}

/// Fit the view-probability model by seeded minibatch gradient descent on
/// L2-regularized log loss of the `viewed` label. Weights start at zero; the
/// seed only drives minibatch shuffling.
pub fn train_logistic(records: &[ImpressionRecord], config: &TrainConfig) -> Result<LinearModel> {
    config.validate()?;
    if records.is_empty() {
        return Err(Error::InsufficientData("empty training set".into()));
    }
    let positives = records.iter().filter(|r| r.viewed).count();
    if positives == 0 || positives == records.len() {
        return Err(Error::DegenerateLabels);
    }

    let features: Vec<[f64; FEATURE_DIM]> = records.iter().map(encode_features).collect();
    let labels: Vec<f64> = records.iter().map(|r| r.viewed as u8 as f64).collect();

    let mut weights = vec![0.0; FEATURE_DIM];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..records.len()).collect();
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.minibatch) {
            // accumulate in index order so the float sum depends only on the
            // chunk's contents, not the shuffle order inside it
            let mut chunk = chunk.to_vec();
            chunk.sort_unstable();
            let mut grad = vec![0.0; FEATURE_DIM];
            for &i in &chunk {
                let z: f64 = weights.iter().zip(&features[i]).map(|(w, xi)| w * xi).sum();
                let residual = sigmoid(z).value() - labels[i];
                for (g, xi) in grad.iter_mut().zip(&features[i]) {
                    *g += residual * xi;
                }
            }
            let scale = config.learning_rate / chunk.len() as f64;
            for (w, g) in weights.iter_mut().zip(&grad) {
                *w -= scale * g + config.learning_rate * config.l2 * *w;
            }
        }
    }
    LinearModel::new(ModelKind::Logistic, weights)
}

/// Predicted view probability for one record.
pub fn predict_view_probability(
    model: &LinearModel,
    rec: &ImpressionRecord,
) -> Result<UnitInterval> {
    if model.kind != ModelKind::Logistic {
        return Err(Error::KindMismatch {
            expected: "logistic",
            found: model.kind.to_string(),
        });
    }
    Ok(sigmoid(model.dot(rec)))
}

/// Fit the bid-pricing model: ridge least squares of `cost_micros` on the
/// feature encoding, solved in closed form via the normal equations.
pub fn train_bid_model(records: &[ImpressionRecord], config: &TrainConfig) -> Result<LinearModel> {
    config.validate()?;
    if records.is_empty() {
        return Err(Error::InsufficientData("empty training set".into()));
    }
    let n = records.len() as f64;
    let mut xtx = vec![vec![0.0; FEATURE_DIM]; FEATURE_DIM];
    let mut xty = vec![0.0; FEATURE_DIM];
    for rec in records {
        let x = encode_features(rec);
        let y = rec.cost_micros as f64;
        for i in 0..FEATURE_DIM {
            if x[i] == 0.0 {
                continue;
            }
            xty[i] += x[i] * y;
            for j in 0..FEATURE_DIM {
                xtx[i][j] += x[i] * x[j];
            }
        }
    }
    for i in 0..FEATURE_DIM {
        for j in 0..FEATURE_DIM {
            xtx[i][j] /= n;
        }
        xty[i] /= n;
        xtx[i][i] += config.l2;
    }
    let weights = solve_spd(&xtx, &xty).ok_or(Error::SingularSystem)?;
    LinearModel::new(ModelKind::Linear, weights)
}

/// Bid for one auction: the fitted price, floored at zero and rounded to
/// integer micros.
pub fn bid_price(model: &LinearModel, rec: &ImpressionRecord) -> Result<u64> {
    if model.kind != ModelKind::Linear {
        return Err(Error::KindMismatch {
            expected: "linear",
            found: model.kind.to_string(),
        });
    }
    Ok(model.dot(rec).round().max(0.0) as u64)
}

/// Mean log loss of the logistic model over a record set.
pub fn mean_log_loss(model: &LinearModel, records: &[ImpressionRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::InsufficientData("empty evaluation set".into()));
    }
    let mut total = 0.0;
    for rec in records {
        let p = predict_view_probability(model, rec)?
            .value()
            .clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
        total -= if rec.viewed { p.ln() } else { (1.0 - p).ln() };
    }
    Ok(total / records.len() as f64)
}

/// Area under the ROC curve via the rank-sum formulation, with average ranks
/// for tied scores.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::DegenerateLabels);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("NaN score"));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks are 1-based; ties share the average rank of their block
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            if labels[idx] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let n_pos_f = n_pos as f64;
    Ok((rank_sum_pos - n_pos_f * (n_pos_f + 1.0) / 2.0) / (n_pos_f * n_neg as f64))
}

/// Compare the analytic log-loss gradient at one record against central
/// finite differences, returning the max per-coordinate relative error
/// (relative to `max(|analytic|, |numeric|, 1)`).
pub fn gradient_check_logistic(
    model: &LinearModel,
    rec: &ImpressionRecord,
    label: bool,
    eps: f64,
) -> Result<f64> {
    if !(eps > 0.0 && eps < 1e-2) {
        return Err(Error::invalid_param(
            "eps",
            format!("finite-difference step must lie in (0, 1e-2), got {eps}"),
        ));
    }
    if model.kind != ModelKind::Logistic {
        return Err(Error::KindMismatch {
            expected: "logistic",
            found: model.kind.to_string(),
        });
    }
    let x = encode_features(rec);
    let y = label as u8 as f64;
    let loss = |w: &[f64]| -> f64 {
        let z: f64 = w.iter().zip(&x).map(|(wi, xi)| wi * xi).sum();
        let p = sigmoid(z).value().clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
        -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
    };
    let z: f64 = model.weights.iter().zip(&x).map(|(w, xi)| w * xi).sum();
    let residual = sigmoid(z).value() - y;

    let mut probe = model.weights.clone();
    let mut max_rel: f64 = 0.0;
    for i in 0..FEATURE_DIM {
        let analytic = residual * x[i];
        let orig = probe[i];
        probe[i] = orig + eps;
        let plus = loss(&probe);
        probe[i] = orig - eps;
        let minus = loss(&probe);
        probe[i] = orig;
        let numeric = (plus - minus) / (2.0 * eps);
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1.0);
        max_rel = max_rel.max(rel);
    }
    Ok(max_rel)
}

const MODEL_HEADER: &str = "kind,dim";

/// Serialize a model: a `kind,dim` header row, then one weight per line in
/// 17-significant-digit scientific notation (bit-exact round trip).
pub fn write_model(model: &LinearModel, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(MODEL_HEADER);
    out.push('\n');
    out.push_str(&format!("{},{}\n", model.kind, model.weights.len()));
    for w in &model.weights {
        out.push_str(&format!("{w:.16e}\n"));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_model(path: &Path) -> Result<LinearModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    check_header(path, lines.next().unwrap_or(""), MODEL_HEADER)?;
    let meta = lines.next().ok_or_else(|| Error::Format {
        path: path.into(),
        reason: "missing kind,dim row".into(),
    })?;
    let parts: Vec<&str> = meta.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::Format {
            path: path.into(),
            reason: format!("expected `kind,dim` values, got `{meta}`"),
        });
    }
    let kind = match parts[0] {
        "logistic" => ModelKind::Logistic,
        "linear" => ModelKind::Linear,
        other => {
            return Err(Error::Format {
                path: path.into(),
                reason: format!("unknown model kind `{other}`"),
            })
        }
    };
    let dim: usize = parse_field(path, 2, "dim", parts[1])?;
    let mut weights = Vec::with_capacity(dim);
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        weights.push(parse_field(path, idx + 3, "weight", line)?);
    }
    if weights.len() != dim {
        return Err(Error::Format {
            path: path.into(),
            reason: format!("expected {dim} weights, found {}", weights.len()),
        });
    }
    LinearModel::new(kind, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_lld_with_latents, GeneratorConfig};

    fn record(device: u8, position: u8, hour: u8) -> ImpressionRecord {
        ImpressionRecord {
            timestamp: 1_700_006_400 + hour as i64 * 3_600,
            hour_of_day: hour,
            device_type: device,
            domain_id: 3,
            position,
            cost_micros: 1_000,
            viewed: false,
            clicked: false,
        }
    }

    #[test]
    fn zero_epochs_returns_zero_model() {
        let mut records = vec![record(0, 0, 1); 10];
        records[0].viewed = true;
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let model = train_logistic(&records, &cfg).unwrap();
        assert!(model.weights.iter().all(|&w| w == 0.0));
        let p = predict_view_probability(&model, &records[0]).unwrap();
        assert_eq!(p.value(), 0.5);
    }

    #[test]
    fn single_class_labels_rejected() {
        let records = vec![record(0, 0, 1); 10];
        assert!(matches!(
            train_logistic(&records, &TrainConfig::default()),
            Err(Error::DegenerateLabels)
        ));
    }

    #[test]
    fn separable_toy_set_reaches_full_accuracy() {
        // above-fold records viewed, below-fold not: linearly separable on
        // the position one-hots
        let mut records = Vec::new();
        for i in 0..200 {
            let mut above = record((i % 4) as u8, 0, (i % 24) as u8);
            above.viewed = true;
            records.push(above);
            records.push(record((i % 4) as u8, 2, (i % 24) as u8));
        }
        let cfg = TrainConfig {
            learning_rate: 0.5,
            epochs: 200,
            minibatch: 400,
            l2: 0.0,
            seed: 1,
        };
        let model = train_logistic(&records, &cfg).unwrap();
        let correct = records
            .iter()
            .filter(|r| {
                let p = predict_view_probability(&model, r).unwrap().value();
                (p >= 0.5) == r.viewed
            })
            .count();
        assert_eq!(correct, records.len());
    }

    #[test]
    fn recovers_strong_ground_truth_signs() {
        let cfg = GeneratorConfig {
            n_records: 50_000,
            ..GeneratorConfig::default()
        };
        let (records, _) = generate_lld_with_latents(&cfg).unwrap();
        let model = train_logistic(&records, &TrainConfig::default()).unwrap();
        for (i, (&w_true, &w_fit)) in cfg.true_view_weights.iter().zip(&model.weights).enumerate() {
            if w_true.abs() > 0.5 {
                assert!(
                    w_true.signum() == w_fit.signum(),
                    "weight {i}: truth {w_true} vs fit {w_fit}"
                );
            }
        }
    }

    #[test]
    fn full_batch_loss_is_monotone() {
        let cfg = GeneratorConfig {
            n_records: 5_000,
            ..GeneratorConfig::default()
        };
        let records = crate::dataset::generate_lld(&cfg).unwrap();
        let mut train_cfg = TrainConfig {
            learning_rate: 0.1,
            epochs: 0,
            minibatch: records.len(),
            l2: 1e-6,
            seed: 3,
        };
        let mut prev = f64::INFINITY;
        for epochs in 0..25 {
            train_cfg.epochs = epochs;
            let model = train_logistic(&records, &train_cfg).unwrap();
            let loss = mean_log_loss(&model, &records).unwrap()
                + 0.5 * train_cfg.l2 * model.weights.iter().map(|w| w * w).sum::<f64>();
            assert!(
                loss <= prev + 1e-6,
                "loss rose at epoch {epochs}: {loss} > {prev}"
            );
            prev = loss;
        }
    }

    #[test]
    fn full_batch_training_ignores_the_seed() {
        // zero init plus full-batch descent: the seed only drives shuffling,
        // which cannot matter when every epoch is one batch
        let cfg = GeneratorConfig {
            n_records: 3_000,
            ..GeneratorConfig::default()
        };
        let records = crate::dataset::generate_lld(&cfg).unwrap();
        let mut train_cfg = TrainConfig {
            minibatch: records.len(),
            epochs: 5,
            ..TrainConfig::default()
        };
        train_cfg.seed = 1;
        let a = train_logistic(&records, &train_cfg).unwrap();
        train_cfg.seed = 2;
        let b = train_logistic(&records, &train_cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn predict_rejects_kind_mismatch() {
        let model = LinearModel::zeros(ModelKind::Linear);
        assert!(matches!(
            predict_view_probability(&model, &record(0, 0, 0)),
            Err(Error::KindMismatch { .. })
        ));
        let model = LinearModel::zeros(ModelKind::Logistic);
        assert!(matches!(
            bid_price(&model, &record(0, 0, 0)),
            Err(Error::KindMismatch { .. })
        ));
    }

    #[test]
    fn saturated_bias_predicts_near_one() {
        let mut weights = vec![0.0; FEATURE_DIM];
        weights[FEATURE_DIM - 1] = 10.0;
        let model = LinearModel::new(ModelKind::Logistic, weights).unwrap();
        let p = predict_view_probability(&model, &record(1, 1, 5)).unwrap();
        assert!(p.value() >= 0.9999);
    }

    #[test]
    fn prediction_matches_hand_computed_sigmoid() {
        let weights: Vec<f64> = (0..FEATURE_DIM).map(|i| 0.01 * i as f64 - 0.05).collect();
        let model = LinearModel::new(ModelKind::Logistic, weights.clone()).unwrap();
        let rec = record(2, 1, 13);
        let x = encode_features(&rec);
        let z: f64 = weights.iter().zip(&x).map(|(w, xi)| w * xi).sum();
        let expected = 1.0 / (1.0 + (-z).exp());
        let got = predict_view_probability(&model, &rec).unwrap().value();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn constant_cost_fits_intercept() {
        let records: Vec<ImpressionRecord> = (0..100)
            .map(|i| {
                let mut r = record((i % 4) as u8, (i % 3) as u8, (i % 24) as u8);
                r.cost_micros = 1_000;
                r
            })
            .collect();
        let model = train_bid_model(&records, &TrainConfig::default()).unwrap();
        for r in &records {
            assert_eq!(bid_price(&model, r).unwrap(), 1_000);
        }
    }

    #[test]
    fn recovers_exactly_linear_costs() {
        // zero weight on the sin/cos columns keeps every true cost integral,
        // so the u64 cost field carries the linear relation exactly
        let mut truth: Vec<f64> = (0..FEATURE_DIM).map(|i| 100.0 + 25.0 * i as f64).collect();
        truth[7] = 0.0;
        truth[8] = 0.0;
        let records: Vec<ImpressionRecord> = (0..2_000)
            .map(|i| {
                let mut r = record((i % 4) as u8, (i % 3) as u8, (i % 24) as u8);
                r.domain_id = i as u32 % 40;
                let x = encode_features(&r);
                let cost: f64 = truth.iter().zip(&x).map(|(w, xi)| w * xi).sum();
                r.cost_micros = cost.round() as u64;
                r
            })
            .collect();
        let cfg = TrainConfig {
            l2: 1e-9,
            ..TrainConfig::default()
        };
        let model = train_bid_model(&records, &cfg).unwrap();
        // the encoding is collinear (one-hot groups sum to the bias column),
        // so compare fitted prices rather than raw coefficients
        for r in records.iter().take(50) {
            let x = encode_features(r);
            let want: f64 = truth.iter().zip(&x).map(|(w, xi)| w * xi).sum();
            let got: f64 = model.weights.iter().zip(&x).map(|(w, xi)| w * xi).sum();
            assert!(
                (got - want).abs() < 1e-6 * want.abs().max(1.0),
                "{got} vs {want}"
            );
        }
    }

    #[test]
    fn singular_system_without_ridge_is_reported() {
        // one-hot groups are collinear with the bias, so l2 = 0 cannot work
        let records: Vec<ImpressionRecord> = (0..50)
            .map(|i| record((i % 4) as u8, (i % 3) as u8, (i % 24) as u8))
            .collect();
        let cfg = TrainConfig {
            l2: 0.0,
            ..TrainConfig::default()
        };
        let err = train_bid_model(&records, &cfg).unwrap_err();
        assert!(err.to_string().contains("l2 > 0"), "got: {err}");
    }

    #[test]
    fn negative_fit_clamps_bid_to_zero() {
        let mut weights = vec![0.0; FEATURE_DIM];
        weights[FEATURE_DIM - 1] = -50.0;
        let model = LinearModel::new(ModelKind::Linear, weights).unwrap();
        assert_eq!(bid_price(&model, &record(0, 0, 0)).unwrap(), 0);
    }

    #[test]
    fn bid_price_never_negative_on_random_models() {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let weights: Vec<f64> = (0..FEATURE_DIM)
                .map(|_| rng.random::<f64>() * 2_000.0 - 1_000.0)
                .collect();
            let model = LinearModel::new(ModelKind::Linear, weights).unwrap();
            let rec = record(
                rng.random_range(0..4) as u8,
                rng.random_range(0..3) as u8,
                rng.random_range(0..24) as u8,
            );
            let _ = bid_price(&model, &rec).unwrap(); // u64: nonnegative by type
        }
    }

    #[test]
    fn gradient_check_passes_on_random_model() {
        let weights: Vec<f64> = (0..FEATURE_DIM).map(|i| (i as f64 * 0.37).sin()).collect();
        let model = LinearModel::new(ModelKind::Logistic, weights).unwrap();
        let err = gradient_check_logistic(&model, &record(1, 2, 9), true, 1e-5).unwrap();
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn gradient_check_at_saturated_point_is_tiny() {
        let mut weights = vec![0.0; FEATURE_DIM];
        weights[FEATURE_DIM - 1] = 30.0; // prediction saturated at ~1
        let model = LinearModel::new(ModelKind::Logistic, weights).unwrap();
        let err = gradient_check_logistic(&model, &record(0, 0, 0), true, 1e-5).unwrap();
        assert!(err < 1e-8, "absolute error {err}");
    }

    #[test]
    fn gradient_check_rejects_bad_eps() {
        let model = LinearModel::zeros(ModelKind::Logistic);
        assert!(gradient_check_logistic(&model, &record(0, 0, 0), true, 0.5).is_err());
        assert!(gradient_check_logistic(&model, &record(0, 0, 0), true, 0.0).is_err());
    }

    #[test]
    fn model_file_round_trip_is_bit_exact() {
        let dir = std::env::temp_dir().join(format!("viewsim-model-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("view.csv");
        let weights: Vec<f64> = (0..FEATURE_DIM)
            .map(|i| (i as f64 * 1.7).sin() * 1e3 / 3.0)
            .collect();
        let model = LinearModel::new(ModelKind::Logistic, weights).unwrap();
        write_model(&model, &path).unwrap();
        let back = read_model(&path).unwrap();
        assert_eq!(back.kind, model.kind);
        for (a, b) in model.weights.iter().zip(&back.weights) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn auc_handles_ties_and_degenerate_input() {
        let perfect = auc(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap();
        assert_eq!(perfect, 1.0);
        let chance = auc(&[0.5, 0.5, 0.5, 0.5], &[false, true, false, true]).unwrap();
        assert_eq!(chance, 0.5);
        assert!(matches!(
            auc(&[0.1, 0.2], &[true, true]),
            Err(Error::DegenerateLabels)
        ));
    }
}
