use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textproc::SparseVector;

const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Logreg,
    Svm,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Logreg => "logreg",
            ModelKind::Svm => "svm",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logreg" => Ok(ModelKind::Logreg),
            "svm" => Ok(ModelKind::Svm),
            other => Err(Error::InvalidConfig(format!("unknown model kind '{other}'"))),
        }
    }
}

/// Per-class weight rows and biases over a `feature_dim`-dimensional input.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    kind: ModelKind,
    classes: Vec<u8>,
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
    feature_dim: usize,
}

impl LinearModel {
    pub fn zeros(kind: ModelKind, classes: Vec<u8>, feature_dim: usize) -> Result<Self> {
        let k = classes.len();
        LinearModel::from_parts(kind, classes, vec![vec![0.0; feature_dim]; k], vec![0.0; k])
    }

    pub fn from_parts(
        kind: ModelKind,
        classes: Vec<u8>,
        weights: Vec<Vec<f64>>,
        biases: Vec<f64>,
    ) -> Result<Self> {
        if classes.len() < 2 {
            return Err(Error::SingleClass {
                found: classes.len(),
            });
        }
        if classes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Integrity(
                "classes must be strictly increasing".into(),
            ));
        }
        if weights.len() != classes.len() || biases.len() != classes.len() {
            return Err(Error::Integrity(format!(
                "{} classes but {} weight rows and {} biases",
                classes.len(),
                weights.len(),
                biases.len()
            )));
        }
        let feature_dim = weights[0].len();
        if weights.iter().any(|row| row.len() != feature_dim) {
            return Err(Error::Integrity("ragged weight matrix".into()));
        }
        if weights.iter().flatten().chain(&biases).any(|v| !v.is_finite()) {
            return Err(Error::Integrity("non-finite parameter".into()));
        }
        Ok(LinearModel {
            kind,
            classes,
            weights,
            biases,
            feature_dim,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn classes(&self) -> &[u8] {
        &self.classes
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    fn class_index(&self, code: u8) -> Option<usize> {
        self.classes.iter().position(|&c| c == code)
    }

    fn raw_scores(&self, x: &SparseVector) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| x.dot(w) + b)
            .collect()
    }

    pub fn predict(&self, x: &SparseVector) -> Result<Prediction> {
        if x.dim() != self.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim,
                found: x.dim(),
            });
        }
        let raw = self.raw_scores(x);
        let best = argmax(&raw);
        let scores = match self.kind {
            ModelKind::Logreg => softmax(&raw),
            ModelKind::Svm => raw,
        };
        Ok(Prediction {
            label: self.classes[best],
            scores,
        })
    }

    pub fn predict_labels(&self, xs: &[SparseVector]) -> Result<Vec<u8>> {
        xs.iter().map(|x| self.predict(x).map(|p| p.label)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = LinearModelFile {
            format_version: FORMAT_VERSION,
            kind: self.kind,
            classes: self.classes.clone(),
            feature_dim: self.feature_dim,
            weights: self.weights.clone(),
            biases: self.biases.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(input: &str) -> Result<Self> {
        let file: LinearModelFile = serde_json::from_str(input)?;
        if file.format_version != FORMAT_VERSION {
            return Err(Error::Integrity(format!(
                "unsupported model format version {}",
                file.format_version
            )));
        }
        let model = LinearModel::from_parts(file.kind, file.classes, file.weights, file.biases)?;
        if model.feature_dim != file.feature_dim {
            return Err(Error::Integrity("feature_dim does not match weights".into()));
        }
        Ok(model)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinearModelFile {
    format_version: u32,
    kind: ModelKind,
    classes: Vec<u8>,
    feature_dim: usize,
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: u8,
    /// Class probabilities for logistic regression, raw decision values for SVM.
    pub scores: Vec<f64>,
}

/// First index of the maximum, so ties go to the lowest class code.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

fn log_sum_exp(scores: &[f64]) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2_lambda: f64,
    /// Logistic regression stops once an epoch improves the loss by less than this.
    pub tolerance: f64,
    #[serde(skip)]
    pub warm_start: Option<LinearModel>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.5,
            epochs: 200,
            l2_lambda: 1e-4,
            tolerance: 1e-7,
            warm_start: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning_rate must be > 0".into()));
        }
        if self.epochs < 1 {
            return Err(Error::InvalidConfig("epochs ≥ 1".into()));
        }
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return Err(Error::InvalidConfig("l2_lambda must be >= 0".into()));
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return Err(Error::InvalidConfig("tolerance must be >= 0".into()));
        }
        Ok(())
    }
}

/// Result of a training run, with the objective value at every evaluated epoch.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: LinearModel,
    /// Objective before each parameter update, plus the final value.
    pub losses: Vec<f64>,
    pub epochs_run: usize,
}

/// Check training inputs and return the sorted class list.
fn check_training_data(xs: &[SparseVector], ys: &[u8]) -> Result<(Vec<u8>, usize)> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let dim = xs[0].dim();
    if let Some(bad) = xs.iter().find(|x| x.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.dim(),
        });
    }
    let mut classes = ys.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::SingleClass {
            found: classes.len(),
        });
    }
    Ok((classes, dim))
}

fn initial_model(
    kind: ModelKind,
    classes: Vec<u8>,
    dim: usize,
    warm: Option<&LinearModel>,
) -> Result<LinearModel> {
    match warm {
        None => LinearModel::zeros(kind, classes, dim),
        Some(w) => {
            if w.kind != kind {
                return Err(Error::InvalidConfig(format!(
                    "warm start is a {} model, expected {}",
                    w.kind.as_str(),
                    kind.as_str()
                )));
            }
            if w.classes != classes {
                return Err(Error::InvalidConfig(format!(
                    "warm start classes {:?} differ from training classes {:?}",
                    w.classes, classes
                )));
            }
            if w.feature_dim != dim {
                return Err(Error::DimensionMismatch {
                    expected: w.feature_dim,
                    found: dim,
                });
            }
            Ok(w.clone())
        }
    }
}

pub struct Gradient {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

/// Mean cross-entropy plus `(lambda/2)·‖W‖²` and its gradient. Biases are
/// not regularized. `targets` holds class indices into `model.classes()`.
pub fn logreg_objective(
    model: &LinearModel,
    xs: &[SparseVector],
    targets: &[usize],
    lambda: f64,
) -> (f64, Gradient) {
    let n = xs.len() as f64;
    let k = model.classes.len();
    let mut grad = Gradient {
        weights: model
            .weights
            .iter()
            .map(|row| row.iter().map(|w| lambda * w).collect())
            .collect(),
        biases: vec![0.0; k],
    };
    let mut loss = 0.0;
    for (x, &t) in xs.iter().zip(targets) {
        let scores = model.raw_scores(x);
        loss += log_sum_exp(&scores) - scores[t];
        let probs = softmax(&scores);
        for (c, p) in probs.into_iter().enumerate() {
            let residual = (p - if c == t { 1.0 } else { 0.0 }) / n;
            grad.biases[c] += residual;
            let row = &mut grad.weights[c];
            for &(j, v) in x.entries() {
                row[j] += residual * v;
            }
        }
    }
    let penalty: f64 = model.weights.iter().flatten().map(|w| w * w).sum();
    (loss / n + 0.5 * lambda * penalty, grad)
}

/// Sum over classes of `(lambda/2)·‖w_c‖² + mean hinge`, one-vs-rest, with
/// a subgradient that treats margin < 1 as active.
pub fn svm_objective(
    model: &LinearModel,
    xs: &[SparseVector],
    targets: &[usize],
    lambda: f64,
) -> (f64, Gradient) {
    let n = xs.len() as f64;
    let k = model.classes.len();
    let mut grad = Gradient {
        weights: model
            .weights
            .iter()
            .map(|row| row.iter().map(|w| lambda * w).collect())
            .collect(),
        biases: vec![0.0; k],
    };
    let mut loss = 0.0;
    for (x, &t) in xs.iter().zip(targets) {
        let scores = model.raw_scores(x);
        for (c, s) in scores.into_iter().enumerate() {
            let sign = if c == t { 1.0 } else { -1.0 };
            let margin = sign * s;
            if margin < 1.0 {
                loss += (1.0 - margin) / n;
                grad.biases[c] -= sign / n;
                let row = &mut grad.weights[c];
                for &(j, v) in x.entries() {
                    row[j] -= sign * v / n;
                }
            }
        }
    }
    let penalty: f64 = model.weights.iter().flatten().map(|w| w * w).sum();
    (loss + 0.5 * lambda * penalty, grad)
}

fn apply_step(model: &mut LinearModel, grad: &Gradient, step: f64) {
    for (row, g) in model.weights.iter_mut().zip(&grad.weights) {
        for (w, gw) in row.iter_mut().zip(g) {
            *w -= step * gw;
        }
    }
    for (b, gb) in model.biases.iter_mut().zip(&grad.biases) {
        *b -= step * gb;
    }
}

fn targets_for(model: &LinearModel, ys: &[u8]) -> Vec<usize> {
    ys.iter()
        .map(|&y| model.class_index(y).expect("class list built from ys"))
        .collect()
}

/// Full-batch gradient descent on the multinomial logistic loss for up to
/// `epochs` updates. `epochs` may be zero, which returns the start point.
pub fn fit_logreg(
    xs: &[SparseVector],
    ys: &[u8],
    cfg: &TrainConfig,
    epochs: usize,
) -> Result<TrainOutcome> {
    let (classes, dim) = check_training_data(xs, ys)?;
    let mut model = initial_model(ModelKind::Logreg, classes, dim, cfg.warm_start.as_ref())?;
    let targets = targets_for(&model, ys);
    let mut losses = Vec::with_capacity(epochs + 1);
    let mut epochs_run = 0;
    for _ in 0..epochs {
        let (loss, grad) = logreg_objective(&model, xs, &targets, cfg.l2_lambda);
        if let Some(&prev) = losses.last() {
            if prev - loss < cfg.tolerance {
                losses.push(loss);
                return Ok(TrainOutcome {
                    model,
                    losses,
                    epochs_run,
                });
            }
        }
        losses.push(loss);
        apply_step(&mut model, &grad, cfg.learning_rate);
        epochs_run += 1;
    }
    losses.push(logreg_objective(&model, xs, &targets, cfg.l2_lambda).0);
    Ok(TrainOutcome {
        model,
        losses,
        epochs_run,
    })
}

/// One-vs-rest hinge loss by full-batch subgradient descent with step
/// `learning_rate / sqrt(t)` at update `t = 1, 2, ...`. Always runs every
/// epoch unless the subgradient vanishes.
pub fn fit_svm(
    xs: &[SparseVector],
    ys: &[u8],
    cfg: &TrainConfig,
    epochs: usize,
) -> Result<TrainOutcome> {
    let (classes, dim) = check_training_data(xs, ys)?;
    let mut model = initial_model(ModelKind::Svm, classes, dim, cfg.warm_start.as_ref())?;
    let targets = targets_for(&model, ys);
    let mut losses = Vec::with_capacity(epochs + 1);
    let mut epochs_run = 0;
    for t in 1..=epochs {
        let (loss, grad) = svm_objective(&model, xs, &targets, cfg.l2_lambda);
        losses.push(loss);
        let flat = grad.weights.iter().flatten().chain(&grad.biases);
        if flat.clone().all(|g| *g == 0.0) {
            return Ok(TrainOutcome {
                model,
                losses,
                epochs_run,
            });
        }
        apply_step(&mut model, &grad, cfg.learning_rate / (t as f64).sqrt());
        epochs_run += 1;
    }
    losses.push(svm_objective(&model, xs, &targets, cfg.l2_lambda).0);
    Ok(TrainOutcome {
        model,
        losses,
        epochs_run,
    })
}

pub fn train_logreg(xs: &[SparseVector], ys: &[u8], cfg: &TrainConfig) -> Result<LinearModel> {
    cfg.validate()?;
    Ok(fit_logreg(xs, ys, cfg, cfg.epochs)?.model)
}

pub fn train_svm(xs: &[SparseVector], ys: &[u8], cfg: &TrainConfig) -> Result<LinearModel> {
    cfg.validate()?;
    Ok(fit_svm(xs, ys, cfg, cfg.epochs)?.model)
}

pub fn train(kind: ModelKind, xs: &[SparseVector], ys: &[u8], cfg: &TrainConfig) -> Result<LinearModel> {
    match kind {
        ModelKind::Logreg => train_logreg(xs, ys, cfg),
        ModelKind::Svm => train_svm(xs, ys, cfg),
    }
}

/// Largest relative deviation between the analytic logistic-regression
/// gradient at `params` and central finite differences with step 1e-5.
pub fn gradient_check(
    xs: &[SparseVector],
    ys: &[u8],
    params: &LinearModel,
    lambda: f64,
) -> Result<f64> {
    const H: f64 = 1e-5;
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if let Some(bad) = xs.iter().find(|x| x.dim() != params.feature_dim) {
        return Err(Error::DimensionMismatch {
            expected: params.feature_dim,
            found: bad.dim(),
        });
    }
    let targets = ys
        .iter()
        .map(|&y| {
            params.class_index(y).ok_or(Error::UnknownClass {
                label: y as i64,
                classes: params.classes.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (_, analytic) = logreg_objective(params, xs, &targets, lambda);
    let loss_at = |m: &LinearModel| logreg_objective(m, xs, &targets, lambda).0;

    let deviation = |a: f64, numeric: f64| (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
    let mut worst: f64 = 0.0;
    let mut probe = params.clone();
    for c in 0..params.classes.len() {
        for j in 0..params.feature_dim {
            let orig = probe.weights[c][j];
            probe.weights[c][j] = orig + H;
            let plus = loss_at(&probe);
            probe.weights[c][j] = orig - H;
            let minus = loss_at(&probe);
            probe.weights[c][j] = orig;
            worst = worst.max(deviation(analytic.weights[c][j], (plus - minus) / (2.0 * H)));
        }
        let orig = probe.biases[c];
        probe.biases[c] = orig + H;
        let plus = loss_at(&probe);
        probe.biases[c] = orig - H;
        let minus = loss_at(&probe);
        probe.biases[c] = orig;
        worst = worst.max(deviation(analytic.biases[c], (plus - minus) / (2.0 * H)));
    }
    Ok(worst)
}
