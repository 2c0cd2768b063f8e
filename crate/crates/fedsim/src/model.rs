//! Parameter vectors, desk-scale models, losses, and gradients.
//!
//! Three model kinds are supported: linear regression (squared error),
//! multinomial logistic regression, and a one-hidden-layer tanh MLP
//! (both cross-entropy). All gradients are hand-derived and checked against
//! central finite differences in the test suite.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Flat vector of 64-bit model parameters; the unit of aggregation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn check_finite(&self, context: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::Diverged(format!("non-finite parameter in {context}")))
        }
    }

    /// `self += scale * other`
    pub fn add_scaled(&mut self, other: &ParamVector, scale: f64) {
        debug_assert_eq!(self.dim(), other.dim());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += scale * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for a in &mut self.0 {
            *a *= s;
        }
    }

    /// `self - other`
    pub fn sub(&self, other: &ParamVector) -> ParamVector {
        debug_assert_eq!(self.dim(), other.dim());
        ParamVector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// `self + other`
    pub fn add(&self, other: &ParamVector) -> ParamVector {
        debug_assert_eq!(self.dim(), other.dim());
        ParamVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn dot(&self, other: &ParamVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

/// Which model family a parameter vector instantiates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Linreg,
    Logreg,
    Mlp1,
}

/// Model family plus layer dimensions; fixes the parameter count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub input_dim: usize,
    pub num_classes: usize,
    /// Hidden width; only meaningful for `Mlp1`.
    #[serde(default)]
    pub hidden_dim: usize,
}

impl ModelSpec {
    pub fn linreg(input_dim: usize) -> Self {
        Self { kind: ModelKind::Linreg, input_dim, num_classes: 1, hidden_dim: 0 }
    }

    pub fn logreg(input_dim: usize, num_classes: usize) -> Self {
        Self { kind: ModelKind::Logreg, input_dim, num_classes, hidden_dim: 0 }
    }

    pub fn mlp1(input_dim: usize, hidden_dim: usize, num_classes: usize) -> Self {
        Self { kind: ModelKind::Mlp1, input_dim, num_classes, hidden_dim }
    }

    /// Closed-form parameter count for this spec.
    pub fn param_count(&self) -> usize {
        let d = self.input_dim;
        let c = self.num_classes;
        let h = self.hidden_dim;
        match self.kind {
            ModelKind::Linreg => d + 1,
            ModelKind::Logreg => c * d + c,
            ModelKind::Mlp1 => h * d + h + c * h + c,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::Config("model input_dim must be positive".into()));
        }
        match self.kind {
            ModelKind::Linreg => Ok(()),
            ModelKind::Logreg => {
                if self.num_classes < 2 {
                    Err(Error::Config("logreg needs at least 2 classes".into()))
                } else {
                    Ok(())
                }
            }
            ModelKind::Mlp1 => {
                if self.num_classes < 2 {
                    Err(Error::Config("mlp1 needs at least 2 classes".into()))
                } else if self.hidden_dim == 0 {
                    Err(Error::Config("mlp1 needs hidden_dim >= 1".into()))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// A model spec bound to a concrete parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub spec: ModelSpec,
    pub params: ParamVector,
}

impl Model {
    pub fn new(spec: ModelSpec, params: ParamVector) -> Result<Self> {
        spec.validate()?;
        if params.dim() != spec.param_count() {
            return Err(Error::Shape(format!(
                "params dim {} does not match spec count {}",
                params.dim(),
                spec.param_count()
            )));
        }
        Ok(Self { spec, params })
    }

    pub fn zeros(spec: ModelSpec) -> Result<Self> {
        let dim = spec.param_count();
        Self::new(spec, ParamVector::zeros(dim))
    }
}

/// Regression targets or class indices for a batch.
#[derive(Clone, Debug, PartialEq)]
pub enum Targets {
    Real(Vec<f64>),
    Class(Vec<u32>),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Real(v) => v.len(),
            Targets::Class(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn gather(&self, ids: &[usize]) -> Targets {
        match self {
            Targets::Real(v) => Targets::Real(ids.iter().map(|&i| v[i]).collect()),
            Targets::Class(v) => Targets::Class(ids.iter().map(|&i| v[i]).collect()),
        }
    }
}

/// One minibatch of samples.
#[derive(Clone, Debug)]
pub struct Batch {
    pub features: Matrix,
    pub targets: Targets,
}

impl Batch {
    pub fn new(features: Matrix, targets: Targets) -> Result<Self> {
        if features.rows() == 0 {
            return Err(Error::Shape("batch must contain at least one sample".into()));
        }
        if features.rows() != targets.len() {
            return Err(Error::Shape(format!(
                "{} feature rows vs {} targets",
                features.rows(),
                targets.len()
            )));
        }
        if !features.is_finite() {
            return Err(Error::Shape("batch features contain non-finite values".into()));
        }
        Ok(Self { features, targets })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn check_dims(model: &Model, batch: &Batch) -> Result<()> {
    if batch.features.cols() != model.spec.input_dim {
        return Err(Error::Shape(format!(
            "batch has {} feature columns, model expects {}",
            batch.features.cols(),
            model.spec.input_dim
        )));
    }
    match (&batch.targets, model.spec.kind) {
        (Targets::Real(_), ModelKind::Linreg) => Ok(()),
        (Targets::Class(cls), ModelKind::Logreg | ModelKind::Mlp1) => {
            let c = model.spec.num_classes as u32;
            if let Some(bad) = cls.iter().find(|&&y| y >= c) {
                return Err(Error::Shape(format!("class index {bad} >= num_classes {c}")));
            }
            Ok(())
        }
        (t, k) => Err(Error::Shape(format!("target type {t:?} incompatible with model kind {k:?}"))),
    }
}

/// Mean loss of `model` over `batch`.
pub fn loss(model: &Model, batch: &Batch) -> Result<f64> {
    check_dims(model, batch)?;
    let value = match model.spec.kind {
        ModelKind::Linreg => linreg_loss(model, batch),
        ModelKind::Logreg => logreg_loss(model, batch),
        ModelKind::Mlp1 => mlp1_loss(model, batch),
    };
    if !value.is_finite() {
        return Err(Error::Diverged(format!("loss is not finite: {value}")));
    }
    Ok(value)
}

/// Gradient of the mean loss w.r.t. the parameters; same dim as `params`.
pub fn gradient(model: &Model, batch: &Batch) -> Result<ParamVector> {
    check_dims(model, batch)?;
    let grad = match model.spec.kind {
        ModelKind::Linreg => linreg_grad(model, batch),
        ModelKind::Logreg => logreg_grad(model, batch),
        ModelKind::Mlp1 => mlp1_grad(model, batch),
    };
    debug_assert_eq!(grad.dim(), model.params.dim());
    Ok(grad)
}

/// Class predictions (argmax of the class scores; ties pick the lower index).
pub fn predict_class(model: &Model, features: &Matrix) -> Result<Vec<u32>> {
    if features.cols() != model.spec.input_dim {
        return Err(Error::Shape("feature width mismatch in predict".into()));
    }
    let c = model.spec.num_classes;
    let mut out = Vec::with_capacity(features.rows());
    for i in 0..features.rows() {
        let logits = match model.spec.kind {
            ModelKind::Logreg => logreg_logits(model, features.row(i)),
            ModelKind::Mlp1 => mlp1_forward(model, features.row(i)).logits,
            ModelKind::Linreg => {
                return Err(Error::Shape("predict_class unsupported for linreg".into()))
            }
        };
        let mut best = 0usize;
        for j in 1..c {
            if logits[j] > logits[best] {
                best = j;
            }
        }
        out.push(best as u32);
    }
    Ok(out)
}

// ---- linreg -------------------------------------------------------------

fn linreg_pred(model: &Model, x: &[f64]) -> f64 {
    let d = model.spec.input_dim;
    let p = model.params.values();
    let mut acc = p[d]; // bias
    for j in 0..d {
        acc += p[j] * x[j];
    }
    acc
}

fn linreg_loss(model: &Model, batch: &Batch) -> f64 {
    let Targets::Real(targets) = &batch.targets else { unreachable!() };
    let n = batch.len() as f64;
    let mut acc = 0.0;
    for i in 0..batch.len() {
        let r = linreg_pred(model, batch.features.row(i)) - targets[i];
        acc += r * r;
    }
    acc / n
}

fn linreg_grad(model: &Model, batch: &Batch) -> ParamVector {
    let Targets::Real(targets) = &batch.targets else { unreachable!() };
    let d = model.spec.input_dim;
    let n = batch.len() as f64;
    let mut g = vec![0.0; d + 1];
    for i in 0..batch.len() {
        let x = batch.features.row(i);
        let coeff = 2.0 * (linreg_pred(model, x) - targets[i]) / n;
        for j in 0..d {
            g[j] += coeff * x[j];
        }
        g[d] += coeff;
    }
    ParamVector(g)
}

// ---- logreg -------------------------------------------------------------

fn logreg_logits(model: &Model, x: &[f64]) -> Vec<f64> {
    let d = model.spec.input_dim;
    let c = model.spec.num_classes;
    let p = model.params.values();
    let (w, b) = p.split_at(c * d);
    let mut logits = vec![0.0; c];
    for k in 0..c {
        let row = &w[k * d..(k + 1) * d];
        let mut acc = b[k];
        for j in 0..d {
            acc += row[j] * x[j];
        }
        logits[k] = acc;
    }
    logits
}

/// Softmax probabilities and the stabilized log-partition value.
fn softmax(logits: &[f64]) -> (Vec<f64>, f64) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut exp_sum = 0.0;
    let mut probs = vec![0.0; logits.len()];
    for (p, &z) in probs.iter_mut().zip(logits) {
        *p = (z - max).exp();
        exp_sum += *p;
    }
    for p in &mut probs {
        *p /= exp_sum;
    }
    (probs, max + exp_sum.ln())
}

fn logreg_loss(model: &Model, batch: &Batch) -> f64 {
    let Targets::Class(targets) = &batch.targets else { unreachable!() };
    let n = batch.len() as f64;
    let mut acc = 0.0;
    for i in 0..batch.len() {
        let logits = logreg_logits(model, batch.features.row(i));
        let (_, lse) = softmax(&logits);
        acc += lse - logits[targets[i] as usize];
    }
    acc / n
}

fn logreg_grad(model: &Model, batch: &Batch) -> ParamVector {
    let Targets::Class(targets) = &batch.targets else { unreachable!() };
    let d = model.spec.input_dim;
    let c = model.spec.num_classes;
    let n = batch.len() as f64;
    let mut g = vec![0.0; c * d + c];
    for i in 0..batch.len() {
        let x = batch.features.row(i);
        let (probs, _) = softmax(&logreg_logits(model, x));
        for k in 0..c {
            let err = (probs[k] - f64::from(targets[i] as u32 == k as u32)) / n;
            for j in 0..d {
                g[k * d + j] += err * x[j];
            }
            g[c * d + k] += err;
        }
    }
    ParamVector(g)
}

// ---- mlp1 (tanh hidden layer) --------------------------------------------

struct MlpForward {
    hidden: Vec<f64>,
    logits: Vec<f64>,
}

/// Parameter block offsets: W1 [h*d], b1 [h], W2 [c*h], b2 [c].
fn mlp1_offsets(spec: &ModelSpec) -> (usize, usize, usize) {
    let (d, h, c) = (spec.input_dim, spec.hidden_dim, spec.num_classes);
    let b1 = h * d;
    let w2 = b1 + h;
    let b2 = w2 + c * h;
    (b1, w2, b2)
}

fn mlp1_forward(model: &Model, x: &[f64]) -> MlpForward {
    let spec = &model.spec;
    let (d, h, c) = (spec.input_dim, spec.hidden_dim, spec.num_classes);
    let (ob1, ow2, ob2) = mlp1_offsets(spec);
    let p = model.params.values();
    let mut hidden = vec![0.0; h];
    for k in 0..h {
        let mut acc = p[ob1 + k];
        let row = &p[k * d..(k + 1) * d];
        for j in 0..d {
            acc += row[j] * x[j];
        }
        hidden[k] = acc.tanh();
    }
    let mut logits = vec![0.0; c];
    for m in 0..c {
        let mut acc = p[ob2 + m];
        let row = &p[ow2 + m * h..ow2 + (m + 1) * h];
        for k in 0..h {
            acc += row[k] * hidden[k];
        }
        logits[m] = acc;
    }
    MlpForward { hidden, logits }
}

fn mlp1_loss(model: &Model, batch: &Batch) -> f64 {
    let Targets::Class(targets) = &batch.targets else { unreachable!() };
    let n = batch.len() as f64;
    let mut acc = 0.0;
    for i in 0..batch.len() {
        let fwd = mlp1_forward(model, batch.features.row(i));
        let (_, lse) = softmax(&fwd.logits);
        acc += lse - fwd.logits[targets[i] as usize];
    }
    acc / n
}

fn mlp1_grad(model: &Model, batch: &Batch) -> ParamVector {
    let Targets::Class(targets) = &batch.targets else { unreachable!() };
    let spec = &model.spec;
    let (d, h, c) = (spec.input_dim, spec.hidden_dim, spec.num_classes);
    let (ob1, ow2, ob2) = mlp1_offsets(spec);
    let p = model.params.values();
    let n = batch.len() as f64;
    let mut g = vec![0.0; model.params.dim()];
    for i in 0..batch.len() {
        let x = batch.features.row(i);
        let fwd = mlp1_forward(model, x);
        let (probs, _) = softmax(&fwd.logits);
        // output layer
        let mut dhidden = vec![0.0; h];
        for m in 0..c {
            let dlogit = (probs[m] - f64::from(targets[i] as usize == m)) / n;
            for k in 0..h {
                g[ow2 + m * h + k] += dlogit * fwd.hidden[k];
                dhidden[k] += dlogit * p[ow2 + m * h + k];
            }
            g[ob2 + m] += dlogit;
        }
        // hidden layer through tanh
        for k in 0..h {
            let dz = dhidden[k] * (1.0 - fwd.hidden[k] * fwd.hidden[k]);
            for j in 0..d {
                g[k * d + j] += dz * x[j];
            }
            g[ob1 + k] += dz;
        }
    }
    ParamVector(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn seeded_params(dim: usize, seed: u64, scale: f64) -> ParamVector {
        let mut r = rng::stream(seed, rng::tag::MODEL_INIT, 0, 0);
        ParamVector::from_vec((0..dim).map(|_| scale * (r.random::<f64>() - 0.5)).collect())
    }

    fn seeded_batch(n: usize, d: usize, classes: Option<usize>, seed: u64) -> Batch {
        let mut r = rng::stream(seed, rng::tag::BENCH, 1, 0);
        let rows: Vec<Vec<f64>> =
            (0..n).map(|_| (0..d).map(|_| r.random::<f64>() * 2.0 - 1.0).collect()).collect();
        let targets = match classes {
            Some(c) => {
                Targets::Class((0..n).map(|_| r.random_range(0..c as u32)).collect())
            }
            None => Targets::Real((0..n).map(|_| r.random::<f64>() * 2.0 - 1.0).collect()),
        };
        Batch::new(Matrix::from_rows(rows).unwrap(), targets).unwrap()
    }

    #[test]
    fn linreg_zero_params_zero_targets_zero_loss() {
        let spec = ModelSpec::linreg(3);
        let model = Model::zeros(spec).unwrap();
        let batch = Batch::new(
            Matrix::from_rows(vec![vec![1.0, 2.0, 3.0], vec![-1.0, 0.5, 2.0]]).unwrap(),
            Targets::Real(vec![0.0, 0.0]),
        )
        .unwrap();
        assert_eq!(loss(&model, &batch).unwrap(), 0.0);
        let g = gradient(&model, &batch).unwrap();
        assert!(g.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn logreg_zero_params_uniform_softmax_loss() {
        let spec = ModelSpec::logreg(4, 2);
        let model = Model::zeros(spec).unwrap();
        let batch = seeded_batch(6, 4, Some(2), 11);
        let l = loss(&model, &batch).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn logreg_single_sample_closed_form_gradient() {
        // zero params, 2 classes: grad_W = (softmax - onehot) ⊗ x with softmax (0.5, 0.5)
        let spec = ModelSpec::logreg(3, 2);
        let model = Model::zeros(spec).unwrap();
        let x = vec![0.5, -1.5, 2.0];
        let batch = Batch::new(
            Matrix::from_rows(vec![x.clone()]).unwrap(),
            Targets::Class(vec![0]),
        )
        .unwrap();
        let g = gradient(&model, &batch).unwrap();
        let gv = g.values();
        for j in 0..3 {
            assert!((gv[j] - (0.5 - 1.0) * x[j]).abs() < 1e-15, "W row 0");
            assert!((gv[3 + j] - 0.5 * x[j]).abs() < 1e-15, "W row 1");
        }
        assert!((gv[6] - (-0.5)).abs() < 1e-15);
        assert!((gv[7] - 0.5).abs() < 1e-15);
    }

    /// Independent scalar re-implementation of the MLP forward pass:
    /// per-sample, index-by-index, no shared code with `mlp1_loss`.
    fn mlp_forward_oracle(params: &[f64], d: usize, h: usize, c: usize, x: &[f64], y: usize) -> f64 {
        let mut hidden = Vec::new();
        for k in 0..h {
            let mut z = params[h * d + k];
            for j in 0..d {
                z += params[k * d + j] * x[j];
            }
            hidden.push(z.tanh());
        }
        let mut logits = Vec::new();
        for m in 0..c {
            let mut z = params[h * d + h + c * h + m];
            for k in 0..h {
                z += params[h * d + h + m * h + k] * hidden[k];
            }
            logits.push(z);
        }
        let denom: f64 = logits.iter().map(|z| z.exp()).sum();
        -(logits[y].exp() / denom).ln()
    }

    #[test]
    fn mlp_loss_matches_hand_rolled_forward_oracle() {
        let (d, h, c) = (4, 3, 3);
        let spec = ModelSpec::mlp1(d, h, c);
        let params = seeded_params(spec.param_count(), 99, 1.0);
        let model = Model::new(spec, params).unwrap();
        let batch = seeded_batch(3, d, Some(c), 7);
        let Targets::Class(ys) = &batch.targets else { unreachable!() };
        let mut expect = 0.0;
        for i in 0..batch.len() {
            expect += mlp_forward_oracle(
                model.params.values(),
                d,
                h,
                c,
                batch.features.row(i),
                ys[i] as usize,
            );
        }
        expect /= batch.len() as f64;
        let got = loss(&model, &batch).unwrap();
        assert!((got - expect).abs() < 1e-12, "got {got}, oracle {expect}");
    }

    /// Central finite differences with step 1e-5, per coordinate.
    pub(crate) fn finite_diff_check(model: &Model, batch: &Batch) {
        let g = gradient(model, batch).unwrap();
        let step = 1e-5;
        for j in 0..model.params.dim() {
            let mut plus = model.clone();
            plus.params.values_mut()[j] += step;
            let mut minus = model.clone();
            minus.params.values_mut()[j] -= step;
            let fd = (loss(&plus, batch).unwrap() - loss(&minus, batch).unwrap()) / (2.0 * step);
            let gj = g.values()[j];
            let tol = 1e-6f64.max(1e-4 * gj.abs().max(fd.abs()));
            assert!(
                (gj - fd).abs() <= tol,
                "coord {j}: grad {gj} vs fd {fd} (kind {:?})",
                model.spec.kind
            );
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..8u64 {
            let specs = [
                ModelSpec::linreg(4),
                ModelSpec::logreg(4, 3),
                ModelSpec::mlp1(4, 3, 3),
            ];
            for spec in specs {
                let params = seeded_params(spec.param_count(), seed + 1, 1.5);
                let model = Model::new(spec, params).unwrap();
                let classes =
                    if spec.kind == ModelKind::Linreg { None } else { Some(spec.num_classes) };
                let batch = seeded_batch(5, spec.input_dim, classes, seed + 100);
                finite_diff_check(&model, &batch);
            }
        }
    }

    #[test]
    fn losses_are_non_negative() {
        for seed in 0..20u64 {
            let spec = ModelSpec::logreg(3, 4);
            let model =
                Model::new(spec, seeded_params(spec.param_count(), seed, 2.0)).unwrap();
            let batch = seeded_batch(4, 3, Some(4), seed);
            assert!(loss(&model, &batch).unwrap() >= 0.0);

            let lspec = ModelSpec::linreg(3);
            let lmodel =
                Model::new(lspec, seeded_params(lspec.param_count(), seed, 2.0)).unwrap();
            let lbatch = seeded_batch(4, 3, None, seed);
            assert!(loss(&lmodel, &lbatch).unwrap() >= 0.0);
        }
    }

    #[test]
    fn dimension_mismatch_is_shape_error() {
        let model = Model::zeros(ModelSpec::linreg(3)).unwrap();
        let batch = seeded_batch(2, 4, None, 5);
        assert!(matches!(loss(&model, &batch), Err(Error::Shape(_))));
        let cls_batch = seeded_batch(2, 3, Some(2), 5);
        assert!(matches!(loss(&model, &cls_batch), Err(Error::Shape(_))));
    }
}
