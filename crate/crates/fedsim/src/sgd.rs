//! Minibatch SGD over an indexed sample objective.
//!
//! The local solver shared by every algorithm. Supports a proximal term
//! (FedProx) and a constant gradient correction (Scaffold control variates).

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{gradient, loss, Batch, Model, ModelSpec, ParamVector, Targets};

/// A differentiable mean objective over an indexed sample set.
pub trait Objective {
    fn param_dim(&self) -> usize;
    fn num_samples(&self) -> usize;
    /// Mean loss over the given sample indices.
    fn loss(&self, params: &ParamVector, sample_ids: &[usize]) -> Result<f64>;
    /// Gradient of the mean loss over the given sample indices.
    fn gradient(&self, params: &ParamVector, sample_ids: &[usize]) -> Result<ParamVector>;
}

/// Proximal regularizer `mu/2 * ||params - anchor||^2` added to the objective.
#[derive(Clone, Debug)]
pub struct Prox {
    pub mu: f64,
    pub anchor: ParamVector,
}

#[derive(Clone, Debug)]
pub struct SgdConfig {
    pub lr: f64,
    pub steps: usize,
    pub batch_size: usize,
    pub prox: Option<Prox>,
    /// Constant vector added to every gradient (Scaffold's `c - c_i`).
    pub correction: Option<ParamVector>,
}

impl SgdConfig {
    pub fn plain(lr: f64, steps: usize, batch_size: usize) -> Self {
        Self { lr, steps, batch_size, prox: None, correction: None }
    }
}

/// Runs `cfg.steps` minibatch SGD steps from `start`.
///
/// Sample order is a fresh shuffle of all indices at each epoch boundary,
/// drawn from `rng`; with a stream keyed on (runner seed, client, round) the
/// result is bitwise reproducible.
pub fn sgd_steps(
    objective: &dyn Objective,
    start: &ParamVector,
    cfg: &SgdConfig,
    rng: &mut ChaCha8Rng,
) -> Result<ParamVector> {
    if cfg.lr <= 0.0 {
        return Err(Error::Config(format!("learning rate must be positive, got {}", cfg.lr)));
    }
    if cfg.batch_size == 0 {
        return Err(Error::Config("batch_size must be positive".into()));
    }
    if start.dim() != objective.param_dim() {
        return Err(Error::Shape(format!(
            "start params dim {} vs objective dim {}",
            start.dim(),
            objective.param_dim()
        )));
    }
    let n = objective.num_samples();
    if n == 0 {
        return Err(Error::Shape("objective has no samples".into()));
    }

    let batch = cfg.batch_size.min(n);
    let steps_per_epoch = n.div_ceil(batch);
    let mut order: Vec<usize> = (0..n).collect();
    let mut params = start.clone();

    for step in 0..cfg.steps {
        let pos = step % steps_per_epoch;
        if pos == 0 {
            order.shuffle(rng);
        }
        let lo = pos * batch;
        let hi = (lo + batch).min(n);
        let mut grad = objective.gradient(&params, &order[lo..hi])?;
        if let Some(prox) = &cfg.prox {
            // g += mu * (params - anchor)
            for ((g, p), a) in grad
                .values_mut()
                .iter_mut()
                .zip(params.values())
                .zip(prox.anchor.values())
            {
                *g += prox.mu * (p - a);
            }
        }
        if let Some(corr) = &cfg.correction {
            grad.add_scaled(corr, 1.0);
        }
        params.add_scaled(&grad, -cfg.lr);
        params.check_finite("sgd step")?;
    }
    Ok(params)
}

/// Wrapper keeping the model-typed contract for the supervised kinds.
pub fn sgd_steps_model(
    model: &Model,
    data: &SupervisedData,
    cfg: &SgdConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Model> {
    let objective = SupervisedObjective { spec: model.spec, data };
    let params = sgd_steps(&objective, &model.params, cfg, rng)?;
    Model::new(model.spec, params)
}

/// A client's local supervised samples.
#[derive(Clone, Debug)]
pub struct SupervisedData {
    pub features: Matrix,
    pub targets: Targets,
}

impl SupervisedData {
    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn batch(&self, ids: &[usize]) -> Result<Batch> {
        Batch::new(self.features.gather(ids), self.targets.gather(ids))
    }
}

/// `Objective` view over a model spec plus local samples.
pub struct SupervisedObjective<'a> {
    pub spec: ModelSpec,
    pub data: &'a SupervisedData,
}

impl Objective for SupervisedObjective<'_> {
    fn param_dim(&self) -> usize {
        self.spec.param_count()
    }

    fn num_samples(&self) -> usize {
        self.data.len()
    }

    fn loss(&self, params: &ParamVector, sample_ids: &[usize]) -> Result<f64> {
        let model = Model::new(self.spec, params.clone())?;
        loss(&model, &self.data.batch(sample_ids)?)
    }

    fn gradient(&self, params: &ParamVector, sample_ids: &[usize]) -> Result<ParamVector> {
        let model = Model::new(self.spec, params.clone())?;
        gradient(&model, &self.data.batch(sample_ids)?)
    }
}
