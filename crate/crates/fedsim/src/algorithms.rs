//! Server aggregation strategies and client local-training procedures for
//! FedAvg, FedProx, Scaffold, FedNova, and FedAsync.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ParamVector;
use crate::sgd::{sgd_steps, Objective, Prox, SgdConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmKind {
    FedAvg,
    FedProx,
    Scaffold,
    FedNova,
    FedAsync,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 5] = [
        AlgorithmKind::FedAvg,
        AlgorithmKind::FedProx,
        AlgorithmKind::Scaffold,
        AlgorithmKind::FedNova,
        AlgorithmKind::FedAsync,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmKind::FedAvg => "fedavg",
            AlgorithmKind::FedProx => "fedprox",
            AlgorithmKind::Scaffold => "scaffold",
            AlgorithmKind::FedNova => "fednova",
            AlgorithmKind::FedAsync => "fedasync",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|a| a.name() == name)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|a| a.name()).collect();
                Error::Config(format!(
                    "unknown algorithm '{name}'; available: {}",
                    names.join(", ")
                ))
            })
    }

    pub fn is_async(&self) -> bool {
        matches!(self, AlgorithmKind::FedAsync)
    }
}

fn default_proportion() -> f64 {
    1.0
}

fn default_epochs() -> usize {
    1
}

fn default_batch_size() -> usize {
    50
}

fn default_mu() -> f64 {
    0.1
}

fn default_eta_g() -> f64 {
    1.0
}

fn default_alpha() -> f64 {
    0.6
}

fn default_staleness_exp() -> f64 {
    0.5
}

/// Hyperparameters shared by all algorithms, plus per-algorithm extras.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgoConfig {
    pub name: AlgorithmKind,
    pub lr: f64,
    pub rounds: usize,
    /// Fraction of clients requested each round.
    #[serde(default = "default_proportion")]
    pub proportion: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    /// FedProx proximal weight.
    #[serde(default = "default_mu")]
    pub mu: f64,
    /// Scaffold server learning rate.
    #[serde(default = "default_eta_g")]
    pub eta_g: f64,
    /// FedAsync base mixing weight.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// FedAsync polynomial staleness exponent.
    #[serde(default = "default_staleness_exp")]
    pub staleness_exp: f64,
}

impl AlgoConfig {
    pub fn new(name: AlgorithmKind, lr: f64, rounds: usize) -> Self {
        Self {
            name,
            lr,
            rounds,
            proportion: default_proportion(),
            epochs: default_epochs(),
            batch_size: default_batch_size(),
            mu: default_mu(),
            eta_g: default_eta_g(),
            alpha: default_alpha(),
            staleness_exp: default_staleness_exp(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lr <= 0.0 {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        if !(self.proportion > 0.0 && self.proportion <= 1.0) {
            return Err(Error::Config(format!(
                "proportion must be in (0, 1], got {}",
                self.proportion
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.mu < 0.0 {
            return Err(Error::Config("mu must be >= 0".into()));
        }
        if self.eta_g <= 0.0 {
            return Err(Error::Config("eta_g must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!("alpha must be in (0, 1], got {}", self.alpha)));
        }
        if self.staleness_exp < 0.0 {
            return Err(Error::Config("staleness_exp must be >= 0".into()));
        }
        Ok(())
    }

    /// Planned local steps for a client with `n` samples.
    pub fn planned_steps(&self, n: usize) -> usize {
        self.epochs * n.div_ceil(self.batch_size.min(n.max(1)))
    }
}

/// A client's locally computed model change, ready for aggregation.
#[derive(Clone, Debug, PartialEq)]
pub struct ClientUpdate {
    pub client_id: usize,
    /// Local params minus the received global params.
    pub delta: ParamVector,
    /// Completed local steps (tau_k for FedNova).
    pub num_steps: usize,
    pub num_samples: usize,
    /// Server aggregation count when the work was dispatched.
    pub round_sent: u64,
    /// Scaffold: the client's updated control variate minus its previous one.
    pub variate_shift: Option<ParamVector>,
}

/// Server-side algorithm state carried across rounds.
#[derive(Clone, Debug)]
pub struct ServerState {
    pub global: ParamVector,
    /// Completed aggregations (the round counter for staleness).
    pub agg_count: u64,
    /// Scaffold server control variate.
    pub control: Option<ParamVector>,
    /// Scaffold per-client control variates.
    pub client_controls: Vec<ParamVector>,
}

impl ServerState {
    pub fn new(global: ParamVector, num_clients: usize, kind: AlgorithmKind) -> Self {
        let dim = global.dim();
        let (control, client_controls) = if kind == AlgorithmKind::Scaffold {
            (Some(ParamVector::zeros(dim)), vec![ParamVector::zeros(dim); num_clients])
        } else {
            (None, Vec::new())
        };
        Self { global, agg_count: 0, control, client_controls }
    }
}

/// Local training: `completed_steps` minibatch SGD steps from the received
/// global model. FedProx anchors a proximal term at the global; Scaffold adds
/// the control-variate correction `c - c_i` and reports the variate shift.
#[allow(clippy::too_many_arguments)]
pub fn local_train(
    kind: AlgorithmKind,
    global: &ParamVector,
    objective: &dyn Objective,
    cfg: &AlgoConfig,
    completed_steps: usize,
    control: Option<(&ParamVector, &ParamVector)>,
    seed: u64,
    client_id: u64,
    round: u64,
) -> Result<ClientUpdate> {
    let mut sgd_cfg = SgdConfig::plain(cfg.lr, completed_steps, cfg.batch_size);
    match kind {
        AlgorithmKind::FedProx => {
            sgd_cfg.prox = Some(Prox { mu: cfg.mu, anchor: global.clone() });
        }
        AlgorithmKind::Scaffold => {
            let (c, c_i) = control.ok_or_else(|| {
                Error::Config("scaffold local training needs control variates".into())
            })?;
            sgd_cfg.correction = Some(c.sub(c_i));
        }
        _ => {}
    }
    let mut stream = crate::rng::stream(seed, crate::rng::tag::TRAIN, client_id, round);
    let trained = sgd_steps(objective, global, &sgd_cfg, &mut stream)?;
    let delta = trained.sub(global);

    let variate_shift = if kind == AlgorithmKind::Scaffold {
        let (c, _) = control.expect("checked above");
        // c_i+ = c_i - c + (x - y) / (K * lr)  =>  shift = -c - delta/(K*lr)
        let mut shift = ParamVector::zeros(delta.dim());
        shift.add_scaled(&delta, -1.0 / (completed_steps as f64 * cfg.lr));
        shift.add_scaled(c, -1.0);
        Some(shift)
    } else {
        None
    };

    Ok(ClientUpdate {
        client_id: client_id as usize,
        delta,
        num_steps: completed_steps,
        num_samples: objective.num_samples(),
        round_sent: round,
        variate_shift,
    })
}

/// FedAvg: `theta += sum_k (n_k / sum n) * delta_k`, weights over received
/// updates only.
pub fn aggregate_weighted(global: &mut ParamVector, updates: &[ClientUpdate]) -> Result<()> {
    if updates.is_empty() {
        return Err(Error::Config("aggregate called with no updates".into()));
    }
    let total: f64 = updates.iter().map(|u| u.num_samples as f64).sum();
    for u in updates {
        global.add_scaled(&u.delta, u.num_samples as f64 / total);
    }
    global.check_finite("aggregate_weighted")
}

/// FedNova: normalized averaging, `x += tau_eff * sum_k p_k * (delta_k / tau_k)`
/// with `tau_eff = sum_k p_k tau_k`.
pub fn fednova_aggregate(global: &mut ParamVector, updates: &[ClientUpdate]) -> Result<()> {
    if updates.is_empty() {
        return Err(Error::Config("aggregate called with no updates".into()));
    }
    let total: f64 = updates.iter().map(|u| u.num_samples as f64).sum();
    let tau_eff: f64 = updates
        .iter()
        .map(|u| (u.num_samples as f64 / total) * u.num_steps as f64)
        .sum();
    for u in updates {
        let p = u.num_samples as f64 / total;
        global.add_scaled(&u.delta, tau_eff * p / u.num_steps as f64);
    }
    global.check_finite("fednova_aggregate")
}

/// Scaffold server step: `x += eta_g * mean(delta_k)`,
/// `c += (|S|/N) * mean(c_i+ - c_i)`, and per-client variates persisted.
pub fn scaffold_aggregate(state: &mut ServerState, updates: &[ClientUpdate], eta_g: f64) -> Result<()> {
    if updates.is_empty() {
        return Err(Error::Config("aggregate called with no updates".into()));
    }
    let control = state
        .control
        .as_mut()
        .ok_or_else(|| Error::Config("scaffold aggregation without server control".into()))?;
    let m = updates.len() as f64;
    let n = state.client_controls.len() as f64;
    let mut mean_shift = ParamVector::zeros(state.global.dim());
    for u in updates {
        state.global.add_scaled(&u.delta, eta_g / m);
        let shift = u
            .variate_shift
            .as_ref()
            .ok_or_else(|| Error::Config("scaffold update missing variate shift".into()))?;
        mean_shift.add_scaled(shift, 1.0 / m);
        state.client_controls[u.client_id].add_scaled(shift, 1.0);
    }
    control.add_scaled(&mean_shift, m / n);
    state.global.check_finite("scaffold_aggregate")
}

/// FedAsync mixing weight `alpha_t = alpha * (1 + staleness)^(-a)`.
pub fn fedasync_weight(alpha: f64, staleness_exp: f64, staleness: u64) -> f64 {
    alpha * (1.0 + staleness as f64).powf(-staleness_exp)
}

/// FedAsync: immediately mixes one arriving update into the global model.
///
/// `model_sent` is the global model the client trained from;
/// `theta <- (1 - alpha_t) * theta + alpha_t * (model_sent + delta)`.
pub fn fedasync_apply(
    state: &mut ServerState,
    update: &ClientUpdate,
    model_sent: &ParamVector,
    cfg: &AlgoConfig,
) -> Result<()> {
    let staleness = state.agg_count.saturating_sub(update.round_sent);
    let alpha_t = fedasync_weight(cfg.alpha, cfg.staleness_exp, staleness);
    let client_model = model_sent.add(&update.delta);
    state.global.scale(1.0 - alpha_t);
    state.global.add_scaled(&client_model, alpha_t);
    state.agg_count += 1;
    state.global.check_finite("fedasync_apply")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn update(id: usize, delta: Vec<f64>, steps: usize, samples: usize) -> ClientUpdate {
        ClientUpdate {
            client_id: id,
            delta: ParamVector::from_vec(delta),
            num_steps: steps,
            num_samples: samples,
            round_sent: 0,
            variate_shift: None,
        }
    }

    #[test]
    fn single_update_applies_delta() {
        let mut global = ParamVector::from_vec(vec![1.0, 2.0]);
        aggregate_weighted(&mut global, &[update(0, vec![0.5, -1.0], 1, 10)]).unwrap();
        assert_eq!(global.values(), &[1.5, 1.0]);
    }

    #[test]
    fn opposite_deltas_cancel() {
        let mut global = ParamVector::from_vec(vec![3.0]);
        let ups = [update(0, vec![2.0], 1, 5), update(1, vec![-2.0], 1, 5)];
        aggregate_weighted(&mut global, &ups).unwrap();
        assert_eq!(global.values(), &[3.0]);
    }

    #[test]
    fn weighted_mean_matches_hand_value() {
        // weights (3, 1), deltas (4, 0), theta = 0 -> 0.75 * 4 = 3
        let mut global = ParamVector::from_vec(vec![0.0]);
        let ups = [update(0, vec![4.0], 1, 3), update(1, vec![0.0], 1, 1)];
        aggregate_weighted(&mut global, &ups).unwrap();
        assert_eq!(global.values(), &[3.0]);
    }

    #[test]
    fn fednova_equal_steps_matches_fedavg() {
        let ups = [update(0, vec![1.0, -2.0], 3, 7), update(1, vec![0.5, 0.5], 3, 3)];
        let mut avg = ParamVector::from_vec(vec![0.1, 0.2]);
        let mut nova = avg.clone();
        aggregate_weighted(&mut avg, &ups).unwrap();
        fednova_aggregate(&mut nova, &ups).unwrap();
        for (a, b) in avg.values().iter().zip(nova.values()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn fednova_hand_example() {
        // p = (0.5, 0.5), tau = (1, 4), deltas (-1, -4):
        // d = (-1, -1), tau_eff = 2.5, change = -2.5
        let mut global = ParamVector::from_vec(vec![0.0]);
        let ups = [update(0, vec![-1.0], 1, 5), update(1, vec![-4.0], 4, 5)];
        fednova_aggregate(&mut global, &ups).unwrap();
        assert!((global.values()[0] + 2.5).abs() < 1e-12, "got {}", global.values()[0]);
    }

    #[test]
    fn fednova_single_client_tau_cancels() {
        let mut global = ParamVector::from_vec(vec![1.0]);
        fednova_aggregate(&mut global, &[update(0, vec![-0.75], 9, 4)]).unwrap();
        assert!((global.values()[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn fedasync_weight_examples() {
        assert_eq!(fedasync_weight(0.6, 0.5, 0), 0.6);
        // 0.6 * 4^(-0.5) = 0.3
        assert!((fedasync_weight(0.6, 0.5, 3) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn fedasync_zero_staleness_full_alpha_replaces_model() {
        let mut cfg = AlgoConfig::new(AlgorithmKind::FedAsync, 0.1, 10);
        cfg.alpha = 1.0;
        let mut state = ServerState::new(ParamVector::from_vec(vec![5.0, 5.0]), 1, cfg.name);
        let sent = ParamVector::from_vec(vec![5.0, 5.0]);
        let up = update(0, vec![-1.0, 2.0], 1, 3);
        fedasync_apply(&mut state, &up, &sent, &cfg).unwrap();
        assert_eq!(state.global.values(), &[4.0, 7.0]);
        assert_eq!(state.agg_count, 1);
    }

    #[test]
    fn fedasync_mix_is_convex_combination() {
        let cfg = AlgoConfig::new(AlgorithmKind::FedAsync, 0.1, 10);
        for staleness in [0u64, 1, 5, 100] {
            let mut state =
                ServerState::new(ParamVector::from_vec(vec![0.0, 10.0]), 1, cfg.name);
            state.agg_count = staleness;
            let sent = ParamVector::from_vec(vec![0.0, 10.0]);
            let up = update(0, vec![4.0, -6.0], 1, 3);
            let client_model = sent.add(&up.delta);
            fedasync_apply(&mut state, &up, &sent, &cfg).unwrap();
            for ((&g, &a), &b) in state
                .global
                .values()
                .iter()
                .zip(sent.values())
                .zip(client_model.values())
            {
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                assert!(g >= lo - 1e-12 && g <= hi + 1e-12, "{g} outside [{lo}, {hi}]");
            }
        }
    }

    #[test]
    fn unknown_algorithm_lists_names() {
        let err = AlgorithmKind::parse("sgdx").unwrap_err();
        let msg = err.to_string();
        for name in ["fedavg", "fedprox", "scaffold", "fednova", "fedasync"] {
            assert!(msg.contains(name), "{msg}");
        }
    }

    #[test]
    fn planned_steps_arithmetic() {
        let mut cfg = AlgoConfig::new(AlgorithmKind::FedAvg, 0.1, 1);
        cfg.epochs = 3;
        cfg.batch_size = 10;
        assert_eq!(cfg.planned_steps(25), 9); // 3 * ceil(25/10)
        assert_eq!(cfg.planned_steps(5), 3); // batch capped at n
    }
}
