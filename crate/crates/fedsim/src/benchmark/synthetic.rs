//! Synthetic(alpha, beta) classification benchmark.
//!
//! Per-client logistic models and feature centers drawn around shared
//! hyper-priors: alpha controls cross-client model divergence, beta controls
//! feature-center divergence. Covariance of the features is diagonal with
//! `sigma_jj = j^-1.2`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Dataset, Split, TaskKind};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{ParamVector, Targets};
use crate::rng::{self, tag};

/// How many training samples each client contributes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleCount {
    Fixed(usize),
    /// Counts drawn as `round(exp(N(ln(mean) - sigma^2/2, sigma)))`, min 1.
    Lognormal { mean: f64, sigma: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    /// Variance of the per-client model mean shift.
    pub alpha: f64,
    /// Variance of the per-client feature-center shift.
    pub beta: f64,
    pub num_clients: usize,
    pub samples_per_client: SampleCount,
    #[serde(default = "default_input_dim")]
    pub input_dim: usize,
    #[serde(default = "default_num_classes")]
    pub num_classes: usize,
    pub seed: u64,
}

fn default_input_dim() -> usize {
    60
}

fn default_num_classes() -> usize {
    10
}

/// Generated dataset plus the latent per-client generators, which tests use
/// to quantify cross-client divergence.
#[derive(Clone, Debug)]
pub struct SyntheticOutput {
    pub dataset: Dataset,
    /// True generating model (W_k then b_k, flattened) per client.
    pub true_models: Vec<ParamVector>,
    /// True feature center v_k per client.
    pub feature_centers: Vec<Vec<f64>>,
}

/// Mean pairwise L2 distance between per-client vectors.
pub fn mean_pairwise_distance(vectors: &[Vec<f64>]) -> f64 {
    let n = vectors.len();
    if n < 2 {
        return 0.0;
    }
    let mut acc = 0.0;
    let mut pairs = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            let d: f64 = vectors[i]
                .iter()
                .zip(&vectors[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            acc += d;
            pairs += 1;
        }
    }
    acc / pairs as f64
}

pub fn gen_synthetic(cfg: &SyntheticConfig) -> Result<SyntheticOutput> {
    if cfg.num_clients == 0 {
        return Err(Error::Config("synthetic: num_clients must be >= 1".into()));
    }
    if cfg.alpha < 0.0 || cfg.beta < 0.0 {
        return Err(Error::Config("synthetic: alpha and beta must be >= 0".into()));
    }
    if cfg.input_dim == 0 || cfg.num_classes < 2 {
        return Err(Error::Config("synthetic: need input_dim >= 1 and num_classes >= 2".into()));
    }
    match cfg.samples_per_client {
        SampleCount::Fixed(0) => {
            return Err(Error::Config("synthetic: samples_per_client must be positive".into()))
        }
        SampleCount::Lognormal { mean, sigma } if mean <= 0.0 || sigma < 0.0 => {
            return Err(Error::Config("synthetic: lognormal mean must be > 0, sigma >= 0".into()))
        }
        _ => {}
    }

    let d = cfg.input_dim;
    let c = cfg.num_classes;
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    // Diagonal covariance sigma_jj = j^-1.2 (1-indexed).
    let feature_stds: Vec<f64> =
        (1..=d).map(|j| (j as f64).powf(-1.2).sqrt()).collect();
    let id_width = (cfg.num_clients.max(2) - 1).to_string().len();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<u32> = Vec::new();
    let mut owners: Vec<String> = Vec::new();
    let mut split = Split::default();
    let mut true_models = Vec::with_capacity(cfg.num_clients);
    let mut feature_centers = Vec::with_capacity(cfg.num_clients);

    for k in 0..cfg.num_clients {
        let mut prm = rng::stream(cfg.seed, tag::BENCH, k as u64, 1);
        let u_k = cfg.alpha.sqrt() * std_normal.sample(&mut prm);
        let mut w = vec![0.0; c * d + c];
        for entry in w.iter_mut() {
            *entry = u_k + std_normal.sample(&mut prm);
        }
        let b_k = cfg.beta.sqrt() * std_normal.sample(&mut prm);
        let center: Vec<f64> = (0..d).map(|_| b_k + std_normal.sample(&mut prm)).collect();

        let n_train = match cfg.samples_per_client {
            SampleCount::Fixed(n) => n,
            SampleCount::Lognormal { mean, sigma } => {
                let mut cnt = rng::stream(cfg.seed, tag::BENCH, k as u64, 2);
                let mu = mean.ln() - sigma * sigma / 2.0;
                let draw = (mu + sigma * std_normal.sample(&mut cnt)).exp();
                (draw.round() as usize).max(1)
            }
        };
        let n_holdout = n_train.div_ceil(10);

        let mut samples = rng::stream(cfg.seed, tag::BENCH, k as u64, 3);
        let owner = format!("{k:0id_width$}");
        let draw_sample = |samples: &mut rand_chacha::ChaCha8Rng| {
            let x: Vec<f64> = (0..d)
                .map(|j| center[j] + feature_stds[j] * std_normal.sample(samples))
                .collect();
            let mut best = 0usize;
            let mut best_logit = f64::NEG_INFINITY;
            for m in 0..c {
                let mut logit = w[c * d + m];
                for j in 0..d {
                    logit += w[m * d + j] * x[j];
                }
                if logit > best_logit {
                    best_logit = logit;
                    best = m;
                }
            }
            (x, best as u32)
        };

        for part in 0..3usize {
            let count = if part == 0 { n_train } else { n_holdout };
            for _ in 0..count {
                let (x, y) = draw_sample(&mut samples);
                let idx = rows.len();
                rows.push(x);
                labels.push(y);
                owners.push(owner.clone());
                match part {
                    0 => split.train.push(idx),
                    1 => split.val.push(idx),
                    _ => split.test.push(idx),
                }
            }
        }

        true_models.push(ParamVector::from_vec(w));
        feature_centers.push(center);
    }

    let dataset = Dataset {
        name: "synthetic".into(),
        features: Matrix::from_rows(rows)?,
        targets: Targets::Class(labels),
        split,
        task_kind: TaskKind::Classification,
        num_classes: Some(c),
        owner_ids: Some(owners),
    };
    dataset.validate()?;
    Ok(SyntheticOutput { dataset, true_models, feature_centers })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(alpha: f64, beta: f64, clients: usize, seed: u64) -> SyntheticConfig {
        SyntheticConfig {
            alpha,
            beta,
            num_clients: clients,
            samples_per_client: SampleCount::Fixed(30),
            input_dim: 8,
            num_classes: 4,
            seed,
        }
    }

    #[test]
    fn fixed_seed_reproduces_dataset() {
        let a = gen_synthetic(&cfg(0.5, 0.5, 3, 9)).unwrap();
        let b = gen_synthetic(&cfg(0.5, 0.5, 3, 9)).unwrap();
        assert_eq!(a.dataset.features, b.dataset.features);
        assert_eq!(a.dataset.targets, b.dataset.targets);
        assert_eq!(a.dataset.split, b.dataset.split);
    }

    #[test]
    fn single_client_has_constant_owner() {
        let out = gen_synthetic(&cfg(1.0, 1.0, 1, 4)).unwrap();
        let owners = out.dataset.owner_ids.unwrap();
        assert!(owners.iter().all(|o| o == &owners[0]));
    }

    #[test]
    fn heterogeneity_grows_with_alpha_beta() {
        // Same seed, two settings: divergence of the latent generators must
        // be strictly larger at (1, 1) than at (0, 0).
        let lo = gen_synthetic(&cfg(0.0, 0.0, 6, 21)).unwrap();
        let hi = gen_synthetic(&cfg(1.0, 1.0, 6, 21)).unwrap();
        let model_div = |out: &SyntheticOutput| {
            mean_pairwise_distance(
                &out.true_models.iter().map(|m| m.values().to_vec()).collect::<Vec<_>>(),
            )
        };
        let center_div = |out: &SyntheticOutput| mean_pairwise_distance(&out.feature_centers);
        let lo_stat = model_div(&lo) + center_div(&lo);
        let hi_stat = model_div(&hi) + center_div(&hi);
        assert!(
            hi_stat > lo_stat,
            "divergence did not grow: lo {lo_stat}, hi {hi_stat}"
        );
    }

    #[test]
    fn train_sizes_follow_request_and_splits_cover() {
        let out = gen_synthetic(&cfg(0.2, 0.2, 4, 3)).unwrap();
        let ds = &out.dataset;
        assert_eq!(ds.split.train.len(), 4 * 30);
        assert_eq!(ds.split.val.len(), 4 * 3);
        assert_eq!(ds.split.test.len(), 4 * 3);
        ds.validate().unwrap();
    }

    #[test]
    fn zero_samples_rejected() {
        let mut c = cfg(0.1, 0.1, 2, 1);
        c.samples_per_client = SampleCount::Fixed(0);
        assert!(gen_synthetic(&c).is_err());
    }
}
