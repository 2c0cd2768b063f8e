//! Data-heterogeneity partitioners: map a train set to per-client index lists.
//!
//! All partitioners are pure functions of (inputs, seed); class- and
//! client-scoped draws come from their own keyed streams so results do not
//! depend on iteration order.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::benchmark::BenchmarkData;
use crate::error::{Error, Result};
use crate::rng::{self, tag};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PartitionerConfig {
    /// Quantity skew only; sizes from lognormal weights when sigma > 0.
    Iid {
        num_clients: usize,
        #[serde(default)]
        imbalance_sigma: f64,
    },
    /// Label skew via per-class Dirichlet proportions over clients.
    Dirichlet { num_clients: usize, alpha: f64 },
    /// Each client holds a fixed fraction of the label classes.
    Diversity { num_clients: usize, div: f64 },
    /// IID index split plus per-client additive feature noise.
    GaussianPerturb {
        num_clients: usize,
        sigma_feature: f64,
    },
    /// One client per distinct sample owner.
    Id,
    /// Reserved (vertical feature splits are out of scope).
    Vertical,
    /// Reserved (graph community partitioning is out of scope).
    NodeLouvain,
}

impl PartitionerConfig {
    pub fn kind_name(&self) -> &'static str {
        match self {
            PartitionerConfig::Iid { .. } => "iid",
            PartitionerConfig::Dirichlet { .. } => "dirichlet",
            PartitionerConfig::Diversity { .. } => "diversity",
            PartitionerConfig::GaussianPerturb { .. } => "gaussian_perturb",
            PartitionerConfig::Id => "id",
            PartitionerConfig::Vertical => "vertical",
            PartitionerConfig::NodeLouvain => "node_louvain",
        }
    }
}

/// Per-client sample assignment, plus feature-noise vectors when the
/// partitioner models feature skew.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    pub clients: Vec<Vec<usize>>,
    pub feature_noise: Option<Vec<Vec<f64>>>,
}

impl Partition {
    pub fn num_clients(&self) -> usize {
        self.clients.len()
    }

    /// Checks non-emptiness, range, and pairwise disjointness against the
    /// assignable sample set.
    pub fn validate(&self, assignable: &[usize], total: usize) -> Result<()> {
        let mut allowed = vec![false; total];
        for &i in assignable {
            allowed[i] = true;
        }
        let mut used = vec![false; total];
        for (k, list) in self.clients.iter().enumerate() {
            if list.is_empty() {
                return Err(Error::Partition(format!("client {k} has no samples")));
            }
            for &i in list {
                if i >= total || !allowed[i] {
                    return Err(Error::Partition(format!(
                        "client {k} holds index {i} outside the train set"
                    )));
                }
                if used[i] {
                    return Err(Error::Partition(format!("index {i} assigned twice")));
                }
                used[i] = true;
            }
        }
        Ok(())
    }
}

/// Largest-remainder apportionment of `total` into `weights.len()` buckets.
///
/// Ties go to the lower index; with `min_one`, empty buckets are repaired by
/// stealing one unit from the largest bucket.
fn apportion(total: usize, weights: &[f64], min_one: bool) -> Result<Vec<usize>> {
    let k = weights.len();
    if k == 0 {
        return Err(Error::Partition("no buckets to apportion into".into()));
    }
    if min_one && total < k {
        return Err(Error::Partition(format!(
            "cannot give {k} clients at least one sample out of {total}"
        )));
    }
    let sum: f64 = weights.iter().sum();
    let norm: Vec<f64> = if sum <= f64::MIN_POSITIVE {
        vec![1.0 / k as f64; k]
    } else {
        weights.iter().map(|w| w / sum).collect()
    };
    let ideal: Vec<f64> = norm.iter().map(|p| p * total as f64).collect();
    let mut sizes: Vec<usize> = ideal.iter().map(|x| x.floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        let fa = ideal[a] - ideal[a].floor();
        let fb = ideal[b] - ideal[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &idx in order.iter().take(total - assigned) {
        sizes[idx] += 1;
    }
    if min_one {
        while let Some(empty) = sizes.iter().position(|&s| s == 0) {
            let largest = (0..k).max_by_key(|&i| (sizes[i], std::cmp::Reverse(i))).unwrap();
            sizes[largest] -= 1;
            sizes[empty] += 1;
        }
    }
    debug_assert_eq!(sizes.iter().sum::<usize>(), total);
    Ok(sizes)
}

fn slice_by_sizes(items: &[usize], sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(sizes.len());
    let mut pos = 0;
    for &s in sizes {
        out.push(items[pos..pos + s].to_vec());
        pos += s;
    }
    out
}

pub fn partition_iid(
    train: &[usize],
    num_clients: usize,
    imbalance_sigma: f64,
    seed: u64,
) -> Result<Partition> {
    if num_clients == 0 {
        return Err(Error::Config("iid: num_clients must be >= 1".into()));
    }
    if imbalance_sigma < 0.0 {
        return Err(Error::Config("iid: imbalance_sigma must be >= 0".into()));
    }
    if train.len() < num_clients {
        return Err(Error::Partition(format!(
            "{} train samples cannot cover {num_clients} clients",
            train.len()
        )));
    }
    let mut shuffled = train.to_vec();
    shuffled.shuffle(&mut rng::stream(seed, tag::PARTITION, 0, 0));
    let weights = if imbalance_sigma == 0.0 {
        vec![1.0; num_clients]
    } else {
        let dist = Normal::new(0.0, imbalance_sigma).map_err(|e| Error::Config(e.to_string()))?;
        let mut wstream = rng::stream(seed, tag::PARTITION, 0, 1);
        (0..num_clients).map(|_| dist.sample(&mut wstream).exp()).collect()
    };
    let sizes = apportion(train.len(), &weights, true)?;
    Ok(Partition { clients: slice_by_sizes(&shuffled, &sizes), feature_noise: None })
}

pub fn partition_dirichlet(
    train: &[usize],
    labels: &[u32],
    num_clients: usize,
    alpha: f64,
    seed: u64,
) -> Result<Partition> {
    if num_clients == 0 {
        return Err(Error::Config("dirichlet: num_clients must be >= 1".into()));
    }
    if alpha <= 0.0 {
        return Err(Error::Config(format!("dirichlet: alpha must be > 0, got {alpha}")));
    }
    if train.len() < num_clients {
        return Err(Error::Partition(format!(
            "{} train samples cannot cover {num_clients} clients",
            train.len()
        )));
    }
    let max_label = labels.iter().copied().max().unwrap_or(0) as usize;
    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); max_label + 1];
    for (&idx, &y) in train.iter().zip(labels) {
        per_class[y as usize].push(idx);
    }

    let gamma = Gamma::new(alpha, 1.0).map_err(|e| Error::Config(e.to_string()))?;
    let mut clients: Vec<Vec<usize>> = vec![Vec::new(); num_clients];
    for (class, samples) in per_class.iter_mut().enumerate() {
        if samples.is_empty() {
            continue;
        }
        samples.shuffle(&mut rng::stream(seed, tag::PARTITION, class as u64, 1));
        let mut pstream = rng::stream(seed, tag::PARTITION, class as u64, 2);
        let weights: Vec<f64> = (0..num_clients).map(|_| gamma.sample(&mut pstream)).collect();
        let sizes = apportion(samples.len(), &weights, false)?;
        let mut pos = 0;
        for (k, &s) in sizes.iter().enumerate() {
            clients[k].extend_from_slice(&samples[pos..pos + s]);
            pos += s;
        }
    }
    repair_empty_clients(&mut clients)?;
    Ok(Partition { clients, feature_noise: None })
}

pub fn partition_diversity(
    train: &[usize],
    labels: &[u32],
    num_classes: usize,
    num_clients: usize,
    div: f64,
    seed: u64,
) -> Result<Partition> {
    if num_clients == 0 {
        return Err(Error::Config("diversity: num_clients must be >= 1".into()));
    }
    if !(div > 0.0 && div <= 1.0) {
        return Err(Error::Config(format!("diversity: div must be in (0, 1], got {div}")));
    }
    if num_classes == 0 {
        return Err(Error::Config("diversity: dataset reports zero classes".into()));
    }
    let per_client_classes = ((div * num_classes as f64).round() as usize).max(1);

    let mut class_order: Vec<usize> = (0..num_classes).collect();
    class_order.shuffle(&mut rng::stream(seed, tag::PARTITION, 0, 3));

    // Client i holds the consecutive block [i*k, i*k + k) of the shuffled
    // class list, wrapping mod num_classes; k <= num_classes keeps the block
    // duplicate-free.
    let mut holders: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for client in 0..num_clients {
        for j in 0..per_client_classes {
            let class = class_order[(client * per_client_classes + j) % num_classes];
            holders[class].push(client);
        }
    }

    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (&idx, &y) in train.iter().zip(labels) {
        if (y as usize) < num_classes {
            per_class[y as usize].push(idx);
        }
    }

    let mut clients: Vec<Vec<usize>> = vec![Vec::new(); num_clients];
    for (class, samples) in per_class.iter_mut().enumerate() {
        let class_holders = &holders[class];
        if samples.is_empty() || class_holders.is_empty() {
            continue;
        }
        samples.shuffle(&mut rng::stream(seed, tag::PARTITION, class as u64, 4));
        let weights = vec![1.0; class_holders.len()];
        let sizes = apportion(samples.len(), &weights, false)?;
        let mut pos = 0;
        for (h, &s) in class_holders.iter().zip(&sizes) {
            clients[*h].extend_from_slice(&samples[pos..pos + s]);
            pos += s;
        }
    }
    repair_empty_clients(&mut clients)?;
    Ok(Partition { clients, feature_noise: None })
}

pub fn partition_gaussian_perturb(
    train: &[usize],
    num_clients: usize,
    sigma_feature: f64,
    feature_dim: usize,
    seed: u64,
) -> Result<Partition> {
    if sigma_feature < 0.0 {
        return Err(Error::Config("gaussian_perturb: sigma_feature must be >= 0".into()));
    }
    let mut partition = partition_iid(train, num_clients, 0.0, seed)?;
    let noise = (0..num_clients)
        .map(|k| {
            let mut nstream = rng::stream(seed, tag::FEATURE_NOISE, k as u64, 0);
            sample_noise_vector(sigma_feature, feature_dim, &mut nstream)
        })
        .collect();
    partition.feature_noise = Some(noise);
    Ok(partition)
}

fn sample_noise_vector(sigma: f64, dim: usize, stream: &mut ChaCha8Rng) -> Vec<f64> {
    if sigma == 0.0 {
        return vec![0.0; dim];
    }
    let dist = Normal::new(0.0, sigma).expect("sigma validated");
    (0..dim).map(|_| dist.sample(stream)).collect()
}

pub fn partition_by_id(train: &[usize], owner_ids: &[String]) -> Result<Partition> {
    let mut owners: Vec<&String> = train.iter().map(|&i| &owner_ids[i]).collect();
    owners.sort();
    owners.dedup();
    let clients = owners
        .iter()
        .map(|owner| {
            train
                .iter()
                .copied()
                .filter(|&i| &owner_ids[i] == *owner)
                .collect::<Vec<usize>>()
        })
        .collect();
    Ok(Partition { clients, feature_noise: None })
}

fn repair_empty_clients(clients: &mut [Vec<usize>]) -> Result<()> {
    loop {
        let Some(empty) = clients.iter().position(Vec::is_empty) else {
            return Ok(());
        };
        let largest = (0..clients.len())
            .max_by_key(|&i| (clients[i].len(), std::cmp::Reverse(i)))
            .unwrap();
        if clients[largest].len() <= 1 {
            return Err(Error::Partition(
                "not enough samples to give every client at least one".into(),
            ));
        }
        let moved = clients[largest].pop().unwrap();
        clients[empty].push(moved);
    }
}

/// Applies the configured partitioner to a benchmark's train set.
pub fn run_partitioner(
    cfg: &PartitionerConfig,
    data: &BenchmarkData,
    seed: u64,
) -> Result<Partition> {
    let train = data.train_indices();
    let need_labels = || {
        data.labels().ok_or_else(|| {
            Error::UnsupportedBenchmark(format!(
                "{} partitioner requires class labels",
                cfg.kind_name()
            ))
        })
    };
    match cfg {
        PartitionerConfig::Iid { num_clients, imbalance_sigma } => {
            partition_iid(&train, *num_clients, *imbalance_sigma, seed)
        }
        PartitionerConfig::Dirichlet { num_clients, alpha } => {
            let labels = need_labels()?;
            let train_labels: Vec<u32> = train.iter().map(|&i| labels[i]).collect();
            partition_dirichlet(&train, &train_labels, *num_clients, *alpha, seed)
        }
        PartitionerConfig::Diversity { num_clients, div } => {
            let labels = need_labels()?;
            let train_labels: Vec<u32> = train.iter().map(|&i| labels[i]).collect();
            let num_classes = match data {
                BenchmarkData::Supervised(d) => d.num_classes.unwrap_or(0),
                BenchmarkData::Qp(_) => 0,
            };
            partition_diversity(&train, &train_labels, num_classes, *num_clients, *div, seed)
        }
        PartitionerConfig::GaussianPerturb { num_clients, sigma_feature } => {
            partition_gaussian_perturb(&train, *num_clients, *sigma_feature, data.feature_dim(), seed)
        }
        PartitionerConfig::Id => {
            let owners = data.owner_ids().ok_or_else(|| {
                Error::UnsupportedBenchmark(
                    "id partitioner requires a benchmark with per-sample owners".into(),
                )
            })?;
            partition_by_id(&train, &owners)
        }
        PartitionerConfig::Vertical | PartitionerConfig::NodeLouvain => Err(Error::Config(format!(
            "partitioner kind '{}' is reserved but not supported",
            cfg.kind_name()
        ))),
    }
}
