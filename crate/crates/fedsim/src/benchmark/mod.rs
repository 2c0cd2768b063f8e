//! Dataset providers and static federated task generation.

pub mod csv;
pub mod qp;
pub mod synthetic;
pub mod task;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::Targets;

pub use csv::CsvConfig;
pub use qp::{QpComponent, QpConfig, QpSpec, QuadraticData};
pub use synthetic::{SampleCount, SyntheticConfig, SyntheticOutput};
pub use task::{gen_task, load_task, FederatedTask};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Regression,
    Classification,
}

/// Train/validation/test index lists; disjoint, covering the whole dataset.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    pub fn validate(&self, total: usize) -> Result<()> {
        let mut seen = vec![false; total];
        for &i in self.train.iter().chain(&self.val).chain(&self.test) {
            if i >= total {
                return Err(Error::Config(format!("split index {i} out of range {total}")));
            }
            if seen[i] {
                return Err(Error::Config(format!("split index {i} appears twice")));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Config("splits do not cover all samples".into()));
        }
        Ok(())
    }
}

/// An in-memory supervised dataset with a fixed split.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub name: String,
    pub features: Matrix,
    pub targets: Targets,
    pub split: Split,
    pub task_kind: TaskKind,
    /// Present for classification datasets.
    pub num_classes: Option<usize>,
    /// Per-sample origin, when the benchmark has real ownership.
    pub owner_ids: Option<Vec<String>>,
}

impl Dataset {
    pub fn num_samples(&self) -> usize {
        self.features.rows()
    }

    pub fn validate(&self) -> Result<()> {
        if self.targets.len() != self.num_samples() {
            return Err(Error::Shape("targets/features length mismatch".into()));
        }
        self.split.validate(self.num_samples())?;
        if let (Targets::Class(cls), Some(c)) = (&self.targets, self.num_classes) {
            if let Some(bad) = cls.iter().find(|&&y| y as usize >= c) {
                return Err(Error::Config(format!("class label {bad} >= num_classes {c}")));
            }
        }
        if let Some(owners) = &self.owner_ids {
            if owners.len() != self.num_samples() {
                return Err(Error::Shape("owner_ids length mismatch".into()));
            }
        }
        Ok(())
    }

    /// Class labels aligned with sample indices; `None` for regression.
    pub fn labels(&self) -> Option<&[u32]> {
        match &self.targets {
            Targets::Class(v) => Some(v),
            Targets::Real(_) => None,
        }
    }
}

/// Benchmark generation config; `name` + `config` as persisted in task.json.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "config", rename_all = "snake_case", deny_unknown_fields)]
pub enum BenchmarkSpec {
    Synthetic(SyntheticConfig),
    Qp(QpConfig),
    Csv(CsvConfig),
}

/// Materialized benchmark content.
#[derive(Clone, Debug)]
pub enum BenchmarkData {
    Supervised(Dataset),
    Qp(QpSpec),
}

impl BenchmarkSpec {
    pub fn benchmark_name(&self) -> &'static str {
        match self {
            BenchmarkSpec::Synthetic(_) => "synthetic",
            BenchmarkSpec::Qp(_) => "qp",
            BenchmarkSpec::Csv(_) => "csv",
        }
    }

    /// Regenerates the benchmark content from its config; deterministic.
    pub fn generate(&self) -> Result<BenchmarkData> {
        match self {
            BenchmarkSpec::Synthetic(cfg) => {
                Ok(BenchmarkData::Supervised(synthetic::gen_synthetic(cfg)?.dataset))
            }
            BenchmarkSpec::Qp(cfg) => Ok(BenchmarkData::Qp(qp::gen_qp(cfg)?)),
            BenchmarkSpec::Csv(cfg) => Ok(BenchmarkData::Supervised(csv::load_csv(cfg)?)),
        }
    }
}

impl BenchmarkData {
    /// Indices a partitioner may assign to clients.
    pub fn train_indices(&self) -> Vec<usize> {
        match self {
            BenchmarkData::Supervised(d) => d.split.train.clone(),
            BenchmarkData::Qp(q) => (0..q.components.len()).collect(),
        }
    }

    /// Class label per sample, for label-aware partitioners.
    pub fn labels(&self) -> Option<&[u32]> {
        match self {
            BenchmarkData::Supervised(d) => d.labels(),
            BenchmarkData::Qp(_) => None,
        }
    }

    pub fn owner_ids(&self) -> Option<Vec<String>> {
        match self {
            BenchmarkData::Supervised(d) => d.owner_ids.clone(),
            // one natural owner per QP component
            BenchmarkData::Qp(q) => {
                Some((0..q.components.len()).map(|i| format!("{i:06}")).collect())
            }
        }
    }

    pub fn feature_dim(&self) -> usize {
        match self {
            BenchmarkData::Supervised(d) => d.features.cols(),
            BenchmarkData::Qp(q) => q.dim,
        }
    }

    /// Digest of the generated content; detects drift between generation
    /// and later loads of the same task.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        match self {
            BenchmarkData::Supervised(d) => {
                hasher.update(b"dataset");
                hasher.update(d.name.as_bytes());
                hasher.update((d.features.rows() as u64).to_le_bytes());
                hasher.update((d.features.cols() as u64).to_le_bytes());
                for v in d.features.data() {
                    hasher.update(v.to_le_bytes());
                }
                match &d.targets {
                    Targets::Real(v) => {
                        hasher.update(b"real");
                        for t in v {
                            hasher.update(t.to_le_bytes());
                        }
                    }
                    Targets::Class(v) => {
                        hasher.update(b"class");
                        for t in v {
                            hasher.update(t.to_le_bytes());
                        }
                    }
                }
                for part in [&d.split.train, &d.split.val, &d.split.test] {
                    for &i in part {
                        hasher.update((i as u64).to_le_bytes());
                    }
                    hasher.update(b"|");
                }
                if let Some(owners) = &d.owner_ids {
                    for o in owners {
                        hasher.update(o.as_bytes());
                        hasher.update(b",");
                    }
                }
            }
            BenchmarkData::Qp(q) => {
                hasher.update(b"qp");
                hasher.update((q.dim as u64).to_le_bytes());
                for comp in &q.components {
                    for v in comp.a.iter() {
                        hasher.update(v.to_le_bytes());
                    }
                    for v in comp.b.iter() {
                        hasher.update(v.to_le_bytes());
                    }
                }
            }
        }
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
