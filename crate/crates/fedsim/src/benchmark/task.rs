//! Static federated tasks on disk.
//!
//! A task directory holds `task.json` (benchmark regeneration config plus a
//! content hash and the per-client index lists) and a human-readable
//! `README.txt`. Raw data is never copied: loading a task regenerates the
//! benchmark from its config and the hash detects drift.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{BenchmarkData, BenchmarkSpec};
use crate::error::{Error, Result};
use crate::partition::{run_partitioner, Partition, PartitionerConfig};

pub const TASK_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
struct BenchmarkRef {
    name: String,
    config: serde_json::Value,
    sha256: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TaskFile {
    schema_version: u32,
    benchmark: BenchmarkRef,
    num_clients: usize,
    seed: u64,
    partitioner: PartitionerConfig,
    partition: Vec<Vec<usize>>,
}

/// A loaded, validated federated task.
#[derive(Clone, Debug)]
pub struct FederatedTask {
    pub task_name: String,
    pub path: PathBuf,
    pub benchmark: BenchmarkSpec,
    pub benchmark_sha256: String,
    pub num_clients: usize,
    pub seed: u64,
    pub partitioner: PartitionerConfig,
    pub partition: Partition,
}

fn spec_to_ref(spec: &BenchmarkSpec, sha256: String) -> Result<BenchmarkRef> {
    let value = serde_json::to_value(spec)?;
    let name = value
        .get("name")
        .and_then(|v| v.as_str())
        .ok_or_else(|| Error::Config("benchmark spec missing name".into()))?
        .to_string();
    let config = value.get("config").cloned().unwrap_or(serde_json::Value::Null);
    Ok(BenchmarkRef { name, config, sha256 })
}

fn ref_to_spec(bref: &BenchmarkRef) -> Result<BenchmarkSpec> {
    let value = serde_json::json!({ "name": bref.name, "config": bref.config });
    serde_json::from_value(value)
        .map_err(|e| Error::TaskLoad(format!("bad benchmark config: {e}")))
}

fn ensure_output_dir(path: &Path) -> Result<()> {
    if path.exists() {
        if !path.is_dir() {
            return Err(Error::OutputExists(path.to_path_buf()));
        }
        if fs::read_dir(path)?.next().is_some() {
            return Err(Error::OutputExists(path.to_path_buf()));
        }
    } else {
        fs::create_dir_all(path)?;
    }
    Ok(())
}

fn readme_text(task: &TaskFile, data: &BenchmarkData) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "Federated task over benchmark '{}' ({} clients, seed {}).\n",
        task.benchmark.name, task.num_clients, task.seed
    ));
    out.push_str(&format!("Partitioner: {}\n", task.partitioner.kind_name()));
    out.push_str("Client sizes:\n");
    let labels = data.labels();
    for (k, list) in task.partition.iter().enumerate() {
        out.push_str(&format!("  client {k}: {} samples", list.len()));
        if let Some(labels) = labels {
            let mut hist: BTreeMap<u32, usize> = BTreeMap::new();
            for &i in list {
                *hist.entry(labels[i]).or_insert(0) += 1;
            }
            let desc: Vec<String> =
                hist.iter().map(|(class, n)| format!("{class}:{n}")).collect();
            out.push_str(&format!("  labels {{{}}}", desc.join(", ")));
        }
        out.push('\n');
    }
    out.push_str("Regenerate the data from task.json; raw data is not copied here.\n");
    out
}

/// Generates a benchmark, partitions it, and persists the task directory.
///
/// Refuses to write into an existing non-empty path; identical inputs produce
/// byte-identical files.
pub fn gen_task(
    benchmark: &BenchmarkSpec,
    partitioner: &PartitionerConfig,
    out: &Path,
    seed: u64,
) -> Result<(FederatedTask, BenchmarkData)> {
    ensure_output_dir(out)?;
    let data = benchmark.generate()?;
    let partition = run_partitioner(partitioner, &data, seed)?;
    let train = data.train_indices();
    partition.validate(&train, total_samples(&data))?;

    let task_file = TaskFile {
        schema_version: TASK_SCHEMA_VERSION,
        benchmark: spec_to_ref(benchmark, data.content_hash())?,
        num_clients: partition.num_clients(),
        seed,
        partitioner: partitioner.clone(),
        partition: partition.clients.clone(),
    };
    let mut json = serde_json::to_string_pretty(&task_file)?;
    json.push('\n');
    fs::write(out.join("task.json"), json)?;
    fs::write(out.join("README.txt"), readme_text(&task_file, &data))?;
    load_task(out)
}

fn total_samples(data: &BenchmarkData) -> usize {
    match data {
        BenchmarkData::Supervised(d) => d.num_samples(),
        BenchmarkData::Qp(q) => q.components.len(),
    }
}

/// Loads a task directory: regenerates the benchmark, verifies the content
/// hash, and re-checks every partition invariant (persisted indices are not
/// trusted).
pub fn load_task(path: &Path) -> Result<(FederatedTask, BenchmarkData)> {
    let file = path.join("task.json");
    let text = fs::read_to_string(&file)
        .map_err(|e| Error::TaskLoad(format!("cannot read {}: {e}", file.display())))?;
    let task_file: TaskFile =
        serde_json::from_str(&text).map_err(|e| Error::TaskLoad(format!("bad task.json: {e}")))?;
    if task_file.schema_version != TASK_SCHEMA_VERSION {
        return Err(Error::TaskLoad(format!(
            "unsupported schema_version {} (expected {TASK_SCHEMA_VERSION})",
            task_file.schema_version
        )));
    }
    let benchmark = ref_to_spec(&task_file.benchmark)?;
    let data = benchmark.generate()?;
    let hash = data.content_hash();
    if hash != task_file.benchmark.sha256 {
        return Err(Error::TaskLoad(format!(
            "benchmark content hash mismatch: task has {}, regenerated {hash}",
            task_file.benchmark.sha256
        )));
    }
    if task_file.partition.len() != task_file.num_clients {
        return Err(Error::TaskLoad(format!(
            "partition has {} clients, header says {}",
            task_file.partition.len(),
            task_file.num_clients
        )));
    }

    // Feature-noise vectors are derived, not stored; rebuild them from the
    // partitioner config so the persisted file stays index-only.
    let feature_noise = match &task_file.partitioner {
        PartitionerConfig::GaussianPerturb { num_clients, sigma_feature } => {
            let rebuilt = crate::partition::partition_gaussian_perturb(
                &data.train_indices(),
                *num_clients,
                *sigma_feature,
                data.feature_dim(),
                task_file.seed,
            )?;
            rebuilt.feature_noise
        }
        _ => None,
    };
    let partition = Partition { clients: task_file.partition.clone(), feature_noise };
    partition.validate(&data.train_indices(), total_samples(&data))?;

    let task_name = path
        .file_name()
        .map_or_else(|| "task".to_string(), |s| s.to_string_lossy().into_owned());
    Ok((
        FederatedTask {
            task_name,
            path: path.to_path_buf(),
            benchmark,
            benchmark_sha256: task_file.benchmark.sha256,
            num_clients: task_file.num_clients,
            seed: task_file.seed,
            partitioner: task_file.partitioner,
            partition,
        },
        data,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::{QpConfig, SampleCount, SyntheticConfig};

    fn qp_spec(seed: u64) -> BenchmarkSpec {
        BenchmarkSpec::Qp(QpConfig { num_components: 4, dim: 6, conditioning: 5.0, seed })
    }

    fn synth_spec(seed: u64) -> BenchmarkSpec {
        BenchmarkSpec::Synthetic(SyntheticConfig {
            alpha: 0.5,
            beta: 0.5,
            num_clients: 5,
            samples_per_client: SampleCount::Fixed(20),
            input_dim: 6,
            num_classes: 3,
            seed,
        })
    }

    #[test]
    fn iid_task_has_equal_client_sizes() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("t");
        let (task, _) = gen_task(
            &synth_spec(1),
            &PartitionerConfig::Iid { num_clients: 4, imbalance_sigma: 0.0 },
            &out,
            1,
        )
        .unwrap();
        let sizes: Vec<usize> = task.partition.clients.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![25, 25, 25, 25]);
    }

    #[test]
    fn regeneration_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let out1 = dir.path().join("a");
        let out2 = dir.path().join("b");
        let part = PartitionerConfig::Iid { num_clients: 2, imbalance_sigma: 0.0 };
        gen_task(&qp_spec(9), &part, &out1, 9).unwrap();
        gen_task(&qp_spec(9), &part, &out2, 9).unwrap();
        let a = fs::read(out1.join("task.json")).unwrap();
        let b = fs::read(out2.join("task.json")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn existing_non_empty_path_refused() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("t");
        let part = PartitionerConfig::Iid { num_clients: 2, imbalance_sigma: 0.0 };
        gen_task(&qp_spec(2), &part, &out, 2).unwrap();
        match gen_task(&qp_spec(2), &part, &out, 2) {
            Err(Error::OutputExists(_)) => {}
            other => panic!("expected OutputExists, got {other:?}"),
        }
    }

    #[test]
    fn round_trip_preserves_all_fields() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("t");
        let part = PartitionerConfig::Dirichlet { num_clients: 3, alpha: 0.3 };
        let (task, _) = gen_task(&synth_spec(4), &part, &out, 4).unwrap();
        let (loaded, _) = load_task(&out).unwrap();
        assert_eq!(loaded.benchmark, task.benchmark);
        assert_eq!(loaded.benchmark_sha256, task.benchmark_sha256);
        assert_eq!(loaded.num_clients, task.num_clients);
        assert_eq!(loaded.seed, task.seed);
        assert_eq!(loaded.partitioner, task.partitioner);
        assert_eq!(loaded.partition, task.partition);
    }

    #[test]
    fn tampered_partition_rejected_on_load() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("t");
        let part = PartitionerConfig::Iid { num_clients: 2, imbalance_sigma: 0.0 };
        gen_task(&qp_spec(3), &part, &out, 3).unwrap();
        let file = out.join("task.json");
        let mut v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&file).unwrap()).unwrap();
        // duplicate an index across clients
        v["partition"][1] = v["partition"][0].clone();
        fs::write(&file, serde_json::to_string_pretty(&v).unwrap()).unwrap();
        assert!(load_task(&out).is_err());
    }

    #[test]
    fn gaussian_noise_is_rebuilt_on_load() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("t");
        let part = PartitionerConfig::GaussianPerturb { num_clients: 3, sigma_feature: 0.2 };
        let (task, _) = gen_task(&synth_spec(8), &part, &out, 8).unwrap();
        let (loaded, _) = load_task(&out).unwrap();
        assert_eq!(task.partition.feature_noise, loaded.partition.feature_noise);
        assert!(loaded.partition.feature_noise.is_some());
    }
}
