//! System-heterogeneity simulation: a per-client state machine driven by a
//! global virtual clock.
//!
//! Four axes are modeled per client: availability (can it be selected),
//! responsiveness (how long it takes), completeness (how much local work it
//! finishes), and connectivity (does it drop after selection). Two simulator
//! kinds exist: synthetic distributions and trace files with explicit
//! availability intervals.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, tag};

/// Integer simulated time; advanced only by the engine, never backwards.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct VirtualClock {
    now: u64,
}

impl VirtualClock {
    pub fn new() -> Self {
        Self { now: 0 }
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn advance(&mut self, units: u64) {
        self.now += units;
    }

    pub fn advance_to(&mut self, t: u64) {
        assert!(t >= self.now, "virtual clock may not go backwards ({} -> {t})", self.now);
        self.now = t;
    }
}

/// Client lifecycle states.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClientState {
    Offline,
    Idle,
    Selected,
    Working { finish_at: u64 },
    Dropped,
}

impl ClientState {
    fn kind(&self) -> &'static str {
        match self {
            ClientState::Offline => "offline",
            ClientState::Idle => "idle",
            ClientState::Selected => "selected",
            ClientState::Working { .. } => "working",
            ClientState::Dropped => "dropped",
        }
    }
}

/// The legal transition set of the state machine.
pub fn legal_transition(from: &ClientState, to: &ClientState) -> bool {
    use ClientState::*;
    matches!(
        (from, to),
        (Offline, Idle)
            | (Idle, Offline)
            | (Idle, Selected)
            | (Selected, Working { .. })
            | (Selected, Dropped)
            | (Working { .. }, Idle)
            | (Working { .. }, Offline)
            | (Dropped, Idle)
            | (Dropped, Offline)
    )
}

/// How a client's availability evolves over time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AvailabilityProcess {
    /// Memoryless: idle with probability p at every tick.
    Prob(f64),
    /// Idle exactly inside the half-open intervals `[start, end)`.
    Intervals(Vec<(u64, u64)>),
}

/// Response latency distribution, in whole time units (real draws round up).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatencySpec {
    Constant(u64),
    Uniform { lo: f64, hi: f64 },
    /// Parameters of the underlying normal.
    Lognormal { mu: f64, sigma: f64 },
    /// Distribution mean/variance; parameters are moment-matched.
    LognormalMeanVar { mean: f64, var: f64 },
}

impl LatencySpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            LatencySpec::Constant(c) if *c < 1 => {
                Err(Error::Config("latency constant must be >= 1".into()))
            }
            LatencySpec::Uniform { lo, hi } if !(*lo >= 0.0 && hi > lo) => {
                Err(Error::Config(format!("latency uniform needs 0 <= lo < hi, got [{lo}, {hi}]")))
            }
            LatencySpec::Lognormal { sigma, .. } if *sigma < 0.0 => {
                Err(Error::Config("latency lognormal sigma must be >= 0".into()))
            }
            LatencySpec::LognormalMeanVar { mean, var } if !(*mean > 0.0 && *var >= 0.0) => {
                Err(Error::Config("latency lognormal needs mean > 0 and var >= 0".into()))
            }
            _ => Ok(()),
        }
    }

    /// Draws one latency; integer >= 1.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> u64 {
        let raw = match self {
            LatencySpec::Constant(c) => return (*c).max(1),
            LatencySpec::Uniform { lo, hi } => rng.random_range(*lo..*hi),
            LatencySpec::Lognormal { mu, sigma } => {
                let normal = Normal::new(*mu, *sigma).expect("validated");
                normal.sample(rng).exp()
            }
            LatencySpec::LognormalMeanVar { mean, var } => {
                let (mu, sigma) = lognormal_from_moments(*mean, *var);
                LogNormal::new(mu, sigma).expect("validated").sample(rng)
            }
        };
        (raw.ceil() as u64).max(1)
    }
}

/// Moment matching: `mu = ln(m^2 / sqrt(m^2 + v))`, `sigma^2 = ln(1 + v/m^2)`.
pub fn lognormal_from_moments(mean: f64, var: f64) -> (f64, f64) {
    let m2 = mean * mean;
    let mu = (m2 / (m2 + var).sqrt()).ln();
    let sigma = (1.0 + var / m2).ln().sqrt();
    (mu, sigma)
}

/// How many of the planned local steps a client completes.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompletenessSpec {
    /// Always the full plan.
    #[default]
    Full,
    /// Uniform over {1..planned}; the usual partial-work convention.
    UniformSteps,
    /// Fixed fraction of the plan, at least one step.
    Fraction(f64),
}

impl CompletenessSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            CompletenessSpec::Fraction(f) if !(*f > 0.0 && *f <= 1.0) => {
                Err(Error::Config(format!("completeness fraction must be in (0, 1], got {f}")))
            }
            _ => Ok(()),
        }
    }

    pub fn sample(&self, planned: usize, rng: &mut ChaCha8Rng) -> usize {
        debug_assert!(planned >= 1);
        match self {
            CompletenessSpec::Full => planned,
            CompletenessSpec::UniformSteps => rng.random_range(1..=planned),
            CompletenessSpec::Fraction(f) => ((f * planned as f64).round() as usize).clamp(1, planned),
        }
    }
}

/// Per-client heterogeneity parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ClientProfile {
    pub availability: AvailabilityProcess,
    pub latency: LatencySpec,
    pub completeness: CompletenessSpec,
    pub drop_prob: f64,
}

impl ClientProfile {
    pub fn ideal() -> Self {
        Self {
            availability: AvailabilityProcess::Prob(1.0),
            latency: LatencySpec::Constant(1),
            completeness: CompletenessSpec::Full,
            drop_prob: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let AvailabilityProcess::Prob(p) = &self.availability {
            if !(0.0..=1.0).contains(p) {
                return Err(Error::Config(format!("availability probability {p} not in [0,1]")));
            }
        }
        self.latency.validate()?;
        self.completeness.validate()?;
        if !(0.0..=1.0).contains(&self.drop_prob) {
            return Err(Error::Config(format!("drop_prob {} not in [0,1]", self.drop_prob)));
        }
        Ok(())
    }
}

/// Global availability model for the synthetic simulator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AvailabilityModel {
    /// Same idle probability for every client.
    Prob(f64),
    /// Per-client probability drawn once from exp(N(mu, sigma)), clipped to [0,1].
    LognormalClipped { mu: f64, sigma: f64 },
}

impl Default for AvailabilityModel {
    fn default() -> Self {
        AvailabilityModel::Prob(1.0)
    }
}

/// Optional per-client override of the synthetic axes.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub availability: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency: Option<LatencySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completeness: Option<CompletenessSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drop_prob: Option<f64>,
}

fn default_latency() -> LatencySpec {
    LatencySpec::Constant(1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SimulatorConfig {
    Synthetic {
        #[serde(default)]
        availability: AvailabilityModel,
        #[serde(default = "default_latency")]
        latency: LatencySpec,
        #[serde(default)]
        completeness: CompletenessSpec,
        #[serde(default)]
        drop_prob: f64,
        /// Per-client overrides, keyed by client index.
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        overrides: BTreeMap<usize, ProfileOverride>,
    },
    Trace { path: String },
}

impl Default for SimulatorConfig {
    fn default() -> Self {
        SimulatorConfig::Synthetic {
            availability: AvailabilityModel::default(),
            latency: default_latency(),
            completeness: CompletenessSpec::default(),
            drop_prob: 0.0,
            overrides: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Transition {
    pub clock: u64,
    pub client: usize,
    pub from_kind: &'static str,
    pub to_kind: &'static str,
}

/// One simulator instance per runner: owns profiles and live states.
#[derive(Clone, Debug)]
pub struct Simulator {
    seed: u64,
    profiles: Vec<ClientProfile>,
    states: Vec<ClientState>,
    audit: Option<Vec<Transition>>,
}

impl Simulator {
    pub fn new(config: &SimulatorConfig, num_clients: usize, seed: u64) -> Result<Self> {
        if num_clients == 0 {
            return Err(Error::Config("simulator needs at least one client".into()));
        }
        let profiles = match config {
            SimulatorConfig::Synthetic { availability, latency, completeness, drop_prob, overrides } => {
                latency.validate()?;
                completeness.validate()?;
                let mut out = Vec::with_capacity(num_clients);
                for k in 0..num_clients {
                    let p_avail = match availability {
                        AvailabilityModel::Prob(p) => *p,
                        AvailabilityModel::LognormalClipped { mu, sigma } => {
                            let normal =
                                Normal::new(*mu, *sigma).map_err(|e| Error::Config(e.to_string()))?;
                            let mut s = rng::stream(seed, tag::AVAIL_INIT, k as u64, 0);
                            normal.sample(&mut s).exp().clamp(0.0, 1.0)
                        }
                    };
                    let mut profile = ClientProfile {
                        availability: AvailabilityProcess::Prob(p_avail),
                        latency: latency.clone(),
                        completeness: completeness.clone(),
                        drop_prob: *drop_prob,
                    };
                    if let Some(over) = overrides.get(&k) {
                        if let Some(p) = over.availability {
                            profile.availability = AvailabilityProcess::Prob(p);
                        }
                        if let Some(l) = &over.latency {
                            profile.latency = l.clone();
                        }
                        if let Some(c) = &over.completeness {
                            profile.completeness = c.clone();
                        }
                        if let Some(d) = over.drop_prob {
                            profile.drop_prob = d;
                        }
                    }
                    profile.validate()?;
                    out.push(profile);
                }
                out
            }
            SimulatorConfig::Trace { path } => {
                let profiles = load_trace(Path::new(path))?;
                if profiles.len() != num_clients {
                    return Err(Error::Config(format!(
                        "trace describes {} clients but the task has {num_clients}",
                        profiles.len()
                    )));
                }
                profiles
            }
        };
        Ok(Self {
            seed,
            profiles,
            states: vec![ClientState::Offline; num_clients],
            audit: None,
        })
    }

    pub fn from_profiles(profiles: Vec<ClientProfile>, seed: u64) -> Result<Self> {
        for p in &profiles {
            p.validate()?;
        }
        let n = profiles.len();
        Ok(Self { seed, profiles, states: vec![ClientState::Offline; n], audit: None })
    }

    pub fn num_clients(&self) -> usize {
        self.profiles.len()
    }

    pub fn profile(&self, k: usize) -> &ClientProfile {
        &self.profiles[k]
    }

    pub fn state(&self, k: usize) -> ClientState {
        self.states[k]
    }

    /// Starts recording transitions for auditing.
    pub fn enable_audit(&mut self) {
        self.audit = Some(Vec::new());
    }

    pub fn audit_log(&self) -> &[Transition] {
        self.audit.as_deref().unwrap_or(&[])
    }

    /// Moves client `k` to `to`; panics on a transition outside the legal set
    /// (an engine bug, not an input error).
    pub fn transition(&mut self, k: usize, to: ClientState, clock: u64) {
        let from = self.states[k];
        assert!(
            legal_transition(&from, &to),
            "illegal client state transition {} -> {} (client {k}, t={clock})",
            from.kind(),
            to.kind()
        );
        if let Some(log) = &mut self.audit {
            log.push(Transition { clock, client: k, from_kind: from.kind(), to_kind: to.kind() });
        }
        self.states[k] = to;
    }

    /// Re-samples availability for every client that is not selected,
    /// working, or dropped. Called once per time unit before selection.
    pub fn tick_availability(&mut self, clock: u64) {
        for k in 0..self.num_clients() {
            match self.states[k] {
                ClientState::Offline | ClientState::Idle => {}
                _ => continue,
            }
            let idle = match &self.profiles[k].availability {
                AvailabilityProcess::Prob(p) => {
                    rng::unit_f64(self.seed, tag::AVAIL_TICK, k as u64, clock) < *p
                }
                AvailabilityProcess::Intervals(ivals) => {
                    ivals.iter().any(|&(s, e)| clock >= s && clock < e)
                }
            };
            let target = if idle { ClientState::Idle } else { ClientState::Offline };
            if self.states[k] != target {
                self.transition(k, target, clock);
            }
        }
    }

    /// Ids of clients currently idle, ascending.
    pub fn idle_clients(&self) -> Vec<usize> {
        (0..self.num_clients()).filter(|&k| self.states[k] == ClientState::Idle).collect()
    }

    /// Latency draw for client `k`, keyed by the selection event `key`.
    pub fn sample_latency(&self, k: usize, key: u64) -> u64 {
        let mut s = rng::stream(self.seed, tag::LATENCY, k as u64, key);
        self.profiles[k].latency.sample(&mut s)
    }

    /// Completed local steps for client `k` out of `planned`.
    pub fn sample_completeness(&self, k: usize, key: u64, planned: usize) -> usize {
        let mut s = rng::stream(self.seed, tag::COMPLETENESS, k as u64, key);
        self.profiles[k].completeness.sample(planned, &mut s)
    }

    /// Connectivity roll right after selection.
    pub fn roll_drop(&self, k: usize, key: u64) -> bool {
        rng::unit_f64(self.seed, tag::DROP, k as u64, key) < self.profiles[k].drop_prob
    }
}

// ---- trace files ----------------------------------------------------------

pub const TRACE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceFile {
    schema_version: u32,
    clients: Vec<TraceClient>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceClient {
    id: String,
    availability: Vec<(u64, u64)>,
    latency: LatencySpec,
    #[serde(default)]
    drop_prob: f64,
    #[serde(default)]
    completeness: CompletenessSpec,
}

/// Best-effort line of the first occurrence of `needle` in `text` (1-based).
fn line_of(text: &str, needle: &str) -> usize {
    text.find(needle)
        .map(|pos| text[..pos].bytes().filter(|&b| b == b'\n').count() + 1)
        .unwrap_or(1)
}

/// Loads per-client profiles from a trace file.
///
/// Clients map to task client ids by position. Intervals must be sorted,
/// non-overlapping, with end > start.
pub fn load_trace(path: &Path) -> Result<Vec<ClientProfile>> {
    let text = fs::read_to_string(path)?;
    let parsed: TraceFile = serde_json::from_str(&text).map_err(|e| Error::Trace {
        line: e.line().max(1),
        msg: e.to_string(),
    })?;
    if parsed.schema_version != TRACE_SCHEMA_VERSION {
        return Err(Error::Trace {
            line: line_of(&text, "schema_version"),
            msg: format!(
                "unsupported schema_version {} (expected {TRACE_SCHEMA_VERSION})",
                parsed.schema_version
            ),
        });
    }
    if parsed.clients.is_empty() {
        return Err(Error::Config("trace file lists no clients".into()));
    }

    let mut seen_ids: Vec<&str> = Vec::new();
    let mut profiles = Vec::with_capacity(parsed.clients.len());
    for client in &parsed.clients {
        let at = || line_of(&text, &format!("\"{}\"", client.id));
        if seen_ids.contains(&client.id.as_str()) {
            return Err(Error::Trace {
                line: at(),
                msg: format!("duplicate client id '{}'", client.id),
            });
        }
        seen_ids.push(&client.id);
        for (i, &(start, end)) in client.availability.iter().enumerate() {
            if end <= start {
                return Err(Error::Trace {
                    line: at(),
                    msg: format!(
                        "client '{}': interval [{start}, {end}) must have end > start",
                        client.id
                    ),
                });
            }
            if i > 0 && client.availability[i - 1].1 > start {
                return Err(Error::Trace {
                    line: at(),
                    msg: format!(
                        "client '{}': intervals must be sorted and non-overlapping",
                        client.id
                    ),
                });
            }
        }
        let profile = ClientProfile {
            availability: AvailabilityProcess::Intervals(client.availability.clone()),
            latency: client.latency.clone(),
            completeness: client.completeness.clone(),
            drop_prob: client.drop_prob,
        };
        profile.validate().map_err(|e| Error::Trace { line: at(), msg: e.to_string() })?;
        profiles.push(profile);
    }
    Ok(profiles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn synthetic_sim(p: f64, n: usize, seed: u64) -> Simulator {
        let cfg = SimulatorConfig::Synthetic {
            availability: AvailabilityModel::Prob(p),
            latency: LatencySpec::Constant(1),
            completeness: CompletenessSpec::Full,
            drop_prob: 0.0,
            overrides: BTreeMap::new(),
        };
        Simulator::new(&cfg, n, seed).unwrap()
    }

    #[test]
    fn full_availability_means_always_idle() {
        let mut sim = synthetic_sim(1.0, 5, 3);
        for t in 0..50 {
            sim.tick_availability(t);
            assert_eq!(sim.idle_clients().len(), 5);
        }
    }

    #[test]
    fn lognormal_clipped_availability_matches_long_run_frequency() {
        // per-client idle fraction over many ticks approximates its clipped draw
        let cfg = SimulatorConfig::Synthetic {
            availability: AvailabilityModel::LognormalClipped { mu: 0.0, sigma: -(0.1f64.ln()) },
            latency: LatencySpec::Constant(1),
            completeness: CompletenessSpec::Full,
            drop_prob: 0.0,
            overrides: BTreeMap::new(),
        };
        let mut sim = Simulator::new(&cfg, 4, 77).unwrap();
        let expected: Vec<f64> = (0..4)
            .map(|k| match &sim.profiles[k].availability {
                AvailabilityProcess::Prob(p) => *p,
                _ => unreachable!(),
            })
            .collect();
        let ticks = 100_000u64;
        let mut idle_count = vec![0u64; 4];
        for t in 0..ticks {
            sim.tick_availability(t);
            for k in sim.idle_clients() {
                idle_count[k] += 1;
            }
        }
        for k in 0..4 {
            let freq = idle_count[k] as f64 / ticks as f64;
            assert!(
                (freq - expected[k]).abs() <= 0.02,
                "client {k}: freq {freq} vs p {}",
                expected[k]
            );
        }
    }

    #[test]
    fn trace_intervals_bound_idleness() {
        let profiles = vec![ClientProfile {
            availability: AvailabilityProcess::Intervals(vec![(5, 10)]),
            latency: LatencySpec::Constant(2),
            completeness: CompletenessSpec::Full,
            drop_prob: 0.0,
        }];
        let mut sim = Simulator::from_profiles(profiles, 1).unwrap();
        for t in 0..15 {
            sim.tick_availability(t);
            let idle = !sim.idle_clients().is_empty();
            assert_eq!(idle, (5..10).contains(&t), "t={t}");
        }
    }

    #[test]
    fn constant_latency_passes_through() {
        let mut sim = synthetic_sim(1.0, 2, 1);
        sim.profiles[0].latency = LatencySpec::Constant(3);
        sim.profiles[1].latency = LatencySpec::Constant(4);
        assert_eq!(sim.sample_latency(0, 0), 3);
        assert_eq!(sim.sample_latency(1, 0), 4);
    }

    #[test]
    fn lognormal_latency_moment_matched_mean() {
        let spec = LatencySpec::LognormalMeanVar { mean: 200.0, var: 50.0 };
        let mut r = rng::stream(5, tag::LATENCY, 0, 0);
        let n = 100_000;
        let sum: f64 = (0..n).map(|_| spec.sample(&mut r) as f64).sum();
        let mean = sum / n as f64;
        // rounding-up biases +0.5; [195, 205] leaves room for it
        assert!((195.0..=205.0).contains(&mean), "sample mean {mean}");
    }

    #[test]
    fn completeness_uniform_steps_mean() {
        let spec = CompletenessSpec::UniformSteps;
        let mut r = rng::stream(9, tag::COMPLETENESS, 0, 0);
        let n = 100_000;
        let sum: f64 = (0..n).map(|_| spec.sample(5, &mut r) as f64).sum();
        let mean = sum / n as f64;
        assert!((mean - 3.0).abs() <= 0.05, "mean {mean}");
        assert_eq!(spec.sample(1, &mut r), 1);
        assert_eq!(CompletenessSpec::Full.sample(7, &mut r), 7);
    }

    #[test]
    fn drop_roll_frequencies() {
        let mut sim = synthetic_sim(1.0, 3, 4);
        sim.profiles[0].drop_prob = 0.0;
        sim.profiles[1].drop_prob = 0.5;
        sim.profiles[2].drop_prob = 1.0;
        let n = 100_000u64;
        assert!((0..n).all(|i| !sim.roll_drop(0, i)));
        assert!((0..n).all(|i| sim.roll_drop(2, i)));
        let rate = (0..n).filter(|&i| sim.roll_drop(1, i)).count() as f64 / n as f64;
        assert!((rate - 0.5).abs() <= 0.01, "drop rate {rate}");
    }

    #[test]
    fn illegal_transition_panics() {
        let mut sim = synthetic_sim(1.0, 1, 1);
        let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
            sim.transition(0, ClientState::Working { finish_at: 3 }, 0);
        }));
        assert!(result.is_err(), "Offline -> Working must be rejected");
    }

    fn write_trace(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn trace_round_trips() {
        let f = write_trace(
            r#"{
  "schema_version": 1,
  "clients": [
    {"id": "a", "availability": [[0, 100]], "latency": {"constant": 2}, "drop_prob": 0.1},
    {"id": "b", "availability": [[5, 10], [20, 30]], "latency": {"uniform": {"lo": 1.0, "hi": 4.0}}}
  ]
}"#,
        );
        let profiles = load_trace(f.path()).unwrap();
        assert_eq!(profiles.len(), 2);
        assert_eq!(profiles[0].latency, LatencySpec::Constant(2));
        assert_eq!(
            profiles[1].availability,
            AvailabilityProcess::Intervals(vec![(5, 10), (20, 30)])
        );
    }

    #[test]
    fn overlapping_intervals_rejected_with_line() {
        let f = write_trace(
            r#"{
  "schema_version": 1,
  "clients": [
    {"id": "bad", "availability": [[0, 10], [5, 20]], "latency": {"constant": 1}}
  ]
}"#,
        );
        match load_trace(f.path()) {
            Err(Error::Trace { line, msg }) => {
                assert_eq!(line, 4);
                assert!(msg.contains("non-overlapping"), "{msg}");
            }
            other => panic!("expected trace error, got {other:?}"),
        }
    }

    #[test]
    fn empty_client_list_rejected() {
        let f = write_trace(r#"{"schema_version": 1, "clients": []}"#);
        assert!(matches!(load_trace(f.path()), Err(Error::Config(_))));
    }

    #[test]
    fn overrides_apply_per_client() {
        let mut overrides = BTreeMap::new();
        overrides.insert(1usize, ProfileOverride { drop_prob: Some(0.9), ..Default::default() });
        let cfg = SimulatorConfig::Synthetic {
            availability: AvailabilityModel::Prob(1.0),
            latency: LatencySpec::Constant(1),
            completeness: CompletenessSpec::Full,
            drop_prob: 0.0,
            overrides,
        };
        let sim = Simulator::new(&cfg, 2, 1).unwrap();
        assert_eq!(sim.profile(0).drop_prob, 0.0);
        assert_eq!(sim.profile(1).drop_prob, 0.9);
        // config survives a JSON round trip (integer map keys included)
        let json = serde_json::to_string(&cfg).unwrap();
        let back: SimulatorConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }
}
