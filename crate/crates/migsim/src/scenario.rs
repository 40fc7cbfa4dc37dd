//! Scenario files: the jobs, policy, predictor knobs, power model, and
//! device a simulation run is built from.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{CatalogError, PlacementCatalog};
use crate::predictor::{IterationSample, DEFAULT_EPSILON, DEFAULT_HORIZON, DEFAULT_K, DEFAULT_N_MIN, DEFAULT_Z};
use crate::scheduler::{PolicyKind, SchedulingPolicy};
use crate::trace::{self, TraceError, TraceGenParams};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("scenario validation error for `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("i/o error reading scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation { field: field.into(), message: message.into() }
}

/// How the job's memory footprint is known to the scheduler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryClass {
    /// Footprint known exactly up front (compiler-analyzed workloads).
    Static,
    /// Offline estimate that may undershoot the true footprint.
    Estimated,
    /// Footprint only observable from the per-iteration trace.
    Dynamic,
}

/// One workload in a scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    pub id: String,
    pub memory_class: MemoryClass,
    /// Declared workload bytes (context excluded). Required for static and
    /// estimated jobs; an optional initial-placement hint for dynamic jobs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_mem_bytes: Option<u64>,
    /// Actual footprint for estimated jobs when the estimate may be wrong.
    /// Defaults to the declared value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_mem_bytes: Option<u64>,
    /// Inline per-iteration trace for dynamic jobs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<IterationSample>>,
    /// Synthetic trace parameters for dynamic jobs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_gen: Option<TraceGenParams>,
    /// Trace CSV path, relative to the scenario file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_file: Option<String>,
    #[serde(default = "default_iterations")]
    pub iterations: u32,
    pub iter_duration_s: f64,
    #[serde(default)]
    pub transfer_fraction: f64,
    #[serde(default)]
    pub warp_demand: u64,
    #[serde(default)]
    pub arrival_s: f64,
    #[serde(default)]
    pub startup_overhead_s: f64,
}

fn default_iterations() -> u32 {
    1
}

/// Parametric power model standing in for hardware polling.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PowerModel {
    pub idle_watts: f64,
    pub watts_per_compute_slice: f64,
    pub reconfig_latency_s: f64,
    /// Board power during a reconfiguration window (replaces idle).
    pub reconfig_watts: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        PowerModel {
            idle_watts: 30.0,
            watts_per_compute_slice: 25.0,
            reconfig_latency_s: 0.5,
            reconfig_watts: 30.0,
        }
    }
}

/// Forecast knobs shared by every dynamic job in a scenario.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictorParams {
    pub z: f64,
    pub epsilon: f64,
    pub k: usize,
    pub n_min: usize,
    /// Fallback horizon for workloads with no declared iteration count.
    pub horizon: u32,
}

impl Default for PredictorParams {
    fn default() -> Self {
        PredictorParams {
            z: DEFAULT_Z,
            epsilon: DEFAULT_EPSILON,
            k: DEFAULT_K,
            n_min: DEFAULT_N_MIN,
            horizon: DEFAULT_HORIZON,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    pub prediction_enabled: bool,
}

impl Default for PolicySpec {
    fn default() -> Self {
        PolicySpec { kind: PolicyKind::SchemeA, prediction_enabled: true }
    }
}

impl From<PolicySpec> for SchedulingPolicy {
    fn from(spec: PolicySpec) -> Self {
        SchedulingPolicy { kind: spec.kind, prediction_enabled: spec.prediction_enabled }
    }
}

/// A full simulation input.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog_path: Option<String>,
    #[serde(default)]
    pub policy: PolicySpec,
    #[serde(default)]
    pub predictor: PredictorParams,
    #[serde(default)]
    pub power: PowerModel,
    #[serde(default)]
    pub contention_enabled: bool,
    /// Streaming multiprocessor count for warp folding.
    #[serde(default = "default_total_sms")]
    pub total_sms: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub paired_baseline: bool,
    pub jobs: Vec<JobSpec>,
}

fn default_total_sms() -> u64 {
    108
}

impl Scenario {
    /// Parse and validate a scenario from JSON text. Performs no file i/o;
    /// trace files are resolved later by [`SimInput::prepare`].
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario =
            serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        let finite = |v: f64| v.is_finite();
        if !finite(self.power.idle_watts)
            || !finite(self.power.watts_per_compute_slice)
            || !finite(self.power.reconfig_latency_s)
            || !finite(self.power.reconfig_watts)
            || self.power.idle_watts < 0.0
            || self.power.watts_per_compute_slice < 0.0
            || self.power.reconfig_latency_s < 0.0
            || self.power.reconfig_watts < 0.0
        {
            return Err(invalid("power", "power parameters must be finite and non-negative"));
        }
        let p = &self.predictor;
        if !finite(p.z) || p.z < 0.0 || !finite(p.epsilon) || p.epsilon <= 0.0 || p.k == 0 {
            return Err(invalid("predictor", "z >= 0, epsilon > 0 and k >= 1 required"));
        }
        if self.total_sms == 0 {
            return Err(invalid("total_sms", "must be positive"));
        }
        let mut ids: Vec<&str> = self.jobs.iter().map(|j| j.id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != self.jobs.len() {
            return Err(invalid("jobs", "job ids must be unique"));
        }
        for job in &self.jobs {
            let field = format!("jobs.{}", job.id);
            if job.id.is_empty() {
                return Err(invalid("jobs", "job ids must be non-empty"));
            }
            if job.iterations == 0 {
                return Err(invalid(&field, "iterations must be at least 1"));
            }
            if !finite(job.iter_duration_s) || job.iter_duration_s < 0.0 {
                return Err(invalid(&field, "iter_duration_s must be finite and non-negative"));
            }
            if !finite(job.transfer_fraction)
                || !(0.0..=1.0).contains(&job.transfer_fraction)
            {
                return Err(invalid(&field, "transfer_fraction must lie in [0, 1]"));
            }
            if !finite(job.arrival_s) || job.arrival_s < 0.0 {
                return Err(invalid(&field, "arrival_s must be finite and non-negative"));
            }
            if !finite(job.startup_overhead_s) || job.startup_overhead_s < 0.0 {
                return Err(invalid(&field, "startup_overhead_s must be finite and non-negative"));
            }
            match job.memory_class {
                MemoryClass::Static | MemoryClass::Estimated => {
                    if job.declared_mem_bytes.is_none() {
                        return Err(invalid(&field, "static/estimated jobs need declared_mem_bytes"));
                    }
                }
                MemoryClass::Dynamic => {
                    let sources = [
                        job.trace.is_some(),
                        job.trace_gen.is_some(),
                        job.trace_file.is_some(),
                    ]
                    .iter()
                    .filter(|&&s| s)
                    .count();
                    if sources != 1 {
                        return Err(invalid(
                            &field,
                            "dynamic jobs need exactly one of trace, trace_gen, trace_file",
                        ));
                    }
                    if let Some(trace) = &job.trace {
                        if (trace.len() as u32) < job.iterations {
                            return Err(invalid(&field, "inline trace shorter than iterations"));
                        }
                        for (i, s) in trace.iter().enumerate() {
                            if s.iteration as usize != i + 1 {
                                return Err(invalid(&field, "inline trace iterations out of order"));
                            }
                            if !(s.reuse_ratio > 0.0 && s.reuse_ratio <= 1.0) {
                                return Err(invalid(&field, "reuse_ratio outside (0, 1]"));
                            }
                        }
                    }
                    if let Some(gen) = &job.trace_gen {
                        if !finite(gen.a)
                            || !finite(gen.b)
                            || !finite(gen.sigma)
                            || gen.sigma < 0.0
                            || !finite(gen.inv_a)
                            || !finite(gen.inv_b)
                        {
                            return Err(invalid(&field, "trace_gen parameters must be finite, sigma >= 0"));
                        }
                    }
                }
            }
            if let Some(gen) = &job.trace_gen {
                if let Some(n) = gen.n {
                    if n < job.iterations {
                        return Err(invalid(&field, "trace_gen.n shorter than iterations"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// A scenario with its catalog loaded and every dynamic trace materialized.
pub struct SimInput {
    pub scenario: Scenario,
    pub catalog: Arc<PlacementCatalog>,
    /// Per job, in scenario order; `None` for non-dynamic jobs.
    pub traces: Vec<Option<Arc<Vec<IterationSample>>>>,
    /// Run seed actually in effect (scenario seed unless overridden).
    pub seed: u64,
}

impl SimInput {
    /// Resolve the catalog and all traces. `base_dir` anchors relative
    /// catalog/trace paths; `catalog_override` wins over the scenario's
    /// `catalog_path`, which wins over the bundled A100. Synthetic trace
    /// seeds are offset by the run seed, so seed 0 reproduces the pinned
    /// traces exactly.
    pub fn prepare(
        scenario: Scenario,
        base_dir: Option<&Path>,
        catalog_override: Option<Arc<PlacementCatalog>>,
        seed_override: Option<u64>,
    ) -> Result<Self, ScenarioError> {
        let seed = seed_override.unwrap_or(scenario.seed);
        let catalog = match catalog_override {
            Some(catalog) => catalog,
            None => match &scenario.catalog_path {
                Some(path) => {
                    let resolved = match base_dir {
                        Some(dir) => dir.join(path),
                        None => Path::new(path).to_path_buf(),
                    };
                    Arc::new(PlacementCatalog::load(resolved)?)
                }
                None => PlacementCatalog::a100_40gb(),
            },
        };
        let mut traces = Vec::with_capacity(scenario.jobs.len());
        for job in &scenario.jobs {
            let trace = match (&job.trace, &job.trace_gen, &job.trace_file) {
                (Some(inline), _, _) => Some(Arc::new(inline.clone())),
                (_, Some(params), _) => {
                    let n = params.n.unwrap_or(job.iterations);
                    let effective = TraceGenParams {
                        seed: params.seed.wrapping_add(seed),
                        ..*params
                    };
                    Some(Arc::new(trace::gen_trace(&effective, n)))
                }
                (_, _, Some(path)) => {
                    let resolved = match base_dir {
                        Some(dir) => dir.join(path),
                        None => Path::new(path).to_path_buf(),
                    };
                    let samples = trace::load_trace(resolved)?;
                    if (samples.len() as u32) < job.iterations {
                        return Err(invalid(
                            format!("jobs.{}", job.id),
                            "trace file shorter than iterations",
                        ));
                    }
                    Some(Arc::new(samples))
                }
                _ => None,
            };
            traces.push(trace);
        }
        Ok(SimInput { scenario, catalog, traces, seed })
    }
}
