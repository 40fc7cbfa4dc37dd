//! Simulation outputs: per-job records, aggregate metrics, baseline-paired
//! ratios, and the event log. Everything serializes to finite JSON so runs
//! can be diffed byte for byte.

use serde::{Deserialize, Serialize};

/// Aggregates over one run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Metrics {
    pub throughput_jobs_per_s: f64,
    pub energy_joules: f64,
    /// Time-averaged fraction of GPU memory held by running jobs' physical
    /// footprints (context excluded).
    pub mean_mem_utilization: f64,
    pub mean_turnaround_s: f64,
    pub makespan_s: f64,
    pub reconfigurations: u64,
    pub completed_jobs: u64,
    pub total_wasted_iterations: u64,
}

/// Ratios against the paired baseline run, oriented so that bigger is
/// better: throughput and utilization as policy/baseline, energy, turnaround
/// and makespan as baseline/policy.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NormalizedVsBaseline {
    pub throughput_ratio: f64,
    pub energy_improvement: f64,
    pub mem_utilization_ratio: f64,
    pub turnaround_improvement: f64,
    pub makespan_improvement: f64,
}

impl NormalizedVsBaseline {
    /// `None` whenever any denominator would be zero, keeping the report
    /// free of NaN/Inf.
    pub fn compute(policy: &Metrics, baseline: &Metrics) -> Option<Self> {
        if baseline.throughput_jobs_per_s <= 0.0
            || policy.energy_joules <= 0.0
            || baseline.mean_mem_utilization <= 0.0
            || policy.mean_turnaround_s <= 0.0
            || policy.makespan_s <= 0.0
        {
            return None;
        }
        Some(NormalizedVsBaseline {
            throughput_ratio: policy.throughput_jobs_per_s / baseline.throughput_jobs_per_s,
            energy_improvement: baseline.energy_joules / policy.energy_joules,
            mem_utilization_ratio: policy.mean_mem_utilization / baseline.mean_mem_utilization,
            turnaround_improvement: baseline.mean_turnaround_s / policy.mean_turnaround_s,
            makespan_improvement: baseline.makespan_s / policy.makespan_s,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JobRecord {
    pub id: String,
    pub arrival_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_start_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub completion_s: Option<f64>,
    pub restarts: u32,
    /// Iterations executed and then discarded by OOM restarts or preemptive
    /// early restarts.
    pub wasted_iterations: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimReport {
    pub gpu_name: String,
    pub policy: String,
    pub prediction_enabled: bool,
    pub seed: u64,
    pub jobs: Vec<JobRecord>,
    pub metrics: Metrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_metrics: Option<Metrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalized: Option<NormalizedVsBaseline>,
}

impl SimReport {
    pub fn to_json_string(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }

    /// The aggregate table as CSV: one row per run (policy first, baseline
    /// second when paired).
    pub fn metrics_csv(&self) -> String {
        let mut out = String::from(
            "policy,throughput_jobs_per_s,energy_joules,mean_mem_utilization,\
             mean_turnaround_s,makespan_s,reconfigurations,completed_jobs,total_wasted_iterations\n",
        );
        let mut push_row = |name: &str, m: &Metrics| {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                name,
                m.throughput_jobs_per_s,
                m.energy_joules,
                m.mean_mem_utilization,
                m.mean_turnaround_s,
                m.makespan_s,
                m.reconfigurations,
                m.completed_jobs,
                m.total_wasted_iterations
            ));
        };
        push_row(&self.policy, &self.metrics);
        if let Some(baseline) = &self.baseline_metrics {
            push_row("baseline", baseline);
        }
        out
    }
}

/// One line of the optional event log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventRecord {
    pub t: f64,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub job: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
    #[serde(skip_serializing_if = "String::is_empty", default)]
    pub detail: String,
}

pub fn event_log_to_jsonl(events: &[EventRecord]) -> String {
    let mut out = String::new();
    for ev in events {
        out.push_str(&serde_json::to_string(ev).expect("event serializes"));
        out.push('\n');
    }
    out
}
