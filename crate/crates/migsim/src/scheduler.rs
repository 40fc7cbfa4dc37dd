//! Scheduling policies over the partition state machine.
//!
//! Scheme A groups jobs by slice size and runs one homogeneous GPU
//! configuration per group, minimizing reconfigurations. Scheme B serves jobs
//! strictly in arrival order, allocating, merging, or splitting idle
//! partitions on demand and waiting when nothing fits. Both recover from OOM
//! by restarting the job on the next-larger slice; with prediction enabled a
//! converged forecast that crosses the slice capacity preempts early instead.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{FitError, PlacementCatalog};
use crate::fsm::{Instance, PartitionState, ReachabilityTable};
use crate::predictor::MemoryForecast;

#[derive(Debug, Error)]
pub enum SchedulerError {
    #[error("job `{job}` is unsatisfiable: {reason}")]
    UnsatisfiableJob { job: String, reason: String },
}

/// Which policy drives the run. The baseline executes one job at a time on
/// the whole, unpartitioned GPU and ignores prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Baseline,
    SchemeA,
    SchemeB,
}

impl PolicyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyKind::Baseline => "baseline",
            PolicyKind::SchemeA => "scheme_a",
            PolicyKind::SchemeB => "scheme_b",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SchedulingPolicy {
    pub kind: PolicyKind,
    pub prediction_enabled: bool,
}

impl SchedulingPolicy {
    pub fn predicts(&self) -> bool {
        self.prediction_enabled && self.kind != PolicyKind::Baseline
    }
}

/// A queued job as the scheduler sees it. `current_mem_requirement` is the
/// total instance size the job needs, context included; it never decreases
/// across restarts.
#[derive(Debug, Clone)]
pub struct QueueEntry {
    pub job_idx: usize,
    pub current_mem_requirement: u64,
    pub warp_demand: u64,
    pub restarts: u32,
}

impl QueueEntry {
    /// Initial entry for a job with a known or hinted workload footprint
    /// (context-exclusive bytes). Dynamic jobs without a hint start on the
    /// smallest profile.
    pub fn new(
        job_idx: usize,
        declared_bytes: Option<u64>,
        warp_demand: u64,
        catalog: &PlacementCatalog,
    ) -> Self {
        let requirement = match declared_bytes {
            Some(bytes) => bytes.saturating_add(catalog.reserved_context_bytes),
            None => catalog
                .profiles
                .first()
                .map(|p| p.memory_bytes)
                .unwrap_or(0),
        };
        QueueEntry {
            job_idx,
            current_mem_requirement: requirement,
            warp_demand,
            restarts: 0,
        }
    }

    /// The slice class this entry belongs to: the memory size of its tight
    /// fit.
    pub fn group_class(
        &self,
        catalog: &PlacementCatalog,
        total_sms: u64,
    ) -> Result<u64, FitError> {
        catalog
            .fit_total_bytes(self.current_mem_requirement, self.warp_demand, total_sms)
            .map(|(_, p)| p.memory_bytes)
    }
}

/// Requeue an entry after an OOM on `failed_bytes` worth of slice: the new
/// requirement is the next-larger slice size on the catalog's ladder, and
/// the job restarts from iteration zero (quick restart, no checkpoint).
pub fn handle_oom(
    entry: &QueueEntry,
    failed_bytes: u64,
    catalog: &PlacementCatalog,
    job_id: &str,
) -> Result<QueueEntry, SchedulerError> {
    let next = catalog
        .memory_ladder()
        .into_iter()
        .find(|&size| size > failed_bytes)
        .ok_or_else(|| SchedulerError::UnsatisfiableJob {
            job: job_id.to_string(),
            reason: format!("OOM on the largest slice ({failed_bytes} bytes)"),
        })?;
    Ok(QueueEntry {
        job_idx: entry.job_idx,
        current_mem_requirement: next.max(entry.current_mem_requirement),
        warp_demand: entry.warp_demand,
        restarts: entry.restarts + 1,
    })
}

/// Outcome of the early-restart check at an iteration boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RestartDecision {
    Continue,
    /// Preempt now and requeue with this total requirement (the forecast
    /// peak, which already includes the context constant).
    Preempt { new_requirement: u64 },
}

/// Preempt when a converged forecast says the peak will not fit the current
/// slice. The forecast peak and the slice size are both context-inclusive,
/// so they compare directly.
pub fn early_restart_check(
    entry: &QueueEntry,
    forecast: &MemoryForecast,
    slice_bytes: u64,
) -> RestartDecision {
    if !forecast.converged {
        return RestartDecision::Continue;
    }
    if forecast.peak_prediction_bytes > slice_bytes as f64 {
        let predicted = forecast.peak_prediction_bytes.ceil() as u64;
        RestartDecision::Preempt {
            new_requirement: predicted.max(entry.current_mem_requirement.saturating_add(1)),
        }
    } else {
        RestartDecision::Continue
    }
}

/// The homogeneous configuration Scheme A uses for one slice class: starting
/// from the empty state, repeatedly allocate same-memory profiles on the
/// successor with maximal fcr (ties prefer more compute slices, then higher
/// start) until none fits. On the A100 this yields 7x5GB, 3x10GB,
/// 4g.20gb@0 + 3g.20gb@4, and 1x40GB.
pub fn homogeneous_config(table: &ReachabilityTable, class_bytes: u64) -> Vec<Instance> {
    let catalog = table.catalog();
    let mut state = PartitionState::empty();
    loop {
        let mut idx = table.state_index(&state).expect("state enumerated");
        let mut best: Option<(u64, u32, u32, usize)> = None;
        for edge in table.alloc_edges(idx) {
            let profile = catalog.profile(edge.profile_idx);
            if profile.memory_bytes != class_bytes {
                continue;
            }
            let key = (
                table.fcr(edge.successor),
                profile.compute_slices,
                edge.start_slot,
                edge.successor,
            );
            if best.is_none_or(|b| (key.0, key.1, key.2) > (b.0, b.1, b.2)) {
                best = Some(key);
            }
        }
        match best {
            Some((_, _, _, successor)) => {
                idx = successor;
                state = table.state(idx).clone();
            }
            None => break,
        }
    }
    state.instances().to_vec()
}

/// Round-robin static division of a job list over `n_slices` slices.
pub fn divide_round_robin(jobs: &[usize], n_slices: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); n_slices.max(1)];
    for (i, &job) in jobs.iter().enumerate() {
        out[i % n_slices.max(1)].push(job);
    }
    out
}

/// One reconfiguration round of a Scheme A plan.
#[derive(Debug, Clone)]
pub struct GroupRound {
    pub class_bytes: u64,
    pub config: Vec<Instance>,
    /// Job indices per slice, in slice order.
    pub per_slice_jobs: Vec<Vec<usize>>,
}

/// The static Scheme A plan: rounds in ascending slice-size order, each with
/// its homogeneous configuration and round-robin job division. The engine
/// executes the same structure incrementally so OOM promotions can join
/// later rounds.
pub fn schedule_by_group(
    entries: &[QueueEntry],
    table: &ReachabilityTable,
    total_sms: u64,
    job_ids: &[String],
) -> Result<Vec<GroupRound>, SchedulerError> {
    let catalog = table.catalog();
    let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for entry in entries {
        let class = entry.group_class(catalog, total_sms).map_err(|e| {
            SchedulerError::UnsatisfiableJob {
                job: job_ids[entry.job_idx].clone(),
                reason: e.to_string(),
            }
        })?;
        groups.entry(class).or_default().push(entry.job_idx);
    }
    Ok(groups
        .into_iter()
        .map(|(class_bytes, jobs)| {
            let config = homogeneous_config(table, class_bytes);
            let per_slice_jobs = divide_round_robin(&jobs, config.len());
            GroupRound { class_bytes, config, per_slice_jobs }
        })
        .collect())
}

/// What Scheme B should do with the head-of-line job right now.
#[derive(Debug, Clone, PartialEq)]
pub enum SchemeBDecision {
    /// Point the job at an existing idle instance; no reconfiguration.
    ReuseIdle { start_slot: u32 },
    /// Create a new instance (reconfiguration).
    Alloc { instance: Instance },
    /// Release these idle instances, then create the instance
    /// (reconfiguration).
    Merge { release_starts: Vec<u32>, instance: Instance },
    /// Nothing fits without disturbing running jobs: wait for a completion.
    Wait,
}

/// Scheme B placement for the head job. Tries, in order: an idle instance of
/// the job's size class, a fresh tight allocation, a merge/split of idle
/// instances for the tight profile, then the same for wave-degrading
/// variants of the class, and finally waits. Head-of-line order is the
/// caller's responsibility.
pub fn scheme_b_place(
    table: &ReachabilityTable,
    state: &PartitionState,
    idle: &[(u32, usize)],
    entry: &QueueEntry,
    total_sms: u64,
    job_id: &str,
) -> Result<SchemeBDecision, SchedulerError> {
    let catalog = table.catalog();
    let (_, tight) = catalog
        .fit_total_bytes(entry.current_mem_requirement, entry.warp_demand, total_sms)
        .map_err(|e| SchedulerError::UnsatisfiableJob {
            job: job_id.to_string(),
            reason: e.to_string(),
        })?;
    let variants = catalog.class_variants(tight.memory_bytes, entry.warp_demand, total_sms);

    // (1) An idle instance of the right class; tight profile first, highest
    // start on ties.
    for &variant in &variants {
        if let Some(&(start, _)) = idle
            .iter()
            .filter(|(_, p)| *p == variant)
            .max_by_key(|(s, _)| *s)
        {
            return Ok(SchemeBDecision::ReuseIdle { start_slot: start });
        }
    }
    // (2) Fresh allocation of the tight profile, (3) merge/split for it,
    // then the same pair for each degraded variant.
    let idle_starts: Vec<u32> = idle.iter().map(|(s, _)| *s).collect();
    let try_variant = |variant: usize| -> Option<SchemeBDecision> {
        if let Some(placement) = table.allocate_partition(state, variant) {
            return Some(SchemeBDecision::Alloc { instance: placement.instance });
        }
        table
            .merge_candidates(state, variant, &idle_starts)
            .into_iter()
            .next()
            .map(|c| SchemeBDecision::Merge {
                release_starts: c.release_starts,
                instance: c.alloc,
            })
    };
    for &variant in &variants {
        if let Some(decision) = try_variant(variant) {
            return Ok(decision);
        }
    }
    Ok(SchemeBDecision::Wait)
}
