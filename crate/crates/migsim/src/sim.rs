//! Deterministic discrete-event engine.
//!
//! Executes one scenario under one policy: arrivals, per-iteration progress,
//! PCIe contention, OOM restarts, predictor-driven early restarts, GPU
//! reconfigurations with latency, and power/energy/memory accounting.
//! Identical inputs and seed produce byte-identical reports. Event ties break
//! by (time, kind priority, job, insertion order) with completions first and
//! scheduling last, so capacity freed at an instant is visible to the
//! scheduling pass at that same instant.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};
use std::sync::Arc;

use thiserror::Error;

use crate::catalog::{wave_count, PlacementCatalog};
use crate::fsm::{Action, Instance, PartitionState, ReachabilityTable};
use crate::predictor::{ForecastConfig, MemoryForecast, StaticOverheads};
use crate::report::{EventRecord, JobRecord, Metrics, NormalizedVsBaseline, SimReport};
use crate::scenario::{JobSpec, MemoryClass, PowerModel, SimInput};
use crate::scheduler::{
    self, PolicyKind, QueueEntry, RestartDecision, SchedulingPolicy, SchemeBDecision,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("scenario error: {0}")]
    Scenario(String),
    #[error(transparent)]
    Fsm(#[from] crate::fsm::FsmError),
}

// Event-kind priorities at equal timestamps.
const PRIO_ITER_END: u8 = 0;
const PRIO_OOM: u8 = 1;
const PRIO_PREEMPT: u8 = 2;
const PRIO_RECONFIG_DONE: u8 = 3;
const PRIO_ARRIVAL: u8 = 4;
const PRIO_SCHEDULE: u8 = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
enum EventKind {
    IterEnd { job: usize },
    Oom { job: usize },
    Preempt { job: usize },
    ReconfigDone,
    Arrival { job: usize },
    Schedule,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    t: f64,
    prio: u8,
    job: usize,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed so the BinaryHeap pops the earliest event first.
        other
            .t
            .partial_cmp(&self.t)
            .expect("event times are finite")
            .then(other.prio.cmp(&self.prio))
            .then(other.job.cmp(&self.job))
            .then(other.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum JobPlacement {
    Slice { start_slot: u32 },
    WholeGpu,
}

struct JobRt {
    requirement: u64,
    restarts: u32,
    wasted: u64,
    /// Iteration currently in flight (0 when not running).
    iter: u32,
    placement: Option<JobPlacement>,
    first_start: Option<f64>,
    completion: Option<f64>,
    done: bool,
    forecast: Option<MemoryForecast>,
    preempt_requirement: Option<u64>,
    /// Current contribution to the memory-utilization integral.
    contrib: f64,
}

struct GpuState {
    state: PartitionState,
    busy: BTreeMap<u32, usize>,
    whole_gpu_busy: Option<usize>,
}

impl GpuState {
    fn idle_instances(&self, catalog: &PlacementCatalog) -> Vec<(u32, usize)> {
        let _ = catalog;
        self.state
            .instances()
            .iter()
            .filter(|i| !self.busy.contains_key(&i.start_slot))
            .map(|i| (i.start_slot, i.profile_idx))
            .collect()
    }
}

struct SliceRun {
    start_slot: u32,
    queue: VecDeque<usize>,
}

struct GroupRun {
    class_bytes: u64,
    slices: Vec<SliceRun>,
    rr: usize,
    reconfiguring: bool,
}

enum PolicyState {
    Baseline {
        queue: VecDeque<usize>,
    },
    SchemeA {
        pending: BTreeMap<u64, VecDeque<usize>>,
        current: Option<GroupRun>,
    },
    SchemeB {
        queue: VecDeque<usize>,
        pending_start: Option<(usize, u32)>,
    },
}

struct Accum {
    last_t: f64,
    energy_j: f64,
    active_slices: u32,
    in_reconfig: bool,
    mem_sum_bytes: f64,
    mem_byte_seconds: f64,
}

impl Accum {
    fn advance(&mut self, t: f64, power: &PowerModel) {
        let dt = t - self.last_t;
        if dt > 0.0 {
            let board = if self.in_reconfig { power.reconfig_watts } else { power.idle_watts };
            self.energy_j +=
                (board + power.watts_per_compute_slice * self.active_slices as f64) * dt;
            self.mem_byte_seconds += self.mem_sum_bytes * dt;
        }
        self.last_t = t;
    }
}

struct Engine<'a> {
    input: &'a SimInput,
    catalog: Arc<PlacementCatalog>,
    table: Arc<ReachabilityTable>,
    policy: SchedulingPolicy,
    now: f64,
    seq: u64,
    events: BinaryHeap<Event>,
    jobs: Vec<JobRt>,
    gpu: GpuState,
    sched: PolicyState,
    accum: Accum,
    reconfigurations: u64,
    log: Option<Vec<EventRecord>>,
}

/// Per-job slowdown factors from PCIe sharing: each transferring job's
/// transfer phase stretches by the number of concurrently transferring jobs.
/// Kernel phases are unaffected.
pub fn apply_contention(active_transfer_jobs: usize) -> f64 {
    active_transfer_jobs.max(1) as f64
}

impl<'a> Engine<'a> {
    fn new(
        input: &'a SimInput,
        table: Arc<ReachabilityTable>,
        policy: SchedulingPolicy,
        log_events: bool,
    ) -> Self {
        let jobs = input
            .scenario
            .jobs
            .iter()
            .enumerate()
            .map(|(idx, spec)| JobRt {
                requirement: QueueEntry::new(
                    idx,
                    initial_declared(spec),
                    spec.warp_demand,
                    &input.catalog,
                )
                .current_mem_requirement,
                restarts: 0,
                wasted: 0,
                iter: 0,
                placement: None,
                first_start: None,
                completion: None,
                done: false,
                forecast: None,
                preempt_requirement: None,
                contrib: 0.0,
            })
            .collect();
        let sched = match policy.kind {
            PolicyKind::Baseline => PolicyState::Baseline { queue: VecDeque::new() },
            PolicyKind::SchemeA => {
                PolicyState::SchemeA { pending: BTreeMap::new(), current: None }
            }
            PolicyKind::SchemeB => {
                PolicyState::SchemeB { queue: VecDeque::new(), pending_start: None }
            }
        };
        Engine {
            input,
            catalog: Arc::clone(&input.catalog),
            table,
            policy,
            now: 0.0,
            seq: 0,
            events: BinaryHeap::new(),
            jobs,
            gpu: GpuState {
                state: PartitionState::empty(),
                busy: BTreeMap::new(),
                whole_gpu_busy: None,
            },
            sched,
            accum: Accum {
                last_t: 0.0,
                energy_j: 0.0,
                active_slices: 0,
                in_reconfig: false,
                mem_sum_bytes: 0.0,
                mem_byte_seconds: 0.0,
            },
            reconfigurations: 0,
            log: if log_events { Some(Vec::new()) } else { None },
        }
    }

    fn spec(&self, job: usize) -> &JobSpec {
        &self.input.scenario.jobs[job]
    }

    fn job_id(&self, job: usize) -> &str {
        &self.input.scenario.jobs[job].id
    }

    fn push(&mut self, t: f64, prio: u8, job: usize, kind: EventKind) {
        debug_assert!(t.is_finite() && t >= self.now);
        let seq = self.seq;
        self.seq += 1;
        self.events.push(Event { t, prio, job, seq, kind });
    }

    fn record(&mut self, kind: &str, job: Option<usize>, detail: String) {
        if self.log.is_none() {
            return;
        }
        let record = EventRecord {
            t: self.now,
            kind: kind.to_string(),
            job: job.map(|j| self.job_id(j).to_string()),
            instance: job.and_then(|j| self.jobs[j].placement).map(|p| self.placement_label(p)),
            detail,
        };
        self.log.as_mut().unwrap().push(record);
    }

    fn placement_label(&self, placement: JobPlacement) -> String {
        match placement {
            JobPlacement::WholeGpu => "full-gpu".to_string(),
            JobPlacement::Slice { start_slot } => {
                match self.gpu.state.instance_at(start_slot) {
                    Some(inst) => format!(
                        "{}@{}",
                        self.catalog.profile(inst.profile_idx).name,
                        start_slot
                    ),
                    None => format!("slot@{start_slot}"),
                }
            }
        }
    }

    fn entry_for(&self, job: usize) -> QueueEntry {
        QueueEntry {
            job_idx: job,
            current_mem_requirement: self.jobs[job].requirement,
            warp_demand: self.spec(job).warp_demand,
            restarts: self.jobs[job].restarts,
        }
    }

    fn capacity_of(&self, placement: JobPlacement) -> u64 {
        match placement {
            JobPlacement::WholeGpu => self.catalog.total_memory_bytes(),
            JobPlacement::Slice { start_slot } => {
                let inst = self
                    .gpu
                    .state
                    .instance_at(start_slot)
                    .expect("placed job sits on an existing instance");
                self.catalog.profile(inst.profile_idx).memory_bytes
            }
        }
    }

    fn compute_of(&self, placement: JobPlacement) -> u32 {
        match placement {
            JobPlacement::WholeGpu => self.catalog.total_compute_slices,
            JobPlacement::Slice { start_slot } => {
                let inst = self.gpu.state.instance_at(start_slot).expect("instance exists");
                self.catalog.profile(inst.profile_idx).compute_slices
            }
        }
    }

    /// Physical bytes demanded during iteration `k` (context excluded).
    fn physical_bytes(&self, job: usize, k: u32) -> f64 {
        let spec = self.spec(job);
        match spec.memory_class {
            MemoryClass::Dynamic => {
                let trace = self.input.traces[job].as_ref().expect("dynamic job has trace");
                let sample = &trace[(k - 1) as usize];
                sample.requested_bytes as f64 * sample.reuse_ratio
            }
            MemoryClass::Static => spec.declared_mem_bytes.unwrap_or(0) as f64,
            MemoryClass::Estimated => {
                spec.true_mem_bytes.or(spec.declared_mem_bytes).unwrap_or(0) as f64
            }
        }
    }

    /// Contribution to the utilization integral: the physical footprint,
    /// capped at what the instance can actually hold.
    fn contrib_bytes(&self, job: usize, k: u32, placement: JobPlacement) -> f64 {
        let cap = self.capacity_of(placement) as f64
            - self.catalog.reserved_context_bytes as f64;
        self.physical_bytes(job, k).min(cap.max(0.0))
    }

    fn transferring_count(&self) -> usize {
        self.jobs
            .iter()
            .enumerate()
            .filter(|(idx, j)| {
                j.placement.is_some() && !j.done && self.spec(*idx).transfer_fraction > 0.0
            })
            .count()
    }

    fn wave_factor(&self, job: usize, placement: JobPlacement) -> f64 {
        let warps = self.spec(job).warp_demand;
        if warps == 0 {
            return 1.0;
        }
        let total = self.catalog.total_compute_slices;
        let sms = self.input.scenario.total_sms;
        let full_waves = wave_count(warps, sms, total, total);
        if full_waves == 0 {
            return 1.0;
        }
        let on = match placement {
            JobPlacement::WholeGpu => full_waves,
            JobPlacement::Slice { start_slot } => {
                let inst = self.gpu.state.instance_at(start_slot).expect("instance exists");
                let profile = self.catalog.profile(inst.profile_idx);
                wave_count(warps, sms, profile.compute_slices, total)
            }
        };
        on as f64 / full_waves as f64
    }

    fn iter_duration(&self, job: usize, k: u32) -> f64 {
        let spec = self.spec(job);
        let placement = self.jobs[job].placement.expect("running job is placed");
        let startup = if k == 1 { spec.startup_overhead_s } else { 0.0 };
        let kernel =
            spec.iter_duration_s * (1.0 - spec.transfer_fraction) * self.wave_factor(job, placement);
        let factor = if self.input.scenario.contention_enabled && spec.transfer_fraction > 0.0 {
            apply_contention(self.transferring_count())
        } else {
            1.0
        };
        let transfer = spec.iter_duration_s * spec.transfer_fraction * factor;
        startup + kernel + transfer
    }

    fn set_contrib(&mut self, job: usize, value: f64) {
        let old = self.jobs[job].contrib;
        self.accum.mem_sum_bytes += value - old;
        self.jobs[job].contrib = value;
    }

    /// Mark the job running on `placement` at the current instant. Iteration
    /// end events are scheduled afterwards by [`finish_starts`] so that PCIe
    /// contention sees every start in the batch.
    fn start_job(&mut self, job: usize, placement: JobPlacement, started: &mut Vec<usize>) {
        let rt = &mut self.jobs[job];
        rt.placement = Some(placement);
        rt.iter = 1;
        if rt.first_start.is_none() {
            rt.first_start = Some(self.now);
        }
        match placement {
            JobPlacement::Slice { start_slot } => {
                self.gpu.busy.insert(start_slot, job);
            }
            JobPlacement::WholeGpu => {
                self.gpu.whole_gpu_busy = Some(job);
            }
        }
        self.accum.active_slices += self.compute_of(placement);
        if self.spec(job).memory_class == MemoryClass::Dynamic && self.policy.predicts() {
            let params = &self.input.scenario.predictor;
            let config = ForecastConfig {
                z: params.z,
                epsilon: params.epsilon,
                k: params.k,
                n_min: params.n_min,
                max_iter: self.spec(job).iterations,
                overheads: StaticOverheads {
                    workspace_bytes: 0,
                    context_bytes: self.catalog.reserved_context_bytes,
                },
            };
            self.jobs[job].forecast = Some(MemoryForecast::new(config));
        }
        let contrib = self.contrib_bytes(job, 1, placement);
        self.set_contrib(job, contrib);
        self.record("start", Some(job), String::new());
        started.push(job);
    }

    fn finish_starts(&mut self, started: Vec<usize>) {
        for job in started {
            let dur = self.iter_duration(job, 1);
            self.push(self.now + dur, PRIO_ITER_END, job, EventKind::IterEnd { job });
        }
    }

    fn release_placement(&mut self, job: usize) {
        if let Some(placement) = self.jobs[job].placement {
            self.accum.active_slices -= self.compute_of(placement);
            match placement {
                JobPlacement::Slice { start_slot } => {
                    self.gpu.busy.remove(&start_slot);
                }
                JobPlacement::WholeGpu => {
                    self.gpu.whole_gpu_busy = None;
                }
            }
            self.set_contrib(job, 0.0);
            self.jobs[job].placement = None;
        }
    }

    fn schedule_now(&mut self) {
        self.push(self.now, PRIO_SCHEDULE, usize::MAX, EventKind::Schedule);
    }

    fn begin_reconfig_window(&mut self) {
        self.reconfigurations += 1;
        self.accum.in_reconfig = true;
        let latency = self.input.scenario.power.reconfig_latency_s;
        self.push(self.now + latency, PRIO_RECONFIG_DONE, usize::MAX, EventKind::ReconfigDone);
    }

    fn unsatisfiable(&self, err: scheduler::SchedulerError) -> SimError {
        SimError::Scenario(err.to_string())
    }

    // ── Scheme A ─────────────────────────────────────────────────────────

    fn enqueue_scheme_a(&mut self, job: usize) -> Result<(), SimError> {
        let entry = self.entry_for(job);
        let class = entry
            .group_class(&self.catalog, self.input.scenario.total_sms)
            .map_err(|e| {
                SimError::Scenario(format!("job `{}` unsatisfiable: {e}", self.job_id(job)))
            })?;
        if let PolicyState::SchemeA { pending, current } = &mut self.sched {
            if let Some(cur) = current {
                if cur.class_bytes == class {
                    let n = cur.slices.len();
                    cur.slices[cur.rr % n].queue.push_back(job);
                    cur.rr += 1;
                    return Ok(());
                }
            }
            pending.entry(class).or_default().push_back(job);
        }
        Ok(())
    }

    fn pump_scheme_a(&mut self) -> Result<(), SimError> {
        loop {
            let PolicyState::SchemeA { pending, current } = &mut self.sched else {
                return Ok(());
            };
            match current {
                None => {
                    let Some((&class, _)) = pending.iter().next() else { return Ok(()) };
                    let queue = pending.remove(&class).expect("key exists");
                    self.begin_group(class, queue);
                    return Ok(());
                }
                Some(cur) if cur.reconfiguring => return Ok(()),
                Some(cur) => {
                    let mut starts: Vec<(usize, u32)> = Vec::new();
                    for slice in &mut cur.slices {
                        if !self.gpu.busy.contains_key(&slice.start_slot) {
                            if let Some(job) = slice.queue.pop_front() {
                                starts.push((job, slice.start_slot));
                            }
                        }
                    }
                    let group_done = starts.is_empty()
                        && cur.slices.iter().all(|s| s.queue.is_empty())
                        && self.gpu.busy.is_empty();
                    if !starts.is_empty() {
                        let mut started = Vec::new();
                        for (job, start_slot) in starts {
                            self.start_job(job, JobPlacement::Slice { start_slot }, &mut started);
                        }
                        self.finish_starts(started);
                        return Ok(());
                    }
                    if group_done {
                        // Tear the group down; the next group's setup is the
                        // reconfiguration.
                        self.gpu.state = PartitionState::empty();
                        if let PolicyState::SchemeA { current, .. } = &mut self.sched {
                            *current = None;
                        }
                        continue;
                    }
                    return Ok(());
                }
            }
        }
    }

    fn begin_group(&mut self, class_bytes: u64, jobs: VecDeque<usize>) {
        let config = scheduler::homogeneous_config(&self.table, class_bytes);
        debug_assert!(!config.is_empty(), "group class has at least one placement");
        debug_assert!(self.gpu.busy.is_empty());
        let mut state = PartitionState::empty();
        for inst in &config {
            state = state
                .transition(&self.catalog, Action::Alloc {
                    profile_idx: inst.profile_idx,
                    start_slot: inst.start_slot,
                })
                .expect("homogeneous config is legal");
        }
        self.gpu.state = state;
        let mut slices: Vec<SliceRun> = config
            .iter()
            .map(|i| SliceRun { start_slot: i.start_slot, queue: VecDeque::new() })
            .collect();
        let n = slices.len();
        let count = jobs.len();
        for (i, job) in jobs.into_iter().enumerate() {
            slices[i % n].queue.push_back(job);
        }
        self.record(
            "reconfig_commit",
            None,
            format!("group class {} bytes, {} slices", class_bytes, n),
        );
        if let PolicyState::SchemeA { current, .. } = &mut self.sched {
            *current = Some(GroupRun { class_bytes, slices, rr: count, reconfiguring: true });
        }
        self.begin_reconfig_window();
    }

    // ── Scheme B ─────────────────────────────────────────────────────────

    fn pump_scheme_b(&mut self) -> Result<(), SimError> {
        let mut started = Vec::new();
        while let PolicyState::SchemeB { queue, pending_start } = &mut self.sched {
            if pending_start.is_some() {
                break;
            }
            let Some(&job) = queue.front() else { break };
            let entry = self.entry_for(job);
            let idle = self.gpu.idle_instances(&self.catalog);
            let decision = scheduler::scheme_b_place(
                &self.table,
                &self.gpu.state,
                &idle,
                &entry,
                self.input.scenario.total_sms,
                self.job_id(job),
            )
            .map_err(|e| self.unsatisfiable(e))?;
            let PolicyState::SchemeB { queue, pending_start } = &mut self.sched else {
                unreachable!()
            };
            match decision {
                SchemeBDecision::ReuseIdle { start_slot } => {
                    queue.pop_front();
                    self.start_job(job, JobPlacement::Slice { start_slot }, &mut started);
                }
                SchemeBDecision::Alloc { instance } => {
                    queue.pop_front();
                    *pending_start = Some((job, instance.start_slot));
                    self.commit_alloc(job, instance, Vec::new());
                    break;
                }
                SchemeBDecision::Merge { release_starts, instance } => {
                    queue.pop_front();
                    *pending_start = Some((job, instance.start_slot));
                    self.commit_alloc(job, instance, release_starts);
                    break;
                }
                SchemeBDecision::Wait => break,
            }
        }
        self.finish_starts(started);
        Ok(())
    }

    fn commit_alloc(&mut self, job: usize, instance: Instance, release_starts: Vec<u32>) {
        for start in &release_starts {
            self.gpu.state = self
                .gpu
                .state
                .transition(&self.catalog, Action::Free { start_slot: *start })
                .expect("released instance exists and is idle");
        }
        self.gpu.state = self
            .gpu
            .state
            .transition(&self.catalog, Action::Alloc {
                profile_idx: instance.profile_idx,
                start_slot: instance.start_slot,
            })
            .expect("chosen placement is legal");
        // Reserve it for the job before the window opens.
        self.gpu.busy.insert(instance.start_slot, job);
        let detail = if release_starts.is_empty() {
            format!(
                "alloc {}@{}",
                self.catalog.profile(instance.profile_idx).name,
                instance.start_slot
            )
        } else {
            format!(
                "merge: release {:?}, alloc {}@{}",
                release_starts,
                self.catalog.profile(instance.profile_idx).name,
                instance.start_slot
            )
        };
        self.record("reconfig_commit", Some(job), detail);
        self.begin_reconfig_window();
    }

    // ── Baseline ─────────────────────────────────────────────────────────

    fn pump_baseline(&mut self) -> Result<(), SimError> {
        let PolicyState::Baseline { queue } = &mut self.sched else { return Ok(()) };
        if self.gpu.whole_gpu_busy.is_some() {
            return Ok(());
        }
        let Some(job) = queue.pop_front() else { return Ok(()) };
        if self.jobs[job].requirement > self.catalog.total_memory_bytes() {
            return Err(SimError::Scenario(format!(
                "job `{}` is unsatisfiable: needs {} bytes, GPU has {}",
                self.job_id(job),
                self.jobs[job].requirement,
                self.catalog.total_memory_bytes()
            )));
        }
        let mut started = Vec::new();
        self.start_job(job, JobPlacement::WholeGpu, &mut started);
        self.finish_starts(started);
        Ok(())
    }

    fn pump(&mut self) -> Result<(), SimError> {
        match self.policy.kind {
            PolicyKind::Baseline => self.pump_baseline(),
            PolicyKind::SchemeA => self.pump_scheme_a(),
            PolicyKind::SchemeB => self.pump_scheme_b(),
        }
    }

    // ── Event handlers ───────────────────────────────────────────────────

    fn on_arrival(&mut self, job: usize) -> Result<(), SimError> {
        self.record("arrival", Some(job), String::new());
        match &mut self.sched {
            PolicyState::Baseline { queue } => queue.push_back(job),
            PolicyState::SchemeB { queue, .. } => queue.push_back(job),
            PolicyState::SchemeA { .. } => self.enqueue_scheme_a(job)?,
        }
        self.schedule_now();
        Ok(())
    }

    fn on_iter_end(&mut self, job: usize) -> Result<(), SimError> {
        let k = self.jobs[job].iter;
        debug_assert!(k >= 1, "iteration end for an idle job");
        let iterations = self.spec(job).iterations;
        let is_dynamic = self.spec(job).memory_class == MemoryClass::Dynamic;
        let placement = self.jobs[job].placement.expect("running job is placed");
        // Observe this iteration's sample before any decision.
        if is_dynamic {
            if let Some(forecast) = &mut self.jobs[job].forecast {
                let trace = self.input.traces[job].as_ref().expect("dynamic trace");
                forecast
                    .step(trace[(k - 1) as usize])
                    .expect("samples are fed in order");
            }
        }
        let capacity = self.capacity_of(placement) as f64;
        let physical = self.physical_bytes(job, k);
        if physical + self.catalog.reserved_context_bytes as f64 > capacity {
            self.push(self.now, PRIO_OOM, job, EventKind::Oom { job });
            return Ok(());
        }
        if k == iterations {
            self.complete(job);
            return Ok(());
        }
        if self.policy.predicts() {
            if let Some(forecast) = &self.jobs[job].forecast {
                let entry = self.entry_for(job);
                if let RestartDecision::Preempt { new_requirement } =
                    scheduler::early_restart_check(&entry, forecast, capacity as u64)
                {
                    self.jobs[job].preempt_requirement = Some(new_requirement);
                    self.push(self.now, PRIO_PREEMPT, job, EventKind::Preempt { job });
                    return Ok(());
                }
            }
        }
        let next = k + 1;
        self.jobs[job].iter = next;
        let contrib = self.contrib_bytes(job, next, placement);
        self.set_contrib(job, contrib);
        let dur = self.iter_duration(job, next);
        self.push(self.now + dur, PRIO_ITER_END, job, EventKind::IterEnd { job });
        Ok(())
    }

    fn complete(&mut self, job: usize) {
        self.record("complete", Some(job), format!("after {} iterations", self.jobs[job].iter));
        self.jobs[job].done = true;
        self.jobs[job].completion = Some(self.now);
        self.jobs[job].iter = 0;
        self.release_placement(job);
        self.schedule_now();
    }

    fn on_oom(&mut self, job: usize) -> Result<(), SimError> {
        let k = self.jobs[job].iter;
        let placement = self.jobs[job].placement.expect("oom on a placed job");
        let failed_bytes = self.capacity_of(placement);
        self.record("oom", Some(job), format!("at iteration {k} on {failed_bytes} bytes"));
        self.jobs[job].wasted += k as u64;
        let entry = self.entry_for(job);
        let requeued = scheduler::handle_oom(&entry, failed_bytes, &self.catalog, self.job_id(job))
            .map_err(|e| self.unsatisfiable(e))?;
        self.release_placement(job);
        self.jobs[job].iter = 0;
        self.jobs[job].forecast = None;
        self.jobs[job].requirement = requeued.current_mem_requirement;
        self.jobs[job].restarts = requeued.restarts;
        self.requeue(job)?;
        self.schedule_now();
        Ok(())
    }

    fn on_preempt(&mut self, job: usize) -> Result<(), SimError> {
        let k = self.jobs[job].iter;
        let new_requirement = self.jobs[job]
            .preempt_requirement
            .take()
            .expect("preempt carries its requirement");
        self.record(
            "preempt",
            Some(job),
            format!("at iteration {k}, forecast requirement {new_requirement} bytes"),
        );
        self.jobs[job].wasted += k as u64;
        self.release_placement(job);
        self.jobs[job].iter = 0;
        self.jobs[job].forecast = None;
        self.jobs[job].requirement = new_requirement;
        self.jobs[job].restarts += 1;
        self.requeue(job)?;
        self.schedule_now();
        Ok(())
    }

    fn requeue(&mut self, job: usize) -> Result<(), SimError> {
        self.record("requeue", Some(job), format!("requirement {}", self.jobs[job].requirement));
        match &mut self.sched {
            PolicyState::Baseline { queue } => queue.push_back(job),
            PolicyState::SchemeB { queue, .. } => queue.push_back(job),
            PolicyState::SchemeA { .. } => self.enqueue_scheme_a(job)?,
        }
        Ok(())
    }

    fn on_reconfig_done(&mut self) -> Result<(), SimError> {
        self.accum.in_reconfig = false;
        self.record("reconfig_done", None, String::new());
        match &mut self.sched {
            PolicyState::SchemeA { current, .. } => {
                if let Some(cur) = current {
                    cur.reconfiguring = false;
                }
                self.pump_scheme_a()?;
            }
            PolicyState::SchemeB { pending_start, .. } => {
                if let Some((job, start_slot)) = pending_start.take() {
                    let mut started = Vec::new();
                    self.start_job(job, JobPlacement::Slice { start_slot }, &mut started);
                    self.finish_starts(started);
                }
                self.schedule_now();
            }
            PolicyState::Baseline { .. } => {}
        }
        Ok(())
    }

    fn run(mut self) -> Result<(SimReport, Vec<EventRecord>), SimError> {
        for (idx, spec) in self.input.scenario.jobs.iter().enumerate() {
            self.push(spec.arrival_s, PRIO_ARRIVAL, idx, EventKind::Arrival { job: idx });
        }
        self.push(0.0, PRIO_SCHEDULE, usize::MAX, EventKind::Schedule);
        while let Some(event) = self.events.pop() {
            let power = self.input.scenario.power;
            self.accum.advance(event.t, &power);
            self.now = event.t;
            match event.kind {
                EventKind::Arrival { job } => self.on_arrival(job)?,
                EventKind::IterEnd { job } => self.on_iter_end(job)?,
                EventKind::Oom { job } => self.on_oom(job)?,
                EventKind::Preempt { job } => self.on_preempt(job)?,
                EventKind::ReconfigDone => self.on_reconfig_done()?,
                EventKind::Schedule => self.pump()?,
            }
        }
        Ok(self.into_report())
    }

    fn into_report(self) -> (SimReport, Vec<EventRecord>) {
        let scenario = &self.input.scenario;
        let makespan = self
            .jobs
            .iter()
            .filter_map(|j| j.completion)
            .fold(0.0f64, f64::max);
        let completed = self.jobs.iter().filter(|j| j.done).count() as u64;
        let throughput = if makespan > 0.0 { completed as f64 / makespan } else { 0.0 };
        let turnarounds: Vec<f64> = self
            .jobs
            .iter()
            .enumerate()
            .filter_map(|(i, j)| j.completion.map(|c| c - scenario.jobs[i].arrival_s))
            .collect();
        let mean_turnaround = if turnarounds.is_empty() {
            0.0
        } else {
            turnarounds.iter().sum::<f64>() / turnarounds.len() as f64
        };
        let total_bytes = self.catalog.total_memory_bytes() as f64;
        let utilization = if makespan > 0.0 && total_bytes > 0.0 {
            self.accum.mem_byte_seconds / (total_bytes * makespan)
        } else {
            0.0
        };
        let metrics = Metrics {
            throughput_jobs_per_s: throughput,
            energy_joules: self.accum.energy_j,
            mean_mem_utilization: utilization,
            mean_turnaround_s: mean_turnaround,
            makespan_s: makespan,
            reconfigurations: self.reconfigurations,
            completed_jobs: completed,
            total_wasted_iterations: self.jobs.iter().map(|j| j.wasted).sum(),
        };
        let jobs = self
            .jobs
            .iter()
            .enumerate()
            .map(|(i, j)| JobRecord {
                id: scenario.jobs[i].id.clone(),
                arrival_s: scenario.jobs[i].arrival_s,
                first_start_s: j.first_start,
                completion_s: j.completion,
                restarts: j.restarts,
                wasted_iterations: j.wasted,
            })
            .collect();
        let report = SimReport {
            gpu_name: self.catalog.gpu_name.clone(),
            policy: self.policy.kind.as_str().to_string(),
            prediction_enabled: self.policy.predicts(),
            seed: self.input.seed,
            jobs,
            metrics,
            baseline_metrics: None,
            normalized: None,
        };
        (report, self.log.unwrap_or_default())
    }
}

fn initial_declared(spec: &JobSpec) -> Option<u64> {
    match spec.memory_class {
        MemoryClass::Static | MemoryClass::Estimated => spec.declared_mem_bytes,
        // Dynamic jobs may hint an initial size; otherwise they start on the
        // smallest slice and grow on demand.
        MemoryClass::Dynamic => spec.declared_mem_bytes,
    }
}

/// Run one scenario under one policy.
pub fn run_scenario(
    input: &SimInput,
    policy: SchedulingPolicy,
) -> Result<SimReport, SimError> {
    let table = Arc::new(ReachabilityTable::build(Arc::clone(&input.catalog))?);
    Engine::new(input, table, policy, false).run().map(|(report, _)| report)
}

/// Same as [`run_scenario`] but also returns the event log.
pub fn run_scenario_logged(
    input: &SimInput,
    policy: SchedulingPolicy,
) -> Result<(SimReport, Vec<EventRecord>), SimError> {
    let table = Arc::new(ReachabilityTable::build(Arc::clone(&input.catalog))?);
    Engine::new(input, table, policy, true).run()
}

/// Run the policy and, unless it already is the baseline, a paired baseline
/// run, attaching baseline metrics and normalized ratios.
pub fn run_with_baseline(
    input: &SimInput,
    policy: SchedulingPolicy,
) -> Result<SimReport, SimError> {
    let table = Arc::new(ReachabilityTable::build(Arc::clone(&input.catalog))?);
    let (mut report, _) = Engine::new(input, table.clone(), policy, false).run()?;
    if policy.kind != PolicyKind::Baseline {
        let baseline = SchedulingPolicy { kind: PolicyKind::Baseline, prediction_enabled: false };
        let (base_report, _) = Engine::new(input, table, baseline, false).run()?;
        report.normalized = NormalizedVsBaseline::compute(&report.metrics, &base_report.metrics);
        report.baseline_metrics = Some(base_report.metrics);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Scenario;

    const GIB: u64 = 1 << 30;

    fn prepare(text: &str) -> SimInput {
        SimInput::prepare(Scenario::from_json(text).unwrap(), None, None, None).unwrap()
    }

    fn static_job(id: &str, gib: u64, duration: f64) -> String {
        format!(
            r#"{{"id":"{id}","memory_class":"static","declared_mem_bytes":{},"iter_duration_s":{duration}}}"#,
            gib * GIB
        )
    }

    fn zero_overhead_header() -> &'static str {
        r#""power":{"idle_watts":30.0,"watts_per_compute_slice":25.0,"reconfig_latency_s":0.0,"reconfig_watts":30.0}"#
    }

    fn policy(kind: PolicyKind, predict: bool) -> SchedulingPolicy {
        SchedulingPolicy { kind, prediction_enabled: predict }
    }

    #[test]
    fn empty_scenario_reports_zero_makespan() {
        let input = prepare(r#"{"jobs":[]}"#);
        let report = run_scenario(&input, policy(PolicyKind::SchemeA, false)).unwrap();
        assert_eq!(report.metrics.makespan_s, 0.0);
        assert_eq!(report.metrics.throughput_jobs_per_s, 0.0);
        assert_eq!(report.metrics.energy_joules, 0.0);
    }

    #[test]
    fn two_twenty_gb_jobs_hit_the_two_x_ceiling() {
        let text = format!(
            r#"{{{}, "jobs":[{},{}]}}"#,
            zero_overhead_header(),
            static_job("a", 18, 10.0),
            static_job("b", 18, 10.0)
        );
        let input = prepare(&text);
        let report = run_with_baseline(&input, policy(PolicyKind::SchemeA, false)).unwrap();
        assert!((report.metrics.makespan_s - 10.0).abs() < 1e-9);
        let norm = report.normalized.unwrap();
        assert!((norm.throughput_ratio - 2.0).abs() < 0.01, "{}", norm.throughput_ratio);
        assert_eq!(report.metrics.reconfigurations, 1);
    }

    #[test]
    fn seven_small_jobs_hit_the_seven_x_ceiling() {
        let jobs: Vec<String> = (0..7).map(|i| static_job(&format!("j{i}"), 4, 10.0)).collect();
        let text = format!(r#"{{{}, "jobs":[{}]}}"#, zero_overhead_header(), jobs.join(","));
        let input = prepare(&text);
        let report = run_with_baseline(&input, policy(PolicyKind::SchemeA, false)).unwrap();
        let norm = report.normalized.unwrap();
        assert!((norm.throughput_ratio - 7.0).abs() < 0.01, "{}", norm.throughput_ratio);
    }

    #[test]
    fn single_job_flat_power_gives_thousand_joules() {
        let text = format!(
            r#"{{"power":{{"idle_watts":100.0,"watts_per_compute_slice":0.0,
                "reconfig_latency_s":0.0,"reconfig_watts":100.0}},
                "jobs":[{}]}}"#,
            static_job("j", 4, 10.0)
        );
        let input = prepare(&text);
        let report = run_scenario(&input, policy(PolicyKind::Baseline, false)).unwrap();
        assert!((report.metrics.energy_joules - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn baseline_runs_sequentially_with_mean_turnaround() {
        let text = format!(
            r#"{{"jobs":[{},{}]}}"#,
            static_job("a", 4, 10.0),
            static_job("b", 4, 10.0)
        );
        let input = prepare(&text);
        let report = run_scenario(&input, policy(PolicyKind::Baseline, false)).unwrap();
        assert!((report.metrics.makespan_s - 20.0).abs() < 1e-9);
        assert!((report.metrics.mean_turnaround_s - 15.0).abs() < 1e-9);
        assert!((report.metrics.throughput_jobs_per_s - 0.1).abs() < 1e-12);
        assert_eq!(report.metrics.reconfigurations, 0);
    }

    #[test]
    fn single_job_throughput_and_turnaround() {
        let text = format!(r#"{{"jobs":[{}]}}"#, static_job("j", 4, 10.0));
        let input = prepare(&text);
        let report = run_scenario(&input, policy(PolicyKind::Baseline, false)).unwrap();
        assert!((report.metrics.throughput_jobs_per_s - 0.1).abs() < 1e-12);
        assert!((report.metrics.mean_turnaround_s - 10.0).abs() < 1e-9);
    }

    #[test]
    fn utilization_of_a_constant_footprint_job() {
        // 4.7 GB on a 40 GB device: time-averaged utilization 0.1175, with
        // decimal-GB slot sizes so the ratio is exact.
        let text = r#"{
            "catalog_path": null,
            "jobs":[{"id":"j","memory_class":"static","declared_mem_bytes":4700000000,
                     "iter_duration_s":10.0}]}"#;
        let scenario = Scenario::from_json(text).unwrap();
        let catalog = Arc::new(
            PlacementCatalog::from_json(
                r#"{"gpu_name":"toy-40gb","total_compute_slices":7,"total_memory_slots":8,
                    "bytes_per_memory_slot":5000000000,"reserved_context_bytes":0,
                    "profiles":[{"name":"full","compute_slices":7,"memory_slices":8,"allowed_starts":[0]}]}"#,
            )
            .unwrap(),
        );
        let input = SimInput::prepare(scenario, None, Some(catalog), None).unwrap();
        let report = run_scenario(&input, policy(PolicyKind::Baseline, false)).unwrap();
        assert!((report.metrics.mean_mem_utilization - 0.1175).abs() < 1e-12);
    }

    #[test]
    fn contention_stretches_transfer_phases() {
        // 7 concurrent jobs with transfer fraction 0.2: per-iteration time
        // 0.8 + 0.2*7 = 2.2x, so the batch lands at 7/2.2 of baseline.
        let jobs: Vec<String> = (0..7)
            .map(|i| {
                format!(
                    r#"{{"id":"j{i}","memory_class":"static","declared_mem_bytes":{},
                        "iter_duration_s":10.0,"transfer_fraction":0.2}}"#,
                    4 * GIB
                )
            })
            .collect();
        let text = format!(
            r#"{{{}, "contention_enabled":true, "jobs":[{}]}}"#,
            zero_overhead_header(),
            jobs.join(",")
        );
        let input = prepare(&text);
        let report = run_with_baseline(&input, policy(PolicyKind::SchemeA, false)).unwrap();
        assert!((report.metrics.makespan_s - 22.0).abs() < 1e-9);
        let norm = report.normalized.unwrap();
        assert!((norm.throughput_ratio - 70.0 / 22.0).abs() < 1e-9);
    }

    #[test]
    fn no_transfer_means_no_contention_slowdown() {
        let jobs: Vec<String> = (0..7).map(|i| static_job(&format!("j{i}"), 4, 10.0)).collect();
        let text = format!(
            r#"{{{}, "contention_enabled":true, "jobs":[{}]}}"#,
            zero_overhead_header(),
            jobs.join(",")
        );
        let input = prepare(&text);
        let report = run_scenario(&input, policy(PolicyKind::SchemeA, false)).unwrap();
        assert!((report.metrics.makespan_s - 10.0).abs() < 1e-9);
    }

    #[test]
    fn estimated_underestimate_ooms_and_climbs_the_ladder() {
        // Declared 8 GiB fits a 10GB slice, but the true footprint needs the
        // 20GB slice; the job restarts once and completes.
        let text = format!(
            r#"{{"jobs":[{{"id":"j","memory_class":"estimated","declared_mem_bytes":{},
                "true_mem_bytes":{},"iterations":4,"iter_duration_s":1.0}}]}}"#,
            8 * GIB,
            15 * GIB
        );
        let input = prepare(&text);
        let (report, events) =
            run_scenario_logged(&input, policy(PolicyKind::SchemeB, false)).unwrap();
        assert_eq!(report.jobs[0].restarts, 1);
        assert_eq!(report.jobs[0].wasted_iterations, 1);
        assert!(report.jobs[0].completion_s.is_some());
        assert!(events.iter().any(|e| e.kind == "oom"));
        // First placement ties at fcr 6 for all 10GB slots, so the highest
        // start wins; the restart then allocates the 20GB slice at slot 0.
        assert!(events
            .iter()
            .any(|e| e.kind == "start" && e.instance.as_deref() == Some("2g.10gb@4")));
        assert!(events
            .iter()
            .any(|e| e.kind == "start" && e.instance.as_deref() == Some("3g.20gb@0")));
    }

    #[test]
    fn oversized_job_is_a_scenario_error() {
        let text = format!(r#"{{"jobs":[{}]}}"#, static_job("big", 45, 1.0));
        let input = prepare(&text);
        for kind in [PolicyKind::Baseline, PolicyKind::SchemeA, PolicyKind::SchemeB] {
            let res = run_scenario(&input, policy(kind, false));
            assert!(matches!(res, Err(SimError::Scenario(_))), "{kind:?} should fail");
        }
    }

    #[test]
    fn dynamic_crossing_preempts_before_the_oom_iteration() {
        // Physical memory crosses the 10GB slice around iteration 50 of 100.
        // With prediction the job restarts at convergence instead.
        let a = GIB as f64 / 10.0;
        let b = 4.0 * GIB as f64;
        let text = format!(
            r#"{{"jobs":[{{"id":"q","memory_class":"dynamic","declared_mem_bytes":{},
                "iterations":100,"iter_duration_s":0.1,
                "trace_gen":{{"a":{a},"b":{b},"sigma":0.0,"seed":3}}}}]}}"#,
            8 * GIB
        );
        let input = prepare(&text);
        let without = run_scenario(&input, policy(PolicyKind::SchemeA, false)).unwrap();
        let with = run_scenario(&input, policy(PolicyKind::SchemeA, true)).unwrap();
        // Replay oracle: first iteration where a*t + b + context > 10 GiB.
        let trace = input.traces[0].as_ref().unwrap();
        let context = input.catalog.reserved_context_bytes as f64;
        let t_oom = trace
            .iter()
            .position(|s| s.requested_bytes as f64 * s.reuse_ratio + context > 10.0 * GIB as f64)
            .unwrap() as u64
            + 1;
        assert_eq!(without.jobs[0].wasted_iterations, t_oom);
        assert!(with.jobs[0].wasted_iterations >= 5);
        assert!(with.jobs[0].wasted_iterations <= 10);
        assert_eq!(with.jobs[0].restarts, 1);
        assert!(with.metrics.makespan_s < without.metrics.makespan_s);
    }

    #[test]
    fn scheme_a_reconfigurations_bounded_by_groups_plus_promotions() {
        // Two dynamic jobs start in the 10GB group and are both promoted to
        // 20GB by early restarts: one extra group round, so two
        // reconfigurations, within groups + promotions.
        let a = GIB as f64 / 10.0;
        let b = 4.0 * GIB as f64;
        let jobs: Vec<String> = (0..2)
            .map(|i| {
                format!(
                    r#"{{"id":"d{i}","memory_class":"dynamic","declared_mem_bytes":{},
                        "iterations":80,"iter_duration_s":0.1,
                        "trace_gen":{{"a":{a},"b":{b},"sigma":0.0,"seed":{i}}}}}"#,
                    8 * GIB
                )
            })
            .collect();
        let text = format!(r#"{{"jobs":[{}]}}"#, jobs.join(","));
        let input = prepare(&text);
        let report = run_scenario(&input, policy(PolicyKind::SchemeA, true)).unwrap();
        let promotions: u64 = report.jobs.iter().map(|j| j.restarts as u64).sum();
        assert_eq!(promotions, 2);
        assert!(report.metrics.reconfigurations <= 1 + promotions);
        assert_eq!(report.metrics.reconfigurations, 2);
        assert!(report.metrics.mean_mem_utilization <= 1.0);
        assert!(report.jobs.iter().all(|j| j.completion_s.is_some()));
    }

    #[test]
    fn scheme_a_late_arrival_joins_the_running_group() {
        let mut jobs: Vec<String> = (0..2).map(|i| static_job(&format!("j{i}"), 4, 10.0)).collect();
        jobs.push(format!(
            r#"{{"id":"late","memory_class":"static","declared_mem_bytes":{},
                "iter_duration_s":10.0,"arrival_s":1.0}}"#,
            4 * GIB
        ));
        let text = format!(r#"{{{}, "jobs":[{}]}}"#, zero_overhead_header(), jobs.join(","));
        let input = prepare(&text);
        let report = run_scenario(&input, policy(PolicyKind::SchemeA, false)).unwrap();
        // One 5GB group serves all three; the late job starts on arrival.
        assert_eq!(report.metrics.reconfigurations, 1);
        let late = report.jobs.iter().find(|j| j.id == "late").unwrap();
        assert_eq!(late.first_start_s, Some(1.0));
        assert!((report.metrics.makespan_s - 11.0).abs() < 1e-9);
    }

    #[test]
    fn reports_are_byte_identical_across_runs() {
        let jobs: Vec<String> = (0..5)
            .map(|i| {
                format!(
                    r#"{{"id":"j{i}","memory_class":"dynamic","iterations":20,
                        "iter_duration_s":0.5,"transfer_fraction":0.3,
                        "trace_gen":{{"a":{},"b":{},"sigma":{},"seed":{i}}}}}"#,
                    GIB / 20,
                    2 * GIB,
                    GIB / 50
                )
            })
            .collect();
        let text = format!(r#"{{"contention_enabled":true,"jobs":[{}]}}"#, jobs.join(","));
        let run = || {
            let input = prepare(&text);
            run_with_baseline(&input, policy(PolicyKind::SchemeB, true))
                .unwrap()
                .to_json_string()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn scheme_b_preserves_arrival_order_of_starts() {
        let mut jobs = vec![static_job("first", 18, 5.0)];
        jobs.push(static_job("huge", 35, 5.0));
        jobs.push(static_job("small", 3, 5.0));
        let text = format!(r#"{{"jobs":[{}]}}"#, jobs.join(","));
        let input = prepare(&text);
        let report = run_scenario(&input, policy(PolicyKind::SchemeB, false)).unwrap();
        let start = |id: &str| {
            report.jobs.iter().find(|j| j.id == id).unwrap().first_start_s.unwrap()
        };
        // The full-GPU job waits for the 20GB job; the small job never jumps
        // the line.
        assert!(start("huge") >= start("first"));
        assert!(start("small") >= start("huge"));
        assert!(report.jobs.iter().all(|j| j.completion_s.is_some()));
    }

    #[test]
    fn energy_covers_idle_power_over_the_whole_makespan() {
        let text = format!(
            r#"{{"jobs":[{},{}]}}"#,
            static_job("a", 4, 3.0),
            static_job("b", 18, 7.0)
        );
        let input = prepare(&text);
        for kind in [PolicyKind::Baseline, PolicyKind::SchemeA, PolicyKind::SchemeB] {
            let report = run_scenario(&input, policy(kind, false)).unwrap();
            let m = &report.metrics;
            assert!(
                m.energy_joules >= input.scenario.power.idle_watts * m.makespan_s - 1e-9,
                "{kind:?}"
            );
        }
    }

    #[test]
    fn busy_intervals_never_overlap_on_an_instance() {
        let jobs: Vec<String> = (0..9)
            .map(|i| static_job(&format!("j{i}"), if i % 3 == 0 { 18 } else { 4 }, 3.0))
            .collect();
        let text = format!(r#"{{"jobs":[{}]}}"#, jobs.join(","));
        let input = prepare(&text);
        for kind in [PolicyKind::SchemeA, PolicyKind::SchemeB] {
            let (_, events) = run_scenario_logged(&input, policy(kind, false)).unwrap();
            let mut open: BTreeMap<String, (String, f64)> = BTreeMap::new();
            let mut intervals: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
            for ev in &events {
                match ev.kind.as_str() {
                    "start" => {
                        let inst = ev.instance.clone().unwrap();
                        assert!(
                            !open.contains_key(&inst),
                            "{kind:?}: instance {inst} double-booked"
                        );
                        open.insert(inst, (ev.job.clone().unwrap(), ev.t));
                    }
                    "complete" | "oom" | "preempt" => {
                        if let Some(inst) = ev.instance.clone() {
                            if let Some((_, begin)) = open.remove(&inst) {
                                intervals.entry(inst).or_default().push((begin, ev.t));
                            }
                        }
                    }
                    _ => {}
                }
            }
            for (inst, mut spans) in intervals {
                spans.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                for pair in spans.windows(2) {
                    assert!(
                        pair[0].1 <= pair[1].0 + 1e-12,
                        "{kind:?}: overlap on {inst}: {pair:?}"
                    );
                }
            }
        }
    }
}
