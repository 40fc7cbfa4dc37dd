//! The partition state machine: every valid partition layout of a GPU, the
//! alloc/free transitions between them, and the future-configuration
//! reachability (fcr) score that online allocation maximizes.
//!
//! States are sets of placed instances. A layout is valid when instances do
//! not overlap in memory slots, every start slot is allowed for its profile,
//! and the compute budget holds. Final (fully configured) states are the
//! maximal layouts: no profile has any legal placement left. fcr(s) counts
//! the distinct final states reachable from s through allocations alone, so
//! it is 1 on finals and non-increasing along every alloc edge.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::catalog::PlacementCatalog;

/// Default cap on enumerated states, guarding pathological catalogs.
pub const DEFAULT_STATE_CAP: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum FsmError {
    #[error("state space exceeds cap of {cap} states")]
    CapacityExceeded { cap: usize },
}

#[derive(Debug, Error)]
#[error("illegal transition: {rule}")]
pub struct IllegalTransition {
    pub rule: String,
}

fn illegal(rule: impl Into<String>) -> IllegalTransition {
    IllegalTransition { rule: rule.into() }
}

/// One placed instance: a profile occupying memory slots
/// `[start_slot, start_slot + memory_slices)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Instance {
    pub profile_idx: usize,
    pub start_slot: u32,
}

/// An alloc or free action, the FSM's input alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Alloc { profile_idx: usize, start_slot: u32 },
    Free { start_slot: u32 },
}

/// A valid partition layout. Instances are kept sorted by start slot, which
/// makes the canonical key a bijection on layouts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartitionState {
    instances: Vec<Instance>,
}

impl fmt::Display for PartitionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, inst) in self.instances.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "p{}@{}", inst.profile_idx, inst.start_slot)?;
        }
        write!(f, "]")
    }
}

impl PartitionState {
    /// The empty (unpartitioned) state, s0.
    pub fn empty() -> Self {
        PartitionState { instances: Vec::new() }
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn instance_at(&self, start_slot: u32) -> Option<&Instance> {
        self.instances.iter().find(|i| i.start_slot == start_slot)
    }

    /// Slot-coded canonical key: one byte per memory slot, `profile_idx + 1`
    /// where an instance begins, 0 elsewhere.
    pub fn canonical_key(&self, total_memory_slots: u32) -> Vec<u8> {
        let mut key = vec![0u8; total_memory_slots as usize];
        for inst in &self.instances {
            key[inst.start_slot as usize] = (inst.profile_idx + 1) as u8;
        }
        key
    }

    pub fn used_compute(&self, catalog: &PlacementCatalog) -> u32 {
        self.instances
            .iter()
            .map(|i| catalog.profile(i.profile_idx).compute_slices)
            .sum()
    }

    fn occupied_mask(&self, catalog: &PlacementCatalog) -> u64 {
        let mut mask = 0u64;
        for inst in &self.instances {
            let span = catalog.profile(inst.profile_idx).memory_slices;
            for slot in inst.start_slot..inst.start_slot + span {
                mask |= 1 << slot;
            }
        }
        mask
    }

    /// All legal single allocations from this state, ordered by
    /// (profile_idx, start_slot) for determinism.
    pub fn legal_placements(&self, catalog: &PlacementCatalog) -> Vec<Instance> {
        let occupied = self.occupied_mask(catalog);
        let used_compute = self.used_compute(catalog);
        let mut out = Vec::new();
        for (profile_idx, profile) in catalog.profiles.iter().enumerate() {
            if used_compute + profile.compute_slices > catalog.total_compute_slices {
                continue;
            }
            let span_mask = (1u64 << profile.memory_slices) - 1;
            for &start in &profile.allowed_starts {
                if occupied & (span_mask << start) == 0 {
                    out.push(Instance { profile_idx, start_slot: start });
                }
            }
        }
        out
    }

    /// δ: apply one alloc or free action, or report why it is undefined.
    pub fn transition(
        &self,
        catalog: &PlacementCatalog,
        action: Action,
    ) -> Result<PartitionState, IllegalTransition> {
        match action {
            Action::Alloc { profile_idx, start_slot } => {
                let profile = catalog
                    .profiles
                    .get(profile_idx)
                    .ok_or_else(|| illegal(format!("profile index {profile_idx} out of range")))?;
                if !profile.allowed_starts.contains(&start_slot) {
                    return Err(illegal(format!(
                        "start {} is not an allowed placement for {}",
                        start_slot, profile.name
                    )));
                }
                let span_mask = (1u64 << profile.memory_slices) - 1;
                if self.occupied_mask(catalog) & (span_mask << start_slot) != 0 {
                    return Err(illegal(format!(
                        "slots [{}, {}) overlap an existing instance",
                        start_slot,
                        start_slot + profile.memory_slices
                    )));
                }
                if self.used_compute(catalog) + profile.compute_slices
                    > catalog.total_compute_slices
                {
                    return Err(illegal(format!(
                        "compute budget exceeded: {} + {} > {}",
                        self.used_compute(catalog),
                        profile.compute_slices,
                        catalog.total_compute_slices
                    )));
                }
                let mut instances = self.instances.clone();
                instances.push(Instance { profile_idx, start_slot });
                instances.sort_unstable_by_key(|i| i.start_slot);
                Ok(PartitionState { instances })
            }
            Action::Free { start_slot } => {
                let pos = self
                    .instances
                    .iter()
                    .position(|i| i.start_slot == start_slot)
                    .ok_or_else(|| {
                        illegal(format!("no instance begins at slot {start_slot}"))
                    })?;
                let mut instances = self.instances.clone();
                instances.remove(pos);
                Ok(PartitionState { instances })
            }
        }
    }
}

/// An alloc edge in the state graph.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AllocEdge {
    pub profile_idx: usize,
    pub start_slot: u32,
    pub successor: usize,
}

/// The placement chosen by reachability-maximizing allocation.
#[derive(Debug, Clone)]
pub struct Placement {
    pub instance: Instance,
    pub successor_idx: usize,
    pub state: PartitionState,
    pub fcr: u64,
}

/// One way to make a target profile placeable by releasing idle instances.
#[derive(Debug, Clone)]
pub struct MergeCandidate {
    /// Start slots of the idle instances to free, ascending.
    pub release_starts: Vec<u32>,
    /// Placement of the target after the releases.
    pub alloc: Instance,
    /// fcr of the state after releases plus the allocation.
    pub fcr: u64,
}

/// All valid states, their alloc edges, the final set, and fcr.
pub struct ReachabilityTable {
    catalog: Arc<PlacementCatalog>,
    states: Vec<PartitionState>,
    index: HashMap<Vec<u8>, usize>,
    alloc_edges: Vec<Vec<AllocEdge>>,
    finals: Vec<bool>,
    fcr: Vec<u64>,
}

/// Enumerate every valid partition state and alloc edge via breadth-first
/// search from the empty state. Any valid layout can be built one instance at
/// a time (subsets of valid layouts stay valid), so the search is exhaustive.
pub fn enumerate_states(
    catalog: Arc<PlacementCatalog>,
    state_cap: usize,
) -> Result<ReachabilityTable, FsmError> {
    let slots = catalog.total_memory_slots;
    let mut states = vec![PartitionState::empty()];
    let mut index = HashMap::new();
    index.insert(states[0].canonical_key(slots), 0usize);
    let mut alloc_edges: Vec<Vec<AllocEdge>> = Vec::new();

    let mut cursor = 0;
    while cursor < states.len() {
        let placements = states[cursor].legal_placements(&catalog);
        let mut edges = Vec::with_capacity(placements.len());
        for inst in placements {
            let next = states[cursor]
                .transition(&catalog, Action::Alloc {
                    profile_idx: inst.profile_idx,
                    start_slot: inst.start_slot,
                })
                .expect("legal placement must transition");
            let key = next.canonical_key(slots);
            let successor = match index.get(&key) {
                Some(&idx) => idx,
                None => {
                    if states.len() >= state_cap {
                        return Err(FsmError::CapacityExceeded { cap: state_cap });
                    }
                    let idx = states.len();
                    index.insert(key, idx);
                    states.push(next);
                    idx
                }
            };
            edges.push(AllocEdge {
                profile_idx: inst.profile_idx,
                start_slot: inst.start_slot,
                successor,
            });
        }
        alloc_edges.push(edges);
        cursor += 1;
    }

    let finals: Vec<bool> = alloc_edges.iter().map(|e| e.is_empty()).collect();
    let fcr = vec![0u64; states.len()];
    Ok(ReachabilityTable { catalog, states, index, alloc_edges, finals, fcr })
}

impl ReachabilityTable {
    /// Enumerate and precompute in one call with the default state cap.
    pub fn build(catalog: Arc<PlacementCatalog>) -> Result<Self, FsmError> {
        let mut table = enumerate_states(catalog, DEFAULT_STATE_CAP)?;
        table.precompute_reachability();
        Ok(table)
    }

    /// Fill fcr for every state: the popcount of the union of reachable-final
    /// bitsets, folded over the allocation DAG in reverse topological order.
    /// Allocation strictly grows the instance count, so ordering states by
    /// descending instance count is a valid reverse topological order.
    pub fn precompute_reachability(&mut self) {
        let final_indices: Vec<usize> =
            (0..self.states.len()).filter(|&i| self.finals[i]).collect();
        let final_pos: HashMap<usize, usize> = final_indices
            .iter()
            .enumerate()
            .map(|(pos, &idx)| (idx, pos))
            .collect();
        let words = final_indices.len().div_ceil(64).max(1);
        let mut bitsets = vec![vec![0u64; words]; self.states.len()];

        let mut order: Vec<usize> = (0..self.states.len()).collect();
        order.sort_by_key(|&i| std::cmp::Reverse(self.states[i].instances.len()));
        for idx in order {
            if let Some(&pos) = final_pos.get(&idx) {
                bitsets[idx][pos / 64] |= 1u64 << (pos % 64);
            }
            // Successors have strictly more instances, so they are already
            // folded by the time we visit idx.
            let (head, _) = (idx, ());
            for edge_i in 0..self.alloc_edges[head].len() {
                let succ = self.alloc_edges[head][edge_i].successor;
                let (a, b) = if succ < head {
                    let (lo, hi) = bitsets.split_at_mut(head);
                    (&mut hi[0], &lo[succ])
                } else {
                    let (lo, hi) = bitsets.split_at_mut(succ);
                    (&mut lo[head], &hi[0])
                };
                for w in 0..words {
                    a[w] |= b[w];
                }
            }
            self.fcr[idx] = bitsets[idx].iter().map(|w| w.count_ones() as u64).sum();
        }
    }

    pub fn catalog(&self) -> &Arc<PlacementCatalog> {
        &self.catalog
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, idx: usize) -> &PartitionState {
        &self.states[idx]
    }

    pub fn states(&self) -> &[PartitionState] {
        &self.states
    }

    pub fn alloc_edges(&self, idx: usize) -> &[AllocEdge] {
        &self.alloc_edges[idx]
    }

    pub fn is_final(&self, idx: usize) -> bool {
        self.finals[idx]
    }

    pub fn final_count(&self) -> usize {
        self.finals.iter().filter(|&&f| f).count()
    }

    pub fn fcr(&self, idx: usize) -> u64 {
        self.fcr[idx]
    }

    pub fn empty_state_idx(&self) -> usize {
        0
    }

    pub fn state_index(&self, state: &PartitionState) -> Option<usize> {
        self.index
            .get(&state.canonical_key(self.catalog.total_memory_slots))
            .copied()
    }

    /// Online allocation: place `profile_idx` in `state` on the successor
    /// with maximal fcr. Ties break toward the highest start slot. `None`
    /// signals FAIL (no legal placement), which the scheduler turns into a
    /// merge/split attempt or a wait.
    pub fn allocate_partition(
        &self,
        state: &PartitionState,
        profile_idx: usize,
    ) -> Option<Placement> {
        let state_idx = self.state_index(state)?;
        let mut best: Option<Placement> = None;
        for edge in &self.alloc_edges[state_idx] {
            if edge.profile_idx != profile_idx {
                continue;
            }
            let fcr = self.fcr[edge.successor];
            let better = match &best {
                None => true,
                Some(b) => {
                    fcr > b.fcr || (fcr == b.fcr && edge.start_slot > b.instance.start_slot)
                }
            };
            if better {
                best = Some(Placement {
                    instance: Instance {
                        profile_idx,
                        start_slot: edge.start_slot,
                    },
                    successor_idx: edge.successor,
                    state: self.states[edge.successor].clone(),
                    fcr,
                });
            }
        }
        best
    }

    /// De-allocation; trivial, but routed through δ so the same legality
    /// checks apply.
    pub fn free_partition(
        &self,
        state: &PartitionState,
        start_slot: u32,
    ) -> Result<PartitionState, IllegalTransition> {
        state.transition(&self.catalog, Action::Free { start_slot })
    }

    /// Minimal sets of idle instances whose release makes `target_profile`
    /// placeable, each paired with the argmax-fcr placement that follows.
    /// Ordered by resulting fcr descending, then by fewer releases, then by
    /// release starts, so the first candidate is the one to take.
    pub fn merge_candidates(
        &self,
        state: &PartitionState,
        target_profile: usize,
        idle_starts: &[u32],
    ) -> Vec<MergeCandidate> {
        let mut idle: Vec<u32> = idle_starts
            .iter()
            .copied()
            .filter(|s| state.instance_at(*s).is_some())
            .collect();
        idle.sort_unstable();
        idle.dedup();
        let mut minimal: Vec<(Vec<u32>, Placement)> = Vec::new();
        // Subset enumeration ordered by size keeps only minimal release sets:
        // any superset of an accepted set is skipped.
        for size in 0..=idle.len() {
            for combo in combinations(&idle, size) {
                if minimal
                    .iter()
                    .any(|(kept, _)| kept.iter().all(|s| combo.contains(s)))
                {
                    continue;
                }
                let mut candidate = state.clone();
                for &s in &combo {
                    candidate = match candidate.transition(&self.catalog, Action::Free {
                        start_slot: s,
                    }) {
                        Ok(next) => next,
                        Err(_) => continue,
                    };
                }
                if let Some(placement) = self.allocate_partition(&candidate, target_profile) {
                    minimal.push((combo, placement));
                }
            }
        }
        let mut out: Vec<MergeCandidate> = minimal
            .into_iter()
            .map(|(release_starts, p)| MergeCandidate {
                release_starts,
                alloc: p.instance,
                fcr: p.fcr,
            })
            .collect();
        out.sort_by(|a, b| {
            b.fcr
                .cmp(&a.fcr)
                .then(a.release_starts.len().cmp(&b.release_starts.len()))
                .then(a.release_starts.cmp(&b.release_starts))
        });
        out
    }
}

fn combinations(items: &[u32], size: usize) -> Vec<Vec<u32>> {
    if size == 0 {
        return vec![Vec::new()];
    }
    if size > items.len() {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (i, &first) in items.iter().enumerate() {
        if items.len() - i < size {
            break;
        }
        for mut rest in combinations(&items[i + 1..], size - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const GIB: u64 = 1 << 30;

    fn a100_table() -> ReachabilityTable {
        ReachabilityTable::build(PlacementCatalog::a100_40gb()).unwrap()
    }

    fn profile_idx(table: &ReachabilityTable, name: &str) -> usize {
        table.catalog().profile_by_name(name).unwrap().0
    }

    #[test]
    fn single_profile_catalog_has_two_states_one_edge() {
        let cat = Arc::new(
            PlacementCatalog::from_json(
                r#"{"gpu_name":"toy","total_compute_slices":4,"total_memory_slots":4,
                "bytes_per_memory_slot":1000,"profiles":[
                {"name":"full","compute_slices":4,"memory_slices":4,"allowed_starts":[0]}]}"#,
            )
            .unwrap(),
        );
        let table = ReachabilityTable::build(cat).unwrap();
        assert_eq!(table.len(), 2);
        assert_eq!(table.alloc_edges(0).len(), 1);
        assert_eq!(table.final_count(), 1);
        assert_eq!(table.fcr(0), 1);
    }

    #[test]
    fn empty_profile_list_yields_just_s0_final() {
        let cat = Arc::new(
            PlacementCatalog::from_json(
                r#"{"gpu_name":"void","total_compute_slices":1,"total_memory_slots":1,
                "bytes_per_memory_slot":1,"profiles":[]}"#,
            )
            .unwrap(),
        );
        let table = ReachabilityTable::build(cat).unwrap();
        assert_eq!(table.len(), 1);
        assert!(table.is_final(0));
        assert_eq!(table.fcr(0), 1);
    }

    #[test]
    fn state_cap_is_enforced() {
        let res = enumerate_states(PlacementCatalog::a100_40gb(), 10);
        assert!(matches!(res, Err(FsmError::CapacityExceeded { cap: 10 })));
    }

    #[test]
    fn finals_have_fcr_one_and_every_state_at_least_one() {
        let table = a100_table();
        for idx in 0..table.len() {
            if table.is_final(idx) {
                assert_eq!(table.fcr(idx), 1);
            }
            assert!(table.fcr(idx) >= 1);
        }
    }

    #[test]
    fn a100_five_gb_placements_favor_the_last_slot() {
        // The derived table gives fcr 6/6/12 for 5GB at slots 0/1/6. The
        // qualitative ordering (last slot strictly highest) is what the
        // allocator relies on.
        let table = a100_table();
        let one_g = profile_idx(&table, "1g.5gb");
        let fcr_at = |slot: u32| {
            let state = PartitionState::empty()
                .transition(table.catalog(), Action::Alloc {
                    profile_idx: one_g,
                    start_slot: slot,
                })
                .unwrap();
            table.fcr(table.state_index(&state).unwrap())
        };
        assert_eq!(fcr_at(0), 6);
        assert_eq!(fcr_at(1), 6);
        assert_eq!(fcr_at(6), 12);
        assert!(fcr_at(6) > fcr_at(0));
    }

    #[test]
    fn fcr_of_s0_equals_final_count() {
        let table = a100_table();
        assert_eq!(table.fcr(table.empty_state_idx()), table.final_count() as u64);
    }

    #[test]
    fn allocate_from_empty_picks_last_allowed_slot() {
        let table = a100_table();
        let one_g = profile_idx(&table, "1g.5gb");
        let placement = table
            .allocate_partition(&PartitionState::empty(), one_g)
            .unwrap();
        assert_eq!(placement.instance.start_slot, 6);
        assert_eq!(placement.fcr, 12);
    }

    #[test]
    fn allocate_on_full_state_fails() {
        let table = a100_table();
        let full = profile_idx(&table, "7g.40gb");
        let state = PartitionState::empty()
            .transition(table.catalog(), Action::Alloc { profile_idx: full, start_slot: 0 })
            .unwrap();
        assert!(table.allocate_partition(&state, profile_idx(&table, "1g.5gb")).is_none());
    }

    #[test]
    fn allocate_singleton_choice_returns_it() {
        let table = a100_table();
        let four_g = profile_idx(&table, "4g.20gb");
        // 4g.20gb has exactly one allowed start.
        let placement = table
            .allocate_partition(&PartitionState::empty(), four_g)
            .unwrap();
        assert_eq!(placement.instance.start_slot, 0);
    }

    #[test]
    fn twenty_gb_at_slot_two_is_illegal() {
        let table = a100_table();
        let cat = table.catalog();
        let one_g = profile_idx(&table, "1g.5gb");
        let state = PartitionState::empty()
            .transition(cat, Action::Alloc { profile_idx: one_g, start_slot: 0 })
            .unwrap()
            .transition(cat, Action::Alloc { profile_idx: one_g, start_slot: 1 })
            .unwrap();
        for name in ["3g.20gb", "4g.20gb"] {
            let idx = profile_idx(&table, name);
            let res = state.transition(cat, Action::Alloc { profile_idx: idx, start_slot: 2 });
            assert!(res.is_err(), "{name} at slot 2 should be illegal");
        }
        // ... while slot 4 stays legal for the 3-compute variant.
        let three_g = profile_idx(&table, "3g.20gb");
        assert!(state
            .transition(cat, Action::Alloc { profile_idx: three_g, start_slot: 4 })
            .is_ok());
    }

    #[test]
    fn alloc_then_free_is_identity() {
        let table = a100_table();
        let cat = table.catalog();
        let one_g = profile_idx(&table, "1g.5gb");
        let s0 = PartitionState::empty();
        let s1 = s0
            .transition(cat, Action::Alloc { profile_idx: one_g, start_slot: 3 })
            .unwrap();
        let back = s1.transition(cat, Action::Free { start_slot: 3 }).unwrap();
        assert_eq!(back, s0);
    }

    #[test]
    fn free_unknown_start_is_illegal() {
        let table = a100_table();
        let res = PartitionState::empty().transition(table.catalog(), Action::Free {
            start_slot: 2,
        });
        assert!(res.is_err());
    }

    #[test]
    fn freeing_one_of_two_leaves_the_other() {
        let table = a100_table();
        let cat = table.catalog();
        let one_g = profile_idx(&table, "1g.5gb");
        let state = PartitionState::empty()
            .transition(cat, Action::Alloc { profile_idx: one_g, start_slot: 0 })
            .unwrap()
            .transition(cat, Action::Alloc { profile_idx: one_g, start_slot: 1 })
            .unwrap();
        let after = table.free_partition(&state, 0).unwrap();
        assert_eq!(after.instances().len(), 1);
        assert_eq!(after.instances()[0].start_slot, 1);
    }

    #[test]
    fn merge_two_idle_small_into_ten_gb() {
        let table = a100_table();
        let cat = table.catalog();
        let one_g = profile_idx(&table, "1g.5gb");
        let two_g = profile_idx(&table, "2g.10gb");
        let three_g = profile_idx(&table, "3g.20gb");
        // 5GB@0 and 5GB@1 idle; slots 2..7 held busy by 5GB@2, 5GB@3 and
        // 3g.20gb@4 so releasing both small instances is the only way in.
        let mut state = PartitionState::empty();
        for slot in 0..4 {
            state = state
                .transition(cat, Action::Alloc { profile_idx: one_g, start_slot: slot })
                .unwrap();
        }
        state = state
            .transition(cat, Action::Alloc { profile_idx: three_g, start_slot: 4 })
            .unwrap();
        let candidates = table.merge_candidates(&state, two_g, &[0, 1]);
        assert_eq!(candidates.len(), 1);
        assert_eq!(candidates[0].release_starts, vec![0, 1]);
        assert_eq!(candidates[0].alloc.start_slot, 0);
    }

    #[test]
    fn split_whole_gpu_for_a_small_request() {
        let table = a100_table();
        let cat = table.catalog();
        let full = profile_idx(&table, "7g.40gb");
        let one_g = profile_idx(&table, "1g.5gb");
        let state = PartitionState::empty()
            .transition(cat, Action::Alloc { profile_idx: full, start_slot: 0 })
            .unwrap();
        let candidates = table.merge_candidates(&state, one_g, &[0]);
        assert_eq!(candidates.len(), 1);
        assert_eq!(candidates[0].release_starts, vec![0]);
        // Post-release allocation lands at the arg-max slot.
        assert_eq!(candidates[0].alloc.start_slot, 6);
        assert_eq!(candidates[0].fcr, 12);
    }

    #[test]
    fn busy_instances_are_never_released() {
        let table = a100_table();
        let cat = table.catalog();
        let three_g = profile_idx(&table, "3g.20gb");
        let full = profile_idx(&table, "7g.40gb");
        let state = PartitionState::empty()
            .transition(cat, Action::Alloc { profile_idx: three_g, start_slot: 4 })
            .unwrap();
        // Nothing idle: no way to place the full profile.
        let candidates = table.merge_candidates(&state, full, &[]);
        assert!(candidates.is_empty());
    }

    #[test]
    fn fcr_non_increasing_along_every_alloc_edge() {
        let table = a100_table();
        for idx in 0..table.len() {
            for edge in table.alloc_edges(idx) {
                assert!(
                    table.fcr(edge.successor) <= table.fcr(idx),
                    "fcr grew along an alloc edge from state {idx}"
                );
            }
        }
    }

    #[test]
    fn finals_admit_no_placement_at_all() {
        let table = a100_table();
        for idx in 0..table.len() {
            let placements = table.state(idx).legal_placements(table.catalog());
            assert_eq!(placements.is_empty(), table.is_final(idx));
        }
    }

    #[test]
    fn a100_memory_example_sizes() {
        // The seven-small layout uses all compute while one memory slot stays
        // unusable, and the paper's (10GB, 10GB, 20GB) layout is final.
        let table = a100_table();
        let cat = table.catalog();
        let one_g = profile_idx(&table, "1g.5gb");
        let two_g = profile_idx(&table, "2g.10gb");
        let three_g = profile_idx(&table, "3g.20gb");
        let mut seven = PartitionState::empty();
        for slot in 0..7 {
            seven = seven
                .transition(cat, Action::Alloc { profile_idx: one_g, start_slot: slot })
                .unwrap();
        }
        assert!(table.is_final(table.state_index(&seven).unwrap()));

        let mixed = PartitionState::empty()
            .transition(cat, Action::Alloc { profile_idx: two_g, start_slot: 0 })
            .unwrap()
            .transition(cat, Action::Alloc { profile_idx: two_g, start_slot: 2 })
            .unwrap()
            .transition(cat, Action::Alloc { profile_idx: three_g, start_slot: 4 })
            .unwrap();
        assert!(table.is_final(table.state_index(&mixed).unwrap()));
        assert_eq!(mixed.used_compute(cat), 7);
        let total: u64 = mixed
            .instances()
            .iter()
            .map(|i| cat.profile(i.profile_idx).memory_bytes)
            .sum();
        assert_eq!(total, 40 * GIB);
    }
}
