//! Independent exhaustive-DFS oracle over placement catalogs.
//!
//! Deliberately shares no code with `migsim::fsm`: states are sorted vectors
//! of (profile name, start slot), legality is re-derived from the raw catalog
//! fields, and reachable final sets are computed by plain memoized recursion
//! over owned state keys. Tests compare the library's table against this.

use std::collections::{BTreeSet, HashMap};

use migsim::catalog::PlacementCatalog;

pub type OracleState = BTreeSet<(String, u32)>;

pub struct OracleFsm {
    pub states: Vec<OracleState>,
    pub index: HashMap<Vec<(String, u32)>, usize>,
    pub finals: Vec<bool>,
    pub fcr: Vec<u64>,
}

fn state_key(state: &OracleState) -> Vec<(String, u32)> {
    state.iter().cloned().collect()
}

fn placements(catalog: &PlacementCatalog, state: &OracleState) -> Vec<(String, u32)> {
    let mut used = vec![false; catalog.total_memory_slots as usize];
    let mut compute = 0u32;
    for (name, start) in state {
        let (_, profile) = catalog.profile_by_name(name).expect("profile exists");
        compute += profile.compute_slices;
        for slot in *start..*start + profile.memory_slices {
            used[slot as usize] = true;
        }
    }
    let mut out = Vec::new();
    for profile in &catalog.profiles {
        if compute + profile.compute_slices > catalog.total_compute_slices {
            continue;
        }
        for &start in &profile.allowed_starts {
            let span = start..start + profile.memory_slices;
            if span.clone().all(|slot| !used[slot as usize]) {
                out.push((profile.name.clone(), start));
            }
        }
    }
    out
}

pub fn build_oracle(catalog: &PlacementCatalog) -> OracleFsm {
    let mut states: Vec<OracleState> = vec![BTreeSet::new()];
    let mut index = HashMap::new();
    index.insert(state_key(&states[0]), 0usize);
    let mut cursor = 0;
    while cursor < states.len() {
        for (name, start) in placements(catalog, &states[cursor]) {
            let mut next = states[cursor].clone();
            next.insert((name, start));
            let key = state_key(&next);
            if let std::collections::hash_map::Entry::Vacant(slot) = index.entry(key) {
                slot.insert(states.len());
                states.push(next);
            }
        }
        cursor += 1;
    }
    let finals: Vec<bool> = states
        .iter()
        .map(|s| placements(catalog, s).is_empty())
        .collect();

    // Reachable-final sets by memoized depth-first recursion.
    type Key = Vec<(String, u32)>;
    fn reach(
        catalog: &PlacementCatalog,
        state: &OracleState,
        finals_of: &mut HashMap<Key, BTreeSet<Key>>,
    ) -> BTreeSet<Key> {
        let key = state_key(state);
        if let Some(hit) = finals_of.get(&key) {
            return hit.clone();
        }
        let next_moves = placements(catalog, state);
        let mut acc = BTreeSet::new();
        if next_moves.is_empty() {
            acc.insert(key.clone());
        }
        for (name, start) in next_moves {
            let mut next = state.clone();
            next.insert((name, start));
            acc.extend(reach(catalog, &next, finals_of));
        }
        finals_of.insert(key, acc.clone());
        acc
    }

    let mut memo = HashMap::new();
    let fcr = states
        .iter()
        .map(|s| reach(catalog, s, &mut memo).len() as u64)
        .collect();
    OracleFsm { states, index, finals, fcr }
}

impl OracleFsm {
    pub fn final_count(&self) -> usize {
        self.finals.iter().filter(|&&f| f).count()
    }

    pub fn fcr_of(&self, state: &OracleState) -> Option<u64> {
        self.index.get(&state_key(state)).map(|&i| self.fcr[i])
    }
}
