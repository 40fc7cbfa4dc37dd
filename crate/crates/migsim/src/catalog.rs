//! GPU placement catalogs: which instance profiles exist, where they may be
//! placed, and how memory/compute slices map to bytes and SM capacity.
//!
//! A catalog is pure data. Validity of a partition layout is entirely
//! catalog-driven (non-overlap plus allowed start slots), so supporting a new
//! GPU is a matter of adding a data file, not code.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Bundled catalog for the A100 40GB, the device every default scenario uses.
pub const A100_40GB_JSON: &str = include_str!("../data/a100-40gb.json");
/// Bundled catalog for the A30 24GB.
pub const A30_24GB_JSON: &str = include_str!("../data/a30-24gb.json");

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("catalog parse error: {0}")]
    Parse(String),
    #[error("catalog validation error in `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("i/o error reading catalog: {0}")]
    Io(#[from] std::io::Error),
}

/// A legal instance shape: a compute slice count paired with a memory slice
/// span and the slots the span may begin at.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Profile {
    pub name: String,
    pub compute_slices: u32,
    pub memory_slices: u32,
    pub allowed_starts: Vec<u32>,
    /// Derived on load: `memory_slices * bytes_per_memory_slot`.
    #[serde(skip)]
    pub memory_bytes: u64,
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

/// The full geometry of one GPU model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlacementCatalog {
    pub gpu_name: String,
    pub total_compute_slices: u32,
    pub total_memory_slots: u32,
    pub bytes_per_memory_slot: u64,
    /// Fixed CUDA-context overhead charged per resident job.
    #[serde(default = "default_context_bytes")]
    pub reserved_context_bytes: u64,
    /// Sorted by (memory_bytes, compute_slices) ascending after load.
    pub profiles: Vec<Profile>,
}

fn default_context_bytes() -> u64 {
    512 * 1024 * 1024
}

#[derive(Debug, Error)]
pub enum FitError {
    #[error("no profile can hold {need} bytes (largest is {largest} bytes)")]
    NoFit { need: u64, largest: u64 },
}

/// Ceiling of `warps / (total_sms * slices / total_slices)` in exact integer
/// arithmetic. Zero warps means zero waves on anything.
pub fn wave_count(warps: u64, total_sms: u64, compute_slices: u32, total_compute_slices: u32) -> u64 {
    if warps == 0 {
        return 0;
    }
    let cap = total_sms.saturating_mul(compute_slices as u64);
    if cap == 0 {
        return u64::MAX;
    }
    let scaled = warps.saturating_mul(total_compute_slices as u64);
    scaled.div_ceil(cap)
}

impl PlacementCatalog {
    /// Parse and validate a catalog from raw JSON text.
    pub fn from_json(text: &str) -> Result<Self, CatalogError> {
        let mut catalog: PlacementCatalog =
            serde_json::from_str(text).map_err(|e| CatalogError::Parse(e.to_string()))?;
        catalog.validate_and_finish()?;
        Ok(catalog)
    }

    /// Load a catalog from a file path.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, CatalogError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// The bundled A100 40GB catalog.
    pub fn a100_40gb() -> Arc<Self> {
        Arc::new(Self::from_json(A100_40GB_JSON).expect("bundled a100 catalog is valid"))
    }

    fn validate_and_finish(&mut self) -> Result<(), CatalogError> {
        let err = |field: &str, message: String| CatalogError::Validation {
            field: field.to_string(),
            message,
        };
        if self.total_memory_slots == 0 || self.total_memory_slots > 64 {
            return Err(err(
                "total_memory_slots",
                format!("must be in 1..=64, got {}", self.total_memory_slots),
            ));
        }
        if self.total_compute_slices == 0 {
            return Err(err("total_compute_slices", "must be positive".into()));
        }
        if self.bytes_per_memory_slot == 0 {
            return Err(err("bytes_per_memory_slot", "must be positive".into()));
        }
        for profile in &mut self.profiles {
            let field = format!("profiles.{}", profile.name);
            if profile.memory_slices == 0 {
                return Err(err(&field, "memory_slices must be at least 1".into()));
            }
            if profile.compute_slices == 0 || profile.compute_slices > self.total_compute_slices {
                return Err(err(
                    &field,
                    format!(
                        "compute_slices {} outside 1..={}",
                        profile.compute_slices, self.total_compute_slices
                    ),
                ));
            }
            if profile.allowed_starts.is_empty() {
                return Err(err(&field, "allowed_starts must not be empty".into()));
            }
            for &start in &profile.allowed_starts {
                if start + profile.memory_slices > self.total_memory_slots {
                    return Err(err(
                        &field,
                        format!(
                            "start {} plus {} memory slices exceeds {} total slots",
                            start, profile.memory_slices, self.total_memory_slots
                        ),
                    ));
                }
            }
            let mut sorted = profile.allowed_starts.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != profile.allowed_starts.len() {
                return Err(err(&field, "allowed_starts contains duplicates".into()));
            }
            profile.allowed_starts = sorted;
            profile.memory_bytes = (profile.memory_slices as u64)
                .checked_mul(self.bytes_per_memory_slot)
                .ok_or_else(|| err(&field, "memory_bytes overflows u64".into()))?;
        }
        let mut names: Vec<&str> = self.profiles.iter().map(|p| p.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != self.profiles.len() {
            return Err(err("profiles", "profile names must be unique".into()));
        }
        // Tight-fit search walks this order: smallest memory first, then
        // fewest compute slices.
        self.profiles
            .sort_by_key(|p| (p.memory_bytes, p.compute_slices));
        Ok(())
    }

    pub fn total_memory_bytes(&self) -> u64 {
        self.bytes_per_memory_slot * self.total_memory_slots as u64
    }

    pub fn profile(&self, idx: usize) -> &Profile {
        &self.profiles[idx]
    }

    pub fn profile_by_name(&self, name: &str) -> Option<(usize, &Profile)> {
        self.profiles
            .iter()
            .enumerate()
            .find(|(_, p)| p.name == name)
    }

    /// The profile used as the whole-GPU reference for wave counts: the one
    /// with the most compute slices (largest memory on ties).
    pub fn full_gpu_profile(&self) -> Option<(usize, &Profile)> {
        self.profiles
            .iter()
            .enumerate()
            .max_by_key(|(_, p)| (p.compute_slices, p.memory_bytes))
    }

    /// Waves a job of `warps` needs on `profile` given the device SM count.
    pub fn waves_on(&self, profile: &Profile, warps: u64, total_sms: u64) -> u64 {
        wave_count(warps, total_sms, profile.compute_slices, self.total_compute_slices)
    }

    /// Smallest profile that holds `mem_need` plus the reserved context and
    /// keeps the job's wave count equal to the full-GPU profile's (warp
    /// folding). Ties on memory prefer fewer compute slices.
    pub fn tight_fit_profile(
        &self,
        mem_need: u64,
        warp_need: u64,
        total_sms: u64,
    ) -> Result<(usize, &Profile), FitError> {
        let total_need = mem_need.saturating_add(self.reserved_context_bytes);
        self.fit_total_bytes(total_need, warp_need, total_sms)
    }

    /// Tight fit against a requirement that already includes the context
    /// reservation (used for OOM-ladder and forecast-driven requeues).
    pub fn fit_total_bytes(
        &self,
        total_need: u64,
        warp_need: u64,
        total_sms: u64,
    ) -> Result<(usize, &Profile), FitError> {
        let full_waves = self
            .full_gpu_profile()
            .map(|(_, p)| self.waves_on(p, warp_need, total_sms))
            .unwrap_or(0);
        let mut fallback: Option<(usize, &Profile)> = None;
        for (idx, profile) in self.profiles.iter().enumerate() {
            if profile.memory_bytes < total_need {
                continue;
            }
            if self.waves_on(profile, warp_need, total_sms) == full_waves {
                return Ok((idx, profile));
            }
            if fallback.is_none() {
                fallback = Some((idx, profile));
            }
        }
        // Profiles are memory-sorted, so reaching here means either nothing
        // holds the bytes at all, or only wave-degrading profiles do. The
        // full-GPU profile always passes the wave test against itself, so a
        // fallback can only remain when the catalog has no such profile;
        // memory stays the hard constraint in that case.
        fallback.ok_or(FitError::NoFit {
            need: total_need,
            largest: self.profiles.iter().map(|p| p.memory_bytes).max().unwrap_or(0),
        })
    }

    /// Distinct profile memory sizes, ascending: the OOM restart ladder.
    pub fn memory_ladder(&self) -> Vec<u64> {
        let mut sizes: Vec<u64> = self.profiles.iter().map(|p| p.memory_bytes).collect();
        sizes.sort_unstable();
        sizes.dedup();
        sizes
    }

    /// Profiles in the same memory class, ordered tight-first: the
    /// wave-preserving pick leads, remaining variants follow by descending
    /// compute so a degraded placement loses as little speed as possible.
    pub fn class_variants(&self, class_bytes: u64, warp_need: u64, total_sms: u64) -> Vec<usize> {
        let full_waves = self
            .full_gpu_profile()
            .map(|(_, p)| self.waves_on(p, warp_need, total_sms))
            .unwrap_or(0);
        let mut members: Vec<usize> = (0..self.profiles.len())
            .filter(|&i| self.profiles[i].memory_bytes == class_bytes)
            .collect();
        members.sort_by_key(|&i| {
            let p = &self.profiles[i];
            let preserves = self.waves_on(p, warp_need, total_sms) == full_waves;
            // preserving variants first (fewest compute among them), then
            // degrading variants by descending compute
            if preserves {
                (0u8, p.compute_slices as i64)
            } else {
                (1u8, -(p.compute_slices as i64))
            }
        });
        members
    }
}
