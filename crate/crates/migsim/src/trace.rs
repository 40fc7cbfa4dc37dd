//! Per-iteration memory trace files and the seeded synthetic generator.
//!
//! The CSV format is `iteration,requested_bytes,reuse_ratio` with a header
//! row, one row per iteration starting at 1.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::predictor::IterationSample;

pub const TRACE_CSV_HEADER: &str = "iteration,requested_bytes,reuse_ratio";

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error reading trace: {0}")]
    Io(#[from] std::io::Error),
}

fn parse_err(line: usize, message: impl Into<String>) -> TraceError {
    TraceError::Parse { line, message: message.into() }
}

/// Parse a trace from CSV text. Iterations must be 1..n in order, requested
/// bytes non-negative integers, reuse ratios in (0, 1].
pub fn parse_trace_csv(text: &str) -> Result<Vec<IterationSample>, TraceError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty trace file"))?;
    if header.trim() != TRACE_CSV_HEADER {
        return Err(parse_err(1, format!("expected header `{TRACE_CSV_HEADER}`")));
    }
    let mut samples = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let iteration: u32 = fields
            .next()
            .ok_or_else(|| parse_err(line_no, "missing iteration"))?
            .trim()
            .parse()
            .map_err(|e| parse_err(line_no, format!("bad iteration: {e}")))?;
        let requested_bytes: u64 = fields
            .next()
            .ok_or_else(|| parse_err(line_no, "missing requested_bytes"))?
            .trim()
            .parse()
            .map_err(|e| parse_err(line_no, format!("bad requested_bytes: {e}")))?;
        let reuse_ratio: f64 = fields
            .next()
            .ok_or_else(|| parse_err(line_no, "missing reuse_ratio"))?
            .trim()
            .parse()
            .map_err(|e| parse_err(line_no, format!("bad reuse_ratio: {e}")))?;
        if fields.next().is_some() {
            return Err(parse_err(line_no, "too many fields"));
        }
        if !(reuse_ratio > 0.0 && reuse_ratio <= 1.0) {
            return Err(parse_err(line_no, format!("reuse_ratio {reuse_ratio} outside (0, 1]")));
        }
        if iteration as usize != samples.len() + 1 {
            return Err(parse_err(
                line_no,
                format!("iteration {} out of order (expected {})", iteration, samples.len() + 1),
            ));
        }
        samples.push(IterationSample { iteration, requested_bytes, reuse_ratio });
    }
    Ok(samples)
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<Vec<IterationSample>, TraceError> {
    let text = std::fs::read_to_string(path)?;
    parse_trace_csv(&text)
}

pub fn trace_to_csv(samples: &[IterationSample]) -> String {
    let mut out = String::with_capacity(samples.len() * 24 + 32);
    out.push_str(TRACE_CSV_HEADER);
    out.push('\n');
    for s in samples {
        // Ryu-style shortest float formatting keeps the ratio lossless.
        writeln!(out, "{},{},{}", s.iteration, s.requested_bytes, s.reuse_ratio).unwrap();
    }
    out
}

/// Linear-trend generator parameters for synthetic traces.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TraceGenParams {
    /// Requested-memory slope, bytes per iteration.
    pub a: f64,
    /// Requested-memory intercept, bytes.
    pub b: f64,
    /// Gaussian noise on requested memory, bytes.
    #[serde(default)]
    pub sigma: f64,
    /// Inverse-reuse slope per iteration.
    #[serde(default)]
    pub inv_a: f64,
    /// Inverse-reuse intercept.
    #[serde(default = "default_inv_b")]
    pub inv_b: f64,
    /// Sample count; scenario jobs default this to their iteration count.
    #[serde(default)]
    pub n: Option<u32>,
    pub seed: u64,
}

fn default_inv_b() -> f64 {
    1.0
}

/// A standard normal via Box-Muller on two uniforms. Hand-rolled so the
/// stream stays byte-stable regardless of rand's distribution internals.
fn standard_normal(rng: &mut Pcg64) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Generate `n` samples: requested(t) = max(0, a*t + b + N(0, sigma)) and
/// reuse(t) = 1 / max(inv_a*t + inv_b, 1), seeded and reproducible.
pub fn gen_trace(params: &TraceGenParams, n: u32) -> Vec<IterationSample> {
    let mut rng = Pcg64::seed_from_u64(params.seed);
    let mut out = Vec::with_capacity(n as usize);
    for t in 1..=n {
        let noise = if params.sigma > 0.0 {
            standard_normal(&mut rng) * params.sigma
        } else {
            0.0
        };
        let requested = (params.a * t as f64 + params.b + noise).max(0.0).round() as u64;
        let inv = (params.inv_a * t as f64 + params.inv_b).max(1.0);
        let reuse_ratio = (1.0 / inv).clamp(f64::MIN_POSITIVE, 1.0);
        out.push(IterationSample { iteration: t, requested_bytes: requested, reuse_ratio });
    }
    out
}
