//! Peak-memory forecasting from per-iteration allocator samples.
//!
//! Two linear trends are fit online: requested bytes per iteration and the
//! inverse reuse ratio. The peak forecast scans the remaining horizon with a
//! one-sided confidence bound on requested memory divided by the point
//! estimate of inverse reuse, then adds back the constant workspace and
//! context components. Convergence of successive forecasts gates any
//! scheduling decision taken on them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One-sided z-score for a 99% bound, the default confidence level.
pub const DEFAULT_Z: f64 = 2.326;
/// Default convergence rule: 3 consecutive steps within 1% after 5 samples.
pub const DEFAULT_EPSILON: f64 = 0.01;
pub const DEFAULT_K: usize = 3;
pub const DEFAULT_N_MIN: usize = 5;
/// Fallback horizon when a workload declares no iteration count.
pub const DEFAULT_HORIZON: u32 = 1000;

#[derive(Debug, Error)]
pub enum PredictorError {
    #[error("out-of-order sample: expected iteration {expected}, got {got}")]
    OutOfOrderSample { expected: u32, got: u32 },
    #[error("workspace config parse error: {0}")]
    WorkspaceParse(String),
}

/// One observation from the instrumented allocator.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct IterationSample {
    /// 1-based iteration index.
    pub iteration: u32,
    pub requested_bytes: u64,
    /// In (0, 1]; lower means more block reuse.
    pub reuse_ratio: f64,
}

/// Least-squares line over (iteration, value) with residual spread.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct TrendModel {
    pub a: f64,
    pub b: f64,
    pub sigma: f64,
    pub n: usize,
}

impl TrendModel {
    pub fn point_estimate(&self, t: f64) -> f64 {
        self.a * t + self.b
    }
}

/// Ordinary least squares over the series. A single point fits a flat line;
/// sigma is the residual standard deviation with divisor n-2, zero when
/// fewer than three points make that undefined.
pub fn fit_linear(series: &[(f64, f64)]) -> TrendModel {
    let n = series.len();
    assert!(n >= 1, "fit_linear needs at least one sample");
    if n == 1 {
        return TrendModel { a: 0.0, b: series[0].1, sigma: 0.0, n };
    }
    let nf = n as f64;
    let mean_t = series.iter().map(|(t, _)| t).sum::<f64>() / nf;
    let mean_y = series.iter().map(|(_, y)| y).sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(t, y) in series {
        sxx += (t - mean_t) * (t - mean_t);
        sxy += (t - mean_t) * (y - mean_y);
    }
    let a = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let b = mean_y - a * mean_t;
    let sigma = if n <= 2 {
        0.0
    } else {
        let ss: f64 = series
            .iter()
            .map(|&(t, y)| {
                let r = y - (a * t + b);
                r * r
            })
            .sum();
        (ss / (nf - 2.0)).max(0.0).sqrt()
    };
    TrendModel { a, b, sigma, n }
}

/// One-sided upper confidence bound at iteration `t`, floored at zero.
pub fn upper_bound(model: &TrendModel, t: f64, z: f64) -> f64 {
    (model.point_estimate(t) + z * model.sigma).max(0.0)
}

/// Fixed memory components outside the fitted trends.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct StaticOverheads {
    /// Third-party library workspace, excluded from the trend and re-added
    /// as a constant.
    pub workspace_bytes: u64,
    /// CUDA context and miscellaneous runtime overhead.
    pub context_bytes: u64,
}

/// Physical peak over the remaining horizon: the requested-memory upper
/// bound divided by the inverse-reuse point estimate (clamped to at least 1,
/// so physical never exceeds requested), plus the constant overheads. The
/// mem model is expected to be fit on workspace-discounted samples.
pub fn predict_peak(
    mem_model: &TrendModel,
    inv_reuse_model: &TrendModel,
    max_iter: u32,
    z: f64,
    overheads: StaticOverheads,
) -> f64 {
    let current = mem_model.n.max(1) as u32;
    let mut peak = 0.0f64;
    for t in current..=max_iter.max(current) {
        let tf = t as f64;
        let requested = upper_bound(mem_model, tf, z);
        let inv_reuse = inv_reuse_model.point_estimate(tf).max(1.0);
        let physical = requested / inv_reuse;
        if physical > peak {
            peak = physical;
        }
    }
    peak + overheads.workspace_bytes as f64 + overheads.context_bytes as f64
}

/// True once `n_min` samples are in and each of the last `k` successive
/// predictions moved less than `epsilon` relative to its predecessor.
pub fn check_convergence(history: &[f64], epsilon: f64, k: usize, n_min: usize) -> bool {
    let m = history.len();
    if m < n_min || m < k + 1 {
        return false;
    }
    (m - k..m).all(|i| {
        let prev = history[i - 1];
        let cur = history[i];
        if prev == 0.0 {
            cur == 0.0
        } else {
            ((cur - prev) / prev).abs() < epsilon
        }
    })
}

/// Total workspace bytes from a `:SIZE_KIB:COUNT[,:SIZE_KIB:COUNT...]`
/// config string, scaled by the model's layer count. Empty means none.
pub fn estimate_workspace(config: &str, layer_count: u64) -> Result<u64, PredictorError> {
    if config.is_empty() {
        return Ok(0);
    }
    let parse_err = |msg: String| PredictorError::WorkspaceParse(msg);
    let mut per_layer: u64 = 0;
    for entry in config.split(',') {
        let rest = entry
            .strip_prefix(':')
            .ok_or_else(|| parse_err(format!("entry `{entry}` must start with ':'")))?;
        let (size_s, count_s) = rest
            .split_once(':')
            .ok_or_else(|| parse_err(format!("entry `{entry}` must be :SIZE_KIB:COUNT")))?;
        let size_kib: u64 = size_s
            .parse()
            .map_err(|_| parse_err(format!("bad size `{size_s}` in `{entry}`")))?;
        let count: u64 = count_s
            .parse()
            .map_err(|_| parse_err(format!("bad count `{count_s}` in `{entry}`")))?;
        let bytes = size_kib
            .checked_mul(1024)
            .and_then(|b| b.checked_mul(count))
            .ok_or_else(|| parse_err(format!("entry `{entry}` overflows u64")))?;
        per_layer = per_layer
            .checked_add(bytes)
            .ok_or_else(|| parse_err("workspace total overflows u64".to_string()))?;
    }
    per_layer
        .checked_mul(layer_count)
        .ok_or_else(|| parse_err("workspace total overflows u64".to_string()))
}

/// Forecast configuration knobs.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ForecastConfig {
    pub z: f64,
    pub epsilon: f64,
    pub k: usize,
    pub n_min: usize,
    pub max_iter: u32,
    pub overheads: StaticOverheads,
}

impl ForecastConfig {
    pub fn new(max_iter: u32) -> Self {
        ForecastConfig {
            z: DEFAULT_Z,
            epsilon: DEFAULT_EPSILON,
            k: DEFAULT_K,
            n_min: DEFAULT_N_MIN,
            max_iter,
            overheads: StaticOverheads::default(),
        }
    }
}

/// The evolving forecast for one job: both fitted trends, the peak history,
/// and the convergence flag. One instance per job; no shared state.
#[derive(Debug, Clone, Serialize)]
pub struct MemoryForecast {
    pub config: ForecastConfig,
    pub mem_model: Option<TrendModel>,
    pub inv_reuse_model: Option<TrendModel>,
    pub peak_prediction_bytes: f64,
    pub converged: bool,
    pub history: Vec<f64>,
    #[serde(skip)]
    mem_series: Vec<(f64, f64)>,
    #[serde(skip)]
    inv_series: Vec<(f64, f64)>,
}

impl MemoryForecast {
    pub fn new(config: ForecastConfig) -> Self {
        MemoryForecast {
            config,
            mem_model: None,
            inv_reuse_model: None,
            peak_prediction_bytes: 0.0,
            converged: false,
            history: Vec::new(),
            mem_series: Vec::new(),
            inv_series: Vec::new(),
        }
    }

    pub fn samples_seen(&self) -> u32 {
        self.mem_series.len() as u32
    }

    /// Iteration at which the forecast first converged, if it has.
    pub fn converged_at(&self) -> Option<u32> {
        if !self.converged {
            return None;
        }
        let cfg = &self.config;
        (1..=self.history.len())
            .find(|&m| check_convergence(&self.history[..m], cfg.epsilon, cfg.k, cfg.n_min))
            .map(|m| m as u32)
    }

    /// Ingest the next iteration's sample: refit both trends, extend the
    /// peak history, and re-evaluate convergence. Samples must arrive in
    /// iteration order.
    pub fn step(&mut self, sample: IterationSample) -> Result<(), PredictorError> {
        let expected = self.samples_seen() + 1;
        if sample.iteration != expected {
            return Err(PredictorError::OutOfOrderSample { expected, got: sample.iteration });
        }
        let t = sample.iteration as f64;
        let discounted = sample
            .requested_bytes
            .saturating_sub(self.config.overheads.workspace_bytes);
        self.mem_series.push((t, discounted as f64));
        let inv_reuse = if sample.reuse_ratio > 0.0 {
            (1.0 / sample.reuse_ratio).max(1.0)
        } else {
            1.0
        };
        self.inv_series.push((t, inv_reuse));

        let mem_model = fit_linear(&self.mem_series);
        let inv_model = fit_linear(&self.inv_series);
        let peak = predict_peak(
            &mem_model,
            &inv_model,
            self.config.max_iter,
            self.config.z,
            self.config.overheads,
        );
        self.mem_model = Some(mem_model);
        self.inv_reuse_model = Some(inv_model);
        self.peak_prediction_bytes = peak;
        self.history.push(peak);
        self.converged = check_convergence(
            &self.history,
            self.config.epsilon,
            self.config.k,
            self.config.n_min,
        );
        Ok(())
    }
}
