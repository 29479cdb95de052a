//! Chain diagnostics and forecast scoring.

use crate::circular::{circular_distance, circular_summary, CircularSummary};
use crate::error::{Error, Result};

/// Minimum trace length accepted by [`ress`].
pub const MIN_TRACE: usize = 10;

fn autocovariance(centered: &[f64], lag: usize) -> f64 {
    let n = centered.len();
    centered[..n - lag]
        .iter()
        .zip(&centered[lag..])
        .map(|(a, b)| a * b)
        .sum::<f64>()
        / n as f64
}

/// Relative effective sample size `1 / (1 + 2 Σ_l ρ_l)`.
///
/// The autocorrelation sum is truncated with Geyer's initial positive
/// sequence: pairs `ρ_{2k} + ρ_{2k+1}` are accumulated while positive.
pub fn ress(trace: &[f64]) -> Result<f64> {
    let n = trace.len();
    if n < MIN_TRACE {
        return Err(Error::NotEnoughSamples {
            needed: MIN_TRACE,
            got: n,
        });
    }
    let mean = trace.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = trace.iter().map(|x| x - mean).collect();
    let var = autocovariance(&centered, 0);
    let scale = trace.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if !(var > (1e-12 * scale).powi(2)) {
        return Err(Error::ZeroVariance);
    }
    // τ = −1 + 2 Σ_k Γ_k with Γ_k = ρ_{2k} + ρ_{2k+1}, ρ_0 = 1.
    let mut tau = -1.0;
    let mut k = 0;
    while 2 * k + 1 < n {
        let gamma = (autocovariance(&centered, 2 * k) + autocovariance(&centered, 2 * k + 1)) / var;
        if gamma <= 0.0 {
            break;
        }
        tau += 2.0 * gamma;
        k += 1;
    }
    Ok(1.0 / tau)
}

/// RESS of an angular trace: the minimum over its cosine and sine components.
pub fn ress_circular(angles: &[f64]) -> Result<f64> {
    let cos: Vec<f64> = angles.iter().map(|a| a.cos()).collect();
    let sin: Vec<f64> = angles.iter().map(|a| a.sin()).collect();
    match (ress(&cos), ress(&sin)) {
        (Ok(a), Ok(b)) => Ok(a.min(b)),
        (Ok(a), Err(Error::ZeroVariance)) | (Err(Error::ZeroVariance), Ok(a)) => Ok(a),
        (Err(e), _) => Err(e),
        (_, Err(e)) => Err(e),
    }
}

/// Circular CRPS `E[d(θ, ξ)] − ½ E[d(θ, θ′)]` with `d(α, β) = 1 − cos(α − β)`.
///
/// The second expectation uses the disjoint pairs `(θ₀, θ₁), (θ₂, θ₃), …`.
pub fn circular_crps(predictive: &[f64], observation: f64) -> Result<f64> {
    let s = predictive.len();
    if s < 2 {
        return Err(Error::NotEnoughSamples { needed: 2, got: s });
    }
    let to_obs = predictive
        .iter()
        .map(|t| circular_distance(*t, observation))
        .sum::<f64>()
        / s as f64;
    let pairs = s / 2;
    let spread = predictive
        .chunks_exact(2)
        .map(|p| circular_distance(p[0], p[1]))
        .sum::<f64>()
        / pairs as f64;
    Ok(to_obs - 0.5 * spread)
}

/// Posterior predictive draws, one sequence per test location.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveSample {
    pub locations: Vec<Vec<f64>>,
}

impl PredictiveSample {
    /// Transposes row-major chain samples (one row per iteration).
    pub fn from_rows(rows: &[Vec<f64>], m: usize) -> Self {
        PredictiveSample {
            locations: (0..m).map(|i| rows.iter().map(|r| r[i]).collect()).collect(),
        }
    }
}

pub fn predictive_summary(samples: &PredictiveSample) -> Result<Vec<CircularSummary>> {
    samples.locations.iter().map(|s| circular_summary(s)).collect()
}

/// Per-location CRPS of a predictive sample against the true angles.
pub fn crps_per_location(samples: &PredictiveSample, truth: &[f64]) -> Result<Vec<f64>> {
    if samples.locations.len() != truth.len() {
        return Err(Error::Misaligned(format!(
            "{} predictive locations vs {} observations",
            samples.locations.len(),
            truth.len()
        )));
    }
    samples
        .locations
        .iter()
        .zip(truth)
        .map(|(s, t)| circular_crps(s, *t))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub ress: Vec<Option<f64>>,
    pub median_ress: Option<f64>,
    /// Acceptance rate per parameter block, when parameters were sampled.
    pub acceptance: Vec<(String, f64)>,
    pub summaries: Vec<CircularSummary>,
}

impl DiagnosticsReport {
    pub fn from_samples(rows: &[Vec<f64>], m: usize, acceptance: Vec<(String, f64)>) -> Result<Self> {
        let predictive = PredictiveSample::from_rows(rows, m);
        let summaries = predictive_summary(&predictive)?;
        let ress: Vec<Option<f64>> = predictive
            .locations
            .iter()
            .map(|t| ress_circular(t).ok())
            .collect();
        let mut flat: Vec<f64> = ress.iter().flatten().copied().collect();
        Ok(DiagnosticsReport {
            median_ress: median(&mut flat),
            ress,
            acceptance,
            summaries,
        })
    }
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

/// Mean and sample standard deviation; the deviation of a single value is 0.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, var.sqrt()))
}
