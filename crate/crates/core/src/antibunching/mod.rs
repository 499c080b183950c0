//! Intensity correlations `P(τ)` and the antibunching test `P(τ) > P(0)`.
//!
//! Two independent sources of correlation series are provided. Quantum
//! emitters ([`emitter`]) are evolved under a Lindblad master equation and
//! `P(τ)` follows from the quantum regression rule. Classical stationary
//! intensity processes ([`classical`]) are sampled by Monte Carlo. For the
//! latter the Schwarz inequality forces `E[I(0)I(τ)] ≤ E[I(0)²]`, so
//! [`schwarz_violation_test`] must never fire on them.

pub mod classical;
pub mod emitter;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use classical::{simulate_classical_intensity, ClassicalProcessModel};
pub use emitter::{g2_correlation, lindblad_propagate, steady_state, EmitterKind, EmitterModel};

/// Detection threshold for deterministic series.
pub const DEFAULT_DETECTION_TOL: f64 = 1e-9;

/// Number of standard errors a Monte Carlo excess must clear.
pub const STDERR_MULTIPLIER: f64 = 3.0;

/// `P(τ)` sampled on a delay grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSeries {
    pub tau: Vec<f64>,
    /// Unnormalized `P(τ)`.
    pub p_raw: Vec<f64>,
    /// `P(τ) / ⟨I⟩²`, when the mean intensity is nonzero.
    pub g2: Option<Vec<f64>>,
    /// Standard error per point; Monte Carlo series only.
    pub stderr: Option<Vec<f64>>,
}

impl CorrelationSeries {
    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    pub fn p0(&self) -> f64 {
        self.p_raw[0]
    }
}

/// Checks that `tau` starts at zero and is strictly increasing.
pub fn validate_tau_grid(tau: &[f64]) -> Result<()> {
    match tau.first() {
        None => return Err(Error::InvalidArgument("empty delay grid".into())),
        Some(&t0) if t0 != 0.0 => {
            return Err(Error::InvalidArgument(format!(
                "delay grid must start at 0, starts at {t0}"
            )))
        }
        _ => {}
    }
    if let Some(w) = tau.windows(2).find(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "delay grid must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// `points` equally spaced delays on `[0, tau_max]`.
pub fn uniform_tau_grid(tau_max: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(tau_max > 0.0) || !tau_max.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "need tau_max > 0 and at least 2 points, got tau_max={tau_max}, points={points}"
        )));
    }
    let step = tau_max / (points - 1) as f64;
    Ok((0..points).map(|i| i as f64 * step).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntibunchingReport {
    pub antibunched: bool,
    /// Delay with the largest excess of `P(τ) − P(0)` over its threshold.
    pub witness_tau: Option<f64>,
    /// `P(τ) − P(0)` at `witness_tau`.
    pub margin: f64,
    /// Threshold the margin was compared against at `witness_tau`.
    pub tolerance: f64,
}

/// Looks for `τ > 0` with `P(τ) − P(0)` above `tol`, plus three standard
/// errors when the series carries them.
pub fn detect_antibunching(series: &CorrelationSeries, tol: f64) -> Result<AntibunchingReport> {
    validate_tau_grid(&series.tau)?;
    if series.p_raw.len() != series.tau.len() {
        return Err(Error::DimensionMismatch {
            expected: series.tau.len(),
            found: series.p_raw.len(),
        });
    }
    let p0 = series.p0();
    let threshold = |i: usize| {
        tol + series
            .stderr
            .as_ref()
            .map_or(0.0, |se| STDERR_MULTIPLIER * se[i])
    };
    // Earliest delay wins ties.
    let excess = |i: usize| series.p_raw[i] - p0 - threshold(i);
    let best = (1..series.len()).reduce(|b, i| if excess(i) > excess(b) { i } else { b });
    Ok(match best {
        None => AntibunchingReport {
            antibunched: false,
            witness_tau: None,
            margin: 0.0,
            tolerance: tol,
        },
        Some(i) => {
            let margin = series.p_raw[i] - p0;
            let tolerance = threshold(i);
            AntibunchingReport {
                antibunched: margin > tolerance,
                witness_tau: Some(series.tau[i]),
                margin,
                tolerance,
            }
        }
    })
}

/// True when the series breaks `P(τ) ≤ P(0)` somewhere beyond the
/// tolerance.
pub fn schwarz_violation_test(series: &CorrelationSeries, tol: f64) -> Result<bool> {
    Ok(detect_antibunching(series, tol)?.antibunched)
}
