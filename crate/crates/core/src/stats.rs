//! Photon-number statistics: the K measure, Mandel Q and the sub-Poisson
//! predicate.
//!
//! `K = ⟨Δn²⟩ − ⟨n⟩` is computed two ways. [`k_measure`] works on the state
//! through the normally ordered form `⟨a*²a²⟩ − ⟨a*a⟩²`; for a pure state
//! that is `‖a²ψ‖² − ‖aψ‖⁴`. [`k_from_distribution`] works on the photon
//! number distribution alone. They agree because both reduce to the first two
//! factorial moments of `x_n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{annihilation, creation, DensityOperator, PhotonState, QuantumState, StateVector};

/// Default threshold for the strict inequality `K < 0`.
pub const DEFAULT_SUB_POISSON_TOL: f64 = 1e-10;

/// Weight allowed on the top two levels before K is refused.
pub const CONTAMINATION_LIMIT: f64 = 1e-10;

const SIMPLEX_TOL: f64 = 1e-12;

/// Nonnegative weights `x_n` over `n = 0..len`, summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PhotonNumberDistribution {
    weights: Vec<f64>,
}

impl PhotonNumberDistribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("empty distribution".into()));
        }
        if let Some(n) = weights.iter().position(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "weight x_{n} = {} is not a finite nonnegative number",
                weights[n]
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidArgument(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { weights })
    }

    /// Truncated Poisson weights with the given mean, renormalized.
    pub fn poisson(mean: f64, len: usize) -> Result<Self> {
        let mut w = Vec::with_capacity(len);
        let mut p = (-mean).exp();
        for n in 0..len {
            if n > 0 {
                p *= mean / n as f64;
            }
            w.push(p);
        }
        let total: f64 = w.iter().sum();
        Self::new(w.into_iter().map(|x| x / total).collect())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(n, x)| n * x).sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.iter().map(|(n, x)| (n - mean).powi(2) * x).sum()
    }

    /// `E[n(n−1)…(n−k+1)]`.
    pub fn factorial_moment(&self, k: usize) -> f64 {
        self.iter()
            .map(|(n, x)| (0..k).map(|j| n - j as f64).product::<f64>() * x)
            .sum()
    }

    fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.weights.iter().enumerate().map(|(n, &x)| (n as f64, x))
    }
}

impl TryFrom<Vec<f64>> for PhotonNumberDistribution {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PhotonNumberDistribution> for Vec<f64> {
    fn from(d: PhotonNumberDistribution) -> Self {
        d.weights
    }
}

/// `x_n = |c_n|²` for pure states, `ρ_nn` for mixed ones.
pub fn photon_distribution<S: QuantumState + ?Sized>(state: &S) -> PhotonNumberDistribution {
    let mut w = state.populations();
    // Rounding can leave diagonal entries at -1e-17.
    w.iter_mut().for_each(|x| *x = x.max(0.0));
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    PhotonNumberDistribution { weights: w }
}

/// Errors if more than [`CONTAMINATION_LIMIT`] of the population lives on
/// the top `levels` levels of the truncation.
pub(crate) fn guard_truncation<S: QuantumState + ?Sized>(state: &S, levels: usize) -> Result<()> {
    let pops = state.populations();
    let start = pops.len().saturating_sub(levels);
    let weight: f64 = pops[start..].iter().map(|p| p.abs()).sum();
    if weight >= CONTAMINATION_LIMIT {
        return Err(Error::TruncationContaminated { weight, levels });
    }
    Ok(())
}

/// States K and the moment witnesses can be evaluated on.
pub trait PhotonStatistics: QuantumState {
    /// `⟨a*ᵏaᵏ⟩` evaluated through the ladder operators, without any
    /// truncation guard.
    fn normal_ordered_moment(&self, k: u32) -> Result<f64>;
}

impl PhotonStatistics for StateVector {
    fn normal_ordered_moment(&self, k: u32) -> Result<f64> {
        let ak = annihilation(self.space()).pow(k);
        Ok(ak.apply(self.as_ket())?.norm_squared())
    }
}

impl PhotonStatistics for DensityOperator {
    fn normal_ordered_moment(&self, k: u32) -> Result<f64> {
        let space = self.space();
        let op = creation(space).pow(k).compose(&annihilation(space).pow(k))?;
        Ok(self.expectation(&op)?.re)
    }
}

impl PhotonStatistics for PhotonState {
    fn normal_ordered_moment(&self, k: u32) -> Result<f64> {
        match self {
            PhotonState::Pure(s) => s.normal_ordered_moment(k),
            PhotonState::Mixed(r) => r.normal_ordered_moment(k),
        }
    }
}

/// `K = ⟨a*²a²⟩ − ⟨a*a⟩²`, refusing states that reach the top two levels.
pub fn k_measure<S: PhotonStatistics + ?Sized>(state: &S) -> Result<f64> {
    guard_truncation(state, 2)?;
    let m1 = state.normal_ordered_moment(1)?;
    let m2 = state.normal_ordered_moment(2)?;
    Ok(m2 - m1 * m1)
}

/// `Σ n(n−1) x_n − (Σ n x_n)²`.
pub fn k_from_distribution(dist: &PhotonNumberDistribution) -> f64 {
    let mean = dist.mean();
    dist.factorial_moment(2) - mean * mean
}

/// `K / ⟨n⟩`.
pub fn mandel_q<S: PhotonStatistics + ?Sized>(state: &S) -> Result<f64> {
    let k = k_measure(state)?;
    let mean = state.normal_ordered_moment(1)?;
    if mean <= 0.0 {
        return Err(Error::UndefinedForVacuum);
    }
    Ok(k / mean)
}

/// Summary of a state's photon statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub mean: f64,
    pub variance: f64,
    pub k: f64,
    /// `None` for the vacuum.
    pub mandel_q: Option<f64>,
    pub sub_poisson: bool,
    pub tol: f64,
}

/// Full statistics report; `sub_poisson` is `K < −tol`.
pub fn stats_report<S: PhotonStatistics + ?Sized>(state: &S, tol: f64) -> Result<StatsReport> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be nonnegative, got {tol}"
        )));
    }
    let k = k_measure(state)?;
    let dist = photon_distribution(state);
    let mean = dist.mean();
    let mandel_q = match mandel_q(state) {
        Ok(q) => Some(q),
        Err(Error::UndefinedForVacuum) => None,
        Err(e) => return Err(e),
    };
    Ok(StatsReport {
        mean,
        variance: dist.variance(),
        k,
        mandel_q,
        sub_poisson: k < -tol,
        tol,
    })
}

/// The sub-Poisson predicate `K < −tol`.
pub fn is_sub_poisson<S: PhotonStatistics + ?Sized>(state: &S, tol: f64) -> Result<bool> {
    Ok(stats_report(state, tol)?.sub_poisson)
}
