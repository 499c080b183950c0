//! K as a function of the photon-number distribution.
//!
//! On a support set `{n_1 < … < n_m}` with weights `x` on the probability
//! simplex,
//!
//! ```text
//! K(x) = Σ n(n−1) x_n − (Σ n x_n)²
//! ```
//!
//! is a linear function minus the square of a linear function, hence
//! concave. A concave function attains its minimum over a simplex at a
//! vertex, so [`min_k_vertex`] is exact: the minimum is `−max(support)`,
//! reached by the Fock state with the most photons. [`scan_k`] and
//! [`projected_gradient_min`] are independent numerical cross-checks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::PhotonNumberDistribution;

const SIMPLEX_TOL: f64 = 1e-12;

/// Distinct occupation numbers, kept in increasing order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct SupportSet {
    indices: Vec<usize>,
}

impl SupportSet {
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidArgument("support set is empty".into()));
        }
        indices.sort_unstable();
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(format!(
                "duplicate occupation number {} in support",
                w[0]
            )));
        }
        Ok(Self { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn max(&self) -> usize {
        *self.indices.last().expect("support is nonempty")
    }

    /// The barycenter of the simplex over this support.
    pub fn uniform(&self) -> Vec<f64> {
        vec![1.0 / self.len() as f64; self.len()]
    }

    /// Embeds weights on the support into a full distribution over
    /// `0..=max`.
    pub fn to_distribution(&self, x: &[f64]) -> Result<PhotonNumberDistribution> {
        check_simplex(self, x)?;
        let mut w = vec![0.0; self.max() + 1];
        for (&n, &xn) in self.indices.iter().zip(x) {
            w[n] = xn;
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        PhotonNumberDistribution::new(w)
    }
}

impl TryFrom<Vec<usize>> for SupportSet {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SupportSet> for Vec<usize> {
    fn from(s: SupportSet) -> Self {
        s.indices
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Vertex,
    Grid,
    ProjectedGradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeResult {
    pub min_k: f64,
    pub support: SupportSet,
    /// Minimizing weights, aligned with `support`.
    pub argmin: Vec<f64>,
    pub method: Method,
    /// K evaluations (vertex, grid) or iterations (projected gradient).
    pub evaluations: usize,
}

fn check_simplex(support: &SupportSet, x: &[f64]) -> Result<()> {
    if x.len() != support.len() {
        return Err(Error::OffSimplex(format!(
            "{} weights for a support of size {}",
            x.len(),
            support.len()
        )));
    }
    if let Some(v) = x.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::OffSimplex(format!("negative or non-finite weight {v}")));
    }
    let total: f64 = x.iter().sum();
    if (total - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::OffSimplex(format!("weights sum to {total}")));
    }
    Ok(())
}

fn k_unchecked(support: &SupportSet, x: &[f64]) -> f64 {
    let (mut falling, mut mean) = (0.0, 0.0);
    for (&n, &xn) in support.indices.iter().zip(x) {
        let n = n as f64;
        falling += n * (n - 1.0) * xn;
        mean += n * xn;
    }
    falling - mean * mean
}

/// `K(x)` for weights `x` on `support`.
pub fn k_of(support: &SupportSet, x: &[f64]) -> Result<f64> {
    check_simplex(support, x)?;
    Ok(k_unchecked(support, x))
}

/// Exact minimum by evaluating K at every vertex. Ties go to the lower
/// occupation number.
pub fn min_k_vertex(support: &SupportSet) -> LandscapeResult {
    let m = support.len();
    let mut best = (f64::INFINITY, 0);
    for v in 0..m {
        let mut x = vec![0.0; m];
        x[v] = 1.0;
        let k = k_unchecked(support, &x);
        if k < best.0 {
            best = (k, v);
        }
    }
    let mut argmin = vec![0.0; m];
    argmin[best.1] = 1.0;
    LandscapeResult {
        min_k: best.0,
        support: support.clone(),
        argmin,
        method: Method::Vertex,
        evaluations: m,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub x: Vec<f64>,
    pub k: f64,
}

/// K on a barycentric grid with `resolution` points per edge.
///
/// Two-point supports are scanned along the segment with the second weight
/// increasing from 0 to 1; three-point supports over the triangle.
pub fn scan_k(support: &SupportSet, resolution: usize) -> Result<Vec<ScanPoint>> {
    if resolution < 2 {
        return Err(Error::InvalidArgument(format!(
            "resolution must be at least 2, got {resolution}"
        )));
    }
    let r = (resolution - 1) as f64;
    match support.len() {
        2 => Ok((0..resolution)
            .into_par_iter()
            .map(|i| {
                let x1 = i as f64 / r;
                let x = vec![1.0 - x1, x1];
                let k = k_unchecked(support, &x);
                ScanPoint { x, k }
            })
            .collect()),
        3 => Ok((0..resolution)
            .into_par_iter()
            .flat_map_iter(|i| {
                (0..resolution - i).map(move |j| {
                    let (x1, x2) = (i as f64 / r, j as f64 / r);
                    let x = vec![(1.0 - x1 - x2).max(0.0), x1, x2];
                    let k = k_unchecked(support, &x);
                    ScanPoint { x, k }
                })
            })
            .collect()),
        m => Err(Error::UnsupportedDimension(format!(
            "grid scans support 2 or 3 occupation numbers, got {m}"
        ))),
    }
}

/// Smallest K found by [`scan_k`].
pub fn min_k_grid(support: &SupportSet, resolution: usize) -> Result<LandscapeResult> {
    let scan = scan_k(support, resolution)?;
    let evaluations = scan.len();
    let best = scan
        .into_iter()
        .min_by(|a, b| a.k.total_cmp(&b.k))
        .expect("scan is nonempty");
    Ok(LandscapeResult {
        min_k: best.k,
        support: support.clone(),
        argmin: best.x,
        method: Method::Grid,
        evaluations,
    })
}

/// Euclidean projection onto the probability simplex (sort and threshold).
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = v.to_vec();
    // Stable sort: equal entries keep index order.
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&u| (u - theta).max(0.0)).collect()
}

/// Step control for [`projected_gradient_min`]: a fixed step, halved
/// whenever it fails to decrease K.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRule {
    pub initial: f64,
    /// Below this the iterate is declared stationary.
    pub min_step: f64,
}

impl Default for StepRule {
    fn default() -> Self {
        Self {
            initial: 0.05,
            min_step: 1e-14,
        }
    }
}

pub const DEFAULT_MAX_ITER: usize = 10_000;

fn gradient(support: &SupportSet, x: &[f64]) -> Vec<f64> {
    let mean: f64 = support.indices.iter().zip(x).map(|(&n, xn)| n as f64 * xn).sum();
    support
        .indices
        .iter()
        .map(|&n| {
            let n = n as f64;
            n * (n - 1.0) - 2.0 * n * mean
        })
        .collect()
}

/// Projected-gradient descent on K from `init`.
pub fn projected_gradient_min(
    support: &SupportSet,
    init: &[f64],
    max_iter: usize,
    step_rule: StepRule,
) -> Result<LandscapeResult> {
    check_simplex(support, init)?;
    if !(step_rule.initial > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "step must be positive, got {}",
            step_rule.initial
        )));
    }
    let mut x = init.to_vec();
    let mut k = k_unchecked(support, &x);
    let mut step = step_rule.initial;
    let done = |x: Vec<f64>, k: f64, iterations: usize| LandscapeResult {
        min_k: k,
        support: support.clone(),
        argmin: x,
        method: Method::ProjectedGradient,
        evaluations: iterations,
    };
    if support.len() == 1 {
        return Ok(done(x, k, 0));
    }
    for iter in 0..max_iter {
        let g = gradient(support, &x);
        let trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - step * gi).collect();
        let y = project_to_simplex(&trial);
        let moved = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if moved <= f64::EPSILON {
            return Ok(done(x, k, iter));
        }
        let ky = k_unchecked(support, &y);
        if ky < k {
            x = y;
            k = ky;
        } else {
            step /= 2.0;
            if step < step_rule.min_step {
                return Ok(done(x, k, iter + 1));
            }
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
    })
}
