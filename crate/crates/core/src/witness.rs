//! Classical hidden-variable witnesses for photon-number moments.
//!
//! If a state's normally ordered moments came from a classical complex
//! amplitude `α`, then with `s = |α|² ≥ 0` the factorial moments
//! `m_k = ⟨a*ᵏaᵏ⟩` would be the power moments `E[sᵏ]` of a probability
//! measure on `[0, ∞)`. Two independent tests of that hypothesis live here:
//!
//! * [`hankel_witness`]: the Stieltjes necessary conditions. The Hankel
//!   matrices `(m_{i+j})` and `(m_{i+j+1})` must be positive semidefinite.
//!   The 2×2 case of the first is the Cauchy–Bunyakovsky inequality
//!   `m₁² ≤ m₂`, i.e. `K ≥ 0`.
//! * [`fit_classical_measure`]: a constructive search for a discrete
//!   measure on a grid of `s` values that reproduces the moments, solved as a
//!   nonnegative least-squares problem with local grid refinement.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nnls::nnls;
use crate::stats::{guard_truncation, PhotonStatistics};

pub const DEFAULT_ORDER: usize = 4;
pub const DEFAULT_GRID_POINTS: usize = 2048;
pub const DEFAULT_PSD_TOL: f64 = 1e-10;
pub const DEFAULT_FIT_TOL: f64 = 1e-8;

/// Weight of the normalization row `Σw = 1` in the least-squares system.
const NORMALIZATION_WEIGHT: f64 = 1.0;

const POLISH_ITERATIONS: usize = 500;
const MOMENT_TOL: f64 = 1e-9;

/// Factorial moments `m_0 … m_{k_max}` with `m_0 = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MomentSequence {
    moments: Vec<f64>,
}

impl MomentSequence {
    pub fn new(moments: Vec<f64>) -> Result<Self> {
        if moments.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "need moments up to order at least 2, got {} values",
                moments.len()
            )));
        }
        if (moments[0] - 1.0).abs() > MOMENT_TOL {
            return Err(Error::InvalidArgument(format!(
                "m_0 must be 1, got {}",
                moments[0]
            )));
        }
        if let Some(k) = moments.iter().position(|&m| !m.is_finite() || m < -MOMENT_TOL) {
            return Err(Error::InvalidArgument(format!(
                "factorial moment m_{k} = {} must be finite and nonnegative",
                moments[k]
            )));
        }
        Ok(Self { moments })
    }

    pub fn order(&self) -> usize {
        self.moments.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.moments
    }

    pub fn get(&self, k: usize) -> f64 {
        self.moments[k]
    }
}

impl TryFrom<Vec<f64>> for MomentSequence {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<MomentSequence> for Vec<f64> {
    fn from(m: MomentSequence) -> Self {
        m.moments
    }
}

/// `m_k = ⟨a*ᵏaᵏ⟩` for `k = 0..=k_max`.
///
/// Refuses states with population on the top `k_max` levels, where `aᵏ`
/// would see the truncation edge.
pub fn factorial_moments<S: PhotonStatistics + ?Sized>(state: &S, k_max: usize) -> Result<MomentSequence> {
    if k_max < 2 {
        return Err(Error::InvalidArgument(format!(
            "moment order must be at least 2, got {k_max}"
        )));
    }
    guard_truncation(state, k_max)?;
    let moments = (0..=k_max)
        .map(|k| state.normal_ordered_moment(k as u32))
        .collect::<Result<Vec<_>>>()?;
    MomentSequence::new(moments)
}

/// Cauchy–Bunyakovsky margin `m₂ − m₁²`, equal to K.
pub fn cb_check(moments: &MomentSequence) -> f64 {
    moments.get(2) - moments.get(1).powi(2)
}

/// Stirling numbers of the second kind `S(k, j)` for `k, j ≤ order`.
pub fn stirling2(order: usize) -> Vec<Vec<f64>> {
    let mut s = vec![vec![0.0; order + 1]; order + 1];
    s[0][0] = 1.0;
    for k in 1..=order {
        for j in 1..=k {
            s[k][j] = j as f64 * s[k - 1][j] + s[k - 1][j - 1];
        }
    }
    s
}

/// Ordinary photon-number moments `E[nᵏ] = Σ_j S(k, j) m_j`.
pub fn power_moments(moments: &MomentSequence) -> Vec<f64> {
    let s = stirling2(moments.order());
    (0..=moments.order())
        .map(|k| (0..=k).map(|j| s[k][j] * moments.get(j)).sum())
        .collect()
}

/// Smallest eigenvalue of one leading Hankel block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HankelMinor {
    /// 0 for `(m_{i+j})`, 1 for `(m_{i+j+1})`.
    pub shift: usize,
    pub size: usize,
    pub min_eig: f64,
    /// The block's negative-eigenvalue threshold, `tol · (1 + trace)`.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub classical_feasible: bool,
    pub failing_minor: Option<HankelMinor>,
    pub cb_margin: f64,
    pub hankel_min_eigs: Vec<HankelMinor>,
    /// `E[nᵏ]` recovered from the factorial moments.
    pub power_moments: Vec<f64>,
    pub tol: f64,
}

fn hankel_block(moments: &MomentSequence, shift: usize, size: usize) -> DMatrix<f64> {
    DMatrix::from_fn(size, size, |i, j| moments.get(i + j + shift))
}

/// Stieltjes positivity test on the factorial moments.
///
/// Every leading block of both Hankel matrices that the available order
/// supports is checked; a block fails when its smallest eigenvalue is below
/// `−tol · (1 + trace)`. A negative CB margin beyond `tol` always fails.
pub fn hankel_witness(moments: &MomentSequence, tol: f64) -> WitnessReport {
    let order = moments.order();
    let mut minors = Vec::new();
    for shift in 0..=1 {
        if order < shift {
            continue;
        }
        let full = (order - shift) / 2 + 1;
        for size in 1..=full {
            let h = hankel_block(moments, shift, size);
            let trace = h.trace();
            let min_eig = h
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            minors.push(HankelMinor {
                shift,
                size,
                min_eig,
                threshold: -tol * (1.0 + trace.abs()),
            });
        }
    }
    let cb_margin = cb_check(moments);
    let failing_minor = minors.iter().find(|m| m.min_eig < m.threshold).cloned();
    WitnessReport {
        classical_feasible: failing_minor.is_none() && cb_margin >= -tol,
        failing_minor,
        cb_margin,
        hankel_min_eigs: minors,
        power_moments: power_moments(moments),
        tol,
    }
}

/// Candidate support for the fitted measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub points: usize,
    /// Upper end of the grid; `None` means `8 · (m₁ + 1)`.
    pub s_max: Option<f64>,
    /// Maximum rounds of local refinement around the fitted atoms.
    pub refine_rounds: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points: DEFAULT_GRID_POINTS,
            s_max: None,
            refine_rounds: 48,
        }
    }
}

impl GridSpec {
    pub fn with_points(points: usize) -> Self {
        Self {
            points,
            ..Self::default()
        }
    }
}

/// A discrete measure on `s = |α|²` fitted to factorial moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureFitResult {
    pub grid: Vec<f64>,
    pub weights: Vec<f64>,
    /// Norm of the moment mismatch, each order scaled by `1 / max(1, m_k)`.
    pub residual: f64,
    pub feasible: bool,
    pub refinements: usize,
}

impl MeasureFitResult {
    /// Grid points carrying positive weight.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        self.grid
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(&s, &w)| (s, w))
            .collect()
    }

    /// `Σ w sᵏ` for `k = 0..=order`.
    pub fn reproduced_moments(&self, order: usize) -> Vec<f64> {
        (0..=order)
            .map(|k| {
                self.grid
                    .iter()
                    .zip(&self.weights)
                    .map(|(s, w)| w * s.powi(k as i32))
                    .sum()
            })
            .collect()
    }
}

struct ScaledProblem {
    scale: Vec<f64>,
    target: Vec<f64>,
}

impl ScaledProblem {
    fn new(moments: &MomentSequence) -> Self {
        let scale: Vec<f64> = moments.values().iter().map(|m| 1.0 / m.max(1.0)).collect();
        let target = moments
            .values()
            .iter()
            .zip(&scale)
            .map(|(m, c)| m * c)
            .collect();
        Self { scale, target }
    }

    fn row_weight(k: usize) -> f64 {
        if k == 0 {
            NORMALIZATION_WEIGHT
        } else {
            1.0
        }
    }

    fn solve(&self, grid: &[f64]) -> (Vec<f64>, f64) {
        let rows = self.scale.len();
        let a = DMatrix::from_fn(rows, grid.len(), |k, j| {
            Self::row_weight(k) * self.scale[k] * grid[j].powi(k as i32)
        });
        let b = DVector::from_fn(rows, |k, _| Self::row_weight(k) * self.target[k]);
        let sol = nnls(&a, &b);
        let weights: Vec<f64> = sol.x.iter().copied().collect();
        (weights.clone(), self.residual(grid, &weights))
    }

    /// Row-weighted residual vector and its Jacobian with respect to
    /// `(u_1..u_m, s_1..s_m)`, where each atom has weight `u²` at `s`.
    fn weighted_system(&self, u: &[f64], s: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let (rows, m) = (self.scale.len(), u.len());
        let mut r = DVector::zeros(rows);
        let mut jac = DMatrix::zeros(rows, 2 * m);
        for k in 0..rows {
            let c = Self::row_weight(k) * self.scale[k];
            let mut fitted = 0.0;
            for i in 0..m {
                let sk = s[i].powi(k as i32);
                fitted += u[i] * u[i] * sk;
                jac[(k, i)] = c * 2.0 * u[i] * sk;
                if k > 0 {
                    jac[(k, m + i)] = c * u[i] * u[i] * k as f64 * s[i].powi(k as i32 - 1);
                }
            }
            r[k] = c * fitted - Self::row_weight(k) * self.target[k];
        }
        (r, jac)
    }

    /// Levenberg–Marquardt on atom positions and weights, starting from
    /// the grid solution. Positions stay in `[0, ∞)` and weights stay
    /// nonnegative, so the result is still a valid measure.
    fn polish(&self, atoms: &[(f64, f64)]) -> Vec<(f64, f64)> {
        let m = atoms.len();
        let mut u: Vec<f64> = atoms.iter().map(|a| a.1.sqrt()).collect();
        let mut s: Vec<f64> = atoms.iter().map(|a| a.0).collect();
        let (mut r, mut jac) = self.weighted_system(&u, &s);
        let mut cost = r.norm_squared();
        let mut lambda: Option<f64> = None;
        for _ in 0..POLISH_ITERATIONS {
            if cost == 0.0 {
                break;
            }
            // Levenberg step from the SVD of J; the normal equations would
            // square an already large condition number.
            let svd = jac.clone().svd(true, true);
            let (Some(left), Some(right_t)) = (svd.u.as_ref(), svd.v_t.as_ref()) else {
                break;
            };
            let sigma = &svd.singular_values;
            let damping = *lambda.get_or_insert(1e-3 * sigma.max().powi(2));
            let projected = left.tr_mul(&r);
            let mut step = DVector::zeros(2 * m);
            for (i, &sv) in sigma.iter().enumerate() {
                if sv > 0.0 {
                    step -= right_t.row(i).transpose() * (sv / (sv * sv + damping) * projected[i]);
                }
            }
            let trial_u: Vec<f64> = (0..m).map(|i| u[i] + step[i]).collect();
            let trial_s: Vec<f64> = (0..m).map(|i| (s[i] + step[m + i]).max(0.0)).collect();
            let (tr, tj) = self.weighted_system(&trial_u, &trial_s);
            let trial_cost = tr.norm_squared();
            if trial_cost < cost {
                (u, s, r, jac, cost) = (trial_u, trial_s, tr, tj, trial_cost);
                lambda = Some(damping / 10.0);
            } else {
                if damping > 1e12 * sigma.max().powi(2) || step.norm() == 0.0 {
                    break;
                }
                lambda = Some((damping * 10.0).max(f64::MIN_POSITIVE));
            }
        }
        s.into_iter().zip(u.into_iter().map(|v| v * v)).collect()
    }

    fn residual(&self, grid: &[f64], weights: &[f64]) -> f64 {
        self.scale
            .iter()
            .zip(&self.target)
            .enumerate()
            .map(|(k, (c, t))| {
                let fitted: f64 = grid
                    .iter()
                    .zip(weights)
                    .map(|(s, w)| w * s.powi(k as i32))
                    .sum();
                (c * fitted - t).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Nodes of the `n`-point Gaussian quadrature rule for the moment
/// sequence `m`, one node set per `n` with `2n − 1` no larger than the
/// order.
///
/// The nodes are the roots of the monic polynomial orthogonal to all lower
/// powers, whose coefficients solve a Hankel system. Rules whose system is
/// singular or whose roots are not real and nonnegative are skipped.
fn gauss_rules(m: &[f64]) -> Vec<Vec<f64>> {
    let mut rules = Vec::new();
    for n in 1..=m.len() / 2 {
        let hankel = DMatrix::from_fn(n, n, |i, j| m[i + j]);
        let rhs = DVector::from_fn(n, |i, _| -m[n + i]);
        let Some(coeffs) = hankel.lu().solve(&rhs) else {
            continue;
        };
        // Companion matrix of s^n + c_{n−1} s^{n−1} + … + c_0.
        let companion = DMatrix::from_fn(n, n, |i, j| {
            if j == n - 1 {
                -coeffs[i]
            } else if i == j + 1 {
                1.0
            } else {
                0.0
            }
        });
        let roots = companion.complex_eigenvalues();
        let scale = roots.iter().map(|z| z.norm()).fold(1.0, f64::max);
        if roots
            .iter()
            .all(|z| z.im.abs() <= 1e-9 * scale && z.re >= -1e-9 * scale && z.re.is_finite())
        {
            rules.push(roots.iter().map(|z| z.re.max(0.0)).collect());
        }
    }
    rules
}

/// Candidate atom sets from the moments themselves: Gaussian quadrature
/// nodes of `μ` (exact on the boundary of the moment cone) and those of
/// `s·μ` together with `s = 0` (the representation with an atom at the
/// origin, exact in the interior).
fn quadrature_node_sets(moments: &MomentSequence) -> Vec<Vec<f64>> {
    let m = moments.values();
    let mut sets = gauss_rules(m);
    sets.extend(gauss_rules(&m[1..]).into_iter().map(|mut nodes| {
        nodes.push(0.0);
        nodes
    }));
    for nodes in &mut sets {
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
    }
    sets
}

/// Largest atom count for which every contiguous merge is tried.
const MAX_MERGE_ATOMS: usize = 12;

/// Starting points for the continuous polish: the atoms themselves and,
/// for small atom counts, every way of merging runs of neighbouring atoms
/// into one (keeping their total mass and mean). Grid fits tend to smear
/// one true atom over several neighbours, which a local method struggles
/// to undo.
fn merge_candidates(atoms: &[(f64, f64)]) -> Vec<Vec<(f64, f64)>> {
    let n = atoms.len();
    if !(2..=MAX_MERGE_ATOMS).contains(&n) {
        return vec![atoms.to_vec()];
    }
    // Bit i of `cuts` set: a new group starts after atom i.
    (0..1u32 << (n - 1))
        .map(|cuts| {
            let mut groups: Vec<(f64, f64)> = Vec::new();
            let (mut mass, mut first_moment) = (0.0, 0.0);
            for (i, &(s, w)) in atoms.iter().enumerate() {
                mass += w;
                first_moment += w * s;
                if i == n - 1 || cuts & (1 << i) != 0 {
                    groups.push((first_moment / mass, mass));
                    (mass, first_moment) = (0.0, 0.0);
                }
            }
            groups
        })
        .collect()
}

/// Searches for a nonnegative measure on `s ≥ 0` whose power moments
/// match `moments`.
///
/// First tries the nodes of the Gaussian quadrature rules the moments
/// define, which usually carry an exact finite representation. Otherwise starts from a uniform grid on `[0, s_max]` plus
/// those nodes and, while the residual is above `tol`, adds points around
/// each fitted atom at halving spacing.
/// Refinement stops once the fit is within `tol`, after `refine_rounds`
/// rounds, or when it stops improving the residual. If the fit is still
/// above `tol`, the atoms' positions and weights are then adjusted
/// continuously (Levenberg–Marquardt), starting from the grid atoms and
/// from merges of neighbouring atoms, to remove the grid discretization
/// error. Every candidate is a genuine nonnegative measure, so a small
/// residual is always a valid certificate of classical feasibility.
pub fn fit_classical_measure(
    moments: &MomentSequence,
    grid_spec: &GridSpec,
    tol: f64,
) -> Result<MeasureFitResult> {
    if grid_spec.points == 0 {
        return Err(Error::EmptyGrid);
    }
    let s_max = grid_spec.s_max.unwrap_or(8.0 * (moments.get(1) + 1.0));
    if !(s_max > 0.0) || !s_max.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "grid upper end must be positive, got {s_max}"
        )));
    }
    let mut grid: Vec<f64> = if grid_spec.points == 1 {
        vec![0.0]
    } else {
        let step = s_max / (grid_spec.points - 1) as f64;
        (0..grid_spec.points).map(|j| j as f64 * step).collect()
    };
    let mut spacing = if grid_spec.points > 1 {
        s_max / (grid_spec.points - 1) as f64
    } else {
        s_max
    };

    let problem = ScaledProblem::new(moments);

    // Quadrature nodes give exact atoms wherever the moments have a finite
    // representation, which a uniform grid can only approximate. On their
    // own they make a small, well-conditioned problem.
    let mut node_atoms = Vec::new();
    let best_rule = quadrature_node_sets(moments)
        .into_iter()
        .map(|nodes| {
            let (w, r) = problem.solve(&nodes);
            (nodes, w, r)
        })
        .min_by(|a, b| a.2.total_cmp(&b.2));
    if let Some((nodes, node_weights, node_residual)) = best_rule {
        if node_residual < tol {
            return Ok(MeasureFitResult {
                grid: nodes,
                weights: node_weights,
                residual: node_residual,
                feasible: true,
                refinements: 0,
            });
        }
        node_atoms = nodes
            .iter()
            .zip(&node_weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(&s, &w)| (s, w))
            .collect();
        grid.extend(nodes.iter().filter(|&&x| x <= s_max));
        grid.sort_by(f64::total_cmp);
        grid.dedup();
    }

    let (mut weights, mut residual) = problem.solve(&grid);
    let mut best_history = vec![residual];
    let mut rounds = 0;

    while residual >= tol && rounds < grid_spec.refine_rounds {
        rounds += 1;
        spacing /= 2.0;
        let atoms: Vec<f64> = grid
            .iter()
            .zip(&weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(&s, _)| s)
            .collect();
        for s in atoms {
            for offset in [-1.0, -0.5, 0.5, 1.0] {
                let candidate = s + offset * spacing;
                if (0.0..=s_max).contains(&candidate) {
                    grid.push(candidate);
                }
            }
        }
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        (weights, residual) = problem.solve(&grid);
        best_history.push(residual);

        // Infeasible targets plateau; stop once five rounds gain < 1%.
        if best_history.len() > 5 {
            let old = best_history[best_history.len() - 6];
            if residual > 0.99 * old {
                break;
            }
        }
    }

    if residual >= tol {
        let atoms: Vec<(f64, f64)> = grid
            .iter()
            .zip(&weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(&s, &w)| (s, w))
            .collect();
        let mut starts = merge_candidates(&atoms);
        if !node_atoms.is_empty() {
            starts.push(node_atoms);
        }
        let (atom_s, atom_w, polished_residual) = starts
            .into_iter()
            .map(|start| {
                let (s, w): (Vec<f64>, Vec<f64>) = problem.polish(&start).into_iter().unzip();
                let r = problem.residual(&s, &w);
                (s, w, r)
            })
            .min_by(|a, b| a.2.total_cmp(&b.2))
            .expect("at least one candidate");
        if polished_residual < residual {
            // Replace the grid atoms by their polished positions.
            let mut pairs: Vec<(f64, f64)> = grid
                .iter()
                .zip(&weights)
                .filter(|(_, &w)| w <= 0.0)
                .map(|(&s, &w)| (s, w))
                .chain(atom_s.into_iter().zip(atom_w))
                .collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            (grid, weights) = pairs.into_iter().unzip();
            residual = polished_residual;
        }
    }

    Ok(MeasureFitResult {
        grid,
        weights,
        residual,
        feasible: residual < tol,
        refinements: rounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, fock_state, make_space, thermal_state, C64};
    use crate::stats::k_measure;

    #[test]
    fn fock_moments_are_falling_factorials() {
        let s = make_space(12).unwrap();
        let one = factorial_moments(&fock_state(s, 1).unwrap(), 2).unwrap();
        assert_eq!(one.values(), &[1.0, 1.0, 0.0]);
        let three = factorial_moments(&fock_state(s, 3).unwrap(), 3).unwrap();
        for (got, want) in three.values().iter().zip([1.0, 3.0, 6.0, 6.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn coherent_moments_are_powers() {
        let s = make_space(48).unwrap();
        let alpha = C64::new(1.2, -0.7);
        let m = factorial_moments(&coherent_state(s, alpha, 1e-12).unwrap(), 3).unwrap();
        for k in 0..=3 {
            assert!((m.get(k) - alpha.norm_sqr().powi(k as i32)).abs() < 1e-8);
        }
    }

    #[test]
    fn moment_order_and_guard() {
        let s = make_space(6).unwrap();
        let psi = fock_state(s, 1).unwrap();
        assert!(matches!(factorial_moments(&psi, 1), Err(Error::InvalidArgument(_))));
        assert!(matches!(
            factorial_moments(&fock_state(s, 3).unwrap(), 4),
            Err(Error::TruncationContaminated { .. })
        ));
    }

    #[test]
    fn moment_sequence_validation() {
        assert!(MomentSequence::new(vec![1.0, 2.0]).is_err());
        assert!(MomentSequence::new(vec![0.5, 2.0, 3.0]).is_err());
        assert!(MomentSequence::new(vec![1.0, -2.0, 3.0]).is_err());
        assert!(MomentSequence::new(vec![1.0, 2.0, 3.0]).is_ok());
    }

    #[test]
    fn cb_margin_examples() {
        for n in 1..6 {
            let s = make_space(n + 6).unwrap();
            let m = factorial_moments(&fock_state(s, n).unwrap(), 4).unwrap();
            assert!((cb_check(&m) + n as f64).abs() < 1e-12);
        }
        let s = make_space(64).unwrap();
        let coh = coherent_state(s, C64::new(1.5, 0.0), 1e-12).unwrap();
        assert!(cb_check(&factorial_moments(&coh, 4).unwrap()).abs() < 1e-8);
        let th = thermal_state(s, 1.0, 1e-12).unwrap();
        assert!((cb_check(&factorial_moments(&th, 4).unwrap()) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn stirling_table() {
        let s = stirling2(5);
        assert_eq!(s[4], vec![0.0, 1.0, 7.0, 6.0, 1.0, 0.0]);
        assert_eq!(s[5], vec![0.0, 1.0, 15.0, 25.0, 10.0, 1.0]);
    }

    #[test]
    fn power_moments_of_fock_state() {
        let s = make_space(12).unwrap();
        let m = factorial_moments(&fock_state(s, 3).unwrap(), 4).unwrap();
        let mu = power_moments(&m);
        for (k, v) in mu.iter().enumerate() {
            assert!((v - 3f64.powi(k as i32)).abs() < 1e-10);
        }
    }

    #[test]
    fn hankel_rejects_single_photon() {
        let s = make_space(8).unwrap();
        let m = factorial_moments(&fock_state(s, 1).unwrap(), 4).unwrap();
        let r = hankel_witness(&m, DEFAULT_PSD_TOL);
        assert!(!r.classical_feasible);
        let failing = r.failing_minor.unwrap();
        assert_eq!((failing.shift, failing.size), (0, 2));
        // [[1, 1], [1, 0]] has eigenvalues (1 ± √5)/2.
        assert!((failing.min_eig - (1.0 - 5f64.sqrt()) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn hankel_accepts_classical_references() {
        let s = make_space(64).unwrap();
        let coh = coherent_state(s, C64::new(2.0, 0.0), 1e-12).unwrap();
        let r = hankel_witness(&factorial_moments(&coh, 4).unwrap(), DEFAULT_PSD_TOL);
        assert!(r.classical_feasible, "{r:?}");
        let th = thermal_state(s, 1.0, 1e-12).unwrap();
        let r = hankel_witness(&factorial_moments(&th, 4).unwrap(), DEFAULT_PSD_TOL);
        assert!(r.classical_feasible, "{r:?}");
    }

    #[test]
    fn negative_cb_margin_always_infeasible() {
        // A 2x2 block whose smallest eigenvalue sits inside the relative
        // tolerance while m2 - m1^2 does not.
        let m = MomentSequence::new(vec![1.0, 1.0, 1.0 - 1e-9]).unwrap();
        let r = hankel_witness(&m, 1e-10);
        assert!(r.cb_margin < -1e-10);
        assert!(!r.classical_feasible);
    }

    #[test]
    fn fit_point_mass() {
        let s = make_space(40).unwrap();
        let coh = coherent_state(s, C64::new(1.0, 0.0), 1e-12).unwrap();
        let m = factorial_moments(&coh, 4).unwrap();
        let fit = fit_classical_measure(&m, &GridSpec::default(), DEFAULT_FIT_TOL).unwrap();
        assert!(fit.feasible, "residual {}", fit.residual);
        assert!(fit.residual < 1e-8);
        let mass_near_one: f64 = fit
            .atoms()
            .iter()
            .filter(|(s, _)| (s - 1.0).abs() < 1e-3)
            .map(|(_, w)| w)
            .sum();
        assert!(mass_near_one > 1.0 - 1e-6);
    }

    /// Lower bound on the scaled residual of any nonnegative measure, from
    /// a polynomial `p(s) = Σ p_k sᵏ` that is nonpositive on `s ≥ 0`.
    fn dual_bound(moments: &MomentSequence, poly: &[f64]) -> f64 {
        let expect: f64 = poly.iter().zip(moments.values()).map(|(p, m)| p * m).sum();
        let y_norm: f64 = poly
            .iter()
            .zip(moments.values())
            .map(|(p, m)| (p * m.max(1.0)).powi(2))
            .sum::<f64>()
            .sqrt();
        expect / y_norm
    }

    #[test]
    fn fit_rejects_two_photon_state() {
        let m = MomentSequence::new(vec![1.0, 2.0, 2.0, 0.0]).unwrap();
        // p(s) = −s(s − 1)² ≤ 0 on [0, ∞) and E[p] = −m1 + 2m2 − m3 = 2.
        let bound = dual_bound(&m, &[0.0, -1.0, 2.0, -1.0]);
        assert!((bound - 2.0 / 21f64.sqrt()).abs() < 1e-12);
        let fit = fit_classical_measure(&m, &GridSpec::default(), DEFAULT_FIT_TOL).unwrap();
        assert!(!fit.feasible);
        assert!(fit.residual >= bound - 1e-12, "{} < {bound}", fit.residual);
    }

    #[test]
    fn fit_thermal_reproduces_exponential_moments() {
        let s = make_space(64).unwrap();
        let th = thermal_state(s, 0.5, 1e-12).unwrap();
        let m = factorial_moments(&th, 4).unwrap();
        let fit = fit_classical_measure(&m, &GridSpec::default(), DEFAULT_FIT_TOL).unwrap();
        assert!(fit.feasible, "residual {}", fit.residual);
        assert!(fit.weights.iter().all(|&w| w >= 0.0));
        // Exponential law with mean 1/2: E[s^k] = k! / 2^k.
        let want = [1.0, 0.5, 0.5, 0.75, 1.5];
        for (got, want) in fit.reproduced_moments(4).iter().zip(want) {
            assert!((got - want).abs() < 1e-8 * want.max(1.0), "{got} vs {want}");
        }
    }

    #[test]
    fn fit_empty_grid() {
        let m = MomentSequence::new(vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(
            fit_classical_measure(&m, &GridSpec::with_points(0), 1e-8),
            Err(Error::EmptyGrid)
        );
    }

    #[test]
    fn sub_poisson_states_fail_both_witnesses() {
        let s = make_space(16).unwrap();
        for n in 1..=6 {
            let psi = fock_state(s, n).unwrap();
            assert!(k_measure(&psi).unwrap() < 0.0);
            let m = factorial_moments(&psi, 4).unwrap();
            assert!(!hankel_witness(&m, DEFAULT_PSD_TOL).classical_feasible);
            let fit = fit_classical_measure(&m, &GridSpec::default(), DEFAULT_FIT_TOL).unwrap();
            assert!(!fit.feasible);
        }
    }
}
