//! Driven, damped quantum emitters and their stationary correlations.
//!
//! The master equation, in the frame rotating at the drive frequency, is
//!
//! ```text
//! dρ/dt = −i[H, ρ] + Γ (S ρ S† − ½{S†S, ρ}),   H = (Ω_R / 2)(S + S†)
//! ```
//!
//! where `S` is the source operator: `σ⁻` for a two-level emitter, `a` for a
//! damped cavity. The field operators `E⁺`, `E⁻` are taken proportional to
//! `S`, `S†`; the constant prefactor cancels in `g²`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{validate_tau_grid, CorrelationSeries};
use crate::error::{Error, Result};
use crate::fock::{annihilation, make_space, DensityOperator, FockSpace, Operator, C64};

/// Upper bound on RK4 steps for a single propagation.
pub const MAX_STEPS: u64 = 50_000_000;

/// Base RK4 step in units of `1/Γ`.
const STEP_PER_GAMMA: f64 = 0.01;

/// Relative singular-value threshold for a second stationary state.
const NULL_SPACE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmitterKind {
    TwoLevelDriven,
    DampedCavity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmitterModel {
    kind: EmitterKind,
    space: FockSpace,
    omega_r: f64,
    gamma: f64,
    source: Operator,
    hamiltonian: Operator,
}

impl EmitterModel {
    /// A resonantly driven two-level emitter (`|g⟩ = 0`, `|e⟩ = 1`).
    pub fn two_level(omega_r: f64, gamma: f64) -> Result<Self> {
        Self::build(EmitterKind::TwoLevelDriven, 2, omega_r, gamma)
    }

    /// A coherently driven cavity mode truncated at `dim` levels.
    pub fn damped_cavity(dim: usize, omega_r: f64, gamma: f64) -> Result<Self> {
        Self::build(EmitterKind::DampedCavity, dim, omega_r, gamma)
    }

    fn build(kind: EmitterKind, dim: usize, omega_r: f64, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "decay rate must be positive, got {gamma}"
            )));
        }
        if !omega_r.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "drive strength must be finite, got {omega_r}"
            )));
        }
        let space = make_space(dim)?;
        let source = annihilation(space);
        let drive = (source.matrix() + source.matrix().adjoint()).scale(omega_r / 2.0);
        let hamiltonian = Operator::from_matrix(space, drive)?;
        Ok(Self {
            kind,
            space,
            omega_r,
            gamma,
            source,
            hamiltonian,
        })
    }

    pub fn kind(&self) -> EmitterKind {
        self.kind
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn omega_r(&self) -> f64 {
        self.omega_r
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// The operator standing in for `E⁺`.
    pub fn source(&self) -> &Operator {
        &self.source
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.hamiltonian
    }

    /// Default RK4 step, `0.01 / Γ`.
    pub fn base_step(&self) -> f64 {
        STEP_PER_GAMMA / self.gamma
    }

    /// Right-hand side of the master equation applied to any operator `x`.
    pub fn apply_generator(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        let h = self.hamiltonian.matrix();
        let s = self.source.matrix();
        let sd = s.adjoint();
        let sds = &sd * s;
        let i = C64::new(0.0, 1.0);
        let coherent = (h * x - x * h) * (-i);
        let jump = s * x * &sd;
        let anti = (&sds * x + x * &sds).scale(0.5);
        coherent + (jump - anti).scale(self.gamma)
    }

    /// Matrix of the generator on column-stacked operators,
    /// `vec(AXB) = (Bᵀ ⊗ A) vec(X)`.
    pub fn superoperator(&self) -> DMatrix<C64> {
        let d = self.space.dim();
        let id = DMatrix::<C64>::identity(d, d);
        let h = self.hamiltonian.matrix();
        let s = self.source.matrix();
        let sds = s.adjoint() * s;
        let i = C64::new(0.0, 1.0);
        let coherent = (id.kronecker(h) - h.transpose().kronecker(&id)) * (-i);
        let jump = s.conjugate().kronecker(s);
        let anti = (id.kronecker(&sds) + sds.transpose().kronecker(&id)).scale(0.5);
        coherent + (jump - anti).scale(self.gamma)
    }
}

/// The stationary state `L(ρ) = 0`, from the null space of the vectorized
/// generator.
pub fn steady_state(model: &EmitterModel) -> Result<DensityOperator> {
    let d = model.space.dim();
    let l = model.superoperator();

    let singular = l.clone().singular_values();
    let mut sv: Vec<f64> = singular.iter().copied().collect();
    sv.sort_by(f64::total_cmp);
    let scale = sv.last().copied().unwrap_or(1.0).max(f64::MIN_POSITIVE);
    if sv.len() > 1 && sv[1] <= NULL_SPACE_TOL * scale {
        return Err(Error::NonUniqueSteadyState);
    }

    // The (0,0) row is a combination of the other diagonal rows (the
    // generator is trace preserving), so it can carry Tr ρ = 1 instead.
    let mut system = l;
    let mut rhs = DVector::<C64>::zeros(d * d);
    for col in 0..d * d {
        system[(0, col)] = C64::new(0.0, 0.0);
    }
    for k in 0..d {
        system[(0, k * d + k)] = C64::new(1.0, 0.0);
    }
    rhs[0] = C64::new(1.0, 0.0);
    let vec_rho = system
        .lu()
        .solve(&rhs)
        .ok_or(Error::NonUniqueSteadyState)?;
    let rho = DMatrix::from_column_slice(d, d, vec_rho.as_slice());
    DensityOperator::from_unnormalized(model.space, rho)
}

fn rk4_step(model: &EmitterModel, x: &DMatrix<C64>, h: f64) -> DMatrix<C64> {
    let k1 = model.apply_generator(x);
    let k2 = model.apply_generator(&(x + k1.scale(h / 2.0)));
    let k3 = model.apply_generator(&(x + k2.scale(h / 2.0)));
    let k4 = model.apply_generator(&(x + k3.scale(h)));
    x + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(h / 6.0)
}

/// Evolves any operator `x` for time `t` with RK4 steps no longer than
/// `max_step`, landing exactly on `t`.
pub(crate) fn propagate_operator(
    model: &EmitterModel,
    x: &DMatrix<C64>,
    t: f64,
    max_step: f64,
) -> Result<DMatrix<C64>> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "propagation time must be finite and nonnegative, got {t}"
        )));
    }
    if t == 0.0 {
        return Ok(x.clone());
    }
    let steps_f = (t / max_step).ceil();
    if !(steps_f <= MAX_STEPS as f64) {
        return Err(Error::StepOverflow {
            steps: if steps_f.is_finite() { steps_f as u64 } else { u64::MAX },
            limit: MAX_STEPS,
        });
    }
    let steps = steps_f as u64;
    let h = t / steps as f64;
    let mut state = x.clone();
    for _ in 0..steps {
        state = rk4_step(model, &state, h);
    }
    Ok(state)
}

/// `ρ(t)` by fixed-step RK4 with step `≤ 0.01/Γ`.
pub fn lindblad_propagate(model: &EmitterModel, rho: &DensityOperator, t: f64) -> Result<DensityOperator> {
    if rho.space() != model.space {
        return Err(Error::DimensionMismatch {
            expected: model.space.dim(),
            found: rho.space().dim(),
        });
    }
    let out = propagate_operator(model, rho.matrix(), t, model.base_step())?;
    DensityOperator::from_evolved(model.space, out)
}

/// Stationary `P(τ) = Tr[S†S · e^{Lτ}(S ρ_ss S†)]` on `tau` with the
/// default step rule `h = min(0.01/Γ, Δτ_min/10)`.
pub fn g2_correlation(model: &EmitterModel, tau: &[f64]) -> Result<CorrelationSeries> {
    validate_tau_grid(tau)?;
    let min_spacing = tau
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    g2_correlation_with_step(model, tau, model.base_step().min(min_spacing / 10.0))
}

/// [`g2_correlation`] with an explicit maximum RK4 step.
pub fn g2_correlation_with_step(
    model: &EmitterModel,
    tau: &[f64],
    max_step: f64,
) -> Result<CorrelationSeries> {
    validate_tau_grid(tau)?;
    if !(max_step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "step must be positive, got {max_step}"
        )));
    }
    let rho = steady_state(model)?;
    let s = model.source.matrix();
    let intensity_op = s.adjoint() * s;
    let rate = (&intensity_op * rho.matrix()).trace().re;
    if rate <= 1e-14 {
        return Err(Error::NormalizationUndefined);
    }

    let mut x = s * rho.matrix() * s.adjoint();
    let mut p_raw = Vec::with_capacity(tau.len());
    p_raw.push((&intensity_op * &x).trace().re);
    for w in tau.windows(2) {
        x = propagate_operator(model, &x, w[1] - w[0], max_step)?;
        p_raw.push((&intensity_op * &x).trace().re);
    }
    let g2 = p_raw.iter().map(|p| p / (rate * rate)).collect();
    Ok(CorrelationSeries {
        tau: tau.to_vec(),
        p_raw,
        g2: Some(g2),
        stderr: None,
    })
}
