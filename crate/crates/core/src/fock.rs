//! Truncated Fock-space linear algebra.
//!
//! A single bosonic mode is represented on the levels `|0⟩ … |dim−1⟩`. All
//! operators are dense complex matrices; states are either normalized kets
//! ([`StateVector`]) or density matrices ([`DensityOperator`]).
//!
//! Truncation is explicit. Constructors that would silently discard
//! probability (coherent and thermal states) check the neglected tail mass
//! against a tolerance and report the dimension that would be needed.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tail mass tolerance used when the caller does not supply one.
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

/// Matrix entries below this are treated as zero in eigenvalue checks.
const NEGLIGIBLE_ENTRY: f64 = 1e-150;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const MIN_EIGENVALUE: f64 = -1e-10;

/// A truncated single-mode Fock space with levels `0..dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FockSpace {
    dim: usize,
}

impl FockSpace {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidArgument(format!(
                "Fock space dimension must be at least 2, got {dim}"
            )));
        }
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The retained occupation numbers.
    pub fn levels(&self) -> std::ops::Range<usize> {
        0..self.dim
    }

    fn check(&self, other: FockSpace) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }
}

/// Shorthand for [`FockSpace::new`].
pub fn make_space(dim: usize) -> Result<FockSpace> {
    FockSpace::new(dim)
}

/// A dense operator on a [`FockSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: FockSpace,
    matrix: DMatrix<C64>,
}

impl Operator {
    pub fn from_matrix(space: FockSpace, matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Self { space, matrix })
    }

    pub fn identity(space: FockSpace) -> Self {
        Self {
            space,
            matrix: DMatrix::identity(space.dim(), space.dim()),
        }
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self {
            space: self.space,
            matrix: self.matrix.adjoint(),
        }
    }

    /// Operator product `self · rhs`.
    pub fn compose(&self, rhs: &Operator) -> Result<Self> {
        self.space.check(rhs.space)?;
        Ok(Self {
            space: self.space,
            matrix: &self.matrix * &rhs.matrix,
        })
    }

    /// `self` applied `k` times; `k = 0` gives the identity.
    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::identity(self.space);
        for _ in 0..k {
            out.matrix = &self.matrix * &out.matrix;
        }
        out
    }

    /// `self · rhs − rhs · self`.
    pub fn commutator(&self, rhs: &Operator) -> Result<Self> {
        self.space.check(rhs.space)?;
        Ok(Self {
            space: self.space,
            matrix: &self.matrix * &rhs.matrix - &rhs.matrix * &self.matrix,
        })
    }

    /// Raw matrix-vector product. The result is generally not normalized.
    pub fn apply(&self, ket: &Ket) -> Result<Ket> {
        self.space.check(ket.space)?;
        Ok(Ket {
            space: self.space,
            amplitudes: &self.matrix * &ket.amplitudes,
        })
    }
}

/// The annihilation operator: `a|n⟩ = √n |n−1⟩`.
pub fn annihilation(space: FockSpace) -> Operator {
    let d = space.dim();
    let mut m = DMatrix::zeros(d, d);
    for n in 1..d {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Operator { space, matrix: m }
}

/// The creation operator, the adjoint of [`annihilation`].
pub fn creation(space: FockSpace) -> Operator {
    annihilation(space).adjoint()
}

/// The number operator `diag(0, 1, …, dim−1)`.
pub fn number_operator(space: FockSpace) -> Operator {
    let diag = DVector::from_iterator(
        space.dim(),
        space.levels().map(|n| C64::new(n as f64, 0.0)),
    );
    Operator {
        space,
        matrix: DMatrix::from_diagonal(&diag),
    }
}

/// A vector in the space that need not be normalized, e.g. `a²ψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    space: FockSpace,
    amplitudes: DVector<C64>,
}

impl Ket {
    pub fn new(space: FockSpace, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: amplitudes.len(),
            });
        }
        Ok(Self { space, amplitudes })
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Ket) -> Result<C64> {
        self.space.check(other.space)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// Normalizes into a [`StateVector`]; fails on the zero vector.
    pub fn normalize(self) -> Result<StateVector> {
        let norm = self.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidArgument(
                "cannot normalize a zero or non-finite vector".into(),
            ));
        }
        Ok(StateVector(Ket {
            space: self.space,
            amplitudes: self.amplitudes.unscale(norm),
        }))
    }
}

/// A normalized pure state `Σ c_n |n⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(Ket);

impl StateVector {
    pub fn space(&self) -> FockSpace {
        self.0.space
    }

    /// The amplitudes `c_n`.
    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.0.amplitudes
    }

    pub fn as_ket(&self) -> &Ket {
        &self.0
    }

    /// Multiplies each amplitude by `e^{iφ_n}`.
    pub fn with_phases(&self, phases: &[f64]) -> Result<Self> {
        if phases.len() != self.space().dim() {
            return Err(Error::DimensionMismatch {
                expected: self.space().dim(),
                found: phases.len(),
            });
        }
        let mut amps = self.0.amplitudes.clone();
        for (c, &phi) in amps.iter_mut().zip(phases) {
            *c *= C64::from_polar(1.0, phi);
        }
        Ok(Self(Ket {
            space: self.space(),
            amplitudes: amps,
        }))
    }
}

/// The Fock state `|n⟩`.
pub fn fock_state(space: FockSpace, n: usize) -> Result<StateVector> {
    if n >= space.dim() {
        return Err(Error::OutOfRange {
            index: n,
            dim: space.dim(),
        });
    }
    let mut amps = DVector::zeros(space.dim());
    amps[n] = C64::new(1.0, 0.0);
    Ok(StateVector(Ket {
        space,
        amplitudes: amps,
    }))
}

/// Normalized `Σ coeffs[n] |n⟩`. Missing trailing coefficients are zero.
pub fn superposition(space: FockSpace, coeffs: &[C64]) -> Result<StateVector> {
    if coeffs.len() > space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            found: coeffs.len(),
        });
    }
    let mut amps = DVector::zeros(space.dim());
    amps.rows_mut(0, coeffs.len()).copy_from_slice(coeffs);
    Ket {
        space,
        amplitudes: amps,
    }
    .normalize()
    .map_err(|_| Error::InvalidArgument("superposition coefficients are all zero".into()))
}

/// Poisson weights `e^{-s} sⁿ/n!` for `n = 0..len`.
fn poisson_weights(mean: f64, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut p = (-mean).exp();
    for n in 0..len {
        if n > 0 {
            p *= mean / n as f64;
        }
        out.push(p);
    }
    out
}

/// Poisson probability mass at and above each cutoff `0..=len`, summed
/// from the far tail inward so small tails are not lost to cancellation.
fn poisson_tails(mean: f64, min_len: usize) -> Vec<f64> {
    // Far enough out that the remaining mass is far below any tolerance.
    let horizon = (mean + 40.0 * mean.sqrt() + 60.0).ceil() as usize;
    let len = horizon.max(min_len) + 1;
    let weights = poisson_weights(mean, len);
    let mut tails = vec![0.0; len + 1];
    for n in (0..len).rev() {
        tails[n] = tails[n + 1] + weights[n];
    }
    tails
}

/// Poisson mass neglected by truncating at `dim` levels.
pub fn poisson_tail_mass(mean: f64, dim: usize) -> f64 {
    poisson_tails(mean, dim)[dim]
}

fn required_dim(tails: &[f64], tail_tol: f64) -> usize {
    tails
        .iter()
        .position(|&t| t < tail_tol)
        .unwrap_or(tails.len())
        .max(2)
}

/// The coherent state `|α⟩`, truncated and renormalized.
///
/// Fails with [`Error::TruncationTooSmall`] when the Poisson mass beyond the
/// top level is not below `tail_tol`.
pub fn coherent_state(space: FockSpace, alpha: C64, tail_tol: f64) -> Result<StateVector> {
    let mean = alpha.norm_sqr();
    let tails = poisson_tails(mean, space.dim());
    let tail_mass = tails[space.dim()];
    if tail_mass >= tail_tol {
        return Err(Error::TruncationTooSmall {
            tail_mass,
            tail_tol,
            required_dim: required_dim(&tails, tail_tol),
        });
    }
    let mut amps = DVector::zeros(space.dim());
    let mut c = C64::new((-mean / 2.0).exp(), 0.0);
    for n in 0..space.dim() {
        if n > 0 {
            c = c * alpha / (n as f64).sqrt();
        }
        amps[n] = c;
    }
    Ket {
        space,
        amplitudes: amps,
    }
    .normalize()
}

/// A valid density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    space: FockSpace,
    matrix: DMatrix<C64>,
}

impl DensityOperator {
    /// Validates `matrix` against the density-operator invariants.
    pub fn new(space: FockSpace, matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        let asym = (&matrix - matrix.adjoint()).camax();
        if asym > HERMITIAN_TOL {
            return Err(Error::InvalidDensity(format!(
                "not Hermitian (max deviation {asym:.3e})"
            )));
        }
        let trace = matrix.trace();
        if (trace - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidDensity(format!("trace is {trace}, expected 1")));
        }
        let rho = Self { space, matrix };
        let min_eig = rho.min_eigenvalue();
        if min_eig < MIN_EIGENVALUE {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(rho)
    }

    /// Symmetrizes and rescales to unit trace before validating. For
    /// matrices produced by numerical procedures.
    pub fn from_unnormalized(space: FockSpace, matrix: DMatrix<C64>) -> Result<Self> {
        let herm = (&matrix + matrix.adjoint()).scale(0.5);
        let trace = herm.trace().re;
        if !(trace.abs() > 0.0) {
            return Err(Error::InvalidDensity("zero trace".into()));
        }
        let mut scaled = herm.unscale(trace);
        for i in 0..space.dim().min(scaled.nrows()) {
            scaled[(i, i)].im = 0.0;
        }
        Self::new(space, scaled)
    }

    /// Output of a trace-preserving integrator: symmetrized, trace checked
    /// to 1e-9 but not rescaled.
    pub(crate) fn from_evolved(space: FockSpace, matrix: DMatrix<C64>) -> Result<Self> {
        let herm = (&matrix + matrix.adjoint()).scale(0.5);
        let trace = herm.trace().re;
        if (trace - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDensity(format!("trace drifted to {trace}")));
        }
        let rho = Self { space, matrix: herm };
        let min_eig = rho.min_eigenvalue();
        if min_eig < MIN_EIGENVALUE {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(rho)
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn pure(state: &StateVector) -> Self {
        let v = state.amplitudes();
        Self {
            space: state.space(),
            matrix: v * v.adjoint(),
        }
    }

    /// `Σ p_n |n⟩⟨n|` for a probability vector `p` of length `dim`.
    pub fn diagonal(space: FockSpace, probabilities: &[f64]) -> Result<Self> {
        if probabilities.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: probabilities.len(),
            });
        }
        let diag = DVector::from_iterator(
            space.dim(),
            probabilities.iter().map(|&p| C64::new(p, 0.0)),
        );
        Self::new(space, DMatrix::from_diagonal(&diag))
    }

    /// Convex mixture `Σ w_i |ψ_i⟩⟨ψ_i|`; weights are renormalized.
    pub fn mixture(components: &[(f64, StateVector)]) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
        let space = first.1.space();
        let total: f64 = components.iter().map(|(w, _)| *w).sum();
        if components.iter().any(|(w, _)| *w < 0.0) || !(total > 0.0) {
            return Err(Error::InvalidArgument(
                "mixture weights must be nonnegative with positive sum".into(),
            ));
        }
        let mut m = DMatrix::zeros(space.dim(), space.dim());
        for (w, psi) in components {
            space.check(psi.space())?;
            let v = psi.amplitudes();
            m += (v * v.adjoint()).scale(*w / total);
        }
        Self::from_unnormalized(space, m)
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn min_eigenvalue(&self) -> f64 {
        // Products of far-tail amplitudes reach the subnormal range, where
        // the Hermitian eigensolver breaks down; they cannot move the
        // eigenvalues by anything near the validation tolerances.
        let zero = C64::new(0.0, 0.0);
        let flushed = self.matrix.map(|z| if z.norm() < NEGLIGIBLE_ENTRY { zero } else { z });
        let eig = flushed.symmetric_eigenvalues();
        eig.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Geometric weights of a thermal state, truncated and renormalized.
pub fn thermal_state(space: FockSpace, nbar: f64, tail_tol: f64) -> Result<DensityOperator> {
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "mean occupation must be finite and nonnegative, got {nbar}"
        )));
    }
    let ratio = nbar / (1.0 + nbar);
    let tail_mass = ratio.powi(space.dim() as i32);
    if tail_mass >= tail_tol {
        let required = (tail_tol.ln() / ratio.ln()).floor() as usize + 1;
        return Err(Error::TruncationTooSmall {
            tail_mass,
            tail_tol,
            required_dim: required.max(2),
        });
    }
    let mut p: Vec<f64> = space
        .levels()
        .map(|n| (1.0 - ratio) * ratio.powi(n as i32))
        .collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    DensityOperator::diagonal(space, &p)
}

/// Anything expectation values can be taken in.
pub trait QuantumState {
    fn space(&self) -> FockSpace;

    /// `⟨ψ|A|ψ⟩` or `Tr(ρA)`.
    fn expectation(&self, op: &Operator) -> Result<C64>;

    /// Occupation probabilities `⟨n|ρ|n⟩`.
    fn populations(&self) -> Vec<f64>;

    fn as_density(&self) -> DensityOperator;
}

impl QuantumState for StateVector {
    fn space(&self) -> FockSpace {
        self.space()
    }

    fn expectation(&self, op: &Operator) -> Result<C64> {
        let image = op.apply(self.as_ket())?;
        self.as_ket().inner(&image)
    }

    fn populations(&self) -> Vec<f64> {
        self.amplitudes().iter().map(|c| c.norm_sqr()).collect()
    }

    fn as_density(&self) -> DensityOperator {
        DensityOperator::pure(self)
    }
}

impl QuantumState for DensityOperator {
    fn space(&self) -> FockSpace {
        self.space
    }

    fn expectation(&self, op: &Operator) -> Result<C64> {
        self.space.check(op.space())?;
        Ok((&self.matrix * op.matrix()).trace())
    }

    fn populations(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|c| c.re).collect()
    }

    fn as_density(&self) -> DensityOperator {
        self.clone()
    }
}

/// Either kind of state, for callers that decide at run time.
#[derive(Debug, Clone, PartialEq)]
pub enum PhotonState {
    Pure(StateVector),
    Mixed(DensityOperator),
}

impl QuantumState for PhotonState {
    fn space(&self) -> FockSpace {
        match self {
            PhotonState::Pure(s) => s.space(),
            PhotonState::Mixed(r) => r.space(),
        }
    }

    fn expectation(&self, op: &Operator) -> Result<C64> {
        match self {
            PhotonState::Pure(s) => s.expectation(op),
            PhotonState::Mixed(r) => r.expectation(op),
        }
    }

    fn populations(&self) -> Vec<f64> {
        match self {
            PhotonState::Pure(s) => s.populations(),
            PhotonState::Mixed(r) => r.populations(),
        }
    }

    fn as_density(&self) -> DensityOperator {
        match self {
            PhotonState::Pure(s) => s.as_density(),
            PhotonState::Mixed(r) => r.clone(),
        }
    }
}

impl From<StateVector> for PhotonState {
    fn from(s: StateVector) -> Self {
        PhotonState::Pure(s)
    }
}

impl From<DensityOperator> for PhotonState {
    fn from(r: DensityOperator) -> Self {
        PhotonState::Mixed(r)
    }
}

/// Free-function form of [`QuantumState::expectation`].
pub fn expectation<S: QuantumState + ?Sized>(op: &Operator, state: &S) -> Result<C64> {
    state.expectation(op)
}

/// Free-function form of [`Operator::apply`] for a normalized state.
pub fn apply(op: &Operator, state: &StateVector) -> Result<Ket> {
    op.apply(state.as_ket())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn space_requires_two_levels() {
        assert!(matches!(make_space(1), Err(Error::InvalidArgument(_))));
        assert_eq!(make_space(2).unwrap().levels(), 0..2);
        assert_eq!(make_space(32).unwrap().dim(), 32);
    }

    #[test]
    fn ladder_operators_small() {
        let s2 = make_space(2).unwrap();
        let a = annihilation(s2);
        assert_eq!(a.matrix()[(0, 1)], c(1.0));
        assert_eq!(a.matrix().iter().filter(|z| z.norm() > 0.0).count(), 1);
        let ad = creation(s2);
        assert_eq!(ad.matrix()[(1, 0)], c(1.0));

        let s3 = make_space(3).unwrap();
        assert!((annihilation(s3).matrix()[(1, 2)].re - 2f64.sqrt()).abs() < 1e-15);

        let image = creation(s3)
            .apply(fock_state(s3, 1).unwrap().as_ket())
            .unwrap();
        assert!((image.amplitudes()[2].re - 2f64.sqrt()).abs() < 1e-15);
        assert!((image.norm() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn commutator_identity_below_top_level() {
        for dim in 2..20 {
            let s = make_space(dim).unwrap();
            let comm = annihilation(s).commutator(&creation(s)).unwrap();
            for i in 0..dim {
                for j in 0..dim {
                    let expect = if i != j {
                        0.0
                    } else if i < dim - 1 {
                        1.0
                    } else {
                        -((dim - 1) as f64)
                    };
                    assert!((comm.matrix()[(i, j)] - c(expect)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn number_operator_is_creation_times_annihilation() {
        let s = make_space(12).unwrap();
        let n = number_operator(s);
        let prod = creation(s).compose(&annihilation(s)).unwrap();
        assert!((n.matrix() - prod.matrix()).camax() < 1e-12);
        assert_eq!(make_space(3).map(number_operator).unwrap().matrix()[(2, 2)], c(2.0));
        let one = fock_state(s, 1).unwrap();
        assert_eq!(expectation(&n, &one).unwrap(), c(1.0));
    }

    #[test]
    fn fock_state_bounds() {
        let s = make_space(8).unwrap();
        let e3 = fock_state(s, 3).unwrap();
        assert_eq!(e3.amplitudes()[3], c(1.0));
        assert!((e3.as_ket().norm() - 1.0).abs() < 1e-12);
        assert_eq!(
            fock_state(s, 8),
            Err(Error::OutOfRange { index: 8, dim: 8 })
        );
    }

    #[test]
    fn apply_annihilation() {
        let s = make_space(8).unwrap();
        let a = annihilation(s);
        let down = apply(&a, &fock_state(s, 1).unwrap()).unwrap();
        assert_eq!(down.amplitudes()[0], c(1.0));
        assert_eq!(down.norm(), 1.0);
        let vac = apply(&a, &fock_state(s, 0).unwrap()).unwrap();
        assert_eq!(vac.norm(), 0.0);
        let two = a.pow(2).apply(fock_state(s, 5).unwrap().as_ket()).unwrap();
        assert!((two.norm() - 20f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = annihilation(make_space(4).unwrap());
        let psi = fock_state(make_space(5).unwrap(), 1).unwrap();
        assert_eq!(
            expectation(&a, &psi),
            Err(Error::DimensionMismatch { expected: 4, found: 5 })
        );
        assert!(matches!(apply(&a, &psi), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn superposition_normalizes() {
        let s = make_space(4).unwrap();
        let h = 0.5f64.sqrt();
        let phi = superposition(s, &[c(0.0), c(h), c(h)]).unwrap();
        assert!((phi.amplitudes()[1].re - h).abs() < 1e-15);
        let vac = superposition(s, &[c(2.0), c(0.0), c(0.0)]).unwrap();
        assert_eq!(vac.amplitudes()[0], c(1.0));
        assert!(matches!(
            superposition(s, &[c(0.0), c(0.0)]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn coherent_state_mean_and_eigenrelation() {
        let s = make_space(32).unwrap();
        let alpha = C64::new(2.0, 0.0);
        let psi = coherent_state(s, alpha, 1e-12).unwrap();
        let mean = expectation(&number_operator(s), &psi).unwrap();
        assert!((mean.re - 4.0).abs() < 1e-10);

        let alpha = C64::new(1.0, 1.0);
        let psi = coherent_state(s, alpha, 1e-12).unwrap();
        let ev = expectation(&annihilation(s), &psi).unwrap();
        assert!((ev - alpha).norm() < 1e-10);
        let a_psi = apply(&annihilation(s), &psi).unwrap();
        let resid = a_psi.amplitudes() - psi.amplitudes() * alpha;
        assert!(resid.norm() < 10.0 * 1e-12);

        let vac = coherent_state(s, C64::new(0.0, 0.0), 1e-12).unwrap();
        assert_eq!(vac, fock_state(s, 0).unwrap());
    }

    #[test]
    fn coherent_state_reports_required_dim() {
        let s = make_space(8).unwrap();
        match coherent_state(s, C64::new(5.0, 0.0), 1e-12) {
            Err(Error::TruncationTooSmall { tail_mass, required_dim, .. }) => {
                // Direct summation of the Poisson(25) mass at n >= 8.
                let mut p = (-25f64).exp();
                let mut below = 0.0;
                for n in 0..8 {
                    if n > 0 {
                        p *= 25.0 / n as f64;
                    }
                    below += p;
                }
                assert!((tail_mass - (1.0 - below)).abs() < 1e-12);
                assert!(poisson_tail_mass(25.0, required_dim) < 1e-12);
                assert!(poisson_tail_mass(25.0, required_dim - 1) >= 1e-12);
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn thermal_state_mean_and_errors() {
        let s = make_space(64).unwrap();
        let rho = thermal_state(s, 1.0, 1e-12).unwrap();
        let mean = expectation(&number_operator(s), &rho).unwrap();
        assert!((mean.re - 1.0).abs() < 1e-10);
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
        assert!(rho.populations().iter().all(|&p| p >= 0.0));

        let vac = thermal_state(s, 0.0, 1e-12).unwrap();
        assert_eq!(vac.populations()[0], 1.0);

        let small = make_space(16).unwrap();
        match thermal_state(small, 10.0, 1e-12) {
            Err(Error::TruncationTooSmall { tail_mass, required_dim, .. }) => {
                let q: f64 = 10.0 / 11.0;
                assert!((tail_mass - q.powi(16)).abs() < 1e-15);
                assert!(q.powi(required_dim as i32) < 1e-12);
                assert!(q.powi(required_dim as i32 - 1) >= 1e-12);
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn density_validation() {
        let s = make_space(2).unwrap();
        let bad_trace = DMatrix::from_diagonal(&DVector::from_vec(vec![c(0.5), c(0.4)]));
        assert!(matches!(
            DensityOperator::new(s, bad_trace),
            Err(Error::InvalidDensity(_))
        ));
        let negative = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.5), c(-0.5)]));
        assert!(matches!(
            DensityOperator::new(s, negative),
            Err(Error::InvalidDensity(_))
        ));
        let mut non_herm = DMatrix::from_diagonal(&DVector::from_vec(vec![c(0.5), c(0.5)]));
        non_herm[(0, 1)] = c(0.1);
        assert!(DensityOperator::new(s, non_herm).is_err());
    }

    #[test]
    fn weak_coherent_mixture_is_a_valid_density() {
        // Far-tail amplitudes near 1e-86 make subnormal matrix entries.
        let s = make_space(40).unwrap();
        let psi = coherent_state(s, C64::from_polar(0.0243, 5.75), DEFAULT_TAIL_TOL).unwrap();
        let rho = DensityOperator::mixture(&[(1.0, psi)]).unwrap();
        assert!(rho.min_eigenvalue().abs() < 1e-12);
    }
}
