//! JSON descriptions of states and emitter models.
//!
//! A state is an object with a `kind`, a truncation `dim`, and the fields
//! that kind needs:
//!
//! | kind            | fields                                   |
//! |-----------------|------------------------------------------|
//! | `fock`          | `n`                                      |
//! | `coherent`      | `alpha_re`, `alpha_im`, optional `tail_tol` |
//! | `thermal`       | `nbar`, optional `tail_tol`              |
//! | `superposition` | `coeffs`                                 |
//! | `density`       | `matrix` (rows of entries)               |
//!
//! Complex entries are a number, a `[re, im]` pair, or `{"re": .., "im": ..}`.

use std::fmt;

use nalgebra::DMatrix;
use nonclassical::fock::DEFAULT_TAIL_TOL;
use nonclassical::{
    coherent_state, fock_state, make_space, superposition, thermal_state, DensityOperator,
    EmitterModel, PhotonState, C64,
};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

const KINDS: [&str; 5] = ["fock", "coherent", "thermal", "superposition", "density"];

/// A problem with one field of a state description.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: String,
    pub problem: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{}`: {}", self.field, self.problem)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpecError {
    /// Not JSON, or not a JSON object.
    Syntax(String),
    UnknownKind(String),
    /// Missing, mistyped, or unexpected fields, all of them at once.
    Fields(Vec<FieldError>),
    /// Well-formed, but the library rejects the state it describes.
    Invalid(nonclassical::Error),
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecError::Syntax(msg) => write!(f, "state spec is not valid JSON: {msg}"),
            SpecError::UnknownKind(kind) => write!(
                f,
                "unknown state kind `{kind}` (expected one of: {})",
                KINDS.join(", ")
            ),
            SpecError::Fields(errors) => {
                write!(f, "invalid state spec:")?;
                for e in errors {
                    write!(f, "\n  {e}")?;
                }
                Ok(())
            }
            SpecError::Invalid(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for SpecError {}

#[derive(Debug, Clone, PartialEq)]
pub enum StateKind {
    Fock { n: usize },
    Coherent { alpha: C64, tail_tol: f64 },
    Thermal { nbar: f64, tail_tol: f64 },
    Superposition { coeffs: Vec<C64> },
    Density { matrix: Vec<Vec<C64>> },
}

/// A parsed and validated state description.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpec {
    pub dim: usize,
    pub kind: StateKind,
    state: PhotonState,
}

impl StateSpec {
    /// The state the description denotes.
    pub fn state(&self) -> &PhotonState {
        &self.state
    }

    pub fn into_state(self) -> PhotonState {
        self.state
    }
}

fn complex(v: &Value) -> Option<C64> {
    match v {
        Value::Number(x) => Some(C64::new(x.as_f64()?, 0.0)),
        Value::Array(pair) if pair.len() == 2 => Some(C64::new(pair[0].as_f64()?, pair[1].as_f64()?)),
        Value::Object(o) if o.len() == 2 => Some(C64::new(o.get("re")?.as_f64()?, o.get("im")?.as_f64()?)),
        _ => None,
    }
}

/// Collects every field problem before giving up.
struct Fields<'a> {
    obj: &'a Map<String, Value>,
    errors: Vec<FieldError>,
    seen: Vec<&'static str>,
}

impl<'a> Fields<'a> {
    fn fail(&mut self, field: &str, problem: impl Into<String>) {
        self.errors.push(FieldError {
            field: field.to_owned(),
            problem: problem.into(),
        });
    }

    fn get<T>(
        &mut self,
        field: &'static str,
        expected: &str,
        parse: impl FnOnce(&Value) -> Option<T>,
    ) -> Option<T> {
        self.seen.push(field);
        match self.obj.get(field) {
            None => {
                self.fail(field, "missing");
                None
            }
            Some(v) => {
                let parsed = parse(v);
                if parsed.is_none() {
                    self.fail(field, format!("expected {expected}, got {v}"));
                }
                parsed
            }
        }
    }

    fn optional<T>(
        &mut self,
        field: &'static str,
        expected: &str,
        parse: impl FnOnce(&Value) -> Option<T>,
    ) -> Option<Option<T>> {
        if self.obj.contains_key(field) {
            self.get(field, expected, parse).map(Some)
        } else {
            self.seen.push(field);
            Some(None)
        }
    }

    fn count(&mut self, field: &'static str) -> Option<usize> {
        self.get(field, "a nonnegative integer", |v| v.as_u64().map(|n| n as usize))
    }

    fn number(&mut self, field: &'static str) -> Option<f64> {
        self.get(field, "a number", Value::as_f64)
    }

    fn tail_tol(&mut self) -> Option<f64> {
        self.optional("tail_tol", "a positive number", |v| v.as_f64().filter(|t| *t > 0.0))
            .map(|t| t.unwrap_or(DEFAULT_TAIL_TOL))
    }

    fn unknown(&mut self) {
        let extra: Vec<String> = self
            .obj
            .keys()
            .filter(|k| !self.seen.contains(&k.as_str()))
            .cloned()
            .collect();
        for field in extra {
            self.fail(&field, "unknown field");
        }
    }
}

fn entries(v: &Value) -> Option<Vec<C64>> {
    v.as_array()?.iter().map(complex).collect()
}

fn rows(v: &Value) -> Option<Vec<Vec<C64>>> {
    v.as_array()?.iter().map(entries).collect()
}

/// Parses and validates a state description.
///
/// Syntax, kind and field problems are reported as such; a description
/// that is well formed but names an impossible state (level out of range,
/// truncation too small for the requested tail tolerance, zero
/// coefficients, a matrix that is not a density operator) is reported as
/// [`SpecError::Invalid`] carrying the library error.
pub fn parse_state_spec(text: &str) -> Result<StateSpec, SpecError> {
    let value: Value = serde_json::from_str(text).map_err(|e| SpecError::Syntax(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| SpecError::Syntax(format!("expected a JSON object, got {value}")))?;
    let mut fields = Fields {
        obj,
        errors: Vec::new(),
        seen: vec!["kind"],
    };
    let kind = match obj.get("kind") {
        None => {
            fields.fail("kind", "missing");
            None
        }
        Some(Value::String(k)) if KINDS.contains(&k.as_str()) => Some(k.as_str()),
        Some(Value::String(k)) => return Err(SpecError::UnknownKind(k.clone())),
        Some(v) => {
            fields.fail("kind", format!("expected a string, got {v}"));
            None
        }
    };
    let dim = fields.get("dim", "a positive integer", |v| {
        v.as_u64().filter(|&d| d > 0).map(|d| d as usize)
    });
    let known_kind = kind.is_some();
    let kind = match kind {
        Some("fock") => fields.count("n").map(|n| StateKind::Fock { n }),
        Some("coherent") => {
            let re = fields.number("alpha_re");
            let im = fields.number("alpha_im");
            let tail_tol = fields.tail_tol();
            match (re, im, tail_tol) {
                (Some(re), Some(im), Some(tail_tol)) => Some(StateKind::Coherent {
                    alpha: C64::new(re, im),
                    tail_tol,
                }),
                _ => None,
            }
        }
        Some("thermal") => {
            let nbar = fields.number("nbar");
            let tail_tol = fields.tail_tol();
            match (nbar, tail_tol) {
                (Some(nbar), Some(tail_tol)) => Some(StateKind::Thermal { nbar, tail_tol }),
                _ => None,
            }
        }
        Some("superposition") => fields
            .get("coeffs", "an array of complex numbers", entries)
            .map(|coeffs| StateKind::Superposition { coeffs }),
        Some("density") => fields
            .get("matrix", "an array of rows of complex numbers", rows)
            .map(|matrix| StateKind::Density { matrix }),
        _ => None,
    };
    if known_kind {
        fields.unknown();
    }
    if !fields.errors.is_empty() {
        return Err(SpecError::Fields(fields.errors));
    }
    let (dim, kind) = (dim.expect("checked above"), kind.expect("checked above"));
    let state = build(dim, &kind).map_err(SpecError::Invalid)?;
    Ok(StateSpec { dim, kind, state })
}

fn build(dim: usize, kind: &StateKind) -> nonclassical::Result<PhotonState> {
    let space = make_space(dim)?;
    Ok(match kind {
        StateKind::Fock { n } => fock_state(space, *n)?.into(),
        StateKind::Coherent { alpha, tail_tol } => coherent_state(space, *alpha, *tail_tol)?.into(),
        StateKind::Thermal { nbar, tail_tol } => thermal_state(space, *nbar, *tail_tol)?.into(),
        StateKind::Superposition { coeffs } => superposition(space, coeffs)?.into(),
        StateKind::Density { matrix } => {
            if let Some(row) = matrix.iter().find(|r| r.len() != matrix.len()) {
                return Err(nonclassical::Error::InvalidDensity(format!(
                    "matrix is not square: {} rows, a row of length {}",
                    matrix.len(),
                    row.len()
                )));
            }
            let m = DMatrix::from_fn(matrix.len(), matrix.len(), |i, j| matrix[i][j]);
            DensityOperator::new(space, m)?.into()
        }
    })
}

/// Emitter models accepted by `g2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EmitterSpec {
    /// Resonantly driven two-level emitter.
    #[serde(alias = "two-level")]
    TwoLevelDriven { omega_r: f64, gamma: f64 },
    /// Coherently driven, damped cavity mode.
    DampedCavity { dim: usize, omega_r: f64, gamma: f64 },
}

impl EmitterSpec {
    pub fn build(&self) -> nonclassical::Result<EmitterModel> {
        match *self {
            EmitterSpec::TwoLevelDriven { omega_r, gamma } => EmitterModel::two_level(omega_r, gamma),
            EmitterSpec::DampedCavity { dim, omega_r, gamma } => {
                EmitterModel::damped_cavity(dim, omega_r, gamma)
            }
        }
    }
}
