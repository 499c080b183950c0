//! Monte Carlo estimates of `E[I(0) I(τ)]` for classical stationary
//! intensity processes.
//!
//! Every trajectory starts from the stationary law and is advanced between
//! grid points with the exact transition kernel, so the estimate carries no
//! time-discretization bias. Samples are split into a fixed number of
//! batches. Batch `b` draws from ChaCha8 stream `b` under the caller's
//! seed, which makes the result bitwise reproducible regardless of how many
//! threads process the batches. The standard error is the spread of batch
//! means.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{validate_tau_grid, CorrelationSeries};
use crate::error::{Error, Result};

pub const BATCHES: usize = 32;
pub const MIN_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ClassicalProcessModel {
    /// Symmetric random telegraph signal between two levels, switching at
    /// `rate` in each direction.
    RandomTelegraph { low: f64, high: f64, rate: f64 },
    /// `I = X²` for a stationary Ornstein–Uhlenbeck process
    /// `dX = −θ X dt + σ dW`.
    OuIntensity { theta: f64, sigma: f64 },
    /// `I(t) = level`.
    Constant { level: f64 },
}

impl ClassicalProcessModel {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        match *self {
            Self::RandomTelegraph { low, high, rate } => {
                if !(low >= 0.0 && high >= 0.0) || !low.is_finite() || !high.is_finite() {
                    return bad(format!("telegraph levels must be nonnegative, got {low}, {high}"));
                }
                if !(rate > 0.0) || !rate.is_finite() {
                    return bad(format!("switching rate must be positive, got {rate}"));
                }
            }
            Self::OuIntensity { theta, sigma } => {
                if !(theta > 0.0) || !theta.is_finite() {
                    return bad(format!("OU relaxation rate must be positive, got {theta}"));
                }
                if !(sigma >= 0.0) || !sigma.is_finite() {
                    return bad(format!("OU noise strength must be nonnegative, got {sigma}"));
                }
            }
            Self::Constant { level } => {
                if !(level >= 0.0) || !level.is_finite() {
                    return bad(format!("intensity must be nonnegative, got {level}"));
                }
            }
        }
        Ok(())
    }
}

/// Hidden state of one trajectory.
enum Walker {
    Telegraph { high: bool },
    Ou { x: f64 },
    Constant,
}

impl Walker {
    fn stationary(model: &ClassicalProcessModel, rng: &mut ChaCha8Rng) -> Self {
        match *model {
            ClassicalProcessModel::RandomTelegraph { .. } => Walker::Telegraph {
                high: rng.random_bool(0.5),
            },
            ClassicalProcessModel::OuIntensity { theta, sigma } => {
                let sd = sigma / (2.0 * theta).sqrt();
                let z: f64 = rng.sample(StandardNormal);
                Walker::Ou { x: sd * z }
            }
            ClassicalProcessModel::Constant { .. } => Walker::Constant,
        }
    }

    fn intensity(&self, model: &ClassicalProcessModel) -> f64 {
        match (self, model) {
            (Walker::Telegraph { high }, ClassicalProcessModel::RandomTelegraph { low, high: hi, .. }) => {
                if *high {
                    *hi
                } else {
                    *low
                }
            }
            (Walker::Ou { x }, _) => x * x,
            (Walker::Constant, ClassicalProcessModel::Constant { level }) => *level,
            _ => unreachable!("walker built from a different model"),
        }
    }
}

/// Exact one-interval transition, precomputed per grid spacing.
enum Kernel {
    /// Probability of being in the same telegraph state after the interval.
    Telegraph { stay: f64 },
    Ou { decay: f64, noise_sd: f64 },
    Constant,
}

impl Kernel {
    fn new(model: &ClassicalProcessModel, dt: f64) -> Self {
        match *model {
            ClassicalProcessModel::RandomTelegraph { rate, .. } => Kernel::Telegraph {
                stay: 0.5 * (1.0 + (-2.0 * rate * dt).exp()),
            },
            ClassicalProcessModel::OuIntensity { theta, sigma } => {
                let var = sigma * sigma / (2.0 * theta);
                let decay = (-theta * dt).exp();
                Kernel::Ou {
                    decay,
                    noise_sd: (var * (1.0 - decay * decay)).sqrt(),
                }
            }
            ClassicalProcessModel::Constant { .. } => Kernel::Constant,
        }
    }

    fn advance(&self, walker: &mut Walker, rng: &mut ChaCha8Rng) {
        match (self, walker) {
            (Kernel::Telegraph { stay }, Walker::Telegraph { high }) => {
                if !rng.random_bool(*stay) {
                    *high = !*high;
                }
            }
            (Kernel::Ou { decay, noise_sd }, Walker::Ou { x }) => {
                let z: f64 = rng.sample(StandardNormal);
                *x = *x * decay + noise_sd * z;
            }
            (Kernel::Constant, Walker::Constant) => {}
            _ => unreachable!("kernel built from a different model"),
        }
    }
}

struct BatchSums {
    count: usize,
    intensity: f64,
    products: Vec<f64>,
}

fn run_batch(
    model: &ClassicalProcessModel,
    kernels: &[Kernel],
    samples: usize,
    seed: u64,
    stream: u64,
) -> BatchSums {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut products = vec![0.0; kernels.len() + 1];
    let mut intensity = 0.0;
    for _ in 0..samples {
        let mut walker = Walker::stationary(model, &mut rng);
        let i0 = walker.intensity(model);
        intensity += i0;
        products[0] += i0 * i0;
        for (k, kernel) in kernels.iter().enumerate() {
            kernel.advance(&mut walker, &mut rng);
            products[k + 1] += i0 * walker.intensity(model);
        }
    }
    BatchSums {
        count: samples,
        intensity,
        products,
    }
}

/// Estimates `P(τ) = E[I(0) I(τ)]` on `tau` from `n_samples` stationary
/// trajectories.
pub fn simulate_classical_intensity(
    model: &ClassicalProcessModel,
    tau: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<CorrelationSeries> {
    model.validate()?;
    validate_tau_grid(tau)?;
    if n_samples < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_SAMPLES} samples, got {n_samples}"
        )));
    }
    let kernels: Vec<Kernel> = tau.windows(2).map(|w| Kernel::new(model, w[1] - w[0])).collect();

    let base = n_samples / BATCHES;
    let extra = n_samples % BATCHES;
    let batches: Vec<BatchSums> = (0..BATCHES)
        .into_par_iter()
        .map(|b| {
            let samples = base + usize::from(b < extra);
            run_batch(model, &kernels, samples, seed, b as u64)
        })
        .collect();

    let total = n_samples as f64;
    let points = tau.len();
    let mut p_raw = vec![0.0; points];
    let mut mean_intensity = 0.0;
    for batch in &batches {
        mean_intensity += batch.intensity / total;
        for (acc, s) in p_raw.iter_mut().zip(&batch.products) {
            *acc += s / total;
        }
    }

    let nb = BATCHES as f64;
    let stderr: Vec<f64> = (0..points)
        .map(|k| {
            let means: Vec<f64> = batches
                .iter()
                .map(|b| b.products[k] / b.count as f64)
                .collect();
            let avg = means.iter().sum::<f64>() / nb;
            let var = means.iter().map(|m| (m - avg).powi(2)).sum::<f64>() / (nb - 1.0);
            (var / nb).sqrt()
        })
        .collect();

    let g2 = (mean_intensity > 0.0)
        .then(|| p_raw.iter().map(|p| p / (mean_intensity * mean_intensity)).collect());

    Ok(CorrelationSeries {
        tau: tau.to_vec(),
        p_raw,
        g2,
        stderr: Some(stderr),
    })
}
