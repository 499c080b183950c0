//! Lawson–Hanson active-set solver for `min ‖Ax − b‖` subject to `x ≥ 0`.

use nalgebra::{DMatrix, DVector};

pub(crate) struct NnlsSolution {
    pub x: DVector<f64>,
    pub residual_norm: f64,
}

fn solve_passive(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[usize]) -> DVector<f64> {
    let sub = a.select_columns(passive);
    if sub.ncols() <= sub.nrows() {
        let qr = sub.clone().qr();
        let rhs = qr.q().transpose() * b;
        if let Some(z) = qr.r().solve_upper_triangular(&rhs) {
            if z.iter().all(|v| v.is_finite()) {
                return z;
            }
        }
    }
    // Rank deficient or wide: minimum-norm least squares.
    let svd = sub.svd(true, true);
    let cutoff = svd.singular_values.max() * 1e-15;
    svd.solve(b, cutoff)
        .unwrap_or_else(|_| DVector::zeros(passive.len()))
}

pub(crate) fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> NnlsSolution {
    // Unit-norm columns; nonnegativity is preserved by positive scaling.
    let col_scale: Vec<f64> = a
        .column_iter()
        .map(|c| {
            let norm = c.norm();
            if norm > 0.0 {
                1.0 / norm
            } else {
                1.0
            }
        })
        .collect();
    let scaled = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * col_scale[j]);
    let mut sol = nnls_unit_columns(&scaled, b);
    for (x, c) in sol.x.iter_mut().zip(&col_scale) {
        *x *= c;
    }
    sol.residual_norm = (b - a * &sol.x).norm();
    sol
}

fn nnls_unit_columns(a: &DMatrix<f64>, b: &DVector<f64>) -> NnlsSolution {
    let (m, n) = a.shape();
    let mut x = DVector::<f64>::zeros(n);
    let mut in_passive = vec![false; n];
    let mut passive: Vec<usize> = Vec::new();

    let tol = 10.0 * f64::EPSILON * (m.max(n) as f64) * b.norm().max(f64::MIN_POSITIVE);
    let max_outer = 3 * n + 10;

    for _ in 0..max_outer {
        let resid = b - a * &x;
        let w = a.tr_mul(&resid);
        let candidate = (0..n)
            .filter(|&j| !in_passive[j])
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate else { break };
        if w[j] <= tol {
            break;
        }
        in_passive[j] = true;
        passive.push(j);

        let mut inner = 0;
        loop {
            inner += 1;
            let z = solve_passive(a, b, &passive);
            if z.iter().all(|&v| v > 0.0) || inner > 3 * n {
                for (k, &p) in passive.iter().enumerate() {
                    x[p] = z[k].max(0.0);
                }
                break;
            }
            // Step back toward the feasible region until a passive variable
            // hits zero.
            let mut alpha = 1.0f64;
            for (k, &p) in passive.iter().enumerate() {
                if z[k] <= 0.0 {
                    let denom = x[p] - z[k];
                    if denom > 0.0 {
                        alpha = alpha.min(x[p] / denom);
                    }
                }
            }
            for (k, &p) in passive.iter().enumerate() {
                x[p] += alpha * (z[k] - x[p]);
            }
            passive.retain(|&p| {
                let keep = x[p] > f64::EPSILON * 10.0;
                if !keep {
                    x[p] = 0.0;
                    in_passive[p] = false;
                }
                keep
            });
            if passive.is_empty() {
                break;
            }
        }
    }

    let residual_norm = (b - a * &x).norm();
    NnlsSolution { x, residual_norm }
}
