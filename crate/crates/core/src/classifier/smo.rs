//! Sequential minimal optimization for the binary soft-margin SVM dual
//!
//! ```text
//! min  f(a) = 1/2 a^T Q a - e^T a,   Q_ij = y_i y_j K_ij
//! s.t. 0 <= a_i <= C,  y^T a = 0
//! ```
//!
//! Each step updates the maximal violating pair analytically and stops once
//! the KKT gap `m(a) - M(a)` drops below `tol`.

use tracing::warn;

use super::kernel::KernelMatrix;

const TAU: f64 = 1e-12;

/// Index view of the rows taking part in one binary problem.
pub struct BinaryProblem<'a> {
    pub kernel: &'a KernelMatrix,
    /// Rows of `kernel` used by this problem.
    pub index: &'a [usize],
    /// +1 / -1 per entry of `index`.
    pub y: &'a [f64],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    /// Decision function is `sum_i alpha_i y_i K(x_i, x) + bias`.
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Dual objective `sum(a) - 1/2 a^T Q a` (to be maximized).
    pub objective: f64,
}

pub fn solve(p: &BinaryProblem<'_>, c: f64, tol: f64, max_iter: usize) -> SmoSolution {
    let n = p.index.len();
    let y = p.y;

    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut iterations = 0;
    let mut converged = false;

    let is_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let is_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);

    let mut qi = vec![0.0; n];
    let mut qj = vec![0.0; n];

    loop {
        let mut gmax = f64::NEG_INFINITY;
        let mut gmin = f64::INFINITY;
        let (mut i, mut j) = (usize::MAX, usize::MAX);
        for t in 0..n {
            let v = -y[t] * grad[t];
            if is_up(alpha[t], y[t]) && v > gmax {
                gmax = v;
                i = t;
            }
            if is_low(alpha[t], y[t]) && v < gmin {
                gmin = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < tol {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        iterations += 1;

        let row_i = p.kernel.row(p.index[i]);
        let row_j = p.kernel.row(p.index[j]);
        for t in 0..n {
            qi[t] = y[i] * y[t] * row_i[p.index[t]];
            qj[t] = y[j] * y[t] * row_j[p.index[t]];
        }

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (qi[i] + qj[j] + 2.0 * qi[j]).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (qi[i] + qj[j] - 2.0 * qi[j]).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += qi[t] * di + qj[t] * dj;
        }
    }

    if !converged {
        warn!(iterations, "SMO stopped at the iteration cap before reaching tolerance");
    }

    let rho = compute_rho(&alpha, &grad, y, c);
    // f(a) = 1/2 a^T Q a - e^T a = 1/2 a^T (G - e)
    let f: f64 = alpha.iter().zip(&grad).map(|(a, g)| 0.5 * a * (g - 1.0)).sum();
    SmoSolution {
        alpha,
        bias: -rho,
        iterations,
        converged,
        objective: -f,
    }
}

fn compute_rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            sum_free += yg;
            n_free += 1;
        }
    }
    if n_free > 0 {
        sum_free / n_free as f64
    } else {
        0.5 * (ub + lb)
    }
}
