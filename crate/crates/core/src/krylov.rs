//! Restarted GMRES with right preconditioning on zero-mean torus fields.

use crate::error::{Error, Result};
use crate::grid::TorusField;

pub(crate) struct GmresOutcome {
    pub solution: TorusField,
    pub iterations: usize,
    /// True residual norm over right-hand side norm.
    pub reduction: f64,
}

pub(crate) struct GmresSettings {
    pub rel_tol: f64,
    pub restart: usize,
    pub max_iters: usize,
}

/// Solves `op(x) = rhs` with `x = precond(y)`. `op` and `precond` must map
/// zero-mean fields to zero-mean fields.
pub(crate) fn gmres(
    op: impl Fn(&TorusField) -> TorusField,
    precond: impl Fn(&TorusField) -> Result<TorusField>,
    rhs: &TorusField,
    settings: &GmresSettings,
) -> Result<GmresOutcome> {
    let b_norm = rhs.l2();
    let mut x = TorusField::zeros(rhs.grid());
    if b_norm == 0.0 {
        return Ok(GmresOutcome {
            solution: x,
            iterations: 0,
            reduction: 0.0,
        });
    }
    let target = settings.rel_tol * b_norm;
    let m = settings.restart;
    let mut total = 0;
    let mut r = rhs.clone();
    let mut r_norm = b_norm;

    while total < settings.max_iters {
        let mut basis: Vec<TorusField> = vec![r.scale(1.0 / r_norm)];
        // Hessenberg columns, each of length j + 2
        let mut h: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<f64> = Vec::with_capacity(m);
        let mut g = vec![r_norm];

        for j in 0..m {
            let mut w = op(&precond(&basis[j])?);
            let mut col = vec![0.0; j + 2];
            // modified Gram-Schmidt, two passes
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let hij = w.dot(v);
                    col[i] += hij;
                    w = w.axpy(-hij, v);
                }
            }
            let w_norm = w.l2();
            col[j + 1] = w_norm;
            for i in 0..j {
                let (a, b) = (col[i], col[i + 1]);
                col[i] = cs[i] * a + sn[i] * b;
                col[i + 1] = -sn[i] * a + cs[i] * b;
            }
            let denom = col[j].hypot(col[j + 1]);
            let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (col[j] / denom, col[j + 1] / denom) };
            col[j] = denom;
            col[j + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            let gj = g[j];
            g[j] = c * gj;
            g.push(-s * gj);
            h.push(col);
            total += 1;
            let estimate = g[j + 1].abs();
            if estimate <= target || total >= settings.max_iters || w_norm == 0.0 {
                break;
            }
            basis.push(w.scale(1.0 / w_norm));
        }

        // back substitution on the triangular system
        let k = h.len();
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut acc = g[i];
            for (jj, yj) in y.iter().enumerate().take(k).skip(i + 1) {
                acc -= h[jj][i] * yj;
            }
            y[i] = acc / h[i][i];
        }
        let mut combo = TorusField::zeros(rhs.grid());
        for (yi, v) in y.iter().zip(&basis) {
            combo = combo.axpy(*yi, v);
        }
        x = &x + &precond(&combo)?;
        r = rhs - &op(&x);
        r_norm = r.l2();
        if r_norm <= target {
            return Ok(GmresOutcome {
                solution: x,
                iterations: total,
                reduction: r_norm / b_norm,
            });
        }
    }
    Err(Error::LinearSolveStagnated {
        iterations: total,
        reduction: r_norm / b_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Deriv, Grid};
    use std::f64::consts::PI;

    #[test]
    fn solves_variable_coefficient_elliptic_problem() {
        let g = Grid::new(32).unwrap();
        let a = TorusField::from_fn(&g, |x, y| 1.0 + 0.3 * (2.0 * PI * x).sin() * (2.0 * PI * y).cos());
        let op = |v: &TorusField| {
            let s = v.spectrum();
            (&a * &s.derivative(Deriv::XX) + s.derivative(Deriv::YY)).zero_mean()
        };
        let exact = TorusField::from_fn(&g, |x, y| (2.0 * PI * (x + 2.0 * y)).sin());
        let rhs = op(&exact);
        let out = gmres(
            op,
            |v| v.zero_mean().invert_laplacian(),
            &rhs,
            &GmresSettings { rel_tol: 1e-12, restart: 30, max_iters: 300 },
        )
        .unwrap();
        assert!(out.reduction <= 1e-12);
        assert!((&out.solution - &exact).sup_abs() < 1e-10);
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let g = Grid::new(8).unwrap();
        let out = gmres(
            |v| v.clone(),
            |v| Ok(v.clone()),
            &TorusField::zeros(&g),
            &GmresSettings { rel_tol: 1e-10, restart: 5, max_iters: 5 },
        )
        .unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(out.solution.sup_abs(), 0.0);
    }

    #[test]
    fn reports_stagnation() {
        let g = Grid::new(8).unwrap();
        let rhs = TorusField::from_fn(&g, |x, y| (2.0 * PI * x).sin() + (4.0 * PI * y).cos());
        // operator with a wide spectrum and no preconditioning, one iteration allowed
        let res = gmres(
            |v| v.laplacian(),
            |v| Ok(v.clone()),
            &rhs,
            &GmresSettings { rel_tol: 1e-10, restart: 1, max_iters: 1 },
        );
        assert!(matches!(res, Err(Error::LinearSolveStagnated { iterations: 1, .. })));
    }
}
