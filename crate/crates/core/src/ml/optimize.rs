//! BFGS minimization and finite-difference Hessians.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct BfgsOptions {
    /// Converged when max |∂f/∂θ| falls below this.
    pub gradient_tolerance: f64,
    pub max_iterations: usize,
    /// Longest allowed step (∞-norm) in one line search.
    pub max_step: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions {
            gradient_tolerance: 1e-6,
            max_iterations: 500,
            max_step: 5.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f` where `f(x)` returns value and gradient, or `None` when `x`
/// is outside the domain. Line search accepts Armijo steps, or steps meeting
/// approximate Wolfe conditions once values stop resolving differences.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &BfgsOptions) -> Option<Minimum>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut fx, mut g) = f(&x)?;
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut fresh = true;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        if inf_norm(&g) <= opts.gradient_tolerance {
            break;
        }
        iterations += 1;
        let gv = DVector::from_column_slice(&g);
        let mut d: Vec<f64> = (-(&h * &gv)).iter().copied().collect();
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            h = DMatrix::identity(n, n);
            fresh = true;
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }
        let dn = inf_norm(&d);
        if dn > opts.max_step {
            let s = opts.max_step / dn;
            d.iter_mut().for_each(|v| *v *= s);
            slope *= s;
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            if let Some((fv, gn)) = f(&xn) {
                if fv.is_finite() && gn.iter().all(|v| v.is_finite()) {
                    let armijo = fv <= fx + 1e-4 * step * slope;
                    let dslope = dot(&gn, &d);
                    let approx_wolfe = fv <= fx + 1e-10 * fx.abs().max(1.0)
                        && dslope >= 0.9 * slope
                        && dslope <= -0.8 * slope;
                    if armijo || approx_wolfe {
                        accepted = Some((xn, fv, gn));
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        let Some((xn, fv, gn)) = accepted else {
            if fresh {
                break;
            }
            h = DMatrix::identity(n, n);
            fresh = true;
            continue;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if fresh {
                h *= sy / dot(&y, &y);
                fresh = false;
            }
            let sv = DVector::from_column_slice(&s);
            let yv = DVector::from_column_slice(&y);
            let rho = 1.0 / sy;
            let hy = &h * &yv;
            let yhy = yv.dot(&hy);
            // H ← H − ρ(s yᵀH + H y sᵀ) + (ρ² yᵀHy + ρ) s sᵀ
            h -= (&sv * hy.transpose() + &hy * sv.transpose()) * rho;
            h += &sv * sv.transpose() * (rho * rho * yhy + rho);
        }
        x = xn;
        fx = fv;
        g = gn;
    }
    let converged = inf_norm(&g) <= opts.gradient_tolerance;
    Some(Minimum {
        x,
        value: fx,
        gradient: g,
        iterations,
        converged,
    })
}

/// Symmetric Hessian by central differences of a gradient, with step
/// 1e-4·(1 + |θ_j|).
pub fn hessian_from_gradient<G>(mut grad: G, x: &[f64]) -> Option<DMatrix<f64>>
where
    G: FnMut(&[f64]) -> Option<Vec<f64>>,
{
    let n = x.len();
    let mut hm = DMatrix::<f64>::zeros(n, n);
    let mut xp = x.to_vec();
    for j in 0..n {
        let hstep = 1e-4 * (1.0 + x[j].abs());
        xp[j] = x[j] + hstep;
        let gp = grad(&xp)?;
        xp[j] = x[j] - hstep;
        let gm = grad(&xp)?;
        xp[j] = x[j];
        for i in 0..n {
            hm[(i, j)] = (gp[i] - gm[i]) / (2.0 * hstep);
        }
    }
    let sym = (&hm + hm.transpose()) * 0.5;
    sym.iter().all(|v| v.is_finite()).then_some(sym)
}

/// Inverse of a symmetric positive-definite matrix, or `None` when it is not.
pub fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let chol = m.clone().cholesky()?;
    let inv = chol.inverse();
    let inv = (&inv + inv.transpose()) * 0.5;
    (inv.iter().all(|v| v.is_finite()) && (0..inv.nrows()).all(|i| inv[(i, i)] > 0.0))
        .then_some(inv)
}
