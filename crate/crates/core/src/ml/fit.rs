//! Maximum-likelihood fitting and Wald/delta-method intervals.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::data::{Dataset, Design};
use crate::estimates::{icc, EstimateRow, Quantity, Z_975};
use crate::ml::likelihood::{LikelihoodError, LikelihoodModel, Quadrature};
use crate::ml::optimize::{hessian_from_gradient, minimize, spd_inverse, BfgsOptions, Minimum};
use crate::ml::probit::fit_probit;
use crate::params::{Layout, ModelSpec, ParameterVector};

#[derive(Debug, Error)]
pub enum FitError {
    #[error("invalid model specification: {0}")]
    Spec(String),
    #[error("the dataset has interviewers in both modes; fit it with the crossed design")]
    DesignMismatch,
    #[error("likelihood cannot be evaluated at the starting values: {0}")]
    Start(#[from] LikelihoodError),
    #[error("delta-method variance of alpha is negative ({0}); the covariance matrix is invalid")]
    NegativeVariance(f64),
}

#[derive(Debug, Clone)]
pub struct MlFit {
    pub estimates: ParameterVector,
    pub layout: Layout,
    /// Covariance over the unconstrained parameters; `None` when the
    /// Hessian could not be inverted.
    pub vcov: Option<DMatrix<f64>>,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub design: Design,
    pub fixed_rho: Option<f64>,
    pub natural_scale: Vec<EstimateRow>,
}

/// var(α) = ¼var(λ_f) + ¼var(λ_t) − ½cov(λ_f, λ_t); the covariance term is
/// structurally zero for the nested design.
pub fn delta_var_alpha(
    vcov: &DMatrix<f64>,
    lambda_f: usize,
    lambda_t: usize,
    design: Design,
) -> Result<f64, FitError> {
    let cov = match design {
        Design::Nested => 0.0,
        Design::Crossed => vcov[(lambda_f, lambda_t)],
    };
    let v = 0.25 * vcov[(lambda_f, lambda_f)] + 0.25 * vcov[(lambda_t, lambda_t)] - 0.5 * cov;
    if v < 0.0 || !v.is_finite() {
        return Err(FitError::NegativeVariance(v));
    }
    Ok(v)
}

fn wald(point: f64, se: Option<f64>) -> Option<(f64, f64)> {
    se.map(|s| (point - Z_975 * s, point + Z_975 * s))
}

fn natural_scale_rows(
    params: &ParameterVector,
    layout: &Layout,
    vcov: Option<&DMatrix<f64>>,
    design: Design,
    fixed_rho: Option<f64>,
    covariate_names: &[String],
) -> Result<Vec<EstimateRow>, FitError> {
    let sd = |i: usize| vcov.map(|v| v[(i, i)].sqrt());
    let mut rows = Vec::new();
    let coefs = params.coefficients();
    for (i, b) in coefs.iter().enumerate() {
        let quantity = match i {
            0 => Quantity::Beta0,
            1 => Quantity::Beta1,
            _ => Quantity::Gamma(
                covariate_names
                    .get(i - 2)
                    .cloned()
                    .unwrap_or_else(|| format!("x{}", i - 1)),
            ),
        };
        let se = sd(i);
        rows.push(EstimateRow {
            quantity,
            point: *b,
            se,
            interval: wald(*b, se),
            fixed: false,
        });
    }
    let var_row = |quantity: Quantity, lambda: f64, idx: usize| {
        let point = lambda.exp();
        let se_l = sd(idx);
        EstimateRow {
            quantity,
            point,
            se: se_l.map(|s| point * s),
            interval: se_l.map(|s| ((lambda - Z_975 * s).exp(), (lambda + Z_975 * s).exp())),
            fixed: false,
        }
    };
    let vf = var_row(Quantity::VarF, params.lambda_f, layout.lambda_f());
    let vt = var_row(Quantity::VarT, params.lambda_t, layout.lambda_t());

    let alpha = params.alpha();
    let alpha_se = match vcov {
        Some(v) => Some(delta_var_alpha(v, layout.lambda_f(), layout.lambda_t(), design)?.sqrt()),
        None => None,
    };
    let alpha_row = EstimateRow {
        quantity: Quantity::Alpha,
        point: alpha,
        se: alpha_se,
        interval: wald(alpha, alpha_se),
        fixed: false,
    };

    let icc_row = |quantity: Quantity, var: &EstimateRow| {
        let point = icc(var.point).unwrap_or(f64::NAN);
        EstimateRow {
            quantity,
            point,
            se: var.se.map(|s| s / (1.0 + var.point).powi(2)),
            interval: var
                .interval
                .map(|(lo, hi)| (icc(lo).unwrap_or(0.0), icc(hi).unwrap_or(1.0))),
            fixed: false,
        }
    };
    let icc_f = icc_row(Quantity::IccF, &vf);
    let icc_t = icc_row(Quantity::IccT, &vt);
    rows.push(vf);
    rows.push(vt);
    rows.push(alpha_row);

    if design == Design::Crossed {
        match (fixed_rho, layout.zeta()) {
            (Some(r), _) => rows.push(EstimateRow {
                quantity: Quantity::Rho,
                point: r,
                se: None,
                interval: None,
                fixed: true,
            }),
            (None, Some(iz)) => {
                let zeta = params.zeta.unwrap_or(0.0);
                let rho = zeta.tanh();
                let se_z = sd(iz);
                rows.push(EstimateRow {
                    quantity: Quantity::Rho,
                    point: rho,
                    se: se_z.map(|s| (1.0 - rho * rho) * s),
                    interval: se_z.map(|s| ((zeta - Z_975 * s).tanh(), (zeta + Z_975 * s).tanh())),
                    fixed: false,
                })
            }
            (None, None) => {}
        }
    }
    rows.push(icc_f);
    rows.push(icc_t);
    Ok(rows)
}

/// Newton iterations on the score with a finite-difference Hessian, for
/// when BFGS stalls because objective values no longer resolve the
/// remaining decrease. Steps must shrink the gradient without lowering the
/// likelihood beyond rounding.
fn newton_polish<F, G>(best: &mut Minimum, mut f: F, mut grad: G, tolerance: f64)
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
    G: FnMut(&[f64]) -> Option<Vec<f64>>,
{
    let norm = |g: &[f64]| g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if norm(&best.gradient) > 1e-2 {
        return;
    }
    for _ in 0..20 {
        let Some(h) = hessian_from_gradient(&mut grad, &best.x) else {
            return;
        };
        let Some(chol) = h.cholesky() else {
            return;
        };
        let step = chol.solve(&DVector::from_column_slice(&best.gradient));
        let x: Vec<f64> = best.x.iter().zip(step.iter()).map(|(a, d)| a - d).collect();
        let Some((v, g)) = f(&x) else {
            return;
        };
        if !(norm(&g) < norm(&best.gradient) && v <= best.value + 1e-9 * best.value.abs().max(1.0))
        {
            return;
        }
        best.x = x;
        best.value = v;
        best.gradient = g;
        if norm(&best.gradient) <= tolerance {
            best.converged = true;
            return;
        }
    }
}

/// Fits the nested or crossed probit mixed model by quasi-Newton
/// maximization of the adaptive-quadrature marginal likelihood.
pub fn fit_ml(dataset: &Dataset, spec: &ModelSpec) -> Result<MlFit, FitError> {
    spec.validate().map_err(FitError::Spec)?;
    if spec.design == Design::Nested && dataset.design() == Design::Crossed {
        return Err(FitError::DesignMismatch);
    }
    let quad = Quadrature::new(spec.quadrature_nodes, spec.quadrature_nodes_2d);
    let model = LikelihoodModel::new(dataset, spec.design, spec.include_covariates, quad);
    let n_cov = model.clusters.n_covariates;
    let free_zeta = spec.design == Design::Crossed && spec.fixed_rho.is_none();
    let layout = Layout::new(n_cov, free_zeta);
    let fixed_zeta = spec.fixed_rho.map(f64::atanh);

    let beta0 = fit_probit(&model.clusters.pooled_patterns(), layout.n_coefficients);
    let mut start = ParameterVector {
        beta0: beta0[0],
        beta1: beta0[1],
        gamma: beta0[2..].to_vec(),
        lambda_f: 0.1f64.ln(),
        lambda_t: 0.1f64.ln(),
        zeta: if spec.design == Design::Crossed {
            Some(fixed_zeta.unwrap_or(0.0))
        } else {
            None
        },
    };
    if start.coefficients().iter().any(|b| !b.is_finite()) {
        start.beta0 = 0.0;
        start.beta1 = 0.0;
        start.gamma.iter_mut().for_each(|g| *g = 0.0);
    }
    let x0 = layout.flatten(&start);
    model.loglik_grad(&layout, &x0, fixed_zeta)?;

    let objective = |theta: &[f64]| {
        model
            .loglik_grad(&layout, theta, fixed_zeta)
            .ok()
            .map(|(ll, g)| (-ll, g.into_iter().map(|v| -v).collect::<Vec<_>>()))
    };
    let opts = BfgsOptions {
        gradient_tolerance: spec.optimizer.gradient_tolerance,
        max_iterations: spec.optimizer.max_iterations,
        ..BfgsOptions::default()
    };
    let mut best = minimize(objective, &x0, &opts).ok_or(LikelihoodError::NonFinite)?;
    let neg_grad = |theta: &[f64]| {
        model
            .loglik_grad(&layout, theta, fixed_zeta)
            .ok()
            .map(|(_, g)| g.into_iter().map(|v| -v).collect::<Vec<_>>())
    };
    if !best.converged {
        newton_polish(&mut best, objective, neg_grad, opts.gradient_tolerance);
    }

    let hessian = hessian_from_gradient(neg_grad, &best.x);
    let vcov = hessian.as_ref().and_then(spd_inverse);
    let estimates = layout.unflatten(&best.x, fixed_zeta);
    let natural_scale = natural_scale_rows(
        &estimates,
        &layout,
        vcov.as_ref(),
        spec.design,
        spec.fixed_rho,
        &dataset.covariate_names()[..n_cov],
    )?;
    Ok(MlFit {
        estimates,
        layout,
        vcov,
        loglik: -best.value,
        converged: best.converged,
        iterations: best.iterations,
        gradient_norm: best.gradient.iter().fold(0.0, |m, g| m.max(g.abs())),
        design: spec.design,
        fixed_rho: spec.fixed_rho,
        natural_scale,
    })
}
