//! Marginal likelihood of the probit random-intercept models.
//!
//! Each interviewer is a cluster. Records with identical design rows are
//! collapsed into patterns carrying counts of ones and zeros, so a cluster
//! costs a handful of probit evaluations per quadrature node. The random
//! effects are written as b_f = σ_f z₁ and b_t = σ_t(ρ z₁ + √(1-ρ²) z₂)
//! with z standard normal, and the z-integral is taken by adaptive
//! Gauss-Hermite quadrature centred at the conditional mode and scaled by
//! the curvature there.
//!
//! Gradients hold the adaptive nodes fixed, which differentiates the exact
//! integral up to the quadrature error.

use std::cmp::Ordering;
use std::sync::Arc;

use thiserror::Error;

use crate::data::{Dataset, Design, Mode, RespondentRecord};
use crate::normal::{ProbitTerms, LN_SQRT_2PI};
use crate::params::{Layout, ParameterVector};
use crate::quadrature::GaussHermite;

const LN_2PI: f64 = 2.0 * LN_SQRT_2PI;
/// |ρ| closer than this to 1 is treated as the boundary.
pub const RHO_BOUNDARY: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LikelihoodError {
    #[error("linear predictor is not finite")]
    NonFinite,
    #[error("correlation {0} is numerically on the boundary ±1")]
    Boundary(f64),
    #[error("cluster mixes both modes but the nested likelihood was requested")]
    MixedModes,
    #[error("empty cluster")]
    EmptyCluster,
}

/// Records of one cluster sharing mode and design row.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    /// (1, M, x₁..x_S)
    pub row: Vec<f64>,
    pub ones: f64,
    pub zeros: f64,
}

impl Pattern {
    fn key(&self) -> impl Iterator<Item = u64> + '_ {
        self.row
            .iter()
            .map(|x| x.to_bits())
            .chain([self.ones.to_bits(), self.zeros.to_bits()])
    }

    #[inline]
    fn eta(&self, beta: &[f64]) -> f64 {
        self.row.iter().zip(beta).map(|(x, b)| x * b).sum()
    }
}

/// All records of one interviewer, split by mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub ftf: Vec<Pattern>,
    pub tel: Vec<Pattern>,
}

fn cmp_patterns(a: &[Pattern], b: &[Pattern]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| {
        a.iter()
            .zip(b)
            .map(|(p, q)| p.key().cmp(q.key()))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

impl Cluster {
    /// Collapses records into patterns in a canonical order, so the result
    /// does not depend on record order.
    pub fn from_records<'a, I>(records: I, n_covariates: usize) -> Cluster
    where
        I: IntoIterator<Item = &'a RespondentRecord>,
    {
        let mut ftf: Vec<Pattern> = Vec::new();
        let mut tel: Vec<Pattern> = Vec::new();
        for r in records {
            let mut row = Vec::with_capacity(2 + n_covariates);
            row.push(1.0);
            row.push(r.mode.as_f64());
            row.extend(r.covariates.iter().take(n_covariates));
            let bucket = match r.mode {
                Mode::Ftf => &mut ftf,
                Mode::Tel => &mut tel,
            };
            match bucket.iter_mut().find(|p| p.row == row) {
                Some(p) => {
                    if r.outcome == 1 {
                        p.ones += 1.0;
                    } else {
                        p.zeros += 1.0;
                    }
                }
                None => bucket.push(Pattern {
                    row,
                    ones: f64::from(r.outcome),
                    zeros: f64::from(1 - r.outcome),
                }),
            }
        }
        let by_row = |a: &Pattern, b: &Pattern| {
            a.row
                .iter()
                .map(|x| x.to_bits())
                .cmp(b.row.iter().map(|x| x.to_bits()))
        };
        ftf.sort_by(by_row);
        tel.sort_by(by_row);
        Cluster { ftf, tel }
    }

    pub fn is_empty(&self) -> bool {
        self.ftf.is_empty() && self.tel.is_empty()
    }

    pub fn n_records(&self) -> f64 {
        self.ftf
            .iter()
            .chain(&self.tel)
            .map(|p| p.ones + p.zeros)
            .sum()
    }

    fn canonical_cmp(&self, other: &Cluster) -> Ordering {
        cmp_patterns(&self.ftf, &other.ftf).then_with(|| cmp_patterns(&self.tel, &other.tel))
    }
}

/// Clusters of a dataset in canonical order; summation follows this order.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSet {
    pub clusters: Vec<Cluster>,
    pub n_covariates: usize,
}

impl ClusterSet {
    pub fn from_dataset(dataset: &Dataset, include_covariates: bool) -> ClusterSet {
        let n_cov = if include_covariates {
            dataset.n_covariates()
        } else {
            0
        };
        let mut by_iwer: Vec<Vec<&RespondentRecord>> =
            vec![Vec::new(); dataset.interviewers().len()];
        for r in dataset.records() {
            by_iwer[r.interviewer].push(r);
        }
        let mut clusters: Vec<Cluster> = by_iwer
            .into_iter()
            .filter(|rs| !rs.is_empty())
            .map(|rs| Cluster::from_records(rs, n_cov))
            .collect();
        clusters.sort_by(|a, b| a.canonical_cmp(b));
        ClusterSet {
            clusters,
            n_covariates: n_cov,
        }
    }

    pub fn n_coefficients(&self) -> usize {
        2 + self.n_covariates
    }

    /// All patterns pooled across clusters (ignores interviewers).
    pub fn pooled_patterns(&self) -> Vec<Pattern> {
        self.clusters
            .iter()
            .flat_map(|c| c.ftf.iter().chain(&c.tel))
            .cloned()
            .collect()
    }
}

/// Gauss-Hermite rules for the one- and two-dimensional integrals.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub rule_1d: Arc<GaussHermite>,
    pub rule_2d: Arc<GaussHermite>,
}

impl Quadrature {
    pub fn new(nodes_1d: usize, nodes_2d: usize) -> Self {
        Quadrature {
            rule_1d: GaussHermite::cached(nodes_1d),
            rule_2d: GaussHermite::cached(nodes_2d),
        }
    }
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature::new(21, 15)
    }
}

/// Per-cluster gradient pieces with respect to β, λ_f, λ_t, ζ.
struct ClusterGrad<'a> {
    beta: &'a mut [f64],
    lambda_f: f64,
    lambda_t: f64,
    zeta: f64,
}

#[inline]
fn pattern_terms(p: &Pattern, t: f64) -> (f64, f64, f64) {
    let pt = ProbitTerms::at(t);
    let mut ll = 0.0;
    let mut d = 0.0;
    let mut d2 = 0.0;
    if p.ones > 0.0 {
        ll += p.ones * pt.ln_cdf;
        d += p.ones * pt.mills_cdf;
        d2 -= p.ones * pt.mills_cdf * (t + pt.mills_cdf);
    }
    if p.zeros > 0.0 {
        ll += p.zeros * pt.ln_sf;
        d -= p.zeros * pt.mills_sf;
        d2 -= p.zeros * pt.mills_sf * (pt.mills_sf - t);
    }
    (ll, d, d2)
}

fn etas(patterns: &[Pattern], beta: &[f64]) -> Result<Vec<f64>, LikelihoodError> {
    patterns
        .iter()
        .map(|p| {
            let e = p.eta(beta);
            if e.is_finite() {
                Ok(e)
            } else {
                Err(LikelihoodError::NonFinite)
            }
        })
        .collect()
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// log ∫ Π p(y | η + σz) φ(z) dz for a single-mode cluster.
fn integrate_1d(
    patterns: &[Pattern],
    beta: &[f64],
    sd: f64,
    rule: &GaussHermite,
    grad: Option<(&mut [f64], &mut f64)>,
) -> Result<f64, LikelihoodError> {
    let eta = etas(patterns, beta)?;
    let eval = |z: f64| {
        let (mut g, mut g1, mut g2) = (-0.5 * z * z - LN_SQRT_2PI, -z, -1.0);
        for (p, e) in patterns.iter().zip(&eta) {
            let (ll, d, d2) = pattern_terms(p, e + sd * z);
            g += ll;
            g1 += sd * d;
            g2 += sd * sd * d2;
        }
        (g, g1, g2)
    };

    // conditional mode by damped Newton; the log integrand is strictly concave
    let mut z = 0.0;
    let (mut g, mut g1, mut g2) = eval(z);
    for _ in 0..100 {
        let step = -g1 / g2;
        let mut a = 1.0;
        let mut next = eval(z + step);
        while !(next.0 >= g - 1e-12 * g.abs()) && a > 1e-10 {
            a *= 0.5;
            next = eval(z + a * step);
        }
        z += a * step;
        (g, g1, g2) = next;
        if (a * step).abs() < 1e-10 {
            break;
        }
    }
    if !g.is_finite() || !(g2 < 0.0) {
        return Err(LikelihoodError::NonFinite);
    }
    let scale = (-1.0 / g2).sqrt();
    let root2s = std::f64::consts::SQRT_2 * scale;
    let log_jac = root2s.ln();

    let k = rule.len();
    let np = patterns.len();
    let mut logv = Vec::with_capacity(k);
    let mut zs = Vec::with_capacity(k);
    let mut dbuf = if grad.is_some() {
        vec![0.0; k * np]
    } else {
        Vec::new()
    };
    for (i, (&x, &lw)) in rule.nodes.iter().zip(&rule.log_scaled_weights).enumerate() {
        let zk = z + root2s * x;
        let mut lg = -0.5 * zk * zk - LN_SQRT_2PI;
        for (pi, (p, e)) in patterns.iter().zip(&eta).enumerate() {
            let (ll, d, _) = pattern_terms(p, e + sd * zk);
            lg += ll;
            if !dbuf.is_empty() {
                dbuf[i * np + pi] = d;
            }
        }
        logv.push(lw + log_jac + lg);
        zs.push(zk);
    }
    let total = log_sum_exp(&logv);
    if !total.is_finite() {
        return Err(LikelihoodError::NonFinite);
    }
    if let Some((gbeta, glambda)) = grad {
        let mut coef = vec![0.0; np];
        let mut dz = 0.0;
        for i in 0..k {
            let w = (logv[i] - total).exp();
            let row = &dbuf[i * np..(i + 1) * np];
            let mut dsum = 0.0;
            for (c, d) in coef.iter_mut().zip(row) {
                *c += w * d;
                dsum += d;
            }
            dz += w * dsum * zs[i];
        }
        for (p, c) in patterns.iter().zip(&coef) {
            for (g, x) in gbeta.iter_mut().zip(&p.row) {
                *g += c * x;
            }
        }
        *glambda += dz * sd * 0.5;
    }
    Ok(total)
}

/// Two-dimensional integral for a cluster with records in both modes.
fn integrate_2d(
    cluster: &Cluster,
    beta: &[f64],
    sd_f: f64,
    sd_t: f64,
    rho: f64,
    rule: &GaussHermite,
    grad: Option<&mut ClusterGrad<'_>>,
) -> Result<f64, LikelihoodError> {
    let c = (1.0 - rho * rho).sqrt();
    let eta_f = etas(&cluster.ftf, beta)?;
    let eta_t = etas(&cluster.tel, beta)?;

    // (g, ∇g, ∇²g) of the log integrand at z
    let eval = |z1: f64, z2: f64| {
        let (mut llf, mut df, mut af) = (0.0, 0.0, 0.0);
        for (p, e) in cluster.ftf.iter().zip(&eta_f) {
            let (ll, d, d2) = pattern_terms(p, e + sd_f * z1);
            llf += ll;
            df += d;
            af += d2;
        }
        let u = rho * z1 + c * z2;
        let (mut llt, mut dt, mut at) = (0.0, 0.0, 0.0);
        for (p, e) in cluster.tel.iter().zip(&eta_t) {
            let (ll, d, d2) = pattern_terms(p, e + sd_t * u);
            llt += ll;
            dt += d;
            at += d2;
        }
        let g = llf + llt - 0.5 * (z1 * z1 + z2 * z2) - LN_2PI;
        let g1 = sd_f * df + sd_t * rho * dt - z1;
        let g2 = sd_t * c * dt - z2;
        let h11 = sd_f * sd_f * af + sd_t * sd_t * rho * rho * at - 1.0;
        let h12 = sd_t * sd_t * rho * c * at;
        let h22 = sd_t * sd_t * c * c * at - 1.0;
        (g, [g1, g2], [h11, h12, h22])
    };

    let (mut z1, mut z2) = (0.0, 0.0);
    let (mut g, mut gr, mut h) = eval(z1, z2);
    for _ in 0..100 {
        let det = h[0] * h[2] - h[1] * h[1];
        // Newton step δ = -H⁻¹∇g
        let s1 = -(h[2] * gr[0] - h[1] * gr[1]) / det;
        let s2 = -(-h[1] * gr[0] + h[0] * gr[1]) / det;
        let mut a = 1.0;
        let mut next = eval(z1 + s1, z2 + s2);
        while !(next.0 >= g - 1e-12 * g.abs()) && a > 1e-10 {
            a *= 0.5;
            next = eval(z1 + a * s1, z2 + a * s2);
        }
        z1 += a * s1;
        z2 += a * s2;
        (g, gr, h) = next;
        if (a * s1).abs().max((a * s2).abs()) < 1e-10 {
            break;
        }
    }
    // posterior covariance (−H)⁻¹ and its Cholesky factor
    let (m11, m12, m22) = (-h[0], -h[1], -h[2]);
    let det = m11 * m22 - m12 * m12;
    if !g.is_finite() || !(m11 > 0.0) || !(det > 0.0) {
        return Err(LikelihoodError::NonFinite);
    }
    let (s11, s12, s22) = (m22 / det, -m12 / det, m11 / det);
    let l11 = s11.sqrt();
    let l21 = s12 / l11;
    let l22 = (s22 - l21 * l21).max(0.0).sqrt();
    if !(l22 > 0.0) {
        return Err(LikelihoodError::NonFinite);
    }
    let root2 = std::f64::consts::SQRT_2;
    let log_jac = std::f64::consts::LN_2 + l11.ln() + l22.ln();

    let k = rule.len();
    let nf = cluster.ftf.len();
    let nt = cluster.tel.len();
    let np = nf + nt;
    let want_grad = grad.is_some();
    let mut logv = Vec::with_capacity(k * k);
    let mut node_z = Vec::with_capacity(k * k);
    let mut dsums = Vec::with_capacity(k * k);
    let mut dbuf = if want_grad {
        vec![0.0; k * k * np]
    } else {
        Vec::new()
    };
    let mut idx = 0;
    for (&xi, &lwi) in rule.nodes.iter().zip(&rule.log_scaled_weights) {
        for (&xj, &lwj) in rule.nodes.iter().zip(&rule.log_scaled_weights) {
            let a1 = z1 + root2 * l11 * xi;
            let a2 = z2 + root2 * (l21 * xi + l22 * xj);
            let u = rho * a1 + c * a2;
            let mut lg = -0.5 * (a1 * a1 + a2 * a2) - LN_2PI;
            let (mut df, mut dt) = (0.0, 0.0);
            for (pi, (p, e)) in cluster.ftf.iter().zip(&eta_f).enumerate() {
                let (ll, d, _) = pattern_terms(p, e + sd_f * a1);
                lg += ll;
                df += d;
                if want_grad {
                    dbuf[idx * np + pi] = d;
                }
            }
            for (pi, (p, e)) in cluster.tel.iter().zip(&eta_t).enumerate() {
                let (ll, d, _) = pattern_terms(p, e + sd_t * u);
                lg += ll;
                dt += d;
                if want_grad {
                    dbuf[idx * np + nf + pi] = d;
                }
            }
            logv.push(lwi + lwj + log_jac + lg);
            node_z.push((a1, a2));
            dsums.push((df, dt));
            idx += 1;
        }
    }
    let total = log_sum_exp(&logv);
    if !total.is_finite() {
        return Err(LikelihoodError::NonFinite);
    }
    if let Some(gr) = grad {
        let mut coef = vec![0.0; np];
        let (mut gf, mut gt, mut gz) = (0.0, 0.0, 0.0);
        for i in 0..logv.len() {
            let w = (logv[i] - total).exp();
            for (cf, d) in coef.iter_mut().zip(&dbuf[i * np..(i + 1) * np]) {
                *cf += w * d;
            }
            let (a1, a2) = node_z[i];
            let (df, dt) = dsums[i];
            gf += w * df * a1;
            gt += w * dt * (rho * a1 + c * a2);
            gz += w * dt * (c * c * a1 - rho * c * a2);
        }
        for (p, cf) in cluster.ftf.iter().chain(&cluster.tel).zip(&coef) {
            for (g, x) in gr.beta.iter_mut().zip(&p.row) {
                *g += cf * x;
            }
        }
        gr.lambda_f += gf * sd_f * 0.5;
        gr.lambda_t += gt * sd_t * 0.5;
        gr.zeta += gz * sd_t;
    }
    Ok(total)
}

fn check_rho(rho: f64) -> Result<(), LikelihoodError> {
    if !rho.is_finite() || 1.0 - rho.abs() < RHO_BOUNDARY {
        Err(LikelihoodError::Boundary(rho))
    } else {
        Ok(())
    }
}

fn eval_cluster(
    cluster: &Cluster,
    params: &ParameterVector,
    beta: &[f64],
    design: Design,
    quad: &Quadrature,
    grad: Option<&mut ClusterGrad<'_>>,
) -> Result<f64, LikelihoodError> {
    let sd_f = (0.5 * params.lambda_f).exp();
    let sd_t = (0.5 * params.lambda_t).exp();
    match (cluster.ftf.is_empty(), cluster.tel.is_empty()) {
        (true, true) => Err(LikelihoodError::EmptyCluster),
        (false, true) => integrate_1d(
            &cluster.ftf,
            beta,
            sd_f,
            &quad.rule_1d,
            grad.map(|g| (&mut *g.beta, &mut g.lambda_f)),
        ),
        (true, false) => integrate_1d(
            &cluster.tel,
            beta,
            sd_t,
            &quad.rule_1d,
            grad.map(|g| (&mut *g.beta, &mut g.lambda_t)),
        ),
        (false, false) => {
            if design == Design::Nested {
                return Err(LikelihoodError::MixedModes);
            }
            let rho = params.rho();
            check_rho(rho)?;
            integrate_2d(cluster, beta, sd_f, sd_t, rho, &quad.rule_2d, grad)
        }
    }
}

fn coefficients_for(params: &ParameterVector, n_coefficients: usize) -> Vec<f64> {
    let mut beta = params.coefficients();
    beta.resize(n_coefficients, 0.0);
    beta
}

/// Nested-model log-likelihood of one single-mode cluster.
pub fn cluster_loglik_nested(
    params: &ParameterVector,
    cluster: &Cluster,
    quad: &Quadrature,
) -> Result<f64, LikelihoodError> {
    let n = cluster
        .ftf
        .iter()
        .chain(&cluster.tel)
        .map(|p| p.row.len())
        .next()
        .unwrap_or(2);
    let beta = coefficients_for(params, n);
    eval_cluster(cluster, params, &beta, Design::Nested, quad, None)
}

/// Crossed-model log-likelihood of one cluster; single-mode clusters reduce
/// to the one-dimensional integral.
pub fn cluster_loglik_crossed(
    params: &ParameterVector,
    cluster: &Cluster,
    quad: &Quadrature,
) -> Result<f64, LikelihoodError> {
    if cluster.ftf.is_empty() != cluster.tel.is_empty() {
        // the unused effect integrates out, but ρ must still be admissible
        check_rho(params.rho())?;
    }
    let n = cluster
        .ftf
        .iter()
        .chain(&cluster.tel)
        .map(|p| p.row.len())
        .next()
        .unwrap_or(2);
    let beta = coefficients_for(params, n);
    eval_cluster(cluster, params, &beta, Design::Crossed, quad, None)
}

/// Likelihood of a whole dataset under one design.
#[derive(Debug, Clone)]
pub struct LikelihoodModel {
    pub clusters: ClusterSet,
    pub design: Design,
    pub quadrature: Quadrature,
}

impl LikelihoodModel {
    pub fn new(
        dataset: &Dataset,
        design: Design,
        include_covariates: bool,
        quad: Quadrature,
    ) -> Self {
        LikelihoodModel {
            clusters: ClusterSet::from_dataset(dataset, include_covariates),
            design,
            quadrature: quad,
        }
    }

    pub fn n_coefficients(&self) -> usize {
        self.clusters.n_coefficients()
    }

    /// Σ over clusters in canonical order.
    pub fn loglik(&self, params: &ParameterVector) -> Result<f64, LikelihoodError> {
        if self.design == Design::Crossed {
            check_rho(params.rho())?;
        }
        let beta = coefficients_for(params, self.n_coefficients());
        let mut total = 0.0;
        for c in &self.clusters.clusters {
            total += eval_cluster(c, params, &beta, self.design, &self.quadrature, None)?;
        }
        Ok(total)
    }

    /// Log-likelihood and its gradient over the flat vector described by `layout`.
    pub fn loglik_grad(
        &self,
        layout: &Layout,
        theta: &[f64],
        fixed_zeta: Option<f64>,
    ) -> Result<(f64, Vec<f64>), LikelihoodError> {
        let params = layout.unflatten(theta, fixed_zeta);
        if self.design == Design::Crossed {
            check_rho(params.rho())?;
        }
        let p = layout.n_coefficients;
        let beta = &theta[..p];
        let mut total = 0.0;
        let mut gbeta = vec![0.0; p];
        let (mut gf, mut gt, mut gz) = (0.0, 0.0, 0.0);
        let mut cbeta = vec![0.0; p];
        for c in &self.clusters.clusters {
            cbeta.iter_mut().for_each(|x| *x = 0.0);
            let mut cg = ClusterGrad {
                beta: &mut cbeta,
                lambda_f: 0.0,
                lambda_t: 0.0,
                zeta: 0.0,
            };
            total += eval_cluster(
                c,
                &params,
                beta,
                self.design,
                &self.quadrature,
                Some(&mut cg),
            )?;
            gf += cg.lambda_f;
            gt += cg.lambda_t;
            gz += cg.zeta;
            for (a, b) in gbeta.iter_mut().zip(&cbeta) {
                *a += b;
            }
        }
        let mut grad = gbeta;
        grad.push(gf);
        grad.push(gt);
        if layout.has_zeta {
            grad.push(gz);
        }
        Ok((total, grad))
    }
}

/// Σ over interviewers of the cluster log-likelihood for the dataset's design.
pub fn total_loglik(
    params: &ParameterVector,
    dataset: &Dataset,
    quad: &Quadrature,
) -> Result<f64, LikelihoodError> {
    let include = !params.gamma.is_empty();
    LikelihoodModel::new(dataset, dataset.design(), include, quad.clone()).loglik(params)
}
