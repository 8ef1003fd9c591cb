//! Latent-variable Gibbs sampler for the probit mixed models.
//!
//! One sweep:
//! 1. latent propensities Y* | β, b from truncated normals;
//! 2. β | Y*, Σ with the interviewer effects integrated out;
//! 3. b | β, Y*, Σ per interviewer (together with 2 this is an exact joint draw);
//! 4. λ_f, λ_t (and ζ) | b by random-walk Metropolis, with the half-t prior
//!    on σ = exp(λ/2) and the uniform prior on ρ = tanh ζ carried through
//!    their Jacobians.
//!
//! Proposal scales adapt during burn-in only.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;
use thiserror::Error;

use crate::data::{Dataset, Design, Mode};
use crate::estimates::Quantity;
use crate::mcmc::diagnostics::{diagnostics, ParameterDiagnostics};
use crate::ml::probit::fit_probit;
use crate::normal::sample_latent;
use crate::params::{McmcBudget, ModelSpec, SamplerSettings};

#[derive(Debug, Error, PartialEq)]
pub enum McmcError {
    #[error("invalid model specification: {0}")]
    Spec(String),
    #[error("invalid budget: {0}")]
    Budget(String),
    #[error("the dataset has interviewers in both modes; fit it with the crossed design")]
    DesignMismatch,
    #[error("need at least {needed} draws, got {got}")]
    TooFewDraws { needed: usize, got: usize },
    #[error("no draws")]
    Empty,
    #[error("posterior precision of the fixed effects is not positive definite")]
    Precision,
}

/// Data in the shape the sampler needs. Records sharing design row, effect
/// slot and outcome are stored once with a count.
#[derive(Debug, Clone)]
pub struct LatentProblem {
    design: Design,
    n_coefficients: usize,
    covariate_names: Vec<String>,
    rows: Vec<f64>,
    positive: Vec<bool>,
    slot: Vec<usize>,
    count: Vec<usize>,
    /// False for a plain probit regression: one inert effect slot, no
    /// variance parameters.
    random_effects: bool,
    n_interviewers: usize,
    /// Nested design: the mode of each interviewer.
    interviewer_mode: Vec<Mode>,
    xtx: DMatrix<f64>,
    slot_count: Vec<f64>,
    /// p values per slot: Σ of design rows loading on that slot.
    slot_xsum: Vec<f64>,
}

impl LatentProblem {
    pub fn from_dataset(
        dataset: &Dataset,
        design: Design,
        include_covariates: bool,
    ) -> Result<Self, McmcError> {
        if design == Design::Nested && dataset.design() == Design::Crossed {
            return Err(McmcError::DesignMismatch);
        }
        let s = if include_covariates {
            dataset.n_covariates()
        } else {
            0
        };
        let p = 2 + s;
        let n_iw = dataset.interviewers().len();
        let mut interviewer_mode = vec![Mode::Ftf; n_iw];
        let mut rows = Vec::with_capacity(dataset.len() * p);
        let mut positive = Vec::with_capacity(dataset.len());
        let mut slot = Vec::with_capacity(dataset.len());
        for r in dataset.records() {
            rows.push(1.0);
            rows.push(r.mode.as_f64());
            rows.extend_from_slice(&r.covariates[..s]);
            positive.push(r.outcome == 1);
            interviewer_mode[r.interviewer] = r.mode;
            slot.push(match design {
                Design::Nested => r.interviewer,
                Design::Crossed => 2 * r.interviewer + usize::from(r.mode == Mode::Tel),
            });
        }
        let covariate_names = dataset.covariate_names()[..s].to_vec();
        Ok(Self::assemble(
            design,
            p,
            covariate_names,
            rows,
            positive,
            slot,
            n_iw,
            interviewer_mode,
            true,
        ))
    }

    /// Probit regression without interviewer effects on an explicit design
    /// matrix; columns are named beta0, beta1, then gamma[x1], ...
    pub fn probit(rows: &[Vec<f64>], outcomes: &[bool]) -> Self {
        let p = rows.first().map_or(1, Vec::len);
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::assemble(
            Design::Nested,
            p,
            (0..p.saturating_sub(2))
                .map(|i| format!("x{}", i + 1))
                .collect(),
            flat,
            outcomes.to_vec(),
            vec![0; outcomes.len()],
            0,
            Vec::new(),
            false,
        )
    }

    /// No records and no interviewers: the chain samples the prior.
    pub fn prior_only(design: Design, n_covariates: usize) -> Self {
        Self::assemble(
            design,
            2 + n_covariates,
            (0..n_covariates).map(|i| format!("x{}", i + 1)).collect(),
            Vec::new(),
            Vec::new(),
            Vec::new(),
            0,
            Vec::new(),
            true,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        design: Design,
        p: usize,
        covariate_names: Vec<String>,
        rows: Vec<f64>,
        positive: Vec<bool>,
        slot: Vec<usize>,
        n_interviewers: usize,
        interviewer_mode: Vec<Mode>,
        random_effects: bool,
    ) -> Self {
        let dim = if design == Design::Crossed { 2 } else { 1 };
        let n_slots = if random_effects {
            n_interviewers * dim
        } else {
            1
        };
        let mut groups: BTreeMap<(usize, bool, Vec<u64>), usize> = BTreeMap::new();
        for ((row, &pos), &sl) in rows.chunks_exact(p).zip(&positive).zip(&slot) {
            let key = (sl, pos, row.iter().map(|v| v.to_bits()).collect());
            *groups.entry(key).or_insert(0) += 1;
        }
        let mut g_rows = Vec::with_capacity(groups.len() * p);
        let mut g_pos = Vec::with_capacity(groups.len());
        let mut g_slot = Vec::with_capacity(groups.len());
        let mut g_count = Vec::with_capacity(groups.len());
        for ((sl, pos, bits), c) in groups {
            g_rows.extend(bits.into_iter().map(f64::from_bits));
            g_pos.push(pos);
            g_slot.push(sl);
            g_count.push(c);
        }
        let mut xtx = DMatrix::<f64>::zeros(p, p);
        let mut slot_count = vec![0.0; n_slots];
        let mut slot_xsum = vec![0.0; n_slots * p];
        for ((row, &sl), &c) in g_rows.chunks_exact(p).zip(&g_slot).zip(&g_count) {
            let c = c as f64;
            for i in 0..p {
                for j in 0..p {
                    xtx[(i, j)] += c * row[i] * row[j];
                }
                slot_xsum[sl * p + i] += c * row[i];
            }
            slot_count[sl] += c;
        }
        LatentProblem {
            design,
            n_coefficients: p,
            covariate_names,
            rows: g_rows,
            positive: g_pos,
            slot: g_slot,
            count: g_count,
            random_effects,
            n_interviewers,
            interviewer_mode,
            xtx,
            slot_count,
            slot_xsum,
        }
    }

    pub fn design(&self) -> Design {
        self.design
    }

    pub fn n_records(&self) -> usize {
        self.count.iter().sum()
    }

    fn dim(&self) -> usize {
        if self.design == Design::Crossed {
            2
        } else {
            1
        }
    }

    /// Column labels of the draw matrix.
    pub fn columns(&self) -> Vec<Quantity> {
        let mut cols = vec![Quantity::Beta0, Quantity::Beta1];
        cols.truncate(self.n_coefficients);
        cols.extend(self.covariate_names.iter().cloned().map(Quantity::Gamma));
        if !self.random_effects {
            return cols;
        }
        cols.push(Quantity::VarF);
        cols.push(Quantity::VarT);
        if self.design == Design::Crossed {
            cols.push(Quantity::Rho);
        }
        cols.push(Quantity::Alpha);
        cols
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainMeta {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
}

/// Retained draws on the natural scale, column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub columns: Vec<Quantity>,
    pub values: Vec<Vec<f64>>,
    pub meta: ChainMeta,
    pub diagnostics: Option<Vec<ParameterDiagnostics>>,
    /// Some non-constant column has ESS below the configured floor.
    pub low_ess: bool,
    /// Post-burn-in acceptance rates for λ_f, λ_t and ζ (when sampled).
    pub acceptance: Vec<f64>,
    pub fixed_rho: Option<f64>,
}

impl PosteriorDraws {
    pub fn n_draws(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn column(&self, q: &Quantity) -> Option<&[f64]> {
        self.columns
            .iter()
            .position(|c| c == q)
            .map(|i| self.values[i].as_slice())
    }

    /// Writes the draws as CSV, one row per retained iteration.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        let header: Vec<String> = self.columns.iter().map(ToString::to_string).collect();
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.n_draws() {
            let row: Vec<String> = self.values.iter().map(|c| c[i].to_string()).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Random-walk proposal with a burn-in adapted log scale.
#[derive(Debug, Clone)]
struct Proposal {
    log_scale: f64,
    accepted: usize,
    tried: usize,
    batch: usize,
    total_accepted: usize,
    total_tried: usize,
}

impl Proposal {
    fn new(scale: f64) -> Self {
        Proposal {
            log_scale: scale.ln(),
            accepted: 0,
            tried: 0,
            batch: 0,
            total_accepted: 0,
            total_tried: 0,
        }
    }

    fn step<R: Rng, F: Fn(f64) -> f64>(&mut self, rng: &mut R, x: &mut f64, target: F) {
        let current = target(*x);
        let z: f64 = rng.sample(StandardNormal);
        let cand = *x + self.log_scale.exp() * z;
        let proposed = target(cand);
        let u: f64 = rng.random();
        self.tried += 1;
        self.total_tried += 1;
        if proposed.is_finite() && u.ln() < proposed - current {
            *x = cand;
            self.accepted += 1;
            self.total_accepted += 1;
        }
    }

    fn adapt(&mut self, target_rate: f64) {
        if self.tried == 0 {
            return;
        }
        self.batch += 1;
        let rate = self.accepted as f64 / self.tried as f64;
        let delta = (1.0 / (self.batch as f64).sqrt()).min(0.2);
        self.log_scale += if rate > target_rate { delta } else { -delta };
        self.accepted = 0;
        self.tried = 0;
    }

    fn reset_counts(&mut self) {
        self.total_accepted = 0;
        self.total_tried = 0;
        self.accepted = 0;
        self.tried = 0;
    }

    fn rate(&self) -> f64 {
        if self.total_tried == 0 {
            0.0
        } else {
            self.total_accepted as f64 / self.total_tried as f64
        }
    }
}

const ADAPT_BATCH: usize = 50;

/// Sufficient statistics of the interviewer effects for the variance update.
#[derive(Debug, Clone, Copy, Default)]
struct EffectStats {
    n_f: f64,
    n_t: f64,
    ss_f: f64,
    ss_t: f64,
    cross: f64,
    n_pairs: f64,
}

fn log_half_t(sd: f64, df: f64, scale: f64) -> f64 {
    let u = sd / scale;
    -0.5 * (df + 1.0) * (u * u / df).ln_1p()
}

struct Chain<'a> {
    problem: &'a LatentProblem,
    settings: SamplerSettings,
    fixed_zeta: Option<f64>,
    beta: Vec<f64>,
    effects: Vec<f64>,
    lambda_f: f64,
    lambda_t: f64,
    zeta: f64,
    xty: Vec<f64>,
    slot_ysum: Vec<f64>,
}

impl Chain<'_> {
    fn update_latent<R: Rng>(&mut self, rng: &mut R) {
        let p = self.problem.n_coefficients;
        self.xty.iter_mut().for_each(|v| *v = 0.0);
        self.slot_ysum.iter_mut().for_each(|v| *v = 0.0);
        let prob = self.problem;
        for (((row, &pos), &sl), &c) in prob
            .rows
            .chunks_exact(p)
            .zip(&prob.positive)
            .zip(&prob.slot)
            .zip(&prob.count)
        {
            let mean =
                row.iter().zip(&self.beta).map(|(x, b)| x * b).sum::<f64>() + self.effects[sl];
            let mut y = 0.0;
            for _ in 0..c {
                y += sample_latent(rng, mean, pos);
            }
            for (acc, x) in self.xty.iter_mut().zip(row) {
                *acc += x * y;
            }
            self.slot_ysum[sl] += y;
        }
    }

    /// Effect prior covariance for interviewer j (d×d, row-major).
    fn prior_cov(&self, j: usize) -> [f64; 4] {
        let vf = self.lambda_f.exp();
        let vt = self.lambda_t.exp();
        match self.problem.design {
            Design::Nested => {
                let v = match self.problem.interviewer_mode[j] {
                    Mode::Ftf => vf,
                    Mode::Tel => vt,
                };
                [v, 0.0, 0.0, 0.0]
            }
            Design::Crossed => {
                let c = self.zeta.tanh() * (vf * vt).sqrt();
                [vf, c, c, vt]
            }
        }
    }

    /// A_j = Z_j'Z_j + Σ_j⁻¹, returned inverted.
    fn a_inverse(&self, j: usize) -> [f64; 4] {
        let cov = self.prior_cov(j);
        let dim = self.problem.dim();
        if dim == 1 {
            let a = self.problem.slot_count[j] + 1.0 / cov[0];
            [1.0 / a, 0.0, 0.0, 0.0]
        } else {
            let det = cov[0] * cov[3] - cov[1] * cov[2];
            let (i11, i12, i22) = (cov[3] / det, -cov[1] / det, cov[0] / det);
            let a11 = self.problem.slot_count[2 * j] + i11;
            let a22 = self.problem.slot_count[2 * j + 1] + i22;
            let a12 = i12;
            let adet = a11 * a22 - a12 * a12;
            [a22 / adet, -a12 / adet, -a12 / adet, a11 / adet]
        }
    }

    fn update_coefficients<R: Rng>(&mut self, rng: &mut R) -> Result<(), McmcError> {
        let prob = self.problem;
        let p = prob.n_coefficients;
        let dim = prob.dim();
        let mut prec = prob.xtx.clone();
        for i in 0..p {
            prec[(i, i)] += 1.0 / self.settings.coefficient_prior_variance;
        }
        let mut rhs = DVector::from_column_slice(&self.xty);
        let mut ainv_cache = Vec::with_capacity(prob.n_interviewers);
        for j in 0..prob.n_interviewers {
            let ainv = self.a_inverse(j);
            let xs = |s: usize| &prob.slot_xsum[(j * dim + s) * p..(j * dim + s + 1) * p];
            if dim == 1 {
                let x0 = xs(0);
                let y0 = self.slot_ysum[j];
                for a in 0..p {
                    rhs[a] -= x0[a] * ainv[0] * y0;
                    for b in 0..p {
                        prec[(a, b)] -= x0[a] * ainv[0] * x0[b];
                    }
                }
            } else {
                let (x0, x1) = (xs(0), xs(1));
                let (y0, y1) = (self.slot_ysum[2 * j], self.slot_ysum[2 * j + 1]);
                let w0 = ainv[0] * y0 + ainv[1] * y1;
                let w1 = ainv[2] * y0 + ainv[3] * y1;
                for a in 0..p {
                    rhs[a] -= x0[a] * w0 + x1[a] * w1;
                    // row a of X_z A⁻¹
                    let r0 = x0[a] * ainv[0] + x1[a] * ainv[2];
                    let r1 = x0[a] * ainv[1] + x1[a] * ainv[3];
                    for b in 0..p {
                        prec[(a, b)] -= r0 * x0[b] + r1 * x1[b];
                    }
                }
            }
            ainv_cache.push(ainv);
        }
        let prec = (&prec + prec.transpose()) * 0.5;
        let chol = prec.cholesky().ok_or(McmcError::Precision)?;
        let mean = chol.solve(&rhs);
        let eps = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        // L Lᵀ = P, so L⁻ᵀ ε has covariance P⁻¹
        let l = chol.l();
        let dev = l
            .transpose()
            .solve_upper_triangular(&eps)
            .ok_or(McmcError::Precision)?;
        for i in 0..p {
            self.beta[i] = mean[i] + dev[i];
        }

        // effects given β
        for (j, ainv) in ainv_cache.iter().enumerate() {
            let xs = |s: usize| &prob.slot_xsum[(j * dim + s) * p..(j * dim + s + 1) * p];
            let resid = |s: usize| {
                self.slot_ysum[j * dim + s]
                    - xs(s)
                        .iter()
                        .zip(&self.beta)
                        .map(|(x, b)| x * b)
                        .sum::<f64>()
            };
            if dim == 1 {
                let m = ainv[0] * resid(0);
                let z: f64 = rng.sample(StandardNormal);
                self.effects[j] = m + ainv[0].sqrt() * z;
            } else {
                let (r0, r1) = (resid(0), resid(1));
                let m0 = ainv[0] * r0 + ainv[1] * r1;
                let m1 = ainv[2] * r0 + ainv[3] * r1;
                let l11 = ainv[0].sqrt();
                let l21 = ainv[2] / l11;
                let l22 = (ainv[3] - l21 * l21).max(0.0).sqrt();
                let z0: f64 = rng.sample(StandardNormal);
                let z1: f64 = rng.sample(StandardNormal);
                self.effects[2 * j] = m0 + l11 * z0;
                self.effects[2 * j + 1] = m1 + l21 * z0 + l22 * z1;
            }
        }
        Ok(())
    }

    fn effect_stats(&self) -> EffectStats {
        let mut s = EffectStats::default();
        match self.problem.design {
            Design::Nested => {
                for (j, b) in self.effects.iter().enumerate() {
                    match self.problem.interviewer_mode[j] {
                        Mode::Ftf => {
                            s.n_f += 1.0;
                            s.ss_f += b * b;
                        }
                        Mode::Tel => {
                            s.n_t += 1.0;
                            s.ss_t += b * b;
                        }
                    }
                }
            }
            Design::Crossed => {
                for pair in self.effects.chunks_exact(2) {
                    s.n_pairs += 1.0;
                    s.ss_f += pair[0] * pair[0];
                    s.ss_t += pair[1] * pair[1];
                    s.cross += pair[0] * pair[1];
                }
            }
        }
        s
    }

    fn update_variances<R: Rng>(&mut self, rng: &mut R, props: &mut [Proposal; 3]) {
        let st = self.effect_stats();
        let df = self.settings.half_t_df;
        let scale = self.settings.half_t_scale;
        // log prior of λ: half-t on σ = e^{λ/2} plus log|dσ/dλ|
        let prior = move |lambda: f64| {
            let sd = (0.5 * lambda).exp();
            log_half_t(sd, df, scale) + 0.5 * lambda
        };
        for _ in 0..self.settings.variance_steps {
            match self.problem.design {
                Design::Nested => {
                    props[0].step(rng, &mut self.lambda_f, |l| {
                        prior(l) - 0.5 * st.n_f * l - 0.5 * st.ss_f * (-l).exp()
                    });
                    props[1].step(rng, &mut self.lambda_t, |l| {
                        prior(l) - 0.5 * st.n_t * l - 0.5 * st.ss_t * (-l).exp()
                    });
                }
                Design::Crossed => {
                    let joint = |lf: f64, lt: f64, zeta: f64| {
                        let rho = zeta.tanh();
                        let one_m = 1.0 - rho * rho;
                        let q = st.ss_f * (-lf).exp()
                            - 2.0 * rho * st.cross * (-0.5 * (lf + lt)).exp()
                            + st.ss_t * (-lt).exp();
                        -st.n_pairs * (0.5 * lf + 0.5 * lt + 0.5 * one_m.ln()) - 0.5 * q / one_m
                    };
                    let (lt, z) = (self.lambda_t, self.zeta);
                    props[0].step(rng, &mut self.lambda_f, |l| prior(l) + joint(l, lt, z));
                    let lf = self.lambda_f;
                    props[1].step(rng, &mut self.lambda_t, |l| prior(l) + joint(lf, l, z));
                    if self.fixed_zeta.is_none() {
                        let (lf, lt) = (self.lambda_f, self.lambda_t);
                        props[2].step(rng, &mut self.zeta, |zeta| {
                            let rho = zeta.tanh();
                            (1.0 - rho * rho).ln() + joint(lf, lt, zeta)
                        });
                    }
                }
            }
        }
    }
}

/// Runs one chain on a prepared problem.
pub fn run_chain(
    problem: &LatentProblem,
    settings: &SamplerSettings,
    fixed_rho: Option<f64>,
    budget: McmcBudget,
    seed: u64,
) -> Result<PosteriorDraws, McmcError> {
    if budget.thin == 0 {
        return Err(McmcError::Budget("thin must be at least 1".into()));
    }
    if budget.iterations <= budget.burn_in {
        return Err(McmcError::Budget(format!(
            "iterations ({}) must exceed burn-in ({})",
            budget.iterations, budget.burn_in
        )));
    }
    if let Some(r) = fixed_rho {
        if problem.design != Design::Crossed {
            return Err(McmcError::Spec(
                "a fixed correlation needs the crossed design".into(),
            ));
        }
        if !(r > -1.0 && r < 1.0) {
            return Err(McmcError::Spec(format!(
                "fixed correlation {r} outside (-1, 1)"
            )));
        }
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let p = problem.n_coefficients;

    let beta = if problem.n_records() > 0 {
        let mut patterns = Vec::new();
        for ((row, &pos), &c) in problem
            .rows
            .chunks_exact(p)
            .zip(&problem.positive)
            .zip(&problem.count)
        {
            let c = c as f64;
            patterns.push(crate::ml::likelihood::Pattern {
                row: row.to_vec(),
                ones: if pos { c } else { 0.0 },
                zeros: if pos { 0.0 } else { c },
            });
        }
        let b = fit_probit(&patterns, p);
        if b.iter().all(|v| v.is_finite()) {
            b
        } else {
            vec![0.0; p]
        }
    } else {
        vec![0.0; p]
    };
    let fixed_zeta = fixed_rho.map(f64::atanh);
    let mut chain = Chain {
        problem,
        settings: *settings,
        fixed_zeta,
        beta,
        effects: vec![0.0; problem.slot_count.len()],
        lambda_f: 0.1f64.ln(),
        lambda_t: 0.1f64.ln(),
        zeta: fixed_zeta.unwrap_or(0.0),
        xty: vec![0.0; p],
        slot_ysum: vec![0.0; problem.slot_count.len()],
    };
    let mut props = [Proposal::new(0.5), Proposal::new(0.5), Proposal::new(0.3)];

    let mut columns = problem.columns();
    if fixed_rho.is_some() {
        columns.retain(|q| *q != Quantity::Rho);
    }
    let mut values: Vec<Vec<f64>> = vec![Vec::with_capacity(budget.retained()); columns.len()];
    for it in 1..=budget.iterations {
        chain.update_latent(&mut rng);
        chain.update_coefficients(&mut rng)?;
        if problem.random_effects {
            chain.update_variances(&mut rng, &mut props);
        }
        if it <= budget.burn_in {
            if it % ADAPT_BATCH == 0 {
                props
                    .iter_mut()
                    .for_each(|pr| pr.adapt(settings.target_acceptance));
            }
            if it == budget.burn_in {
                props.iter_mut().for_each(Proposal::reset_counts);
            }
            continue;
        }
        if !(it - budget.burn_in - 1).is_multiple_of(budget.thin) {
            continue;
        }
        let var_f = chain.lambda_f.exp();
        let var_t = chain.lambda_t.exp();
        let mut c = 0;
        for b in &chain.beta {
            values[c].push(*b);
            c += 1;
        }
        if !problem.random_effects {
            continue;
        }
        values[c].push(var_f);
        values[c + 1].push(var_t);
        c += 2;
        if problem.design == Design::Crossed && fixed_rho.is_none() {
            values[c].push(chain.zeta.tanh());
            c += 1;
        }
        values[c].push(0.5 * (var_f.ln() - var_t.ln()));
    }

    let diags =
        (values[0].len() >= 100).then(|| values.iter().map(|v| diagnostics(v)).collect::<Vec<_>>());
    let low_ess = diags.as_ref().is_some_and(|d| {
        d.iter()
            .any(|x: &ParameterDiagnostics| !x.zero_variance && x.ess < settings.min_ess)
    });
    let mut acceptance = Vec::new();
    if problem.random_effects {
        acceptance = vec![props[0].rate(), props[1].rate()];
        if problem.design == Design::Crossed && fixed_rho.is_none() {
            acceptance.push(props[2].rate());
        }
    }
    Ok(PosteriorDraws {
        columns,
        values,
        meta: ChainMeta {
            iterations: budget.iterations,
            burn_in: budget.burn_in,
            thin: budget.thin,
            seed,
        },
        diagnostics: diags,
        low_ess,
        acceptance,
        fixed_rho,
    })
}

/// Bayesian fit of the nested or crossed model from one seeded chain.
pub fn fit_mcmc(
    dataset: &Dataset,
    spec: &ModelSpec,
    budget: McmcBudget,
    seed: u64,
) -> Result<PosteriorDraws, McmcError> {
    spec.validate().map_err(McmcError::Spec)?;
    let problem = LatentProblem::from_dataset(dataset, spec.design, spec.include_covariates)?;
    run_chain(&problem, &spec.sampler, spec.fixed_rho, budget, seed)
}
