//! Standard normal helpers used by the probit likelihood and the latent sampler.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Below this |t| the erfc-based tail is still representable with full
/// relative precision; beyond it the asymptotic series takes over.
const TAIL_SWITCH: f64 = 30.0;

#[inline]
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

#[inline]
pub fn ln_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

#[inline]
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Asymptotic series S(u) with Φ(-u) ≈ φ(u)/u · S(u) for large u.
#[inline]
fn tail_series(u: f64) -> f64 {
    let v = 1.0 / (u * u);
    1.0 - v * (1.0 - 3.0 * v * (1.0 - 5.0 * v * (1.0 - 7.0 * v)))
}

/// Probit building blocks at a latent index `t`.
#[derive(Debug, Clone, Copy)]
pub struct ProbitTerms {
    /// ln Φ(t)
    pub ln_cdf: f64,
    /// ln Φ(-t)
    pub ln_sf: f64,
    /// φ(t)/Φ(t)
    pub mills_cdf: f64,
    /// φ(t)/Φ(-t)
    pub mills_sf: f64,
}

impl ProbitTerms {
    #[inline]
    pub fn at(t: f64) -> Self {
        let u = t.abs();
        // small = Φ(-|t|), large = Φ(|t|)
        let (ln_small, mills_small, ln_large, mills_large) = if u < TAIL_SWITCH {
            let small = 0.5 * libm::erfc(u * FRAC_1_SQRT_2);
            let dens = pdf(u);
            (
                small.ln(),
                dens / small,
                (-small).ln_1p(),
                dens / (1.0 - small),
            )
        } else {
            let s = tail_series(u);
            let ln_small = ln_pdf(u) - u.ln() + s.ln();
            (ln_small, u / s, 0.0, 0.0)
        };
        if t >= 0.0 {
            ProbitTerms {
                ln_cdf: ln_large,
                ln_sf: ln_small,
                mills_cdf: mills_large,
                mills_sf: mills_small,
            }
        } else {
            ProbitTerms {
                ln_cdf: ln_small,
                ln_sf: ln_large,
                mills_cdf: mills_small,
                mills_sf: mills_large,
            }
        }
    }
}

#[inline]
pub fn ln_cdf(x: f64) -> f64 {
    ProbitTerms::at(x).ln_cdf
}

/// Draw Z ~ N(0,1) conditioned on Z > lower.
pub fn sample_lower_truncated<R: Rng + ?Sized>(rng: &mut R, lower: f64) -> f64 {
    if lower < 0.45 {
        loop {
            let z: f64 = rng.sample(StandardNormal);
            if z > lower {
                return z;
            }
        }
    }
    // exponential proposal with the optimal rate for this truncation point
    let rate = 0.5 * (lower + (lower * lower + 4.0).sqrt());
    loop {
        let e: f64 = rng.sample(Exp1);
        let z = lower + e / rate;
        let accept = (-0.5 * (z - rate) * (z - rate)).exp();
        if rng.random::<f64>() <= accept {
            return z;
        }
    }
}

/// Latent propensity draw: N(mean, 1) restricted to (0, ∞) when `positive`,
/// otherwise to (-∞, 0].
#[inline]
pub fn sample_latent<R: Rng + ?Sized>(rng: &mut R, mean: f64, positive: bool) -> f64 {
    if positive {
        mean + sample_lower_truncated(rng, -mean)
    } else {
        mean - sample_lower_truncated(rng, mean)
    }
}
