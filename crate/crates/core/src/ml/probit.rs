//! Plain probit regression without random effects (starting values).

use nalgebra::{DMatrix, DVector};

use crate::ml::likelihood::Pattern;
use crate::normal::ProbitTerms;

/// Fisher scoring on grouped binary data. Returns coefficients in row order.
pub fn fit_probit(patterns: &[Pattern], n_coefficients: usize) -> Vec<f64> {
    let mut beta = vec![0.0; n_coefficients];
    for _ in 0..100 {
        let mut info = DMatrix::<f64>::zeros(n_coefficients, n_coefficients);
        let mut score = DVector::<f64>::zeros(n_coefficients);
        for p in patterns {
            let eta: f64 = p.row.iter().zip(&beta).map(|(x, b)| x * b).sum();
            let t = ProbitTerms::at(eta);
            let d = p.ones * t.mills_cdf - p.zeros * t.mills_sf;
            // expected information weight n φ²/(Φ(1-Φ))
            let w = (p.ones + p.zeros) * t.mills_cdf * t.mills_sf;
            for (i, xi) in p.row.iter().enumerate() {
                score[i] += d * xi;
                for (j, xj) in p.row.iter().enumerate() {
                    info[(i, j)] += w * xi * xj;
                }
            }
        }
        for i in 0..n_coefficients {
            info[(i, i)] += 1e-10;
        }
        let Some(step) = info.cholesky().map(|c| c.solve(&score)) else {
            break;
        };
        let mut max = 0.0f64;
        for (b, s) in beta.iter_mut().zip(step.iter()) {
            let s = s.clamp(-2.0, 2.0);
            *b += s;
            max = max.max(s.abs());
        }
        if max < 1e-12 || beta.iter().any(|b| b.abs() > 8.0) {
            break;
        }
    }
    beta
}
