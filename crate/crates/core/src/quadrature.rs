//! Gauss-Hermite rules for ∫ f(x) e^{-x²} dx.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    /// ln(w_k) + x_k², the log weight to use when the integrand is not
    /// premultiplied by e^{-x²}.
    pub log_scaled_weights: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Nodes by Newton iteration on the orthonormal Hermite recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Hermite rule needs at least one node");
        let pim4 = std::f64::consts::PI.powf(-0.25);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        let nf = n as f64;
        let mut z = 0.0f64;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        let log_scaled_weights = nodes
            .iter()
            .zip(&weights)
            .map(|(x, w)| w.ln() + x * x)
            .collect();
        GaussHermite {
            nodes,
            log_scaled_weights,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Shared, lazily built rule for `n` nodes.
    pub fn cached(n: usize) -> Arc<GaussHermite> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussHermite>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        guard
            .entry(n)
            .or_insert_with(|| Arc::new(GaussHermite::new(n)))
            .clone()
    }
}
