//! Autocorrelation and effective sample size of a single chain.

/// Lags reported alongside the ESS.
pub const REPORTED_LAGS: [usize; 4] = [1, 5, 10, 50];

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterDiagnostics {
    pub ess: f64,
    /// (lag, autocorrelation) for each reported lag shorter than the chain.
    pub autocorrelation: Vec<(usize, f64)>,
    pub zero_variance: bool,
}

fn autocovariance(centered: &[f64], lag: usize) -> f64 {
    let n = centered.len();
    centered[..n - lag]
        .iter()
        .zip(&centered[lag..])
        .map(|(a, b)| a * b)
        .sum::<f64>()
        / n as f64
}

/// Lag-k autocorrelation with the biased (divisor n) autocovariance.
pub fn autocorrelation(x: &[f64], lag: usize) -> Option<f64> {
    let n = x.len();
    if lag >= n {
        return None;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let c0 = autocovariance(&c, 0);
    let constant = x.windows(2).all(|w| w[0] == w[1]);
    (!constant && c0 > 0.0).then(|| autocovariance(&c, lag) / c0)
}

/// ESS from Geyer's initial positive sequence, clamped to (0, n].
/// A constant chain reports ESS = n.
pub fn effective_sample_size(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return n as f64;
    }
    if x.windows(2).all(|w| w[0] == w[1]) {
        return n as f64;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let c0 = autocovariance(&c, 0);
    if !(c0 > 0.0) {
        return n as f64;
    }
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut m = 0;
    while 2 * m + 1 < n {
        let pair = (autocovariance(&c, 2 * m) + autocovariance(&c, 2 * m + 1)) / c0;
        if pair <= 0.0 {
            break;
        }
        // initial monotone sequence
        let pair = pair.min(prev);
        sum += pair;
        prev = pair;
        m += 1;
    }
    let tau = (2.0 * sum - 1.0).max(1e-12);
    (n as f64 / tau).clamp(f64::MIN_POSITIVE, n as f64)
}

pub fn diagnostics(x: &[f64]) -> ParameterDiagnostics {
    let zero_variance = x.windows(2).all(|w| w[0] == w[1]);
    ParameterDiagnostics {
        ess: effective_sample_size(x),
        autocorrelation: REPORTED_LAGS
            .iter()
            .filter_map(|&k| autocorrelation(x, k).map(|r| (k, r)))
            .collect(),
        zero_variance,
    }
}
