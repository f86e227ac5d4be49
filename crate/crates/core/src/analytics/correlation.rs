use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use super::AnalyticsError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub r: f64,
    /// Two-tailed, from Student's t with n − 2 degrees of freedom.
    pub p: f64,
    pub n: usize,
}

/// Pearson correlation with its two-tailed significance.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrelationReport, AnalyticsError> {
    if x.len() != y.len() {
        return Err(AnalyticsError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(AnalyticsError::TooFewSamples(n));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(AnalyticsError::ZeroVariance);
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    Ok(CorrelationReport { r, p: p_value(r, n), n })
}

/// `P(|T| ≥ |t|)` with `t = r √(df / (1 − r²))`, as `I_{df/(df+t²)}(df/2, 1/2)`.
/// Since `df / (df + t²) = 1 − r²`, no t is formed.
fn p_value(r: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    let x = (1.0 - r) * (1.0 + r);
    if x <= 0.0 {
        return 0.0;
    }
    beta_reg(0.5 * df, 0.5, x).clamp(0.0, 1.0)
}
