//! Log-log rate fitting of (eps, value) ladders.

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct RateFit {
    /// Least-squares slope of log(value) against log(eps).
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square of the log-space fit residuals; an outlier shows
    /// up here rather than being rejected.
    pub residual_rms: f64,
    pub pairs: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub enum RateOutcome {
    Fit(RateFit),
    /// All values sat at rounding level: the quantity is exactly zero
    /// and a slope is undefined.
    ExactZero,
}

/// Values at or below this are treated as exact zeros of the measured
/// quantity (solver tolerances leave ~1e-12 dust on analytically zero
/// cases).
pub const EXACT_ZERO_FLOOR: f64 = 1e-10;

pub fn fit_rate(pairs: &[(f64, f64)]) -> Result<RateOutcome> {
    if pairs.len() < 3 {
        return Err(Error::DegenerateFit {
            detail: format!("need at least 3 pairs, got {}", pairs.len()),
        });
    }
    if pairs.iter().all(|&(_, v)| v.abs() <= EXACT_ZERO_FLOOR) {
        return Ok(RateOutcome::ExactZero);
    }
    for &(e, v) in pairs {
        if !(e > 0.0) || !v.is_finite() || v < 0.0 {
            return Err(Error::DegenerateFit {
                detail: format!("unusable pair (eps={e}, value={v})"),
            });
        }
        if v == 0.0 {
            return Err(Error::DegenerateFit {
                detail: format!("value is zero at eps={e} but the ladder is not exactly zero"),
            });
        }
    }
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|&(e, _)| e.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|&(_, v)| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..pairs.len() {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit { detail: "all eps values coincide".into() });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut rss = 0.0;
    for i in 0..pairs.len() {
        let r = ys[i] - (intercept + slope * xs[i]);
        rss += r * r;
    }
    Ok(RateOutcome::Fit(RateFit {
        slope,
        intercept,
        residual_rms: (rss / n).sqrt(),
        pairs: pairs.to_vec(),
    }))
}
