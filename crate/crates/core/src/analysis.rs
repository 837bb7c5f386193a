//! Signal-to-noise ratios of both layouts and the bypass enhancement multiplier.
//!
//! Everything here takes the through-splitter budget as the reference: in the
//! bypass layout the signal count and the fiber-1 terms (d1, d4) grow by the
//! splitting ratio while d0, d2 and d3 stay put.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseBudget;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrReport {
    pub snr_through: f64,
    pub snr_bypass: f64,
    pub k: f64,
    /// `(d1 + d4) / (d0 + d2 + d3)`; infinite when only fiber-1 noise is present.
    pub ratio_r: f64,
}

fn check_ratio(n: u32) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidQuantity {
            what: "splitting ratio",
            value: n as f64,
        });
    }
    Ok(n as f64)
}

/// `Q / (d0 + d1 + d2 + d3 + d4)`.
pub fn snr_through(b: &NoiseBudget) -> Result<f64> {
    let noise: f64 = b.terms().iter().sum();
    if !(noise > 0.0) {
        return Err(Error::Degenerate("total noise is zero"));
    }
    Ok(b.q_signal.hz() / noise)
}

/// `N·Q / (d0 + N·d1 + d2 + d3 + N·d4)` from the through-splitter budget.
pub fn snr_bypass(b: &NoiseBudget, n: u32) -> Result<f64> {
    let n = check_ratio(n)?;
    let [d0, d1, d2, d3, d4] = b.terms();
    let noise = d0 + n * d1 + d2 + d3 + n * d4;
    if !(noise > 0.0) {
        return Err(Error::Degenerate("total noise is zero"));
    }
    Ok(n * b.q_signal.hz() / noise)
}

/// `N·Σd / (d0 + N·d1 + d2 + d3 + N·d4)`, the bypass SNR over the through SNR.
pub fn multiplier_k(b: &NoiseBudget, n: u32) -> Result<f64> {
    let nf = check_ratio(n)?;
    let [d0, d1, d2, d3, d4] = b.terms();
    let fiber1 = d1 + d4;
    let rest = d0 + d2 + d3;
    if !(fiber1 + rest > 0.0) {
        return Err(Error::Degenerate("total noise is zero"));
    }
    // the two limits are returned exactly rather than through rounding
    if fiber1 == 0.0 {
        return Ok(nf);
    }
    if rest == 0.0 {
        return Ok(1.0);
    }
    Ok(nf * (fiber1 + rest) / (nf * fiber1 + rest))
}

/// `(d1 + d4) / (d0 + d2 + d3)`.
pub fn noise_ratio(b: &NoiseBudget) -> Result<f64> {
    let [d0, d1, d2, d3, d4] = b.terms();
    let fiber1 = d1 + d4;
    let rest = d0 + d2 + d3;
    if rest > 0.0 {
        Ok(fiber1 / rest)
    } else if fiber1 > 0.0 {
        Ok(f64::INFINITY)
    } else {
        Err(Error::Degenerate("total noise is zero"))
    }
}

/// `K = N(1 + r)/(1 + N·r)`.
pub fn k_from_ratio(r: f64, n: u32) -> Result<f64> {
    let nf = check_ratio(n)?;
    if !(r >= 0.0) {
        return Err(Error::InvalidQuantity {
            what: "noise ratio r",
            value: r,
        });
    }
    if r.is_infinite() {
        return Ok(1.0);
    }
    Ok(nf * (1.0 + r) / (1.0 + nf * r))
}

/// Inverse of [`k_from_ratio`]: `r = (N − K)/(N·(K − 1))`.
///
/// Only `1 < K ≤ N` is reachable by the model; anything else is rejected.
pub fn calibrate_ratio(k: f64, n: u32) -> Result<f64> {
    let nf = check_ratio(n)?;
    if !(k > 1.0 && k <= nf) {
        return Err(Error::OutOfModel { k, n });
    }
    Ok((nf - k) / (nf * (k - 1.0)))
}

pub fn snr_report(b: &NoiseBudget, n: u32) -> Result<SnrReport> {
    Ok(SnrReport {
        snr_through: snr_through(b)?,
        snr_bypass: snr_bypass(b, n)?,
        k: multiplier_k(b, n)?,
        ratio_r: noise_ratio(b)?,
    })
}
