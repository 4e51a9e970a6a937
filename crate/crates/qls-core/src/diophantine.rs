//! Finite certificates for the irrationality quality of rho,
//!
//! ```text
//!     gamma_best = min_{1 <= m <= M} m^tau dist(m rho, Z),
//! ```
//!
//! and the gauge shift rho -> rho + rho' that rescues a rho failing the
//! scan. The certificate is honest about its finiteness: gamma_best > 0
//! certifies the condition up to m <= M only, it proves nothing beyond.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinear::HamiltonianSpec;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DiophantineCert {
    pub rho: f64,
    pub tau: f64,
    pub m_max: u64,
    /// min over 1 <= m <= m_max of m^tau dist(m rho, Z). Zero is a valid
    /// negative result (rho rational with small denominator).
    pub gamma_best: f64,
    /// The m attaining the minimum.
    pub worst_m: u64,
}

pub fn best_gamma(rho: f64, tau: f64, m_max: u64) -> Result<DiophantineCert> {
    if !rho.is_finite() {
        return Err(Error::InvalidParam("rho must be finite".into()));
    }
    if !(tau.is_finite() && tau > 1.0) {
        return Err(Error::InvalidParam("tau must exceed 1".into()));
    }
    if m_max < 1 {
        return Err(Error::InvalidParam("scan limit must be at least 1".into()));
    }
    let mut gamma_best = f64::INFINITY;
    let mut worst_m = 1;
    for m in 1..=m_max {
        let x = m as f64 * rho;
        let dist = (x - x.round()).abs();
        let val = (m as f64).powf(tau) * dist;
        if val < gamma_best {
            gamma_best = val;
            worst_m = m;
        }
    }
    Ok(DiophantineCert {
        rho,
        tau,
        m_max,
        gamma_best,
        worst_m,
    })
}

/// Fractional parts of sqrt(2), sqrt(3), (sqrt(5)-1)/2: quadratic irrationals
/// with the best continued-fraction behavior, scaled into (0,1).
pub fn default_shift_candidates() -> Vec<f64> {
    vec![
        2f64.sqrt() - 1.0,
        3f64.sqrt() - 1.0,
        (5f64.sqrt() - 1.0) / 2.0,
    ]
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GaugeShift {
    /// Additive shift; solves run at rho + rho_prime and frequencies map back
    /// by omega_j -> omega_j - rho_prime.
    pub rho_prime: f64,
    /// Certificate for the shifted rho + rho_prime.
    pub cert: DiophantineCert,
}

/// Pick the first shift rho' (zero first, then the candidates) whose shifted
/// rho + rho' scans above `floor`. The substitution u = e^{-i rho' t} u~
/// leaves H invariant only when H depends on u through |u| alone, so a
/// non-gauge-invariant H is refused outright.
pub fn gauge_shift(
    h: &HamiltonianSpec,
    rho: f64,
    tau: f64,
    m_max: u64,
    candidates: &[f64],
    floor: f64,
) -> Result<GaugeShift> {
    if !h.gauge_invariant() {
        return Err(Error::HypothesisRefused(
            "gauge shift needs a gauge-invariant H (every monomial with l = l'); \
             the time substitution changes any other monomial"
                .into(),
        ));
    }
    if !(floor.is_finite() && floor > 0.0) {
        return Err(Error::InvalidParam("certificate floor must be positive".into()));
    }
    let cert0 = best_gamma(rho, tau, m_max)?;
    if cert0.gamma_best > floor {
        return Ok(GaugeShift {
            rho_prime: 0.0,
            cert: cert0,
        });
    }
    for &c in candidates {
        let cert = best_gamma(rho + c, tau, m_max)?;
        if cert.gamma_best > floor {
            return Ok(GaugeShift {
                rho_prime: c,
                cert,
            });
        }
    }
    Err(Error::HypothesisRefused(format!(
        "no shift candidate lifted rho = {rho} above the certificate floor {floor:e} \
         (scanned m <= {m_max})"
    )))
}
