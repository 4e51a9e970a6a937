//! The range equation: on the non-resonant sites the linearized operator is
//! the diagonal divisor −k·ω + |n_k|² + ρ, so the equation is solved by the
//! Picard iteration
//!
//! ```text
//!     u ← G(u),   G(u)(k) = −s · |n_k|² · [ε⁻¹S(ε(v+u))]^(k) / divisor(k),
//! ```
//!
//! where s is the Laplacian sign convention. Small divisors are the only
//! obstruction, so the module also ships an explicit audit of every divisor
//! inside the truncation ball.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{
    ball_modes, project, weighted_norm, Basis, Mode, NormParams, Part, SpectralVector,
};
use crate::nonlinear::{eval_s_rescaled, HamiltonianSpec};
use crate::resonance::{enumerate_resonant, ResonantSet};

/// Sign of the multiplier the Laplacian contributes in front of the
/// nonlinearity. Direct Fourier computation of Δ gives −|n_k|²
/// (`Physical`); the companion analytical formulas carry +|n_k|² (`Paper`).
/// Both chains are internally consistent; shipping both keeps the discrepancy
/// testable instead of hidden.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignConvention {
    Physical,
    Paper,
}

impl SignConvention {
    /// The s in s·|n_k|².
    pub fn delta_sign(self) -> f64 {
        match self {
            SignConvention::Physical => -1.0,
            SignConvention::Paper => 1.0,
        }
    }
}

/// −k·ω + |n_k|² + ρ.
pub fn divisor(basis: &Basis, k: &[i64], omega: &[f64]) -> f64 {
    let dot: f64 = k.iter().zip(omega).map(|(&kj, &wj)| kj as f64 * wj).sum();
    -dot + basis.embed_norm_sq(k) as f64 + basis.rho()
}

/// Every divisor inside the scan ball, against the constants of the
/// inversion bound: threshold K_1 = max_j(|n_j|² + 2|ρ|)/c_1, floor
/// ½γK_1^{−τ}, and K/γ with K = max(2Σ|n_j|²/c_1, 2K_1^{τ+2}Σ|n_j|²).
#[derive(Clone, Debug, Serialize)]
pub struct DivisorAudit {
    pub min_abs_divisor: f64,
    /// Site attaining the minimum.
    pub argmin_k: Mode,
    /// sup over non-resonant |k| ≤ K_t of |n_k|²/|divisor|.
    pub sup_multiplier: f64,
    pub k1_threshold: f64,
    pub bound_k_over_gamma: f64,
    /// ½γK_1^{−τ}: divisors below this are flagged, not failed.
    pub floor: f64,
    pub below_floor: usize,
    /// No zero divisor and sup_multiplier ≤ K/γ.
    pub passes: bool,
}

pub fn audit_divisors(
    basis: &Basis,
    omega: &[f64],
    gamma: f64,
    tau: f64,
    k_t: i64,
) -> Result<DivisorAudit> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidParam(
            "divisor audit needs a positive certified gamma".into(),
        ));
    }
    if omega.len() != basis.b() {
        return Err(Error::DimensionMismatch("omega length must equal b".into()));
    }
    let res = enumerate_resonant(basis)?;
    let c1 = basis.gram_min_eigen();
    let rho = basis.rho();
    let sum_nsq: f64 = (0..basis.b()).map(|j| basis.mode_norm_sq(j) as f64).sum();
    let max_term = (0..basis.b())
        .map(|j| basis.mode_norm_sq(j) as f64 + 2.0 * rho.abs())
        .fold(0.0, f64::max);
    let k1_threshold = max_term / c1;
    let k_const = (2.0 * sum_nsq / c1).max(2.0 * k1_threshold.powf(tau + 2.0) * sum_nsq);
    let bound_k_over_gamma = k_const / gamma;
    let floor = 0.5 * gamma * k1_threshold.powf(-tau);

    let mut min_abs = f64::INFINITY;
    let mut argmin: Mode = vec![0; basis.b()];
    let mut sup_mult: f64 = 0.0;
    let mut below_floor = 0;
    for k in ball_modes(basis.b(), k_t) {
        if res.contains(&k) {
            continue;
        }
        let d = divisor(basis, &k, omega);
        if d == 0.0 {
            return Err(Error::ZeroDivisor { k });
        }
        let ad = d.abs();
        if ad < min_abs {
            min_abs = ad;
            argmin = k.clone();
        }
        if ad < floor {
            below_floor += 1;
        }
        let mult = basis.embed_norm_sq(&k) as f64 / ad;
        sup_mult = sup_mult.max(mult);
    }
    let passes = sup_mult <= bound_k_over_gamma;
    Ok(DivisorAudit {
        min_abs_divisor: min_abs,
        argmin_k: argmin,
        sup_multiplier: sup_mult,
        k1_threshold,
        bound_k_over_gamma,
        floor,
        below_floor,
        passes,
    })
}

#[derive(Clone, Debug)]
pub struct RangeSolution {
    /// Fixed point; supported off the resonant set, real coefficients when v
    /// has real coefficients.
    pub u: SpectralVector,
    pub iterations: usize,
    /// Worst observed step-to-step contraction factor.
    pub contraction_estimate: f64,
    /// ‖u − G(u)‖ at the returned point.
    pub fp_residual: f64,
}

struct RangeOp<'a> {
    basis: &'a Basis,
    res: &'a ResonantSet,
    v: &'a SpectralVector,
    h: &'a HamiltonianSpec,
    eps: f64,
    sign: f64,
    k_t: i64,
    /// Non-resonant sites of the ball with their divisors.
    sites: Vec<(Mode, i64, f64)>,
    real_input: bool,
}

impl<'a> RangeOp<'a> {
    #[allow(clippy::too_many_arguments)]
    fn new(
        basis: &'a Basis,
        res: &'a ResonantSet,
        v: &'a SpectralVector,
        omega: &[f64],
        eps: f64,
        h: &'a HamiltonianSpec,
        sign: SignConvention,
        k_t: i64,
    ) -> Result<Self> {
        let mut sites = Vec::new();
        for k in ball_modes(basis.b(), k_t) {
            if res.contains(&k) {
                continue;
            }
            let d = divisor(basis, &k, omega);
            if d == 0.0 {
                return Err(Error::ZeroDivisor { k });
            }
            let nsq = basis.embed_norm_sq(&k);
            sites.push((k, nsq, d));
        }
        Ok(Self {
            basis,
            res,
            v,
            h,
            eps,
            sign: sign.delta_sign(),
            k_t,
            sites,
            real_input: v.max_abs_imag() == 0.0,
        })
    }

    fn apply(&self, u: &SpectralVector) -> Result<SpectralVector> {
        let w = self.v.add(u)?;
        let s = eval_s_rescaled(&w, self.h, self.eps, 1, self.k_t)?;
        let mut g = SpectralVector::zero(self.basis.b(), self.k_t)?;
        for (k, nsq, d) in &self.sites {
            let sv = s.get(k);
            if sv.re != 0.0 || sv.im != 0.0 {
                g.set(k, sv * (-self.sign * *nsq as f64 / d))?;
            }
        }
        // Exact invariants of the iteration, checked every application: the
        // output never touches the kernel, and real data stays real.
        if self.real_input && g.max_abs_imag() != 0.0 {
            return Err(Error::Verification(
                "range iterate grew an imaginary part from real data".into(),
            ));
        }
        debug_assert_eq!(project(&g, self.res, Part::Q).support_len(), 0);
        Ok(g)
    }
}

/// Iterate u ← G(u) from u = 0 until the step shrinks below `tol`, then
/// confirm ‖u − G(u)‖ ≤ tol with one extra application. A step ratio ≥ 1
/// while still far from the fixed point aborts as divergence.
#[allow(clippy::too_many_arguments)]
pub fn solve_range(
    basis: &Basis,
    v: &SpectralVector,
    omega: &[f64],
    eps: f64,
    h: &HamiltonianSpec,
    sign: SignConvention,
    k_t: i64,
    norm: &NormParams,
    tol: f64,
    max_iter: usize,
) -> Result<RangeSolution> {
    if omega.len() != basis.b() {
        return Err(Error::DimensionMismatch("omega length must equal b".into()));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidParam("eps must be positive".into()));
    }
    let res = enumerate_resonant(basis)?;
    if project(v, &res, Part::P).support_len() != 0 {
        return Err(Error::InvalidParam(
            "kernel vector v must be supported on the resonant set".into(),
        ));
    }
    let op = RangeOp::new(basis, &res, v, omega, eps, h, sign, k_t)?;

    let mut u = SpectralVector::zero(basis.b(), k_t)?;
    let mut prev_delta: Option<f64> = None;
    let mut worst_factor: f64 = 0.0;
    for iter in 1..=max_iter {
        let g = op.apply(&u)?;
        let dn = weighted_norm(&g.sub(&u)?, norm);
        if let Some(pd) = prev_delta {
            if pd > 0.0 {
                let f = dn / pd;
                worst_factor = worst_factor.max(f);
                if f >= 1.0 && dn > 10.0 * tol {
                    return Err(Error::Diverged {
                        stage: "range",
                        detail: format!("step ratio {f:.3} at iteration {iter} (step {dn:e})"),
                    });
                }
            }
        }
        u = g;
        if dn <= tol {
            let g2 = op.apply(&u)?;
            let fp = weighted_norm(&g2.sub(&u)?, norm);
            if fp <= tol {
                return Ok(RangeSolution {
                    u,
                    iterations: iter,
                    contraction_estimate: worst_factor,
                    fp_residual: fp,
                });
            }
            prev_delta = Some(fp);
            u = g2;
            continue;
        }
        prev_delta = Some(dn);
    }
    Err(Error::NotConverged {
        stage: "range",
        iterations: max_iter,
        last_delta: prev_delta.unwrap_or(f64::INFINITY),
    })
}

/// Central finite-difference norms ‖∂u/∂ω_j‖ and ‖∂u/∂a_j‖ at a converged
/// base point, each re-solving the range equation at the displaced input.
#[derive(Clone, Debug, Serialize)]
pub struct RangeSensitivity {
    pub d_omega: Vec<f64>,
    pub d_a: Vec<f64>,
    pub step: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn range_sensitivity(
    basis: &Basis,
    v: &SpectralVector,
    omega: &[f64],
    eps: f64,
    h: &HamiltonianSpec,
    sign: SignConvention,
    k_t: i64,
    norm: &NormParams,
    tol: f64,
    max_iter: usize,
    step: Option<f64>,
) -> Result<RangeSensitivity> {
    let b = basis.b();
    let hstep = step.unwrap_or(eps.powi(3));
    let mut d_omega = Vec::with_capacity(b);
    for j in 0..b {
        let mut wp = omega.to_vec();
        let mut wm = omega.to_vec();
        wp[j] += hstep;
        wm[j] -= hstep;
        let up = solve_range(basis, v, &wp, eps, h, sign, k_t, norm, tol, max_iter)?;
        let um = solve_range(basis, v, &wm, eps, h, sign, k_t, norm, tol, max_iter)?;
        d_omega.push(weighted_norm(&up.u.sub(&um.u)?, norm) / (2.0 * hstep));
    }
    let mut d_a = Vec::with_capacity(b);
    for j in 0..b {
        let mut ej = vec![0i64; b];
        ej[j] = 1;
        let base = v.get(&ej);
        let mut vp = v.clone();
        let mut vm = v.clone();
        vp.set(&ej, base + num_complex::Complex64::new(hstep, 0.0))?;
        vm.set(&ej, base - num_complex::Complex64::new(hstep, 0.0))?;
        let up = solve_range(basis, &vp, omega, eps, h, sign, k_t, norm, tol, max_iter)?;
        let um = solve_range(basis, &vm, omega, eps, h, sign, k_t, norm, tol, max_iter)?;
        d_a.push(weighted_norm(&up.u.sub(&um.u)?, norm) / (2.0 * hstep));
    }
    Ok(RangeSensitivity {
        d_omega,
        d_a,
        step: hstep,
    })
}
