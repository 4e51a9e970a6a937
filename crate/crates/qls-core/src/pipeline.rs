//! Full solve orchestration: hypothesis gatekeeping, the outer alternation
//! of range, frequency, and amplitude solves, solution reconstruction, and
//! every desk-scale verification (persistence checks, equation residual,
//! frequency-order tables, gauge cross-checks, lossless export).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bifurcation::{build_a, solve_qi, solve_qii, BuildMode, MatrixA};
use crate::diophantine::{best_gamma, gauge_shift, DiophantineCert, GaugeShift};
use crate::error::{Error, Result};
use crate::lattice::{
    project, weighted_norm, Basis, Mode, NormParams, Part, SpectralVector,
};
use crate::nonlinear::{eval_s, eval_s_rescaled, HamiltonianSpec};
use crate::range::{audit_divisors, divisor, solve_range, DivisorAudit, SignConvention};
use crate::resonance::{classify_supports, enumerate_resonant, geometric_flags, GeometricFlags};

#[derive(Clone, Debug)]
pub struct SolveConfig {
    pub basis: Basis,
    pub hamiltonian: HamiltonianSpec,
    pub norm: NormParams,
    pub eps: f64,
    /// Rescaled unit amplitudes, one per basis vector, each in [1,2]. The
    /// published amplitudes are eps·a.
    pub a: Vec<f64>,
    pub tau: f64,
    pub gamma_floor: f64,
    pub m_max: u64,
    /// Truncation radius; None picks twice the resonant support, at least 8.
    pub k_t: Option<i64>,
    pub range_tol: f64,
    pub newton_tol: f64,
    pub outer_tol: f64,
    pub sign: SignConvention,
    pub seed: u64,
    pub kappa: f64,
    pub range_max_iter: usize,
    pub newton_max_iter: usize,
    pub outer_max_iter: usize,
    /// Skip the certificate gate (checks are still recorded).
    pub waive_hypotheses: bool,
}

impl SolveConfig {
    pub fn new(basis: Basis, eps: f64, a: Vec<f64>) -> Self {
        let b = basis.b();
        SolveConfig {
            basis,
            hamiltonian: HamiltonianSpec::quartic(),
            norm: NormParams::defaults_for(b),
            eps,
            a,
            tau: 2.0,
            gamma_floor: 1e-6,
            m_max: 1000,
            k_t: None,
            range_tol: 1e-12,
            newton_tol: 1e-11,
            outer_tol: 1e-9,
            sign: SignConvention::Physical,
            seed: 1,
            kappa: 0.5,
            range_max_iter: 200,
            newton_max_iter: 25,
            outer_max_iter: 25,
            waive_hypotheses: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let b = self.basis.b();
        if self.a.len() != b {
            return Err(Error::DimensionMismatch(
                "amplitude vector length must equal b".into(),
            ));
        }
        for (j, &aj) in self.a.iter().enumerate() {
            if !(1.0..=2.0).contains(&aj) {
                return Err(Error::InvalidParam(format!(
                    "a_{} = {} outside [1,2]",
                    j + 1,
                    aj
                )));
            }
        }
        if !(self.eps.is_finite() && self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidParam("eps must lie in (0,1)".into()));
        }
        for (name, v) in [
            ("range_tol", self.range_tol),
            ("newton_tol", self.newton_tol),
            ("outer_tol", self.outer_tol),
            ("kappa", self.kappa),
            ("gamma_floor", self.gamma_floor),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParam(format!("{name} must be positive")));
            }
        }
        self.norm.validate_for_b(b)?;
        Ok(())
    }

    pub fn resolved_k_t(&self) -> Result<i64> {
        if let Some(k) = self.k_t {
            if k < 1 {
                return Err(Error::InvalidParam("k_t must be at least 1".into()));
            }
            return Ok(k);
        }
        let res = enumerate_resonant(&self.basis)?;
        Ok((2 * euclid_radius(res.all())).max(8))
    }
}

/// Everything checked before any solve runs, embedded in every report.
#[derive(Clone, Debug, Serialize)]
pub struct HypothesisReport {
    pub cert: DiophantineCert,
    pub gamma_floor: f64,
    pub cert_ok: bool,
    pub flags: GeometricFlags,
    pub k1_count: usize,
    pub k2_modes: Vec<Mode>,
    pub has_triple_form: bool,
    /// Divisor audit at the unperturbed frequency; absent when the
    /// certificate failed and the gate was waived.
    pub divisor_audit: Option<DivisorAudit>,
}

pub fn check_hypotheses(config: &SolveConfig) -> Result<HypothesisReport> {
    let basis = &config.basis;
    let cert = best_gamma(basis.rho(), config.tau, config.m_max)?;
    let cert_ok = cert.gamma_best >= config.gamma_floor;
    if !cert_ok && !config.waive_hypotheses {
        return Err(Error::HypothesisRefused(format!(
            "certified gamma {} below the configured floor {}",
            cert.gamma_best, config.gamma_floor
        )));
    }
    let flags = geometric_flags(basis);
    let res = enumerate_resonant(basis)?;
    classify_supports(&res, &flags)?;
    let divisor_audit = if cert.gamma_best > 0.0 {
        Some(audit_divisors(
            basis,
            &basis.omega0(),
            cert.gamma_best,
            config.tau,
            config.resolved_k_t()?,
        )?)
    } else {
        None
    };
    Ok(HypothesisReport {
        cert,
        gamma_floor: config.gamma_floor,
        cert_ok,
        flags,
        k1_count: res.k1().len(),
        k2_modes: res.k2().to_vec(),
        has_triple_form: res.has_triple_form(),
        divisor_audit,
    })
}

/// The three persistence checks, evaluated and stored, never gating.
#[derive(Clone, Debug, Serialize)]
pub struct PersistenceReport {
    pub anchor_max_error: f64,
    pub anchors_exact: bool,
    pub off_resonant_mass: f64,
    pub mass_bound: f64,
    pub mass_ok: bool,
    pub freq_distance: f64,
    pub freq_bound: f64,
    pub freq_ok: bool,
    pub kappa: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Diagnostics {
    pub k_t: i64,
    pub outer_iterations: usize,
    pub outer_delta: f64,
    pub range_iterations: usize,
    pub range_contraction: f64,
    pub range_fp_residual: f64,
    pub qi_iterations: usize,
    pub qi_residual: f64,
    pub qii_iterations: usize,
    pub qii_det: Option<f64>,
    pub qii_cutoff: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub omega: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Amplitudes on the nontrivial resonant modes, rescaled units.
    pub a_res: Vec<(Mode, f64)>,
    pub u_range: SpectralVector,
    /// ε(v + u): the solution's coefficients in original variables.
    pub full_field: SpectralVector,
    pub residual_norm: f64,
    pub persistence: PersistenceReport,
    pub diagnostics: Diagnostics,
    pub hypothesis: HypothesisReport,
}

/// Smallest ball radius containing every listed mode.
fn euclid_radius(modes: &[Mode]) -> i64 {
    modes
        .iter()
        .map(|k| {
            let sq: i64 = k.iter().map(|v| v * v).sum();
            (sq as f64).sqrt().ceil() as i64
        })
        .max()
        .unwrap_or(1)
        .max(1)
}

fn build_kernel(
    b: usize,
    radius: i64,
    a: &[f64],
    modes: &[Mode],
    x: &[f64],
) -> Result<SpectralVector> {
    let mut v = SpectralVector::zero(b, radius)?;
    for (j, &aj) in a.iter().enumerate() {
        let mut ej = vec![0i64; b];
        ej[j] = 1;
        v.set(&ej, num_complex::Complex64::new(aj, 0.0))?;
    }
    for (k, &xk) in modes.iter().zip(x) {
        v.set(k, num_complex::Complex64::new(xk, 0.0))?;
    }
    Ok(v)
}

fn linf_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Amplitude-system residual in the matrix normalization: row k carries
/// [s·(Σ_j k_jσ_j)·x_k + |n_k|²Φ_k(x)]/2 with Φ the ε³-rescaled
/// nonlinearity, so its linearization at 0 is exactly A(a)·x plus the
/// higher-order remainder.
#[allow(clippy::too_many_arguments)]
fn qii_residual(
    basis: &Basis,
    a_mat: &MatrixA,
    a: &[f64],
    x: &[f64],
    sigma: &[f64],
    omega: &[f64],
    eps: f64,
    h: &HamiltonianSpec,
    sign: SignConvention,
    k_t: i64,
    kernel_radius: i64,
    norm: &NormParams,
    range_tol: f64,
    range_max_iter: usize,
) -> Result<Vec<f64>> {
    let kernel = build_kernel(basis.b(), kernel_radius, a, &a_mat.modes, x)?;
    let u = solve_range(
        basis, &kernel, omega, eps, h, sign, k_t, norm, range_tol, range_max_iter,
    )?
    .u;
    let w = kernel.add(&u)?;
    let phi = eval_s_rescaled(&w, h, eps, 3, k_t)?;
    let s = sign.delta_sign();
    let mut f = Vec::with_capacity(a_mat.dim);
    for (i, k) in a_mat.modes.iter().enumerate() {
        let sig_k: f64 = k.iter().zip(sigma).map(|(&kj, &sj)| kj as f64 * sj).sum();
        let nsq = basis.embed_norm_sq(k) as f64;
        f.push((s * sig_k * x[i] + nsq * phi.get(k).re) / 2.0);
    }
    Ok(f)
}

pub fn solve_full(config: &SolveConfig) -> Result<SolveResult> {
    config.validate()?;
    let hypothesis = check_hypotheses(config)?;
    let basis = &config.basis;
    let b = basis.b();
    let eps = config.eps;
    let h = &config.hamiltonian;
    let sign = config.sign;
    let norm = &config.norm;
    let k_t = config.resolved_k_t()?;
    let res = enumerate_resonant(basis)?;
    let a_mat = if res.k2().is_empty() {
        None
    } else {
        Some(build_a(basis, &res, BuildMode::Oracle)?)
    };
    let kernel_radius = euclid_radius(res.all());

    let dim = a_mat.as_ref().map_or(0, |m| m.dim);
    let mut x = vec![0.0f64; dim];
    let mut omega = basis.omega0();
    let mut sigma = vec![0.0f64; b];
    let mut u = SpectralVector::zero(b, k_t)?;
    let mut diag = Diagnostics {
        k_t,
        outer_iterations: 0,
        outer_delta: f64::INFINITY,
        range_iterations: 0,
        range_contraction: 0.0,
        range_fp_residual: 0.0,
        qi_iterations: 0,
        qi_residual: 0.0,
        qii_iterations: 0,
        qii_det: None,
        qii_cutoff: None,
    };
    let mut converged = false;

    for outer in 1..=config.outer_max_iter {
        let kernel = build_kernel(
            b,
            kernel_radius,
            &config.a,
            a_mat.as_ref().map_or(&[][..], |m| &m.modes),
            &x,
        )?;
        let mut oracle = |w: &[f64]| {
            solve_range(
                basis,
                &kernel,
                w,
                eps,
                h,
                sign,
                k_t,
                norm,
                config.range_tol,
                config.range_max_iter,
            )
            .map(|s| s.u)
        };
        let qi = solve_qi(
            basis,
            &kernel,
            eps,
            h,
            sign,
            k_t,
            &mut oracle,
            config.newton_tol,
            config.newton_max_iter,
        )?;
        let rsol = solve_range(
            basis,
            &kernel,
            &qi.omega,
            eps,
            h,
            sign,
            k_t,
            norm,
            config.range_tol,
            config.range_max_iter,
        )?;

        let mut new_x = x.clone();
        if let Some(am) = &a_mat {
            let mut f_oracle = |xc: &[f64]| {
                qii_residual(
                    basis,
                    am,
                    &config.a,
                    xc,
                    &qi.sigma,
                    &qi.omega,
                    eps,
                    h,
                    sign,
                    k_t,
                    kernel_radius,
                    norm,
                    config.range_tol,
                    config.range_max_iter,
                )
            };
            let q2 = solve_qii(
                am,
                &config.a,
                eps,
                &mut f_oracle,
                config.newton_tol,
                config.newton_max_iter,
            )?;
            new_x = q2.x;
            diag.qii_iterations = q2.iterations;
            diag.qii_det = Some(q2.det_at_a);
            diag.qii_cutoff = Some(q2.cutoff);
        }

        let delta = linf_diff(&omega, &qi.omega)
            .max(linf_diff(&x, &new_x))
            .max(weighted_norm(&rsol.u.sub(&u)?, norm));
        omega = qi.omega;
        sigma = qi.sigma;
        u = rsol.u;
        x = new_x;
        diag.outer_iterations = outer;
        diag.outer_delta = delta;
        diag.range_iterations = rsol.iterations;
        diag.range_contraction = rsol.contraction_estimate;
        diag.range_fp_residual = rsol.fp_residual;
        diag.qi_iterations = qi.iterations;
        diag.qi_residual = qi.g_residual;
        if delta <= config.outer_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NotConverged {
            stage: "outer alternation",
            iterations: config.outer_max_iter,
            last_delta: diag.outer_delta,
        });
    }

    let kernel = build_kernel(
        b,
        kernel_radius,
        &config.a,
        a_mat.as_ref().map_or(&[][..], |m| &m.modes),
        &x,
    )?;
    let full_field = kernel.add(&u)?.scaled(num_complex::Complex64::new(eps, 0.0));
    let residual_norm = pde_residual(&full_field, &omega, basis, h, sign, norm, 2 * k_t)?;

    let mut anchor_max_error = 0.0f64;
    for (j, &aj) in config.a.iter().enumerate() {
        let mut ej = vec![0i64; b];
        ej[j] = 1;
        let c = full_field.get(&ej);
        anchor_max_error = anchor_max_error
            .max((c.re - eps * aj).abs())
            .max(c.im.abs());
    }
    let off_resonant_mass = weighted_norm(&project(&full_field, &res, Part::P), norm);
    let amp_norm = eps * config.a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mass_bound = amp_norm.powf(1.0 + config.kappa);
    let omega0 = basis.omega0();
    let freq_distance = omega
        .iter()
        .zip(&omega0)
        .map(|(w, w0)| (w - w0) * (w - w0))
        .sum::<f64>()
        .sqrt();
    let freq_bound = amp_norm * amp_norm;
    let persistence = PersistenceReport {
        anchor_max_error,
        anchors_exact: anchor_max_error == 0.0,
        off_resonant_mass,
        mass_bound,
        mass_ok: off_resonant_mass < mass_bound,
        freq_distance,
        freq_bound,
        freq_ok: freq_distance < freq_bound,
        kappa: config.kappa,
    };

    let a_res = a_mat
        .as_ref()
        .map(|m| m.modes.iter().cloned().zip(x.iter().copied()).collect())
        .unwrap_or_default();

    Ok(SolveResult {
        omega,
        sigma,
        a_res,
        u_range: u,
        full_field,
        residual_norm,
        persistence,
        diagnostics: diag,
        hypothesis,
    })
}

/// Weighted norm of (−k·ω+|n_k|²+ρ)û(k) + s|n_k|²Ŝ(û)(k) over |k| ≤ k_ext.
pub fn pde_residual(
    field: &SpectralVector,
    omega: &[f64],
    basis: &Basis,
    h: &HamiltonianSpec,
    sign: SignConvention,
    norm: &NormParams,
    k_ext: i64,
) -> Result<f64> {
    if omega.len() != basis.b() {
        return Err(Error::DimensionMismatch("omega length must equal b".into()));
    }
    let s_field = eval_s(field, h, k_ext)?;
    let s = sign.delta_sign();
    let mut r = SpectralVector::zero(basis.b(), k_ext)?;
    for k in crate::lattice::ball_modes(basis.b(), k_ext) {
        let d = divisor(basis, &k, omega);
        let nsq = basis.embed_norm_sq(&k) as f64;
        let val = field.get(&k) * d + s_field.get(&k) * (s * nsq);
        if val.re != 0.0 || val.im != 0.0 {
            r.set(&k, val)?;
        }
    }
    Ok(weighted_norm(&r, norm))
}

#[derive(Clone, Debug, Serialize)]
pub struct FreqCheckRow {
    pub eps: f64,
    /// |ω_j − predicted_j| per j, predicted = |n_j|²+ρ+s·ε²·2|n_j|²(2Σa²−a_j²).
    pub delta: Vec<f64>,
    /// delta(previous ε) / delta(this ε), absent on the first row.
    pub ratio: Option<Vec<f64>>,
}

/// Remainder-order audit: solve at each ε of a decreasing geometric list and
/// compare against the leading-order frequency formula.
pub fn frequency_order_check(config: &SolveConfig, eps_list: &[f64]) -> Result<Vec<FreqCheckRow>> {
    if eps_list.len() < 3 {
        return Err(Error::InvalidParam(
            "need at least three eps values".into(),
        ));
    }
    for w in eps_list.windows(2) {
        if !(w[1] > 0.0 && w[1] < w[0]) {
            return Err(Error::InvalidParam(
                "eps list must be strictly decreasing and positive".into(),
            ));
        }
    }
    let q0 = eps_list[1] / eps_list[0];
    for w in eps_list.windows(2) {
        if ((w[1] / w[0]) - q0).abs() > 1e-9 * q0 {
            return Err(Error::InvalidParam("eps list must be geometric".into()));
        }
    }
    let basis = &config.basis;
    let b = basis.b();
    let s = config.sign.delta_sign();
    let sum_sq: f64 = config.a.iter().map(|v| v * v).sum();
    let mut rows: Vec<FreqCheckRow> = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let mut cfg = config.clone();
        cfg.eps = eps;
        let sol = solve_full(&cfg)?;
        let delta: Vec<f64> = (0..b)
            .map(|j| {
                let nsq = basis.mode_norm_sq(j) as f64;
                let lead = s * eps * eps * 2.0 * nsq * (2.0 * sum_sq - config.a[j] * config.a[j]);
                let predicted = nsq + basis.rho() + lead;
                (sol.omega[j] - predicted).abs()
            })
            .collect();
        let ratio = rows.last().map(|prev: &FreqCheckRow| {
            prev.delta
                .iter()
                .zip(&delta)
                .map(|(&p, &c)| if c > 0.0 { p / c } else { f64::INFINITY })
                .collect()
        });
        rows.push(FreqCheckRow { eps, delta, ratio });
    }
    Ok(rows)
}

/// Solve after a gauge shift of ρ, then map the frequencies back. Only valid
/// for gauge-invariant nonlinearities; the shift certificate is returned
/// with the result.
pub fn gauge_solve(config: &SolveConfig, candidates: &[f64]) -> Result<(GaugeShift, SolveResult)> {
    let shift = gauge_shift(
        &config.hamiltonian,
        config.basis.rho(),
        config.tau,
        config.m_max,
        candidates,
        config.gamma_floor,
    )?;
    let mut cfg = config.clone();
    cfg.basis = Basis::new(
        config.basis.vectors().to_vec(),
        config.basis.rho() + shift.rho_prime,
    )?;
    let mut result = solve_full(&cfg)?;
    for w in result.omega.iter_mut() {
        *w -= shift.rho_prime;
    }
    Ok((shift, result))
}

pub const SOLUTION_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SolutionMeta {
    pub schema_version: u32,
    pub b: usize,
    pub d: usize,
    pub basis: Vec<Vec<i64>>,
    pub rho: f64,
    pub eps: f64,
    pub sign: SignConvention,
    pub residual_norm: f64,
}

/// Versioned solution payload: ω and one row [k, n_k, re, im] per nonzero
/// coefficient, k ascending lexicographically.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SolutionFile {
    pub meta: SolutionMeta,
    pub omega: Vec<f64>,
    pub coefficients: Vec<(Vec<i64>, Vec<i64>, f64, f64)>,
}

pub fn solution_file(result: &SolveResult, config: &SolveConfig) -> Result<SolutionFile> {
    let basis = &config.basis;
    let mut coefficients = Vec::new();
    for (k, z) in result.full_field.nonzero() {
        let n_k = basis.embed(&k)?;
        coefficients.push((k, n_k, z.re, z.im));
    }
    Ok(SolutionFile {
        meta: SolutionMeta {
            schema_version: SOLUTION_SCHEMA_VERSION,
            b: basis.b(),
            d: basis.d(),
            basis: basis.vectors().to_vec(),
            rho: basis.rho(),
            eps: config.eps,
            sign: config.sign,
            residual_norm: result.residual_norm,
        },
        omega: result.omega.clone(),
        coefficients,
    })
}

pub fn export_solution(file: &SolutionFile, path: &Path) -> Result<()> {
    let payload = serde_json::to_string_pretty(file)?;
    fs::write(path, payload + "\n")?;
    Ok(())
}

pub fn import_solution(path: &Path) -> Result<SolutionFile> {
    let text = fs::read_to_string(path)?;
    let file: SolutionFile = serde_json::from_str(&text)?;
    if file.meta.schema_version != SOLUTION_SCHEMA_VERSION {
        return Err(Error::InvalidParam(format!(
            "unsupported solution schema version {}",
            file.meta.schema_version
        )));
    }
    Ok(file)
}

/// Rebuild the spectral vector a solution file describes.
pub fn field_from_file(file: &SolutionFile) -> Result<SpectralVector> {
    let modes: Vec<Mode> = file.coefficients.iter().map(|(k, ..)| k.clone()).collect();
    let radius = euclid_radius(&modes);
    let mut v = SpectralVector::zero(file.meta.b, radius)?;
    for (k, _, re, im) in &file.coefficients {
        v.set(k, num_complex::Complex64::new(*re, *im))?;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{rho_default, t1, t2};

    fn searched() -> Basis {
        Basis::new(
            vec![vec![-2, -2, -2], vec![-2, -2, -1], vec![-2, 0, 0]],
            rho_default(),
        )
        .unwrap()
    }

    #[test]
    fn t1_exact_single_mode() {
        let mut config = SolveConfig::new(t1(), 1e-2, vec![1.0]);
        config.k_t = Some(8);
        let sol = solve_full(&config).unwrap();
        assert_eq!(sol.u_range.support_len(), 0);
        let expected = 1.0 + config.basis.rho() - 2.0 * 1e-4;
        assert!((sol.omega[0] - expected).abs() < 1e-14);
        assert!(sol.residual_norm <= 1e-12);
        assert!(sol.persistence.anchors_exact);
        assert_eq!(sol.persistence.off_resonant_mass, 0.0);
        assert!(sol.persistence.mass_ok);
        // |ω − ω0| = 2(εa)² sits at twice the (εa)² budget: recorded, red.
        assert!(!sol.persistence.freq_ok);
        assert!((sol.persistence.freq_distance - 2e-4).abs() < 1e-15);
        let field: Vec<_> = sol.full_field.nonzero();
        assert_eq!(field.len(), 1);
        assert_eq!(field[0].0, vec![1]);
        assert_eq!(field[0].1.re, 1e-2);
        assert_eq!(field[0].1.im, 0.0);

        let again = solve_full(&config).unwrap();
        assert_eq!(sol.omega, again.omega);
        assert_eq!(sol.residual_norm, again.residual_norm);
    }

    #[test]
    fn t2_converged_with_mass_inside_budget() {
        let mut config = SolveConfig::new(t2(), 1e-2, vec![1.0, 1.0]);
        config.k_t = Some(8);
        let sol = solve_full(&config).unwrap();
        assert!(sol.persistence.anchors_exact);
        assert!(sol.persistence.mass_ok);
        assert!(sol.u_range.support_len() > 0);
        assert!(sol.residual_norm < 1e-6);
        assert!(sol.diagnostics.range_contraction <= 0.5);
        assert!(sol.a_res.is_empty());
        let shift = sol.omega[0] - (1.0 + config.basis.rho());
        assert!((shift + 6e-4).abs() < 5e-6, "shift {shift}");
    }

    #[test]
    fn gamma_gate_refuses_then_waiver_proceeds() {
        let basis = Basis::new(vec![vec![1, 0], vec![0, 1]], 0.5).unwrap();
        let mut config = SolveConfig::new(basis, 1e-2, vec![1.0, 1.0]);
        config.k_t = Some(6);
        assert!(matches!(
            solve_full(&config),
            Err(Error::HypothesisRefused(_))
        ));
        config.waive_hypotheses = true;
        let sol = solve_full(&config).unwrap();
        assert!(!sol.hypothesis.cert_ok);
        assert_eq!(sol.hypothesis.cert.gamma_best, 0.0);
        assert!(sol.hypothesis.divisor_audit.is_none());
        assert!(sol.persistence.anchors_exact);
    }

    #[test]
    fn frequency_order_table() {
        let mut config = SolveConfig::new(t1(), 1e-2, vec![1.0]);
        config.k_t = Some(6);
        let rows = frequency_order_check(&config, &[1e-2, 5e-3, 2.5e-3]).unwrap();
        for row in &rows {
            assert!(row.delta[0] < 1e-12, "single mode formula is exact");
        }

        let mut c2 = SolveConfig::new(t2(), 1e-2, vec![1.0, 1.0]);
        c2.k_t = Some(8);
        for sign in [SignConvention::Paper, SignConvention::Physical] {
            c2.sign = sign;
            let rows = frequency_order_check(&c2, &[1e-2, 5e-3, 2.5e-3]).unwrap();
            // Remainder well below the leading 6ε² shift, shrinking with ε.
            for row in &rows {
                for &d in &row.delta {
                    assert!(d < 0.1 * 6.0 * row.eps * row.eps, "delta {d} at {}", row.eps);
                }
            }
            for row in rows.iter().skip(1) {
                for &r in row.ratio.as_ref().unwrap() {
                    assert!(r > 4.0, "remainder ratio {r}");
                }
            }
        }
    }

    #[test]
    fn searched_instance_solves_and_gates() {
        let basis = searched();
        let mut config = SolveConfig::new(basis, 1e-2, vec![1.0, 1.0, 1.0]);
        config.k_t = Some(6);
        let sol = solve_full(&config).unwrap();
        assert_eq!(sol.a_res.len(), 1);
        assert_eq!(sol.a_res[0].0, vec![3, -3, 1]);
        let xk = sol.a_res[0].1;
        assert!(xk.abs() <= config.eps.powf(0.75));
        assert!(xk != 0.0);
        assert!(sol.persistence.anchors_exact);

        // det A(a) = 36a1² − 27a2² + 4a3² vanishes at this a: refused.
        let mut inside = config.clone();
        inside.a = vec![1.0, (40.0f64 / 27.0).sqrt(), 1.0];
        assert!(matches!(
            solve_full(&inside),
            Err(Error::InsideIEps { .. })
        ));
    }

    #[test]
    fn export_import_roundtrip() {
        let mut config = SolveConfig::new(t1(), 1e-2, vec![1.0]);
        config.k_t = Some(6);
        let sol = solve_full(&config).unwrap();
        let file = solution_file(&sol, &config).unwrap();
        assert_eq!(file.coefficients.len(), 1);
        assert_eq!(file.coefficients[0].0, vec![1]);
        assert_eq!(file.coefficients[0].1, vec![1]);
        assert_eq!(file.coefficients[0].2, 1e-2);

        let dir = std::env::temp_dir();
        let path = dir.join("qls_roundtrip_test.json");
        export_solution(&file, &path).unwrap();
        let back = import_solution(&path).unwrap();
        assert_eq!(back, file);
        let path2 = dir.join("qls_roundtrip_test2.json");
        export_solution(&back, &path2).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
        let field = field_from_file(&back).unwrap();
        assert_eq!(field.get(&[1]).re, 1e-2);
        let _ = std::fs::remove_file(&path);
        let _ = std::fs::remove_file(&path2);
    }

    // The resonant correction mode (3,-3,1) has sup norm 3 but Euclid norm
    // sqrt(19); rebuilding the field must size the ball by the latter.
    #[test]
    fn field_rebuild_handles_wide_modes() {
        let mut config = SolveConfig::new(searched(), 1e-2, vec![1.0, 1.0, 1.0]);
        config.k_t = Some(6);
        let sol = solve_full(&config).unwrap();
        let file = solution_file(&sol, &config).unwrap();
        let field = field_from_file(&file).unwrap();
        assert!(field.get(&[3, -3, 1]).norm() > 0.0);
        for (k, z) in sol.full_field.nonzero() {
            assert_eq!(field.get(&k), z);
        }
    }

    #[test]
    fn residual_of_zero_field_is_zero() {
        let b2 = t2();
        let field = SpectralVector::zero(2, 4).unwrap();
        let r = pde_residual(
            &field,
            &b2.omega0(),
            &b2,
            &HamiltonianSpec::quartic(),
            SignConvention::Physical,
            &NormParams::defaults_for(2),
            8,
        )
        .unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn gauge_shift_recovers_unreachable_rho() {
        let basis = Basis::new(vec![vec![1, 0], vec![0, 1]], 0.0).unwrap();
        let mut config = SolveConfig::new(basis, 1e-2, vec![1.0, 1.0]);
        config.k_t = Some(8);
        // Directly, rho = 0 fails the certificate gate.
        assert!(matches!(
            solve_full(&config),
            Err(Error::HypothesisRefused(_))
        ));
        let (shift, sol) = gauge_solve(&config, &[2f64.sqrt()]).unwrap();
        assert_eq!(shift.rho_prime, 2f64.sqrt());
        assert!(sol.persistence.anchors_exact);
        // Shifted-back data must satisfy the original rho = 0 equation.
        let r = pde_residual(
            &sol.full_field,
            &sol.omega,
            &config.basis,
            &config.hamiltonian,
            config.sign,
            &config.norm,
            16,
        )
        .unwrap();
        assert!(r <= 1e-12, "residual against the unshifted equation: {r}");

        // A nonlinearity that is not phase invariant cannot be shifted.
        let mut bad = config.clone();
        bad.hamiltonian = HamiltonianSpec::with_terms(&[(3, 2, 0.1)]).unwrap();
        assert!(matches!(
            gauge_solve(&bad, &[2f64.sqrt()]),
            Err(Error::HypothesisRefused(_))
        ));
    }
}
