//! The bifurcation equations on the resonant sites: the frequency system on
//! the unit modes (Q-I), the amplitude system on the nontrivial modes (Q-II)
//! whose linear part is the matrix A, and a Monte-Carlo estimate of the
//! parameter set where det A nearly degenerates.
//!
//! A is built two independent ways. The oracle route linearizes the exact
//! cubic convolution around the kernel ansatz and substitutes the
//! leading-order frequency, which cancels the isotropic term and leaves
//! Σ_j k_j|n_j|²a_j² on the diagonal. The closed-form route evaluates the
//! index-set formulas directly. Diagonals must agree exactly; off-diagonal
//! disagreement (a |n_k|² weight) is reported, never patched over.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{Basis, Mode, SpectralVector};
use crate::nonlinear::{cubic_coeff_extract, eval_s_rescaled, HamiltonianSpec};
use crate::poly::{det_poly as determinant_of, IntPoly};
use crate::range::SignConvention;
use crate::resonance::{is_triple_form, ResonantSet};

/// Linear part of the Q-II system: one row and column per nontrivial
/// resonant mode, entries exact homogeneous quadratics in a_1..a_b.
#[derive(Clone, Debug)]
pub struct MatrixA {
    /// Nontrivial resonant modes, lexicographic; row i and column i belong
    /// to modes[i].
    pub modes: Vec<Mode>,
    pub dim: usize,
    pub entries: Vec<Vec<IntPoly>>,
    pub det_poly: IntPoly,
}

impl MatrixA {
    pub fn evaluate(&self, a: &[f64]) -> Result<DMatrix<f64>> {
        if a.len() != self.det_poly.nvars() {
            return Err(Error::DimensionMismatch(
                "amplitude vector length must equal b".into(),
            ));
        }
        Ok(DMatrix::from_fn(self.dim, self.dim, |i, j| {
            self.entries[i][j].eval(a)
        }))
    }

    pub fn det_at(&self, a: &[f64]) -> f64 {
        self.det_poly.eval(a)
    }

    /// Exact symbolic test det ≡ 0.
    pub fn is_degenerate(&self) -> bool {
        self.det_poly.is_zero()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuildMode {
    /// Linearize the cubic convolution and substitute the leading-order
    /// frequency.
    Oracle,
    /// Evaluate the index-set formulas literally.
    ClosedForm,
}

/// 2|n_j|²(2Σ_l a_l² − a_j²) as an exact polynomial.
fn f_poly(basis: &Basis, j: usize) -> IntPoly {
    let b = basis.b();
    let nsq = basis.mode_norm_sq(j);
    let mut p = IntPoly::zero(b);
    for l in 0..b {
        let mut exps = vec![0u16; b];
        exps[l] = 2;
        p.add_term(&exps, 4 * nsq);
    }
    let mut exps = vec![0u16; b];
    exps[j] = 2;
    p.add_term(&exps, -2 * nsq);
    p
}

fn half_exact(p: &IntPoly) -> Result<IntPoly> {
    let mut out = IntPoly::zero(p.nvars());
    for (e, c) in p.terms() {
        if c % 2 != 0 {
            return Err(Error::Verification(
                "frequency substitution left an odd coefficient; the isotropic term did not cancel in halves".into(),
            ));
        }
        out.add_term(e, c / 2);
    }
    Ok(out)
}

/// Diagonal entry for `k0` by the oracle route, without the triple-form
/// gate: extract the cubic's linear coefficient at k0, add the substituted
/// divisor −Σ_j k0_j f_j, and halve.
pub fn oracle_diagonal(basis: &Basis, res: &ResonantSet, k0: &[i64]) -> Result<IntPoly> {
    let cc = cubic_coeff_extract(basis, res, k0)?;
    let l_kk = cc
        .linear
        .iter()
        .find(|(m, _)| m.as_slice() == k0)
        .map(|(_, p)| p.clone())
        .unwrap_or_else(|| IntPoly::zero(basis.b()));
    let mut f_tilde = IntPoly::zero(basis.b());
    for (j, &k0_j) in k0.iter().enumerate().take(basis.b()) {
        f_tilde = f_tilde.add(&f_poly(basis, j).scale(k0_j));
    }
    let nsq_k = basis.embed_norm_sq(k0);
    half_exact(&f_tilde.neg().add(&l_kk.scale(2 * nsq_k)))
}

/// Off-diagonal entry (k row, k′ column) from the index-set formulas:
/// 2Σ a_j a_l over ordered pairs with k + e_j − e_l = k′, plus Σ a_j a_l
/// over ordered pairs with e_j + e_l − k = k′. Carries no |n_k|² weight;
/// that is exactly where the two build routes disagree.
fn closed_offdiag(b: usize, k: &[i64], kp: &[i64]) -> IntPoly {
    let mut p = IntPoly::zero(b);
    for j in 0..b {
        for l in 0..b {
            let mut exps = vec![0u16; b];
            exps[j] += 1;
            exps[l] += 1;
            let shift_matches = (0..b).all(|t| {
                k[t] + i64::from(t == j) - i64::from(t == l) == kp[t]
            });
            if shift_matches {
                p.add_term(&exps, 2);
            }
            let pair_matches = (0..b).all(|t| {
                i64::from(t == j) + i64::from(t == l) - k[t] == kp[t]
            });
            if pair_matches {
                p.add_term(&exps, 1);
            }
        }
    }
    p
}

fn closed_diagonal(basis: &Basis, k: &[i64]) -> IntPoly {
    let b = basis.b();
    let mut p = IntPoly::zero(b);
    for (j, &kj) in k.iter().enumerate() {
        let mut exps = vec![0u16; b];
        exps[j] = 2;
        p.add_term(&exps, kj * basis.mode_norm_sq(j));
    }
    p
}

pub fn build_a(basis: &Basis, res: &ResonantSet, mode: BuildMode) -> Result<MatrixA> {
    if res.b() != basis.b() {
        return Err(Error::DimensionMismatch(
            "resonant set enumerated for a different basis size".into(),
        ));
    }
    let modes: Vec<Mode> = res.k2().to_vec();
    let dim = modes.len();
    if dim == 0 {
        return Ok(MatrixA {
            modes,
            dim,
            entries: Vec::new(),
            det_poly: IntPoly::constant(basis.b(), 1),
        });
    }
    if mode == BuildMode::Oracle && res.has_triple_form() {
        return Err(Error::HypothesisRefused(
            "a resonant mode of the form ±e_i±e_j±e_l carries a constant forcing term; the linear normal form does not apply".into(),
        ));
    }
    let mut entries: Vec<Vec<IntPoly>> = Vec::with_capacity(dim);
    for k in &modes {
        let row = match mode {
            BuildMode::Oracle => {
                let cc = cubic_coeff_extract(basis, res, k)?;
                let nsq_k = basis.embed_norm_sq(k);
                let diag = oracle_diagonal(basis, res, k)?;
                cc.linear
                    .iter()
                    .map(|(m, lpoly)| {
                        if m == k {
                            diag.clone()
                        } else {
                            lpoly.scale(nsq_k)
                        }
                    })
                    .collect()
            }
            BuildMode::ClosedForm => modes
                .iter()
                .map(|kp| {
                    if kp == k {
                        closed_diagonal(basis, k)
                    } else {
                        closed_offdiag(basis.b(), k, kp)
                    }
                })
                .collect(),
        };
        entries.push(row);
    }
    let det = determinant_of(&entries, basis.b());
    Ok(MatrixA {
        modes,
        dim,
        entries,
        det_poly: det,
    })
}

/// Entry-by-entry diff of the two build routes.
#[derive(Clone, Debug)]
pub struct BuildComparison {
    pub diagonals_agree: bool,
    /// (row mode, column mode) of every differing entry.
    pub differing: Vec<(Mode, Mode)>,
}

pub fn compare_builds(basis: &Basis, res: &ResonantSet) -> Result<BuildComparison> {
    let oracle = build_a(basis, res, BuildMode::Oracle)?;
    let closed = build_a(basis, res, BuildMode::ClosedForm)?;
    let mut diagonals_agree = true;
    let mut differing = Vec::new();
    for i in 0..oracle.dim {
        for j in 0..oracle.dim {
            if oracle.entries[i][j] != closed.entries[i][j] {
                if i == j {
                    diagonals_agree = false;
                }
                differing.push((oracle.modes[i].clone(), oracle.modes[j].clone()));
            }
        }
    }
    Ok(BuildComparison {
        diagonals_agree,
        differing,
    })
}

/// Frequency system solution. `sigma` is authoritative; `omega` is derived
/// through ω_j = |n_j|² + ρ − ε²σ_j.
#[derive(Clone, Debug, Serialize)]
pub struct QISolution {
    pub omega: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Leading-order starting point −s·f_j.
    pub sigma0: Vec<f64>,
    /// ε²|σ_j − σ0_j|: frequency correction beyond leading order.
    pub h_norms: Vec<f64>,
    pub iterations: usize,
    pub g_residual: f64,
}

/// Newton on g_j(σ) = σ_j + s|n_j|²Φ_j(σ)/a_j, Φ_j the ε³-rescaled
/// nonlinearity at e_j with the range component re-solved at each ω(σ).
/// Unit amplitudes are read off the kernel vector and must lie in [1,2].
#[allow(clippy::too_many_arguments)]
pub fn solve_qi(
    basis: &Basis,
    kernel: &SpectralVector,
    eps: f64,
    h: &HamiltonianSpec,
    sign: SignConvention,
    k_t: i64,
    range_oracle: &mut dyn FnMut(&[f64]) -> Result<SpectralVector>,
    tol: f64,
    max_iter: usize,
) -> Result<QISolution> {
    let b = basis.b();
    if kernel.max_abs_imag() != 0.0 {
        return Err(Error::InvalidParam(
            "frequency system expects a real kernel vector".into(),
        ));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidParam("eps must be positive".into()));
    }
    let mut amp = vec![0.0; b];
    for (j, aj) in amp.iter_mut().enumerate() {
        let mut ej = vec![0i64; b];
        ej[j] = 1;
        *aj = kernel.get(&ej).re;
        if !(1.0..=2.0).contains(aj) {
            return Err(Error::InvalidParam(format!(
                "unit amplitude a_{} = {} outside [1,2]",
                j + 1,
                aj
            )));
        }
    }
    let s = sign.delta_sign();
    let sum_sq: f64 = amp.iter().map(|x| x * x).sum();
    let sigma0: Vec<f64> = (0..b)
        .map(|j| {
            let f = 2.0 * basis.mode_norm_sq(j) as f64 * (2.0 * sum_sq - amp[j] * amp[j]);
            -s * f
        })
        .collect();

    let eval_g = |sigma: &[f64],
                  oracle: &mut dyn FnMut(&[f64]) -> Result<SpectralVector>|
     -> Result<Vec<f64>> {
        let omega: Vec<f64> = (0..b)
            .map(|j| basis.mode_norm_sq(j) as f64 + basis.rho() - eps * eps * sigma[j])
            .collect();
        let u = oracle(&omega)?;
        let w = kernel.add(&u)?;
        let phi = eval_s_rescaled(&w, h, eps, 3, k_t)?;
        let mut g = vec![0.0; b];
        for (j, gj) in g.iter_mut().enumerate() {
            let mut ej = vec![0i64; b];
            ej[j] = 1;
            *gj = sigma[j] + s * basis.mode_norm_sq(j) as f64 * phi.get(&ej).re / amp[j];
        }
        Ok(g)
    };

    let mut sigma = sigma0.clone();
    let mut iterations = 0usize;
    loop {
        let g0 = eval_g(&sigma, range_oracle)?;
        let res = g0.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if res <= tol {
            let omega: Vec<f64> = (0..b)
                .map(|j| basis.mode_norm_sq(j) as f64 + basis.rho() - eps * eps * sigma[j])
                .collect();
            let h_norms: Vec<f64> = sigma
                .iter()
                .zip(&sigma0)
                .map(|(x, x0)| eps * eps * (x - x0).abs())
                .collect();
            return Ok(QISolution {
                omega,
                sigma,
                sigma0,
                h_norms,
                iterations,
                g_residual: res,
            });
        }
        if iterations >= max_iter {
            return Err(Error::NotConverged {
                stage: "frequency system",
                iterations,
                last_delta: res,
            });
        }
        let mut jac = DMatrix::zeros(b, b);
        for j in 0..b {
            let step = 1e-6 * (1.0 + sigma[j].abs());
            let mut sp = sigma.clone();
            sp[j] += step;
            let gp = eval_g(&sp, range_oracle)?;
            for i in 0..b {
                jac[(i, j)] = (gp[i] - g0[i]) / step;
            }
        }
        let rhs = nalgebra::DVector::from_vec(g0);
        let delta = jac.lu().solve(&rhs).ok_or_else(|| Error::Diverged {
            stage: "frequency system",
            detail: "singular Newton matrix".into(),
        })?;
        for j in 0..b {
            sigma[j] -= delta[j];
        }
        iterations += 1;
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct QIISolution {
    pub modes: Vec<Mode>,
    /// Amplitude at modes[i], rescaled units.
    pub x: Vec<f64>,
    pub iterations: usize,
    pub det_at_a: f64,
    pub cutoff: f64,
    pub residual: f64,
}

/// Quasi-Newton x ← x − A(a)⁻¹F(x) with A evaluated once, exactly, at a.
/// Refused when |det A(a)| ≤ ε^{1/6}; every iterate must stay inside the
/// ε^{3/4} ball. Each linear solve is checked against the cofactor-expansion
/// bound dim!·max|A_{ij}|^{dim−1}·‖F‖_∞/|det A|.
pub fn solve_qii(
    a_mat: &MatrixA,
    a: &[f64],
    eps: f64,
    residual_oracle: &mut dyn FnMut(&[f64]) -> Result<Vec<f64>>,
    tol: f64,
    max_iter: usize,
) -> Result<QIISolution> {
    if !(eps.is_finite() && eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParam("eps must lie in (0,1)".into()));
    }
    let dim = a_mat.dim;
    if dim == 0 {
        return Ok(QIISolution {
            modes: Vec::new(),
            x: Vec::new(),
            iterations: 0,
            det_at_a: 1.0,
            cutoff: eps.powf(1.0 / 6.0),
            residual: 0.0,
        });
    }
    if let Some(k) = a_mat.modes.iter().find(|k| is_triple_form(k)) {
        return Err(Error::HypothesisRefused(format!(
            "resonant mode {k:?} has the form ±e_i±e_j±e_l; the amplitude system is not linearizable around zero"
        )));
    }
    let det = a_mat.det_at(a);
    let cutoff = eps.powf(1.0 / 6.0);
    if det.abs() <= cutoff {
        return Err(Error::InsideIEps { det, cutoff });
    }
    let a_num = a_mat.evaluate(a)?;
    let max_entry = a_num.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let factorial: f64 = (1..=dim).map(|i| i as f64).product();
    let lu = a_num.lu();
    let ball = eps.powf(0.75);

    let mut x = vec![0.0f64; dim];
    let mut iterations = 0usize;
    loop {
        let f = residual_oracle(&x)?;
        if f.len() != dim {
            return Err(Error::DimensionMismatch(
                "residual oracle returned wrong length".into(),
            ));
        }
        let fres = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if fres <= tol {
            return Ok(QIISolution {
                modes: a_mat.modes.clone(),
                x,
                iterations,
                det_at_a: det,
                cutoff,
                residual: fres,
            });
        }
        if iterations >= max_iter {
            return Err(Error::NotConverged {
                stage: "amplitude system",
                iterations,
                last_delta: fres,
            });
        }
        let rhs = nalgebra::DVector::from_vec(f);
        let delta = lu.solve(&rhs).ok_or_else(|| Error::Diverged {
            stage: "amplitude system",
            detail: "numerically singular despite nonzero exact determinant".into(),
        })?;
        let cramer = factorial * max_entry.powi(dim as i32 - 1) * fres / det.abs();
        let dinf = delta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if dinf > cramer * (1.0 + 1e-9) + 1e-300 {
            return Err(Error::Verification(
                "linear solve exceeded the cofactor-expansion bound".into(),
            ));
        }
        for i in 0..dim {
            x[i] -= delta[i];
            if x[i].abs() > ball {
                return Err(Error::Diverged {
                    stage: "amplitude system",
                    detail: format!(
                        "iterate left the eps^(3/4) ball: |x| = {:.3e} > {:.3e}",
                        x[i].abs(),
                        ball
                    ),
                });
            }
        }
        iterations += 1;
    }
}

/// Monte-Carlo mass of {a ∈ [1,2]^b : |det A(a)| ≤ ε^{1/6}}, with the ε/10
/// cutoff counted in the same pass and a fitted decay exponent.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MeasureEstimate {
    pub eps: f64,
    pub samples: u64,
    pub fraction: f64,
    pub half_width: f64,
    pub fraction_tenth: f64,
    pub half_width_tenth: f64,
    /// log10(fraction / fraction_tenth); None when either count is zero.
    pub c_hat: Option<f64>,
}

pub fn estimate_measure(
    a_mat: &MatrixA,
    eps: f64,
    samples: u64,
    seed: u64,
) -> Result<MeasureEstimate> {
    if a_mat.is_degenerate() {
        return Err(Error::HypothesisRefused(
            "det A vanishes identically; the nondegeneracy hypothesis fails".into(),
        ));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidParam("eps must be positive".into()));
    }
    if samples == 0 {
        return Err(Error::InvalidParam("need at least one sample".into()));
    }
    let b = a_mat.det_poly.nvars();
    let cutoff = eps.powf(1.0 / 6.0);
    let cutoff_tenth = (eps / 10.0).powf(1.0 / 6.0);
    let mut count = 0u64;
    let mut count_tenth = 0u64;
    let mut a = vec![0.0f64; b];
    // One independent stream per sample index: parallel-splittable and
    // reproducible regardless of chunking.
    for i in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i);
        for aj in a.iter_mut() {
            *aj = rng.gen_range(1.0..2.0);
        }
        let d = a_mat.det_at(&a).abs();
        if d <= cutoff {
            count += 1;
        }
        if d <= cutoff_tenth {
            count_tenth += 1;
        }
    }
    let n = samples as f64;
    let fraction = count as f64 / n;
    let fraction_tenth = count_tenth as f64 / n;
    let hw = |f: f64| 1.96 * (f * (1.0 - f) / n).sqrt();
    let c_hat = if count > 0 && count_tenth > 0 {
        Some((fraction / fraction_tenth).log10())
    } else {
        None
    };
    Ok(MeasureEstimate {
        eps,
        samples,
        fraction,
        half_width: hw(fraction),
        fraction_tenth,
        half_width_tenth: hw(fraction_tenth),
        c_hat,
    })
}
