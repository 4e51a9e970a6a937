//! TOML config ingestion. Validation is all-at-once: every violation in the
//! file is collected and reported together, so one round trip fixes them all.

use std::fs;
use std::path::Path;

use qls_core::lattice::{default_algebra_const, Basis, NormParams};
use qls_core::nonlinear::HamiltonianSpec;
use qls_core::pipeline::SolveConfig;
use qls_core::range::SignConvention;
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub basis: RawBasis,
    #[serde(default)]
    pub hamiltonian: RawHamiltonian,
    #[serde(default)]
    pub solver: RawSolver,
    pub verify: Option<RawVerify>,
    pub sweep: Option<RawSweep>,
    pub measure: Option<RawMeasure>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawBasis {
    pub vectors: Vec<Vec<i64>>,
    pub rho: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawHamiltonian {
    /// Extra interaction monomials as (l, l', alpha); empty means the plain
    /// quartic |u|^4.
    #[serde(default)]
    pub extra_terms: Vec<(u32, u32, f64)>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSolver {
    pub eps: Option<f64>,
    /// Rescaled amplitudes, one per basis vector, each in [1,2]. Defaults to
    /// all ones.
    pub a: Option<Vec<f64>>,
    pub sigma: Option<f64>,
    pub s: Option<f64>,
    pub tau: Option<f64>,
    pub gamma_floor: Option<f64>,
    pub m_max: Option<u64>,
    pub k_t: Option<i64>,
    pub range_tol: Option<f64>,
    pub newton_tol: Option<f64>,
    pub outer_tol: Option<f64>,
    pub sign: Option<SignConvention>,
    pub seed: Option<u64>,
    pub kappa: Option<f64>,
    pub range_max_iter: Option<usize>,
    pub newton_max_iter: Option<usize>,
    pub outer_max_iter: Option<usize>,
    pub waive_hypotheses: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawVerify {
    pub eps_list: Option<Vec<f64>>,
    pub k_ext: Option<i64>,
    pub residual_tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSweep {
    pub a_values: Vec<Vec<f64>>,
    pub eps_list: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawMeasure {
    pub eps_list: Vec<f64>,
    pub samples: u64,
    /// Required: all randomness is seeded, never wall-clock.
    pub seed: Option<u64>,
    /// "closed-form" (default) or "oracle".
    pub build: Option<String>,
}

pub struct ParsedConfig {
    pub basis: Basis,
    pub hamiltonian: HamiltonianSpec,
    pub raw: RawConfig,
}

fn check_amplitudes(dst: &mut Vec<String>, what: &str, a: &[f64], b: usize) {
    if a.len() != b {
        dst.push(format!(
            "{what}: expected {b} amplitudes (one per basis vector), got {}",
            a.len()
        ));
    }
    for (j, &x) in a.iter().enumerate() {
        if !(1.0..=2.0).contains(&x) {
            dst.push(format!("{what}[{j}]: amplitude {x} outside the rescaled window [1, 2]"));
        }
    }
}

fn check_eps(dst: &mut Vec<String>, what: &str, eps: f64) {
    if !(eps > 0.0 && eps < 1.0) {
        dst.push(format!("{what}: eps must lie in (0, 1), got {eps}"));
    }
}

/// Read and validate a config file. Violations come back together, not
/// first-only; an empty error list never escapes.
pub fn parse_config(path: &Path) -> Result<ParsedConfig, Vec<String>> {
    let text = fs::read_to_string(path)
        .map_err(|e| vec![format!("cannot read config {}: {e}", path.display())])?;
    let raw: RawConfig =
        toml::from_str(&text).map_err(|e| vec![format!("config syntax: {e}")])?;

    let mut bad = Vec::new();

    let vectors = &raw.basis.vectors;
    let b = vectors.len();
    let d = vectors.first().map(|v| v.len()).unwrap_or(0);
    if b == 0 {
        bad.push("basis.vectors: at least one vector is required".into());
    }
    if vectors.iter().any(|v| v.len() != d) {
        bad.push("basis.vectors: all vectors must have the same dimension".into());
    } else if b > d && d > 0 {
        bad.push(format!(
            "basis.vectors: more vectors than space dimensions (b = {b} > d = {d})"
        ));
    }
    if !raw.basis.rho.is_finite() {
        bad.push(format!("basis.rho: must be finite, got {}", raw.basis.rho));
    }
    let basis = match Basis::new(vectors.clone(), raw.basis.rho) {
        Ok(basis) => Some(basis),
        Err(e) => {
            bad.push(format!("basis: {e}"));
            None
        }
    };

    let hamiltonian = match HamiltonianSpec::with_terms(&raw.hamiltonian.extra_terms) {
        Ok(h) => Some(h),
        Err(e) => {
            bad.push(format!("hamiltonian: {e}"));
            None
        }
    };

    let s = raw.solver.s.unwrap_or(b as f64 / 2.0 + 1.0);
    let sigma = raw.solver.sigma.unwrap_or(0.5);
    if sigma <= 0.0 {
        bad.push(format!("solver.sigma: must be positive, got {sigma}"));
    }
    if s <= b as f64 / 2.0 {
        bad.push(format!(
            "solver.s: must exceed b/2 = {} for the algebra property, got {s}",
            b as f64 / 2.0
        ));
    }
    if let Some(eps) = raw.solver.eps {
        check_eps(&mut bad, "solver.eps", eps);
    }
    if let Some(a) = &raw.solver.a {
        check_amplitudes(&mut bad, "solver.a", a, b);
    }
    for (name, v) in [
        ("solver.tau", raw.solver.tau.unwrap_or(2.0)),
        ("solver.kappa", raw.solver.kappa.unwrap_or(0.5)),
        ("solver.range_tol", raw.solver.range_tol.unwrap_or(1e-12)),
        ("solver.newton_tol", raw.solver.newton_tol.unwrap_or(1e-11)),
        ("solver.outer_tol", raw.solver.outer_tol.unwrap_or(1e-9)),
    ] {
        if !(v.is_finite() && v > 0.0) {
            bad.push(format!("{name}: must be positive and finite, got {v}"));
        }
    }
    if let Some(g) = raw.solver.gamma_floor {
        if !(g.is_finite() && g >= 0.0) {
            bad.push(format!("solver.gamma_floor: must be nonnegative, got {g}"));
        }
    }
    if let Some(k_t) = raw.solver.k_t {
        if k_t < 1 {
            bad.push(format!("solver.k_t: must be at least 1, got {k_t}"));
        }
    }
    if raw.solver.m_max == Some(0) {
        bad.push("solver.m_max: must be at least 1".into());
    }

    if let Some(v) = &raw.verify {
        if let Some(tol) = v.residual_tol {
            if !(tol.is_finite() && tol > 0.0) {
                bad.push(format!("verify.residual_tol: must be positive, got {tol}"));
            }
        }
        if let Some(k_ext) = v.k_ext {
            if k_ext < 1 {
                bad.push(format!("verify.k_ext: must be at least 1, got {k_ext}"));
            }
        }
        if let Some(list) = &v.eps_list {
            for &eps in list {
                check_eps(&mut bad, "verify.eps_list", eps);
            }
        }
    }
    if let Some(sw) = &raw.sweep {
        if sw.a_values.is_empty() {
            bad.push("sweep.a_values: at least one amplitude vector is required".into());
        }
        for a in &sw.a_values {
            check_amplitudes(&mut bad, "sweep.a_values", a, b);
        }
        if sw.eps_list.is_empty() {
            bad.push("sweep.eps_list: at least one eps is required".into());
        }
        for &eps in &sw.eps_list {
            check_eps(&mut bad, "sweep.eps_list", eps);
        }
    }
    if let Some(m) = &raw.measure {
        if m.eps_list.is_empty() {
            bad.push("measure.eps_list: at least one eps is required".into());
        }
        for &eps in &m.eps_list {
            check_eps(&mut bad, "measure.eps_list", eps);
        }
        if m.samples == 0 {
            bad.push("measure.samples: must be at least 1".into());
        }
        if m.seed.is_none() {
            bad.push("measure.seed: required; sampling runs only with an explicit seed".into());
        }
        if let Some(build) = &m.build {
            if build != "closed-form" && build != "oracle" {
                bad.push(format!(
                    "measure.build: expected \"closed-form\" or \"oracle\", got \"{build}\""
                ));
            }
        }
    }

    if !bad.is_empty() {
        return Err(bad);
    }
    Ok(ParsedConfig {
        basis: basis.unwrap(),
        hamiltonian: hamiltonian.unwrap(),
        raw,
    })
}

impl ParsedConfig {
    /// Assemble the solver configuration; `eps` must be present for commands
    /// that solve. Section defaults: sigma = 0.5, s = b/2 + 1, tau = 2,
    /// kappa = 0.5, physical sign, seed = 1.
    pub fn solve_config(&self) -> Result<SolveConfig, Vec<String>> {
        let Some(eps) = self.raw.solver.eps else {
            return Err(vec!["solver.eps: required for this command".into()]);
        };
        let a = self.default_amplitudes();
        self.assemble(eps, a)
    }

    /// Same assembly with hypothesis gating waived and a placeholder eps, for
    /// commands that only need the hypothesis report (which is
    /// eps-independent: certificate, flags, classification, divisor audit at
    /// the unperturbed frequencies).
    pub fn hypothesis_config(&self) -> Result<SolveConfig, Vec<String>> {
        let eps = self.raw.solver.eps.unwrap_or(1e-2);
        let mut cfg = self.assemble(eps, self.default_amplitudes())?;
        cfg.waive_hypotheses = true;
        Ok(cfg)
    }

    /// One sweep cell: the shared solver settings at a grid point.
    pub fn cell_config(&self, eps: f64, a: Vec<f64>) -> Result<SolveConfig, Vec<String>> {
        self.assemble(eps, a)
    }

    fn default_amplitudes(&self) -> Vec<f64> {
        self.raw
            .solver
            .a
            .clone()
            .unwrap_or_else(|| vec![1.0; self.basis.b()])
    }

    fn assemble(&self, eps: f64, a: Vec<f64>) -> Result<SolveConfig, Vec<String>> {
        let sv = &self.raw.solver;
        let b = self.basis.b();
        let mut cfg = SolveConfig::new(self.basis.clone(), eps, a);
        cfg.hamiltonian = self.hamiltonian.clone();
        let sigma = sv.sigma.unwrap_or(0.5);
        let s = sv.s.unwrap_or(b as f64 / 2.0 + 1.0);
        cfg.norm = NormParams::new(sigma, s, default_algebra_const(b, sigma, s))
            .map_err(|e| vec![format!("solver norm: {e}")])?;
        if let Some(v) = sv.tau {
            cfg.tau = v;
        }
        if let Some(v) = sv.gamma_floor {
            cfg.gamma_floor = v;
        }
        if let Some(v) = sv.m_max {
            cfg.m_max = v;
        }
        cfg.k_t = sv.k_t;
        if let Some(v) = sv.range_tol {
            cfg.range_tol = v;
        }
        if let Some(v) = sv.newton_tol {
            cfg.newton_tol = v;
        }
        if let Some(v) = sv.outer_tol {
            cfg.outer_tol = v;
        }
        if let Some(v) = sv.sign {
            cfg.sign = v;
        }
        if let Some(v) = sv.seed {
            cfg.seed = v;
        }
        if let Some(v) = sv.kappa {
            cfg.kappa = v;
        }
        if let Some(v) = sv.range_max_iter {
            cfg.range_max_iter = v;
        }
        if let Some(v) = sv.newton_max_iter {
            cfg.newton_max_iter = v;
        }
        if let Some(v) = sv.outer_max_iter {
            cfg.outer_max_iter = v;
        }
        if let Some(v) = sv.waive_hypotheses {
            cfg.waive_hypotheses = v;
        }
        cfg.validate().map_err(|e| vec![format!("solver: {e}")])?;
        Ok(cfg)
    }
}
