//! Subcommand bodies. Each one resolves its config, runs the corresponding
//! library pipeline, stores a JSON report (printed to stdout and written as
//! an artifact, even when the run ends with a nonzero exit), and leaves the
//! manifest bookkeeping to the dispatcher in `main`.

use std::path::Path;

use qls_core::bifurcation::{build_a, estimate_measure, BuildMode};
use qls_core::diophantine::best_gamma;
use qls_core::lattice::{project, weighted_norm, Basis, Part};
use qls_core::pipeline::{
    check_hypotheses, export_solution, field_from_file, frequency_order_check, import_solution,
    pde_residual, solution_file, solve_full,
};
use qls_core::resonance::{
    classify_supports, enumerate_resonant, enumeration_bound, geometric_flags, search_bases,
};
use qls_core::Error as CoreError;
use serde_json::{json, Value};

use crate::config::{parse_config, ParsedConfig};
use crate::run::{cell_f64, cell_opt, Csv, RunDir};

pub enum CmdError {
    Usage(Vec<String>),
    Core(CoreError),
    Io(std::io::Error),
}

impl From<CoreError> for CmdError {
    fn from(e: CoreError) -> Self {
        CmdError::Core(e)
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Io(e)
    }
}

impl From<Vec<String>> for CmdError {
    fn from(v: Vec<String>) -> Self {
        CmdError::Usage(v)
    }
}

/// Execution context handed to a command body: the artifact directory plus
/// the report slot. A stored report is emitted whether or not the body also
/// returns an error, so refusals still carry their numbers.
pub struct Ctx<'a> {
    pub rd: &'a mut RunDir,
    pub report: Option<Value>,
}

fn to_value<T: serde::Serialize>(v: &T) -> Result<Value, CmdError> {
    serde_json::to_value(v).map_err(|e| CmdError::Core(CoreError::Serde(e)))
}

fn hypothesis_block(parsed: &ParsedConfig) -> Result<Value, CmdError> {
    let cfg = parsed.hypothesis_config()?;
    let report = check_hypotheses(&cfg)?;
    to_value(&report)
}

fn basis_block(basis: &Basis) -> Value {
    json!({
        "vectors": basis.vectors(),
        "rho": basis.rho(),
        "b": basis.b(),
        "d": basis.d(),
    })
}

pub fn resonance(ctx: &mut Ctx, config_path: &Path) -> Result<(), CmdError> {
    let parsed = parse_config(config_path)?;
    let basis = &parsed.basis;
    let res = enumerate_resonant(basis)?;
    let flags = geometric_flags(basis);
    let supports = classify_supports(&res, &flags)?;
    ctx.report = Some(json!({
        "subcommand": "resonance",
        "tool_version": env!("CARGO_PKG_VERSION"),
        "basis": basis_block(basis),
        "enumeration_bound": enumeration_bound(basis),
        "resonant": {
            "all": res.all(),
            "k1": res.k1(),
            "k2": res.k2(),
            "has_triple_form": res.has_triple_form(),
        },
        "geometric_flags": to_value(&flags)?,
        "supports": to_value(&supports)?,
        "hypothesis": hypothesis_block(&parsed)?,
    }));
    Ok(())
}

pub fn check_rho(
    ctx: &mut Ctx,
    rho: f64,
    tau: f64,
    m_max: u64,
    floor: f64,
) -> Result<(), CmdError> {
    let cert = best_gamma(rho, tau, m_max)?;
    let passes = cert.gamma_best >= floor && cert.gamma_best > 0.0;
    ctx.report = Some(json!({
        "subcommand": "check-rho",
        "tool_version": env!("CARGO_PKG_VERSION"),
        "cert": to_value(&cert)?,
        "floor": floor,
        "passes": passes,
    }));
    if !passes {
        return Err(CmdError::Core(CoreError::HypothesisRefused(format!(
            "gamma_best = {:e} at m = {} is below the floor {floor:e}",
            cert.gamma_best, cert.worst_m
        ))));
    }
    Ok(())
}

pub fn solve(ctx: &mut Ctx, config_path: &Path) -> Result<(), CmdError> {
    let parsed = parse_config(config_path)?;
    let cfg = parsed.solve_config()?;
    // Stored up front so a refusal still reports the hypothesis numbers; a
    // successful solve replaces this with the full report.
    ctx.report = Some(json!({
        "subcommand": "solve",
        "tool_version": env!("CARGO_PKG_VERSION"),
        "basis": basis_block(&cfg.basis),
        "eps": cfg.eps,
        "hypothesis": hypothesis_block(&parsed)?,
    }));
    let sol = solve_full(&cfg)?;
    let file = solution_file(&sol, &cfg)?;
    export_solution(&file, &ctx.rd.path_of("solution.json"))?;
    let solution_rel = ctx.rd.note_artifact("solution.json");
    let eps = cfg.eps;
    let physical: Vec<f64> = cfg.a.iter().map(|a| eps * a).collect();
    let corrections: Vec<Value> = sol
        .a_res
        .iter()
        .map(|(k, x)| {
            json!({ "mode": k, "rescaled": x, "physical": eps * x })
        })
        .collect();
    ctx.report = Some(json!({
        "subcommand": "solve",
        "tool_version": env!("CARGO_PKG_VERSION"),
        "basis": basis_block(&cfg.basis),
        "eps": eps,
        "sign": to_value(&cfg.sign)?,
        "k_t": sol.diagnostics.k_t,
        "amplitudes": { "rescaled": cfg.a, "physical": physical },
        "omega": sol.omega,
        "omega0": cfg.basis.omega0(),
        "resonant_corrections": corrections,
        "residual_norm": sol.residual_norm,
        "persistence": to_value(&sol.persistence)?,
        "diagnostics": to_value(&sol.diagnostics)?,
        "hypothesis": to_value(&sol.hypothesis)?,
        "solution": solution_rel,
    }));
    Ok(())
}

pub fn sweep(ctx: &mut Ctx, config_path: &Path) -> Result<(), CmdError> {
    let parsed = parse_config(config_path)?;
    let Some(grid) = parsed.raw.sweep.as_ref() else {
        return Err(CmdError::Usage(vec![
            "sweep: config needs a [sweep] section with a_values and eps_list".into(),
        ]));
    };
    let b = parsed.basis.b();
    let mut header: Vec<String> = vec!["eps".into()];
    header.extend((1..=b).map(|j| format!("a{j}")));
    header.push("outcome".into());
    header.push("residual".into());
    header.extend((1..=b).map(|j| format!("omega{j}")));
    header.push("mass".into());
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut csv = Csv::new(&header_refs);
    let mut counts: std::collections::BTreeMap<String, usize> = Default::default();
    for a in &grid.a_values {
        for &eps in &grid.eps_list {
            let mut cells: Vec<String> = vec![cell_f64(eps)];
            cells.extend(a.iter().map(|&x| cell_f64(x)));
            let cfg = parsed.cell_config(eps, a.clone())?;
            match solve_full(&cfg) {
                Ok(sol) => {
                    cells.push("ok".into());
                    cells.push(cell_f64(sol.residual_norm));
                    cells.extend(sol.omega.iter().map(|&w| cell_f64(w)));
                    cells.push(cell_f64(sol.persistence.off_resonant_mass));
                    *counts.entry("ok".into()).or_default() += 1;
                }
                Err(e) => {
                    let tag = e.outcome().as_str().to_string();
                    cells.push(tag.clone());
                    cells.push(String::new());
                    cells.extend(std::iter::repeat_n(String::new(), b));
                    cells.push(String::new());
                    *counts.entry(tag).or_default() += 1;
                }
            }
            csv.row(&cells);
        }
    }
    let csv_rel = ctx.rd.write_text("sweep.csv", &csv.finish())?;
    ctx.report = Some(json!({
        "subcommand": "sweep",
        "tool_version": env!("CARGO_PKG_VERSION"),
        "basis": basis_block(&parsed.basis),
        "rows": grid.a_values.len() * grid.eps_list.len(),
        "outcomes": counts,
        "csv": csv_rel,
        "hypothesis": hypothesis_block(&parsed)?,
    }));
    Ok(())
}

pub fn measure(ctx: &mut Ctx, config_path: &Path) -> Result<(), CmdError> {
    let parsed = parse_config(config_path)?;
    let Some(section) = parsed.raw.measure.as_ref() else {
        return Err(CmdError::Usage(vec![
            "measure: config needs a [measure] section with eps_list, samples and seed".into(),
        ]));
    };
    let seed = section.seed.expect("validated at parse");
    let mode = match section.build.as_deref() {
        Some("oracle") => BuildMode::Oracle,
        _ => BuildMode::ClosedForm,
    };
    let res = enumerate_resonant(&parsed.basis)?;
    let mat = build_a(&parsed.basis, &res, mode)?;
    let mut csv = Csv::new(&[
        "eps",
        "fraction",
        "half_width",
        "fraction_tenth",
        "half_width_tenth",
        "c_hat",
    ]);
    let mut estimates = Vec::new();
    for &eps in &section.eps_list {
        let est = estimate_measure(&mat, eps, section.samples, seed)?;
        csv.row(&[
            cell_f64(est.eps),
            cell_f64(est.fraction),
            cell_f64(est.half_width),
            cell_f64(est.fraction_tenth),
            cell_f64(est.half_width_tenth),
            cell_opt(est.c_hat),
        ]);
        estimates.push(to_value(&est)?);
    }
    let csv_rel = ctx.rd.write_text("measure.csv", &csv.finish())?;
    ctx.report = Some(json!({
        "subcommand": "measure",
        "tool_version": env!("CARGO_PKG_VERSION"),
        "basis": basis_block(&parsed.basis),
        "build": if mode == BuildMode::Oracle { "oracle" } else { "closed-form" },
        "matrix": {
            "dim": mat.dim,
            "modes": mat.modes,
            "det": mat.det_poly.to_string(),
        },
        "samples": section.samples,
        "seed": seed,
        "estimates": estimates,
        "csv": csv_rel,
        "hypothesis": hypothesis_block(&parsed)?,
    }));
    Ok(())
}

pub fn verify(
    ctx: &mut Ctx,
    config_path: &Path,
    solution_path: &Path,
    k_ext_flag: Option<i64>,
) -> Result<(), CmdError> {
    let parsed = parse_config(config_path)?;
    let file = import_solution(solution_path)?;
    let mut bad = Vec::new();
    if file.meta.basis != parsed.basis.vectors() {
        bad.push("solution basis does not match the config basis".to_string());
    }
    if file.meta.rho != parsed.basis.rho() {
        bad.push(format!(
            "solution rho {} does not match config rho {}",
            file.meta.rho,
            parsed.basis.rho()
        ));
    }
    if !bad.is_empty() {
        return Err(CmdError::Usage(bad));
    }

    let cfg = parsed.hypothesis_config()?;
    let verify_raw = parsed.raw.verify.as_ref();
    let residual_tol = verify_raw.and_then(|v| v.residual_tol).unwrap_or(1e-6);
    let k_ext = k_ext_flag
        .or(verify_raw.and_then(|v| v.k_ext))
        .unwrap_or(2 * cfg.resolved_k_t()?);
    let field = field_from_file(&file)?;
    // The convention is part of the equation; the file records the one it was
    // solved under, and that is the one the residual is checked against.
    let residual = pde_residual(
        &field,
        &file.omega,
        &parsed.basis,
        &parsed.hamiltonian,
        file.meta.sign,
        &cfg.norm,
        k_ext,
    )?;
    let residual_ok = residual <= residual_tol;

    let eps = file.meta.eps;
    let res = enumerate_resonant(&parsed.basis)?;
    let mut anchors = Vec::new();
    let mut recovered = Vec::new();
    for e_j in res.k1() {
        let z = field.get(e_j);
        let a_j = z.re / eps;
        anchors.push(json!({
            "mode": e_j,
            "coefficient": [z.re, z.im],
            "rescaled_amplitude": a_j,
            "in_window": (1.0..=2.0).contains(&a_j) && z.im == 0.0,
        }));
        recovered.push(a_j);
    }
    let a_norm: f64 = recovered.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mass = weighted_norm(&project(&field, &res, Part::P), &cfg.norm);
    let mass_bound = (eps * a_norm).powf(1.0 + cfg.kappa);
    let omega0 = parsed.basis.omega0();
    let freq_distance: f64 = file
        .omega
        .iter()
        .zip(&omega0)
        .map(|(w, w0)| (w - w0) * (w - w0))
        .sum::<f64>()
        .sqrt();
    let freq_bound = (eps * a_norm) * (eps * a_norm);

    let freq_table = match verify_raw.and_then(|v| v.eps_list.as_ref()) {
        Some(eps_list) => {
            let base = parsed.cell_config(eps_list[0], recovered.clone())?;
            let rows = frequency_order_check(&base, eps_list)?;
            Some(to_value(&rows)?)
        }
        None => None,
    };

    ctx.report = Some(json!({
        "subcommand": "verify",
        "tool_version": env!("CARGO_PKG_VERSION"),
        "basis": basis_block(&parsed.basis),
        "meta": to_value(&file.meta)?,
        "k_ext": k_ext,
        "residual": residual,
        "residual_tol": residual_tol,
        "residual_ok": residual_ok,
        "anchors": anchors,
        "off_resonant_mass": { "value": mass, "bound": mass_bound, "ok": mass < mass_bound },
        "frequency_distance": { "value": freq_distance, "bound": freq_bound, "ok": freq_distance < freq_bound },
        "frequency_table": freq_table,
        "hypothesis": hypothesis_block(&parsed)?,
    }));
    if !residual_ok {
        return Err(CmdError::Core(CoreError::NotConverged {
            stage: "solution verification",
            iterations: 0,
            last_delta: residual,
        }));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn search(
    ctx: &mut Ctx,
    d: usize,
    b: usize,
    radius: i64,
    bound_cap: f64,
    limit: Option<usize>,
    allow_triple: bool,
    k2_count: Option<usize>,
) -> Result<(), CmdError> {
    let out = search_bases(
        d,
        b,
        radius,
        |_flags, res| {
            let coupled = match k2_count {
                Some(n) => res.k2().len() == n,
                None => !res.k2().is_empty(),
            };
            coupled && (allow_triple || !res.has_triple_form())
        },
        bound_cap,
        limit,
    )?;
    let mut hits = Vec::new();
    for basis in &out.hits {
        let res = enumerate_resonant(basis)?;
        let flags = geometric_flags(basis);
        let supports = match classify_supports(&res, &flags) {
            Ok(report) => to_value(&report)?,
            Err(e) => json!({ "violation": e.to_string() }),
        };
        let matrix = match build_a(basis, &res, BuildMode::ClosedForm) {
            Ok(mat) => json!({
                "det": mat.det_poly.to_string(),
                "det_at_ones": mat.det_at(&vec![1.0; b]),
            }),
            Err(e) => json!({ "error": e.to_string() }),
        };
        hits.push(json!({
            "vectors": basis.vectors(),
            "k2": res.k2(),
            "has_triple_form": res.has_triple_form(),
            "geometric_flags": to_value(&flags)?,
            "supports": supports,
            "matrix": matrix,
        }));
    }
    ctx.report = Some(json!({
        "subcommand": "search",
        "tool_version": env!("CARGO_PKG_VERSION"),
        "params": {
            "d": d, "b": b, "radius": radius,
            "bound_cap": bound_cap, "limit": limit, "allow_triple": allow_triple,
            "k2_count": k2_count,
        },
        "scanned": out.scanned,
        "skipped_bound": out.skipped_bound,
        "hits": hits,
    }));
    Ok(())
}
