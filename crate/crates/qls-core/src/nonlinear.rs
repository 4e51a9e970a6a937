//! The nonlinearity S(u) = ∂H/∂ū evaluated as exact lattice convolutions,
//! its real-linear directional derivative, rescaled variants that keep
//! epsilon powers symbolic (no catastrophic division), and symbolic
//! extraction of the cubic coefficients feeding the bifurcation matrix.

use std::collections::BTreeMap;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{convolve, Basis, Mode, SpectralVector};
use crate::poly::IntPoly;
use crate::resonance::ResonantSet;

/// H(u, ū) = |u|⁴ + Σ α_{l,l′} u^l ū^{l′} with α_{l,l′} = α_{l′,l}.
///
/// The quartic term is mandatory with coefficient exactly 1; every further
/// monomial must have total degree l + l′ ≥ 5. The spec is closed under the
/// exponent swap at construction, so stored coefficients are already
/// symmetric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    monomials: Vec<(u32, u32, f64)>,
    gauge_invariant: bool,
}

impl HamiltonianSpec {
    /// H = |u|⁴ alone.
    pub fn quartic() -> Self {
        Self {
            monomials: vec![(2, 2, 1.0)],
            gauge_invariant: true,
        }
    }

    /// |u|⁴ plus the given higher-order terms; (l, l′, α) with l + l′ ≥ 5 and
    /// the symmetric partner (l′, l, α) added automatically. Conflicting
    /// coefficients for a pair and its swap are rejected.
    pub fn with_terms(extra: &[(u32, u32, f64)]) -> Result<Self> {
        let mut map: BTreeMap<(u32, u32), f64> = BTreeMap::new();
        map.insert((2, 2), 1.0);
        for &(l, lp, alpha) in extra {
            if l + lp < 5 {
                return Err(Error::InvalidParam(format!(
                    "monomial ({l},{lp}) has degree {} < 5; only the built-in |u|^4 term sits below degree 5",
                    l + lp
                )));
            }
            if !alpha.is_finite() {
                return Err(Error::InvalidParam(format!(
                    "coefficient for ({l},{lp}) must be finite"
                )));
            }
            for key in [(l, lp), (lp, l)] {
                match map.get(&key) {
                    Some(&prev) if prev != alpha => {
                        return Err(Error::InvalidParam(format!(
                            "conflicting coefficients for ({},{}): {prev} vs {alpha} (symmetry requires equality)",
                            key.0, key.1
                        )));
                    }
                    _ => {
                        map.insert(key, alpha);
                    }
                }
            }
        }
        let monomials: Vec<(u32, u32, f64)> = map
            .into_iter()
            .filter(|&(_, alpha)| alpha != 0.0)
            .map(|((l, lp), alpha)| (l, lp, alpha))
            .collect();
        let gauge_invariant = monomials.iter().all(|&(l, lp, _)| l == lp);
        Ok(Self {
            monomials,
            gauge_invariant,
        })
    }

    /// Stored (l, l′, α) triples, symmetric closure included, sorted.
    pub fn monomials(&self) -> &[(u32, u32, f64)] {
        &self.monomials
    }

    /// True iff every monomial has l = l′ (H depends on u only through |u|).
    pub fn gauge_invariant(&self) -> bool {
        self.gauge_invariant
    }

    pub fn max_degree(&self) -> u32 {
        self.monomials.iter().map(|&(l, lp, _)| l + lp).max().unwrap_or(4)
    }
}

/// Convolve the factors left to right. Intermediates live at the full radius
/// (sum of factor radii so far) so nothing aliases; only the last convolution
/// restricts its output, which drops exactly the sites a final truncation
/// would drop.
fn conv_product(factors: &[&SpectralVector], out_radius: i64) -> Result<SpectralVector> {
    let total: i64 = factors.iter().map(|f| f.radius()).sum();
    let target_final = out_radius.min(total);
    if factors.len() == 1 {
        return factors[0].truncated(target_final);
    }
    let mut acc = factors[0].clone();
    let mut acc_r = acc.radius();
    for (i, f) in factors[1..].iter().enumerate() {
        let last = i == factors.len() - 2;
        let target = if last { target_final } else { acc_r + f.radius() };
        acc = convolve(&acc, f, target)?;
        acc_r = target;
    }
    Ok(acc)
}

fn s_sum<F>(u: &SpectralVector, h: &HamiltonianSpec, k_t: i64, coeff: F) -> Result<SpectralVector>
where
    F: Fn(u32, u32, f64) -> f64,
{
    let ubar = u.conj_reflect();
    let mut acc = SpectralVector::zero(u.b(), k_t)?;
    for &(l, lp, alpha) in h.monomials() {
        if lp == 0 {
            continue;
        }
        let c = coeff(l, lp, alpha);
        if c == 0.0 {
            continue;
        }
        let mut factors: Vec<&SpectralVector> = Vec::with_capacity((l + lp - 1) as usize);
        for _ in 0..l {
            factors.push(u);
        }
        for _ in 0..lp - 1 {
            factors.push(&ubar);
        }
        let term = conv_product(&factors, k_t)?;
        acc = acc.add(&term.scaled(c.into()))?;
    }
    Ok(acc)
}

/// S(u) = ∂H/∂ū = 2u²ū + Σ l′ α_{l,l′} u^l ū^{l′−1}, truncated to |k| ≤ K_t.
pub fn eval_s(u: &SpectralVector, h: &HamiltonianSpec, k_t: i64) -> Result<SpectralVector> {
    s_sum(u, h, k_t, |_, lp, alpha| lp as f64 * alpha)
}

/// ε^{−m} S(ε w) with the epsilon powers folded per monomial:
/// Σ l′ α ε^{l+l′−1−m} w^l w̄^{l′−1}. Keeping the powers symbolic avoids the
/// cancellation a literal scale-evaluate-divide would accumulate. Requires
/// l + l′ ≥ m + 1 for every monomial (holds for m ≤ 3).
pub fn eval_s_rescaled(
    w: &SpectralVector,
    h: &HamiltonianSpec,
    eps: f64,
    m: u32,
    k_t: i64,
) -> Result<SpectralVector> {
    if h.monomials().iter().any(|&(l, lp, _)| l + lp < m + 1) {
        return Err(Error::InvalidParam(format!(
            "rescaling power m = {m} exceeds the lowest monomial degree"
        )));
    }
    s_sum(w, h, k_t, |l, lp, alpha| {
        lp as f64 * alpha * eps.powi((l + lp - 1 - m) as i32)
    })
}

/// Full real-linear derivative D_u S(u)·w + D_ū S(u)·w̄.
pub fn eval_ds(
    u: &SpectralVector,
    w: &SpectralVector,
    h: &HamiltonianSpec,
    k_t: i64,
) -> Result<SpectralVector> {
    if u.b() != w.b() {
        return Err(Error::DimensionMismatch("mismatched mode dimensions".into()));
    }
    let ubar = u.conj_reflect();
    let wbar = w.conj_reflect();
    let mut acc = SpectralVector::zero(u.b(), k_t)?;
    for &(l, lp, alpha) in h.monomials() {
        if lp == 0 {
            continue;
        }
        if l >= 1 {
            let mut factors: Vec<&SpectralVector> = Vec::new();
            for _ in 0..l - 1 {
                factors.push(u);
            }
            for _ in 0..lp - 1 {
                factors.push(&ubar);
            }
            factors.push(w);
            let term = conv_product(&factors, k_t)?;
            acc = acc.add(&term.scaled(((lp * l) as f64 * alpha).into()))?;
        }
        if lp >= 2 {
            let mut factors: Vec<&SpectralVector> = Vec::new();
            for _ in 0..l {
                factors.push(u);
            }
            for _ in 0..lp - 2 {
                factors.push(&ubar);
            }
            factors.push(&wbar);
            let term = conv_product(&factors, k_t)?;
            acc = acc.add(&term.scaled(((lp * (lp - 1)) as f64 * alpha).into()))?;
        }
    }
    Ok(acc)
}

/// The cubic coefficient data of (|v|²v)^∧(k0) for a symbolic kernel vector
/// v = Σ_j a_j e_j + Σ_{k ∈ K_2} x_k k: the term constant in the x variables
/// and the coefficient of each x_k, both as exact integer polynomials in
/// a_1..a_b. Terms quadratic or higher in x are outside this expansion and
/// are dropped.
#[derive(Clone, Debug)]
pub struct CubicCoeffs {
    pub constant: IntPoly,
    /// One entry per k ∈ K_2 in lexicographic order.
    pub linear: Vec<(Mode, IntPoly)>,
}

pub fn cubic_coeff_extract(
    basis: &Basis,
    res: &ResonantSet,
    k0: &[i64],
) -> Result<CubicCoeffs> {
    let b = basis.b();
    if res.b() != b {
        return Err(Error::DimensionMismatch(
            "resonant set enumerated for a different basis size".into(),
        ));
    }
    if !res.k2().iter().any(|k| k == k0) {
        return Err(Error::InvalidParam(format!(
            "k0 = {k0:?} is not a nontrivial resonant mode"
        )));
    }

    let mut unit_var: HashMap<&Mode, usize> = HashMap::new();
    for k in res.k1() {
        let j = k.iter().position(|&x| x == 1).expect("unit mode");
        unit_var.insert(k, j);
    }
    let mut k2_slot: HashMap<&Mode, usize> = HashMap::new();
    for (i, k) in res.k2().iter().enumerate() {
        k2_slot.insert(k, i);
    }

    let mut constant = IntPoly::zero(b);
    let mut linear: Vec<IntPoly> = vec![IntPoly::zero(b); res.k2().len()];

    let all = res.all();
    let mut sum = vec![0i64; b];
    for p in all {
        for q in all {
            for r in all {
                for j in 0..b {
                    sum[j] = p[j] + q[j] - r[j];
                }
                if sum != k0 {
                    continue;
                }
                let mut exps = vec![0u16; b];
                let mut x_factor: Option<usize> = None;
                let mut x_count = 0;
                for f in [p, q, r] {
                    if let Some(&j) = unit_var.get(f) {
                        exps[j] += 1;
                    } else {
                        x_count += 1;
                        x_factor = Some(k2_slot[f]);
                    }
                }
                match x_count {
                    0 => constant.add_term(&exps, 1),
                    1 => linear[x_factor.expect("counted")].add_term(&exps, 1),
                    _ => {}
                }
            }
        }
    }

    Ok(CubicCoeffs {
        constant,
        linear: res
            .k2()
            .iter()
            .cloned()
            .zip(linear)
            .collect(),
    })
}
