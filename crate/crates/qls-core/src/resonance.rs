//! Exact enumeration of the resonant mode set
//!
//! ```text
//!     K = { k in Z^b : sum_j k_j = 1  and  sum_j k_j |n_j|^2 = |n_k|^2 },
//! ```
//!
//! geometric hypothesis flags for the basis, support classification of the
//! nontrivial resonances, and exhaustive search for bases with a prescribed
//! resonance structure. Everything here is integer arithmetic; rho never
//! enters (with rho irrational the resonance condition reduces to the two
//! integer equations above).

use std::collections::HashSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{Basis, Mode};

/// The resonant set K, split into the trivial part K_1 = {e_1..e_b} and the
/// nontrivial part K_2 = K \ K_1.
#[derive(Clone, Debug, Serialize)]
pub struct ResonantSet {
    b: usize,
    all: Vec<Mode>,
    k1: Vec<Mode>,
    k2: Vec<Mode>,
    has_triple_form: bool,
    #[serde(skip)]
    index: HashSet<Mode>,
}

impl ResonantSet {
    fn build(b: usize, mut all: Vec<Mode>) -> Self {
        all.sort();
        let mut k1 = Vec::new();
        let mut k2 = Vec::new();
        for k in &all {
            if is_unit(k) {
                k1.push(k.clone());
            } else {
                k2.push(k.clone());
            }
        }
        let has_triple_form = k2.iter().any(|k| is_triple_form(k));
        let index: HashSet<Mode> = all.iter().cloned().collect();
        Self {
            b,
            all,
            k1,
            k2,
            has_triple_form,
            index,
        }
    }

    pub fn b(&self) -> usize {
        self.b
    }

    /// All of K in ascending lexicographic order.
    pub fn all(&self) -> &[Mode] {
        &self.all
    }

    pub fn k1(&self) -> &[Mode] {
        &self.k1
    }

    pub fn k2(&self) -> &[Mode] {
        &self.k2
    }

    pub fn has_triple_form(&self) -> bool {
        self.has_triple_form
    }

    pub fn contains(&self, k: &[i64]) -> bool {
        self.index.contains(k)
    }
}

fn is_unit(k: &[i64]) -> bool {
    k.iter().filter(|&&x| x != 0).count() == 1 && k.iter().sum::<i64>() == 1
        && k.iter().all(|&x| x == 0 || x == 1)
}

/// k = ±e_i ± e_j ± e_l for distinct i, j, l.
pub fn is_triple_form(k: &[i64]) -> bool {
    let nz: Vec<i64> = k.iter().copied().filter(|&x| x != 0).collect();
    nz.len() == 3 && nz.iter().all(|&x| x.abs() == 1)
}

/// Termination bound: c_1|k|^2 <= |n_k|^2 = sum k_j|n_j|^2 <= sqrt(b) max_j|n_j|^2 |k|
/// forces |k| <= sqrt(b) max_j |n_j|^2 / c_1 for every resonant k.
pub fn enumeration_bound(basis: &Basis) -> f64 {
    let max_nsq = (0..basis.b())
        .map(|j| basis.mode_norm_sq(j))
        .max()
        .expect("nonempty basis") as f64;
    (basis.b() as f64).sqrt() * max_nsq / basis.gram_min_eigen()
}

/// Enumerate K by scanning the hyperplane sum k_j = 1 inside the certified
/// ball, testing sum_{j<l} k_j k_l |n_j - n_l|^2 = 0 exactly (equivalent to
/// the norm condition on the hyperplane).
pub fn enumerate_resonant(basis: &Basis) -> Result<ResonantSet> {
    let bound = enumeration_bound(basis);
    enumerate_resonant_bounded(basis, bound)
}

fn enumerate_resonant_bounded(basis: &Basis, bound: f64) -> Result<ResonantSet> {
    let b = basis.b();
    // Small inflation so c_1 round-off cannot clip a boundary solution.
    let r2_cap = (bound * bound * (1.0 + 1e-9)).floor() as i64;
    let coord_cap = (bound * (1.0 + 1e-9)).floor() as i64;

    let gram = basis.gram();
    let mut diff = vec![vec![0i64; b]; b];
    for j in 0..b {
        for l in 0..b {
            diff[j][l] = gram[j][j] - 2 * gram[j][l] + gram[l][l];
        }
    }

    let mut found: Vec<Mode> = Vec::new();
    let mut k = vec![-coord_cap; b];
    if b == 1 {
        // Hyperplane is the single point k = (1).
        found.push(vec![1]);
        return Ok(ResonantSet::build(b, found));
    }
    // Odometer over the first b-1 coordinates; the last is forced.
    'outer: loop {
        let partial: i64 = k[..b - 1].iter().sum();
        let last = 1 - partial;
        if last.abs() <= coord_cap {
            k[b - 1] = last;
            let r2: i64 = k.iter().map(|&x| x * x).sum();
            if r2 <= r2_cap {
                let mut q = 0i64;
                for j in 0..b {
                    for l in (j + 1)..b {
                        q += k[j] * k[l] * diff[j][l];
                    }
                }
                if q == 0 {
                    found.push(k.clone());
                }
            }
        }
        let mut j = b - 1;
        while j > 0 {
            j -= 1;
            if k[j] < coord_cap {
                k[j] += 1;
                for kk in &mut k[j + 1..b - 1] {
                    *kk = -coord_cap;
                }
                continue 'outer;
            }
        }
        break;
    }

    for j in 0..b {
        let mut e = vec![0i64; b];
        e[j] = 1;
        if !found.contains(&e) {
            return Err(Error::Verification(format!(
                "unit mode e_{} missing from enumerated resonant set",
                j + 1
            )));
        }
    }
    Ok(ResonantSet::build(b, found))
}

/// Geometric side conditions on the basis that the persistence and
/// classification results assume, evaluated exactly over the integers.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GeometricFlags {
    /// No two basis vectors are parallel.
    pub pairwise_nonparallel: bool,
    /// (n_i - n_j) . (n_i - n_l) != 0 for all distinct i, j, l.
    pub nonperp_differences: bool,
    /// Those inner products are all strictly positive.
    pub acute_differences: bool,
    /// |n_j|^2 constant and n_j . n_l = 0 off the diagonal.
    pub equal_norm_orthogonal: bool,
}

pub fn geometric_flags(basis: &Basis) -> GeometricFlags {
    let b = basis.b();
    let g = basis.gram();

    let mut pairwise_nonparallel = true;
    for j in 0..b {
        for l in (j + 1)..b {
            // Cauchy-Schwarz: equality iff parallel.
            if (g[j][l] as i128) * (g[j][l] as i128) == (g[j][j] as i128) * (g[l][l] as i128) {
                pairwise_nonparallel = false;
            }
        }
    }

    let mut nonperp_differences = true;
    let mut acute_differences = true;
    for i in 0..b {
        for j in 0..b {
            for l in 0..b {
                if i == j || i == l || j == l {
                    continue;
                }
                // (n_i - n_j) . (n_i - n_l) from Gram entries.
                let ip = g[i][i] - g[i][l] - g[i][j] + g[j][l];
                if ip == 0 {
                    nonperp_differences = false;
                }
                if ip <= 0 {
                    acute_differences = false;
                }
            }
        }
    }
    if b < 3 {
        nonperp_differences = true;
        acute_differences = true;
    }

    let mut equal_norm_orthogonal = true;
    for (j, row) in g.iter().enumerate().take(b) {
        if row[j] != g[0][0] {
            equal_norm_orthogonal = false;
        }
        for (l, &entry) in row.iter().enumerate().take(b) {
            if j != l && entry != 0 {
                equal_norm_orthogonal = false;
            }
        }
    }

    GeometricFlags {
        pairwise_nonparallel,
        nonperp_differences,
        acute_differences,
        equal_norm_orthogonal,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SupportEntry {
    pub k: Mode,
    pub support: usize,
    pub triple_form: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SupportReport {
    pub entries: Vec<SupportEntry>,
}

/// Report |supp k| and the triple form flag for each nontrivial resonance,
/// checking the structural conclusions the enumeration must satisfy: support
/// at least 3 always, at least 4 under acute differences, and no triple form
/// under nonperpendicular differences. A violation is a bug in the
/// enumeration, not a property of the input.
pub fn classify_supports(res: &ResonantSet, flags: &GeometricFlags) -> Result<SupportReport> {
    let mut entries = Vec::new();
    for k in res.k2() {
        let support = k.iter().filter(|&&x| x != 0).count();
        let triple = is_triple_form(k);
        if support < 3 {
            return Err(Error::Verification(format!(
                "resonant mode {k:?} has support {support} < 3"
            )));
        }
        if flags.acute_differences && support < 4 {
            return Err(Error::Verification(format!(
                "acute differences hold but resonant mode {k:?} has support {support} < 4"
            )));
        }
        if flags.nonperp_differences && triple {
            return Err(Error::Verification(format!(
                "nonperpendicular differences hold but {k:?} has the triple form"
            )));
        }
        entries.push(SupportEntry {
            k: k.clone(),
            support,
            triple_form: triple,
        });
    }
    Ok(SupportReport { entries })
}

/// Result of an exhaustive basis scan.
#[derive(Clone, Debug)]
pub struct SearchOutcome {
    /// Bases satisfying the predicate, vectors sorted lexicographically,
    /// in scan order.
    pub hits: Vec<Basis>,
    /// Independent tuples examined.
    pub scanned: usize,
    /// Tuples skipped because the enumeration bound exceeded the cap.
    pub skipped_bound: usize,
}

/// Scan all sets of b linearly independent vectors in {|n|_inf <= radius}^d
/// (lexicographic combinations, so each unordered tuple appears once) and
/// return those whose flags and resonant set satisfy `want`. Tuples whose
/// enumeration bound exceeds `bound_cap` are skipped and counted, keeping the
/// scan total; `limit` stops the scan after that many hits.
pub fn search_bases<F>(
    d: usize,
    b: usize,
    radius: i64,
    mut want: F,
    bound_cap: f64,
    limit: Option<usize>,
) -> Result<SearchOutcome>
where
    F: FnMut(&GeometricFlags, &ResonantSet) -> bool,
{
    if radius < 1 {
        return Err(Error::InvalidParam("search radius must be at least 1".into()));
    }
    if b == 0 || b > d {
        return Err(Error::InvalidParam(format!(
            "need 1 <= b <= d, got b = {b}, d = {d}"
        )));
    }

    // All nonzero vectors of the box, ascending lexicographic.
    let mut vectors: Vec<Vec<i64>> = Vec::new();
    let mut v = vec![-radius; d];
    'gen: loop {
        if v.iter().any(|&x| x != 0) {
            vectors.push(v.clone());
        }
        let mut j = d;
        while j > 0 {
            j -= 1;
            if v[j] < radius {
                v[j] += 1;
                for vv in &mut v[j + 1..] {
                    *vv = -radius;
                }
                continue 'gen;
            }
        }
        break;
    }

    let mut out = SearchOutcome {
        hits: Vec::new(),
        scanned: 0,
        skipped_bound: 0,
    };
    let mut idx = vec![0usize; b];
    for (i, slot) in idx.iter_mut().enumerate() {
        *slot = i;
    }
    if vectors.len() < b {
        return Ok(out);
    }
    loop {
        let tuple: Vec<Vec<i64>> = idx.iter().map(|&i| vectors[i].clone()).collect();
        if let Ok(basis) = Basis::new(tuple, 0.0) {
            out.scanned += 1;
            let bound = enumeration_bound(&basis);
            if bound > bound_cap {
                out.skipped_bound += 1;
            } else {
                let flags = geometric_flags(&basis);
                let res = enumerate_resonant_bounded(&basis, bound)?;
                if want(&flags, &res) {
                    out.hits.push(basis);
                    if limit.is_some_and(|l| out.hits.len() >= l) {
                        return Ok(out);
                    }
                }
            }
        }
        // Next combination in lexicographic order.
        let mut j = b;
        loop {
            if j == 0 {
                return Ok(out);
            }
            j -= 1;
            if idx[j] < vectors.len() - (b - j) {
                idx[j] += 1;
                for l in (j + 1)..b {
                    idx[l] = idx[l - 1] + 1;
                }
                break;
            }
        }
    }
}
