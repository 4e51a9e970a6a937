//! Exact multivariate polynomials with integer coefficients in the resonant
//! amplitudes a_1..a_b. Used wherever a coefficient must be compared
//! symbolically rather than at a sample point: cubic coefficient extraction,
//! the matrix A, and its determinant.

use std::collections::BTreeMap;
use std::fmt;

/// Sparse exponent-vector representation; keys are exponent tuples of fixed
/// length nvars, values are nonzero integer coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntPoly {
    nvars: usize,
    terms: BTreeMap<Vec<u16>, i64>,
}

impl IntPoly {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: i64) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(&vec![0; nvars], c);
        p
    }

    /// c * a_1^{e_1} ... a_n^{e_n}.
    pub fn monomial(nvars: usize, exps: &[u16], c: i64) -> Self {
        assert_eq!(exps.len(), nvars);
        let mut p = Self::zero(nvars);
        p.add_term(exps, c);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, exps: &[u16], c: i64) {
        assert_eq!(exps.len(), self.nvars);
        if c == 0 {
            return;
        }
        let entry = self.terms.entry(exps.to_vec()).or_insert(0);
        *entry = entry.checked_add(c).expect("coefficient overflow");
        if *entry == 0 {
            self.terms.remove(exps);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, &c) in &other.terms {
            out.add_term(e, c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = -*c;
        }
        out
    }

    pub fn scale(&self, c: i64) -> Self {
        if c == 0 {
            return Self::zero(self.nvars);
        }
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v = v.checked_mul(c).expect("coefficient overflow");
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut out = Self::zero(self.nvars);
        for (e1, &c1) in &self.terms {
            for (e2, &c2) in &other.terms {
                let e: Vec<u16> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(&e, c1.checked_mul(c2).expect("coefficient overflow"));
            }
        }
        out
    }

    pub fn eval(&self, a: &[f64]) -> f64 {
        assert_eq!(a.len(), self.nvars);
        let mut sum = 0.0;
        for (e, &c) in &self.terms {
            let mut term = c as f64;
            for (x, &p) in a.iter().zip(e) {
                term *= x.powi(p as i32);
            }
            sum += term;
        }
        sum
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&x| x as u32).sum())
            .max()
            .unwrap_or(0)
    }

    /// Terms as (exponents, coefficient) pairs in ascending lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = (&[u16], i64)> {
        self.terms.iter().map(|(e, &c)| (e.as_slice(), c))
    }
}

/// Determinant of a square matrix of polynomials by Laplace expansion; the
/// empty matrix has determinant 1 (so an empty resonant block is never a
/// degeneracy).
pub fn det_poly(m: &[Vec<IntPoly>], nvars: usize) -> IntPoly {
    let n = m.len();
    if n == 0 {
        return IntPoly::constant(nvars, 1);
    }
    if n == 1 {
        return m[0][0].clone();
    }
    let mut det = IntPoly::zero(nvars);
    for j in 0..n {
        if m[0][j].is_zero() {
            continue;
        }
        let minor: Vec<Vec<IntPoly>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(c, _)| *c != j)
                    .map(|(_, p)| p.clone())
                    .collect()
            })
            .collect();
        let cof = m[0][j].mul(&det_poly(&minor, nvars));
        det = if j % 2 == 0 { det.add(&cof) } else { det.sub(&cof) };
    }
    det
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // Leading (lexicographically largest) term first.
        for (i, (e, c)) in self.terms.iter().rev().enumerate() {
            let mag = c.unsigned_abs();
            if i == 0 {
                if *c < 0 {
                    write!(f, "-")?;
                }
            } else if *c < 0 {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let vars: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0)
                .map(|(v, &p)| {
                    if p == 1 {
                        format!("a{}", v + 1)
                    } else {
                        format!("a{}^{}", v + 1, p)
                    }
                })
                .collect();
            if vars.is_empty() {
                write!(f, "{mag}")?;
            } else if mag == 1 {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{mag}*{}", vars.join("*"))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(i: usize, n: usize) -> IntPoly {
        let mut e = vec![0u16; n];
        e[i] = 1;
        IntPoly::monomial(n, &e, 1)
    }

    #[test]
    fn ring_arithmetic() {
        let x = a(0, 2);
        let y = a(1, 2);
        let p = x.add(&y).mul(&x.sub(&y));
        let q = x.mul(&x).sub(&y.mul(&y));
        assert_eq!(p, q);
        assert!(p.sub(&q).is_zero());
        assert_eq!(p.eval(&[3.0, 2.0]), 5.0);
        assert_eq!(p.degree(), 2);
    }

    #[test]
    fn cancellation_drops_terms() {
        let x = a(0, 1);
        let p = x.sub(&x);
        assert!(p.is_zero());
        assert_eq!(format!("{p}"), "0");
    }

    #[test]
    fn display_canonical() {
        let n = 3;
        let mut p = IntPoly::zero(n);
        p.add_term(&[2, 0, 0], 2);
        p.add_term(&[0, 2, 0], 2);
        p.add_term(&[0, 0, 2], -1);
        assert_eq!(format!("{p}"), "2*a1^2 + 2*a2^2 - a3^2");
        let one = IntPoly::constant(1, 1);
        assert_eq!(format!("{one}"), "1");
        let m = IntPoly::monomial(2, &[1, 1], -1);
        assert_eq!(format!("{m}"), "-a1*a2");
    }

    #[test]
    fn det_poly_cases() {
        let n = 2;
        assert_eq!(det_poly(&[], n), IntPoly::constant(n, 1));

        let x = a(0, n);
        let y = a(1, n);
        // [[x, y], [y, x]] -> x^2 - y^2
        let m = vec![vec![x.clone(), y.clone()], vec![y.clone(), x.clone()]];
        assert_eq!(det_poly(&m, n), x.mul(&x).sub(&y.mul(&y)));

        // Singular matrix of polynomials.
        let m2 = vec![vec![x.clone(), x.clone()], vec![x.clone(), x.clone()]];
        assert!(det_poly(&m2, n).is_zero());
    }
}
