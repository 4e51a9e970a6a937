//! Lattice bases, spectral coefficient vectors, weighted analytic norms,
//! exact convolution, and the kernel/range projectors.
//!
//! A field u(theta, x) = sum_k uhat(k) e^{i(k.theta + n_k.x)} supported on the
//! lattice W = {(k, n_k) : k in Z^b} is stored as its finite coefficient
//! family uhat: Z^b -> C. Everything downstream (nonlinearity, divisors,
//! residuals) operates on these coefficients, so arithmetic here is exact
//! wherever possible: integer Gram forms, integer mode embedding, convolution
//! with no hidden truncation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resonance::ResonantSet;

/// Index k in Z^b of the lattice site n_k = sum_j k_j n_j.
pub type Mode = Vec<i64>;

/// Chosen spatial frequencies n_1..n_b in Z^d plus the potential constant rho.
#[derive(Clone, Debug)]
pub struct Basis {
    n: Vec<Vec<i64>>,
    rho: f64,
    gram: Vec<Vec<i64>>,
}

fn int_det(m: &[Vec<i128>]) -> i128 {
    let n = m.len();
    if n == 1 {
        return m[0][0];
    }
    let mut det = 0i128;
    for (j, &mj) in m[0].iter().enumerate() {
        if mj == 0 {
            continue;
        }
        let minor: Vec<Vec<i128>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(c, _)| *c != j)
                    .map(|(_, &v)| v)
                    .collect()
            })
            .collect();
        let sign = if j % 2 == 0 { 1 } else { -1 };
        det += sign * mj * int_det(&minor);
    }
    det
}

impl Basis {
    pub fn new(n: Vec<Vec<i64>>, rho: f64) -> Result<Self> {
        if n.is_empty() {
            return Err(Error::InvalidBasis("basis needs at least one vector".into()));
        }
        let b = n.len();
        let d = n[0].len();
        if d == 0 {
            return Err(Error::InvalidBasis("ambient dimension must be positive".into()));
        }
        if b > d {
            return Err(Error::InvalidBasis(format!(
                "{b} basis vectors cannot be independent in Z^{d}"
            )));
        }
        for (j, nj) in n.iter().enumerate() {
            if nj.len() != d {
                return Err(Error::InvalidBasis(format!(
                    "vector {j} has {} components, expected {d}",
                    nj.len()
                )));
            }
            if nj.iter().all(|&c| c == 0) {
                return Err(Error::InvalidBasis(format!("vector {j} is zero")));
            }
        }
        if !rho.is_finite() {
            return Err(Error::InvalidParam("rho must be finite".into()));
        }
        let mut gram = vec![vec![0i64; b]; b];
        for j in 0..b {
            for l in 0..b {
                let dot: i128 = (0..d).map(|i| n[j][i] as i128 * n[l][i] as i128).sum();
                gram[j][l] = i64::try_from(dot)
                    .map_err(|_| Error::InvalidBasis("Gram entry overflows i64".into()))?;
            }
        }
        let gi: Vec<Vec<i128>> = gram
            .iter()
            .map(|row| row.iter().map(|&v| v as i128).collect())
            .collect();
        if int_det(&gi) == 0 {
            return Err(Error::InvalidBasis(
                "basis vectors are linearly dependent (singular Gram matrix)".into(),
            ));
        }
        Ok(Self { n, rho, gram })
    }

    pub fn b(&self) -> usize {
        self.n.len()
    }

    pub fn d(&self) -> usize {
        self.n[0].len()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn vectors(&self) -> &[Vec<i64>] {
        &self.n
    }

    pub fn gram(&self) -> &[Vec<i64>] {
        &self.gram
    }

    /// n_k = sum_j k_j n_j, exact.
    pub fn embed(&self, k: &[i64]) -> Result<Vec<i64>> {
        if k.len() != self.b() {
            return Err(Error::DimensionMismatch(format!(
                "mode index has {} components, basis has {}",
                k.len(),
                self.b()
            )));
        }
        let d = self.d();
        let mut out = vec![0i64; d];
        for (kj, nj) in k.iter().zip(&self.n) {
            for i in 0..d {
                out[i] += kj * nj[i];
            }
        }
        Ok(out)
    }

    /// |n_k|^2 = k^T G k, exact integer arithmetic.
    pub fn embed_norm_sq(&self, k: &[i64]) -> i64 {
        debug_assert_eq!(k.len(), self.b());
        let mut acc = 0i128;
        for (j, &kj) in k.iter().enumerate() {
            for (l, &kl) in k.iter().enumerate() {
                acc += kj as i128 * kl as i128 * self.gram[j][l] as i128;
            }
        }
        i64::try_from(acc).expect("Gram form fits i64")
    }

    /// |n_j|^2 for a single basis vector.
    pub fn mode_norm_sq(&self, j: usize) -> i64 {
        self.gram[j][j]
    }

    /// Smallest eigenvalue c_1 of the Gram matrix; |n_k|^2 >= c_1 |k|^2.
    pub fn gram_min_eigen(&self) -> f64 {
        let b = self.b();
        let m = nalgebra::DMatrix::from_fn(b, b, |i, j| self.gram[i][j] as f64);
        let eig = m.symmetric_eigen();
        eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Unperturbed frequencies omega0_j = |n_j|^2 + rho.
    pub fn omega0(&self) -> Vec<f64> {
        (0..self.b()).map(|j| self.gram[j][j] as f64 + self.rho).collect()
    }
}

/// Finite family of Fourier amplitudes uhat: Z^b -> C, stored densely on the
/// box |k|_inf <= radius. Invariant: entries vanish outside the Euclidean
/// ball |k| <= radius (the box corners are dead storage).
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralVector {
    b: usize,
    radius: i64,
    side: usize,
    data: Vec<Complex64>,
}

impl SpectralVector {
    pub fn zero(b: usize, radius: i64) -> Result<Self> {
        if b == 0 {
            return Err(Error::InvalidParam("b must be positive".into()));
        }
        if radius < 0 {
            return Err(Error::InvalidParam("truncation radius must be nonnegative".into()));
        }
        let side = (2 * radius + 1) as usize;
        let mut len = 1usize;
        for _ in 0..b {
            len = len
                .checked_mul(side)
                .filter(|&l| l <= 1 << 31)
                .ok_or_else(|| Error::InvalidParam("truncation box too large".into()))?;
        }
        Ok(Self {
            b,
            radius,
            side,
            data: vec![Complex64::new(0.0, 0.0); len],
        })
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    #[inline]
    fn offset(&self, k: &[i64]) -> Option<usize> {
        debug_assert_eq!(k.len(), self.b);
        let mut idx = 0usize;
        for &kj in k {
            if kj.abs() > self.radius {
                return None;
            }
            idx = idx * self.side + (kj + self.radius) as usize;
        }
        Some(idx)
    }

    fn decode(&self, mut idx: usize) -> Mode {
        let mut k = vec![0i64; self.b];
        for j in (0..self.b).rev() {
            k[j] = (idx % self.side) as i64 - self.radius;
            idx /= self.side;
        }
        k
    }

    #[inline]
    pub fn in_ball(&self, k: &[i64]) -> bool {
        let r2: i64 = k.iter().map(|&kj| kj * kj).sum();
        r2 <= self.radius * self.radius
    }

    /// Amplitude at k; zero outside the stored ball.
    #[inline]
    pub fn get(&self, k: &[i64]) -> Complex64 {
        match self.offset(k) {
            Some(i) => self.data[i],
            None => Complex64::new(0.0, 0.0),
        }
    }

    pub fn set(&mut self, k: &[i64], v: Complex64) -> Result<()> {
        if k.len() != self.b {
            return Err(Error::DimensionMismatch(format!(
                "mode index has {} components, vector has {}",
                k.len(),
                self.b
            )));
        }
        if !self.in_ball(k) {
            return Err(Error::InvalidParam(format!(
                "mode {k:?} lies outside the truncation ball of radius {}",
                self.radius
            )));
        }
        let i = self.offset(k).expect("ball is contained in the box");
        self.data[i] = v;
        Ok(())
    }

    pub fn add_at(&mut self, k: &[i64], v: Complex64) -> Result<()> {
        let cur = self.get(k);
        self.set(k, cur + v)
    }

    /// Nonzero entries in ascending lexicographic order of k.
    pub fn nonzero(&self) -> Vec<(Mode, Complex64)> {
        let mut out = Vec::new();
        for (i, &v) in self.data.iter().enumerate() {
            if v.re != 0.0 || v.im != 0.0 {
                out.push((self.decode(i), v));
            }
        }
        out
    }

    pub fn support_len(&self) -> usize {
        self.data.iter().filter(|v| v.re != 0.0 || v.im != 0.0).count()
    }

    /// uhat(k) -> conj(uhat(-k)); the coefficient family of the conjugate field.
    pub fn conj_reflect(&self) -> Self {
        let mut out = Self {
            b: self.b,
            radius: self.radius,
            side: self.side,
            data: vec![Complex64::new(0.0, 0.0); self.data.len()],
        };
        for (i, &v) in self.data.iter().enumerate() {
            if v.re == 0.0 && v.im == 0.0 {
                continue;
            }
            let k = self.decode(i);
            let neg: Mode = k.iter().map(|&x| -x).collect();
            let j = out.offset(&neg).expect("box is symmetric");
            out.data[j] = v.conj();
        }
        out
    }

    /// Copy restricted to |k| <= new_radius.
    pub fn truncated(&self, new_radius: i64) -> Result<Self> {
        let mut out = Self::zero(self.b, new_radius)?;
        for (k, v) in self.nonzero() {
            if out.in_ball(&k) {
                let i = out.offset(&k).expect("checked in_ball");
                out.data[i] = v;
            }
        }
        Ok(out)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= c;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.b != other.b {
            return Err(Error::DimensionMismatch("mismatched mode dimensions".into()));
        }
        let r = self.radius.max(other.radius);
        let mut out = Self::zero(self.b, r)?;
        for (k, v) in self.nonzero() {
            out.add_at(&k, v)?;
        }
        for (k, v) in other.nonzero() {
            out.add_at(&k, v)?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scaled(Complex64::new(-1.0, 0.0)))
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.data.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    pub fn linf(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// All modes of the ball |k| <= radius in Z^b, ascending lexicographic order.
pub fn ball_modes(b: usize, radius: i64) -> Vec<Mode> {
    let mut out = Vec::new();
    let mut k = vec![-radius; b];
    'outer: loop {
        let r2: i64 = k.iter().map(|&x| x * x).sum();
        if r2 <= radius * radius {
            out.push(k.clone());
        }
        let mut j = b;
        while j > 0 {
            j -= 1;
            if k[j] < radius {
                k[j] += 1;
                for kk in &mut k[j + 1..] {
                    *kk = -radius;
                }
                continue 'outer;
            }
        }
        return out;
    }
}

/// Exact lattice convolution (x*y)(k) = sum_{p+q=k} x(p) y(q), retained for
/// |k| <= out_radius. Callers chaining convolutions must keep intermediates
/// at the full radius (sum of the factor radii) and truncate only at the end.
pub fn convolve(x: &SpectralVector, y: &SpectralVector, out_radius: i64) -> Result<SpectralVector> {
    if x.b() != y.b() {
        return Err(Error::DimensionMismatch("mismatched mode dimensions".into()));
    }
    let b = x.b();
    let mut out = SpectralVector::zero(b, out_radius)?;
    let xs = x.nonzero();
    let ys = y.nonzero();
    if xs.is_empty() || ys.is_empty() {
        return Ok(out);
    }
    let scatter_cost = xs.len() as u128 * ys.len() as u128;
    let gather_cost = out.data.len() as u128 * xs.len().min(ys.len()) as u128;
    if scatter_cost <= gather_cost {
        let mut k = vec![0i64; b];
        for (p, xv) in &xs {
            for (q, yv) in &ys {
                for j in 0..b {
                    k[j] = p[j] + q[j];
                }
                if out.in_ball(&k) {
                    if let Some(i) = out.offset(&k) {
                        out.data[i] += xv * yv;
                    }
                }
            }
        }
    } else {
        // Output-driven gather with the sparser factor inside; same sums,
        // different traversal.
        let (small, big) = if xs.len() <= ys.len() { (&xs, y) } else { (&ys, x) };
        let mut km = vec![0i64; b];
        for i in 0..out.data.len() {
            let k = out.decode(i);
            if !out.in_ball(&k) {
                continue;
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for (q, sv) in small.iter() {
                for j in 0..b {
                    km[j] = k[j] - q[j];
                }
                acc += sv * big.get(&km);
            }
            out.data[i] = acc;
        }
    }
    Ok(out)
}

/// Parameters of the weighted norm (C sum_k |uhat(k)|^2 w(k)^2)^{1/2} with
/// w(k) = max(|k|,1)^s e^{sigma |k|}, |k| Euclidean.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub sigma: f64,
    pub s: f64,
    pub algebra_const: f64,
}

/// Default normalization 4^s e^{b sigma}; validated by the submultiplicativity
/// property test, not proved.
pub fn default_algebra_const(b: usize, sigma: f64, s: f64) -> f64 {
    4f64.powf(s) * ((b as f64) * sigma).exp()
}

impl NormParams {
    pub fn new(sigma: f64, s: f64, algebra_const: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParam("sigma must be positive".into()));
        }
        if !s.is_finite() {
            return Err(Error::InvalidParam("s must be finite".into()));
        }
        if !(algebra_const.is_finite() && algebra_const > 0.0) {
            return Err(Error::InvalidParam("algebra_const must be positive".into()));
        }
        Ok(Self { sigma, s, algebra_const })
    }

    /// sigma = 0.5, s = b/2 + 1, default algebra constant.
    pub fn defaults_for(b: usize) -> Self {
        let sigma = 0.5;
        let s = b as f64 / 2.0 + 1.0;
        Self {
            sigma,
            s,
            algebra_const: default_algebra_const(b, sigma, s),
        }
    }

    /// The norm controls sup only when s > b/2; enforced where b is known.
    pub fn validate_for_b(&self, b: usize) -> Result<()> {
        if self.s <= b as f64 / 2.0 {
            return Err(Error::InvalidParam(format!(
                "s = {} must exceed b/2 = {}",
                self.s,
                b as f64 / 2.0
            )));
        }
        Ok(())
    }

    pub fn weight(&self, k: &[i64]) -> f64 {
        let r2: i64 = k.iter().map(|&kj| kj * kj).sum();
        let r = (r2 as f64).sqrt();
        r.max(1.0).powf(self.s) * (self.sigma * r).exp()
    }
}

pub fn weighted_norm(u: &SpectralVector, p: &NormParams) -> f64 {
    let mut sum = 0.0;
    for (k, v) in u.nonzero() {
        let w = p.weight(&k);
        sum += v.norm_sqr() * w * w;
    }
    (p.algebra_const * sum).sqrt()
}

/// Which side of the Lyapunov-Schmidt splitting to keep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    /// Range side: annihilates resonant modes.
    P,
    /// Kernel side: keeps only resonant modes.
    Q,
}

/// Entrywise projector; P(u) + Q(u) = u exactly.
pub fn project(u: &SpectralVector, res: &ResonantSet, part: Part) -> SpectralVector {
    let mut out = SpectralVector::zero(u.b(), u.radius()).expect("source box already valid");
    for (k, v) in u.nonzero() {
        let keep = match part {
            Part::P => !res.contains(&k),
            Part::Q => res.contains(&k),
        };
        if keep {
            out.set(&k, v).expect("mode from a valid vector");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resonance::enumerate_resonant;
    use crate::testutil::{t2, t3, t4};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn embed_examples() {
        assert_eq!(t2().embed(&[1, 1]).unwrap(), vec![1, 1]);
        assert_eq!(t2().embed(&[0, 0]).unwrap(), vec![0, 0]);
        assert_eq!(t3().embed(&[1, 1, -1]).unwrap(), vec![1, 1, 1]);
        assert!(t2().embed(&[1, 1, 1]).is_err());
    }

    #[test]
    fn embed_norm_matches_embedding() {
        let b3 = t3();
        for k in ball_modes(3, 3) {
            let n = b3.embed(&k).unwrap();
            let direct: i64 = n.iter().map(|&x| x * x).sum();
            assert_eq!(b3.embed_norm_sq(&k), direct);
        }
    }

    #[test]
    fn basis_rejections() {
        assert!(Basis::new(vec![], 0.0).is_err());
        assert!(Basis::new(vec![vec![0, 0]], 0.0).is_err());
        assert!(Basis::new(vec![vec![1, 0], vec![2, 0]], 0.0).is_err());
        assert!(Basis::new(vec![vec![1], vec![1]], 0.0).is_err());
        assert!(Basis::new(vec![vec![1, 0]], f64::NAN).is_err());
    }

    #[test]
    fn gram_min_eigen_examples() {
        assert_relative_eq!(t4().gram_min_eigen(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(t2().gram_min_eigen(), 1.0, max_relative = 1e-12);
        // Characteristic polynomial x^3 - 5x^2 + 5x - 1, smallest root 2 - sqrt(3).
        assert_relative_eq!(t3().gram_min_eigen(), 2.0 - 3f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn coercivity_random_bases() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut tried = 0;
        while tried < 100 {
            let b = rng.gen_range(1..=3usize);
            let d = rng.gen_range(b..=4usize);
            let n: Vec<Vec<i64>> = (0..b)
                .map(|_| (0..d).map(|_| rng.gen_range(-4..=4i64)).collect())
                .collect();
            let Ok(basis) = Basis::new(n, 0.1) else { continue };
            tried += 1;
            let c1 = basis.gram_min_eigen();
            // Spot-check the ball |k| <= 50 on a random slice plus all small k.
            let mut modes = ball_modes(b, 4);
            for _ in 0..500 {
                let k: Mode = (0..b).map(|_| rng.gen_range(-50..=50i64)).collect();
                if k.iter().map(|&x| x * x).sum::<i64>() <= 2500 {
                    modes.push(k);
                }
            }
            for k in modes {
                let ns = basis.embed_norm_sq(&k) as f64;
                let kk: i64 = k.iter().map(|&x| x * x).sum();
                assert!(
                    ns >= c1 * kk as f64 - 1e-9,
                    "coercivity failed: |n_k|^2 = {ns}, c1 |k|^2 = {}",
                    c1 * kk as f64
                );
            }
        }
    }

    #[test]
    fn weighted_norm_examples() {
        let p = NormParams::new(0.1, 1.0, 1.0).unwrap();
        let z = SpectralVector::zero(2, 3).unwrap();
        assert_eq!(weighted_norm(&z, &p), 0.0);

        let mut u = SpectralVector::zero(2, 3).unwrap();
        u.set(&[1, 0], Complex64::new(1.0, 0.0)).unwrap();
        assert_relative_eq!(weighted_norm(&u, &p), 0.1f64.exp(), max_relative = 1e-14);

        // sigma = 0: weights are |k|^s, so (1*1 + 4*2)^(1/2) = 3.
        let p0 = NormParams {
            sigma: 0.0,
            s: 1.0,
            algebra_const: 1.0,
        };
        let mut v = SpectralVector::zero(2, 3).unwrap();
        v.set(&[1, 0], Complex64::new(1.0, 0.0)).unwrap();
        v.set(&[1, 1], Complex64::new(2.0, 0.0)).unwrap();
        assert_relative_eq!(weighted_norm(&v, &p0), 3.0, max_relative = 1e-14);
    }

    #[test]
    fn ball_and_box_bookkeeping() {
        let mut u = SpectralVector::zero(2, 2).unwrap();
        // (2,2) is in the box but outside the Euclidean ball.
        assert!(u.set(&[2, 2], Complex64::new(1.0, 0.0)).is_err());
        assert!(u.set(&[2, 0], Complex64::new(1.0, 0.0)).is_ok());
        assert_eq!(u.get(&[5, 5]), Complex64::new(0.0, 0.0));
        assert_eq!(u.support_len(), 1);

        assert_eq!(ball_modes(2, 2).len(), 13);
        assert_eq!(ball_modes(1, 3).len(), 7);
        let modes = ball_modes(2, 1);
        assert_eq!(
            modes,
            vec![
                vec![-1, 0],
                vec![0, -1],
                vec![0, 0],
                vec![0, 1],
                vec![1, 0]
            ]
        );
    }

    #[test]
    fn conj_reflect_involution() {
        let mut u = SpectralVector::zero(2, 3).unwrap();
        u.set(&[1, 2], Complex64::new(0.5, -0.25)).unwrap();
        u.set(&[-1, 0], Complex64::new(2.0, 1.0)).unwrap();
        let r = u.conj_reflect();
        assert_eq!(r.get(&[-1, -2]), Complex64::new(0.5, 0.25));
        assert_eq!(r.conj_reflect(), u);
    }

    #[test]
    fn convolve_deltas() {
        let mut x = SpectralVector::zero(2, 1).unwrap();
        x.set(&[1, 0], Complex64::new(2.0, 0.0)).unwrap();
        let mut y = SpectralVector::zero(2, 1).unwrap();
        y.set(&[0, 1], Complex64::new(3.0, 0.0)).unwrap();
        let z = convolve(&x, &y, 2).unwrap();
        assert_eq!(z.get(&[1, 1]), Complex64::new(6.0, 0.0));
        assert_eq!(z.support_len(), 1);
    }

    #[test]
    fn convolve_strategies_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut x = SpectralVector::zero(2, 4).unwrap();
        let mut y = SpectralVector::zero(2, 4).unwrap();
        for k in ball_modes(2, 4) {
            if rng.gen_bool(0.7) {
                x.set(&k, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .unwrap();
            }
            if rng.gen_bool(0.2) {
                y.set(&k, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .unwrap();
            }
        }
        // Scatter (pair-driven) and gather (output-driven) must produce the
        // same sums up to addition order.
        let z = convolve(&x, &y, 8).unwrap();
        let mut brute = SpectralVector::zero(2, 8).unwrap();
        for (p, xv) in x.nonzero() {
            for (q, yv) in y.nonzero() {
                let k = vec![p[0] + q[0], p[1] + q[1]];
                brute.add_at(&k, xv * yv).unwrap();
            }
        }
        for (k, v) in z.nonzero() {
            assert!((v - brute.get(&k)).norm() < 1e-12);
        }
        assert_eq!(z.support_len(), brute.support_len());
    }

    #[test]
    fn real_coefficients_stay_real_under_convolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut x = SpectralVector::zero(2, 5).unwrap();
        for k in ball_modes(2, 5) {
            x.set(&k, Complex64::new(rng.gen_range(-1.0..1.0), 0.0)).unwrap();
        }
        let y = convolve(&x, &x.conj_reflect(), 10).unwrap();
        assert_eq!(y.max_abs_imag(), 0.0);
    }

    #[test]
    fn submultiplicativity_default_const() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let b = rng.gen_range(1..=3usize);
            let radius = 4i64;
            let p = NormParams::defaults_for(b);
            let mut u = SpectralVector::zero(b, radius).unwrap();
            let mut v = SpectralVector::zero(b, radius).unwrap();
            for k in ball_modes(b, radius) {
                if rng.gen_bool(0.5) {
                    u.set(&k, Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
                        .unwrap();
                }
                if rng.gen_bool(0.5) {
                    v.set(&k, Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
                        .unwrap();
                }
            }
            let prod = convolve(&u, &v, 2 * radius).unwrap();
            let lhs = weighted_norm(&prod.truncated(radius).unwrap(), &p);
            let rhs = weighted_norm(&u, &p) * weighted_norm(&v, &p);
            assert!(
                lhs <= rhs * (1.0 + 1e-12),
                "submultiplicativity violated: {lhs} > {rhs} (b = {b})"
            );
        }
    }

    #[test]
    fn projector_examples() {
        let basis = t2();
        let res = enumerate_resonant(&basis).unwrap();

        let mut u = SpectralVector::zero(2, 3).unwrap();
        u.set(&[1, 0], Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(project(&u, &res, Part::P).support_len(), 0);
        assert_eq!(project(&u, &res, Part::Q), u);

        let mut w = SpectralVector::zero(2, 3).unwrap();
        w.set(&[2, 0], Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(project(&w, &res, Part::Q).support_len(), 0);
        assert_eq!(project(&w, &res, Part::P), w);
    }

    proptest! {
        #[test]
        fn projectors_complete_and_orthogonal(entries in proptest::collection::vec(((-3i64..=3, -3i64..=3), (-1.0f64..1.0, -1.0f64..1.0)), 0..12)) {
            let basis = t2();
            let res = enumerate_resonant(&basis).unwrap();
            let mut u = SpectralVector::zero(2, 3).unwrap();
            for ((k0, k1), (re, im)) in entries {
                let k = vec![k0, k1];
                if u.in_ball(&k) {
                    u.set(&k, Complex64::new(re, im)).unwrap();
                }
            }
            let p = project(&u, &res, Part::P);
            let q = project(&u, &res, Part::Q);
            prop_assert_eq!(p.add(&q).unwrap(), u);
            prop_assert_eq!(project(&q, &res, Part::P).support_len(), 0);
        }

        #[test]
        fn norm_monotone_under_entry_removal(entries in proptest::collection::vec(((-3i64..=3, -3i64..=3), (-1.0f64..1.0, -1.0f64..1.0)), 1..12), drop_idx in 0usize..12) {
            let p = NormParams::defaults_for(2);
            let mut u = SpectralVector::zero(2, 3).unwrap();
            for ((k0, k1), (re, im)) in &entries {
                let k = vec![*k0, *k1];
                if u.in_ball(&k) {
                    u.set(&k, Complex64::new(*re, *im)).unwrap();
                }
            }
            let full = weighted_norm(&u, &p);
            let nz = u.nonzero();
            if !nz.is_empty() {
                let (k, _) = &nz[drop_idx % nz.len()];
                let mut v = u.clone();
                v.set(k, Complex64::new(0.0, 0.0)).unwrap();
                prop_assert!(weighted_norm(&v, &p) <= full * (1.0 + 1e-12));
            }
        }
    }
}
