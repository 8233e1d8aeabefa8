//! Finitely supported elements of the group algebra with small matrix
//! coefficients: `x = sum_g x(g) λ_g` with `x(g)` a `d x d` complex matrix.
//!
//! The trace is normalized so that `τ(1) = 1`: `τ(x) = tr(x(e)) / d`.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lengths::LengthFunction;
use crate::linalg::spectral_norm;
use crate::words::Word;

/// Largest supported coefficient dimension.
pub const MAX_DIM: usize = 8;
/// Default cap on the support size of intermediate products.
pub const DEFAULT_SUPPORT_CAP: usize = 2_000_000;

pub type Coeff = DMatrix<Complex64>;

fn is_zero(m: &Coeff) -> bool {
    m.iter().all(|z| z.re == 0.0 && z.im == 0.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupAlgebraElement {
    dim: usize,
    terms: BTreeMap<Word, Coeff>,
}

impl GroupAlgebraElement {
    pub fn zero(dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::BadDimension(dim));
        }
        Ok(Self {
            dim,
            terms: BTreeMap::new(),
        })
    }

    /// `c λ_h` with scalar `c`.
    pub fn monomial(h: Word, c: Complex64) -> Self {
        Self::from_scalars([(h, c)])
    }

    /// Sum of `c_k λ_{h_k}` with scalar coefficients; repeated words add up.
    pub fn from_scalars<I: IntoIterator<Item = (Word, Complex64)>>(terms: I) -> Self {
        Self::from_terms(
            1,
            terms
                .into_iter()
                .map(|(w, c)| (w, DMatrix::from_element(1, 1, c))),
        )
        .expect("scalar terms are 1x1")
    }

    /// Sum of `c_k λ_{h_k}` with `dim x dim` coefficients; repeated words add up.
    pub fn from_terms<I: IntoIterator<Item = (Word, Coeff)>>(dim: usize, terms: I) -> Result<Self> {
        let mut x = Self::zero(dim)?;
        for (w, c) in terms {
            if c.nrows() != dim || c.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: c.nrows().max(c.ncols()),
                });
            }
            x.accumulate(w, &c);
        }
        x.prune();
        Ok(x)
    }

    fn accumulate(&mut self, w: Word, c: &Coeff) {
        match self.terms.get_mut(&w) {
            Some(existing) => *existing += c,
            None => {
                self.terms.insert(w, c.clone());
            }
        }
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| !is_zero(c));
    }

    fn from_map(dim: usize, map: HashMap<Word, Coeff>) -> Self {
        let mut x = Self {
            dim,
            terms: map.into_iter().collect(),
        };
        x.prune();
        x
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of support words.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in canonical word order.
    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Coeff)> {
        self.terms.iter()
    }

    pub fn support(&self) -> Vec<Word> {
        self.terms.keys().cloned().collect()
    }

    pub fn coefficient(&self, w: &Word) -> Option<&Coeff> {
        self.terms.get(w)
    }

    /// Scalar coefficient at `w`, for `dim == 1` elements.
    pub fn scalar_coefficient(&self, w: &Word) -> Complex64 {
        self.terms
            .get(w)
            .map_or(Complex64::new(0.0, 0.0), |c| c[(0, 0)])
    }

    /// Largest generator index in the support (at least 1).
    pub fn rank(&self) -> u32 {
        self.terms.keys().map(Word::max_generator).max().unwrap_or(0).max(1)
    }

    /// Longest support word.
    pub fn max_word_length(&self) -> usize {
        self.terms.keys().map(Word::len).max().unwrap_or(0)
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.accumulate(w.clone(), c);
        }
        out.prune();
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = Self {
            dim: self.dim,
            terms: self.terms.iter().map(|(w, c)| (w.clone(), c * s)).collect(),
        };
        out.prune();
        out
    }

    /// `(xy)(g) = sum_h x(h) y(h^-1 g)`.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut acc: HashMap<Word, Coeff> =
            HashMap::with_capacity(self.terms.len() * other.terms.len());
        for (h, xh) in &self.terms {
            for (k, yk) in &other.terms {
                let prod = xh * yk;
                let g = h.mul(k);
                match acc.get_mut(&g) {
                    Some(existing) => *existing += prod,
                    None => {
                        acc.insert(g, prod);
                    }
                }
            }
        }
        Ok(Self::from_map(self.dim, acc))
    }

    /// `x*(g) = x(g^-1)^†`.
    pub fn adjoint(&self) -> Self {
        Self {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(w, c)| (w.inverse(), c.adjoint()))
                .collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.terms
            .get(&Word::identity())
            .map_or(Complex64::new(0.0, 0.0), |c| c.trace() / self.dim as f64)
    }

    /// `sqrt(τ(x* x)) = sqrt(sum_g tr(x(g)^† x(g)) / d)`.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.terms.values().map(|c| c.norm_squared()).sum();
        (s / self.dim as f64).sqrt()
    }

    /// Multiplies each coefficient by `exp(-t psi(g))`.
    pub fn apply_semigroup(&self, psi: &LengthFunction, t: f64) -> Result<Self> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::InvalidArgument(format!("t must be nonnegative, got {t}")));
        }
        let mut terms = BTreeMap::new();
        for (w, c) in &self.terms {
            let factor = (-t * psi.evaluate(w)?).exp();
            terms.insert(w.clone(), c * Complex64::new(factor, 0.0));
        }
        let mut out = Self {
            dim: self.dim,
            terms,
        };
        out.prune();
        Ok(out)
    }

    /// `T_t |x - T_t x|^2`, i.e. `T_t (y* y)` with `y = x - T_t x`.
    pub fn bmo_integrand(&self, psi: &LengthFunction, t: f64) -> Result<Self> {
        if t.is_nan() || t <= 0.0 {
            return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
        }
        let y = self.sub(&self.apply_semigroup(psi, t)?)?;
        y.adjoint().convolve(&y)?.apply_semigroup(psi, t)
    }

    /// `(τ((x* x)^{p/2}))^{1/p}` for even `p`.
    pub fn moment_norm(&self, p: u32, support_cap: usize) -> Result<f64> {
        if p < 2 || !p.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!("p must be even and >= 2, got {p}")));
        }
        let square = self.adjoint().convolve(self)?;
        let q = p / 2;
        let left = power(&square, q.div_ceil(2), support_cap)?;
        let right = power(&square, q / 2, support_cap)?;
        let tau = pairing_trace(&left, &right);
        Ok(tau.re.max(0.0).powf(1.0 / f64::from(p)))
    }

    /// Spectral norms of `sum c_k^† c_k` (column) and `sum c_k c_k^†` (row).
    pub fn rcp_norms(&self) -> (f64, f64) {
        if self.terms.is_empty() {
            return (0.0, 0.0);
        }
        let d = self.dim;
        let mut col = Coeff::zeros(d, d);
        let mut row = Coeff::zeros(d, d);
        for c in self.terms.values() {
            col += c.adjoint() * c;
            row += c * c.adjoint();
        }
        (spectral_norm(&col), spectral_norm(&row))
    }

    /// `2 max(‖sum c^† c‖^{1/2}, ‖sum c c^†‖^{1/2})`, an upper bound for the
    /// operator norm when the support is a free set.
    pub fn haagerup_pisier_bound(&self, free_support_certificate: bool) -> Result<f64> {
        if !free_support_certificate {
            return Err(Error::MissingFreeCertificate);
        }
        let (col, row) = self.rcp_norms();
        Ok(2.0 * col.max(row).sqrt())
    }

    /// Triangle-inequality upper bound `sum ‖x(g)‖`, valid for any support.
    pub fn trivial_upper_bound(&self) -> f64 {
        self.terms.values().map(spectral_norm).sum()
    }
}

/// `τ(l r) = (1/d) sum_g tr(l(g) r(g^-1))`, without forming the product.
fn pairing_trace(left: &GroupAlgebraElement, right: &GroupAlgebraElement) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for (g, lg) in &left.terms {
        if let Some(rg) = right.terms.get(&g.inverse()) {
            s += (lg * rg).trace();
        }
    }
    s / left.dim as f64
}

fn power(x: &GroupAlgebraElement, n: u32, cap: usize) -> Result<GroupAlgebraElement> {
    let mut acc = GroupAlgebraElement::from_terms(
        x.dim,
        [(Word::identity(), Coeff::identity(x.dim, x.dim))],
    )?;
    for _ in 0..n {
        acc = acc.convolve(x)?;
        if acc.len() > cap {
            return Err(Error::SupportTooLarge {
                size: acc.len(),
                cap,
            });
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::reduce;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn lam(letters: &[i32]) -> GroupAlgebraElement {
        GroupAlgebraElement::monomial(reduce(letters).unwrap(), c(1.0))
    }

    fn unit(d: usize, i: usize, j: usize) -> Coeff {
        let mut m = Coeff::zeros(d, d);
        m[(i, j)] = c(1.0);
        m
    }

    #[test]
    fn convolution_examples() {
        let p = lam(&[1]).convolve(&lam(&[-1])).unwrap();
        assert_eq!(p, lam(&[]));

        let x = lam(&[1]).add(&lam(&[2])).unwrap();
        let y = lam(&[-1]).add(&lam(&[-2])).unwrap();
        let p = x.convolve(&y).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.scalar_coefficient(&Word::identity()), c(2.0));
        assert_eq!(p.scalar_coefficient(&reduce(&[1, -2]).unwrap()), c(1.0));
        assert_eq!(p.scalar_coefficient(&reduce(&[2, -1]).unwrap()), c(1.0));
    }

    #[test]
    fn adjoint_and_trace_examples() {
        let h = reduce(&[1, 2]).unwrap();
        let z = Complex64::new(1.0, 2.0);
        let x = GroupAlgebraElement::monomial(h.clone(), z);
        let xs = x.adjoint();
        assert_eq!(xs.scalar_coefficient(&h.inverse()), z.conj());
        assert_eq!(xs.adjoint(), x);

        assert_eq!(lam(&[]).trace(), c(1.0));
        assert_eq!(lam(&[1, 2]).trace(), c(0.0));
    }

    #[test]
    fn l2_examples() {
        let x = GroupAlgebraElement::from_scalars((1..=10).map(|k| (Word::power(1, 1 << k), c(1.0))));
        assert!((x.l2_norm() - 10f64.sqrt()).abs() < 1e-15);
        assert_eq!(lam(&[2, -1]).l2_norm(), 1.0);
    }

    #[test]
    fn semigroup_examples() {
        let psi = LengthFunction::abs();
        let x = lam(&[1, 1]);
        assert_eq!(x.apply_semigroup(&psi, 0.0).unwrap(), x);
        let e = lam(&[]);
        assert_eq!(e.apply_semigroup(&psi, 3.0).unwrap(), e);
        let y = x.apply_semigroup(&psi, 0.5).unwrap();
        assert!((y.scalar_coefficient(&Word::power(1, 2)).re - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn integrand_of_a_monomial_is_central() {
        let psi = LengthFunction::word_length();
        let h = reduce(&[1, 2, 1]).unwrap();
        let t = 0.7;
        let y = GroupAlgebraElement::monomial(h, c(1.0)).bmo_integrand(&psi, t).unwrap();
        assert_eq!(y.len(), 1);
        let want = (1.0 - (-3.0 * t).exp()).powi(2);
        assert!((y.scalar_coefficient(&Word::identity()).re - want).abs() < 1e-15);
    }

    #[test]
    fn moments_on_the_integers() {
        let x = lam(&[1]).add(&lam(&[-1])).unwrap();
        let m4 = x.moment_norm(4, DEFAULT_SUPPORT_CAP).unwrap();
        assert!((m4 - 6f64.powf(0.25)).abs() < 1e-14);
        assert!((x.moment_norm(2, DEFAULT_SUPPORT_CAP).unwrap() - x.l2_norm()).abs() < 1e-14);
        assert!(x.moment_norm(3, DEFAULT_SUPPORT_CAP).is_err());
    }

    #[test]
    fn moment_support_cap() {
        let x = GroupAlgebraElement::from_scalars(
            [1, -1, 2, -2].map(|k| (Word::letter(k), c(1.0))),
        );
        assert!(matches!(x.moment_norm(8, 10), Err(Error::SupportTooLarge { .. })));
    }

    #[test]
    fn rcp_examples() {
        let x = GroupAlgebraElement::from_scalars([(Word::letter(1), c(3.0)), (Word::letter(2), c(4.0))]);
        assert_eq!(x.rcp_norms(), (25.0, 25.0));

        let x = GroupAlgebraElement::from_terms(
            2,
            [(Word::letter(1), unit(2, 0, 0)), (Word::letter(2), unit(2, 0, 1))],
        )
        .unwrap();
        let (col, row) = x.rcp_norms();
        assert!((col - 1.0).abs() < 1e-14 && (row - 2.0).abs() < 1e-14);
        assert_eq!(GroupAlgebraElement::zero(3).unwrap().rcp_norms(), (0.0, 0.0));
    }

    #[test]
    fn hp_bound_examples() {
        let x = GroupAlgebraElement::from_scalars((1..=5).map(|k| (Word::letter(k), c(1.0))));
        assert!((x.haagerup_pisier_bound(true).unwrap() - 2.0 * 5f64.sqrt()).abs() < 1e-14);
        let y = GroupAlgebraElement::monomial(Word::letter(1), Complex64::new(0.0, -3.0));
        assert!((y.haagerup_pisier_bound(true).unwrap() - 6.0).abs() < 1e-14);
        assert!(matches!(x.haagerup_pisier_bound(false), Err(Error::MissingFreeCertificate)));
    }

    #[test]
    fn dimension_errors() {
        assert!(matches!(GroupAlgebraElement::zero(9), Err(Error::BadDimension(9))));
        let x = GroupAlgebraElement::zero(2).unwrap();
        let y = GroupAlgebraElement::zero(3).unwrap();
        assert!(matches!(x.convolve(&y), Err(Error::DimensionMismatch { .. })));
        assert!(GroupAlgebraElement::from_terms(2, [(Word::identity(), unit(3, 0, 0))]).is_err());
    }

    #[test]
    fn zero_terms_are_pruned() {
        let x = lam(&[1]).sub(&lam(&[1])).unwrap();
        assert!(x.is_empty());
    }
}
