//! The left regular representation restricted to inputs on a finite ball.
//!
//! For `x = sum_h x(h) λ_h` the map `ξ ↦ (g ↦ sum_h x(h) ξ(h^-1 g))` is
//! applied matrix-free: for each support word and each ball word the output
//! slot of `h·w` is precomputed once, so repeated applications (power
//! iteration, sweeps over coefficient values on a fixed support) are pure
//! index arithmetic. Output words are indexed lazily and never enumerated.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{Coeff, GroupAlgebraElement};
use crate::error::{Error, Result};
use crate::words::{enumerate_ball, Word};

pub const POWER_REL_TOL: f64 = 1e-8;
pub const POWER_MAX_ITER: usize = 10_000;
const POWER_RESIDUAL_TOL: f64 = 1e-4;
const START_SEED: u64 = 0x6c61_6375_6e61;

#[derive(Clone, Debug)]
pub struct TruncatedRepresentation {
    rank: u32,
    radius: usize,
    basis: Vec<Word>,
    index: HashMap<Word, usize>,
}

impl TruncatedRepresentation {
    pub fn new(rank: u32, radius: usize, ball_cap: usize) -> Result<Self> {
        let basis = enumerate_ball(rank, radius, ball_cap)?;
        let index = basis.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
        Ok(Self {
            rank,
            radius,
            basis,
            index,
        })
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Ball words in `enumerate_ball` order.
    pub fn basis(&self) -> &[Word] {
        &self.basis
    }

    pub fn index_of(&self, w: &Word) -> Option<usize> {
        self.index.get(w).copied()
    }

    /// Precomputes the translation table for a fixed support.
    pub fn prepare(&self, support: &[Word]) -> Result<PreparedOperator> {
        if let Some(w) = support.iter().find(|w| w.max_generator() > self.rank) {
            return Err(Error::InvalidArgument(format!(
                "support word {w} uses generators beyond rank {}",
                self.rank
            )));
        }
        let n = self.basis.len();
        let mut outputs: HashMap<Word, u32> = HashMap::new();
        let mut targets = Vec::with_capacity(support.len() * n);
        for h in support {
            for w in &self.basis {
                let next = outputs.len() as u32;
                let slot = *outputs.entry(h.mul(w)).or_insert(next);
                targets.push(slot);
            }
        }
        Ok(PreparedOperator {
            basis_len: n,
            support: support.to_vec(),
            targets,
            n_out: outputs.len(),
        })
    }

    /// Lower bound for `‖x‖` in the group von Neumann algebra.
    pub fn operator_norm_lower(&self, x: &GroupAlgebraElement) -> Result<NormEstimate> {
        let support = x.support();
        let op = self.prepare(&support)?;
        let coeffs: Vec<&Coeff> = support
            .iter()
            .map(|w| x.coefficient(w).expect("support word"))
            .collect();
        Ok(op.norm(x.dim(), &coeffs, None).0)
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct NormEstimate {
    /// Best certified lower bound found.
    pub value: f64,
    /// Whether the power iteration met the relative tolerance.
    pub converged: bool,
    pub iterations: usize,
    pub basis_size: usize,
}

/// A support fixed against a truncated representation.
#[derive(Clone, Debug)]
pub struct PreparedOperator {
    basis_len: usize,
    support: Vec<Word>,
    targets: Vec<u32>,
    n_out: usize,
}

struct Flat {
    dim: usize,
    /// Row-major `d x d` blocks, one per support word.
    blocks: Vec<Complex64>,
}

impl Flat {
    fn new(dim: usize, coeffs: &[&Coeff]) -> Self {
        let mut blocks = Vec::with_capacity(coeffs.len() * dim * dim);
        for c in coeffs {
            for r in 0..dim {
                for s in 0..dim {
                    blocks.push(c[(r, s)]);
                }
            }
        }
        Self { dim, blocks }
    }
}

impl PreparedOperator {
    pub fn support(&self) -> &[Word] {
        &self.support
    }

    pub fn output_len(&self) -> usize {
        self.n_out
    }

    fn apply(&self, flat: &Flat, v: &[Complex64], out: &mut [Complex64]) {
        let (n, d) = (self.basis_len, flat.dim);
        out.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for (s, targets) in self.targets.chunks_exact(n).enumerate() {
            let block = &flat.blocks[s * d * d..(s + 1) * d * d];
            if d == 1 {
                let c = block[0];
                for (i, &o) in targets.iter().enumerate() {
                    out[o as usize] += c * v[i];
                }
                continue;
            }
            for (i, &o) in targets.iter().enumerate() {
                let src = &v[i * d..(i + 1) * d];
                let dst = &mut out[o as usize * d..(o as usize + 1) * d];
                for r in 0..d {
                    let row = &block[r * d..(r + 1) * d];
                    dst[r] += row.iter().zip(src).map(|(a, b)| a * b).sum::<Complex64>();
                }
            }
        }
    }

    fn apply_adjoint(&self, flat: &Flat, w: &[Complex64], out: &mut [Complex64]) {
        let (n, d) = (self.basis_len, flat.dim);
        out.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for (s, targets) in self.targets.chunks_exact(n).enumerate() {
            let block = &flat.blocks[s * d * d..(s + 1) * d * d];
            if d == 1 {
                let c = block[0].conj();
                for (i, &o) in targets.iter().enumerate() {
                    out[i] += c * w[o as usize];
                }
                continue;
            }
            for (i, &o) in targets.iter().enumerate() {
                let src = &w[o as usize * d..(o as usize + 1) * d];
                let dst = &mut out[i * d..(i + 1) * d];
                for (r, &sr) in src.iter().enumerate() {
                    let row = &block[r * d..(r + 1) * d];
                    for (dc, a) in dst.iter_mut().zip(row) {
                        *dc += a.conj() * sr;
                    }
                }
            }
        }
    }

    fn start_vector(&self, dim: usize, seed: u64, positive: bool) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..self.basis_len * dim)
            .map(|_| {
                if positive {
                    Complex64::new(rng.gen::<f64>(), 0.0)
                } else {
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                }
            })
            .collect()
    }

    /// Power iteration on `A^* A - shift` from `start`; returns `(sigma, converged,
    /// iterations, final unit vector)`.
    fn power_iterate(
        &self,
        flat: &Flat,
        shift: f64,
        mut v: Vec<Complex64>,
    ) -> (f64, bool, usize, Vec<Complex64>) {
        let d = flat.dim;
        let mut w = vec![Complex64::new(0.0, 0.0); self.n_out * d];
        let norm = l2(&v);
        if norm == 0.0 {
            return (0.0, true, 0, v);
        }
        v.iter_mut().for_each(|z| *z /= norm);
        let mut best = 0.0f64;
        let mut prev = 0.0f64;
        let mut next = vec![Complex64::new(0.0, 0.0); v.len()];
        for it in 1..=POWER_MAX_ITER {
            self.apply(flat, &v, &mut w);
            let s2 = l2_sq(&w);
            best = best.max(s2);
            self.apply_adjoint(flat, &w, &mut next);
            if shift > 0.0 {
                next.iter_mut().zip(&v).for_each(|(a, b)| *a -= b * shift);
            }
            // A small change in s2 alone is not enough: an iterate sitting
            // near a cluster of eigenvectors can stall there. The residual
            // test only catches that case, it is not a precision target.
            let residual = next
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - b * (s2 - shift)).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let norm = l2(&next);
            std::mem::swap(&mut v, &mut next);
            let settled = it > 1
                && (s2 - prev).abs() <= POWER_REL_TOL * s2
                && residual <= POWER_RESIDUAL_TOL * s2;
            if norm == 0.0 || settled {
                return (best.sqrt(), true, it, v);
            }
            prev = s2;
            normalize_flushing(&mut v, norm);
        }
        (best.sqrt(), false, POWER_MAX_ITER, v)
    }

    /// `σ_min(c_e) - sum_{h != e} ‖c_h‖` clamped at zero, a lower bound for
    /// every singular value of the truncated map. Its square shifts the
    /// iteration, which matters when the identity term dominates and the
    /// top of the spectrum of `A^* A` is tightly clustered.
    fn spectral_floor(&self, coeffs: &[&Coeff]) -> f64 {
        let Some(e) = self.support.iter().position(Word::is_identity) else {
            return 0.0;
        };
        let smallest = coeffs[e]
            .clone()
            .singular_values()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let rest: f64 = coeffs
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != e)
            .map(|(_, c)| crate::linalg::spectral_norm(c))
            .sum();
        // keep a margin so rounding cannot push the shifted operator negative
        ((smallest - rest) * (1.0 - 1e-9)).max(0.0)
    }

    /// Largest singular value estimate for coefficients given in support
    /// order. Runs from a seeded positive start, then from a second seed
    /// (or from `warm` when supplied), and reports the larger value. The
    /// exact column bound `‖sum c^† c‖^{1/2}` (input `δ_e ⊗ v`) is folded in.
    ///
    /// Returns the estimate and the final vector of the better run.
    pub fn norm(
        &self,
        dim: usize,
        coeffs: &[&Coeff],
        warm: Option<Vec<Complex64>>,
    ) -> (NormEstimate, Vec<Complex64>) {
        assert_eq!(coeffs.len(), self.support.len(), "one coefficient per support word");
        let flat = Flat::new(dim, coeffs);
        let shift = self.spectral_floor(coeffs).powi(2);
        let first = self.power_iterate(&flat, shift, self.start_vector(dim, START_SEED, true));
        let second_start = match warm {
            Some(v) if v.len() == self.basis_len * dim => v,
            _ => self.start_vector(dim, START_SEED + 1, false),
        };
        let second = self.power_iterate(&flat, shift, second_start);
        let (best, other) = if second.0 > first.0 {
            (second, first)
        } else {
            (first, second)
        };
        let column = column_bound(dim, coeffs);
        let estimate = NormEstimate {
            value: best.0.max(column),
            converged: best.1 || other.1 && other.0 >= best.0,
            iterations: best.2 + other.2,
            basis_size: self.basis_len,
        };
        (estimate, best.3)
    }
}

/// Scales to unit norm and zeroes components far below double precision
/// of the whole vector; left alone they decay into subnormals, which are
/// orders of magnitude slower to multiply.
fn normalize_flushing(v: &mut [Complex64], norm: f64) {
    const FLUSH: f64 = 1e-150;
    for z in v.iter_mut() {
        *z /= norm;
        if z.re.abs() < FLUSH {
            z.re = 0.0;
        }
        if z.im.abs() < FLUSH {
            z.im = 0.0;
        }
    }
}

fn l2_sq(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

fn l2(v: &[Complex64]) -> f64 {
    l2_sq(v).sqrt()
}

fn column_bound(dim: usize, coeffs: &[&Coeff]) -> f64 {
    let mut acc = Coeff::zeros(dim, dim);
    for c in coeffs {
        acc += c.adjoint() * *c;
    }
    crate::linalg::spectral_norm(&acc).sqrt()
}

/// Lower bound for `‖x‖` from the ball of radius `radius` in the rank of
/// the support.
pub fn operator_norm_lower(
    x: &GroupAlgebraElement,
    radius: usize,
    ball_cap: usize,
) -> Result<NormEstimate> {
    TruncatedRepresentation::new(x.rank(), radius, ball_cap)?.operator_norm_lower(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::DEFAULT_BALL_CAP;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn monomials_are_isometries() {
        for r in 0..4 {
            let x = GroupAlgebraElement::monomial(Word::from_letters([1, -2]).unwrap(), c(1.0));
            let est = operator_norm_lower(&x, r, DEFAULT_BALL_CAP).unwrap();
            assert!((est.value - 1.0).abs() < 1e-12, "{est:?}");
        }
    }

    #[test]
    fn two_cos_on_integers_approaches_two() {
        let x = GroupAlgebraElement::from_scalars([(Word::letter(1), c(1.0)), (Word::letter(-1), c(1.0))]);
        let est = operator_norm_lower(&x, 64, DEFAULT_BALL_CAP).unwrap();
        assert!(est.value >= 1.99 && est.value <= 2.0 + 1e-12, "{est:?}");
    }

    #[test]
    fn free_generators_sit_between_truncation_and_hp() {
        let x = GroupAlgebraElement::from_scalars((1..=4).map(|k| (Word::letter(k), c(1.0))));
        let est = operator_norm_lower(&x, 3, DEFAULT_BALL_CAP).unwrap();
        assert!(est.value >= 2.0 - 1e-9);
        assert!(est.value <= 4.0 + 1e-9);
    }

    #[test]
    fn basis_order_matches_ball() {
        let rep = TruncatedRepresentation::new(2, 2, DEFAULT_BALL_CAP).unwrap();
        assert_eq!(rep.basis(), enumerate_ball(2, 2, DEFAULT_BALL_CAP).unwrap().as_slice());
        assert_eq!(rep.index_of(&Word::identity()), Some(0));
    }

    #[test]
    fn rejects_support_outside_rank() {
        let rep = TruncatedRepresentation::new(1, 2, DEFAULT_BALL_CAP).unwrap();
        assert!(rep.prepare(&[Word::letter(2)]).is_err());
    }
}
