//! Semigroup BMO estimates: certified lower bounds from truncated
//! representations or dense sampling on the circle, and upper bounds from
//! lacunarity.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::algebra::{Coeff, GroupAlgebraElement};
use crate::error::{Error, Result};
use crate::lacunary::{default_t_grid, lacunarity_constants};
use crate::lengths::LengthFunction;
use crate::linalg::spectral_norm;
use crate::truncated::TruncatedRepresentation;
use crate::words::Word;

/// Default number of sample points on the circle.
pub const DEFAULT_TORUS_SAMPLES: usize = 1 << 16;
const GOLDEN_REL_TOL: f64 = 1e-10;

/// The integrand `T_t|x - T_t x|^2` as a function of `t`, on its fixed
/// support `{h_k^-1 h_j}` where `h_k` ranges over support words with
/// positive length.
#[derive(Clone, Debug)]
pub struct IntegrandFamily {
    dim: usize,
    base: Vec<(Coeff, f64)>,
    words: Vec<Word>,
    word_lengths: Vec<f64>,
    /// `(k, j)` pairs contributing to each word.
    pairs: Vec<Vec<(usize, usize)>>,
}

impl IntegrandFamily {
    pub fn new(psi: &LengthFunction, x: &GroupAlgebraElement) -> Result<Self> {
        let mut base = Vec::new();
        let mut hs = Vec::new();
        for (h, c) in x.terms() {
            let v = psi.evaluate(h)?;
            if v > 0.0 {
                base.push((c.clone(), v));
                hs.push(h.clone());
            }
        }
        let mut index: HashMap<Word, usize> = HashMap::new();
        let mut words = Vec::new();
        let mut pairs: Vec<Vec<(usize, usize)>> = Vec::new();
        for (k, hk) in hs.iter().enumerate() {
            for (j, hj) in hs.iter().enumerate() {
                let w = hk.left_quotient(hj);
                let slot = *index.entry(w.clone()).or_insert_with(|| {
                    words.push(w);
                    pairs.push(Vec::new());
                    words.len() - 1
                });
                pairs[slot].push((k, j));
            }
        }
        let word_lengths = words
            .iter()
            .map(|w| psi.evaluate(w))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim: x.dim(),
            base,
            words,
            word_lengths,
            pairs,
        })
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coefficients at `t`, aligned with [`words`](Self::words).
    pub fn coefficients(&self, t: f64) -> Vec<Coeff> {
        let defect: Vec<f64> = self.base.iter().map(|(_, v)| -(-t * v).exp_m1()).collect();
        self.words
            .iter()
            .zip(&self.pairs)
            .zip(&self.word_lengths)
            .map(|((_, pairs), &len)| {
                let mut acc = Coeff::zeros(self.dim, self.dim);
                for &(k, j) in pairs {
                    let weight = defect[k] * defect[j];
                    acc += self.base[k].0.adjoint() * &self.base[j].0 * Complex64::new(weight, 0.0);
                }
                acc * Complex64::new((-t * len).exp(), 0.0)
            })
            .collect()
    }

    pub fn element(&self, t: f64) -> GroupAlgebraElement {
        GroupAlgebraElement::from_terms(
            self.dim,
            self.words.iter().cloned().zip(self.coefficients(t)),
        )
        .expect("dimensions agree")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BmoCEstimate {
    pub value: f64,
    pub t_star: f64,
    pub converged: bool,
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::InvalidArgument("empty t grid".into()));
    }
    if let Some(t) = t_grid.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidArgument(format!("grid points must be positive, got {t}")));
    }
    Ok(())
}

/// `max_t ‖T_t|x - T_t x|^2‖^{1/2}` with the norm bounded below on the ball
/// of radius `radius`.
pub fn bmo_c_estimate(
    psi: &LengthFunction,
    x: &GroupAlgebraElement,
    t_grid: &[f64],
    radius: usize,
    ball_cap: usize,
) -> Result<BmoCEstimate> {
    check_grid(t_grid)?;
    let family = IntegrandFamily::new(psi, x)?;
    if family.words.is_empty() {
        return Ok(BmoCEstimate {
            value: 0.0,
            t_star: t_grid[0],
            converged: true,
        });
    }
    let rank = x.rank().max(family.words.iter().map(Word::max_generator).max().unwrap_or(1));
    let rep = TruncatedRepresentation::new(rank, radius, ball_cap)?;
    let op = rep.prepare(&family.words)?;
    // Grid points are visited by decreasing triangle bound `sum ‖coeff‖`;
    // a point whose bound cannot beat the running maximum is skipped.
    let mut candidates: Vec<(f64, f64, Vec<Coeff>)> = t_grid
        .iter()
        .map(|&t| {
            let coeffs = family.coefficients(t);
            let upper = coeffs.iter().map(spectral_norm).sum::<f64>();
            (upper, t, coeffs)
        })
        .collect();
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)));
    let mut best = BmoCEstimate {
        value: 0.0,
        t_star: t_grid[0],
        converged: true,
    };
    let mut best_sq = 0.0f64;
    for (upper, t, coeffs) in candidates {
        if upper <= best_sq {
            break;
        }
        let refs: Vec<&Coeff> = coeffs.iter().collect();
        let (est, _) = op.norm(family.dim, &refs, None);
        best.converged &= est.converged;
        if est.value > best_sq {
            best_sq = est.value;
            best.value = est.value.sqrt();
            best.t_star = t;
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, Serialize)]
pub struct BmoEstimate {
    pub bmo_c_lower: f64,
    pub bmo_c_adjoint_lower: f64,
    pub bmo_lower: f64,
    pub certified_upper: Option<f64>,
    pub t_star: f64,
    pub radius_used: usize,
    pub converged: bool,
}

pub fn bmo_estimate(
    psi: &LengthFunction,
    x: &GroupAlgebraElement,
    t_grid: &[f64],
    radius: usize,
    ball_cap: usize,
) -> Result<BmoEstimate> {
    let column = bmo_c_estimate(psi, x, t_grid, radius, ball_cap)?;
    let row = bmo_c_estimate(psi, &x.adjoint(), t_grid, radius, ball_cap)?;
    let (bmo_lower, t_star) = if row.value > column.value {
        (row.value, row.t_star)
    } else {
        (column.value, column.t_star)
    };
    Ok(BmoEstimate {
        bmo_c_lower: column.value,
        bmo_c_adjoint_lower: row.value,
        bmo_lower,
        certified_upper: theorem1_certificate(psi, x),
        t_star,
        radius_used: radius,
        converged: column.converged && row.converged,
    })
}

/// Support ordered by increasing length; `None` on ties or undefined lengths.
fn lacunary_order(psi: &LengthFunction, x: &GroupAlgebraElement) -> Option<Vec<(Word, f64)>> {
    let mut seq = x
        .support()
        .into_iter()
        .map(|w| psi.evaluate(&w).ok().map(|v| (w, v)))
        .collect::<Option<Vec<_>>>()?;
    seq.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    if seq.windows(2).any(|p| p[0].1 == p[1].1) {
        return None;
    }
    Some(seq)
}

/// `sqrt(c_delta * max(‖sum c^† c‖, ‖sum c c^†‖))` when the support, sorted
/// by length, is lacunary. A single term `c λ_h` certifies `‖c‖`, which is
/// its exact column BMO norm when `psi(h) > 0`.
pub fn theorem1_certificate(psi: &LengthFunction, x: &GroupAlgebraElement) -> Option<f64> {
    match x.len() {
        0 => return Some(0.0),
        1 => {
            let (_, c) = x.terms().next().expect("one term");
            return Some(spectral_norm(c));
        }
        _ => {}
    }
    let seq: Vec<Word> = lacunary_order(psi, x)?.into_iter().map(|(w, _)| w).collect();
    let report = lacunarity_constants(psi, &seq).ok()?;
    let c = report.c_delta?;
    let (col, row) = x.rcp_norms();
    Some((c * col.max(row)).sqrt())
}

/// `sup_t τ(T_t|x - T_t x|^2) = sup_t sum_g (1 - e^{-t psi(g)})^2 tr|x(g)|^2 / d`,
/// optionally including the `t → ∞` limit.
pub fn bmo_lower_witness(
    psi: &LengthFunction,
    x: &GroupAlgebraElement,
    t_grid: &[f64],
    include_limit: bool,
) -> Result<f64> {
    let d = x.dim() as f64;
    let terms = x
        .terms()
        .map(|(w, c)| Ok((psi.evaluate(w)?, c.norm_squared() / d)))
        .collect::<Result<Vec<_>>>()?;
    let at = |t: f64| -> f64 {
        terms
            .iter()
            .map(|&(v, mass)| (-t * v).exp_m1().powi(2) * mass)
            .sum()
    };
    let mut best = t_grid.iter().map(|&t| at(t)).fold(0.0, f64::max);
    if include_limit {
        let limit: f64 = terms.iter().filter(|(v, _)| *v > 0.0).map(|(_, m)| m).sum();
        best = best.max(limit);
    }
    Ok(best)
}

#[derive(Clone, Debug, Serialize)]
pub struct TorusEstimate {
    pub value: f64,
    pub t_star: f64,
    pub theta_star: f64,
}

/// Real trigonometric polynomial `sum_k c_k e^{i k θ}` with Hermitian
/// coefficients.
struct TrigPolynomial {
    terms: Vec<(i64, Complex64)>,
}

impl TrigPolynomial {
    fn eval(&self, theta: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(k, c)| (c * Complex64::from_polar(1.0, k as f64 * theta)).re)
            .sum()
    }

    /// Samples at `2πj/n` via one inverse FFT.
    fn sample(&self, n: usize, planner: &mut FftPlanner<f64>) -> Vec<f64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for &(k, c) in &self.terms {
            buf[k.rem_euclid(n as i64) as usize] += c;
        }
        planner.plan_fft_inverse(n).process(&mut buf);
        buf.into_iter().map(|z| z.re).collect()
    }

    /// Golden-section maximization on `[lo, hi]`.
    fn refine(&self, lo: f64, hi: f64) -> (f64, f64) {
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (lo, hi);
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let (mut fc, mut fd) = (self.eval(c), self.eval(d));
        while (b - a).abs() > GOLDEN_REL_TOL * (a.abs() + b.abs()).max(1e-300) {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = self.eval(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = self.eval(d);
            }
        }
        let mid = 0.5 * (a + b);
        (mid, self.eval(mid))
    }
}

/// Torus path for rank-1 scalar elements: the integrand is a trigonometric
/// polynomial whose sup norm over the circle is its operator norm.
pub fn torus_bmo_estimate(
    psi: &LengthFunction,
    x: &GroupAlgebraElement,
    t_grid: &[f64],
    n_samples: usize,
) -> Result<TorusEstimate> {
    check_grid(t_grid)?;
    if x.dim() != 1 || x.terms().any(|(w, _)| w.as_integer().is_none()) {
        return Err(Error::NotRankOne);
    }
    if n_samples < 3 {
        return Err(Error::InvalidArgument("need at least 3 samples".into()));
    }
    let family = IntegrandFamily::new(psi, x)?;
    let freqs: Vec<i64> = family
        .words()
        .iter()
        .map(|w| w.as_integer().expect("rank-1 words"))
        .collect();
    let mut planner = FftPlanner::new();
    let step = 2.0 * PI / n_samples as f64;
    let mut best = TorusEstimate {
        value: 0.0,
        t_star: t_grid[0],
        theta_star: 0.0,
    };
    for &t in t_grid {
        let poly = TrigPolynomial {
            terms: freqs
                .iter()
                .zip(family.coefficients(t))
                .map(|(&k, c)| (k, c[(0, 0)]))
                .collect(),
        };
        if poly.terms.is_empty() {
            continue;
        }
        let samples = poly.sample(n_samples, &mut planner);
        let (jmax, &fmax) = samples
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty samples");
        let center = jmax as f64 * step;
        let (theta_ref, f_ref) = poly.refine(center - step, center + step);
        let (theta, f) = if f_ref > fmax {
            (theta_ref.rem_euclid(2.0 * PI), f_ref)
        } else {
            (center, fmax)
        };
        let value = f.max(0.0).sqrt();
        if value > best.value {
            best = TorusEstimate {
                value,
                t_star: t,
                theta_star: theta,
            };
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, Serialize)]
pub struct CorollaryReport {
    pub p: u32,
    /// `‖x‖_p^2` from exact moments.
    pub lhs: f64,
    /// `c_delta^{(p-2)/p} p^2 max(‖sum c^† c‖, ‖sum c c^†‖)`.
    pub rhs: f64,
    pub c_delta: f64,
    pub passed: bool,
}

pub fn corollary1_check(
    psi: &LengthFunction,
    x: &GroupAlgebraElement,
    p: u32,
    support_cap: usize,
) -> Result<CorollaryReport> {
    let seq: Vec<Word> = lacunary_order(psi, x)
        .ok_or_else(|| {
            Error::InvalidArgument("support has tied or undefined lengths; not lacunary".into())
        })?
        .into_iter()
        .map(|(w, _)| w)
        .collect();
    let report = lacunarity_constants(psi, &seq)?;
    let c = report.c_delta.ok_or_else(|| {
        Error::InvalidArgument(format!("support is not lacunary (delta = {})", report.delta))
    })?;
    let lhs = x.moment_norm(p, support_cap)?.powi(2);
    let (col, row) = x.rcp_norms();
    let p_f = f64::from(p);
    let rhs = c.powf((p_f - 2.0) / p_f) * p_f * p_f * col.max(row);
    Ok(CorollaryReport {
        p,
        lhs,
        rhs,
        c_delta: c,
        passed: lhs <= rhs * (1.0 + 1e-9),
    })
}

/// Default grid for an element: `[1e-6/psi_max, 1e3/psi_min]` over the
/// support words of positive length.
pub fn default_grid_for(psi: &LengthFunction, x: &GroupAlgebraElement) -> Result<Vec<f64>> {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for (w, _) in x.terms() {
        let v = psi.evaluate(w)?;
        if v > 0.0 {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if hi == 0.0 {
        return Ok(vec![1.0]);
    }
    Ok(default_t_grid(lo, hi))
}
