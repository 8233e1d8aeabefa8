//! Symmetric-word sets `Q_n` in `F_∞`, their freeness, the `π` embedding
//! into `F_2`, and empirical Sidon / Λ_∞ witness ratios.

mod folding;

use std::collections::{BTreeMap, BTreeSet, HashSet};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use folding::{fold, is_free_basis, is_free_set, FoldingGraph, FreeSetReport, FreenessReport};

use crate::algebra::GroupAlgebraElement;
use crate::error::{Error, Result};
use crate::truncated::operator_norm_lower;
use crate::words::{Homomorphism, Word, DEFAULT_BALL_CAP};

/// Default cap on enumerated products or generated candidates.
pub const DEFAULT_COMBINATORIAL_CAP: u128 = 100_000_000;

/// An odd injection `φ` on `{±1..±m}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Phi {
    map: BTreeMap<i32, i32>,
}

impl Phi {
    /// Builds `φ` from `(k, φ(k))` pairs. Values on `-k` may be omitted and
    /// are then filled in by oddness.
    pub fn from_pairs<I: IntoIterator<Item = (i32, i32)>>(m: u32, pairs: I) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut put = |k: i32, v: i32| -> Result<()> {
            match map.insert(k, v) {
                Some(old) if old != v => Err(Error::InvalidArgument(format!(
                    "phi({k}) given as both {old} and {v}"
                ))),
                _ => Ok(()),
            }
        };
        for (k, v) in pairs {
            if k == 0 || v == 0 || k.unsigned_abs() > m {
                return Err(Error::InvalidArgument(format!(
                    "phi entry {k} -> {v} outside {{±1..±{m}}} -> Z*"
                )));
            }
            put(k, v)?;
            put(-k, -v)?;
        }
        let phi = Self { map };
        for k in 1..=m as i32 {
            if !phi.map.contains_key(&k) {
                return Err(Error::InvalidArgument(format!("phi({k}) missing")));
            }
        }
        let image: HashSet<i32> = phi.map.values().copied().collect();
        if image.len() != phi.map.len() {
            return Err(Error::InvalidArgument("phi is not injective".into()));
        }
        Ok(phi)
    }

    pub fn identity(m: u32) -> Self {
        let map = (1..=m as i32).flat_map(|k| [(k, k), (-k, -k)]).collect();
        Self { map }
    }

    pub fn apply(&self, k: i32) -> i32 {
        self.map[&k]
    }

    pub fn pairs(&self) -> impl Iterator<Item = (i32, i32)> + '_ {
        self.map.iter().map(|(&k, &v)| (k, v))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SymmetricWordSpec {
    pub n: usize,
    pub m: u32,
    pub phi: Option<Phi>,
}

impl SymmetricWordSpec {
    pub fn new(n: usize, m: u32) -> Self {
        Self { n, m, phi: None }
    }

    pub fn with_phi(mut self, phi: Phi) -> Self {
        self.phi = Some(phi);
        self
    }

    /// Number of index sequences `(k_1..k_n)`, `(2m)(2m-1)^(n-1)`.
    pub fn candidate_count(&self) -> u128 {
        qn_candidate_count(self.n, self.m)
    }
}

pub fn qn_candidate_count(n: usize, m: u32) -> u128 {
    if n == 0 || m == 0 {
        return 0;
    }
    let m = u128::from(m);
    let mut c = 2 * m;
    for _ in 1..n {
        c = c.saturating_mul(2 * m - 1);
    }
    c
}

/// Words `g_{k_1}..g_{k_n} g_{φ(k_n)}..g_{φ(k_1)}` with `k_{j+1} != -k_j`,
/// kept only when reduced of length `2n`, in canonical order.
pub fn generate_qn(spec: &SymmetricWordSpec) -> Vec<Word> {
    let SymmetricWordSpec { n, m, .. } = *spec;
    if n == 0 || m == 0 {
        return Vec::new();
    }
    let phi = |k: i32| spec.phi.as_ref().map_or(k, |p| p.apply(k));
    let indices: Vec<i32> = (1..=m as i32).flat_map(|k| [-k, k]).collect();
    let mut out = BTreeSet::new();
    let mut seq = Vec::with_capacity(n);
    fn walk(
        seq: &mut Vec<i32>,
        n: usize,
        indices: &[i32],
        phi: &dyn Fn(i32) -> i32,
        out: &mut BTreeSet<Word>,
    ) {
        if seq.len() == n {
            let letters = seq.iter().copied().chain(seq.iter().rev().map(|&k| phi(k)));
            let w = Word::from_letters(letters).expect("indices are nonzero");
            if w.len() == 2 * n {
                out.insert(w);
            }
            return;
        }
        for &k in indices {
            if seq.last() == Some(&-k) {
                continue;
            }
            seq.push(k);
            walk(seq, n, indices, phi, out);
            seq.pop();
        }
    }
    walk(&mut seq, n, &indices, &phi, &mut out);
    out.into_iter().collect()
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct BruteForceReport {
    pub max_factors: usize,
    /// No enumerated product equals the identity.
    pub free_up_to_m: bool,
    /// Every step strictly increased the product length.
    pub monotone: bool,
    /// Factors `x_1, x_2, ..` (applied on the left in turn) whose product is `e`.
    pub counterexample: Option<Vec<Word>>,
    /// First factor sequence where the length failed to grow.
    pub monotonicity_violation: Option<Vec<Word>>,
    pub products_checked: u64,
}

/// Enumerates products `x_j..x_1`, `j <= max_factors`, of words and their
/// inverses with no factor followed by its inverse, checking that none is
/// `e` and that length strictly increases at every step.
pub fn freeness_bruteforce(words: &[Word], max_factors: usize, cap: u128) -> Result<BruteForceReport> {
    if max_factors < 2 {
        return Err(Error::InvalidArgument("at least 2 factors are needed".into()));
    }
    let mut seen = HashSet::new();
    for w in words {
        if w.is_identity() {
            return Err(Error::IdentityInSet);
        }
        if !seen.insert(w.clone()) {
            return Err(Error::DuplicateElement(w.clone()));
        }
    }
    let needed = (2 * words.len() as u128).saturating_pow(max_factors as u32);
    if needed > cap {
        return Err(Error::BudgetExceeded { needed, cap });
    }
    let mut factors: Vec<Word> = words.to_vec();
    for w in words {
        let inv = w.inverse();
        if !seen.contains(&inv) {
            seen.insert(inv.clone());
            factors.push(inv);
        }
    }
    let inverse_of: Vec<usize> = factors
        .iter()
        .map(|f| {
            let inv = f.inverse();
            factors.iter().position(|g| *g == inv).expect("closed under inverse")
        })
        .collect();

    struct Search<'a> {
        factors: &'a [Word],
        inverse_of: &'a [usize],
        max: usize,
        path: Vec<usize>,
        report: BruteForceReport,
    }
    impl Search<'_> {
        fn sequence(&self) -> Vec<Word> {
            self.path.iter().map(|&i| self.factors[i].clone()).collect()
        }

        /// Returns false once a product equal to `e` is found.
        fn extend(&mut self, product: &Word) -> bool {
            let last = *self.path.last().expect("nonempty path");
            for i in 0..self.factors.len() {
                if i == self.inverse_of[last] {
                    continue;
                }
                let next = self.factors[i].mul(product);
                self.path.push(i);
                self.report.products_checked += 1;
                if next.len() <= product.len() && self.report.monotone {
                    self.report.monotone = false;
                    self.report.monotonicity_violation = Some(self.sequence());
                }
                if next.is_identity() {
                    self.report.free_up_to_m = false;
                    self.report.counterexample = Some(self.sequence());
                    return false;
                }
                if self.path.len() < self.max && !self.extend(&next) {
                    return false;
                }
                self.path.pop();
            }
            true
        }
    }

    let mut search = Search {
        factors: &factors,
        inverse_of: &inverse_of,
        max: max_factors,
        path: Vec::with_capacity(max_factors),
        report: BruteForceReport {
            max_factors,
            free_up_to_m: true,
            monotone: true,
            counterexample: None,
            monotonicity_violation: None,
            products_checked: 0,
        },
    };
    for (i, f) in factors.iter().enumerate() {
        search.path.push(i);
        if !search.extend(f) {
            break;
        }
        search.path.pop();
    }
    Ok(search.report)
}

fn pi_rule(k: u32) -> Word {
    let a = i32::try_from(k).expect("generator index fits in i32");
    Word::power(1, a).mul(&Word::letter(2)).mul(&Word::power(1, -a))
}

/// `g_k ↦ a^k b a^-k` into `F_2`, with `g_-k ↦ a^k b^-1 a^-k`.
pub fn pi_homomorphism() -> Homomorphism {
    Homomorphism::from_rule(pi_rule)
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CountReport {
    pub n: usize,
    pub m: u32,
    pub count: usize,
    pub ratio_to_mn: f64,
    pub ball_exponent: f64,
}

/// `ln(2·3^L - 1) / L`, the growth exponent of the radius-`L` ball of `F_2`.
pub fn f2_ball_exponent(l: usize) -> f64 {
    let l = l as f64;
    3f64.ln() + (2.0 - 3f64.powf(-l)).ln() / l
}

/// Counts distinct reduced images `π(Q_n)` of length at most `2nm`.
pub fn count_intersection(n: usize, m: u32, cap: u128) -> Result<CountReport> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument("n and m must be positive".into()));
    }
    let needed = qn_candidate_count(n, m);
    if needed > cap {
        return Err(Error::BudgetExceeded { needed, cap });
    }
    let pi = pi_homomorphism();
    let bound = 2 * n * m as usize;
    let mut images = HashSet::new();
    for w in generate_qn(&SymmetricWordSpec::new(n, m)) {
        let image = pi.apply(&w)?;
        if image.len() <= bound {
            images.insert(image);
        }
    }
    Ok(CountReport {
        n,
        m,
        count: images.len(),
        ratio_to_mn: images.len() as f64 / f64::from(m).powi(n as i32),
        ball_exponent: f2_ball_exponent(bound),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessConfig {
    pub trials: usize,
    pub radius: usize,
    pub seed: u64,
    /// Trial `i` uses `d = 1 + i % max_dim` coefficient blocks.
    pub max_dim: usize,
    pub ball_cap: usize,
}

impl Default for WitnessConfig {
    fn default() -> Self {
        Self {
            trials: 64,
            radius: 8,
            seed: 7,
            max_dim: 2,
            ball_cap: DEFAULT_BALL_CAP,
        }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct WitnessReport {
    pub value: f64,
    pub worst_trial: usize,
    /// Observed ratio per trial.
    pub ratios: Vec<f64>,
    pub trials: usize,
    pub numerator: String,
    pub denominator: String,
    /// The words passed the free-set certification.
    pub certified_free: bool,
    /// Numerator and denominator bracket the true ratio from below.
    pub valid_lower_bound: bool,
}

fn random_coeff(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(d, d, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

/// Trial coefficients; trial 0 uses all-ones scalars.
fn trial_coefficients(words: &[Word], cfg: &WitnessConfig, trial: usize) -> (ChaCha8Rng, Vec<DMatrix<Complex64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(trial as u64));
    let d = 1 + trial % cfg.max_dim.max(1);
    let coeffs = if trial == 0 {
        vec![DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)); words.len()]
    } else {
        words.iter().map(|_| random_coeff(&mut rng, d)).collect()
    };
    (rng, coeffs)
}

fn check_witness_input(words: &[Word], cfg: &WitnessConfig) -> Result<()> {
    if cfg.trials == 0 {
        return Err(Error::EmptySample);
    }
    if words.is_empty() {
        return Err(Error::TooFew { min: 1, got: 0 });
    }
    let mut seen = HashSet::new();
    for w in words {
        if !seen.insert(w) {
            return Err(Error::DuplicateElement(w.clone()));
        }
    }
    Ok(())
}

fn worst(ratios: &[f64]) -> (usize, f64) {
    ratios
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, r)| if r > best.1 { (i, r) } else { best })
}

fn certified_free(words: &[Word]) -> bool {
    is_free_set(words).map(|r| r.free).unwrap_or(false)
}

fn element(words: &[Word], coeffs: Vec<DMatrix<Complex64>>) -> Result<GroupAlgebraElement> {
    let d = coeffs[0].nrows();
    GroupAlgebraElement::from_terms(d, words.iter().cloned().zip(coeffs))
}

/// Largest observed `‖Σ ε_k c_k λ_{h_k}‖ / ‖Σ c_k λ_{h_k}‖` over random
/// coefficients and signs, with a truncated lower bound on top and an
/// upper bound (Haagerup–Pisier when certified free, else triangle) below.
pub fn unconditionality_witness(words: &[Word], cfg: &WitnessConfig) -> Result<WitnessReport> {
    check_witness_input(words, cfg)?;
    let free = certified_free(words);
    let mut ratios = Vec::with_capacity(cfg.trials);
    for trial in 0..cfg.trials {
        let (mut rng, coeffs) = trial_coefficients(words, cfg, trial);
        let signs: Vec<f64> = words
            .iter()
            .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let signed: Vec<_> = coeffs
            .iter()
            .zip(&signs)
            .map(|(c, &s)| c * Complex64::new(s, 0.0))
            .collect();
        let plain = element(words, coeffs)?;
        let numerator = operator_norm_lower(&element(words, signed)?, cfg.radius, cfg.ball_cap)?.value;
        let mut denominator = plain.trivial_upper_bound();
        if free {
            denominator = denominator.min(plain.haagerup_pisier_bound(true)?);
        }
        ratios.push(numerator / denominator);
    }
    let (worst_trial, value) = worst(&ratios);
    Ok(WitnessReport {
        value,
        worst_trial,
        ratios,
        trials: cfg.trials,
        numerator: format!("truncated operator norm lower bound, radius {}", cfg.radius),
        denominator: if free {
            "min(Haagerup-Pisier, triangle) upper bound".into()
        } else {
            "triangle upper bound".into()
        },
        certified_free: free,
        valid_lower_bound: true,
    })
}

/// Largest observed `‖x‖ / max(‖Σ c^† c‖, ‖Σ c c^†‖)^{1/2}` over random
/// coefficients, with a truncated lower bound for `‖x‖`.
pub fn lambda_infty_witness(words: &[Word], cfg: &WitnessConfig) -> Result<WitnessReport> {
    check_witness_input(words, cfg)?;
    let free = certified_free(words);
    let mut ratios = Vec::with_capacity(cfg.trials);
    for trial in 0..cfg.trials {
        let (_, coeffs) = trial_coefficients(words, cfg, trial);
        let x = element(words, coeffs)?;
        let (col, row) = x.rcp_norms();
        ratios.push(operator_norm_lower(&x, cfg.radius, cfg.ball_cap)?.value / col.max(row).sqrt());
    }
    let (worst_trial, value) = worst(&ratios);
    Ok(WitnessReport {
        value,
        worst_trial,
        ratios,
        trials: cfg.trials,
        numerator: format!("truncated operator norm lower bound, radius {}", cfg.radius),
        denominator: "exact row/column square-sum norm".into(),
        certified_free: free,
        valid_lower_bound: true,
    })
}
