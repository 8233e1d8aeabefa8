//! Lacunarity of finite sequences with respect to a length function, the
//! constant `c_delta`, the kernel `a_{k,j}(t)` and its row/column sums.

use std::collections::HashSet;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lengths::LengthFunction;
use crate::linalg::log_grid;
use crate::words::Word;

pub const DEFAULT_GRID_POINTS: usize = 49;
const SCHUR_SLACK: f64 = 1e-9;

/// `1 + 1/delta + 1/(1 - exp(-delta^2))`.
pub fn c_delta(delta: f64) -> f64 {
    assert!(delta > 0.0, "c_delta needs delta > 0");
    1.0 + 1.0 / delta - 1.0 / (-(delta * delta)).exp_m1()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LacunaryReport {
    pub delta_growth: f64,
    pub delta_separation: f64,
    pub delta: f64,
    /// Present exactly when `delta > 0`.
    pub c_delta: Option<f64>,
    pub passed: bool,
}

fn lengths_of(psi: &LengthFunction, seq: &[Word]) -> Result<Vec<f64>> {
    let mut seen = HashSet::with_capacity(seq.len());
    for h in seq {
        if !seen.insert(h) {
            return Err(Error::DuplicateElement(h.clone()));
        }
    }
    seq.iter()
        .map(|h| {
            let v = psi.evaluate(h)?;
            if v <= 0.0 {
                Err(Error::ZeroLength(h.clone()))
            } else {
                Ok(v)
            }
        })
        .collect()
}

/// Growth and separation constants of `seq`, separation over distinct indices.
pub fn lacunarity_constants(psi: &LengthFunction, seq: &[Word]) -> Result<LacunaryReport> {
    if seq.len() < 2 {
        return Err(Error::TooFew {
            min: 2,
            got: seq.len(),
        });
    }
    let values = lengths_of(psi, seq)?;
    let delta_growth = values
        .windows(2)
        .map(|p| p[1] / p[0] - 1.0)
        .fold(f64::INFINITY, f64::min);
    let mut delta_separation = f64::INFINITY;
    for k in 0..seq.len() {
        for j in (k + 1)..seq.len() {
            let gap = psi.evaluate(&seq[k].left_quotient(&seq[j]))?;
            let gap_rev = psi.evaluate(&seq[j].left_quotient(&seq[k]))?;
            let ratio = gap.min(gap_rev) / values[k].max(values[j]);
            delta_separation = delta_separation.min(ratio);
        }
    }
    let delta = delta_growth.min(delta_separation);
    let passed = delta > 0.0;
    Ok(LacunaryReport {
        delta_growth,
        delta_separation,
        delta,
        c_delta: passed.then(|| c_delta(delta)),
        passed,
    })
}

/// `a_{k,j} = e^{-t psi(h_k^-1 h_j)} (1 - e^{-t psi(h_k)}) (1 - e^{-t psi(h_j)})`.
pub fn coefficient_matrix(psi: &LengthFunction, seq: &[Word], t: f64) -> Result<DMatrix<f64>> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
    }
    let defect = seq
        .iter()
        .map(|h| Ok(-(-t * psi.evaluate(h)?).exp_m1()))
        .collect::<Result<Vec<f64>>>()?;
    let n = seq.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        for j in 0..n {
            let cross = psi.evaluate(&seq[k].left_quotient(&seq[j]))?;
            a[(k, j)] = (-t * cross).exp() * defect[k] * defect[j];
        }
    }
    Ok(a)
}

/// 49 log-spaced points over `[1e-6 / psi_max, 1e3 / psi_min]`.
pub fn default_t_grid(psi_min: f64, psi_max: f64) -> Vec<f64> {
    log_grid(1e-6 / psi_max, 1e3 / psi_min, DEFAULT_GRID_POINTS)
}

#[derive(Clone, Debug, Serialize)]
pub struct SchurReport {
    pub worst_row_sum: f64,
    pub worst_col_sum: f64,
    /// Grid point where the larger of the two sums peaked.
    pub worst_t: f64,
    pub c_delta: f64,
    /// `c_delta - max(worst_row_sum, worst_col_sum)`.
    pub margin: f64,
    pub passed: bool,
}

pub fn verify_schur_bound(
    psi: &LengthFunction,
    seq: &[Word],
    t_grid: &[f64],
) -> Result<SchurReport> {
    if t_grid.is_empty() {
        return Err(Error::InvalidArgument("empty t grid".into()));
    }
    let report = lacunarity_constants(psi, seq)?;
    let c = report.c_delta.ok_or_else(|| {
        Error::InvalidArgument(format!("sequence is not lacunary (delta = {})", report.delta))
    })?;
    let (mut worst_row, mut worst_col, mut worst_t) = (0.0f64, 0.0f64, t_grid[0]);
    for &t in t_grid {
        let a = coefficient_matrix(psi, seq, t)?;
        let row = a.row_iter().map(|r| r.sum()).fold(0.0, f64::max);
        let col = a.column_iter().map(|c| c.sum()).fold(0.0, f64::max);
        if row.max(col) > worst_row.max(worst_col) {
            worst_t = t;
        }
        worst_row = worst_row.max(row);
        worst_col = worst_col.max(col);
    }
    Ok(SchurReport {
        worst_row_sum: worst_row,
        worst_col_sum: worst_col,
        worst_t,
        c_delta: c,
        margin: c - worst_row.max(worst_col),
        passed: worst_row <= c + SCHUR_SLACK && worst_col <= c + SCHUR_SLACK,
    })
}

const MAX_PROPOSAL_ATTEMPTS: usize = 8;

/// Words of length `2^(k+1)` whose first letters cycle through the alphabet,
/// continued by a fixed non-cancelling pattern. `variant` perturbs the
/// pattern and the growth base.
fn free_candidate(rank: u32, count: usize, variant: usize) -> Vec<Word> {
    let letters: Vec<i32> = (1..=rank as i32).flat_map(|k| [k, -k]).collect();
    let base = 2usize + variant / 2;
    let mut seq = Vec::with_capacity(count);
    for k in 0..count {
        let target = base.pow(k as u32 + 1);
        let first = letters[(k + variant) % letters.len()];
        let mut word = vec![first];
        let mut cursor = k + variant + 1;
        while word.len() < target {
            let last = *word.last().expect("nonempty");
            let next = letters[cursor % letters.len()];
            cursor += 1;
            if next == -last {
                continue;
            }
            word.push(next);
        }
        seq.push(Word::from_letters(word).expect("nonzero letters"));
    }
    seq
}

fn power_candidate(count: usize, variant: usize) -> Vec<Word> {
    let base = 2i64 + variant as i64;
    (1..=count as u32)
        .map(|k| Word::power(1, base.pow(k) as i32))
        .collect()
}

/// Proposes a sequence of `count` words and certifies it with
/// [`lacunarity_constants`]; only certified sequences are returned.
pub fn propose_lacunary_sequence(
    rank: u32,
    psi: &LengthFunction,
    count: usize,
) -> Result<(Vec<Word>, LacunaryReport)> {
    if count < 2 {
        return Err(Error::TooFew { min: 2, got: count });
    }
    if rank == 0 {
        return Err(Error::InvalidArgument("rank must be positive".into()));
    }
    for variant in 0..MAX_PROPOSAL_ATTEMPTS {
        let candidate = if rank >= 2 {
            free_candidate(rank, count, variant)
        } else {
            power_candidate(count, variant)
        };
        if let Ok(report) = lacunarity_constants(psi, &candidate) {
            if report.passed {
                return Ok((candidate, report));
            }
        }
    }
    Err(Error::InvalidArgument(format!(
        "no lacunary sequence of length {count} found for {} after {MAX_PROPOSAL_ATTEMPTS} attempts",
        psi.name()
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(ks: &[i32]) -> Vec<Word> {
        ks.iter().map(|&k| Word::power(1, k)).collect()
    }

    /// All-pairs brute force, written independently of `lacunarity_constants`.
    fn brute_force_constants(values: &[i64]) -> (f64, f64) {
        let mut growth = f64::INFINITY;
        let mut sep = f64::INFINITY;
        for k in 0..values.len() {
            if k + 1 < values.len() {
                growth = growth.min(values[k + 1] as f64 / values[k] as f64 - 1.0);
            }
            for j in 0..values.len() {
                if j != k {
                    let d = (values[j] - values[k]).abs() as f64;
                    sep = sep.min(d / values[k].max(values[j]) as f64);
                }
            }
        }
        (growth, sep)
    }

    #[test]
    fn dyadic_constants() {
        let ks: Vec<i64> = (1..=8).map(|k| 1i64 << k).collect();
        let (g, s) = brute_force_constants(&ks);
        assert_eq!((g, s), (1.0, 0.5));
        let seq = ints(&ks.iter().map(|&k| k as i32).collect::<Vec<_>>());
        let r = lacunarity_constants(&LengthFunction::abs(), &seq).unwrap();
        assert_eq!(r.delta_growth, g);
        assert_eq!(r.delta_separation, s);
        assert_eq!(r.delta, 0.5);
        let expected_c = 1.0 + 2.0 + 1.0 / (1.0 - (-0.25f64).exp());
        assert!((r.c_delta.unwrap() - expected_c).abs() < 1e-12);
        assert!((expected_c - 7.5208).abs() < 1e-4);
    }

    #[test]
    fn small_sequence_constants() {
        let r = lacunarity_constants(&LengthFunction::abs(), &ints(&[1, 2, 3])).unwrap();
        assert!((r.delta_growth - 0.5).abs() < 1e-15);
        assert!((r.delta_separation - 1.0 / 3.0).abs() < 1e-15);
        assert!(r.delta <= r.delta_growth && r.delta <= r.delta_separation);
    }

    #[test]
    fn rejects_zero_length_and_duplicates() {
        let psi = LengthFunction::abs();
        assert!(matches!(
            lacunarity_constants(&psi, &ints(&[0, 2])),
            Err(Error::ZeroLength(_))
        ));
        assert!(matches!(
            lacunarity_constants(&psi, &ints(&[2, 4, 2])),
            Err(Error::DuplicateElement(_))
        ));
        assert!(matches!(lacunarity_constants(&psi, &ints(&[2])), Err(Error::TooFew { .. })));
    }

    #[test]
    fn coefficient_matrix_examples() {
        let psi = LengthFunction::abs();
        let seq = ints(&[2, 4]);
        let a = coefficient_matrix(&psi, &seq, 1.0).unwrap();
        let e = f64::exp;
        let expected = e(-2.0) * (1.0 - e(-2.0)) * (1.0 - e(-4.0));
        assert!((a[(0, 1)] - expected).abs() < 1e-15);
        assert!((a[(0, 1)] - 0.114876).abs() < 1e-6);
        assert!((a[(0, 0)] - (1.0 - e(-2.0)).powi(2)).abs() < 1e-15);
        let tiny = coefficient_matrix(&psi, &seq, 1e-12).unwrap();
        assert!(tiny.iter().all(|&x| x < 1e-20));
        assert!(coefficient_matrix(&psi, &seq, 0.0).is_err());
    }

    #[test]
    fn schur_bound_on_dyadic_sequence() {
        let seq = ints(&(1..=12).map(|k| 1 << k).collect::<Vec<_>>());
        let grid = log_grid(1e-6, 1e3, 49);
        let r = verify_schur_bound(&LengthFunction::abs(), &seq, &grid).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.worst_row_sum <= 7.5209 && r.worst_col_sum <= 7.5209);
        assert!(r.margin > 0.0);
    }

    #[test]
    fn schur_large_t_limit_is_the_diagonal() {
        let seq = ints(&[2, 4, 8]);
        let r = verify_schur_bound(&LengthFunction::abs(), &seq, &[1e3]).unwrap();
        assert!((r.worst_row_sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn c_delta_is_decreasing() {
        let ds = log_grid(1e-3, 1e2, 200);
        let cs: Vec<f64> = ds.iter().map(|&d| c_delta(d)).collect();
        assert!(cs.windows(2).all(|p| p[1] < p[0]));
        assert!(c_delta(1e-4) > 1e7);
    }

    #[test]
    fn proposals_are_certified() {
        let (seq, r) = propose_lacunary_sequence(1, &LengthFunction::abs(), 8).unwrap();
        assert_eq!(seq, ints(&(1..=8).map(|k| 1 << k).collect::<Vec<_>>()));
        assert_eq!(r.delta, 0.5);

        let psi = LengthFunction::word_length();
        let (seq, r) = propose_lacunary_sequence(2, &psi, 5).unwrap();
        assert_eq!(seq.len(), 5);
        assert!(r.delta > 0.0);
        assert_eq!(lacunarity_constants(&psi, &seq).unwrap(), r);

        assert!(matches!(
            propose_lacunary_sequence(2, &psi, 1),
            Err(Error::TooFew { .. })
        ));
    }
}
