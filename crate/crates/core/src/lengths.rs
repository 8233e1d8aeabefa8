//! Length functions on free groups and finite-subset checks of the
//! conditionally negative, symmetry, unitality and subadditivity conditions.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, ParseError, Result};
use crate::linalg::{helmert_basis, max_eigenpair};
use crate::words::{parse_word, Word};

/// Absolute tolerance on the restricted maximum eigenvalue, before scaling.
pub const DEFAULT_CN_TOL: f64 = 1e-9;
const IDENTITY_TOL: f64 = 1e-12;

type Evaluator = dyn Fn(&Word) -> Option<f64> + Send + Sync;

/// A nonnegative function on words with declared symmetry and unitality.
#[derive(Clone)]
pub struct LengthFunction {
    name: String,
    eval: Arc<Evaluator>,
    declared_symmetric: bool,
    declared_unital: bool,
}

impl LengthFunction {
    pub fn custom<F>(name: impl Into<String>, symmetric: bool, unital: bool, eval: F) -> Self
    where
        F: Fn(&Word) -> Option<f64> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
            declared_symmetric: symmetric,
            declared_unital: unital,
        }
    }

    /// Reduced word length, on free groups of any rank.
    pub fn word_length() -> Self {
        Self::custom("word", true, true, |w| Some(w.len() as f64))
    }

    /// `|k|` on the integers; undefined off the rank-1 subgroup.
    pub fn abs() -> Self {
        Self::custom("abs", true, true, |w| w.as_integer().map(|k| k.unsigned_abs() as f64))
    }

    /// `|k|^alpha` on the integers.
    pub fn power(alpha: f64) -> Self {
        Self::custom(format!("pow:{alpha}"), true, true, move |w| {
            w.as_integer().map(|k| (k.unsigned_abs() as f64).powf(alpha))
        })
    }

    /// Table lookup; the identity defaults to 0 when not listed.
    pub fn from_table(name: impl Into<String>, table: HashMap<Word, f64>) -> Self {
        Self::custom(name, false, false, move |w| {
            table
                .get(w)
                .copied()
                .or_else(|| w.is_identity().then_some(0.0))
        })
    }

    /// Resolves `word`, `abs` or `pow:<alpha>`.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "word" => Ok(Self::word_length()),
            "abs" => Ok(Self::abs()),
            other => match other.strip_prefix("pow:") {
                Some(alpha) => {
                    let alpha: f64 = alpha.parse().map_err(|_| {
                        Error::InvalidArgument(format!("bad exponent in length name {other:?}"))
                    })?;
                    if !(alpha.is_finite() && alpha > 0.0) {
                        return Err(Error::InvalidArgument(format!(
                            "exponent must be positive, got {alpha}"
                        )));
                    }
                    Ok(Self::power(alpha))
                }
                None => Err(Error::InvalidArgument(format!(
                    "unknown length function {other:?}; expected word, abs or pow:<alpha>"
                ))),
            },
        }
    }

    /// Parses `<word literal>\t<decimal>` lines; blank lines and `#` comments skipped.
    pub fn parse_table(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut table = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (lit, value) = line
                .split_once('\t')
                .ok_or_else(|| ParseError::new(lineno, 1, "expected <word>\\t<value>"))?;
            let word = parse_word(lit).map_err(|e| e.at_line(lineno))?;
            let value: f64 = value.trim().parse().map_err(|_| {
                ParseError::new(lineno, lit.chars().count() + 2, format!("bad number {value:?}"))
            })?;
            if !(value.is_finite() && value >= 0.0) {
                return Err(ParseError::new(
                    lineno,
                    lit.chars().count() + 2,
                    "length values must be finite and nonnegative",
                )
                .into());
            }
            table.insert(word, value);
        }
        Ok(Self::from_table(name, table))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn declared_symmetric(&self) -> bool {
        self.declared_symmetric
    }

    pub fn declared_unital(&self) -> bool {
        self.declared_unital
    }

    pub fn evaluate(&self, w: &Word) -> Result<f64> {
        (self.eval)(w).ok_or_else(|| Error::LengthUndefined(w.clone()))
    }
}

impl fmt::Debug for LengthFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LengthFunction")
            .field("name", &self.name)
            .field("declared_symmetric", &self.declared_symmetric)
            .field("declared_unital", &self.declared_unital)
            .finish()
    }
}

/// `M[i][j] = psi(S_i^-1 S_j)`, rejected if not symmetric to 1e-12.
pub fn gram_matrix(psi: &LengthFunction, set: &[Word]) -> Result<DMatrix<f64>> {
    let n = set.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = psi.evaluate(&set[i].left_quotient(&set[j]))?;
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let gap = (m[(i, j)] - m[(j, i)]).abs();
            if gap > IDENTITY_TOL * m[(i, j)].abs().max(1.0) {
                return Err(Error::Asymmetric {
                    left: set[i].clone(),
                    right: set[j].clone(),
                    gap,
                });
            }
        }
    }
    Ok(m)
}

#[derive(Clone, Debug, Serialize)]
pub struct CnWitness {
    /// Coefficients `a_g`, indexed like the input set; they sum to zero.
    pub coefficients: Vec<f64>,
    /// `sum a_g a_h psi(g^-1 h)`, recomputed from the coefficients.
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CnVerdict {
    pub passed: bool,
    pub max_eigenvalue: f64,
    /// Threshold actually applied: `tol * max(1, max |M|)`.
    pub threshold: f64,
    pub witness: Option<CnWitness>,
}

pub fn quadratic_form(m: &DMatrix<f64>, a: &[f64]) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += a[i] * a[j] * m[(i, j)];
        }
    }
    s
}

/// Maximum of the form `a -> a^T M a` over unit mean-zero `a`, compared to `tol`.
pub fn check_conditionally_negative(
    psi: &LengthFunction,
    set: &[Word],
    tol: f64,
) -> Result<CnVerdict> {
    if set.len() < 2 {
        return Err(Error::TooFew {
            min: 2,
            got: set.len(),
        });
    }
    let m = gram_matrix(psi, set)?;
    let h = helmert_basis(set.len());
    let restricted = h.transpose() * &m * &h;
    let restricted = (&restricted + restricted.transpose()) * 0.5;
    let (lmax, v) = max_eigenpair(&restricted)?;
    let scale = m.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
    let threshold = tol * scale;
    let passed = lmax <= threshold;
    let witness = (!passed).then(|| {
        let coefficients: Vec<f64> = (&h * v).iter().copied().collect();
        let value = quadratic_form(&m, &coefficients);
        CnWitness {
            coefficients,
            value,
        }
    });
    Ok(CnVerdict {
        passed,
        max_eigenvalue: lmax,
        threshold,
        witness,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SubadditivityViolation {
    pub u: Word,
    pub v: Word,
    /// `psi(uv)`
    pub lhs: f64,
    /// `psi(u) + psi(v)`
    pub rhs: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SubadditivityVerdict {
    pub passed: bool,
    pub violation: Option<SubadditivityViolation>,
}

pub fn check_subadditive(psi: &LengthFunction, set: &[Word]) -> Result<SubadditivityVerdict> {
    let values = set
        .iter()
        .map(|u| psi.evaluate(u))
        .collect::<Result<Vec<_>>>()?;
    for (u, pu) in set.iter().zip(&values) {
        for (v, pv) in set.iter().zip(&values) {
            let lhs = psi.evaluate(&u.mul(v))?;
            let rhs = pu + pv;
            if lhs > rhs + IDENTITY_TOL {
                return Ok(SubadditivityVerdict {
                    passed: false,
                    violation: Some(SubadditivityViolation {
                        u: u.clone(),
                        v: v.clone(),
                        lhs,
                        rhs,
                    }),
                });
            }
        }
    }
    Ok(SubadditivityVerdict {
        passed: true,
        violation: None,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetryVerdict {
    pub passed: bool,
    pub unital: bool,
    pub symmetric: bool,
    pub psi_identity: f64,
    /// First `g` with `psi(g) != psi(g^-1)`.
    pub asymmetric_at: Option<Word>,
}

pub fn check_symmetry_unitality(psi: &LengthFunction, set: &[Word]) -> Result<SymmetryVerdict> {
    let psi_identity = psi.evaluate(&Word::identity())?;
    let unital = psi_identity.abs() <= IDENTITY_TOL;
    let mut asymmetric_at = None;
    for u in set {
        let a = psi.evaluate(u)?;
        let b = psi.evaluate(&u.inverse())?;
        if (a - b).abs() > IDENTITY_TOL {
            asymmetric_at = Some(u.clone());
            break;
        }
    }
    let symmetric = asymmetric_at.is_none();
    Ok(SymmetryVerdict {
        passed: unital && symmetric,
        unital,
        symmetric,
        psi_identity,
        asymmetric_at,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::{enumerate_ball, DEFAULT_BALL_CAP};

    fn z_range(r: i32) -> Vec<Word> {
        (-r..=r).map(|k| Word::power(1, k)).collect()
    }

    #[test]
    fn gram_examples() {
        let s: Vec<Word> = (0..3).map(|k| Word::power(1, k)).collect();
        let m = gram_matrix(&LengthFunction::abs(), &s).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(3, 3, &[0., 1., 2., 1., 0., 1., 2., 1., 0.]));

        let s = vec![Word::identity(), Word::letter(1), Word::letter(2)];
        let m = gram_matrix(&LengthFunction::word_length(), &s).unwrap();
        assert_eq!((m[(0, 1)], m[(0, 2)], m[(1, 2)]), (1.0, 1.0, 2.0));
        assert!(m.diagonal().iter().all(|&d| d == 0.0));
    }

    #[test]
    fn gram_rejects_asymmetric_lengths() {
        let psi = LengthFunction::custom("lopsided", false, true, |w| {
            Some(match w.first_letter() {
                Some(l) if l < 0 => 2.0 * w.len() as f64,
                _ => w.len() as f64,
            })
        });
        let s = vec![Word::identity(), Word::letter(1)];
        assert!(matches!(gram_matrix(&psi, &s), Err(Error::Asymmetric { .. })));
    }

    #[test]
    fn abs_on_integers_is_cn() {
        let v = check_conditionally_negative(&LengthFunction::abs(), &z_range(4), DEFAULT_CN_TOL)
            .unwrap();
        assert!(v.passed);
        assert!(v.max_eigenvalue <= 1e-9);
        assert!(v.witness.is_none());
    }

    #[test]
    fn cube_on_integers_fails_with_witness() {
        let s = z_range(4);
        let psi = LengthFunction::power(3.0);
        let v = check_conditionally_negative(&psi, &s, DEFAULT_CN_TOL).unwrap();
        assert!(!v.passed);
        let w = v.witness.unwrap();
        assert!(w.coefficients.iter().sum::<f64>().abs() < 1e-12);
        let m = gram_matrix(&psi, &s).unwrap();
        assert!(quadratic_form(&m, &w.coefficients) > 0.0);
    }

    #[test]
    fn word_length_on_f2_ball_is_cn() {
        let s = enumerate_ball(2, 2, DEFAULT_BALL_CAP).unwrap();
        assert_eq!(s.len(), 17);
        let v = check_conditionally_negative(&LengthFunction::word_length(), &s, DEFAULT_CN_TOL)
            .unwrap();
        assert!(v.passed, "{v:?}");
    }

    #[test]
    fn cn_needs_two_points() {
        let err = check_conditionally_negative(&LengthFunction::abs(), &[Word::identity()], 1e-9);
        assert!(matches!(err, Err(Error::TooFew { .. })));
    }

    #[test]
    fn subadditivity_examples() {
        let z8: Vec<Word> = (-8..=8).map(|k| Word::power(1, k)).collect();
        assert!(check_subadditive(&LengthFunction::abs(), &z8).unwrap().passed);

        let a = Word::letter(1);
        let v = check_subadditive(&LengthFunction::power(2.0), &[a.clone(), a]).unwrap();
        let viol = v.violation.unwrap();
        assert_eq!((viol.lhs, viol.rhs), (4.0, 2.0));

        let ball = enumerate_ball(2, 3, DEFAULT_BALL_CAP).unwrap();
        assert!(check_subadditive(&LengthFunction::word_length(), &ball).unwrap().passed);
    }

    #[test]
    fn symmetry_and_unitality_examples() {
        assert!(check_symmetry_unitality(&LengthFunction::abs(), &z_range(5)).unwrap().passed);

        let shifted = LengthFunction::custom("len+1", true, false, |w| Some(w.len() as f64 + 1.0));
        let v = check_symmetry_unitality(&shifted, &z_range(2)).unwrap();
        assert!(!v.unital && v.symmetric);

        let table = LengthFunction::parse_table("t", "1\t1\n-1\t2\n").unwrap();
        let v = check_symmetry_unitality(&table, &[Word::letter(1)]).unwrap();
        assert!(v.unital && !v.symmetric);
        assert_eq!(v.asymmetric_at, Some(Word::letter(1)));
    }

    #[test]
    fn names_resolve() {
        assert_eq!(LengthFunction::from_name("pow:0.5").unwrap().name(), "pow:0.5");
        assert!(LengthFunction::from_name("pow:-1").is_err());
        assert!(LengthFunction::from_name("nope").is_err());
        let err = LengthFunction::parse_table("t", "1\t1\n2 x\t3\n").unwrap_err();
        assert!(matches!(err, Error::Parse(ParseError { line: 2, column: 3, .. })));
    }
}
