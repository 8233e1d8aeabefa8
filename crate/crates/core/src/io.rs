//! Text and JSON fixture formats.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::algebra::{Coeff, GroupAlgebraElement};
use crate::error::{Error, ParseError, Result};
use crate::sidon_sets::Phi;
use crate::words::{parse_word, Word};

/// Lines that are blank or start with `#` are skipped by the line formats.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
}

/// One word literal per line.
pub fn parse_word_list(text: &str) -> Result<Vec<Word>> {
    content_lines(text)
        .map(|(line, l)| parse_word(l).map_err(|e| Error::Parse(e.at_line(line))))
        .collect()
}

pub fn format_word_list(words: &[Word]) -> String {
    words.iter().map(|w| format!("{w}\n")).collect()
}

/// Lines `k<TAB>phi(k)`; `m` is the largest `|k|` listed.
pub fn parse_phi(text: &str) -> Result<Phi> {
    let mut pairs = Vec::new();
    for (line, l) in content_lines(text) {
        let mut fields = l.split('\t');
        let mut column = 1;
        let mut next_int = |what: &str| -> Result<i32> {
            let field = fields
                .next()
                .ok_or_else(|| ParseError::new(line, column, format!("missing {what}")))?;
            let v = field.trim().parse::<i32>().map_err(|_| {
                ParseError::new(line, column, format!("{what} {field:?} is not an integer"))
            })?;
            column += field.chars().count() + 1;
            Ok(v)
        };
        let k = next_int("index")?;
        let v = next_int("image")?;
        if fields.next().is_some() {
            return Err(ParseError::new(line, column, "expected two tab-separated fields").into());
        }
        pairs.push((k, v));
    }
    let m = pairs.iter().map(|(k, _)| k.unsigned_abs()).max().unwrap_or(0);
    if m == 0 {
        return Err(Error::InvalidArgument("phi file lists no entries".into()));
    }
    Phi::from_pairs(m, pairs)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryFile {
    word: String,
    #[serde(default)]
    coeff: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default)]
    re: Option<f64>,
    #[serde(default)]
    im: Option<f64>,
}

#[derive(Serialize)]
struct EntryOut {
    word: String,
    coeff: Vec<Vec<[f64; 2]>>,
}

fn entry_coeff(i: usize, e: &EntryFile) -> Result<Coeff> {
    let bad = |msg: String| Error::InvalidArgument(format!("element entry {i} ({}): {msg}", e.word));
    match (&e.coeff, e.re, e.im) {
        (Some(rows), None, None) => {
            let d = rows.len();
            if d == 0 || rows.iter().any(|r| r.len() != d) {
                return Err(bad("coefficient must be a nonempty square matrix".into()));
            }
            Ok(DMatrix::from_fn(d, d, |r, c| {
                let [re, im] = rows[r][c];
                Complex64::new(re, im)
            }))
        }
        (None, re, im) if re.is_some() || im.is_some() => Ok(DMatrix::from_element(
            1,
            1,
            Complex64::new(re.unwrap_or(0.0), im.unwrap_or(0.0)),
        )),
        (None, _, _) => Err(bad("needs either coeff or re/im".into())),
        _ => Err(bad("coeff and re/im are mutually exclusive".into())),
    }
}

/// JSON array of `{word, coeff: [[[re, im], ..], ..]}` or `{word, re, im}`;
/// the coefficient dimension is inferred and must agree across entries.
pub fn parse_element(text: &str) -> Result<GroupAlgebraElement> {
    let entries: Vec<EntryFile> = serde_json::from_str(text)?;
    if entries.is_empty() {
        return Err(Error::InvalidArgument("element file has no entries".into()));
    }
    let mut seen = BTreeSet::new();
    let mut terms = Vec::with_capacity(entries.len());
    for (i, e) in entries.iter().enumerate() {
        let w = parse_word(&e.word).map_err(|err| {
            Error::InvalidArgument(format!("element entry {i}: word {:?}: {err}", e.word))
        })?;
        if !seen.insert(w.clone()) {
            return Err(Error::DuplicateElement(w));
        }
        terms.push((w, entry_coeff(i, e)?));
    }
    let dim = terms[0].1.nrows();
    if let Some((_, c)) = terms.iter().find(|(_, c)| c.nrows() != dim) {
        return Err(Error::DimensionMismatch {
            left: dim,
            right: c.nrows(),
        });
    }
    GroupAlgebraElement::from_terms(dim, terms)
}

pub fn element_to_json(x: &GroupAlgebraElement) -> Value {
    let entries: Vec<EntryOut> = x
        .terms()
        .map(|(w, c)| EntryOut {
            word: w.to_string(),
            coeff: c
                .row_iter()
                .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        })
        .collect();
    serde_json::to_value(entries).expect("plain data serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::reduce;

    #[test]
    fn word_list_reports_line_and_column() {
        let words = parse_word_list("# seq\n1 2\n\ne\nab\n").unwrap();
        assert_eq!(words.len(), 3);
        assert_eq!(words[1], Word::identity());
        assert_eq!(words[2], reduce(&[1, 2]).unwrap());
        match parse_word_list("1\n2 x 3\n") {
            Err(Error::Parse(e)) => {
                assert_eq!(e.line, 2);
                assert_eq!(e.column, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn phi_file() {
        let phi = parse_phi("1\t2\n2\t1\n").unwrap();
        assert_eq!(phi.apply(-2), -1);
        match parse_phi("1\t2\n2\tx\n") {
            Err(Error::Parse(e)) => assert_eq!((e.line, e.column), (2, 3)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_phi("1\t2\n2\t2\n").is_err());
    }

    #[test]
    fn element_round_trip() {
        let text = r#"[{"word": "1 2", "coeff": [[[1, 0], [0, 1]], [[0, 0], [2, 0]]]},
                       {"word": "e", "coeff": [[[0.5, 0], [0, 0]], [[0, 0], [0, 0]]]}]"#;
        let x = parse_element(text).unwrap();
        assert_eq!(x.dim(), 2);
        assert_eq!(x.len(), 2);
        let again = parse_element(&element_to_json(&x).to_string()).unwrap();
        assert_eq!(x, again);
    }

    #[test]
    fn scalar_shorthand_and_errors() {
        let x = parse_element(r#"[{"word": "2", "re": 1}, {"word": "1 1 1 1", "re": 1, "im": -1}]"#).unwrap();
        assert_eq!(x.dim(), 1);
        assert_eq!(x.scalar_coefficient(&Word::power(1, 4)), Complex64::new(1.0, -1.0));
        assert!(matches!(
            parse_element(r#"[{"word": "1", "re": 1}, {"word": "2", "coeff": [[[1,0],[0,0]],[[0,0],[1,0]]]}]"#),
            Err(Error::DimensionMismatch { left: 1, right: 2 })
        ));
        assert!(parse_element(r#"[{"word": "1"}]"#).is_err());
        assert!(parse_element(r#"[{"word": "1", "re": 1}, {"word": "a", "re": 2}]"#).is_err());
        assert!(parse_element("[]").is_err());
    }
}
