//! Reduced words in free groups of arbitrary rank.
//!
//! Letters are nonzero integers: `k > 0` is the generator `g_k` and `-k` is
//! its inverse. The integers are the rank-1 case, so `a^k` is the word made
//! of `|k|` copies of the letter `sign(k)`.
//!
//! Words are stored as maximal runs of a single generator (syllables), which
//! keeps long powers such as `a^4096` cheap to multiply, hash and compare.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, ParseError, Result};

/// Default cap on the number of words a ball enumeration may produce.
pub const DEFAULT_BALL_CAP: usize = 5_000_000;

/// A letter: a free generator or its formal inverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Generator(i32);

impl Generator {
    pub fn new(index: i32) -> Result<Self> {
        if index == 0 {
            return Err(Error::ZeroGenerator);
        }
        Ok(Self(index))
    }

    pub fn index(self) -> i32 {
        self.0
    }

    pub fn inverse(self) -> Self {
        Self(-self.0)
    }
}

/// Sort key realizing `-1 < 1 < -2 < 2 < ...`.
#[inline]
fn letter_key(letter: i32) -> i64 {
    2 * i64::from(letter.unsigned_abs()) - i64::from(letter < 0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct Syllable {
    /// Positive generator index.
    gen: u32,
    /// Nonzero exponent.
    exp: i32,
}

impl Syllable {
    #[inline]
    fn letter(self) -> i32 {
        if self.exp > 0 {
            self.gen as i32
        } else {
            -(self.gen as i32)
        }
    }

    #[inline]
    fn run(self) -> u32 {
        self.exp.unsigned_abs()
    }
}

/// A reduced word; the empty word is the identity `e`.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Word {
    syllables: Vec<Syllable>,
    len: usize,
}

impl Word {
    pub fn identity() -> Self {
        Self::default()
    }

    /// Single-letter word. Panics on `0`; use [`Generator::new`] for checked input.
    pub fn letter(index: i32) -> Self {
        assert!(index != 0, "generator index 0 is not a letter");
        Self::power(index.unsigned_abs(), index.signum())
    }

    /// `g_gen^exp` for a positive generator index.
    pub fn power(gen: u32, exp: i32) -> Self {
        assert!(gen > 0, "generator index 0 is not a letter");
        if exp == 0 {
            return Self::identity();
        }
        Self {
            syllables: vec![Syllable { gen, exp }],
            len: exp.unsigned_abs() as usize,
        }
    }

    /// Freely reduces an arbitrary letter sequence.
    pub fn from_letters<I: IntoIterator<Item = i32>>(letters: I) -> Result<Self> {
        let mut w = Self::identity();
        for l in letters {
            if l == 0 {
                return Err(Error::ZeroGenerator);
            }
            w.push_syllable(Syllable {
                gen: l.unsigned_abs(),
                exp: l.signum(),
            });
        }
        Ok(w)
    }

    pub fn from_generators<I: IntoIterator<Item = Generator>>(letters: I) -> Self {
        Self::from_letters(letters.into_iter().map(Generator::index))
            .expect("generators are nonzero")
    }

    fn push_syllable(&mut self, s: Syllable) {
        match self.syllables.last_mut() {
            Some(last) if last.gen == s.gen => {
                let before = last.run() as usize;
                let merged = last.exp + s.exp;
                if merged == 0 {
                    self.syllables.pop();
                    self.len -= before;
                } else {
                    last.exp = merged;
                    self.len = self.len - before + merged.unsigned_abs() as usize;
                }
            }
            _ => {
                self.len += s.run() as usize;
                self.syllables.push(s);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_identity(&self) -> bool {
        self.len == 0
    }

    /// Letters in order, expanded from the run-length form.
    pub fn letters(&self) -> impl Iterator<Item = i32> + '_ {
        self.syllables
            .iter()
            .flat_map(|s| std::iter::repeat_n(s.letter(), s.run() as usize))
    }

    pub fn to_letters(&self) -> Vec<i32> {
        self.letters().collect()
    }

    pub fn first_letter(&self) -> Option<i32> {
        self.syllables.first().map(|s| s.letter())
    }

    pub fn last_letter(&self) -> Option<i32> {
        self.syllables.last().map(|s| s.letter())
    }

    /// Largest generator index used (0 for the identity).
    pub fn max_generator(&self) -> u32 {
        self.syllables.iter().map(|s| s.gen).max().unwrap_or(0)
    }

    /// Sum of exponents of generator 1; equals `k` for `a^k` in the rank-1 group.
    pub fn exponent_sum(&self) -> i64 {
        self.syllables.iter().map(|s| i64::from(s.exp)).sum()
    }

    /// For a word of the rank-1 group returns `k` with `self = a^k`.
    pub fn as_integer(&self) -> Option<i64> {
        match self.syllables.as_slice() {
            [] => Some(0),
            [s] if s.gen == 1 => Some(i64::from(s.exp)),
            _ => None,
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            syllables: self
                .syllables
                .iter()
                .rev()
                .map(|s| Syllable {
                    gen: s.gen,
                    exp: -s.exp,
                })
                .collect(),
            len: self.len,
        }
    }

    pub fn mul(&self, other: &Word) -> Word {
        let mut out = self.clone();
        out.mul_assign_right(other);
        out
    }

    pub fn mul_assign_right(&mut self, other: &Word) {
        self.syllables.reserve(other.syllables.len());
        for &s in &other.syllables {
            self.push_syllable(s);
        }
    }

    /// `self^-1 · other`, the quantity fed to length functions in kernels.
    pub fn left_quotient(&self, other: &Word) -> Word {
        self.inverse().mul(other)
    }

    pub fn pow(&self, exp: i64) -> Word {
        let mut base = if exp < 0 { self.inverse() } else { self.clone() };
        let mut n = exp.unsigned_abs();
        let mut acc = Word::identity();
        while n > 0 {
            if n & 1 == 1 {
                acc.mul_assign_right(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Word of length `n` read from the left, or `None` if too short.
    pub fn prefix(&self, n: usize) -> Option<Word> {
        if n > self.len {
            return None;
        }
        let mut out = Word::identity();
        let mut remaining = n;
        for s in &self.syllables {
            if remaining == 0 {
                break;
            }
            let take = (s.run() as usize).min(remaining);
            out.push_syllable(Syllable {
                gen: s.gen,
                exp: s.exp.signum() * take as i32,
            });
            remaining -= take;
        }
        Some(out)
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len
            .cmp(&other.len)
            .then_with(|| cmp_letters(&self.syllables, &other.syllables))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Lexicographic comparison of the expanded letter sequences, run by run.
fn cmp_letters(a: &[Syllable], b: &[Syllable]) -> Ordering {
    let run = |s: &[Syllable], i: usize| s.get(i).map_or(0, |x| x.run());
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (run(a, 0), run(b, 0));
    loop {
        match (a.get(i), b.get(j)) {
            (None, None) => return Ordering::Equal,
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(x), Some(y)) => {
                let (lx, ly) = (x.letter(), y.letter());
                if lx != ly {
                    return letter_key(lx).cmp(&letter_key(ly));
                }
                let step = ra.min(rb);
                ra -= step;
                rb -= step;
                if ra == 0 {
                    i += 1;
                    ra = run(a, i);
                }
                if rb == 0 {
                    j += 1;
                    rb = run(b, j);
                }
            }
        }
    }
}

impl std::ops::Mul<&Word> for &Word {
    type Output = Word;

    fn mul(self, rhs: &Word) -> Word {
        Word::mul(self, rhs)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return f.write_str("e");
        }
        for (i, l) in self.letters().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word[{self}]")
    }
}

/// Parses a word literal: space-separated nonzero integers, the identity
/// `e`, or rank-2 letters `a b A B` (tokens may run letters together).
pub fn parse_word(literal: &str) -> std::result::Result<Word, ParseError> {
    let trimmed = literal.trim();
    if trimmed == "e" {
        return Ok(Word::identity());
    }
    let mut letters = Vec::new();
    let mut column = 0usize;
    for token in literal.split(' ') {
        let start = column + 1;
        column += token.chars().count() + 1;
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        if token.chars().all(|c| matches!(c, 'a' | 'b' | 'A' | 'B')) {
            letters.extend(token.chars().map(|c| match c {
                'a' => 1,
                'b' => 2,
                'A' => -1,
                _ => -2,
            }));
            continue;
        }
        match token.parse::<i32>() {
            Ok(0) => return Err(ParseError::new(1, start, "generator index 0 is not a letter")),
            Ok(k) => letters.push(k),
            Err(_) => {
                return Err(ParseError::new(
                    1,
                    start,
                    format!("expected a nonzero integer or a letter in abAB, found {token:?}"),
                ))
            }
        }
    }
    if letters.is_empty() {
        return Err(ParseError::new(1, 1, "empty literal; write `e` for the identity"));
    }
    Ok(Word::from_letters(letters).expect("zero letters rejected above"))
}

impl FromStr for Word {
    type Err = ParseError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        parse_word(s)
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_word(&s).map_err(serde::de::Error::custom)
    }
}

/// Free reduction of a letter sequence.
pub fn reduce(letters: &[i32]) -> Result<Word> {
    Word::from_letters(letters.iter().copied())
}

pub fn multiply(u: &Word, v: &Word) -> Word {
    u.mul(v)
}

pub fn invert(u: &Word) -> Word {
    u.inverse()
}

pub fn word_length(u: &Word) -> usize {
    u.len()
}

/// Letters `{±1, .., ±rank}` in canonical order.
pub fn alphabet(rank: u32) -> Vec<i32> {
    (1..=rank as i32).flat_map(|k| [-k, k]).collect()
}

/// `#P_d = 2r(2r-1)^(d-1)` for `d >= 1`, saturating.
pub fn sphere_size(rank: u32, d: usize) -> u128 {
    if d == 0 {
        return 1;
    }
    let r = u128::from(rank);
    if r == 0 {
        return 0;
    }
    let mut size = 2 * r;
    for _ in 1..d {
        size = size.saturating_mul(2 * r - 1);
    }
    size
}

pub fn ball_size(rank: u32, d: usize) -> u128 {
    (0..=d).fold(0u128, |acc, k| acc.saturating_add(sphere_size(rank, k)))
}

fn check_cap(rank: u32, d: usize, predicted: u128, cap: usize) -> Result<()> {
    if rank == 0 {
        return Err(Error::InvalidArgument("rank must be positive".into()));
    }
    if predicted > cap as u128 {
        return Err(Error::BallTooLarge {
            rank,
            radius: d,
            predicted,
            cap,
        });
    }
    Ok(())
}

fn next_sphere(rank: u32, previous: &[Word]) -> Vec<Word> {
    let letters = alphabet(rank);
    let mut out = Vec::with_capacity(previous.len() * letters.len());
    for w in previous {
        let last = w.last_letter();
        for &l in &letters {
            if last == Some(-l) {
                continue;
            }
            let mut next = w.clone();
            next.push_syllable(Syllable {
                gen: l.unsigned_abs(),
                exp: l.signum(),
            });
            out.push(next);
        }
    }
    out
}

/// All reduced words of length exactly `d`, lexicographically ordered.
pub fn enumerate_sphere(rank: u32, d: usize, cap: usize) -> Result<Vec<Word>> {
    check_cap(rank, d, sphere_size(rank, d), cap)?;
    let mut sphere = vec![Word::identity()];
    for _ in 0..d {
        sphere = next_sphere(rank, &sphere);
    }
    Ok(sphere)
}

/// All reduced words of length at most `d`, length-major then lexicographic.
pub fn enumerate_ball(rank: u32, d: usize, cap: usize) -> Result<Vec<Word>> {
    check_cap(rank, d, ball_size(rank, d), cap)?;
    let mut ball = vec![Word::identity()];
    let mut sphere = vec![Word::identity()];
    for _ in 0..d {
        sphere = next_sphere(rank, &sphere);
        ball.extend(sphere.iter().cloned());
    }
    Ok(ball)
}

#[derive(Clone)]
enum Images {
    Table(BTreeMap<u32, Word>),
    Rule(fn(u32) -> Word),
}

/// A homomorphism of free groups given by the images of positive generators.
#[derive(Clone)]
pub struct Homomorphism {
    images: Images,
}

impl Homomorphism {
    pub fn from_table(images: BTreeMap<u32, Word>) -> Self {
        Self {
            images: Images::Table(images),
        }
    }

    /// Images supplied for every positive index by a rule.
    pub fn from_rule(rule: fn(u32) -> Word) -> Self {
        Self {
            images: Images::Rule(rule),
        }
    }

    /// Image of the generator with signed index `index`.
    pub fn image(&self, index: i32) -> Result<Word> {
        if index == 0 {
            return Err(Error::ZeroGenerator);
        }
        let positive = match &self.images {
            Images::Table(t) => t
                .get(&index.unsigned_abs())
                .cloned()
                .ok_or(Error::MissingImage(index))?,
            Images::Rule(rule) => rule(index.unsigned_abs()),
        };
        Ok(if index < 0 { positive.inverse() } else { positive })
    }

    pub fn apply(&self, u: &Word) -> Result<Word> {
        let mut out = Word::identity();
        for s in &u.syllables {
            let image = self.image(s.gen as i32)?;
            out.mul_assign_right(&image.pow(i64::from(s.exp)));
        }
        Ok(out)
    }
}

impl fmt::Debug for Homomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.images {
            Images::Table(t) => f.debug_map().entries(t.iter()).finish(),
            Images::Rule(_) => f.write_str("Homomorphism(<rule>)"),
        }
    }
}

pub fn apply_homomorphism(h: &Homomorphism, u: &Word) -> Result<Word> {
    h.apply(u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(letters: &[i32]) -> Word {
        reduce(letters).unwrap()
    }

    #[test]
    fn reduce_examples() {
        assert_eq!(w(&[1, 2, -2, 1]).to_letters(), vec![1, 1]);
        assert!(w(&[]).is_identity());
        assert!(w(&[1, -1, 2, -2]).is_identity());
        assert!(matches!(reduce(&[1, 0]), Err(Error::ZeroGenerator)));
    }

    #[test]
    fn multiply_and_invert_examples() {
        assert!(multiply(&w(&[1, 2]), &w(&[-2, -1])).is_identity());
        assert_eq!(multiply(&w(&[1]), &w(&[1])).to_letters(), vec![1, 1]);
        assert_eq!(invert(&w(&[1, 2, -1])).to_letters(), vec![1, -2, -1]);
        assert!(invert(&Word::identity()).is_identity());
        assert_eq!(word_length(&w(&[1, 2, 1])), 3);
        assert_eq!(word_length(&Word::identity()), 0);
    }

    #[test]
    fn long_runs_stay_compact() {
        let a = Word::power(1, 4096);
        let b = Word::power(1, -4000);
        let p = a.mul(&b);
        assert_eq!(p.as_integer(), Some(96));
        assert_eq!(p.len(), 96);
    }

    #[test]
    fn ball_examples() {
        let b = enumerate_ball(2, 1, DEFAULT_BALL_CAP).unwrap();
        let lits: Vec<_> = b.iter().map(|w| w.to_string()).collect();
        assert_eq!(lits, vec!["e", "-1", "1", "-2", "2"]);
        assert_eq!(enumerate_ball(2, 3, DEFAULT_BALL_CAP).unwrap().len(), 53);
        let z = enumerate_ball(1, 5, DEFAULT_BALL_CAP).unwrap();
        assert_eq!(z.len(), 11);
        assert!(z.iter().all(|w| w.as_integer().unwrap().abs() <= 5));
    }

    #[test]
    fn ball_cap_is_a_hard_error() {
        let err = enumerate_ball(2, 20, DEFAULT_BALL_CAP).unwrap_err();
        assert!(matches!(err, Error::BallTooLarge { .. }));
    }

    #[test]
    fn ordering_is_length_major_then_canonical_letters() {
        let b = enumerate_ball(2, 3, DEFAULT_BALL_CAP).unwrap();
        assert!(b.windows(2).all(|p| p[0] < p[1]));
        assert!(w(&[-1]) < w(&[1]));
        assert!(w(&[1]) < w(&[-2]));
        assert!(w(&[1, 1, 2]) < w(&[1, -2, -2]));
    }

    #[test]
    fn pi_images() {
        let pi = Homomorphism::from_rule(|k| {
            Word::power(1, k as i32)
                .mul(&Word::letter(2))
                .mul(&Word::power(1, -(k as i32)))
        });
        assert_eq!(pi.apply(&w(&[2])).unwrap().to_letters(), vec![1, 1, 2, -1, -1]);
        assert_eq!(pi.apply(&w(&[1, 1])).unwrap().to_letters(), vec![1, 2, 2, -1]);
        assert!(pi.apply(&Word::identity()).unwrap().is_identity());
    }

    #[test]
    fn table_homomorphism_reports_missing_images() {
        let h = Homomorphism::from_table(BTreeMap::from([(1, w(&[2]))]));
        assert_eq!(h.apply(&w(&[-1])).unwrap().to_letters(), vec![-2]);
        assert!(matches!(h.apply(&w(&[3])), Err(Error::MissingImage(3))));
    }

    #[test]
    fn literals() {
        assert_eq!(parse_word("1 2 -1").unwrap().to_letters(), vec![1, 2, -1]);
        assert!(parse_word("e").unwrap().is_identity());
        assert_eq!(parse_word("abA").unwrap().to_letters(), vec![1, 2, -1]);
        assert_eq!(parse_word("a B").unwrap().to_letters(), vec![1, -2]);
        let err = parse_word("1 x 2").unwrap_err();
        assert_eq!(err.column, 3);
        assert!(parse_word("1 0").is_err());
        assert_eq!(w(&[1, 2, -1]).to_string(), "1 2 -1");
        assert_eq!(Word::identity().to_string(), "e");
    }

    #[test]
    fn prefix_reads_from_the_left() {
        let u = w(&[1, 1, 2, -1]);
        assert_eq!(u.prefix(3).unwrap().to_letters(), vec![1, 1, 2]);
        assert!(u.prefix(5).is_none());
    }
}
