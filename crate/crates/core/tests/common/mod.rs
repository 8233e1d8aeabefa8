#![allow(dead_code)]

use std::collections::HashMap;

use lacunaria::words::enumerate_ball;
use lacunaria::{GroupAlgebraElement, Word};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> String {
    format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

/// Stack-based free reduction, independent of the run-length representation.
pub fn naive_reduce(letters: &[i32]) -> Vec<i32> {
    let mut out: Vec<i32> = Vec::with_capacity(letters.len());
    for &l in letters {
        if out.last() == Some(&-l) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

pub fn random_letters(rng: &mut ChaCha8Rng, rank: i32, max_len: usize) -> Vec<i32> {
    let len = rng.gen_range(0..=max_len);
    (0..len)
        .map(|_| {
            let g = rng.gen_range(1..=rank);
            if rng.gen() { g } else { -g }
        })
        .collect()
}

pub fn random_word(rng: &mut ChaCha8Rng, rank: i32, max_len: usize) -> Word {
    Word::from_letters(random_letters(rng, rank, max_len)).unwrap()
}

pub fn random_coeff(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(d, d, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// Up to `support` terms on words of length at most `max_len`.
pub fn random_element(
    rng: &mut ChaCha8Rng,
    rank: i32,
    d: usize,
    support: usize,
    max_len: usize,
) -> GroupAlgebraElement {
    let terms: Vec<_> = (0..support)
        .map(|_| (random_word(rng, rank, max_len), random_coeff(rng, d)))
        .collect::<HashMap<_, _>>()
        .into_iter()
        .collect();
    GroupAlgebraElement::from_terms(d, terms).unwrap()
}

pub fn unit_disc(rng: &mut ChaCha8Rng) -> Complex64 {
    loop {
        let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if z.norm() <= 1.0 {
            return z;
        }
    }
}

/// Dense matrix of `ξ ↦ λ(x)ξ` from `C^d ⊗ ℓ²(ball_R)` into its image.
pub fn dense_truncation(x: &GroupAlgebraElement, rank: u32, radius: usize) -> DMatrix<Complex64> {
    let d = x.dim();
    let ball = enumerate_ball(rank, radius, 1_000_000).unwrap();
    let mut rows: HashMap<Word, usize> = HashMap::new();
    let mut entries = Vec::new();
    for (col, w) in ball.iter().enumerate() {
        for (h, c) in x.terms() {
            let next = rows.len();
            let row = *rows.entry(h.mul(w)).or_insert(next);
            entries.push((row, col, c.clone()));
        }
    }
    let mut m = DMatrix::zeros(rows.len() * d, ball.len() * d);
    for (row, col, c) in entries {
        for r in 0..d {
            for s in 0..d {
                m[(row * d + r, col * d + s)] += c[(r, s)];
            }
        }
    }
    m
}

pub fn largest_singular_value(m: &DMatrix<Complex64>) -> f64 {
    m.clone().svd(false, false).singular_values.iter().copied().fold(0.0, f64::max)
}

/// Compression `P λ(y) P` to the ball, a square matrix.
pub fn dense_compression(y: &GroupAlgebraElement, rank: u32, radius: usize) -> DMatrix<Complex64> {
    let d = y.dim();
    let ball = enumerate_ball(rank, radius, 1_000_000).unwrap();
    let n = ball.len();
    let mut m = DMatrix::zeros(n * d, n * d);
    for (i, u) in ball.iter().enumerate() {
        for (j, w) in ball.iter().enumerate() {
            // (λ(y)δ_w)(u) = y(u w^-1)
            let g = u.mul(&w.inverse());
            if let Some(c) = y.coefficient(&g) {
                for r in 0..d {
                    for s in 0..d {
                        m[(i * d + r, j * d + s)] = c[(r, s)];
                    }
                }
            }
        }
    }
    m
}
