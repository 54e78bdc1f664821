//! Seeded generators shared by the integration tests.
#![allow(dead_code)]

use povm_core::linalg::{self, CMatrix, Tolerance, C64};
use povm_core::DiscreteObservable;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vector(rng: &mut impl Rng, n: usize) -> Vec<C64> {
    (0..n)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect()
}

pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    (&g + &g.adjoint()).scale(0.5)
}

/// Haar-like unitary from Gram–Schmidt on a complex Gaussian matrix.
pub fn random_unitary(rng: &mut impl Rng, n: usize) -> CMatrix {
    let mut columns: Vec<Vec<C64>> = Vec::with_capacity(n);
    while columns.len() < n {
        let mut v = gaussian_vector(rng, n);
        for u in &columns {
            let dot: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= dot * ui;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            columns.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    CMatrix::from_fn(n, n, |i, j| columns[j][i])
}

/// Ranks summing to at least `dim`, with some zeros when `zeros` is set.
pub fn random_ranks(rng: &mut impl Rng, dim: usize, outcomes: usize, zeros: bool) -> Vec<usize> {
    loop {
        let ranks: Vec<usize> = (0..outcomes)
            .map(|_| {
                if zeros && rng.random_bool(0.2) {
                    0
                } else {
                    rng.random_range(1..=dim)
                }
            })
            .collect();
        if ranks.iter().sum::<usize>() >= dim {
            return ranks;
        }
    }
}

/// `E_i = S^{-1/2} A_i S^{-1/2}` with `A_i` a random PSD matrix of rank
/// `ranks[i]` and `S = Σ A_i`.
pub fn povm_with_ranks(rng: &mut impl Rng, dim: usize, ranks: &[usize]) -> DiscreteObservable {
    let tol = Tolerance::default();
    let raw: Vec<CMatrix> = ranks
        .iter()
        .map(|&r| {
            let mut a = CMatrix::zeros(dim, dim);
            for _ in 0..r {
                a.add_assign(&CMatrix::outer(&gaussian_vector(rng, dim), 1.0));
            }
            a
        })
        .collect();
    let mut s = CMatrix::zeros(dim, dim);
    for a in &raw {
        s.add_assign(a);
    }
    let inv_sqrt = linalg::herm_eig(&s, &tol)
        .expect("sum of PSD matrices diagonalizes")
        .map_spectrum(|l| 1.0 / l.sqrt());
    let effects = raw
        .iter()
        .map(|a| (&(&inv_sqrt * a) * &inv_sqrt).hermitian_part())
        .collect();
    DiscreteObservable::labeled("x", effects).expect("well-formed")
}

pub fn random_povm(
    rng: &mut impl Rng,
    max_dim: usize,
    max_outcomes: usize,
    zeros: bool,
) -> DiscreteObservable {
    let dim = rng.random_range(1..=max_dim);
    let outcomes = rng.random_range(1..=max_outcomes);
    let ranks = random_ranks(rng, dim, outcomes, zeros);
    povm_with_ranks(rng, dim, &ranks)
}

/// Projections onto `U`-rotated coordinate blocks, one block per outcome.
/// Blocks may be empty, giving zero effects.
pub fn pvm_from_assignment(
    u: &CMatrix,
    assignment: &[usize],
    outcomes: usize,
) -> DiscreteObservable {
    let effects = (0..outcomes)
        .map(|k| {
            let diag: Vec<f64> = assignment
                .iter()
                .map(|&a| if a == k { 1.0 } else { 0.0 })
                .collect();
            rotate(u, &CMatrix::diag(&diag))
        })
        .collect();
    DiscreteObservable::labeled("x", effects).expect("well-formed")
}

pub fn rotate(u: &CMatrix, d: &CMatrix) -> CMatrix {
    (&(u * d) * &u.adjoint()).hermitian_part()
}

pub fn random_pvm(rng: &mut impl Rng, max_dim: usize, max_outcomes: usize) -> DiscreteObservable {
    let dim = rng.random_range(1..=max_dim);
    let outcomes = rng.random_range(1..=max_outcomes);
    let u = random_unitary(rng, dim);
    let assignment: Vec<usize> = (0..dim).map(|_| rng.random_range(0..outcomes)).collect();
    pvm_from_assignment(&u, &assignment, outcomes)
}

/// `E₁({y}) = Σ_{f(x) = y} E({x})`.
pub fn pushforward(e: &DiscreteObservable, f: &[usize], targets: usize) -> DiscreteObservable {
    let d = e.space_dim();
    let effects = (0..targets)
        .map(|y| {
            let mut sum = CMatrix::zeros(d, d);
            for (x, &fx) in f.iter().enumerate() {
                if fx == y {
                    sum.add_assign(&e.effects()[x]);
                }
            }
            sum
        })
        .collect();
    DiscreteObservable::labeled("y", effects).expect("well-formed")
}

pub fn random_map(rng: &mut impl Rng, from: usize, to: usize) -> Vec<usize> {
    (0..from).map(|_| rng.random_range(0..to)).collect()
}

/// Commuting projections `U diag(mask) U*` sharing one eigenbasis.
pub fn commuting_projections(rng: &mut impl Rng, dim: usize, count: usize) -> Vec<CMatrix> {
    let u = random_unitary(rng, dim);
    (0..count)
        .map(|_| {
            let diag: Vec<f64> = (0..dim)
                .map(|_| if rng.random_bool(0.5) { 1.0 } else { 0.0 })
                .collect();
            rotate(&u, &CMatrix::diag(&diag))
        })
        .collect()
}

/// Rational weights `k_i / den` summing to one; some may be zero.
pub fn random_rational_weights(rng: &mut impl Rng, n: usize, den: u32) -> Vec<f64> {
    let mut cuts: Vec<u32> = (0..n.saturating_sub(1))
        .map(|_| rng.random_range(0..=den))
        .collect();
    cuts.push(0);
    cuts.push(den);
    cuts.sort_unstable();
    cuts.windows(2)
        .map(|w| f64::from(w[1] - w[0]) / f64::from(den))
        .collect()
}

pub fn shuffled<T: Clone>(rng: &mut impl Rng, items: &[T]) -> Vec<T> {
    let mut v = items.to_vec();
    v.shuffle(rng);
    v
}

/// `n` positive weights from a standard exponential, normalized.
pub fn random_simplex_point(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w / total).collect()
}
