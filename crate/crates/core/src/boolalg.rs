//! Finite Boolean algebras of commuting projections.
//!
//! For commuting projections the lattice operations are explicit:
//! `P ∧ Q = PQ`, `P ∨ Q = P + Q − PQ`, `P′ = I − P`, and `P ≤ Q` iff
//! `PQ = P`. On a finite-dimensional space every such algebra is atomic and
//! equals the set of joins of its atoms.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, Tolerance};

/// Closure aborts once the algebra would exceed `2^MAX_ATOMS` elements.
pub const MAX_ATOMS: usize = 20;

#[derive(Debug, Clone)]
pub struct ProjectionAlgebra {
    space_dim: usize,
    elements: Vec<CMatrix>,
    /// Indices into `elements`.
    atoms: Vec<usize>,
    generator: Option<Vec<CMatrix>>,
}

impl ProjectionAlgebra {
    pub fn space_dim(&self) -> usize {
        self.space_dim
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn atom_indices(&self) -> &[usize] {
        &self.atoms
    }

    pub fn atoms(&self) -> Vec<&CMatrix> {
        self.atoms.iter().map(|&i| &self.elements[i]).collect()
    }

    /// The projections the algebra was generated from, when known.
    pub fn generator(&self) -> Option<&[CMatrix]> {
        self.generator.as_deref()
    }

    /// A finite generating set; the atoms always generate the algebra.
    pub fn separability_witness(&self) -> Vec<&CMatrix> {
        self.atoms()
    }

    pub fn contains(&self, p: &CMatrix, tol: &Tolerance) -> bool {
        self.elements.iter().any(|e| linalg::approx_eq(e, p, tol))
    }

    /// Same elements up to `tol.eq`, ignoring order.
    pub fn same_elements(&self, other: &ProjectionAlgebra, tol: &Tolerance) -> bool {
        self.len() == other.len() && self.elements.iter().all(|e| other.contains(e, tol))
    }
}

pub fn meet(p: &CMatrix, q: &CMatrix) -> CMatrix {
    p * q
}

pub fn join(p: &CMatrix, q: &CMatrix) -> CMatrix {
    &(p + q) - &(p * q)
}

pub fn complement(p: &CMatrix) -> CMatrix {
    &CMatrix::identity(p.rows()) - p
}

/// `P ≤ Q` for projections, tested as `PQ = P`.
pub fn proj_leq(p: &CMatrix, q: &CMatrix, tol: &Tolerance) -> bool {
    linalg::approx_eq(&(p * q), p, tol)
}

fn is_projection(p: &CMatrix, tol: &Tolerance) -> bool {
    p.is_square() && p.hermitian_defect() <= tol.eq && linalg::approx_eq(&(p * p), p, tol)
}

/// The smallest Boolean algebra of projections containing `generators`.
///
/// Built by refining the partition of unity `{I}` against each generator
/// (every current atom `A` splits into `AP` and `A(I − P)`, zero parts
/// dropped), then taking all joins of the resulting atoms. This reaches the
/// same fixed point as closing under products and complements.
pub fn boolean_closure(
    space_dim: usize,
    generators: &[CMatrix],
    tol: &Tolerance,
) -> Result<ProjectionAlgebra> {
    for (i, p) in generators.iter().enumerate() {
        if p.rows() != space_dim || p.cols() != space_dim {
            return Err(Error::DimensionMismatch {
                expected: format!("{space_dim}x{space_dim}"),
                found: format!("{}x{}", p.rows(), p.cols()),
            });
        }
        if !is_projection(p, tol) {
            return Err(Error::NotProjection { index: i });
        }
    }
    for i in 0..generators.len() {
        for j in (i + 1)..generators.len() {
            let (p, q) = (&generators[i], &generators[j]);
            if !linalg::approx_eq(&(p * q), &(q * p), tol) {
                return Err(Error::NonCommuting {
                    first: i,
                    second: j,
                });
            }
        }
    }

    let mut atoms = vec![CMatrix::identity(space_dim)];
    for p in generators {
        let mut refined = Vec::with_capacity(atoms.len() * 2);
        for a in &atoms {
            let inside = (a * p).hermitian_part();
            let outside = a - &inside;
            for part in [inside, outside] {
                if !part.is_zero(tol) {
                    refined.push(part);
                }
            }
        }
        if refined.len() > MAX_ATOMS {
            return Err(Error::AlgebraTooLarge {
                limit: 1 << MAX_ATOMS,
            });
        }
        atoms = refined;
    }

    let n = atoms.len();
    let mut elements = Vec::with_capacity(1 << n);
    for mask in 0u64..(1 << n) {
        let mut sum = CMatrix::zeros(space_dim, space_dim);
        for (k, a) in atoms.iter().enumerate() {
            if mask >> k & 1 == 1 {
                sum.add_assign(a);
            }
        }
        elements.push(sum);
    }
    Ok(ProjectionAlgebra {
        space_dim,
        atoms: (0..n).map(|k| 1usize << k).collect(),
        elements,
        generator: Some(generators.to_vec()),
    })
}

/// Minimal nonzero elements, found by pairwise order comparison.
pub fn find_atoms(alg: &ProjectionAlgebra, tol: &Tolerance) -> Vec<usize> {
    let els = &alg.elements;
    (0..els.len())
        .filter(|&i| {
            !els[i].is_zero(tol)
                && els.iter().all(|b| {
                    !proj_leq(b, &els[i], tol)
                        || b.is_zero(tol)
                        || linalg::approx_eq(b, &els[i], tol)
                })
        })
        .collect()
}

/// `ℬ = ℬ₁ × ℬ₂` split along `a₀ = ⋁ At(ℬ)`.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub a0: CMatrix,
    /// Elements below `a₀`.
    pub atomic_part: ProjectionAlgebra,
    /// Elements below `a₀′`; only `{O}` in finite dimension.
    pub atomless_part: ProjectionAlgebra,
}

pub fn decompose(alg: &ProjectionAlgebra, tol: &Tolerance) -> Result<Decomposition> {
    let dim = alg.space_dim;
    let atoms = find_atoms(alg, tol);
    let a0 = atoms.iter().fold(CMatrix::zeros(dim, dim), |acc, &i| {
        join(&acc, &alg.elements[i])
    });
    let a0c = complement(&a0);

    for (i, a) in alg.elements.iter().enumerate() {
        let rebuilt = join(&meet(a, &a0), &meet(a, &a0c));
        let defect = linalg::frob_dist(&rebuilt, a)?;
        if defect > tol.eq {
            return Err(Error::DecompositionDefect(format!(
                "a = (a ∧ a0) ∨ (a ∧ a0') fails for element {i} (defect {defect:e})"
            )));
        }
    }
    if !linalg::approx_eq(&a0, &CMatrix::identity(dim), tol) {
        return Err(Error::DecompositionDefect(
            "the atoms do not join to the identity".into(),
        ));
    }

    let part = |bound: &CMatrix, atoms: &[usize]| {
        let keep: Vec<usize> = (0..alg.len())
            .filter(|&i| proj_leq(&alg.elements[i], bound, tol))
            .collect();
        let elements = keep.iter().map(|&i| alg.elements[i].clone()).collect();
        let atoms = atoms
            .iter()
            .filter_map(|a| keep.iter().position(|k| k == a))
            .collect();
        ProjectionAlgebra {
            space_dim: dim,
            elements,
            atoms,
            generator: None,
        }
    };
    let atomic_part = part(&a0, &atoms);
    let atomless_part = part(&a0c, &[]);
    Ok(Decomposition {
        a0,
        atomic_part,
        atomless_part,
    })
}

/// Verifies `ℬ = 2^N` and returns `N = |At(ℬ)|`, with `1 ≤ N ≤ dim`.
pub fn certify_power_set(alg: &ProjectionAlgebra, tol: &Tolerance) -> Result<usize> {
    let atoms = find_atoms(alg, tol);
    let n = atoms.len();
    if n < 1 || n > alg.space_dim {
        return Err(Error::CertificateFailure(format!(
            "atom count {n} outside 1..={}",
            alg.space_dim
        )));
    }
    if n >= 64 || alg.len() != 1usize << n {
        return Err(Error::CertificateFailure(format!(
            "{} elements for {n} atoms",
            alg.len()
        )));
    }
    let mut seen = HashSet::with_capacity(alg.len());
    for (i, e) in alg.elements.iter().enumerate() {
        let mut mask = 0u64;
        let mut sum = CMatrix::zeros(alg.space_dim, alg.space_dim);
        for (k, &a) in atoms.iter().enumerate() {
            if proj_leq(&alg.elements[a], e, tol) {
                mask |= 1 << k;
                sum.add_assign(&alg.elements[a]);
            }
        }
        if !linalg::approx_eq(&sum, e, tol) {
            return Err(Error::CertificateFailure(format!(
                "element {i} is not the join of the atoms below it"
            )));
        }
        if !seen.insert(mask) {
            return Err(Error::CertificateFailure(format!(
                "element {i} repeats the atom set of another element"
            )));
        }
    }
    Ok(n)
}
