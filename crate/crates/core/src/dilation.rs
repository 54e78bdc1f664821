//! Minimal Naimark dilations of discrete observables and the `R₁` set of a
//! coarse-graining pair.
//!
//! The dilation space `K` is a direct sum of one coordinate block per outcome,
//! block `i` being the support of `E({i})`, so `dim K = Σ rank E({i})`. The
//! dilated spectral measure `Ẽ` sends `X` to the coordinate projection onto
//! the blocks of `X`, and `V*Ẽ(X)V = E(X)`.
//!
//! Because `Ẽ(𝒜)` is exactly the subset lattice of the blocks, `R₁` is kept
//! as a family of outcome subsets rather than raw projections.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, Tolerance, C64};
use crate::observable::{self, DiscreteObservable, RangeIndex};
use crate::subset::{lex_subsets, Subset, MAX_BITS};

/// Coordinates `offset..offset + width` of `K` belong to `outcome`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub outcome: usize,
    pub offset: usize,
    pub width: usize,
}

#[derive(Debug, Clone)]
pub struct Dilation {
    dim_h: usize,
    dim_k: usize,
    /// Isometry `H → K`, stored as a `dim_k × dim_h` matrix.
    v: CMatrix,
    /// One block per outcome; zero effects get width 0.
    blocks: Vec<Block>,
    outcomes: Vec<String>,
}

impl Dilation {
    /// Assembles a dilation from explicit parts without checking any of the
    /// dilation invariants; use [`verify_dilation`] for that.
    pub fn from_parts(v: CMatrix, widths: &[usize], outcomes: Vec<String>) -> Result<Self> {
        let dim_k: usize = widths.iter().sum();
        if v.rows() != dim_k {
            return Err(Error::DimensionMismatch {
                expected: format!("{dim_k} rows"),
                found: format!("{} rows", v.rows()),
            });
        }
        if widths.len() != outcomes.len() {
            return Err(Error::Malformed(format!(
                "{} blocks for {} outcomes",
                widths.len(),
                outcomes.len()
            )));
        }
        let mut offset = 0;
        let blocks = widths
            .iter()
            .enumerate()
            .map(|(outcome, &width)| {
                let b = Block {
                    outcome,
                    offset,
                    width,
                };
                offset += width;
                b
            })
            .collect();
        Ok(Dilation {
            dim_h: v.cols(),
            dim_k,
            v,
            blocks,
            outcomes,
        })
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }

    pub fn dim_k(&self) -> usize {
        self.dim_k
    }

    pub fn isometry(&self) -> &CMatrix {
        &self.v
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn outcome_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    /// `Ẽ(X)`: the coordinate projection onto the blocks of `X`.
    pub fn dilated_projection(&self, subset: Subset) -> CMatrix {
        let mut d = vec![0.0; self.dim_k];
        for b in subset.indices().map(|i| self.blocks[i]) {
            d[b.offset..b.offset + b.width].fill(1.0);
        }
        CMatrix::diag(&d)
    }

    /// Atom projections `Ẽ({i})`, one per outcome.
    pub fn atom_projections(&self) -> Vec<CMatrix> {
        (0..self.blocks.len())
            .map(|i| self.dilated_projection(Subset::singleton(i)))
            .collect()
    }

    /// `Ẽ` as an observable on `K`.
    pub fn dilated_observable(&self) -> Result<DiscreteObservable> {
        DiscreteObservable::new(self.outcomes.clone(), self.atom_projections())
    }

    /// `V*Ẽ(X)V`, summed block by block.
    pub fn compress(&self, subset: Subset) -> CMatrix {
        let h = self.dim_h;
        let mut out = CMatrix::zeros(h, h);
        for b in subset.indices().map(|i| self.blocks[i]) {
            for r in b.offset..b.offset + b.width {
                let row = self.v.row(r);
                for a in 0..h {
                    let ca = row[a].conj();
                    if ca == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for c in 0..h {
                        out[(a, c)] += ca * row[c];
                    }
                }
            }
        }
        out
    }

    /// `Ẽ(X) ≤ Ẽ(Y)`: every outcome of `X` outside `Y` has an empty block.
    pub fn projection_leq(&self, x: Subset, y: Subset) -> bool {
        Subset(x.0 & !y.0)
            .indices()
            .all(|i| self.blocks[i].width == 0)
    }
}

/// Makes the largest-magnitude entry (first one on ties) real and positive.
fn fix_phase(v: &mut [C64]) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-12))
        .unwrap_or(0);
    let phase = v[pivot] / v[pivot].norm();
    for z in v.iter_mut() {
        *z *= phase.conj();
    }
}

/// Minimal Naimark dilation in block form.
///
/// Block `i` is spanned by the eigenvectors of `E({i})` with eigenvalue above
/// `tol.rank`, in descending eigenvalue order; its rows of `V` are
/// `√λ_k · u_k*`.
pub fn minimal_naimark(obs: &DiscreteObservable, tol: &Tolerance) -> Result<Dilation> {
    let h = obs.space_dim();
    let mut rows: Vec<Vec<C64>> = Vec::new();
    let mut widths = Vec::with_capacity(obs.len());
    for e in obs.effects() {
        let eig = linalg::herm_eig(e, tol)?;
        let mut width = 0;
        for k in (0..h).rev() {
            let lambda = eig.values[k];
            if lambda <= tol.rank {
                break;
            }
            let mut u = eig.vectors.column(k);
            fix_phase(&mut u);
            let s = lambda.sqrt();
            rows.push(u.iter().map(|z| z.conj() * s).collect());
            width += 1;
        }
        widths.push(width);
    }
    let dim_k = rows.len();
    let v = CMatrix::from_vec(dim_k, h, rows.into_iter().flatten().collect())?;
    Dilation::from_parts(v, &widths, obs.outcomes().to_vec())
}

/// Defect magnitudes of a dilation against its observable.
#[derive(Debug, Clone, PartialEq)]
pub struct DilationReport {
    /// `‖V*V − I‖_F`.
    pub isometry_defect: f64,
    /// Largest `‖Ẽ({i})Ẽ({j})‖_F` over `i ≠ j`.
    pub orthogonality_defect: f64,
    /// `‖Σ Ẽ({i}) − I_K‖_F`.
    pub completeness_defect: f64,
    /// Largest `‖V*Ẽ({i})V − E({i})‖_F`.
    pub compression_defect: f64,
    /// `Σ rank E({i})`.
    pub expected_dim_k: usize,
    /// Rank of the span of `{Ẽ(X)Vφ}`.
    pub spanning_rank: usize,
    pub dim_k: usize,
}

impl DilationReport {
    pub fn is_minimal(&self) -> bool {
        self.spanning_rank == self.dim_k && self.expected_dim_k == self.dim_k
    }

    pub fn passes(&self, tol: &Tolerance) -> bool {
        self.isometry_defect <= tol.eq
            && self.orthogonality_defect <= tol.eq
            && self.completeness_defect <= tol.eq
            && self.compression_defect <= tol.eq
            && self.is_minimal()
    }
}

pub fn verify_dilation(
    dil: &Dilation,
    obs: &DiscreteObservable,
    tol: &Tolerance,
) -> Result<DilationReport> {
    if obs.len() != dil.outcome_count() || obs.space_dim() != dil.dim_h {
        return Err(Error::DimensionMismatch {
            expected: format!(
                "{} outcomes on dimension {}",
                dil.outcome_count(),
                dil.dim_h
            ),
            found: format!("{} outcomes on dimension {}", obs.len(), obs.space_dim()),
        });
    }
    let vt = dil.v.adjoint();
    let isometry_defect = (&(&vt * &dil.v) - &CMatrix::identity(dil.dim_h)).frob_norm();

    let atoms = dil.atom_projections();
    let mut orthogonality_defect: f64 = 0.0;
    for i in 0..atoms.len() {
        for j in 0..atoms.len() {
            if i != j {
                orthogonality_defect =
                    orthogonality_defect.max((&atoms[i] * &atoms[j]).frob_norm());
            }
        }
    }
    let mut total = CMatrix::zeros(dil.dim_k, dil.dim_k);
    for a in &atoms {
        total.add_assign(a);
    }
    let completeness_defect = (&total - &CMatrix::identity(dil.dim_k)).frob_norm();

    let mut compression_defect: f64 = 0.0;
    for (i, (a, e)) in atoms.iter().zip(obs.effects()).enumerate() {
        let general = &(&vt * a) * &dil.v;
        let d = linalg::frob_dist(&general, e)?;
        debug_assert!(linalg::frob_dist(&general, &dil.compress(Subset::singleton(i)))? < 1e-9);
        compression_defect = compression_defect.max(d);
    }

    let expected_dim_k = obs.effects().iter().map(|e| linalg::rank_eps(e, tol)).sum();

    // Columns of [Ẽ({1})V | … | Ẽ({n})V] span the same space as all Ẽ(X)Vφ.
    let n = atoms.len();
    let h = dil.dim_h;
    let mut stacked = CMatrix::zeros(dil.dim_k, n * h);
    for (i, a) in atoms.iter().enumerate() {
        let av = a * &dil.v;
        for r in 0..dil.dim_k {
            for c in 0..h {
                stacked[(r, i * h + c)] = av[(r, c)];
            }
        }
    }
    let spanning_rank = if dil.dim_k == 0 {
        0
    } else {
        linalg::rank_eps(&stacked.adjoint(), tol)
    };

    Ok(DilationReport {
        isometry_defect,
        orthogonality_defect,
        completeness_defect,
        compression_defect,
        expected_dim_k,
        spanning_rank,
        dim_k: dil.dim_k,
    })
}

/// Outcome subsets `X ⊆ Ω` with `V*Ẽ(X)V ∈ E₁(𝒜₁)`.
#[derive(Debug, Clone)]
pub struct R1Set {
    outcome_count: usize,
    /// Members in lexicographic subset order.
    pub members: Vec<Subset>,
    /// `targets[k]` is the lexicographically smallest `Y ⊆ Ω₁` with
    /// `V*Ẽ(members[k])V = E₁(Y)`.
    pub targets: Vec<Subset>,
    lookup: HashSet<Subset>,
}

impl R1Set {
    pub fn outcome_count(&self) -> usize {
        self.outcome_count
    }

    pub fn contains(&self, x: Subset) -> bool {
        self.lookup.contains(&x)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn target_of(&self, x: Subset) -> Option<Subset> {
        self.members
            .iter()
            .position(|&m| m == x)
            .map(|k| self.targets[k])
    }
}

pub fn compute_r1(
    dil: &Dilation,
    e1: &DiscreteObservable,
    tol: &Tolerance,
    max_outcomes: usize,
) -> Result<R1Set> {
    let n = dil.outcome_count();
    if n > max_outcomes || n > MAX_BITS {
        return Err(Error::TooManyOutcomes {
            count: n,
            cap: max_outcomes.min(MAX_BITS),
        });
    }
    if e1.space_dim() != dil.dim_h {
        return Err(Error::DimensionMismatch {
            expected: format!("space dimension {}", dil.dim_h),
            found: format!("space dimension {}", e1.space_dim()),
        });
    }
    let range1 = observable::enumerate_range(e1, tol, max_outcomes)?;
    let full = Subset::full(n);
    let full1 = e1.full_set();
    let mut members = Vec::new();
    let mut targets = Vec::new();
    for x in lex_subsets(n) {
        let c = dil.compress(x);
        if let Some(id) = range1.find(&c, tol) {
            let target = if x.is_empty() {
                Subset::EMPTY
            } else if x == full {
                full1
            } else {
                range1.elements()[id].representative()
            };
            members.push(x);
            targets.push(target);
        }
    }
    let lookup = members.iter().copied().collect();
    Ok(R1Set {
        outcome_count: n,
        members,
        targets,
        lookup,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum R1Violation {
    Complement(Subset),
    Union(Subset, Subset),
    Intersection(Subset, Subset),
}

#[derive(Debug, Clone, PartialEq)]
pub struct R1Boolean {
    pub boolean: bool,
    pub witness: Option<R1Violation>,
}

/// `R₁` is a Boolean subalgebra iff its members are closed under complement,
/// union and intersection (the atoms of `Ẽ(𝒜)` are fixed coordinate blocks).
pub fn is_r1_boolean(r1: &R1Set) -> R1Boolean {
    let n = r1.outcome_count;
    let fail = |v| R1Boolean {
        boolean: false,
        witness: Some(v),
    };
    for &x in &r1.members {
        if !r1.contains(x.complement(n)) {
            return fail(R1Violation::Complement(x));
        }
    }
    for (i, &x) in r1.members.iter().enumerate() {
        for &y in &r1.members[i + 1..] {
            if !r1.contains(x.union(y)) {
                return fail(R1Violation::Union(x, y));
            }
            if !r1.contains(x.intersection(y)) {
                return fail(R1Violation::Intersection(x, y));
            }
        }
    }
    R1Boolean {
        boolean: true,
        witness: None,
    }
}

/// Order preservation on `R₁`: `Ẽ(X) ≤ Ẽ(Y)` must give `V*Ẽ(X)V ≤ V*Ẽ(Y)V`.
/// Returns the first violating pair.
pub fn check_r1_order(
    dil: &Dilation,
    r1: &R1Set,
    tol: &Tolerance,
) -> Result<Option<(Subset, Subset)>> {
    let compressed: Vec<CMatrix> = r1.members.iter().map(|&x| dil.compress(x)).collect();
    for (i, &x) in r1.members.iter().enumerate() {
        for (j, &y) in r1.members.iter().enumerate() {
            if i != j
                && dil.projection_leq(x, y)
                && !linalg::loewner_leq(&compressed[i], &compressed[j], tol)?
            {
                return Ok(Some((x, y)));
            }
        }
    }
    Ok(None)
}

/// A failure of the V-property: `E(lower) ≤ C ≤ E(upper)` with
/// `lower ⊆ upper`, yet no `Z` between them has `E(Z) = C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VWitness {
    pub lower: Subset,
    pub upper: Subset,
    /// Index of `C` in the tested effect list.
    pub target: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VProperty {
    pub holds: bool,
    pub witness: Option<VWitness>,
}

/// Checks the V-property of the observable whose range is `family` with
/// respect to the effects `q`.
pub fn v_property_check(family: &RangeIndex, q: &[CMatrix], tol: &Tolerance) -> Result<VProperty> {
    let els = family.elements();
    for (ci, c) in q.iter().enumerate() {
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for el in els {
            if linalg::loewner_leq(&el.effect, c, tol)? {
                lower.extend_from_slice(&el.subsets);
            }
            if linalg::loewner_leq(c, &el.effect, tol)? {
                upper.extend_from_slice(&el.subsets);
            }
        }
        let between: &[Subset] = match family.find(c, tol) {
            Some(id) => &els[id].subsets,
            None => &[],
        };
        for &x in &lower {
            for &y in &upper {
                if !x.is_subset_of(y) {
                    continue;
                }
                if !between
                    .iter()
                    .any(|&z| x.is_subset_of(z) && z.is_subset_of(y))
                {
                    return Ok(VProperty {
                        holds: false,
                        witness: Some(VWitness {
                            lower: x,
                            upper: y,
                            target: ci,
                        }),
                    });
                }
            }
        }
    }
    Ok(VProperty {
        holds: true,
        witness: None,
    })
}

/// The real functional form read off a Boolean `R₁`: `E ≅ E_r` and
/// `E₁ ≅ E_r^f`.
#[derive(Debug, Clone)]
pub struct FunctionalForm {
    /// Real label of each `Ẽ`-atom (outcome `i` ↦ `i + 1`).
    pub labels: Vec<f64>,
    /// `(label, f(label))`, where `f(label)` is the one-based index of the
    /// `R₁`-atom containing the outcome.
    pub f_table: Vec<(f64, f64)>,
    /// Minimal nonempty members of `R₁`, in lexicographic order.
    pub r1_atoms: Vec<Subset>,
    pub er: DiscreteObservable,
    pub erf: DiscreteObservable,
    /// `E_r(𝒜) = E(𝒜)` elementwise.
    pub er_equivalent: bool,
    /// `E_r^f(𝒜) = E₁(𝒜₁)` elementwise.
    pub erf_equivalent: bool,
}

fn same_range(a: &RangeIndex, b: &RangeIndex, tol: &Tolerance) -> bool {
    a.elements().iter().all(|el| b.contains(&el.effect, tol))
        && b.elements().iter().all(|el| a.contains(&el.effect, tol))
}

pub fn functional_form_from_r1(
    obs: &DiscreteObservable,
    dil: &Dilation,
    r1: &R1Set,
    e1: &DiscreteObservable,
    tol: &Tolerance,
    max_outcomes: usize,
) -> Result<FunctionalForm> {
    if !is_r1_boolean(r1).boolean {
        return Err(Error::NotBoolean);
    }
    let n = r1.outcome_count;
    let r1_atoms: Vec<Subset> = r1
        .members
        .iter()
        .copied()
        .filter(|&m| {
            !m.is_empty()
                && !r1
                    .members
                    .iter()
                    .any(|&s| !s.is_empty() && s != m && s.is_subset_of(m))
        })
        .collect();

    let mut owner = vec![None; n];
    for (k, atom) in r1_atoms.iter().enumerate() {
        for i in atom.indices() {
            if owner[i].replace(k).is_some() {
                return Err(Error::AtomCoverFailure);
            }
        }
    }
    let owner: Vec<usize> = owner
        .into_iter()
        .collect::<Option<_>>()
        .ok_or(Error::AtomCoverFailure)?;

    let labels: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let f_table = labels
        .iter()
        .zip(&owner)
        .map(|(&l, &k)| (l, (k + 1) as f64))
        .collect();

    let er = DiscreteObservable::new(
        labels.iter().map(|l| l.to_string()).collect(),
        (0..n).map(|i| dil.compress(Subset::singleton(i))).collect(),
    )?;
    let erf = DiscreteObservable::new(
        (1..=r1_atoms.len()).map(|k| k.to_string()).collect(),
        r1_atoms.iter().map(|&a| dil.compress(a)).collect(),
    )?;

    let er_equivalent = same_range(
        &observable::enumerate_range(&er, tol, max_outcomes)?,
        &observable::enumerate_range(obs, tol, max_outcomes)?,
        tol,
    );
    let erf_equivalent = same_range(
        &observable::enumerate_range(&erf, tol, max_outcomes)?,
        &observable::enumerate_range(e1, tol, max_outcomes)?,
        tol,
    );
    Ok(FunctionalForm {
        labels,
        f_table,
        r1_atoms,
        er,
        erf,
        er_equivalent,
        erf_equivalent,
    })
}
