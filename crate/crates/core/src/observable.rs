//! Discrete observables (finite POVMs) and the structure of their ranges.
//!
//! The range `E(𝒜)` of an observable on a finite outcome set is enumerated
//! once into a [`RangeIndex`], which deduplicates effects up to `tol.eq` and
//! remembers every subset realizing each value. The classifiers
//! ([`is_regular`], [`is_delta_closed`], [`is_range_boolean`]) all work on
//! that index.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, Tolerance, C64};
use crate::subset::{Subset, MAX_BITS};

pub const DEFAULT_MAX_OUTCOMES: usize = 16;

/// A POVM on a finite outcome set: one effect per outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteObservable {
    space_dim: usize,
    outcomes: Vec<String>,
    effects: Vec<CMatrix>,
}

impl DiscreteObservable {
    /// Structural construction. Positivity and normalization are not checked
    /// here; see [`validate`].
    pub fn new(outcomes: Vec<String>, effects: Vec<CMatrix>) -> Result<Self> {
        if effects.is_empty() {
            return Err(Error::Malformed(
                "an observable needs at least one outcome".into(),
            ));
        }
        if outcomes.len() != effects.len() {
            return Err(Error::Malformed(format!(
                "{} labels for {} effects",
                outcomes.len(),
                effects.len()
            )));
        }
        if effects.len() > MAX_BITS {
            return Err(Error::Malformed(format!(
                "at most {MAX_BITS} outcomes are supported"
            )));
        }
        for (i, label) in outcomes.iter().enumerate() {
            if outcomes[..i].contains(label) {
                return Err(Error::Malformed(format!(
                    "duplicate outcome label {label:?}"
                )));
            }
        }
        let space_dim = effects[0].rows();
        if space_dim == 0 {
            return Err(Error::Malformed("space dimension must be positive".into()));
        }
        for (i, e) in effects.iter().enumerate() {
            if e.rows() != space_dim || e.cols() != space_dim {
                return Err(Error::Malformed(format!(
                    "effect {i} is {}x{}, expected {space_dim}x{space_dim}",
                    e.rows(),
                    e.cols()
                )));
            }
            if e.entries()
                .iter()
                .any(|z| !z.re.is_finite() || !z.im.is_finite())
            {
                return Err(Error::Malformed(format!(
                    "effect {i} has non-finite entries"
                )));
            }
        }
        Ok(DiscreteObservable {
            space_dim,
            outcomes,
            effects,
        })
    }

    /// Labels outcomes `{prefix}1, {prefix}2, …`.
    pub fn labeled(prefix: &str, effects: Vec<CMatrix>) -> Result<Self> {
        let outcomes = (1..=effects.len())
            .map(|i| format!("{prefix}{i}"))
            .collect();
        DiscreteObservable::new(outcomes, effects)
    }

    /// A probability measure viewed as an observable on a one-dimensional space.
    pub fn scalar(prefix: &str, weights: &[f64]) -> Result<Self> {
        DiscreteObservable::labeled(
            prefix,
            weights.iter().map(|&w| CMatrix::diag(&[w])).collect(),
        )
    }

    /// Outcome `i` has effect `diag(rows[i])`.
    pub fn diagonal(prefix: &str, rows: &[&[f64]]) -> Result<Self> {
        DiscreteObservable::labeled(prefix, rows.iter().map(|r| CMatrix::diag(r)).collect())
    }

    pub fn space_dim(&self) -> usize {
        self.space_dim
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn effects(&self) -> &[CMatrix] {
        &self.effects
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn is_scalar(&self) -> bool {
        self.space_dim == 1
    }

    /// `E(X) = Σ_{x∈X} E({x})`.
    pub fn effect_of(&self, subset: Subset) -> CMatrix {
        let mut sum = CMatrix::zeros(self.space_dim, self.space_dim);
        for i in subset.indices() {
            sum.add_assign(&self.effects[i]);
        }
        sum
    }

    pub fn full_set(&self) -> Subset {
        Subset::full(self.len())
    }

    /// Scalar weights of a one-dimensional observable.
    pub fn weights(&self) -> Option<Vec<f64>> {
        self.is_scalar()
            .then(|| self.effects.iter().map(|e| e[(0, 0)].re).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ValidationIssue {
    NonHermitian { index: usize, defect: f64 },
    NotPositive { index: usize, min_eigenvalue: f64 },
    Normalization { defect: f64 },
    Numeric { index: usize, message: String },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

pub fn validate(obs: &DiscreteObservable, tol: &Tolerance) -> ValidationReport {
    let mut issues = Vec::new();
    for (index, e) in obs.effects.iter().enumerate() {
        let defect = e.hermitian_defect();
        if defect > tol.eq {
            issues.push(ValidationIssue::NonHermitian { index, defect });
            continue;
        }
        match linalg::min_eigenvalue(e, tol) {
            Ok(min) if min < -tol.psd => issues.push(ValidationIssue::NotPositive {
                index,
                min_eigenvalue: min,
            }),
            Ok(_) => {}
            Err(err) => issues.push(ValidationIssue::Numeric {
                index,
                message: err.to_string(),
            }),
        }
    }
    let total = obs.effect_of(obs.full_set());
    let defect = (&total - &CMatrix::identity(obs.space_dim)).frob_norm();
    if defect > tol.eq {
        issues.push(ValidationIssue::Normalization { defect });
    }
    ValidationReport { issues }
}

pub fn is_projection_valued(obs: &DiscreteObservable, tol: &Tolerance) -> bool {
    obs.effects
        .iter()
        .all(|e| (&(e * e) - e).frob_norm() <= tol.eq)
}

/// One distinct value of the range together with every subset realizing it.
#[derive(Debug, Clone)]
pub struct RangeElement {
    /// Realizing subsets in lexicographic order; the first is the representative.
    pub subsets: Vec<Subset>,
    /// `E(X)` for the representative subset.
    pub effect: CMatrix,
}

impl RangeElement {
    pub fn representative(&self) -> Subset {
        self.subsets[0]
    }
}

const HASH_GRID: f64 = 1e-6;
const MAX_AMBIGUOUS_PROBES: usize = 10;

/// Quantized-entry hash table over effects with exact confirmation by
/// Frobenius distance.
#[derive(Debug, Clone, Default)]
struct EffectTable {
    buckets: HashMap<Vec<i64>, Vec<usize>>,
}

impl EffectTable {
    fn key_parts(m: &CMatrix) -> Vec<f64> {
        m.entries()
            .iter()
            .flat_map(|z| [z.re / HASH_GRID, z.im / HASH_GRID])
            .collect()
    }

    fn key(m: &CMatrix) -> Vec<i64> {
        Self::key_parts(m)
            .iter()
            .map(|x| x.round() as i64)
            .collect()
    }

    fn insert(&mut self, m: &CMatrix, id: usize) {
        self.buckets.entry(Self::key(m)).or_default().push(id);
    }

    /// Closest stored effect within `tol.eq`. Coordinates lying within
    /// `tol.eq` of a rounding boundary are probed on both sides, so a match
    /// is never missed because of quantization.
    fn find(&self, m: &CMatrix, stored: &[RangeElement], tol: &Tolerance) -> Option<usize> {
        let parts = Self::key_parts(m);
        let base: Vec<i64> = parts.iter().map(|x| x.round() as i64).collect();
        let slack = tol.eq / HASH_GRID;
        let mut ambiguous = Vec::new();
        for (k, x) in parts.iter().enumerate() {
            let frac = x - x.floor();
            if (frac - 0.5).abs() <= slack {
                let alt = if x.round() as i64 == x.floor() as i64 {
                    x.floor() as i64 + 1
                } else {
                    x.floor() as i64
                };
                ambiguous.push((k, alt));
            }
        }

        let closest = |ids: &mut dyn Iterator<Item = usize>| -> Option<usize> {
            let mut best: Option<(usize, f64)> = None;
            for id in ids {
                let d = linalg::frob_dist(&stored[id].effect, m).unwrap_or(f64::INFINITY);
                if d <= tol.eq && best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((id, d));
                }
            }
            best.map(|(id, _)| id)
        };

        if slack >= 0.5 || ambiguous.len() > MAX_AMBIGUOUS_PROBES {
            return closest(&mut (0..stored.len()));
        }
        let mut candidates = Vec::new();
        for mask in 0u32..(1 << ambiguous.len()) {
            let mut key = base.clone();
            for (bit, &(k, alt)) in ambiguous.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    key[k] = alt;
                }
            }
            if let Some(ids) = self.buckets.get(&key) {
                candidates.extend_from_slice(ids);
            }
        }
        closest(&mut candidates.into_iter())
    }
}

/// The deduplicated range `E(𝒜)` of an observable.
#[derive(Debug, Clone)]
pub struct RangeIndex {
    space_dim: usize,
    outcome_count: usize,
    elements: Vec<RangeElement>,
    table: EffectTable,
}

impl RangeIndex {
    pub fn elements(&self) -> &[RangeElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn space_dim(&self) -> usize {
        self.space_dim
    }

    pub fn outcome_count(&self) -> usize {
        self.outcome_count
    }

    /// Index of the stored element within `tol.eq` of `effect`, if any.
    pub fn find(&self, effect: &CMatrix, tol: &Tolerance) -> Option<usize> {
        if effect.rows() != self.space_dim || effect.cols() != self.space_dim {
            return None;
        }
        self.table.find(effect, &self.elements, tol)
    }

    pub fn contains(&self, effect: &CMatrix, tol: &Tolerance) -> bool {
        self.find(effect, tol).is_some()
    }

    fn push_subset(&mut self, subset: Subset, effect: &CMatrix, tol: &Tolerance) {
        match self.table.find(effect, &self.elements, tol) {
            Some(id) => self.elements[id].subsets.push(subset),
            None => {
                let id = self.elements.len();
                self.table.insert(effect, id);
                self.elements.push(RangeElement {
                    subsets: vec![subset],
                    effect: effect.clone(),
                });
            }
        }
    }

    fn identity(&self) -> CMatrix {
        CMatrix::identity(self.space_dim)
    }

    fn is_trivial(&self, effect: &CMatrix, tol: &Tolerance) -> bool {
        effect.is_zero(tol) || linalg::approx_eq(effect, &self.identity(), tol)
    }
}

/// Enumerates `E(X)` for all `2^n` subsets, in lexicographic subset order.
///
/// Elements appear in order of their lexicographically smallest subset, which
/// is also their representative.
pub fn enumerate_range(
    obs: &DiscreteObservable,
    tol: &Tolerance,
    max_outcomes: usize,
) -> Result<RangeIndex> {
    let n = obs.len();
    if n > max_outcomes || n > MAX_BITS {
        return Err(Error::TooManyOutcomes {
            count: n,
            cap: max_outcomes.min(MAX_BITS),
        });
    }
    let mut index = RangeIndex {
        space_dim: obs.space_dim,
        outcome_count: n,
        elements: Vec::new(),
        table: EffectTable::default(),
    };

    fn walk(
        obs: &DiscreteObservable,
        next: usize,
        subset: Subset,
        sum: &CMatrix,
        tol: &Tolerance,
        index: &mut RangeIndex,
    ) {
        index.push_subset(subset, sum, tol);
        for i in next..obs.len() {
            let extended = sum + &obs.effects[i];
            walk(obs, i + 1, subset.insert(i), &extended, tol, index);
        }
    }
    let zero = CMatrix::zeros(obs.space_dim, obs.space_dim);
    walk(obs, 0, Subset::EMPTY, &zero, tol, &mut index);
    Ok(index)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Regularity {
    pub regular: bool,
    /// A subset `X` with `O ≠ E(X) ≠ I` comparable to its complement.
    pub witness: Option<Subset>,
}

/// Regular: no `O ≠ E(X) ≠ I` is Loewner-comparable with `I − E(X)`.
pub fn is_regular(range: &RangeIndex, tol: &Tolerance) -> Result<Regularity> {
    let identity = range.identity();
    for el in &range.elements {
        if range.is_trivial(&el.effect, tol) {
            continue;
        }
        let complement = &identity - &el.effect;
        if linalg::loewner_leq(&el.effect, &complement, tol)?
            || linalg::loewner_leq(&complement, &el.effect, tol)?
        {
            return Ok(Regularity {
                regular: false,
                witness: Some(el.representative()),
            });
        }
    }
    Ok(Regularity {
        regular: true,
        witness: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaClosure {
    pub closed: bool,
    /// Representatives of a pairwise orthogonal triple whose sum leaves the range.
    pub witness: Option<[Subset; 3]>,
}

/// Literal Δ-closedness with effect-algebra orthogonality `A ⊥ B ⇔ A ≤ I − B`.
///
/// Triples may repeat an element. Reported as a diagnostic only.
#[allow(clippy::needless_range_loop)]
pub fn is_delta_closed(range: &RangeIndex, tol: &Tolerance) -> Result<DeltaClosure> {
    let m = range.len();
    let identity = range.identity();
    let mut orth = vec![vec![false; m]; m];
    for i in 0..m {
        let room = &identity - &range.elements[i].effect;
        for j in 0..=i {
            let o = linalg::loewner_leq(&range.elements[j].effect, &room, tol)?;
            orth[i][j] = o;
            orth[j][i] = o;
        }
    }
    for a in 0..m {
        for b in a..m {
            if !orth[a][b] {
                continue;
            }
            let ab = &range.elements[a].effect + &range.elements[b].effect;
            for c in b..m {
                if !(orth[a][c] && orth[b][c]) {
                    continue;
                }
                let sum = &ab + &range.elements[c].effect;
                if !range.contains(&sum, tol) {
                    return Ok(DeltaClosure {
                        closed: false,
                        witness: Some([
                            range.elements[a].representative(),
                            range.elements[b].representative(),
                            range.elements[c].representative(),
                        ]),
                    });
                }
            }
        }
    }
    Ok(DeltaClosure {
        closed: true,
        witness: None,
    })
}

/// Which Boolean-algebra law fails in the range poset. Elements are named by
/// their representative subsets.
#[derive(Debug, Clone, PartialEq)]
pub enum BooleanViolation {
    MissingMeet(Subset, Subset),
    MissingJoin(Subset, Subset),
    MissingComplement(Subset),
    /// `a ∧ a′ ≠ O`; carries `a` and the meet actually found.
    Complement {
        element: Subset,
        meet: Subset,
    },
    /// `a ∨ a′ ≠ I`; carries `a` and the join actually found.
    CoComplement {
        element: Subset,
        join: Subset,
    },
    Distributivity(Subset, Subset, Subset),
}

#[derive(Debug, Clone, PartialEq)]
pub enum BooleanCertificate {
    /// Representatives of the atoms (minimal nonzero elements).
    Atoms(Vec<Subset>),
    Violation(BooleanViolation),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeBoolean {
    pub boolean: bool,
    pub certificate: BooleanCertificate,
}

/// Decides whether `(E(𝒜), ≤, ′)` is a Boolean algebra, with meets and
/// joins computed inside the range poset itself.
///
/// Costs `O(m²)` Loewner comparisons and `O(m³)` lattice lookups for a
/// range of `m` elements.
pub fn is_range_boolean(range: &RangeIndex, tol: &Tolerance) -> Result<RangeBoolean> {
    let m = range.len();
    let els = &range.elements;
    let rep = |i: usize| els[i].representative();
    let fail = |v: BooleanViolation| {
        Ok(RangeBoolean {
            boolean: false,
            certificate: BooleanCertificate::Violation(v),
        })
    };

    let mut leq = vec![vec![false; m]; m];
    for i in 0..m {
        leq[i][i] = true;
        for j in 0..i {
            leq[i][j] = linalg::loewner_leq(&els[i].effect, &els[j].effect, tol)?;
            leq[j][i] = linalg::loewner_leq(&els[j].effect, &els[i].effect, tol)?;
        }
    }

    // The empty set realizes O and the full set realizes I; both are stored.
    let zero = 0;
    let identity = range.identity();
    let Some(one) = range.find(&identity, tol) else {
        return fail(BooleanViolation::MissingComplement(rep(zero)));
    };

    let greatest = |cands: &[usize], below: bool| -> Option<usize> {
        cands.iter().copied().find(|&g| {
            cands
                .iter()
                .all(|&l| if below { leq[l][g] } else { leq[g][l] })
        })
    };

    let mut meet = vec![vec![0usize; m]; m];
    let mut join = vec![vec![0usize; m]; m];
    for i in 0..m {
        for j in i..m {
            let lower: Vec<usize> = (0..m).filter(|&k| leq[k][i] && leq[k][j]).collect();
            let Some(g) = greatest(&lower, true) else {
                return fail(BooleanViolation::MissingMeet(rep(i), rep(j)));
            };
            let upper: Vec<usize> = (0..m).filter(|&k| leq[i][k] && leq[j][k]).collect();
            let Some(l) = greatest(&upper, false) else {
                return fail(BooleanViolation::MissingJoin(rep(i), rep(j)));
            };
            meet[i][j] = g;
            meet[j][i] = g;
            join[i][j] = l;
            join[j][i] = l;
        }
    }

    for i in 0..m {
        let Some(c) = range.find(&(&identity - &els[i].effect), tol) else {
            return fail(BooleanViolation::MissingComplement(rep(i)));
        };
        if meet[i][c] != zero {
            return fail(BooleanViolation::Complement {
                element: rep(i),
                meet: rep(meet[i][c]),
            });
        }
        if join[i][c] != one {
            return fail(BooleanViolation::CoComplement {
                element: rep(i),
                join: rep(join[i][c]),
            });
        }
    }

    for a in 0..m {
        for b in 0..m {
            for c in b..m {
                if meet[a][join[b][c]] != join[meet[a][b]][meet[a][c]] {
                    return fail(BooleanViolation::Distributivity(rep(a), rep(b), rep(c)));
                }
            }
        }
    }

    let atoms = (0..m)
        .filter(|&i| i != zero && (0..m).all(|k| !leq[k][i] || k == zero || k == i))
        .map(rep)
        .collect();
    Ok(RangeBoolean {
        boolean: true,
        certificate: BooleanCertificate::Atoms(atoms),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum EffectBooleanness {
    ProjectionValued,
    /// `W = E(X)·E(X′) ≠ O`, a nonzero lower bound of `E(X)` and `E(X′)`.
    Witness {
        subset: Subset,
        product: CMatrix,
    },
}

/// Certifies that a non-projection-valued range is not a Boolean subalgebra
/// of the effects by exhibiting `E(X)E(X′) ≠ O`.
pub fn boolean_in_effects_witness(obs: &DiscreteObservable, tol: &Tolerance) -> EffectBooleanness {
    // A non-idempotent atom always works: E_i(I − E_i) = E_i − E_i² ≠ O.
    let identity = CMatrix::identity(obs.space_dim);
    for (i, e) in obs.effects.iter().enumerate() {
        let product = e * &(&identity - e);
        if product.frob_norm() > tol.eq {
            return EffectBooleanness::Witness {
                subset: Subset::singleton(i),
                product,
            };
        }
    }
    EffectBooleanness::ProjectionValued
}

/// One row of a coarse-graining table: `E₁(source) = E(target)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeMatch {
    pub source: Subset,
    pub target: Subset,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoarseGraining {
    pub holds: bool,
    /// One row per distinct value of `E₁(𝒜₁)` that was matched, with the
    /// lexicographically smallest realizing subset on each side.
    pub table: Vec<RangeMatch>,
    /// First value of `E₁(𝒜₁)` absent from `E(𝒜)`.
    pub unmatched: Option<Subset>,
}

/// `E₁` is a coarse graining of `E` when `E₁(𝒜₁) ⊆ E(𝒜)`.
pub fn coarse_graining_check(
    e1: &DiscreteObservable,
    e: &DiscreteObservable,
    tol: &Tolerance,
    max_outcomes: usize,
) -> Result<CoarseGraining> {
    if e1.space_dim != e.space_dim {
        return Err(Error::DimensionMismatch {
            expected: format!("space dimension {}", e.space_dim),
            found: format!("space dimension {}", e1.space_dim),
        });
    }
    let source = enumerate_range(e1, tol, max_outcomes)?;
    let target = enumerate_range(e, tol, max_outcomes)?;
    let mut table = Vec::with_capacity(source.len());
    for el in source.elements() {
        match target.find(&el.effect, tol) {
            Some(t) => table.push(RangeMatch {
                source: el.representative(),
                target: target.elements[t].representative(),
            }),
            None => {
                return Ok(CoarseGraining {
                    holds: false,
                    table,
                    unmatched: Some(el.representative()),
                })
            }
        }
    }
    Ok(CoarseGraining {
        holds: true,
        table,
        unmatched: None,
    })
}

/// Every range classifier applied to one observable.
#[derive(Debug, Clone)]
pub struct Classification {
    pub validation: ValidationReport,
    pub projection_valued: bool,
    pub range_size: usize,
    pub regularity: Regularity,
    pub delta_closure: DeltaClosure,
    pub range_boolean: RangeBoolean,
    pub effect_witness: EffectBooleanness,
}

pub fn classify(
    obs: &DiscreteObservable,
    tol: &Tolerance,
    max_outcomes: usize,
) -> Result<Classification> {
    let range = enumerate_range(obs, tol, max_outcomes)?;
    Ok(Classification {
        validation: validate(obs, tol),
        projection_valued: is_projection_valued(obs, tol),
        range_size: range.len(),
        regularity: is_regular(&range, tol)?,
        delta_closure: is_delta_closed(&range, tol)?,
        range_boolean: is_range_boolean(&range, tol)?,
        effect_witness: boolean_in_effects_witness(obs, tol),
    })
}

/// The qubit trine: `(2/3)|ψ_k⟩⟨ψ_k|` with real states at 120° spacing.
pub fn qubit_trine() -> DiscreteObservable {
    let effects = (0..3)
        .map(|k| {
            let angle = k as f64 * std::f64::consts::PI / 3.0;
            let v = [C64::new(angle.cos(), 0.0), C64::new(angle.sin(), 0.0)];
            CMatrix::outer(&v, 2.0 / 3.0)
        })
        .collect();
    DiscreteObservable::labeled("t", effects).expect("trine is well-formed")
}
