//! Function-of relations between observables and functional coexistence.

use num_integer::Integer;
use num_rational::Ratio;

use crate::dilation::{
    self, Dilation, DilationReport, FunctionalForm, R1Boolean, R1Set, VProperty,
};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, Tolerance};
use crate::observable::{self, Classification, CoarseGraining, DiscreteObservable};
use crate::subset::Subset;

/// Search and enumeration limits shared by the analyses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_outcomes: usize,
    pub node_budget: u64,
    pub max_denominator: i64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_outcomes: observable::DEFAULT_MAX_OUTCOMES,
            node_budget: 10_000_000,
            max_denominator: 1_000_000,
        }
    }
}

/// A total map from outcome indices of `Ω` to outcome indices of `Ω₁`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeFunction {
    pub table: Vec<usize>,
}

impl OutcomeFunction {
    pub fn identity(n: usize) -> Self {
        OutcomeFunction {
            table: (0..n).collect(),
        }
    }

    /// Maps consecutive runs of `sizes[k]` points to `k`.
    pub fn from_block_sizes(sizes: &[usize]) -> Self {
        OutcomeFunction {
            table: sizes
                .iter()
                .enumerate()
                .flat_map(|(k, &s)| std::iter::repeat_n(k, s))
                .collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.table.iter().enumerate().all(|(i, &y)| i == y)
    }

    /// `f⁻¹(y)` as a subset of `Ω`.
    pub fn preimage(&self, y: usize) -> Subset {
        Subset::from_indices(
            self.table
                .iter()
                .enumerate()
                .filter(|&(_, &t)| t == y)
                .map(|(x, _)| x),
        )
    }

    /// Sizes of the preimages of `0..targets`.
    pub fn block_sizes(&self, targets: usize) -> Vec<usize> {
        let mut sizes = vec![0; targets];
        for &y in &self.table {
            if y < targets {
                sizes[y] += 1;
            }
        }
        sizes
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionCheck {
    pub holds: bool,
    pub max_defect: f64,
}

/// Checks `E₁({y}) = E(f⁻¹({y}))` for every `y ∈ Ω₁`; additivity extends
/// this to all subsets.
pub fn verify_function(
    e: &DiscreteObservable,
    f: &OutcomeFunction,
    e1: &DiscreteObservable,
    tol: &Tolerance,
) -> FunctionCheck {
    let malformed = FunctionCheck {
        holds: false,
        max_defect: f64::INFINITY,
    };
    if f.table.len() != e.len()
        || f.table.iter().any(|&y| y >= e1.len())
        || e.space_dim() != e1.space_dim()
    {
        return malformed;
    }
    let max_defect = (0..e1.len())
        .map(|y| {
            linalg::frob_dist(&e.effect_of(f.preimage(y)), &e1.effects()[y])
                .unwrap_or(f64::INFINITY)
        })
        .fold(0.0, f64::max);
    FunctionCheck {
        holds: max_defect <= tol.eq,
        max_defect,
    }
}

struct Search<'a> {
    effects: &'a [CMatrix],
    targets: &'a [CMatrix],
    order: Vec<usize>,
    traces: Vec<f64>,
    target_traces: Vec<f64>,
    sums: Vec<CMatrix>,
    sum_traces: Vec<f64>,
    table: Vec<usize>,
    tol: &'a Tolerance,
    slack: f64,
    nodes: u64,
    budget: u64,
}

impl Search<'_> {
    fn run(&mut self, depth: usize) -> Result<bool> {
        if depth == self.order.len() {
            return Ok(self
                .sums
                .iter()
                .zip(self.targets)
                .all(|(s, t)| linalg::approx_eq(s, t, self.tol)));
        }
        if !self.deficits_reachable(depth) {
            return Ok(false);
        }
        let x = self.order[depth];
        for y in 0..self.targets.len() {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(Error::SearchBudgetExceeded {
                    budget: self.budget,
                });
            }
            let trace = self.sum_traces[y] + self.traces[x];
            if trace > self.target_traces[y] + self.slack {
                continue;
            }
            let candidate = &self.sums[y] + &self.effects[x];
            if !linalg::loewner_leq(&candidate, &self.targets[y], self.tol)? {
                continue;
            }
            let previous = std::mem::replace(&mut self.sums[y], candidate);
            self.sum_traces[y] = trace;
            self.table[x] = y;
            if self.run(depth + 1)? {
                return Ok(true);
            }
            self.sums[y] = previous;
            self.sum_traces[y] -= self.traces[x];
        }
        Ok(false)
    }

    /// Every target still short of its trace must be able to take at least
    /// the smallest unassigned effect without overshooting.
    fn deficits_reachable(&self, depth: usize) -> bool {
        let smallest = self.order[depth..]
            .iter()
            .map(|&x| self.traces[x])
            .fold(f64::INFINITY, f64::min);
        self.target_traces
            .iter()
            .zip(&self.sum_traces)
            .all(|(t, s)| {
                let deficit = t - s;
                deficit <= self.slack || smallest <= deficit + self.slack
            })
    }
}

/// Exhaustive backtracking search for `f` with `E₁ = E∘f⁻¹`.
///
/// `Ok(None)` means no such function exists at this tolerance. Running out
/// of `budget` search nodes is reported as [`Error::SearchBudgetExceeded`],
/// never as nonexistence.
pub fn find_function(
    e: &DiscreteObservable,
    e1: &DiscreteObservable,
    tol: &Tolerance,
    budget: u64,
) -> Result<Option<OutcomeFunction>> {
    if e.space_dim() != e1.space_dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("space dimension {}", e.space_dim()),
            found: format!("space dimension {}", e1.space_dim()),
        });
    }
    let traces: Vec<f64> = e.effects().iter().map(|m| m.trace().re).collect();
    // Zero effects can go anywhere without changing a pullback; park them on
    // the first target instead of branching over them.
    let mut order: Vec<usize> = (0..e.len())
        .filter(|&x| !e.effects()[x].is_zero(tol))
        .collect();
    order.sort_by(|&a, &b| traces[b].total_cmp(&traces[a]).then(a.cmp(&b)));

    let dim = e.space_dim();
    let mut search = Search {
        effects: e.effects(),
        targets: e1.effects(),
        order,
        target_traces: e1.effects().iter().map(|m| m.trace().re).collect(),
        traces,
        sums: vec![CMatrix::zeros(dim, dim); e1.len()],
        sum_traces: vec![0.0; e1.len()],
        table: vec![0; e.len()],
        tol,
        slack: tol.eq + dim as f64 * tol.psd,
        nodes: 0,
        budget,
    };
    if search.run(0)? {
        let f = OutcomeFunction {
            table: search.table,
        };
        debug_assert!(verify_function(e, &f, e1, tol).holds);
        Ok(Some(f))
    } else {
        Ok(None)
    }
}

/// A common refinement `F` with `E₁ = F∘f⁻¹` and `E = F∘g⁻¹`.
#[derive(Debug, Clone)]
pub struct CoexistenceWitness {
    pub common: DiscreteObservable,
    /// `F`-outcomes to `E₁`-outcomes.
    pub f: OutcomeFunction,
    /// `F`-outcomes to `E`-outcomes.
    pub g: OutcomeFunction,
    /// True when `F` is the uniform measure on a common denominator.
    pub uniform: bool,
    pub f_check: FunctionCheck,
    pub g_check: FunctionCheck,
}

impl CoexistenceWitness {
    pub fn is_valid(&self) -> bool {
        self.f_check.holds && self.g_check.holds
    }
}

/// Best continued-fraction convergent of `x` within `eps`, with
/// denominator at most `max_den`.
pub fn rationalize(x: f64, eps: f64, max_den: i64) -> Option<Ratio<i64>> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > i64::MAX as f64 / 4.0 {
            return None;
        }
        let a = a as i64;
        let h = a.checked_mul(h1)?.checked_add(h0)?;
        let k = a.checked_mul(k1)?.checked_add(k0)?;
        if k > max_den {
            return None;
        }
        if (x - h as f64 / k as f64).abs() <= eps {
            return Some(Ratio::new(h, k));
        }
        let frac = r - a as f64;
        if frac == 0.0 {
            return None;
        }
        r = 1.0 / frac;
        (h0, h1) = (h1, h);
        (k0, k1) = (k1, k);
    }
    None
}

fn rational_weights(
    obs: &DiscreteObservable,
    tol: &Tolerance,
    bound: i64,
) -> Result<Vec<Ratio<i64>>> {
    let weights = obs.weights().ok_or(Error::NotScalar {
        dim: obs.space_dim(),
    })?;
    let ratios = weights
        .iter()
        .map(|&w| rationalize(w, tol.eq, bound).ok_or(Error::NotRational { weight: w, bound }))
        .collect::<Result<Vec<_>>>()?;
    let total: Ratio<i64> = ratios.iter().copied().sum();
    if total != Ratio::from_integer(1) {
        return Err(Error::Malformed(format!(
            "rationalized weights sum to {total}, not 1"
        )));
    }
    Ok(ratios)
}

/// Functional coexistence of two scalar (classical) observables.
///
/// When one observable is already a function of the other, the finer one
/// serves as `F`. Otherwise all weights are put over their least common
/// denominator `D` and `F` is uniform on `D` points, with `f` and `g` grouping
/// consecutive points.
pub fn coexistence_witness_classical(
    e: &DiscreteObservable,
    e1: &DiscreteObservable,
    tol: &Tolerance,
    limits: &Limits,
) -> Result<CoexistenceWitness> {
    for obs in [e, e1] {
        if !obs.is_scalar() {
            return Err(Error::NotScalar {
                dim: obs.space_dim(),
            });
        }
    }
    let finish = |common: DiscreteObservable, f: OutcomeFunction, g: OutcomeFunction, uniform| {
        let f_check = verify_function(&common, &f, e1, tol);
        let g_check = verify_function(&common, &g, e, tol);
        CoexistenceWitness {
            common,
            f,
            g,
            uniform,
            f_check,
            g_check,
        }
    };

    // An inconclusive direct search falls through to the uniform refinement.
    let direct = |a, b| find_function(a, b, tol, limits.node_budget).unwrap_or_default();
    if let Some(f) = direct(e, e1) {
        return Ok(finish(
            e.clone(),
            f,
            OutcomeFunction::identity(e.len()),
            false,
        ));
    }
    if let Some(g) = direct(e1, e) {
        return Ok(finish(
            e1.clone(),
            OutcomeFunction::identity(e1.len()),
            g,
            false,
        ));
    }

    let bound = limits.max_denominator;
    let we = rational_weights(e, tol, bound)?;
    let we1 = rational_weights(e1, tol, bound)?;
    let denominator = we
        .iter()
        .chain(&we1)
        .fold(1i128, |acc, r| acc.lcm(&(*r.denom() as i128)));
    if denominator > bound as i128 {
        return Err(Error::DenominatorOverflow { denominator, bound });
    }
    let d = denominator as i64;
    let counts = |ws: &[Ratio<i64>]| -> Vec<usize> {
        ws.iter()
            .map(|r| (r.numer() * (d / r.denom())) as usize)
            .collect()
    };
    let g = OutcomeFunction::from_block_sizes(&counts(&we));
    let f = OutcomeFunction::from_block_sizes(&counts(&we1));
    let common = DiscreteObservable::scalar("z", &vec![1.0 / d as f64; d as usize])?;
    Ok(finish(common, f, g, true))
}

#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSearchOutcome {
    Found(OutcomeFunction),
    /// Exhaustive search found nothing.
    NoneExists,
    Inconclusive {
        budget: u64,
    },
}

/// Everything known about the pair `(E, E₁)`.
#[derive(Debug, Clone)]
pub struct RelationReport {
    pub e: Classification,
    pub e1: Classification,
    pub coarse_graining: CoarseGraining,
    pub function: FunctionSearchOutcome,
    pub dilation: Dilation,
    pub dilation_report: DilationReport,
    pub r1: R1Set,
    pub r1_boolean: R1Boolean,
    /// First pair in `R₁` whose order is not preserved by compression.
    pub r1_order_violation: Option<(Subset, Subset)>,
    /// V-property of `Ẽ` on `R₁`.
    pub v_property_dilated: VProperty,
    /// V-property of `E` on `E₁(𝒜₁)`.
    pub v_property_direct: VProperty,
    pub functional_form: Option<FunctionalForm>,
    /// Present when both observables are scalar.
    pub coexistence: Option<std::result::Result<CoexistenceWitness, Error>>,
}

pub fn relate(
    e: &DiscreteObservable,
    e1: &DiscreteObservable,
    tol: &Tolerance,
    limits: &Limits,
) -> Result<RelationReport> {
    if e.space_dim() != e1.space_dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("space dimension {}", e.space_dim()),
            found: format!("space dimension {}", e1.space_dim()),
        });
    }
    let cap = limits.max_outcomes;
    let e_class = observable::classify(e, tol, cap)?;
    let e1_class = observable::classify(e1, tol, cap)?;
    let coarse_graining = observable::coarse_graining_check(e1, e, tol, cap)?;
    let function = match find_function(e, e1, tol, limits.node_budget) {
        Ok(Some(f)) => FunctionSearchOutcome::Found(f),
        Ok(None) => FunctionSearchOutcome::NoneExists,
        Err(Error::SearchBudgetExceeded { budget }) => {
            FunctionSearchOutcome::Inconclusive { budget }
        }
        Err(err) => return Err(err),
    };

    let dil = dilation::minimal_naimark(e, tol)?;
    let dilation_report = dilation::verify_dilation(&dil, e, tol)?;
    let r1 = dilation::compute_r1(&dil, e1, tol, cap)?;
    let r1_boolean = dilation::is_r1_boolean(&r1);
    let r1_order_violation = dilation::check_r1_order(&dil, &r1, tol)?;

    let tilde_range = observable::enumerate_range(&dil.dilated_observable()?, tol, cap)?;
    let r1_projections: Vec<CMatrix> = r1
        .members
        .iter()
        .map(|&x| dil.dilated_projection(x))
        .collect();
    let v_property_dilated = dilation::v_property_check(&tilde_range, &r1_projections, tol)?;
    let e_range = observable::enumerate_range(e, tol, cap)?;
    let e1_values: Vec<CMatrix> = observable::enumerate_range(e1, tol, cap)?
        .elements()
        .iter()
        .map(|el| el.effect.clone())
        .collect();
    let v_property_direct = dilation::v_property_check(&e_range, &e1_values, tol)?;

    let functional_form = if r1_boolean.boolean {
        Some(dilation::functional_form_from_r1(
            e, &dil, &r1, e1, tol, cap,
        )?)
    } else {
        None
    };
    let coexistence = (e.is_scalar() && e1.is_scalar())
        .then(|| coexistence_witness_classical(e, e1, tol, limits));

    Ok(RelationReport {
        e: e_class,
        e1: e1_class,
        coarse_graining,
        function,
        dilation: dil,
        dilation_report,
        r1,
        r1_boolean,
        r1_order_violation,
        v_property_dilated,
        v_property_direct,
        functional_form,
        coexistence,
    })
}

/// The measures `E`, `E₁` of the classical counterexample: `E₁` is a coarse
/// graining of `E` but not a function of it.
pub fn remark1_pair() -> (DiscreteObservable, DiscreteObservable) {
    (
        DiscreteObservable::scalar("x", &[0.125, 0.125, 0.375, 0.375]).expect("well-formed"),
        DiscreteObservable::scalar("y", &[0.125, 0.125, 0.125, 0.625]).expect("well-formed"),
    )
}

/// The uniform measure on eight points refining both of [`remark1_pair`].
pub fn remark1_common() -> DiscreteObservable {
    DiscreteObservable::scalar("z", &[0.125; 8]).expect("well-formed")
}
