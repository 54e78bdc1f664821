//! Outcome subsets as bitmasks over outcome indices.

use std::cmp::Ordering;
use std::fmt;

/// Largest outcome count a [`Subset`] can address.
pub const MAX_BITS: usize = 63;

/// A set of outcome indices `X ⊆ {0, …, n−1}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Subset(pub u64);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub fn full(n: usize) -> Subset {
        debug_assert!(n <= MAX_BITS);
        Subset((1u64 << n) - 1)
    }

    pub fn singleton(i: usize) -> Subset {
        Subset(1u64 << i)
    }

    pub fn from_indices(indices: impl IntoIterator<Item = usize>) -> Subset {
        Subset(indices.into_iter().fold(0, |m, i| m | (1u64 << i)))
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn insert(self, i: usize) -> Subset {
        Subset(self.0 | 1u64 << i)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Subset) -> Subset {
        Subset(self.0 | other.0)
    }

    pub fn intersection(self, other: Subset) -> Subset {
        Subset(self.0 & other.0)
    }

    /// Complement relative to `{0, …, n−1}`.
    pub fn complement(self, n: usize) -> Subset {
        Subset(!self.0 & Subset::full(n).0)
    }

    pub fn is_subset_of(self, other: Subset) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn indices(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    /// Lexicographic order of the ascending index lists, so `{0,2} < {1}` and
    /// `{0} < {0,1}`.
    pub fn lex_cmp(self, other: Subset) -> Ordering {
        let mut a = self.indices();
        let mut b = other.indices();
        loop {
            match (a.next(), b.next()) {
                (None, None) => return Ordering::Equal,
                (None, Some(_)) => return Ordering::Less,
                (Some(_), None) => return Ordering::Greater,
                (Some(x), Some(y)) if x != y => return x.cmp(&y),
                _ => {}
            }
        }
    }

    /// Renders with outcome names, e.g. `{x1,x3}`.
    pub fn label(self, names: &[String]) -> String {
        let parts: Vec<&str> = self.indices().map(|i| names[i].as_str()).collect();
        format!("{{{}}}", parts.join(","))
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.indices().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// All subsets of `{0, …, n−1}` in lexicographic order of their index lists.
pub fn lex_subsets(n: usize) -> Vec<Subset> {
    fn walk(n: usize, next: usize, current: Subset, out: &mut Vec<Subset>) {
        out.push(current);
        for i in next..n {
            walk(n, i + 1, current.insert(i), out);
        }
    }
    let mut out = Vec::with_capacity(1usize << n);
    walk(n, 0, Subset::EMPTY, &mut out);
    out
}
