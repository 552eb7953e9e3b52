use std::fmt;

use crate::error::{Error, Result};
use crate::pauli::Pauli;

/// A row of the Gram matrix: the identity, a single-qubit Pauli `P_i`, or a
/// same-letter two-qubit product `P_i P_j` with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Unit,
    Single { i: usize, a: Pauli },
    Pair { i: usize, j: usize, a: Pauli },
}

impl Label {
    /// Pair label for an unordered vertex pair.
    pub fn pair(u: usize, v: usize, a: Pauli) -> Self {
        debug_assert_ne!(u, v);
        Label::Pair { i: u.min(v), j: u.max(v), a }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Label::Unit => f.write_str("I"),
            Label::Single { i, a } => write!(f, "{a}{i}"),
            Label::Pair { i, j, a } => write!(f, "{a}{i}{a}{j}"),
        }
    }
}

/// Ordering of Gram rows: `Unit`, then `Single(i, a)` by `(i, a)`, then
/// `Pair(i, j, a)` by `(i, j, a)`. Lookups are computed arithmetically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GramIndex {
    n: usize,
    labels: Vec<Label>,
}

impl GramIndex {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("Gram index needs at least one vertex".into()));
        }
        let mut labels = Vec::with_capacity(Self::size_for(n));
        labels.push(Label::Unit);
        for i in 0..n {
            labels.extend(Pauli::ALL.iter().map(|&a| Label::Single { i, a }));
        }
        for i in 0..n {
            for j in i + 1..n {
                labels.extend(Pauli::ALL.iter().map(|&a| Label::Pair { i, j, a }));
            }
        }
        debug_assert_eq!(labels.len(), Self::size_for(n));
        Ok(Self { n, labels })
    }

    pub fn size_for(n: usize) -> usize {
        1 + 3 * n + 3 * n * n.saturating_sub(1) / 2
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, row: usize) -> Label {
        self.labels[row]
    }

    pub fn unit(&self) -> usize {
        0
    }

    pub fn single(&self, i: usize, a: Pauli) -> usize {
        debug_assert!(i < self.n);
        1 + 3 * i + a.offset()
    }

    /// Row of `P_u P_v` for distinct `u`, `v` in either order.
    pub fn pair(&self, u: usize, v: usize, a: Pauli) -> usize {
        debug_assert!(u != v && u < self.n && v < self.n);
        let (i, j) = (u.min(v), u.max(v));
        let rank = i * (2 * self.n - i - 1) / 2 + (j - i - 1);
        1 + 3 * self.n + 3 * rank + a.offset()
    }

    pub fn index_of(&self, label: Label) -> Option<usize> {
        match label {
            Label::Unit => Some(0),
            Label::Single { i, a } if i < self.n => Some(self.single(i, a)),
            Label::Pair { i, j, a } if i < j && j < self.n => Some(self.pair(i, j, a)),
            _ => None,
        }
    }
}
