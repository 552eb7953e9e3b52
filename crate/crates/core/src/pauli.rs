use std::fmt;

use serde::{Deserialize, Serialize};

/// Single-qubit Pauli axis. The SDP indexes them `a = 1, 2, 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    /// Zero-based position (X = 0).
    pub fn offset(self) -> usize {
        self as usize
    }

    /// One-based SDP index `a` (X = 1).
    pub fn axis(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_axis(a: u8) -> Option<Self> {
        match a {
            1 => Some(Pauli::X),
            2 => Some(Pauli::Y),
            3 => Some(Pauli::Z),
            _ => None,
        }
    }

    /// The axis distinct from both `self` and `other` (which must differ).
    pub fn third(self, other: Pauli) -> Pauli {
        debug_assert_ne!(self, other);
        Pauli::ALL[3 - self.offset() - other.offset()]
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Pauli::X => "X",
            Pauli::Y => "Y",
            Pauli::Z => "Z",
        };
        f.write_str(c)
    }
}
