//! Strongly separating set systems from binary expansions of node indices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NodeSet;

/// A family of subsets of `0..n` such that for every ordered pair `i != j`
/// some member contains `i` but not `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparatingSetSystem {
    pub n: usize,
    pub sets: Vec<NodeSet>,
}

/// `⌈log₂ n⌉` for `n >= 1`.
pub fn ceil_log2(n: usize) -> usize {
    assert!(n >= 1, "ceil_log2 of zero");
    (usize::BITS - (n - 1).leading_zeros()) as usize
}

/// Binary-expansion construction: for every bit position `k` of the
/// 0-based indices, the set of nodes with bit `k` set and the set with it
/// clear. Empty and full sets are dropped.
pub fn strongly_separating(n: usize) -> Result<SeparatingSetSystem> {
    if n == 0 {
        return Err(Error::usage("separating system over an empty ground set"));
    }
    let bits = ceil_log2(n).max(1);
    let mut sets = Vec::with_capacity(2 * bits);
    for k in 0..bits {
        let ones: NodeSet = (0..n).filter(|v| v >> k & 1 == 1).collect();
        let zeros: NodeSet = (0..n).filter(|v| v >> k & 1 == 0).collect();
        for s in [ones, zeros] {
            if !s.is_empty() && s.len() < n {
                sets.push(s);
            }
        }
    }
    Ok(SeparatingSetSystem { n, sets })
}

impl SeparatingSetSystem {
    /// Maps the system onto an explicit ground set (`members[v]` replaces `v`).
    pub fn relabel(&self, members: &[usize]) -> Vec<NodeSet> {
        assert_eq!(members.len(), self.n);
        self.sets
            .iter()
            .map(|s| s.iter().map(|&v| members[v]).collect())
            .collect()
    }

    /// Exhaustive check of the strong separation property.
    pub fn is_strongly_separating(&self) -> bool {
        (0..self.n).all(|i| {
            (0..self.n)
                .filter(|&j| j != i)
                .all(|j| self.sets.iter().any(|s| s.contains(&i) && !s.contains(&j)))
        })
    }
}
