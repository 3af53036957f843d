//! Coefficient grouping and per-group constraint weights.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::ModelError;

/// Partition of the `p` coefficients into consecutive groups, each carrying a
/// linear constraint `d_k' beta_k = 0` over that group's slice of the weight
/// vector `d`.
///
/// A weight `d_j = 0` means coefficient `j` is penalized but takes no part in
/// its group's constraint. Every group must have at least two members with
/// nonzero weight — with fewer, the constraint would pin a single coefficient
/// at zero and the group could never activate.
///
/// The compositional case is `d = 1` everywhere (zero-sum log-contrast
/// coefficients); see [`GroupStructure::zero_sum`].
#[derive(Debug, Clone, PartialEq)]
pub struct GroupStructure {
    /// Half-open member ranges, consecutive and covering `0..p`.
    bounds: Vec<(usize, usize)>,
    /// Constraint weights, one per coefficient.
    d: Vec<f64>,
    /// Group index of each coefficient.
    owner: Vec<usize>,
}

impl GroupStructure {
    /// Build from group sizes (in coefficient order) and the full weight
    /// vector.
    pub fn new(sizes: &[usize], d: Vec<f64>) -> Result<Self, ModelError> {
        let p: usize = sizes.iter().sum();
        if sizes.is_empty() || sizes.contains(&0) || p != d.len() {
            return Err(ModelError::GroupCoverage);
        }
        if d.iter().any(|x| !x.is_finite()) {
            return Err(ModelError::NonFinite("constraint weights"));
        }
        let mut bounds = Vec::with_capacity(sizes.len());
        let mut owner = vec![0usize; p];
        let mut start = 0;
        for (k, &s) in sizes.iter().enumerate() {
            let end = start + s;
            for j in start..end {
                owner[j] = k;
            }
            let nonzero = d[start..end].iter().filter(|x| **x != 0.0).count();
            if nonzero < 2 {
                return Err(ModelError::GroupTooSmall {
                    group: k,
                    count: nonzero,
                });
            }
            bounds.push((start, end));
            start = end;
        }
        Ok(Self { bounds, d, owner })
    }

    /// Single group over all `p` coefficients with unit weights: the plain
    /// zero-sum constraint `1' beta = 0`.
    pub fn zero_sum(p: usize) -> Result<Self, ModelError> {
        Self::new(&[p], vec![1.0; p])
    }

    /// Several consecutive groups, unit weights in each.
    pub fn zero_sum_groups(sizes: &[usize]) -> Result<Self, ModelError> {
        let p = sizes.iter().sum();
        Self::new(sizes, vec![1.0; p])
    }

    pub fn p(&self) -> usize {
        self.d.len()
    }

    pub fn num_groups(&self) -> usize {
        self.bounds.len()
    }

    /// Member range of group `k`.
    pub fn members(&self, k: usize) -> Range<usize> {
        let (s, e) = self.bounds[k];
        s..e
    }

    /// Group that owns coefficient `j`.
    pub fn group_of(&self, j: usize) -> usize {
        self.owner[j]
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    /// `d_k' beta_k` for group `k`.
    pub fn constraint_value(&self, k: usize, beta: &[f64]) -> f64 {
        let mut s = 0.0;
        for j in self.members(k) {
            if self.d[j] != 0.0 {
                s += self.d[j] * beta[j];
            }
        }
        s
    }

    /// Group sizes in order, handy for rebuilding/serialization.
    pub fn sizes(&self) -> Vec<usize> {
        self.bounds.iter().map(|(s, e)| e - s).collect()
    }
}
