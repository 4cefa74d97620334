use rayon::prelude::*;

use super::{Partition, StratumDescriptor};
use crate::cone::FourierMotzkin;
use crate::{Error, Result};

/// Strata ordered by `sigma <= tau` iff `sigma` lies in the closure of `tau`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrataPoset {
    pub strata: Vec<StratumDescriptor>,
    /// `le[i][j]`: stratum `i` lies in the closure of stratum `j`.
    pub le: Vec<Vec<bool>>,
    /// The unique maximal stratum, if there is one.
    pub top: Option<usize>,
    /// Every covering relation raises the dimension by exactly one.
    pub graded: bool,
}

impl StrataPoset {
    pub fn len(&self) -> usize {
        self.strata.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strata.is_empty()
    }

    pub fn lt(&self, i: usize, j: usize) -> bool {
        i != j && self.le[i][j]
    }

    /// Pairs `(i, j)` with `i < j` and nothing strictly between.
    pub fn covers(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if self.lt(i, j) && !(0..n).any(|k| self.lt(i, k) && self.lt(k, j)) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn maximal(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| !(0..self.len()).any(|j| self.lt(i, j)))
            .collect()
    }

    /// Strata strictly below `j`.
    pub fn below(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.lt(i, j))
    }
}

/// Builds the closure order by testing each stratum's canonical point against
/// the closure of every other stratum.
pub fn closure_poset(partition: &Partition, engine: &FourierMotzkin) -> Result<StrataPoset> {
    if !partition.verified {
        return Err(Error::Precondition(
            "the closure order needs a verified partition".into(),
        ));
    }
    let strata = &partition.strata;
    let le: Vec<Vec<bool>> = strata
        .par_iter()
        .map(|sigma| {
            let p = sigma.canonical_point();
            strata
                .iter()
                .map(|tau| tau.closure_contains(&p, engine))
                .collect::<Result<Vec<bool>>>()
        })
        .collect::<Result<_>>()?;
    let mut poset = StrataPoset {
        strata: strata.clone(),
        le,
        top: None,
        graded: false,
    };
    let maximal = poset.maximal();
    poset.top = (maximal.len() == 1).then(|| maximal[0]);
    poset.graded = poset
        .covers()
        .iter()
        .all(|&(i, j)| poset.strata[j].dim == poset.strata[i].dim + 1);
    Ok(poset)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEuler {
    pub stratum: usize,
    pub dim: usize,
    /// Alternating count over the strata strictly below.
    pub chi: i64,
    /// Euler characteristic of the sphere of dimension `dim - 1`; 0 for points.
    pub expected: i64,
}

impl BoundaryEuler {
    pub fn matches(&self) -> bool {
        self.chi == self.expected
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CWReport {
    pub partition: bool,
    /// Reflexive, antisymmetric and transitive.
    pub order_valid: bool,
    pub order_violations: Vec<(usize, usize)>,
    pub graded: bool,
    pub ungraded_covers: Vec<(usize, usize)>,
    pub diamond: bool,
    /// `(bottom, top, number of strata strictly between)`.
    pub diamond_failures: Vec<(usize, usize, usize)>,
    pub boundary_euler: Vec<BoundaryEuler>,
    pub total_euler: i64,
    pub verdict: bool,
}

fn sign(dim: usize) -> i64 {
    if dim.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

fn sphere_euler(dim: usize) -> i64 {
    if dim == 0 {
        0
    } else {
        1 + sign(dim - 1)
    }
}

pub fn check_regular_cw(poset: &StrataPoset) -> CWReport {
    let n = poset.len();
    let dim = |i: usize| poset.strata[i].dim;
    let mut order_violations = Vec::new();
    for i in 0..n {
        if !poset.le[i][i] {
            order_violations.push((i, i));
        }
        for j in 0..n {
            if i < j && poset.le[i][j] && poset.le[j][i] {
                order_violations.push((i, j));
            }
            for k in 0..n {
                if poset.le[i][j] && poset.le[j][k] && !poset.le[i][k] {
                    order_violations.push((i, k));
                }
            }
        }
    }
    order_violations.sort_unstable();
    order_violations.dedup();

    let ungraded_covers: Vec<(usize, usize)> = poset
        .covers()
        .into_iter()
        .filter(|&(i, j)| dim(j) != dim(i) + 1)
        .collect();

    let mut diamond_failures = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if poset.lt(i, j) && dim(j) == dim(i) + 2 {
                let between = (0..n).filter(|&k| poset.lt(i, k) && poset.lt(k, j)).count();
                if between != 2 {
                    diamond_failures.push((i, j, between));
                }
            }
        }
    }

    let boundary_euler: Vec<BoundaryEuler> = (0..n)
        .map(|j| BoundaryEuler {
            stratum: j,
            dim: dim(j),
            chi: poset.below(j).map(|i| sign(dim(i))).sum(),
            expected: sphere_euler(dim(j)),
        })
        .collect();
    let total_euler = (0..n).map(|i| sign(dim(i))).sum();

    let order_valid = order_violations.is_empty();
    let graded = ungraded_covers.is_empty();
    let diamond = diamond_failures.is_empty();
    let verdict = order_valid
        && graded
        && diamond
        && boundary_euler.iter().all(BoundaryEuler::matches)
        && total_euler == 1;
    CWReport {
        partition: true,
        order_valid,
        order_violations,
        graded,
        ungraded_covers,
        diamond,
        diamond_failures,
        boundary_euler,
        total_euler,
        verdict,
    }
}

/// Alternating count of strata by dimension.
pub fn euler_characteristic(partition: &Partition) -> Result<i64> {
    if !partition.verified {
        return Err(Error::Precondition(
            "the Euler characteristic is only defined for a verified partition".into(),
        ));
    }
    Ok(partition.strata.iter().map(|s| sign(s.dim)).sum())
}
