use std::collections::{BTreeMap, BTreeSet};

use num::Zero;
use rayon::prelude::*;

use super::{same_pattern_pairs, stratum_name, OverlapTable, StratumDescriptor};
use crate::analysis::{Limits, ToricCubeSpec};
use crate::cone::RelintRelation;
use crate::model::{IndexSet, LogValue, LogVector};
use crate::oracle;
use crate::{Error, Result};

/// How many closed-cube points to draw per parameter face when checking that
/// the strata cover the cube.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoverageCheck {
    pub per_face: usize,
    pub seed: u64,
}

impl Default for CoverageCheck {
    fn default() -> Self {
        Self { per_face: 4, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Coverage {
    pub samples: usize,
    pub misses: usize,
    pub multi_hits: usize,
    /// First offending sample and the strata it landed in.
    pub counterexample: Option<(LogVector, Vec<usize>)>,
}

impl Coverage {
    pub fn complete(&self) -> bool {
        self.misses == 0 && self.multi_hits == 0
    }
}

/// A candidate partition of the closed cube into strata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub strata: Vec<StratumDescriptor>,
    /// Position of each retained stratum in the full face-image list.
    pub indices: Vec<usize>,
    /// Face images dropped because they strictly contain another one, by
    /// position in the full list.
    pub removed: Vec<usize>,
    /// No face image had to be dropped.
    pub native: bool,
    pub disjoint: bool,
    /// A pair of retained strata whose relative interiors meet.
    pub overlapping: Option<(usize, usize)>,
    pub coverage: Coverage,
    pub verified: bool,
}

/// Keeps the strata that are minimal under strict relint containment, then
/// re-checks pairwise disjointness exactly and coverage on sampled points.
pub fn minimal_strata(
    spec: &ToricCubeSpec,
    strata: &[StratumDescriptor],
    table: &OverlapTable,
    check: &CoverageCheck,
    limits: &Limits,
) -> Result<Partition> {
    if let Some(p) = table.partial_overlap() {
        return Err(Error::PartialOverlap {
            first: stratum_name(p.first),
            second: stratum_name(p.second),
        });
    }
    let mut dropped = BTreeSet::new();
    for p in table.containments() {
        dropped.insert(match p.relation {
            RelintRelation::FirstInsideSecond => p.second,
            _ => p.first,
        });
    }
    let (removed, retained): (Vec<_>, Vec<_>) = strata
        .iter()
        .enumerate()
        .partition(|(i, _)| dropped.contains(i));
    let indices: Vec<usize> = retained.iter().map(|(i, _)| *i).collect();
    let strata: Vec<StratumDescriptor> = retained.into_iter().map(|(_, s)| s.clone()).collect();
    let removed: Vec<usize> = removed.into_iter().map(|(i, _)| i).collect();

    let engine = &limits.engine;
    let relations: Vec<((usize, usize), RelintRelation)> = same_pattern_pairs(&strata)
        .into_par_iter()
        .map(|(i, j)| Ok(((i, j), engine.relint_relation(&strata[i].generators, &strata[j].generators)?)))
        .collect::<Result<_>>()?;
    let overlapping = relations
        .iter()
        .find(|(_, r)| *r != RelintRelation::Disjoint)
        .map(|(pair, _)| *pair);

    let coverage = coverage(spec, &strata, check, limits)?;
    Ok(Partition {
        native: removed.is_empty() && table.partition,
        disjoint: overlapping.is_none(),
        verified: overlapping.is_none() && coverage.complete(),
        overlapping,
        coverage,
        removed,
        indices,
        strata,
    })
}

/// Samples every face of the closed cube and counts, exactly, how many of
/// `strata` contain each sample.
pub fn coverage(
    spec: &ToricCubeSpec,
    strata: &[StratumDescriptor],
    check: &CoverageCheck,
    limits: &Limits,
) -> Result<Coverage> {
    let points = oracle::sample_closed_cube(spec, check.per_face, check.seed, limits.max_faces)?;
    let mut by_pattern: BTreeMap<(&IndexSet, &IndexSet), Vec<usize>> = BTreeMap::new();
    for (i, s) in strata.iter().enumerate() {
        by_pattern.entry(s.key()).or_default().push(i);
    }
    let hits: Vec<Vec<usize>> = points
        .par_iter()
        .map(|p| {
            let zeros = IndexSet::new((0..p.len()).filter(|&j| p.entries()[j].is_neg_infinity()));
            let ones = IndexSet::new(
                (0..p.len()).filter(|&j| matches!(&p.entries()[j], LogValue::Finite(q) if q.is_zero())),
            );
            let mut found = Vec::new();
            for &i in by_pattern.get(&(&zeros, &ones)).map(Vec::as_slice).unwrap_or(&[]) {
                if strata[i].contains(p, &limits.engine)? {
                    found.push(i);
                }
            }
            Ok(found)
        })
        .collect::<Result<_>>()?;
    let mut out = Coverage {
        samples: points.len(),
        ..Coverage::default()
    };
    for (p, found) in points.iter().zip(hits) {
        match found.len() {
            1 => continue,
            0 => out.misses += 1,
            _ => out.multi_hits += 1,
        }
        if out.counterexample.is_none() {
            out.counterexample = Some((p.clone(), found));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::{classify_overlaps, enumerate_strata};
    use super::*;

    fn run(d: usize, rows: &[&[i64]]) -> Partition {
        let spec = ToricCubeSpec::from_rows(d, rows);
        let limits = Limits::default();
        let strata = enumerate_strata(&spec, &limits).unwrap();
        let table = classify_overlaps(&strata, &limits.engine).unwrap();
        minimal_strata(&spec, &strata, &table, &CoverageCheck::default(), &limits).unwrap()
    }

    #[test]
    fn diagonal_split_is_repaired() {
        let p = run(3, &[&[1, 0, 1], &[0, 1, 1]]);
        assert_eq!(p.strata.len(), 11);
        assert_eq!(p.removed, vec![0]);
        assert_eq!(p.indices.len(), 11);
        let dims: Vec<usize> = p.strata.iter().map(|s| s.dim).collect();
        assert_eq!(dims, [2, 2, 1, 1, 1, 1, 1, 0, 0, 0, 0]);
        assert!(p.disjoint && p.coverage.complete() && p.verified);
        assert_eq!(p.coverage.samples, 27 * 4);
    }

    #[test]
    fn partitions_stay_unchanged() {
        for (d, rows) in [(2, vec![&[1i64, 0][..], &[0, 1], &[1, 1]]), (1, vec![&[1][..], &[2]])] {
            let p = run(d, &rows);
            assert!(p.native && p.removed.is_empty() && p.verified);
        }
    }

    #[test]
    fn partial_overlap_is_reported() {
        // Columns (1,0), (0,1), (1,1), (1,2): the cones on {(1,0),(1,2)} and
        // {(0,1),(1,1)} cross.
        let spec = ToricCubeSpec::from_rows(4, &[[1, 0, 1, 1], [0, 1, 1, 2]]);
        let limits = Limits::default();
        let strata = enumerate_strata(&spec, &limits).unwrap();
        let table = classify_overlaps(&strata, &limits.engine).unwrap();
        assert!(table.partial_overlap().is_some());
        assert!(matches!(
            minimal_strata(&spec, &strata, &table, &CoverageCheck::default(), &limits),
            Err(Error::PartialOverlap { .. })
        ));
    }
}
