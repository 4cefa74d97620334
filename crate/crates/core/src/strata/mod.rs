//! Boundary strata of the closed toric cube.
//!
//! Each face of `[0,1]^d` fixes some parameters at 0, some at 1 and leaves
//! the rest open. In log coordinates its image is: `-inf` on the rows hit by
//! a zero parameter, `0` on the rows that no open parameter touches, and
//! `-relint cone(reduced columns)` on the remaining active rows. Face images
//! can nest, so they are classified exactly and, when needed, pruned to the
//! minimal ones before the closure order is built.

mod partition;
mod poset;

use std::collections::BTreeMap;
use std::fmt;

use num::{BigUint, Signed, Zero};
use rayon::prelude::*;

pub use partition::{minimal_strata, Coverage, CoverageCheck, Partition};
pub use poset::{check_regular_cw, closure_poset, euler_characteristic, BoundaryEuler, CWReport, StrataPoset};

use crate::analysis::{closed_toric_contains, Limits, ToricCubeSpec};
use crate::cone::{ConeGenerators, FourierMotzkin, RelintRelation};
use crate::model::{ExponentMatrix, IndexSet, LogValue, LogVector, Rational};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FaceState {
    Zero,
    Open,
    One,
}

impl FaceState {
    pub fn symbol(self) -> char {
        match self {
            FaceState::Zero => '0',
            FaceState::Open => '*',
            FaceState::One => '1',
        }
    }
}

/// A face of the parameter cube. Faces compare in base-3 order with the
/// first coordinate most significant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CubeFace(Vec<FaceState>);

impl CubeFace {
    pub fn new(states: Vec<FaceState>) -> Self {
        Self(states)
    }

    pub fn interior(d: usize) -> Self {
        Self(vec![FaceState::Open; d])
    }

    pub fn states(&self) -> &[FaceState] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// All `3^d` faces in base-3 order.
    pub fn enumerate(d: usize, max_faces: u128) -> Result<Vec<CubeFace>> {
        let required = 3u128.checked_pow(d as u32).unwrap_or(u128::MAX);
        if required > max_faces {
            return Err(Error::CapExceeded {
                what: "face enumeration",
                required,
                cap: max_faces,
            });
        }
        let all = [FaceState::Zero, FaceState::Open, FaceState::One];
        Ok((0..required as usize)
            .map(|mut idx| {
                let mut states = vec![FaceState::Zero; d];
                for s in states.iter_mut().rev() {
                    *s = all[idx % 3];
                    idx /= 3;
                }
                CubeFace(states)
            })
            .collect())
    }
}

impl fmt::Display for CubeFace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|s| write!(f, "{}", s.symbol()))
    }
}

/// One open face image: zero set `Z`, one set `O`, and the reduced column
/// cone on the active coordinates (everything outside `Z ∪ O`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StratumDescriptor {
    pub n: usize,
    pub zero_set: IndexSet,
    pub one_set: IndexSet,
    /// Active coordinates, increasing; the generators live on these.
    pub active: Vec<usize>,
    pub generators: ConeGenerators,
    pub dim: usize,
    pub origin_faces: Vec<CubeFace>,
}

impl StratumDescriptor {
    pub fn key(&self) -> (&IndexSet, &IndexSet) {
        (&self.zero_set, &self.one_set)
    }

    /// `-inf` on `Z`, `0` on `O`, minus the generator sum on the active part.
    pub fn canonical_point(&self) -> LogVector {
        let mut out = vec![LogValue::Finite(Rational::zero()); self.n];
        for &j in self.zero_set.members() {
            out[j] = LogValue::NegInfinity;
        }
        for (&j, s) in self.active.iter().zip(self.generators.canonical_point()) {
            out[j] = LogValue::Finite(-s);
        }
        LogVector(out)
    }

    fn pattern_matches(&self, zeta: &[LogValue]) -> bool {
        self.zero_set.members().iter().all(|&j| zeta[j].is_neg_infinity())
            && self
                .one_set
                .members()
                .iter()
                .all(|&j| zeta[j].finite().is_some_and(Zero::is_zero))
    }

    fn active_part(&self, zeta: &[LogValue]) -> Vec<LogValue> {
        self.active.iter().map(|&j| zeta[j].clone()).collect()
    }

    /// Exact membership of an extended log point in this stratum.
    pub fn contains(&self, zeta: &LogVector, engine: &FourierMotzkin) -> Result<bool> {
        let zeta = zeta.entries();
        if zeta.len() != self.n || !self.pattern_matches(zeta) {
            return Ok(false);
        }
        let mut target = Vec::with_capacity(self.active.len());
        for v in self.active_part(zeta) {
            match v {
                LogValue::Finite(q) if q.is_negative() => target.push(-q),
                _ => return Ok(false),
            }
        }
        if target.is_empty() {
            return Ok(true);
        }
        Ok(engine.relint_member(&target, &self.generators)?)
    }

    /// Exact membership in the closure of this stratum.
    pub fn closure_contains(&self, zeta: &LogVector, engine: &FourierMotzkin) -> Result<bool> {
        let zeta = zeta.entries();
        if zeta.len() != self.n || !self.pattern_matches(zeta) {
            return Ok(false);
        }
        let rows: Vec<Vec<Rational>> = (0..self.active.len())
            .map(|r| self.generators.vectors().iter().map(|g| g[r].clone()).collect())
            .collect();
        let found = closed_toric_contains(&rows, self.generators.len(), &self.active_part(zeta), engine)?;
        Ok(found.is_some())
    }

    /// This stratum as a toric cube in its own right: active rows by
    /// generator columns.
    pub fn reduced_spec(&self) -> ToricCubeSpec {
        let rows = (0..self.active.len())
            .map(|r| {
                self.generators
                    .vectors()
                    .iter()
                    .map(|g| {
                        let v = g[r].to_integer().to_biguint();
                        v.expect("generator entries are nonnegative integers")
                    })
                    .collect::<Vec<BigUint>>()
            })
            .collect();
        ToricCubeSpec::new(ExponentMatrix::new(self.generators.len(), rows).expect("rectangular"))
    }

    pub fn generator_strings(&self) -> Vec<Vec<String>> {
        self.generators
            .vectors()
            .iter()
            .map(|g| g.iter().map(|x| x.to_integer().to_string()).collect())
            .collect()
    }
}

/// The image of one cube face.
pub fn face_image(spec: &ToricCubeSpec, face: &CubeFace) -> StratumDescriptor {
    assert_eq!(face.len(), spec.d(), "face length must equal d");
    let m = spec.matrix();
    let states = face.states();
    let zero_set = IndexSet::new((0..spec.n()).filter(|&j| {
        states
            .iter()
            .enumerate()
            .any(|(i, s)| *s == FaceState::Zero && !m.entry(j, i).is_zero())
    }));
    let open: Vec<usize> = (0..spec.d()).filter(|&i| states[i] == FaceState::Open).collect();
    let (one, active): (Vec<usize>, Vec<usize>) = (0..spec.n())
        .filter(|j| !zero_set.contains(*j))
        .partition(|&j| open.iter().all(|&i| m.entry(j, i).is_zero()));
    let vectors: Vec<Vec<Rational>> = open
        .iter()
        .map(|&i| {
            active
                .iter()
                .map(|&j| Rational::from_integer(m.entry(j, i).clone().into()))
                .collect::<Vec<_>>()
        })
        .filter(|g| g.iter().any(|x| !x.is_zero()))
        .collect();
    let generators = ConeGenerators::new(active.len(), vectors);
    StratumDescriptor {
        n: spec.n(),
        zero_set,
        one_set: IndexSet::new(one),
        dim: generators.rank(),
        active,
        generators,
        origin_faces: vec![face.clone()],
    }
}

fn canonical_order(a: &StratumDescriptor, b: &StratumDescriptor) -> std::cmp::Ordering {
    b.dim
        .cmp(&a.dim)
        .then_with(|| a.zero_set.cmp(&b.zero_set))
        .then_with(|| a.one_set.cmp(&b.one_set))
        .then_with(|| a.origin_faces[0].cmp(&b.origin_faces[0]))
}

/// All distinct face images, merged when `(Z, O)` agree and the cones are
/// equal, in canonical order.
pub fn enumerate_strata(spec: &ToricCubeSpec, limits: &Limits) -> Result<Vec<StratumDescriptor>> {
    let faces = CubeFace::enumerate(spec.d(), limits.max_faces)?;
    let images: Vec<StratumDescriptor> = faces.par_iter().map(|f| face_image(spec, f)).collect();
    dedupe(images, &limits.engine)
}

/// Merges images with the same `(Z, O)` and equal cones. Each group is merged
/// in origin-face order, so the representative generators and the canonically
/// sorted result do not depend on the order of `images`.
pub fn dedupe(images: Vec<StratumDescriptor>, engine: &FourierMotzkin) -> Result<Vec<StratumDescriptor>> {
    let mut groups: BTreeMap<(IndexSet, IndexSet), Vec<StratumDescriptor>> = BTreeMap::new();
    for img in images {
        groups
            .entry((img.zero_set.clone(), img.one_set.clone()))
            .or_default()
            .push(img);
    }
    let merged: Vec<Vec<StratumDescriptor>> = groups
        .into_values()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|mut group| {
            group.sort_by(|a, b| a.origin_faces.cmp(&b.origin_faces));
            let mut out: Vec<StratumDescriptor> = Vec::new();
            for img in group {
                let mut home = None;
                for (k, s) in out.iter().enumerate() {
                    if s.dim == img.dim && engine.cone_equal(&s.generators, &img.generators)? {
                        home = Some(k);
                        break;
                    }
                }
                match home {
                    Some(k) => out[k].origin_faces.extend(img.origin_faces),
                    None => out.push(img),
                }
            }
            for s in &mut out {
                s.origin_faces.sort();
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut strata: Vec<StratumDescriptor> = merged.into_iter().flatten().collect();
    strata.sort_by(canonical_order);
    Ok(strata)
}

pub fn stratum_name(index: usize) -> String {
    format!("S{index}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OverlapPair {
    pub first: usize,
    pub second: usize,
    pub relation: RelintRelation,
}

/// Relations between strata sharing a zero/one pattern; all other pairs are
/// disjoint by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlapTable {
    pub pairs: Vec<OverlapPair>,
    pub partition: bool,
}

impl OverlapTable {
    pub fn containments(&self) -> impl Iterator<Item = &OverlapPair> {
        self.pairs.iter().filter(|p| {
            matches!(
                p.relation,
                RelintRelation::FirstInsideSecond | RelintRelation::SecondInsideFirst
            )
        })
    }

    pub fn partial_overlap(&self) -> Option<&OverlapPair> {
        self.pairs
            .iter()
            .find(|p| p.relation == RelintRelation::PartialOverlap)
    }
}

fn same_pattern_pairs(strata: &[StratumDescriptor]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for i in 0..strata.len() {
        for j in i + 1..strata.len() {
            if strata[i].key() == strata[j].key() {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

pub fn classify_overlaps(strata: &[StratumDescriptor], engine: &FourierMotzkin) -> Result<OverlapTable> {
    let pairs: Vec<OverlapPair> = same_pattern_pairs(strata)
        .into_par_iter()
        .map(|(i, j)| {
            let relation = engine.relint_relation(&strata[i].generators, &strata[j].generators)?;
            Ok(OverlapPair {
                first: i,
                second: j,
                relation,
            })
        })
        .collect::<Result<_>>()?;
    let partition = pairs
        .iter()
        .all(|p| matches!(p.relation, RelintRelation::Disjoint | RelintRelation::Equal));
    Ok(OverlapTable { pairs, partition })
}

/// Everything the stratification pipeline produces for one spec.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stratification {
    pub faces: usize,
    pub strata: Vec<StratumDescriptor>,
    pub overlaps: OverlapTable,
    /// `None` when a partial overlap stopped the repair.
    pub partition: Option<Partition>,
    pub poset: Option<StrataPoset>,
    pub cw: Option<CWReport>,
}

impl Stratification {
    /// Ball certificate: a verified partition whose poset passes every check.
    pub fn certified(&self) -> bool {
        self.cw.as_ref().is_some_and(|c| c.verdict)
    }
}

pub fn stratify(spec: &ToricCubeSpec, limits: &Limits, coverage: &CoverageCheck) -> Result<Stratification> {
    let strata = enumerate_strata(spec, limits)?;
    let overlaps = classify_overlaps(&strata, &limits.engine)?;
    let partition = match minimal_strata(spec, &strata, &overlaps, coverage, limits) {
        Ok(p) => Some(p),
        Err(Error::PartialOverlap { .. }) => None,
        Err(e) => return Err(e),
    };
    let poset = match &partition {
        Some(p) if p.verified => Some(closure_poset(p, &limits.engine)?),
        _ => None,
    };
    let cw = poset.as_ref().map(check_regular_cw);
    Ok(Stratification {
        faces: 3usize.pow(spec.d() as u32),
        strata,
        overlaps,
        partition,
        poset,
        cw,
    })
}
