//! Exact analysis of a single toric cube.
//!
//! Under `z_i = log t_i` the monomial map becomes `z -> A z` on the open
//! negative orthant, where `A` is the exponent matrix. Every question here is
//! answered on that linear picture:
//!
//! * the dimension of the open cube is `rank A`;
//! * the coordinate projection to `J` is injective on the open cube iff
//!   `ker A_J ⊆ ker A` (differences `z - z'` fill a neighbourhood of 0);
//! * a slice by coordinate constraints `x_j rel c` is the image of the convex
//!   set `{z < 0, a_j . z rel log c}`, so it is connected whenever nonempty.

use rayon::prelude::*;

use num::{Signed, Zero};

use crate::cone::{FourierMotzkin, LinearSystem};
use crate::linalg::{dot, RationalMatrix};
use crate::model::{
    ConeConstraint, ConstraintSystem, ExponentMatrix, IndexSet, LogConstant, LogValue, LogVector,
    Rational, Relation,
};
use crate::oracle::{self, ConnectivityVerdict, SamplingConfig};
use crate::rng;
use crate::{Error, Result};

pub const DEFAULT_MAX_SUBSETS: u128 = 1 << 16;
pub const DEFAULT_MAX_FACES: u128 = 531_441; // 3^12

/// Log-constants used for the deterministic slice draws.
pub fn default_log_constants() -> [Rational; 5] {
    let r = |p: i64, q: i64| Rational::new(p.into(), q.into());
    [r(-1, 1), r(-1, 2), r(-2, 1), r(-1, 3), r(-3, 1)]
}

/// Enumeration caps and the elimination engine used by every analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_subsets: u128,
    pub max_faces: u128,
    pub engine: FourierMotzkin,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_subsets: DEFAULT_MAX_SUBSETS,
            max_faces: DEFAULT_MAX_FACES,
            engine: FourierMotzkin::default(),
        }
    }
}

/// An exponent matrix together with its rational form and cached rank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToricCubeSpec {
    matrix: ExponentMatrix,
    a: RationalMatrix,
    rank: usize,
}

impl ToricCubeSpec {
    pub fn new(matrix: ExponentMatrix) -> Self {
        let a = RationalMatrix::from_rows(matrix.d(), matrix.rational_rows());
        let rank = a.rank();
        Self { matrix, a, rank }
    }

    pub fn from_rows<R: AsRef<[i64]>>(d: usize, rows: &[R]) -> Self {
        Self::new(ExponentMatrix::from_rows(d, rows))
    }

    pub fn matrix(&self) -> &ExponentMatrix {
        &self.matrix
    }

    pub fn exponents(&self) -> &RationalMatrix {
        &self.a
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn d(&self) -> usize {
        self.matrix.d()
    }

    /// Dimension of the open toric cube.
    pub fn dimension(&self) -> usize {
        self.rank
    }

    fn check_subset(&self, j: &IndexSet) -> Result<()> {
        match j.members().last() {
            Some(&last) if last >= self.n() => Err(Error::IndexOutOfRange {
                index: last + 1,
                n: self.n(),
            }),
            _ => Ok(()),
        }
    }

    /// The toric cube of the rows in `j`, which is the coordinate projection
    /// of this cube onto `j`.
    pub fn project(&self, j: &IndexSet) -> Result<ToricCubeSpec> {
        self.check_subset(j)?;
        Ok(Self::new(self.matrix.select_rows(j.members())))
    }

    /// `ker A_J ⊆ ker A`.
    pub fn is_injective_projection(&self, j: &IndexSet) -> Result<bool> {
        self.check_subset(j)?;
        let kernel = self.a.select_rows(j.members()).kernel_basis();
        Ok(kernel
            .iter()
            .all(|v| self.a.mul_vec(v).iter().all(Zero::is_zero)))
    }

    /// `dim rho_J(C) = rank A_J`.
    pub fn image_dim(&self, j: &IndexSet) -> Result<usize> {
        self.check_subset(j)?;
        Ok(self.a.select_rows(j.members()).rank())
    }

    pub fn image_of(&self, z: &[Rational]) -> Vec<Rational> {
        self.a.mul_vec(z)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuasiAffineRecord {
    pub subset: IndexSet,
    pub injective: bool,
    pub image_dim: usize,
    pub biconditional_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuasiAffineReport {
    pub dimension: usize,
    pub records: Vec<QuasiAffineRecord>,
    pub overall: bool,
}

impl QuasiAffineReport {
    pub fn failures(&self) -> impl Iterator<Item = &QuasiAffineRecord> {
        self.records.iter().filter(|r| !r.biconditional_holds)
    }
}

fn subsets_within_cap(n: usize, limits: &Limits) -> Result<Vec<IndexSet>> {
    let required = if n >= 127 { u128::MAX } else { 1u128 << n };
    if required > limits.max_subsets {
        return Err(Error::CapExceeded {
            what: "subset enumeration",
            required,
            cap: limits.max_subsets,
        });
    }
    Ok(IndexSet::all_subsets(n))
}

/// For every coordinate subset `J`: projection injective iff the projected
/// image has full dimension.
pub fn verify_quasi_affine(spec: &ToricCubeSpec, limits: &Limits) -> Result<QuasiAffineReport> {
    let subsets = subsets_within_cap(spec.n(), limits)?;
    let k = spec.dimension();
    let records: Vec<QuasiAffineRecord> = subsets
        .into_par_iter()
        .map(|subset| {
            let injective = spec.is_injective_projection(&subset)?;
            let image_dim = spec.image_dim(&subset)?;
            Ok(QuasiAffineRecord {
                biconditional_holds: injective == (image_dim == k),
                subset,
                injective,
                image_dim,
            })
        })
        .collect::<Result<_>>()?;
    let overall = records.iter().all(|r| r.biconditional_holds);
    Ok(QuasiAffineReport {
        dimension: k,
        records,
        overall,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MembershipMode {
    Open,
    Closure,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Membership {
    pub member: bool,
    /// A parameter point mapping to the queried point: `z < 0` in open mode,
    /// `z in [-inf, 0]^d` in closure mode.
    pub witness: Option<LogVector>,
    /// When `A z = zeta` has no solution at all: `y` with `y^T A = 0` and
    /// `y . zeta != 0`.
    pub inconsistency: Option<Vec<Rational>>,
}

impl Membership {
    fn no() -> Self {
        Self {
            member: false,
            witness: None,
            inconsistency: None,
        }
    }
}

pub fn membership(
    spec: &ToricCubeSpec,
    zeta: &LogVector,
    mode: MembershipMode,
    engine: &FourierMotzkin,
) -> Result<Membership> {
    if zeta.len() != spec.n() {
        return Err(Error::DimensionMismatch {
            what: "log point",
            expected: spec.n(),
            found: zeta.len(),
        });
    }
    if zeta
        .entries()
        .iter()
        .any(|v| v.finite().is_some_and(Signed::is_positive))
    {
        return Ok(Membership::no());
    }
    match mode {
        MembershipMode::Open => {
            let finite = zeta.to_finite().ok_or_else(|| {
                Error::Precondition("-inf entries are only meaningful in closure mode".into())
            })?;
            open_membership(spec, &finite, engine)
        }
        MembershipMode::Closure => {
            let witness = closed_toric_contains(&spec.a.row_vecs(), spec.d(), zeta.entries(), engine)?;
            Ok(Membership {
                member: witness.is_some(),
                witness,
                inconsistency: None,
            })
        }
    }
}

fn open_membership(spec: &ToricCubeSpec, zeta: &[Rational], engine: &FourierMotzkin) -> Result<Membership> {
    let mut sys = LinearSystem::new(spec.d());
    sys.add_negative_orthant();
    for (row, value) in spec.a.row_vecs().into_iter().zip(zeta) {
        sys.add_equality(row, value.clone());
    }
    if let Some(z) = engine.feasible(&sys)?.into_witness() {
        return Ok(Membership {
            member: true,
            witness: Some(LogVector::from_finite(z)),
            inconsistency: None,
        });
    }
    let inconsistency = if spec.a.solve(zeta).is_empty() {
        spec.a
            .transpose()
            .kernel_basis()
            .into_iter()
            .find(|y| !dot(y, zeta).is_zero())
    } else {
        None
    };
    Ok(Membership {
        member: false,
        witness: None,
        inconsistency,
    })
}

/// Membership in the closed toric cube of the matrix with the given rows
/// (`cols` parameters), for a point in extended log coordinates.
///
/// Let `Z` be the `-inf` coordinates of the point. Sending a parameter to 0
/// kills exactly the rows where that column is positive, so the largest
/// usable set of zero columns is `S = {i : every row positive in column i
/// lies in Z}` and the point is reachable iff `S` kills all of `Z` and the
/// finite part lies in `-cone(columns outside S)` (parameters in `(0,1]`).
/// Returns a parameter witness in `[-inf, 0]^cols`.
pub(crate) fn closed_toric_contains(
    rows: &[Vec<Rational>],
    cols: usize,
    zeta: &[LogValue],
    engine: &FourierMotzkin,
) -> Result<Option<LogVector>> {
    debug_assert_eq!(rows.len(), zeta.len());
    if zeta
        .iter()
        .any(|v| v.finite().is_some_and(Signed::is_positive))
    {
        return Ok(None);
    }
    let in_zero = |j: usize| zeta[j].is_neg_infinity();
    let killed_cols: Vec<bool> = (0..cols)
        .map(|i| (0..rows.len()).all(|j| !rows[j][i].is_positive() || in_zero(j)))
        .collect();
    let reaches_all_zeros = (0..rows.len())
        .filter(|&j| in_zero(j))
        .all(|j| (0..cols).any(|i| killed_cols[i] && rows[j][i].is_positive()));
    if !reaches_all_zeros {
        return Ok(None);
    }
    let live_rows: Vec<usize> = (0..rows.len()).filter(|&j| !in_zero(j)).collect();
    let live_cols: Vec<usize> = (0..cols).filter(|&i| !killed_cols[i]).collect();
    let gens = crate::cone::ConeGenerators::new(
        live_rows.len(),
        live_cols
            .iter()
            .map(|&i| live_rows.iter().map(|&j| rows[j][i].clone()).collect())
            .collect(),
    );
    let target: Vec<Rational> = live_rows
        .iter()
        .map(|&j| -zeta[j].finite().expect("live rows are finite").clone())
        .collect();
    let Some(lambda) = engine.cone_coefficients(&target, &gens)? else {
        return Ok(None);
    };
    let mut z = vec![LogValue::NegInfinity; cols];
    for (&i, l) in live_cols.iter().zip(lambda) {
        z[i] = LogValue::Finite(-l);
    }
    Ok(Some(LogVector(z)))
}

/// Certificate kinds for slice connectedness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConnectivityCertificate {
    /// The slice is the image of a convex set of log parameters.
    LogConvexity,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceReport {
    pub nonempty: bool,
    /// A point of the slice in log coordinates.
    pub witness: Option<LogVector>,
    /// Its log parameter `z < 0`.
    pub parameter: Option<Vec<Rational>>,
    pub dim: Option<usize>,
    pub connected: Option<ConnectivityCertificate>,
}

pub(crate) fn finite_constants(spec: &ToricCubeSpec, sys: &ConstraintSystem) -> Result<Vec<(usize, Relation, Rational)>> {
    sys.constraints()
        .iter()
        .map(|c| {
            if c.coord >= spec.n() {
                return Err(Error::IndexOutOfRange {
                    index: c.coord + 1,
                    n: spec.n(),
                });
            }
            match &c.log_c {
                LogConstant::Finite(q) => Ok((c.coord, c.relation, q.clone())),
                LogConstant::Bottom => Err(Error::Precondition(format!(
                    "constraint on x_{} has c = 0, which only makes sense on the closed cube",
                    c.coord + 1
                ))),
            }
        })
        .collect()
}

/// The log-parameter system `{z < 0} ∪ {a_j . z rel log c_j}`.
pub fn slice_system(spec: &ToricCubeSpec, sys: &ConstraintSystem) -> Result<LinearSystem> {
    let mut out = LinearSystem::new(spec.d());
    out.add_negative_orthant();
    for (j, rel, log_c) in finite_constants(spec, sys)? {
        let row = spec.a.row(j).to_vec();
        match rel {
            Relation::Less => out.add_lt(row, log_c),
            Relation::Greater => out.add_gt(row, log_c),
            Relation::Equal => out.add_equality(row, log_c),
        };
    }
    Ok(out)
}

/// Intersection of the open cube with a coordinate cone.
pub fn slice(spec: &ToricCubeSpec, sys: &ConstraintSystem, engine: &FourierMotzkin) -> Result<SliceReport> {
    let system = slice_system(spec, sys)?;
    let Some(z) = engine.feasible(&system)?.into_witness() else {
        return Ok(SliceReport {
            nonempty: false,
            witness: None,
            parameter: None,
            dim: None,
            connected: None,
        });
    };
    let equality_rows: Vec<Vec<Rational>> = system.equalities().iter().map(|(r, _)| r.clone()).collect();
    let directions = RationalMatrix::from_rows(spec.d(), equality_rows).kernel_basis();
    let dim = if directions.is_empty() {
        0
    } else {
        spec.a
            .mul(&RationalMatrix::from_columns(spec.d(), &directions))
            .rank()
    };
    Ok(SliceReport {
        nonempty: true,
        witness: Some(LogVector::from_finite(spec.image_of(&z))),
        parameter: Some(z),
        dim: Some(dim),
        connected: Some(ConnectivityCertificate::LogConvexity),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonotoneBudget {
    pub draws_per_subset: usize,
    pub sampling: SamplingConfig,
}

impl Default for MonotoneBudget {
    fn default() -> Self {
        Self {
            draws_per_subset: 5,
            sampling: SamplingConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceCheck {
    pub subset: IndexSet,
    pub draw: usize,
    pub system: ConstraintSystem,
    /// `None` when the elimination guard tripped.
    pub report: Option<SliceReport>,
    pub oracle: Option<ConnectivityVerdict>,
    pub passed: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneReport {
    pub quasi_affine: QuasiAffineReport,
    pub slices: Vec<SliceCheck>,
    /// False when some slice could not be decided within the guard.
    pub complete: bool,
    pub failures: usize,
    pub abstentions: usize,
}

impl MonotoneReport {
    pub fn verified(&self) -> bool {
        self.complete && self.quasi_affine.overall && self.failures == 0
    }
}

/// Constraint system for one seeded draw on the coordinates of `subset`.
pub fn draw_constraints(subset: &IndexSet, draw: usize, seed: u64) -> ConstraintSystem {
    use rand::Rng;
    let mut rng = rng::seeded(seed);
    let defaults = default_log_constants();
    let constraints = subset
        .members()
        .iter()
        .enumerate()
        .map(|(pos, &coord)| {
            let relation = Relation::ALL[rng.random_range(0..3)];
            let log_c = if draw < defaults.len() {
                defaults[(draw + pos) % defaults.len()].clone()
            } else {
                rng::negative_rational(&mut rng, 12, 4)
            };
            ConeConstraint::new(coord, relation, log_c)
        })
        .collect();
    ConstraintSystem::new(constraints).expect("one constraint per coordinate")
}

/// Exact report (`None` if the guard tripped), oracle verdict, agreement,
/// and a note explaining any disagreement.
pub type SliceOutcome = (Option<SliceReport>, Option<ConnectivityVerdict>, bool, Option<String>);

/// Checks one slice exactly and against the sampling oracle.
pub fn check_slice(
    spec: &ToricCubeSpec,
    system: &ConstraintSystem,
    sampling: &SamplingConfig,
    seed: u64,
    engine: &FourierMotzkin,
) -> Result<SliceOutcome> {
    let report = match slice(spec, system, engine) {
        Ok(r) => r,
        Err(Error::Guard(g)) => return Ok((None, None, true, Some(g.to_string()))),
        Err(e) => return Err(e),
    };
    let cloud = oracle::sample_slice(spec, system, sampling, seed)?;
    let verdict = oracle::check_connected_with_support(&cloud, cloud.suggested_epsilon(), sampling.min_support);
    let mut note = None;
    let passed = if report.nonempty {
        let witness_ok = match (&report.parameter, &report.witness) {
            (Some(z), Some(w)) => {
                slice_system(spec, system)?.is_satisfied_by(z)
                    && membership(spec, w, MembershipMode::Open, engine)?.member
            }
            _ => false,
        };
        if !witness_ok {
            note = Some("slice witness failed re-verification".to_string());
        } else if !verdict.abstained && verdict.components != 1 {
            note = Some(format!(
                "oracle found {} components in a slice certified connected",
                verdict.components
            ));
        }
        witness_ok && report.connected.is_some() && (verdict.abstained || verdict.components == 1)
    } else {
        if verdict.hits > 0 {
            note = Some(format!("oracle found {} points in an empty slice", verdict.hits));
        }
        verdict.hits == 0
    };
    Ok((Some(report), Some(verdict), passed, note))
}

/// Quasi-affinity plus connectedness of seeded slices by every coordinate
/// subset, each cross-checked against the sampling oracle.
pub fn verify_monotone(
    spec: &ToricCubeSpec,
    budget: &MonotoneBudget,
    seed: u64,
    limits: &Limits,
) -> Result<MonotoneReport> {
    let quasi_affine = verify_quasi_affine(spec, limits)?;
    let subsets = subsets_within_cap(spec.n(), limits)?;
    let per_subset: Vec<Vec<SliceCheck>> = subsets
        .into_par_iter()
        .enumerate()
        .map(|(idx, subset)| {
            (0..budget.draws_per_subset)
                .map(|draw| {
                    let draw_seed = rng::derive_seed(seed, &[idx as u64, draw as u64]);
                    let system = draw_constraints(&subset, draw, draw_seed);
                    let oracle_seed = rng::derive_seed(draw_seed, &[1]);
                    let (report, oracle, passed, note) =
                        check_slice(spec, &system, &budget.sampling, oracle_seed, &limits.engine)?;
                    Ok(SliceCheck {
                        subset: subset.clone(),
                        draw,
                        system,
                        report,
                        oracle,
                        passed,
                        note,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let slices: Vec<SliceCheck> = per_subset.into_iter().flatten().collect();
    let complete = slices.iter().all(|s| s.report.is_some());
    let failures = slices.iter().filter(|s| !s.passed).count();
    let abstentions = slices
        .iter()
        .filter(|s| {
            s.report.as_ref().is_some_and(|r| r.nonempty) && s.oracle.as_ref().is_some_and(|o| o.abstained)
        })
        .count();
    Ok(MonotoneReport {
        quasi_affine,
        slices,
        complete,
        failures,
        abstentions,
    })
}
