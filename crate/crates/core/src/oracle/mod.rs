//! Seeded sampling machinery that cross-checks the exact engine.
//!
//! Constraint filtering and membership stay exact on rational sample points;
//! only image coordinates, distances and singular values are floating point.
//! All randomness is derived from the caller's seed per unit of work, so the
//! results do not depend on how rayon splits the work.

mod union_find;

use std::cmp::Ordering;

use nalgebra::DMatrix;
use num::{BigInt, Integer, One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;

pub use union_find::DisjointSet;

use crate::analysis::{self, membership, MembershipMode, ToricCubeSpec};
use crate::cone::{FourierMotzkin, LinearSystem};
use crate::linalg::{dot, RationalMatrix};
use crate::model::{
    rational_to_f64, ConstraintSystem, IndexSet, LogValue, LogVector, ParameterPoint, Rational,
    Relation,
};
use crate::rng;
use crate::strata::{CubeFace, FaceState};
use crate::{Error, Result};

pub const DEFAULT_RESOLUTION: usize = 64;
pub const DEFAULT_LOG_BOX: u32 = 8;
pub const DEFAULT_MAX_POINTS: usize = 4096;
pub const DEFAULT_MIN_SUPPORT: usize = 10;
/// Relative singular-value cutoff for the local dimension estimate.
pub const SINGULAR_VALUE_CUTOFF: f64 = 1e-6;

const CHUNK: usize = 512;
const RANDOM_DENOMINATOR: i64 = 4096;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingConfig {
    /// Grid points per axis are `resolution - 1` (fewer if `max_points` binds).
    pub resolution: usize,
    /// Samples live in the log box `[-log_box, 0)`.
    pub log_box: u32,
    pub max_points: usize,
    pub min_support: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            resolution: DEFAULT_RESOLUTION,
            log_box: DEFAULT_LOG_BOX,
            max_points: DEFAULT_MAX_POINTS,
            min_support: DEFAULT_MIN_SUPPORT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Grid,
    Random { count: usize },
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Grid => "grid",
            Strategy::Random { .. } => "random",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplePoint {
    pub z: Vec<Rational>,
    pub zeta: Vec<Rational>,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleCloud {
    pub points: Vec<SamplePoint>,
    pub seed: u64,
    pub strategy: Strategy,
    /// Sample values per free axis.
    pub per_axis: usize,
    /// Dimension of the affine parameter set being sampled.
    pub free_dims: usize,
    /// Number of candidate points before filtering.
    pub capacity: usize,
    /// Largest per-coordinate image change between grid neighbours.
    pub image_step: f64,
    /// The window grid was too coarse and the slice's own bounding box was
    /// rescanned instead.
    pub zoomed: bool,
}

impl SampleCloud {
    /// A cloud of bare image points, e.g. for testing the connectivity check.
    pub fn from_images(images: Vec<Vec<f64>>) -> Self {
        let capacity = images.len();
        Self {
            points: images
                .into_iter()
                .map(|x| SamplePoint {
                    z: Vec::new(),
                    zeta: Vec::new(),
                    x,
                })
                .collect(),
            seed: 0,
            strategy: Strategy::Grid,
            per_axis: capacity,
            free_dims: 1,
            capacity,
            image_step: 0.0,
            zoomed: false,
        }
    }

    pub fn hits(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Twice the image-space grid step.
    pub fn suggested_epsilon(&self) -> f64 {
        (2.0 * self.image_step).max(1e-12)
    }
}

/// `t -> (t^{a_1}, ..., t^{a_n})` in floating point, with `0^0 = 1`.
pub fn evaluate_map(spec: &ToricCubeSpec, t: &ParameterPoint) -> Vec<f64> {
    let t = t.to_unit();
    assert_eq!(t.len(), spec.d(), "parameter length");
    spec.matrix()
        .rows()
        .iter()
        .map(|row| {
            row.iter().zip(&t).fold(1.0, |acc, (a, &ti)| match a.to_i32() {
                Some(e) => acc * ti.powi(e),
                None => acc * ti.powf(a.to_f64().unwrap_or(f64::INFINITY)),
            })
        })
        .collect()
}

/// Sign test for `base + sum k_f slope_f`, with denominators cleared.
struct IntegerForm {
    base: BigInt,
    slopes: Vec<BigInt>,
}

impl IntegerForm {
    fn new(base: &Rational, slopes: &[Rational]) -> Self {
        let lcm = slopes
            .iter()
            .fold(base.denom().clone(), |acc, s| acc.lcm(s.denom()));
        let scale = |q: &Rational| q.numer() * (&lcm / q.denom());
        Self {
            base: scale(base),
            slopes: slopes.iter().map(scale).collect(),
        }
    }

    fn sign(&self, k: &[i64]) -> Ordering {
        let v = self
            .slopes
            .iter()
            .zip(k)
            .fold(self.base.clone(), |acc, (s, &kf)| acc + s * kf);
        v.cmp(&BigInt::zero())
    }
}

/// Largest `c <= cap_axis` with `c^m <= max_points`.
fn per_axis_count(m: usize, cap_axis: usize, max_points: usize) -> usize {
    if m == 0 {
        return 1;
    }
    let mut c = cap_axis.max(1);
    while c > 1 && (c as f64).powi(m as i32) > max_points as f64 {
        c -= 1;
    }
    c
}

/// Samples `slice(spec, sys)`: the equality constraints are solved exactly
/// and a grid (or random set) over the free parameters of their solution
/// set is filtered by exact evaluation of `z < 0` and every inequality.
pub fn sample_slice(
    spec: &ToricCubeSpec,
    sys: &ConstraintSystem,
    config: &SamplingConfig,
    seed: u64,
) -> Result<SampleCloud> {
    sample_slice_with(spec, sys, config, Strategy::Grid, seed)
}

pub fn sample_slice_with(
    spec: &ToricCubeSpec,
    sys: &ConstraintSystem,
    config: &SamplingConfig,
    strategy: Strategy,
    seed: u64,
) -> Result<SampleCloud> {
    if config.resolution < 2 {
        return Err(Error::Precondition("sampling resolution must be at least 2".into()));
    }
    let d = spec.d();
    let constants = analysis::finite_constants(spec, sys)?;
    let a = spec.exponents();
    let (eq_rows, eq_rhs): (Vec<Vec<Rational>>, Vec<Rational>) = constants
        .iter()
        .filter(|(_, rel, _)| *rel == Relation::Equal)
        .map(|(j, _, c)| (a.row(*j).to_vec(), c.clone()))
        .unzip();
    let solution = RationalMatrix::from_rows(d, eq_rows).solve(&eq_rhs);
    let basis = solution.kernel_basis;
    let m = basis.len();
    let Some(particular) = solution.particular else {
        return Ok(SampleCloud {
            points: Vec::new(),
            seed,
            strategy,
            per_axis: 0,
            free_dims: m,
            capacity: 0,
            image_step: 0.0,
            zoomed: false,
        });
    };

    let (per_axis, denominator, capacity) = match strategy {
        Strategy::Grid => {
            let c = per_axis_count(m, config.resolution - 1, config.max_points);
            let capacity = (0..m).fold(1usize, |acc, _| acc.saturating_mul(c));
            (c, c as i64 + 1, capacity)
        }
        Strategy::Random { count } => (0, RANDOM_DENOMINATOR, if m == 0 { 1 } else { count }),
    };
    let scan = Scan {
        spec,
        constants: &constants,
        strategy,
        per_axis,
        denominator,
        capacity,
        seed,
    };

    // Free parameters s_f in (-B, 0): z = particular + sum_f s_f basis[f].
    let window = Rational::from_integer(BigInt::from(config.log_box));
    let h = &window / Rational::from_integer(BigInt::from(denominator));
    let steps: Vec<Vec<Rational>> = basis
        .iter()
        .map(|v| v.iter().map(|x| -(x * &h)).collect())
        .collect();
    let (points, image_step) = scan.run(&particular, &steps);
    if points.len() >= config.min_support.min(capacity) || m == 0 {
        return Ok(SampleCloud {
            points,
            seed,
            strategy,
            per_axis,
            free_dims: m,
            capacity,
            image_step,
            zoomed: false,
        });
    }

    // Too thin for the window grid: rescan the bounding box of the slice
    // inside the window, in the same free parameters.
    let Some(bounds) = free_parameter_box(spec, &constants, &particular, &basis, &window)? else {
        return Ok(SampleCloud {
            points,
            seed,
            strategy,
            per_axis,
            free_dims: m,
            capacity,
            image_step,
            zoomed: false,
        });
    };
    let denom = Rational::from_integer(BigInt::from(denominator));
    let mut base = particular.clone();
    let mut zsteps = Vec::with_capacity(m);
    for ((lo, hi), v) in bounds.iter().zip(&basis) {
        let step = (hi - lo) / &denom;
        for (bi, vi) in base.iter_mut().zip(v) {
            *bi += lo * vi;
        }
        zsteps.push(v.iter().map(|x| x * &step).collect());
    }
    let (points, image_step) = scan.run(&base, &zsteps);
    Ok(SampleCloud {
        points,
        seed,
        strategy,
        per_axis,
        free_dims: m,
        capacity,
        image_step,
        zoomed: true,
    })
}

/// Exact bounding box, in the free parameters, of the slice intersected
/// with the window `z > -B`. `None` if that intersection is empty.
fn free_parameter_box(
    spec: &ToricCubeSpec,
    constants: &[(usize, Relation, Rational)],
    particular: &[Rational],
    basis: &[Vec<Rational>],
    window: &Rational,
) -> Result<Option<Vec<(Rational, Rational)>>> {
    let m = basis.len();
    let a = spec.exponents();
    let mut sys = LinearSystem::new(m);
    for i in 0..spec.d() {
        let coeffs: Vec<Rational> = basis.iter().map(|v| v[i].clone()).collect();
        sys.add_lt(coeffs.clone(), -particular[i].clone());
        sys.add_gt(coeffs, -window - &particular[i]);
    }
    for (j, rel, c) in constants {
        let row = a.row(*j);
        let coeffs: Vec<Rational> = basis.iter().map(|v| dot(row, v)).collect();
        let rhs = c - dot(row, particular);
        match rel {
            Relation::Less => sys.add_lt(coeffs, rhs),
            Relation::Greater => sys.add_gt(coeffs, rhs),
            Relation::Equal => continue,
        };
    }
    let engine = FourierMotzkin::default();
    let mut out = Vec::with_capacity(m);
    for f in 0..m {
        match engine.coordinate_range(&sys, f)? {
            Some((Some(lo), Some(hi))) if lo < hi => out.push((lo, hi)),
            _ => return Ok(None),
        }
    }
    Ok(Some(out))
}

/// One pass over the lattice `base + sum_f k_f steps[f]`, `k_f` in
/// `1..denominator`, keeping the points that satisfy every constraint.
struct Scan<'a> {
    spec: &'a ToricCubeSpec,
    constants: &'a [(usize, Relation, Rational)],
    strategy: Strategy,
    per_axis: usize,
    denominator: i64,
    capacity: usize,
    seed: u64,
}

impl Scan<'_> {
    fn run(&self, base: &[Rational], steps: &[Vec<Rational>]) -> (Vec<SamplePoint>, f64) {
        let spec = self.spec;
        let a = spec.exponents();
        let m = steps.len();
        let mut forms: Vec<(IntegerForm, Ordering)> = Vec::new();
        for i in 0..spec.d() {
            let slopes: Vec<Rational> = steps.iter().map(|s| s[i].clone()).collect();
            forms.push((IntegerForm::new(&base[i], &slopes), Ordering::Less));
        }
        for (j, rel, c) in self.constants {
            let want = match rel {
                Relation::Less => Ordering::Less,
                Relation::Greater => Ordering::Greater,
                Relation::Equal => continue,
            };
            let row = a.row(*j);
            let slopes: Vec<Rational> = steps.iter().map(|s| dot(row, s)).collect();
            forms.push((IntegerForm::new(&(dot(row, base) - c), &slopes), want));
        }

        let image_step = steps
            .iter()
            .flat_map(|s| (0..spec.n()).map(move |j| 1.0 - (-rational_to_f64(&dot(a.row(j), s)).abs()).exp()))
            .fold(0.0f64, f64::max);

        let per_axis = self.per_axis;
        let denominator = self.denominator;
        let coords_of = |idx: usize, rng: Option<&mut rand_chacha::ChaCha8Rng>| -> Vec<i64> {
            match rng {
                None => {
                    let mut rest = idx;
                    (0..m)
                        .map(|_| {
                            let digit = rest % per_axis;
                            rest /= per_axis;
                            digit as i64 + 1
                        })
                        .collect()
                }
                Some(r) => (0..m).map(|_| r.random_range(1..denominator)).collect(),
            }
        };
        let accept = |k: &[i64]| forms.iter().all(|(f, want)| f.sign(k) == *want);
        let realize = |k: &[i64]| -> SamplePoint {
            let mut z = base.to_vec();
            for (kf, s) in k.iter().zip(steps) {
                let kf = Rational::from_integer(BigInt::from(*kf));
                for (zi, si) in z.iter_mut().zip(s) {
                    *zi += si * &kf;
                }
            }
            let zeta = spec.image_of(&z);
            let x = evaluate_map(spec, &ParameterPoint::Log(z.clone()));
            SamplePoint { z, zeta, x }
        };

        let chunks = self.capacity.div_ceil(CHUNK);
        let points = (0..chunks)
            .into_par_iter()
            .map(|chunk| {
                let mut rng = match self.strategy {
                    Strategy::Grid => None,
                    Strategy::Random { .. } => Some(rng::seeded(rng::derive_seed(self.seed, &[chunk as u64]))),
                };
                let end = ((chunk + 1) * CHUNK).min(self.capacity);
                (chunk * CHUNK..end)
                    .filter_map(|idx| {
                        let k = coords_of(idx, rng.as_mut());
                        accept(&k).then(|| realize(&k))
                    })
                    .collect::<Vec<_>>()
            })
            .flatten()
            .collect();
        (points, image_step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectivityVerdict {
    pub components: usize,
    pub epsilon: f64,
    pub hits: usize,
    /// Too few points to say anything.
    pub abstained: bool,
}

pub fn check_connected(cloud: &SampleCloud, epsilon: f64) -> ConnectivityVerdict {
    check_connected_with_support(cloud, epsilon, DEFAULT_MIN_SUPPORT)
}

/// Components of the graph joining points at Chebyshev distance `<= epsilon`.
/// The support threshold is capped by the cloud's capacity, so a fully
/// sampled single-point slice still counts.
pub fn check_connected_with_support(cloud: &SampleCloud, epsilon: f64, min_support: usize) -> ConnectivityVerdict {
    assert!(epsilon > 0.0, "epsilon must be positive");
    let pts: Vec<&[f64]> = cloud.points.iter().map(|p| p.x.as_slice()).collect();
    let hits = pts.len();
    let support = min_support.min(cloud.capacity).max(1);
    if hits == 0 {
        return ConnectivityVerdict {
            components: 0,
            epsilon,
            hits,
            abstained: true,
        };
    }
    let dims = pts[0].len();
    // Sweep along the coordinate with the largest spread.
    let axis = (0..dims)
        .max_by(|&a, &b| {
            let spread = |c: usize| {
                let (lo, hi) = pts
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[c]), hi.max(p[c])));
                hi - lo
            };
            spread(a).total_cmp(&spread(b)).then(b.cmp(&a))
        });
    let mut order: Vec<usize> = (0..hits).collect();
    if let Some(c) = axis {
        order.sort_by(|&i, &j| pts[i][c].total_cmp(&pts[j][c]).then(i.cmp(&j)));
    }
    let mut ds = DisjointSet::new(hits);
    for (pos, &i) in order.iter().enumerate() {
        for &j in &order[pos + 1..] {
            if let Some(c) = axis {
                if pts[j][c] - pts[i][c] > epsilon {
                    break;
                }
            }
            let close = pts[i]
                .iter()
                .zip(pts[j])
                .all(|(a, b)| (a - b).abs() <= epsilon);
            if close {
                ds.union(i, j);
            }
        }
    }
    ConnectivityVerdict {
        components: ds.components(),
        epsilon,
        hits,
        abstained: hits < support,
    }
}

fn random_parameter<R: Rng>(rng: &mut R, d: usize) -> Vec<Rational> {
    (0..d).map(|_| rng::negative_rational(rng, 16, 8)).collect()
}

/// Midpoints of constructed members `A z`, `A z'` must be members again.
/// Returns the number of violations.
pub fn check_log_convexity(
    spec: &ToricCubeSpec,
    trials: usize,
    seed: u64,
    engine: &FourierMotzkin,
) -> Result<usize> {
    let two = Rational::from_integer(2.into());
    let outcomes: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = rng::seeded(rng::derive_seed(seed, &[trial as u64]));
            let z1 = random_parameter(&mut rng, spec.d());
            let z2 = random_parameter(&mut rng, spec.d());
            let mid: Vec<Rational> = spec
                .image_of(&z1)
                .into_iter()
                .zip(spec.image_of(&z2))
                .map(|(a, b)| (a + b) / &two)
                .collect();
            let m = membership(spec, &LogVector::from_finite(mid.clone()), MembershipMode::Open, engine)?;
            let verified = m
                .witness
                .and_then(|w| w.to_finite())
                .is_some_and(|w| w.iter().all(Signed::is_negative) && spec.image_of(&w) == mid);
            Ok(verified)
        })
        .collect::<Result<_>>()?;
    Ok(outcomes.iter().filter(|ok| !**ok).count())
}

/// Constructed members `A z` (random rational `z < 0`) must pass open
/// membership with a witness that maps back onto them. Returns the number of
/// failures.
pub fn check_constructed_members(
    spec: &ToricCubeSpec,
    trials: usize,
    seed: u64,
    engine: &FourierMotzkin,
) -> Result<usize> {
    let outcomes: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = rng::seeded(rng::derive_seed(seed, &[trial as u64]));
            let zeta = spec.image_of(&random_parameter(&mut rng, spec.d()));
            let m = membership(spec, &LogVector::from_finite(zeta.clone()), MembershipMode::Open, engine)?;
            Ok(m
                .witness
                .and_then(|w| w.to_finite())
                .is_some_and(|w| w.iter().all(Signed::is_negative) && spec.image_of(&w) == zeta))
        })
        .collect::<Result<_>>()?;
    Ok(outcomes.iter().filter(|ok| !**ok).count())
}

/// Seeded interior log parameters with every coordinate in `[-3.5, -0.5]`.
pub fn interior_points(d: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng::seeded(seed);
    (0..count)
        .map(|_| (0..d).map(|_| -rng.random_range(0.5..=3.5)).collect())
        .collect()
}

/// Number of principal components of the image of a small symmetric sample
/// around `z0`. Central differences cancel the second-order term, and each
/// image coordinate is scaled by its value at `z0`.
pub fn estimate_local_dimension(
    spec: &ToricCubeSpec,
    z0: &[f64],
    radius: f64,
    count: usize,
    seed: u64,
) -> Result<usize> {
    if z0.len() != spec.d() {
        return Err(Error::DimensionMismatch {
            what: "interior parameter",
            expected: spec.d(),
            found: z0.len(),
        });
    }
    if radius.partial_cmp(&0.0) != Some(Ordering::Greater)
        || z0.iter().any(|&v| (v + radius).partial_cmp(&0.0) != Some(Ordering::Less))
    {
        return Err(Error::Precondition(
            "z0 must be strictly interior with the sampling radius".into(),
        ));
    }
    let n = spec.n();
    if n == 0 || spec.d() == 0 || count == 0 {
        return Ok(0);
    }
    let eval = |z: &[f64]| evaluate_map(spec, &ParameterPoint::Unit(z.iter().map(|v| v.exp()).collect()));
    let x0 = eval(z0);
    let mut rng = rng::seeded(seed);
    let mut data = Vec::with_capacity(count * n);
    for _ in 0..count {
        let delta: Vec<f64> = (0..spec.d()).map(|_| rng.random_range(-radius..=radius)).collect();
        let plus: Vec<f64> = z0.iter().zip(&delta).map(|(a, b)| a + b).collect();
        let minus: Vec<f64> = z0.iter().zip(&delta).map(|(a, b)| a - b).collect();
        let (xp, xm) = (eval(&plus), eval(&minus));
        for j in 0..n {
            let scale = 2.0 * x0[j];
            data.push(if scale > 0.0 { (xp[j] - xm[j]) / scale } else { 0.0 });
        }
    }
    let sv = DMatrix::from_row_slice(count, n, &data).singular_values();
    let max = sv.iter().cloned().fold(0.0f64, f64::max);
    if max <= 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > SINGULAR_VALUE_CUTOFF * max).count())
}

/// For an injective projection: parameters with equal `J`-images must have
/// equal full images. Returns the number of violations.
pub fn check_graph_property(spec: &ToricCubeSpec, subset: &IndexSet, trials: usize, seed: u64) -> Result<usize> {
    if !spec.is_injective_projection(subset)? {
        return Err(Error::Precondition(format!(
            "projection to {subset} is not injective on the open cube"
        )));
    }
    let a_j = spec.exponents().select_rows(subset.members());
    let kernel = a_j.kernel_basis();
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    let violations = (0..trials)
        .into_par_iter()
        .filter(|&trial| {
            let mut rng = rng::seeded(rng::derive_seed(seed, &[trial as u64]));
            let z = random_parameter(&mut rng, spec.d());
            let mut coeffs: Vec<Rational> = kernel.iter().map(|_| rng::signed_rational(&mut rng, 4, 4)).collect();
            let mut z2 = z.clone();
            for _ in 0..64 {
                z2 = z.clone();
                for (c, k) in coeffs.iter().zip(&kernel) {
                    for (zi, ki) in z2.iter_mut().zip(k) {
                        *zi += c * ki;
                    }
                }
                if z2.iter().all(Signed::is_negative) {
                    break;
                }
                coeffs.iter_mut().for_each(|c| *c *= &half);
                z2 = z.clone();
            }
            a_j.mul_vec(&z) != a_j.mul_vec(&z2) || spec.image_of(&z) != spec.image_of(&z2)
        })
        .count();
    Ok(violations)
}

/// Exact points of the closed cube: `per_face` seeded points on the image of
/// every face of the parameter cube.
pub fn sample_closed_cube(spec: &ToricCubeSpec, per_face: usize, seed: u64, max_faces: u128) -> Result<Vec<LogVector>> {
    let faces = CubeFace::enumerate(spec.d(), max_faces)?;
    let a = spec.exponents();
    let per: Vec<Vec<LogVector>> = faces
        .par_iter()
        .enumerate()
        .map(|(fi, face)| {
            let mut rng = rng::seeded(rng::derive_seed(seed, &[fi as u64]));
            (0..per_face)
                .map(|_| {
                    let z: Vec<Option<Rational>> = face
                        .states()
                        .iter()
                        .map(|s| match s {
                            FaceState::Zero => None,
                            FaceState::Open => Some(rng::negative_rational(&mut rng, 16, 8)),
                            FaceState::One => Some(Rational::zero()),
                        })
                        .collect();
                    LogVector(
                        (0..spec.n())
                            .map(|j| {
                                let mut acc = Rational::zero();
                                for (i, zi) in z.iter().enumerate() {
                                    let aji = a.get(j, i);
                                    match zi {
                                        None if aji.is_positive() => return LogValue::NegInfinity,
                                        None => {}
                                        Some(v) => acc += aji * v,
                                    }
                                }
                                LogValue::Finite(acc)
                            })
                            .collect(),
                    )
                })
                .collect()
        })
        .collect();
    Ok(per.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ConeConstraint;

    fn square() -> ToricCubeSpec {
        ToricCubeSpec::from_rows(2, &[[1, 0], [0, 1], [1, 1]])
    }

    fn q(v: i64) -> Rational {
        Rational::from_integer(v.into())
    }

    #[test]
    fn evaluate_examples() {
        let x = evaluate_map(&square(), &ParameterPoint::Unit(vec![0.5, 0.25]));
        assert_eq!(x, vec![0.5, 0.25, 0.125]);
        let x = evaluate_map(&square(), &ParameterPoint::Unit(vec![1.0, 1.0]));
        assert_eq!(x, vec![1.0; 3]);
        let zero = ToricCubeSpec::from_rows(2, &[[0, 0]]);
        assert_eq!(evaluate_map(&zero, &ParameterPoint::Unit(vec![0.0, 0.0])), vec![1.0]);
    }

    #[test]
    fn slice_cloud_on_segment() {
        let sys = ConstraintSystem::new(vec![ConeConstraint::new(2, Relation::Equal, q(-3))]).unwrap();
        let cloud = sample_slice(&square(), &sys, &SamplingConfig::default(), 0).unwrap();
        assert!(cloud.hits() > 10);
        assert_eq!(cloud.free_dims, 1);
        for p in &cloud.points {
            assert_eq!(&p.z[0] + &p.z[1], q(-3));
            assert!(p.z.iter().all(Signed::is_negative));
        }
        let v = check_connected(&cloud, cloud.suggested_epsilon());
        assert_eq!((v.components, v.abstained), (1, false));
    }

    #[test]
    fn thin_slices_are_rescanned() {
        // z1 + z2 = -1/2 with both negative: a short segment that the window
        // grid (step 1/8) barely touches.
        let sys = ConstraintSystem::new(vec![ConeConstraint::new(2, Relation::Equal, Rational::new((-1).into(), 2.into()))]).unwrap();
        let cloud = sample_slice(&square(), &sys, &SamplingConfig::default(), 0).unwrap();
        assert!(cloud.zoomed);
        assert!(cloud.hits() >= DEFAULT_MIN_SUPPORT);
        for p in &cloud.points {
            assert_eq!(&p.z[0] + &p.z[1], Rational::new((-1).into(), 2.into()));
            assert!(p.z.iter().all(Signed::is_negative));
        }
        let v = check_connected(&cloud, cloud.suggested_epsilon());
        assert_eq!((v.components, v.abstained), (1, false));

        // Roomy slices keep the window grid.
        let wide = ConstraintSystem::new(vec![ConeConstraint::new(2, Relation::Equal, q(-3))]).unwrap();
        assert!(!sample_slice(&square(), &wide, &SamplingConfig::default(), 0).unwrap().zoomed);
    }

    #[test]
    fn empty_slice_cloud() {
        let sys = ConstraintSystem::new(vec![
            ConeConstraint::new(0, Relation::Equal, q(-1)),
            ConeConstraint::new(1, Relation::Equal, q(-2)),
            ConeConstraint::new(2, Relation::Equal, q(-4)),
        ])
        .unwrap();
        let cloud = sample_slice(&square(), &sys, &SamplingConfig::default(), 0).unwrap();
        assert!(cloud.is_empty());
        assert!(check_connected(&cloud, 0.1).abstained);
    }

    #[test]
    fn unconstrained_grid_is_full() {
        let spec = ToricCubeSpec::from_rows(1, &[[1], [2]]);
        let cloud = sample_slice(&spec, &ConstraintSystem::default(), &SamplingConfig::default(), 0).unwrap();
        assert_eq!(cloud.hits(), 63);
        let cloud = sample_slice(&square(), &ConstraintSystem::default(), &SamplingConfig::default(), 0).unwrap();
        assert_eq!(cloud.hits(), 63 * 63);
        let cube4 = ToricCubeSpec::from_rows(4, &[[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 1]]);
        let cloud = sample_slice(&cube4, &ConstraintSystem::default(), &SamplingConfig::default(), 0).unwrap();
        assert_eq!(cloud.hits(), 8usize.pow(4));
    }

    #[test]
    fn random_strategy_is_seeded() {
        let strat = Strategy::Random { count: 300 };
        let cfg = SamplingConfig::default();
        let a = sample_slice_with(&square(), &ConstraintSystem::default(), &cfg, strat, 5).unwrap();
        let b = sample_slice_with(&square(), &ConstraintSystem::default(), &cfg, strat, 5).unwrap();
        let c = sample_slice_with(&square(), &ConstraintSystem::default(), &cfg, strat, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.points, c.points);
        assert_eq!(a.hits(), 300);
    }

    #[test]
    fn two_far_points_are_two_components() {
        let cloud = SampleCloud::from_images(vec![vec![0.1, 0.1], vec![0.9, 0.9]]);
        let v = check_connected(&cloud, 0.05);
        assert_eq!((v.components, v.abstained), (2, false));
    }

    #[test]
    fn convexity_examples() {
        let fm = FourierMotzkin::default();
        assert_eq!(check_log_convexity(&square(), 200, 1, &fm).unwrap(), 0);
        let point = ToricCubeSpec::from_rows(0, &[[0i64; 0]; 2]);
        assert_eq!(check_log_convexity(&point, 10, 1, &fm).unwrap(), 0);
        let curve = ToricCubeSpec::from_rows(1, &[[1], [2]]);
        let m = membership(&curve, &"-2,-4".parse().unwrap(), MembershipMode::Open, &fm).unwrap();
        assert_eq!(m.witness.unwrap(), "-2".parse().unwrap());
    }

    #[test]
    fn constructed_members_pass() {
        let fm = FourierMotzkin::default();
        assert_eq!(check_constructed_members(&square(), 100, 2, &fm).unwrap(), 0);
        let zero = ToricCubeSpec::from_rows(2, &[[0, 0]]);
        assert_eq!(check_constructed_members(&zero, 10, 2, &fm).unwrap(), 0);
    }

    #[test]
    fn local_dimension_examples() {
        assert_eq!(estimate_local_dimension(&square(), &[-1.0, -1.0], 1e-5, 32, 0).unwrap(), 2);
        let zero = ToricCubeSpec::from_rows(2, &[[0, 0], [0, 0]]);
        assert_eq!(estimate_local_dimension(&zero, &[-1.0, -1.0], 1e-5, 32, 0).unwrap(), 0);
        let curve = ToricCubeSpec::from_rows(1, &[[1], [2]]);
        assert_eq!(estimate_local_dimension(&curve, &[-1.0], 1e-5, 32, 0).unwrap(), 1);
        assert!(estimate_local_dimension(&curve, &[-1e-6], 1e-5, 32, 0).is_err());
    }

    #[test]
    fn graph_property_examples() {
        assert_eq!(check_graph_property(&square(), &IndexSet::new([0, 1]), 100, 0).unwrap(), 0);
        let curve = ToricCubeSpec::from_rows(1, &[[1], [2]]);
        assert_eq!(check_graph_property(&curve, &IndexSet::new([0]), 100, 0).unwrap(), 0);
        assert!(matches!(
            check_graph_property(&square(), &IndexSet::new([2]), 100, 0),
            Err(Error::Precondition(_))
        ));
        // A nontrivial kernel that still lies in ker A.
        let dup = ToricCubeSpec::from_rows(3, &[[1, 1, 0], [2, 2, 0]]);
        assert_eq!(check_graph_property(&dup, &IndexSet::new([0]), 100, 0).unwrap(), 0);
    }

    #[test]
    fn closed_cube_samples_hit_every_face() {
        let pts = sample_closed_cube(&square(), 2, 0, 1000).unwrap();
        assert_eq!(pts.len(), 18);
        assert!(pts.iter().any(|p| p.entries().iter().all(LogValue::is_neg_infinity)));
        assert!(pts.contains(&"0,0,0".parse().unwrap()));
    }
}
