//! Exact feasibility of mixed linear systems (equalities, strict and
//! non-strict inequalities) and predicates on finitely generated cones.
//!
//! Equalities are eliminated first by parametrizing their affine solution
//! set; the remaining inequalities go through Fourier–Motzkin elimination,
//! where a derived inequality is strict when either parent is strict. A
//! witness is recovered by back-substitution, taking the midpoint of each
//! variable's interval (or a bound moved by one when the interval is a ray).

use std::collections::BTreeMap;

use num::{One, Signed, Zero};
use thiserror::Error;

use crate::linalg::{dot, RationalMatrix};
use crate::model::Rational;

pub const DEFAULT_FM_GUARD: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("Fourier-Motzkin growth guard exceeded: {reached} constraints (cap {cap})")]
pub struct GrowthGuardExceeded {
    pub cap: usize,
    pub reached: usize,
}

/// `coeffs . z < rhs` when `strict`, otherwise `coeffs . z <= rhs`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Inequality {
    pub coeffs: Vec<Rational>,
    pub rhs: Rational,
    pub strict: bool,
}

impl Inequality {
    pub fn holds_at(&self, z: &[Rational]) -> bool {
        let lhs = dot(&self.coeffs, z);
        if self.strict {
            lhs < self.rhs
        } else {
            lhs <= self.rhs
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LinearSystem {
    dim: usize,
    equalities: Vec<(Vec<Rational>, Rational)>,
    inequalities: Vec<Inequality>,
}

impl LinearSystem {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            equalities: Vec::new(),
            inequalities: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn equalities(&self) -> &[(Vec<Rational>, Rational)] {
        &self.equalities
    }

    pub fn inequalities(&self) -> &[Inequality] {
        &self.inequalities
    }

    pub fn add_equality(&mut self, coeffs: Vec<Rational>, rhs: Rational) -> &mut Self {
        assert_eq!(coeffs.len(), self.dim, "equality row length");
        self.equalities.push((coeffs, rhs));
        self
    }

    pub fn add_inequality(&mut self, coeffs: Vec<Rational>, rhs: Rational, strict: bool) -> &mut Self {
        assert_eq!(coeffs.len(), self.dim, "inequality row length");
        self.inequalities.push(Inequality { coeffs, rhs, strict });
        self
    }

    /// `coeffs . z < rhs`
    pub fn add_lt(&mut self, coeffs: Vec<Rational>, rhs: Rational) -> &mut Self {
        self.add_inequality(coeffs, rhs, true)
    }

    /// `coeffs . z > rhs`
    pub fn add_gt(&mut self, coeffs: Vec<Rational>, rhs: Rational) -> &mut Self {
        let neg = coeffs.into_iter().map(|c| -c).collect();
        self.add_inequality(neg, -rhs, true)
    }

    pub fn add_le(&mut self, coeffs: Vec<Rational>, rhs: Rational) -> &mut Self {
        self.add_inequality(coeffs, rhs, false)
    }

    pub fn add_ge(&mut self, coeffs: Vec<Rational>, rhs: Rational) -> &mut Self {
        let neg = coeffs.into_iter().map(|c| -c).collect();
        self.add_inequality(neg, -rhs, false)
    }

    /// Adds `z_i < 0` for every variable.
    pub fn add_negative_orthant(&mut self) -> &mut Self {
        for i in 0..self.dim {
            self.add_lt(unit(self.dim, i), Rational::zero());
        }
        self
    }

    /// Direct evaluation of every constraint at `z`.
    pub fn is_satisfied_by(&self, z: &[Rational]) -> bool {
        z.len() == self.dim
            && self.equalities.iter().all(|(row, rhs)| &dot(row, z) == rhs)
            && self.inequalities.iter().all(|ineq| ineq.holds_at(z))
    }
}

pub(crate) fn unit(dim: usize, i: usize) -> Vec<Rational> {
    let mut v = vec![Rational::zero(); dim];
    v[i] = Rational::from_integer(1.into());
    v
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feasibility {
    /// A point satisfying every constraint, strict ones strictly.
    Feasible(Vec<Rational>),
    Infeasible,
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }

    pub fn witness(&self) -> Option<&[Rational]> {
        match self {
            Feasibility::Feasible(w) => Some(w),
            Feasibility::Infeasible => None,
        }
    }

    pub fn into_witness(self) -> Option<Vec<Rational>> {
        match self {
            Feasibility::Feasible(w) => Some(w),
            Feasibility::Infeasible => None,
        }
    }
}

/// The elimination engine. `guard` caps the number of live constraints at
/// any elimination stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FourierMotzkin {
    pub guard: usize,
}

impl Default for FourierMotzkin {
    fn default() -> Self {
        Self {
            guard: DEFAULT_FM_GUARD,
        }
    }
}

type Row = Inequality;

enum Reduced {
    Trivial,
    Contradiction,
    Row(Row),
}

/// Scales so the first nonzero coefficient has absolute value one.
fn normalize(row: Row) -> Reduced {
    match row.coeffs.iter().find(|c| !c.is_zero()) {
        None => {
            let ok = if row.strict {
                row.rhs.is_positive()
            } else {
                !row.rhs.is_negative()
            };
            if ok {
                Reduced::Trivial
            } else {
                Reduced::Contradiction
            }
        }
        Some(lead) => {
            let scale = lead.abs();
            Reduced::Row(Row {
                coeffs: row.coeffs.iter().map(|c| c / &scale).collect(),
                rhs: row.rhs / scale,
                strict: row.strict,
            })
        }
    }
}

/// Keeps, for every coefficient vector, only the tightest right-hand side.
#[derive(Default)]
struct RowSet {
    rows: BTreeMap<Vec<Rational>, (Rational, bool)>,
}

impl RowSet {
    /// Returns false on a contradictory constant row.
    fn insert(&mut self, row: Row) -> bool {
        match normalize(row) {
            Reduced::Trivial => true,
            Reduced::Contradiction => false,
            Reduced::Row(r) => {
                match self.rows.get_mut(&r.coeffs) {
                    Some(slot) => {
                        let tighter = r.rhs < slot.0 || (r.rhs == slot.0 && r.strict && !slot.1);
                        if tighter {
                            *slot = (r.rhs, r.strict);
                        }
                    }
                    None => {
                        self.rows.insert(r.coeffs, (r.rhs, r.strict));
                    }
                }
                true
            }
        }
    }

    fn into_rows(self) -> Vec<Row> {
        self.rows
            .into_iter()
            .map(|(coeffs, (rhs, strict))| Row { coeffs, rhs, strict })
            .collect()
    }
}

struct Bound {
    value: Rational,
    strict: bool,
}

impl FourierMotzkin {
    pub fn new(guard: usize) -> Self {
        Self { guard }
    }

    pub fn feasible(&self, sys: &LinearSystem) -> Result<Feasibility, GrowthGuardExceeded> {
        let dim = sys.dim;
        let (particular, directions) = if sys.equalities.is_empty() {
            (vec![Rational::zero(); dim], (0..dim).map(|i| unit(dim, i)).collect())
        } else {
            let m = RationalMatrix::from_rows(
                dim,
                sys.equalities.iter().map(|(r, _)| r.clone()).collect(),
            );
            let rhs: Vec<Rational> = sys.equalities.iter().map(|(_, b)| b.clone()).collect();
            let sol = m.solve(&rhs);
            match sol.particular {
                None => return Ok(Feasibility::Infeasible),
                Some(p) => (p, sol.kernel_basis),
            }
        };

        // Restrict the inequalities to the affine set particular + span(directions).
        let reduced: Vec<Row> = sys
            .inequalities
            .iter()
            .map(|ineq| Row {
                coeffs: directions.iter().map(|k| dot(&ineq.coeffs, k)).collect(),
                rhs: &ineq.rhs - dot(&ineq.coeffs, &particular),
                strict: ineq.strict,
            })
            .collect();

        let Some(y) = self.eliminate(reduced, directions.len())? else {
            return Ok(Feasibility::Infeasible);
        };
        let mut z = particular;
        for (coef, k) in y.iter().zip(&directions) {
            for (zi, ki) in z.iter_mut().zip(k) {
                *zi += coef * ki;
            }
        }
        debug_assert!(sys.is_satisfied_by(&z), "witness must satisfy the system");
        Ok(Feasibility::Feasible(z))
    }

    /// Closed range `(lo, hi)` of coordinate `var` over the feasible set of
    /// `sys`, `None` marking an unbounded side. Returns `Ok(None)` when the
    /// system is infeasible.
    #[allow(clippy::type_complexity)]
    pub fn coordinate_range(
        &self,
        sys: &LinearSystem,
        var: usize,
    ) -> Result<Option<(Option<Rational>, Option<Rational>)>, GrowthGuardExceeded> {
        assert!(var < sys.dim, "coordinate out of range");
        if !self.feasible(sys)?.is_feasible() {
            return Ok(None);
        }
        // Variable 0 is t = z_var; the rest are the original coordinates.
        let vars = sys.dim + 1;
        let widen = |coeffs: &[Rational], lead: Rational| {
            std::iter::once(lead).chain(coeffs.iter().cloned()).collect::<Vec<_>>()
        };
        let mut rows: Vec<Row> = Vec::new();
        let mut push_eq = |coeffs: Vec<Rational>, rhs: Rational| {
            rows.push(Row {
                coeffs: coeffs.iter().map(|c| -c).collect(),
                rhs: -rhs.clone(),
                strict: false,
            });
            rows.push(Row { coeffs, rhs, strict: false });
        };
        let mut pick = unit(vars, var + 1);
        pick[0] = -Rational::one();
        push_eq(pick, Rational::zero());
        for (coeffs, rhs) in &sys.equalities {
            push_eq(widen(coeffs, Rational::zero()), rhs.clone());
        }
        for ineq in &sys.inequalities {
            rows.push(Row {
                coeffs: widen(&ineq.coeffs, Rational::zero()),
                rhs: ineq.rhs.clone(),
                strict: false,
            });
        }
        let Some(levels) = self.levels(rows, vars)? else {
            return Ok(None);
        };
        let (mut lo, mut hi): (Option<Rational>, Option<Rational>) = (None, None);
        for r in &levels[vars - 1] {
            let c = &r.coeffs[0];
            if c.is_zero() {
                continue;
            }
            let value = &r.rhs / c;
            if c.is_positive() {
                if hi.as_ref().is_none_or(|h| value < *h) {
                    hi = Some(value);
                }
            } else if lo.as_ref().is_none_or(|l| value > *l) {
                lo = Some(value);
            }
        }
        Ok(Some((lo, hi)))
    }

    /// Elimination levels: `levels[k]` involves only variables `0..vars-k`.
    /// `None` when a contradiction shows up on the way.
    fn levels(&self, rows: Vec<Row>, vars: usize) -> Result<Option<Vec<Vec<Row>>>, GrowthGuardExceeded> {
        let mut set = RowSet::default();
        for r in rows {
            if !set.insert(r) {
                return Ok(None);
            }
        }
        let mut levels = vec![set.into_rows()];
        self.check_guard(levels[0].len())?;

        for v in (0..vars).rev() {
            let current = levels.last().unwrap();
            let (mut upper, mut lower, mut rest) = (Vec::new(), Vec::new(), Vec::new());
            for r in current {
                if r.coeffs[v].is_positive() {
                    upper.push(r);
                } else if r.coeffs[v].is_negative() {
                    lower.push(r);
                } else {
                    rest.push(r);
                }
            }
            self.check_guard(rest.len() + upper.len() * lower.len())?;
            let mut next = RowSet::default();
            for r in rest {
                next.insert(r.clone());
            }
            for u in &upper {
                for l in &lower {
                    // u: c z_v + ... with c > 0; l: c' z_v + ... with c' < 0.
                    let cu = &u.coeffs[v];
                    let cl = -&l.coeffs[v];
                    let coeffs = u
                        .coeffs
                        .iter()
                        .zip(&l.coeffs)
                        .map(|(a, b)| a * &cl + b * cu)
                        .collect();
                    let combined = Row {
                        coeffs,
                        rhs: &u.rhs * &cl + &l.rhs * cu,
                        strict: u.strict || l.strict,
                    };
                    if !next.insert(combined) {
                        return Ok(None);
                    }
                }
            }
            levels.push(next.into_rows());
        }
        // levels[vars] holds only constant rows, all already checked.
        Ok(Some(levels))
    }

    /// Pure inequality feasibility over `vars` variables. Variables are
    /// eliminated from the last to the first.
    fn eliminate(&self, rows: Vec<Row>, vars: usize) -> Result<Option<Vec<Rational>>, GrowthGuardExceeded> {
        let Some(levels) = self.levels(rows, vars)? else {
            return Ok(None);
        };
        let mut y = vec![Rational::zero(); vars];
        for v in 0..vars {
            let rows = &levels[vars - 1 - v];
            let mut lo: Option<Bound> = None;
            let mut hi: Option<Bound> = None;
            for r in rows {
                let c = &r.coeffs[v];
                if c.is_zero() {
                    continue;
                }
                let partial = r.coeffs[..v]
                    .iter()
                    .zip(&y)
                    .fold(Rational::zero(), |acc, (a, b)| acc + a * b);
                let value = (&r.rhs - partial) / c;
                if c.is_positive() {
                    let tighter = match &hi {
                        None => true,
                        Some(b) => value < b.value || (value == b.value && r.strict),
                    };
                    if tighter {
                        hi = Some(Bound { value, strict: r.strict });
                    }
                } else {
                    let tighter = match &lo {
                        None => true,
                        Some(b) => value > b.value || (value == b.value && r.strict),
                    };
                    if tighter {
                        lo = Some(Bound { value, strict: r.strict });
                    }
                }
            }
            let one = Rational::from_integer(1.into());
            y[v] = match (lo, hi) {
                (Some(l), Some(h)) => {
                    debug_assert!(l.value < h.value || !(l.strict || h.strict));
                    (l.value + h.value) / Rational::from_integer(2.into())
                }
                (Some(l), None) => l.value + one,
                (None, Some(h)) => h.value - one,
                (None, None) => Rational::zero(),
            };
        }
        Ok(Some(y))
    }

    fn check_guard(&self, count: usize) -> Result<(), GrowthGuardExceeded> {
        if count > self.guard {
            Err(GrowthGuardExceeded {
                cap: self.guard,
                reached: count,
            })
        } else {
            Ok(())
        }
    }

    /// Strictly positive coefficients `lambda` with `sum lambda_i g_i = p`.
    pub fn relint_coefficients(
        &self,
        p: &[Rational],
        gens: &ConeGenerators,
    ) -> Result<Option<Vec<Rational>>, GrowthGuardExceeded> {
        self.combination(p, gens, true)
    }

    /// Nonnegative coefficients `lambda` with `sum lambda_i g_i = p`.
    pub fn cone_coefficients(
        &self,
        p: &[Rational],
        gens: &ConeGenerators,
    ) -> Result<Option<Vec<Rational>>, GrowthGuardExceeded> {
        self.combination(p, gens, false)
    }

    fn combination(
        &self,
        p: &[Rational],
        gens: &ConeGenerators,
        strict: bool,
    ) -> Result<Option<Vec<Rational>>, GrowthGuardExceeded> {
        assert_eq!(p.len(), gens.dim, "point and cone dimensions differ");
        let m = gens.len();
        let mut sys = LinearSystem::new(m);
        for (i, target) in p.iter().enumerate() {
            let row = gens.vectors.iter().map(|g| g[i].clone()).collect();
            sys.add_equality(row, target.clone());
        }
        for k in 0..m {
            let neg = unit(m, k).into_iter().map(|c| -c).collect();
            sys.add_inequality(neg, Rational::zero(), strict);
        }
        Ok(self.feasible(&sys)?.into_witness())
    }

    pub fn relint_member(&self, p: &[Rational], gens: &ConeGenerators) -> Result<bool, GrowthGuardExceeded> {
        Ok(self.relint_coefficients(p, gens)?.is_some())
    }

    pub fn cone_member(&self, p: &[Rational], gens: &ConeGenerators) -> Result<bool, GrowthGuardExceeded> {
        Ok(self.cone_coefficients(p, gens)?.is_some())
    }

    /// `cone(a) ⊆ cone(b)`, generator by generator.
    pub fn cone_contains(&self, b: &ConeGenerators, a: &ConeGenerators) -> Result<bool, GrowthGuardExceeded> {
        for g in &a.vectors {
            if !self.cone_member(g, b)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn cone_equal(&self, a: &ConeGenerators, b: &ConeGenerators) -> Result<bool, GrowthGuardExceeded> {
        assert_eq!(a.dim, b.dim, "ambient dimensions differ");
        Ok(self.cone_contains(b, a)? && self.cone_contains(a, b)?)
    }

    /// Whether the relative interiors meet: `exists lambda, mu > 0` with
    /// `A lambda = B mu`.
    pub fn relints_meet(&self, a: &ConeGenerators, b: &ConeGenerators) -> Result<bool, GrowthGuardExceeded> {
        assert_eq!(a.dim, b.dim, "ambient dimensions differ");
        let (ma, mb) = (a.len(), b.len());
        let mut sys = LinearSystem::new(ma + mb);
        for i in 0..a.dim {
            let row = a
                .vectors
                .iter()
                .map(|g| g[i].clone())
                .chain(b.vectors.iter().map(|g| -&g[i]))
                .collect();
            sys.add_equality(row, Rational::zero());
        }
        for k in 0..ma + mb {
            sys.add_gt(unit(ma + mb, k), Rational::zero());
        }
        Ok(self.feasible(&sys)?.is_feasible())
    }

    pub fn relint_relation(
        &self,
        a: &ConeGenerators,
        b: &ConeGenerators,
    ) -> Result<RelintRelation, GrowthGuardExceeded> {
        if self.cone_equal(a, b)? {
            return Ok(RelintRelation::Equal);
        }
        if !self.relints_meet(a, b)? {
            return Ok(RelintRelation::Disjoint);
        }
        let a_in_b = self.cone_contains(b, a)? && self.relint_member(&a.canonical_point(), b)?;
        if a_in_b {
            return Ok(RelintRelation::FirstInsideSecond);
        }
        let b_in_a = self.cone_contains(a, b)? && self.relint_member(&b.canonical_point(), a)?;
        if b_in_a {
            return Ok(RelintRelation::SecondInsideFirst);
        }
        Ok(RelintRelation::PartialOverlap)
    }
}

/// Relation between the relative interiors of two cones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelintRelation {
    Equal,
    Disjoint,
    FirstInsideSecond,
    SecondInsideFirst,
    PartialOverlap,
}

impl RelintRelation {
    pub fn swapped(self) -> Self {
        match self {
            RelintRelation::FirstInsideSecond => RelintRelation::SecondInsideFirst,
            RelintRelation::SecondInsideFirst => RelintRelation::FirstInsideSecond,
            other => other,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RelintRelation::Equal => "equal",
            RelintRelation::Disjoint => "disjoint",
            RelintRelation::FirstInsideSecond => "first_inside_second",
            RelintRelation::SecondInsideFirst => "second_inside_first",
            RelintRelation::PartialOverlap => "partial_overlap",
        }
    }
}

/// Generators of the cone `{sum lambda_i g_i : lambda_i >= 0}`; its relative
/// interior is the set of strictly positive combinations.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConeGenerators {
    dim: usize,
    vectors: Vec<Vec<Rational>>,
}

impl ConeGenerators {
    pub fn new(dim: usize, vectors: Vec<Vec<Rational>>) -> Self {
        assert!(vectors.iter().all(|v| v.len() == dim), "generator dimension");
        Self { dim, vectors }
    }

    pub fn from_integers<R: AsRef<[i64]>>(dim: usize, vectors: &[R]) -> Self {
        Self::new(
            dim,
            vectors
                .iter()
                .map(|v| v.as_ref().iter().map(|&x| Rational::from_integer(x.into())).collect())
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<Rational>] {
        &self.vectors
    }

    /// Sum of all generators; always in the relative interior.
    pub fn canonical_point(&self) -> Vec<Rational> {
        let mut sum = vec![Rational::zero(); self.dim];
        for g in &self.vectors {
            for (s, x) in sum.iter_mut().zip(g) {
                *s += x;
            }
        }
        sum
    }

    /// Linear dimension of the cone.
    pub fn rank(&self) -> usize {
        RationalMatrix::from_rows(self.dim, self.vectors.clone()).rank()
    }
}

pub fn feasible(sys: &LinearSystem) -> Result<Feasibility, GrowthGuardExceeded> {
    FourierMotzkin::default().feasible(sys)
}

pub fn relint_member(p: &[Rational], gens: &ConeGenerators) -> Result<bool, GrowthGuardExceeded> {
    FourierMotzkin::default().relint_member(p, gens)
}

pub fn cone_member(p: &[Rational], gens: &ConeGenerators) -> Result<bool, GrowthGuardExceeded> {
    FourierMotzkin::default().cone_member(p, gens)
}

pub fn cone_equal(a: &ConeGenerators, b: &ConeGenerators) -> Result<bool, GrowthGuardExceeded> {
    FourierMotzkin::default().cone_equal(a, b)
}

pub fn relint_relation(a: &ConeGenerators, b: &ConeGenerators) -> Result<RelintRelation, GrowthGuardExceeded> {
    FourierMotzkin::default().relint_relation(a, b)
}
