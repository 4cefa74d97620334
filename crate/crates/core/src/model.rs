//! Domain types for toric-cube specs and coordinate constraint
//! systems, plus parsing and canonical serialization of the external JSON
//! documents.
//!
//! Coordinate indices are stored 0-based internally and are 1-based in every
//! external document and report.

use std::fmt;
use std::str::FromStr;

use num::{BigInt, BigRational, BigUint, Signed, Zero};
use serde_json::{Map, Value};
use thiserror::Error;

/// Exact rational scalar used throughout the crate.
pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{location}: {message}")]
    Malformed { location: String, message: String },
    #[error("row {row}: expected {expected} entries, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, column {col}: negative entry {value}")]
    NegativeEntry { row: usize, col: usize, value: String },
    #[error("row {row}, column {col}: entry {value} is not an integer")]
    NonInteger { row: usize, col: usize, value: String },
    #[error("\"n\" is {declared} but {found} rows were given")]
    RowCountMismatch { declared: usize, found: usize },
    #[error("constraint {position}: coordinate {j} appears more than once")]
    DuplicateIndex { position: usize, j: usize },
    #[error("constraint {position}: coordinate {j} out of range 1..={n}")]
    IndexOutOfRange { position: usize, j: usize, n: usize },
    #[error("constraint {position}: relation {found:?} is not one of \"<\", \"=\", \">\"")]
    BadRelation { position: usize, found: String },
    #[error("constraint {position}: log_c = {value} is positive (c > 1 lies outside [0,1])")]
    PositiveLogConstant { position: usize, value: String },
    #[error("{location}: {text:?} is not a rational literal")]
    BadRational { location: String, text: String },
}

fn malformed(location: impl Into<String>, message: impl Into<String>) -> ParseError {
    ParseError::Malformed {
        location: location.into(),
        message: message.into(),
    }
}

fn parse_json(text: &str) -> Result<Value, ParseError> {
    serde_json::from_str(text).map_err(|e| ParseError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Parses a rational literal: optional sign, digits, optionally `/q` with `q > 0`.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let (negative, body) = match text.as_bytes().first()? {
        b'-' => (true, &text[1..]),
        b'+' => (false, &text[1..]),
        _ => (false, text),
    };
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    let (num, den) = match body.split_once('/') {
        Some((p, q)) if digits(p) && digits(q) => (p, q),
        None if digits(body) => (body, "1"),
        _ => return None,
    };
    let mut p = BigInt::from_str(num).ok()?;
    let q = BigInt::from_str(den).ok()?;
    if q.is_zero() {
        return None;
    }
    if negative {
        p = -p;
    }
    Some(Rational::new(p, q))
}

/// Reduced `p/q` (or `p`) form.
pub fn format_rational(q: &Rational) -> String {
    q.to_string()
}

/// The exponent set as an `n x d` matrix of nonnegative integers; row `i` is
/// the exponent vector of the `i`-th monomial.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExponentMatrix {
    d: usize,
    rows: Vec<Vec<BigUint>>,
}

impl ExponentMatrix {
    pub fn new(d: usize, rows: Vec<Vec<BigUint>>) -> Result<Self, ParseError> {
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(ParseError::RaggedRow {
                    row: i + 1,
                    expected: d,
                    found: row.len(),
                });
            }
        }
        Ok(Self { d, rows })
    }

    /// Convenience constructor from small integers; panics on a negative
    /// entry or ragged rows.
    pub fn from_rows<R: AsRef<[i64]>>(d: usize, rows: &[R]) -> Self {
        let rows = rows
            .iter()
            .map(|r| {
                r.as_ref()
                    .iter()
                    .map(|&v| BigUint::try_from(v).expect("exponents are nonnegative"))
                    .collect()
            })
            .collect();
        Self::new(d, rows).expect("rectangular exponent matrix")
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn rows(&self) -> &[Vec<BigUint>] {
        &self.rows
    }

    pub fn entry(&self, row: usize, col: usize) -> &BigUint {
        &self.rows[row][col]
    }

    pub fn row_is_zero(&self, row: usize) -> bool {
        self.rows[row].iter().all(Zero::is_zero)
    }

    pub fn rational_rows(&self) -> Vec<Vec<Rational>> {
        self.rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|v| Rational::from_integer(BigInt::from(v.clone())))
                    .collect()
            })
            .collect()
    }

    /// Keeps the rows listed in `rows` (0-based, in the given order).
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            d: self.d,
            rows: rows.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Canonical compact JSON: sorted keys, plain decimal integers.
    pub fn to_canonical_json(&self) -> String {
        let rows: Vec<String> = self
            .rows
            .iter()
            .map(|r| {
                let entries: Vec<String> = r.iter().map(|v| v.to_string()).collect();
                format!("[{}]", entries.join(","))
            })
            .collect();
        format!(
            "{{\"d\":{},\"n\":{},\"rows\":[{}]}}",
            self.d,
            self.n(),
            rows.join(",")
        )
    }
}

/// Parses a spec document `{"d": int, "n": int, "rows": [[int, ...], ...]}`.
pub fn parse_spec(text: &str) -> Result<ExponentMatrix, ParseError> {
    let value = parse_json(text)?;
    let obj = value
        .as_object()
        .ok_or_else(|| malformed("document", "expected a JSON object"))?;
    if let Some(key) = obj.keys().find(|k| !matches!(k.as_str(), "d" | "n" | "rows")) {
        return Err(malformed("document", format!("unexpected key {key:?}")));
    }
    let d = size_field(obj, "d")?;
    let n = size_field(obj, "n")?;
    let rows = obj
        .get("rows")
        .ok_or_else(|| malformed("document", "missing key \"rows\""))?
        .as_array()
        .ok_or_else(|| malformed("\"rows\"", "expected an array"))?;
    if rows.len() != n {
        return Err(ParseError::RowCountMismatch {
            declared: n,
            found: rows.len(),
        });
    }
    let mut parsed = Vec::with_capacity(n);
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| malformed(format!("row {}", i + 1), "expected an array"))?;
        if row.len() != d {
            return Err(ParseError::RaggedRow {
                row: i + 1,
                expected: d,
                found: row.len(),
            });
        }
        let mut entries = Vec::with_capacity(d);
        for (j, v) in row.iter().enumerate() {
            entries.push(parse_entry(v, i + 1, j + 1)?);
        }
        parsed.push(entries);
    }
    ExponentMatrix::new(d, parsed)
}

fn size_field(obj: &Map<String, Value>, key: &str) -> Result<usize, ParseError> {
    let v = obj
        .get(key)
        .ok_or_else(|| malformed("document", format!("missing key {key:?}")))?;
    v.as_number()
        .and_then(|n| usize::from_str(&n.to_string()).ok())
        .ok_or_else(|| malformed(format!("{key:?}"), "expected a nonnegative integer"))
}

fn parse_entry(v: &Value, row: usize, col: usize) -> Result<BigUint, ParseError> {
    let Some(num) = v.as_number() else {
        return Err(ParseError::NonInteger {
            row,
            col,
            value: v.to_string(),
        });
    };
    let text = num.to_string();
    let int = BigInt::from_str(&text).map_err(|_| ParseError::NonInteger {
        row,
        col,
        value: text.clone(),
    })?;
    int.to_biguint()
        .ok_or(ParseError::NegativeEntry { row, col, value: text })
}

/// A point of the parameter cube, either as floats `t in [0,1]^d` or in
/// exact open-cube log form `z < 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum ParameterPoint {
    Unit(Vec<f64>),
    Log(Vec<Rational>),
}

impl ParameterPoint {
    pub fn len(&self) -> usize {
        match self {
            ParameterPoint::Unit(t) => t.len(),
            ParameterPoint::Log(z) => z.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_valid(&self) -> bool {
        match self {
            ParameterPoint::Unit(t) => t.iter().all(|v| (0.0..=1.0).contains(v)),
            ParameterPoint::Log(z) => z.iter().all(Signed::is_negative),
        }
    }

    /// Floating parameter values `t_i`.
    pub fn to_unit(&self) -> Vec<f64> {
        match self {
            ParameterPoint::Unit(t) => t.clone(),
            ParameterPoint::Log(z) => z.iter().map(|v| rational_to_f64(v).exp()).collect(),
        }
    }
}

pub fn rational_to_f64(q: &Rational) -> f64 {
    use num::ToPrimitive;
    q.to_f64().unwrap_or(f64::NAN)
}

/// One entry of a log-coordinate vector; `NegInfinity` stands for a
/// coordinate equal to zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LogValue {
    NegInfinity,
    Finite(Rational),
}

impl LogValue {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            LogValue::Finite(q) => Some(q),
            LogValue::NegInfinity => None,
        }
    }

    pub fn is_neg_infinity(&self) -> bool {
        matches!(self, LogValue::NegInfinity)
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogValue::NegInfinity => f.write_str("-inf"),
            LogValue::Finite(q) => write!(f, "{q}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct LogVector(pub Vec<LogValue>);

impl LogVector {
    pub fn from_finite(values: impl IntoIterator<Item = Rational>) -> Self {
        Self(values.into_iter().map(LogValue::Finite).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[LogValue] {
        &self.0
    }

    /// All entries as rationals, or `None` if any entry is `-inf`.
    pub fn to_finite(&self) -> Option<Vec<Rational>> {
        self.0.iter().map(|v| v.finite().cloned()).collect()
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.0.iter().map(ToString::to_string).collect()
    }
}

impl fmt::Display for LogVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.to_strings().join(", "))
    }
}

impl FromStr for LogVector {
    type Err = ParseError;

    /// Comma-separated rationals; `-inf` marks a zero coordinate.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().is_empty() {
            return Ok(Self::default());
        }
        s.split(',')
            .enumerate()
            .map(|(i, part)| {
                let part = part.trim();
                if part.eq_ignore_ascii_case("-inf") {
                    return Ok(LogValue::NegInfinity);
                }
                parse_rational(part)
                    .map(LogValue::Finite)
                    .ok_or_else(|| ParseError::BadRational {
                        location: format!("entry {}", i + 1),
                        text: part.to_string(),
                    })
            })
            .collect::<Result<_, _>>()
            .map(Self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    Less,
    Equal,
    Greater,
}

impl Relation {
    pub const ALL: [Relation; 3] = [Relation::Less, Relation::Equal, Relation::Greater];

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Less => "<",
            Relation::Equal => "=",
            Relation::Greater => ">",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        match s {
            "<" => Some(Relation::Less),
            "=" => Some(Relation::Equal),
            ">" => Some(Relation::Greater),
            _ => None,
        }
    }
}

/// `log c` for a constraint constant `c in [0,1]`; `Bottom` encodes `c = 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LogConstant {
    Finite(Rational),
    Bottom,
}

/// The half-space or hyperplane `x_j rel c`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConeConstraint {
    /// 0-based coordinate index.
    pub coord: usize,
    pub relation: Relation,
    pub log_c: LogConstant,
}

impl ConeConstraint {
    pub fn new(coord: usize, relation: Relation, log_c: Rational) -> Self {
        Self {
            coord,
            relation,
            log_c: LogConstant::Finite(log_c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    AffineSubspace,
    CoordinateCone,
}

/// A conjunction of coordinate constraints with at most one constraint per
/// coordinate, sorted by coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct ConstraintSystem {
    constraints: Vec<ConeConstraint>,
}

impl ConstraintSystem {
    pub fn new(mut constraints: Vec<ConeConstraint>) -> Result<Self, ParseError> {
        for (i, c) in constraints.iter().enumerate() {
            if let LogConstant::Finite(q) = &c.log_c {
                if q.is_positive() {
                    return Err(ParseError::PositiveLogConstant {
                        position: i + 1,
                        value: q.to_string(),
                    });
                }
            }
        }
        constraints.sort_by_key(|c| c.coord);
        if let Some(w) = constraints.windows(2).find(|w| w[0].coord == w[1].coord) {
            let position = constraints.iter().rposition(|c| c.coord == w[1].coord).unwrap() + 1;
            return Err(ParseError::DuplicateIndex {
                position,
                j: w[1].coord + 1,
            });
        }
        Ok(Self { constraints })
    }

    pub fn constraints(&self) -> &[ConeConstraint] {
        &self.constraints
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn kind(&self) -> SystemKind {
        if self
            .constraints
            .iter()
            .all(|c| c.relation == Relation::Equal)
        {
            SystemKind::AffineSubspace
        } else {
            SystemKind::CoordinateCone
        }
    }

    /// Returns a copy with one more constraint, or `None` if the coordinate
    /// is already constrained.
    pub fn with(&self, extra: ConeConstraint) -> Option<Self> {
        let mut cs = self.constraints.clone();
        cs.push(extra);
        Self::new(cs).ok()
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.constraints
                .iter()
                .map(|c| {
                    let log_c = match &c.log_c {
                        LogConstant::Finite(q) => Value::String(q.to_string()),
                        LogConstant::Bottom => Value::Null,
                    };
                    serde_json::json!({
                        "j": c.coord + 1,
                        "rel": c.relation.symbol(),
                        "log_c": log_c,
                    })
                })
                .collect(),
        )
    }
}

/// Parses a constraint document for a spec with `n` image coordinates.
pub fn parse_constraints(text: &str, n: usize) -> Result<ConstraintSystem, ParseError> {
    let value = parse_json(text)?;
    let items = value
        .as_array()
        .ok_or_else(|| malformed("document", "expected a JSON array"))?;
    let mut constraints = Vec::with_capacity(items.len());
    let mut seen = vec![false; n];
    for (i, item) in items.iter().enumerate() {
        let position = i + 1;
        let loc = format!("constraint {position}");
        let obj = item
            .as_object()
            .ok_or_else(|| malformed(&loc, "expected an object"))?;
        if let Some(key) = obj
            .keys()
            .find(|k| !matches!(k.as_str(), "j" | "rel" | "log_c"))
        {
            return Err(malformed(&loc, format!("unexpected key {key:?}")));
        }
        let j = obj
            .get("j")
            .and_then(Value::as_number)
            .and_then(|v| usize::from_str(&v.to_string()).ok())
            .ok_or_else(|| malformed(&loc, "\"j\" must be a positive integer"))?;
        if j == 0 || j > n {
            return Err(ParseError::IndexOutOfRange { position, j, n });
        }
        if std::mem::replace(&mut seen[j - 1], true) {
            return Err(ParseError::DuplicateIndex { position, j });
        }
        let rel_text = obj
            .get("rel")
            .and_then(Value::as_str)
            .ok_or_else(|| malformed(&loc, "\"rel\" must be a string"))?;
        let relation = Relation::from_symbol(rel_text).ok_or_else(|| ParseError::BadRelation {
            position,
            found: rel_text.to_string(),
        })?;
        let log_c = match obj.get("log_c") {
            Some(Value::Null) => LogConstant::Bottom,
            Some(Value::String(s)) => {
                let q = parse_rational(s).ok_or_else(|| ParseError::BadRational {
                    location: loc.clone(),
                    text: s.clone(),
                })?;
                if q.is_positive() {
                    return Err(ParseError::PositiveLogConstant {
                        position,
                        value: q.to_string(),
                    });
                }
                LogConstant::Finite(q)
            }
            _ => {
                return Err(malformed(
                    &loc,
                    "\"log_c\" must be a rational string or null",
                ))
            }
        };
        constraints.push(ConeConstraint {
            coord: j - 1,
            relation,
            log_c,
        });
    }
    ConstraintSystem::new(constraints)
}

/// A sorted, duplicate-free set of 0-based coordinate indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    pub fn new(members: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = members.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    pub fn full(n: usize) -> Self {
        Self((0..n).collect())
    }

    /// Builds from 1-based indices, checking each against `1..=n`.
    pub fn from_one_based(indices: &[usize], n: usize) -> Result<Self, crate::Error> {
        if let Some(&bad) = indices.iter().find(|&&j| j == 0 || j > n) {
            return Err(crate::Error::IndexOutOfRange { index: bad, n });
        }
        Ok(Self::new(indices.iter().map(|j| j - 1)))
    }

    /// All subsets of `{0..n}`, ordered lexicographically by member list.
    pub fn all_subsets(n: usize) -> Vec<IndexSet> {
        let mut subsets: Vec<IndexSet> = (0u64..(1u64 << n))
            .map(|mask| IndexSet((0..n).filter(|i| mask >> i & 1 == 1).collect()))
            .collect();
        subsets.sort();
        subsets
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn is_disjoint(&self, other: &IndexSet) -> bool {
        self.0.iter().all(|i| !other.contains(*i))
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.0.iter().map(|i| i + 1).collect()
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.to_one_based().iter().map(ToString::to_string).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}
