//! Canonical JSON reports and their plain-text rendering.
//!
//! Keys are sorted (serde_json's default map is ordered), rationals are
//! reduced `p/q` strings and coordinate indices are 1-based. Nothing
//! depending on the clock or the thread count is emitted unless asked for.

use serde_json::{json, Map, Value};

use crate::analysis::{Membership, MembershipMode, MonotoneReport, QuasiAffineReport, SliceReport};
use crate::cone::RelintRelation;
use crate::model::{format_rational, ConstraintSystem, ExponentMatrix, IndexSet, LogVector, Rational, SystemKind};
use crate::oracle::ConnectivityVerdict;
use crate::strata::{stratum_name, CWReport, Partition, StrataPoset, Stratification, StratumDescriptor};

pub const SCHEMA_VERSION: &str = "1.0.0";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verdict {
    Pass,
    Abstain,
    Skipped,
    Fail,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Abstain => "abstain",
            Verdict::Skipped => "skipped",
            Verdict::Fail => "fail",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [Verdict::Pass, Verdict::Abstain, Verdict::Skipped, Verdict::Fail]
            .into_iter()
            .find(|v| v.name() == name)
    }

    fn pass_if(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: &'static str,
    pub verdict: Verdict,
    pub evidence: Map<String, Value>,
}

impl Section {
    pub fn new(name: &'static str, verdict: Verdict, evidence: Value) -> Self {
        let evidence = match evidence {
            Value::Object(m) => m,
            Value::Null => Map::new(),
            other => {
                let mut m = Map::new();
                m.insert("value".into(), other);
                m
            }
        };
        Self {
            name,
            verdict,
            evidence,
        }
    }

    pub fn to_json(&self) -> Value {
        let mut m = self.evidence.clone();
        m.insert("verdict".into(), Value::String(self.verdict.name().into()));
        Value::Object(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub command: String,
    pub spec: Option<ExponentMatrix>,
    pub parameters: Map<String, Value>,
    pub sections: Vec<Section>,
    pub wall_time_ms: Option<u128>,
}

impl AnalysisReport {
    pub fn new(command: impl Into<String>, spec: Option<ExponentMatrix>, parameters: Map<String, Value>) -> Self {
        Self {
            command: command.into(),
            spec,
            parameters,
            sections: Vec::new(),
            wall_time_ms: None,
        }
    }

    pub fn push(&mut self, section: Section) {
        self.sections.push(section);
    }

    /// `fail` if any section fails, otherwise `pass` if any passes, otherwise
    /// `abstain` if any abstains, otherwise `skipped`.
    pub fn overall(&self) -> Verdict {
        let has = |v| self.sections.iter().any(|s| s.verdict == v);
        if has(Verdict::Fail) {
            Verdict::Fail
        } else if has(Verdict::Pass) {
            Verdict::Pass
        } else if has(Verdict::Abstain) {
            Verdict::Abstain
        } else {
            Verdict::Skipped
        }
    }

    pub fn to_json(&self) -> Value {
        let sections: Map<String, Value> = self
            .sections
            .iter()
            .map(|s| (s.name.to_string(), s.to_json()))
            .collect();
        let mut m = Map::new();
        m.insert("command".into(), Value::String(self.command.clone()));
        m.insert("overall".into(), Value::String(self.overall().name().into()));
        m.insert("parameters".into(), Value::Object(self.parameters.clone()));
        m.insert("schema_version".into(), Value::String(SCHEMA_VERSION.into()));
        m.insert("sections".into(), Value::Object(sections));
        m.insert("spec".into(), self.spec.as_ref().map_or(Value::Null, spec_json));
        m.insert("tool_version".into(), Value::String(TOOL_VERSION.into()));
        if let Some(ms) = self.wall_time_ms {
            m.insert("wall_time_ms".into(), json!(ms as u64));
        }
        Value::Object(m)
    }

    /// Pretty-printed canonical JSON with a trailing newline.
    pub fn to_canonical_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("reports serialize");
        s.push('\n');
        s
    }
}

pub fn spec_json(m: &ExponentMatrix) -> Value {
    serde_json::from_str(&m.to_canonical_json()).expect("canonical spec is valid JSON")
}

pub fn rationals(v: &[Rational]) -> Value {
    Value::Array(v.iter().map(|q| Value::String(format_rational(q))).collect())
}

pub fn log_vector(v: &LogVector) -> Value {
    Value::Array(v.to_strings().into_iter().map(Value::String).collect())
}

pub fn index_set(s: &IndexSet) -> Value {
    json!(s.to_one_based())
}

pub fn dimension_section(dimension: usize, d: usize, n: usize) -> Section {
    Section::new(
        "dimension",
        Verdict::Pass,
        json!({ "dimension": dimension, "d": d, "n": n, "method": "rank" }),
    )
}

pub fn projection_section(subset: &IndexSet, projected: &ExponentMatrix, injective: bool, image_dim: usize, dimension: usize) -> Section {
    Section::new(
        "projection",
        Verdict::Pass,
        json!({
            "indices": index_set(subset),
            "projection": spec_json(projected),
            "injective": injective,
            "image_dim": image_dim,
            "dimension": dimension,
        }),
    )
}

pub fn membership_section(zeta: &LogVector, mode: MembershipMode, m: &Membership) -> Section {
    let note = if m.member {
        Value::Null
    } else if m.inconsistency.is_some() {
        Value::String("A z = zeta has no solution; the inconsistency vector y satisfies y^T A = 0 and y . zeta != 0".into())
    } else if zeta.entries().iter().any(|v| v.finite().is_some_and(|q| q > &Rational::from_integer(0.into()))) {
        Value::String("a coordinate of zeta is positive, i.e. x_j > 1".into())
    } else {
        Value::String(match mode {
            MembershipMode::Open => "the system {A z = zeta, z < 0} is infeasible".into(),
            MembershipMode::Closure => "no parameter in [-inf, 0]^d maps to zeta".into(),
        })
    };
    Section::new(
        "membership",
        Verdict::pass_if(m.member),
        json!({
            "mode": match mode { MembershipMode::Open => "open", MembershipMode::Closure => "closure" },
            "zeta": log_vector(zeta),
            "member": m.member,
            "witness": m.witness.as_ref().map_or(Value::Null, log_vector),
            "inconsistency": m.inconsistency.as_deref().map_or(Value::Null, rationals),
            "note": note,
        }),
    )
}

pub fn quasi_affine_section(r: &QuasiAffineReport) -> Section {
    let records: Vec<Value> = r
        .records
        .iter()
        .map(|rec| {
            json!({
                "subset": index_set(&rec.subset),
                "injective": rec.injective,
                "image_dim": rec.image_dim,
                "holds": rec.biconditional_holds,
            })
        })
        .collect();
    let failures: Vec<Value> = r.failures().map(|rec| index_set(&rec.subset)).collect();
    Section::new(
        "quasi_affine",
        Verdict::pass_if(r.overall),
        json!({
            "dimension": r.dimension,
            "subsets": r.records.len(),
            "records": records,
            "failures": failures,
        }),
    )
}

fn connectivity(v: &ConnectivityVerdict) -> Value {
    json!({
        "components": v.components,
        "epsilon": v.epsilon,
        "hits": v.hits,
        "abstained": v.abstained,
    })
}

fn system_kind(sys: &ConstraintSystem) -> &'static str {
    match sys.kind() {
        SystemKind::AffineSubspace => "affine_subspace",
        SystemKind::CoordinateCone => "coordinate_cone",
    }
}

pub fn slice_section(
    sys: &ConstraintSystem,
    report: &SliceReport,
    oracle: &ConnectivityVerdict,
    passed: bool,
    note: Option<&str>,
) -> Section {
    Section::new(
        "slice",
        Verdict::pass_if(passed),
        json!({
            "constraints": sys.to_json(),
            "kind": system_kind(sys),
            "nonempty": report.nonempty,
            "witness": report.witness.as_ref().map_or(Value::Null, log_vector),
            "parameter": report.parameter.as_deref().map_or(Value::Null, rationals),
            "dim": report.dim,
            "connected": report.connected.map(|_| "log_convexity"),
            "oracle": connectivity(oracle),
            "note": note,
        }),
    )
}

/// Failing instances listed in full, at most this many.
const MAX_COUNTEREXAMPLES: usize = 5;

pub fn slices_section(r: &MonotoneReport) -> Section {
    let verdict = if r.failures > 0 {
        Verdict::Fail
    } else if !r.complete {
        Verdict::Abstain
    } else {
        Verdict::Pass
    };
    let nonempty = r
        .slices
        .iter()
        .filter(|s| s.report.as_ref().is_some_and(|x| x.nonempty))
        .count();
    let counterexamples: Vec<Value> = r
        .slices
        .iter()
        .filter(|s| !s.passed || s.report.is_none())
        .take(MAX_COUNTEREXAMPLES)
        .map(|s| {
            json!({
                "subset": index_set(&s.subset),
                "draw": s.draw,
                "constraints": s.system.to_json(),
                "nonempty": s.report.as_ref().map(|x| x.nonempty),
                "witness": s.report.as_ref().and_then(|x| x.witness.as_ref()).map_or(Value::Null, log_vector),
                "oracle": s.oracle.as_ref().map_or(Value::Null, connectivity),
                "note": s.note,
            })
        })
        .collect();
    Section::new(
        "slices",
        verdict,
        json!({
            "instances": r.slices.len(),
            "nonempty": nonempty,
            "empty": r.slices.iter().filter(|s| s.report.as_ref().is_some_and(|x| !x.nonempty)).count(),
            "failures": r.failures,
            "abstentions": r.abstentions,
            "complete": r.complete,
            "counterexamples": counterexamples,
        }),
    )
}

fn stratum_json(index: usize, s: &StratumDescriptor) -> Value {
    json!({
        "name": stratum_name(index),
        "dim": s.dim,
        "zero_set": index_set(&s.zero_set),
        "one_set": index_set(&s.one_set),
        "active": s.active.iter().map(|j| j + 1).collect::<Vec<_>>(),
        "generators": s.generator_strings().iter().map(|g| {
            g.iter().map(|x| x.parse::<u64>().map_or(Value::String(x.clone()), Value::from)).collect::<Vec<_>>()
        }).collect::<Vec<_>>(),
        "origin_faces": s.origin_faces.iter().map(ToString::to_string).collect::<Vec<_>>(),
    })
}

fn partition_json(p: &Partition) -> Value {
    let name = |i: usize| stratum_name(p.indices[i]);
    json!({
        "native": p.native,
        "disjoint": p.disjoint,
        "verified": p.verified,
        "retained": p.indices.iter().map(|&i| stratum_name(i)).collect::<Vec<_>>(),
        "removed": p.removed.iter().map(|&i| stratum_name(i)).collect::<Vec<_>>(),
        "overlapping": p.overlapping.map(|(a, b)| vec![name(a), name(b)]),
        "coverage": {
            "samples": p.coverage.samples,
            "misses": p.coverage.misses,
            "multi_hits": p.coverage.multi_hits,
            "counterexample": p.coverage.counterexample.as_ref().map(|(pt, hits)| json!({
                "point": log_vector(pt),
                "strata": hits.iter().map(|&i| name(i)).collect::<Vec<_>>(),
            })),
        },
        "euler_characteristic": p.verified.then(|| p.strata.iter().map(|s| if s.dim % 2 == 0 { 1i64 } else { -1 }).sum::<i64>()),
    })
}

pub fn strata_section(s: &Stratification) -> Section {
    let overlaps: Vec<Value> = s
        .overlaps
        .pairs
        .iter()
        .filter(|p| p.relation != RelintRelation::Disjoint)
        .map(|p| {
            json!({
                "first": stratum_name(p.first),
                "second": stratum_name(p.second),
                "relation": p.relation.name(),
            })
        })
        .collect();
    let partial = s.overlaps.partial_overlap();
    let verdict = match (&s.partition, partial) {
        (Some(p), _) => Verdict::pass_if(p.verified),
        (None, _) => Verdict::Abstain,
    };
    Section::new(
        "strata",
        verdict,
        json!({
            "faces": s.faces,
            "count": s.strata.len(),
            "strata": s.strata.iter().enumerate().map(|(i, st)| stratum_json(i, st)).collect::<Vec<_>>(),
            "overlaps": overlaps,
            "native_partition": s.overlaps.partition,
            "partition": s.partition.as_ref().map_or(Value::Null, partition_json),
            "partial_overlap": partial.map(|p| json!({
                "first": stratum_name(p.first),
                "second": stratum_name(p.second),
                "note": "no common refinement is attempted",
            })),
        }),
    )
}

pub fn cw_section(s: &Stratification) -> Section {
    let (Some(poset), Some(cw), Some(p)) = (&s.poset, &s.cw, &s.partition) else {
        let reason = if s.partition.is_none() {
            "face images overlap partially"
        } else {
            "the strata do not form a verified partition"
        };
        return Section::new("cw", Verdict::Skipped, json!({ "reason": reason }));
    };
    Section::new("cw", Verdict::pass_if(cw.verdict), cw_json(poset, cw, &p.indices))
}

fn cw_json(poset: &StrataPoset, cw: &CWReport, indices: &[usize]) -> Value {
    let name = |i: usize| stratum_name(indices[i]);
    let pairs = |v: &[(usize, usize)]| v.iter().map(|&(a, b)| vec![name(a), name(b)]).collect::<Vec<_>>();
    json!({
        "partition": cw.partition,
        "order_valid": cw.order_valid,
        "order_violations": pairs(&cw.order_violations),
        "graded": cw.graded,
        "ungraded_covers": pairs(&cw.ungraded_covers),
        "diamond": cw.diamond,
        "diamond_failures": cw.diamond_failures.iter().map(|&(a, b, k)| json!({
            "bottom": name(a), "top": name(b), "between": k,
        })).collect::<Vec<_>>(),
        "boundary_euler": cw.boundary_euler.iter().map(|b| json!({
            "stratum": name(b.stratum), "dim": b.dim, "chi": b.chi, "expected": b.expected,
        })).collect::<Vec<_>>(),
        "total_euler": cw.total_euler,
        "covers": pairs(&poset.covers()),
        "top": poset.top.map(name),
        "maximal": poset.maximal().into_iter().map(name).collect::<Vec<_>>(),
    })
}

fn paint(text: &str, verdict: Verdict, color: bool) -> String {
    if !color {
        return text.to_string();
    }
    let code = match verdict {
        Verdict::Pass => "32",
        Verdict::Fail => "31",
        Verdict::Abstain => "33",
        Verdict::Skipped => "2",
    };
    format!("\x1b[{code}m{text}\x1b[0m")
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(items) if items.iter().all(|x| !x.is_array() && !x.is_object()) => Some(format!(
            "[{}]",
            items
                .iter()
                .map(|x| scalar(x).unwrap_or_default())
                .collect::<Vec<_>>()
                .join(", ")
        )),
        _ => None,
    }
}

fn set_text(v: &Value) -> String {
    let inner: Vec<String> = v
        .as_array()
        .map(|a| a.iter().map(|x| scalar(x).unwrap_or_default()).collect())
        .unwrap_or_default();
    format!("{{{}}}", inner.join(","))
}

fn strata_table(strata: &[Value]) -> Vec<String> {
    let mut out = vec![format!("  {:<5} {:>3}  {:<12} {:<12} {}", "name", "dim", "Z", "O", "generators")];
    for s in strata {
        let gens: Vec<String> = s["generators"]
            .as_array()
            .map(|g| g.iter().map(|v| format!("({})", scalar(v).unwrap_or_default().trim_matches(['[', ']']))).collect())
            .unwrap_or_default();
        out.push(format!(
            "  {:<5} {:>3}  {:<12} {:<12} {}",
            s["name"].as_str().unwrap_or(""),
            s["dim"],
            set_text(&s["zero_set"]),
            set_text(&s["one_set"]),
            if gens.is_empty() { "-".to_string() } else { gens.join(" ") }
        ));
    }
    out
}

/// `key: value` lines, with nested objects flattened into dotted keys.
fn field_lines(key: &str, value: &Value, lines: &mut Vec<String>) {
    match (scalar(value), value) {
        (Some(text), _) => lines.push(format!("  {key}: {text}")),
        (None, Value::Array(items)) => lines.push(format!("  {key}: {} entries", items.len())),
        (None, Value::Object(obj)) => {
            for (k, v) in obj {
                field_lines(&format!("{key}.{k}"), v, lines);
            }
        }
        _ => {}
    }
}

/// Plain-text summary of a report document.
pub fn render_text(report: &Value, color: bool) -> String {
    let mut lines = Vec::new();
    let overall = report["overall"].as_str().and_then(Verdict::from_name).unwrap_or(Verdict::Skipped);
    lines.push(format!(
        "{} {} (toricube {})",
        report["command"].as_str().unwrap_or("?"),
        paint(&overall.name().to_uppercase(), overall, color),
        report["tool_version"].as_str().unwrap_or("?"),
    ));
    if let Some(dim) = report["sections"]["dimension"]["dimension"].as_u64() {
        lines.push(format!("dim C = {dim} (rank of A)"));
    }
    if let Some(sections) = report["sections"].as_object() {
        for (name, section) in sections {
            let verdict = section["verdict"].as_str().and_then(Verdict::from_name).unwrap_or(Verdict::Skipped);
            lines.push(String::new());
            lines.push(format!("[{}] {name}", paint(&verdict.name().to_uppercase(), verdict, color)));
            let Some(fields) = section.as_object() else { continue };
            for (key, value) in fields {
                if key == "verdict" {
                    continue;
                }
                if key == "strata" {
                    if let Some(rows) = value.as_array() {
                        lines.extend(strata_table(rows));
                        continue;
                    }
                }
                field_lines(key, value, &mut lines);
            }
        }
    }
    lines.push(String::new());
    lines.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overall_verdicts() {
        let mut r = AnalysisReport::new("x", None, Map::new());
        assert_eq!(r.overall(), Verdict::Skipped);
        r.push(Section::new("a", Verdict::Abstain, Value::Null));
        assert_eq!(r.overall(), Verdict::Abstain);
        r.push(Section::new("b", Verdict::Pass, Value::Null));
        assert_eq!(r.overall(), Verdict::Pass);
        r.push(Section::new("c", Verdict::Fail, Value::Null));
        assert_eq!(r.overall(), Verdict::Fail);
    }

    #[test]
    fn keys_are_sorted_and_time_is_optional() {
        let mut r = AnalysisReport::new("dim", Some(ExponentMatrix::from_rows(1, &[[2]])), Map::new());
        r.push(dimension_section(1, 1, 1));
        let text = r.to_canonical_string();
        assert!(!text.contains("wall_time"));
        let keys: Vec<&str> = ["\"command\"", "\"overall\"", "\"parameters\"", "\"schema_version\"", "\"sections\"", "\"spec\"", "\"tool_version\""].to_vec();
        let positions: Vec<usize> = keys.iter().map(|k| text.find(k).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
        r.wall_time_ms = Some(3);
        assert!(r.to_canonical_string().contains("wall_time_ms"));
    }

    #[test]
    fn dim_text() {
        let mut r = AnalysisReport::new("dim", None, Map::new());
        r.push(dimension_section(2, 2, 3));
        let text = render_text(&r.to_json(), false);
        assert!(text.contains("dim C = 2 (rank of A)"));
        assert!(text.contains("[PASS] dimension"));
        assert!(!text.contains('\x1b'));
        assert!(render_text(&r.to_json(), true).contains("\x1b[32m"));
    }
}
