//! Randomized invariants, each checked against an independent oracle where
//! one exists.

mod common;

use num::{BigInt, One, Signed, Zero};
use proptest::prelude::*;
use proptest::sample::subsequence;
use toricube::analysis::{membership, slice, MembershipMode};
use toricube::cone::{ConeGenerators, FourierMotzkin, LinearSystem, RelintRelation};
use toricube::linalg::RationalMatrix;
use toricube::model::{
    parse_constraints, parse_spec, ConeConstraint, ConstraintSystem, Relation, SystemKind,
};
use toricube::oracle::{self, SamplingConfig};
use toricube::strata::{dedupe, face_image, stratify, CoverageCheck, CubeFace};
use toricube::{IndexSet, Limits, LogValue, LogVector, Rational, ToricCubeSpec};

fn q(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

fn qr(p: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(d))
}

fn int_matrix(rows: usize, cols: usize, lo: i64, hi: i64) -> impl Strategy<Value = Vec<Vec<i64>>> {
    proptest::collection::vec(proptest::collection::vec(lo..=hi, cols), rows)
}

fn any_int_matrix() -> impl Strategy<Value = (usize, Vec<Vec<i64>>)> {
    (1usize..=6, 1usize..=6).prop_flat_map(|(r, c)| (Just(c), int_matrix(r, c, -3, 3)))
}

/// Specs with `1 <= d <= 4`, `1 <= n <= 5`, entries `0..=3`.
fn small_spec() -> impl Strategy<Value = ToricCubeSpec> {
    (1usize..=4, 1usize..=5)
        .prop_flat_map(|(d, n)| (Just(d), int_matrix(n, d, 0, 3)))
        .prop_map(|(d, rows)| ToricCubeSpec::from_rows(d, &rows))
}

fn tiny_spec() -> impl Strategy<Value = ToricCubeSpec> {
    (1usize..=3, 1usize..=4)
        .prop_flat_map(|(d, n)| (Just(d), int_matrix(n, d, 0, 2)))
        .prop_map(|(d, rows)| ToricCubeSpec::from_rows(d, &rows))
}

fn negative_rational() -> impl Strategy<Value = Rational> {
    (1i64..=24, 1i64..=6).prop_map(|(p, d)| qr(-p, d))
}

fn log_parameter(d: usize) -> impl Strategy<Value = Vec<Rational>> {
    proptest::collection::vec(negative_rational(), d)
}

fn spec_with_parameter() -> impl Strategy<Value = (ToricCubeSpec, Vec<Rational>)> {
    small_spec().prop_flat_map(|s| {
        let d = s.d();
        (Just(s), log_parameter(d))
    })
}

fn engine() -> FourierMotzkin {
    FourierMotzkin::default()
}

// ---------------------------------------------------------------------------
// Independent integer rank: fraction-free elimination in i128, pivoting on the
// last nonzero column and the row of largest magnitude.

fn oracle_rank(rows: &[Vec<i64>], cols: usize) -> usize {
    let mut m: Vec<Vec<i128>> = rows.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
    let mut rank = 0;
    for c in (0..cols).rev() {
        let pivot = (rank..m.len())
            .filter(|&r| m[r][c] != 0)
            .max_by_key(|&r| m[r][c].abs());
        let Some(p) = pivot else { continue };
        m.swap(rank, p);
        for r in 0..m.len() {
            if r != rank && m[r][c] != 0 {
                let (a, b) = (m[rank][c], m[r][c]);
                for k in 0..cols {
                    m[r][k] = a * m[r][k] - b * m[rank][k];
                }
                let g = m[r].iter().fold(0i128, |g, &v| gcd(g, v.abs()));
                if g > 1 {
                    m[r].iter_mut().for_each(|v| *v /= g);
                }
            }
        }
        rank += 1;
    }
    rank
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rank_nullity((cols, rows) in any_int_matrix()) {
        let m = RationalMatrix::from_integers(cols, &rows);
        prop_assert_eq!(m.rank() + m.kernel_basis().len(), cols);
    }

    #[test]
    fn rank_matches_independent_elimination((cols, rows) in any_int_matrix()) {
        prop_assert_eq!(RationalMatrix::from_integers(cols, &rows).rank(), oracle_rank(&rows, cols));
    }

    #[test]
    fn solve_is_exact(
        (cols, rows) in any_int_matrix(),
        rhs in proptest::collection::vec(-4i64..=4, 6),
        consistent in any::<bool>(),
        z in proptest::collection::vec(-3i64..=3, 6),
    ) {
        let m = RationalMatrix::from_integers(cols, &rows);
        let b: Vec<Rational> = if consistent {
            m.mul_vec(&z[..cols].iter().map(|&v| q(v)).collect::<Vec<_>>())
        } else {
            rhs[..rows.len()].iter().map(|&v| q(v)).collect()
        };
        let sol = m.solve(&b);
        if consistent {
            prop_assert!(sol.particular.is_some());
        }
        if let Some(p) = &sol.particular {
            prop_assert_eq!(&m.mul_vec(p), &b);
        }
        for k in &sol.kernel_basis {
            prop_assert!(m.mul_vec(k).iter().all(Zero::is_zero));
            prop_assert!(k.iter().any(|x| !x.is_zero()));
        }
    }

    #[test]
    fn rank_ignores_row_permutation_and_scaling(
        (cols, rows) in any_int_matrix(),
        perm_seed in any::<u64>(),
        scales in proptest::collection::vec((1i64..=5, 1i64..=5, any::<bool>()), 6),
    ) {
        let base = RationalMatrix::from_integers(cols, &rows);
        let mut order: Vec<usize> = (0..rows.len()).collect();
        let mut s = perm_seed;
        for i in (1..order.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let scaled: Vec<Vec<Rational>> = order
            .iter()
            .map(|&r| {
                let (p, d, neg) = scales[r];
                let f = qr(if neg { -p } else { p }, d);
                base.row(r).iter().map(|x| x * &f).collect()
            })
            .collect();
        prop_assert_eq!(RationalMatrix::from_rows(cols, scaled).rank(), base.rank());
    }
}

// ---------------------------------------------------------------------------
// Fourier-Motzkin against a brute-force grid and against constructed points.

#[derive(Debug, Clone)]
struct Row {
    coeffs: Vec<i64>,
    rhs: i64,
    strict: bool,
}

fn small_system() -> impl Strategy<Value = (usize, Vec<Row>)> {
    (1usize..=3, 1usize..=6).prop_flat_map(|(dim, count)| {
        let row = (proptest::collection::vec(-2i64..=2, dim), -3i64..=3, any::<bool>())
            .prop_map(|(coeffs, rhs, strict)| Row { coeffs, rhs, strict });
        (Just(dim), proptest::collection::vec(row, count))
    })
}

fn build(dim: usize, rows: &[Row]) -> LinearSystem {
    let mut sys = LinearSystem::new(dim);
    for r in rows {
        sys.add_inequality(r.coeffs.iter().map(|&c| q(c)).collect(), q(r.rhs), r.strict);
    }
    sys
}

/// Every point of `{k/4 : |k| <= 16}^dim`, checked exactly.
fn grid_search(dim: usize, rows: &[Row]) -> bool {
    let axis: Vec<i64> = (-16..=16).collect();
    let total = axis.len().pow(dim as u32);
    (0..total).any(|mut idx| {
        let z: Vec<i64> = (0..dim)
            .map(|_| {
                let v = axis[idx % axis.len()];
                idx /= axis.len();
                v
            })
            .collect();
        rows.iter().all(|r| {
            let lhs: i64 = r.coeffs.iter().zip(&z).map(|(a, b)| a * b).sum();
            let rhs = 4 * r.rhs;
            if r.strict {
                lhs < rhs
            } else {
                lhs <= rhs
            }
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn feasibility_agrees_with_grid((dim, rows) in small_system()) {
        let sys = build(dim, &rows);
        let verdict = engine().feasible(&sys).unwrap();
        if let Some(w) = verdict.witness() {
            prop_assert!(sys.is_satisfied_by(w));
        }
        if grid_search(dim, &rows) {
            prop_assert!(verdict.is_feasible());
        }
    }

    #[test]
    fn systems_through_a_point_are_feasible(
        dim in 1usize..=4,
        point in proptest::collection::vec((-12i64..=12, 1i64..=4), 4),
        rows in proptest::collection::vec((proptest::collection::vec(-3i64..=3, 4), 0i64..=2, any::<bool>()), 1..=8),
        equalities in proptest::collection::vec(proptest::collection::vec(-3i64..=3, 4), 0..=2),
    ) {
        let p: Vec<Rational> = point[..dim].iter().map(|&(a, b)| qr(a, b)).collect();
        let mut sys = LinearSystem::new(dim);
        for (coeffs, slack, strict) in &rows {
            let a: Vec<Rational> = coeffs[..dim].iter().map(|&c| q(c)).collect();
            let at_p: Rational = a.iter().zip(&p).map(|(x, y)| x * y).sum();
            // Strict rows need positive slack to stay satisfied at p.
            let slack = if *strict { slack + 1 } else { *slack };
            sys.add_inequality(a, at_p + q(slack), *strict);
        }
        for coeffs in &equalities {
            let a: Vec<Rational> = coeffs[..dim].iter().map(|&c| q(c)).collect();
            let at_p: Rational = a.iter().zip(&p).map(|(x, y)| x * y).sum();
            sys.add_equality(a, at_p);
        }
        prop_assert!(sys.is_satisfied_by(&p));
        let verdict = engine().feasible(&sys).unwrap();
        let w = verdict.witness();
        prop_assert!(w.is_some());
        prop_assert!(sys.is_satisfied_by(w.unwrap()));
    }
}

// ---------------------------------------------------------------------------
// Cone predicates.

fn generators(dim: usize) -> impl Strategy<Value = Vec<Vec<i64>>> {
    proptest::collection::vec(proptest::collection::vec(0i64..=3, dim), 1..=4)
}

fn cone(dim: usize, g: &[Vec<i64>]) -> ConeGenerators {
    ConeGenerators::from_integers(dim, g)
}

/// Same cone: scaled generators plus positive combinations of them.
fn same_cone(dim: usize, g: &[Vec<i64>], scales: &[(i64, i64)]) -> ConeGenerators {
    let mut vectors: Vec<Vec<Rational>> = g
        .iter()
        .zip(scales.iter().cycle())
        .map(|(v, &(p, d))| v.iter().map(|&x| qr(x * p, d)).collect())
        .collect();
    let sum: Vec<Rational> = (0..dim).map(|i| g.iter().map(|v| q(v[i])).sum()).collect();
    vectors.push(sum);
    vectors.reverse();
    ConeGenerators::new(dim, vectors)
}

fn cone_triple() -> impl Strategy<Value = (usize, Vec<Vec<i64>>, Vec<Vec<i64>>, Vec<Vec<i64>>, Vec<(i64, i64)>)> {
    (1usize..=3).prop_flat_map(|dim| {
        (
            Just(dim),
            generators(dim),
            generators(dim),
            generators(dim),
            proptest::collection::vec((1i64..=5, 1i64..=5), 4),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn relint_implies_cone((dim, g, _, _, _) in cone_triple(), p in proptest::collection::vec(0i64..=6, 3)) {
        let c = cone(dim, &g);
        let point: Vec<Rational> = p[..dim].iter().map(|&v| q(v)).collect();
        if engine().relint_member(&point, &c).unwrap() {
            prop_assert!(engine().cone_member(&point, &c).unwrap());
        }
        prop_assert!(engine().relint_member(&c.canonical_point(), &c).unwrap());
    }

    #[test]
    fn cone_equality_is_an_equivalence((dim, a, b, c, scales) in cone_triple(), pick in 0usize..4) {
        let e = engine();
        let ca = cone(dim, &a);
        // Mix in a guaranteed-equal cone so transitivity is exercised.
        let cb = if pick == 0 { same_cone(dim, &a, &scales) } else { cone(dim, &b) };
        let cc = if pick == 1 { same_cone(dim, &a, &scales) } else { cone(dim, &c) };
        prop_assert!(e.cone_equal(&ca, &ca).unwrap());
        prop_assert!(e.cone_equal(&ca, &same_cone(dim, &a, &scales)).unwrap());
        prop_assert_eq!(e.cone_equal(&ca, &cb).unwrap(), e.cone_equal(&cb, &ca).unwrap());
        if e.cone_equal(&ca, &cb).unwrap() && e.cone_equal(&cb, &cc).unwrap() {
            prop_assert!(e.cone_equal(&ca, &cc).unwrap());
        }
    }

    #[test]
    fn relint_relation_is_symmetric((dim, a, b, _, _) in cone_triple()) {
        let (ca, cb) = (cone(dim, &a), cone(dim, &b));
        let forward = engine().relint_relation(&ca, &cb).unwrap();
        let backward = engine().relint_relation(&cb, &ca).unwrap();
        prop_assert_eq!(forward.swapped(), backward);
        if forward == RelintRelation::Equal {
            prop_assert!(engine().cone_equal(&ca, &cb).unwrap());
        }
    }

    #[test]
    fn positive_scaling_changes_nothing(
        (dim, a, b, _, scales) in cone_triple(),
        p in proptest::collection::vec(0i64..=6, 3),
    ) {
        let e = engine();
        let (ca, cb) = (cone(dim, &a), cone(dim, &b));
        let scaled = |g: &[Vec<i64>]| {
            ConeGenerators::new(
                dim,
                g.iter()
                    .zip(scales.iter().cycle())
                    .map(|(v, &(n, d))| v.iter().map(|&x| qr(x * n, d)).collect())
                    .collect(),
            )
        };
        let (sa, sb) = (scaled(&a), scaled(&b));
        let point: Vec<Rational> = p[..dim].iter().map(|&v| q(v)).collect();
        prop_assert_eq!(e.relint_member(&point, &ca).unwrap(), e.relint_member(&point, &sa).unwrap());
        prop_assert_eq!(e.cone_member(&point, &ca).unwrap(), e.cone_member(&point, &sa).unwrap());
        prop_assert_eq!(e.relint_relation(&ca, &cb).unwrap(), e.relint_relation(&sa, &sb).unwrap());
        prop_assert_eq!(e.cone_equal(&ca, &cb).unwrap(), e.cone_equal(&sa, &sb).unwrap());
    }
}

// ---------------------------------------------------------------------------
// Documents.

fn spec_document() -> impl Strategy<Value = (usize, Vec<Vec<u64>>, Vec<&'static str>, String)> {
    (0usize..=4, 0usize..=5).prop_flat_map(|(d, n)| {
        (
            Just(d),
            proptest::collection::vec(proptest::collection::vec(0u64..=1000, d), n),
            Just(vec!["d", "n", "rows"]).prop_shuffle(),
            prop_oneof![Just(String::new()), Just(" ".to_string()), Just("\n  ".to_string())],
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn spec_round_trip((d, rows, keys, ws) in spec_document()) {
        let rows_text: Vec<String> = rows
            .iter()
            .map(|r| format!("[{}]", r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(&format!(",{ws}"))))
            .collect();
        let field = |k: &str| match k {
            "d" => format!("\"d\":{ws}{d}"),
            "n" => format!("\"n\":{ws}{}", rows.len()),
            _ => format!("\"rows\":{ws}[{}]", rows_text.join(&format!(",{ws}"))),
        };
        let text = format!("{{{ws}{}{ws}}}", keys.iter().map(|k| field(k)).collect::<Vec<_>>().join(&format!(",{ws}")));
        let parsed = parse_spec(&text).unwrap();
        let canonical = parsed.to_canonical_json();
        let rows_canon: Vec<String> = rows
            .iter()
            .map(|r| format!("[{}]", r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")))
            .collect();
        prop_assert_eq!(&canonical, &format!("{{\"d\":{d},\"n\":{},\"rows\":[{}]}}", rows.len(), rows_canon.join(",")));
        prop_assert_eq!(parse_spec(&canonical).unwrap(), parsed);
    }

    #[test]
    fn garbage_never_panics(text in "\\PC{0,64}") {
        let _ = parse_spec(&text);
        let _ = parse_constraints(&text, 3);
    }

    #[test]
    fn mutated_documents_never_panic(
        (d, rows, keys, ws) in spec_document(),
        cut in 0usize..64,
        insert in prop_oneof![Just("-"), Just("1.5"), Just("\"x\""), Just("]"), Just("{"), Just("null"), Just("-0")],
    ) {
        let _ = (keys, ws);
        let text = format!("{{\"d\":{d},\"n\":{},\"rows\":{:?}}}", rows.len(), rows);
        let at = cut.min(text.len());
        let mutated = format!("{}{insert}{}", &text[..at], &text[at..]);
        if let Ok(m) = parse_spec(&mutated) {
            // Whatever was accepted must satisfy the matrix invariants.
            prop_assert_eq!(m.rows().len(), m.n());
            prop_assert!(m.rows().iter().all(|r| r.len() == m.d()));
        }
        let constraints = format!("[{{\"j\":{},\"rel\":\"<\",\"log_c\":\"-1/2\"}}]", d + 1);
        let at = cut.min(constraints.len());
        let _ = parse_constraints(&format!("{}{insert}{}", &constraints[..at], &constraints[at..]), 4);
    }

    #[test]
    fn system_kind_tracks_relations(rels in proptest::collection::vec(0usize..3, 0..=5)) {
        let cs: Vec<ConeConstraint> = rels
            .iter()
            .enumerate()
            .map(|(j, &r)| ConeConstraint::new(j, Relation::ALL[r], qr(-1, (j + 1) as i64)))
            .collect();
        let sys = ConstraintSystem::new(cs).unwrap();
        let all_equal = rels.iter().all(|&r| Relation::ALL[r] == Relation::Equal);
        prop_assert_eq!(sys.kind() == SystemKind::AffineSubspace, all_equal);
        let reparsed = parse_constraints(&sys.to_json().to_string(), rels.len().max(1)).unwrap();
        prop_assert_eq!(reparsed, sys);
    }
}

// ---------------------------------------------------------------------------
// Cube analysis.

fn subsets(n: usize) -> Vec<IndexSet> {
    IndexSet::all_subsets(n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn projections_and_quasi_affinity(spec in small_spec()) {
        let k = spec.dimension();
        for j in subsets(spec.n()) {
            let projected = spec.project(&j).unwrap();
            let rank = spec.exponents().select_rows(j.members()).rank();
            prop_assert_eq!(projected.dimension(), rank);
            prop_assert!(rank <= k);
            prop_assert_eq!(spec.is_injective_projection(&j).unwrap(), rank == k);
        }
    }

    #[test]
    fn open_membership_witnesses((spec, z) in spec_with_parameter(), perm_seed in any::<u64>()) {
        let zeta = spec.image_of(&z);
        let m = membership(&spec, &LogVector::from_finite(zeta.clone()), MembershipMode::Open, &engine()).unwrap();
        prop_assert!(m.member);
        let w = m.witness.unwrap().to_finite().unwrap();
        prop_assert!(w.iter().all(Signed::is_negative));
        prop_assert_eq!(spec.image_of(&w), zeta.clone());

        // Permuting image coordinates together with the rows of A.
        let n = spec.n();
        let mut order: Vec<usize> = (0..n).collect();
        let mut s = perm_seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let permuted = ToricCubeSpec::new(spec.matrix().select_rows(&order));
        let pz = LogVector::from_finite(order.iter().map(|&i| zeta[i].clone()));
        prop_assert!(membership(&permuted, &pz, MembershipMode::Open, &engine()).unwrap().member);

        // Perturbing one coordinate off the image of a rank-deficient map.
        if spec.dimension() < n {
            let mut off = zeta.clone();
            let y = spec.exponents().transpose().kernel_basis();
            let j = (0..n).find(|&j| y[0][j] != Rational::zero()).unwrap();
            off[j] -= Rational::one();
            let m = membership(&spec, &LogVector::from_finite(off), MembershipMode::Open, &engine()).unwrap();
            prop_assert!(!m.member);
        }
    }

    #[test]
    fn log_image_is_convex(
        (spec, z1) in spec_with_parameter(),
        z2 in log_parameter(4),
        theta in (1i64..=9).prop_map(|p| qr(p, 10)),
    ) {
        let z2 = &z2[..spec.d()];
        let (a, b) = (spec.image_of(&z1), spec.image_of(z2));
        let mix: Vec<Rational> = a.iter().zip(&b).map(|(x, y)| &theta * x + (Rational::one() - &theta) * y).collect();
        let m = membership(&spec, &LogVector::from_finite(mix.clone()), MembershipMode::Open, &engine()).unwrap();
        prop_assert!(m.member);
        prop_assert_eq!(spec.image_of(&m.witness.unwrap().to_finite().unwrap()), mix);
    }
}

fn constraint_system(n: usize) -> impl Strategy<Value = ConstraintSystem> {
    let constants = prop_oneof![
        Just(q(-1)),
        Just(qr(-1, 2)),
        Just(q(-2)),
        Just(qr(-1, 3)),
        Just(q(-3)),
        negative_rational(),
    ];
    proptest::collection::vec((0usize..3, constants), n)
        .prop_flat_map(move |cs| (Just(cs), subsequence((0..n).collect::<Vec<_>>(), 0..=n)))
        .prop_map(|(cs, coords)| {
            ConstraintSystem::new(
                coords
                    .into_iter()
                    .map(|j| ConeConstraint::new(j, Relation::ALL[cs[j].0], cs[j].1.clone()))
                    .collect(),
            )
            .unwrap()
        })
}

fn spec_with_system() -> impl Strategy<Value = (ToricCubeSpec, ConstraintSystem, ConstraintSystem)> {
    tiny_spec().prop_flat_map(|s| {
        let n = s.n();
        (Just(s), constraint_system(n), constraint_system(n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn slice_witnesses_and_oracle_agree((spec, sys, _) in spec_with_system(), seed in any::<u64>()) {
        let report = slice(&spec, &sys, &engine()).unwrap();
        let cloud = oracle::sample_slice(&spec, &sys, &SamplingConfig::default(), seed).unwrap();
        if report.nonempty {
            let w = report.witness.clone().unwrap();
            prop_assert!(membership(&spec, &w, MembershipMode::Open, &engine()).unwrap().member);
            let w = w.to_finite().unwrap();
            for c in sys.constraints() {
                let toricube::model::LogConstant::Finite(log_c) = &c.log_c else { unreachable!() };
                let ok = match c.relation {
                    Relation::Less => &w[c.coord] < log_c,
                    Relation::Equal => &w[c.coord] == log_c,
                    Relation::Greater => &w[c.coord] > log_c,
                };
                prop_assert!(ok);
            }
            prop_assert!(report.dim.unwrap() <= spec.dimension());
        } else {
            prop_assert_eq!(cloud.hits(), 0);
        }
    }

    #[test]
    fn refinement_never_creates_points((spec, base, extra) in spec_with_system()) {
        let before = slice(&spec, &base, &engine()).unwrap().nonempty;
        for c in extra.constraints() {
            if let Some(refined) = base.with(c.clone()) {
                let after = slice(&spec, &refined, &engine()).unwrap().nonempty;
                prop_assert!(before || !after);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic((spec, sys, _) in spec_with_system(), seed in any::<u64>()) {
        let config = SamplingConfig::default();
        let a = oracle::sample_slice(&spec, &sys, &config, seed).unwrap();
        let b = oracle::sample_slice(&spec, &sys, &config, seed).unwrap();
        prop_assert_eq!(&a.points, &b.points);
        let (va, vb) = (
            oracle::check_connected(&a, a.suggested_epsilon()),
            oracle::check_connected(&b, b.suggested_epsilon()),
        );
        prop_assert_eq!(va, vb);
    }
}

// ---------------------------------------------------------------------------
// Stratification.

/// `A z` with `-inf` absorbing: a coordinate is `-inf` as soon as it has a
/// positive exponent on a `-inf` parameter.
fn extended_image(spec: &ToricCubeSpec, z: &LogVector) -> LogVector {
    let a = spec.exponents();
    LogVector(
        (0..spec.n())
            .map(|j| {
                let mut acc = Rational::zero();
                for (i, zi) in z.entries().iter().enumerate() {
                    let aji = a.get(j, i);
                    match zi {
                        LogValue::NegInfinity if aji.is_positive() => return LogValue::NegInfinity,
                        LogValue::NegInfinity => {}
                        LogValue::Finite(v) => acc += aji * v,
                    }
                }
                LogValue::Finite(acc)
            })
            .collect(),
    )
}

fn shuffled<T: Clone>(items: &[T], seed: u64) -> Vec<T> {
    let mut out = items.to_vec();
    let mut s = seed;
    for i in (1..out.len()).rev() {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        out.swap(i, (s >> 33) as usize % (i + 1));
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn dedupe_is_idempotent_and_order_free(spec in small_spec(), seed in any::<u64>()) {
        let faces = CubeFace::enumerate(spec.d(), 1 << 20).unwrap();
        let images: Vec<_> = faces.iter().map(|f| face_image(&spec, f)).collect();
        let once = dedupe(images.clone(), &engine()).unwrap();
        prop_assert!(once.len() <= 3usize.pow(spec.d() as u32));
        prop_assert_eq!(&dedupe(once.clone(), &engine()).unwrap(), &once);
        prop_assert_eq!(&dedupe(shuffled(&images, seed), &engine()).unwrap(), &once);
        let origins: usize = once.iter().map(|s| s.origin_faces.len()).sum();
        prop_assert_eq!(origins, faces.len());
    }

    #[test]
    fn strata_are_self_consistent(spec in small_spec()) {
        let s = stratify(&spec, &Limits::default(), &CoverageCheck::default()).unwrap();
        let k = spec.dimension();
        let interior = CubeFace::interior(spec.d());
        let top = s.strata.iter().position(|st| st.origin_faces.contains(&interior)).unwrap();
        prop_assert_eq!(top, 0);
        // Zero rows are identically 1, so they sit in every one-set.
        prop_assert!(s.strata[0].zero_set.is_empty());
        for st in &s.strata {
            prop_assert!(s.strata[0].one_set.members().iter().all(|&j| st.one_set.contains(j)));
        }
        prop_assert_eq!(s.strata[0].dim, k);
        for st in &s.strata {
            prop_assert_eq!(st.dim, st.generators.rank());
            prop_assert_eq!(st.reduced_spec().dimension(), st.dim);
            prop_assert!(st.dim <= k);
            prop_assert!(st.contains(&st.canonical_point(), &engine()).unwrap());
        }
        if let Some(p) = &s.partition {
            if p.verified {
                prop_assert!(p.coverage.complete());
                let poset = s.poset.as_ref().unwrap();
                if p.native {
                    prop_assert_eq!(poset.top, Some(0));
                }
                let cw = s.cw.as_ref().unwrap();
                prop_assert!(cw.verdict, "{}: {:?}", common::describe(&spec), cw);
                prop_assert_eq!(cw.total_euler, 1);
                if poset.graded {
                    for (i, j) in poset.covers() {
                        prop_assert_eq!(poset.strata[j].dim, poset.strata[i].dim + 1);
                    }
                }
            }
        }
    }

    /// Closed-cube membership two ways: the direct criterion and the union of
    /// strata of a verified partition.
    #[test]
    fn closure_membership_matches_strata(spec in tiny_spec(), seed in any::<u64>(), shifts in proptest::collection::vec(0i64..=2, 4)) {
        let s = stratify(&spec, &Limits::default(), &CoverageCheck::default()).unwrap();
        let Some(p) = s.partition.filter(|p| p.verified) else { return Ok(()) };
        let samples = oracle::sample_closed_cube(&spec, 2, seed, 1 << 20).unwrap();
        for (i, zeta) in samples.iter().enumerate() {
            // Every other sample is pushed off the cube image on one coordinate.
            let mut probe = zeta.clone();
            if i % 2 == 1 {
                let j = i % spec.n();
                if let LogValue::Finite(v) = &probe.0[j] {
                    probe.0[j] = LogValue::Finite(v - qr(shifts[j % 4] + 1, 3));
                }
            }
            let direct = membership(&spec, &probe, MembershipMode::Closure, &engine()).unwrap();
            let hits = p
                .strata
                .iter()
                .filter(|st| st.contains(&probe, &engine()).unwrap())
                .count();
            prop_assert!(hits <= 1);
            prop_assert_eq!(direct.member, hits == 1, "{} at {}", common::describe(&spec), probe);
            if let Some(w) = direct.witness {
                prop_assert!(w.entries().iter().all(|v| v.finite().is_none_or(|x| !x.is_positive())));
                prop_assert_eq!(&extended_image(&spec, &w), &probe);
            }
        }
    }
}
