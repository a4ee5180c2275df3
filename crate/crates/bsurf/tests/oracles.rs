//! Independent oracles and property tests for the algebraic and
//! combinatorial invariants.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bsurf::core_diagram::{edge_matrix_any, finite_paths_idx, DiagramWindow, Edge, Level, LevelGenerator};
use bsurf::fixtures::{self, HYPER_PI, SECOND_PI};
use bsurf::iet_zip::{PermutationPair, TripleData};
use bsurf::induction::{random_triple, rh_step, rv_step};
use bsurf::ktheory::{smith_normal_form, theta_sequence, ThetaData};
use bsurf::matrix::IntMatrix;
use bsurf::path_space::{descriptor_from_json, descriptor_to_json, sigma_scan, PathDescriptor, PathDescriptorJson, TailSpec};
use bsurf::surface_diagram::{build, s_extreme_classes, verify_flatness, verify_standard, SurfaceDiagram, SurfaceGenerator};
use bsurf::Result;

fn big(x: i64) -> BigInt {
    BigInt::from(x)
}

/// Determinant by cofactor expansion; independent of the library's
/// elimination code.
fn cofactor_det(m: &[Vec<BigInt>]) -> BigInt {
    let n = m.len();
    if n == 0 {
        return big(1);
    }
    if n == 1 {
        return m[0][0].clone();
    }
    let mut acc = big(0);
    for j in 0..n {
        let minor: Vec<Vec<BigInt>> = m[1..]
            .iter()
            .map(|r| r.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, x)| x.clone()).collect())
            .collect();
        let term = &m[0][j] * cofactor_det(&minor);
        if j % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

/// `k`-th determinantal divisor: gcd of all `k × k` minors.
fn determinantal_divisor(m: &IntMatrix, k: usize) -> BigInt {
    let mut g = big(0);
    for rs in subsets(m.rows(), k) {
        for cs in subsets(m.cols(), k) {
            let minor: Vec<Vec<BigInt>> = rs.iter().map(|&r| cs.iter().map(|&c| m.get(r, c).clone()).collect()).collect();
            g = g.gcd(&cofactor_det(&minor));
        }
    }
    g
}

fn matrix_strategy() -> impl Strategy<Value = Vec<Vec<i64>>> {
    (1usize..=4, 1usize..=4).prop_flat_map(|(r, c)| prop::collection::vec(prop::collection::vec(-6i64..=6, c), r))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn smith_form_is_a_unimodular_diagonalisation(rows in matrix_strategy()) {
        let m = IntMatrix::from_rows(&rows);
        let snf = smith_normal_form(&m);
        let d = snf.left.mul(&m).unwrap().mul(&snf.right).unwrap();
        for i in 0..d.rows() {
            for j in 0..d.cols() {
                let want = if i == j { snf.diagonal[i].clone() } else { big(0) };
                prop_assert_eq!(d.get(i, j), &want);
            }
        }
        prop_assert!(snf.left.det().unwrap().abs() == big(1));
        prop_assert!(snf.right.det().unwrap().abs() == big(1));
        for w in snf.diagonal.windows(2) {
            prop_assert!(!w[0].is_negative() && !w[1].is_negative());
            if !w[0].is_zero() {
                prop_assert!(w[1].is_multiple_of(&w[0]));
            } else {
                prop_assert!(w[1].is_zero());
            }
        }
    }

    #[test]
    fn smith_diagonal_matches_determinantal_divisors(rows in matrix_strategy()) {
        let m = IntMatrix::from_rows(&rows);
        let snf = smith_normal_form(&m);
        let mut prod = big(1);
        for (k, d) in snf.diagonal.iter().enumerate() {
            prod *= d;
            prop_assert_eq!(prod.clone(), determinantal_divisor(&m, k + 1));
        }
    }

    #[test]
    fn rv_and_rh_are_mutually_inverse(seed in any::<u64>(), second in any::<bool>()) {
        let pi = if second { SECOND_PI } else { HYPER_PI };
        let perm = PermutationPair::parse(pi, false).unwrap();
        let t = random_triple(&perm, &mut ChaCha8Rng::seed_from_u64(seed), 48).unwrap();
        if let Ok(s) = rv_step(&t) {
            prop_assert_eq!(&rh_step(&s.after).unwrap().after, &t);
        }
        if let Ok(s) = rh_step(&t) {
            prop_assert_eq!(&rv_step(&s.after).unwrap().after, &t);
        }
    }

    #[test]
    fn induction_preserves_area(seed in any::<u64>(), moves in prop::collection::vec(any::<bool>(), 1..40)) {
        let perm = PermutationPair::parse(HYPER_PI, false).unwrap();
        let t = random_triple(&perm, &mut ChaCha8Rng::seed_from_u64(seed), 48).unwrap();
        let area = t.area();
        let mut cur = t;
        for rv in moves {
            let step = if rv { rv_step(&cur) } else { rh_step(&cur) };
            let Ok(s) = step else { break };
            prop_assert_eq!(s.after.area(), area.clone());
            if rv {
                // The winner's old length is its new length plus the loser's.
                prop_assert_eq!(s.matrix.transpose().mul_vec_q(&s.after.lambda).unwrap(), s.before.lambda.clone());
                prop_assert!(s.after.lambda_norm() < s.before.lambda_norm());
            }
            cur = s.after;
        }
    }

    #[test]
    fn theta_then_sigma_vanishes(i in 1usize..=3, j in 1usize..=3, mask in any::<u16>()) {
        let mut star = Vec::new();
        for a in 1..=i {
            for b in i + 1..=i + j {
                if mask >> ((a - 1) * 3 + (b - i - 1)) & 1 == 1 {
                    star.push((a, b));
                }
            }
        }
        let seq = theta_sequence(&ThetaData::new(i, j, star.clone()).unwrap()).unwrap();
        prop_assert!(seq.sigma_theta_zero);
        prop_assert_eq!(seq.sigma.mul(&seq.theta).unwrap(), IntMatrix::zeros(seq.sigma.rows(), star.len()));
        for v in &seq.kernel_basis {
            let image = seq.theta.mul_vec(v).unwrap();
            prop_assert!(image.iter().all(Zero::is_zero));
        }
    }

    #[test]
    fn descriptor_json_round_trip(start in -4i64..4, digits in prop::collection::vec(0u8..2, 1..6), l in any::<bool>(), r in 0u8..3) {
        let w = fixtures::chamanara_window(-8, 8).unwrap();
        let ids: Vec<String> = digits.iter().map(u8::to_string).collect();
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let core = w.path_from_ids(start, &refs).unwrap();
        let left = if l { TailSpec::RMin } else { TailSpec::RMax };
        let right = match r {
            0 => TailSpec::SMin,
            1 => TailSpec::SMax,
            _ => TailSpec::PeriodicExplicit { cycle: vec!["0".into(), "1".into()] },
        };
        let x = PathDescriptor::new(left, core, right);
        let text = serde_json::to_string(&descriptor_to_json(&w, &x).unwrap()).unwrap();
        let parsed: PathDescriptorJson = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(descriptor_from_json(&w, &parsed).unwrap(), x);
    }

    #[test]
    fn window_json_round_trip_is_byte_identical(m in -5i64..0, len in 1i64..8, which in 0u8..3) {
        let n = m + len;
        let w = match which {
            0 => fixtures::chamanara_window(m, n).unwrap(),
            1 => fixtures::decimal_window(m, n).unwrap(),
            _ => build(&fixtures::hyper_triple().unwrap(), m, n).unwrap().window,
        };
        let text = w.to_json_string();
        let back = DiagramWindow::from_json_str(&text).unwrap();
        prop_assert_eq!(back.to_json_string(), text);
    }
}

/// Edge-matrix products count paths: entry `(v, u)` of `M_n ⋯ M_{m+1}`
/// equals the number of enumerated paths from `u` to `v`.
#[test]
fn edge_matrix_products_count_enumerated_paths() {
    let t = fixtures::hyper_triple().unwrap();
    let windows = [
        fixtures::chamanara_window(-4, 4).unwrap(),
        fixtures::decimal_window(-2, 2).unwrap(),
        build(&t, -6, 6).unwrap().window,
    ];
    for w in &windows {
        let (lo, hi) = w.bounds();
        for m in lo..hi {
            for n in m + 1..=hi.min(m + 3) {
                let mut prod = edge_matrix_any(w, m + 1).unwrap();
                for k in m + 2..=n {
                    prod = edge_matrix_any(w, k).unwrap().mul(&prod).unwrap();
                }
                for u in 0..prod.cols() {
                    for v in 0..prod.rows() {
                        let count = finite_paths_idx(w, m, n, Some(u), Some(v)).unwrap().len();
                        assert_eq!(prod.get(v, u), &BigInt::from(count), "({m}, {n}] {u} → {v}");
                    }
                }
            }
        }
    }
}

/// A surface generator whose `≤_s` order is reversed in every fibre of
/// one level (`Some(n)`) or of all levels (`None`).
struct ReversedS(SurfaceGenerator, Option<i64>);

impl LevelGenerator for ReversedS {
    fn level(&self, n: i64) -> Result<Level> {
        self.0.level(n)
    }

    fn edges(&self, n: i64) -> Result<Vec<Edge>> {
        let mut edges = self.0.edges(n)?;
        if self.1.is_some_and(|k| k != n) {
            return Ok(edges);
        }
        let sources: BTreeSet<String> = edges.iter().map(|e| e.source.clone()).collect();
        for src in sources {
            let fibre: Vec<usize> = (0..edges.len()).filter(|&i| edges[i].source == src).collect();
            let top = fibre.len() - 1;
            for i in fibre {
                edges[i].s_rank = top - edges[i].s_rank;
            }
        }
        Ok(edges)
    }
}

fn reversed(t: &TripleData, scope: Option<i64>) -> SurfaceDiagram {
    let mut sd = build(t, -8, 8).unwrap();
    let gen = Arc::new(ReversedS(SurfaceGenerator::new(t.clone()), scope));
    let mut w = DiagramWindow::from_generator(gen, -8, 8).unwrap();
    w.scan_limit = sd.window.scan_limit;
    sd.window = w;
    sd
}

/// Negative control: reversing `≤_s` on a single level breaks flatness,
/// and the checks must see singular paths.
#[test]
fn single_level_s_reversal_is_not_flat() {
    let t = fixtures::hyper_triple().unwrap();
    let good = build(&t, -8, 8).unwrap();
    assert!(verify_flatness(&good, 6).unwrap().flat());
    for level in [-2, 1, 3] {
        let sd = reversed(&t, Some(level));
        let sigma = sigma_scan(&sd.window, 6).unwrap();
        assert!(!sigma.singular.is_empty(), "reversal at level {level} produced no singular paths");
        assert!(!verify_flatness(&sd, 6).unwrap().flat());
    }
}

/// Negative control: reversing `≤_s` everywhere is a mirror image and stays
/// flat, but the s-minimal class no longer sits on the first top symbol.
#[test]
fn global_s_reversal_moves_the_s_extreme_classes() {
    let t = fixtures::hyper_triple().unwrap();
    let sd = reversed(&t, None);
    assert!(sigma_scan(&sd.window, 6).unwrap().singular.is_empty());
    assert!(!s_extreme_classes(&sd, 6).unwrap().all_certified());
    assert!(!verify_standard(&sd, 6).unwrap().all_certified());
}
