//! Rauzy–Veech induction ℛ and its inverse, RH induction 𝒫, with their
//! unimodular matrices Θ and Ψ, renormalisation, Rauzy graphs, the
//! invariant-density identity and winner-frequency certificates.

use std::collections::{BTreeMap, HashMap, VecDeque};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{BsurfError, Result};
use crate::iet_zip::{in_cone, PermutationPair, TripleData};
use crate::matrix::IntMatrix;
use crate::rat::{self, Q};

/// Which induction produced a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Direction {
    RV,
    RH,
}

/// Renormalisation side: `Plus` uses 𝒫 (fixes |h|₁), `Minus` uses ℛ (fixes |λ|₁).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Side {
    Plus,
    Minus,
}

/// One logged induction step.
///
/// For RV steps `winner`/`loser` are α(ε)/α(1−ε) of the λ-type. For RH
/// steps `winner` is the τ-winner α(1−ε) and `loser` is β(ε), the symbol
/// whose height is reduced and which moves to the end of row ε.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InductionStep {
    pub direction: Direction,
    pub ty: usize,
    pub winner: usize,
    pub loser: usize,
    /// Θ for RV steps, Ψ for RH steps.
    pub matrix: IntMatrix,
    pub before: TripleData,
    pub after: TripleData,
}

impl InductionStep {
    pub fn winner_symbol(&self) -> &str {
        self.before.perm.symbol(self.winner)
    }

    pub fn loser_symbol(&self) -> &str {
        self.before.perm.symbol(self.loser)
    }
}

impl Serialize for InductionStep {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("InductionStep", 7)?;
        st.serialize_field("direction", &self.direction)?;
        st.serialize_field("type", &self.ty)?;
        st.serialize_field("winner", self.winner_symbol())?;
        st.serialize_field("loser", self.loser_symbol())?;
        st.serialize_field("matrix", &self.matrix)?;
        st.serialize_field("before", &self.before)?;
        st.serialize_field("after", &self.after)?;
        st.end()
    }
}

/// λ-type: 0 if `λ_{α(0)} > λ_{α(1)}`, 1 if smaller; equal is an error.
pub fn lambda_type(perm: &PermutationPair, lambda: &[Q]) -> Result<usize> {
    let (a0, a1) = (perm.alpha(0), perm.alpha(1));
    match lambda[a0].cmp(&lambda[a1]) {
        std::cmp::Ordering::Greater => Ok(0),
        std::cmp::Ordering::Less => Ok(1),
        std::cmp::Ordering::Equal => Err(BsurfError::KeaneHypothesis(format!(
            "lambda_{} = lambda_{} = {}",
            perm.symbol(a0),
            perm.symbol(a1),
            lambda[a0]
        ))),
    }
}

/// τ-type: 0 if `Σ τ_α > 0`, 1 if negative; zero is an error.
pub fn tau_type(_perm: &PermutationPair, tau: &[Q]) -> Result<usize> {
    let s = rat::sum(tau);
    if s.is_positive() {
        Ok(0)
    } else if s.is_negative() {
        Ok(1)
    } else {
        Err(BsurfError::RhHypothesis("sum of tau is 0".into()))
    }
}

fn move_after(row: &[usize], mover: usize, anchor: usize) -> Vec<usize> {
    let mut out: Vec<usize> = row.iter().copied().filter(|&x| x != mover).collect();
    let p = out.iter().position(|&x| x == anchor).expect("anchor present");
    out.insert(p + 1, mover);
    out
}

fn move_to_end(row: &[usize], mover: usize) -> Vec<usize> {
    let mut out: Vec<usize> = row.iter().copied().filter(|&x| x != mover).collect();
    out.push(mover);
    out
}

/// Permutation after an RV step of type `ty`: the loser α(1−ε) moves, in
/// row 1−ε, to the slot right after the winner α(ε).
pub fn rv_perm(perm: &PermutationPair, ty: usize) -> PermutationPair {
    let (w, l) = (perm.alpha(ty), perm.alpha(1 - ty));
    let mut rows = [perm.row(0).to_vec(), perm.row(1).to_vec()];
    rows[1 - ty] = move_after(&rows[1 - ty], l, w);
    let [top, bottom] = rows;
    perm.with_rows(top, bottom)
}

/// Permutation after an RH step of τ-type `ty`: β(ε) moves to the end of row ε.
pub fn rh_perm(perm: &PermutationPair, ty: usize) -> Result<PermutationPair> {
    let b = perm.beta(ty)?;
    let mut rows = [perm.row(0).to_vec(), perm.row(1).to_vec()];
    rows[ty] = move_to_end(&rows[ty], b);
    let [top, bottom] = rows;
    Ok(perm.with_rows(top, bottom))
}

fn elementary(d: usize, row: usize, col: usize) -> IntMatrix {
    let mut m = IntMatrix::identity(d);
    m.set(row, col, BigInt::one());
    m
}

/// One Rauzy–Veech step: λ' = Θ⁻ᵀλ, τ' = Θ⁻ᵀτ.
pub fn rv_step(t: &TripleData) -> Result<InductionStep> {
    let ty = lambda_type(&t.perm, &t.lambda)?;
    let (w, l) = (t.perm.alpha(ty), t.perm.alpha(1 - ty));
    let perm = rv_perm(&t.perm, ty);
    let mut lambda = t.lambda.clone();
    let mut tau = t.tau.clone();
    lambda[w] = &lambda[w] - &t.lambda[l];
    tau[w] = &tau[w] - &t.tau[l];
    let after = TripleData::new(perm, lambda, tau)?;
    Ok(InductionStep {
        direction: Direction::RV,
        ty,
        winner: w,
        loser: l,
        matrix: elementary(t.d(), l, w),
        before: t.clone(),
        after,
    })
}

/// One RH step: λ' = Ψλ, τ' = Ψτ, h' = Ψ⁻ᵀh.
pub fn rh_step(t: &TripleData) -> Result<InductionStep> {
    let ty = tau_type(&t.perm, &t.tau)?;
    let w = t.perm.alpha(1 - ty);
    let b = t.perm.beta(ty)?;
    let perm = rh_perm(&t.perm, ty)?;
    let mut lambda = t.lambda.clone();
    let mut tau = t.tau.clone();
    lambda[w] = &lambda[w] + &t.lambda[b];
    tau[w] = &tau[w] + &t.tau[b];
    let after = TripleData::new(perm, lambda, tau)?;
    Ok(InductionStep {
        direction: Direction::RH,
        ty,
        winner: w,
        loser: b,
        matrix: elementary(t.d(), w, b),
        before: t.clone(),
        after,
    })
}

/// Applies `steps` consecutive steps in one direction.
pub fn run(t: &TripleData, direction: Direction, steps: usize) -> Result<Vec<InductionStep>> {
    let mut out = Vec::with_capacity(steps);
    let mut cur = t.clone();
    for _ in 0..steps {
        let s = match direction {
            Direction::RV => rv_step(&cur)?,
            Direction::RH => rh_step(&cur)?,
        };
        cur = s.after.clone();
        out.push(s);
    }
    Ok(out)
}

fn rescale(t: &TripleData, lam: &Q, tau: &Q) -> Result<TripleData> {
    TripleData::new(t.perm.clone(), rat::scale(&t.lambda, lam), rat::scale(&t.tau, tau))
}

/// Renormalised step. `Plus`: scale `s = 1 − h_w/|h|₁` with `w` the
/// τ-winner, rescale `(sλ, τ/s)` then apply 𝒫, so `|h'|₁ = |h|₁`.
/// `Minus`: scale `s = 1 − λ_l/|λ|₁` with `l = α(1−ε)` the λ-loser,
/// rescale `(λ/s, sτ)` then apply ℛ, so `|λ'|₁ = |λ|₁`.
/// The returned step's `before` is the rescaled triple.
pub fn renorm_step(t: &TripleData, side: Side) -> Result<(InductionStep, Q)> {
    match side {
        Side::Plus => {
            let ty = tau_type(&t.perm, &t.tau)?;
            let w = t.perm.alpha(1 - ty);
            let s = Q::one() - &t.h[w] / t.h_norm();
            let scaled = rescale(t, &s, &s.recip())?;
            Ok((rh_step(&scaled)?, s))
        }
        Side::Minus => {
            let ty = lambda_type(&t.perm, &t.lambda)?;
            let l = t.perm.alpha(1 - ty);
            let s = Q::one() - &t.lambda[l] / t.lambda_norm();
            let scaled = rescale(t, &s.recip(), &s)?;
            Ok((rv_step(&scaled)?, s))
        }
    }
}

/// Class graph under both RV types.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RauzyGraph {
    /// Canonical representatives (top row in alphabet order).
    pub nodes: Vec<PermutationPair>,
    /// `(from, to, type)` triples, two per node.
    pub edges: Vec<(usize, usize, usize)>,
}

impl RauzyGraph {
    pub fn in_degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.1 == v).count()
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.0 == v).count()
    }

    /// Graphviz text; nodes in discovery order, labels are the permutation.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph rauzy {\n  node [shape=box];\n");
        for (i, p) in self.nodes.iter().enumerate() {
            s.push_str(&format!("  n{i} [label=\"{p}\"];\n"));
        }
        for (a, b, t) in &self.edges {
            s.push_str(&format!("  n{a} -> n{b} [label=\"{t}\"];\n"));
        }
        s.push_str("}\n");
        s
    }
}

/// Breadth-first closure of the class of `perm` under both RV types,
/// identifying permutations with equal monodromy `π₁∘π₀⁻¹`.
pub fn rauzy_graph(perm: &PermutationPair) -> Result<RauzyGraph> {
    if !perm.is_irreducible() {
        return Err(BsurfError::Reducible(perm.to_string()));
    }
    let root = perm.canonical();
    let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut nodes = vec![root.clone()];
    index.insert(root.monodromy(), 0);
    let mut queue = VecDeque::from([0usize]);
    let mut edges = Vec::new();
    while let Some(i) = queue.pop_front() {
        for ty in 0..2 {
            let next = rv_perm(&nodes[i], ty).canonical();
            let key = next.monodromy();
            let j = match index.get(&key) {
                Some(&j) => j,
                None => {
                    nodes.push(next);
                    index.insert(key, nodes.len() - 1);
                    queue.push_back(nodes.len() - 1);
                    nodes.len() - 1
                }
            };
            edges.push((i, j, ty));
        }
    }
    Ok(RauzyGraph { nodes, edges })
}

/// The two preimages `h^ε` of a normalised `h` under the RH
/// renormalisation map, indexed by τ-type ε.
pub fn density_preimage(perm: &PermutationPair, h: &[Q], eps: usize) -> Vec<Q> {
    let (ae, ao) = (perm.alpha(eps), perm.alpha(1 - eps));
    let denom = Q::one() + &h[ao];
    (0..h.len())
        .map(|a| {
            if a == ae {
                (&h[ae] + &h[ao]) / &denom
            } else {
                &h[a] / &denom
            }
        })
        .collect()
}

/// Closed form `(1 + h_{α(1−ε)})^{−d}` of the simplex Jacobian of `h ↦ h^ε`.
pub fn density_jacobian_closed(perm: &PermutationPair, h: &[Q], eps: usize) -> Q {
    let c = Q::one() + &h[perm.alpha(1 - eps)];
    num_traits::pow(c, h.len()).recip()
}

/// Analytic partial derivatives `∂h^ε_α/∂h_β` of the preimage map on the
/// ambient space (row α, column β), with the correct sign
/// `(1 − h_{α(ε)})/(1 + h_{α(1−ε)})²` in the `(α(ε), α(1−ε))` entry.
pub fn density_partials(perm: &PermutationPair, h: &[Q], eps: usize) -> Vec<Vec<Q>> {
    let d = h.len();
    let (ae, ao) = (perm.alpha(eps), perm.alpha(1 - eps));
    let c = Q::one() + &h[ao];
    let c2 = &c * &c;
    let mut j = vec![vec![Q::zero(); d]; d];
    for a in 0..d {
        for b in 0..d {
            j[a][b] = if a != ae {
                let diag = if a == b { c.clone() } else { Q::zero() };
                let off = if b == ao { h[a].clone() } else { Q::zero() };
                (diag - off) / &c2
            } else if b == ae {
                c.recip()
            } else if b == ao {
                (Q::one() - &h[ae]) / &c2
            } else {
                Q::zero()
            };
        }
    }
    j
}

/// Determinant of a rational square matrix by Gaussian elimination.
pub fn det_q(m: &[Vec<Q>]) -> Q {
    let n = m.len();
    let mut a: Vec<Vec<Q>> = m.to_vec();
    let mut det = Q::one();
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| !a[i][k].is_zero()) else {
            return Q::zero();
        };
        if p != k {
            a.swap(p, k);
            det = -det;
        }
        let piv = a[k][k].clone();
        det *= &piv;
        for i in k + 1..n {
            if a[i][k].is_zero() {
                continue;
            }
            let f = &a[i][k] / &piv;
            for j in k..n {
                let v = &a[k][j] * &f;
                a[i][j] -= v;
            }
        }
    }
    det
}

/// Jacobian of a simplex-preserving map in the chart that drops coordinate
/// `k`: minor of `J_{αβ} − J_{αk}` over `α, β ≠ k`.
pub fn simplex_chart_det(j: &[Vec<Q>], k: usize) -> Q {
    let d = j.len();
    let idx: Vec<usize> = (0..d).filter(|&i| i != k).collect();
    let minor: Vec<Vec<Q>> = idx
        .iter()
        .map(|&a| idx.iter().map(|&b| &j[a][b] - &j[a][k]).collect())
        .collect();
    det_q(&minor)
}

/// `𝒟(h) = Π_α h_α^{-1}`.
pub fn density(h: &[Q]) -> Q {
    h.iter().fold(Q::one(), |acc, x| acc * x).recip()
}

/// Evaluation of the density identity at one point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityPoint {
    pub h: Vec<Q>,
    pub preimages: [Vec<Q>; 2],
    pub jacobians: [Q; 2],
    pub lhs: Q,
    pub rhs: Q,
}

impl DensityPoint {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs
    }
}

/// Evaluates `𝒟∘ℱ₀|𝒥₀| + 𝒟∘ℱ₁|𝒥₁|` and `𝒟` at `h`.
pub fn density_point(perm: &PermutationPair, h: &[Q]) -> Result<DensityPoint> {
    if h.len() != perm.d() {
        return Err(BsurfError::DimensionMismatch("h has the wrong length".into()));
    }
    if h.iter().any(|x| !x.is_positive()) {
        return Err(BsurfError::Invalid("h must be strictly positive".into()));
    }
    if rat::sum(h) != Q::one() {
        return Err(BsurfError::Invalid("h must satisfy |h|_1 = 1".into()));
    }
    let pre = [density_preimage(perm, h, 0), density_preimage(perm, h, 1)];
    let jac = [
        density_jacobian_closed(perm, h, 0),
        density_jacobian_closed(perm, h, 1),
    ];
    let lhs = density(&pre[0]) * &jac[0] + density(&pre[1]) * &jac[1];
    Ok(DensityPoint {
        h: h.to_vec(),
        preimages: pre,
        jacobians: jac,
        lhs,
        rhs: density(h),
    })
}

/// Uniform-ish random point of the open simplex with rational coordinates.
pub fn random_simplex_point<R: Rng>(rng: &mut R, d: usize) -> Vec<Q> {
    let xs: Vec<BigInt> = (0..d).map(|_| BigInt::from(rng.gen_range(1u64..=1u64 << 40))).collect();
    let total: BigInt = xs.iter().sum();
    xs.into_iter().map(|x| Q::new(x, total.clone())).collect()
}

/// Summary of [`density_identity_check`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DensityReport {
    pub samples: usize,
    pub seed: u64,
    /// Points where the identity holds exactly.
    pub holds: usize,
    /// Points where both preimages have `|h^ε|₁ = 1`.
    pub normalized: usize,
    /// Points where the closed-form Jacobians equal the chart determinant
    /// of the partials matrix.
    pub jacobian_matches: usize,
    pub jacobian_checked: usize,
    pub first_failure: Option<String>,
}

impl DensityReport {
    pub fn all_hold(&self) -> bool {
        self.holds == self.samples
            && self.normalized == self.samples
            && self.jacobian_matches == self.jacobian_checked
    }
}

/// Checks the density identity at `samples` seeded rational points of the
/// simplex; the Jacobian closed form is compared with a determinant of the
/// partials at the first `jacobian_samples` points.
pub fn density_identity_check(
    perm: &PermutationPair,
    samples: usize,
    jacobian_samples: usize,
    seed: u64,
) -> Result<DensityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = perm.d();
    let mut rep = DensityReport {
        samples,
        seed,
        holds: 0,
        normalized: 0,
        jacobian_matches: 0,
        jacobian_checked: 0,
        first_failure: None,
    };
    for i in 0..samples {
        let h = random_simplex_point(&mut rng, d);
        let pt = density_point(perm, &h)?;
        if pt.holds() {
            rep.holds += 1;
        } else if rep.first_failure.is_none() {
            rep.first_failure = Some(format!("identity fails at sample {i}"));
        }
        if pt.preimages.iter().all(|p| rat::sum(p) == Q::one()) {
            rep.normalized += 1;
        }
        if i < jacobian_samples {
            rep.jacobian_checked += 1;
            let ok = (0..2).all(|eps| {
                let j = density_partials(perm, &h, eps);
                simplex_chart_det(&j, 0) == pt.jacobians[eps]
            });
            if ok {
                rep.jacobian_matches += 1;
            } else if rep.first_failure.is_none() {
                rep.first_failure = Some(format!("Jacobian mismatch at sample {i}"));
            }
        }
    }
    Ok(rep)
}

/// The RH renormalisation acting on heights alone for a given τ-type:
/// `h'_{β(ε)} = h_{β(ε)} − h_{α(1−ε)}`, then divide by `1 − h_{α(1−ε)}/|h|₁`.
pub fn rh_height_map(perm: &PermutationPair, h: &[Q], ty: usize) -> Result<(PermutationPair, Vec<Q>)> {
    let w = perm.alpha(1 - ty);
    let b = perm.beta(ty)?;
    let mut out = h.to_vec();
    out[b] = &h[b] - &h[w];
    let s = Q::one() - &h[w] / rat::sum(h);
    let out = out.into_iter().map(|x| x / &s).collect();
    Ok((rh_perm(perm, ty)?, out))
}

/// Winner-frequency certificate over finite runs in both directions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CompletenessReport {
    pub depth: usize,
    pub rh_steps: usize,
    pub rv_steps: usize,
    pub rh_failure: Option<(usize, String)>,
    pub rv_failure: Option<(usize, String)>,
    /// τ-winner counts per symbol over the RH run.
    pub tau_winners: BTreeMap<String, usize>,
    /// λ-winner counts per symbol over the RV run.
    pub lambda_winners: BTreeMap<String, usize>,
    /// Every symbol was a τ-winner and the RH run reached full depth.
    pub rh_complete: bool,
    /// Every symbol was a λ-winner and the RV run reached full depth.
    pub keane: bool,
}

/// Runs `depth` RH steps and `depth` RV steps, recording winners.
pub fn completeness_check(t: &TripleData, depth: usize) -> CompletenessReport {
    let syms = t.perm.alphabet().symbols();
    let mut tau_w: BTreeMap<String, usize> = syms.iter().map(|s| (s.clone(), 0)).collect();
    let mut lam_w = tau_w.clone();
    let mut rh_failure = None;
    let mut rv_failure = None;
    let mut cur = t.clone();
    let mut rh_steps = 0;
    for k in 0..depth {
        match rh_step(&cur) {
            Ok(s) => {
                *tau_w.get_mut(s.winner_symbol()).expect("symbol") += 1;
                cur = s.after;
                rh_steps += 1;
            }
            Err(e) => {
                rh_failure = Some((k + 1, e.to_string()));
                break;
            }
        }
    }
    let mut cur = t.clone();
    let mut rv_steps = 0;
    for k in 0..depth {
        match rv_step(&cur) {
            Ok(s) => {
                *lam_w.get_mut(s.winner_symbol()).expect("symbol") += 1;
                cur = s.after;
                rv_steps += 1;
            }
            Err(e) => {
                rv_failure = Some((k + 1, e.to_string()));
                break;
            }
        }
    }
    let all = |m: &BTreeMap<String, usize>| m.values().all(|&c| c > 0);
    CompletenessReport {
        depth,
        rh_steps,
        rv_steps,
        rh_complete: rh_failure.is_none() && (depth == 0 || all(&tau_w)),
        keane: rv_failure.is_none() && (depth == 0 || all(&lam_w)),
        rh_failure,
        rv_failure,
        tau_winners: tau_w,
        lambda_winners: lam_w,
    }
}

/// Random rational `(λ, τ)` for `perm`: λ with `bits`-bit denominators,
/// τ = (π₁ − π₀ positions) plus noise in (−1/2, 1/2), resampled until in T⁺.
pub fn random_triple<R: Rng>(perm: &PermutationPair, rng: &mut R, bits: u32) -> Result<TripleData> {
    let d = perm.d();
    let denom = BigInt::one() << bits;
    let rand_big = |rng: &mut R| -> BigInt {
        let words = bits.div_ceil(64) as usize;
        let mut x = BigInt::zero();
        for _ in 0..words {
            x = (x << 64) + BigInt::from(rng.gen::<u64>());
        }
        x % &denom
    };
    let lambda: Vec<Q> = (0..d)
        .map(|_| Q::new(rand_big(rng) + BigInt::one(), denom.clone()))
        .collect();
    let base: Vec<Q> = (0..d)
        .map(|a| rat::qi(perm.pos(1, a) as i64 - perm.pos(0, a) as i64))
        .collect();
    for _ in 0..1000 {
        let tau: Vec<Q> = base
            .iter()
            .map(|b| b + Q::new(rand_big(rng), denom.clone()) - rat::q(1, 2))
            .collect();
        if in_cone(perm, &tau) && !rat::sum(&tau).is_zero() {
            return TripleData::new(perm.clone(), lambda, tau);
        }
    }
    Err(BsurfError::Invalid(format!("could not sample tau in T+ for {perm}")))
}

/// Checks `Θ Ω_π Θᵀ = Ω_{π'}` for an RV step.
pub fn symplectic_ok(step: &InductionStep) -> bool {
    use crate::iet_zip::omega;
    let th = &step.matrix;
    let lhs = th
        .mul(&omega(&step.before.perm))
        .and_then(|m| m.mul(&th.transpose()));
    matches!(lhs, Ok(m) if m == omega(&step.after.perm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::q;

    fn hyper() -> PermutationPair {
        PermutationPair::parse("A B C D / D C B A", false).unwrap()
    }

    #[test]
    fn lambda_type_example() {
        let p = hyper();
        let lam = vec![q(1, 2), q(1, 4), q(1, 8), q(1, 8)];
        assert_eq!(lambda_type(&p, &lam).unwrap(), 1);
        let mut eq = lam.clone();
        eq[0] = q(1, 8);
        assert!(matches!(lambda_type(&p, &eq), Err(BsurfError::KeaneHypothesis(_))));
        let swapped = vec![q(1, 8), q(1, 4), q(1, 8), q(1, 2)];
        assert_eq!(lambda_type(&p, &swapped).unwrap(), 0);
    }

    #[test]
    fn tau_type_example() {
        let p = hyper();
        assert_eq!(tau_type(&p, &[q(1, 1), q(-1, 2), q(1, 4), q(-1, 4)]).unwrap(), 0);
        assert!(tau_type(&p, &[q(1, 1), q(-1, 1), q(1, 1), q(-1, 1)]).is_err());
    }

    #[test]
    fn rv_type0_bottom_insertion() {
        let p = hyper();
        let q0 = rv_perm(&p, 0);
        assert_eq!(q0.to_string(), "A B C D / D A C B");
        let q1 = rv_perm(&p, 1);
        assert_eq!(q1.to_string(), "A D B C / D C B A");
    }

    #[test]
    fn inverse_law_small() {
        let t = TripleData::new(
            hyper(),
            vec![q(1, 2), q(1, 3), q(1, 7), q(1, 11)],
            vec![q(1, 1), q(-1, 2), q(1, 4), q(-1, 3)],
        )
        .unwrap();
        let r = rv_step(&t).unwrap();
        assert_eq!(rh_step(&r.after).unwrap().after, t);
        let p = rh_step(&t).unwrap();
        assert_eq!(rv_step(&p.after).unwrap().after, t);
        assert_eq!(p.matrix, rv_step(&p.after).unwrap().matrix.transpose());
        assert!(symplectic_ok(&r));
        assert_eq!(r.after.area(), t.area());
    }

    #[test]
    fn rauzy_classes_d4() {
        let g = rauzy_graph(&hyper()).unwrap();
        assert_eq!(g.nodes.len(), 7);
        assert_eq!(g.edges.len(), 14);
        for v in 0..g.nodes.len() {
            assert_eq!(g.out_degree(v), 2);
            assert_eq!(g.in_degree(v), 2);
        }
        let g2 = rauzy_graph(&PermutationPair::parse("A B C D / D C A B", false).unwrap()).unwrap();
        assert_eq!(g2.nodes.len(), 6);
        let tiny = rauzy_graph(&PermutationPair::parse("A B / B A", true).unwrap()).unwrap();
        assert_eq!(tiny.nodes.len(), 1);
        assert!(tiny.edges.iter().all(|e| e.1 == 0));
    }

    #[test]
    fn density_uniform_point() {
        let p = hyper();
        let h = vec![q(1, 4); 4];
        let pt = density_point(&p, &h).unwrap();
        assert!(pt.holds());
    }
}
