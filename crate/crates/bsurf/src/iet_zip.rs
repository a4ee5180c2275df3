//! Permutation pairs, the intersection form Ω_π, interval exchanges, the
//! Keane condition at finite depth, the cone T⁺_π and zippered rectangles.

use std::fmt;

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::core_diagram::Alphabet;
use crate::error::{BsurfError, Result};
use crate::matrix::IntMatrix;
use crate::rat::{self, Q};

/// A pair of bijections `π₀, π₁ : 𝒜 → {1..d}` stored as rows of symbol
/// indices (row 0 = top, row 1 = bottom) plus inverse positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationPair {
    alphabet: Alphabet,
    rows: [Vec<usize>; 2],
    pos: [Vec<usize>; 2],
}

impl PermutationPair {
    /// Parses `"A B C D / D C B A"`. The alphabet order is the top-row order.
    /// Sizes below 4 require `allow_small`.
    pub fn parse(spec: &str, allow_small: bool) -> Result<Self> {
        let (top, bottom) = spec
            .split_once('/')
            .ok_or_else(|| BsurfError::Parse(format!("expected \"top / bottom\", got {spec:?}")))?;
        let top: Vec<String> = top.split_whitespace().map(str::to_string).collect();
        let bottom: Vec<String> = bottom.split_whitespace().map(str::to_string).collect();
        let alphabet = Alphabet::new(top.clone())?;
        let b: Vec<usize> = bottom
            .iter()
            .map(|s| {
                alphabet
                    .index_of(s)
                    .ok_or_else(|| BsurfError::Parse(format!("bottom symbol {s:?} not in top row")))
            })
            .collect::<Result<_>>()?;
        let t: Vec<usize> = (0..alphabet.len()).collect();
        Self::from_rows(alphabet, t, b, allow_small)
    }

    /// Builds from explicit rows of symbol indices.
    pub fn from_rows(
        alphabet: Alphabet,
        top: Vec<usize>,
        bottom: Vec<usize>,
        allow_small: bool,
    ) -> Result<Self> {
        let d = alphabet.len();
        if d < 4 && !allow_small {
            return Err(BsurfError::Invalid(format!(
                "alphabet size {d} < 4 (use the small-alphabet override for toy cases)"
            )));
        }
        let mut pos = [vec![usize::MAX; d], vec![usize::MAX; d]];
        for (r, row) in [&top, &bottom].into_iter().enumerate() {
            if row.len() != d {
                return Err(BsurfError::Invalid(format!(
                    "row {r} has {} entries, expected {d}",
                    row.len()
                )));
            }
            for (k, &a) in row.iter().enumerate() {
                if a >= d || pos[r][a] != usize::MAX {
                    return Err(BsurfError::Invalid(format!("row {r} is not a bijection")));
                }
                pos[r][a] = k;
            }
        }
        Ok(PermutationPair {
            alphabet,
            rows: [top, bottom],
            pos,
        })
    }

    pub fn d(&self) -> usize {
        self.alphabet.len()
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn symbol(&self, a: usize) -> &str {
        self.alphabet.symbol(a)
    }

    /// Row `eps` (0 = top, 1 = bottom) as symbol indices.
    pub fn row(&self, eps: usize) -> &[usize] {
        &self.rows[eps]
    }

    /// 0-based position of symbol `a` in row `eps`.
    pub fn pos(&self, eps: usize, a: usize) -> usize {
        self.pos[eps][a]
    }

    /// α(ε): the last symbol of row ε.
    pub fn alpha(&self, eps: usize) -> usize {
        self.rows[eps][self.d() - 1]
    }

    /// β(ε): the symbol following α(1−ε) in row ε.
    pub fn beta(&self, eps: usize) -> Result<usize> {
        let p = self.pos[eps][self.alpha(1 - eps)];
        if p + 1 >= self.d() {
            return Err(BsurfError::BetaUndefined(format!(
                "alpha({}) is last in row {eps} of {self}",
                1 - eps
            )));
        }
        Ok(self.rows[eps][p + 1])
    }

    /// No proper prefix of the top row equals a prefix of the bottom row as a set.
    pub fn is_irreducible(&self) -> bool {
        let d = self.d();
        let mut max_bottom = 0;
        for k in 0..d - 1 {
            max_bottom = max_bottom.max(self.pos[1][self.rows[0][k]]);
            if max_bottom == k {
                return false;
            }
        }
        true
    }

    /// Monodromy key `π₁∘π₀⁻¹`: bottom row written in top positions.
    pub fn monodromy(&self) -> Vec<usize> {
        self.rows[1].iter().map(|&a| self.pos[0][a]).collect()
    }

    /// Relabels so that the top row is the alphabet order; representative
    /// of the class of permutations with the same monodromy.
    pub fn canonical(&self) -> PermutationPair {
        let key = self.monodromy();
        let top: Vec<usize> = (0..self.d()).collect();
        PermutationPair::from_rows(self.alphabet.clone(), top, key, true).expect("valid relabel")
    }

    /// Returns a copy with new rows over the same alphabet.
    pub fn with_rows(&self, top: Vec<usize>, bottom: Vec<usize>) -> PermutationPair {
        PermutationPair::from_rows(self.alphabet.clone(), top, bottom, true).expect("valid rows")
    }
}

impl fmt::Display for PermutationPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = |row: &Vec<usize>| {
            row.iter()
                .map(|&a| self.alphabet.symbol(a).to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        write!(f, "{} / {}", name(&self.rows[0]), name(&self.rows[1]))
    }
}

impl Serialize for PermutationPair {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// The antisymmetric intersection matrix Ω_π (symbol-indexed).
pub fn omega(perm: &PermutationPair) -> IntMatrix {
    let d = perm.d();
    let mut m = IntMatrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            let (t_a, t_b) = (perm.pos(0, a), perm.pos(0, b));
            let (b_a, b_b) = (perm.pos(1, a), perm.pos(1, b));
            if t_a < t_b && b_a > b_b {
                m.set(a, b, 1.into());
            } else if t_a > t_b && b_a < b_b {
                m.set(a, b, (-1).into());
            }
        }
    }
    m
}

/// Genus from `2g = rank Ω_π`.
pub fn genus(perm: &PermutationPair) -> usize {
    omega(perm).rank() / 2
}

/// `h = −Ω_π τ`.
pub fn heights(perm: &PermutationPair, tau: &[Q]) -> Result<Vec<Q>> {
    Ok(omega(perm).mul_vec_q(tau)?.into_iter().map(|x| -x).collect())
}

/// Cone test for T⁺_π: proper top prefixes sum positive, bottom prefixes negative.
pub fn in_cone(perm: &PermutationPair, tau: &[Q]) -> bool {
    cone_violation(perm, tau).is_none()
}

fn cone_violation(perm: &PermutationPair, tau: &[Q]) -> Option<String> {
    let d = perm.d();
    if tau.len() != d {
        return Some(format!("tau has length {}, expected {d}", tau.len()));
    }
    let mut top = Q::zero();
    let mut bottom = Q::zero();
    for k in 0..d - 1 {
        top += &tau[perm.row(0)[k]];
        bottom += &tau[perm.row(1)[k]];
        if !top.is_positive() {
            return Some(format!("top prefix of length {} sums to {top}", k + 1));
        }
        if !bottom.is_negative() {
            return Some(format!("bottom prefix of length {} sums to {bottom}", k + 1));
        }
    }
    None
}

/// Left endpoints of the top intervals `I_α` (symbol-indexed).
pub fn top_endpoints(perm: &PermutationPair, lambda: &[Q]) -> Vec<Q> {
    prefix_starts(perm, 0, lambda)
}

fn prefix_starts(perm: &PermutationPair, eps: usize, v: &[Q]) -> Vec<Q> {
    let mut out = vec![Q::zero(); perm.d()];
    let mut acc = Q::zero();
    for &a in perm.row(eps) {
        out[a] = acc.clone();
        acc += &v[a];
    }
    out
}

/// The interval exchange `f(x) = x + (Ω_π λ)_α` on `I_α`.
pub fn iet_apply(perm: &PermutationPair, lambda: &[Q], x: &Q) -> Result<Q> {
    let offsets = omega(perm).mul_vec_q(lambda)?;
    iet_apply_with(perm, lambda, &offsets, x)
}

fn iet_apply_with(perm: &PermutationPair, lambda: &[Q], offsets: &[Q], x: &Q) -> Result<Q> {
    if x.is_negative() {
        return Err(BsurfError::OutsideDomain(format!("x = {x} < 0")));
    }
    let mut acc = Q::zero();
    for &a in perm.row(0) {
        acc += &lambda[a];
        if x < &acc {
            return Ok(x + &offsets[a]);
        }
    }
    Err(BsurfError::OutsideDomain(format!("x = {x} ≥ |λ| = {acc}")))
}

/// A collision `f^m(u_α) = u_γ` of endpoint orbits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KeaneViolation {
    pub alpha: String,
    pub gamma: String,
    pub m: usize,
}

/// Depth-bounded Keane certificate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KeaneReport {
    pub depth: usize,
    pub certified: bool,
    pub violation: Option<KeaneViolation>,
}

/// Checks `f^m(u_α) ≠ u_γ` for every α, every γ whose interval is not
/// first on top, and `1 ≤ m ≤ depth`. Reports the first collision
/// (smallest m, then α in top order).
pub fn keane_check(perm: &PermutationPair, lambda: &[Q], depth: usize) -> Result<KeaneReport> {
    check_lambda(perm, lambda)?;
    let offsets = omega(perm).mul_vec_q(lambda)?;
    let starts = top_endpoints(perm, lambda);
    let targets: Vec<(usize, &Q)> = perm.row(0)[1..].iter().map(|&g| (g, &starts[g])).collect();
    let mut orbit: Vec<(usize, Q)> = perm.row(0).iter().map(|&a| (a, starts[a].clone())).collect();
    for m in 1..=depth {
        for (a, x) in orbit.iter_mut() {
            *x = iet_apply_with(perm, lambda, &offsets, x)?;
            if let Some((g, _)) = targets.iter().find(|(_, u)| *u == x) {
                return Ok(KeaneReport {
                    depth,
                    certified: false,
                    violation: Some(KeaneViolation {
                        alpha: perm.symbol(*a).to_string(),
                        gamma: perm.symbol(*g).to_string(),
                        m,
                    }),
                });
            }
        }
    }
    Ok(KeaneReport {
        depth,
        certified: true,
        violation: None,
    })
}

fn check_lambda(perm: &PermutationPair, lambda: &[Q]) -> Result<()> {
    if lambda.len() != perm.d() {
        return Err(BsurfError::DimensionMismatch(format!(
            "lambda has length {}, expected {}",
            lambda.len(),
            perm.d()
        )));
    }
    if let Some(a) = (0..perm.d()).find(|&a| !lambda[a].is_positive()) {
        return Err(BsurfError::Invalid(format!(
            "lambda_{} = {} is not positive",
            perm.symbol(a),
            lambda[a]
        )));
    }
    Ok(())
}

/// Zippered-rectangle data `(π, λ, τ)` with derived heights `h = −Ω_π τ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TripleData {
    pub perm: PermutationPair,
    pub lambda: Vec<Q>,
    pub tau: Vec<Q>,
    pub h: Vec<Q>,
}

impl TripleData {
    /// Validates `λ > 0` and `τ ∈ T⁺_π`, then derives `h`.
    pub fn new(perm: PermutationPair, lambda: Vec<Q>, tau: Vec<Q>) -> Result<Self> {
        check_lambda(&perm, &lambda)?;
        if let Some(why) = cone_violation(&perm, &tau) {
            return Err(BsurfError::NotInCone(why));
        }
        let h = heights(&perm, &tau)?;
        Ok(TripleData {
            perm,
            lambda,
            tau,
            h,
        })
    }

    /// Parses the three textual components.
    pub fn parse(pi: &str, lambda: &str, tau: &str, allow_small: bool) -> Result<Self> {
        let perm = PermutationPair::parse(pi, allow_small)?;
        Self::new(perm, rat::parse_q_list(lambda)?, rat::parse_q_list(tau)?)
    }

    pub fn d(&self) -> usize {
        self.perm.d()
    }

    /// Area `λ·h`.
    pub fn area(&self) -> Q {
        rat::dot(&self.lambda, &self.h)
    }

    /// `|λ|₁`.
    pub fn lambda_norm(&self) -> Q {
        rat::sum(&self.lambda)
    }

    /// `|h|₁`.
    pub fn h_norm(&self) -> Q {
        rat::sum(&self.h)
    }
}

impl Serialize for TripleData {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("TripleData", 4)?;
        st.serialize_field("pi", &self.perm.to_string())?;
        st.serialize_field("lambda", &self.lambda.iter().map(rat::fmt_q).collect::<Vec<_>>())?;
        st.serialize_field("tau", &self.tau.iter().map(rat::fmt_q).collect::<Vec<_>>())?;
        st.serialize_field("h", &self.h.iter().map(rat::fmt_q).collect::<Vec<_>>())?;
        st.end()
    }
}

/// Rectangle `R_α^ε`: base `(x0, x1)`, vertical extent `[y0, y1]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Rect {
    pub symbol: String,
    pub eps: usize,
    #[serde(with = "rat::serde_q")]
    pub x0: Q,
    #[serde(with = "rat::serde_q")]
    pub x1: Q,
    #[serde(with = "rat::serde_q")]
    pub y0: Q,
    #[serde(with = "rat::serde_q")]
    pub y1: Q,
}

/// Zipper `Z_α^ε`: vertical segment `{x} × [y0, y1]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Zipper {
    pub symbol: String,
    pub eps: usize,
    #[serde(with = "rat::serde_q")]
    pub x: Q,
    #[serde(with = "rat::serde_q")]
    pub y0: Q,
    #[serde(with = "rat::serde_q")]
    pub y1: Q,
}

/// All rectangles and zippers of a triple.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ZipperedRectangles {
    pub rects: Vec<Rect>,
    pub zippers: Vec<Zipper>,
    #[serde(with = "rat::serde_q")]
    pub area: Q,
}

/// Builds the rectangles and zippers of `(π, λ, τ)` exactly.
pub fn zippered(t: &TripleData) -> Result<ZipperedRectangles> {
    if let Some(why) = cone_violation(&t.perm, &t.tau) {
        return Err(BsurfError::NotInCone(why));
    }
    let perm = &t.perm;
    let mut rects = Vec::new();
    let mut zippers = Vec::new();
    for eps in 0..2 {
        let mut x = Q::zero();
        let mut tau_acc = Q::zero();
        for &a in perm.row(eps) {
            let x1 = &x + &t.lambda[a];
            tau_acc += &t.tau[a];
            let (y0, y1) = if eps == 0 {
                (Q::zero(), t.h[a].clone())
            } else {
                (-t.h[a].clone(), Q::zero())
            };
            rects.push(Rect {
                symbol: perm.symbol(a).to_string(),
                eps,
                x0: x.clone(),
                x1: x1.clone(),
                y0,
                y1,
            });
            let (z0, z1) = if eps == 0 {
                (Q::zero(), tau_acc.clone())
            } else {
                (tau_acc.clone(), Q::zero())
            };
            zippers.push(Zipper {
                symbol: perm.symbol(a).to_string(),
                eps,
                x: x1.clone(),
                y0: z0,
                y1: z1,
            });
            x = x1;
        }
    }
    Ok(ZipperedRectangles {
        rects,
        zippers,
        area: t.area(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::q;

    fn hyper() -> PermutationPair {
        PermutationPair::parse("A B C D / D C B A", false).unwrap()
    }

    #[test]
    fn alpha_beta_and_omega() {
        let p = hyper();
        assert_eq!(p.symbol(p.alpha(0)), "D");
        assert_eq!(p.symbol(p.alpha(1)), "A");
        assert_eq!(p.symbol(p.beta(0).unwrap()), "B");
        assert_eq!(p.symbol(p.beta(1).unwrap()), "C");
        let o = omega(&p);
        for a in 0..4 {
            for b in 0..4 {
                let want = if a < b { 1 } else if a > b { -1 } else { 0 };
                assert_eq!(o.get(a, b), &want.into());
            }
        }
        assert_eq!(o.rank(), 4);
        assert_eq!(genus(&p), 2);
        assert!(p.is_irreducible());
        assert!(!PermutationPair::parse("A B C D / A D C B", false).unwrap().is_irreducible());
        assert!(PermutationPair::parse("A B / B A", false).is_err());
    }

    #[test]
    fn heights_positive_in_cone() {
        let p = hyper();
        let tau = vec![q(1, 1), q(-1, 2), q(1, 4), q(-1, 1)];
        assert!(in_cone(&p, &tau));
        let h = heights(&p, &tau).unwrap();
        assert!(h.iter().all(|x| x.is_positive()));
    }

    #[test]
    fn commensurate_lengths_collide() {
        let p = hyper();
        let lam = vec![q(1, 4); 4];
        let r = keane_check(&p, &lam, 10).unwrap();
        assert!(!r.certified);
        assert!(keane_check(&p, &lam, 0).unwrap().certified);
    }

    #[test]
    fn rectangles_tile() {
        let t = TripleData::new(
            hyper(),
            vec![q(1, 2), q(1, 4), q(1, 8), q(1, 8)],
            vec![q(1, 1), q(-1, 2), q(1, 4), q(-1, 1)],
        )
        .unwrap();
        let z = zippered(&t).unwrap();
        let top_end = z.rects.iter().filter(|r| r.eps == 0).map(|r| r.x1.clone()).max().unwrap();
        assert_eq!(top_end, q(1, 1));
        assert_eq!(z.area, t.area());
    }
}
