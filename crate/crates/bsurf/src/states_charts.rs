//! States on diagrams, cylinder measures, the order-preserving maps φ and
//! the chart maps ψ.
//!
//! Infinite sums along tails are evaluated exactly: extremal tails
//! telescope (assuming the state tends to zero along the tail, as it does
//! for faithful states on simple diagrams), horizontal and periodic tails
//! are summed as geometric series when the state generator is stationary,
//! and anything else is rejected as an unsupported tail.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use num_integer::Integer;
use num_traits::{Signed, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::core_diagram::{
    compare_paths, finite_paths_idx, successor, DiagramWindow, FinitePath, Order, PathOrder, Step,
    Violation,
};
use crate::error::{BsurfError, Result};
use crate::path_space::{realize, tail_equivalent, PathDescriptor, TailSide, TailSpec};
use crate::rat::{self, Q};

/// Supplies state values for arbitrary levels.
pub trait StateGenerator: Send + Sync {
    /// `(ν_r, ν_s)` on level `n`, indexed like the level's vertices.
    fn nu(&self, n: i64) -> Result<(Vec<Q>, Vec<Q>)>;

    /// `(period P, ρ_r, ρ_s)` when the diagram and state are stationary
    /// with `ν_r(k+P) = ρ_r ν_r(k)` and `ν_s(k+P) = ρ_s ν_s(k)`.
    fn geometric(&self) -> Option<(usize, Q, Q)> {
        None
    }
}

type NuPair = Arc<(Vec<Q>, Vec<Q>)>;

/// A pair `(ν_r, ν_s)` of level-indexed rational vectors.
#[derive(Clone)]
pub struct State {
    levels: BTreeMap<i64, NuPair>,
    generator: Option<Arc<dyn StateGenerator>>,
    cache: Arc<Mutex<HashMap<i64, NuPair>>>,
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("State")
            .field("levels", &self.levels.keys().collect::<Vec<_>>())
            .field("generator", &self.generator.is_some())
            .finish()
    }
}

/// JSON form of one state level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateLevelJson {
    pub index: i64,
    #[serde(with = "rat::serde_qvec")]
    pub nu_r: Vec<Q>,
    #[serde(with = "rat::serde_qvec")]
    pub nu_s: Vec<Q>,
}

/// JSON form of a state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateJson {
    pub levels: Vec<StateLevelJson>,
}

impl State {
    /// Explicit state from `index → (ν_r, ν_s)`.
    pub fn new(levels: BTreeMap<i64, (Vec<Q>, Vec<Q>)>) -> Result<Self> {
        let mut out = BTreeMap::new();
        for (k, (r, s)) in levels {
            if r.len() != s.len() {
                return Err(BsurfError::DimensionMismatch(format!(
                    "level {k}: ν_r has {} entries, ν_s has {}",
                    r.len(),
                    s.len()
                )));
            }
            out.insert(k, Arc::new((r, s)));
        }
        Ok(State {
            levels: out,
            generator: None,
            cache: Arc::default(),
        })
    }

    /// State materialised on `[m, n]` from a generator, which stays
    /// attached for levels outside that range.
    pub fn from_generator(gen: Arc<dyn StateGenerator>, m: i64, n: i64) -> Result<Self> {
        let mut levels = BTreeMap::new();
        for k in m..=n {
            levels.insert(k, gen.nu(k)?);
        }
        let mut st = State::new(levels)?;
        st.generator = Some(gen);
        Ok(st)
    }

    /// Level range of the explicit entries.
    pub fn bounds(&self) -> Option<(i64, i64)> {
        Some((*self.levels.keys().next()?, *self.levels.keys().next_back()?))
    }

    pub fn geometric(&self) -> Option<(usize, Q, Q)> {
        self.generator.as_ref().and_then(|g| g.geometric())
    }

    /// `(ν_r, ν_s)` on level `k`.
    pub fn nu(&self, k: i64) -> Result<NuPair> {
        if let Some(x) = self.levels.get(&k) {
            return Ok(x.clone());
        }
        let gen = self.generator.as_ref().ok_or(BsurfError::OutOfWindow(k))?;
        if let Some(x) = self.cache.lock().expect("state cache").get(&k) {
            return Ok(x.clone());
        }
        let (r, s) = gen.nu(k)?;
        if r.len() != s.len() {
            return Err(BsurfError::DimensionMismatch(format!("generated level {k}")));
        }
        let x = Arc::new((r, s));
        self.cache.lock().expect("state cache").insert(k, x.clone());
        Ok(x)
    }

    pub fn nu_r(&self, k: i64, v: usize) -> Result<Q> {
        self.nu(k)?
            .0
            .get(v)
            .cloned()
            .ok_or_else(|| BsurfError::DimensionMismatch(format!("no ν_r entry {v} on level {k}")))
    }

    pub fn nu_s(&self, k: i64, v: usize) -> Result<Q> {
        self.nu(k)?
            .1
            .get(v)
            .cloned()
            .ok_or_else(|| BsurfError::DimensionMismatch(format!("no ν_s entry {v} on level {k}")))
    }

    pub fn to_json(&self) -> StateJson {
        StateJson {
            levels: self
                .levels
                .iter()
                .map(|(k, x)| StateLevelJson {
                    index: *k,
                    nu_r: x.0.clone(),
                    nu_s: x.1.clone(),
                })
                .collect(),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("state serializes") + "\n"
    }

    pub fn from_json(j: StateJson) -> Result<Self> {
        State::new(j.levels.into_iter().map(|l| (l.index, (l.nu_r, l.nu_s))).collect())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        State::from_json(serde_json::from_str(s)?)
    }
}

/// Result of [`validate_state`].
#[derive(Clone, Debug, Serialize)]
pub struct StateReport {
    pub valid: bool,
    /// All entries strictly positive.
    pub faithful: bool,
    pub violations: Vec<Violation>,
    /// Common value of `Σ_v ν_r(v) ν_s(v)`, when it is level-invariant.
    #[serde(serialize_with = "ser_opt_q")]
    pub invariant: Option<Q>,
}

fn ser_opt_q<S: serde::Serializer>(x: &Option<Q>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(q) => s.serialize_some(&rat::fmt_q(q)),
        None => s.serialize_none(),
    }
}

/// Checks both state equations on every interior level of the window,
/// non-negativity, and level invariance of `Σ_v ν_r(v) ν_s(v)`.
pub fn validate_state(w: &DiagramWindow, st: &State) -> Result<StateReport> {
    let (m, n) = w.bounds();
    let mut violations = Vec::new();
    let mut faithful = true;
    let mut values: Vec<(i64, Q)> = Vec::new();
    for k in m..=n {
        let level = w.level(k)?;
        let nu = st.nu(k).map_err(|e| match e {
            BsurfError::OutOfWindow(k) => {
                BsurfError::DimensionMismatch(format!("state does not cover level {k}"))
            }
            e => e,
        })?;
        if nu.0.len() != level.len() {
            return Err(BsurfError::DimensionMismatch(format!(
                "level {k} has {} vertices but the state has {} entries",
                level.len(),
                nu.0.len()
            )));
        }
        for (v, (a, b)) in nu.0.iter().zip(&nu.1).enumerate() {
            if a.is_negative() || b.is_negative() {
                violations.push(Violation {
                    level: k,
                    kind: "negative".into(),
                    detail: format!("vertex {} has a negative entry", level.vertices[v]),
                });
            }
            if a.is_zero() || b.is_zero() {
                faithful = false;
            }
        }
        values.push((k, rat::dot(&nu.0, &nu.1)));
        if k == m {
            continue;
        }
        let prev = st.nu(k - 1)?;
        let es = w.edge_set(k)?;
        for (v, name) in level.vertices.iter().enumerate() {
            let sum: Q = es.into[v].iter().map(|&e| prev.0[es.src[e]].clone()).sum();
            if sum != nu.0[v] {
                violations.push(Violation {
                    level: k,
                    kind: "r equation".into(),
                    detail: format!(
                        "ν_r({name}) = {} but incoming sum is {}",
                        rat::fmt_q(&nu.0[v]),
                        rat::fmt_q(&sum)
                    ),
                });
            }
        }
        let prev_level = w.level(k - 1)?;
        for (v, name) in prev_level.vertices.iter().enumerate() {
            let sum: Q = es.out[v].iter().map(|&e| nu.1[es.rng[e]].clone()).sum();
            if sum != prev.1[v] {
                violations.push(Violation {
                    level: k - 1,
                    kind: "s equation".into(),
                    detail: format!(
                        "ν_s({name}) = {} but outgoing sum is {}",
                        rat::fmt_q(&prev.1[v]),
                        rat::fmt_q(&sum)
                    ),
                });
            }
        }
    }
    let invariant = values.first().map(|x| x.1.clone());
    let mut invariant_ok = true;
    for (k, v) in &values {
        if Some(v) != invariant.as_ref() {
            invariant_ok = false;
            violations.push(Violation {
                level: *k,
                kind: "invariant".into(),
                detail: format!("Σ ν_r ν_s = {}", rat::fmt_q(v)),
            });
        }
    }
    Ok(StateReport {
        valid: violations.is_empty(),
        faithful,
        violations,
        invariant: if invariant_ok { invariant } else { None },
    })
}

/// Which sides of a cylinder are left free.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CylinderSides {
    /// `X⁻_{s(p)} p X⁺_{r(p)}`.
    Both,
    /// `p X⁺_{r(p)}` inside `X⁺_{s(p)}`.
    Right,
    /// `X⁻_{s(p)} p` inside `X⁻_{r(p)}`.
    Left,
}

/// A cylinder set around a finite path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CylinderSet {
    pub path: FinitePath,
    pub sides: CylinderSides,
}

/// `ν_r(s(p)) ν_s(r(p))`, `ν_s(r(p))` or `ν_r(s(p))` depending on the sides.
pub fn cylinder_measure(w: &DiagramWindow, st: &State, c: &CylinderSet) -> Result<Q> {
    w.check_path(&c.path)?;
    let s = w.path_source(&c.path)?;
    let r = w.path_range(&c.path)?;
    let (m, n) = (c.path.start, c.path.end());
    Ok(match c.sides {
        CylinderSides::Both => st.nu_r(m, s)? * st.nu_s(n, r)?,
        CylinderSides::Right => st.nu_s(n, r)?,
        CylinderSides::Left => st.nu_r(m, s)?,
    })
}

/// Vertex index of `x` on level `k` (the range of its edge at level `k`).
pub fn vertex_at(w: &DiagramWindow, x: &PathDescriptor, k: i64) -> Result<usize> {
    let e = realize(w, x, k, k)?[0];
    Ok(w.edge_set(k)?.rng[e])
}

/// `Σ_{e' <_s e} ν_s(r(e'))` over the s-fiber of `e` at level `k`.
fn s_below(w: &DiagramWindow, st: &State, k: i64, e: usize) -> Result<Q> {
    let es = w.edge_set(k)?;
    let mut total = Q::zero();
    for &f in &es.out[es.src[e]] {
        if f == e {
            break;
        }
        total += st.nu_s(k, es.rng[f])?;
    }
    Ok(total)
}

/// `Σ_{e' <_r e} ν_r(s(e'))` over the r-fiber of `e` at level `k`.
fn r_below(w: &DiagramWindow, st: &State, k: i64, e: usize) -> Result<Q> {
    let es = w.edge_set(k)?;
    let mut total = Q::zero();
    for &f in &es.into[es.rng[e]] {
        if f == e {
            break;
        }
        total += st.nu_r(k - 1, es.src[f])?;
    }
    Ok(total)
}

fn cycle_len(t: &TailSpec) -> usize {
    match t {
        TailSpec::PeriodicExplicit { cycle } => cycle.len().max(1),
        _ => 1,
    }
}

/// Geometric-series evaluation of a non-extremal tail; `blocks` yields the
/// sums of two consecutive blocks of `b` levels moving away from the core.
fn geometric_tail<F>(st: &State, tail: &TailSpec, use_r: bool, block_sum: F) -> Result<Q>
where
    F: Fn(usize, usize) -> Result<Q>,
{
    let (period, rho_r, rho_s) = st.geometric().ok_or_else(|| {
        BsurfError::UnsupportedTail(format!("{tail} tail needs a stationary state"))
    })?;
    let b = period.lcm(&cycle_len(tail));
    let blocks = (b / period) as i64;
    let ratio = if use_r {
        rat::one() / pow_q(&rho_r, blocks)
    } else {
        pow_q(&rho_s, blocks)
    };
    if ratio.is_negative() || ratio >= rat::one() {
        return Err(BsurfError::UnsupportedTail(format!(
            "{tail} tail: series ratio {} does not converge",
            rat::fmt_q(&ratio)
        )));
    }
    let s0 = block_sum(0, b)?;
    let s1 = block_sum(b, b)?;
    if s1 != &s0 * &ratio {
        return Err(BsurfError::UnsupportedTail(format!(
            "{tail} tail is not eventually geometric"
        )));
    }
    Ok(s0 / (rat::one() - ratio))
}

fn pow_q(x: &Q, e: i64) -> Q {
    let mut out = rat::one();
    for _ in 0..e {
        out *= x;
    }
    out
}

/// Sum over levels `> after` (with `after ≥ c1`) of the right tail.
fn right_tail_phi(w: &DiagramWindow, st: &State, x: &PathDescriptor, after: i64) -> Result<Q> {
    match &x.right {
        TailSpec::SMin => Ok(Q::zero()),
        TailSpec::SMax => st.nu_s(after, vertex_at(w, x, after)?),
        TailSpec::HorizontalConstant { .. } | TailSpec::PeriodicExplicit { .. } => {
            geometric_tail(st, &x.right, false, |off, len| {
                let lo = after + 1 + off as i64;
                let edges = realize(w, x, lo, lo + len as i64 - 1)?;
                let mut s = Q::zero();
                for (i, &e) in edges.iter().enumerate() {
                    s += s_below(w, st, lo + i as i64, e)?;
                }
                Ok(s)
            })
        }
        TailSpec::Unknown => Err(BsurfError::InsufficientDepth(
            "right tail has no finite description".into(),
        )),
        t => Err(BsurfError::InvalidDescriptor(format!("{t} is not a right-tail kind"))),
    }
}

/// Sum over levels `≤ upto` (with `upto ≤ c0`) of the left tail.
fn left_tail_phi(w: &DiagramWindow, st: &State, x: &PathDescriptor, upto: i64) -> Result<Q> {
    match &x.left {
        TailSpec::RMin => Ok(Q::zero()),
        TailSpec::RMax => st.nu_r(upto, vertex_at(w, x, upto)?),
        TailSpec::HorizontalConstant { .. } | TailSpec::PeriodicExplicit { .. } => {
            geometric_tail(st, &x.left, true, |off, len| {
                let hi = upto - off as i64;
                let lo = hi - len as i64 + 1;
                let edges = realize(w, x, lo, hi)?;
                let mut s = Q::zero();
                for (i, &e) in edges.iter().enumerate() {
                    s += r_below(w, st, lo + i as i64, e)?;
                }
                Ok(s)
            })
        }
        TailSpec::Unknown => Err(BsurfError::InsufficientDepth(
            "left tail has no finite description".into(),
        )),
        t => Err(BsurfError::InvalidDescriptor(format!("{t} is not a left-tail kind"))),
    }
}

/// `φ^v_s(x_{(n,∞)})` where `v` is the vertex of `x` on level `n`:
/// `Σ_{k>n} Σ_{e <_s x_k} ν_s(r(e))`.
pub fn phi_plus(w: &DiagramWindow, st: &State, x: &PathDescriptor, n: i64) -> Result<Q> {
    let c1 = x.core.end();
    let mut total = Q::zero();
    if n < c1 {
        let edges = realize(w, x, n + 1, c1)?;
        for (i, &e) in edges.iter().enumerate() {
            total += s_below(w, st, n + 1 + i as i64, e)?;
        }
    }
    Ok(total + right_tail_phi(w, st, x, n.max(c1))?)
}

/// `φ^v_r(x_{(−∞,m]})` where `v` is the vertex of `x` on level `m`:
/// `Σ_{k≤m} Σ_{e <_r x_k} ν_r(s(e))`.
pub fn phi_minus(w: &DiagramWindow, st: &State, x: &PathDescriptor, m: i64) -> Result<Q> {
    let c0 = x.core.start;
    let mut total = Q::zero();
    if m > c0 {
        let edges = realize(w, x, c0 + 1, m)?;
        for (i, &e) in edges.iter().enumerate() {
            total += r_below(w, st, c0 + 1 + i as i64, e)?;
        }
    }
    Ok(total + left_tail_phi(w, st, x, m.min(c0))?)
}

/// `φ^x_r(y)` for `y` right-tail equivalent to `x`: the difference
/// `φ_r(y_{(−∞,N]}) − φ_r(x_{(−∞,N]})` at any level `N` beyond which the
/// two paths agree.
pub fn phi_tail(
    w: &DiagramWindow,
    st: &State,
    x: &PathDescriptor,
    y: &PathDescriptor,
    depth: i64,
) -> Result<Q> {
    let n = tail_equivalent(w, x, y, TailSide::Plus, depth)?.ok_or_else(|| {
        BsurfError::NotTailEquivalent(format!("paths still differ beyond level {depth}"))
    })?;
    Ok(phi_minus(w, st, y, n)? - phi_minus(w, st, x, n)?)
}

/// Both sides of the two shift identities for `p = x_{(m,n]}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShiftCheck {
    /// `φ^{s(p)}_r(x_{(−∞,m]})` and `φ^{r(p)}_r(x_{(−∞,n]}) − Σ_{q <_r p} ν_r(s(q))`.
    pub r: (Q, Q),
    /// `φ^{r(p)}_s(x_{(n,∞)})` and `φ^{s(p)}_s(x_{(m,∞)}) − Σ_{q <_s p} ν_s(r(q))`.
    pub s: (Q, Q),
}

impl ShiftCheck {
    pub fn holds(&self) -> bool {
        self.r.0 == self.r.1 && self.s.0 == self.s.1
    }
}

/// `Σ_{q ∈ E_{m,n}, q < p} ν(...)` in the given order (`strict = false`
/// includes `p` itself).
fn sum_below_path(w: &DiagramWindow, st: &State, p: &FinitePath, which: Order, strict: bool) -> Result<Q> {
    let (m, n) = (p.start, p.end());
    let mut total = Q::zero();
    let paths = match which {
        Order::R => finite_paths_idx(w, m, n, None, Some(w.path_range(p)?))?,
        Order::S => finite_paths_idx(w, m, n, Some(w.path_source(p)?), None)?,
    };
    for q in paths {
        let ord = compare_paths(w, &q, p, which)?;
        if ord == PathOrder::Lt || (!strict && ord == PathOrder::Eq) {
            total += match which {
                Order::R => st.nu_r(m, w.path_source(&q)?)?,
                Order::S => st.nu_s(n, w.path_range(&q)?)?,
            };
        }
    }
    Ok(total)
}

/// Evaluates both sides of both shift identities for `p = x_{(m,n]}`.
pub fn phi_shift_check(w: &DiagramWindow, st: &State, x: &PathDescriptor, m: i64, n: i64) -> Result<ShiftCheck> {
    if m >= n {
        return Err(BsurfError::Invalid(format!("need m < n, got [{m}, {n}]")));
    }
    let p = FinitePath::new(m, realize(w, x, m + 1, n)?);
    let r_lhs = phi_minus(w, st, x, m)?;
    let r_rhs = phi_minus(w, st, x, n)? - sum_below_path(w, st, &p, Order::R, true)?;
    let s_lhs = phi_plus(w, st, x, n)?;
    let s_rhs = phi_plus(w, st, x, m)? - sum_below_path(w, st, &p, Order::S, true)?;
    Ok(ShiftCheck {
        r: (r_lhs, r_rhs),
        s: (s_lhs, s_rhs),
    })
}

/// Kind of chart datum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChartFamily {
    /// `(p₁, p₂)` with `p₂` the s-successor of `p₁`.
    SPair,
    /// `(p₁, p₂)` with `p₂` the r-successor of `p₁`.
    RPair,
    /// `(p₁₁, p₁₂, p₂₁, p₂₂)` with s- and r-successor relations.
    Quad,
}

/// Chart datum over a span `(m, n]`. Paths are stored as
/// `[p₁, p₂]` or `[p₁₁, p₁₂, p₂₁, p₂₂]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChartDatum {
    pub family: ChartFamily,
    pub paths: Vec<FinitePath>,
}

/// JSON form of a chart datum (edge ids).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartDatumJson {
    pub family: ChartFamily,
    pub start: i64,
    pub paths: Vec<Vec<String>>,
}

fn succ_of(w: &DiagramWindow, p: &FinitePath, which: Order) -> Result<Option<FinitePath>> {
    successor(w, p, which, Step::Succ)
}

impl ChartDatum {
    /// Validates the successor relations.
    pub fn new(w: &DiagramWindow, family: ChartFamily, paths: Vec<FinitePath>) -> Result<Self> {
        let need = if family == ChartFamily::Quad { 4 } else { 2 };
        if paths.len() != need {
            return Err(BsurfError::Invalid(format!(
                "{family:?} needs {need} paths, got {}",
                paths.len()
            )));
        }
        let (m, n) = (paths[0].start, paths[0].end());
        if m >= n || paths.iter().any(|p| p.start != m || p.end() != n) {
            return Err(BsurfError::Invalid("chart paths must share a non-empty span".into()));
        }
        for p in &paths {
            w.check_path(p)?;
        }
        let is = |p: &FinitePath, which: Order, q: &FinitePath| -> Result<bool> {
            Ok(succ_of(w, p, which)?.as_ref() == Some(q))
        };
        let ok = match family {
            ChartFamily::SPair => is(&paths[0], Order::S, &paths[1])?,
            ChartFamily::RPair => is(&paths[0], Order::R, &paths[1])?,
            ChartFamily::Quad => {
                is(&paths[0], Order::S, &paths[1])?
                    && is(&paths[0], Order::R, &paths[2])?
                    && is(&paths[2], Order::S, &paths[3])?
                    && is(&paths[1], Order::R, &paths[3])?
            }
        };
        if !ok {
            return Err(BsurfError::Invalid(format!(
                "{family:?} paths do not satisfy the successor relations"
            )));
        }
        Ok(ChartDatum { family, paths })
    }

    /// The datum generated by its first path, if the successors exist.
    pub fn generated(w: &DiagramWindow, family: ChartFamily, p: &FinitePath) -> Result<Option<Self>> {
        let paths = match family {
            ChartFamily::SPair => match succ_of(w, p, Order::S)? {
                Some(q) => vec![p.clone(), q],
                None => return Ok(None),
            },
            ChartFamily::RPair => match succ_of(w, p, Order::R)? {
                Some(q) => vec![p.clone(), q],
                None => return Ok(None),
            },
            ChartFamily::Quad => {
                let (Some(p12), Some(p21)) = (succ_of(w, p, Order::S)?, succ_of(w, p, Order::R)?) else {
                    return Ok(None);
                };
                let (Some(a), Some(b)) = (succ_of(w, &p21, Order::S)?, succ_of(w, &p12, Order::R)?) else {
                    return Ok(None);
                };
                if a != b {
                    return Ok(None);
                }
                vec![p.clone(), p12, p21, a]
            }
        };
        Ok(Some(ChartDatum { family, paths }))
    }

    /// `(m, n)`.
    pub fn span(&self) -> (i64, i64) {
        (self.paths[0].start, self.paths[0].end())
    }

    pub fn to_json(&self, w: &DiagramWindow) -> Result<ChartDatumJson> {
        Ok(ChartDatumJson {
            family: self.family,
            start: self.paths[0].start,
            paths: self.paths.iter().map(|p| w.path_ids(p)).collect::<Result<_>>()?,
        })
    }

    pub fn from_json(w: &DiagramWindow, j: &ChartDatumJson) -> Result<Self> {
        let paths = j
            .paths
            .iter()
            .map(|ids| {
                let ids: Vec<&str> = ids.iter().map(String::as_str).collect();
                w.path_from_ids(j.start, &ids)
            })
            .collect::<Result<Vec<_>>>()?;
        ChartDatum::new(w, j.family, paths)
    }
}

/// Every datum of `family` over `(m, n]`, in `≤_s` order of first paths.
pub fn enumerate_charts(w: &DiagramWindow, family: ChartFamily, m: i64, n: i64) -> Result<Vec<ChartDatum>> {
    let mut out = Vec::new();
    for p in finite_paths_idx(w, m, n, None, None)? {
        if let Some(d) = ChartDatum::generated(w, family, &p)? {
            out.push(d);
        }
    }
    Ok(out)
}

/// Whether the part of `x` at levels `≤ m` (`R`) or `> n` (`S`) is the
/// extremal chain of the given kind, checked through `scan_limit` tail levels.
fn part_is_extreme(w: &DiagramWindow, x: &PathDescriptor, order: Order, max: bool, bound: i64) -> Result<bool> {
    let span = w.scan_limit as i64;
    let (lo, hi) = match order {
        Order::R => (bound.min(x.core.start) - span + 1, bound),
        Order::S => (bound + 1, bound.max(x.core.end()) + span),
    };
    let edges = realize(w, x, lo, hi)?;
    for (i, &e) in edges.iter().enumerate() {
        if !w.edge_set(lo + i as i64)?.is_extreme(e, order, max) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Index into `datum.paths` of the branch containing `x`, or `None`.
pub fn chart_branch(w: &DiagramWindow, datum: &ChartDatum, x: &PathDescriptor) -> Result<Option<usize>> {
    let (m, n) = datum.span();
    let mid = realize(w, x, m + 1, n)?;
    let Some(idx) = datum.paths.iter().position(|p| p.edges == mid) else {
        return Ok(None);
    };
    // Excluded points: left exclusion (R order) and right exclusion (S order),
    // given as Some(max) for the extremal kind removed.
    let (left_ex, right_ex) = match datum.family {
        ChartFamily::SPair => (None, Some(idx == 1)),
        ChartFamily::RPair => (Some(idx == 1), None),
        ChartFamily::Quad => (Some(idx >= 2), Some(idx == 1 || idx == 3)),
    };
    if let Some(max) = left_ex {
        if part_is_extreme(w, x, Order::R, max, m)? {
            return Ok(None);
        }
    }
    if let Some(max) = right_ex {
        if part_is_extreme(w, x, Order::S, max, n)? {
            return Ok(None);
        }
    }
    Ok(Some(idx))
}

/// The chart map: one coordinate for pairs, two for quads.
pub fn psi_chart(w: &DiagramWindow, st: &State, datum: &ChartDatum, x: &PathDescriptor) -> Result<Vec<Q>> {
    let idx = chart_branch(w, datum, x)?.ok_or_else(|| {
        BsurfError::OutsideDomain("path is not in the chart domain".into())
    })?;
    let (m, n) = datum.span();
    let p = &datum.paths[0];
    Ok(match datum.family {
        ChartFamily::SPair => {
            let v = phi_plus(w, st, x, n)?;
            if idx == 0 {
                vec![v - st.nu_s(n, w.path_range(p)?)?]
            } else {
                vec![v]
            }
        }
        ChartFamily::RPair => {
            let v = phi_minus(w, st, x, m)?;
            if idx == 0 {
                vec![v - st.nu_r(m, w.path_source(p)?)?]
            } else {
                vec![v]
            }
        }
        ChartFamily::Quad => {
            let mut a = phi_minus(w, st, x, m)?;
            let mut b = phi_plus(w, st, x, n)?;
            if idx <= 1 {
                a -= st.nu_r(m, w.path_source(p)?)?;
            }
            if idx == 0 || idx == 2 {
                b -= st.nu_s(n, w.path_range(p)?)?;
            }
            vec![a, b]
        }
    })
}

/// Alternative expression for pair charts:
/// `φ^{s(p₁)}_s(x_{(m,∞)}) − Σ_{q ≤_s p₁} ν_s(r(q))` for S-pairs and
/// `φ^{r(p₁)}_r(x_{(−∞,n]}) − Σ_{q ≤_r p₁} ν_r(s(q))` for R-pairs.
pub fn psi_pair_alternate(w: &DiagramWindow, st: &State, datum: &ChartDatum, x: &PathDescriptor) -> Result<Q> {
    if chart_branch(w, datum, x)?.is_none() {
        return Err(BsurfError::OutsideDomain("path is not in the chart domain".into()));
    }
    let (m, n) = datum.span();
    let p = &datum.paths[0];
    match datum.family {
        ChartFamily::SPair => Ok(phi_plus(w, st, x, m)? - sum_below_path(w, st, p, Order::S, false)?),
        ChartFamily::RPair => Ok(phi_minus(w, st, x, n)? - sum_below_path(w, st, p, Order::R, false)?),
        ChartFamily::Quad => Err(BsurfError::Invalid("alternate form is for pair charts".into())),
    }
}

/// Draws a random descriptor in the domain of `datum`: a branch path,
/// up to three random edges on each side, and random extremal tails.
pub fn sample_in_chart<R: Rng>(w: &DiagramWindow, datum: &ChartDatum, rng: &mut R) -> Result<Option<PathDescriptor>> {
    for _ in 0..32 {
        let idx = rng.gen_range(0..datum.paths.len());
        let p = &datum.paths[idx];
        let mut edges = p.edges.clone();
        let mut start = p.start;
        let mut v = w.path_source(p)?;
        for _ in 0..rng.gen_range(0..=3) {
            let es = w.edge_set(start)?;
            let fiber = &es.into[v];
            if fiber.is_empty() {
                break;
            }
            let e = fiber[rng.gen_range(0..fiber.len())];
            edges.insert(0, e);
            v = es.src[e];
            start -= 1;
        }
        let mut end = p.end();
        let mut v = w.path_range(p)?;
        for _ in 0..rng.gen_range(0..=3) {
            let es = w.edge_set(end + 1)?;
            let fiber = &es.out[v];
            if fiber.is_empty() {
                break;
            }
            let e = fiber[rng.gen_range(0..fiber.len())];
            edges.push(e);
            v = es.rng[e];
            end += 1;
        }
        let left = if rng.gen_bool(0.5) { TailSpec::RMax } else { TailSpec::RMin };
        let right = if rng.gen_bool(0.5) { TailSpec::SMax } else { TailSpec::SMin };
        let x = PathDescriptor::new(left, FinitePath::new(start, edges), right);
        if chart_branch(w, datum, &x)?.is_some() {
            return Ok(Some(x));
        }
    }
    Ok(None)
}

/// A sampled point where the chart difference changed.
#[derive(Clone, Debug)]
pub struct TransitionViolation {
    pub x: PathDescriptor,
    pub expected: Vec<Q>,
    pub found: Vec<Q>,
}

/// Result of [`chart_transition`].
#[derive(Clone, Debug)]
pub struct TransitionReport {
    /// `ψ^q − ψ^p`, when every sampled overlap point gave the same value.
    pub constant: Option<Vec<Q>>,
    /// Number of sampled points lying in both domains.
    pub samples: usize,
    pub violation: Option<TransitionViolation>,
    /// At least three paths of the smaller span end at `r(p₁)` and start
    /// at `s(p₁)`; without it the overlap case analysis is not exhaustive.
    pub hypothesis_met: bool,
}

impl TransitionReport {
    pub fn is_constant(&self) -> bool {
        self.violation.is_none() && self.constant.is_some()
    }
}

/// Samples points of `V(p) ∩ V(q)` (with `q`'s span containing `p`'s) and
/// checks that `ψ^q − ψ^p` is constant.
pub fn chart_transition(
    w: &DiagramWindow,
    st: &State,
    p: &ChartDatum,
    q: &ChartDatum,
    samples: usize,
    seed: u64,
) -> Result<TransitionReport> {
    if p.family != q.family {
        return Err(BsurfError::Invalid("charts of different families".into()));
    }
    let (pm, pn) = p.span();
    let (qm, qn) = q.span();
    if qm > pm || qn < pn {
        return Err(BsurfError::Invalid(format!(
            "span ({qm}, {qn}] does not contain ({pm}, {pn}]"
        )));
    }
    let p1 = &p.paths[0];
    let into = finite_paths_idx(w, pm, pn, None, Some(w.path_range(p1)?))?.len();
    let from = finite_paths_idx(w, pm, pn, Some(w.path_source(p1)?), None)?.len();
    let hypothesis_met = into >= 3 && from >= 3;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut constant: Option<Vec<Q>> = None;
    let mut count = 0;
    for _ in 0..samples.saturating_mul(40).max(40) {
        if count >= samples {
            break;
        }
        let Some(x) = sample_in_chart(w, q, &mut rng)? else { continue };
        if chart_branch(w, p, &x)?.is_none() {
            continue;
        }
        let a = psi_chart(w, st, q, &x)?;
        let b = psi_chart(w, st, p, &x)?;
        let diff: Vec<Q> = a.iter().zip(&b).map(|(a, b)| a - b).collect();
        count += 1;
        match &constant {
            None => constant = Some(diff),
            Some(c) if *c != diff => {
                return Ok(TransitionReport {
                    constant: None,
                    samples: count,
                    violation: Some(TransitionViolation {
                        x,
                        expected: c.clone(),
                        found: diff,
                    }),
                    hypothesis_met,
                })
            }
            Some(_) => {}
        }
    }
    Ok(TransitionReport {
        constant,
        samples: count,
        violation: None,
        hypothesis_met,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn chamanara_state_is_valid() {
        let w = fixtures::chamanara_window(-3, 3).unwrap();
        let st = fixtures::chamanara_state(-3, 3).unwrap();
        let r = validate_state(&w, &st).unwrap();
        assert!(r.valid && r.faithful);
        assert_eq!(r.invariant, Some(rat::one()));
    }

    #[test]
    fn decimal_phi_example() {
        let w = fixtures::decimal_window(0, 4).unwrap();
        let st = fixtures::decimal_state(0, 4).unwrap();
        let x = PathDescriptor::new(TailSpec::RMin, w.path_from_ids(0, &["2", "5"]).unwrap(), TailSpec::SMin);
        assert_eq!(phi_plus(&w, &st, &x, 0).unwrap(), rat::q(1, 4));
        let top = PathDescriptor::new(TailSpec::RMin, w.path_from_ids(0, &["9"]).unwrap(), TailSpec::SMax);
        assert_eq!(phi_plus(&w, &st, &top, 0).unwrap(), rat::one());
        let per = PathDescriptor::new(TailSpec::RMin, w.path_from_ids(0, &["3"]).unwrap(), TailSpec::periodic(&["3"]));
        assert_eq!(phi_plus(&w, &st, &per, 0).unwrap(), rat::q(1, 3));
    }

    #[test]
    fn cylinder_example() {
        let w = fixtures::chamanara_window(-2, 2).unwrap();
        let st = fixtures::chamanara_state(-2, 2).unwrap();
        let c = CylinderSet {
            path: w.path_from_ids(0, &["0"]).unwrap(),
            sides: CylinderSides::Both,
        };
        assert_eq!(cylinder_measure(&w, &st, &c).unwrap(), rat::q(1, 2));
    }
}
