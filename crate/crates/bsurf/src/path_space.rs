//! Infinite paths as finite descriptors, the involutions Δ_s and Δ_r,
//! extremal paths, the singular set Σ and tail equivalence.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::core_diagram::{DiagramWindow, EdgeSet, FinitePath, Order, Step};
use crate::error::{BsurfError, Result};

/// How a descriptor continues beyond its core.
///
/// Right tails (levels above the core) accept `SMax`, `SMin`,
/// `HorizontalConstant`, `PeriodicExplicit`; left tails accept `RMax`,
/// `RMin`, `HorizontalConstant`, `PeriodicExplicit`. `Unknown` marks a tail
/// that exists but has no finite description; any question that needs it
/// fails with "insufficient depth".
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum TailSpec {
    SMax,
    SMin,
    RMax,
    RMin,
    HorizontalConstant { symbol: String },
    PeriodicExplicit { cycle: Vec<String> },
    Unknown,
}

impl TailSpec {
    pub fn horizontal(symbol: &str) -> Self {
        TailSpec::HorizontalConstant {
            symbol: symbol.to_string(),
        }
    }

    pub fn periodic(cycle: &[&str]) -> Self {
        TailSpec::PeriodicExplicit {
            cycle: cycle.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn rotated(&self, shift: usize) -> TailSpec {
        match self {
            TailSpec::PeriodicExplicit { cycle } => {
                let mut c = cycle.clone();
                let len = c.len();
                c.rotate_left(shift % len);
                TailSpec::PeriodicExplicit { cycle: c }
            }
            t => t.clone(),
        }
    }
}

impl fmt::Display for TailSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TailSpec::SMax => write!(f, "s-max"),
            TailSpec::SMin => write!(f, "s-min"),
            TailSpec::RMax => write!(f, "r-max"),
            TailSpec::RMin => write!(f, "r-min"),
            TailSpec::HorizontalConstant { symbol } => write!(f, "horiz({symbol})"),
            TailSpec::PeriodicExplicit { cycle } => write!(f, "periodic({})", cycle.join(" ")),
            TailSpec::Unknown => write!(f, "?"),
        }
    }
}

/// An infinite path `(left tail) · core · (right tail)`; the core covers
/// edge levels `core.start+1 ..= core.end()` and is non-empty.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PathDescriptor {
    pub left: TailSpec,
    pub core: FinitePath,
    pub right: TailSpec,
}

impl PathDescriptor {
    pub fn new(left: TailSpec, core: FinitePath, right: TailSpec) -> Self {
        PathDescriptor { left, core, right }
    }

    /// Level range `(c0, c1)` of the core's endpoints.
    pub fn span(&self) -> (i64, i64) {
        (self.core.start, self.core.end())
    }
}

/// JSON form of a descriptor (edge ids instead of indices).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathDescriptorJson {
    pub left: TailSpec,
    pub core: CoreJson,
    pub right: TailSpec,
}

/// JSON form of a core path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoreJson {
    pub start: i64,
    pub edges: Vec<String>,
}

/// Converts a descriptor to its JSON form.
pub fn descriptor_to_json(w: &DiagramWindow, x: &PathDescriptor) -> Result<PathDescriptorJson> {
    Ok(PathDescriptorJson {
        left: x.left.clone(),
        core: CoreJson {
            start: x.core.start,
            edges: w.path_ids(&x.core)?,
        },
        right: x.right.clone(),
    })
}

/// Resolves a JSON descriptor against a window and validates it.
pub fn descriptor_from_json(w: &DiagramWindow, j: &PathDescriptorJson) -> Result<PathDescriptor> {
    let ids: Vec<&str> = j.core.edges.iter().map(String::as_str).collect();
    let core = w.path_from_ids(j.core.start, &ids)?;
    let x = PathDescriptor::new(j.left.clone(), core, j.right.clone());
    validate_descriptor(w, &x)?;
    Ok(x)
}

/// Short label `left·[start: ids]·right`.
pub fn descriptor_label(w: &DiagramWindow, x: &PathDescriptor) -> String {
    format!("{}·{}·{}", x.left, w.path_label(&x.core), x.right)
}

fn depth_err(e: BsurfError) -> BsurfError {
    match e {
        BsurfError::OutOfWindow(k) => {
            BsurfError::InsufficientDepth(format!("level {k} is not available"))
        }
        e => e,
    }
}

/// Edge at level `k` leaving vertex `v` (of `V_{k−1}`) along a right tail
/// attached at core end `c1`.
fn right_step(w: &DiagramWindow, tail: &TailSpec, c1: i64, k: i64, v: usize) -> Result<(usize, Arc<EdgeSet>)> {
    let es = w.edge_set(k).map_err(depth_err)?;
    let fiber = &es.out[v];
    let dead = || BsurfError::InvalidDescriptor(format!("no outgoing edge at level {k}"));
    let e = match tail {
        TailSpec::SMax => *fiber.last().ok_or_else(dead)?,
        TailSpec::SMin => *fiber.first().ok_or_else(dead)?,
        TailSpec::HorizontalConstant { symbol } => {
            let prev = w.level(k - 1).map_err(depth_err)?;
            let cur = w.level(k).map_err(depth_err)?;
            if prev.vertices[v] != *symbol {
                return Err(BsurfError::InvalidDescriptor(format!(
                    "horizontal tail {symbol:?} leaves vertex {:?} at level {}",
                    prev.vertices[v],
                    k - 1
                )));
            }
            let hits: Vec<usize> = fiber
                .iter()
                .copied()
                .filter(|&e| cur.vertices[es.rng[e]] == *symbol)
                .collect();
            if hits.len() != 1 {
                return Err(BsurfError::InvalidDescriptor(format!(
                    "{} edges {symbol}→{symbol} at level {k}",
                    hits.len()
                )));
            }
            hits[0]
        }
        TailSpec::PeriodicExplicit { cycle } => {
            if cycle.is_empty() {
                return Err(BsurfError::InvalidDescriptor("empty periodic cycle".into()));
            }
            let id = &cycle[((k - c1 - 1) as usize) % cycle.len()];
            let e = es.find(id).ok_or_else(|| {
                BsurfError::InvalidDescriptor(format!("no edge {id:?} at level {k}"))
            })?;
            if es.src[e] != v {
                return Err(BsurfError::InvalidDescriptor(format!(
                    "periodic edge {id:?} does not compose at level {k}"
                )));
            }
            e
        }
        TailSpec::Unknown => {
            return Err(BsurfError::InsufficientDepth(
                "right tail has no finite description".into(),
            ))
        }
        TailSpec::RMax | TailSpec::RMin => {
            return Err(BsurfError::InvalidDescriptor(format!(
                "{tail} is not a right-tail kind"
            )))
        }
    };
    Ok((e, es))
}

/// Edge at level `k` entering vertex `v` (of `V_k`) along a left tail
/// attached at core start `c0`.
fn left_step(w: &DiagramWindow, tail: &TailSpec, c0: i64, k: i64, v: usize) -> Result<(usize, Arc<EdgeSet>)> {
    let es = w.edge_set(k).map_err(depth_err)?;
    let fiber = &es.into[v];
    let dead = || BsurfError::InvalidDescriptor(format!("no incoming edge at level {k}"));
    let e = match tail {
        TailSpec::RMax => *fiber.last().ok_or_else(dead)?,
        TailSpec::RMin => *fiber.first().ok_or_else(dead)?,
        TailSpec::HorizontalConstant { symbol } => {
            let prev = w.level(k - 1).map_err(depth_err)?;
            let cur = w.level(k).map_err(depth_err)?;
            if cur.vertices[v] != *symbol {
                return Err(BsurfError::InvalidDescriptor(format!(
                    "horizontal tail {symbol:?} enters vertex {:?} at level {k}",
                    cur.vertices[v]
                )));
            }
            let hits: Vec<usize> = fiber
                .iter()
                .copied()
                .filter(|&e| prev.vertices[es.src[e]] == *symbol)
                .collect();
            if hits.len() != 1 {
                return Err(BsurfError::InvalidDescriptor(format!(
                    "{} edges {symbol}→{symbol} at level {k}",
                    hits.len()
                )));
            }
            hits[0]
        }
        TailSpec::PeriodicExplicit { cycle } => {
            if cycle.is_empty() {
                return Err(BsurfError::InvalidDescriptor("empty periodic cycle".into()));
            }
            let id = &cycle[((c0 - k) as usize) % cycle.len()];
            let e = es.find(id).ok_or_else(|| {
                BsurfError::InvalidDescriptor(format!("no edge {id:?} at level {k}"))
            })?;
            if es.rng[e] != v {
                return Err(BsurfError::InvalidDescriptor(format!(
                    "periodic edge {id:?} does not compose at level {k}"
                )));
            }
            e
        }
        TailSpec::Unknown => {
            return Err(BsurfError::InsufficientDepth(
                "left tail has no finite description".into(),
            ))
        }
        TailSpec::SMax | TailSpec::SMin => {
            return Err(BsurfError::InvalidDescriptor(format!(
                "{tail} is not a left-tail kind"
            )))
        }
    };
    Ok((e, es))
}

/// Walks a path from its core end to the right (`dir > 0`) or from its
/// core end leftward through the core and into the left tail, calling `f`
/// with `(level, edge set, edge)`; `f` returns `true` to stop.
struct Walk;

impl Walk {
    /// Right tail levels `c1+1 ..= c1+count`.
    fn right<F>(w: &DiagramWindow, x: &PathDescriptor, count: usize, mut f: F) -> Result<bool>
    where
        F: FnMut(i64, &EdgeSet, usize) -> bool,
    {
        let c1 = x.core.end();
        let mut v = w.path_range(&x.core)?;
        for i in 0..count {
            let k = c1 + 1 + i as i64;
            let (e, es) = right_step(w, &x.right, c1, k, v)?;
            if f(k, &es, e) {
                return Ok(true);
            }
            v = es.rng[e];
        }
        Ok(false)
    }

    /// Left tail levels `c0, c0−1, …, c0−count+1`.
    fn left<F>(w: &DiagramWindow, x: &PathDescriptor, count: usize, mut f: F) -> Result<bool>
    where
        F: FnMut(i64, &EdgeSet, usize) -> bool,
    {
        let c0 = x.core.start;
        let mut v = w.path_source(&x.core)?;
        for i in 0..count {
            let k = c0 - i as i64;
            let (e, es) = left_step(w, &x.left, c0, k, v)?;
            if f(k, &es, e) {
                return Ok(true);
            }
            v = es.src[e];
        }
        Ok(false)
    }

    /// Core levels from the right end down to the left end.
    fn core_rev<F>(w: &DiagramWindow, x: &PathDescriptor, mut f: F) -> Result<bool>
    where
        F: FnMut(i64, &EdgeSet, usize) -> bool,
    {
        for i in (0..x.core.len()).rev() {
            let k = x.core.level_of(i);
            let es = w.edge_set(k).map_err(depth_err)?;
            if f(k, &es, x.core.edges[i]) {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Core levels from the left end up to the right end.
    fn core_fwd<F>(w: &DiagramWindow, x: &PathDescriptor, mut f: F) -> Result<bool>
    where
        F: FnMut(i64, &EdgeSet, usize) -> bool,
    {
        for i in 0..x.core.len() {
            let k = x.core.level_of(i);
            let es = w.edge_set(k).map_err(depth_err)?;
            if f(k, &es, x.core.edges[i]) {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// Checks the core and that both tails attach for a few levels.
pub fn validate_descriptor(w: &DiagramWindow, x: &PathDescriptor) -> Result<()> {
    if x.core.is_empty() {
        return Err(BsurfError::InvalidDescriptor("core must contain an edge".into()));
    }
    w.check_path(&x.core)?;
    for (tail, ok) in [
        (&x.left, !matches!(x.left, TailSpec::SMax | TailSpec::SMin)),
        (&x.right, !matches!(x.right, TailSpec::RMax | TailSpec::RMin)),
    ] {
        if !ok {
            return Err(BsurfError::InvalidDescriptor(format!("tail {tail} on the wrong side")));
        }
    }
    let probe = |r: Result<bool>| match r {
        Ok(_) | Err(BsurfError::InsufficientDepth(_)) => Ok(()),
        Err(e) => Err(e),
    };
    probe(Walk::right(w, x, 2, |_, _, _| false))?;
    probe(Walk::left(w, x, 2, |_, _, _| false))?;
    Ok(())
}

/// Realised edge indices at edge levels `lo..=hi`.
pub fn realize(w: &DiagramWindow, x: &PathDescriptor, lo: i64, hi: i64) -> Result<Vec<usize>> {
    if lo > hi {
        return Ok(Vec::new());
    }
    let (c0, c1) = x.span();
    let mut out = Vec::with_capacity((hi - lo + 1) as usize);
    if lo <= c0 {
        let count = (c0 - lo + 1) as usize;
        let mut left = Vec::with_capacity(count);
        Walk::left(w, x, count, |_, _, e| {
            left.push(e);
            false
        })?;
        left.reverse();
        let take = ((hi.min(c0) - lo) + 1) as usize;
        out.extend_from_slice(&left[..take]);
    }
    for k in lo.max(c0 + 1)..=hi.min(c1) {
        out.push(x.core.at(k).expect("core level"));
    }
    if hi > c1 {
        let count = (hi - c1) as usize;
        let mut right = Vec::with_capacity(count);
        Walk::right(w, x, count, |_, _, e| {
            right.push(e);
            false
        })?;
        let skip = (lo.max(c1 + 1) - c1 - 1) as usize;
        out.extend_from_slice(&right[skip..]);
    }
    Ok(out)
}

/// Realised edge ids at edge levels `lo..=hi`.
pub fn realize_ids(w: &DiagramWindow, x: &PathDescriptor, lo: i64, hi: i64) -> Result<Vec<String>> {
    let edges = realize(w, x, lo, hi)?;
    edges
        .iter()
        .enumerate()
        .map(|(i, &e)| Ok(w.edge_set(lo + i as i64)?.id(e).to_string()))
        .collect()
}

/// Margin (in levels) used for semantic descriptor comparison.
pub const COMPARE_MARGIN: i64 = 16;

/// Semantic equality: realised sequences agree from `COMPARE_MARGIN`
/// levels left of both cores to `COMPARE_MARGIN` levels right of them.
pub fn same_path(w: &DiagramWindow, x: &PathDescriptor, y: &PathDescriptor) -> Result<bool> {
    let lo = x.core.start.min(y.core.start) + 1 - COMPARE_MARGIN;
    let hi = x.core.end().max(y.core.end()) + COMPARE_MARGIN;
    Ok(realize(w, x, lo, hi)? == realize(w, y, lo, hi)?)
}

/// Eventual extremality of one tail.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TailClass {
    /// Every scanned tail edge is maximal (and some edge is not minimal).
    Max,
    /// Every scanned tail edge is minimal (and some edge is not maximal).
    Min,
    /// The scanned tail is neither all-maximal nor all-minimal.
    Neither,
    /// Every scanned tail edge is both maximal and minimal.
    Ambiguous,
}

fn classify_scan(
    w: &DiagramWindow,
    x: &PathDescriptor,
    order: Order,
    right: bool,
) -> Result<TailClass> {
    let (mut all_max, mut all_min) = (true, true);
    let f = |_: i64, es: &EdgeSet, e: usize| {
        all_max &= es.is_extreme(e, order, true);
        all_min &= es.is_extreme(e, order, false);
        !all_max && !all_min
    };
    if right {
        Walk::right(w, x, w.scan_limit, f)?;
    } else {
        Walk::left(w, x, w.scan_limit, f)?;
    }
    Ok(match (all_max, all_min) {
        (true, true) => TailClass::Ambiguous,
        (true, false) => TailClass::Max,
        (false, true) => TailClass::Min,
        (false, false) => TailClass::Neither,
    })
}

/// Classifies the right tail under `≤_s` (`Order::S`) or the left tail
/// under `≤_r` (`Order::R`).
pub fn classify_tail(w: &DiagramWindow, x: &PathDescriptor, which: Order) -> Result<TailClass> {
    match (which, if which == Order::S { &x.right } else { &x.left }) {
        (Order::S, TailSpec::SMax) | (Order::R, TailSpec::RMax) => Ok(TailClass::Max),
        (Order::S, TailSpec::SMin) | (Order::R, TailSpec::RMin) => Ok(TailClass::Min),
        (Order::S, TailSpec::RMax | TailSpec::RMin) | (Order::R, TailSpec::SMax | TailSpec::SMin) => {
            Err(BsurfError::InvalidDescriptor("tail kind on the wrong side".into()))
        }
        (_, TailSpec::Unknown) => Err(BsurfError::InsufficientDepth(
            "tail has no finite description".into(),
        )),
        _ => classify_scan(w, x, which, which == Order::S),
    }
}

/// `n(x)` for `S` or `m(x)` for `R`: the level where the successor or
/// predecessor acts; `None` when `x` is not in `∂_s X` (resp. `∂_r X`).
pub fn boundary_index(w: &DiagramWindow, x: &PathDescriptor, which: Order) -> Result<Option<i64>> {
    Ok(pivot(w, x, which)?.map(|(k, _, _)| k))
}

/// Pivot level, pivot edge and the step (successor for all-max tails,
/// predecessor for all-min tails).
fn pivot(w: &DiagramWindow, x: &PathDescriptor, which: Order) -> Result<Option<(i64, usize, Step)>> {
    let class = classify_tail(w, x, which)?;
    let (max, step) = match class {
        TailClass::Max => (true, Step::Succ),
        TailClass::Min => (false, Step::Pred),
        TailClass::Neither => return Ok(None),
        TailClass::Ambiguous => {
            return Err(BsurfError::InsufficientDepth(format!(
                "every scanned tail edge is both maximal and minimal in the {which:?} order"
            )))
        }
    };
    let mut found = None;
    let f = |k: i64, es: &EdgeSet, e: usize| {
        if !es.is_extreme(e, which, max) {
            found = Some((k, e));
            true
        } else {
            false
        }
    };
    let hit = match which {
        Order::S => {
            let mut f = f;
            Walk::core_rev(w, x, &mut f)? || Walk::left(w, x, w.scan_limit, &mut f)?
        }
        Order::R => {
            let mut f = f;
            Walk::core_fwd(w, x, &mut f)? || Walk::right(w, x, w.scan_limit, &mut f)?
        }
    };
    Ok(if hit { found.map(|(k, e)| (k, e, step)) } else { None })
}

/// Δ_s (`S`) or Δ_r (`R`): move the pivot edge to its neighbour and flip
/// the tail beyond it between maximal and minimal.
pub fn delta(w: &DiagramWindow, x: &PathDescriptor, which: Order) -> Result<PathDescriptor> {
    let (k, e, step) = pivot(w, x, which)?.ok_or_else(|| {
        BsurfError::NotInBoundary(format!(
            "{} has no pivot in the {which:?} order",
            descriptor_label(w, x)
        ))
    })?;
    let es = w.edge_set(k).map_err(depth_err)?;
    let e2 = es.neighbour(e, which, step).expect("pivot edge is not extremal");
    let (c0, c1) = x.span();
    Ok(match which {
        Order::S => {
            let right = if step == Step::Succ { TailSpec::SMin } else { TailSpec::SMax };
            if k > c0 {
                let mut edges: Vec<usize> = x.core.edges[..(k - c0 - 1) as usize].to_vec();
                edges.push(e2);
                PathDescriptor::new(x.left.clone(), FinitePath::new(c0, edges), right)
            } else {
                let left = x.left.rotated((c0 - k + 1) as usize);
                PathDescriptor::new(left, FinitePath::new(k - 1, vec![e2]), right)
            }
        }
        Order::R => {
            let left = if step == Step::Succ { TailSpec::RMin } else { TailSpec::RMax };
            if k <= c1 {
                let mut edges = vec![e2];
                edges.extend_from_slice(&x.core.edges[(k - c0) as usize..]);
                PathDescriptor::new(left, FinitePath::new(k - 1, edges), x.right.clone())
            } else {
                let right = x.right.rotated((k - c1) as usize);
                PathDescriptor::new(left, FinitePath::new(k - 1, vec![e2]), right)
            }
        }
    })
}

/// Outcome of testing one candidate of ∂X.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SigmaStatus {
    /// Both composites defined and different.
    Singular,
    /// Both composites defined and equal.
    Commutes,
    /// At least one composite is undefined at the available depth.
    Undefined,
}

/// Per-path explanation in a [`SigmaReport`].
#[derive(Clone, Debug)]
pub struct SigmaCertificate {
    pub path: PathDescriptor,
    /// `n(x)`.
    pub n: i64,
    /// `m(x)`.
    pub m: i64,
    /// `Δ_s ∘ Δ_r (x)`.
    pub s_after_r: Option<PathDescriptor>,
    /// `Δ_r ∘ Δ_s (x)`.
    pub r_after_s: Option<PathDescriptor>,
    pub status: SigmaStatus,
    pub note: String,
}

/// Depth-labelled scan of the singular set.
#[derive(Clone, Debug)]
pub struct SigmaReport {
    pub depth: i64,
    pub singular: Vec<PathDescriptor>,
    pub extremal: Vec<PathDescriptor>,
    /// One certificate per scanned candidate with `n(x) ≤ m(x)`.
    pub certificates: Vec<SigmaCertificate>,
    /// Candidates with `m(x) < n(x)`, excluded without computing composites.
    pub excluded_by_shortcut: usize,
    /// Of those, how many were also checked to commute (when requested).
    pub shortcut_verified: usize,
    /// Largest group of singular paths sharing a pivot edge.
    pub max_pivot_fiber: usize,
}

impl SigmaReport {
    pub fn undefined(&self) -> usize {
        self.certificates
            .iter()
            .filter(|c| c.status == SigmaStatus::Undefined)
            .count()
    }
}

fn composite(w: &DiagramWindow, x: &PathDescriptor, first: Order, second: Order) -> Result<Option<PathDescriptor>> {
    let y = match delta(w, x, first) {
        Ok(y) => y,
        Err(BsurfError::NotInBoundary(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    match delta(w, &y, second) {
        Ok(z) => Ok(Some(z)),
        Err(BsurfError::NotInBoundary(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn certify(w: &DiagramWindow, x: PathDescriptor, n: i64, m: i64) -> Result<SigmaCertificate> {
    let sr = composite(w, &x, Order::R, Order::S);
    let rs = composite(w, &x, Order::S, Order::R);
    let (sr, rs, note) = match (sr, rs) {
        (Ok(a), Ok(b)) => (a, b, String::new()),
        (a, b) => {
            let note = [a.as_ref().err(), b.as_ref().err()]
                .into_iter()
                .flatten()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join("; ");
            (a.ok().flatten(), b.ok().flatten(), note)
        }
    };
    let status = match (&sr, &rs) {
        (Some(a), Some(b)) => {
            if same_path(w, a, b)? {
                SigmaStatus::Commutes
            } else {
                SigmaStatus::Singular
            }
        }
        _ => SigmaStatus::Undefined,
    };
    Ok(SigmaCertificate {
        path: x,
        n,
        m,
        s_after_r: sr,
        r_after_s: rs,
        status,
        note,
    })
}

/// Options for [`sigma_scan_with`].
#[derive(Clone, Copy, Debug)]
pub struct SigmaOptions {
    /// Also compute composites for the `m(x) < n(x)` family and count
    /// those that commute.
    pub verify_shortcut: bool,
    /// Upper bound on enumerated `m(x) < n(x)` candidates per level pair.
    pub shortcut_cap: usize,
}

impl Default for SigmaOptions {
    fn default() -> Self {
        SigmaOptions {
            verify_shortcut: false,
            shortcut_cap: 100_000,
        }
    }
}

/// Scans every `x ∈ ∂_s X ∩ ∂_r X` with pivots in `[−depth, depth]`.
pub fn sigma_scan(w: &DiagramWindow, depth: i64) -> Result<SigmaReport> {
    sigma_scan_with(w, depth, SigmaOptions::default())
}

/// [`sigma_scan`] with options.
pub fn sigma_scan_with(w: &DiagramWindow, depth: i64, opts: SigmaOptions) -> Result<SigmaReport> {
    check_span(w, depth)?;
    let lefts = [TailSpec::RMax, TailSpec::RMin];
    let rights = [TailSpec::SMax, TailSpec::SMin];
    let mut certificates: Vec<SigmaCertificate> = Vec::new();
    // Candidates with n(x) ≤ m(x): extremal chain · e · extremal chain.
    for k in -depth..=depth {
        let es = w.edge_set(k).map_err(depth_err)?;
        let mut at_level: Vec<SigmaCertificate> = Vec::new();
        for e in 0..es.len() {
            for l in &lefts {
                for r in &rights {
                    let x = PathDescriptor::new(l.clone(), FinitePath::new(k - 1, vec![e]), r.clone());
                    let Some(n) = boundary_index(w, &x, Order::S)? else { continue };
                    let Some(m) = boundary_index(w, &x, Order::R)? else { continue };
                    if n != k || m < -depth || m > depth {
                        continue;
                    }
                    let mut dup = false;
                    for c in &at_level {
                        if same_path(w, &c.path, &x)? {
                            dup = true;
                            break;
                        }
                    }
                    if !dup {
                        at_level.push(certify(w, x, n, m)?);
                    }
                }
            }
        }
        at_level.sort_by(|a, b| {
            let ida = es.id(a.path.core.edges[0]);
            let idb = es.id(b.path.core.edges[0]);
            (ida, a.m, &a.path.left, &a.path.right).cmp(&(idb, b.m, &b.path.left, &b.path.right))
        });
        certificates.extend(at_level);
    }
    // Candidates with m(x) < n(x).
    let mut excluded = 0usize;
    let mut verified = 0usize;
    for m in -depth..=depth {
        for n in m + 1..=depth {
            for l in &lefts {
                for r in &rights {
                    let mids = shortcut_candidates(w, m, n, l, r, opts.shortcut_cap)?;
                    for x in mids {
                        excluded += 1;
                        if opts.verify_shortcut {
                            let c = certify(w, x, n, m)?;
                            if c.status == SigmaStatus::Commutes {
                                verified += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    let singular: Vec<PathDescriptor> = certificates
        .iter()
        .filter(|c| c.status == SigmaStatus::Singular)
        .map(|c| c.path.clone())
        .collect();
    let mut fibers: BTreeMap<(i64, usize), usize> = BTreeMap::new();
    for c in certificates.iter().filter(|c| c.status == SigmaStatus::Singular) {
        *fibers.entry((c.n, c.path.core.edges[0])).or_default() += 1;
    }
    Ok(SigmaReport {
        depth,
        singular,
        extremal: extremal_paths(w, depth)?,
        certificates,
        excluded_by_shortcut: excluded,
        shortcut_verified: verified,
        max_pivot_fiber: fibers.values().copied().max().unwrap_or(0),
    })
}

fn check_span(w: &DiagramWindow, depth: i64) -> Result<()> {
    let (m, n) = w.bounds();
    if !w.has_generator() && (m > -depth - 1 || n < depth) {
        return Err(BsurfError::InsufficientDepth(format!(
            "window [{m}, {n}] does not span depth {depth}"
        )));
    }
    Ok(())
}

/// Paths `KL-chain · e_m · middle · e_n · KR-chain` with `e_m` not
/// KL-extreme and `e_n` not KR-extreme, so `m(x) = m < n = n(x)`.
fn shortcut_candidates(
    w: &DiagramWindow,
    m: i64,
    n: i64,
    l: &TailSpec,
    r: &TailSpec,
    cap: usize,
) -> Result<Vec<PathDescriptor>> {
    let l_max = *l == TailSpec::RMax;
    let r_max = *r == TailSpec::SMax;
    let sets: Vec<Arc<EdgeSet>> = (m..=n).map(|k| w.edge_set(k).map_err(depth_err)).collect::<Result<_>>()?;
    let mut out = Vec::new();
    let first = &sets[0];
    let mut stack = Vec::new();
    for e in 0..first.len() {
        if first.is_extreme(e, Order::R, l_max) {
            continue;
        }
        stack.push(e);
        extend_mid(&sets, 1, first.rng[e], r_max, &mut stack, &mut out, m, l, r, cap);
        stack.pop();
        if out.len() >= cap {
            break;
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn extend_mid(
    sets: &[Arc<EdgeSet>],
    i: usize,
    v: usize,
    r_max: bool,
    stack: &mut Vec<usize>,
    out: &mut Vec<PathDescriptor>,
    m: i64,
    l: &TailSpec,
    r: &TailSpec,
    cap: usize,
) {
    if out.len() >= cap {
        return;
    }
    let es = &sets[i];
    for &e in &es.out[v] {
        if i + 1 == sets.len() {
            if es.is_extreme(e, Order::S, r_max) {
                continue;
            }
            stack.push(e);
            out.push(PathDescriptor::new(
                l.clone(),
                FinitePath::new(m - 1, stack.clone()),
                r.clone(),
            ));
            stack.pop();
        } else {
            stack.push(e);
            extend_mid(sets, i + 1, es.rng[e], r_max, stack, out, m, l, r, cap);
            stack.pop();
        }
    }
}

/// The four extremal families, each truncated to the window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum ExtremalFamily {
    SMax,
    SMin,
    RMax,
    RMin,
}

/// Members of one extremal family, chains through `[−depth, depth]`.
pub fn extremal_family(w: &DiagramWindow, depth: i64, fam: ExtremalFamily) -> Result<Vec<PathDescriptor>> {
    let (order, max) = match fam {
        ExtremalFamily::SMax => (Order::S, true),
        ExtremalFamily::SMin => (Order::S, false),
        ExtremalFamily::RMax => (Order::R, true),
        ExtremalFamily::RMin => (Order::R, false),
    };
    let lo = -depth;
    let hi = depth.max(lo + 1);
    let mut out: Vec<PathDescriptor> = Vec::new();
    let anchor = if order == Order::R { hi } else { lo };
    let nverts = w.level(anchor).map_err(depth_err)?.len();
    for v0 in 0..nverts {
        let mut edges = Vec::new();
        let mut v = v0;
        if order == Order::R {
            for k in (lo + 1..=hi).rev() {
                let es = w.edge_set(k).map_err(depth_err)?;
                let f = &es.into[v];
                let Some(&e) = (if max { f.last() } else { f.first() }) else { break };
                edges.push(e);
                v = es.src[e];
            }
            edges.reverse();
        } else {
            for k in lo + 1..=hi {
                let es = w.edge_set(k).map_err(depth_err)?;
                let f = &es.out[v];
                let Some(&e) = (if max { f.last() } else { f.first() }) else { break };
                edges.push(e);
                v = es.rng[e];
            }
        }
        if edges.len() as i64 != hi - lo {
            continue;
        }
        let core = FinitePath::new(lo, edges);
        let (left, right) = if order == Order::R {
            let left = if max { TailSpec::RMax } else { TailSpec::RMin };
            (left.clone(), infer_tail(w, &left, &core, order, max, true)?)
        } else {
            let right = if max { TailSpec::SMax } else { TailSpec::SMin };
            (infer_tail(w, &right, &core, order, max, false)?, right)
        };
        let x = compact(w, PathDescriptor::new(left, core, right))?;
        let mut dup = false;
        for y in &out {
            if same_path(w, y, &x).unwrap_or(false) {
                dup = true;
                break;
            }
        }
        if !dup {
            out.push(x);
        }
    }
    Ok(out)
}

/// Finds a finite description of the continuation of a family chain on the
/// opposite side whose edges stay extremal for `scan_limit` levels.
fn infer_tail(
    w: &DiagramWindow,
    fixed: &TailSpec,
    core: &FinitePath,
    order: Order,
    max: bool,
    right_side: bool,
) -> Result<TailSpec> {
    let end_vertex_name = if right_side {
        let v = w.path_range(core)?;
        w.level(core.end())?.vertices[v].clone()
    } else {
        let v = w.path_source(core)?;
        w.level(core.start)?.vertices[v].clone()
    };
    let options: Vec<TailSpec> = if right_side {
        vec![TailSpec::horizontal(&end_vertex_name), TailSpec::SMax, TailSpec::SMin]
    } else {
        vec![TailSpec::horizontal(&end_vertex_name), TailSpec::RMax, TailSpec::RMin]
    };
    for t in options {
        let x = if right_side {
            PathDescriptor::new(fixed.clone(), core.clone(), t.clone())
        } else {
            PathDescriptor::new(t.clone(), core.clone(), fixed.clone())
        };
        let mut ok = true;
        let f = |_: i64, es: &EdgeSet, e: usize| {
            if !es.is_extreme(e, order, max) {
                ok = false;
                true
            } else {
                false
            }
        };
        let walked = if right_side {
            Walk::right(w, &x, w.scan_limit, f)
        } else {
            Walk::left(w, &x, w.scan_limit, f)
        };
        match walked {
            Ok(_) if ok => return Ok(t),
            Ok(_) => {}
            Err(BsurfError::InsufficientDepth(_)) | Err(BsurfError::InvalidDescriptor(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(TailSpec::Unknown)
}

/// Shrinks the core to its middle edge when the tails reproduce the rest.
pub fn compact(w: &DiagramWindow, x: PathDescriptor) -> Result<PathDescriptor> {
    if x.core.len() <= 1 || matches!(x.left, TailSpec::Unknown) || matches!(x.right, TailSpec::Unknown) {
        return Ok(x);
    }
    let (c0, c1) = x.span();
    let mid = x.core.len() / 2;
    let y = PathDescriptor::new(
        x.left.clone().rotated(0),
        FinitePath::new(x.core.level_of(mid) - 1, vec![x.core.edges[mid]]),
        x.right.clone(),
    );
    let y = match (&x.left, &x.right) {
        (TailSpec::PeriodicExplicit { .. }, _) | (_, TailSpec::PeriodicExplicit { .. }) => return Ok(x),
        _ => y,
    };
    match realize(w, &y, c0 + 1, c1) {
        Ok(r) if r == x.core.edges => Ok(y),
        _ => Ok(x),
    }
}

/// Union of the four extremal families, deduplicated semantically.
pub fn extremal_paths(w: &DiagramWindow, depth: i64) -> Result<Vec<PathDescriptor>> {
    let mut out: Vec<PathDescriptor> = Vec::new();
    for fam in [
        ExtremalFamily::SMax,
        ExtremalFamily::SMin,
        ExtremalFamily::RMax,
        ExtremalFamily::RMin,
    ] {
        for x in extremal_family(w, depth, fam)? {
            let mut dup = false;
            for y in &out {
                if same_path(w, y, &x).unwrap_or(false) {
                    dup = true;
                    break;
                }
            }
            if !dup {
                out.push(x);
            }
        }
    }
    Ok(out)
}

/// Side of tail equivalence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TailSide {
    Plus,
    Minus,
}

/// Least `N` with `x_k = y_k` for all `k > N` (`Plus`) or greatest `N`
/// with agreement for all `k < N` (`Minus`), tested on `[−depth, depth]`
/// plus a `scan_limit` margin on the far side; `None` if the paths still
/// disagree beyond the tested range.
pub fn tail_equivalent(
    w: &DiagramWindow,
    x: &PathDescriptor,
    y: &PathDescriptor,
    side: TailSide,
    depth: i64,
) -> Result<Option<i64>> {
    let margin = w.scan_limit as i64;
    match side {
        TailSide::Plus => {
            let (lo, hi) = (-depth, depth + margin);
            let a = realize(w, x, lo, hi)?;
            let b = realize(w, y, lo, hi)?;
            match (0..a.len()).rev().find(|&i| a[i] != b[i]) {
                None => Ok(Some(-depth)),
                Some(i) => {
                    let k = lo + i as i64;
                    Ok(if k > depth { None } else { Some(k) })
                }
            }
        }
        TailSide::Minus => {
            let (lo, hi) = (-depth - margin, depth);
            let a = realize(w, x, lo, hi)?;
            let b = realize(w, y, lo, hi)?;
            match (0..a.len()).find(|&i| a[i] != b[i]) {
                None => Ok(Some(depth)),
                Some(i) => {
                    let k = lo + i as i64;
                    Ok(if k < -depth { None } else { Some(k) })
                }
            }
        }
    }
}

/// Status of one certificate item.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CertStatus {
    Certified,
    Violated,
    Inconclusive,
}

/// One named certificate item.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CertItem {
    pub name: String,
    pub status: CertStatus,
    pub detail: String,
}

/// A list of certificate items computed at a stated depth.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CertificateReport {
    pub depth: i64,
    pub items: Vec<CertItem>,
}

impl CertificateReport {
    pub fn all_certified(&self) -> bool {
        self.items.iter().all(|i| i.status == CertStatus::Certified)
    }

    pub fn any_violated(&self) -> bool {
        self.items.iter().any(|i| i.status == CertStatus::Violated)
    }

    pub fn item(&self, name: &str) -> Option<&CertItem> {
        self.items.iter().find(|i| i.name == name)
    }
}

/// Saturating (cap 2) path-count matrix product.
fn sat_mul(a: &[Vec<u8>], b: &[Vec<u8>]) -> Vec<Vec<u8>> {
    let inner = b.len();
    let cols = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| {
                    let mut s = 0u8;
                    for k in 0..inner {
                        s = s.saturating_add(row[k].saturating_mul(b[k][j])).min(2);
                    }
                    s
                })
                .collect()
        })
        .collect()
}

fn sat_matrix(w: &DiagramWindow, k: i64) -> Result<Vec<Vec<u8>>> {
    let es = w.edge_set(k)?;
    let rows = w.level(k)?.len();
    let cols = w.level(k - 1)?.len();
    let mut m = vec![vec![0u8; cols]; rows];
    for e in 0..es.len() {
        let c = &mut m[es.rng[e]][es.src[e]];
        *c = (*c + 1).min(2);
    }
    Ok(m)
}

fn all_at_least_two(m: &[Vec<u8>]) -> bool {
    m.iter().all(|r| r.iter().all(|&x| x >= 2))
}

fn max_entry(m: &[Vec<u8>]) -> u8 {
    m.iter().flat_map(|r| r.iter().copied()).max().unwrap_or(0)
}

/// Finite-depth certificates for the three standing assumptions: finite
/// rank, strong simplicity (two paths between all vertex pairs of some
/// `V_l, V_m` and `V_m, V_n` with `l < m < n`) and disjointness of the
/// extremal paths from `∂_r X` and `∂_s X`.
pub fn standing_hypotheses_check(w: &DiagramWindow, depth: i64) -> CertificateReport {
    let mut items = Vec::new();
    // (1) finite rank.
    let mut k_max = 0usize;
    let mut rank_err = None;
    for k in -depth..=depth {
        match w.level(k) {
            Ok(l) => k_max = k_max.max(l.len()),
            Err(e) => rank_err = Some(e.to_string()),
        }
    }
    items.push(match rank_err {
        None => CertItem {
            name: "finite rank".into(),
            status: CertStatus::Certified,
            detail: format!("K = {k_max} on levels [{}, {depth}]", -depth),
        },
        Some(e) => CertItem {
            name: "finite rank".into(),
            status: CertStatus::Inconclusive,
            detail: e,
        },
    });
    // (2) strong simplicity.
    items.push(strong_simplicity(w, depth));
    // (3) extremal paths avoid both boundaries.
    items.push(extremal_disjointness(w, depth));
    CertificateReport { depth, items }
}

/// Level horizon of the strong-simplicity search. The search only
/// multiplies saturated vertex-count matrices, so it can look much further
/// than the path scans bounded by `scan_limit`; long single-winner runs
/// of the induction keep some product entry at 1 for hundreds of levels.
pub const SIMPLICITY_SCAN: usize = 4096;

fn strong_simplicity(w: &DiagramWindow, depth: i64) -> CertItem {
    let search = w.scan_limit.max(SIMPLICITY_SCAN) as i64;
    let mut worst_left = 0;
    let mut worst_right = 0;
    for m in -depth..=depth {
        // Left: C(l, m) = M_m ⋯ M_{l+1}.
        let mut found_left = None;
        let mut seen_two = false;
        let mut exhausted = false;
        let mut c = match sat_matrix(w, m) {
            Ok(c) => c,
            Err(e) => return inconclusive_ss(e),
        };
        for l in (m - search..m).rev() {
            seen_two |= max_entry(&c) >= 2;
            if all_at_least_two(&c) {
                found_left = Some(m - l);
                break;
            }
            if l == m - search {
                exhausted = true;
                break;
            }
            match sat_matrix(w, l) {
                Ok(ml) => c = sat_mul(&c, &ml),
                Err(e) => return inconclusive_ss(e),
            }
        }
        // Right: C(m, n) = M_n ⋯ M_{m+1}.
        let mut found_right = None;
        let mut c = match sat_matrix(w, m + 1) {
            Ok(c) => c,
            Err(e) => return inconclusive_ss(e),
        };
        for n in m + 1..=m + search {
            seen_two |= max_entry(&c) >= 2;
            if all_at_least_two(&c) {
                found_right = Some(n - m);
                break;
            }
            if n == m + search {
                exhausted = true;
                break;
            }
            match sat_matrix(w, n + 1) {
                Ok(mn) => c = sat_mul(&mn, &c),
                Err(e) => return inconclusive_ss(e),
            }
        }
        match (found_left, found_right) {
            (Some(a), Some(b)) => {
                worst_left = worst_left.max(a);
                worst_right = worst_right.max(b);
            }
            _ if exhausted && !seen_two => {
                return CertItem {
                    name: "strong simplicity".into(),
                    status: CertStatus::Violated,
                    detail: format!(
                        "at level {m}: at most one path between any two vertices within {search} levels"
                    ),
                }
            }
            _ => {
                return CertItem {
                    name: "strong simplicity".into(),
                    status: CertStatus::Inconclusive,
                    detail: format!("no two-path connection found around level {m} within {search} levels"),
                }
            }
        }
    }
    CertItem {
        name: "strong simplicity".into(),
        status: CertStatus::Certified,
        detail: format!(
            "every m in [{}, {depth}] has l ≥ m−{worst_left} and n ≤ m+{worst_right} with ≥ 2 paths between all vertex pairs",
            -depth
        ),
    }
}

fn inconclusive_ss(e: BsurfError) -> CertItem {
    CertItem {
        name: "strong simplicity".into(),
        status: CertStatus::Inconclusive,
        detail: e.to_string(),
    }
}

fn extremal_disjointness(w: &DiagramWindow, depth: i64) -> CertItem {
    let name = "extremal paths avoid boundaries".to_string();
    let ext = match extremal_paths(w, depth) {
        Ok(x) => x,
        Err(e) => {
            return CertItem {
                name,
                status: CertStatus::Inconclusive,
                detail: e.to_string(),
            }
        }
    };
    let mut undecided = Vec::new();
    for x in &ext {
        for which in [Order::S, Order::R] {
            match boundary_index(w, x, which) {
                Ok(None) => {}
                Ok(Some(k)) => {
                    return CertItem {
                        name,
                        status: CertStatus::Violated,
                        detail: format!(
                            "{} lies in the {which:?}-boundary with pivot {k}",
                            descriptor_label(w, x)
                        ),
                    }
                }
                Err(e) => undecided.push(format!("{}: {e}", descriptor_label(w, x))),
            }
        }
    }
    if undecided.is_empty() {
        CertItem {
            name,
            status: CertStatus::Certified,
            detail: format!("{} extremal paths, none in a boundary set", ext.len()),
        }
    } else {
        CertItem {
            name,
            status: CertStatus::Inconclusive,
            detail: undecided.join(" | "),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn cham_point(w: &DiagramWindow, kind: char, n: i64) -> PathDescriptor {
        let (l, id, r) = match kind {
            'w' => (TailSpec::RMin, "1", TailSpec::SMin),
            'x' => (TailSpec::RMin, "0", TailSpec::SMax),
            'y' => (TailSpec::RMax, "1", TailSpec::SMin),
            _ => (TailSpec::RMax, "0", TailSpec::SMax),
        };
        PathDescriptor::new(l, w.path_from_ids(n - 1, &[id]).unwrap(), r)
    }

    #[test]
    fn chamanara_delta_table() {
        let w = fixtures::chamanara_window(-4, 4).unwrap();
        for n in -3..=3 {
            let wn = cham_point(&w, 'w', n);
            assert_eq!(boundary_index(&w, &wn, Order::S).unwrap(), Some(n));
            assert!(same_path(&w, &delta(&w, &wn, Order::S).unwrap(), &cham_point(&w, 'x', n)).unwrap());
            assert!(same_path(&w, &delta(&w, &wn, Order::R).unwrap(), &cham_point(&w, 'y', n - 1)).unwrap());
            let zn = cham_point(&w, 'z', n);
            assert!(same_path(&w, &delta(&w, &zn, Order::S).unwrap(), &cham_point(&w, 'y', n)).unwrap());
            assert!(same_path(&w, &delta(&w, &zn, Order::R).unwrap(), &cham_point(&w, 'x', n - 1)).unwrap());
        }
        let w0 = cham_point(&w, 'w', 0);
        let back = delta(&w, &delta(&w, &w0, Order::S).unwrap(), Order::S).unwrap();
        assert!(same_path(&w, &back, &w0).unwrap());
    }

    #[test]
    fn periodic_alternating_not_in_boundary() {
        let w = fixtures::chamanara_window(-2, 2).unwrap();
        let x = PathDescriptor::new(
            TailSpec::RMin,
            w.path_from_ids(0, &["1"]).unwrap(),
            TailSpec::periodic(&["0", "1"]),
        );
        assert_eq!(boundary_index(&w, &x, Order::S).unwrap(), None);
    }

    #[test]
    fn tail_equivalence_example() {
        let w = fixtures::chamanara_window(-4, 4).unwrap();
        let w0 = cham_point(&w, 'w', 0);
        let y = cham_point(&w, 'y', -1);
        assert_eq!(tail_equivalent(&w, &w0, &y, TailSide::Plus, 4).unwrap(), Some(0));
        assert_eq!(tail_equivalent(&w, &w0, &w0, TailSide::Plus, 4).unwrap(), Some(-4));
        let x0 = cham_point(&w, 'x', 0);
        assert_eq!(tail_equivalent(&w, &w0, &x0, TailSide::Plus, 4).unwrap(), None);
    }

    #[test]
    fn chamanara_sigma_and_extremal() {
        let w = fixtures::chamanara_window(-4, 4).unwrap();
        let rep = sigma_scan(&w, 3).unwrap();
        assert_eq!(rep.extremal.len(), 2);
        assert!(rep.singular.len() >= 4 * 6);
        assert!(rep.max_pivot_fiber <= 4);
        let hyp = standing_hypotheses_check(&w, 4);
        assert!(hyp.all_certified(), "{hyp:?}");
        let c = fixtures::constant_window(-2, 2).unwrap();
        let hc = standing_hypotheses_check(&c, 2);
        assert_eq!(hc.item("strong simplicity").unwrap().status, CertStatus::Violated);
    }
}
