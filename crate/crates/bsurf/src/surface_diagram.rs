//! The ordered bi-infinite diagram built from surface data `(π, λ, τ)`,
//! with its canonical state `(λ_n, h_n)` and finite-depth certificates of
//! its structural properties.
//!
//! Level `n` carries the alphabet as vertex set. The edges of `E_n` come
//! from the RH step applied to the triple at level `n−1` (for `n ≤ 0` that
//! triple is obtained by Rauzy–Veech steps and the RH step is checked to
//! undo them): one horizontal edge per symbol (id = the symbol) and one
//! non-horizontal edge `e` from `β(ε)` to `α(1−ε)`, `ε` the τ-type.

use std::collections::BTreeSet;
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::core_diagram::{DiagramWindow, Edge, EdgeSet, Level, LevelGenerator, Order};
use crate::error::{BsurfError, Result};
use crate::iet_zip::TripleData;
use crate::induction::{rh_step, rv_step, InductionStep};
use crate::matrix::IntMatrix;
use crate::path_space::{
    sigma_scan, standing_hypotheses_check, CertItem, CertStatus, CertificateReport, PathDescriptor,
    SigmaReport, TailSpec,
};
use crate::rat::Q;
use crate::states_charts::{State, StateGenerator};

/// Id of the non-horizontal edge on every level.
pub const NON_HORIZONTAL_ID: &str = "e";

struct Chain {
    /// `forward[k]` is the triple at level `k ≥ 0`.
    forward: Vec<TripleData>,
    /// `backward[k]` is the triple at level `−k`.
    backward: Vec<TripleData>,
}

/// Lazily extends the induction chain in both directions.
pub struct SurfaceGenerator {
    chain: Mutex<Chain>,
}

impl SurfaceGenerator {
    pub fn new(t: TripleData) -> Self {
        SurfaceGenerator {
            chain: Mutex::new(Chain {
                forward: vec![t.clone()],
                backward: vec![t],
            }),
        }
    }

    /// Triple at level `k` (`𝒫^k(t)` for `k > 0`, `ℛ^{−k}(t)` for `k < 0`).
    pub fn triple(&self, k: i64) -> Result<TripleData> {
        let mut c = self.chain.lock().expect("chain lock");
        if k >= 0 {
            while c.forward.len() as i64 <= k {
                let i = c.forward.len();
                let last = c.forward.last().expect("non-empty");
                let s = rh_step(last).map_err(|e| at_level(i as i64, e))?;
                c.forward.push(s.after);
            }
            Ok(c.forward[k as usize].clone())
        } else {
            while (c.backward.len() as i64) <= -k {
                let i = c.backward.len();
                let last = c.backward.last().expect("non-empty");
                let s = rv_step(last).map_err(|e| at_level(-(i as i64), e))?;
                c.backward.push(s.after);
            }
            Ok(c.backward[(-k) as usize].clone())
        }
    }

    /// The RH step producing level `n` from level `n−1`.
    pub fn step(&self, n: i64) -> Result<InductionStep> {
        let prev = self.triple(n - 1)?;
        let s = rh_step(&prev).map_err(|e| at_level(n, e))?;
        if n <= 0 {
            let cur = self.triple(n)?;
            if s.after.perm != cur.perm || s.after.lambda != cur.lambda || s.after.tau != cur.tau {
                return Err(BsurfError::Invalid(format!(
                    "level {n}: the RH step does not undo the Rauzy–Veech step"
                )));
            }
        }
        Ok(s)
    }
}

fn at_level(n: i64, e: BsurfError) -> BsurfError {
    match e {
        BsurfError::KeaneHypothesis(m) => BsurfError::KeaneHypothesis(format!("level {n}: {m}")),
        BsurfError::RhHypothesis(m) => BsurfError::RhHypothesis(format!("level {n}: {m}")),
        BsurfError::BetaUndefined(m) => BsurfError::BetaUndefined(format!("level {n}: {m}")),
        BsurfError::NotInCone(m) => BsurfError::NotInCone(format!("level {n}: {m}")),
        e => e,
    }
}

impl LevelGenerator for SurfaceGenerator {
    fn level(&self, n: i64) -> Result<Level> {
        let t = self.triple(n)?;
        Ok(Level {
            index: n,
            vertices: t.perm.alphabet().symbols().to_vec(),
        })
    }

    fn edges(&self, n: i64) -> Result<Vec<Edge>> {
        let s = self.step(n)?;
        let perm = &s.before.perm;
        let (w, b) = (s.winner, s.loser);
        let mut out: Vec<Edge> = perm
            .alphabet()
            .symbols()
            .iter()
            .enumerate()
            .map(|(a, sym)| Edge {
                level: n,
                id: sym.clone(),
                source: sym.clone(),
                range: sym.clone(),
                r_rank: 0,
                s_rank: if a == b && s.ty == 0 { 1 } else { 0 },
            })
            .collect();
        out.push(Edge {
            level: n,
            id: NON_HORIZONTAL_ID.into(),
            source: perm.symbol(b).to_string(),
            range: perm.symbol(w).to_string(),
            r_rank: 1,
            s_rank: if s.ty == 0 { 0 } else { 1 },
        });
        Ok(out)
    }
}

impl StateGenerator for SurfaceGenerator {
    fn nu(&self, n: i64) -> Result<(Vec<Q>, Vec<Q>)> {
        let t = self.triple(n)?;
        Ok((t.lambda, t.h))
    }
}

/// How one level of the diagram was produced.
#[derive(Clone, Debug, Serialize)]
pub struct LevelRecord {
    pub level: i64,
    /// `"RH"` for `n > 0`, `"RV"` for `n ≤ 0` (the level comes from
    /// inverting a Rauzy–Veech step).
    pub rule: &'static str,
    /// τ-type of the triple at level `n−1`.
    pub ty: usize,
    /// Range of the non-horizontal edge.
    pub winner: String,
    /// Source of the non-horizontal edge.
    pub source: String,
    pub matrix: IntMatrix,
}

/// A built surface diagram.
#[derive(Clone)]
pub struct SurfaceDiagram {
    pub triple: TripleData,
    pub window: DiagramWindow,
    pub state: State,
    pub log: Vec<LevelRecord>,
    /// First symbol of the top row.
    pub a0: String,
    /// First symbol of the bottom row.
    pub a1: String,
    pub generator: Arc<SurfaceGenerator>,
}

impl std::fmt::Debug for SurfaceDiagram {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SurfaceDiagram")
            .field("triple", &self.triple.perm.to_string())
            .field("window", &self.window.bounds())
            .finish()
    }
}

/// Look-ahead used by the certificates on surface-built windows.
pub const SURFACE_SCAN: usize = 256;

/// Builds the diagram on levels `[m, n]`; the generator stays attached so
/// tails can be followed beyond the window.
pub fn build(triple: &TripleData, m: i64, n: i64) -> Result<SurfaceDiagram> {
    if m >= n {
        return Err(BsurfError::Invalid(format!("need m < n, got [{m}, {n}]")));
    }
    let gen = Arc::new(SurfaceGenerator::new(triple.clone()));
    let mut window = DiagramWindow::from_generator(gen.clone(), m, n)?;
    // Induction runs can stall on one winner for a while; look further.
    window.scan_limit = window.scan_limit.max(SURFACE_SCAN);
    let state = State::from_generator(gen.clone(), m, n)?;
    let mut log = Vec::new();
    for k in m + 1..=n {
        let s = gen.step(k)?;
        log.push(LevelRecord {
            level: k,
            rule: if k > 0 { "RH" } else { "RV" },
            ty: s.ty,
            winner: s.winner_symbol().to_string(),
            source: s.loser_symbol().to_string(),
            matrix: s.matrix.clone(),
        });
    }
    let perm = &triple.perm;
    Ok(SurfaceDiagram {
        triple: triple.clone(),
        window,
        state,
        log,
        a0: perm.symbol(perm.row(0)[0]).to_string(),
        a1: perm.symbol(perm.row(1)[0]).to_string(),
        generator: gen,
    })
}

/// Compares level `k+1` of `build(t)` with level `k` of `build(𝒫 t)` on
/// `k ∈ [m−1, n−1]`: vertices, edges with ranks, and state.
pub fn shift_law_check(t: &TripleData, m: i64, n: i64) -> Result<bool> {
    let a = build(t, m, n)?;
    let next = rh_step(t)?.after;
    let b = build(&next, m - 1, n - 1)?;
    for k in m..n {
        let ea = &a.window.edge_set(k + 1)?.edges;
        let eb = &b.window.edge_set(k)?.edges;
        let strip = |es: &[Edge]| {
            es.iter()
                .map(|e| (e.id.clone(), e.source.clone(), e.range.clone(), e.r_rank, e.s_rank))
                .collect::<Vec<_>>()
        };
        if strip(ea) != strip(eb) {
            return Ok(false);
        }
        if a.state.nu(k + 1)? != b.state.nu(k)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn symbol_index(w: &DiagramWindow, k: i64, sym: &str) -> Result<usize> {
    w.level(k)?
        .find(sym)
        .ok_or_else(|| BsurfError::Invalid(format!("no vertex {sym:?} on level {k}")))
}

/// Horizontal path through `sym` as a descriptor.
pub fn horizontal_path(w: &DiagramWindow, sym: &str) -> Result<PathDescriptor> {
    Ok(PathDescriptor::new(
        TailSpec::horizontal(sym),
        w.path_from_ids(0, &[sym])?,
        TailSpec::horizontal(sym),
    ))
}

/// The `|𝒜|` horizontal paths, after checking that every horizontal edge
/// of the window is r-minimal.
pub fn horizontal_paths(sd: &SurfaceDiagram) -> Result<Vec<PathDescriptor>> {
    let w = &sd.window;
    let (m, n) = w.bounds();
    for k in m + 1..=n {
        let es = w.edge_set(k)?;
        for (i, e) in es.edges.iter().enumerate() {
            if e.id != NON_HORIZONTAL_ID && !es.is_r_min(i) {
                return Err(BsurfError::Invalid(format!(
                    "horizontal edge {} at level {k} is not r-minimal",
                    e.id
                )));
            }
        }
    }
    sd.triple
        .perm
        .alphabet()
        .symbols()
        .iter()
        .map(|s| horizontal_path(w, s))
        .collect()
}

/// Result of [`s_extreme_classes`].
#[derive(Clone, Debug)]
pub struct SExtremeReport {
    /// Horizontal path through `A₀` (eventually s-minimal paths end here).
    pub x1: PathDescriptor,
    /// Horizontal path through `A₁` (eventually s-maximal paths end here).
    pub x2: PathDescriptor,
    /// `|Q^j({A₀})|` for `j = 0, 1, …` going down from the top level.
    pub q_sizes_min: Vec<usize>,
    /// Same with s-maximal edges from `{A₁}`.
    pub q_sizes_max: Vec<usize>,
    pub certs: Vec<CertItem>,
}

impl SExtremeReport {
    pub fn all_certified(&self) -> bool {
        self.certs.iter().all(|c| c.status == CertStatus::Certified)
    }
}

/// Propagates `{sym}` from level `top` downward along s-minimal (or
/// s-maximal) edges until the whole alphabet is reached.
fn q_closure(w: &DiagramWindow, top: i64, bottom: i64, sym: &str, max: bool) -> Result<(Vec<usize>, Option<i64>)> {
    let d = w.level(top)?.len();
    let mut set: BTreeSet<usize> = [symbol_index(w, top, sym)?].into();
    let mut sizes = vec![1];
    if d == 1 {
        return Ok((sizes, Some(top)));
    }
    for k in (bottom + 1..=top).rev() {
        let es = w.edge_set(k)?;
        let next: BTreeSet<usize> = (0..es.len())
            .filter(|&e| es.is_extreme(e, Order::S, max) && set.contains(&es.rng[e]))
            .map(|e| es.src[e])
            .collect();
        set = next;
        sizes.push(set.len());
        if set.len() == d {
            return Ok((sizes, Some(k - 1)));
        }
    }
    Ok((sizes, None))
}

fn closure_cert(w: &DiagramWindow, depth: i64, sym: &str, max: bool) -> Result<(Vec<usize>, CertItem)> {
    let kind = if max { "s-max" } else { "s-min" };
    let name = format!("eventually {kind} paths end on horizontal {sym}");
    // The closure may need to descend well below the report window when the
    // induction has a long single-winner run; allow the usual scan margin.
    let bottom = (-depth).min(depth - w.scan_limit as i64);
    let (sizes, closed) = q_closure(w, depth, bottom, sym, max)?;
    let monotone = sizes.windows(2).all(|p| p[1] == p[0] || p[1] == p[0] + 1);
    let Some(low) = closed else {
        return Ok((
            sizes,
            CertItem {
                name,
                status: CertStatus::Inconclusive,
                detail: format!("Q-closure from level {depth} does not reach all vertices above level {bottom}"),
            },
        ));
    };
    let a = symbol_index(w, depth, sym)?;
    let mut horizontal = true;
    let mut branching = 0;
    for k in low + 1..=depth {
        let es = w.edge_set(k)?;
        let fiber = &es.out[a];
        let e = if max { *fiber.last().expect("edge") } else { fiber[0] };
        horizontal &= es.edges[e].id != NON_HORIZONTAL_ID;
        if es.into[a].len() > 1 {
            branching += 1;
        }
    }
    let status = if !monotone {
        CertStatus::Violated
    } else if horizontal && branching > 0 {
        CertStatus::Certified
    } else if !horizontal {
        CertStatus::Violated
    } else {
        CertStatus::Inconclusive
    };
    Ok((
        sizes,
        CertItem {
            name,
            status,
            detail: format!(
                "every {kind} chain from level {low} reaches {sym} by level {depth}; {sym} has {branching} branching levels in between; growth monotone: {monotone}"
            ),
        },
    ))
}

/// Certifies that eventually s-minimal paths end on the horizontal path
/// through `A₀` and eventually s-maximal ones on that through `A₁`.
pub fn s_extreme_classes(sd: &SurfaceDiagram, depth: i64) -> Result<SExtremeReport> {
    let w = &sd.window;
    let (q_sizes_min, c_min) = closure_cert(w, depth, &sd.a0, false)?;
    let (q_sizes_max, c_max) = closure_cert(w, depth, &sd.a1, true)?;
    Ok(SExtremeReport {
        x1: horizontal_path(w, &sd.a0)?,
        x2: horizontal_path(w, &sd.a1)?,
        q_sizes_min,
        q_sizes_max,
        certs: vec![c_min, c_max],
    })
}

/// Result of [`verify_flatness`].
#[derive(Clone, Debug)]
pub struct FlatnessReport {
    pub depth: i64,
    pub sigma: SigmaReport,
    /// `Y_n ≤_r Y_{n+1}` on truncated representatives.
    pub y_chain: CertItem,
    /// `Z_n ≤_r Z_{n+1}` on truncated representatives.
    pub z_chain: CertItem,
}

impl FlatnessReport {
    /// Σ empty by the scan and both chain checks certified.
    pub fn flat(&self) -> bool {
        self.sigma.singular.is_empty()
            && self.y_chain.status == CertStatus::Certified
            && self.z_chain.status == CertStatus::Certified
    }
}

/// The two-element s-fiber of level `n`: `(y_n, z_n)` = (non-s-max,
/// non-s-min) edges.
fn branch_edges(es: &EdgeSet) -> Option<(usize, usize)> {
    es.out.iter().find(|f| f.len() == 2).map(|f| (f[0], f[1]))
}

/// Edges at levels `> n` of the s-extremal chain leaving `v`.
fn chain_after(w: &DiagramWindow, n: i64, mut v: usize, max: bool, len: usize) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::with_capacity(len);
    for k in n + 1..=n + len as i64 {
        let es = w.edge_set(k)?;
        let f = &es.out[v];
        let e = if max { *f.last().expect("edge") } else { f[0] };
        out.push((e, es.rng[e]));
        v = es.rng[e];
    }
    Ok(out)
}

/// Checks `Y_n ≤_r Y_{n+1}` (`max = true`) or `Z_n ≤_r Z_{n+1}`.
pub fn chain_order_check(w: &DiagramWindow, depth: i64, max: bool) -> CertItem {
    let name = if max { "Y_n ≤_r Y_{n+1}" } else { "Z_n ≤_r Z_{n+1}" }.to_string();
    let run = || -> Result<CertItem> {
        let scan = w.scan_limit;
        for n in -depth..depth {
            let es = w.edge_set(n)?;
            let es1 = w.edge_set(n + 1)?;
            let (Some(b0), Some(b1)) = (branch_edges(&es), branch_edges(&es1)) else {
                return Ok(CertItem {
                    name: name.clone(),
                    status: CertStatus::Inconclusive,
                    detail: format!("no branching s-fiber at level {n} or {}", n + 1),
                });
            };
            let x_n = if max { b0.0 } else { b0.1 };
            let x_n1 = if max { b1.0 } else { b1.1 };
            // x: edge x_n at level n, then the extremal chain; x': edge x_n1 at n+1, then the chain.
            let xa = chain_after(w, n, es.rng[x_n], max, scan)?;
            let mut xb = vec![(x_n1, es1.rng[x_n1])];
            xb.extend(chain_after(w, n + 1, es1.rng[x_n1], max, scan - 1)?);
            let Some(i) = (0..scan).find(|&i| xa[i].1 == xb[i].1) else {
                return Ok(CertItem {
                    name: name.clone(),
                    status: CertStatus::Inconclusive,
                    detail: format!("representatives from levels {n}, {} do not meet within {scan} levels", n + 1),
                });
            };
            let l = n + 1 + i as i64;
            let esl = w.edge_set(l)?;
            if esl.r_position(xa[i].0) > esl.r_position(xb[i].0) {
                return Ok(CertItem {
                    name: name.clone(),
                    status: CertStatus::Violated,
                    detail: format!("order reversed at level {l} for the pair from levels {n}, {}", n + 1),
                });
            }
        }
        Ok(CertItem {
            name: name.clone(),
            status: CertStatus::Certified,
            detail: format!("all consecutive pairs in [{}, {depth}]", -depth),
        })
    };
    run().unwrap_or_else(|e| CertItem {
        name: name.clone(),
        status: CertStatus::Inconclusive,
        detail: e.to_string(),
    })
}

/// Σ emptiness by direct scan and by the `Y_n`/`Z_n` order argument.
pub fn verify_flatness(sd: &SurfaceDiagram, depth: i64) -> Result<FlatnessReport> {
    Ok(FlatnessReport {
        depth,
        sigma: sigma_scan(&sd.window, depth)?,
        y_chain: chain_order_check(&sd.window, depth, true),
        z_chain: chain_order_check(&sd.window, depth, false),
    })
}

/// No path of `T⁺` of the horizontal path through `sym` is r-maximal:
/// every stretch of `scan_limit` levels starting in `[−depth, depth]`
/// contains a level where `sym` has two incoming edges.
fn r_max_excluded(w: &DiagramWindow, depth: i64, sym: &str) -> CertItem {
    let name = format!("T+(horizontal {sym}) has no r-max path");
    let scan = w.scan_limit as i64;
    let run = || -> Result<Option<i64>> {
        let a = symbol_index(w, 0, sym)?;
        for n0 in -depth..=depth {
            let mut found = false;
            for k in n0..n0 + scan {
                if w.edge_set(k)?.into[a].len() > 1 {
                    found = true;
                    break;
                }
            }
            if !found {
                return Ok(Some(n0));
            }
        }
        Ok(None)
    };
    match run() {
        Ok(None) => CertItem {
            name,
            status: CertStatus::Certified,
            detail: format!("{sym} branches within every {scan}-level stretch from [{}, {depth}]", -depth),
        },
        Ok(Some(n0)) => CertItem {
            name,
            status: CertStatus::Inconclusive,
            detail: format!("no branching at {sym} within {scan} levels after {n0}"),
        },
        Err(e) => CertItem {
            name,
            status: CertStatus::Inconclusive,
            detail: e.to_string(),
        },
    }
}

/// Standing hypotheses plus the surface-specific facts behind them.
pub fn verify_standard(sd: &SurfaceDiagram, depth: i64) -> Result<CertificateReport> {
    let w = &sd.window;
    let mut rep = standing_hypotheses_check(w, depth);
    let ext = s_extreme_classes(sd, depth)?;
    let mut surface_items = ext.certs.clone();
    surface_items.push(r_max_excluded(w, depth, &sd.a0));
    surface_items.push(r_max_excluded(w, depth, &sd.a1));
    let surface_ok = surface_items.iter().all(|c| c.status == CertStatus::Certified);
    if surface_ok {
        if let Some(item) = rep.items.iter_mut().find(|i| i.name == "extremal paths avoid boundaries") {
            if item.status == CertStatus::Inconclusive {
                item.status = CertStatus::Certified;
                item.detail = format!(
                    "s-extremal paths are the horizontal paths through {} and {} (r-minimal); r-max paths leave their tail classes",
                    sd.a0, sd.a1
                );
            }
        }
    }
    rep.items.extend(surface_items);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::states_charts::validate_state;

    #[test]
    fn build_basic_facts() {
        let t = fixtures::hyper_triple().unwrap();
        let sd = build(&t, -5, 5).unwrap();
        for k in -4..=5 {
            assert_eq!(sd.window.edge_set(k).unwrap().len(), 5);
        }
        let r = validate_state(&sd.window, &sd.state).unwrap();
        assert!(r.valid, "{:?}", r.violations);
        assert_eq!(r.invariant, Some(t.area()));
        assert_eq!(horizontal_paths(&sd).unwrap().len(), 4);
        assert!(shift_law_check(&t, -3, 3).unwrap());
    }

    #[test]
    fn certificates_on_both_classes() {
        for t in [fixtures::hyper_triple().unwrap(), fixtures::second_triple().unwrap()] {
            let sd = build(&t, -12, 12).unwrap();
            let ext = s_extreme_classes(&sd, 6).unwrap();
            assert!(ext.all_certified(), "{:?}", ext.certs);
            let flat = verify_flatness(&sd, 6).unwrap();
            assert!(flat.flat(), "{:?} {:?} {:?}", flat.sigma.singular.len(), flat.y_chain, flat.z_chain);
            let std = verify_standard(&sd, 6).unwrap();
            assert!(std.all_certified(), "{:?}", std.items);
        }
    }
}
