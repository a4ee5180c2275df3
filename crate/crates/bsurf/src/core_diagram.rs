//! Finite windows of ordered bi-infinite Bratteli diagrams.
//!
//! A window holds levels `m..=n` explicitly; an optional pure generator
//! supplies any level outside the window on demand (cached). Edges carry a
//! rank in their range fiber (`≤_r`) and a rank in their source fiber (`≤_s`).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{BsurfError, Result};
use crate::matrix::IntMatrix;

/// Default number of levels scanned when classifying tails.
pub const DEFAULT_SCAN_LIMIT: usize = 64;

/// Ordered set of distinct symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<String>,
    index: HashMap<String, usize>,
}

impl Alphabet {
    pub fn new(symbols: Vec<String>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(BsurfError::Invalid("alphabet must be non-empty".into()));
        }
        let mut index = HashMap::new();
        for (i, s) in symbols.iter().enumerate() {
            if index.insert(s.clone(), i).is_some() {
                return Err(BsurfError::Invalid(format!("duplicate symbol {s:?}")));
            }
        }
        Ok(Alphabet { symbols, index })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn symbol(&self, i: usize) -> &str {
        &self.symbols[i]
    }

    pub fn index_of(&self, s: &str) -> Option<usize> {
        self.index.get(s).copied()
    }
}

/// One level `V_n` of the diagram.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Level {
    pub index: i64,
    pub vertices: Vec<String>,
}

/// One edge of `E_n`, from `source ∈ V_{n−1}` to `range ∈ V_n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub level: i64,
    pub id: String,
    pub source: String,
    pub range: String,
    pub r_rank: usize,
    pub s_rank: usize,
}

/// Which of the two partial orders.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Order {
    R,
    S,
}

/// Direction of a lexicographic neighbour.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Step {
    Succ,
    Pred,
}

/// Result of comparing two finite paths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PathOrder {
    Lt,
    Eq,
    Gt,
    Incomparable,
}

/// A compiled level: vertex names plus a name lookup.
#[derive(Debug)]
pub struct LevelData {
    pub index: i64,
    pub vertices: Vec<String>,
    lookup: HashMap<String, usize>,
}

impl LevelData {
    fn new(level: Level) -> Result<Self> {
        if level.vertices.is_empty() {
            return Err(BsurfError::Invalid(format!(
                "level {} has no vertices",
                level.index
            )));
        }
        let mut lookup = HashMap::new();
        for (i, v) in level.vertices.iter().enumerate() {
            if lookup.insert(v.clone(), i).is_some() {
                return Err(BsurfError::Invalid(format!(
                    "duplicate vertex {v:?} on level {}",
                    level.index
                )));
            }
        }
        Ok(LevelData {
            index: level.index,
            vertices: level.vertices,
            lookup,
        })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.lookup.get(name).copied()
    }

    pub fn to_level(&self) -> Level {
        Level {
            index: self.index,
            vertices: self.vertices.clone(),
        }
    }
}

/// A compiled edge level `E_n` with index-based fibers.
#[derive(Debug)]
pub struct EdgeSet {
    pub level: i64,
    pub edges: Vec<Edge>,
    /// Source vertex index (in `V_{n−1}`) of each edge.
    pub src: Vec<usize>,
    /// Range vertex index (in `V_n`) of each edge.
    pub rng: Vec<usize>,
    /// Edges into each vertex of `V_n`, sorted by `r_rank`.
    pub into: Vec<Vec<usize>>,
    /// Edges out of each vertex of `V_{n−1}`, sorted by `s_rank`.
    pub out: Vec<Vec<usize>>,
    pos_r: Vec<usize>,
    pos_s: Vec<usize>,
    ids: HashMap<String, usize>,
}

impl EdgeSet {
    fn compile(prev: &LevelData, cur: &LevelData, edges: Vec<Edge>) -> Result<Self> {
        let level = cur.index;
        let mut src = Vec::with_capacity(edges.len());
        let mut rng = Vec::with_capacity(edges.len());
        let mut ids = HashMap::new();
        for (k, e) in edges.iter().enumerate() {
            if e.level != level {
                return Err(BsurfError::Invalid(format!(
                    "edge {:?} declares level {} inside E_{level}",
                    e.id, e.level
                )));
            }
            let s = prev.find(&e.source).ok_or_else(|| {
                BsurfError::Invalid(format!(
                    "edge {:?} at level {level}: unknown source {:?}",
                    e.id, e.source
                ))
            })?;
            let r = cur.find(&e.range).ok_or_else(|| {
                BsurfError::Invalid(format!(
                    "edge {:?} at level {level}: unknown range {:?}",
                    e.id, e.range
                ))
            })?;
            if ids.insert(e.id.clone(), k).is_some() {
                return Err(BsurfError::Invalid(format!(
                    "duplicate edge id {:?} at level {level}",
                    e.id
                )));
            }
            src.push(s);
            rng.push(r);
        }
        let mut into = vec![Vec::new(); cur.len()];
        let mut out = vec![Vec::new(); prev.len()];
        for k in 0..edges.len() {
            into[rng[k]].push(k);
            out[src[k]].push(k);
        }
        for f in &mut into {
            f.sort_by_key(|&k| (edges[k].r_rank, k));
        }
        for f in &mut out {
            f.sort_by_key(|&k| (edges[k].s_rank, k));
        }
        let mut pos_r = vec![0; edges.len()];
        let mut pos_s = vec![0; edges.len()];
        for f in &into {
            for (i, &k) in f.iter().enumerate() {
                pos_r[k] = i;
            }
        }
        for f in &out {
            for (i, &k) in f.iter().enumerate() {
                pos_s[k] = i;
            }
        }
        Ok(EdgeSet {
            level,
            edges,
            src,
            rng,
            into,
            out,
            pos_r,
            pos_s,
            ids,
        })
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn id(&self, e: usize) -> &str {
        &self.edges[e].id
    }

    pub fn find(&self, id: &str) -> Option<usize> {
        self.ids.get(id).copied()
    }

    pub fn is_s_max(&self, e: usize) -> bool {
        self.pos_s[e] + 1 == self.out[self.src[e]].len()
    }

    pub fn is_s_min(&self, e: usize) -> bool {
        self.pos_s[e] == 0
    }

    pub fn is_r_max(&self, e: usize) -> bool {
        self.pos_r[e] + 1 == self.into[self.rng[e]].len()
    }

    pub fn is_r_min(&self, e: usize) -> bool {
        self.pos_r[e] == 0
    }

    /// Extremality test for a (order, max?) pair.
    pub fn is_extreme(&self, e: usize, order: Order, max: bool) -> bool {
        match (order, max) {
            (Order::S, true) => self.is_s_max(e),
            (Order::S, false) => self.is_s_min(e),
            (Order::R, true) => self.is_r_max(e),
            (Order::R, false) => self.is_r_min(e),
        }
    }

    /// Immediate neighbour of `e` within its fiber for the given order.
    pub fn neighbour(&self, e: usize, order: Order, step: Step) -> Option<usize> {
        let (fiber, pos) = match order {
            Order::S => (&self.out[self.src[e]], self.pos_s[e]),
            Order::R => (&self.into[self.rng[e]], self.pos_r[e]),
        };
        match step {
            Step::Succ => fiber.get(pos + 1).copied(),
            Step::Pred => pos.checked_sub(1).map(|p| fiber[p]),
        }
    }

    /// Position of `e` in its `≤_r` fiber.
    pub fn r_position(&self, e: usize) -> usize {
        self.pos_r[e]
    }

    /// Position of `e` in its `≤_s` fiber.
    pub fn s_position(&self, e: usize) -> usize {
        self.pos_s[e]
    }
}

/// Pure source of levels outside an explicit window.
///
/// Implementations must return the same data for the same index on every
/// call; windows cache the results.
pub trait LevelGenerator: Send + Sync {
    /// Vertices of `V_n`.
    fn level(&self, n: i64) -> Result<Level>;
    /// Edges of `E_n`, from `V_{n−1}` to `V_n`.
    fn edges(&self, n: i64) -> Result<Vec<Edge>>;
}

#[derive(Default)]
struct Cache {
    levels: HashMap<i64, Arc<LevelData>>,
    edges: HashMap<i64, Arc<EdgeSet>>,
}

/// A finite slice `[m, n]` of an ordered Bratteli diagram, optionally
/// extendable on demand by a generator.
#[derive(Clone)]
pub struct DiagramWindow {
    m: i64,
    n: i64,
    levels: Vec<Arc<LevelData>>,
    edge_sets: Vec<Arc<EdgeSet>>,
    generator: Option<Arc<dyn LevelGenerator>>,
    cache: Arc<Mutex<Cache>>,
    /// Number of levels inspected when classifying tails or searching.
    pub scan_limit: usize,
}

impl fmt::Debug for DiagramWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiagramWindow")
            .field("m", &self.m)
            .field("n", &self.n)
            .field("generator", &self.generator.is_some())
            .finish()
    }
}

/// The JSON interchange form of a window.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagramJson {
    pub levels: Vec<Level>,
    pub edges: Vec<Edge>,
}

/// A path `(p_{m+1}, …, p_n)` stored as edge indices into each `E_k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FinitePath {
    pub start: i64,
    pub edges: Vec<usize>,
}

impl FinitePath {
    pub fn new(start: i64, edges: Vec<usize>) -> Self {
        FinitePath { start, edges }
    }

    /// Level of the range vertex of the last edge.
    pub fn end(&self) -> i64 {
        self.start + self.edges.len() as i64
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Edge level of position `i`.
    pub fn level_of(&self, i: usize) -> i64 {
        self.start + 1 + i as i64
    }

    /// Edge index at edge level `k`, if covered.
    pub fn at(&self, k: i64) -> Option<usize> {
        let i = k - self.start - 1;
        if i < 0 {
            return None;
        }
        self.edges.get(i as usize).copied()
    }
}

/// One violated invariant found by [`validate_window`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub level: i64,
    pub kind: String,
    pub detail: String,
}

/// Outcome of a report-style validation.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn has(&self, kind: &str) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

impl DiagramWindow {
    /// Builds a window from explicit levels and edges.
    pub fn new(levels: Vec<Level>, edges: Vec<Edge>) -> Result<Self> {
        if levels.is_empty() {
            return Err(BsurfError::Invalid("empty window: no levels".into()));
        }
        let mut levels = levels;
        levels.sort_by_key(|l| l.index);
        let m = levels[0].index;
        let n = levels[levels.len() - 1].index;
        for (i, l) in levels.iter().enumerate() {
            if l.index != m + i as i64 {
                return Err(BsurfError::Invalid(format!(
                    "level indices are not contiguous near {}",
                    l.index
                )));
            }
        }
        let level_data: Vec<Arc<LevelData>> = levels
            .into_iter()
            .map(|l| LevelData::new(l).map(Arc::new))
            .collect::<Result<_>>()?;
        let mut grouped: BTreeMap<i64, Vec<Edge>> = BTreeMap::new();
        for e in edges {
            if e.level <= m || e.level > n {
                return Err(BsurfError::Invalid(format!(
                    "edge {:?} at level {} outside window ({m}, {n}]",
                    e.id, e.level
                )));
            }
            grouped.entry(e.level).or_default().push(e);
        }
        let mut edge_sets = Vec::new();
        for k in m + 1..=n {
            let es = grouped.remove(&k).unwrap_or_default();
            let prev = &level_data[(k - 1 - m) as usize];
            let cur = &level_data[(k - m) as usize];
            edge_sets.push(Arc::new(EdgeSet::compile(prev, cur, es)?));
        }
        Ok(DiagramWindow {
            m,
            n,
            levels: level_data,
            edge_sets,
            generator: None,
            cache: Arc::new(Mutex::new(Cache::default())),
            scan_limit: DEFAULT_SCAN_LIMIT,
        })
    }

    /// Materialises levels `m..=n` from a generator, which stays attached.
    pub fn from_generator(gen: Arc<dyn LevelGenerator>, m: i64, n: i64) -> Result<Self> {
        if m > n {
            return Err(BsurfError::Invalid(format!("empty window [{m}, {n}]")));
        }
        let mut levels = Vec::new();
        let mut edges = Vec::new();
        for k in m..=n {
            levels.push(gen.level(k)?);
            if k > m {
                edges.extend(gen.edges(k)?);
            }
        }
        let mut w = Self::new(levels, edges)?;
        w.generator = Some(gen);
        Ok(w)
    }

    /// Attaches a generator used for levels outside `[m, n]`.
    pub fn with_generator(mut self, gen: Arc<dyn LevelGenerator>) -> Self {
        self.generator = Some(gen);
        self
    }

    /// Drops the generator (the window becomes strictly finite).
    pub fn without_generator(&self) -> Self {
        let mut w = self.clone();
        w.generator = None;
        w.cache = Arc::new(Mutex::new(Cache::default()));
        w
    }

    pub fn has_generator(&self) -> bool {
        self.generator.is_some()
    }

    pub fn bounds(&self) -> (i64, i64) {
        (self.m, self.n)
    }

    pub fn contains_level(&self, k: i64) -> bool {
        self.m <= k && k <= self.n
    }

    /// Vertex data of `V_k`.
    pub fn level(&self, k: i64) -> Result<Arc<LevelData>> {
        if self.contains_level(k) {
            return Ok(self.levels[(k - self.m) as usize].clone());
        }
        let gen = self.generator.as_ref().ok_or(BsurfError::OutOfWindow(k))?;
        if let Some(l) = self.cache.lock().expect("cache poisoned").levels.get(&k) {
            return Ok(l.clone());
        }
        let l = Arc::new(LevelData::new(gen.level(k)?)?);
        self.cache
            .lock()
            .expect("cache poisoned")
            .levels
            .insert(k, l.clone());
        Ok(l)
    }

    /// Edge data of `E_k`.
    pub fn edge_set(&self, k: i64) -> Result<Arc<EdgeSet>> {
        if self.m < k && k <= self.n {
            return Ok(self.edge_sets[(k - self.m - 1) as usize].clone());
        }
        let gen = self.generator.as_ref().ok_or(BsurfError::OutOfWindow(k))?;
        if let Some(e) = self.cache.lock().expect("cache poisoned").edges.get(&k) {
            return Ok(e.clone());
        }
        let prev = self.level(k - 1)?;
        let cur = self.level(k)?;
        let es = Arc::new(EdgeSet::compile(&prev, &cur, gen.edges(k)?)?);
        self.cache
            .lock()
            .expect("cache poisoned")
            .edges
            .insert(k, es.clone());
        Ok(es)
    }

    /// JSON interchange form (levels ascending, edges grouped by level).
    pub fn to_json(&self) -> DiagramJson {
        DiagramJson {
            levels: self.levels.iter().map(|l| l.to_level()).collect(),
            edges: self
                .edge_sets
                .iter()
                .flat_map(|es| es.edges.iter().cloned())
                .collect(),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("diagram serialises") + "\n"
    }

    pub fn from_json(d: DiagramJson) -> Result<Self> {
        Self::new(d.levels, d.edges)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::from_json(serde_json::from_str(s)?)
    }

    /// Builds a path from edge ids starting at level `start`.
    pub fn path_from_ids(&self, start: i64, ids: &[&str]) -> Result<FinitePath> {
        let mut edges = Vec::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            let k = start + 1 + i as i64;
            let es = self.edge_set(k)?;
            edges.push(es.find(id).ok_or_else(|| {
                BsurfError::InvalidPath(format!("no edge {id:?} at level {k}"))
            })?);
        }
        let p = FinitePath::new(start, edges);
        self.check_path(&p)?;
        Ok(p)
    }

    /// Edge ids of a path.
    pub fn path_ids(&self, p: &FinitePath) -> Result<Vec<String>> {
        p.edges
            .iter()
            .enumerate()
            .map(|(i, &e)| Ok(self.edge_set(p.level_of(i))?.id(e).to_string()))
            .collect()
    }

    /// Checks composability `r(p_i) = s(p_{i+1})`.
    pub fn check_path(&self, p: &FinitePath) -> Result<()> {
        let mut prev_range: Option<usize> = None;
        for (i, &e) in p.edges.iter().enumerate() {
            let es = self.edge_set(p.level_of(i))?;
            if e >= es.len() {
                return Err(BsurfError::InvalidPath(format!(
                    "edge index {e} out of range at level {}",
                    p.level_of(i)
                )));
            }
            if let Some(r) = prev_range {
                if es.src[e] != r {
                    return Err(BsurfError::InvalidPath(format!(
                        "not composable at level {}",
                        p.level_of(i)
                    )));
                }
            }
            prev_range = Some(es.rng[e]);
        }
        Ok(())
    }

    /// Source vertex index (in `V_start`) of a non-empty path.
    pub fn path_source(&self, p: &FinitePath) -> Result<usize> {
        let e = *p
            .edges
            .first()
            .ok_or_else(|| BsurfError::InvalidPath("empty path".into()))?;
        Ok(self.edge_set(p.start + 1)?.src[e])
    }

    /// Range vertex index (in `V_end`) of a non-empty path.
    pub fn path_range(&self, p: &FinitePath) -> Result<usize> {
        let e = *p
            .edges
            .last()
            .ok_or_else(|| BsurfError::InvalidPath("empty path".into()))?;
        Ok(self.edge_set(p.end())?.rng[e])
    }

    /// Human-readable form `m:[id id …]`.
    pub fn path_label(&self, p: &FinitePath) -> String {
        match self.path_ids(p) {
            Ok(ids) => format!("{}:[{}]", p.start, ids.join(" ")),
            Err(_) => format!("{}:{:?}", p.start, p.edges),
        }
    }
}

/// Reports every violated structural invariant of the window.
pub fn validate_window(w: &DiagramWindow) -> ValidationReport {
    let mut violations = Vec::new();
    let (m, n) = w.bounds();
    for k in m + 1..=n {
        let es = match w.edge_set(k) {
            Ok(es) => es,
            Err(e) => {
                violations.push(Violation {
                    level: k,
                    kind: "structure".into(),
                    detail: e.to_string(),
                });
                continue;
            }
        };
        let prev = w.level(k - 1).expect("window level");
        let cur = w.level(k).expect("window level");
        for (v, fiber) in es.into.iter().enumerate() {
            if fiber.is_empty() {
                violations.push(Violation {
                    level: k,
                    kind: "r not surjective".into(),
                    detail: format!("vertex {:?} of V_{k} has no incoming edge", cur.vertices[v]),
                });
            }
            let ranks: Vec<usize> = fiber.iter().map(|&e| es.edges[e].r_rank).collect();
            check_ranks(&ranks, k, "r", &cur.vertices[v], &mut violations);
        }
        for (v, fiber) in es.out.iter().enumerate() {
            if fiber.is_empty() {
                violations.push(Violation {
                    level: k,
                    kind: "s not surjective".into(),
                    detail: format!(
                        "vertex {:?} of V_{} has no outgoing edge",
                        prev.vertices[v],
                        k - 1
                    ),
                });
            }
            let ranks: Vec<usize> = fiber.iter().map(|&e| es.edges[e].s_rank).collect();
            check_ranks(&ranks, k, "s", &prev.vertices[v], &mut violations);
        }
    }
    ValidationReport {
        valid: violations.is_empty(),
        violations,
    }
}

fn check_ranks(ranks: &[usize], level: i64, which: &str, vertex: &str, out: &mut Vec<Violation>) {
    let mut seen = HashSet::new();
    for &r in ranks {
        if !seen.insert(r) {
            out.push(Violation {
                level,
                kind: "rank collision".into(),
                detail: format!("{which}_rank {r} repeated in the fiber of {vertex:?}"),
            });
        }
    }
    if ranks.iter().any(|&r| r >= ranks.len()) {
        out.push(Violation {
            level,
            kind: "rank gap".into(),
            detail: format!(
                "{which}_ranks {ranks:?} in the fiber of {vertex:?} are not 0..{}",
                ranks.len()
            ),
        });
    }
}

/// Enumerates `E_{m,n}` (optionally filtered by endpoints) in `≤_s`
/// lexicographic order; sources are taken in declaration order.
pub fn finite_paths(
    w: &DiagramWindow,
    m: i64,
    n: i64,
    src: Option<&str>,
    rng: Option<&str>,
) -> Result<Vec<FinitePath>> {
    let (wm, wn) = w.bounds();
    if m >= n {
        return Err(BsurfError::Invalid(format!("need m < n, got [{m}, {n}]")));
    }
    if !w.has_generator() && (m < wm || n > wn) {
        return Err(BsurfError::OutOfWindow(if m < wm { m } else { n }));
    }
    let start = w.level(m)?;
    let end = w.level(n)?;
    let src_idx = match src {
        Some(v) => Some(start.find(v).ok_or_else(|| {
            BsurfError::Invalid(format!("no vertex {v:?} on level {m}"))
        })?),
        None => None,
    };
    let rng_idx = match rng {
        Some(v) => Some(end.find(v).ok_or_else(|| {
            BsurfError::Invalid(format!("no vertex {v:?} on level {n}"))
        })?),
        None => None,
    };
    finite_paths_idx(w, m, n, src_idx, rng_idx)
}

/// [`finite_paths`] with endpoint filters given as vertex indices.
pub fn finite_paths_idx(
    w: &DiagramWindow,
    m: i64,
    n: i64,
    src: Option<usize>,
    rng: Option<usize>,
) -> Result<Vec<FinitePath>> {
    if m >= n {
        return Err(BsurfError::Invalid(format!("need m < n, got [{m}, {n}]")));
    }
    let start = w.level(m)?;
    let sets: Vec<Arc<EdgeSet>> = (m + 1..=n).map(|k| w.edge_set(k)).collect::<Result<_>>()?;
    let mut out = Vec::new();
    let mut stack = Vec::new();
    for v in 0..start.len() {
        if src.is_some_and(|s| s != v) {
            continue;
        }
        dfs_paths(&sets, 0, v, rng, &mut stack, m, &mut out);
    }
    Ok(out)
}

fn dfs_paths(
    sets: &[Arc<EdgeSet>],
    depth: usize,
    v: usize,
    rng: Option<usize>,
    stack: &mut Vec<usize>,
    m: i64,
    out: &mut Vec<FinitePath>,
) {
    if depth == sets.len() {
        if rng.is_none_or(|r| r == v) {
            out.push(FinitePath::new(m, stack.clone()));
        }
        return;
    }
    let es = &sets[depth];
    for &e in &es.out[v] {
        stack.push(e);
        dfs_paths(sets, depth + 1, es.rng[e], rng, stack, m, out);
        stack.pop();
    }
}

/// Compares two paths of the same span under `≤_s` (leftmost difference)
/// or `≤_r` (rightmost difference).
pub fn compare_paths(
    w: &DiagramWindow,
    p: &FinitePath,
    q: &FinitePath,
    which: Order,
) -> Result<PathOrder> {
    if p.start != q.start || p.len() != q.len() {
        return Err(BsurfError::InvalidPath(format!(
            "mismatched spans [{}, {}] and [{}, {}]",
            p.start,
            p.end(),
            q.start,
            q.end()
        )));
    }
    if p.is_empty() {
        return Ok(PathOrder::Eq);
    }
    let rank = |k: i64, e: usize, order: Order| -> Result<usize> {
        let es = w.edge_set(k)?;
        Ok(match order {
            Order::S => es.edges[e].s_rank,
            Order::R => es.edges[e].r_rank,
        })
    };
    let ord = |a: usize, b: usize| match a.cmp(&b) {
        std::cmp::Ordering::Less => PathOrder::Lt,
        std::cmp::Ordering::Equal => PathOrder::Eq,
        std::cmp::Ordering::Greater => PathOrder::Gt,
    };
    match which {
        Order::S => {
            if w.path_source(p)? != w.path_source(q)? {
                return Ok(PathOrder::Incomparable);
            }
            for i in 0..p.len() {
                if p.edges[i] != q.edges[i] {
                    let k = p.level_of(i);
                    return Ok(ord(rank(k, p.edges[i], Order::S)?, rank(k, q.edges[i], Order::S)?));
                }
            }
        }
        Order::R => {
            if w.path_range(p)? != w.path_range(q)? {
                return Ok(PathOrder::Incomparable);
            }
            for i in (0..p.len()).rev() {
                if p.edges[i] != q.edges[i] {
                    let k = p.level_of(i);
                    return Ok(ord(rank(k, p.edges[i], Order::R)?, rank(k, q.edges[i], Order::R)?));
                }
            }
        }
    }
    Ok(PathOrder::Eq)
}

/// Immediate lexicographic neighbour of `p` among paths sharing its source
/// (`S`) or its range (`R`); `None` when `p` is extremal.
pub fn successor(
    w: &DiagramWindow,
    p: &FinitePath,
    which: Order,
    dir: Step,
) -> Result<Option<FinitePath>> {
    w.check_path(p)?;
    let n = p.len();
    match which {
        Order::S => {
            for i in (0..n).rev() {
                let k = p.level_of(i);
                let es = w.edge_set(k)?;
                if let Some(e2) = es.neighbour(p.edges[i], Order::S, dir) {
                    let mut edges = p.edges[..i].to_vec();
                    edges.push(e2);
                    let mut v = es.rng[e2];
                    for j in i + 1..n {
                        let es = w.edge_set(p.level_of(j))?;
                        let fiber = &es.out[v];
                        let e = match dir {
                            Step::Succ => fiber[0],
                            Step::Pred => fiber[fiber.len() - 1],
                        };
                        edges.push(e);
                        v = es.rng[e];
                    }
                    return Ok(Some(FinitePath::new(p.start, edges)));
                }
            }
            Ok(None)
        }
        Order::R => {
            for i in 0..n {
                let k = p.level_of(i);
                let es = w.edge_set(k)?;
                if let Some(e2) = es.neighbour(p.edges[i], Order::R, dir) {
                    let mut prefix = Vec::with_capacity(i);
                    let mut v = es.src[e2];
                    for j in (0..i).rev() {
                        let es = w.edge_set(p.level_of(j))?;
                        let fiber = &es.into[v];
                        let e = match dir {
                            Step::Succ => fiber[0],
                            Step::Pred => fiber[fiber.len() - 1],
                        };
                        prefix.push(e);
                        v = es.src[e];
                    }
                    prefix.reverse();
                    prefix.push(e2);
                    prefix.extend_from_slice(&p.edges[i + 1..]);
                    return Ok(Some(FinitePath::new(p.start, prefix)));
                }
            }
            Ok(None)
        }
    }
}

/// Multiplicity matrix of `E_n`: entry `(j, i)` counts edges from vertex `i`
/// of `V_{n−1}` to vertex `j` of `V_n`.
pub fn edge_matrix(w: &DiagramWindow, n: i64) -> Result<IntMatrix> {
    let (m, wn) = w.bounds();
    if n <= m || n > wn {
        return Err(BsurfError::OutOfWindow(n));
    }
    edge_matrix_any(w, n)
}

/// Like [`edge_matrix`] but also reaches generator-supplied levels.
pub fn edge_matrix_any(w: &DiagramWindow, n: i64) -> Result<IntMatrix> {
    let es = w.edge_set(n)?;
    let rows = w.level(n)?.len();
    let cols = w.level(n - 1)?.len();
    let mut mat = IntMatrix::zeros(rows, cols);
    for k in 0..es.len() {
        mat.add_to(es.rng[k], es.src[k], 1);
    }
    Ok(mat)
}

fn dot_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Graphviz rendering: levels left to right, vertices in declaration order,
/// edge labels `id:r_rank/s_rank`.
pub fn export_dot(w: &DiagramWindow) -> String {
    let (m, n) = w.bounds();
    let mut s = String::new();
    s.push_str("digraph bratteli {\n  rankdir=LR;\n  node [shape=circle];\n");
    for k in m..=n {
        let l = w.level(k).expect("window level");
        s.push_str(&format!("  subgraph level_{} {{\n    rank=same;\n", level_tag(k)));
        for v in &l.vertices {
            s.push_str(&format!(
                "    {} [label={}];\n",
                dot_quote(&format!("{k}:{v}")),
                dot_quote(v)
            ));
        }
        s.push_str("  }\n");
    }
    for k in m + 1..=n {
        let es = w.edge_set(k).expect("window edges");
        for e in &es.edges {
            s.push_str(&format!(
                "  {} -> {} [label={}];\n",
                dot_quote(&format!("{}:{}", k - 1, e.source)),
                dot_quote(&format!("{k}:{}", e.range)),
                dot_quote(&format!("{}:{}/{}", e.id, e.r_rank, e.s_rank))
            ));
        }
    }
    s.push_str("}\n");
    s
}

fn level_tag(k: i64) -> String {
    if k < 0 {
        format!("m{}", -k)
    } else {
        k.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn chamanara_window_is_valid() {
        let w = fixtures::chamanara_window(-2, 2).unwrap();
        let r = validate_window(&w);
        assert!(r.valid, "{:?}", r.violations);
        assert_eq!(edge_matrix(&w, 0).unwrap(), IntMatrix::from_rows(&[vec![2]]));
    }

    #[test]
    fn isolated_vertex_and_collision() {
        let mut d = fixtures::chamanara_window(0, 2).unwrap().to_json();
        d.levels[1].vertices.push("iso".into());
        let w = DiagramWindow::from_json(d.clone()).unwrap();
        let r = validate_window(&w);
        assert!(r.has("r not surjective"));
        assert!(r.has("s not surjective"));
        let m1 = edge_matrix(&w, 1).unwrap();
        assert!(m1.row(1).iter().all(|x| x == &0.into()));

        let mut d2 = fixtures::chamanara_window(0, 2).unwrap().to_json();
        d2.edges[1].r_rank = 0;
        let r2 = validate_window(&DiagramWindow::from_json(d2).unwrap());
        assert!(r2.has("rank collision"));
        assert!(r2.has("rank gap") || r2.has("rank collision"));
    }

    #[test]
    fn chamanara_compare_example() {
        let w = fixtures::chamanara_window(0, 2).unwrap();
        let p = w.path_from_ids(0, &["0", "1"]).unwrap();
        let q = w.path_from_ids(0, &["1", "0"]).unwrap();
        assert_eq!(compare_paths(&w, &p, &q, Order::S).unwrap(), PathOrder::Lt);
        assert_eq!(compare_paths(&w, &p, &q, Order::R).unwrap(), PathOrder::Gt);
        assert_eq!(compare_paths(&w, &p, &p, Order::R).unwrap(), PathOrder::Eq);
        assert_eq!(
            successor(&w, &w.path_from_ids(0, &["1", "1"]).unwrap(), Order::S, Step::Succ).unwrap(),
            None
        );
    }

    #[test]
    fn decimal_carry() {
        let w = fixtures::decimal_window(0, 3).unwrap();
        let p = w.path_from_ids(0, &["1", "9", "9"]).unwrap();
        let s = successor(&w, &p, Order::S, Step::Succ).unwrap().unwrap();
        assert_eq!(w.path_ids(&s).unwrap(), vec!["2", "0", "0"]);
        assert_eq!(finite_paths(&w, 0, 2, None, None).unwrap().len(), 100);
    }

    #[test]
    fn json_round_trip_and_dot() {
        let w = fixtures::chamanara_window(-2, 2).unwrap();
        let a = w.to_json_string();
        let b = DiagramWindow::from_json_str(&a).unwrap().to_json_string();
        assert_eq!(a, b);
        let dot = export_dot(&w);
        assert_eq!(dot.matches("rank=same").count(), 5);
        assert_eq!(dot.matches("->").count(), 8);
        assert!(DiagramWindow::new(vec![], vec![]).is_err());
    }
}
