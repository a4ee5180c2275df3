//! Shipped example objects: the one-vertex diagrams (Chamanara's 2-adic
//! diagram, the decimal diagram, the single-edge constant diagram) with
//! their states, and sample triples for both d = 4 Rauzy classes.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::core_diagram::{DiagramWindow, Edge, Level, LevelGenerator};
use crate::error::{BsurfError, Result};
use crate::iet_zip::{PermutationPair, TripleData};
use crate::induction::{completeness_check, random_triple};
use crate::rat::{self, Q};
use crate::states_charts::{State, StateGenerator};

/// Permutation of the hyperelliptic d = 4 class (genus 2).
pub const HYPER_PI: &str = "A B C D / D C B A";
/// Permutation of the other d = 4 class (genus 1).
pub const SECOND_PI: &str = "A B C D / D C A B";

/// Stationary diagram with one vertex `v` per level and `base` parallel
/// edges `"0".."base-1"`, each with `r_rank = s_rank = digit`.
#[derive(Clone, Debug)]
pub struct OneVertexGenerator {
    pub base: usize,
}

impl LevelGenerator for OneVertexGenerator {
    fn level(&self, n: i64) -> Result<Level> {
        Ok(Level {
            index: n,
            vertices: vec!["v".into()],
        })
    }

    fn edges(&self, n: i64) -> Result<Vec<Edge>> {
        Ok((0..self.base)
            .map(|k| Edge {
                level: n,
                id: k.to_string(),
                source: "v".into(),
                range: "v".into(),
                r_rank: k,
                s_rank: k,
            })
            .collect())
    }
}

/// State `ν_r(v_n) = b^n`, `ν_s(v_n) = b^{−n}` on a one-vertex diagram.
#[derive(Clone, Debug)]
pub struct OneVertexState {
    pub base: i64,
}

impl StateGenerator for OneVertexState {
    fn nu(&self, n: i64) -> Result<(Vec<Q>, Vec<Q>)> {
        Ok((vec![rat::qpow(self.base, n)], vec![rat::qpow(self.base, -n)]))
    }

    fn geometric(&self) -> Option<(usize, Q, Q)> {
        Some((1, rat::qi(self.base), rat::q(1, self.base)))
    }
}

/// Chamanara's diagram on `[m, n]` with its generator attached.
pub fn chamanara_window(m: i64, n: i64) -> Result<DiagramWindow> {
    DiagramWindow::from_generator(Arc::new(OneVertexGenerator { base: 2 }), m, n)
}

/// Chamanara's state `(2ⁿ, 2⁻ⁿ)`.
pub fn chamanara_state(m: i64, n: i64) -> Result<State> {
    State::from_generator(Arc::new(OneVertexState { base: 2 }), m, n)
}

/// Decimal diagram on `[m, n]`: ten edges per level.
pub fn decimal_window(m: i64, n: i64) -> Result<DiagramWindow> {
    DiagramWindow::from_generator(Arc::new(OneVertexGenerator { base: 10 }), m, n)
}

/// Decimal state `(10ⁿ, 10⁻ⁿ)`.
pub fn decimal_state(m: i64, n: i64) -> Result<State> {
    State::from_generator(Arc::new(OneVertexState { base: 10 }), m, n)
}

/// Constant diagram with a single edge per level.
pub fn constant_window(m: i64, n: i64) -> Result<DiagramWindow> {
    DiagramWindow::from_generator(Arc::new(OneVertexGenerator { base: 1 }), m, n)
}

/// Seed used for the shipped sample triples.
pub const TRIPLE_SEED: u64 = 20_240_601;
/// Denominator size (bits) of the shipped sample triples.
pub const TRIPLE_BITS: u32 = 128;
/// Depth of the Keane / RH certificates every shipped triple passes.
pub const CERT_DEPTH: usize = 200;

/// `count` seeded random triples on the class of `pi`, each passing the
/// Keane and RH-completeness certificates at `cert_depth`.
pub fn certified_triples(pi: &str, count: usize, seed: u64, cert_depth: usize) -> Result<Vec<TripleData>> {
    let perm = PermutationPair::parse(pi, false)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > 50 * count.max(1) {
            return Err(BsurfError::Invalid(format!(
                "only {} of {count} samples passed the depth-{cert_depth} certificates",
                out.len()
            )));
        }
        let t = random_triple(&perm, &mut rng, TRIPLE_BITS)?;
        let rep = completeness_check(&t, cert_depth);
        if rep.keane && rep.rh_complete {
            out.push(t);
        }
    }
    Ok(out)
}

/// `count` seeded random triples passing the depth-[`CERT_DEPTH`] certificates.
pub fn sample_triples(pi: &str, count: usize, seed: u64) -> Result<Vec<TripleData>> {
    certified_triples(pi, count, seed, CERT_DEPTH)
}

/// The shipped sample triple of the hyperelliptic class.
pub fn hyper_triple() -> Result<TripleData> {
    Ok(sample_triples(HYPER_PI, 1, TRIPLE_SEED)?.remove(0))
}

/// The shipped sample triple of the second class.
pub fn second_triple() -> Result<TripleData> {
    Ok(sample_triples(SECOND_PI, 1, TRIPLE_SEED)?.remove(0))
}
