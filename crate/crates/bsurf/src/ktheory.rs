//! K₀ of the diagram algebras as finite stages of integer-matrix inductive
//! systems, the θ/σ bookkeeping, and the state pairing.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::core_diagram::{edge_matrix_any, DiagramWindow};
use crate::error::{BsurfError, Result};
use crate::matrix::{serde_int, serde_intvec, serde_intvecs, IntMatrix};
use crate::rat::Q;
use crate::states_charts::State;

/// Smith normal form `U · M · V = D` with `D` diagonal, non-negative and
/// each diagonal entry dividing the next.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SnfResult {
    /// Diagonal entries `d_1 | d_2 | …` (length `min(rows, cols)`).
    #[serde(with = "serde_intvec")]
    pub diagonal: Vec<BigInt>,
    pub left: IntMatrix,
    pub right: IntMatrix,
}

impl SnfResult {
    pub fn rank(&self) -> usize {
        self.diagonal.iter().filter(|d| !d.is_zero()).count()
    }
}

fn swap_rows(m: &mut [Vec<BigInt>], a: usize, b: usize) {
    m.swap(a, b);
}

fn swap_cols(m: &mut [Vec<BigInt>], a: usize, b: usize) {
    for row in m.iter_mut() {
        row.swap(a, b);
    }
}

/// row_a ← row_a − q·row_b
fn row_sub(m: &mut [Vec<BigInt>], a: usize, b: usize, q: &BigInt) {
    let rb = m[b].clone();
    for (x, y) in m[a].iter_mut().zip(rb) {
        *x -= q * y;
    }
}

/// col_a ← col_a − q·col_b
fn col_sub(m: &mut [Vec<BigInt>], a: usize, b: usize, q: &BigInt) {
    for row in m.iter_mut() {
        let y = row[b].clone();
        row[a] -= q * y;
    }
}

fn to_rows(m: &IntMatrix) -> Vec<Vec<BigInt>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn from_rows(rows: Vec<Vec<BigInt>>, r: usize, c: usize) -> IntMatrix {
    let mut out = IntMatrix::zeros(r, c);
    for (i, row) in rows.into_iter().enumerate() {
        for (j, x) in row.into_iter().enumerate() {
            out.set(i, j, x);
        }
    }
    out
}

/// Smith normal form by pivoting on the smallest non-zero entry.
pub fn smith_normal_form(m: &IntMatrix) -> SnfResult {
    let (r, c) = (m.rows(), m.cols());
    let mut a = to_rows(m);
    let mut u = to_rows(&IntMatrix::identity(r));
    let mut v = to_rows(&IntMatrix::identity(c));
    let mut t = 0;
    while t < r.min(c) {
        // Smallest non-zero entry of the lower-right block.
        let mut best: Option<(usize, usize)> = None;
        for i in t..r {
            for j in t..c {
                if !a[i][j].is_zero() && best.is_none_or(|(bi, bj)| a[i][j].abs() < a[bi][bj].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        swap_rows(&mut a, t, pi);
        swap_rows(&mut u, t, pi);
        swap_cols(&mut a, t, pj);
        swap_cols(&mut v, t, pj);
        let mut clean = true;
        for i in t + 1..r {
            if !a[i][t].is_zero() {
                let q = a[i][t].div_floor(&a[t][t]);
                row_sub(&mut a, i, t, &q);
                row_sub(&mut u, i, t, &q);
                clean &= a[i][t].is_zero();
            }
        }
        for j in t + 1..c {
            if !a[t][j].is_zero() {
                let q = a[t][j].div_floor(&a[t][t]);
                col_sub(&mut a, j, t, &q);
                col_sub(&mut v, j, t, &q);
                clean &= a[t][j].is_zero();
            }
        }
        if !clean {
            continue;
        }
        // Divisibility: fold a non-divisible entry into the pivot row.
        let mut bad = None;
        'outer: for i in t + 1..r {
            for j in t + 1..c {
                if !a[i][j].is_multiple_of(&a[t][t]) {
                    bad = Some(i);
                    break 'outer;
                }
            }
        }
        if let Some(i) = bad {
            let minus_one = -BigInt::one();
            row_sub(&mut a, t, i, &minus_one);
            row_sub(&mut u, t, i, &minus_one);
            continue;
        }
        if a[t][t].is_negative() {
            for x in a[t].iter_mut() {
                *x = -x.clone();
            }
            for x in u[t].iter_mut() {
                *x = -x.clone();
            }
        }
        t += 1;
    }
    let diagonal = (0..r.min(c)).map(|i| a[i][i].clone()).collect();
    SnfResult {
        diagonal,
        left: from_rows(u, r, r),
        right: from_rows(v, c, c),
    }
}

/// Stage ranks and connecting matrices; `maps[i]` goes from stage
/// `start + i` to stage `start + i + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InductiveSystem {
    pub start: i64,
    pub dims: Vec<usize>,
    pub maps: Vec<IntMatrix>,
}

impl InductiveSystem {
    pub fn new(start: i64, dims: Vec<usize>, maps: Vec<IntMatrix>) -> Result<Self> {
        if dims.len() != maps.len() + 1 {
            return Err(BsurfError::DimensionMismatch(format!(
                "{} stages need {} maps, got {}",
                dims.len(),
                dims.len().saturating_sub(1),
                maps.len()
            )));
        }
        for (i, m) in maps.iter().enumerate() {
            if m.cols() != dims[i] || m.rows() != dims[i + 1] {
                return Err(BsurfError::DimensionMismatch(format!(
                    "map {} is {}×{}, expected {}×{}",
                    i,
                    m.rows(),
                    m.cols(),
                    dims[i + 1],
                    dims[i]
                )));
            }
            if !m.is_nonnegative() {
                return Err(BsurfError::Invalid(format!("map {i} has a negative entry")));
            }
        }
        Ok(InductiveSystem { start, dims, maps })
    }

    /// Edge matrices `E_{m+1}, …, E_n` of a window.
    pub fn from_window(w: &DiagramWindow, m: i64, n: i64) -> Result<Self> {
        if m > n {
            return Err(BsurfError::Invalid(format!("need m ≤ n, got [{m}, {n}]")));
        }
        let dims = (m..=n).map(|k| Ok(w.level(k)?.len())).collect::<Result<Vec<_>>>()?;
        let maps = (m + 1..=n).map(|k| edge_matrix_any(w, k)).collect::<Result<Vec<_>>>()?;
        InductiveSystem::new(m, dims, maps)
    }

    pub fn end(&self) -> i64 {
        self.start + self.maps.len() as i64
    }

    /// `E_n ⋯ E_{m+1}` from stage `m` to stage `n`.
    pub fn composite(&self, m: i64, n: i64) -> Result<IntMatrix> {
        if m > n || m < self.start || n > self.end() {
            return Err(BsurfError::Invalid(format!(
                "stages [{m}, {n}] outside [{}, {}]",
                self.start,
                self.end()
            )));
        }
        let mut acc = IntMatrix::identity(self.dims[(m - self.start) as usize]);
        for k in m..n {
            acc = self.maps[(k - self.start) as usize].mul(&acc)?;
        }
        Ok(acc)
    }
}

/// Finite-stage picture between two stages.
#[derive(Clone, Debug, Serialize)]
pub struct StageReport {
    pub m: i64,
    pub n: i64,
    pub composite: IntMatrix,
    pub snf: SnfResult,
    pub rank: usize,
    /// Invariant factors `> 1` of the cokernel.
    #[serde(with = "serde_intvec")]
    pub torsion: Vec<BigInt>,
    /// Rank of the cokernel's free part.
    pub coker_free_rank: usize,
    pub unimodular: bool,
}

/// The composite from stage `m` to stage `n` with its Smith form.
pub fn k0_stage(sys: &InductiveSystem, m: i64, n: i64) -> Result<StageReport> {
    let composite = sys.composite(m, n)?;
    let snf = smith_normal_form(&composite);
    let rank = snf.rank();
    let torsion = snf.diagonal.iter().filter(|d| **d > BigInt::one()).cloned().collect();
    let unimodular = composite.is_square() && composite.det()?.abs().is_one();
    Ok(StageReport {
        m,
        n,
        coker_free_rank: composite.rows() - rank,
        composite,
        snf,
        rank,
        torsion,
        unimodular,
    })
}

/// What the provided prefix says about the limit group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Classification {
    /// Every map is unimodular: the limit is `ℤ^d`.
    FreeAbelian { rank: usize },
    /// Stationary `1×1` map `[k]` with `k ≥ 2`: the limit is `ℤ[1/k]`.
    LocalizedIntegers {
        #[serde(with = "serde_int")]
        k: BigInt,
    },
    /// No closed form; finite-stage data only.
    Report {
        dims: Vec<usize>,
        stage_ranks: Vec<usize>,
        torsion_free: bool,
    },
}

/// Classification together with the rank over ℚ of the prefix.
#[derive(Clone, Debug, Serialize)]
pub struct K0Classification {
    pub classification: Classification,
    /// Rank of the full composite (an upper bound for the rational rank
    /// of the limit, exact when the maps are eventually invertible over ℚ).
    pub rational_rank: usize,
    /// `Some(false)` when the limit is known not to be finitely generated.
    pub finitely_generated: Option<bool>,
    /// Number of maps inspected.
    pub prefix_len: usize,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Classification::FreeAbelian { rank } => write!(f, "Z^{rank}"),
            Classification::LocalizedIntegers { k } => write!(f, "Z[1/{k}]"),
            Classification::Report { .. } => write!(f, "system report"),
        }
    }
}

/// Classifies the limit from the finite prefix of maps.
pub fn k0_classify(sys: &InductiveSystem) -> Result<K0Classification> {
    let rational_rank = sys.composite(sys.start, sys.end())?.rank();
    let all_unimodular = sys
        .maps
        .iter()
        .map(|m| Ok(m.is_square() && m.det()?.abs().is_one()))
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .all(|x| x);
    let stationary_scalar = sys.maps.first().and_then(|m0| {
        (m0.rows() == 1 && m0.cols() == 1 && sys.maps.iter().all(|m| m == m0)).then(|| m0.get(0, 0).clone())
    });
    let (classification, fg) = if all_unimodular {
        (
            Classification::FreeAbelian { rank: sys.dims[0] },
            Some(true),
        )
    } else if let Some(k) = stationary_scalar.filter(|k| *k >= BigInt::from(2)) {
        (Classification::LocalizedIntegers { k }, Some(false))
    } else {
        let mut stage_ranks = Vec::new();
        let mut torsion_free = true;
        for k in sys.start..sys.end() {
            let st = k0_stage(sys, k, k + 1)?;
            stage_ranks.push(st.rank);
            torsion_free &= st.torsion.is_empty();
        }
        (
            Classification::Report {
                dims: sys.dims.clone(),
                stage_ranks,
                torsion_free,
            },
            None,
        )
    };
    Ok(K0Classification {
        classification,
        rational_rank,
        finitely_generated: fg,
        prefix_len: sys.maps.len(),
    })
}

/// Pair set `I ⋆ J ⊆ {1..I} × {I+1..I+J}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ThetaData {
    pub i: usize,
    pub j: usize,
    pub star: Vec<(usize, usize)>,
}

impl ThetaData {
    pub fn new(i: usize, j: usize, star: Vec<(usize, usize)>) -> Result<Self> {
        for &(a, b) in &star {
            if a < 1 || a > i || b <= i || b > i + j {
                return Err(BsurfError::Invalid(format!(
                    "pair ({a},{b}) is not in {{1..{i}}}×{{{}..{}}}",
                    i + 1,
                    i + j
                )));
            }
        }
        let mut seen = star.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != star.len() {
            return Err(BsurfError::Invalid("repeated pair".into()));
        }
        Ok(ThetaData { i, j, star })
    }

    /// Parses `"1:2,1:3"`.
    pub fn parse_star(s: &str) -> Result<Vec<(usize, usize)>> {
        s.split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| {
                let (a, b) = p
                    .split_once(':')
                    .ok_or_else(|| BsurfError::Parse(format!("expected i:j, got {p:?}")))?;
                let a = a.trim().parse().map_err(|_| BsurfError::Parse(format!("bad index {a:?}")))?;
                let b = b.trim().parse().map_err(|_| BsurfError::Parse(format!("bad index {b:?}")))?;
                Ok((a, b))
            })
            .collect()
    }
}

/// θ, σ and the derived groups.
#[derive(Clone, Debug, Serialize)]
pub struct SequenceReport {
    /// `(I+J) × |star|`, column of `(i, j)` is `x_i + x_j`.
    pub theta: IntMatrix,
    /// `1 × (I+J)`: `+1` on the first `I` coordinates, `−1` after.
    pub sigma: IntMatrix,
    pub sigma_theta_zero: bool,
    pub kernel_rank: usize,
    /// Basis of `ker θ` (each normalised to a positive first entry).
    #[serde(with = "serde_intvecs")]
    pub kernel_basis: Vec<Vec<BigInt>>,
    /// Invariant factors `> 1` of `coker θ`.
    #[serde(with = "serde_intvec")]
    pub coker_torsion: Vec<BigInt>,
    pub coker_free_rank: usize,
    /// θ₁ and θ₂ hit every index that occurs in the star.
    pub projections_onto: bool,
    /// `I = 1` or `J = 1`.
    pub i_star_iso: bool,
}

/// Builds θ and σ and computes `ker θ`, `coker θ` by Smith form.
pub fn theta_sequence(td: &ThetaData) -> Result<SequenceReport> {
    let n = td.i + td.j;
    let mut theta = IntMatrix::zeros(n, td.star.len());
    for (col, &(a, b)) in td.star.iter().enumerate() {
        theta.add_to(a - 1, col, 1);
        theta.add_to(b - 1, col, 1);
    }
    let mut sigma = IntMatrix::zeros(1, n);
    for k in 0..n {
        sigma.add_to(0, k, if k < td.i { 1 } else { -1 });
    }
    let st = sigma.mul(&theta)?;
    let sigma_theta_zero = (0..st.cols()).all(|c| st.get(0, c).is_zero());
    let snf = smith_normal_form(&theta);
    let rank = snf.rank();
    let kernel_basis: Vec<Vec<BigInt>> = (rank..td.star.len())
        .map(|c| {
            let mut v: Vec<BigInt> = (0..td.star.len()).map(|r| snf.right.get(r, c).clone()).collect();
            if v.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative()) {
                v = v.into_iter().map(|x| -x).collect();
            }
            v
        })
        .collect();
    let coker_torsion = snf.diagonal.iter().filter(|d| **d > BigInt::one()).cloned().collect();
    let used_i: std::collections::BTreeSet<usize> = td.star.iter().map(|p| p.0).collect();
    let used_j: std::collections::BTreeSet<usize> = td.star.iter().map(|p| p.1).collect();
    let projections_onto = !td.star.is_empty() && used_i.len() == td.i && used_j.len() == td.j;
    Ok(SequenceReport {
        theta,
        sigma,
        sigma_theta_zero,
        kernel_rank: td.star.len() - rank,
        kernel_basis,
        coker_torsion,
        coker_free_rank: n - rank,
        projections_onto,
        i_star_iso: td.i == 1 || td.j == 1,
    })
}

/// `⟨ν_s^{(n)}, class⟩ = Σ_v ν_s(v) class_v` on level `n`.
pub fn state_pairing(st: &State, n: i64, class: &[BigInt]) -> Result<Q> {
    let nu = st.nu(n)?;
    if nu.1.len() != class.len() {
        return Err(BsurfError::DimensionMismatch(format!(
            "class has {} entries, level {n} has {}",
            class.len(),
            nu.1.len()
        )));
    }
    Ok(nu
        .1
        .iter()
        .zip(class)
        .map(|(a, c)| a * Q::from_integer(c.clone()))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_snf(m: &IntMatrix) {
        let s = smith_normal_form(m);
        let d = s.left.mul(m).unwrap().mul(&s.right).unwrap();
        for i in 0..d.rows() {
            for j in 0..d.cols() {
                let want = if i == j { s.diagonal[i].clone() } else { BigInt::zero() };
                assert_eq!(d.get(i, j), &want);
            }
        }
        assert!(s.left.det().unwrap().abs().is_one());
        assert!(s.right.det().unwrap().abs().is_one());
        for w in s.diagonal.windows(2) {
            assert!(w[1].is_zero() || w[1].is_multiple_of(&w[0]));
        }
    }

    #[test]
    fn snf_small_cases() {
        check_snf(&IntMatrix::from_rows(&[vec![2, 4, 4], vec![-6, 6, 12], vec![10, -4, -16]]));
        check_snf(&IntMatrix::from_rows(&[vec![2, 0], vec![0, 3]]));
        check_snf(&IntMatrix::from_rows(&[vec![0, 0], vec![0, 0]]));
        let s = smith_normal_form(&IntMatrix::from_rows(&[vec![2, 0], vec![0, 3]]));
        assert_eq!(s.diagonal, vec![BigInt::from(1), BigInt::from(6)]);
    }

    #[test]
    fn theta_two_by_two() {
        let td = ThetaData::new(2, 2, vec![(1, 3), (1, 4), (2, 3), (2, 4)]).unwrap();
        let r = theta_sequence(&td).unwrap();
        assert!(r.sigma_theta_zero);
        assert_eq!(r.kernel_rank, 1);
        let want: Vec<BigInt> = [1, -1, -1, 1].iter().map(|&x| BigInt::from(x)).collect();
        assert_eq!(r.kernel_basis, vec![want]);
    }
}
