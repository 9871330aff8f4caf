//! Dependent random choice: exact first-moment evaluators and the
//! randomized Q_n embedder built on them, plus the greedy extension and
//! embedding verifier shared by every embedder in the crate.

use crate::bigraph::{rational_pow, BipartiteGraph, Side, VertexSet};
use crate::bits::BitVec;
use crate::error::{Error, Result};
use crate::hypercube::{cube_neighbors, even_class, odd_class, CubeVertex};
use crate::rng;
use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::Zero;
use rand::Rng;

/// Parameters of the first-moment step: `s` sampled lower vertices,
/// `r`-tuples checked against threshold base `beta`, under asserted
/// density lower bound `alpha`.
#[derive(Debug, Clone, Copy)]
pub struct DrcParams {
    pub s: u32,
    pub r: u32,
    pub beta: f64,
    pub alpha: f64,
}

impl DrcParams {
    pub fn validate(&self) -> Result<()> {
        if self.s < 1 || self.r < 1 {
            return Err(Error::invalid("DrcParams: s and r must be >= 1"));
        }
        if !(self.beta > 0.0 && self.beta <= self.alpha && self.alpha <= 1.0) {
            return Err(Error::invalid("DrcParams: need 0 < beta <= alpha <= 1"));
        }
        Ok(())
    }
}

/// E |CN(X_1, ..., X_s)| for i.i.d. uniform lower vertices, exactly:
/// sum over upper v of (deg(v)/|down|)^s.
///
/// The returned value is always >= density^s * |upper| (power mean
/// inequality); this is asserted, not just tested.
pub fn expected_cn_size_exact(g: &BipartiteGraph, s: u32) -> BigRational {
    assert!(s >= 1, "s must be >= 1");
    let low = BigInt::from(g.lower_count() as u64);
    let mut num = BigInt::zero();
    for u in 0..g.upper_count() {
        num += BigInt::from(g.row(u).count_ones() as u64).pow(s);
    }
    let value = BigRational::new(num, low.pow(s));
    // density^s * |upper| <=> E^s / (U^{s-1} L^s)
    let e = BigInt::from(g.edge_count());
    let bound = BigRational::new(
        e.pow(s),
        BigInt::from(g.upper_count() as u64).pow(s - 1) * BigInt::from(g.lower_count() as u64).pow(s),
    );
    assert!(value >= bound, "first-moment lower bound violated");
    value
}

pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

/// Expected number of ordered r-tuples of elements of CN(X_1..X_s) whose
/// common neighborhood has size at most beta^r * |down|, exactly.
///
/// Enumerates all |upper|^r ordered tuples (repeats allowed) and sums
/// (|CN(tuple)|/|down|)^s over the bad ones. Refuses above the cap.
pub fn expected_bad_tuples_exact(
    g: &BipartiteGraph,
    r: u32,
    s: u32,
    beta: &BigRational,
) -> Result<BigRational> {
    expected_bad_tuples_exact_capped(g, r, s, beta, DEFAULT_ENUMERATION_CAP)
}

pub fn expected_bad_tuples_exact_capped(
    g: &BipartiteGraph,
    r: u32,
    s: u32,
    beta: &BigRational,
    cap: u128,
) -> Result<BigRational> {
    if r < 1 || s < 1 {
        return Err(Error::invalid("need r >= 1 and s >= 1"));
    }
    let alpha = g.density();
    if !(beta > &BigRational::zero() && beta <= &alpha) {
        return Err(Error::invalid(format!(
            "beta must lie in (0, alpha]; alpha = {alpha}"
        )));
    }
    let tuples = (g.upper_count() as u128)
        .checked_pow(r)
        .ok_or(Error::EnumerationCap { tuples: u128::MAX, cap })?;
    if tuples > cap {
        return Err(Error::EnumerationCap { tuples, cap });
    }

    let low = BigInt::from(g.lower_count() as u64);
    // bad <=> cn <= beta^r * |down|, compared exactly
    let threshold = rational_pow(beta, r as usize) * BigRational::from_integer(low.clone());
    let mut bad_cn_pow_sum = BigInt::zero();

    // depth-first over ordered tuples reusing prefix intersections
    let full = BitVec::ones(g.lower_count());
    let mut stack: Vec<BitVec> = vec![full];
    let mut choice: Vec<usize> = Vec::new();
    loop {
        if choice.len() == r as usize {
            let cn = stack.last().unwrap().count_ones();
            if BigRational::from_integer(BigInt::from(cn as u64)) <= threshold {
                bad_cn_pow_sum += BigInt::from(cn as u64).pow(s);
            }
        } else {
            let mut next = stack.last().unwrap().clone();
            next.and_assign(g.row(0));
            stack.push(next);
            choice.push(0);
            continue;
        }
        // advance odometer
        loop {
            match choice.pop() {
                None => {
                    let value = BigRational::new(bad_cn_pow_sum, low.pow(s));
                    let bound = rational_pow(beta, (r * s) as usize)
                        * rational_pow(
                            &BigRational::from_integer(BigInt::from(g.upper_count() as u64)),
                            r as usize,
                        );
                    assert!(value <= bound, "first-moment upper bound violated");
                    return Ok(value);
                }
                Some(i) => {
                    stack.pop();
                    if i + 1 < g.upper_count() {
                        let mut next = stack.last().unwrap().clone();
                        next.and_assign(g.row(i + 1));
                        stack.push(next);
                        choice.push(i + 1);
                        break;
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Cube embeddings
// ---------------------------------------------------------------------------

/// An injective, adjacency-preserving map from Q_n vertices into a host
/// graph. Odd-parity vertices land on `odd_side`, even-parity vertices on
/// the opposite side. `images[word]` is the host id of cube vertex `word`.
#[derive(Debug, Clone)]
pub struct CubeEmbedding {
    pub n: u32,
    pub odd_side: Side,
    pub images: Vec<usize>,
}

impl CubeEmbedding {
    pub fn side_of(&self, v: CubeVertex) -> Side {
        if v.parity_odd() {
            self.odd_side
        } else {
            self.odd_side.opposite()
        }
    }

    pub fn image_of(&self, v: CubeVertex) -> (Side, usize) {
        (self.side_of(v), self.images[v.word as usize])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    WrongImageCount { expected: usize, got: usize },
    ImageOutOfRange { word: u32, side: Side, id: usize },
    DuplicateImage { word_a: u32, word_b: u32, side: Side, id: usize },
    EdgeNotPreserved { odd_word: u32, even_word: u32 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::WrongImageCount { expected, got } => {
                write!(f, "expected {expected} images, got {got}")
            }
            Violation::ImageOutOfRange { word, side, id } => {
                write!(f, "cube vertex {word:b} maps to out-of-range {side} {id}")
            }
            Violation::DuplicateImage { word_a, word_b, side, id } => write!(
                f,
                "cube vertices {word_a:b} and {word_b:b} share image {side} {id}"
            ),
            Violation::EdgeNotPreserved { odd_word, even_word } => {
                write!(f, "cube edge ({odd_word:b}, {even_word:b}) not an edge of the host")
            }
        }
    }
}

/// Checks injectivity per side, image ranges, and adjacency of all
/// n * 2^{n-1} cube edges. Returns every violation found.
pub fn verify_embedding(g: &BipartiteGraph, e: &CubeEmbedding) -> Vec<Violation> {
    let mut out = Vec::new();
    let expected = 1usize << e.n;
    if e.images.len() != expected {
        out.push(Violation::WrongImageCount {
            expected,
            got: e.images.len(),
        });
        return out;
    }
    let mut seen: std::collections::HashMap<(bool, usize), u32> = std::collections::HashMap::new();
    for word in 0..expected as u32 {
        let v = CubeVertex { n: e.n, word };
        let (side, id) = e.image_of(v);
        if id >= g.part_size(side) {
            out.push(Violation::ImageOutOfRange { word, side, id });
            continue;
        }
        if let Some(&prev) = seen.get(&(v.parity_odd(), id)) {
            out.push(Violation::DuplicateImage {
                word_a: prev,
                word_b: word,
                side,
                id,
            });
        } else {
            seen.insert((v.parity_odd(), id), word);
        }
    }
    for word in 0..expected as u32 {
        let v = CubeVertex { n: e.n, word };
        if v.parity_odd() {
            continue;
        }
        let (even_side, even_id) = e.image_of(v);
        if even_id >= g.part_size(even_side) {
            continue;
        }
        for nb in cube_neighbors(v) {
            let (odd_side, odd_id) = e.image_of(nb);
            if odd_id >= g.part_size(odd_side) {
                continue;
            }
            let (u, l) = match odd_side {
                Side::Upper => (odd_id, even_id),
                Side::Lower => (even_id, odd_id),
            };
            if !g.has_edge(u, l) {
                out.push(Violation::EdgeNotPreserved {
                    odd_word: nb.word,
                    even_word: v.word,
                });
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Greedy extension
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub enum GreedyOutcome {
    Embedded(CubeEmbedding),
    Stuck { vertex: CubeVertex },
}

/// Extends an injective assignment of the odd class to a full embedding.
/// Even vertices are processed in ascending mask order; each takes the
/// lowest-id unused vertex in the common neighborhood of its n cube
/// neighbors' images. Deterministic by construction.
pub fn greedy_extend(
    g: &BipartiteGraph,
    n: u32,
    odd_side: Side,
    odd_assignment: &[(CubeVertex, usize)],
) -> Result<GreedyOutcome> {
    greedy_extend_ordered(g, n, 0, odd_side, odd_assignment)
}

/// Like [`greedy_extend`], but intersects each even vertex's neighbor
/// images in facet order (same-facet neighbors first) for a facet width
/// `w`. The resulting set is the same; the block embedder uses this to
/// follow its facet-wise construction.
pub fn greedy_extend_ordered(
    g: &BipartiteGraph,
    n: u32,
    w: u32,
    odd_side: Side,
    odd_assignment: &[(CubeVertex, usize)],
) -> Result<GreedyOutcome> {
    let odd = odd_class(n)?;
    if odd_assignment.len() != odd.len() {
        return Err(Error::invalid(format!(
            "odd assignment must cover all {} odd vertices",
            odd.len()
        )));
    }
    let mut images = vec![usize::MAX; 1 << n];
    let mut used_odd = BitVec::zeros(g.part_size(odd_side));
    for &(v, id) in odd_assignment {
        if !v.parity_odd() || v.n != n {
            return Err(Error::invalid("odd assignment contains a non-odd vertex"));
        }
        if id >= g.part_size(odd_side) {
            return Err(Error::VertexOutOfRange {
                side: odd_side,
                id,
                size: g.part_size(odd_side),
            });
        }
        if used_odd.get(id) {
            return Err(Error::invalid("odd assignment is not injective"));
        }
        used_odd.set(id);
        images[v.word as usize] = id;
    }
    if images.iter().enumerate().any(|(w, &id)| {
        (w as u32).count_ones() % 2 == 1 && id == usize::MAX
    }) {
        return Err(Error::invalid("odd assignment misses an odd vertex"));
    }

    let even_side = odd_side.opposite();
    let mut used_even = BitVec::zeros(g.part_size(even_side));
    for v in even_class(n)? {
        let neighbors = if w > 0 {
            crate::hypercube::ordered_neighbors_by_facet(v, w)?
        } else {
            cube_neighbors(v)
        };
        let neighbor_ids: Vec<usize> = neighbors
            .iter()
            .map(|nb| images[nb.word as usize])
            .collect();
        let mut cn = g.common_neighborhood(&neighbor_ids, odd_side)?;
        cn.bits.subtract_assign(&used_even);
        match cn.bits.first_one() {
            Some(id) => {
                used_even.set(id);
                images[v.word as usize] = id;
            }
            None => return Ok(GreedyOutcome::Stuck { vertex: v }),
        }
    }
    Ok(GreedyOutcome::Embedded(CubeEmbedding { n, odd_side, images }))
}

// ---------------------------------------------------------------------------
// The DRC embedder
// ---------------------------------------------------------------------------

/// Per-trial resample budget for the |A| >= 2^{n-1} event.
pub const DEFAULT_RESAMPLE_BUDGET: u32 = 32;

#[derive(Debug, Clone)]
pub struct DrcReport {
    pub n: u32,
    pub trials: u64,
    pub s: u32,
    pub s_clamped: bool,
    pub beta: f64,
    pub resample_budget: u32,
    /// Resamples spent across all trials on |A| < 2^{n-1}.
    pub a_resamples: u64,
    /// Trials that exhausted the resample budget.
    pub a_failures: u64,
    /// Trials where the greedy extension got stuck.
    pub greedy_failures: u64,
    pub last_stuck: Option<CubeVertex>,
    pub success_trial: Option<u64>,
}

impl std::fmt::Display for DrcReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "n: {}", self.n)?;
        writeln!(f, "trials: {}", self.trials)?;
        writeln!(
            f,
            "s: {}{}",
            self.s,
            if self.s_clamped { " (clamped)" } else { "" }
        )?;
        writeln!(f, "beta: {:.6}", self.beta)?;
        writeln!(f, "stage a-too-small: resamples {} failures {}", self.a_resamples, self.a_failures)?;
        writeln!(f, "stage greedy-stuck: {}", self.greedy_failures)?;
        match self.success_trial {
            Some(t) => writeln!(f, "outcome: success at trial {t}"),
            None => writeln!(f, "outcome: failure"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum DrcOutcome {
    Embedded(CubeEmbedding, DrcReport),
    Failed(DrcReport),
}

impl DrcOutcome {
    pub fn report(&self) -> &DrcReport {
        match self {
            DrcOutcome::Embedded(_, r) => r,
            DrcOutcome::Failed(r) => r,
        }
    }

    pub fn embedding(&self) -> Option<&CubeEmbedding> {
        match self {
            DrcOutcome::Embedded(e, _) => Some(e),
            DrcOutcome::Failed(_) => None,
        }
    }
}

/// The sample count prescribed by the first-moment argument,
/// floor(log(|up| / 2^n) / log(1/alpha)), clamped to >= 1. Returns
/// (s, clamped?).
pub fn drc_sample_count(upper_count: usize, lower_density: f64, n: u32) -> (u32, bool) {
    let ratio = upper_count as f64 / (1u64 << n) as f64;
    let denom = (1.0 / lower_density).ln();
    if !(denom > 0.0) || !ratio.is_finite() {
        return (1, true);
    }
    let raw = (ratio.ln() / denom).floor();
    if raw < 1.0 {
        (1, true)
    } else {
        (raw as u32, false)
    }
}

pub fn drc_embed_cube(
    g: &BipartiteGraph,
    n: u32,
    trials: u64,
    seed: u64,
) -> Result<DrcOutcome> {
    drc_embed_cube_with_budget(g, n, trials, seed, DEFAULT_RESAMPLE_BUDGET)
}

pub fn drc_embed_cube_with_budget(
    g: &BipartiteGraph,
    n: u32,
    trials: u64,
    seed: u64,
    resample_budget: u32,
) -> Result<DrcOutcome> {
    let odd = odd_class(n)?;
    let m = odd.len();
    if trials == 0 {
        return Err(Error::invalid("trials must be >= 1"));
    }
    if g.upper_count() < m {
        return Err(Error::precondition(format!(
            "need |upper| >= 2^(n-1) = {m}, have {}",
            g.upper_count()
        )));
    }
    let alpha = g.density_f64();
    let (s, s_clamped) = drc_sample_count(g.upper_count(), alpha, n);
    let beta = 2.0 / (g.lower_count() as f64).powf(1.0 / n as f64);

    let mut report = DrcReport {
        n,
        trials,
        s,
        s_clamped,
        beta,
        resample_budget,
        a_resamples: 0,
        a_failures: 0,
        greedy_failures: 0,
        last_stuck: None,
        success_trial: None,
    };

    for trial in 0..trials {
        let mut rng = rng::stream(seed, &[trial]);
        let mut a: Option<VertexSet> = None;
        for _ in 0..resample_budget.max(1) {
            let xs: Vec<usize> = (0..s)
                .map(|_| rng.random_range(0..g.lower_count()))
                .collect();
            let cn = g.common_neighborhood(&xs, Side::Lower)?;
            if cn.card() >= m {
                a = Some(cn);
                break;
            }
            report.a_resamples += 1;
        }
        let a = match a {
            Some(a) => a,
            None => {
                report.a_failures += 1;
                continue;
            }
        };
        let pool = a.to_indices();
        let picked = rand::seq::index::sample(&mut rng, pool.len(), m);
        let assignment: Vec<(CubeVertex, usize)> = odd
            .iter()
            .zip(picked.iter())
            .map(|(&v, i)| (v, pool[i]))
            .collect();
        match greedy_extend(g, n, Side::Upper, &assignment)? {
            GreedyOutcome::Embedded(e) => {
                debug_assert!(verify_embedding(g, &e).is_empty());
                report.success_trial = Some(trial);
                return Ok(DrcOutcome::Embedded(e, report));
            }
            GreedyOutcome::Stuck { vertex } => {
                report.greedy_failures += 1;
                report.last_stuck = Some(vertex);
            }
        }
    }
    Ok(DrcOutcome::Failed(report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bigraph::rational_from_f64;

    fn path_graph() -> BipartiteGraph {
        BipartiteGraph::from_edges(2, 2, [(0, 0), (1, 0), (1, 1)]).unwrap()
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn expected_cn_complete() {
        let k22 = BipartiteGraph::complete(2, 2);
        assert_eq!(expected_cn_size_exact(&k22, 3), rat(2, 1));
    }

    #[test]
    fn expected_cn_path() {
        let g = path_graph();
        // s=1: (1/2) + (2/2) = 3/2, equality with alpha * |up|
        assert_eq!(expected_cn_size_exact(&g, 1), rat(3, 2));
        // s=2: 1/4 + 1 = 5/4 >= (3/4)^2 * 2 = 9/8
        assert_eq!(expected_cn_size_exact(&g, 2), rat(5, 4));
        assert!(expected_cn_size_exact(&g, 2) >= rat(9, 8));
    }

    #[test]
    fn expected_bad_tuples_complete_is_zero() {
        let k22 = BipartiteGraph::complete(2, 2);
        let beta = rat(1, 2);
        assert_eq!(
            expected_bad_tuples_exact(&k22, 2, 1, &beta).unwrap(),
            BigRational::zero()
        );
    }

    #[test]
    fn expected_bad_tuples_rejects_zero_density() {
        let e = BipartiteGraph::edgeless(2, 2);
        let beta = rat(1, 2);
        assert!(expected_bad_tuples_exact(&e, 2, 1, &beta).is_err());
    }

    #[test]
    fn expected_bad_tuples_path_enumeration() {
        let g = path_graph();
        let beta = rat(1, 2);
        // threshold (1/2)^2 * 2 = 1/2: every ordered pair has |CN| >= 1
        let v = expected_bad_tuples_exact(&g, 2, 1, &beta).unwrap();
        assert_eq!(v, BigRational::zero());
        assert!(v <= rat(1, 1));
        // raising beta to alpha makes (a,a), (a,b), (b,a) bad (|CN|=1 <= 9/8)
        let beta = rat(3, 4);
        let v = expected_bad_tuples_exact(&g, 2, 1, &beta).unwrap();
        assert_eq!(v, rat(3, 2));
        // bound beta^{rs} |up|^r = (3/4)^2 * 4 = 9/4
        assert!(v <= rat(9, 4));
    }

    #[test]
    fn enumeration_cap_enforced() {
        let g = BipartiteGraph::complete(100, 2);
        let beta = rat(1, 2);
        assert!(matches!(
            expected_bad_tuples_exact_capped(&g, 4, 1, &beta, 1000),
            Err(Error::EnumerationCap { .. })
        ));
    }

    #[test]
    fn greedy_complete_host() {
        let g = BipartiteGraph::complete(4, 4);
        let odd = odd_class(2).unwrap();
        let assignment: Vec<_> = odd.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        match greedy_extend(&g, 2, Side::Upper, &assignment).unwrap() {
            GreedyOutcome::Embedded(e) => assert!(verify_embedding(&g, &e).is_empty()),
            GreedyOutcome::Stuck { .. } => panic!("complete host cannot fail"),
        }
    }

    #[test]
    fn greedy_single_step_matching() {
        // host 2x2 with edges (0,0) and (1,1); Q_1 odd {1} -> lower 0
        let g = BipartiteGraph::from_edges(2, 2, [(0, 0), (1, 1)]).unwrap();
        let v = CubeVertex::new(1, 1).unwrap();
        match greedy_extend(&g, 1, Side::Lower, &[(v, 0)]).unwrap() {
            GreedyOutcome::Embedded(e) => {
                assert_eq!(e.image_of(CubeVertex::new(1, 0).unwrap()), (Side::Upper, 0));
            }
            GreedyOutcome::Stuck { .. } => panic!("single edge extension must work"),
        }
    }

    #[test]
    fn greedy_stuck_on_path() {
        let g = path_graph();
        let odd01 = CubeVertex::new(2, 0b01).unwrap();
        let odd10 = CubeVertex::new(2, 0b10).unwrap();
        // odd images x=0, y=1 on the lower side; CN(x,y) = {b} but two even
        // vertices need distinct images
        match greedy_extend(&g, 2, Side::Lower, &[(odd01, 0), (odd10, 1)]).unwrap() {
            GreedyOutcome::Stuck { vertex } => assert_eq!(vertex.word, 0b11),
            GreedyOutcome::Embedded(_) => panic!("path host cannot hold Q_2"),
        }
    }

    #[test]
    fn drc_complete_host_succeeds() {
        let g = BipartiteGraph::complete(16, 16);
        match drc_embed_cube(&g, 2, 4, 7).unwrap() {
            DrcOutcome::Embedded(e, _) => assert!(verify_embedding(&g, &e).is_empty()),
            DrcOutcome::Failed(r) => panic!("complete host failed: {r}"),
        }
    }

    #[test]
    fn drc_edgeless_reports_stage_a() {
        let g = BipartiteGraph::edgeless(4, 4);
        match drc_embed_cube(&g, 1, 2, 1).unwrap() {
            DrcOutcome::Failed(r) => {
                assert_eq!(r.a_failures, 2);
                assert!(r.a_resamples > 0);
            }
            DrcOutcome::Embedded(..) => panic!("edgeless host cannot embed"),
        }
    }

    #[test]
    fn drc_host_too_small_is_precondition() {
        let g = BipartiteGraph::complete(2, 8);
        assert!(drc_embed_cube(&g, 3, 1, 0).is_err());
    }

    #[test]
    fn verifier_flags_duplicates_and_nonedges() {
        let g = BipartiteGraph::complete(2, 2);
        let odd = odd_class(2).unwrap();
        let assignment: Vec<_> = odd.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let e = match greedy_extend(&g, 2, Side::Upper, &assignment).unwrap() {
            GreedyOutcome::Embedded(e) => e,
            _ => unreachable!(),
        };
        assert!(verify_embedding(&g, &e).is_empty());

        // swapping two images keeps a complete host valid
        let mut swapped = e.clone();
        swapped.images.swap(0b01 as usize, 0b10 as usize);
        assert!(verify_embedding(&g, &swapped).is_empty());

        // collapsing two images violates injectivity
        let mut collapsed = e.clone();
        collapsed.images[0b01] = collapsed.images[0b10];
        assert!(verify_embedding(&g, &collapsed)
            .iter()
            .any(|v| matches!(v, Violation::DuplicateImage { .. })));

        // a missing host edge is reported
        let sparse = path_graph();
        let errs = verify_embedding(&sparse, &e);
        assert!(errs.iter().any(|v| matches!(v, Violation::EdgeNotPreserved { .. })));
    }

    #[test]
    fn monte_carlo_mean_matches_exact() {
        let mut rng = rng::root(99);
        let g = crate::harness::gen_random_bipartite(32, 32, 0.6, &mut rng);
        let s = 2;
        let exact = expected_cn_size_exact(&g, s);
        let samples = 20_000u64;
        let mut total: u64 = 0;
        let mut sq: f64 = 0.0;
        for _ in 0..samples {
            let xs: Vec<usize> = (0..s).map(|_| rng.random_range(0..32)).collect();
            let c = g.common_neighborhood(&xs, Side::Lower).unwrap().card() as u64;
            total += c;
            sq += (c * c) as f64;
        }
        let mean = total as f64 / samples as f64;
        let var = (sq / samples as f64 - mean * mean).max(0.0);
        let se = (var / samples as f64).sqrt().max(1e-9);
        let exact_f = crate::bigraph::rational_to_f64(&exact);
        assert!(
            (mean - exact_f).abs() <= 5.0 * se,
            "MC mean {mean} vs exact {exact_f} (se {se})"
        );
        // exact value exceeds the first-moment bound as a rational
        let alpha = g.density();
        let bound = rational_pow(&alpha, s as usize)
            * BigRational::from_integer(BigInt::from(g.upper_count() as u64));
        assert!(exact >= bound);
        let _ = rational_from_f64(0.5);
    }
}
