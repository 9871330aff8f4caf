//! Block-structured bipartite graphs: validation, generation, the
//! constrained tuple family M(r, w; y), the selection step, and the
//! facet-wise hypercube embedder.

use crate::bigraph::{BipartiteGraph, Side, VertexSet};
use crate::bits::BitVec;
use crate::drc::{greedy_extend_ordered, verify_embedding, CubeEmbedding, GreedyOutcome};
use crate::error::{Error, Result};
use crate::hypercube::{facet_partition, CubeVertex};
use crate::rng;
use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::Zero;
use rand::Rng;
use rayon::prelude::*;
use std::io::{BufRead, BufReader, Write as IoWrite};
use std::path::Path;

/// Compatible collections witnessing a block structure: k disjoint lower
/// blocks of equal size covering the lower part, each wired only into its
/// own upper set, with within-block density at least 1 - delta.
#[derive(Debug, Clone)]
pub struct BlockStructure {
    pub delta: f64,
    pub gamma: f64,
    pub k: usize,
    pub g_size: usize,
    pub lower_blocks: Vec<VertexSet>,
    pub upper_sets: Vec<VertexSet>,
}

impl BlockStructure {
    /// Block index of a lower vertex, if any.
    pub fn block_of(&self, v: usize) -> Option<usize> {
        self.lower_blocks.iter().position(|b| b.contains(v))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BlockViolation {
    /// bullet 1: sizes and partition structure
    WrongBlockSize { block: usize, size: usize, expected: usize },
    BlocksNotDisjoint { block_a: usize, block_b: usize },
    BlocksDoNotCover { uncovered: usize },
    /// bullet 2: upper sets large enough (and non-empty)
    UpperSetTooSmall { block: usize, size: usize, required: f64 },
    /// bullet 3: no edges leaving the block's upper set
    StrayEdge { block: usize, upper: usize },
    /// bullet 4: within-block density
    BlockTooSparse { block: usize, density: f64, required: f64 },
}

impl std::fmt::Display for BlockViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BlockViolation::WrongBlockSize { block, size, expected } => {
                write!(f, "block {block}: size {size} != {expected}")
            }
            BlockViolation::BlocksNotDisjoint { block_a, block_b } => {
                write!(f, "blocks {block_a} and {block_b} overlap")
            }
            BlockViolation::BlocksDoNotCover { uncovered } => {
                write!(f, "lower vertex {uncovered} not covered by any block")
            }
            BlockViolation::UpperSetTooSmall { block, size, required } => {
                write!(f, "block {block}: upper set size {size} < {required}")
            }
            BlockViolation::StrayEdge { block, upper } => {
                write!(f, "block {block}: edge from outside upper {upper}")
            }
            BlockViolation::BlockTooSparse { block, density, required } => {
                write!(f, "block {block}: density {density:.6} < {required:.6}")
            }
        }
    }
}

/// Density of the bipartite subgraph induced by (uppers, block).
fn block_density(g: &BipartiteGraph, uppers: &VertexSet, block: &VertexSet) -> f64 {
    let cells = uppers.card() as f64 * block.card() as f64;
    if cells == 0.0 {
        return 0.0;
    }
    let edges: usize = uppers.iter().map(|u| g.row(u).and_count(&block.bits)).sum();
    edges as f64 / cells
}

const DENSITY_GUARD: f64 = 1e-12;

/// Checks the four defining properties exactly, reporting each violation
/// with its block index.
pub fn validate_block_structure(g: &BipartiteGraph, bs: &BlockStructure) -> Vec<BlockViolation> {
    let mut out = Vec::new();
    let mut covered = BitVec::zeros(g.lower_count());
    for (l, block) in bs.lower_blocks.iter().enumerate() {
        if block.card() != bs.g_size {
            out.push(BlockViolation::WrongBlockSize {
                block: l,
                size: block.card(),
                expected: bs.g_size,
            });
        }
        if covered.intersects(&block.bits) {
            let prev = bs.lower_blocks[..l]
                .iter()
                .position(|b| b.bits.intersects(&block.bits))
                .unwrap_or(0);
            out.push(BlockViolation::BlocksNotDisjoint { block_a: prev, block_b: l });
        }
        covered.or_assign(&block.bits);
    }
    if let Some(uncovered) = covered.complement().first_one() {
        out.push(BlockViolation::BlocksDoNotCover { uncovered });
    }
    let up = g.upper_count() as f64;
    for (l, s_up) in bs.upper_sets.iter().enumerate() {
        let required = bs.gamma * up;
        if s_up.card() == 0 || (s_up.card() as f64) < required - DENSITY_GUARD {
            out.push(BlockViolation::UpperSetTooSmall {
                block: l,
                size: s_up.card(),
                required,
            });
        }
    }
    for (l, block) in bs.lower_blocks.iter().enumerate() {
        let s_up = &bs.upper_sets[l];
        for u in 0..g.upper_count() {
            if !s_up.contains(u) && g.row(u).intersects(&block.bits) {
                out.push(BlockViolation::StrayEdge { block: l, upper: u });
                break;
            }
        }
        let d = block_density(g, s_up, block);
        let required = 1.0 - bs.delta;
        if d < required - DENSITY_GUARD {
            out.push(BlockViolation::BlockTooSparse {
                block: l,
                density: d,
                required,
            });
        }
    }
    out
}

/// Random block-structured host: each upper set is a uniform
/// ceil(gamma * upper_count)-subset; within-block edges appear with
/// probability 1 - delta/2 and missing edges are added uniformly until the
/// induced density reaches 1 - delta. The output always validates.
pub fn generate_block_graph(
    k: usize,
    g_size: usize,
    upper_count: usize,
    gamma: f64,
    delta: f64,
    rng: &mut impl Rng,
) -> Result<(BipartiteGraph, BlockStructure)> {
    if k == 0 || g_size == 0 {
        return Err(Error::invalid("need k >= 1 and g >= 1"));
    }
    if !(0.0..1.0).contains(&delta) || !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::invalid("need delta in [0, 1) and gamma in (0, 1]"));
    }
    let req_up = (gamma * upper_count as f64).ceil() as usize;
    if req_up == 0 || req_up > upper_count {
        return Err(Error::invalid(format!(
            "infeasible upper set size ceil(gamma * {upper_count}) = {req_up}"
        )));
    }
    let lower_count = k * g_size;
    let mut rows = vec![BitVec::zeros(lower_count); upper_count];
    let mut upper_sets = Vec::with_capacity(k);
    let mut lower_blocks = Vec::with_capacity(k);
    for l in 0..k {
        let members: Vec<usize> = (l * g_size..(l + 1) * g_size).collect();
        let block = VertexSet::from_indices(Side::Lower, lower_count, members.iter().copied());
        let chosen = rand::seq::index::sample(rng, upper_count, req_up);
        let mut ups: Vec<usize> = chosen.iter().collect();
        ups.sort_unstable();
        let s_up = VertexSet::from_indices(Side::Upper, upper_count, ups.iter().copied());

        let p_edge = 1.0 - delta / 2.0;
        let mut present = 0usize;
        let mut missing: Vec<(usize, usize)> = Vec::new();
        for &u in &ups {
            for &v in &members {
                if p_edge >= 1.0 || rng.random_bool(p_edge) {
                    rows[u].set(v);
                    present += 1;
                } else {
                    missing.push((u, v));
                }
            }
        }
        // repair upward to the density floor
        let cells = ups.len() * g_size;
        let needed = ((1.0 - delta) * cells as f64).ceil() as usize;
        if present < needed {
            let deficit = needed - present;
            let picked = rand::seq::index::sample(rng, missing.len(), deficit.min(missing.len()));
            for i in picked.iter() {
                let (u, v) = missing[i];
                rows[u].set(v);
            }
        }
        upper_sets.push(s_up);
        lower_blocks.push(block);
    }
    let g = BipartiteGraph::from_rows(rows, lower_count)?;
    let bs = BlockStructure {
        delta,
        gamma,
        k,
        g_size,
        lower_blocks,
        upper_sets,
    };
    debug_assert!(validate_block_structure(&g, &bs).is_empty());
    Ok((g, bs))
}

// ---------------------------------------------------------------------------
// The tuple family M(r, w; y_1..y_u)
// ---------------------------------------------------------------------------

/// Membership predicate for M(r, w; y): distinct vertices, the first r-w
/// in one block, each of the last w in a distinct other block, all inside
/// CN(y). Used as the independent oracle for the sampler.
pub fn is_m_tuple(
    g: &BipartiteGraph,
    bs: &BlockStructure,
    r: u32,
    w: u32,
    y: &[usize],
    tuple: &[usize],
) -> Result<bool> {
    if tuple.len() != r as usize {
        return Ok(false);
    }
    let mut seen = std::collections::HashSet::new();
    if !tuple.iter().all(|&x| seen.insert(x)) {
        return Ok(false);
    }
    let head = r as usize - w as usize;
    let l0 = match bs.block_of(tuple[0]) {
        Some(l) => l,
        None => return Ok(false),
    };
    if !tuple[..head].iter().all(|&x| bs.block_of(x) == Some(l0)) {
        return Ok(false);
    }
    let mut used_blocks = std::collections::HashSet::from([l0]);
    for &x in &tuple[head..] {
        match bs.block_of(x) {
            Some(l) if !used_blocks.contains(&l) => {
                used_blocks.insert(l);
            }
            _ => return Ok(false),
        }
    }
    let cn = g.common_neighborhood(y, Side::Upper)?;
    Ok(tuple.iter().all(|&x| cn.contains(x)))
}

pub const DEFAULT_M_TUPLE_BUDGET: u32 = 100_000;

/// Uniform sample from M(r, w; y) by rejection from the product structure
/// (blocks, then ordered distinct picks). None once the budget is spent.
pub fn sample_m_tuple(
    g: &BipartiteGraph,
    bs: &BlockStructure,
    r: u32,
    w: u32,
    y: &[usize],
    rng: &mut impl Rng,
    budget: u32,
) -> Result<Option<Vec<usize>>> {
    let head = r as i64 - w as i64;
    if !(bs.g_size as i64 >= head && head >= 2) {
        return Err(Error::precondition("need g >= r - w >= 2"));
    }
    if bs.k < w as usize + 1 {
        return Err(Error::precondition("need k >= w + 1"));
    }
    let cn = g.common_neighborhood(y, Side::Upper)?;
    let head = head as usize;
    let block_members: Vec<Vec<usize>> = bs.lower_blocks.iter().map(|b| b.to_indices()).collect();
    for _ in 0..budget {
        let blocks = rand::seq::index::sample(rng, bs.k, w as usize + 1);
        let l0 = blocks.index(0);
        let mut tuple = Vec::with_capacity(r as usize);
        let picks = rand::seq::index::sample(rng, bs.g_size, head);
        for i in picks.iter() {
            tuple.push(block_members[l0][i]);
        }
        for a in 1..=w as usize {
            let la = blocks.index(a);
            tuple.push(block_members[la][rng.random_range(0..bs.g_size)]);
        }
        if tuple.iter().all(|&x| cn.contains(x)) {
            return Ok(Some(tuple));
        }
    }
    Ok(None)
}

/// Exact expectation, over u i.i.d. uniform uppers Y, of the number of
/// tuples in M(r, w; Y) with |CN(tuple)| <= s: the sum over all candidate
/// tuples of (|CN(tuple)| / |up|)^u, restricted to small-CN tuples.
/// Enumeration-only; intended for micro instances.
pub fn expected_small_cn_m_tuples_exact(
    g: &BipartiteGraph,
    bs: &BlockStructure,
    r: u32,
    w: u32,
    u: u32,
    s_threshold: usize,
) -> Result<BigRational> {
    let head = r as i64 - w as i64;
    if !(bs.g_size as i64 >= head && head >= 2) || bs.k < w as usize + 1 {
        return Err(Error::precondition("need g >= r - w >= 2 and k >= w + 1"));
    }
    if u == 0 {
        return Err(Error::precondition("need u >= 1"));
    }
    let head = head as usize;
    let block_members: Vec<Vec<usize>> = bs.lower_blocks.iter().map(|b| b.to_indices()).collect();
    let up = BigInt::from(g.upper_count() as u64);
    let mut total = BigInt::zero();

    // ordered distinct (w+1)-tuples of blocks
    let mut block_choice: Vec<usize> = Vec::new();
    let mut tuple: Vec<usize> = Vec::new();
    fn rec_blocks(
        g: &BipartiteGraph,
        members: &[Vec<usize>],
        k: usize,
        w: usize,
        head: usize,
        u: u32,
        s: usize,
        block_choice: &mut Vec<usize>,
        tuple: &mut Vec<usize>,
        total: &mut BigInt,
    ) {
        if block_choice.len() == w + 1 {
            rec_head(g, members, w, head, u, s, block_choice, tuple, total, 0);
            return;
        }
        for l in 0..k {
            if block_choice.contains(&l) {
                continue;
            }
            block_choice.push(l);
            rec_blocks(g, members, k, w, head, u, s, block_choice, tuple, total);
            block_choice.pop();
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn rec_head(
        g: &BipartiteGraph,
        members: &[Vec<usize>],
        w: usize,
        head: usize,
        u: u32,
        s: usize,
        block_choice: &[usize],
        tuple: &mut Vec<usize>,
        total: &mut BigInt,
        depth: usize,
    ) {
        if depth == head {
            rec_tail(g, members, w, u, s, block_choice, tuple, total, 1);
            return;
        }
        let l0 = block_choice[0];
        for &x in &members[l0] {
            if tuple.contains(&x) {
                continue;
            }
            tuple.push(x);
            rec_head(g, members, w, head, u, s, block_choice, tuple, total, depth + 1);
            tuple.pop();
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn rec_tail(
        g: &BipartiteGraph,
        members: &[Vec<usize>],
        w: usize,
        u: u32,
        s: usize,
        block_choice: &[usize],
        tuple: &mut Vec<usize>,
        total: &mut BigInt,
        a: usize,
    ) {
        if a == w + 1 {
            let cn = g
                .common_neighborhood_size(tuple, Side::Lower)
                .expect("ids in range");
            if cn <= s {
                *total += BigInt::from(cn as u64).pow(u);
            }
            return;
        }
        let la = block_choice[a];
        for &x in &members[la] {
            tuple.push(x);
            rec_tail(g, members, w, u, s, block_choice, tuple, total, a + 1);
            tuple.pop();
        }
    }

    rec_blocks(
        g,
        &block_members,
        bs.k,
        w as usize,
        head,
        u,
        s_threshold,
        &mut block_choice,
        &mut tuple,
        &mut total,
    );
    Ok(BigRational::new(total, up.pow(u)))
}

/// The closed-form bound on the same expectation:
/// (s/|up|)^u * k!/(k-w-1)! * g^w * g!/(g-r+w)!.
pub fn m_tuple_expectation_bound(
    upper_count: usize,
    k: usize,
    g_size: usize,
    r: u32,
    w: u32,
    u: u32,
    s_threshold: usize,
) -> BigRational {
    let falling = |n: usize, take: usize| -> BigInt {
        let mut acc = BigInt::from(1u32);
        for i in 0..take {
            acc *= BigInt::from((n - i) as u64);
        }
        acc
    };
    let ratio = BigRational::new(
        BigInt::from(s_threshold as u64).pow(u),
        BigInt::from(upper_count as u64).pow(u),
    );
    let blocks = falling(k, w as usize + 1);
    let tail = BigInt::from(g_size as u64).pow(w);
    let head = falling(g_size, (r - w) as usize);
    ratio * BigRational::from_integer(blocks * tail * head)
}

// ---------------------------------------------------------------------------
// Selection (dependent random choice for block-structured graphs)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Selection {
    pub ys: Vec<usize>,
    /// Indices of blocks with |CN(Y) ∩ block| >= g (1-delta)^{u+1}.
    pub good_blocks: Vec<usize>,
    pub attempts_used: u64,
}

#[derive(Debug, Clone)]
pub struct SelectionFailure {
    pub trials: u64,
    pub accept_bound: f64,
    pub best_good_count: usize,
}

#[derive(Debug, Clone)]
pub enum SelectOutcome {
    Selected(Selection),
    Failed(SelectionFailure),
}

fn good_blocks_of(g: &BipartiteGraph, bs: &BlockStructure, ys: &[usize]) -> Vec<usize> {
    let threshold = bs.g_size as f64 * (1.0 - bs.delta).powi(ys.len() as i32 + 1);
    let cn = g
        .common_neighborhood(ys, Side::Upper)
        .expect("ids in range");
    bs.lower_blocks
        .iter()
        .enumerate()
        .filter(|(_, b)| cn.bits.and_count(&b.bits) as f64 >= threshold)
        .map(|(l, _)| l)
        .collect()
}

/// The acceptance event's probability floor, (delta/2)(gamma(1-delta))^u.
pub fn selection_accept_bound(bs: &BlockStructure, u: u32) -> f64 {
    bs.delta / 2.0 * (bs.gamma * (1.0 - bs.delta)).powi(u as i32)
}

pub fn select_condition_vertices(
    g: &BipartiteGraph,
    bs: &BlockStructure,
    u: u32,
    trials: u64,
    seed: u64,
) -> Result<SelectOutcome> {
    select_condition_vertices_with_floor(g, bs, u, trials, seed, 0)
}

/// Selection with an extra floor on |good blocks|; the embedder passes
/// 2^w here since it needs that many distinct blocks downstream.
pub fn select_condition_vertices_with_floor(
    g: &BipartiteGraph,
    bs: &BlockStructure,
    u: u32,
    trials: u64,
    seed: u64,
    min_good: usize,
) -> Result<SelectOutcome> {
    if u == 0 {
        return Err(Error::precondition("need u >= 1"));
    }
    let accept_bound = selection_accept_bound(bs, u);
    let needed = (bs.k as f64 * accept_bound).max(0.0);
    let mut rng = rng::stream(seed, &[4]);
    let mut best = 0usize;
    for t in 0..trials {
        let ys: Vec<usize> = (0..u).map(|_| rng.random_range(0..g.upper_count())).collect();
        let good = good_blocks_of(g, bs, &ys);
        best = best.max(good.len());
        if good.len() as f64 >= needed && good.len() >= min_good {
            return Ok(SelectOutcome::Selected(Selection {
                ys,
                good_blocks: good,
                attempts_used: t + 1,
            }));
        }
    }
    Ok(SelectOutcome::Failed(SelectionFailure {
        trials,
        accept_bound,
        best_good_count: best,
    }))
}

/// Monte Carlo acceptance rate of the selection event (no early return),
/// for checking the probability bound empirically.
pub fn measure_selection_rate(
    g: &BipartiteGraph,
    bs: &BlockStructure,
    u: u32,
    trials: u64,
    seed: u64,
) -> Result<(u64, u64)> {
    if u == 0 {
        return Err(Error::precondition("need u >= 1"));
    }
    let needed = bs.k as f64 * selection_accept_bound(bs, u);
    const CHUNK: u64 = 256;
    let chunks = trials.div_ceil(CHUNK);
    let accepted: u64 = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = rng::stream(seed, &[5, chunk]);
            let lo = chunk * CHUNK;
            let hi = (lo + CHUNK).min(trials);
            let mut local = 0u64;
            for _ in lo..hi {
                let ys: Vec<usize> =
                    (0..u).map(|_| rng.random_range(0..g.upper_count())).collect();
                if good_blocks_of(g, bs, &ys).len() as f64 >= needed {
                    local += 1;
                }
            }
            local
        })
        .sum();
    Ok((accepted, trials))
}

// ---------------------------------------------------------------------------
// The block embedder
// ---------------------------------------------------------------------------

/// Numeric check of the embedding lemma's hypotheses, evaluated in log2
/// space so extreme parameters cannot underflow.
#[derive(Debug, Clone)]
pub struct BlockFeasibility {
    pub good_blocks_expected: f64,
    pub good_blocks_needed: f64,
    pub block_size_surviving: f64,
    pub block_size_needed: f64,
    pub union_lhs_log2: f64,
    pub union_rhs_log2: f64,
    pub feasible: bool,
}

impl std::fmt::Display for BlockFeasibility {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "good blocks: {:.6} needed {:.6} ({})",
            self.good_blocks_expected,
            self.good_blocks_needed,
            if self.good_blocks_expected >= self.good_blocks_needed { "ok" } else { "fail" }
        )?;
        writeln!(
            f,
            "surviving block size: {:.6} needed {:.6} ({})",
            self.block_size_surviving,
            self.block_size_needed,
            if self.block_size_surviving >= self.block_size_needed { "ok" } else { "fail" }
        )?;
        writeln!(
            f,
            "union bound log2: {:.6} < {:.6} ({})",
            self.union_lhs_log2,
            self.union_rhs_log2,
            if self.union_lhs_log2 < self.union_rhs_log2 { "ok" } else { "fail" }
        )?;
        write!(f, "feasible: {}", self.feasible)
    }
}

pub fn block_feasibility(
    g: &BipartiteGraph,
    bs: &BlockStructure,
    n: u32,
    u: u32,
    w: u32,
) -> BlockFeasibility {
    let delta = bs.delta;
    let gamma = bs.gamma;
    let su = (gamma * (1.0 - delta)).powi(u as i32);
    let good_blocks_expected = bs.k as f64 * delta / 2.0 * su;
    let good_blocks_needed = (2f64).powi(w as i32);
    let block_size_surviving = bs.g_size as f64 * (1.0 - delta).powi(u as i32 + 1);
    let block_size_needed = (2f64).powi((n - w) as i32);

    // 64 * ((delta/4) s^u)^{-1} (2^{n-1}/|up|)^u ((1-delta)^{u+1})^{-n}
    //    * ((delta/2) s^u)^{-w-1} < 2^{-n+1}, all in log2
    let log2 = |x: f64| x.log2();
    let union_lhs_log2 = 6.0 - log2(delta / 4.0 * su)
        + u as f64 * ((n as f64 - 1.0) - log2(g.upper_count() as f64))
        - (n as f64) * (u as f64 + 1.0) * log2(1.0 - delta)
        - (w as f64 + 1.0) * log2(delta / 2.0 * su);
    let union_rhs_log2 = -(n as f64) + 1.0;
    let feasible = good_blocks_expected >= good_blocks_needed
        && block_size_surviving >= block_size_needed
        && union_lhs_log2 < union_rhs_log2;
    BlockFeasibility {
        good_blocks_expected,
        good_blocks_needed,
        block_size_surviving,
        block_size_needed,
        union_lhs_log2,
        union_rhs_log2,
        feasible,
    }
}

pub const DEFAULT_SELECTION_BUDGET: u64 = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockStage {
    SelectionBudget,
    InsufficientGoodBlocks,
    BlockTooSmall,
    GreedyStuck,
}

impl std::fmt::Display for BlockStage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BlockStage::SelectionBudget => write!(f, "selection budget exhausted"),
            BlockStage::InsufficientGoodBlocks => write!(f, "insufficient good blocks"),
            BlockStage::BlockTooSmall => write!(f, "trimmed block too small"),
            BlockStage::GreedyStuck => write!(f, "greedy extension stuck"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BlockReport {
    pub n: u32,
    pub u: u32,
    pub w: u32,
    pub feasibility: BlockFeasibility,
    pub trials: u64,
    pub stage_failures: Vec<(BlockStage, u64)>,
    pub last_stuck: Option<CubeVertex>,
    pub success_trial: Option<u64>,
}

impl BlockReport {
    fn bump(&mut self, stage: BlockStage) {
        for (s, c) in &mut self.stage_failures {
            if *s == stage {
                *c += 1;
                return;
            }
        }
        self.stage_failures.push((stage, 1));
    }
}

impl std::fmt::Display for BlockReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "n: {} u: {} w: {}", self.n, self.u, self.w)?;
        writeln!(f, "predicted: {}", if self.feasibility.feasible { "feasible" } else { "infeasible" })?;
        writeln!(f, "trials: {}", self.trials)?;
        for (s, c) in &self.stage_failures {
            writeln!(f, "stage {s}: {c}")?;
        }
        match self.success_trial {
            Some(t) => writeln!(f, "outcome: success at trial {t}"),
            None => writeln!(f, "outcome: failure"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum BlockOutcome {
    Embedded(CubeEmbedding, BlockReport),
    Failed(BlockReport),
}

impl BlockOutcome {
    pub fn report(&self) -> &BlockReport {
        match self {
            BlockOutcome::Embedded(_, r) | BlockOutcome::Failed(r) => r,
        }
    }
    pub fn embedding(&self) -> Option<&CubeEmbedding> {
        match self {
            BlockOutcome::Embedded(e, _) => Some(e),
            BlockOutcome::Failed(_) => None,
        }
    }
}

/// Facet-wise randomized embedding of Q_n into a block-structured host:
/// select condition vertices, trim the good blocks inside their common
/// neighborhood, map each odd facet class into its own block, then extend
/// greedily over the even class.
#[allow(clippy::too_many_arguments)]
pub fn block_embed_cube(
    g: &BipartiteGraph,
    bs: &BlockStructure,
    n: u32,
    u: u32,
    w: u32,
    trials: u64,
    seed: u64,
    proceed_anyway: bool,
) -> Result<BlockOutcome> {
    block_embed_cube_with_budget(g, bs, n, u, w, trials, seed, proceed_anyway, DEFAULT_SELECTION_BUDGET)
}

#[allow(clippy::too_many_arguments)]
pub fn block_embed_cube_with_budget(
    g: &BipartiteGraph,
    bs: &BlockStructure,
    n: u32,
    u: u32,
    w: u32,
    trials: u64,
    seed: u64,
    proceed_anyway: bool,
    selection_budget: u64,
) -> Result<BlockOutcome> {
    if w + 2 > n {
        return Err(Error::precondition("need n - w >= 2"));
    }
    if u == 0 {
        return Err(Error::precondition("need u >= 1"));
    }
    if trials == 0 {
        return Err(Error::invalid("trials must be >= 1"));
    }
    let feas = block_feasibility(g, bs, n, u, w);
    if !feas.feasible && !proceed_anyway {
        return Err(Error::precondition(format!(
            "embedding lemma hypotheses fail numerically; pass proceed_anyway to run regardless\n{feas}"
        )));
    }
    let facets = facet_partition(n, w)?;
    let classes = facets.class_count();
    let class_size = facets.class_size();
    let trim_size = (bs.g_size as f64 * (1.0 - bs.delta).powi(u as i32 + 1)).ceil() as usize;

    let mut report = BlockReport {
        n,
        u,
        w,
        feasibility: feas,
        trials,
        stage_failures: Vec::new(),
        last_stuck: None,
        success_trial: None,
    };

    for trial in 0..trials {
        let trial_seed = rng::child_seed(seed, trial);
        let selection = match select_condition_vertices_with_floor(
            g,
            bs,
            u,
            selection_budget,
            trial_seed,
            classes,
        )? {
            SelectOutcome::Selected(s) => s,
            SelectOutcome::Failed(f) => {
                if f.best_good_count < classes {
                    report.bump(BlockStage::InsufficientGoodBlocks);
                } else {
                    report.bump(BlockStage::SelectionBudget);
                }
                continue;
            }
        };
        let mut rng = rng::stream(trial_seed, &[6]);
        let cn = g.common_neighborhood(&selection.ys, Side::Upper)?;

        // trim each good block to its lowest-id qualifying subset
        let mut trimmed: Vec<Vec<usize>> = Vec::with_capacity(selection.good_blocks.len());
        let mut too_small = false;
        for &l in &selection.good_blocks {
            let mut inside = bs.lower_blocks[l].bits.clone();
            inside.and_assign(&cn.bits);
            let ids: Vec<usize> = inside.iter_ones().take(trim_size).collect();
            if ids.len() < class_size {
                too_small = true;
                break;
            }
            trimmed.push(ids);
        }
        if too_small || trim_size < class_size {
            report.bump(BlockStage::BlockTooSmall);
            continue;
        }

        // distinct blocks for the 2^w facet classes
        let chosen = rand::seq::index::sample(&mut rng, trimmed.len(), classes);
        let mut assignment: Vec<(CubeVertex, usize)> = Vec::with_capacity(1 << (n - 1));
        for (b, class) in facets.classes.iter().enumerate() {
            let tray = &trimmed[chosen.index(b)];
            let picks = rand::seq::index::sample(&mut rng, tray.len(), class_size);
            for (v, i) in class.iter().zip(picks.iter()) {
                assignment.push((*v, tray[i]));
            }
        }
        match greedy_extend_ordered(g, n, w, Side::Lower, &assignment)? {
            GreedyOutcome::Embedded(e) => {
                debug_assert!(verify_embedding(g, &e).is_empty());
                report.success_trial = Some(trial);
                return Ok(BlockOutcome::Embedded(e, report));
            }
            GreedyOutcome::Stuck { vertex } => {
                report.bump(BlockStage::GreedyStuck);
                report.last_stuck = Some(vertex);
            }
        }
    }
    Ok(BlockOutcome::Failed(report))
}

// ---------------------------------------------------------------------------
// Sidecar file format: `k g_size delta gamma`, then per block two lines
// `up: id...` / `down: id...`.
// ---------------------------------------------------------------------------

pub fn format_blocks(bs: &BlockStructure) -> String {
    let mut s = format!("{} {} {} {}\n", bs.k, bs.g_size, bs.delta, bs.gamma);
    for l in 0..bs.k {
        let ups: Vec<String> = bs.upper_sets[l].iter().map(|i| i.to_string()).collect();
        let downs: Vec<String> = bs.lower_blocks[l].iter().map(|i| i.to_string()).collect();
        s.push_str(&format!("up: {}\n", ups.join(" ")));
        s.push_str(&format!("down: {}\n", downs.join(" ")));
    }
    s
}

pub fn write_blocks(bs: &BlockStructure, path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(format_blocks(bs).as_bytes())?;
    Ok(())
}

pub fn parse_blocks<R: BufRead>(
    reader: R,
    upper_count: usize,
    lower_count: usize,
) -> Result<BlockStructure> {
    let mut lines = reader.lines().enumerate();
    let (k, g_size, delta, gamma) = loop {
        let (idx, line) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: "empty block file".into(),
        })?;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let parts: Vec<&str> = content.split_whitespace().collect();
        if parts.len() != 4 {
            return Err(Error::Parse {
                line: idx + 1,
                msg: "header must be `k g_size delta gamma`".into(),
            });
        }
        let k: usize = parts[0].parse().map_err(|_| Error::Parse { line: idx + 1, msg: "bad k".into() })?;
        let g: usize = parts[1].parse().map_err(|_| Error::Parse { line: idx + 1, msg: "bad g".into() })?;
        let d: f64 = parts[2].parse().map_err(|_| Error::Parse { line: idx + 1, msg: "bad delta".into() })?;
        let ga: f64 = parts[3].parse().map_err(|_| Error::Parse { line: idx + 1, msg: "bad gamma".into() })?;
        break (k, g, d, ga);
    };
    let mut upper_sets = Vec::with_capacity(k);
    let mut lower_blocks = Vec::with_capacity(k);
    for (idx, line) in lines {
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (prefix, rest, side, size) = if let Some(rest) = content.strip_prefix("up:") {
            ("up", rest, Side::Upper, upper_count)
        } else if let Some(rest) = content.strip_prefix("down:") {
            ("down", rest, Side::Lower, lower_count)
        } else {
            return Err(Error::Parse {
                line: idx + 1,
                msg: "expected `up:` or `down:` line".into(),
            });
        };
        let mut ids = Vec::new();
        for tok in rest.split_whitespace() {
            let id: usize = tok.parse().map_err(|_| Error::Parse {
                line: idx + 1,
                msg: format!("bad id {tok:?}"),
            })?;
            if id >= size {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("{prefix} id {id} out of range ({size})"),
                });
            }
            ids.push(id);
        }
        let set = VertexSet::from_indices(side, size, ids);
        match side {
            Side::Upper => upper_sets.push(set),
            Side::Lower => lower_blocks.push(set),
        }
    }
    if upper_sets.len() != k || lower_blocks.len() != k {
        return Err(Error::Parse {
            line: 0,
            msg: format!(
                "expected {k} up/down line pairs, got {} up and {} down",
                upper_sets.len(),
                lower_blocks.len()
            ),
        });
    }
    Ok(BlockStructure {
        delta,
        gamma,
        k,
        g_size,
        lower_blocks,
        upper_sets,
    })
}

pub fn read_blocks(
    path: impl AsRef<Path>,
    upper_count: usize,
    lower_count: usize,
) -> Result<BlockStructure> {
    let f = std::fs::File::open(path)?;
    parse_blocks(BufReader::new(f), upper_count, lower_count)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two disjoint K_{2,2}'s side by side on a 4x4 host.
    fn twin_bicliques() -> (BipartiteGraph, BlockStructure) {
        let g = BipartiteGraph::from_edges(
            4,
            4,
            [(0, 0), (0, 1), (1, 0), (1, 1), (2, 2), (2, 3), (3, 2), (3, 3)],
        )
        .unwrap();
        let bs = BlockStructure {
            delta: 0.0,
            gamma: 0.5,
            k: 2,
            g_size: 2,
            lower_blocks: vec![
                VertexSet::from_indices(Side::Lower, 4, [0, 1]),
                VertexSet::from_indices(Side::Lower, 4, [2, 3]),
            ],
            upper_sets: vec![
                VertexSet::from_indices(Side::Upper, 4, [0, 1]),
                VertexSet::from_indices(Side::Upper, 4, [2, 3]),
            ],
        };
        (g, bs)
    }

    #[test]
    fn validator_accepts_twin_bicliques() {
        let (g, bs) = twin_bicliques();
        assert!(validate_block_structure(&g, &bs).is_empty());
    }

    #[test]
    fn validator_flags_cross_edge() {
        let (g, bs) = twin_bicliques();
        let mut edges = g.edges();
        edges.push((0, 2));
        let bad = BipartiteGraph::from_edges(4, 4, edges).unwrap();
        let v = validate_block_structure(&bad, &bs);
        assert!(v.iter().any(|x| matches!(x, BlockViolation::StrayEdge { block: 1, .. })));
    }

    #[test]
    fn validator_flags_small_upper_set() {
        let (g, mut bs) = twin_bicliques();
        bs.gamma = 0.9;
        let v = validate_block_structure(&g, &bs);
        assert!(v.iter().any(|x| matches!(x, BlockViolation::UpperSetTooSmall { .. })));
    }

    #[test]
    fn generator_round_trips_validator() {
        let mut rng = rng::root(21);
        for &(k, gs, up, gamma, delta) in
            &[(1usize, 4usize, 8usize, 0.5f64, 0.0f64), (4, 4, 32, 0.3, 0.1), (16, 32, 4096, 0.25, 0.05)]
        {
            let (g, bs) = generate_block_graph(k, gs, up, gamma, delta, &mut rng).unwrap();
            assert!(validate_block_structure(&g, &bs).is_empty(), "(k={k}, g={gs})");
            if delta == 0.0 {
                // every block is a complete biclique to its upper set
                for l in 0..k {
                    let d = block_density(&g, &bs.upper_sets[l], &bs.lower_blocks[l]);
                    assert_eq!(d, 1.0);
                }
            }
        }
    }

    #[test]
    fn generator_rejects_bad_parameters() {
        let mut rng = rng::root(0);
        assert!(generate_block_graph(0, 4, 8, 0.5, 0.0, &mut rng).is_err());
        assert!(generate_block_graph(2, 4, 8, 0.0, 0.0, &mut rng).is_err());
    }

    #[test]
    fn m_tuple_sampler_matches_predicate() {
        let mut rng = rng::root(17);
        let (g, bs) = generate_block_graph(8, 16, 128, 0.7, 0.1, &mut rng).unwrap();
        let mut found = 0;
        for _ in 0..20 {
            let ys: Vec<usize> = (0..2).map(|_| rng.random_range(0..128)).collect();
            if let Some(t) =
                sample_m_tuple(&g, &bs, 4, 1, &ys, &mut rng, DEFAULT_M_TUPLE_BUDGET).unwrap()
            {
                assert!(is_m_tuple(&g, &bs, 4, 1, &ys, &t).unwrap(), "{t:?}");
                found += 1;
            }
        }
        assert!(found > 0, "sampler never produced a tuple");
    }

    #[test]
    fn m_tuple_sampler_trivial_and_errors() {
        let (g, bs) = twin_bicliques();
        let mut rng = rng::root(3);
        // delta = 0 host, empty condition set: always succeeds
        let t = sample_m_tuple(&g, &bs, 3, 1, &[], &mut rng, 1000).unwrap().unwrap();
        let l0 = bs.block_of(t[0]).unwrap();
        assert_eq!(bs.block_of(t[1]), Some(l0));
        assert_ne!(bs.block_of(t[2]), Some(l0));
        // w = r - 1 violates r - w >= 2
        assert!(sample_m_tuple(&g, &bs, 2, 1, &[], &mut rng, 10).is_err());
    }

    #[test]
    fn selection_single_complete_block() {
        let g = BipartiteGraph::complete(4, 4);
        let bs = BlockStructure {
            delta: 0.0,
            gamma: 1.0,
            k: 1,
            g_size: 4,
            lower_blocks: vec![VertexSet::full(Side::Lower, 4)],
            upper_sets: vec![VertexSet::full(Side::Upper, 4)],
        };
        match select_condition_vertices(&g, &bs, 2, 4, 0).unwrap() {
            SelectOutcome::Selected(s) => assert_eq!(s.good_blocks, vec![0]),
            SelectOutcome::Failed(_) => panic!("complete block selection cannot fail"),
        }
        assert!(select_condition_vertices(&g, &bs, 0, 4, 0).is_err());
    }

    #[test]
    fn selection_accepts_quickly_on_dense_blocks() {
        let mut rng = rng::root(9);
        let (g, bs) = generate_block_graph(4, 8, 64, 0.5, 0.01, &mut rng).unwrap();
        match select_condition_vertices(&g, &bs, 1, 64, 1).unwrap() {
            SelectOutcome::Selected(s) => {
                assert!(!s.good_blocks.is_empty());
                assert!(s.attempts_used <= 64);
            }
            SelectOutcome::Failed(f) => panic!("selection failed: {f:?}"),
        }
    }

    #[test]
    fn block_embed_single_complete_block() {
        let g = BipartiteGraph::complete(8, 8);
        let bs = BlockStructure {
            delta: 0.0,
            gamma: 1.0,
            k: 1,
            g_size: 8,
            lower_blocks: vec![VertexSet::full(Side::Lower, 8)],
            upper_sets: vec![VertexSet::full(Side::Upper, 8)],
        };
        // w = 0 degenerates to the DRC-style single-facet embedding; the
        // union bound is vacuous at delta = 0, so proceed anyway.
        match block_embed_cube(&g, &bs, 2, 1, 0, 4, 11, true).unwrap() {
            BlockOutcome::Embedded(e, _) => assert!(verify_embedding(&g, &e).is_empty()),
            BlockOutcome::Failed(r) => panic!("single complete block failed: {r}"),
        }
    }

    #[test]
    fn block_embed_reports_insufficient_blocks() {
        let (g, bs) = twin_bicliques();
        // n = 3, w = 1 needs 2 good blocks; a 2-block host with gamma = 0.5
        // cannot have both blocks good for a fixed Y, so trials fail there
        match block_embed_cube(&g, &bs, 3, 1, 1, 3, 5, true).unwrap() {
            BlockOutcome::Failed(r) => {
                assert!(r
                    .stage_failures
                    .iter()
                    .any(|(s, _)| *s == BlockStage::InsufficientGoodBlocks || *s == BlockStage::BlockTooSmall));
            }
            BlockOutcome::Embedded(..) => panic!("host is too small for Q_3"),
        }
    }

    #[test]
    fn block_embed_generated_host() {
        let mut rng = rng::root(23);
        let (g, bs) = generate_block_graph(16, 16, 512, 0.4, 0.05, &mut rng).unwrap();
        match block_embed_cube(&g, &bs, 4, 2, 1, 10, 77, true).unwrap() {
            BlockOutcome::Embedded(e, r) => {
                assert!(verify_embedding(&g, &e).is_empty());
                // images of each facet class stay within a single block,
                // distinct classes in distinct blocks
                let facets = facet_partition(4, 1).unwrap();
                let mut class_blocks = Vec::new();
                for class in &facets.classes {
                    let blocks: std::collections::HashSet<usize> = class
                        .iter()
                        .map(|v| bs.block_of(e.images[v.word as usize]).unwrap())
                        .collect();
                    assert_eq!(blocks.len(), 1);
                    class_blocks.push(*blocks.iter().next().unwrap());
                }
                class_blocks.sort_unstable();
                class_blocks.dedup();
                assert_eq!(class_blocks.len(), facets.class_count());
                assert!(r.success_trial.is_some());
            }
            BlockOutcome::Failed(r) => panic!("generated host failed: {r}"),
        }
    }

    #[test]
    fn feasibility_underflow_guarded() {
        let (g, bs) = twin_bicliques();
        // delta = 0 makes the union bound lhs infinite; must be infeasible,
        // not NaN
        let f = block_feasibility(&g, &bs, 3, 1, 1);
        assert!(!f.feasible);
        assert!(f.union_lhs_log2.is_infinite() && f.union_lhs_log2 > 0.0);
        assert!(block_embed_cube(&g, &bs, 3, 1, 1, 1, 0, false).is_err());
    }

    #[test]
    fn blocks_file_round_trip() {
        let mut rng = rng::root(14);
        let (g, bs) = generate_block_graph(4, 4, 32, 0.3, 0.1, &mut rng).unwrap();
        let text = format_blocks(&bs);
        let parsed = parse_blocks(text.as_bytes(), g.upper_count(), g.lower_count()).unwrap();
        assert_eq!(parsed.k, bs.k);
        assert_eq!(parsed.g_size, bs.g_size);
        assert_eq!(parsed.lower_blocks, bs.lower_blocks);
        assert_eq!(parsed.upper_sets, bs.upper_sets);
        assert!(validate_block_structure(&g, &parsed).is_empty());
    }

    #[test]
    fn m_tuple_expectation_micro_bound() {
        let mut rng = rng::root(31);
        let (g, bs) = generate_block_graph(3, 4, 16, 0.5, 0.2, &mut rng).unwrap();
        for s in [0usize, 2, 8, 16] {
            let exact = expected_small_cn_m_tuples_exact(&g, &bs, 3, 1, 2, s).unwrap();
            let bound = m_tuple_expectation_bound(16, 3, 4, 3, 1, 2, s);
            assert!(exact <= bound, "s = {s}: {exact} > {bound}");
        }
    }
}
