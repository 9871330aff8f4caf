//! The random block graph that defeats the plain dependent-random-choice
//! scheme, and estimators for its covering property.

use crate::bigraph::{BipartiteGraph, Side, VertexSet};
use crate::bits::BitVec;
use crate::blocks::{
    block_embed_cube_with_budget, BlockOutcome, BlockStage, BlockStructure,
};
use crate::drc::{drc_embed_cube_with_budget, DrcOutcome};
use crate::error::{Error, Result};
use crate::rng;
use rand::Rng;
use std::time::{Duration, Instant};

/// Shape of the adversarial graph: lower part split into `k_blocks` blocks
/// of `block_size`, every upper vertex wired to exactly half the blocks.
#[derive(Debug, Clone, Copy)]
pub struct GammaShape {
    pub k_blocks: usize,
    pub block_size: usize,
    pub upper_count: usize,
}

impl GammaShape {
    /// The paper-scale shape for a given (epsilon, n): q = ceil(2^{n - eps n/2})
    /// blocks of size q doubled, with 2 q^2 vertices per part.
    pub fn from_parameters(epsilon: f64, n: u32) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::invalid("epsilon must be in (0, 1]"));
        }
        let exponent = n as f64 - epsilon * n as f64 / 2.0;
        let q = (2f64).powf(exponent).ceil();
        if !(q >= 1.0 && 2.0 * q * q <= 1e9) {
            return Err(Error::invalid(format!(
                "derived part size 2 * {q}^2 out of desk range"
            )));
        }
        let q = q as usize;
        Ok(GammaShape {
            k_blocks: 2 * q,
            block_size: q,
            upper_count: 2 * q * q,
        })
    }

    pub fn desk(k_blocks: usize, block_size: usize, upper_count: usize) -> Self {
        GammaShape { k_blocks, block_size, upper_count }
    }
}

/// Each upper vertex adjacent to the union of a uniform half-size subset
/// of blocks; edge density is exactly 1/2 by construction. The returned
/// structure has delta = 0 and gamma measured a posteriori.
pub fn generate_gamma(
    shape: GammaShape,
    rng: &mut impl Rng,
) -> Result<(BipartiteGraph, BlockStructure)> {
    let GammaShape { k_blocks, block_size, upper_count } = shape;
    if k_blocks < 2 || k_blocks % 2 != 0 {
        return Err(Error::invalid("k_blocks must be even and >= 2"));
    }
    if block_size == 0 || upper_count == 0 {
        return Err(Error::invalid("block_size and upper_count must be >= 1"));
    }
    let lower_count = k_blocks * block_size;
    let mut rows = Vec::with_capacity(upper_count);
    let mut containing: Vec<Vec<usize>> = vec![Vec::new(); k_blocks];
    for u in 0..upper_count {
        let chosen = rand::seq::index::sample(rng, k_blocks, k_blocks / 2);
        let mut row = BitVec::zeros(lower_count);
        for i in chosen.iter() {
            for v in i * block_size..(i + 1) * block_size {
                row.set(v);
            }
            containing[i].push(u);
        }
        rows.push(row);
    }
    if let Some(empty) = containing.iter().position(|c| c.is_empty()) {
        return Err(Error::invalid(format!(
            "block {empty} has no adjacent upper vertex; enlarge upper_count"
        )));
    }
    let g = BipartiteGraph::from_rows(rows, lower_count)?;
    debug_assert_eq!(g.edge_count() * 2, (upper_count * lower_count) as u64);

    let gamma = containing
        .iter()
        .map(|c| c.len() as f64 / upper_count as f64)
        .fold(f64::INFINITY, f64::min);
    let lower_blocks = (0..k_blocks)
        .map(|i| {
            VertexSet::from_indices(
                Side::Lower,
                lower_count,
                i * block_size..(i + 1) * block_size,
            )
        })
        .collect();
    let upper_sets = containing
        .into_iter()
        .map(|c| VertexSet::from_indices(Side::Upper, upper_count, c))
        .collect();
    Ok((
        g,
        BlockStructure {
            delta: 0.0,
            gamma,
            k: k_blocks,
            g_size: block_size,
            lower_blocks,
            upper_sets,
        },
    ))
}

// ---------------------------------------------------------------------------
// Covering property estimation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct CoveringReport {
    pub s_size: usize,
    pub arity: u32,
    /// Per-block fraction of S adjacent to the whole block.
    pub delta_fractions: Vec<f64>,
    pub t_blocks: Vec<usize>,
    pub t_vertex_count: usize,
    /// 1 - sum over excluded blocks of delta_i^arity, floored at 0.
    pub analytic_bound: f64,
    pub empirical_fraction: f64,
    pub covered: u64,
    pub tuple_samples: u64,
    /// Accounting identity: sum_i delta_i * block_size * |S| vs the cut
    /// edge count from S. Exact on all-or-none hosts.
    pub identity_lhs: f64,
    pub identity_rhs: u64,
}

impl std::fmt::Display for CoveringReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "|S|: {}  arity: {}", self.s_size, self.arity)?;
        writeln!(
            f,
            "T: {} blocks, {} vertices",
            self.t_blocks.len(),
            self.t_vertex_count
        )?;
        writeln!(f, "analytic covered fraction >= {:.6}", self.analytic_bound)?;
        writeln!(
            f,
            "empirical covered fraction: {:.6} ({} / {})",
            self.empirical_fraction, self.covered, self.tuple_samples
        )?;
        write!(
            f,
            "edge accounting: sum delta_i g |S| = {:.1}, cut edges = {}",
            self.identity_lhs, self.identity_rhs
        )
    }
}

/// Estimates how strongly common neighborhoods of tuples from a random
/// vertex set S concentrate in a small union of blocks T: builds T
/// greedily from the blocks most represented in S, then verifies the
/// covered fraction by direct sampling.
pub fn covering_property_estimate(
    g: &BipartiteGraph,
    bs: &BlockStructure,
    sample_s_size: usize,
    arity: u32,
    tuple_samples: u64,
    t_block_budget: usize,
    seed: u64,
) -> Result<CoveringReport> {
    if sample_s_size == 0 || sample_s_size > g.upper_count() {
        return Err(Error::invalid(format!(
            "sample_S_size must be in 1..={}",
            g.upper_count()
        )));
    }
    if arity == 0 || tuple_samples == 0 {
        return Err(Error::invalid("arity and tuple_samples must be >= 1"));
    }
    let mut rng = rng::stream(seed, &[7]);
    let s_members: Vec<usize> = rand::seq::index::sample(&mut rng, g.upper_count(), sample_s_size)
        .iter()
        .collect();

    // delta_i: fraction of S adjacent to every vertex of block i
    let delta_fractions: Vec<f64> = bs
        .lower_blocks
        .iter()
        .map(|block| {
            let hits = s_members
                .iter()
                .filter(|&&v| block.bits.is_subset_of(g.row(v)))
                .count();
            hits as f64 / sample_s_size as f64
        })
        .collect();

    let identity_lhs: f64 = delta_fractions
        .iter()
        .map(|d| d * bs.g_size as f64 * sample_s_size as f64)
        .sum();
    let identity_rhs: u64 = s_members.iter().map(|&v| g.row(v).count_ones() as u64).sum();

    // greedy T: largest delta_i^arity first, until the excluded mass is
    // at most 1/2 or the block budget is hit
    let mut order: Vec<usize> = (0..bs.k).collect();
    order.sort_by(|&a, &b| {
        delta_fractions[b]
            .partial_cmp(&delta_fractions[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mass = |i: usize| delta_fractions[i].powi(arity as i32);
    let mut excluded_mass: f64 = order.iter().map(|&i| mass(i)).sum();
    let mut t_blocks = Vec::new();
    for &i in &order {
        if excluded_mass < 0.5 || t_blocks.len() >= t_block_budget {
            break;
        }
        t_blocks.push(i);
        excluded_mass -= mass(i);
    }
    let analytic_bound = (1.0 - excluded_mass).max(0.0);

    let mut t_bits = BitVec::zeros(g.lower_count());
    for &i in &t_blocks {
        t_bits.or_assign(&bs.lower_blocks[i].bits);
    }
    let t_vertex_count = t_bits.count_ones();

    // independent Monte Carlo verification of the covered fraction
    let mut covered = 0u64;
    let mut tuple = vec![0usize; arity as usize];
    for _ in 0..tuple_samples {
        for slot in tuple.iter_mut() {
            *slot = s_members[rng.random_range(0..s_members.len())];
        }
        let cn = g.common_neighborhood(&tuple, Side::Upper)?;
        if cn.bits.is_subset_of(&t_bits) {
            covered += 1;
        }
    }
    Ok(CoveringReport {
        s_size: sample_s_size,
        arity,
        delta_fractions,
        t_blocks,
        t_vertex_count,
        analytic_bound,
        empirical_fraction: covered as f64 / tuple_samples as f64,
        covered,
        tuple_samples,
        identity_lhs,
        identity_rhs,
    })
}

// ---------------------------------------------------------------------------
// Defeat experiment
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct DefeatReport {
    pub trials: u64,
    pub n: u32,
    pub u: u32,
    pub w: u32,
    pub naive_successes: u64,
    pub block_successes: u64,
    pub naive_a_failures: u64,
    pub naive_greedy_failures: u64,
    pub block_stage_failures: Vec<(BlockStage, u64)>,
    pub naive_wall: Duration,
    pub block_wall: Duration,
}

impl std::fmt::Display for DefeatReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "trials: {} per embedder (single attempt each)", self.trials)?;
        writeln!(f, "naive drc successes: {}", self.naive_successes)?;
        writeln!(
            f,
            "  stage a-too-small: {}  greedy-stuck: {}",
            self.naive_a_failures, self.naive_greedy_failures
        )?;
        writeln!(f, "block successes: {} (u = {}, w = {})", self.block_successes, self.u, self.w)?;
        for (s, c) in &self.block_stage_failures {
            writeln!(f, "  stage {s}: {c}")?;
        }
        Ok(())
    }
}

/// Head-to-head comparison of the plain DRC embedder and the facet-wise
/// block embedder on the same host, one end-to-end attempt per trial for
/// each side.
pub fn drc_defeat_experiment(
    g: &BipartiteGraph,
    bs: &BlockStructure,
    n: u32,
    u: u32,
    w: u32,
    trials: u64,
    seed: u64,
) -> Result<DefeatReport> {
    if trials == 0 {
        return Err(Error::invalid("trials must be >= 1"));
    }
    let mut report = DefeatReport {
        trials,
        n,
        u,
        w,
        naive_successes: 0,
        block_successes: 0,
        naive_a_failures: 0,
        naive_greedy_failures: 0,
        block_stage_failures: Vec::new(),
        naive_wall: Duration::ZERO,
        block_wall: Duration::ZERO,
    };
    let started = Instant::now();
    for trial in 0..trials {
        match drc_embed_cube_with_budget(g, n, 1, rng::child_seed(seed, trial << 1), 1)? {
            DrcOutcome::Embedded(..) => report.naive_successes += 1,
            DrcOutcome::Failed(r) => {
                report.naive_a_failures += r.a_failures;
                report.naive_greedy_failures += r.greedy_failures;
            }
        }
    }
    report.naive_wall = started.elapsed();
    let started = Instant::now();
    for trial in 0..trials {
        match block_embed_cube_with_budget(
            g,
            bs,
            n,
            u,
            w,
            1,
            rng::child_seed(seed, (trial << 1) | 1),
            true,
            1,
        )? {
            BlockOutcome::Embedded(..) => report.block_successes += 1,
            BlockOutcome::Failed(r) => {
                for (stage, c) in r.stage_failures {
                    match report.block_stage_failures.iter_mut().find(|(s, _)| *s == stage) {
                        Some((_, total)) => *total += c,
                        None => report.block_stage_failures.push((stage, c)),
                    }
                }
            }
        }
    }
    report.block_wall = started.elapsed();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::validate_block_structure;

    #[test]
    fn gamma_two_blocks_is_disjoint_bicliques() {
        let mut rng = rng::root(4);
        let (g, bs) = generate_gamma(GammaShape::desk(2, 4, 16), &mut rng).unwrap();
        // each upper picks exactly one of the two blocks
        for u in 0..16 {
            let deg = g.row(u).count_ones();
            assert_eq!(deg, 4);
        }
        assert_eq!(bs.k, 2);
        assert!(validate_block_structure(&g, &bs).is_empty());
    }

    #[test]
    fn gamma_density_exactly_half() {
        let mut rng = rng::root(6);
        let (g, _) = generate_gamma(GammaShape::desk(16, 8, 512), &mut rng).unwrap();
        assert_eq!(
            g.density(),
            num::rational::BigRational::new(1.into(), 2.into())
        );
    }

    #[test]
    fn gamma_structure_validates() {
        let mut rng = rng::root(8);
        let (g, bs) = generate_gamma(GammaShape::desk(16, 8, 512), &mut rng).unwrap();
        assert!(validate_block_structure(&g, &bs).is_empty());
    }

    #[test]
    fn gamma_rejects_odd_block_count() {
        let mut rng = rng::root(0);
        assert!(generate_gamma(GammaShape::desk(3, 4, 16), &mut rng).is_err());
    }

    #[test]
    fn covering_two_block_host_needs_both_blocks() {
        // exactly balanced 2-block host: upper u wired to block u mod 2
        let mut rows = Vec::new();
        for u in 0..64usize {
            let block = u % 2;
            rows.push(crate::bits::BitVec::from_indices(8, block * 4..(block + 1) * 4));
        }
        let g = BipartiteGraph::from_rows(rows, 8).unwrap();
        let bs = BlockStructure {
            delta: 0.0,
            gamma: 0.5,
            k: 2,
            g_size: 4,
            lower_blocks: vec![
                VertexSet::from_indices(Side::Lower, 8, 0..4),
                VertexSet::from_indices(Side::Lower, 8, 4..8),
            ],
            upper_sets: vec![
                VertexSet::from_indices(Side::Upper, 64, (0..64).filter(|u| u % 2 == 0)),
                VertexSet::from_indices(Side::Upper, 64, (0..64).filter(|u| u % 2 == 1)),
            ],
        };
        let rep = covering_property_estimate(&g, &bs, 64, 1, 2000, 2, 9).unwrap();
        // arity 1 and delta_i exactly 1/2 each: excluding one block leaves
        // mass exactly 1/2, so T takes both blocks
        assert_eq!(rep.t_blocks.len(), 2);
        assert!((rep.identity_lhs - rep.identity_rhs as f64).abs() < 1e-6);
        assert_eq!(rep.empirical_fraction, 1.0);
        assert!(rep.empirical_fraction >= rep.analytic_bound - 1e-9);
    }

    #[test]
    fn covering_single_vertex_s() {
        let mut rng = rng::root(5);
        let (g, bs) = generate_gamma(GammaShape::desk(8, 4, 128), &mut rng).unwrap();
        let rep = covering_property_estimate(&g, &bs, 1, 3, 500, 8, 2).unwrap();
        // every tuple is the same vertex; its CN is its block union, all
        // inside the T built from its own blocks
        assert_eq!(rep.empirical_fraction, 1.0);
    }

    #[test]
    fn covering_large_arity_shrinks_t() {
        let mut rng = rng::root(12);
        let (g, bs) = generate_gamma(GammaShape::desk(16, 8, 1024), &mut rng).unwrap();
        let rep = covering_property_estimate(&g, &bs, 48, 8, 4000, 16, 3).unwrap();
        assert!(rep.t_blocks.len() < 16, "T used {} blocks", rep.t_blocks.len());
        assert!(rep.empirical_fraction >= 0.5);
        assert!(rep.empirical_fraction >= rep.analytic_bound - 1e-9);
    }

    #[test]
    fn defeat_tiny_host_no_separation_claimed() {
        let mut rng = rng::root(3);
        let (g, bs) = generate_gamma(GammaShape::desk(4, 8, 256), &mut rng).unwrap();
        let rep = drc_defeat_experiment(&g, &bs, 2, 1, 0, 2, 5).unwrap();
        assert_eq!(rep.trials, 2);
        assert!(rep.naive_successes <= 2 && rep.block_successes <= 2);
    }

    #[test]
    fn defeat_oversized_cube_fails_both() {
        let mut rng = rng::root(3);
        let (g, bs) = generate_gamma(GammaShape::desk(4, 4, 16), &mut rng).unwrap();
        // 2^{n-1} = 32 > 16 uppers: the naive side cannot even start
        assert!(crate::drc::drc_embed_cube(&g, 6, 1, 0).is_err());
        assert!(crate::blocks::block_embed_cube(&g, &bs, 6, 1, 2, 1, 0, true).is_ok_and(
            |o| matches!(o, BlockOutcome::Failed(_))
        ));
    }
}
