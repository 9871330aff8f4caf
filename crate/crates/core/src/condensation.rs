//! Standard vertex pairs, (p, M)-condensation estimation, and the
//! three-phase Q/W/R embedder for hosts whose common neighborhoods have
//! small overlaps.

use crate::bigraph::{BipartiteGraph, Side, VertexSet};
use crate::bits::BitVec;
use crate::error::{Error, Result};
use crate::rng;
use crate::stats::{wilson_bounds, Z95};
use rand::Rng;
use rayon::prelude::*;

/// Tolerance factor of the standard-pair existence argument. The proof
/// only pins it up to a constant depending on (alpha0, mu); this default
/// tracks the Markov cascade L * r^2 with L = 2r/(mu * alpha^2) bounded
/// through alpha >= alpha0.
pub fn c_standard(alpha0: f64, mu: f64) -> f64 {
    4.0 / (mu * alpha0 * alpha0)
}

#[derive(Debug, Clone)]
pub enum TupleCount {
    Exact(u64),
    Sampled {
        hits: u64,
        samples: u64,
        /// hit rate scaled by |base|^r
        estimate: f64,
        estimate_lo: f64,
        estimate_hi: f64,
    },
}

impl TupleCount {
    pub fn point(&self) -> f64 {
        match self {
            TupleCount::Exact(c) => *c as f64,
            TupleCount::Sampled { estimate, .. } => *estimate,
        }
    }
}

pub const DEFAULT_TUPLE_CAP: u128 = 10_000_000;
pub const DEFAULT_TUPLE_SAMPLES: u64 = 20_000;

#[derive(Debug, Clone, Copy)]
pub enum CountMode {
    Exact,
    Sampled { samples: u64, seed: u64 },
    /// Exact when |base|^r fits under the cap, otherwise sampled.
    Auto { samples: u64, seed: u64 },
}

/// Number of ordered r-tuples from `base` (repeats allowed) whose common
/// neighborhood has size at most `threshold`.
pub fn bad_tuple_count(
    g: &BipartiteGraph,
    base: &VertexSet,
    r: u32,
    threshold: f64,
    mode: CountMode,
) -> Result<TupleCount> {
    if base.side != Side::Upper {
        return Err(Error::invalid("bad_tuple_count expects an upper-side base"));
    }
    let pool = base.to_indices();
    if pool.is_empty() {
        return Ok(TupleCount::Exact(0));
    }
    let total = (pool.len() as u128).checked_pow(r);
    match mode {
        CountMode::Exact => match total {
            Some(t) if t <= DEFAULT_TUPLE_CAP => Ok(TupleCount::Exact(bad_tuple_count_exact(
                g, &pool, r, threshold,
            ))),
            _ => Err(Error::EnumerationCap {
                tuples: total.unwrap_or(u128::MAX),
                cap: DEFAULT_TUPLE_CAP,
            }),
        },
        CountMode::Sampled { samples, seed } => {
            Ok(bad_tuple_count_sampled(g, &pool, r, threshold, samples, seed))
        }
        CountMode::Auto { samples, seed } => match total {
            Some(t) if t <= DEFAULT_TUPLE_CAP => Ok(TupleCount::Exact(bad_tuple_count_exact(
                g, &pool, r, threshold,
            ))),
            _ => Ok(bad_tuple_count_sampled(g, &pool, r, threshold, samples, seed)),
        },
    }
}

fn bad_tuple_count_exact(g: &BipartiteGraph, pool: &[usize], r: u32, threshold: f64) -> u64 {
    let mut count = 0u64;
    let full = BitVec::ones(g.lower_count());
    let mut stack: Vec<BitVec> = vec![full];
    let mut choice: Vec<usize> = Vec::new();
    loop {
        if choice.len() == r as usize {
            if (stack.last().unwrap().count_ones() as f64) <= threshold {
                count += 1;
            }
        } else {
            let mut next = stack.last().unwrap().clone();
            next.and_assign(g.row(pool[0]));
            stack.push(next);
            choice.push(0);
            continue;
        }
        loop {
            match choice.pop() {
                None => return count,
                Some(i) => {
                    stack.pop();
                    if i + 1 < pool.len() {
                        let mut next = stack.last().unwrap().clone();
                        next.and_assign(g.row(pool[i + 1]));
                        stack.push(next);
                        choice.push(i + 1);
                        break;
                    }
                }
            }
        }
    }
}

fn bad_tuple_count_sampled(
    g: &BipartiteGraph,
    pool: &[usize],
    r: u32,
    threshold: f64,
    samples: u64,
    seed: u64,
) -> TupleCount {
    const CHUNK: u64 = 1024;
    let chunks = samples.div_ceil(CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = rng::stream(seed, &[chunk]);
            let lo = chunk * CHUNK;
            let hi = (lo + CHUNK).min(samples);
            let mut local = 0u64;
            let mut ids = vec![0usize; r as usize];
            for _ in lo..hi {
                for slot in ids.iter_mut() {
                    *slot = pool[rng.random_range(0..pool.len())];
                }
                let cn = g
                    .common_neighborhood_size(&ids, Side::Upper)
                    .expect("ids in range");
                if (cn as f64) <= threshold {
                    local += 1;
                }
            }
            local
        })
        .sum();
    let scale = (pool.len() as f64).powi(r as i32);
    let rate = hits as f64 / samples as f64;
    let (lo, hi) = wilson_bounds(hits, samples, Z95);
    TupleCount::Sampled {
        hits,
        samples,
        estimate: rate * scale,
        estimate_lo: lo * scale,
        estimate_hi: hi * scale,
    }
}

// ---------------------------------------------------------------------------
// Standard pairs
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct BadTupleBound {
    pub beta: f64,
    pub measured: TupleCount,
    pub bound: f64,
}

/// Measured witness that an ordered lower pair passes the standard-pair
/// construction: a large common neighborhood and, on the whole beta grid,
/// few ordered r-tuples with small common neighborhoods.
#[derive(Debug, Clone)]
pub struct StandardPairCertificate {
    pub v1: usize,
    pub v2: usize,
    pub alpha0: f64,
    pub alpha: f64,
    pub mu: f64,
    pub r: u32,
    /// K of the standard-pair definition; c_standard(alpha0, mu) * r^3.
    pub k_factor: f64,
    /// mu / r
    pub delta_tilde: f64,
    pub cn_size: usize,
    pub beta_grid: Vec<f64>,
    pub bad_tuple_bounds: Vec<BadTupleBound>,
}

impl StandardPairCertificate {
    /// beta_ell = alpha * (1 - ((alpha - alpha0)/alpha) * (ell/r)), ell < r.
    pub fn make_beta_grid(alpha: f64, alpha0: f64, r: u32) -> Vec<f64> {
        (0..r)
            .map(|ell| alpha - (alpha - alpha0) * ell as f64 / r as f64)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct FindPairFailure {
    pub attempts: u64,
    pub cn_too_small: u64,
    pub bad_tuples_too_many: u64,
    /// Pair with the largest common neighborhood seen, and the condition
    /// ("cn-size" or "bad-tuples") that rejected it.
    pub best: Option<(usize, usize, usize, &'static str)>,
}

#[derive(Debug, Clone)]
pub enum FindPairOutcome {
    Found(StandardPairCertificate),
    Failed(FindPairFailure),
}

pub fn find_standard_pair(
    g: &BipartiteGraph,
    alpha0: f64,
    mu: f64,
    r: u32,
    attempts: u64,
    seed: u64,
) -> Result<FindPairOutcome> {
    let alpha = g.density_f64();
    if !(alpha > alpha0 && alpha0 > 0.0) {
        return Err(Error::precondition(format!(
            "need density > alpha0: density {alpha}, alpha0 {alpha0}"
        )));
    }
    if !(mu > 0.0 && mu <= alpha0 / 2.0) {
        return Err(Error::precondition("need 0 < mu <= alpha0 / 2"));
    }
    if r < 2 {
        return Err(Error::precondition("standard pairs need r >= 2"));
    }
    let up = g.upper_count() as f64;
    if ((1.0 - mu) * alpha).powi(2) * up < (r as f64).powi(2) {
        return Err(Error::precondition(
            "size condition ((1-mu) alpha)^2 |up| >= r^2 fails",
        ));
    }

    let delta_tilde = mu / r as f64;
    let l_factor = 2.0 / (delta_tilde * alpha * alpha);
    let cn_floor = (1.0 - delta_tilde) * alpha * alpha * up;
    let beta_grid = StandardPairCertificate::make_beta_grid(alpha, alpha0, r);
    let down = g.lower_count() as f64;

    let mut rng = rng::stream(seed, &[0]);
    let mut fail = FindPairFailure {
        attempts,
        cn_too_small: 0,
        bad_tuples_too_many: 0,
        best: None,
    };

    for attempt in 0..attempts {
        let v1 = rng.random_range(0..g.lower_count());
        let v2 = rng.random_range(0..g.lower_count());
        let a = g.common_neighborhood(&[v1, v2], Side::Lower)?;
        let cn_size = a.card();
        let record_best = |fail: &mut FindPairFailure, why: &'static str| {
            if fail.best.map_or(true, |(_, _, c, _)| cn_size > c) {
                fail.best = Some((v1, v2, cn_size, why));
            }
        };
        if (cn_size as f64) < cn_floor {
            fail.cn_too_small += 1;
            record_best(&mut fail, "cn-size");
            continue;
        }
        let mut bounds = Vec::with_capacity(beta_grid.len());
        let mut ok = true;
        for (ell, &beta) in beta_grid.iter().enumerate() {
            let threshold = beta.powi(r as i32) * down;
            let measured = bad_tuple_count(
                g,
                &a,
                r,
                threshold,
                CountMode::Auto {
                    samples: DEFAULT_TUPLE_SAMPLES,
                    seed: rng::child_seed(seed, (attempt << 8) ^ ell as u64 ^ 1),
                },
            )?;
            let bound = l_factor * r as f64 * beta.powi(2 * r as i32) * up.powi(r as i32);
            if measured.point() > bound {
                ok = false;
                bounds.push(BadTupleBound { beta, measured, bound });
                break;
            }
            bounds.push(BadTupleBound { beta, measured, bound });
        }
        if !ok {
            fail.bad_tuples_too_many += 1;
            record_best(&mut fail, "bad-tuples");
            continue;
        }
        return Ok(FindPairOutcome::Found(StandardPairCertificate {
            v1,
            v2,
            alpha0,
            alpha,
            mu,
            r,
            k_factor: c_standard(alpha0, mu) * (r as f64).powi(3),
            delta_tilde,
            cn_size,
            beta_grid,
            bad_tuple_bounds: bounds,
        }));
    }
    Ok(FindPairOutcome::Failed(fail))
}

// ---------------------------------------------------------------------------
// Condensation estimation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct CondensationEstimate {
    pub p_hat: f64,
    pub samples: u64,
    pub hits: u64,
    pub m_overlap: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

impl CondensationEstimate {
    /// One-sided confidence radius around p_hat, conservative both ways.
    pub fn radius(&self) -> f64 {
        (self.p_hat - self.wilson_lo).max(self.wilson_hi - self.p_hat)
    }
}

impl std::fmt::Display for CondensationEstimate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "p_hat {:.6} ({} / {} samples), M {}, 95% interval [{:.6}, {:.6}]",
            self.p_hat, self.hits, self.samples, self.m_overlap, self.wilson_lo, self.wilson_hi
        )
    }
}

/// Probability estimate that two independent uniform r-tuples from
/// CN(v1, v2) have common neighborhoods overlapping in >= M vertices.
pub fn estimate_condensation(
    g: &BipartiteGraph,
    v1: usize,
    v2: usize,
    r: u32,
    m_overlap: f64,
    samples: u64,
    seed: u64,
) -> Result<CondensationEstimate> {
    let a = g.common_neighborhood(&[v1, v2], Side::Lower)?;
    let pool = a.to_indices();
    if pool.is_empty() {
        return Err(Error::invalid("CN(v1, v2) is empty"));
    }
    if samples == 0 {
        return Err(Error::invalid("samples must be >= 1"));
    }
    const CHUNK: u64 = 512;
    let chunks = samples.div_ceil(CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = rng::stream(seed, &[1, chunk]);
            let lo = chunk * CHUNK;
            let hi = (lo + CHUNK).min(samples);
            let mut local = 0u64;
            let mut ys = vec![0usize; r as usize];
            let mut yt = vec![0usize; r as usize];
            for _ in lo..hi {
                for slot in ys.iter_mut() {
                    *slot = pool[rng.random_range(0..pool.len())];
                }
                for slot in yt.iter_mut() {
                    *slot = pool[rng.random_range(0..pool.len())];
                }
                let cn_a = g.common_neighborhood(&ys, Side::Upper).expect("in range");
                let cn_b = g.common_neighborhood(&yt, Side::Upper).expect("in range");
                if cn_a.bits.and_count(&cn_b.bits) as f64 >= m_overlap {
                    local += 1;
                }
            }
            local
        })
        .sum();
    let p_hat = hits as f64 / samples as f64;
    let (wilson_lo, wilson_hi) = wilson_bounds(hits, samples, Z95);
    Ok(CondensationEstimate {
        p_hat,
        samples,
        hits,
        m_overlap,
        wilson_lo,
        wilson_hi,
    })
}

// ---------------------------------------------------------------------------
// Generic H embeddings and the Q/W/R embedder
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct HEmbedding {
    pub upper_images: Vec<usize>,
    pub lower_images: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HViolation {
    ImageOutOfRange { side: Side, pattern_id: usize, id: usize },
    DuplicateImage { side: Side, a: usize, b: usize },
    EdgeNotPreserved { upper: usize, lower: usize },
}

/// Injectivity plus adjacency of every pattern edge; for r-regular H this
/// checks exactly r * m constraints.
pub fn verify_h_embedding(g: &BipartiteGraph, h: &BipartiteGraph, e: &HEmbedding) -> Vec<HViolation> {
    let mut out = Vec::new();
    for (side, images, size) in [
        (Side::Upper, &e.upper_images, g.upper_count()),
        (Side::Lower, &e.lower_images, g.lower_count()),
    ] {
        let mut seen = std::collections::HashMap::new();
        for (pid, &id) in images.iter().enumerate() {
            if id >= size {
                out.push(HViolation::ImageOutOfRange { side, pattern_id: pid, id });
                continue;
            }
            if let Some(&prev) = seen.get(&id) {
                out.push(HViolation::DuplicateImage { side, a: prev, b: pid });
            } else {
                seen.insert(id, pid);
            }
        }
    }
    for (hu, hv) in h.edges() {
        let (gu, gv) = (e.upper_images[hu], e.lower_images[hv]);
        if gu < g.upper_count() && gv < g.lower_count() && !g.has_edge(gu, gv) {
            out.push(HViolation::EdgeNotPreserved { upper: hu, lower: hv });
        }
    }
    out
}

/// Returns Some(r) when every vertex of both parts has degree exactly r.
pub fn regularity_of(h: &BipartiteGraph) -> Option<u32> {
    let r = h.row(0).count_ones();
    for u in 0..h.upper_count() {
        if h.row(u).count_ones() != r {
            return None;
        }
    }
    for v in 0..h.lower_count() {
        if h.column(v).count_ones() != r {
            return None;
        }
    }
    Some(r as u32)
}

pub const DEFAULT_PHASE1_BUDGET: u32 = 64;
pub const DEFAULT_C_CHERNOFF: f64 = 0.25;
/// Relative guard band on floating-point threshold comparisons.
const GUARD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NcStage {
    ResampleBudget,
    QwGreedyStuck,
    NoFreshRepresentative,
}

impl std::fmt::Display for NcStage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NcStage::ResampleBudget => write!(f, "phase-1 resample budget"),
            NcStage::QwGreedyStuck => write!(f, "phase-2 Q/W greedy stuck"),
            NcStage::NoFreshRepresentative => write!(f, "phase-3 no fresh representative"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NcReport {
    pub m: usize,
    pub tiled_copies: usize,
    pub phase1_attempts: u32,
    pub cond_a_failures: u32,
    pub cond_b_failures: u32,
    pub beta0: f64,
    pub q: Vec<usize>,
    pub w: Vec<usize>,
    pub regular: Vec<usize>,
    pub candidate_count: usize,
    pub failed_stage: Option<NcStage>,
}

#[derive(Debug, Clone)]
pub enum NcOutcome {
    Embedded(HEmbedding, NcReport),
    Failed(NcReport),
}

impl NcOutcome {
    pub fn report(&self) -> &NcReport {
        match self {
            NcOutcome::Embedded(_, r) | NcOutcome::Failed(r) => r,
        }
    }
    pub fn embedding(&self) -> Option<&HEmbedding> {
        match self {
            NcOutcome::Embedded(e, _) => Some(e),
            NcOutcome::Failed(_) => None,
        }
    }
}

/// Embeds an r-regular bipartite H on m+m vertices through a standard pair
/// whose common neighborhoods are not (p, M)-condensed. Three phases:
/// first-moment resampling of the image tuple, deterministic embedding of
/// the small/overlapping index sets Q and W, then randomized distinct
/// representatives for the regular set R.
pub fn embed_regular_noncondensed(
    g: &BipartiteGraph,
    cert: &StandardPairCertificate,
    h: &BipartiteGraph,
    m_overlap: f64,
    p: f64,
    seed: u64,
) -> Result<NcOutcome> {
    embed_regular_noncondensed_with(
        g,
        cert,
        h,
        m_overlap,
        p,
        seed,
        DEFAULT_PHASE1_BUDGET,
        DEFAULT_C_CHERNOFF,
    )
}

#[allow(clippy::too_many_arguments)]
pub fn embed_regular_noncondensed_with(
    g: &BipartiteGraph,
    cert: &StandardPairCertificate,
    h: &BipartiteGraph,
    m_overlap: f64,
    p: f64,
    seed: u64,
    phase1_budget: u32,
    c_chernoff: f64,
) -> Result<NcOutcome> {
    if h.upper_count() != h.lower_count() {
        return Err(Error::precondition("pattern must have equal parts"));
    }
    let m_small = h.upper_count();
    let r = regularity_of(h).ok_or_else(|| Error::precondition("pattern is not regular"))?;
    if r != cert.r {
        return Err(Error::precondition(format!(
            "pattern regularity {r} does not match the pair's r {}",
            cert.r
        )));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::precondition("need p in (0, 1]"));
    }
    let down = g.lower_count() as f64;
    let alpha = cert.alpha;

    // Tiling: the argument wants m >= alpha^r |down|; take disjoint copies
    // of H until it holds, then read off the first copy at the end.
    let target = alpha.powi(r as i32) * down;
    let copies = if (m_small as f64) < target {
        (target / m_small as f64).ceil() as usize
    } else {
        1
    };
    let m = m_small * copies;

    let a = g.common_neighborhood(&[cert.v1, cert.v2], Side::Lower)?;
    let pool = a.to_indices();
    if pool.len() < m {
        return Err(Error::precondition(format!(
            "|CN(v1, v2)| = {} < m = {m} (after tiling x{copies})",
            pool.len()
        )));
    }

    // neighbor index sets I_j of the tiled pattern
    let neighbor_sets: Vec<Vec<usize>> = (0..m)
        .map(|j| {
            let base = (j / m_small) * m_small;
            h.column(j % m_small).iter_ones().map(|i| i + base).collect()
        })
        .collect();

    let k_factor = cert.k_factor;
    let beta0 = (alpha.powi(2 * r as i32) * down / (4.0 * m as f64 * k_factor)).powf(1.0 / r as f64);
    let mut report = NcReport {
        m,
        tiled_copies: copies,
        phase1_attempts: 0,
        cond_a_failures: 0,
        cond_b_failures: 0,
        beta0,
        q: Vec::new(),
        w: Vec::new(),
        regular: Vec::new(),
        candidate_count: 0,
        failed_stage: None,
    };

    let mut rng = rng::stream(seed, &[2]);
    let mut accepted: Option<(Vec<usize>, Vec<BitVec>)> = None;
    for _ in 0..phase1_budget.max(1) {
        report.phase1_attempts += 1;
        let picked = rand::seq::index::sample(&mut rng, pool.len(), m);
        let ys: Vec<usize> = picked.iter().map(|i| pool[i]).collect();
        let cns: Vec<BitVec> = neighbor_sets
            .iter()
            .map(|is| {
                let ids: Vec<usize> = is.iter().map(|&i| ys[i]).collect();
                g.common_neighborhood(&ids, Side::Upper)
                    .expect("ids in range")
                    .bits
            })
            .collect();
        // (a): on the whole beta grid, few indices with small CN
        let cond_a = cert.beta_grid.iter().all(|&beta| {
            let threshold = beta.powi(r as i32) * down;
            let count = cns.iter().filter(|cn| (cn.count_ones() as f64) <= threshold).count();
            let bound = m as f64 * k_factor * beta.powi(2 * r as i32) / alpha.powi(2 * r as i32);
            (count as f64) <= bound * (1.0 + GUARD)
        });
        if !cond_a {
            report.cond_a_failures += 1;
            continue;
        }
        // (b): few ordered pairs with overlap >= M
        let heavy_pairs: u64 = (0..m)
            .into_par_iter()
            .map(|j1| {
                let mut c = 0u64;
                for j2 in 0..m {
                    if cns[j1].and_count(&cns[j2]) as f64 >= m_overlap {
                        c += 1;
                    }
                }
                c
            })
            .sum();
        let pair_bound = 3f64.powi(7) * p * (m as f64).powi(2);
        if heavy_pairs as f64 > pair_bound * (1.0 + GUARD) {
            report.cond_b_failures += 1;
            continue;
        }
        accepted = Some((ys, cns));
        break;
    }
    let (ys, cns) = match accepted {
        Some(v) => v,
        None => {
            report.failed_stage = Some(NcStage::ResampleBudget);
            return Ok(NcOutcome::Failed(report));
        }
    };

    // Partition [m] into Q (small CN), W (heavy overlaps), R (the rest).
    let beta0_threshold = beta0.powi(r as i32) * down;
    let mut q: Vec<usize> = (0..m)
        .filter(|&j| (cns[j].count_ones() as f64) <= beta0_threshold)
        .collect();
    q.sort_by_key(|&j| cns[j].count_ones());
    let in_q: Vec<bool> = {
        let mut v = vec![false; m];
        for &j in &q {
            v[j] = true;
        }
        v
    };
    let sqrt_p_m = p.sqrt() * m as f64;
    let w: Vec<usize> = (0..m)
        .filter(|&j| {
            if in_q[j] {
                return false;
            }
            let heavy = (0..m)
                .filter(|&j2| cns[j].and_count(&cns[j2]) as f64 >= m_overlap)
                .count();
            heavy as f64 >= sqrt_p_m * (1.0 - GUARD)
        })
        .collect();
    let in_w: Vec<bool> = {
        let mut v = vec![false; m];
        for &j in &w {
            v[j] = true;
        }
        v
    };
    let regular: Vec<usize> = (0..m).filter(|&j| !in_q[j] && !in_w[j]).collect();
    report.q = q.clone();
    report.w = w.clone();
    report.regular = regular.clone();

    // Phase 2: deterministic embedding of Q (ascending CN size) then W.
    let mut images = vec![usize::MAX; m];
    let mut used = BitVec::zeros(g.lower_count());
    for &j in q.iter().chain(w.iter()) {
        let mut avail = cns[j].clone();
        avail.subtract_assign(&used);
        match avail.first_one() {
            Some(v) => {
                used.set(v);
                images[j] = v;
            }
            None => {
                report.failed_stage = Some(NcStage::QwGreedyStuck);
                return Ok(NcOutcome::Failed(report));
            }
        }
    }

    // Phase 3: randomized distinct representatives for R.
    let h_candidates = ((10.0 / c_chernoff) * down.ln()).ceil().max(1.0) as usize;
    report.candidate_count = h_candidates;
    let f_qw = used.clone();
    let mut candidate_lists: Vec<(usize, Vec<usize>)> = Vec::with_capacity(regular.len());
    for &j in &regular {
        let mut avail = cns[j].clone();
        avail.subtract_assign(&f_qw);
        let avail_ids = avail.to_indices();
        if avail_ids.is_empty() {
            report.failed_stage = Some(NcStage::NoFreshRepresentative);
            return Ok(NcOutcome::Failed(report));
        }
        let draws = h_candidates.min(avail_ids.len());
        let zs: Vec<usize> = (0..draws)
            .map(|_| avail_ids[rng.random_range(0..avail_ids.len())])
            .collect();
        candidate_lists.push((j, zs));
    }
    for (j, zs) in candidate_lists {
        match zs.iter().find(|&&z| !used.get(z)) {
            Some(&z) => {
                used.set(z);
                images[j] = z;
            }
            None => {
                report.failed_stage = Some(NcStage::NoFreshRepresentative);
                return Ok(NcOutcome::Failed(report));
            }
        }
    }

    // Restrict to the first copy of the pattern.
    let embedding = HEmbedding {
        upper_images: ys[..m_small].to_vec(),
        lower_images: images[..m_small].to_vec(),
    };
    debug_assert!(verify_h_embedding(g, h, &embedding).is_empty());
    Ok(NcOutcome::Embedded(embedding, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::gen_random_bipartite;

    #[test]
    fn standard_pair_on_complete_graph() {
        let g = BipartiteGraph::complete(8, 8);
        match find_standard_pair(&g, 0.5, 0.1, 2, 10, 3).unwrap() {
            FindPairOutcome::Found(c) => {
                assert_eq!(c.cn_size, 8);
                // below beta = alpha = 1 no tuple is bad on a complete graph
                // (at beta = 1 the <= threshold counts every tuple)
                assert!(c
                    .bad_tuple_bounds
                    .iter()
                    .filter(|b| b.beta < 1.0)
                    .all(|b| b.measured.point() == 0.0));
                assert!(c
                    .bad_tuple_bounds
                    .iter()
                    .all(|b| b.measured.point() <= b.bound));
                // grid decreasing from alpha towards alpha0 + (alpha - alpha0)/r
                assert!(c.beta_grid.windows(2).all(|w| w[0] > w[1]));
                assert!((c.beta_grid[0] - 1.0).abs() < 1e-12);
            }
            FindPairOutcome::Failed(_) => panic!("complete graph pair must qualify"),
        }
    }

    #[test]
    fn standard_pair_rejects_low_density() {
        let g = BipartiteGraph::edgeless(8, 8);
        assert!(find_standard_pair(&g, 0.5, 0.1, 2, 4, 0).is_err());
    }

    #[test]
    fn standard_pair_seeded_random_graph() {
        let mut rng = rng::root(11);
        let g = gen_random_bipartite(64, 64, 0.6, &mut rng);
        match find_standard_pair(&g, 0.3, 0.05, 2, 100, 42).unwrap() {
            FindPairOutcome::Found(c) => {
                // reproducible under the same seed
                match find_standard_pair(&g, 0.3, 0.05, 2, 100, 42).unwrap() {
                    FindPairOutcome::Found(c2) => {
                        assert_eq!((c.v1, c.v2), (c2.v1, c2.v2));
                    }
                    _ => panic!("determinism"),
                }
            }
            FindPairOutcome::Failed(f) => panic!("expected success, got {f:?}"),
        }
    }

    #[test]
    fn bad_tuples_complete_graph_none() {
        let g = BipartiteGraph::complete(4, 4);
        let base = VertexSet::full(Side::Upper, 4);
        match bad_tuple_count(&g, &base, 2, 1.0, CountMode::Exact).unwrap() {
            TupleCount::Exact(c) => assert_eq!(c, 0),
            _ => unreachable!(),
        }
    }

    #[test]
    fn bad_tuples_path_threshold_zero() {
        let g = BipartiteGraph::from_edges(2, 2, [(0, 0), (1, 0), (1, 1)]).unwrap();
        let base = VertexSet::full(Side::Upper, 2);
        match bad_tuple_count(&g, &base, 2, 0.0, CountMode::Exact).unwrap() {
            TupleCount::Exact(c) => assert_eq!(c, 0),
            _ => unreachable!(),
        }
    }

    #[test]
    fn sampled_mode_agrees_with_exact() {
        let mut rng = rng::root(5);
        let g = gen_random_bipartite(64, 64, 0.5, &mut rng);
        let base = VertexSet::full(Side::Upper, 64);
        let threshold = 10.0;
        let exact = match bad_tuple_count(&g, &base, 2, threshold, CountMode::Exact).unwrap() {
            TupleCount::Exact(c) => c as f64,
            _ => unreachable!(),
        };
        match bad_tuple_count(
            &g,
            &base,
            2,
            threshold,
            CountMode::Sampled { samples: 10_000, seed: 7 },
        )
        .unwrap()
        {
            TupleCount::Sampled { estimate_lo, estimate_hi, .. } => {
                let radius = (estimate_hi - estimate_lo) / 2.0;
                let mid = (estimate_hi + estimate_lo) / 2.0;
                assert!(
                    (exact - mid).abs() <= 3.0 * radius.max(1.0),
                    "exact {exact} vs sampled interval [{estimate_lo}, {estimate_hi}]"
                );
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn condensation_complete_graph_extremes() {
        let g = BipartiteGraph::complete(8, 8);
        let est = estimate_condensation(&g, 0, 1, 2, 8.0, 500, 1).unwrap();
        assert_eq!(est.p_hat, 1.0);
        let est = estimate_condensation(&g, 0, 1, 2, 9.0, 500, 1).unwrap();
        assert_eq!(est.p_hat, 0.0);
    }

    #[test]
    fn condensation_deterministic_per_seed() {
        let mut rng = rng::root(2);
        let g = gen_random_bipartite(32, 32, 0.7, &mut rng);
        let a = estimate_condensation(&g, 0, 1, 2, 10.0, 2000, 9).unwrap();
        let b = estimate_condensation(&g, 0, 1, 2, 10.0, 2000, 9).unwrap();
        assert_eq!(a.hits, b.hits);
        // across seeds, estimates agree within 4 radii
        let c = estimate_condensation(&g, 0, 1, 2, 10.0, 2000, 10).unwrap();
        assert!((a.p_hat - c.p_hat).abs() <= 4.0 * a.radius().max(c.radius()));
    }

    fn cycle8() -> BipartiteGraph {
        // K_{4,4} minus a perfect matching: 3-regular on 4+4
        BipartiteGraph::from_edges(
            4,
            4,
            (0..4).flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j))),
        )
        .unwrap()
    }

    #[test]
    fn qwr_embeds_into_complete_host() {
        let g = BipartiteGraph::complete(8, 8);
        let cert = match find_standard_pair(&g, 0.5, 0.1, 2, 10, 3).unwrap() {
            FindPairOutcome::Found(c) => c,
            _ => unreachable!(),
        };
        // Q_2 as a 2-regular bipartite pattern on 2+2
        let q2 = BipartiteGraph::from_edges(2, 2, [(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap();
        match embed_regular_noncondensed(&g, &cert, &q2, 4.0, 0.5, 5).unwrap() {
            NcOutcome::Embedded(e, rep) => {
                assert!(verify_h_embedding(&g, &q2, &e).is_empty());
                let mut all: Vec<usize> = rep
                    .q
                    .iter()
                    .chain(rep.w.iter())
                    .chain(rep.regular.iter())
                    .copied()
                    .collect();
                all.sort_unstable();
                assert_eq!(all, (0..rep.m).collect::<Vec<_>>());
            }
            NcOutcome::Failed(rep) => panic!("complete host failed at {:?}", rep.failed_stage),
        }
    }

    #[test]
    fn qwr_embeds_matching() {
        let g = BipartiteGraph::complete(8, 8);
        let mut cert = match find_standard_pair(&g, 0.5, 0.1, 2, 10, 3).unwrap() {
            FindPairOutcome::Found(c) => c,
            _ => unreachable!(),
        };
        // 1-regular perfect matching on 4+4 needs r = 1 in the certificate
        cert.r = 1;
        cert.beta_grid = StandardPairCertificate::make_beta_grid(cert.alpha, cert.alpha0, 1);
        let matching = BipartiteGraph::from_edges(4, 4, (0..4).map(|i| (i, i))).unwrap();
        match embed_regular_noncondensed(&g, &cert, &matching, 4.0, 0.5, 5).unwrap() {
            NcOutcome::Embedded(e, _) => assert!(verify_h_embedding(&g, &matching, &e).is_empty()),
            NcOutcome::Failed(rep) => panic!("matching failed at {:?}", rep.failed_stage),
        }
    }

    #[test]
    fn qwr_embeds_cubelike_into_random_host() {
        let mut grng = rng::root(31);
        let g = gen_random_bipartite(128, 128, 0.8, &mut grng);
        let cert = match find_standard_pair(&g, 0.3, 0.05, 3, 200, 8).unwrap() {
            FindPairOutcome::Found(c) => c,
            FindPairOutcome::Failed(f) => panic!("no pair: {f:?}"),
        };
        let h = cycle8();
        let mut successes = 0;
        for seed in 0..10u64 {
            if let NcOutcome::Embedded(e, _) =
                embed_regular_noncondensed(&g, &cert, &h, 16.0, 0.25, seed).unwrap()
            {
                assert!(verify_h_embedding(&g, &h, &e).is_empty());
                successes += 1;
            }
        }
        assert!(successes >= 8, "only {successes}/10 seeded trials succeeded");
    }

    #[test]
    fn qwr_rejects_mismatched_regularity() {
        let g = BipartiteGraph::complete(8, 8);
        let cert = match find_standard_pair(&g, 0.5, 0.1, 2, 10, 3).unwrap() {
            FindPairOutcome::Found(c) => c,
            _ => unreachable!(),
        };
        let path = BipartiteGraph::from_edges(2, 2, [(0, 0), (1, 0), (1, 1)]).unwrap();
        assert!(embed_regular_noncondensed(&g, &cert, &path, 4.0, 0.5, 5).is_err());
    }
}
