//! Cross-cutting verification tooling: the exact backtracking embedding
//! oracle, an empirical check of the Bernoulli concentration bound, random
//! host generation, report rendering, and the embedding file format.

use crate::bigraph::{BipartiteGraph, Side};
use crate::bits::BitVec;
use crate::condensation::HEmbedding;
use crate::drc::CubeEmbedding;
use crate::error::{Error, Result};
use crate::hypercube::cube_as_bigraph;
use crate::rng;
use rand::Rng;
use std::io::BufRead;
use std::time::{Duration, Instant};

// ---------------------------------------------------------------------------
// Random hosts
// ---------------------------------------------------------------------------

/// Each edge present independently with the given probability.
pub fn gen_random_bipartite(
    upper: usize,
    lower: usize,
    density: f64,
    rng: &mut impl Rng,
) -> BipartiteGraph {
    assert!((0.0..=1.0).contains(&density), "density must be in [0, 1]");
    let mut rows = Vec::with_capacity(upper);
    for _ in 0..upper {
        let mut row = BitVec::zeros(lower);
        if density >= 1.0 {
            row = BitVec::ones(lower);
        } else if density > 0.0 {
            for v in 0..lower {
                if rng.random_bool(density) {
                    row.set(v);
                }
            }
        }
        rows.push(row);
    }
    BipartiteGraph::from_rows(rows, lower).expect("non-empty parts")
}

/// A symmetric 2-coloring of the edges of K_N, stored as one bit per
/// unordered pair (bit set = color 1).
#[derive(Debug, Clone)]
pub struct Coloring {
    pub n: usize,
    bits: BitVec,
}

impl Coloring {
    fn pair_index(&self, a: usize, b: usize) -> usize {
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        // index of (i, j) with i < j in lexicographic order
        i * self.n - i * (i + 1) / 2 + (j - i - 1)
    }

    pub fn uniform_random(n: usize, rng: &mut impl Rng) -> Self {
        let m = n * (n - 1) / 2;
        let mut bits = BitVec::zeros(m.max(1));
        for i in 0..m {
            if rng.random_bool(0.5) {
                bits.set(i);
            }
        }
        Coloring { n, bits }
    }

    pub fn constant(n: usize, color: bool) -> Self {
        let m = n * (n - 1) / 2;
        Coloring {
            n,
            bits: if color { BitVec::ones(m.max(1)) } else { BitVec::zeros(m.max(1)) },
        }
    }

    pub fn set_color(&mut self, a: usize, b: usize, color: bool) {
        let idx = self.pair_index(a, b);
        if color {
            self.bits.set(idx);
        } else {
            self.bits.unset(idx);
        }
    }

    pub fn color(&self, a: usize, b: usize) -> bool {
        assert!(a != b && a < self.n && b < self.n);
        self.bits.get(self.pair_index(a, b))
    }
}

// ---------------------------------------------------------------------------
// Brute-force embedding oracle
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct BruteBudget {
    pub max_nodes: u64,
    pub max_time: Option<Duration>,
    pub max_pattern_vertices: usize,
}

impl Default for BruteBudget {
    fn default() -> Self {
        BruteBudget {
            max_nodes: 20_000_000,
            max_time: None,
            max_pattern_vertices: 16,
        }
    }
}

#[derive(Debug, Clone)]
pub enum BruteOutcome {
    Embedded(HEmbedding),
    Impossible,
    Timeout,
}

struct BruteState<'a> {
    g: &'a BipartiteGraph,
    h: &'a BipartiteGraph,
    order: Vec<(Side, usize)>,
    up_img: Vec<usize>,
    lo_img: Vec<usize>,
    used_up: BitVec,
    used_lo: BitVec,
    nodes: u64,
    budget: BruteBudget,
    started: Instant,
}

enum Search {
    Found,
    Exhausted,
    OutOfBudget,
}

impl BruteState<'_> {
    fn out_of_budget(&self) -> bool {
        if self.nodes >= self.budget.max_nodes {
            return true;
        }
        if let Some(limit) = self.budget.max_time {
            // check the clock sparsely
            if self.nodes % 1024 == 0 && self.started.elapsed() > limit {
                return true;
            }
        }
        false
    }

    fn candidates(&self, side: Side, pid: usize) -> BitVec {
        // intersection of the G-neighborhoods of already-assigned pattern
        // neighbors, minus used vertices
        let mut cand = BitVec::ones(self.g.part_size(side));
        match side {
            Side::Upper => {
                for hv in self.h.row(pid).iter_ones() {
                    let img = self.lo_img[hv];
                    if img != usize::MAX {
                        cand.and_assign(self.g.column(img));
                    }
                }
                cand.subtract_assign(&self.used_up);
            }
            Side::Lower => {
                for hu in self.h.column(pid).iter_ones() {
                    let img = self.up_img[hu];
                    if img != usize::MAX {
                        cand.and_assign(self.g.row(img));
                    }
                }
                cand.subtract_assign(&self.used_lo);
            }
        }
        cand
    }

    fn search(&mut self, depth: usize) -> Search {
        if depth == self.order.len() {
            return Search::Found;
        }
        if self.out_of_budget() {
            return Search::OutOfBudget;
        }
        let (side, pid) = self.order[depth];
        let cand = self.candidates(side, pid);
        for id in cand.iter_ones() {
            self.nodes += 1;
            match side {
                Side::Upper => {
                    self.up_img[pid] = id;
                    self.used_up.set(id);
                }
                Side::Lower => {
                    self.lo_img[pid] = id;
                    self.used_lo.set(id);
                }
            }
            match self.search(depth + 1) {
                Search::Found => return Search::Found,
                Search::OutOfBudget => return Search::OutOfBudget,
                Search::Exhausted => {}
            }
            match side {
                Side::Upper => {
                    self.up_img[pid] = usize::MAX;
                    self.used_up.unset(id);
                }
                Side::Lower => {
                    self.lo_img[pid] = usize::MAX;
                    self.used_lo.unset(id);
                }
            }
        }
        Search::Exhausted
    }
}

/// Exact search for an embedding of the bipartite pattern `h` into `g`
/// (uppers to uppers, lowers to lowers). `Impossible` is only returned on
/// an exhausted search; running out of budget is reported separately.
pub fn brute_force_embed(
    g: &BipartiteGraph,
    h: &BipartiteGraph,
    budget: BruteBudget,
) -> Result<BruteOutcome> {
    let total = h.upper_count() + h.lower_count();
    if total > budget.max_pattern_vertices {
        return Err(Error::precondition(format!(
            "pattern has {total} vertices, oracle cap is {}",
            budget.max_pattern_vertices
        )));
    }
    let mut order: Vec<(Side, usize)> = (0..h.upper_count())
        .map(|u| (Side::Upper, u))
        .chain((0..h.lower_count()).map(|v| (Side::Lower, v)))
        .collect();
    order.sort_by_key(|&(side, id)| std::cmp::Reverse(h.degree(id, side)));

    let mut state = BruteState {
        g,
        h,
        order,
        up_img: vec![usize::MAX; h.upper_count()],
        lo_img: vec![usize::MAX; h.lower_count()],
        used_up: BitVec::zeros(g.upper_count()),
        used_lo: BitVec::zeros(g.lower_count()),
        nodes: 0,
        budget,
        started: Instant::now(),
    };
    match state.search(0) {
        Search::Found => Ok(BruteOutcome::Embedded(HEmbedding {
            upper_images: state.up_img,
            lower_images: state.lo_img,
        })),
        Search::Exhausted => Ok(BruteOutcome::Impossible),
        Search::OutOfBudget => Ok(BruteOutcome::Timeout),
    }
}

#[derive(Debug, Clone)]
pub enum CubeBruteOutcome {
    Embedded(CubeEmbedding),
    Impossible,
    Timeout,
}

/// Exact feasibility of Q_n in `g`, trying both orientations of the cube's
/// bipartition against the host's parts.
pub fn brute_force_embed_cube(
    g: &BipartiteGraph,
    n: u32,
    budget: BruteBudget,
) -> Result<CubeBruteOutcome> {
    let (pattern, odd_words, even_words) = cube_as_bigraph(n)?;
    let mut saw_timeout = false;
    for odd_side in [Side::Upper, Side::Lower] {
        let host = match odd_side {
            Side::Upper => g.clone(),
            Side::Lower => g.transposed(),
        };
        match brute_force_embed(&host, &pattern, budget)? {
            BruteOutcome::Embedded(he) => {
                let mut images = vec![usize::MAX; 1 << n];
                for (i, &w) in odd_words.iter().enumerate() {
                    images[w as usize] = he.upper_images[i];
                }
                for (j, &w) in even_words.iter().enumerate() {
                    images[w as usize] = he.lower_images[j];
                }
                return Ok(CubeBruteOutcome::Embedded(CubeEmbedding { n, odd_side, images }));
            }
            BruteOutcome::Impossible => {}
            BruteOutcome::Timeout => saw_timeout = true,
        }
    }
    Ok(if saw_timeout {
        CubeBruteOutcome::Timeout
    } else {
        CubeBruteOutcome::Impossible
    })
}

// ---------------------------------------------------------------------------
// Chernoff sanity check
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub enum TailMode {
    Samples(u64),
    /// Exact binomial tail instead of sampling.
    Exact,
}

#[derive(Debug, Clone)]
pub struct ChernoffRow {
    pub t: f64,
    pub empirical: f64,
    pub bound: f64,
    pub flagged: bool,
}

pub fn default_t_grid(p: f64, n_vars: u32) -> Vec<f64> {
    [0.2, 0.4, 0.6, 0.8, 1.0]
        .iter()
        .map(|f| f * p * n_vars as f64)
        .collect()
}

/// Compares the tail P{|sum - pn| >= t} against 2 exp(-c t^2 / (p n)).
/// A flagged row is evidence the configured constant is too large.
pub fn chernoff_empirical(
    p: f64,
    n_vars: u32,
    t_grid: &[f64],
    mode: TailMode,
    c_chernoff: f64,
    seed: u64,
) -> Result<Vec<ChernoffRow>> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid("p must be in (0, 1)"));
    }
    let pn = p * n_vars as f64;
    for &t in t_grid {
        if !(t > 0.0 && t <= pn) {
            return Err(Error::invalid(format!("t = {t} outside (0, pn = {pn}]")));
        }
    }
    let tails: Vec<f64> = match mode {
        TailMode::Exact => t_grid
            .iter()
            .map(|&t| exact_binomial_tail(p, n_vars, t))
            .collect(),
        TailMode::Samples(samples) => {
            if samples == 0 {
                return Err(Error::invalid("samples must be >= 1"));
            }
            let mut counts = vec![0u64; t_grid.len()];
            let mut rng = rng::stream(seed, &[3]);
            for _ in 0..samples {
                let mut sum = 0u32;
                for _ in 0..n_vars {
                    if rng.random_bool(p) {
                        sum += 1;
                    }
                }
                let dev = (sum as f64 - pn).abs();
                for (i, &t) in t_grid.iter().enumerate() {
                    if dev >= t {
                        counts[i] += 1;
                    }
                }
            }
            counts.iter().map(|&c| c as f64 / samples as f64).collect()
        }
    };
    Ok(t_grid
        .iter()
        .zip(tails)
        .map(|(&t, empirical)| {
            let bound = 2.0 * (-c_chernoff * t * t / pn).exp();
            ChernoffRow {
                t,
                empirical,
                bound,
                flagged: empirical > bound,
            }
        })
        .collect())
}

/// P{|Bin(n, p) - pn| >= t}, exactly (up to f64 evaluation of the pmf).
pub fn exact_binomial_tail(p: f64, n_vars: u32, t: f64) -> f64 {
    let n = n_vars as usize;
    let mut ln_fact = vec![0.0f64; n + 1];
    for k in 1..=n {
        ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
    }
    let pn = p * n_vars as f64;
    let mut tail = 0.0;
    for k in 0..=n {
        if (k as f64 - pn).abs() >= t {
            let ln_pmf = ln_fact[n] - ln_fact[k] - ln_fact[n - k]
                + k as f64 * p.ln()
                + (n - k) as f64 * (1.0 - p).ln();
            tail += ln_pmf.exp();
        }
    }
    tail.min(1.0)
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// Structured text emitted by the CLI. Rendering is deterministic given
/// (command, seed); timings are deliberately kept out and go to stderr.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub command: String,
    pub seed: u64,
    sections: Vec<(String, String)>,
}

impl ExperimentReport {
    pub fn new(command: impl Into<String>, seed: u64) -> Self {
        ExperimentReport {
            command: command.into(),
            seed,
            sections: Vec::new(),
        }
    }

    pub fn push(&mut self, title: impl Into<String>, body: impl Into<String>) {
        self.sections.push((title.into(), body.into()));
    }

    pub fn render(&self) -> String {
        let mut s = format!("command: {}\nseed: {}\n", self.command, self.seed);
        for (title, body) in &self.sections {
            s.push_str(&format!("\n[{title}]\n"));
            s.push_str(body.trim_end());
            s.push('\n');
        }
        s
    }
}

// ---------------------------------------------------------------------------
// Embedding file format: `n upper_count lower_count` header, then one
// `mask side id` line per cube vertex, side in {U, L}.
// ---------------------------------------------------------------------------

pub fn format_cube_embedding(g: &BipartiteGraph, e: &CubeEmbedding) -> String {
    let mut s = format!("{} {} {}\n", e.n, g.upper_count(), g.lower_count());
    for word in 0..(1u32 << e.n) {
        let v = crate::hypercube::CubeVertex { n: e.n, word };
        let (side, id) = e.image_of(v);
        s.push_str(&format!("{word} {side} {id}\n"));
    }
    s
}

pub fn parse_cube_embedding<R: BufRead>(reader: R) -> Result<(CubeEmbedding, usize, usize)> {
    let mut lines = reader.lines().enumerate();
    let (n, uc, lc) = loop {
        let (idx, line) = lines
            .next()
            .ok_or(Error::Parse { line: 0, msg: "empty embedding file".into() })?;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let parts: Vec<&str> = content.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::Parse {
                line: idx + 1,
                msg: "header must be `n upper_count lower_count`".into(),
            });
        }
        let n: u32 = parts[0].parse().map_err(|_| Error::Parse {
            line: idx + 1,
            msg: "bad n".into(),
        })?;
        let uc: usize = parts[1].parse().map_err(|_| Error::Parse {
            line: idx + 1,
            msg: "bad upper_count".into(),
        })?;
        let lc: usize = parts[2].parse().map_err(|_| Error::Parse {
            line: idx + 1,
            msg: "bad lower_count".into(),
        })?;
        break (n, uc, lc);
    };
    if n == 0 || n > crate::hypercube::MAX_DIMENSION {
        return Err(Error::Parse { line: 1, msg: format!("unsupported n = {n}") });
    }
    let size = 1usize << n;
    let mut images = vec![usize::MAX; size];
    let mut odd_side: Option<Side> = None;
    for (idx, line) in lines {
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let parts: Vec<&str> = content.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::Parse {
                line: idx + 1,
                msg: "expected `mask side id`".into(),
            });
        }
        let word: u32 = parts[0].parse().map_err(|_| Error::Parse {
            line: idx + 1,
            msg: "bad mask".into(),
        })?;
        if word as usize >= size {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("mask {word} out of range for n = {n}"),
            });
        }
        let side = match parts[1] {
            "U" => Side::Upper,
            "L" => Side::Lower,
            other => {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("side must be U or L, got {other:?}"),
                })
            }
        };
        let id: usize = parts[2].parse().map_err(|_| Error::Parse {
            line: idx + 1,
            msg: "bad id".into(),
        })?;
        let odd = word.count_ones() % 2 == 1;
        let implied_odd_side = if odd { side } else { side.opposite() };
        match odd_side {
            None => odd_side = Some(implied_odd_side),
            Some(s) if s == implied_odd_side => {}
            Some(_) => {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: "inconsistent sides: cube bipartition not respected".into(),
                })
            }
        }
        if images[word as usize] != usize::MAX {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("duplicate line for mask {word}"),
            });
        }
        images[word as usize] = id;
    }
    if images.iter().any(|&i| i == usize::MAX) {
        return Err(Error::Parse {
            line: 0,
            msg: "embedding file misses cube vertices".into(),
        });
    }
    let odd_side = odd_side.unwrap_or(Side::Upper);
    Ok((CubeEmbedding { n, odd_side, images }, uc, lc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drc::verify_embedding;

    #[test]
    fn gen_extremes() {
        let mut r = rng::root(1);
        assert_eq!(gen_random_bipartite(3, 3, 0.0, &mut r).edge_count(), 0);
        assert_eq!(gen_random_bipartite(3, 3, 1.0, &mut r).edge_count(), 9);
    }

    #[test]
    fn gen_concentrates() {
        let mut r = rng::root(2);
        let g = gen_random_bipartite(256, 256, 0.5, &mut r);
        let cells: f64 = 256.0 * 256.0;
        let sigma = (cells * 0.25).sqrt();
        let dev = (g.edge_count() as f64 - 0.5 * cells).abs();
        assert!(dev <= 4.0 * sigma, "edge count off by {dev} (> 4 sigma = {})", 4.0 * sigma);
    }

    #[test]
    fn brute_finds_q2_in_k22() {
        let g = BipartiteGraph::complete(2, 2);
        match brute_force_embed_cube(&g, 2, BruteBudget::default()).unwrap() {
            CubeBruteOutcome::Embedded(e) => assert!(verify_embedding(&g, &e).is_empty()),
            other => panic!("expected embedding, got {other:?}"),
        }
    }

    #[test]
    fn brute_rejects_q2_in_tree() {
        // the 3-edge path holds no 4-cycle
        let g = BipartiteGraph::from_edges(2, 2, [(0, 0), (1, 0), (1, 1)]).unwrap();
        match brute_force_embed_cube(&g, 2, BruteBudget::default()).unwrap() {
            CubeBruteOutcome::Impossible => {}
            other => panic!("expected impossible, got {other:?}"),
        }
    }

    #[test]
    fn brute_timeout_is_distinct() {
        let g = BipartiteGraph::complete(8, 8);
        let budget = BruteBudget { max_nodes: 1, ..Default::default() };
        match brute_force_embed_cube(&g, 3, budget).unwrap() {
            CubeBruteOutcome::Timeout => {}
            other => panic!("expected timeout, got {other:?}"),
        }
    }

    #[test]
    fn brute_respects_vertex_cap() {
        let g = BipartiteGraph::complete(32, 32);
        assert!(brute_force_embed_cube(&g, 5, BruteBudget::default()).is_err());
    }

    #[test]
    fn chernoff_exhaustive_matches_enumeration() {
        // p = 1/2, n = 4: exact tail at t = 2 is P(|X-2| >= 2) = 2/16
        let rows = chernoff_empirical(0.5, 4, &[2.0], TailMode::Exact, 0.25, 0).unwrap();
        assert!((rows[0].empirical - 2.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn chernoff_default_grid_unflagged() {
        let grid = default_t_grid(0.5, 100);
        let rows =
            chernoff_empirical(0.5, 100, &grid, TailMode::Samples(20_000), 0.25, 11).unwrap();
        assert!(rows.iter().all(|r| !r.flagged), "{rows:?}");
    }

    #[test]
    fn chernoff_rejects_bad_t() {
        assert!(chernoff_empirical(0.5, 10, &[0.0], TailMode::Exact, 0.25, 0).is_err());
        assert!(chernoff_empirical(0.5, 10, &[6.0], TailMode::Exact, 0.25, 0).is_err());
    }

    #[test]
    fn embedding_file_round_trip() {
        let g = BipartiteGraph::complete(4, 4);
        let odd = crate::hypercube::odd_class(2).unwrap();
        let assignment: Vec<_> = odd.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let e = match crate::drc::greedy_extend(&g, 2, Side::Upper, &assignment).unwrap() {
            crate::drc::GreedyOutcome::Embedded(e) => e,
            _ => unreachable!(),
        };
        let text = format_cube_embedding(&g, &e);
        let (parsed, uc, lc) = parse_cube_embedding(text.as_bytes()).unwrap();
        assert_eq!((uc, lc), (4, 4));
        assert_eq!(parsed.images, e.images);
        assert_eq!(parsed.odd_side, e.odd_side);
        assert!(verify_embedding(&g, &parsed).is_empty());
    }

    #[test]
    fn report_rendering_is_deterministic() {
        let mut a = ExperimentReport::new("cmd --x 1", 9);
        a.push("outcome", "success");
        let mut b = ExperimentReport::new("cmd --x 1", 9);
        b.push("outcome", "success");
        assert_eq!(a.render(), b.render());
        assert!(a.render().contains("[outcome]"));
    }

    #[test]
    fn coloring_roundtrip() {
        let mut c = Coloring::constant(4, false);
        c.set_color(1, 3, true);
        assert!(c.color(3, 1));
        assert!(!c.color(0, 1));
    }
}
