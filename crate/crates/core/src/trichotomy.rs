//! The structural driver: densification extractors, the iterative
//! trichotomy over a bipartite host, the parameter schedule behind it, and
//! the end-to-end embedding pipeline that dispatches on the outcome.

use crate::bigraph::{
    rational_from_f64, rational_pow, BipartiteGraph, Side, VertexSet,
};
use crate::blocks::{
    block_embed_cube, validate_block_structure, BlockOutcome, BlockStructure, BlockViolation,
};
use crate::condensation::{
    c_standard, embed_regular_noncondensed, estimate_condensation, find_standard_pair,
    CondensationEstimate, FindPairOutcome, NcOutcome, StandardPairCertificate,
};
use crate::drc::{drc_embed_cube, verify_embedding, CubeEmbedding, DrcOutcome};
use crate::error::{Error, Result};
use crate::harness::{brute_force_embed_cube, BruteBudget, Coloring, CubeBruteOutcome};
use crate::hypercube::cube_as_bigraph;
use crate::rng;
use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::Zero;
use rand::Rng;

// ---------------------------------------------------------------------------
// Parameter schedule
// ---------------------------------------------------------------------------

/// The positive root of 64 x^2 + 25 x - 1 = 0.
pub fn c_prime() -> f64 {
    (-25.0 + 881f64.sqrt()) / 128.0
}

#[derive(Debug, Clone, Default)]
pub struct ScheduleOverrides {
    pub mu: Option<f64>,
    pub alpha: Option<f64>,
    pub alpha0: Option<f64>,
    pub c_chernoff: Option<f64>,
    pub c_condense: Option<f64>,
    pub m_overlap: Option<f64>,
    pub p: Option<f64>,
    pub u: Option<u32>,
    pub w: Option<u32>,
    pub h: Option<f64>,
    pub r: Option<u32>,
}

impl ScheduleOverrides {
    /// Parses `key=value` pairs as accepted by the CLI.
    pub fn parse(pairs: &[String]) -> Result<Self> {
        let mut o = ScheduleOverrides::default();
        for pair in pairs {
            let (key, val) = pair
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("override {pair:?} is not key=value")))?;
            let fval = || -> Result<f64> {
                val.parse()
                    .map_err(|_| Error::invalid(format!("override {key}: bad number {val:?}")))
            };
            let ival = || -> Result<u32> {
                val.parse()
                    .map_err(|_| Error::invalid(format!("override {key}: bad integer {val:?}")))
            };
            match key {
                "mu" => o.mu = Some(fval()?),
                "alpha" => o.alpha = Some(fval()?),
                "alpha0" => o.alpha0 = Some(fval()?),
                "c_chernoff" => o.c_chernoff = Some(fval()?),
                "c_condense" => o.c_condense = Some(fval()?),
                "M" => o.m_overlap = Some(fval()?),
                "p" => o.p = Some(fval()?),
                "u" => o.u = Some(ival()?),
                "w" => o.w = Some(ival()?),
                "h" => o.h = Some(fval()?),
                "r" => o.r = Some(ival()?),
                other => return Err(Error::invalid(format!("unknown override key {other:?}"))),
            }
        }
        Ok(o)
    }
}

/// Every constant the driver needs, derived from the proof's displayed
/// formulas at the given sizes. Desk-scale degeneracies (M < 1, p > 1, w
/// out of range) are clamped, and every clamp lands in the audit log.
#[derive(Debug, Clone)]
pub struct ParameterSchedule {
    pub n: u32,
    pub r: u32,
    pub m: u64,
    pub mu: f64,
    pub alpha: f64,
    pub alpha0: f64,
    pub c_prime: f64,
    pub c: f64,
    pub m_overlap: f64,
    pub p: f64,
    pub u: u32,
    pub w: u32,
    pub h: f64,
    pub c_chernoff: f64,
    pub c_standard: f64,
    pub c_condense: f64,
    pub audit: Vec<String>,
}

impl ParameterSchedule {
    /// ceil(c_condense * p * M), the fixed lower block size of the (c)
    /// branch; at least 1.
    pub fn block_size(&self) -> usize {
        (self.c_condense * self.p * self.m_overlap).ceil().max(1.0) as usize
    }
}

impl std::fmt::Display for ParameterSchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "n: {}  r: {}  m: {}", self.n, self.r, self.m)?;
        writeln!(
            f,
            "mu: {:e}  alpha: {}  alpha0: {}  c': {:.9}  c: {:.9}",
            self.mu, self.alpha, self.alpha0, self.c_prime, self.c
        )?;
        writeln!(
            f,
            "M: {}  p: {:e}  u: {}  w: {}  h: {:.6}",
            self.m_overlap, self.p, self.u, self.w, self.h
        )?;
        writeln!(
            f,
            "c_chernoff: {}  C_standard: {:.6e}  c_condense: {}",
            self.c_chernoff, self.c_standard, self.c_condense
        )?;
        if self.audit.is_empty() {
            write!(f, "audit: clean")?;
        } else {
            write!(f, "audit:")?;
            for a in &self.audit {
                write!(f, "\n  - {a}")?;
            }
        }
        Ok(())
    }
}

pub fn build_schedule(
    n: u32,
    upper_count: usize,
    lower_count: usize,
    overrides: &ScheduleOverrides,
) -> Result<ParameterSchedule> {
    if n < 2 {
        return Err(Error::invalid("schedule needs n >= 2"));
    }
    let mut audit = Vec::new();
    let mut note = |s: String| audit.push(s);

    let mu = overrides.mu.unwrap_or(1e-10);
    let alpha = overrides.alpha.unwrap_or(0.5);
    let alpha0 = overrides.alpha0.unwrap_or(0.1);
    let c_chernoff = overrides.c_chernoff.unwrap_or(0.25);
    let c_condense = overrides.c_condense.unwrap_or(1.0 / 16.0);
    for (name, set) in [
        ("mu", overrides.mu.is_some()),
        ("alpha", overrides.alpha.is_some()),
        ("alpha0", overrides.alpha0.is_some()),
        ("c_chernoff", overrides.c_chernoff.is_some()),
        ("c_condense", overrides.c_condense.is_some()),
    ] {
        if set {
            note(format!("override: {name}"));
        }
    }
    let cp = c_prime();
    let c = cp - 100.0 * mu;
    let r = overrides.r.unwrap_or(n);
    if overrides.r.is_some() {
        note(format!("override: r = {r}"));
    }
    let m = 1u64 << (n - 1);
    let big_c = c_standard(alpha0, mu);
    let down = lower_count as f64;
    let up = upper_count as f64;
    let ln_down = down.ln();

    // M and p from the displayed formulas, in log space to dodge under- and
    // overflow at extreme parameters.
    let ln_a = ((1.0 - mu) * alpha).ln();
    let ln_m_num = 2.0 * c_chernoff.ln() + 4.0 * n as f64 * ln_a + 4.0 * down.ln();
    let ln_m_den = 9.0 * 2f64.ln()
        + 2.0 * big_c.ln()
        + 3.0 * (m as f64).ln()
        + 6.0 * (n as f64).ln()
        + 400f64.ln()
        + 2.0 * ln_down.ln();
    let mut m_overlap = (ln_m_num - ln_m_den).exp().floor();
    if let Some(ov) = overrides.m_overlap {
        m_overlap = ov;
        note(format!("override: M = {ov}"));
    } else if m_overlap < 1.0 {
        note(format!("clamp: M {m_overlap:e} -> 1"));
        m_overlap = 1.0;
    }

    let ln_p_inner = c_chernoff.ln() + 2.0 * n as f64 * ln_a + 2.0 * down.ln()
        - (16.0 * 3f64.powi(7) * 20.0).ln()
        - big_c.ln()
        - 3.0 * (n as f64).ln()
        - 2.0 * (m as f64).ln()
        - ln_down.ln();
    let mut p = (2.0 * ln_p_inner).exp();
    if let Some(ov) = overrides.p {
        p = ov;
        note(format!("override: p = {ov}"));
    } else if p > 1.0 {
        note(format!("clamp: p {p:e} -> 1"));
        p = 1.0;
    }

    let mut u = overrides.u.unwrap_or((n as f64).sqrt().floor() as u32);
    if overrides.u.is_some() {
        note(format!("override: u = {u}"));
    }
    if u == 0 {
        note("clamp: u 0 -> 1".into());
        u = 1;
    }

    // n - w = floor(log2(ceil(c p M) * 2^{-u-1}))
    let block = (c_condense * p * m_overlap).ceil().max(1.0);
    let n_minus_w = (block.log2() - (u as f64 + 1.0)).floor();
    let w_raw = n as f64 - n_minus_w;
    let mut w = w_raw;
    if let Some(ov) = overrides.w {
        w = ov as f64;
        note(format!("override: w = {ov}"));
    } else {
        if w < 0.0 {
            note(format!("clamp: w {w_raw} -> 0"));
            w = 0.0;
        }
        if w > n as f64 - 2.0 {
            note(format!("clamp: w {w_raw} -> {}", n - 2));
            w = n as f64 - 2.0;
        }
    }
    let w = w as u32;

    // (c_condense p M / (-h log2(p/2)))^{(n+w)/n} = 2^{2w + cn - n} (1-mu)^{-3n}
    let log2_rhs = 2.0 * w as f64 + c * n as f64 - n as f64 - 3.0 * n as f64 * (1.0 - mu).log2();
    let log2_d = (n as f64 / (n as f64 + w as f64)) * log2_rhs;
    let neg_log2_p_half = -(p / 2.0).log2();
    let mut h = c_condense * p * m_overlap / (log2_d.exp2() * neg_log2_p_half.max(f64::MIN_POSITIVE));
    if let Some(ov) = overrides.h {
        h = ov;
        note(format!("override: h = {ov}"));
    }

    let schedule = ParameterSchedule {
        n,
        r,
        m,
        mu,
        alpha,
        alpha0,
        c_prime: cp,
        c,
        m_overlap,
        p,
        u,
        w,
        h,
        c_chernoff,
        c_standard: big_c,
        c_condense,
        audit,
    };
    let _ = up;
    Ok(schedule)
}

// ---------------------------------------------------------------------------
// Densification from a large expectation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct DenseSet {
    pub s: VertexSet,
    /// sum over lowers of (deg/|up|)^r, exactly
    pub expectation: BigRational,
    pub size_floor: f64,
    /// h / (2 |down|): the claimed density bound raised to the r-th power
    pub density_floor_pow_r: BigRational,
    pub measured_density: BigRational,
}

/// When E = sum_v (deg(v)/|up|)^r >= h, extracts the lower set
/// S = {v : (deg(v)/|up|)^r >= h / (2 |down|)}; its size and the induced
/// density bound are re-checked exactly before returning.
pub fn densify_from_expectation(
    g: &BipartiteGraph,
    r: u32,
    h_threshold: f64,
) -> Result<Option<DenseSet>> {
    if r == 0 {
        return Err(Error::invalid("need r >= 1"));
    }
    let up = BigInt::from(g.upper_count() as u64);
    let down = BigInt::from(g.lower_count() as u64);
    let h = rational_from_f64(h_threshold);
    let mut expectation_num = BigInt::zero();
    for v in 0..g.lower_count() {
        expectation_num += BigInt::from(g.degree(v, Side::Lower) as u64).pow(r);
    }
    let expectation = BigRational::new(expectation_num, up.clone().pow(r));
    if expectation < h {
        return Ok(None);
    }
    // v in S <=> deg^r * 2 * |down| >= h * |up|^r
    let cutoff = &h * BigRational::from_integer(up.clone().pow(r))
        / BigRational::from_integer(BigInt::from(2u32) * down.clone());
    let mut s = VertexSet::empty(Side::Lower, g.lower_count());
    for v in 0..g.lower_count() {
        let dr = BigRational::from_integer(BigInt::from(g.degree(v, Side::Lower) as u64).pow(r));
        if dr >= cutoff {
            s.bits.set(v);
        }
    }
    let size_floor = h_threshold / 2.0;
    assert!(
        s.card() as f64 >= size_floor,
        "size guarantee violated: |S| = {} < {size_floor}",
        s.card()
    );
    let density_floor_pow_r = h / BigRational::from_integer(BigInt::from(2u32) * down);
    let (induced, _) = g.induced_subgraph(&VertexSet::full(Side::Upper, g.upper_count()), &s)?;
    let measured_density = induced.density();
    assert!(
        rational_pow(&measured_density, r as usize) >= density_floor_pow_r,
        "density guarantee violated"
    );
    Ok(Some(DenseSet {
        s,
        expectation,
        size_floor,
        density_floor_pow_r,
        measured_density,
    }))
}

// ---------------------------------------------------------------------------
// Densification from condensation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct CondenseDensifyOpts {
    pub outer_samples: u64,
    pub inner_samples: u64,
    pub max_class: u32,
}

impl Default for CondenseDensifyOpts {
    fn default() -> Self {
        CondenseDensifyOpts {
            outer_samples: 64,
            inner_samples: 256,
            max_class: 40,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CondenseDensify {
    pub tuple: Vec<usize>,
    pub class_index: u32,
    pub s: VertexSet,
    /// CN(tuple) members ordered by decreasing neighbor fraction toward
    /// CN(v1, v2), isolated vertices excluded; S is a prefix of this.
    pub ranked_pool: Vec<usize>,
    pub size_floor: f64,
    pub density_floor_pow_r: f64,
    pub measured_density: BigRational,
}

#[derive(Debug, Clone)]
pub struct CondenseDensifyFailure {
    pub class_histogram: Vec<(u32, u64)>,
    pub selection_bar: f64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub enum CondenseDensifyOutcome {
    Found(CondenseDensify),
    Failed(CondenseDensifyFailure),
}

/// Dyadic search of the condensation proof: estimate the conditional
/// overlap probability of each sampled outer tuple by inner Monte Carlo,
/// select a tuple from the strongest dyadic class with a small common
/// neighborhood, and keep the vertices whose neighbor fraction clears the
/// derived threshold.
#[allow(clippy::too_many_arguments)]
pub fn densify_from_condensation(
    g: &BipartiteGraph,
    v1: usize,
    v2: usize,
    r: u32,
    m_overlap: f64,
    p: f64,
    h_threshold: f64,
    est: &CondensationEstimate,
    seed: u64,
    opts: CondenseDensifyOpts,
) -> Result<CondenseDensifyOutcome> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::precondition("need p in (0, 1]"));
    }
    if est.p_hat - est.radius() < p {
        return Err(Error::precondition(format!(
            "condensation estimate {} does not certify p >= {p}",
            est
        )));
    }
    let base = g.common_neighborhood(&[v1, v2], Side::Lower)?;
    let pool = base.to_indices();
    if pool.is_empty() {
        return Err(Error::invalid("CN(v1, v2) is empty"));
    }
    // exact expectation of |CN(Y_1..Y_r)| for Y uniform in the base
    let base_size = BigInt::from(pool.len() as u64);
    let mut e_num = BigInt::zero();
    let mut q_fracs = vec![0f64; g.lower_count()];
    for v in 0..g.lower_count() {
        let cnt = g.column(v).and_count(&base.bits);
        q_fracs[v] = cnt as f64 / pool.len() as f64;
        e_num += BigInt::from(cnt as u64).pow(r);
    }
    let expectation = BigRational::new(e_num, base_size.pow(r));
    if expectation > rational_from_f64(h_threshold) {
        return Err(Error::precondition(format!(
            "E |CN(Y)| = {} exceeds h = {h_threshold}; the expectation route applies",
            crate::bigraph::rational_to_f64(&expectation)
        )));
    }

    let neg_log2_p4 = -(p / 4.0).log2(); // = 2 - log2 p > 0
    let selection_bar = p / (2.0 * neg_log2_p4);
    let mut rng = rng::stream(seed, &[8]);

    struct Outer {
        ys: Vec<usize>,
        cn_size: usize,
        class: Option<u32>,
    }
    let mut outers: Vec<Outer> = Vec::with_capacity(opts.outer_samples as usize);
    let mut ys = vec![0usize; r as usize];
    let mut yt = vec![0usize; r as usize];
    for _ in 0..opts.outer_samples {
        for slot in ys.iter_mut() {
            *slot = pool[rng.random_range(0..pool.len())];
        }
        let cn_y = g.common_neighborhood(&ys, Side::Upper)?;
        let mut hits = 0u64;
        for _ in 0..opts.inner_samples {
            for slot in yt.iter_mut() {
                *slot = pool[rng.random_range(0..pool.len())];
            }
            let cn_t = g.common_neighborhood(&yt, Side::Upper)?;
            if cn_y.bits.and_count(&cn_t.bits) as f64 >= m_overlap {
                hits += 1;
            }
        }
        let p_hat = hits as f64 / opts.inner_samples as f64;
        let class = if p_hat <= 0.0 {
            None
        } else {
            // p_hat in (2^{-i-1}, 2^{-i}]
            let i = (-p_hat.log2()).ceil() - 1.0;
            let i = i.max(0.0) as u32;
            (i <= opts.max_class).then_some(i)
        };
        outers.push(Outer {
            ys: ys.clone(),
            cn_size: cn_y.card(),
            class,
        });
    }

    let mut histogram: Vec<(u32, u64)> = Vec::new();
    for o in &outers {
        if let Some(i) = o.class {
            match histogram.iter_mut().find(|(c, _)| *c == i) {
                Some((_, n)) => *n += 1,
                None => histogram.push((i, 1)),
            }
        }
    }
    histogram.sort_by_key(|&(i, _)| i);

    // classes meeting 2^{-i} P(class) >= p / (-2 log2(p/4)), strongest first
    let mut classes: Vec<(u32, f64)> = histogram
        .iter()
        .map(|&(i, cnt)| (i, 2f64.powi(-(i as i32)) * cnt as f64 / opts.outer_samples as f64))
        .filter(|&(_, weight)| weight >= selection_bar)
        .collect();
    classes.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());

    let mut chosen: Option<(usize, u32)> = None;
    for (i, _) in classes {
        let cn_cap = h_threshold * 2.0 * neg_log2_p4 / (2f64.powi(i as i32).recip() * p);
        // note: cap = h * (-2 log2(p/4)) / (2^{i} p)^{-1}... careful with signs
        let cn_cap = cn_cap * 2f64.powi(-2 * i as i32); // rewrite below
        let _ = cn_cap;
        let cap = h_threshold * 2.0 * neg_log2_p4 / (2f64.powi(i as i32) * p);
        let best = outers
            .iter()
            .enumerate()
            .filter(|(_, o)| o.class == Some(i))
            .min_by_key(|(_, o)| o.cn_size);
        if let Some((idx, o)) = best {
            if (o.cn_size as f64) <= cap {
                chosen = Some((idx, i));
                break;
            }
        }
    }
    let (idx, class_index) = match chosen {
        Some(c) => c,
        None => {
            return Ok(CondenseDensifyOutcome::Failed(CondenseDensifyFailure {
                class_histogram: histogram,
                selection_bar,
                reason: "no dyadic class met the selection bar with a small enough CN".into(),
            }))
        }
    };
    let tuple = outers[idx].ys.clone();
    let cn_y = g.common_neighborhood(&tuple, Side::Upper)?;

    let tau = p * m_overlap / (8.0 * h_threshold * neg_log2_p4);
    let mut ranked_pool: Vec<usize> = cn_y.iter().filter(|&v| q_fracs[v] > 0.0).collect();
    ranked_pool.sort_by(|&a, &b| q_fracs[b].partial_cmp(&q_fracs[a]).unwrap().then(a.cmp(&b)));
    let mut s = VertexSet::empty(Side::Lower, g.lower_count());
    for &v in &ranked_pool {
        if q_fracs[v].powi(r as i32) >= tau {
            s.bits.set(v);
        }
    }
    let size_floor = 2f64.powi(-(class_index as i32) - 2) * m_overlap;
    if (s.card() as f64) < size_floor {
        return Ok(CondenseDensifyOutcome::Failed(CondenseDensifyFailure {
            class_histogram: histogram,
            selection_bar,
            reason: format!(
                "extracted set has {} vertices, below the observed floor {size_floor:.3}",
                s.card()
            ),
        }));
    }
    let (induced, _) = g.induced_subgraph(&base, &s)?;
    let measured_density = induced.density();
    if rational_pow(&measured_density, r as usize) < rational_from_f64(tau) {
        return Ok(CondenseDensifyOutcome::Failed(CondenseDensifyFailure {
            class_histogram: histogram,
            selection_bar,
            reason: format!(
                "measured density {} fails the bound tau^(1/r) with tau = {tau:e}",
                crate::bigraph::rational_to_f64(&measured_density)
            ),
        }));
    }
    Ok(CondenseDensifyOutcome::Found(CondenseDensify {
        tuple,
        class_index,
        s,
        ranked_pool,
        size_floor,
        density_floor_pow_r: tau,
        measured_density,
    }))
}

// ---------------------------------------------------------------------------
// Certificates
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub enum TrichotomyCertificate {
    /// Case (a): a standard pair whose neighborhoods are decisively not
    /// (p, M)-condensed on generation `generation`.
    NonCondensed {
        generation: usize,
        removed_lowers: Vec<VertexSet>,
        pair: StandardPairCertificate,
        estimate: CondensationEstimate,
        p: f64,
    },
    /// Case (b): a denser induced subgraph.
    DenseSubgraph {
        generation: usize,
        removed_lowers: Vec<VertexSet>,
        uppers: VertexSet,
        lowers: VertexSet,
        r: u32,
        measured_density: BigRational,
        claimed_bound_pow_r: BigRational,
    },
    /// Case (c): an explicit block-structured subgraph. `lower_ids` maps
    /// the subgraph's lower part back to the original graph.
    Blocks {
        structure: BlockStructure,
        graph: BipartiteGraph,
        lower_ids: Vec<usize>,
    },
}

/// Rebuilds generation ell of the iteration by replaying the removals.
pub fn rebuild_generation(
    g: &BipartiteGraph,
    removed_lowers: &[VertexSet],
) -> Result<BipartiteGraph> {
    let mut current = g.clone();
    for set in removed_lowers {
        current = current.remove_edges_at_lowers(set)?;
    }
    Ok(current)
}

impl TrichotomyCertificate {
    pub fn variant_name(&self) -> &'static str {
        match self {
            TrichotomyCertificate::NonCondensed { .. } => "non-condensed",
            TrichotomyCertificate::DenseSubgraph { .. } => "dense-subgraph",
            TrichotomyCertificate::Blocks { .. } => "block-structured",
        }
    }

    /// Re-checks the certificate from scratch against the original graph
    /// using only graph primitives. Returns the list of discrepancies.
    pub fn recheck(&self, g: &BipartiteGraph, seed: u64) -> Result<Vec<String>> {
        let mut issues = Vec::new();
        match self {
            TrichotomyCertificate::NonCondensed {
                removed_lowers,
                pair,
                estimate,
                p,
                ..
            } => {
                let gen = rebuild_generation(g, removed_lowers)?;
                let fresh = estimate_condensation(
                    &gen,
                    pair.v1,
                    pair.v2,
                    pair.r,
                    estimate.m_overlap,
                    estimate.samples,
                    rng::child_seed(seed, 0xA),
                )?;
                if fresh.p_hat + fresh.radius() >= *p {
                    issues.push(format!(
                        "re-estimate {} no longer certifies non-condensation below p = {p}",
                        fresh
                    ));
                }
                let cn = gen.common_neighborhood(&[pair.v1, pair.v2], Side::Lower)?;
                if cn.card() != pair.cn_size {
                    issues.push("recorded |CN(v1, v2)| does not match".into());
                }
            }
            TrichotomyCertificate::DenseSubgraph {
                removed_lowers,
                uppers,
                lowers,
                r,
                measured_density,
                claimed_bound_pow_r,
                ..
            } => {
                let gen = rebuild_generation(g, removed_lowers)?;
                let (induced, _) = gen.induced_subgraph(uppers, lowers)?;
                let fresh = induced.density();
                if &fresh != measured_density {
                    issues.push("recorded density does not match a fresh recount".into());
                }
                if &rational_pow(&fresh, *r as usize) < claimed_bound_pow_r {
                    issues.push("density fails the claimed bound".into());
                }
            }
            TrichotomyCertificate::Blocks {
                structure,
                graph,
                lower_ids,
            } => {
                for v in validate_block_structure(graph, structure) {
                    issues.push(format!("block structure: {v}"));
                }
                if lower_ids.len() != graph.lower_count() {
                    issues.push("lower id map has the wrong length".into());
                } else {
                    for (u, v) in graph.edges() {
                        if !g.has_edge(u, lower_ids[v]) {
                            issues.push(format!(
                                "certificate edge ({u}, {v}) is not an edge of the host"
                            ));
                            break;
                        }
                    }
                }
            }
        }
        Ok(issues)
    }
}

// ---------------------------------------------------------------------------
// The driver
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct DriveBudgets {
    pub pair_attempts: u64,
    pub condensation_samples: u64,
    pub condensation_samples_max: u64,
    pub densify: CondenseDensifyOpts,
}

impl Default for DriveBudgets {
    fn default() -> Self {
        DriveBudgets {
            pair_attempts: 64,
            condensation_samples: 2000,
            condensation_samples_max: 16000,
            densify: CondenseDensifyOpts::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DriveFailure {
    pub stage: String,
    pub iteration: usize,
    pub detail: String,
}

impl std::fmt::Display for DriveFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "stage {:?} failed at iteration {}: {}",
            self.stage, self.iteration, self.detail
        )
    }
}

#[derive(Debug, Clone)]
pub enum DriveOutcome {
    Certificate(Box<TrichotomyCertificate>),
    Failed(DriveFailure),
}

#[derive(Debug, Clone, Default)]
pub struct DriveTrace {
    pub densities: Vec<BigRational>,
    pub iterations: usize,
}

/// Iterates: find a standard pair, test condensation with a confidence
/// decision rule, and either stop with a non-condensed pair, extract a
/// dense subgraph, or carve off a block and continue on the graph with
/// that block's edges removed. Never fabricates a certificate: every
/// emitted certificate has passed its own re-check inputs.
pub fn trichotomy_drive(
    g: &BipartiteGraph,
    schedule: &ParameterSchedule,
    budgets: &DriveBudgets,
    seed: u64,
) -> Result<(DriveOutcome, DriveTrace)> {
    let alpha = schedule.alpha;
    if g.density() < rational_from_f64(alpha) {
        return Err(Error::precondition(format!(
            "density {} below the schedule's alpha {alpha}",
            g.density_f64()
        )));
    }
    let r = schedule.r;
    if ((1.0 - schedule.mu) * alpha).powi(2) * (g.upper_count() as f64) < (r as f64).powi(2) {
        return Err(Error::precondition(
            "size condition ((1-mu) alpha)^2 |up| >= r^2 fails",
        ));
    }
    let g_block = schedule.block_size();
    let exit_threshold = schedule.mu * alpha * g.lower_count() as f64 / g_block as f64;

    let mut trace = DriveTrace::default();
    let mut current = g.clone();
    let mut removed: Vec<VertexSet> = Vec::new();
    let mut blocks_up: Vec<VertexSet> = Vec::new();
    let mut blocks_down: Vec<VertexSet> = Vec::new();

    for ell in 1.. {
        trace.iterations = ell;
        let density = current.density();
        trace.densities.push(density.clone());
        // density floor of the construction, checked exactly
        let floor = rational_from_f64(alpha)
            - BigRational::new(
                BigInt::from(((ell - 1) * g_block) as u64),
                BigInt::from(g.lower_count() as u64),
            );
        assert!(density >= floor, "iteration density floor violated");

        let pair = match find_standard_pair(
            &current,
            schedule.alpha0,
            schedule.mu,
            r,
            budgets.pair_attempts,
            rng::stream_seed(seed, &[ell as u64, 0]),
        )? {
            FindPairOutcome::Found(c) => c,
            FindPairOutcome::Failed(f) => {
                return Ok((
                    DriveOutcome::Failed(DriveFailure {
                        stage: "standard-pair".into(),
                        iteration: ell,
                        detail: format!(
                            "{} attempts: {} failed the CN floor, {} the tuple bounds",
                            f.attempts, f.cn_too_small, f.bad_tuples_too_many
                        ),
                    }),
                    trace,
                ));
            }
        };

        // condensation decision with widening sample budget
        let mut samples = budgets.condensation_samples;
        let decision = loop {
            let est = estimate_condensation(
                &current,
                pair.v1,
                pair.v2,
                r,
                schedule.m_overlap,
                samples,
                rng::stream_seed(seed, &[ell as u64, 1, samples]),
            )?;
            if est.p_hat + est.radius() < schedule.p {
                break Ok(est);
            }
            if est.p_hat - est.radius() >= schedule.p {
                break Err(est);
            }
            if samples >= budgets.condensation_samples_max {
                return Ok((
                    DriveOutcome::Failed(DriveFailure {
                        stage: "condensation-ambiguous".into(),
                        iteration: ell,
                        detail: format!(
                            "estimate {est} straddles p = {} at the sample budget",
                            schedule.p
                        ),
                    }),
                    trace,
                ));
            }
            samples = (samples * 2).min(budgets.condensation_samples_max);
        };

        let est = match decision {
            Ok(est) => {
                let cert = TrichotomyCertificate::NonCondensed {
                    generation: ell,
                    removed_lowers: removed.clone(),
                    pair,
                    estimate: est,
                    p: schedule.p,
                };
                return Ok((DriveOutcome::Certificate(Box::new(cert)), trace));
            }
            Err(est) => est,
        };

        // condensed: compare the exact expectation against h
        let base = current.common_neighborhood(&[pair.v1, pair.v2], Side::Lower)?;
        let full_lowers = VertexSet::full(Side::Lower, current.lower_count());
        let (induced, _) = current.induced_subgraph(&base, &full_lowers)?;
        if let Some(dense) = densify_from_expectation(&induced, r, schedule.h)? {
            // lower ids are unchanged: the induction kept the full lower part
            let cert = TrichotomyCertificate::DenseSubgraph {
                generation: ell,
                removed_lowers: removed.clone(),
                uppers: base,
                lowers: dense.s,
                r,
                measured_density: dense.measured_density,
                claimed_bound_pow_r: dense.density_floor_pow_r,
            };
            return Ok((DriveOutcome::Certificate(Box::new(cert)), trace));
        }

        // expectation is small: extract a block via the dyadic argument
        let cd = match densify_from_condensation(
            &current,
            pair.v1,
            pair.v2,
            r,
            schedule.m_overlap,
            schedule.p,
            schedule.h,
            &est,
            rng::stream_seed(seed, &[ell as u64, 2]),
            budgets.densify,
        )? {
            CondenseDensifyOutcome::Found(cd) => cd,
            CondenseDensifyOutcome::Failed(f) => {
                return Ok((
                    DriveOutcome::Failed(DriveFailure {
                        stage: "condensation-densify".into(),
                        iteration: ell,
                        detail: format!("{} (classes: {:?})", f.reason, f.class_histogram),
                    }),
                    trace,
                ));
            }
        };

        // clamp the block to exactly g_block vertices: trim the lowest
        // neighbor fractions first, pad with the next qualifying vertices
        if cd.ranked_pool.len() < g_block {
            return Ok((
                DriveOutcome::Failed(DriveFailure {
                    stage: "block-pad".into(),
                    iteration: ell,
                    detail: format!(
                        "only {} qualifying vertices for a block of {g_block}",
                        cd.ranked_pool.len()
                    ),
                }),
                trace,
            ));
        }
        let block = VertexSet::from_indices(
            Side::Lower,
            current.lower_count(),
            cd.ranked_pool[..g_block].iter().copied(),
        );
        blocks_up.push(base);
        blocks_down.push(block.clone());

        if ell as f64 >= exit_threshold {
            break;
        }
        current = current.remove_edges_at_lowers(&block)?;
        removed.push(block);
    }

    // assemble the block certificate on the original graph
    let k = blocks_down.len();
    let delta = 1.0
        - (schedule.c_condense * schedule.p * schedule.m_overlap
            / (schedule.h * -(schedule.p / 2.0).log2()))
        .powf(1.0 / r as f64);
    let gamma = (1.0 - schedule.mu).powi(3) * alpha * alpha;
    let mut lower_ids = Vec::with_capacity(k * g_block);
    for b in &blocks_down {
        lower_ids.extend(b.iter());
    }
    let mut rows = vec![crate::bits::BitVec::zeros(lower_ids.len()); g.upper_count()];
    for (new_v, &old_v) in lower_ids.iter().enumerate() {
        let block_idx = new_v / g_block;
        for u in blocks_up[block_idx].iter() {
            if g.has_edge(u, old_v) {
                rows[u].set(new_v);
            }
        }
    }
    let sub = BipartiteGraph::from_rows(rows, lower_ids.len())?;
    let structure = BlockStructure {
        delta,
        gamma,
        k,
        g_size: g_block,
        lower_blocks: (0..k)
            .map(|l| {
                VertexSet::from_indices(
                    Side::Lower,
                    lower_ids.len(),
                    l * g_block..(l + 1) * g_block,
                )
            })
            .collect(),
        upper_sets: blocks_up,
    };
    let violations: Vec<BlockViolation> = validate_block_structure(&sub, &structure);
    if !violations.is_empty() {
        let detail = violations
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("; ");
        return Ok((
            DriveOutcome::Failed(DriveFailure {
                stage: "block-assembly".into(),
                iteration: trace.iterations,
                detail,
            }),
            trace,
        ));
    }
    let cert = TrichotomyCertificate::Blocks {
        structure,
        graph: sub,
        lower_ids,
    };
    Ok((DriveOutcome::Certificate(Box::new(cert)), trace))
}

// ---------------------------------------------------------------------------
// Ramsey reduction
// ---------------------------------------------------------------------------

/// Equipartition reduction: splits the vertices of a 2-colored K_N in two
/// halves and returns the bipartite graph of the majority color across the
/// cut (ties resolved to color 0). The result always has density >= 1/2.
pub fn ramsey_reduce(coloring: &Coloring) -> Result<(BipartiteGraph, bool)> {
    let n = coloring.n;
    if n < 2 || n % 2 != 0 {
        return Err(Error::invalid("need an even number of vertices"));
    }
    let half = n / 2;
    let mut ones = 0u64;
    for i in 0..half {
        for j in half..n {
            if coloring.color(i, j) {
                ones += 1;
            }
        }
    }
    let total = (half * half) as u64;
    let majority = ones > total - ones;
    let mut edges = Vec::new();
    for i in 0..half {
        for j in half..n {
            if coloring.color(i, j) == majority {
                edges.push((i, j - half));
            }
        }
    }
    let g = BipartiteGraph::from_edges(half, half, edges)?;
    debug_assert!(g.density() >= BigRational::new(1.into(), 2.into()));
    Ok((g, majority))
}

// ---------------------------------------------------------------------------
// End-to-end pipeline
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct AutoOutcome {
    pub route: String,
    pub embedding: Option<CubeEmbedding>,
    pub fallback_used: bool,
    pub notes: Vec<String>,
}

/// Runs the trichotomy and dispatches to the matching embedder; on a
/// failed branch, small instances fall back to the exact oracle instead of
/// asserting the theorem.
pub fn embed_auto(
    g: &BipartiteGraph,
    n: u32,
    seed: u64,
    overrides: &ScheduleOverrides,
) -> Result<AutoOutcome> {
    let schedule = build_schedule(n, g.upper_count(), g.lower_count(), overrides)?;
    let budgets = DriveBudgets::default();
    let mut notes = Vec::new();
    let (outcome, _) = trichotomy_drive(g, &schedule, &budgets, seed)?;
    let mut fallback_used = false;

    let embedding = match &outcome {
        DriveOutcome::Failed(f) => {
            notes.push(format!("trichotomy failed: {f}"));
            None
        }
        DriveOutcome::Certificate(cert) => match cert.as_ref() {
            TrichotomyCertificate::NonCondensed {
                removed_lowers,
                pair,
                p,
                ..
            } => {
                let gen = rebuild_generation(g, removed_lowers)?;
                let (pattern, odd_words, even_words) = cube_as_bigraph(n)?;
                if pair.r != n {
                    notes.push(format!(
                        "pair arity {} does not match the cube's regularity {n}; skipping branch (a)",
                        pair.r
                    ));
                    None
                } else {
                    match embed_regular_noncondensed(
                        &gen,
                        pair,
                        &pattern,
                        schedule.m_overlap,
                        *p,
                        rng::child_seed(seed, 0xE),
                    )? {
                        NcOutcome::Embedded(he, _) => {
                            let mut images = vec![usize::MAX; 1 << n];
                            for (i, &wd) in odd_words.iter().enumerate() {
                                images[wd as usize] = he.upper_images[i];
                            }
                            for (j, &wd) in even_words.iter().enumerate() {
                                images[wd as usize] = he.lower_images[j];
                            }
                            Some(CubeEmbedding { n, odd_side: Side::Upper, images })
                        }
                        NcOutcome::Failed(rep) => {
                            notes.push(format!(
                                "branch (a) embedder failed at {:?}",
                                rep.failed_stage
                            ));
                            None
                        }
                    }
                }
            }
            TrichotomyCertificate::DenseSubgraph {
                removed_lowers,
                uppers,
                lowers,
                ..
            } => {
                let gen = rebuild_generation(g, removed_lowers)?;
                let (sub, maps) = gen.induced_subgraph(uppers, lowers)?;
                if sub.upper_count() < 1 << (n - 1) {
                    notes.push("branch (b) subgraph too small for the cube".into());
                    None
                } else {
                    match drc_embed_cube(&sub, n, 10, rng::child_seed(seed, 0xB))? {
                        DrcOutcome::Embedded(e, _) => {
                            let images: Vec<usize> = e
                                .images
                                .iter()
                                .enumerate()
                                .map(|(word, &id)| {
                                    let v = crate::hypercube::CubeVertex {
                                        n,
                                        word: word as u32,
                                    };
                                    maps.to_old(e.side_of(v), id)
                                })
                                .collect();
                            Some(CubeEmbedding { n, odd_side: e.odd_side, images })
                        }
                        DrcOutcome::Failed(rep) => {
                            notes.push(format!("branch (b) embedder failed:\n{rep}"));
                            None
                        }
                    }
                }
            }
            TrichotomyCertificate::Blocks {
                structure,
                graph,
                lower_ids,
            } => {
                let w = schedule.w.min(n.saturating_sub(2));
                match block_embed_cube(
                    graph,
                    structure,
                    n,
                    schedule.u.max(1),
                    w,
                    10,
                    rng::child_seed(seed, 0xC),
                    true,
                )? {
                    BlockOutcome::Embedded(e, _) => {
                        let images: Vec<usize> = e
                            .images
                            .iter()
                            .enumerate()
                            .map(|(word, &id)| {
                                let v = crate::hypercube::CubeVertex { n, word: word as u32 };
                                if e.side_of(v) == Side::Lower {
                                    lower_ids[id]
                                } else {
                                    id
                                }
                            })
                            .collect();
                        Some(CubeEmbedding { n, odd_side: e.odd_side, images })
                    }
                    BlockOutcome::Failed(rep) => {
                        notes.push(format!("branch (c) embedder failed:\n{rep}"));
                        None
                    }
                }
            }
        },
    };

    let route = match &outcome {
        DriveOutcome::Certificate(c) => c.variant_name().to_string(),
        DriveOutcome::Failed(f) => format!("failed: {}", f.stage),
    };

    let embedding = match embedding {
        Some(e) => {
            let violations = verify_embedding(g, &e);
            if !violations.is_empty() {
                return Err(Error::invalid(format!(
                    "internal: dispatched embedding failed verification: {violations:?}"
                )));
            }
            Some(e)
        }
        None if (1u64 << n) <= 16 => {
            fallback_used = true;
            match brute_force_embed_cube(g, n, BruteBudget::default())? {
                CubeBruteOutcome::Embedded(e) => {
                    notes.push("embedded by the exact fallback".into());
                    Some(e)
                }
                CubeBruteOutcome::Impossible => {
                    notes.push("exact fallback: no embedding exists".into());
                    None
                }
                CubeBruteOutcome::Timeout => {
                    notes.push("exact fallback timed out".into());
                    None
                }
            }
        }
        None => None,
    };

    Ok(AutoOutcome {
        route,
        embedding,
        fallback_used,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::gen_random_bipartite;

    #[test]
    fn c_prime_solves_quadratic() {
        let x = c_prime();
        assert!((64.0 * x * x + 25.0 * x - 1.0).abs() < 1e-12);
        assert!((x - 0.036575).abs() < 1e-5);
    }

    #[test]
    fn schedule_computes_and_audits() {
        let s = build_schedule(10, 1 << 14, 1 << 14, &ScheduleOverrides::default()).unwrap();
        assert_eq!(s.r, 10);
        assert_eq!(s.m, 512);
        assert_eq!(s.u, 3);
        assert!(s.m_overlap >= 1.0);
        assert!(s.p > 0.0 && s.p <= 1.0);
        assert!(s.w <= 8);
        assert!(s.h.is_finite() && s.h > 0.0);
        // desk scale degenerates, so clamps are expected
        assert!(!s.audit.is_empty());
        assert!(s.c > 0.03656);
    }

    #[test]
    fn schedule_u_is_floor_sqrt() {
        let s = build_schedule(16, 1 << 10, 1 << 10, &ScheduleOverrides::default()).unwrap();
        assert_eq!(s.u, 4);
    }

    #[test]
    fn densify_expectation_complete_graph() {
        let g = BipartiteGraph::complete(8, 8);
        let d = densify_from_expectation(&g, 2, 8.0).unwrap().unwrap();
        assert_eq!(d.s.card(), 8);
        assert_eq!(d.measured_density, BigRational::from_integer(1.into()));
    }

    #[test]
    fn densify_expectation_edgeless_is_none() {
        let g = BipartiteGraph::edgeless(4, 4);
        assert!(densify_from_expectation(&g, 2, 1.0).unwrap().is_none());
    }

    #[test]
    fn densify_expectation_path_hand_computed() {
        // uppers {a, b}, lowers {x, y}: p_x = 1, p_y = 1/2
        let g = BipartiteGraph::from_edges(2, 2, [(0, 0), (1, 0), (1, 1)]).unwrap();
        let d = densify_from_expectation(&g, 1, 1.5).unwrap().unwrap();
        assert_eq!(d.expectation, BigRational::new(3.into(), 2.into()));
        assert_eq!(d.s.to_indices(), vec![0, 1]);
        assert_eq!(d.measured_density, BigRational::new(3.into(), 4.into()));
    }

    #[test]
    fn densify_condensation_complete_graph() {
        let g = BipartiteGraph::complete(16, 16);
        let est = estimate_condensation(&g, 0, 1, 2, 16.0, 400, 3).unwrap();
        assert_eq!(est.p_hat, 1.0);
        match densify_from_condensation(
            &g,
            0,
            1,
            2,
            16.0,
            0.9,
            16.0,
            &est,
            5,
            CondenseDensifyOpts::default(),
        )
        .unwrap()
        {
            CondenseDensifyOutcome::Found(cd) => {
                assert_eq!(cd.s.card(), 16);
                assert_eq!(cd.measured_density, BigRational::from_integer(1.into()));
            }
            CondenseDensifyOutcome::Failed(f) => panic!("complete graph failed: {f:?}"),
        }
    }

    #[test]
    fn densify_condensation_requires_certified_estimate() {
        let g = BipartiteGraph::complete(16, 16);
        let est = estimate_condensation(&g, 0, 1, 2, 17.0, 400, 3).unwrap();
        assert_eq!(est.p_hat, 0.0);
        assert!(densify_from_condensation(
            &g,
            0,
            1,
            2,
            17.0,
            0.9,
            16.0,
            &est,
            5,
            CondenseDensifyOpts::default()
        )
        .is_err());
    }

    #[test]
    fn drive_dense_branch_on_complete_host() {
        let g = BipartiteGraph::complete(64, 64);
        let overrides = ScheduleOverrides {
            mu: Some(0.05),
            alpha0: Some(0.2),
            r: Some(2),
            h: Some(4.0),
            p: Some(0.5),
            m_overlap: Some(8.0),
            ..Default::default()
        };
        let schedule = build_schedule(4, 64, 64, &overrides).unwrap();
        let (outcome, trace) =
            trichotomy_drive(&g, &schedule, &DriveBudgets::default(), 7).unwrap();
        match outcome {
            DriveOutcome::Certificate(cert) => {
                assert_eq!(cert.variant_name(), "dense-subgraph");
                assert!(cert.recheck(&g, 99).unwrap().is_empty());
            }
            DriveOutcome::Failed(f) => panic!("drive failed: {f}"),
        }
        assert_eq!(trace.iterations, 1);
    }

    #[test]
    fn drive_noncondensed_on_random_host() {
        let mut rng = rng::root(40);
        let g = gen_random_bipartite(256, 256, 0.55, &mut rng);
        let overrides = ScheduleOverrides {
            mu: Some(0.05),
            alpha: Some(0.5),
            alpha0: Some(0.2),
            r: Some(2),
            h: Some(1e9),
            p: Some(0.5),
            m_overlap: Some(200.0),
            ..Default::default()
        };
        let schedule = build_schedule(4, 256, 256, &overrides).unwrap();
        let (outcome, _) = trichotomy_drive(&g, &schedule, &DriveBudgets::default(), 3).unwrap();
        match outcome {
            DriveOutcome::Certificate(cert) => {
                assert_eq!(cert.variant_name(), "non-condensed");
                assert!(cert.recheck(&g, 55).unwrap().is_empty());
            }
            DriveOutcome::Failed(f) => panic!("drive failed: {f}"),
        }
    }

    #[test]
    fn ramsey_reduce_all_red() {
        let c = Coloring::constant(4, false);
        let (g, majority) = ramsey_reduce(&c).unwrap();
        assert!(!majority);
        assert_eq!(g.density(), BigRational::from_integer(1.into()));
    }

    #[test]
    fn ramsey_reduce_tie_takes_color_zero() {
        // exactly half the cut edges in each color
        let mut c = Coloring::constant(4, false);
        c.set_color(0, 2, true);
        c.set_color(1, 3, true);
        let (g, majority) = ramsey_reduce(&c).unwrap();
        assert!(!majority);
        assert_eq!(g.density(), BigRational::new(1.into(), 2.into()));
    }

    #[test]
    fn ramsey_reduce_density_floor_over_seeds() {
        let half = BigRational::new(1.into(), 2.into());
        for seed in 0..100u64 {
            let mut rng = rng::root(seed);
            let c = Coloring::uniform_random(64, &mut rng);
            let (g, _) = ramsey_reduce(&c).unwrap();
            assert!(g.density() >= half, "seed {seed}");
        }
    }

    #[test]
    fn ramsey_reduce_rejects_odd() {
        let c = Coloring::constant(5, false);
        assert!(ramsey_reduce(&c).is_err());
    }

    #[test]
    fn embed_auto_tiny_complete_host() {
        let g = BipartiteGraph::complete(64, 64);
        let overrides = ScheduleOverrides {
            mu: Some(0.05),
            alpha0: Some(0.2),
            r: Some(2),
            h: Some(4.0),
            p: Some(0.5),
            m_overlap: Some(4.0),
            ..Default::default()
        };
        let out = embed_auto(&g, 2, 9, &overrides).unwrap();
        let e = out.embedding.expect("complete host must embed");
        assert!(verify_embedding(&g, &e).is_empty());
    }
}
