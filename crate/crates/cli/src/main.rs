//! Command line driver. Reports go to stdout and are deterministic for a
//! fixed (command, seed); wall-clock timings go to stderr.
//!
//! Exit codes: 0 success or clean report, 1 precondition or usage error,
//! 2 stage failure (an embedder or driver ran out of budget or the check
//! failed), 3 file or parse error.

use clap::{Args, Parser, Subcommand};
use qembed_core::adversary::{covering_property_estimate, drc_defeat_experiment, generate_gamma, GammaShape};
use qembed_core::bigraph::{read_graph, write_graph, BipartiteGraph, Side};
use qembed_core::blocks::{
    block_embed_cube, generate_block_graph, read_blocks, validate_block_structure, write_blocks,
    BlockOutcome,
};
use qembed_core::condensation::{
    embed_regular_noncondensed, estimate_condensation, find_standard_pair, verify_h_embedding,
    FindPairOutcome, NcOutcome,
};
use qembed_core::drc::{drc_embed_cube, verify_embedding, CubeEmbedding, DrcOutcome};
use qembed_core::error::Error as CoreError;
use qembed_core::harness::{
    brute_force_embed, brute_force_embed_cube, chernoff_empirical, default_t_grid,
    format_cube_embedding, gen_random_bipartite, parse_cube_embedding, BruteBudget, BruteOutcome,
    CubeBruteOutcome, ExperimentReport, TailMode,
};
use qembed_core::rng;
use qembed_core::trichotomy::{
    build_schedule, embed_auto, trichotomy_drive, DriveBudgets, DriveOutcome, ScheduleOverrides,
    TrichotomyCertificate,
};
use std::io::BufReader;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "qembed", version, about = "Randomized hypercube embeddings into bipartite hosts")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct GraphArg {
    /// Host graph file (`upper lower` header, then `u v` edge lines)
    #[arg(long)]
    graph: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a random bipartite graph with i.i.d. edges
    Gen {
        #[arg(long)]
        uppers: usize,
        #[arg(long)]
        lowers: usize,
        #[arg(long)]
        density: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a block-structured host (writes `<out>` and `<out>.blocks`)
    GenBlocks {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        g: usize,
        #[arg(long)]
        uppers: usize,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate the adversarial half-density block graph
    GenGamma {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        g: usize,
        #[arg(long)]
        uppers: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Embed Q_n by dependent random choice
    EmbedDrc {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 10)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the embedding here on success
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Embed Q_n facet-wise into a block-structured host
    EmbedBlocks {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        blocks: PathBuf,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        w: u32,
        #[arg(long)]
        u: u32,
        #[arg(long, default_value_t = 10)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Run even when the embedding lemma's hypotheses fail numerically
        #[arg(long)]
        proceed_anyway: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Embed an r-regular bipartite pattern through a standard pair
    EmbedH {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        pattern: PathBuf,
        #[arg(long)]
        r: u32,
        #[arg(long = "m-overlap")]
        m_overlap: f64,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0.1)]
        alpha0: f64,
        #[arg(long, default_value_t = 0.05)]
        mu: f64,
        #[arg(long, default_value_t = 64)]
        attempts: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Trichotomy, then dispatch to the matching embedder
    EmbedAuto {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Schedule overrides as key=value (mu, alpha, alpha0, M, p, u, w, h, r, ...)
        #[arg(long = "override")]
        overrides: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the (p, M)-condensation probability of a lower pair
    Condense {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        r: u32,
        #[arg(long = "M")]
        m_overlap: f64,
        #[arg(long)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Explicit pair; defaults to a standard pair found at (alpha0, mu)
        #[arg(long)]
        v1: Option<usize>,
        #[arg(long)]
        v2: Option<usize>,
        #[arg(long, default_value_t = 0.1)]
        alpha0: f64,
        #[arg(long, default_value_t = 0.05)]
        mu: f64,
    },
    /// Run the structural trichotomy and emit a certificate report
    Trichotomy {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "override")]
        overrides: Vec<String>,
        /// Also write the full report to this file
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Compare plain DRC against the block embedder on one host
    Defeat {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        blocks: PathBuf,
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 20)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        u: u32,
        #[arg(long, default_value_t = 2)]
        w: u32,
    },
    /// Estimate the covering property of a block host
    Covering {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        blocks: PathBuf,
        #[arg(long = "s-size")]
        s_size: usize,
        #[arg(long)]
        arity: u32,
        #[arg(long, default_value_t = 10000)]
        samples: u64,
        #[arg(long = "t-budget")]
        t_budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check an embedding file against its host graph
    Verify {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        embedding: PathBuf,
    },
    /// Empirical check of the Bernoulli concentration bound
    Chernoff {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 100000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "c", default_value_t = 0.25)]
        c_chernoff: f64,
        /// Explicit deviation grid; defaults to fractions of p*n
        #[arg(long = "t")]
        t_grid: Vec<f64>,
        /// Exact binomial tails instead of sampling
        #[arg(long)]
        exact: bool,
    },
    /// Exact backtracking search for a pattern embedding
    Brute {
        #[command(flatten)]
        graph: GraphArg,
        /// Bipartite pattern file
        #[arg(long, conflicts_with = "cube")]
        pattern: Option<PathBuf>,
        /// Hypercube dimension instead of a pattern file
        #[arg(long)]
        cube: Option<u32>,
        #[arg(long = "max-nodes", default_value_t = 20_000_000)]
        max_nodes: u64,
        #[arg(long = "budget-ms")]
        budget_ms: Option<u64>,
    },
}

fn command_echo() -> String {
    std::env::args().skip(1).collect::<Vec<_>>().join(" ")
}

/// 0 clean, 1 precondition, 2 stage failure, 3 file error.
fn code_for(err: &CoreError) -> u8 {
    match err {
        CoreError::Io(_) | CoreError::Parse { .. } => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("QEMBED_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let started = Instant::now();
    let result = run(cli.cmd);
    eprintln!("elapsed: {:.3}s", started.elapsed().as_secs_f64());
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(code_for(&e))
        }
    }
}

fn emit_embedding(
    g: &BipartiteGraph,
    e: &CubeEmbedding,
    out: &Option<PathBuf>,
    report: &mut ExperimentReport,
) -> qembed_core::Result<()> {
    let text = format_cube_embedding(g, e);
    report.push("embedding", text.clone());
    if let Some(path) = out {
        std::fs::write(path, text)?;
    }
    Ok(())
}

fn run(cmd: Cmd) -> qembed_core::Result<u8> {
    match cmd {
        Cmd::Gen { uppers, lowers, density, seed, out } => {
            if !(0.0..=1.0).contains(&density) {
                return Err(CoreError::invalid("density must be in [0, 1]"));
            }
            let mut rng = rng::root(seed);
            let g = gen_random_bipartite(uppers, lowers, density, &mut rng);
            write_graph(&g, &out)?;
            let mut report = ExperimentReport::new(command_echo(), seed);
            report.push(
                "graph",
                format!(
                    "{} x {}, {} edges, measured density {:.6}",
                    g.upper_count(),
                    g.lower_count(),
                    g.edge_count(),
                    g.density_f64()
                ),
            );
            print!("{}", report.render());
            Ok(0)
        }
        Cmd::GenBlocks { k, g, uppers, gamma, delta, seed, out } => {
            let mut rng = rng::root(seed);
            let (host, bs) = generate_block_graph(k, g, uppers, gamma, delta, &mut rng)?;
            write_graph(&host, &out)?;
            let sidecar = out.with_extension("blocks");
            write_blocks(&bs, &sidecar)?;
            let violations = validate_block_structure(&host, &bs);
            let mut report = ExperimentReport::new(command_echo(), seed);
            report.push(
                "graph",
                format!(
                    "{} x {}, density {:.6}, sidecar {}",
                    host.upper_count(),
                    host.lower_count(),
                    host.density_f64(),
                    sidecar.display()
                ),
            );
            report.push(
                "validator",
                if violations.is_empty() { "ok".to_string() } else { format!("{violations:?}") },
            );
            print!("{}", report.render());
            Ok(if violations.is_empty() { 0 } else { 2 })
        }
        Cmd::GenGamma { k, g, uppers, seed, out } => {
            let mut rng = rng::root(seed);
            let (host, bs) = generate_gamma(GammaShape::desk(k, g, uppers), &mut rng)?;
            write_graph(&host, &out)?;
            let sidecar = out.with_extension("blocks");
            write_blocks(&bs, &sidecar)?;
            let violations = validate_block_structure(&host, &bs);
            let mut report = ExperimentReport::new(command_echo(), seed);
            report.push(
                "graph",
                format!(
                    "{} x {}, density {:.6} (exactly 1/2 by construction), gamma {:.6}",
                    host.upper_count(),
                    host.lower_count(),
                    host.density_f64(),
                    bs.gamma
                ),
            );
            report.push(
                "validator",
                if violations.is_empty() { "ok".to_string() } else { format!("{violations:?}") },
            );
            print!("{}", report.render());
            Ok(if violations.is_empty() { 0 } else { 2 })
        }
        Cmd::EmbedDrc { graph, n, trials, seed, out } => {
            let g = read_graph(&graph.graph)?;
            let outcome = drc_embed_cube(&g, n, trials, seed)?;
            let mut report = ExperimentReport::new(command_echo(), seed);
            report.push("drc", outcome.report().to_string());
            let code = match &outcome {
                DrcOutcome::Embedded(e, _) => {
                    emit_embedding(&g, e, &out, &mut report)?;
                    0
                }
                DrcOutcome::Failed(_) => 2,
            };
            print!("{}", report.render());
            Ok(code)
        }
        Cmd::EmbedBlocks { graph, blocks, n, w, u, trials, seed, proceed_anyway, out } => {
            let g = read_graph(&graph.graph)?;
            let bs = read_blocks(&blocks, g.upper_count(), g.lower_count())?;
            let outcome = block_embed_cube(&g, &bs, n, u, w, trials, seed, proceed_anyway)?;
            let mut report = ExperimentReport::new(command_echo(), seed);
            report.push("feasibility", outcome.report().feasibility.to_string());
            report.push("block-embed", outcome.report().to_string());
            let code = match &outcome {
                BlockOutcome::Embedded(e, _) => {
                    emit_embedding(&g, e, &out, &mut report)?;
                    0
                }
                BlockOutcome::Failed(_) => 2,
            };
            print!("{}", report.render());
            Ok(code)
        }
        Cmd::EmbedH { graph, pattern, r, m_overlap, p, alpha0, mu, attempts, seed } => {
            let g = read_graph(&graph.graph)?;
            let h = read_graph(&pattern)?;
            let mut report = ExperimentReport::new(command_echo(), seed);
            let cert = match find_standard_pair(&g, alpha0, mu, r, attempts, seed)? {
                FindPairOutcome::Found(c) => c,
                FindPairOutcome::Failed(f) => {
                    report.push(
                        "standard-pair",
                        format!(
                            "no pair in {} attempts ({} cn-size, {} bad-tuples rejections)",
                            f.attempts, f.cn_too_small, f.bad_tuples_too_many
                        ),
                    );
                    print!("{}", report.render());
                    return Ok(2);
                }
            };
            report.push(
                "standard-pair",
                format!("(v1, v2) = ({}, {}), |CN| = {}", cert.v1, cert.v2, cert.cn_size),
            );
            let outcome = embed_regular_noncondensed(&g, &cert, &h, m_overlap, p, seed)?;
            let code = match &outcome {
                NcOutcome::Embedded(e, rep) => {
                    assert!(verify_h_embedding(&g, &h, e).is_empty());
                    report.push(
                        "embed-h",
                        format!(
                            "success: m = {} (x{} tiled), |Q| = {}, |W| = {}, |R| = {}",
                            rep.m,
                            rep.tiled_copies,
                            rep.q.len(),
                            rep.w.len(),
                            rep.regular.len()
                        ),
                    );
                    let lines: Vec<String> = e
                        .upper_images
                        .iter()
                        .enumerate()
                        .map(|(i, &v)| format!("up {i} -> {v}"))
                        .chain(
                            e.lower_images
                                .iter()
                                .enumerate()
                                .map(|(j, &v)| format!("down {j} -> {v}")),
                        )
                        .collect();
                    report.push("pattern-embedding", lines.join("\n"));
                    0
                }
                NcOutcome::Failed(rep) => {
                    report.push(
                        "embed-h",
                        format!("failed at stage: {}", rep.failed_stage.map_or("unknown".into(), |s| s.to_string())),
                    );
                    2
                }
            };
            print!("{}", report.render());
            Ok(code)
        }
        Cmd::EmbedAuto { graph, n, seed, overrides, out } => {
            let g = read_graph(&graph.graph)?;
            let overrides = ScheduleOverrides::parse(&overrides)?;
            let outcome = embed_auto(&g, n, seed, &overrides)?;
            let mut report = ExperimentReport::new(command_echo(), seed);
            report.push("route", outcome.route.clone());
            if !outcome.notes.is_empty() {
                report.push("notes", outcome.notes.join("\n"));
            }
            let code = match &outcome.embedding {
                Some(e) => {
                    emit_embedding(&g, e, &out, &mut report)?;
                    0
                }
                None => 2,
            };
            print!("{}", report.render());
            Ok(code)
        }
        Cmd::Condense { graph, r, m_overlap, samples, seed, v1, v2, alpha0, mu } => {
            let g = read_graph(&graph.graph)?;
            let mut report = ExperimentReport::new(command_echo(), seed);
            let (v1, v2) = match (v1, v2) {
                (Some(a), Some(b)) => (a, b),
                (None, None) => match find_standard_pair(&g, alpha0, mu, r.max(2), 64, seed)? {
                    FindPairOutcome::Found(c) => {
                        report.push("standard-pair", format!("({}, {})", c.v1, c.v2));
                        (c.v1, c.v2)
                    }
                    FindPairOutcome::Failed(_) => {
                        report.push("standard-pair", "none found; pass --v1/--v2".to_string());
                        print!("{}", report.render());
                        return Ok(2);
                    }
                },
                _ => return Err(CoreError::invalid("pass both --v1 and --v2, or neither")),
            };
            let est = estimate_condensation(&g, v1, v2, r, m_overlap, samples, seed)?;
            report.push("condensation", est.to_string());
            print!("{}", report.render());
            Ok(0)
        }
        Cmd::Trichotomy { graph, n, seed, overrides, report: report_path } => {
            let g = read_graph(&graph.graph)?;
            let overrides = ScheduleOverrides::parse(&overrides)?;
            let schedule = build_schedule(n, g.upper_count(), g.lower_count(), &overrides)?;
            let mut report = ExperimentReport::new(command_echo(), seed);
            report.push("schedule", schedule.to_string());
            let (outcome, trace) = trichotomy_drive(&g, &schedule, &DriveBudgets::default(), seed)?;
            let densities: Vec<String> = trace
                .densities
                .iter()
                .map(|d| format!("{:.6}", qembed_core::bigraph::rational_to_f64(d)))
                .collect();
            report.push(
                "iterations",
                format!("{} (densities: {})", trace.iterations, densities.join(", ")),
            );
            let code = match &outcome {
                DriveOutcome::Certificate(cert) => {
                    let issues = cert.recheck(&g, rng::child_seed(seed, 0xF))?;
                    report.push("certificate", describe_certificate(cert));
                    report.push(
                        "recheck",
                        if issues.is_empty() { "ok".into() } else { issues.join("\n") },
                    );
                    if issues.is_empty() {
                        0
                    } else {
                        2
                    }
                }
                DriveOutcome::Failed(f) => {
                    report.push("failure", f.to_string());
                    2
                }
            };
            let rendered = report.render();
            if let Some(path) = report_path {
                std::fs::write(path, &rendered)?;
            }
            print!("{rendered}");
            Ok(code)
        }
        Cmd::Defeat { graph, blocks, n, trials, seed, u, w } => {
            let g = read_graph(&graph.graph)?;
            let bs = read_blocks(&blocks, g.upper_count(), g.lower_count())?;
            let rep = drc_defeat_experiment(&g, &bs, n, u, w, trials, seed)?;
            let mut report = ExperimentReport::new(command_echo(), seed);
            report.push("defeat", rep.to_string());
            eprintln!(
                "wall-clock: naive {:.3}s, block {:.3}s",
                rep.naive_wall.as_secs_f64(),
                rep.block_wall.as_secs_f64()
            );
            print!("{}", report.render());
            Ok(0)
        }
        Cmd::Covering { graph, blocks, s_size, arity, samples, t_budget, seed } => {
            let g = read_graph(&graph.graph)?;
            let bs = read_blocks(&blocks, g.upper_count(), g.lower_count())?;
            let rep = covering_property_estimate(&g, &bs, s_size, arity, samples, t_budget, seed)?;
            let mut report = ExperimentReport::new(command_echo(), seed);
            report.push("covering", rep.to_string());
            print!("{}", report.render());
            Ok(0)
        }
        Cmd::Verify { graph, embedding } => {
            let g = read_graph(&graph.graph)?;
            let file = std::fs::File::open(&embedding)?;
            let (e, uc, lc) = parse_cube_embedding(BufReader::new(file))?;
            let mut report = ExperimentReport::new(command_echo(), 0);
            if uc != g.upper_count() || lc != g.lower_count() {
                report.push(
                    "verify",
                    format!(
                        "host mismatch: file says {} x {}, graph is {} x {}",
                        uc,
                        lc,
                        g.upper_count(),
                        g.lower_count()
                    ),
                );
                print!("{}", report.render());
                return Ok(2);
            }
            let violations = verify_embedding(&g, &e);
            if violations.is_empty() {
                report.push("verify", "ok".to_string());
                print!("{}", report.render());
                Ok(0)
            } else {
                let lines: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
                report.push("verify", lines.join("\n"));
                print!("{}", report.render());
                Ok(2)
            }
        }
        Cmd::Chernoff { p, n, samples, seed, c_chernoff, t_grid, exact } => {
            let grid = if t_grid.is_empty() { default_t_grid(p, n) } else { t_grid };
            let mode = if exact { TailMode::Exact } else { TailMode::Samples(samples) };
            let rows = chernoff_empirical(p, n, &grid, mode, c_chernoff, seed)?;
            let mut report = ExperimentReport::new(command_echo(), seed);
            let mut body = String::from("t\tempirical\tbound\tflag\n");
            let mut flagged = false;
            for row in &rows {
                flagged |= row.flagged;
                body.push_str(&format!(
                    "{:.3}\t{:.6e}\t{:.6e}\t{}\n",
                    row.t,
                    row.empirical,
                    row.bound,
                    if row.flagged { "FLAG" } else { "-" }
                ));
            }
            report.push("chernoff", body);
            print!("{}", report.render());
            Ok(if flagged { 2 } else { 0 })
        }
        Cmd::Brute { graph, pattern, cube, max_nodes, budget_ms } => {
            let g = read_graph(&graph.graph)?;
            let budget = BruteBudget {
                max_nodes,
                max_time: budget_ms.map(std::time::Duration::from_millis),
                ..Default::default()
            };
            let mut report = ExperimentReport::new(command_echo(), 0);
            let code = match (pattern, cube) {
                (Some(path), None) => {
                    let h = read_graph(&path)?;
                    match brute_force_embed(&g, &h, budget)? {
                        BruteOutcome::Embedded(e) => {
                            assert!(verify_h_embedding(&g, &h, &e).is_empty());
                            report.push(
                                "brute",
                                format!(
                                    "embedded: uppers {:?}, lowers {:?}",
                                    e.upper_images, e.lower_images
                                ),
                            );
                            0
                        }
                        BruteOutcome::Impossible => {
                            report.push("brute", "impossible (search exhausted)".to_string());
                            0
                        }
                        BruteOutcome::Timeout => {
                            report.push("brute", "budget exhausted before a verdict".to_string());
                            2
                        }
                    }
                }
                (None, Some(n)) => match brute_force_embed_cube(&g, n, budget)? {
                    CubeBruteOutcome::Embedded(e) => {
                        report.push("brute", format!("embedded (odd side {})", e.odd_side));
                        report.push("embedding", format_cube_embedding(&g, &e));
                        0
                    }
                    CubeBruteOutcome::Impossible => {
                        report.push("brute", "impossible (search exhausted)".to_string());
                        0
                    }
                    CubeBruteOutcome::Timeout => {
                        report.push("brute", "budget exhausted before a verdict".to_string());
                        2
                    }
                },
                _ => return Err(CoreError::invalid("pass exactly one of --pattern or --cube")),
            };
            print!("{}", report.render());
            Ok(code)
        }
    }
}

fn describe_certificate(cert: &TrichotomyCertificate) -> String {
    match cert {
        TrichotomyCertificate::NonCondensed { generation, pair, estimate, p, .. } => format!(
            "non-condensed at generation {generation}: pair ({}, {}), |CN| = {}, {}, p = {p}",
            pair.v1, pair.v2, pair.cn_size, estimate
        ),
        TrichotomyCertificate::DenseSubgraph {
            generation,
            uppers,
            lowers,
            measured_density,
            ..
        } => format!(
            "dense subgraph at generation {generation}: {} uppers x {} lowers, density {:.6}",
            uppers.card(),
            lowers.card(),
            qembed_core::bigraph::rational_to_f64(measured_density)
        ),
        TrichotomyCertificate::Blocks { structure, .. } => format!(
            "block-structured: k = {}, g = {}, delta = {:.6}, gamma = {:.6}",
            structure.k, structure.g_size, structure.delta, structure.gamma
        ),
    }
}

// Side is referenced by the embedding emitters through format_cube_embedding.
#[allow(dead_code)]
fn _side_in_scope(_: Side) {}
