use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use robust_ellipsoid::coverage::{approximate_origin_coverage_ellipsoid, CandidateRecord};
use robust_ellipsoid::geometry::DEFAULT_SLACK;
use robust_ellipsoid::instance::{
    eta_from_alpha, gen_planted_ellipsoid, gen_planted_subspace, gen_sse_instance, Graph,
    PlantedEllipsoidSpec, PointOrigin, SseInstanceSpec,
};
use robust_ellipsoid::oracle::{brute_force_min_k_ellipsoid, OracleBudget};
use robust_ellipsoid::subspace::{recover_subspace, SubspaceConfig};
use robust_ellipsoid::{approximate_coverage_ellipsoid, AlgoConfig, Error, PointSet};

use crate::document::{DocumentMeta, EllipsoidDocument};
use crate::points::{read_points, write_points, write_rows_to};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "robust-ellipsoid", version, about = "Small-volume ellipsoids covering most of a point set")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit an ellipsoid covering all but an α-fraction of the points.
    Fit(FitArgs),
    /// Recover a low-dimensional subspace holding most of the points.
    Subspace(SubspaceArgs),
    /// Write a synthetic instance.
    #[command(subcommand)]
    Generate(GenerateCommand),
    /// Exact minimum-volume ellipsoid covering k points, by enumeration.
    Oracle(OracleArgs),
    /// Score an ellipsoid document against a point file.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// CSV point file, one point per row.
    #[arg(long)]
    pub input: PathBuf,
    /// Skip one header line.
    #[arg(long)]
    pub header: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Fraction of points allowed outside, in (0, 1).
    #[arg(long)]
    pub alpha: f64,
    /// Progress parameter in (0, 1); smaller is tighter and slower.
    #[arg(long)]
    pub gamma: f64,
    #[arg(long)]
    pub seed: u64,
    /// Restarts per bounding ball [default: ⌈log₂ n⌉].
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Round constant: each branch runs ⌈c·αn/(γ(d+1))⌉ rounds.
    #[arg(long, default_value_t = 56.0)]
    pub c: f64,
    /// Candidates must cover at least (1 − c2·α/γ)·n points.
    #[arg(long, default_value_t = 4.0)]
    pub c2: f64,
    /// Solver tolerance on the leverage certificate.
    #[arg(long, default_value_t = 1e-7)]
    pub eta: f64,
    /// Run only the largest this-many bounding balls.
    #[arg(long)]
    pub max_balls: Option<usize>,
    /// Fix the center at the origin instead of fitting it.
    #[arg(long)]
    pub origin: bool,
    /// Output document path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SubspaceArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub gamma: f64,
    /// Closeness threshold ε in (0, 1).
    #[arg(long)]
    pub eps: f64,
    /// Perturbation scale [default: ε^(4/γ)].
    #[arg(long)]
    pub eps_star: Option<f64>,
    /// Expected outlier fraction.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub seed: u64,
    /// Writes PREFIX.basis.csv, PREFIX.distances.csv and PREFIX.report.txt.
    #[arg(long)]
    pub out_prefix: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum GenerateCommand {
    /// Uniform points in a random ellipsoid with condition number β, plus
    /// ⌊αn⌋ far outliers. Writes PREFIX.points.csv and PREFIX.truth.json.
    Planted {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out_prefix: PathBuf,
    },
    /// Unit points on a random subspace plus ⌊αn⌋ unit outliers. Writes
    /// PREFIX.points.csv and PREFIX.basis.csv.
    Subspace {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        planted_dim: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out_prefix: PathBuf,
    },
    /// Edge vectors of a regular graph padded with origin points. Writes
    /// PREFIX.points.csv and PREFIX.edges.csv.
    Sse {
        /// Graph file: "vertices degree" then one "i j" edge per line.
        #[arg(long)]
        graph: PathBuf,
        /// Small-set fraction δ.
        #[arg(long)]
        delta: f64,
        /// Target outlier fraction α; sets the origin padding.
        #[arg(long)]
        alpha: f64,
        /// Expansion ε used to derive the padding from α.
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        /// Perturbation ε̃ = d^(−C); omit to disable.
        #[arg(long)]
        cap_c: Option<f64>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out_prefix: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Number of points to cover.
    #[arg(long)]
    pub k: usize,
    /// Refuse inputs with more k-subsets than this.
    #[arg(long, default_value_t = 200_000)]
    pub max_subsets: u64,
    /// Evaluate every subset (audit mode).
    #[arg(long)]
    pub no_prune: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Ellipsoid document to score.
    #[arg(long)]
    pub doc: PathBuf,
    /// Slack on the quadratic form when testing membership.
    #[arg(long, default_value_t = DEFAULT_SLACK)]
    pub slack: f64,
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Fit(a) => cmd_fit(&a, out),
        Command::Subspace(a) => cmd_subspace(&a, out),
        Command::Generate(g) => cmd_generate(&g, out),
        Command::Oracle(a) => cmd_oracle(&a, out),
        Command::Eval(a) => cmd_eval(&a, out),
    }
}

fn io(e: std::io::Error) -> CliError {
    CliError::Io(e.to_string())
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn num(v: f64) -> String {
    if v.is_finite() { format!("{v:.6}") } else { v.to_string() }
}

fn describe(c: &CandidateRecord) -> String {
    format!(
        "coverage {} log_volume {} ball ({}, {}) restart {} round {}",
        c.coverage_count,
        num(c.log_volume),
        c.ball_id.0,
        c.ball_id.1,
        c.restart,
        c.round
    )
}

pub fn cmd_fit(a: &FitArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let points = read_points(&a.input.input, a.input.header)?;
    let mut cfg = AlgoConfig::new(a.alpha, a.gamma, a.seed);
    cfg.restarts = a.restarts;
    cfg.iter_const_c = a.c;
    cfg.coverage_const_c2 = a.c2;
    cfg.solver.eta = a.eta;
    cfg.max_balls = a.max_balls;
    let fit = if a.origin {
        approximate_origin_coverage_ellipsoid(&points, &cfg)
    } else {
        approximate_coverage_ellipsoid(&points, &cfg)
    };
    let run = match fit {
        Ok(run) => run,
        Err(Error::NoFeasibleCandidate { floor, mut candidates }) => {
            candidates.sort_by(|x, y| {
                y.coverage_count
                    .cmp(&x.coverage_count)
                    .then(x.log_volume.total_cmp(&y.log_volume))
            });
            let mut msg = format!(
                "no candidate covers the floor of {floor:.3} points; best of {}:",
                candidates.len()
            );
            for c in candidates.iter().take(5) {
                msg += &format!("\n  {}", describe(c));
            }
            return Err(CliError::Infeasible(msg));
        }
        Err(e) => return Err(e.into()),
    };
    let best = &run.best;
    let n = points.len();
    let doc = EllipsoidDocument::from_ellipsoid(
        &best.ellipsoid,
        DocumentMeta {
            alpha: Some(a.alpha),
            gamma: Some(a.gamma),
            seed: Some(a.seed),
            coverage_count: best.coverage_count,
            n,
        },
    );
    write_text(&a.out, &doc.to_text())?;
    writeln!(out, "fit: n {n}, dim {}, alpha {}, gamma {}, seed {}", points.dim(), a.alpha, a.gamma, a.seed).map_err(io)?;
    writeln!(
        out,
        "search: {} balls, {} branches, {} rounds per branch, {} candidates",
        run.balls,
        run.branches.len(),
        run.rounds_per_branch,
        run.candidates.len()
    )
    .map_err(io)?;
    writeln!(out, "coverage floor: {:.3}", run.coverage_floor).map_err(io)?;
    writeln!(
        out,
        "coverage: {}/{} (fraction {:.6})",
        best.coverage_count,
        n,
        best.coverage_count as f64 / n as f64
    )
    .map_err(io)?;
    writeln!(out, "log_volume: {}", num(doc.log_volume)).map_err(io)?;
    writeln!(out, "condition_number: {}", num(doc.condition_number)).map_err(io)?;
    writeln!(out, "chosen: {}", describe(best)).map_err(io)?;
    Ok(())
}

pub fn cmd_subspace(a: &SubspaceArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let points = read_points(&a.input.input, a.input.header)?;
    let mut cfg = SubspaceConfig::new(a.gamma, a.eps, a.alpha, a.seed);
    cfg.eps_star_override = a.eps_star;
    cfg.ellipsoid_cfg.restarts = a.restarts;
    let res = match recover_subspace(&points, &cfg) {
        Err(Error::NoFeasibleCandidate { floor, candidates }) => {
            return Err(CliError::Infeasible(format!(
                "no candidate covers the floor of {floor:.3} points ({} candidates)",
                candidates.len()
            )))
        }
        r => r?,
    };
    let basis_rows = (0..res.basis.nrows()).map(|r| res.basis.row(r).iter().copied().collect());
    write_rows_to(&with_suffix(&a.out_prefix, ".basis.csv"), basis_rows)?;
    write_rows_to(
        &with_suffix(&a.out_prefix, ".distances.csv"),
        res.distances.iter().map(|&v| vec![v]),
    )?;
    let mut report = String::new();
    report += &format!("subspace: n {}, ambient dim {}, seed {}\n", points.len(), points.dim(), a.seed);
    report += &format!("dim: {}\n", res.dim);
    report += &format!("eps: {}\n", a.eps);
    report += &format!("eps_star: {:e}\n", res.eps_star);
    report += &format!("close_count: {}/{}\n", res.close_count, points.len());
    let eig: Vec<String> = res.eigenvalues.iter().map(|v| format!("{v:.6e}")).collect();
    report += &format!("eigenvalues: {}\n", eig.join(" "));
    for w in &res.warnings {
        report += &format!("warning: {w}\n");
    }
    write_text(&with_suffix(&a.out_prefix, ".report.txt"), &report)?;
    out.write_all(report.as_bytes()).map_err(io)
}

pub fn cmd_generate(g: &GenerateCommand, out: &mut dyn Write) -> Result<(), CliError> {
    match g {
        GenerateCommand::Planted { dim, n, beta, alpha, seed, out_prefix } => {
            let inst = gen_planted_ellipsoid(&PlantedEllipsoidSpec::new(*dim, *n, *beta, *alpha, *seed))?;
            write_points(&with_suffix(out_prefix, ".points.csv"), &inst.points)?;
            let covered = inst.truth.coverage(&inst.points, DEFAULT_SLACK)?.count;
            let doc = EllipsoidDocument::from_ellipsoid(
                &inst.truth,
                DocumentMeta { alpha: Some(*alpha), gamma: None, seed: Some(*seed), coverage_count: covered, n: *n },
            );
            write_text(&with_suffix(out_prefix, ".truth.json"), &doc.to_text())?;
            writeln!(out, "planted: {} inliers, {} outliers", inst.inlier_ids.len(), inst.outlier_ids.len()).map_err(io)
        }
        GenerateCommand::Subspace { dim, planted_dim, n, alpha, seed, out_prefix } => {
            let inst = gen_planted_subspace(*dim, *planted_dim, *n, *alpha, *seed)?;
            write_points(&with_suffix(out_prefix, ".points.csv"), &inst.points)?;
            let rows = (0..inst.basis.nrows()).map(|r| inst.basis.row(r).iter().copied().collect());
            write_rows_to(&with_suffix(out_prefix, ".basis.csv"), rows)?;
            writeln!(out, "subspace: {} inliers, {} outliers", inst.inlier_ids.len(), n - inst.inlier_ids.len()).map_err(io)
        }
        GenerateCommand::Sse { graph, delta, alpha, eps, cap_c, seed, out_prefix } => {
            let text = std::fs::read_to_string(graph)
                .map_err(|e| CliError::Input(format!("{}: {e}", graph.display())))?;
            let spec = SseInstanceSpec {
                graph: Graph::parse(&text)?,
                delta: *delta,
                eta_pad: eta_from_alpha(*alpha, *delta, *eps),
                cap_c: cap_c.unwrap_or(f64::INFINITY),
                seed: *seed,
            };
            let inst = gen_sse_instance(&spec)?;
            for w in &inst.warnings {
                log::warn!("{w}");
            }
            write_points(&with_suffix(out_prefix, ".points.csv"), &inst.points)?;
            let edges = inst.edge_map.iter().map(|o| match *o {
                PointOrigin::Edge(i, j) => vec![i as f64, j as f64],
                PointOrigin::Origin => vec![-1.0, -1.0],
            });
            write_rows_to(&with_suffix(out_prefix, ".edges.csv"), edges)?;
            writeln!(out, "sse: {} points in dimension {}", inst.points.len(), inst.points.dim()).map_err(io)
        }
    }
}

pub fn cmd_oracle(a: &OracleArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let points = read_points(&a.input.input, a.input.header)?;
    let budget = OracleBudget { max_subsets: a.max_subsets, prune: !a.no_prune, ..Default::default() };
    let opt = brute_force_min_k_ellipsoid(&points, a.k, &budget)?;
    let n = points.len();
    let doc = EllipsoidDocument::from_ellipsoid(
        &opt.ellipsoid,
        DocumentMeta {
            alpha: Some(1.0 - a.k as f64 / n as f64),
            gamma: None,
            seed: None,
            coverage_count: opt.covered_ids.len(),
            n,
        },
    );
    write_text(&a.out, &doc.to_text())?;
    let ids: Vec<String> = opt.subset_ids.iter().map(|i| i.to_string()).collect();
    writeln!(out, "oracle: n {n}, k {}, {} subsets evaluated", a.k, opt.evaluated).map_err(io)?;
    writeln!(out, "subset: {}", ids.join(" ")).map_err(io)?;
    writeln!(out, "coverage: {}/{n}", opt.covered_ids.len()).map_err(io)?;
    writeln!(out, "log_volume: {}", num(doc.log_volume)).map_err(io)?;
    writeln!(out, "condition_number: {}", num(doc.condition_number)).map_err(io)
}

/// Scores a document against points.
pub struct Evaluation {
    pub coverage_count: usize,
    pub n: usize,
    pub fraction: f64,
    pub log_volume: f64,
    pub condition_number: f64,
}

pub fn evaluate(doc: &EllipsoidDocument, points: &PointSet, slack: f64) -> Result<Evaluation, CliError> {
    let e = doc.ellipsoid()?;
    let cov = e.coverage(points, slack)?;
    Ok(Evaluation {
        coverage_count: cov.count,
        n: points.len(),
        fraction: cov.fraction,
        log_volume: e.log_volume_or_neg_inf(),
        condition_number: e.condition_number().unwrap_or(f64::INFINITY),
    })
}

pub fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let points = read_points(&a.input.input, a.input.header)?;
    let text = std::fs::read_to_string(&a.doc)
        .map_err(|e| CliError::Input(format!("{}: {e}", a.doc.display())))?;
    let doc = EllipsoidDocument::parse(&text)?;
    if doc.dim != points.dim() {
        return Err(CliError::Input(format!(
            "document has dimension {}, points have {}",
            doc.dim,
            points.dim()
        )));
    }
    let ev = evaluate(&doc, &points, a.slack)?;
    writeln!(out, "coverage_count: {}/{}", ev.coverage_count, ev.n).map_err(io)?;
    writeln!(out, "fraction: {:.6}", ev.fraction).map_err(io)?;
    writeln!(out, "log_volume: {}", num(ev.log_volume)).map_err(io)?;
    writeln!(out, "condition_number: {}", num(ev.condition_number)).map_err(io)?;
    let real = crate::document::real;
    writeln!(
        out,
        "{{\"condition_number\": {}, \"coverage_count\": {}, \"fraction\": {}, \"log_volume\": {}, \"n\": {}}}",
        real(ev.condition_number),
        ev.coverage_count,
        real(ev.fraction),
        real(ev.log_volume),
        ev.n
    )
    .map_err(io)
}
