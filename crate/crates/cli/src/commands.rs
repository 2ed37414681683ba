use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use hyperq::budget::DEFAULT_BUDGET;
use hyperq::constructions::{layered_random_complex, ConstructionDescriptor};
use hyperq::counting::EvalMode;
use hyperq::density::Value;
use hyperq::embed::SearchVerdict;
use hyperq::extremal::{hill_climb_codegree, multicolour_matching};
use hyperq::gowers::balanced_function;
use hyperq::partite::{
    generated_complex, read_complex, write_complex, IndexSet, PartiteComplex, PartiteGround,
};
use hyperq::pg::{
    baer_subplane, blocking_sets, difference_set_plane, iso_check, line_type_census,
    wedge_colouring, ProjectivePlane,
};
use hyperq::quasirandom::{epsilon_regular_estimate, hidden_parameters, quasirandom_check};
use hyperq::regularity::{decompose, write_partition_system, DecomposeParams};
use hyperq::{Budget, Error, Parallelism, Result, UniformHypergraph, Vertex};

use crate::report::{ConfigEcho, ErrorReport, Report};

pub const BUDGET_ENV: &str = "HYPERQ_BUDGET";

#[derive(Parser)]
#[command(
    name = "hyperq",
    version,
    about = "Hypergraph quasirandomness, projective planes, and regularity decompositions"
)]
pub struct Cli {
    /// Seed for every randomized routine; echoed into the report.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Worker threads (0 = one per core). Results never depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// Enumeration budget in elementary steps (default from HYPERQ_BUDGET).
    #[arg(long, global = true)]
    pub budget: Option<u64>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Projective geometries and their structures.
    Pg(PgArgs),
    /// Exhaustive blocking-set census of a plane.
    Blocking(BlockingArgs),
    /// Generate a named construction.
    Construct(ConstructArgs),
    /// Re-check a construction's degree and freeness claims.
    Certify(CertifyArgs),
    /// Containment search and extremal hill climb.
    Search(SearchArgs),
    /// Quasirandomness: Oct values, checks, ladders, regularity sampling.
    Qr(QrArgs),
    /// Homomorphism and embedding counting.
    Count(CountArgs),
    /// The homomorphism complex J -> G and its density report.
    Homcomplex(HomComplexArgs),
    /// Regularity decomposition.
    Regularity(RegularityArgs),
}

#[derive(Args)]
pub struct PgArgs {
    #[command(subcommand)]
    pub cmd: PgCmd,
}

#[derive(Subcommand)]
pub enum PgCmd {
    /// Generate PG_m(q) and optionally write it as a hypergraph file.
    Gen {
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long)]
        q: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The Baer subplane of a plane of square order.
    Baer {
        #[arg(long)]
        q: u64,
    },
    /// The cyclic difference-set model, with an isomorphism check against
    /// the field model of the same order.
    DifferenceSet {
        #[arg(long)]
        modulus: u64,
        /// Comma-separated base set, e.g. 3,6,7,12,14.
        #[arg(long)]
        base: String,
        #[arg(long, default_value_t = true)]
        check_iso: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Wedge colouring line-type census over PG_2(q).
    Wedge {
        #[arg(long, default_value_t = 4)]
        q: u64,
        /// Census every valid (x,y,z,w) choice instead of the first.
        #[arg(long)]
        all: bool,
    },
}

#[derive(Args)]
pub struct BlockingArgs {
    /// Plane order; mutually exclusive with --input.
    #[arg(long)]
    pub q: Option<u64>,
    /// A hypergraph file whose edges are the lines.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// List every blocking set in the report (the histogram is always
    /// included).
    #[arg(long)]
    pub list: bool,
}

#[derive(Args)]
pub struct ConstructArgs {
    /// h2 | oddly-bipartite | pg23-improved | roedl | layered-random
    #[arg(long)]
    pub name: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub q: Option<u64>,
    /// Pair densities for layered-random, e.g. 0.5,0.5,0.5.
    #[arg(long)]
    pub d_pairs: Option<String>,
    #[arg(long)]
    pub d_top: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub construction: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub q: Option<u64>,
}

#[derive(Args)]
pub struct SearchArgs {
    #[command(subcommand)]
    pub cmd: SearchCmd,
}

#[derive(Subcommand)]
pub enum SearchCmd {
    /// Injective containment search; emits the certificate as a vertex map.
    Copy {
        #[arg(long)]
        host: PathBuf,
        #[arg(long)]
        pattern: PathBuf,
    },
    /// Randomized local search maximising the minimum s-degree among
    /// pattern-free hypergraphs.
    Hill {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        pattern: PathBuf,
        #[arg(long)]
        s: usize,
        #[arg(long, default_value_t = 4)]
        restarts: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The multicoloured matching / two-point cover dichotomy.
    Matching {
        #[arg(long)]
        g1: PathBuf,
        #[arg(long)]
        g2: PathBuf,
        #[arg(long)]
        g3: PathBuf,
    },
}

#[derive(Args)]
pub struct QrArgs {
    #[command(subcommand)]
    pub cmd: QrCmd,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum ModeArg {
    Exact,
    Mc,
}

#[derive(Subcommand)]
pub enum QrCmd {
    /// Oct of the balanced function of one layer.
    Oct {
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated 1-based part list, e.g. 1,2.
        #[arg(long)]
        index: String,
        #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
        mode: ModeArg,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
    },
    /// Full quasirandomness check of one layer against eta.
    Check {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        index: String,
        #[arg(long)]
        eta: f64,
        #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
        mode: ModeArg,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
    },
    /// The hidden-parameter ladder.
    Ladder {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        f_size: u64,
        /// Set densities as size:value pairs, e.g. 2:0.5,2:0.5,1:1.0.
        #[arg(long)]
        densities: String,
    },
    /// One-sided epsilon-regularity refutation by subset sampling.
    Regular {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "1,2")]
        index: String,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
    },
}

#[derive(Args)]
pub struct CountArgs {
    #[command(subcommand)]
    pub cmd: CountCmd,
}

#[derive(Subcommand)]
pub enum CountCmd {
    /// Homomorphism density over all maps between plain k-graphs.
    Homs {
        #[arg(long)]
        pattern: PathBuf,
        #[arg(long)]
        host: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
        mode: ModeArg,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
    },
    /// Exact injective embedding count.
    Embeddings {
        #[arg(long)]
        pattern: PathBuf,
        #[arg(long)]
        host: PathBuf,
    },
    /// Partite homomorphism density between complexes, with the
    /// counting-lemma prediction.
    Partite {
        #[arg(long)]
        pattern: PathBuf,
        #[arg(long)]
        host: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
        mode: ModeArg,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
    },
}

#[derive(Args)]
pub struct HomComplexArgs {
    #[arg(long)]
    pub pattern: PathBuf,
    #[arg(long)]
    pub host: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
}

#[derive(Args)]
pub struct RegularityArgs {
    #[command(subcommand)]
    pub cmd: RegularityCmd,
}

#[derive(Subcommand)]
pub enum RegularityCmd {
    /// Iterative decomposition loop over a partite k-graph.
    Decompose {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.01)]
        eta: f64,
        #[arg(long, default_value_t = 400)]
        samples: u64,
        #[arg(long, default_value_t = 20)]
        max_iterations: u64,
        /// Write the final partition system to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

// ---------------------------------------------------------------------------

pub fn run(cli: Cli, argv: &[String]) -> i32 {
    let budget_limit = cli
        .budget
        .or_else(|| std::env::var(BUDGET_ENV).ok().and_then(|v| v.parse().ok()))
        .unwrap_or(DEFAULT_BUDGET);
    let config = ConfigEcho {
        seed: cli.seed,
        threads: cli.threads,
        budget: budget_limit,
        format: format!("{:?}", cli.format).to_lowercase(),
    };
    let budget = Budget::new(budget_limit);
    let par = Parallelism::new(cli.threads);
    let start = Instant::now();
    let command = command_name(&cli.cmd);

    let outcome = par.install(|| dispatch(&cli.cmd, cli.seed, budget, &par, cli.format));
    match outcome {
        Ok(CommandOutput {
            payload,
            exit,
            csv,
            text,
        }) => {
            match cli.format {
                Format::Json => {
                    let report = Report {
                        command: command.clone(),
                        argv: argv.to_vec(),
                        config,
                        wall_ms: start.elapsed().as_millis(),
                        result: payload,
                    };
                    crate::report::print_json(&report);
                }
                Format::Csv => match csv {
                    Some(table) => print!("{table}"),
                    None => {
                        let report = Report {
                            command: command.clone(),
                            argv: argv.to_vec(),
                            config,
                            wall_ms: start.elapsed().as_millis(),
                            result: payload,
                        };
                        crate::report::print_json(&report);
                    }
                },
                Format::Text => match text {
                    Some(line) => println!("{line}"),
                    None => println!("{command}: ok"),
                },
            }
            exit
        }
        Err(err) => {
            let exit = match err {
                Error::BudgetExceeded { .. } => 2,
                _ => 1,
            };
            let report = ErrorReport {
                command,
                argv: argv.to_vec(),
                error: err.to_string(),
            };
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("error serialization")
            );
            exit
        }
    }
}

struct CommandOutput {
    payload: serde_json::Value,
    exit: i32,
    csv: Option<String>,
    text: Option<String>,
}

impl CommandOutput {
    fn ok(payload: serde_json::Value) -> Self {
        CommandOutput {
            payload,
            exit: 0,
            csv: None,
            text: None,
        }
    }

    fn with_text(mut self, text: String) -> Self {
        self.text = Some(text);
        self
    }

    fn with_csv(mut self, csv: String) -> Self {
        self.csv = Some(csv);
        self
    }

    fn with_exit(mut self, exit: i32) -> Self {
        self.exit = exit;
        self
    }
}

fn command_name(cmd: &Cmd) -> String {
    match cmd {
        Cmd::Pg(_) => "pg",
        Cmd::Blocking(_) => "blocking",
        Cmd::Construct(_) => "construct",
        Cmd::Certify(_) => "certify",
        Cmd::Search(_) => "search",
        Cmd::Qr(_) => "qr",
        Cmd::Count(_) => "count",
        Cmd::Homcomplex(_) => "homcomplex",
        Cmd::Regularity(_) => "regularity",
    }
    .to_string()
}

fn parse_index(s: &str) -> Result<IndexSet> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .ok()
                .and_then(|p| p.checked_sub(1))
                .ok_or_else(|| Error::Parse(format!("bad index component {t:?}")))
        })
        .collect::<Result<_>>()?;
    Ok(IndexSet::from_parts(&parts))
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<T>()
                .map_err(|_| Error::Parse(format!("bad {what} entry {t:?}")))
        })
        .collect()
}

fn read_graph_file(path: &PathBuf) -> Result<(UniformHypergraph, Option<Vec<usize>>)> {
    let f = File::open(path)?;
    hyperq::read_hypergraph(&mut BufReader::new(f))
}

/// Read either a partite-annotated hypergraph (closed downward) or a
/// complex file.
fn read_complex_file(path: &PathBuf) -> Result<PartiteComplex> {
    let mut content = String::new();
    File::open(path)?.read_to_string(&mut content)?;
    if content.trim_start().starts_with("complex") {
        return read_complex(&mut content.as_bytes());
    }
    let (graph, parts) = hyperq::read_hypergraph(&mut content.as_bytes())?;
    let parts = parts.ok_or_else(|| {
        Error::Parse("input needs a 'parts' annotation to be read as a complex".into())
    })?;
    let ground = PartiteGround::new(parts)?;
    generated_complex(&graph, &ground)
}

fn mode_of(mode: ModeArg, samples: u64, seed: u64) -> EvalMode {
    match mode {
        ModeArg::Exact => EvalMode::Exact,
        ModeArg::Mc => EvalMode::MonteCarlo { samples, seed },
    }
}

fn dispatch(
    cmd: &Cmd,
    seed: u64,
    budget: Budget,
    par: &Parallelism,
    _format: Format,
) -> Result<CommandOutput> {
    match cmd {
        Cmd::Pg(args) => run_pg(&args.cmd, budget, par),
        Cmd::Blocking(args) => run_blocking(args, budget, par),
        Cmd::Construct(args) => run_construct(args, seed, budget, par),
        Cmd::Certify(args) => run_certify(args, budget, par),
        Cmd::Search(args) => run_search(&args.cmd, seed, budget, par),
        Cmd::Qr(args) => run_qr(&args.cmd, seed, budget, par),
        Cmd::Count(args) => run_count(&args.cmd, seed, budget, par),
        Cmd::Homcomplex(args) => run_homcomplex(args, seed, budget, par),
        Cmd::Regularity(args) => run_regularity(&args.cmd, seed, budget, par),
    }
}

fn write_graph_out(
    out: &Option<PathBuf>,
    h: &UniformHypergraph,
    parts: Option<&[usize]>,
) -> Result<Option<String>> {
    match out {
        Some(path) => {
            let f = File::create(path)?;
            hyperq::write_hypergraph(&mut BufWriter::new(f), h, parts)?;
            Ok(Some(path.display().to_string()))
        }
        None => Ok(None),
    }
}

fn run_pg(cmd: &PgCmd, budget: Budget, par: &Parallelism) -> Result<CommandOutput> {
    match cmd {
        PgCmd::Gen { m, q, out } => {
            if *m == 2 {
                let plane = ProjectivePlane::new(*q, budget)?;
                let file = write_graph_out(out, plane.as_hypergraph(), None)?;
                let payload = json!({
                    "m": m, "q": q,
                    "points": plane.point_count(),
                    "lines": plane.line_count(),
                    "line_size": q + 1,
                    "file": file,
                });
                let text = format!(
                    "PG_2({q}): {} points, {} lines",
                    plane.point_count(),
                    plane.line_count()
                );
                Ok(CommandOutput::ok(payload).with_text(text))
            } else {
                let geo = hyperq::pg::pg(*m, *q, budget)?;
                let file = write_graph_out(out, geo.as_hypergraph(), None)?;
                let payload = json!({
                    "m": m, "q": q,
                    "points": geo.point_count(),
                    "lines": geo.line_count(),
                    "line_size": q + 1,
                    "file": file,
                });
                Ok(CommandOutput::ok(payload))
            }
        }
        PgCmd::Baer { q } => {
            let plane = ProjectivePlane::new(*q, budget)?;
            let baer = baer_subplane(&plane)?;
            let payload = json!({
                "q": q,
                "points": baer.points,
                "full_lines": baer.full_lines.len(),
                "tangent_lines": baer.tangent_lines.len(),
                "induced_is_plane": true,
            });
            Ok(CommandOutput::ok(payload))
        }
        PgCmd::DifferenceSet {
            modulus,
            base,
            check_iso,
            out,
        } => {
            let base: Vec<u64> = parse_list(base, "base")?;
            let h = difference_set_plane(*modulus, &base)?;
            let file = write_graph_out(out, &h, None)?;
            let iso = if *check_iso {
                let q = base.len() as u64 - 1;
                let plane = ProjectivePlane::new(q, budget)?;
                iso_check(&h, plane.as_hypergraph(), budget, par)?
                    .map(|m| m.iter().map(|&v| v as usize).collect::<Vec<_>>())
            } else {
                None
            };
            let payload = json!({
                "modulus": modulus,
                "base": base,
                "translates": h.edge_count(),
                "isomorphic_to_field_model": iso.is_some(),
                "bijection": iso,
                "file": file,
            });
            Ok(CommandOutput::ok(payload))
        }
        PgCmd::Wedge { q, all } => {
            let plane = ProjectivePlane::new(*q, budget)?;
            let n = plane.point_count() as Vertex;
            let mut censuses: Vec<(Vec<Vertex>, BTreeMap<String, u64>)> = Vec::new();
            'outer: for x in 0..n {
                for y in 0..n {
                    for z in 0..n {
                        if x == y || y == z || x == z || plane.collinear(x, y, z) {
                            continue;
                        }
                        let line = &plane.lines()[plane.line_through(y, z) as usize];
                        for &w in line {
                            if w == y || w == z {
                                continue;
                            }
                            let wedge = wedge_colouring(&plane, x, y, z, w)?;
                            let census = line_type_census(&plane, &wedge.c0);
                            let named: BTreeMap<String, u64> = census
                                .into_iter()
                                .map(|((c0, c1), count)| (format!("C0^{c0}C1^{c1}"), count))
                                .collect();
                            censuses.push((vec![x, y, z, w], named));
                            if !all {
                                break 'outer;
                            }
                        }
                    }
                }
            }
            let all_equal = censuses.windows(2).all(|w| w[0].1 == w[1].1);
            let csv = {
                let mut t = String::from("type,count\n");
                for (ty, count) in &censuses[0].1 {
                    t.push_str(&format!("{ty},{count}\n"));
                }
                t
            };
            let payload = json!({
                "q": q,
                "choices_examined": censuses.len(),
                "census": censuses[0].1,
                "census_independent_of_choice": all_equal,
            });
            Ok(CommandOutput::ok(payload).with_csv(csv))
        }
    }
}

fn run_blocking(args: &BlockingArgs, budget: Budget, par: &Parallelism) -> Result<CommandOutput> {
    let report;
    let label;
    match (&args.q, &args.input) {
        (Some(q), None) => {
            let plane = ProjectivePlane::new(*q, budget)?;
            report = blocking_sets(&plane, budget, par)?;
            label = format!("PG_2({q})");
        }
        (None, Some(path)) => {
            let (h, _) = read_graph_file(path)?;
            // The file's edges are the lines of an abstract line system.
            report = hyperq::pg::blocking_sets_of_lines(h.n(), h.edges(), budget, par)?;
            label = path.display().to_string();
        }
        _ => {
            return Err(Error::Parse(
                "blocking needs exactly one of --q or --input".into(),
            ))
        }
    }
    let histogram: BTreeMap<String, u64> = report
        .histogram
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .collect();
    let sets: Option<Vec<Vec<Vertex>>> = if args.list {
        Some(report.sets.iter().map(|&m| report.set_members(m)).collect())
    } else {
        None
    };
    let csv = {
        let mut t = String::from("size,count\n");
        for (k, v) in &report.histogram {
            t.push_str(&format!("{k},{v}\n"));
        }
        t
    };
    let payload = json!({
        "plane": label,
        "blocking_sets": report.sets.len(),
        "histogram": histogram,
        "complement_closed": report.complement_closed,
        "sets": sets,
    });
    Ok(CommandOutput::ok(payload).with_csv(csv))
}

fn run_construct(
    args: &ConstructArgs,
    seed: u64,
    _budget: Budget,
    _par: &Parallelism,
) -> Result<CommandOutput> {
    if args.name == "layered-random" {
        let d_pairs: Vec<f64> = parse_list(
            args.d_pairs
                .as_deref()
                .ok_or_else(|| Error::Parse("layered-random needs --d-pairs".into()))?,
            "density",
        )?;
        if d_pairs.len() != 3 {
            return Err(Error::Parse("--d-pairs needs three densities".into()));
        }
        let d_top = args
            .d_top
            .ok_or_else(|| Error::Parse("layered-random needs --d-top".into()))?;
        let c = layered_random_complex(args.n, [d_pairs[0], d_pairs[1], d_pairs[2]], d_top, seed)?;
        let file = match &args.out {
            Some(path) => {
                let f = File::create(path)?;
                write_complex(&mut BufWriter::new(f), &c)?;
                Some(path.display().to_string())
            }
            None => None,
        };
        let top = IndexSet::from_parts(&[0, 1, 2]);
        let payload = json!({
            "name": "layered-random",
            "n_per_part": args.n,
            "seed": seed,
            "top_tuples": c.layer_count(&top),
            "top_relative_density": Value::Exact(c.relative_density(&top)?),
            "file": file,
        });
        return Ok(CommandOutput::ok(payload));
    }
    let desc = ConstructionDescriptor::parse(&args.name, args.n, args.q, seed)?;
    let h = desc.generate()?;
    let parts = desc.parts();
    let file = write_graph_out(&args.out, &h, parts.as_deref())?;
    let payload = json!({
        "construction": desc,
        "vertices": h.n(),
        "edges": h.edge_count(),
        "parts": parts,
        "degree_claim": desc.degree_claim().map(|(s, v)| json!({"s": s, "claimed": v})),
        "file": file,
    });
    Ok(CommandOutput::ok(payload))
}

fn run_certify(args: &CertifyArgs, budget: Budget, par: &Parallelism) -> Result<CommandOutput> {
    let desc = ConstructionDescriptor::parse(&args.construction, args.n, args.q, 0)?;
    let report = hyperq::constructions::certify_construction(&desc, budget, par)?;
    let exit = if report.freeness.verdict == "budget-exhausted" {
        2
    } else {
        0
    };
    let text = format!(
        "{}: degree {} freeness {}",
        args.construction,
        report
            .degree
            .as_ref()
            .map(|d| format!("δ_{} = {} (claimed {})", d.s, d.measured, d.claimed))
            .unwrap_or_else(|| "-".into()),
        report.freeness.verdict
    );
    Ok(CommandOutput::ok(serde_json::to_value(&report).unwrap())
        .with_exit(exit)
        .with_text(text))
}

fn run_search(
    cmd: &SearchCmd,
    seed: u64,
    budget: Budget,
    par: &Parallelism,
) -> Result<CommandOutput> {
    match cmd {
        SearchCmd::Copy { host, pattern } => {
            let (h, _) = read_graph_file(host)?;
            let (p, _) = read_graph_file(pattern)?;
            let cert = hyperq::contains_copy(&h, &p, budget, par)?;
            let (verdict, map, exit) = match &cert.verdict {
                SearchVerdict::Embedding(m) => (
                    "found",
                    Some(m.iter().map(|&v| v as usize).collect::<Vec<_>>()),
                    0,
                ),
                SearchVerdict::NoCopy => ("no-copy", None, 0),
                SearchVerdict::BudgetExhausted => ("budget-exhausted", None, 2),
            };
            let payload = json!({
                "verdict": verdict,
                "map": map,
                "stats": { "nodes_expanded": cert.nodes_expanded },
            });
            Ok(CommandOutput::ok(payload).with_exit(exit))
        }
        SearchCmd::Hill {
            n,
            pattern,
            s,
            restarts,
            out,
        } => {
            let (p, _) = read_graph_file(pattern)?;
            let outcome = hill_climb_codegree(*n, &p, *s, *restarts, seed, budget, par)?;
            let file = write_graph_out(out, &outcome.best, None)?;
            let payload = json!({
                "n": n,
                "s": s,
                "delta_s": outcome.delta_s,
                "edges": outcome.best.edge_count(),
                "certified_free": outcome.certified_free,
                "restarts": outcome.restarts,
                "iterations_per_restart": outcome.iterations_per_restart,
                "file": file,
            });
            Ok(CommandOutput::ok(payload))
        }
        SearchCmd::Matching { g1, g2, g3 } => {
            let (a, _) = read_graph_file(g1)?;
            let (b, _) = read_graph_file(g2)?;
            let (c, _) = read_graph_file(g3)?;
            let outcome = multicolour_matching(&a, &b, &c)?;
            Ok(CommandOutput::ok(serde_json::to_value(&outcome).unwrap()))
        }
    }
}

fn run_qr(cmd: &QrCmd, seed: u64, budget: Budget, par: &Parallelism) -> Result<CommandOutput> {
    match cmd {
        QrCmd::Oct {
            input,
            index,
            mode,
            samples,
        } => {
            let c = read_complex_file(input)?;
            let a = parse_index(index)?;
            let value = match mode {
                ModeArg::Exact => {
                    let oct = hyperq::gowers::oct_balanced_exact(&c, &a, budget, par)?;
                    Value::Exact(
                        hyperq::Density::from_ratio(oct)
                            .map_err(|_| Error::Internal("negative Oct".into()))?,
                    )
                }
                ModeArg::Mc => {
                    let f = balanced_function(&c, &a)?;
                    Value::Estimate(hyperq::gowers::oct_mc(&f, *samples, seed, par)?)
                }
            };
            let payload = json!({ "index": a.members().iter().map(|p| p + 1).collect::<Vec<_>>(), "oct": value });
            Ok(CommandOutput::ok(payload))
        }
        QrCmd::Check {
            input,
            index,
            eta,
            mode,
            samples,
        } => {
            let c = read_complex_file(input)?;
            let a = parse_index(index)?;
            let report =
                quasirandom_check(&c, &a, *eta, mode_of(*mode, *samples, seed), budget, par)?;
            Ok(CommandOutput::ok(serde_json::to_value(&report).unwrap()))
        }
        QrCmd::Ladder {
            epsilon,
            k,
            f_size,
            densities,
        } => {
            let set_densities: Vec<(usize, f64)> = densities
                .split(',')
                .map(|pair| {
                    let mut it = pair.split(':');
                    let size = it
                        .next()
                        .and_then(|t| t.trim().parse().ok())
                        .ok_or_else(|| Error::Parse(format!("bad density pair {pair:?}")))?;
                    let d = it
                        .next()
                        .and_then(|t| t.trim().parse().ok())
                        .ok_or_else(|| Error::Parse(format!("bad density pair {pair:?}")))?;
                    Ok((size, d))
                })
                .collect::<Result<_>>()?;
            let ladder = hidden_parameters(*epsilon, *k, *f_size, &set_densities)?;
            let payload = json!({
                "ladder": ladder,
                "strictly_decreasing": ladder.is_strictly_decreasing(),
            });
            Ok(CommandOutput::ok(payload))
        }
        QrCmd::Regular {
            input,
            index,
            epsilon,
            trials,
        } => {
            let c = read_complex_file(input)?;
            let a = parse_index(index)?;
            let est = epsilon_regular_estimate(&c, &a, *epsilon, *trials, seed, par)?;
            Ok(CommandOutput::ok(serde_json::to_value(&est).unwrap()))
        }
    }
}

fn run_count(
    cmd: &CountCmd,
    seed: u64,
    budget: Budget,
    par: &Parallelism,
) -> Result<CommandOutput> {
    match cmd {
        CountCmd::Homs {
            pattern,
            host,
            mode,
            samples,
        } => {
            let (p, _) = read_graph_file(pattern)?;
            let (h, _) = read_graph_file(host)?;
            let value = match mode {
                ModeArg::Exact => {
                    Value::Exact(hyperq::counting::hom_density_exact(&p, &h, budget, par)?)
                }
                ModeArg::Mc => Value::Estimate(hyperq::counting::hom_density_mc(
                    &p, &h, *samples, seed, par,
                )?),
            };
            Ok(CommandOutput::ok(json!({ "hom_density": value })))
        }
        CountCmd::Embeddings { pattern, host } => {
            let (p, _) = read_graph_file(pattern)?;
            let (h, _) = read_graph_file(host)?;
            let count = hyperq::count_embeddings(&h, &p, budget, par)?;
            Ok(CommandOutput::ok(
                json!({ "embeddings": count.to_string() }),
            ))
        }
        CountCmd::Partite {
            pattern,
            host,
            mode,
            samples,
        } => {
            let p = read_complex_file(pattern)?;
            let h = read_complex_file(host)?;
            let out = hyperq::counting::partite_hom_density(
                &p,
                &h,
                mode_of(*mode, *samples, seed),
                budget,
                par,
            )?;
            let payload = json!({
                "measured": out.measured,
                "predicted": Value::Exact(out.predicted),
            });
            Ok(CommandOutput::ok(payload))
        }
    }
}

fn run_homcomplex(
    args: &HomComplexArgs,
    seed: u64,
    budget: Budget,
    par: &Parallelism,
) -> Result<CommandOutput> {
    let j = read_complex_file(&args.pattern)?;
    let g = read_complex_file(&args.host)?;
    let rows = hyperq::homcomplex::hom_complex_density_report(
        &j,
        &g,
        mode_of(args.mode, args.samples, seed),
        budget,
        par,
    )?;
    #[derive(Serialize)]
    struct Row {
        index: Vec<usize>,
        measured: Value,
        predicted: Value,
    }
    let rows_json: Vec<Row> = rows
        .into_iter()
        .map(|r| Row {
            index: r.index.members().iter().map(|p| p + 1).collect(),
            measured: r.measured,
            predicted: Value::Exact(r.predicted),
        })
        .collect();
    let csv = {
        let mut t = String::from("index,measured,predicted\n");
        for r in &rows_json {
            let idx: Vec<String> = r.index.iter().map(|p| p.to_string()).collect();
            t.push_str(&format!(
                "{},{},{}\n",
                idx.join("+"),
                r.measured.as_f64(),
                r.predicted.as_f64()
            ));
        }
        t
    };
    Ok(CommandOutput::ok(json!({ "rows": rows_json })).with_csv(csv))
}

fn run_regularity(
    cmd: &RegularityCmd,
    seed: u64,
    _budget: Budget,
    par: &Parallelism,
) -> Result<CommandOutput> {
    match cmd {
        RegularityCmd::Decompose {
            input,
            epsilon,
            eta,
            samples,
            max_iterations,
            out,
        } => {
            let (h, parts) = read_graph_file(input)?;
            let parts = parts.ok_or_else(|| {
                Error::Parse("decompose needs a partite-annotated hypergraph".into())
            })?;
            let ground = PartiteGround::new(parts)?;
            let mut params = DecomposeParams::new(h.k(), *epsilon, seed);
            params.eta = vec![*eta; h.k() + 1];
            params.anchor_samples = *samples;
            params.max_iterations = *max_iterations;
            let outcome = decompose(&h, &ground, &params, par)?;
            let file = match out {
                Some(path) => {
                    let f = File::create(path)?;
                    write_partition_system(&mut BufWriter::new(f), &outcome.system)?;
                    Some(path.display().to_string())
                }
                None => None,
            };
            let cells: BTreeMap<String, u32> = outcome
                .system
                .indices()
                .map(|a| {
                    let name = a
                        .members()
                        .iter()
                        .map(|p| (p + 1).to_string())
                        .collect::<Vec<_>>()
                        .join(",");
                    (name, outcome.system.level(&a).cell_count)
                })
                .collect();
            let payload = json!({
                "status": outcome.status,
                "iterations": outcome.iterations,
                "history": outcome.history,
                "ledger": outcome.ledger,
                "cells": cells,
                "file": file,
            });
            let exit = if outcome.status == hyperq::regularity::DecomposeStatus::Capped {
                2
            } else {
                0
            };
            Ok(CommandOutput::ok(payload).with_exit(exit))
        }
    }
}
