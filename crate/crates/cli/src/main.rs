//! Command-line front end: embed sets, evaluate norms and gaps, audit
//! distortion exhaustively or by seeded sampling, classify ordinal
//! intervals, run packing-certificate traces, and reproduce the
//! verification suite.
//!
//! Exit codes: 0 when the requested bounds hold, 1 when a measured bound
//! or claim fails (the violating witness is printed), 2 on usage, parse,
//! or domain errors.

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_rational::Rational64;

use cubetree::audit::{
    aharoni_trace, measure_distortion, sample_distortion, DistortionReport, FiniteEmbedding,
    SampleConfig, TraceOutcome,
};
use cubetree::embeddings::{
    EmbedOptions, EmbeddingSpec, Engine, Thresholds, DEFAULT_NODE_BUDGET,
};
use cubetree::hamming::{distance, Point, Universe};
use cubetree::ordinals::{cb_index, derivative_chain, node_to_ordinal, DerivedSpace, Ordinal};
use cubetree::rational::{format_ratio, parse_ratio};
use cubetree::suite::{self, SuiteConfig};
use cubetree::treespace::{NodePath, SparseVector};
use cubetree::Error;

const BUDGET_ENV: &str = "CUBETREE_NODE_BUDGET";
const WORKERS_ENV: &str = "CUBETREE_WORKERS";

#[derive(Parser)]
#[command(
    name = "cubetree",
    version,
    about = "Exact embeddings of Hamming-cube segments into tree-space norms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Print the embedded image of a set under a spec
    Embed {
        /// Embedding spec: finite:CAP,HEIGHT | schreier | ai:P/Q
        #[arg(long)]
        spec: String,
        /// Comma-separated elements; empty string for the empty set
        #[arg(long, default_value = "")]
        set: String,
        /// Explicit admissibility thresholds "0,N1,N2,..." (ai specs)
        #[arg(long)]
        thresholds: Option<String>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Node budget override (also via CUBETREE_NODE_BUDGET)
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Print the image-difference norm and the distance of a pair
    Gap {
        #[arg(long)]
        spec: String,
        #[arg(long, default_value = "")]
        a: String,
        #[arg(long, default_value = "")]
        b: String,
        #[arg(long)]
        thresholds: Option<String>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Evaluate the norm of a serialized sparse vector (path or '-')
    Norm {
        #[arg(long)]
        input: String,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Sweep pairs, report exact distortion extrema, check the bounds
    Audit {
        #[arg(long)]
        spec: String,
        /// Stratum size for exhaustive sweeps (defaults to the spec's cap)
        #[arg(long)]
        k: Option<u32>,
        /// Universe size for exhaustive finite-rank sweeps
        #[arg(long)]
        n: Option<u32>,
        /// Largest element: Schreier universe, or sampled element range
        #[arg(long)]
        max_element: Option<u32>,
        /// Number of sampled pairs (switches to a seeded sampled sweep)
        #[arg(long, requires = "seed")]
        pairs: Option<u64>,
        /// Seed for sampled sweeps (required with --pairs)
        #[arg(long)]
        seed: Option<u64>,
        /// Cap on sampled set sizes
        #[arg(long)]
        max_size: Option<u32>,
        #[arg(long)]
        thresholds: Option<String>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Write the report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (also via CUBETREE_WORKERS)
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Cantor-Bendixson index and derivative chain of an ordinal interval
    Cb {
        /// Ordinal in normal-form text, e.g. "w^2*3 + w + 4" or "w^w"
        ordinal: Option<String>,
        /// Print the ordinal of a tree node instead: "HEIGHT:PATH",
        /// e.g. "2:" for the root or "3:1,4"
        #[arg(long)]
        node: Option<String>,
    },
    /// Run the packing-certificate trace against a claimed constant
    Trace {
        /// JSON file with {"points": [...], "images": [...]}
        #[arg(long)]
        input: PathBuf,
        /// The claimed constant, e.g. "3/2"
        #[arg(long)]
        c: String,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Run the verification suite and print the pass/fail matrix
    Verify {
        /// Directory for report artifacts
        #[arg(long, default_value = "reports")]
        report_dir: PathBuf,
        /// Run a single criterion by id
        #[arg(long)]
        criterion: Option<u32>,
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Embed {
            spec,
            set,
            thresholds,
            format,
            budget,
        } => {
            let spec = parse_spec(&spec, thresholds.as_deref())?;
            let point = Point::parse(&set)?;
            let engine = Engine::new(spec, embed_options(budget)?)?;
            let image = engine.embed_set(&point)?;
            match format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&image).unwrap()),
                _ => {
                    if image.is_zero() {
                        println!("0");
                    }
                    for run in image.runs() {
                        let (lo, hi) = run.heights();
                        if lo == hi {
                            println!("height {lo}:");
                        } else {
                            println!("heights {lo}..{hi}:");
                        }
                        for (path, coeff) in run.vector().terms() {
                            println!("  {path}: {coeff:+}");
                        }
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Gap {
            spec,
            a,
            b,
            thresholds,
            format,
            budget,
        } => {
            let spec = parse_spec(&spec, thresholds.as_deref())?;
            let (a, b) = (Point::parse(&a)?, Point::parse(&b)?);
            let engine = Engine::new(spec, embed_options(budget)?)?;
            let gap = engine.pair_gap(&a, &b)?;
            let dist = distance(&a, &b);
            match format {
                Format::Json => {
                    println!("{}", serde_json::json!({ "gap": gap, "distance": dist }))
                }
                _ => {
                    println!("gap      = {gap}");
                    println!("distance = {dist}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Norm { input, format } => {
            let text = read_input(&input)?;
            let vector: SparseVector = serde_json::from_str(&text)
                .map_err(|e| Error::Parse(format!("bad sparse vector: {e}")))?;
            let norm = vector.norm()?;
            match format {
                Format::Json => println!("{}", serde_json::json!({ "norm": norm })),
                _ => println!("norm = {norm}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Audit {
            spec,
            k,
            n,
            max_element,
            pairs,
            seed,
            max_size,
            thresholds,
            format,
            out,
            workers,
            budget,
        } => {
            let spec = parse_spec(&spec, thresholds.as_deref())?;
            let options = embed_options(budget)?;
            let pool = worker_pool(workers)?;
            let run_audit = || -> Result<(DistortionReport, String, usize), Error> {
                if let Some(pairs) = pairs {
                    let config = SampleConfig {
                        seed: seed.expect("clap enforces --seed with --pairs"),
                        pairs,
                        max_element: max_element.unwrap_or(15),
                        max_size,
                    };
                    let report = sample_distortion(&spec, &config, options)?;
                    let label = format!(
                        "{spec}/sampled(seed={},pairs={},max={})",
                        config.seed, config.pairs, config.max_element
                    );
                    Ok((report, label, 0))
                } else {
                    let (stratum, universe) = match &spec {
                        EmbeddingSpec::FiniteRank { set_cap, .. } => {
                            let n = n.ok_or_else(|| {
                                Error::InvalidArgument(
                                    "exhaustive finite-rank audits need --n".into(),
                                )
                            })?;
                            (k.unwrap_or(*set_cap), Universe::new(n))
                        }
                        EmbeddingSpec::Schreier => {
                            let m = max_element.ok_or_else(|| {
                                Error::InvalidArgument(
                                    "Schreier audits need --max-element".into(),
                                )
                            })?;
                            (k.unwrap_or(m), Universe::new(m))
                        }
                        EmbeddingSpec::AlmostIsometric { .. } => {
                            return Err(Error::InvalidArgument(
                                "almost-isometric audits are sampled; pass --pairs and --seed"
                                    .into(),
                            ));
                        }
                    };
                    let points = cubetree::audit::domain_points(&spec, stratum, universe)?;
                    let report = measure_distortion(&spec, stratum, universe, options)?;
                    let label = format!("{spec}/k={stratum},n={}", universe.n);
                    Ok((report, label, points.len()))
                }
            };
            let (report, label, points) = match &pool {
                Some(pool) => pool.install(run_audit),
                None => run_audit(),
            }?;

            let rendered = match format {
                Format::Json => serde_json::to_string_pretty(&report).unwrap(),
                Format::Csv => format!(
                    "{}\n{}",
                    DistortionReport::csv_header(),
                    report.csv_row(&label, points)
                ),
                Format::Text => render_report_text(&label, &report),
            };
            match out {
                Some(path) => std::fs::write(&path, rendered + "\n")
                    .map_err(|e| Error::ReportIo(format!("{}: {e}", path.display())))?,
                None => println!("{rendered}"),
            }

            if let Some(violation) = bound_violation(&spec, &report) {
                eprintln!("bound violated: {violation}");
                return Ok(ExitCode::from(1));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Cb { ordinal, node } => {
            if let Some(node) = node {
                let (height, path) = node.split_once(':').ok_or_else(|| {
                    Error::Parse("node form is HEIGHT:PATH, e.g. 2: or 3:1,4".into())
                })?;
                let height: u32 = height
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad height {height:?}")))?;
                let path = NodePath::parse(path)?;
                println!("{}", node_to_ordinal(height, &path)?);
                return Ok(ExitCode::SUCCESS);
            }
            let Some(ordinal) = ordinal else {
                return Err(Error::Parse(
                    "pass an ordinal like \"w^2*3\" or --node HEIGHT:PATH".into(),
                ));
            };
            let top: Ordinal = ordinal.parse()?;
            let space = DerivedSpace::interval(top)?;
            println!("index = {}", cb_index(&space));
            match derivative_chain(&space) {
                Ok(chain) => {
                    let rendered: Vec<String> = chain.iter().map(|s| s.to_string()).collect();
                    println!("chain = {}", rendered.join(" -> "));
                }
                Err(Error::TopIntervalDerivative) => {
                    println!("chain = (transfinite; single steps are refused on the top interval)");
                }
                Err(other) => return Err(other),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Trace { input, c, format } => {
            let text = std::fs::read_to_string(&input)
                .map_err(|e| Error::ReportIo(format!("{}: {e}", input.display())))?;
            let embedding: FiniteEmbedding = serde_json::from_str(&text)
                .map_err(|e| Error::Parse(format!("bad finite embedding: {e}")))?;
            let claimed = parse_ratio(&c)?;
            let report = aharoni_trace(&embedding, claimed)?;
            match format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&report).unwrap()),
                _ => render_trace_text(&report),
            }
            let code = match report.outcome {
                TraceOutcome::Inconclusive => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
            Ok(code)
        }
        Command::Verify {
            report_dir,
            criterion,
            workers,
        } => {
            let config = SuiteConfig {
                artifact_dir: report_dir,
            };
            let pool = worker_pool(workers)?;
            let run_suite = || match criterion {
                Some(id) => suite::run_criterion(id, &config)
                    .map(|outcome| vec![outcome])
                    .ok_or_else(|| {
                        Error::InvalidArgument(format!(
                            "no criterion {id}; known ids are {:?}",
                            suite::criterion_ids()
                        ))
                    }),
                None => Ok(suite::run_all(&config)),
            };
            let outcomes = match &pool {
                Some(pool) => pool.install(run_suite),
                None => run_suite(),
            }?;
            for outcome in &outcomes {
                println!("{}", outcome.render());
            }
            let failures = outcomes.iter().filter(|o| !o.passed).count();
            if failures > 0 {
                eprintln!("{failures} criterion(s) failed");
                Ok(ExitCode::from(1))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }
    }
}

/// Spec grammar: `finite:CAP,HEIGHT`, `schreier`, or `ai:P/Q`; explicit
/// thresholds may accompany an `ai` spec.
fn parse_spec(text: &str, thresholds: Option<&str>) -> Result<EmbeddingSpec, Error> {
    let text = text.trim();
    if text == "schreier" {
        return Ok(EmbeddingSpec::Schreier);
    }
    if let Some(args) = text.strip_prefix("finite:") {
        let (cap, height) = args
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("finite spec needs CAP,HEIGHT, got {args:?}")))?;
        let cap: u32 = cap
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad set cap {cap:?}")))?;
        let height: u32 = height
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad height {height:?}")))?;
        return EmbeddingSpec::finite_rank(cap, height);
    }
    if let Some(eps) = text.strip_prefix("ai:") {
        let epsilon = parse_ratio(eps)?;
        let thresholds = match thresholds {
            None => Thresholds::Smallest,
            Some(list) => {
                let seq = list
                    .split(',')
                    .map(|piece| {
                        piece
                            .trim()
                            .parse::<u64>()
                            .map_err(|_| Error::Parse(format!("bad threshold {piece:?}")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Thresholds::Explicit(seq)
            }
        };
        return EmbeddingSpec::almost_isometric(epsilon, thresholds);
    }
    Err(Error::Parse(format!(
        "unknown spec {text:?}; use finite:CAP,HEIGHT, schreier, or ai:P/Q"
    )))
}

fn embed_options(budget_flag: Option<u64>) -> Result<EmbedOptions, Error> {
    let from_env = match std::env::var(BUDGET_ENV) {
        Ok(value) => Some(
            value
                .parse::<u64>()
                .map_err(|_| Error::Parse(format!("bad {BUDGET_ENV} value {value:?}")))?,
        ),
        Err(_) => None,
    };
    Ok(EmbedOptions {
        node_budget: budget_flag.or(from_env).unwrap_or(DEFAULT_NODE_BUDGET),
    })
}

fn worker_pool(workers_flag: Option<usize>) -> Result<Option<rayon::ThreadPool>, Error> {
    let from_env = match std::env::var(WORKERS_ENV) {
        Ok(value) => Some(
            value
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad {WORKERS_ENV} value {value:?}")))?,
        ),
        Err(_) => None,
    };
    match workers_flag.or(from_env) {
        None => Ok(None),
        Some(workers) => rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map(Some)
            .map_err(|e| Error::InvalidArgument(format!("cannot build worker pool: {e}"))),
    }
}

fn read_input(source: &str) -> Result<String, Error> {
    if source == "-" {
        let mut text = String::new();
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| Error::ReportIo(format!("stdin: {e}")))?;
        Ok(text)
    } else {
        std::fs::read_to_string(source).map_err(|e| Error::ReportIo(format!("{source}: {e}")))
    }
}

fn render_report_text(label: &str, report: &DistortionReport) -> String {
    let witness = |w: &Option<(Point, Point)>| match w {
        Some((a, b)) => format!("{a}, {b}"),
        None => "-".into(),
    };
    format!(
        "audit {label}\n\
         pairs checked   = {}\n\
         max expansion   = {}  at {}\n\
         max contraction = {}  at {}\n\
         distortion      = {}",
        report.pairs_checked,
        format_ratio(report.max_expansion),
        witness(&report.expansion_witness),
        format_ratio(report.max_contraction),
        witness(&report.contraction_witness),
        format_ratio(report.distortion),
    )
}

fn render_trace_text(report: &cubetree::audit::TraceReport) {
    println!("claimed constant = {}", format_ratio(report.claimed));
    println!("separation eta   = {}", format_ratio(report.eta));
    println!(
        "witness coords   = {:?} (dim {})",
        report.witness_coords,
        report.witness_coords.len()
    );
    println!("singletons >= 3  = {:?}", report.singletons);
    println!("packing bound    = {}", report.packing_bound);
    if let Some(norm) = &report.max_restricted_norm {
        println!("restricted norm  = {}/{}", norm.num, norm.den);
    }
    if let Some(sep) = &report.min_restricted_separation {
        println!("restricted sep   = {}/{}", sep.num, sep.den);
    }
    match &report.outcome {
        TraceOutcome::Contradiction => println!(
            "outcome: CONTRADICTION ({} singletons exceed the bound {})",
            report.singletons.len(),
            report.packing_bound
        ),
        TraceOutcome::Inconclusive => println!(
            "outcome: INCONCLUSIVE ({} singletons within the bound {})",
            report.singletons.len(),
            report.packing_bound
        ),
        TraceOutcome::LowerBoundViolation {
            a,
            b,
            image_gap,
            distance,
        } => println!(
            "outcome: LOWER BOUND VIOLATION at ({a}, {b}): image gap {} below distance {distance}",
            format_ratio(*image_gap)
        ),
    }
}

/// The bound each family must satisfy; a violation is reported with its
/// witness and drives exit code 1.
fn bound_violation(spec: &EmbeddingSpec, report: &DistortionReport) -> Option<String> {
    let one = Rational64::from_integer(1);
    let witness = |w: &Option<(Point, Point)>| match w {
        Some((a, b)) => format!("{a}, {b}"),
        None => "-".into(),
    };
    if report.max_expansion > one {
        return Some(format!(
            "expansion {} above 1 at {}",
            format_ratio(report.max_expansion),
            witness(&report.expansion_witness)
        ));
    }
    match spec {
        EmbeddingSpec::FiniteRank { set_cap, height } => {
            let cap = Rational64::new(*set_cap as i64, *height as i64);
            if report.max_contraction > cap {
                return Some(format!(
                    "contraction {} above {} at {}",
                    format_ratio(report.max_contraction),
                    format_ratio(cap),
                    witness(&report.contraction_witness)
                ));
            }
        }
        EmbeddingSpec::Schreier => {
            if report.max_contraction != one || report.max_expansion != one {
                return Some(format!(
                    "isometry broken: contraction {} at {}",
                    format_ratio(report.max_contraction),
                    witness(&report.contraction_witness)
                ));
            }
        }
        EmbeddingSpec::AlmostIsometric { epsilon, .. } => {
            let cap = one / (one - *epsilon);
            if report.max_contraction > cap {
                return Some(format!(
                    "contraction {} above 1/(1-eps) = {} at {}",
                    format_ratio(report.max_contraction),
                    format_ratio(cap),
                    witness(&report.contraction_witness)
                ));
            }
        }
    }
    None
}
