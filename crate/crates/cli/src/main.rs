use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use truthcascade::analysis;
use truthcascade::experiment::{
    run_experiment, run_table, write_cells, write_json, ExperimentConfig, GraphSpec, OutputFormat, TableId,
    TableOptions,
};
use truthcascade::graph::{connected_components, degree_stats};
use truthcascade::{Error, Model, Result, Strategy};

#[derive(Parser)]
#[command(name = "truthcascade", version, about = "Sequential truth learning on networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one (graph, ordering, model) cell.
    Run(RunArgs),
    /// Reproduce one of the published tables.
    Table(TableArgs),
    /// Evaluate a closed-form bound or describe a graph.
    Analyze {
        #[command(subcommand)]
        what: Analyze,
    },
}

#[derive(Args)]
struct Output {
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
    /// Write to a file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to all cores. Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct GraphArgs {
    /// er, pa, grid, butterfly, complete, empty or edge-list.
    #[arg(long)]
    graph: String,
    /// Family parameter, e.g. `n=1000` or `p=0.01`. Repeatable.
    #[arg(long = "graph-param", value_name = "K=V")]
    graph_params: Vec<String>,
    #[arg(long, value_name = "PATH")]
    edge_list: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// random, arrival, bottom-up, spiral, grid-loglog, two-neighbors,
    /// high-value or aggregator.
    #[arg(long, default_value = "random")]
    ordering: String,
    /// Ordering parameter, e.g. `m=30`. Repeatable.
    #[arg(long = "ordering-param", value_name = "K=V")]
    ordering_params: Vec<String>,
    #[arg(long, default_value = "majority")]
    model: String,
    #[arg(long, default_value_t = 0.7)]
    q: f64,
    #[arg(long, default_value_t = 300)]
    trials: usize,
    #[arg(long, env = "TRUTHCASCADE_SEED", default_value_t = 0)]
    seed: u64,
    /// Draw a fresh ordering every trial. Defaults to on for randomized
    /// orderings and off otherwise.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    resample_ordering: Option<bool>,
    /// Attach closed-form comparisons (JSON output).
    #[arg(long)]
    compare: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct TableArgs {
    /// T1 to T6.
    table: String,
    #[arg(long, env = "TRUTHCASCADE_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 300)]
    trials: usize,
    /// email-univ edge list for T6.
    #[arg(long, env = "TRUTHCASCADE_EMAIL_UNIV", value_name = "PATH")]
    email_univ: Option<PathBuf>,
    #[arg(long)]
    compare: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Subcommand)]
enum Analyze {
    /// Multiplicative Chernoff bounds for Bin(n, p).
    Chernoff {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        delta: f64,
    },
    /// Aggregator success lower bound with `s` guinea pigs.
    Aggregation {
        #[arg(long)]
        s: u64,
        #[arg(long, default_value_t = 0.7)]
        q: f64,
    },
    /// Per-depth butterfly rates under bottom-up majority voting.
    Butterfly {
        #[arg(long, default_value_t = 0.7)]
        q: f64,
        #[arg(long)]
        depth: usize,
    },
    /// Random-ordering ceiling for a given average degree.
    Sparse {
        #[arg(long)]
        avg_degree: f64,
        #[arg(long, default_value_t = 0.7)]
        q: f64,
    },
    /// Giant component fraction of G(n, p).
    Giant {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        p: f64,
    },
    /// Expected isolated vertices of G(n, p).
    Isolated {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        p: f64,
    },
    /// Degree and component statistics of a graph.
    Graph {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, env = "TRUTHCASCADE_SEED", default_value_t = 0)]
        seed: u64,
    },
}

fn parse_pairs(flag: &str, raw: &[String]) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for item in raw {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Config {
                field: flag.to_string(),
                reason: format!("expected K=V, got `{item}`"),
            })?;
        if out.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(Error::Config {
                field: format!("{flag} {k}"),
                reason: "given more than once".to_string(),
            });
        }
    }
    Ok(out)
}

fn graph_spec(args: &GraphArgs) -> Result<GraphSpec> {
    let params = parse_pairs("graph-param", &args.graph_params)?;
    GraphSpec::from_params(&args.graph, &params, args.edge_list.clone())
}

fn strategy(name: &str, raw: &[String]) -> Result<Strategy> {
    let mut params = parse_pairs("ordering-param", raw)?;
    let bad_m = |v: &str| Error::Config {
        field: "ordering-param m".to_string(),
        reason: format!("cannot parse `{v}`"),
    };
    let mut s: Strategy = name.parse()?;
    match &mut s {
        Strategy::HighValue { m } => {
            if let Some(v) = params.remove("m") {
                *m = v.parse().map_err(|_| bad_m(&v))?;
            }
        }
        Strategy::Aggregator { m_target } => {
            if let Some(v) = params.remove("m") {
                *m_target = Some(v.parse().map_err(|_| bad_m(&v))?);
            }
        }
        _ => {}
    }
    if let Some(k) = params.keys().next() {
        return Err(Error::Config {
            field: format!("ordering-param {k}"),
            reason: format!("not a parameter of `{name}`"),
        });
    }
    Ok(s)
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(args: RunArgs) -> Result<()> {
    let model: Model = args.model.parse()?;
    let mut config = ExperimentConfig::new(
        graph_spec(&args.graph)?,
        strategy(&args.ordering, &args.ordering_params)?,
        model,
        args.q,
        args.trials,
        args.seed,
    );
    config.resample_ordering = args.resample_ordering;
    config.format = args.output.format;
    config.compare = args.compare;
    config.workers = args.output.workers;
    let cells = run_experiment(&config)?;
    let mut w = sink(&args.output.out)?;
    write_cells(&cells, config.format, &mut w)?;
    w.flush()?;
    Ok(())
}

fn table(args: TableArgs) -> Result<()> {
    let id: TableId = args.table.parse()?;
    if args.output.workers == Some(0) {
        return Err(Error::Config {
            field: "workers".to_string(),
            reason: "must be at least 1".to_string(),
        });
    }
    let opts = TableOptions {
        trials: args.trials,
        workers: args.output.workers,
        email_univ: args.email_univ,
        compare: args.compare,
    };
    let result = run_table(id, args.seed, &opts)?;
    for s in &result.skipped {
        eprintln!("{id:?}: {s}");
    }
    let mut w = sink(&args.output.out)?;
    match args.output.format {
        OutputFormat::Csv => write_cells(&result.cells, OutputFormat::Csv, &mut w)?,
        OutputFormat::Json => write_json(&result, &mut w)?,
    }
    w.flush()?;
    Ok(())
}

fn analyze(what: Analyze) -> Result<()> {
    let value = match what {
        Analyze::Chernoff { n, p, delta } => serde_json::to_value(analysis::chernoff_tails(n, p, delta)?)?,
        Analyze::Aggregation { s, q } => serde_json::to_value(analysis::aggregation_success_bound(s, q)?)?,
        Analyze::Butterfly { q, depth } => serde_json::to_value(analysis::butterfly_recurrence(q, depth)?)?,
        Analyze::Sparse { avg_degree, q } => serde_json::to_value(analysis::sparse_ceiling(avg_degree, q)?)?,
        Analyze::Giant { n, p } => serde_json::to_value(analysis::giant_component_fraction(n, p)?)?,
        Analyze::Isolated { n, p } => serde_json::to_value(analysis::expected_isolated(n, p)?)?,
        Analyze::Graph { graph, seed } => {
            let spec = graph_spec(&graph)?;
            let g = spec.build(seed)?;
            let comps = connected_components(&g);
            json!({
                "graph": spec.name(),
                "params": spec.params(),
                "family": g.family(),
                "n": g.n(),
                "edges": g.edge_count(),
                "degrees": degree_stats(&g),
                "components": comps.count(),
                "largest_component": comps.largest(),
            })
        }
    };
    write_json(&value, io::stdout().lock())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Table(a) => table(a),
        Command::Analyze { what } => analyze(what),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
