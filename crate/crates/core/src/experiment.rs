//! Experiment cells and the table sweeps: graph specs, config validation,
//! execution, and CSV/JSON emission.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{butterfly_recurrence, expected_isolated, giant_component_fraction, sparse_ceiling, BoundReport, BoundKind};
use crate::decision::{Accuracy, Model, ModelConfig, DEFAULT_BAYES_CAP};
use crate::error::{Error, Result};
use crate::graph::{
    degree_stats, gen_butterfly, gen_erdos_renyi, gen_grid, gen_preferential_attachment, load_edge_list_path, Graph,
};
use crate::ordering::Strategy;
use crate::rng::{substream, GRAPH_STREAM};
use crate::simulate::{LearningReport, MonteCarlo};

pub const CSV_HEADER: [&str; 15] = [
    "graph",
    "params",
    "n",
    "ordering",
    "ordering_params",
    "model",
    "q",
    "trials",
    "seed",
    "mean_rate",
    "std_err",
    "median",
    "min",
    "max",
    "herding_freq",
];

/// Accuracy and trial count used by every table.
pub const TABLE_Q: f64 = 0.7;
pub const TABLE_TRIALS: usize = 300;
pub const TABLE_HIGH_VALUE_M: usize = 30;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum GraphSpec {
    ErdosRenyi { n: usize, p: f64 },
    PreferentialAttachment { n: usize, k: usize },
    Grid { side: usize },
    Butterfly { k: usize },
    Complete { n: usize },
    Empty { n: usize },
    EdgeList { path: PathBuf },
}

fn take<T: FromStr>(params: &BTreeMap<String, String>, key: &str) -> Result<T> {
    let field = format!("graph-param {key}");
    let raw = params
        .get(key)
        .ok_or_else(|| Error::config(field.clone(), "missing"))?;
    raw.parse().map_err(|_| Error::config(field, format!("cannot parse `{raw}`")))
}

impl GraphSpec {
    /// Builds a spec from a family name and `k=v` parameters. Unknown keys
    /// are rejected so that typos do not silently fall back to defaults.
    pub fn from_params(family: &str, params: &BTreeMap<String, String>, edge_list: Option<PathBuf>) -> Result<Self> {
        let allowed: &[&str] = match family {
            "er" | "erdos-renyi" => &["n", "p"],
            "pa" | "preferential-attachment" => &["n", "k"],
            "grid" => &["side"],
            "butterfly" => &["k"],
            "complete" | "empty" => &["n"],
            "edge-list" => &[],
            other => return Err(Error::config("graph", format!("unknown graph family `{other}`"))),
        };
        if let Some(bad) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::config(
                format!("graph-param {bad}"),
                format!("not a parameter of `{family}`"),
            ));
        }
        Ok(match family {
            "er" | "erdos-renyi" => GraphSpec::ErdosRenyi {
                n: take(params, "n")?,
                p: take(params, "p")?,
            },
            "pa" | "preferential-attachment" => GraphSpec::PreferentialAttachment {
                n: take(params, "n")?,
                k: take(params, "k")?,
            },
            "grid" => GraphSpec::Grid { side: take(params, "side")? },
            "butterfly" => GraphSpec::Butterfly { k: take(params, "k")? },
            "complete" => GraphSpec::Complete { n: take(params, "n")? },
            "empty" => GraphSpec::Empty { n: take(params, "n")? },
            _ => GraphSpec::EdgeList {
                path: edge_list.ok_or_else(|| Error::config("edge-list", "required for the edge-list family"))?,
            },
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            GraphSpec::ErdosRenyi { .. } => "erdos-renyi",
            GraphSpec::PreferentialAttachment { .. } => "preferential-attachment",
            GraphSpec::Grid { .. } => "grid",
            GraphSpec::Butterfly { .. } => "butterfly",
            GraphSpec::Complete { .. } => "complete",
            GraphSpec::Empty { .. } => "empty",
            GraphSpec::EdgeList { .. } => "edge-list",
        }
    }

    /// Parameters as `k=v` pairs joined by `;`.
    pub fn params(&self) -> String {
        match self {
            GraphSpec::ErdosRenyi { n, p } => format!("n={n};p={p}"),
            GraphSpec::PreferentialAttachment { n, k } => format!("n={n};k={k}"),
            GraphSpec::Grid { side } => format!("side={side}"),
            GraphSpec::Butterfly { k } => format!("k={k}"),
            GraphSpec::Complete { n } | GraphSpec::Empty { n } => format!("n={n}"),
            GraphSpec::EdgeList { path } => format!(
                "file={}",
                path.file_name().map_or_else(|| path.display().to_string(), |f| f.to_string_lossy().into_owned())
            ),
        }
    }

    /// Number of vertices, when known without building the graph.
    pub fn vertex_count(&self) -> Option<usize> {
        match *self {
            GraphSpec::ErdosRenyi { n, .. }
            | GraphSpec::PreferentialAttachment { n, .. }
            | GraphSpec::Complete { n }
            | GraphSpec::Empty { n } => Some(n),
            GraphSpec::Grid { side } => Some(side * side),
            GraphSpec::Butterfly { k } => (k + 1).checked_mul(1usize.checked_shl(k as u32)?),
            GraphSpec::EdgeList { .. } => None,
        }
    }

    /// The graph for `seed`. Random families draw from the seed's graph
    /// stream, so every ordering in a cell sees the same instance.
    pub fn build(&self, seed: u64) -> Result<Graph> {
        let mut rng = substream(seed, GRAPH_STREAM);
        match self {
            GraphSpec::ErdosRenyi { n, p } => gen_erdos_renyi(*n, *p, &mut rng),
            GraphSpec::PreferentialAttachment { n, k } => gen_preferential_attachment(*n, *k, &mut rng),
            GraphSpec::Grid { side } => gen_grid(*side),
            GraphSpec::Butterfly { k } => gen_butterfly(*k),
            GraphSpec::Complete { n } => Graph::complete(*n),
            GraphSpec::Empty { n } => Graph::empty(*n),
            GraphSpec::EdgeList { path } => load_edge_list_path(path),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::config("format", format!("unknown format `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub graph: GraphSpec,
    pub ordering: Strategy,
    pub model: Model,
    pub q: f64,
    pub trials: usize,
    pub seed: u64,
    /// `None` resamples exactly when the ordering is stochastic.
    pub resample_ordering: Option<bool>,
    pub format: OutputFormat,
    /// Attach closed-form comparisons to each record (JSON only).
    pub compare: bool,
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(graph: GraphSpec, ordering: Strategy, model: Model, q: f64, trials: usize, seed: u64) -> Self {
        ExperimentConfig {
            graph,
            ordering,
            model,
            q,
            trials,
            seed,
            resample_ordering: None,
            format: OutputFormat::Csv,
            compare: false,
            workers: None,
        }
    }

    /// Checks everything that can be checked before building the graph.
    pub fn validate(&self) -> Result<ModelConfig> {
        let q = Accuracy::new(self.q).map_err(|_| Error::config("q", format!("{} is outside (0.5, 1)", self.q)))?;
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(Error::config("workers", "must be at least 1"));
        }
        if let Strategy::HighValue { m: 0 } = self.ordering {
            return Err(Error::config("ordering-param m", "must be at least 1"));
        }
        if let Some(n) = self.graph.vertex_count() {
            check_bayes_size(self.model, n)?;
        }
        Ok(ModelConfig { model: self.model, q })
    }
}

fn check_bayes_size(model: Model, n: usize) -> Result<()> {
    if model == Model::Bayesian && n > DEFAULT_BAYES_CAP {
        return Err(Error::config(
            "model",
            format!("bayesian requires n <= {DEFAULT_BAYES_CAP}, graph has {n}"),
        ));
    }
    Ok(())
}

/// One emitted row: the CSV columns.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Record {
    pub graph: String,
    pub params: String,
    pub n: usize,
    pub ordering: String,
    pub ordering_params: String,
    pub model: String,
    pub q: f64,
    pub trials: usize,
    pub seed: u64,
    pub mean_rate: f64,
    pub std_err: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub herding_freq: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellResult {
    #[serde(flatten)]
    pub record: Record,
    pub report: LearningReport,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub bounds: Vec<BoundReport>,
    /// Advisory tolerance annotation for table cells with a published value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<Reference>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Reference {
    pub value: f64,
    pub tolerance: f64,
    pub within: bool,
}

impl CellResult {
    fn sort_key(&self) -> (String, usize, String, String, String, String, u64) {
        let r = &self.record;
        (
            r.graph.clone(),
            r.n,
            r.params.clone(),
            r.ordering.clone(),
            r.ordering_params.clone(),
            r.model.clone(),
            r.seed,
        )
    }
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    graph_spec: &GraphSpec,
    g: &Graph,
    ordering: &Strategy,
    model: ModelConfig,
    trials: usize,
    seed: u64,
    resample: Option<bool>,
    compare: bool,
) -> Result<CellResult> {
    check_bayes_size(model.model, g.n())?;
    let mut mc = MonteCarlo::new(trials, seed);
    mc.resample_ordering = resample;
    let report = mc.run(g, ordering, model)?;
    let record = Record {
        graph: graph_spec.name().to_string(),
        params: graph_spec.params(),
        n: g.n(),
        ordering: ordering.name().to_string(),
        ordering_params: ordering.params(),
        model: model.model.name().to_string(),
        q: model.q.get(),
        trials,
        seed,
        mean_rate: report.network_rate,
        std_err: report.std_error,
        median: report.distribution.median,
        min: report.distribution.min,
        max: report.distribution.max,
        herding_freq: report.cascades.herding,
    };
    let bounds = if compare {
        comparisons(graph_spec, g, ordering, model)?
    } else {
        Vec::new()
    };
    Ok(CellResult {
        record,
        report,
        bounds,
        reference: None,
    })
}

fn comparisons(spec: &GraphSpec, g: &Graph, ordering: &Strategy, model: ModelConfig) -> Result<Vec<BoundReport>> {
    let q = model.q.get();
    let mut out = Vec::new();
    if *ordering == Strategy::Random {
        out.push(sparse_ceiling(degree_stats(g).average, q)?);
    }
    if let (GraphSpec::Butterfly { k }, Strategy::BottomUp) = (spec, ordering) {
        let rec = butterfly_recurrence(q, k + 1)?;
        out.push(BoundReport {
            name: "butterfly-recurrence-mean".to_string(),
            inputs: rec.lower_bound.inputs.clone(),
            value: rec.mean,
            kind: BoundKind::Exact,
        });
        out.push(rec.lower_bound);
    }
    if let GraphSpec::ErdosRenyi { n, p } = *spec {
        if p * n as f64 > 1.0 {
            out.push(giant_component_fraction(n as u64, p)?.report);
        }
        let iso = expected_isolated(n as u64, p)?;
        out.push(BoundReport {
            name: if iso.in_range { "expected-isolated" } else { "expected-isolated-out-of-range" }.to_string(),
            inputs: [("n".to_string(), n as f64), ("p".to_string(), p)].into_iter().collect(),
            value: iso.value,
            kind: BoundKind::Exact,
        });
    }
    Ok(out)
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::config("workers", e.to_string()))?
            .install(f),
        None => f(),
    }
}

/// Runs a single configured cell.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<CellResult>> {
    let model = config.validate()?;
    with_workers(config.workers, || {
        let g = config.graph.build(config.seed)?;
        let cell = run_cell(
            &config.graph,
            &g,
            &config.ordering,
            model,
            config.trials,
            config.seed,
            config.resample_ordering,
            config.compare,
        )?;
        Ok(vec![cell])
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum TableId {
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
}

impl FromStr for TableId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "T1" | "1" => TableId::T1,
            "T2" | "2" => TableId::T2,
            "T3" | "3" => TableId::T3,
            "T4" | "4" => TableId::T4,
            "T5" | "5" => TableId::T5,
            "T6" | "6" => TableId::T6,
            _ => return Err(Error::config("table", format!("unknown table `{s}`"))),
        })
    }
}

#[derive(Clone, Debug)]
pub struct TableOptions {
    pub trials: usize,
    pub workers: Option<usize>,
    pub email_univ: Option<PathBuf>,
    pub compare: bool,
}

impl Default for TableOptions {
    fn default() -> Self {
        TableOptions {
            trials: TABLE_TRIALS,
            workers: None,
            email_univ: None,
            compare: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableRun {
    pub table: TableId,
    pub cells: Vec<CellResult>,
    /// Human-readable reasons for cells that were not run.
    pub skipped: Vec<String>,
}

/// A table cell: graph, ordering, and the published mean rate if any.
#[derive(Clone, Debug, PartialEq)]
pub struct TableCell {
    pub graph: GraphSpec,
    pub ordering: Strategy,
    pub published: Option<f64>,
}

fn high_value() -> Strategy {
    Strategy::HighValue { m: TABLE_HIGH_VALUE_M }
}

/// The parameter grid and published values of a table. Table 6 needs the
/// email-univ path for its dataset column.
pub fn table_cells(table: TableId, email_univ: Option<&PathBuf>) -> Vec<TableCell> {
    let cell = |graph: GraphSpec, ordering: Strategy, published: Option<f64>| TableCell {
        graph,
        ordering,
        published,
    };
    let er = |n, p| GraphSpec::ErdosRenyi { n, p };
    let mut cells = Vec::new();
    match table {
        TableId::T1 | TableId::T2 => {
            let (ps, rows): (&[f64], [&[f64]; 3]) = if table == TableId::T1 {
                (
                    &[0.005, 0.01, 0.03, 0.05, 0.07],
                    [
                        &[0.8017, 0.8820, 0.9612, 0.9753, 0.9757],
                        &[0.9079, 0.9466, 0.9714, 0.9747, 0.9816],
                        &[0.7881, 0.9524, 0.9734, 0.9774, 0.9804],
                    ],
                )
            } else {
                (
                    &[0.1, 0.2, 0.3, 0.7],
                    [
                        &[0.9783, 0.9542, 0.8972, 0.8626],
                        &[0.9761, 0.9636, 0.9403, 0.8622],
                        &[0.9691, 0.9359, 0.9232, 0.8853],
                    ],
                )
            };
            for (i, &p) in ps.iter().enumerate() {
                for (strategy, row) in [Strategy::Random, Strategy::TwoNeighbors, high_value()].into_iter().zip(rows) {
                    cells.push(cell(er(1000, p), strategy, Some(row[i])));
                }
            }
        }
        TableId::T3 => {
            let random = [0.8813, 0.8800, 0.8791, 0.8821, 0.8816, 0.8799];
            let arrival = [0.8845, 0.8257, 0.8606, 0.8254, 0.8935, 0.8312];
            let hv = [0.9577, 0.9689, 0.9758, 0.9832, 0.9842, 0.9851];
            for (i, n) in (500..=1500).step_by(200).enumerate() {
                let g = GraphSpec::PreferentialAttachment { n, k: 5 };
                cells.push(cell(g.clone(), Strategy::Random, Some(random[i])));
                cells.push(cell(g.clone(), Strategy::Arrival, Some(arrival[i])));
                cells.push(cell(g, high_value(), Some(hv[i])));
            }
        }
        TableId::T4 => {
            let random = [0.7602, 0.7600, 0.7634, 0.7643, 0.7640, 0.7663];
            let bottom_up = [0.8426, 0.8513, 0.8717, 0.8859, 0.9000, 0.9082];
            for (i, k) in (4..=9).enumerate() {
                cells.push(cell(GraphSpec::Butterfly { k }, Strategy::Random, Some(random[i])));
                cells.push(cell(GraphSpec::Butterfly { k }, Strategy::BottomUp, Some(bottom_up[i])));
            }
        }
        TableId::T5 => {
            let random = [0.7714, 0.7718, 0.7721, 0.7727, 0.77305];
            let spiral = [0.8922, 0.9168, 0.9366, 0.9501, 0.9575];
            for (i, side) in (20..=60).step_by(10).enumerate() {
                cells.push(cell(GraphSpec::Grid { side }, Strategy::Random, Some(random[i])));
                cells.push(cell(GraphSpec::Grid { side }, Strategy::Spiral, Some(spiral[i])));
            }
        }
        TableId::T6 => {
            let orderings = [Strategy::Random, Strategy::TwoNeighbors, high_value()];
            let columns: [(Option<GraphSpec>, [Option<f64>; 3]); 4] = [
                (
                    email_univ.map(|p| GraphSpec::EdgeList { path: p.clone() }),
                    [Some(0.8412), Some(0.8717), Some(0.9161)],
                ),
                (Some(er(1133, 0.008)), [Some(0.8790), Some(0.9443), Some(0.9633)]),
                // The published density of the same column, run as its own cell.
                (Some(er(1133, 0.0085)), [None; 3]),
                (
                    Some(GraphSpec::PreferentialAttachment { n: 1133, k: 5 }),
                    [Some(0.8778), Some(0.8543), Some(0.9327)],
                ),
            ];
            for (graph, published) in columns {
                if let Some(graph) = graph {
                    for (strategy, value) in orderings.iter().zip(published) {
                        cells.push(cell(graph.clone(), strategy.clone(), value));
                    }
                }
            }
        }
    }
    cells
}

/// Tolerance applied to a table's published values.
pub fn table_tolerance(table: TableId) -> f64 {
    match table {
        TableId::T1 | TableId::T2 | TableId::T6 => 0.03,
        TableId::T3 | TableId::T4 | TableId::T5 => 0.02,
    }
}

/// Runs every cell of `table` under `seed`, one graph instance per graph
/// spec, and returns the rows in canonical order.
pub fn run_table(table: TableId, seed: u64, opts: &TableOptions) -> Result<TableRun> {
    if opts.trials == 0 {
        return Err(Error::config("trials", "must be at least 1"));
    }
    let mut skipped = Vec::new();
    if table == TableId::T6 && opts.email_univ.is_none() {
        skipped.push("email-univ column skipped: no dataset path given".to_string());
    }
    let cells = table_cells(table, opts.email_univ.as_ref());
    let model = ModelConfig::majority(TABLE_Q)?;
    let tol = table_tolerance(table);

    with_workers(opts.workers, || {
        let mut specs: Vec<GraphSpec> = Vec::new();
        for c in &cells {
            if !specs.contains(&c.graph) {
                specs.push(c.graph.clone());
            }
        }
        let graphs: Vec<Graph> = specs.par_iter().map(|s| s.build(seed)).collect::<Result<_>>()?;
        let mut results: Vec<CellResult> = cells
            .par_iter()
            .map(|c| {
                let g = &graphs[specs.iter().position(|s| *s == c.graph).expect("spec registered")];
                let mut res = run_cell(&c.graph, g, &c.ordering, model, opts.trials, seed, None, opts.compare)?;
                res.reference = c.published.map(|value| Reference {
                    value,
                    tolerance: tol,
                    within: (res.record.mean_rate - value).abs() <= tol,
                });
                Ok(res)
            })
            .collect::<Result<_>>()?;
        sort_cells(&mut results);
        Ok(TableRun {
            table,
            cells: results,
            skipped,
        })
    })
}

pub fn sort_cells(cells: &mut [CellResult]) {
    cells.sort_by_key(CellResult::sort_key);
}

/// Writes the CSV header and one row per cell.
pub fn write_csv<W: Write>(cells: &[CellResult], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for c in cells {
        let r = &c.record;
        out.write_record([
            r.graph.clone(),
            r.params.clone(),
            r.n.to_string(),
            r.ordering.clone(),
            r.ordering_params.clone(),
            r.model.clone(),
            r.q.to_string(),
            r.trials.to_string(),
            r.seed.to_string(),
            format!("{:.6}", r.mean_rate),
            format!("{:.6}", r.std_err),
            format!("{:.6}", r.median),
            format!("{:.6}", r.min),
            format!("{:.6}", r.max),
            format!("{:.6}", r.herding_freq),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_json<W: Write, T: Serialize + ?Sized>(value: &T, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

pub fn write_cells<W: Write>(cells: &[CellResult], format: OutputFormat, w: W) -> Result<()> {
    match format {
        OutputFormat::Csv => write_csv(cells, w),
        OutputFormat::Json => write_json(cells, w),
    }
}
