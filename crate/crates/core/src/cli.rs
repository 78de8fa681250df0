//! Command-line front end.
//!
//! Data goes to stdout (or `--out`), warnings to stderr. Exit codes: 0 on
//! success, 1 on internal failure, 2 on bad usage or bad input.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::corpus::{
    self, estimate_params, load_corpus, write_corpus, Corpus, CorpusFormat, ParamOverrides,
    TaggedQuery, BASE_LAYER,
};
use crate::error::Error;
use crate::method::{AslInput, MethodRegistry};
use crate::model::{self, BoundsKind, BreakEven, CollectionParams, TagParams, TermParams};
use crate::numfmt::{round_sig, sig, HUMAN_DIGITS, MACHINE_DIGITS};
use crate::oracle::{self, RetagCase};
use crate::surface::{self, GridSpec, SurfaceGrid};
use crate::tagset::{self, AggregationRegistry};

#[derive(Debug, Parser)]
#[command(
    name = "tagasl",
    version,
    about = "Average search length with and without part-of-speech tags"
)]
pub struct Cli {
    /// Output format (default: csv for grids, json otherwise).
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,

    /// Write data here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Half-width of the neutral band around a zero improvement factor.
    #[arg(long, global = true, default_value_t = 0.0)]
    pub tolerance: f64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// ASL, tagging verdict and bounds from explicit parameters.
    Predict(PredictArgs),
    /// Break-even pi for one point or over a (p, tau) grid.
    Breakeven(BreakevenArgs),
    /// Tagged ASL over a (tau, pi) grid next to the untagged ASL.
    Mesh(MeshArgs),
    /// Estimate parameters from a tagged corpus.
    Estimate(EstimateArgs),
    /// Rank a corpus and measure ASL directly.
    Simulate(SimulateArgs),
    /// Rank tag layers by average improvement factor.
    EvaluateTags(EvaluateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundsArg {
    Asymptotic,
    Exact,
    Both,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(short = 'N', long = "docs")]
    pub n: u64,
    #[arg(short = 't')]
    pub t: f64,
    #[arg(short = 'p')]
    pub p: f64,
    #[arg(long, requires = "pi", allow_negative_numbers = true)]
    pub tau: Option<f64>,
    #[arg(long, requires = "tau", allow_negative_numbers = true)]
    pub pi: Option<f64>,
    /// Proportion of relevant documents; enables exact bounds.
    #[arg(short = 'r')]
    pub r: Option<f64>,
    #[arg(long, value_enum)]
    pub bounds: Option<BoundsArg>,
}

#[derive(Debug, Args)]
pub struct BreakevenArgs {
    #[arg(short = 't')]
    pub t: f64,
    #[arg(
        short = 'p',
        required_unless_present = "surface",
        conflicts_with = "surface"
    )]
    pub p: Option<f64>,
    #[arg(long, required_unless_present = "surface", conflicts_with = "surface")]
    pub tau: Option<f64>,
    /// Evaluate the whole (p, tau) grid.
    #[arg(long)]
    pub surface: bool,
    #[arg(long, default_value_t = surface::DEFAULT_STEPS, requires = "surface")]
    pub steps: usize,
    #[arg(long, default_value_t = surface::DEFAULT_P_MIN, requires = "surface")]
    pub p_min: f64,
}

#[derive(Debug, Args)]
pub struct MeshArgs {
    #[arg(short = 'N', long = "docs")]
    pub n: u64,
    #[arg(short = 't')]
    pub t: f64,
    #[arg(short = 'p')]
    pub p: f64,
    #[arg(long, default_value_t = surface::DEFAULT_STEPS)]
    pub steps: usize,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Corpus format; guessed from the extension when omitted.
    #[arg(long)]
    pub corpus_format: Option<CorpusFormat>,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long)]
    pub term: String,
    #[arg(long)]
    pub tag: Option<String>,
    /// Tag layer to read (`base` = inline token tags).
    #[arg(long, default_value = BASE_LAYER)]
    pub layer: String,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub query: QueryArgs,
    #[arg(long)]
    pub override_n: Option<u64>,
    #[arg(long)]
    pub override_r: Option<f64>,
    #[arg(long)]
    pub override_t: Option<f64>,
    #[arg(long)]
    pub override_p: Option<f64>,
    #[arg(long)]
    pub override_tau: Option<f64>,
    #[arg(long)]
    pub override_pi: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub query: QueryArgs,
    /// Monte Carlo trials; adds the `monte-carlo` method.
    #[arg(long)]
    pub trials: Option<u64>,
    /// Retag the query term for the best or worst case first.
    #[arg(long, requires = "tag")]
    pub retag: Option<RetagCase>,
    /// ASL methods to run (default: block and analytic, plus monte-carlo with --trials).
    #[arg(long = "method")]
    pub methods: Vec<String>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub workload: PathBuf,
    /// Layers to compare (default: base and every named layer).
    #[arg(long = "layer")]
    pub layers: Vec<String>,
    #[arg(long, default_value = "mean")]
    pub aggregate: String,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Input(Error),
    Internal(Error),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Input(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Input(e) | CliError::Internal(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Input(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// What a subcommand produced, before formatting.
enum Payload {
    Report {
        json: Value,
        csv_rows: Option<Vec<Value>>,
    },
    Grid(SurfaceGrid),
    Mesh(surface::AslMesh),
}

struct Outcome {
    payload: Payload,
    warnings: Vec<String>,
    default_format: OutputFormat,
}

impl Outcome {
    fn report(json: Value) -> Self {
        Outcome {
            payload: Payload::Report {
                json,
                csv_rows: None,
            },
            warnings: Vec::new(),
            default_format: OutputFormat::Json,
        }
    }
}

/// Runs the CLI on `args` and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    2
                }
            };
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.code()
        }
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    if cli.tolerance.is_nan() || cli.tolerance < 0.0 {
        return Err(CliError::Usage(format!(
            "--tolerance must be >= 0, got {}",
            cli.tolerance
        )));
    }
    let mut side_output = None;
    let outcome = match &cli.command {
        Command::Predict(a) => predict(a, cli.tolerance)?,
        Command::Breakeven(a) => breakeven(a)?,
        Command::Mesh(a) => mesh(a)?,
        Command::Estimate(a) => estimate(a, cli.tolerance)?,
        Command::Simulate(a) => {
            let (outcome, retagged) = simulate(a, cli.seed)?;
            side_output = retagged;
            outcome
        }
        Command::EvaluateTags(a) => evaluate_tags(a)?,
    };
    for w in &outcome.warnings {
        let _ = writeln!(stderr, "warning: {w}");
    }
    let format = cli.format.unwrap_or(outcome.default_format);
    let text = render(&outcome.payload, format)?;

    // simulate --retag --out: the file gets the retagged corpus, stdout the report.
    if let Some((corpus, fmt)) = side_output {
        let path = cli
            .out
            .as_ref()
            .expect("retagged corpus only kept with --out");
        let file = File::create(path).map_err(|e| CliError::Input(e.into()))?;
        write_corpus(&corpus, std::io::BufWriter::new(file), fmt).map_err(CliError::Internal)?;
        stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Internal(e.into()))?;
        return Ok(());
    }
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Input(e.into()))?,
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Internal(e.into()))?,
    }
    Ok(())
}

fn num(x: f64) -> Value {
    json!(x)
}

fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

fn bounds_json(b: &model::Bounds) -> Value {
    json!({ "worst": b.worst, "best": b.best })
}

fn predict(a: &PredictArgs, tol: f64) -> CliResult<Outcome> {
    let coll = match a.r {
        Some(r) => CollectionParams::new(a.n, r)?,
        None => CollectionParams::with_size(a.n)?,
    };
    let term = TermParams::new(a.t, a.p)?;
    let tag = match (a.tau, a.pi) {
        (Some(tau), Some(pi)) => Some(TagParams::new(tau, pi)?),
        _ => None,
    };
    let kinds: Vec<BoundsKind> = match (a.bounds, a.r) {
        (Some(BoundsArg::Exact | BoundsArg::Both), None) => {
            return Err(CliError::Usage("--bounds exact needs -r".into()))
        }
        (Some(BoundsArg::Asymptotic), _) | (None, None) => vec![BoundsKind::Asymptotic],
        (Some(BoundsArg::Exact), Some(_)) => vec![BoundsKind::Exact],
        (Some(BoundsArg::Both), Some(_)) | (None, Some(_)) => {
            vec![BoundsKind::Asymptotic, BoundsKind::Exact]
        }
    };

    let untagged = model::asl_untagged(&coll, &term);
    let mut out = Map::new();
    out.insert("N".into(), json!(a.n));
    out.insert("t".into(), num(a.t));
    out.insert("p".into(), num(a.p));
    out.insert("r".into(), opt_num(a.r));
    out.insert("a_factor".into(), num(untagged.a_factor));
    out.insert("asl_untagged".into(), num(untagged.asl));
    let mut bounds = Map::new();
    for kind in kinds {
        let b = model::bounds(&coll, &term, kind);
        let key = match kind {
            BoundsKind::Asymptotic => "asymptotic",
            BoundsKind::Exact => "exact",
        };
        bounds.insert(key.into(), bounds_json(&b));
    }
    out.insert("bounds".into(), Value::Object(bounds));

    let mut warnings = Vec::new();
    if let Some(tag) = tag {
        let v = model::verdict(&coll, &term, &tag, tol)?;
        out.insert("tau".into(), num(tag.tau()));
        out.insert("pi".into(), num(tag.pi()));
        out.insert("asl_tagged".into(), num(v.asl_tagged));
        out.insert("tif".into(), num(v.tif));
        out.insert(
            "decision".into(),
            serde_json::to_value(v.decision).expect("enum"),
        );
        if a.r.is_some() {
            warnings.extend(
                model::tag_feasibility(&coll, &term, &tag)
                    .iter()
                    .map(|i| i.to_string()),
            );
        }
    } else if a.r.is_some() {
        warnings.extend(
            model::term_feasibility(&coll, &term)
                .iter()
                .map(|i| i.to_string()),
        );
    }
    let mut outcome = Outcome::report(Value::Object(out));
    outcome.warnings = warnings;
    Ok(outcome)
}

fn break_even_json(be: BreakEven) -> Value {
    match be {
        BreakEven::Pi(v) => num(v),
        BreakEven::AlwaysBeneficial => json!("always"),
        BreakEven::Undefined => json!("undef"),
    }
}

fn breakeven(a: &BreakevenArgs) -> CliResult<Outcome> {
    if a.surface {
        let spec = GridSpec::new(("p", a.p_min, 1.0, a.steps), ("tau", 0.0, 1.0, a.steps))?;
        let grid = surface::break_even_surface(a.t, spec)?;
        return Ok(Outcome {
            payload: Payload::Grid(grid),
            warnings: Vec::new(),
            default_format: OutputFormat::Csv,
        });
    }
    let (p, tau) = (a.p.expect("clap"), a.tau.expect("clap"));
    let term = TermParams::new(a.t, p)?;
    let be = model::break_even_pi(&term, tau)?;
    if be == BreakEven::Undefined {
        return Err(CliError::Usage("break-even pi is undefined at p=0".into()));
    }
    Ok(Outcome::report(json!({
        "t": a.t,
        "p": p,
        "tau": tau,
        "pi_break_even": break_even_json(be),
    })))
}

fn mesh(a: &MeshArgs) -> CliResult<Outcome> {
    let coll = CollectionParams::with_size(a.n)?;
    let term = TermParams::new(a.t, a.p)?;
    let mesh = surface::asl_mesh(&coll, &term, GridSpec::mesh(a.steps)?)?;
    Ok(Outcome {
        payload: Payload::Mesh(mesh),
        warnings: Vec::new(),
        default_format: OutputFormat::Csv,
    })
}

fn corpus_format(args: &CorpusArgs) -> CliResult<CorpusFormat> {
    args.corpus_format
        .or_else(|| CorpusFormat::from_path(&args.corpus))
        .ok_or_else(|| {
            CliError::Usage(format!(
                "cannot tell the format of {}; pass --corpus-format",
                args.corpus.display()
            ))
        })
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn read_corpus(args: &CorpusArgs) -> CliResult<(Corpus, CorpusFormat)> {
    let format = corpus_format(args)?;
    let corpus = load_corpus(open(&args.corpus)?, format)?;
    Ok((corpus, format))
}

fn query_of(args: &QueryArgs) -> CliResult<TaggedQuery> {
    Ok(TaggedQuery::new(args.term.clone(), args.tag.as_deref())?)
}

fn estimate(a: &EstimateArgs, tol: f64) -> CliResult<Outcome> {
    let (corpus, _) = read_corpus(&a.corpus)?;
    let query = query_of(&a.query)?;
    let layer = corpus.resolve_layer(&a.query.layer)?;
    let overrides = ParamOverrides {
        n_docs: a.override_n,
        rel_rate: a.override_r,
        t: a.override_t,
        p: a.override_p,
        tau: a.override_tau,
        pi: a.override_pi,
    };
    let raw = estimate_params(&corpus, &query, layer)?;
    let est = raw.with_overrides(&overrides)?;
    let notes: Vec<String> = est.diagnostics.iter().map(|d| d.to_string()).collect();

    let mut prediction = Map::new();
    if let (Ok(coll), Ok(term)) = (est.collection(), est.term()) {
        let untagged = model::asl_untagged(&coll, &term);
        prediction.insert("a_factor".into(), num(untagged.a_factor));
        prediction.insert("asl_untagged".into(), num(untagged.asl));
        prediction.insert(
            "bounds_exact".into(),
            bounds_json(&model::bounds_exact(&coll, &term)),
        );
        if let Ok(tag) = est.tag() {
            let v = model::verdict(&coll, &term, &tag, tol)?;
            prediction.insert("asl_tagged".into(), num(v.asl_tagged));
            prediction.insert("tif".into(), num(v.tif));
            prediction.insert(
                "decision".into(),
                serde_json::to_value(v.decision).expect("enum"),
            );
        }
    }
    let json = json!({
        "query": { "term": query.term, "tag": query.tag },
        "layer": a.query.layer,
        "counts": serde_json::to_value(est.counts).expect("counts"),
        "N": est.n_docs,
        "r": est.rel_rate,
        "t": est.t,
        "p": opt_num(est.p),
        "tau": opt_num(est.tau),
        "pi": opt_num(est.pi),
        "prediction": Value::Object(prediction),
        "notes": notes,
    });
    let mut outcome = Outcome::report(json);
    outcome.warnings = notes;
    Ok(outcome)
}

fn simulate(a: &SimulateArgs, seed: u64) -> CliResult<(Outcome, Option<(Corpus, CorpusFormat)>)> {
    let (corpus, format) = read_corpus(&a.corpus)?;
    let query = query_of(&a.query)?;
    let layer = corpus.resolve_layer(&a.query.layer)?;
    let registry = MethodRegistry::builtin();
    let methods: Vec<String> = if a.methods.is_empty() {
        let mut m = vec!["block".to_string(), "analytic".to_string()];
        if a.trials.is_some() {
            m.push("monte-carlo".into());
        }
        m
    } else {
        a.methods.clone()
    };
    for m in &methods {
        registry.get(m)?;
    }
    let trials = a.trials.unwrap_or(10_000);

    let run_methods = |corpus: &Corpus, use_tag: bool| -> CliResult<Value> {
        let outcome = oracle::block_asl(corpus, &query, layer, use_tag)?;
        let input = AslInput {
            corpus,
            query: &query,
            layer,
            use_tag,
            trials,
            seed,
        };
        let mut by_method = BTreeMap::new();
        for name in &methods {
            by_method.insert(name.clone(), registry.get(name)?.asl(&input)?);
        }
        Ok(json!({
            "block_asl": outcome.asl,
            "block_sizes": [outcome.block_sizes.0, outcome.block_sizes.1],
            "relevant_in_block": [outcome.relevant_in_block.0, outcome.relevant_in_block.1],
            "methods": by_method,
        }))
    };

    let mut out = Map::new();
    out.insert(
        "query".into(),
        json!({ "term": query.term, "tag": query.tag }),
    );
    out.insert("layer".into(), json!(a.query.layer));
    if a.trials.is_some() {
        out.insert("trials".into(), json!(trials));
        out.insert("seed".into(), json!(seed));
    }
    out.insert("untagged".into(), run_methods(&corpus, false)?);
    if query.tag.is_some() {
        out.insert("tagged".into(), run_methods(&corpus, true)?);
    }
    let mut retagged = None;
    if let Some(case) = a.retag {
        let new = oracle::retag(&corpus, &query, layer, case)?;
        let mut section = run_methods(&new, true)?;
        let est = estimate_params(&corpus, &query, layer)?;
        let bound = model::bounds_exact(&est.collection()?, &est.term()?);
        let obj = section.as_object_mut().expect("object");
        obj.insert("case".into(), serde_json::to_value(case).expect("enum"));
        obj.insert(
            "exact_bound".into(),
            num(match case {
                RetagCase::Best => bound.best,
                RetagCase::Worst => bound.worst,
            }),
        );
        out.insert("retag".into(), section);
        retagged = Some((new, format));
    }
    Ok((Outcome::report(Value::Object(out)), retagged))
}

fn evaluate_tags(a: &EvaluateArgs) -> CliResult<Outcome> {
    let (corpus, _) = read_corpus(&a.corpus)?;
    let workload = tagset::load_workload(open(&a.workload)?)?;
    let aggregations = AggregationRegistry::builtin();
    let rule = aggregations.get(&a.aggregate)?;
    let layers: Vec<String> = if a.layers.is_empty() {
        std::iter::once(BASE_LAYER.to_string())
            .chain(corpus.layer_names().iter().cloned())
            .collect()
    } else {
        a.layers.clone()
    };
    for l in &layers {
        corpus.resolve_layer(l)?;
    }
    let names: Vec<&str> = layers.iter().map(String::as_str).collect();
    let ranking = tagset::rank_layers(&corpus, &names, &workload, rule)?;

    let mut warnings = Vec::new();
    let mut rows = Vec::new();
    for (rank, entry) in ranking.iter().enumerate() {
        if let Some(err) = &entry.error {
            warnings.push(format!("layer `{}` not scored: {err}", entry.layer));
            rows.push(json!({
                "rank": rank + 1, "layer": entry.layer, "mean_tif": null,
                "evaluated_count": 0, "term": null, "tag": null, "tif": null, "reason": err,
            }));
            continue;
        }
        let score = entry.score.as_ref().expect("scored");
        for q in &score.per_query {
            if let Some(reason) = &q.reason {
                warnings.push(format!(
                    "layer `{}`: query {}/{} excluded: {reason}",
                    entry.layer, q.term, q.tag
                ));
            }
            rows.push(json!({
                "rank": rank + 1, "layer": entry.layer, "mean_tif": score.mean_tif,
                "evaluated_count": score.evaluated_count, "term": q.term, "tag": q.tag,
                "tif": opt_num(q.tif), "reason": q.reason,
            }));
        }
    }
    if ranking.iter().all(|r| r.score.is_none()) {
        return Err(CliError::Input(Error::EmptyEvaluation));
    }
    let json = json!({
        "aggregation": rule.name(),
        "aggregation_note": format!(
            "{}; other averaging populations are possible (see --aggregate)",
            rule.description()
        ),
        "ranking": serde_json::to_value(&ranking).map_err(|e| CliError::Internal(e.into()))?,
    });
    Ok(Outcome {
        payload: Payload::Report {
            json,
            csv_rows: Some(rows),
        },
        warnings,
        default_format: OutputFormat::Json,
    })
}

// ---- rendering ----

fn round_floats(v: &Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            json!(round_sig(n.as_f64().expect("f64"), MACHINE_DIGITS))
        }
        Value::Array(items) => Value::Array(items.iter().map(round_floats).collect()),
        Value::Object(map) => Value::Object(
            map.iter()
                .map(|(k, v)| (k.clone(), round_floats(v)))
                .collect(),
        ),
        other => other.clone(),
    }
}

fn scalar_text(v: &Value, digits: usize) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => match n.as_u64().or_else(|| n.as_i64().map(|i| i as u64)) {
            Some(_) if !n.is_f64() => n.to_string(),
            _ => sig(n.as_f64().expect("number"), digits),
        },
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Flattens nested objects and arrays into dotted keys.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, Value)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&key(k), v, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&key(&i.to_string()), v, out);
            }
        }
        scalar => out.push((prefix.to_string(), scalar.clone())),
    }
}

fn csv_text(header: &[String], rows: &[Vec<String>]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let internal = |e: csv::Error| CliError::Internal(surface::csv_err(e));
    w.write_record(header).map_err(internal)?;
    for row in rows {
        w.write_record(row).map_err(internal)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Internal(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("utf8"))
}

fn aligned(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
            + "\n"
    };
    let mut s = line(header);
    for row in rows {
        s.push_str(&line(row));
    }
    s
}

fn grid_rows(grid: &SurfaceGrid, digits: usize) -> Vec<Vec<String>> {
    grid.cells()
        .map(|(x, y, c)| {
            vec![
                sig(x, digits),
                sig(y, digits),
                match c.value() {
                    Some(v) => sig(v, digits),
                    None => c.to_csv(),
                },
            ]
        })
        .collect()
}

fn render(payload: &Payload, format: OutputFormat) -> CliResult<String> {
    let internal = |e: Error| CliError::Internal(e);
    match (payload, format) {
        (Payload::Report { json, .. }, OutputFormat::Json) => {
            Ok(serde_json::to_string_pretty(&round_floats(json)).expect("json") + "\n")
        }
        (Payload::Report { json, csv_rows }, OutputFormat::Csv) => match csv_rows {
            Some(rows) => {
                let header: Vec<String> = match rows.first() {
                    Some(Value::Object(m)) => m.keys().cloned().collect(),
                    _ => Vec::new(),
                };
                let body: Vec<Vec<String>> = rows
                    .iter()
                    .map(|r| {
                        header
                            .iter()
                            .map(|k| scalar_text(&r[k], MACHINE_DIGITS))
                            .collect()
                    })
                    .collect();
                csv_text(&header, &body)
            }
            None => {
                let mut flat = Vec::new();
                flatten("", json, &mut flat);
                let header: Vec<String> = flat.iter().map(|(k, _)| k.clone()).collect();
                let row: Vec<String> = flat
                    .iter()
                    .map(|(_, v)| scalar_text(v, MACHINE_DIGITS))
                    .collect();
                csv_text(&header, &[row])
            }
        },
        (Payload::Report { json, .. }, OutputFormat::Table) => {
            let mut flat = Vec::new();
            flatten("", json, &mut flat);
            let rows: Vec<Vec<String>> = flat
                .into_iter()
                .map(|(k, v)| vec![k, scalar_text(&v, HUMAN_DIGITS)])
                .collect();
            Ok(aligned(&["field".into(), "value".into()], &rows))
        }
        (Payload::Grid(grid), OutputFormat::Csv) => {
            let mut buf = Vec::new();
            grid.write_csv(&mut buf).map_err(internal)?;
            Ok(String::from_utf8(buf).expect("utf8"))
        }
        (Payload::Grid(grid), OutputFormat::Json) => {
            let v = serde_json::to_value(grid).expect("grid");
            Ok(serde_json::to_string_pretty(&round_floats(&v)).expect("json") + "\n")
        }
        (Payload::Grid(grid), OutputFormat::Table) => Ok(aligned(
            &[
                grid.spec.axis1_name.clone(),
                grid.spec.axis2_name.clone(),
                "pi_break_even".into(),
            ],
            &grid_rows(grid, HUMAN_DIGITS),
        )),
        (Payload::Mesh(mesh), OutputFormat::Csv) => {
            let mut buf = Vec::new();
            mesh.write_csv(&mut buf).map_err(internal)?;
            Ok(String::from_utf8(buf).expect("utf8"))
        }
        (Payload::Mesh(mesh), OutputFormat::Json) => {
            let mut v = serde_json::to_value(mesh).expect("mesh");
            v.as_object_mut()
                .expect("object")
                .insert("improving_cells".into(), json!(mesh.improving_cells()));
            Ok(serde_json::to_string_pretty(&round_floats(&v)).expect("json") + "\n")
        }
        (Payload::Mesh(mesh), OutputFormat::Table) => {
            let plane = sig(mesh.untagged_plane, HUMAN_DIGITS);
            let rows: Vec<Vec<String>> = grid_rows(&mesh.tagged, HUMAN_DIGITS)
                .into_iter()
                .map(|mut r| {
                    r.push(plane.clone());
                    r
                })
                .collect();
            Ok(aligned(
                &[
                    "tau".into(),
                    "pi".into(),
                    "asl_tagged".into(),
                    "asl_untagged".into(),
                ],
                &rows,
            ))
        }
    }
}

/// Re-exported for callers that want the corpus writer alongside the CLI.
pub use corpus::write_corpus as write_corpus_file;
