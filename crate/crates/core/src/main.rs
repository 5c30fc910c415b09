use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use serde::Serialize;
use serde_json::{json, Value};

use polar_ldgm::construction::{self, CodeSpec, SparseGenerator, DEFAULT_BSC_TRIALS};
use polar_ldgm::crowd::{self, CrowdConfig, QuerySchemeParams, Selection};
use polar_ldgm::exact::format_ratio;
use polar_ldgm::gf2::BitMatrix;
use polar_ldgm::kernels::{self, Kernel, KernelSummary};
use polar_ldgm::simulate::{self, channel::ChannelModel, channel::ExactChannel, oracle};
use polar_ldgm::weightstats;
use polar_ldgm::{Error, DEFAULT_SEED};

#[derive(Parser)]
#[command(name = "polar-ldgm", version, about = "Polar-based LDGM codes: construction, splitting, rate loss, decoding and crowdsourced queries")]
#[command(arg_required_else_help = true)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write data to this file instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Kernel analysis and search.
    #[command(subcommand)]
    Kernel(KernelCmd),
    /// Build a code specification.
    Construct(ConstructArgs),
    /// Split heavy generator columns.
    Split(SplitArgs),
    /// Exact rate loss of splitting the full G2 power.
    Rateloss(RatelossArgs),
    /// Column-weight statistics of one kernel.
    Weights(WeightsArgs),
    /// Monte Carlo block error rate of a code.
    Simulate(SimulateArgs),
    /// Exact ML and SC block error probabilities of a small generator.
    Oracle(OracleArgs),
    /// Simulate the crowdsourced query scheme.
    Crowd(CrowdArgs),
    /// Kernel comparison table.
    Tables(TablesArgs),
}

#[derive(Subcommand)]
enum KernelCmd {
    /// Partial distances, exponent and sparsity ratio of a kernel.
    Analyze {
        /// Catalog name (g2, g3*, g4*, g3', g4', prop1:<l>, thm8:<l>) or matrix file.
        kernel: String,
    },
    /// Exhaustive search for the sparsest polarizing kernel of side l.
    Search {
        #[arg(long)]
        l: usize,
    },
}

#[derive(Args)]
struct ConstructArgs {
    #[arg(long, default_value = "g2")]
    kernel: String,
    #[arg(long)]
    n: u32,
    /// bec:<z> or bsc:<q>.
    #[arg(long)]
    channel: String,
    #[arg(long)]
    rate: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Monte Carlo trials for BSC reliabilities.
    #[arg(long, default_value_t = DEFAULT_BSC_TRIALS)]
    trials: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    wub: usize,
    /// Generator JSON `{"rows": K, "columns": [[...], ...]}`; `-` reads standard input.
    #[arg(long, default_value = "-")]
    gen: String,
}

#[derive(Args)]
struct RatelossArgs {
    #[arg(long)]
    n: u32,
    #[arg(long, conflicts_with_all = ["epsilon", "epsilon_prime"])]
    wub: Option<String>,
    #[arg(long, requires = "delta", conflicts_with = "epsilon_prime")]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    epsilon_prime: Option<f64>,
}

#[derive(Args)]
struct WeightsArgs {
    #[arg(long)]
    kernel: String,
    #[arg(long)]
    n: u32,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
}

#[derive(Args)]
struct SimulateArgs {
    /// CodeSpec JSON as written by `construct`.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    channel: String,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct OracleArgs {
    /// Generator JSON; `-` reads standard input.
    #[arg(long, default_value = "-")]
    gen: String,
    /// bec:<z> or bsc:<q>, with the parameter as a decimal or p/q.
    #[arg(long)]
    channel: String,
    /// Also evaluate the code with column `col` split at threshold `wub`.
    #[arg(long, value_name = "COL:WUB")]
    split: Option<String>,
    /// SC decoding order as comma-separated row indices.
    #[arg(long)]
    order: Option<String>,
}

#[derive(Args)]
struct CrowdArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    q: f64,
    #[arg(long)]
    zeta: f64,
    #[arg(long, default_value_t = 50)]
    trials: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// LDGM rate as a fraction of capacity.
    #[arg(long, default_value_t = 0.8)]
    ldgm_fraction: f64,
    #[arg(long, default_value_t = 1.15)]
    ldpc_redundancy: f64,
    #[arg(long)]
    n_polar: Option<u32>,
    #[arg(long)]
    wub: Option<usize>,
    /// Threshold log2(m')^(1 + epsilon) instead of tuning it to the rate target.
    #[arg(long, conflicts_with = "wub")]
    wub_epsilon: Option<f64>,
    #[arg(long, default_value_t = crowd::DEFAULT_SELECTION_TRIALS)]
    selection_trials: u64,
    /// Write one query per line (space-separated item indices).
    #[arg(long)]
    dump_queries: Option<PathBuf>,
}

#[derive(Args)]
struct TablesArgs {
    /// Level of G2; other kernels use the closest block length.
    #[arg(long, default_value_t = 20)]
    n: u32,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
}

enum Failure {
    Usage(String),
    Refused(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Refused(m) => Failure::Refused(m),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Usage(format!("invalid JSON: {e}"))
    }
}

/// Data ready to print: a JSON document, or CSV rows when available.
struct Output {
    json: Value,
    csv: Option<Vec<Value>>,
}

impl Output {
    fn json(v: impl Serialize) -> Result<Self, Failure> {
        Ok(Output { json: serde_json::to_value(v)?, csv: None })
    }

    fn table(rows: Vec<Value>) -> Self {
        Output { json: Value::Array(rows.clone()), csv: Some(rows) }
    }

    fn flat(v: impl Serialize) -> Result<Self, Failure> {
        let v = serde_json::to_value(v)?;
        Ok(Output { json: v.clone(), csv: Some(vec![v]) })
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{e}");
                    ExitCode::from(1)
                }
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Refused(m)) => {
            eprintln!("refused: {m}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let default_format = match cli.command {
        Command::Tables(_) => Format::Csv,
        _ => Format::Json,
    };
    let out = match &cli.command {
        Command::Kernel(k) => kernel_cmd(k)?,
        Command::Construct(a) => construct_cmd(a)?,
        Command::Split(a) => split_cmd(a)?,
        Command::Rateloss(a) => rateloss_cmd(a)?,
        Command::Weights(a) => weights_cmd(a)?,
        Command::Simulate(a) => simulate_cmd(a)?,
        Command::Oracle(a) => oracle_cmd(a)?,
        Command::Crowd(a) => crowd_cmd(a)?,
        Command::Tables(a) => tables_cmd(a)?,
    };
    let text = match cli.format.unwrap_or(default_format) {
        Format::Json => serde_json::to_string_pretty(&out.json)? + "\n",
        Format::Csv => match &out.csv {
            Some(rows) => to_csv(rows)?,
            None => return Err(Failure::Usage("this command has no CSV form; use --format json".into())),
        },
    };
    match &cli.output {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn to_csv(rows: &[Value]) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = match rows.first() {
        Some(Value::Object(m)) => m.keys().cloned().collect(),
        _ => return Ok(String::new()),
    };
    let csv_err = |e: csv::Error| Failure::Usage(e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    for row in rows {
        let cells: Vec<String> = header
            .iter()
            .map(|k| match &row[k] {
                Value::String(s) => s.clone(),
                Value::Null => String::new(),
                other => other.to_string(),
            })
            .collect();
        w.write_record(&cells).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV of UTF-8 fields"))
}

fn load_kernel(name: &str) -> Result<Kernel, Failure> {
    let path = Path::new(name);
    if path.is_file() {
        let m: BitMatrix = fs::read_to_string(path)?.parse()?;
        let label = path.file_stem().and_then(|s| s.to_str()).unwrap_or(name).to_string();
        return Ok(Kernel::new(label, m)?);
    }
    Ok(kernels::by_name(name)?)
}

fn read_input(src: &str) -> Result<String, Failure> {
    if src == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        Ok(fs::read_to_string(src)?)
    }
}

fn load_generator(src: &str) -> Result<SparseGenerator, Failure> {
    let g: SparseGenerator = serde_json::from_str(&read_input(src)?)?;
    Ok(SparseGenerator::new(g.rows, g.columns)?)
}

fn kernel_cmd(cmd: &KernelCmd) -> Result<Output, Failure> {
    match cmd {
        KernelCmd::Analyze { kernel } => Output::json(KernelSummary::from(&load_kernel(kernel)?)),
        KernelCmd::Search { l } => {
            let (k, ratio) = kernels::search_min_sparsity(*l)?;
            Output::json(json!({ "kernel": KernelSummary::from(&k), "ratio": ratio }))
        }
    }
}

fn construct_cmd(a: &ConstructArgs) -> Result<Output, Failure> {
    let kernel = load_kernel(&a.kernel)?;
    let ch: ChannelModel = a.channel.parse()?;
    let spec = construction::construct(&kernel, a.n, &ch, a.rate, a.delta, a.trials, a.seed)?;
    Output::json(spec)
}

fn split_cmd(a: &SplitArgs) -> Result<Output, Failure> {
    let g = load_generator(&a.gen)?;
    let (s, report) = construction::split(&g, a.wub)?;
    Output::json(json!({ "generator": s, "report": report }))
}

fn rateloss_cmd(a: &RatelossArgs) -> Result<Output, Failure> {
    let analysis = match (&a.wub, a.epsilon, a.epsilon_prime) {
        (Some(w), _, _) => {
            let w: BigUint = w.parse().map_err(|_| Failure::Usage(format!("bad --wub value {w:?}")))?;
            weightstats::rate_loss_at(a.n, &w)?
        }
        (None, Some(e), _) => {
            let delta = a.delta.ok_or_else(|| Failure::Usage("--epsilon needs --delta".into()))?;
            weightstats::classify_regime(e, delta, a.n)?
        }
        (None, None, Some(x)) => weightstats::rate_loss(a.n, x)?,
        _ => return Err(Failure::Usage("give --wub, --epsilon with --delta, or --epsilon-prime".into())),
    };
    let v = serde_json::to_value(&analysis)?;
    let mut flat = v.clone();
    if let Value::Object(m) = &mut flat {
        m.remove("a_terms");
    }
    Ok(Output { json: v, csv: Some(vec![flat]) })
}

fn weights_cmd(a: &WeightsArgs) -> Result<Output, Failure> {
    let k = load_kernel(&a.kernel)?;
    let row = weightstats::table_row(&k, a.n, a.delta)?;
    let mut v = serde_json::to_value(&row)?;
    if let Value::Object(m) = &mut v {
        m.insert("w_mc".into(), Value::String(weightstats::w_mc(&k, a.n).to_string()));
        m.insert("w_max".into(), Value::String(weightstats::w_max(&k, a.n).to_string()));
    }
    Ok(Output { json: v.clone(), csv: Some(vec![v]) })
}

fn simulate_cmd(a: &SimulateArgs) -> Result<Output, Failure> {
    let spec: CodeSpec = serde_json::from_str(&fs::read_to_string(&a.spec)?)?;
    let ch: ChannelModel = a.channel.parse()?;
    let est = simulate::mc_bler(&spec, &ch, a.trials, a.seed)?;
    let union = simulate::union_bound_log2(spec.log2_nprime, est.bler);
    Output::flat(json!({
        "trials": est.trials,
        "errors": est.errors,
        "bler": est.bler,
        "ci_low": est.ci.0,
        "ci_high": est.ci.1,
        "log2_nprime": spec.log2_nprime,
        "union_bound_log2": if est.errors == 0 { Value::Null } else { json!(union) },
    }))
    .map(|mut o| {
        if let Value::Object(m) = &mut o.json {
            m.insert("ci".into(), json!([est.ci.0, est.ci.1]));
        }
        o
    })
}

fn parse_order(s: &str) -> Result<Vec<usize>, Failure> {
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| Failure::Usage(format!("bad --order entry {t:?}"))))
        .collect()
}

fn oracle_cmd(a: &OracleArgs) -> Result<Output, Failure> {
    let g = load_generator(&a.gen)?;
    let ch: ExactChannel = a.channel.parse()?;
    let order = match &a.order {
        Some(s) => parse_order(s)?,
        None => (0..g.rows).collect(),
    };
    let mut v = json!({
        "rows": g.rows,
        "cols": g.cols(),
        "pe_ml": format_ratio(&oracle::exact_pe_ml(&g, &ch)?),
        "pe_sc": format_ratio(&oracle::exact_pe_sc(&g, &ch, &order)?),
    });
    if let Some(spec) = &a.split {
        let (col, wub) = spec
            .split_once(':')
            .and_then(|(c, w)| Some((c.parse::<usize>().ok()?, w.parse::<usize>().ok()?)))
            .ok_or_else(|| Failure::Usage(format!("--split expects COL:WUB, got {spec:?}")))?;
        if col >= g.cols() {
            return Err(Failure::Usage(format!("column {col} out of range")));
        }
        let single = SparseGenerator { rows: g.rows, columns: vec![g.columns[col].clone()] };
        let (pieces, _) = construction::split(&single, wub)?;
        let mut columns = g.columns.clone();
        columns.splice(col..=col, pieces.columns);
        let sg = SparseGenerator::new(g.rows, columns)?;
        v["split_cols"] = json!(sg.cols());
        v["split_pe_ml"] = json!(format_ratio(&oracle::exact_pe_ml(&sg, &ch)?));
        v["split_pe_sc"] = json!(format_ratio(&oracle::exact_pe_sc(&sg, &ch, &order)?));
    }
    Output::flat(v)
}

fn crowd_cmd(a: &CrowdArgs) -> Result<Output, Failure> {
    let params = QuerySchemeParams { n: a.n, p: a.p, q: a.q, zeta: a.zeta, seed: a.seed };
    let config = CrowdConfig {
        ldgm_fraction: a.ldgm_fraction,
        ldpc_redundancy: a.ldpc_redundancy,
        n_polar: a.n_polar,
        w_ub: a.wub,
        w_ub_epsilon: a.wub_epsilon,
        selection: Selection::MonteCarlo { trials: a.selection_trials },
        ..CrowdConfig::default()
    };
    let scheme = crowd::CrowdScheme::build(params, config)?;
    if let Some(path) = &a.dump_queries {
        fs::write(path, scheme.queries.to_lines())?;
    }
    Output::flat(crowd::run_trials(&scheme, a.trials)?)
}

fn tables_cmd(a: &TablesArgs) -> Result<Output, Failure> {
    let rows = weightstats::kernel_table(a.n, a.delta)?;
    let rows = rows.into_iter().map(serde_json::to_value).collect::<Result<Vec<_>, _>>()?;
    Ok(Output::table(rows))
}
