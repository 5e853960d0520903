//! Command-line front end.

use std::fs;
use std::os::unix::net::UnixListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use cosmos_core::dtree::{train, TrainParams};
use cosmos_core::harness::{
    aggregate_battery, aggregate_relevance, parse_battery_csv, parse_relevance_csv, run_scenario, DrainModel,
    ScenarioScript, UserModel,
};
use cosmos_core::server::{net, ObservationStore, ServerParams, ServerState, SharedServer, SMS_PREFIX, STORE_ENV};
use cosmos_core::settings::CriticalServices;
use cosmos_core::{Dataset, Error, Result, Tree};

#[derive(Parser)]
#[command(
    name = "cosmos",
    version,
    about = "Context-sensitive smartphone configuration engine"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scripted scenario against an in-process server.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        user: PathBuf,
        /// Overrides the scenario's own seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the per-tick trace here as CSV.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        server: ServerArgs,
    },
    /// Train a single decision tree from a dataset file.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2)]
        min_leaf: usize,
        #[arg(long, default_value_t = 12)]
        max_depth: usize,
        #[arg(long)]
        prune: bool,
    },
    /// Classify one comma-separated attribute row with a trained tree.
    Classify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        row: String,
    },
    /// Serve settings requests on a Unix socket.
    Serve {
        #[arg(long)]
        socket: PathBuf,
        /// Observation store; defaults to the COSMOS_STORE environment variable.
        #[arg(long)]
        store: Option<PathBuf>,
        #[command(flatten)]
        server: ServerArgs,
    },
    /// Aggregate per-session relevance and battery tables.
    Evaluate {
        #[arg(long)]
        table1: Option<PathBuf>,
        #[arg(long)]
        table2: Option<PathBuf>,
    },
    /// Send one context-upload document to a running server.
    SendContext {
        #[arg(long)]
        socket: PathBuf,
        #[arg(long)]
        xml: PathBuf,
        /// Ask for the SMS encoding of the answer.
        #[arg(long)]
        sms: bool,
    },
}

#[derive(Args)]
struct ServerArgs {
    #[arg(long, default_value_t = 50)]
    min_rows: usize,
    #[arg(long, default_value_t = 0.70)]
    min_accuracy: f64,
    #[arg(long, default_value_t = 25)]
    retrain_every: usize,
    /// Settings exempt from the low-battery override, comma-separated.
    #[arg(long, default_value = "ring_volume,vibration")]
    critical: String,
    #[arg(long)]
    prune: bool,
}

impl ServerArgs {
    fn params(&self) -> ServerParams {
        ServerParams {
            min_rows: self.min_rows,
            min_accuracy: self.min_accuracy,
            retrain_every: self.retrain_every,
            train: TrainParams {
                prune: self.prune,
                ..TrainParams::default()
            },
        }
    }

    fn critical(&self) -> Result<CriticalServices> {
        CriticalServices::parse(&self.critical.replace(',', "\n"))
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))
}

fn simulate(scenario: &Path, user: &Path, seed: Option<u64>, report: Option<&Path>, server: &ServerArgs) -> Result<()> {
    let mut script = ScenarioScript::parse(&read(scenario)?)?;
    if let Some(seed) = seed {
        script.seed = seed;
    }
    let user = UserModel::parse(&read(user)?)?;
    let outcome = run_scenario(&script, &user, &server.params(), &server.critical()?)?;
    if let Some(path) = report {
        fs::write(path, outcome.trace_csv()?)?;
    }
    let battery = outcome.battery_comparison(&DrainModel::<f64>::default())?;
    println!("metric,value");
    println!("ticks,{}", outcome.trace.len());
    println!("graded,{}", outcome.tally.total());
    match outcome.first_serving_tick() {
        Some(t) => println!("first_serving_tick,{t}"),
        None => println!("first_serving_tick,"),
    }
    if let Some(s) = outcome.tally.session::<f64>() {
        println!("crs_pct,{:.4}", s.crs);
        println!("prs_pct,{:.4}", s.prs);
        println!("cis_pct,{:.4}", s.cis);
        println!("cumulative_relevant_pct,{:.4}", s.crs + s.prs);
    }
    println!("normal_hours,{:.4}", battery.normal_hours);
    println!("managed_hours,{:.4}", battery.cosmos_hours);
    Ok(())
}

fn train_cmd(data: &Path, out: &Path, params: TrainParams) -> Result<()> {
    let dataset = Dataset::parse(&read(data)?)?;
    let tree = train(&dataset, params)?;
    fs::write(out, serde_json::to_string_pretty(&tree)?)?;
    println!(
        "trained on {} rows: depth {}, {} leaves, training accuracy {:.4}",
        dataset.len(),
        tree.root().depth(),
        tree.root().leaf_count(),
        tree.accuracy(&dataset)?
    );
    Ok(())
}

fn classify(model: &Path, row: &str) -> Result<()> {
    let tree: Tree = serde_json::from_str(&read(model)?)?;
    let fields: Vec<&str> = row.split(',').map(str::trim).collect();
    let values = tree.schema().parse_values(&fields)?;
    let (label, confidence) = tree.classify_label(&values)?;
    println!("label,confidence");
    println!("{label},{confidence:.4}");
    Ok(())
}

fn serve(socket: &Path, store: Option<PathBuf>, server: &ServerArgs) -> Result<()> {
    let store_path = store
        .or_else(|| std::env::var_os(STORE_ENV).map(PathBuf::from))
        .ok_or_else(|| Error::Usage(format!("no store given: pass --store or set {STORE_ENV}")))?;
    let store = ObservationStore::open(&store_path)?;
    let state = ServerState::new(server.params(), server.critical()?, store)?;
    eprintln!(
        "cosmos: {} observations loaded, phase {:?}, listening on {}",
        state.store().len(),
        state.phase(),
        socket.display()
    );
    let listener = UnixListener::bind(socket)?;
    net::serve(listener, Arc::new(SharedServer::new(state)))
}

fn evaluate(table1: Option<&Path>, table2: Option<&Path>) -> Result<()> {
    if table1.is_none() && table2.is_none() {
        return Err(Error::Usage("pass --table1 and/or --table2".into()));
    }
    println!("table,metric,value");
    if let Some(path) = table1 {
        let r = aggregate_battery(&parse_battery_csv::<f64>(&read(path)?)?)?;
        println!("table1,sessions,{}", r.sessions.len());
        println!("table1,mean_normal_hours,{:.4}", r.mean_normal_hours);
        println!("table1,mean_cosmos_hours,{:.4}", r.mean_cosmos_hours);
    }
    if let Some(path) = table2 {
        let r = aggregate_relevance(&parse_relevance_csv::<f64>(&read(path)?)?)?;
        println!("table2,sessions,{}", r.sessions.len());
        println!("table2,mean_crs,{:.4}", r.mean_crs);
        println!("table2,mean_prs,{:.4}", r.mean_prs);
        println!("table2,mean_cis,{:.4}", r.mean_cis);
        println!("table2,cumulative_relevant,{:.4}", r.cumulative_relevant);
    }
    Ok(())
}

fn send_context(socket: &Path, xml: &Path, sms: bool) -> Result<()> {
    let mut body = if sms { SMS_PREFIX.to_vec() } else { Vec::new() };
    body.extend_from_slice(read(xml)?.as_bytes());
    let response = net::request(socket, &body)?;
    let text = String::from_utf8_lossy(&response);
    print!("{text}");
    if !text.ends_with('\n') {
        println!();
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            scenario,
            user,
            seed,
            report,
            server,
        } => simulate(&scenario, &user, seed, report.as_deref(), &server),
        Command::Train {
            data,
            out,
            min_leaf,
            max_depth,
            prune,
        } => train_cmd(
            &data,
            &out,
            TrainParams {
                min_leaf,
                max_depth,
                prune,
            },
        ),
        Command::Classify { model, row } => classify(&model, &row),
        Command::Serve { socket, store, server } => serve(&socket, store, &server),
        Command::Evaluate { table1, table2 } => evaluate(table1.as_deref(), table2.as_deref()),
        Command::SendContext { socket, xml, sms } => send_context(&socket, &xml, sms),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cosmos: {e}");
            match e {
                Error::Usage(_) | Error::Parse { .. } => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
