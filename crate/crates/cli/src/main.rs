use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use unitsmith_core::gateway::{HttpConfig, HttpTransport, API_KEY_ENV};
use unitsmith_core::pipeline::run_project;
use unitsmith_core::report::{read_events, summarize, to_csv, to_json};
use unitsmith_core::tokens::counter_by_name;
use unitsmith_core::{
    build_gateway, build_toolchain, load_index, load_templates, report_json, save_index, scan_project, Cassette,
    CassetteTransport, Config, EventSink, JavaAdapter, Services, Transport,
};

#[derive(Parser)]
#[command(name = "unitsmith", version, about = "Generate, validate and repair unit tests with a chat model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a Java source tree into a project index.
    Scan {
        root: PathBuf,
        #[arg(long, value_name = "FILE")]
        index: PathBuf,
    },
    /// Run generation for every focal method in an index.
    Generate(GenerateArgs),
    /// Summarize an events file as an outcome table.
    Report {
        #[arg(long, value_name = "FILE")]
        events: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Price per 1000 tokens used for the cost columns.
        #[arg(long, default_value_t = unitsmith_core::gateway::DEFAULT_PRICE_PER_1K)]
        price: f64,
        /// Write here instead of stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct GenerateArgs {
    #[arg(long, value_name = "FILE")]
    index: PathBuf,
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Cassette to replay from or record into.
    #[arg(long, value_name = "FILE", conflicts_with = "live")]
    cassette: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Mode::Replay, requires = "cassette")]
    mode: Mode,
    /// Call the configured endpoint directly, without a cassette.
    #[arg(long)]
    live: bool,
    /// Directory for events.jsonl, report.json and the generated tests.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    #[arg(long)]
    attempts: Option<u32>,
    #[arg(long)]
    max_rounds: Option<u32>,
    #[arg(long)]
    max_prompt_tokens: Option<usize>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    base_url: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Mode {
    Replay,
    Record,
}

enum Failure {
    Input(String),
    Gateway(String),
}

impl Failure {
    fn exit(self) -> ExitCode {
        let (code, msg) = match self {
            Failure::Input(m) => (2, m),
            Failure::Gateway(m) => (3, m),
        };
        eprintln!("error: {msg}");
        ExitCode::from(code)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Scan { root, index } => scan(&root, &index),
        Command::Generate(args) => generate(args),
        Command::Report { events, format, price, out } => report(&events, format, price, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.exit(),
    }
}

fn scan(root: &Path, out: &Path) -> Result<(), Failure> {
    let report = scan_project(root, &JavaAdapter::new()).map_err(|e| Failure::Input(e.to_string()))?;
    for s in &report.skipped {
        eprintln!("warning: skipped {}: {}", s.path, s.reason);
    }
    save_index(&report.index, out).map_err(|e| Failure::Input(e.to_string()))?;
    println!(
        "{} of {} files parsed, {} classes, {} focal methods -> {}",
        report.parsed,
        report.discovered,
        report.index.classes.len(),
        report.index.focal_methods().count(),
        out.display()
    );
    Ok(())
}

fn load_config(args: &GenerateArgs) -> Result<Config, Failure> {
    let mut cfg = match &args.config {
        Some(path) => Config::load(path).map_err(|e| Failure::Gateway(e.to_string()))?,
        None => Config::default(),
    };
    let run = &mut cfg.run;
    if let Some(v) = args.attempts {
        run.attempts_per_method = v;
    }
    if let Some(v) = args.max_rounds {
        run.max_rounds = v;
    }
    if let Some(v) = args.max_prompt_tokens {
        run.max_prompt_tokens = v;
    }
    if let Some(v) = args.temperature {
        run.temperature = v;
    }
    if let Some(v) = args.workers {
        run.workers = v;
    }
    if let Some(v) = &args.model {
        cfg.gateway.model = v.clone();
    }
    if let Some(v) = &args.base_url {
        cfg.gateway.base_url = v.clone();
    }
    // re-check the overridden values
    let text = toml::to_string(&cfg).map_err(|e| Failure::Gateway(e.to_string()))?;
    Config::parse(&text, "command line").map_err(|e| Failure::Gateway(e.to_string()))?;
    Ok(cfg)
}

fn http(cfg: &Config) -> Result<HttpTransport, Failure> {
    let api_key = std::env::var(API_KEY_ENV)
        .ok()
        .filter(|k| !k.trim().is_empty())
        .ok_or_else(|| Failure::Gateway(format!("{API_KEY_ENV} is not set")))?;
    HttpTransport::new(HttpConfig { base_url: cfg.gateway.base_url.clone(), api_key, timeout: cfg.request_timeout() })
        .map_err(|e| Failure::Gateway(e.to_string()))
}

fn transport(args: &GenerateArgs, cfg: &Config) -> Result<CassetteTransport, Failure> {
    match (&args.cassette, args.mode, args.live) {
        (Some(path), Mode::Replay, _) => {
            let cassette = Cassette::load(path).map_err(|e| Failure::Gateway(e.to_string()))?;
            Ok(CassetteTransport::replay(cassette))
        }
        (Some(path), Mode::Record, _) => {
            let inner: Box<dyn Transport> = Box::new(http(cfg)?);
            CassetteTransport::record(path, inner).map_err(|e| Failure::Gateway(e.to_string()))
        }
        (None, _, true) => Ok(CassetteTransport::live(Box::new(http(cfg)?))),
        (None, _, false) => Err(Failure::Gateway("no gateway: pass --cassette FILE or --live".into())),
    }
}

fn generate(args: GenerateArgs) -> Result<(), Failure> {
    let index = load_index(&args.index).map_err(|e| Failure::Input(format!("index: {e}")))?;
    let cfg = load_config(&args)?;
    let transport = transport(&args, &cfg)?;
    let templates = load_templates(&cfg).map_err(|e| Failure::Gateway(e.to_string()))?;
    let counter = counter_by_name(&cfg.run.counter).expect("counter name checked by config");

    let out = &args.out;
    let tests_dir = out.join("tests");
    let work_dir = out.join("work");
    for dir in [&tests_dir, &work_dir] {
        fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
    }
    let toolchain = build_toolchain(cfg.toolchain.as_ref(), &work_dir).map_err(|e| Failure::Gateway(e.to_string()))?;
    let events_path = out.join("events.jsonl");
    let sink = EventSink::create(&events_path).map_err(|e| Failure::Input(format!("{}: {e}", events_path.display())))?;
    let gateway = build_gateway(&cfg.gateway, Box::new(transport));
    let adapter = JavaAdapter::new();
    let services = Services {
        index: &index,
        adapter: &adapter,
        templates: &templates,
        counter: counter.as_ref(),
        gateway: &gateway,
        toolchain: toolchain.as_ref(),
        model: &cfg.gateway.model,
        events: Some(&sink),
        tests_out: Some(&tests_dir),
    };
    let report = run_project(&cfg.run, &services).map_err(|e| Failure::Input(e.to_string()))?;
    let report_path = out.join("report.json");
    fs::write(&report_path, report_json(&report)).map_err(|e| Failure::Input(format!("{}: {e}", report_path.display())))?;

    let t = &report.totals;
    println!(
        "{} methods, {} attempts: {} aborted, {} syntax, {} compile, {} runtime, {} passed ({} correct); {} covered; ${:.4}",
        report.methods.len(),
        t.attempts(),
        t.aborted,
        t.syntax_error,
        t.compile_error,
        t.runtime_error,
        t.passed,
        t.correct,
        report.methods_covered,
        report.ledger.project.total.cost_usd
    );
    Ok(())
}

fn report(events: &Path, format: Format, price: f64, out: Option<&Path>) -> Result<(), Failure> {
    let file = fs::File::open(events).map_err(|e| Failure::Input(format!("{}: {e}", events.display())))?;
    let (records, warnings) = read_events(BufReader::new(file)).map_err(|e| Failure::Input(e.to_string()))?;
    for w in &warnings {
        eprintln!("warning: skipped malformed event, {w}");
    }
    let summary = summarize(&records, price, warnings.len());
    let text = match format {
        Format::Csv => to_csv(&summary),
        Format::Json => to_json(&summary),
    }
    .map_err(|e| Failure::Input(e.to_string()))?;
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
