//! `tou`: prices, simulations and invariant checks from the command line.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use tou_core::io::{
    config_hash, graph_csv, instance_to_json, network_csv, network_text, parents_csv,
    read_instance, read_network, report_csv, report_text, trial_rows_csv, NetworkConfig,
    NetworkFile, PriceFile,
};
use tou_core::pricing::price_instance;
use tou_core::servers::{run_network_experiment, NetworkPolicy};
use tou_core::sim::{generate_periodic, run_experiment, ExperimentConfig, GeneratorConfig};
use tou_core::suite::{instance_suite, network_suite, oracle_table, CheckLine};
use tou_core::temporal::SlotGraph;
use tou_core::{Error, Instance, PaymentRule, Tolerances};

#[derive(Parser, Debug)]
#[command(
    name = "tou",
    version,
    about = "Time-of-use pricing and allocation experiments"
)]
struct Cli {
    /// Worker threads for trial loops (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the expected LP and write the posted prices.
    Price {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the slot graph edge list as CSV.
        #[arg(long)]
        graph_out: Option<PathBuf>,
        /// Also write the parent table as CSV.
        #[arg(long)]
        parents_out: Option<PathBuf>,
    },
    /// Run trials against each adversary and report acceptance and welfare.
    Simulate {
        #[arg(long)]
        instance: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
        /// Adversary names; repeat or separate with commas.
        #[arg(long, value_delimiter = ',')]
        adversary: Vec<String>,
        #[arg(long, value_enum)]
        payment_rule: Option<RuleArg>,
        #[command(flatten)]
        common: Common,
    },
    /// Forwarding experiment on a server network.
    Network {
        #[arg(long)]
        network: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        trials: Option<u64>,
        /// Policy names; repeat or separate with commas.
        #[arg(long, value_delimiter = ',')]
        adversary: Vec<String>,
        /// Write one row per job and trial to this CSV.
        #[arg(long)]
        rows_out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the invariant suite on an instance or a network.
    Verify {
        #[arg(long, conflicts_with = "network", required_unless_present = "network")]
        instance: Option<PathBuf>,
        #[arg(long)]
        network: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Slack for the per-node MGF condition.
        #[arg(long, default_value_t = 0.25)]
        epsilon: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Exact expected offline optimum of a tiny instance, per realization.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Generate a periodic i.i.d. instance.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RuleArg {
    AllocatedBlock,
    DeclaredLength,
}

impl From<RuleArg> for PaymentRule {
    fn from(r: RuleArg) -> PaymentRule {
        match r {
            RuleArg::AllocatedBlock => PaymentRule::AllocatedBlock,
            RuleArg::DeclaredLength => PaymentRule::DeclaredLength,
        }
    }
}

enum Failure {
    Usage(String),
    Invariant(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        match e {
            Error::Invariant(_) | Error::Numerical { .. } | Error::MinWork { .. } => {
                Failure::Invariant(e.to_string())
            }
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Failure {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// Writes to `out` when given, otherwise prints.
fn emit(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Relative paths inside a config file are relative to the file.
fn resolve(config: Option<&Path>, rel: &str) -> PathBuf {
    let p = PathBuf::from(rel);
    match config.and_then(Path::parent) {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p,
    }
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    read_instance(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn print_checks(lines: &[CheckLine]) -> Outcome {
    for l in lines {
        println!(
            "{} {}: {}",
            if l.ok { "ok  " } else { "FAIL" },
            l.name,
            l.detail
        );
    }
    match lines.iter().find(|l| !l.ok) {
        Some(l) => Err(Failure::Invariant(format!("{}: {}", l.name, l.detail))),
        None => Ok(()),
    }
}

fn price(
    instance: &Path,
    out: Option<&Path>,
    graph_out: Option<&Path>,
    parents_out: Option<&Path>,
) -> Outcome {
    let inst = load_instance(instance)?;
    let tol = Tolerances::default();
    let pricing = price_instance(&inst, &tol)?;
    let file = PriceFile {
        period: pricing.prices.period,
        prices: pricing.prices.prices.clone(),
        epsilon: inst.epsilon,
        lp_objective: pricing.outcome.objective,
        residuals: pricing.outcome.residuals,
    };
    let r = &file.residuals;
    if r.duality_gap > tol.duality_gap || r.worst() > tol.residual {
        return Err(Failure::Invariant(format!(
            "LP certificate out of tolerance: gap {:.3e}, worst residual {:.3e}",
            r.duality_gap,
            r.worst()
        )));
    }
    if graph_out.is_some() || parents_out.is_some() {
        let g = SlotGraph::build(&file.prices, tol.price_cmp())?;
        if let Some(p) = graph_out {
            write(p, &graph_csv(&g))?;
        }
        if let Some(p) = parents_out {
            write(p, &parents_csv(&g))?;
        }
    }
    emit(out, &(serde_json::to_string_pretty(&file)? + "\n"))?;
    if out.is_some() {
        eprintln!(
            "priced {} jobs over {} slots: objective {:.6}, duality gap {:.2e}",
            inst.jobs.len(),
            inst.horizon,
            file.lp_objective,
            r.duality_gap
        );
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    instance: Option<&Path>,
    config: Option<&Path>,
    trials: Option<usize>,
    adversary: Vec<String>,
    rule: Option<RuleArg>,
    common: &Common,
) -> Outcome {
    let mut cfg = match config {
        Some(p) => serde_json::from_str::<ExperimentConfig>(&read(p)?)?,
        None => ExperimentConfig::new(1000, 0),
    };
    let inst_path = match (instance, &cfg.instance) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(rel)) => resolve(config, rel),
        (None, None) => {
            return Err(Failure::Usage(
                "no instance given (--instance or config `instance`)".into(),
            ))
        }
    };
    if let Some(t) = trials {
        cfg.trials = t;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if !adversary.is_empty() {
        cfg.adversaries = adversary;
    }
    if let Some(r) = rule {
        cfg.payment_rule = r.into();
    }
    let inst = load_instance(&inst_path)?;
    cfg.instance = None;
    let hash = config_hash(&[&serde_json::to_string(&cfg)?, &instance_to_json(&inst)?]);
    let name = inst_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "experiment".into());
    info!(
        "running {} trials per adversary with seed {}",
        cfg.trials, cfg.seed
    );
    let report = run_experiment(&inst, &cfg, &name)?;
    let format = common.format.unwrap_or(if common.out.is_some() {
        Format::Csv
    } else {
        Format::Text
    });
    let text = match format {
        Format::Csv => report_csv(&report, &hash),
        Format::Text => report_text(&report, &hash),
    };
    emit(common.out.as_deref(), &text)?;
    match report
        .adversaries
        .iter()
        .find_map(|a| a.first_violation.clone())
    {
        Some(w) => Err(Failure::Invariant(w)),
        None => Ok(()),
    }
}

fn network(
    network: Option<&Path>,
    config: Option<&Path>,
    trials: Option<u64>,
    adversary: Vec<String>,
    rows_out: Option<&Path>,
    common: &Common,
) -> Outcome {
    let mut cfg = match config {
        Some(p) => serde_json::from_str::<NetworkConfig>(&read(p)?)?,
        None => NetworkConfig::new(1000, 0),
    };
    let net_path = match (network, &cfg.network) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(rel)) => resolve(config, rel),
        (None, None) => {
            return Err(Failure::Usage(
                "no network given (--network or config `network`)".into(),
            ))
        }
    };
    if let Some(t) = trials {
        cfg.trials = t;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if !adversary.is_empty() {
        cfg.policies = adversary;
    }
    if cfg.trials == 0 {
        return Err(Failure::Usage("trials must be positive".into()));
    }
    let net = read_network(&net_path)
        .map_err(|e| Failure::Usage(format!("{}: {e}", net_path.display())))?;
    let policies = cfg
        .policies
        .iter()
        .map(|s| NetworkPolicy::parse(s))
        .collect::<Result<Vec<_>, _>>()?;
    cfg.network = None;
    let net_json = serde_json::to_string(&NetworkFile::from_network(&net))?;
    let hash = config_hash(&[&serde_json::to_string(&cfg)?, &net_json]);
    let name = net_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "network".into());
    let mut reports = Vec::new();
    let mut rows_text = String::new();
    for policy in policies {
        let (report, rows) =
            run_network_experiment(&net, policy, cfg.trials, cfg.seed, rows_out.is_some())?;
        if rows_out.is_some() {
            let block = trial_rows_csv(cfg.seed, &hash, policy.name(), &rows);
            if rows_text.is_empty() {
                rows_text = block;
            } else {
                // header lines only once
                rows_text.extend(block.lines().skip(2).map(|l| format!("{l}\n")));
            }
        }
        reports.push(report);
    }
    if let Some(p) = rows_out {
        write(p, &rows_text)?;
    }
    let format = common.format.unwrap_or(if common.out.is_some() {
        Format::Csv
    } else {
        Format::Text
    });
    let text = match format {
        Format::Csv => network_csv(&name, cfg.seed, &hash, &reports),
        Format::Text => network_text(&name, cfg.seed, &reports),
    };
    emit(common.out.as_deref(), &text)
}

fn verify(
    instance: Option<&Path>,
    network: Option<&Path>,
    trials: usize,
    eps: f64,
    common: &Common,
) -> Outcome {
    let seed = common.seed.unwrap_or(0);
    let lines = match (instance, network) {
        (Some(p), _) => instance_suite(&load_instance(p)?, seed, trials),
        (None, Some(p)) => {
            let net =
                read_network(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            network_suite(&net, seed, trials as u64, eps)
        }
        (None, None) => {
            return Err(Failure::Usage(
                "verify needs --instance or --network".into(),
            ))
        }
    };
    if let Some(p) = &common.out {
        write(p, &(serde_json::to_string_pretty(&lines)? + "\n"))?;
    }
    print_checks(&lines)
}

fn oracle(instance: &Path, common: &Common) -> Outcome {
    let inst = load_instance(instance)?;
    let table = oracle_table(&inst)?;
    let mut text = String::from("realized,probability,opt\n");
    for r in &table.rows {
        text.push_str(&format!(
            "\"{}\",{:.9},{:.6}\n",
            r.realized.join(" "),
            r.probability,
            r.opt
        ));
    }
    if common.format == Some(Format::Text) || (common.format.is_none() && common.out.is_none()) {
        text.push_str(&format!(
            "# expected opt {:.6}, lp bound {:.6}\n",
            table.expected_opt, table.lp_bound
        ));
    }
    emit(common.out.as_deref(), &text)?;
    if table.expected_opt > table.lp_bound * (1.0 + 1e-9) + 1e-9 {
        return Err(Failure::Invariant(format!(
            "expected opt {} exceeds the LP bound {}",
            table.expected_opt, table.lp_bound
        )));
    }
    Ok(())
}

fn generate(config: &Path, common: &Common) -> Outcome {
    let mut cfg: GeneratorConfig = serde_json::from_str(&read(config)?)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    let inst = generate_periodic(&cfg)?;
    emit(common.out.as_deref(), &(instance_to_json(&inst)? + "\n"))
}

fn run(cli: Cli) -> Outcome {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Price {
            instance,
            out,
            graph_out,
            parents_out,
        } => price(
            &instance,
            out.as_deref(),
            graph_out.as_deref(),
            parents_out.as_deref(),
        ),
        Command::Simulate {
            instance,
            config,
            trials,
            adversary,
            payment_rule,
            common,
        } => simulate(
            instance.as_deref(),
            config.as_deref(),
            trials,
            adversary,
            payment_rule,
            &common,
        ),
        Command::Network {
            network: net,
            config,
            trials,
            adversary,
            rows_out,
            common,
        } => network(
            net.as_deref(),
            config.as_deref(),
            trials,
            adversary,
            rows_out.as_deref(),
            &common,
        ),
        Command::Verify {
            instance,
            network: net,
            trials,
            epsilon,
            common,
        } => verify(
            instance.as_deref(),
            net.as_deref(),
            trials,
            epsilon,
            &common,
        ),
        Command::Oracle { instance, common } => oracle(&instance, &common),
        Command::Generate { config, common } => generate(&config, &common),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invariant(w)) => {
            eprintln!("invariant failure: {w}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
