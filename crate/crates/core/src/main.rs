use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qacokit::bench::{
    apply_config_key, emit_report, noise_sweep, parse_config_file, parse_noise, run_experiment,
    to_csv, Algorithm, ExperimentConfig, InstanceSource, ReportFormat, RunReport,
};
use qacokit::QacoError;

#[derive(Parser)]
#[command(name = "qacokit", about = "Quantum-inspired ant colony TSP solver and benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// TSPLIB file path or random:N:SEED
    instance: String,
    /// Single run seed (shorthand for --seeds N)
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated seed list
    #[arg(long)]
    seeds: Option<String>,
    /// Iteration budget for both solver families
    #[arg(long)]
    iters: Option<usize>,
    /// Cities per decomposition leaf
    #[arg(long)]
    cap: Option<usize>,
    /// Noise channel, MODEL:RATE with MODEL in {bitflip, thermal}
    #[arg(long)]
    noise: Option<String>,
    /// Metric override: euc2d | geo | raw | explicit
    #[arg(long)]
    metric: Option<String>,
    /// Flat key = value config file applied before the flags
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv | json | svg
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm on one instance
    Solve {
        #[command(flatten)]
        common: CommonOpts,
        /// aco | qaco | aco-kmeans | qaco-kmeans
        #[arg(long, default_value = "qaco-kmeans")]
        algo: String,
    },
    /// Noise sweep over both channel models at the given rates
    Sweep {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long, default_value = "qaco-kmeans")]
        algo: String,
        /// Comma-separated noise rates
        #[arg(long, default_value = "0.001,0.01,0.02,0.05,0.1")]
        rates: String,
    },
    /// Run several algorithms on the same instance with paired seeds
    Compare {
        #[command(flatten)]
        common: CommonOpts,
        /// Comma-separated algorithm list
        #[arg(long, default_value = "aco,qaco-kmeans")]
        algos: String,
    },
}

fn build_config(common: &CommonOpts, algo: &str) -> Result<ExperimentConfig, QacoError> {
    let source = InstanceSource::parse(&common.instance)?;
    let algorithm = Algorithm::parse(algo)?;
    let mut cfg = ExperimentConfig::new(source, algorithm, vec![0]);

    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| QacoError::Config(format!("cannot read {}: {e}", path.display())))?;
        for (k, v) in parse_config_file(&text)? {
            apply_config_key(&mut cfg, &k, &v)?;
        }
        cfg.algorithm = algorithm; // the flag wins over the file
    }

    if let Some(seeds) = &common.seeds {
        cfg.seeds = seeds
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| QacoError::Config(format!("bad seed {s}")))
            })
            .collect::<Result<Vec<u64>, _>>()?;
    }
    if let Some(seed) = common.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(iters) = common.iters {
        cfg.aco.iterations = iters;
        cfg.qaco.max_iterations = iters;
    }
    if let Some(cap) = common.cap {
        cfg.cap = cap;
        cfg.qaco.city_cap = cap;
    }
    if let Some(noise) = &common.noise {
        cfg.qaco.noise = parse_noise(noise)?;
    }
    if let Some(metric) = &common.metric {
        apply_config_key(&mut cfg, "metric", metric)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_out(out: &Option<PathBuf>, text: &str) -> Result<(), QacoError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(QacoError::Io),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run() -> Result<(), QacoError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve { common, algo } => {
            let cfg = build_config(&common, &algo)?;
            let format = ReportFormat::parse(&common.format)?;
            let report = run_experiment(&cfg)?;
            write_out(&common.out, &emit_report(&report, format)?)
        }
        Command::Sweep {
            common,
            algo,
            rates,
        } => {
            let cfg = build_config(&common, &algo)?;
            let rates: Vec<f64> = rates
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| QacoError::Config(format!("bad rate {s}")))
                })
                .collect::<Result<Vec<f64>, _>>()?;
            let format = ReportFormat::parse(&common.format)?;
            let table = noise_sweep(&cfg, &rates)?;
            let text = match format {
                ReportFormat::Csv => {
                    let mut out = String::from("model,rate,algorithm,instance,seed,best_length\n");
                    for ((model, rate), report) in &table {
                        for r in &report.records {
                            out.push_str(&format!(
                                "{model:?},{rate},{},{},{},{}\n",
                                report.algorithm, report.instance, r.seed, r.best_length
                            ));
                        }
                    }
                    out
                }
                _ => {
                    let reports: Vec<&RunReport> = table.iter().map(|(_, r)| r).collect();
                    serde_json::to_string_pretty(&reports).expect("reports serialize")
                }
            };
            write_out(&common.out, &text)
        }
        Command::Compare { common, algos } => {
            let format = ReportFormat::parse(&common.format)?;
            let mut reports = Vec::new();
            for algo in algos.split(',') {
                let cfg = build_config(&common, algo.trim())?;
                reports.push(run_experiment(&cfg)?);
            }
            let text = match format {
                // wall time omitted so identical configs give identical bytes
                ReportFormat::Csv => to_csv(&reports, false),
                _ => serde_json::to_string_pretty(&reports).expect("reports serialize"),
            };
            write_out(&common.out, &text)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
