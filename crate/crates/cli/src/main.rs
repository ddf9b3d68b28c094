//! `dre` — run density-ratio benchmarks, fits, and diagnostics from presets
//! or JSON experiment configs.
//!
//! Exit codes: 0 success, 1 error, 2 acceptance-bound violation in `bench`.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use dre_core::harness::presets::{self, bound_satisfied, Preset};
use dre_core::harness::{
    rnd_diagnostic, run, run_hmc_uncertainty, run_with_fit, shift_diagnostic, ExperimentConfig,
    MethodSpec, ResultRecord, ShiftDataset,
};
use dre_core::util::format_sig6;
use dre_core::{AuxiliaryScheme, DistributionSpec};

#[derive(Parser)]
#[command(name = "dre", version, about = "Density ratio estimation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON experiment config, or a preset name via `preset:<name>`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset name (alternative to --config).
    #[arg(long)]
    preset: Option<String>,
    /// Override the config's base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutputFormat,
}

#[derive(Subcommand)]
enum Command {
    /// Draw samples from a distribution spec and write them as CSV.
    Sample {
        /// JSON file holding a distribution spec.
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit an estimator and save the model JSON.
    Fit {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run a KL estimation pipeline and report (truth, estimate, stderr).
    Kl {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run a mutual-information pipeline (KL readout on joint samples).
    Mi {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run benchmark presets; exits 2 if an acceptance bound is violated.
    Bench {
        /// Preset name or `all` for the standard benchmark set.
        target: String,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: OutputFormat,
    },
    /// Diagnostics: train-eval shift scatter or support violations.
    Diagnose {
        #[command(subcommand)]
        kind: DiagnoseKind,
    },
    /// Posterior uncertainty of the log-ratio over a 1D grid.
    Hmc {
        #[command(flatten)]
        common: CommonArgs,
        /// Evaluation grid, inclusive.
        #[arg(long, default_value_t = -8.0)]
        grid_lo: f64,
        #[arg(long, default_value_t = 8.0)]
        grid_hi: f64,
        #[arg(long, default_value_t = 161)]
        grid_points: usize,
    },
}

#[derive(Subcommand)]
enum DiagnoseKind {
    /// Per-link and chained readouts on samples from every distribution.
    Shift {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Count support violations of ln(m/q) on m-samples.
    Rnd {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 20.0)]
        threshold: f64,
    },
}

fn load_config(common: &CommonArgs, default_preset: Option<&str>) -> anyhow::Result<ExperimentConfig> {
    let mut config = if let Some(name) = &common.preset {
        presets::preset(name)?.config
    } else if let Some(path) = &common.config {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        ExperimentConfig::from_json(&text)?
    } else if let Some(name) = default_preset {
        presets::preset(name)?.config
    } else {
        bail!("pass --config PATH or --preset NAME");
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn write_output(out: &Option<PathBuf>, content: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent() {
                if !dir.as_os_str().is_empty() {
                    fs::create_dir_all(dir)?;
                }
            }
            fs::write(path, content).with_context(|| format!("writing {}", path.display()))?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content.as_bytes())?;
        }
    }
    Ok(())
}

fn records_output(records: &[ResultRecord], format: OutputFormat) -> anyhow::Result<String> {
    Ok(match format {
        OutputFormat::Csv => {
            let mut s = String::from(ResultRecord::csv_header());
            s.push('\n');
            for r in records {
                s.push_str(&r.to_csv_row());
                s.push('\n');
            }
            s
        }
        OutputFormat::Json => serde_json::to_string_pretty(records)? + "\n",
    })
}

fn run_bench(
    target: &str,
    jobs: usize,
    seed_override: Option<u64>,
    out: &Option<PathBuf>,
    format: OutputFormat,
) -> anyhow::Result<ExitCode> {
    let names: Vec<String> = if target == "all" {
        presets::bench_names().iter().map(|s| s.to_string()).collect()
    } else {
        vec![target.to_string()]
    };
    let loaded: Vec<Preset> = names
        .iter()
        .map(|n| presets::preset(n).map_err(anyhow::Error::from))
        .collect::<anyhow::Result<_>>()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()?;

    // one entry per (preset, run); runs of one preset share its bound
    let mut tasks = Vec::new();
    for (pi, preset) in loaded.iter().enumerate() {
        for run_idx in 0..preset.n_runs {
            tasks.push((pi, run_idx));
        }
    }
    let results: Vec<(usize, ResultRecord)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|(pi, run_idx)| {
                let mut cfg = loaded[*pi].run_config(*run_idx);
                if let Some(s) = seed_override {
                    cfg.seed = s + *run_idx as u64;
                }
                run(&cfg).map(|r| (*pi, r)).map_err(anyhow::Error::from)
            })
            .collect::<anyhow::Result<Vec<_>>>()
    })?;

    let mut records: Vec<ResultRecord> = Vec::new();
    let mut all_ok = true;
    for (pi, preset) in loaded.iter().enumerate() {
        let runs: Vec<&ResultRecord> = results
            .iter()
            .filter(|(i, _)| *i == pi)
            .map(|(_, r)| r)
            .collect();
        if let Some(bound) = &preset.bound {
            let mean_est = runs.iter().map(|r| r.estimate).sum::<f64>() / runs.len() as f64;
            let truth = runs[0].true_value;
            let ok = bound_satisfied(bound, mean_est, truth);
            eprintln!(
                "{}: mean estimate {} (truth {}) -> {}",
                preset.config.name,
                format_sig6(mean_est),
                format_sig6(truth),
                if ok { "ok" } else { "BOUND VIOLATED" }
            );
            all_ok &= ok;
        } else {
            for r in &runs {
                eprintln!(
                    "{}: estimate {} (truth {})",
                    preset.config.name,
                    format_sig6(r.estimate),
                    format_sig6(r.true_value)
                );
            }
        }
        records.extend(runs.into_iter().cloned());
    }

    let content = records_output(&records, format)?;
    write_output(out, &content)?;
    Ok(if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn main() -> ExitCode {
    match try_main() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn try_main() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Sample { config, n, seed, out } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("reading spec {}", config.display()))?;
            let spec: DistributionSpec = serde_json::from_str(&text)?;
            let samples = spec.sample(n, seed)?;
            let mut csv = String::new();
            for i in 0..samples.nrows() {
                let row: Vec<String> = (0..samples.ncols())
                    .map(|j| format!("{}", samples[(i, j)]))
                    .collect();
                csv.push_str(&row.join(","));
                csv.push('\n');
            }
            write_output(&out, &csv)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Fit { common } => {
            let config = load_config(&common, None)?;
            let (record, fitted) = run_with_fit(&config)?;
            eprintln!(
                "{}: estimate {} (truth {})",
                config.name,
                format_sig6(record.estimate),
                format_sig6(record.true_value)
            );
            write_output(&common.out, &(fitted.to_json()? + "\n"))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Kl { common } | Command::Mi { common } => {
            let config = load_config(&common, None)?;
            let record = run(&config)?;
            let content = records_output(&[record], common.format)?;
            write_output(&common.out, &content)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench {
            target,
            jobs,
            seed,
            out,
            format,
        } => run_bench(&target, jobs, seed, &out, format),
        Command::Diagnose { kind } => match kind {
            DiagnoseKind::Shift { common } => {
                let config = load_config(&common, Some("shift_sec33_tre"))?;
                let dataset: ShiftDataset = shift_diagnostic(&config)?;
                let content = match common.format {
                    OutputFormat::Csv => dataset.to_csv(),
                    OutputFormat::Json => serde_json::to_string_pretty(&dataset)? + "\n",
                };
                write_output(&common.out, &content)?;
                Ok(ExitCode::SUCCESS)
            }
            DiagnoseKind::Rnd {
                common,
                n,
                threshold,
            } => {
                let config = load_config(&common, Some("rnd_mixture"))?;
                let m = match &config.method {
                    MethodSpec::Mdre {
                        auxiliary: AuxiliaryScheme::Overlapping { spec },
                    } => spec.clone(),
                    _ => bail!("rnd diagnostic needs an overlapping auxiliary in the config"),
                };
                let report = rnd_diagnostic(&config.p, &config.q, &m, n, threshold, config.seed)?;
                let content = serde_json::to_string_pretty(&report)? + "\n";
                eprintln!(
                    "{}: {} infinite, {} above threshold on m-samples",
                    config.name, report.m_over_q_infinite, report.m_over_q_above_threshold
                );
                write_output(&common.out, &content)?;
                Ok(ExitCode::SUCCESS)
            }
        },
        Command::Hmc {
            common,
            grid_lo,
            grid_hi,
            grid_points,
        } => {
            let config = load_config(&common, Some("hmc_sec33"))?;
            if grid_points < 2 || !(grid_lo < grid_hi) {
                bail!("bad grid");
            }
            let step = (grid_hi - grid_lo) / (grid_points - 1) as f64;
            let grid: Vec<f64> = (0..grid_points).map(|i| grid_lo + i as f64 * step).collect();
            let result = run_hmc_uncertainty(&config, &grid)?;
            eprintln!(
                "{}: acceptance rate {:.3}, median |dH| {:.4}",
                config.name, result.acceptance_rate, result.median_abs_energy_error
            );
            let content = match common.format {
                OutputFormat::Csv => result.to_csv(),
                OutputFormat::Json => serde_json::to_string_pretty(&result)? + "\n",
            };
            write_output(&common.out, &content)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
