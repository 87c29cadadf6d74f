//! Command-line front end for the pipeline ADC bench.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pipeadc::harness::{
    calibrate, linearity_run, run_averaged, sweep_fin, sweep_rate, write_csv, write_report_json,
    CalibrationTargets, RunParams,
};
use pipeadc::{harness, AdcConfig};

#[derive(Parser)]
#[command(name = "pipeadc", about = "Behavioral 12-bit pipeline ADC simulator and test bench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Converter configuration (TOML); defaults to the built-in baseline
    /// with the silicon mismatch profile.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Conversion rate in Hz.
    #[arg(long, default_value_t = 110e6)]
    fs: f64,
    /// Input frequency in Hz (nearest coherent tone is used).
    #[arg(long, default_value_t = 10e6)]
    fin: f64,
    /// Stimulus amplitude as a fraction of full scale.
    #[arg(long, default_value_t = harness::SWEEP_AMPLITUDE)]
    amp: f64,
    /// Record length (power of two).
    #[arg(long, default_value_t = 8192)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
}

#[derive(Subcommand)]
enum Command {
    /// One operating point: full metrics report.
    Single(CommonArgs),
    /// Metrics versus conversion rate at fixed input frequency.
    SweepRate {
        #[command(flatten)]
        common: CommonArgs,
        /// Rates in MS/s, e.g. 20,30,...,140.
        #[arg(long, value_delimiter = ',', default_values_t = default_rates())]
        rates: Vec<f64>,
        /// Seeds averaged per sweep point.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1u64, 2, 3, 4])]
        seeds: Vec<u64>,
    },
    /// Metrics versus input frequency at fixed conversion rate.
    SweepFin {
        #[command(flatten)]
        common: CommonArgs,
        /// Input frequencies in MHz.
        #[arg(long, value_delimiter = ',', default_values_t = default_fins())]
        fins: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1u64, 2, 3, 4])]
        seeds: Vec<u64>,
    },
    /// Histogram DNL/INL from a long overdriven sine record.
    Linearity {
        #[command(flatten)]
        common: CommonArgs,
        /// Record length override; defaults to 2^20.
        #[arg(long, default_value_t = 1 << 20)]
        record: usize,
    },
    /// Calibrate noise/distortion/jitter knobs to the measured targets and
    /// write the resulting configuration.
    Calibrate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 67.1)]
        snr: f64,
        #[arg(long, default_value_t = 69.4)]
        sfdr: f64,
        #[arg(long, default_value_t = 66.25)]
        snr_hf: f64,
    },
}

fn default_rates() -> Vec<f64> {
    (2..=14).map(|k| k as f64 * 10.0).collect()
}

fn default_fins() -> Vec<f64> {
    vec![2.0, 5.0, 10.0, 20.0, 40.0, 60.0, 80.0, 100.0, 150.0, 200.0, 300.0, 400.0]
}

fn load_or_default(path: &Option<PathBuf>) -> pipeadc::Result<AdcConfig> {
    match path {
        Some(p) => harness::load_config(p),
        None => Ok(AdcConfig::silicon_default()),
    }
}

fn params_from(common: &CommonArgs) -> RunParams {
    RunParams {
        f_cr_hz: common.fs,
        f_in_hz: common.fin,
        amplitude: common.amp,
        record_length: common.n,
        seed: common.seed,
        area_mm2: harness::DEFAULT_AREA_MM2,
    }
}

fn emit_table(
    table: &pipeadc::SweepTable,
    common: &CommonArgs,
) -> pipeadc::Result<()> {
    match (&common.out, common.format) {
        (Some(path), OutputFormat::Csv) => write_csv(table, path),
        (Some(path), OutputFormat::Json) => write_report_json(table, path),
        (None, OutputFormat::Json) => {
            println!(
                "{}",
                serde_json::to_string_pretty(table)
                    .map_err(|e| pipeadc::Error::Config(e.to_string()))?
            );
            Ok(())
        }
        (None, OutputFormat::Csv) => {
            println!("independent_var,snr_db,sndr_db,sfdr_db,enob,power_mw,fom");
            for r in &table.rows {
                println!(
                    "{:.4},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}",
                    r.independent_var, r.snr_db, r.sndr_db, r.sfdr_db, r.enob, r.power_mw, r.fom
                );
            }
            Ok(())
        }
    }
}

fn emit_json<T: serde::Serialize>(value: &T, out: &Option<PathBuf>) -> pipeadc::Result<()> {
    match out {
        Some(path) => write_report_json(value, path),
        None => {
            println!(
                "{}",
                serde_json::to_string_pretty(value)
                    .map_err(|e| pipeadc::Error::Config(e.to_string()))?
            );
            Ok(())
        }
    }
}

fn run() -> pipeadc::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Single(common) => {
            let cfg = load_or_default(&common.config)?;
            let report = run_averaged(&cfg, &params_from(&common), &[common.seed])?;
            emit_json(&report, &common.out)
        }
        Command::SweepRate { common, rates, seeds } => {
            let cfg = load_or_default(&common.config)?;
            let rates_hz: Vec<f64> = rates.iter().map(|r| r * 1e6).collect();
            let table = sweep_rate(&cfg, &rates_hz, &params_from(&common), &seeds)?;
            emit_table(&table, &common)
        }
        Command::SweepFin { common, fins, seeds } => {
            let cfg = load_or_default(&common.config)?;
            let fins_hz: Vec<f64> = fins.iter().map(|f| f * 1e6).collect();
            let table = sweep_fin(&cfg, &fins_hz, &params_from(&common), &seeds)?;
            emit_table(&table, &common)
        }
        Command::Linearity { common, record } => {
            let cfg = load_or_default(&common.config)?;
            let mut params = params_from(&common);
            params.record_length = record;
            let report = linearity_run(&cfg, &params)?;
            let summary = serde_json::json!({
                "dnl_max_abs_lsb": report.dnl_max_abs(),
                "inl_min_lsb": report.inl_range().0,
                "inl_max_lsb": report.inl_range().1,
                "missing_codes": report.missing_codes,
                "short_record": report.short_record,
                "dnl_lsb": report.dnl_lsb,
                "inl_lsb": report.inl_lsb,
            });
            emit_json(&summary, &common.out)
        }
        Command::Calibrate { common, snr, sfdr, snr_hf } => {
            let base = load_or_default(&common.config)?;
            let targets = CalibrationTargets {
                snr_db: snr,
                sfdr_db: sfdr,
                snr_hf_db: snr_hf,
                f_cr_hz: common.fs,
                ..CalibrationTargets::default()
            };
            let (cfg, report) = calibrate(&base, &targets)?;
            if let Some(path) = &common.out {
                harness::save_config(&cfg, path)?;
                eprintln!("calibrated config written to {}", path.display());
            }
            println!(
                "{}",
                serde_json::to_string_pretty(&report)
                    .map_err(|e| pipeadc::Error::Config(e.to_string()))?
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
