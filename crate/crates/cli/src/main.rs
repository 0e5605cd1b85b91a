mod config;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adiabat_core::scenario::Evaluation;
use adiabat_core::{classify, verify_all, ClassifierSample, GridSpec, VerifyOptions};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use config::{ConfigError, ScenarioConfig};
use report::{Provenance, RunReport, TauResult};

#[derive(Parser)]
#[command(name = "adiabat", version, about = "Adiabaticity diagnostics for time-dependent Hamiltonians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a scenario at every configured tau.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Like `run`, plus log-log slopes of each quantity against tau.
    Scan {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Check the closed-form identities of the spin-1/2 example.
    VerifyPaper {
        #[arg(long)]
        json: bool,
        /// Hold every identity to this tolerance instead of its own.
        #[arg(long)]
        tolerance: Option<f64>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Fixed number of grid points, overriding the config.
    #[arg(long)]
    grid: Option<usize>,
    /// Reserved; nothing in the pipeline is random.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

enum Failure {
    Config(String),
    Numerical(String),
    Verification,
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

fn evaluate_all(cfg: &ScenarioConfig) -> Result<Vec<Evaluation>, Failure> {
    let sc = cfg.scenario()?;
    let spec = cfg.grid_spec();
    cfg.taus
        .par_iter()
        .map(|&tau| sc.evaluate(tau, spec, cfg.diagnostics.propagator))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::Numerical(e.to_string()))
}

fn run(path: &Path, common: &Common, scan: bool) -> Result<(), Failure> {
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(n) = common.grid {
        cfg.grid = GridSpec::Points(n);
        cfg.validate()?;
    }
    if scan && cfg.taus.len() < 3 {
        return Err(Failure::Config(format!("scan needs at least 3 taus, got {}", cfg.taus.len())));
    }
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(Failure::Config("--threads must be at least 1".into()));
        }
        // only fails if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    let evaluations = evaluate_all(&cfg)?;
    let results: Vec<TauResult> = evaluations
        .iter()
        .zip(&cfg.taus)
        .map(|(ev, &tau)| TauResult {
            tau,
            propagator: ev.source,
            diagnostics: ev.report.clone(),
        })
        .collect();
    let samples: Vec<ClassifierSample> = results.iter().map(|r| r.diagnostics.classifier_sample()).collect();
    let (classification, classification_note) = match classify(&samples, &cfg.thresholds) {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let slopes = scan.then(|| report::slopes(&results));
    let rep = RunReport {
        schema_version: config::SCHEMA_VERSION,
        system: cfg.system_tag(),
        results,
        classification,
        classification_note,
        slopes,
        provenance: Provenance::new(common.seed),
        config: cfg.clone(),
    };
    report::write(&common.out, &rep, &evaluations, &cfg).map_err(|e| Failure::Numerical(format!("{e:#}")))?;

    for r in &rep.results {
        let d = &r.diagnostics;
        println!(
            "tau {:>12.5e}  points {:>7}  qac {:.3e}  max|R| {:.3e}  F {:.3e}  drift {:.3e}  intertwining {}",
            r.tau,
            d.grid_points,
            d.qac_max,
            d.resonance_max,
            d.f_norm,
            d.projector_drift,
            d.intertwining_defect.map_or("-".into(), |v| format!("{v:.3e}"))
        );
    }
    match (rep.classification, &rep.classification_note) {
        (Some(c), _) => println!("classification: {}", c.as_str()),
        (None, Some(n)) => println!("classification: unavailable ({n})"),
        _ => {}
    }
    if let Some(slopes) = &rep.slopes {
        for s in slopes {
            match s.slope {
                Some(v) => println!("slope {:<20} {v:+.4}", s.quantity),
                None => println!("slope {:<20} - ({})", s.quantity, s.note.as_deref().unwrap_or("")),
            }
        }
    }
    println!("wrote {}", common.out.display());
    Ok(())
}

fn verify(json: bool, tolerance: Option<f64>) -> Result<(), Failure> {
    if let Some(t) = tolerance {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Failure::Config(format!("--tolerance must be positive, got {t}")));
        }
    }
    let rows = verify_all(VerifyOptions {
        tolerance_override: tolerance,
    })
    .map_err(|e| Failure::Numerical(e.to_string()))?;
    let all = rows.iter().all(|r| r.passed);
    if json {
        let doc = serde_json::json!({ "passed": all, "identities": rows });
        println!("{}", serde_json::to_string_pretty(&doc).expect("plain data serializes"));
    } else {
        for r in &rows {
            println!(
                "{}  {:<30} deviation {:.3e}  tolerance {:.1e}",
                if r.passed { "PASS" } else { "FAIL" },
                r.name,
                r.deviation,
                r.tolerance
            );
        }
        let failed: Vec<&str> = rows.iter().filter(|r| !r.passed).map(|r| r.name).collect();
        if failed.is_empty() {
            println!("all {} identities hold", rows.len());
        } else {
            println!("failed: {}", failed.join(", "));
        }
    }
    if all {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { config, common } => run(config, common, false),
        Command::Scan { config, common } => run(config, common, true),
        Command::VerifyPaper { json, tolerance } => verify(*json, *tolerance),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}
