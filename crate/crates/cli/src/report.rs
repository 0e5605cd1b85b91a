//! `report.json` and CSV output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use adiabat_core::diagnostics::{loglog_fit, DiagnosticSeries};
use adiabat_core::scenario::{Evaluation, PropagatorSource};
use adiabat_core::{Classification, DiagnosticsReport};
use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::ScenarioConfig;

#[derive(Debug, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub core_version: &'static str,
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn new(seed: Option<u64>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            core_version: adiabat_core::VERSION,
            seed,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TauResult {
    pub tau: f64,
    pub propagator: PropagatorSource,
    pub diagnostics: DiagnosticsReport,
}

#[derive(Debug, Serialize)]
pub struct Slope {
    pub quantity: &'static str,
    pub slope: Option<f64>,
    pub residual: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: ScenarioConfig,
    pub system: &'static str,
    pub results: Vec<TauResult>,
    pub classification: Option<Classification>,
    pub classification_note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slopes: Option<Vec<Slope>>,
    pub provenance: Provenance,
}

type Quantity = (&'static str, fn(&DiagnosticsReport) -> Option<f64>);

pub const SCAN_QUANTITIES: [Quantity; 6] = [
    ("qac_max", |r| Some(r.qac_max)),
    ("resonance_max", |r| Some(r.resonance_max)),
    ("f_norm", |r| Some(r.f_norm)),
    ("projector_drift", |r| Some(r.projector_drift)),
    ("intertwining_defect", |r| r.intertwining_defect),
    ("w_deviation", |r| r.w_deviation),
];

/// Log-log slope of each scanned quantity against `τ`.
pub fn slopes(results: &[TauResult]) -> Vec<Slope> {
    let taus: Vec<f64> = results.iter().map(|r| r.tau).collect();
    SCAN_QUANTITIES
        .iter()
        .map(|(name, get)| {
            let values: Option<Vec<f64>> = results.iter().map(|r| get(&r.diagnostics)).collect();
            let fit = match values {
                Some(v) => loglog_fit(&taus, &v, 3).map_err(|e| e.to_string()),
                None => Err("not computed".to_string()),
            };
            match fit {
                Ok(f) => Slope {
                    quantity: name,
                    slope: Some(f.slope),
                    residual: Some(f.residual),
                    note: None,
                },
                Err(e) => Slope {
                    quantity: name,
                    slope: None,
                    residual: None,
                    note: Some(e),
                },
            }
        })
        .collect()
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn series_csv(tag: &str, series: &DiagnosticSeries, stride: usize) -> String {
    let mut out = String::from("s");
    for r in &series.resonances {
        let _ = write!(out, ",{tag}_R_{}_{}_re,{tag}_R_{}_{}_im", r.m, r.n, r.m, r.n);
    }
    let _ = write!(out, ",{tag}_f_norm,{tag}_projector_drift");
    if series.intertwining.is_some() {
        let _ = write!(out, ",{tag}_intertwining");
    }
    out.push('\n');
    let last = series.s.len().saturating_sub(1);
    for k in (0..series.s.len()).filter(|k| k % stride == 0 || *k == last) {
        out.push_str(&num(series.s[k]));
        for r in &series.resonances {
            let _ = write!(out, ",{},{}", num(r.values[k].re), num(r.values[k].im));
        }
        let _ = write!(out, ",{},{}", num(series.f_norm[k]), num(series.projector_drift[k]));
        if let Some(i) = &series.intertwining {
            let _ = write!(out, ",{}", num(i[k]));
        }
        out.push('\n');
    }
    out
}

pub fn scan_csv(results: &[TauResult]) -> String {
    let mut out = String::from("tau");
    for (name, _) in SCAN_QUANTITIES {
        let _ = write!(out, ",{name}");
    }
    out.push('\n');
    for r in results {
        out.push_str(&num(r.tau));
        for (_, get) in SCAN_QUANTITIES {
            let _ = write!(out, ",{}", get(&r.diagnostics).map(num).unwrap_or_default());
        }
        out.push('\n');
    }
    out
}

pub fn write(dir: &Path, report: &RunReport, evaluations: &[Evaluation], cfg: &ScenarioConfig) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let json = serde_json::to_string_pretty(report)?;
    fs::write(dir.join("report.json"), json + "\n").context("writing report.json")?;
    if cfg.output.series {
        for (i, ev) in evaluations.iter().enumerate() {
            let name = format!("series_{}_{i}.csv", report.system);
            fs::write(dir.join(&name), series_csv(report.system, &ev.series, cfg.output.stride))
                .with_context(|| format!("writing {name}"))?;
        }
    }
    if report.slopes.is_some() {
        fs::write(dir.join("scan.csv"), scan_csv(&report.results)).context("writing scan.csv")?;
    }
    Ok(())
}
