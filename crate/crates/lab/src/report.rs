//! Summaries over a directory of run artifacts.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use oqm_core::classical::{DimensionEstimate, PressureResult};
use oqm_core::spectra::{GapReport, WeylFit};
use serde::{Deserialize, Serialize};

use crate::artifact::{from_json, RunManifest, RunRecord, RunWriter, MANIFEST_NAME};
use crate::commands::{TransportRun, DIMENSION_FILE, GAP_FILE, PRESSURE_FILE, TRANSPORT_FILE};
use crate::config::{ExperimentConfig, ModelConfig};
use crate::error::LabError;

pub const REPORT_FILE: &str = "report.md";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const WEYL_COUNTS_FILE: &str = "weyl_counts.csv";
pub const TRANSPORT_TABLE_FILE: &str = "transport.csv";

/// One table row: the headline numbers of a single run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub run: usize,
    pub command: String,
    pub model: String,
    pub pressure: Option<f64>,
    pub gamma: Option<f64>,
    pub dimension: Option<f64>,
    /// `(epsilon, slope)` per threshold.
    pub weyl_slopes: Vec<(f64, f64)>,
    pub predicted_exponent: Option<f64>,
    pub gap_radii: Vec<(usize, f64)>,
    pub transport_distances: Vec<(f64, f64)>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub rows: Vec<SummaryRow>,
    pub weyl_counts: Vec<(usize, f64, usize, usize)>,
}

fn describe(model: &ModelConfig) -> String {
    match model {
        ModelConfig::Baker { base, kept } => {
            let kept: Vec<String> = kept.iter().map(u32::to_string).collect();
            format!("baker D={base} kept={{{}}}", kept.join(","))
        }
        ModelConfig::Cat { matrix, hole } => format!("cat {matrix:?} hole [{}, {})", hole[0], hole[1]),
    }
}

fn is_report_file(name: &str) -> bool {
    [REPORT_FILE, SUMMARY_FILE, WEYL_COUNTS_FILE, TRANSPORT_TABLE_FILE].contains(&name)
}

/// Runs whose outputs have not all been overwritten by later runs, oldest
/// first, paired with the outputs they still own.
fn live_runs(manifest: &RunManifest) -> Vec<(usize, &RunRecord, Vec<&str>)> {
    let mut claimed: HashSet<&str> = HashSet::new();
    let mut live = Vec::new();
    for (i, run) in manifest.runs.iter().enumerate().rev() {
        if run.command == "report" {
            continue;
        }
        let owned: Vec<&str> = run
            .outputs
            .iter()
            .map(String::as_str)
            .filter(|p| !claimed.contains(p))
            .collect();
        claimed.extend(run.outputs.iter().map(String::as_str));
        if !owned.is_empty() {
            live.push((i + 1, run, owned));
        }
    }
    live.reverse();
    live
}

fn row_for(dir: &Path, index: usize, run: &RunRecord, owned: &[&str], counts: &mut Vec<(usize, f64, usize, usize)>) -> Result<SummaryRow, LabError> {
    let cfg: &ExperimentConfig = &run.config;
    let mut row = SummaryRow {
        run: index,
        command: run.command.clone(),
        model: if run.command == "transport" {
            format!("line, W = {}", cfg.transport.generator)
        } else {
            describe(&cfg.model)
        },
        ..SummaryRow::default()
    };
    for &name in owned {
        let path = dir.join(name);
        if name == PRESSURE_FILE {
            let p: PressureResult = from_json(&path)?;
            row.pressure = Some(p.value);
            if p.s == 0.5 {
                row.gamma = Some(p.value.exp());
            }
        } else if name == DIMENSION_FILE {
            let d: DimensionEstimate = from_json(&path)?;
            row.dimension = Some(d.slope);
        } else if name.starts_with("weyl_eps") && name.ends_with(".json") {
            let fit: WeylFit = from_json(&path)?;
            row.weyl_slopes.push((fit.epsilon, fit.slope));
            row.predicted_exponent = Some(fit.predicted_exponent);
            for (&n, &c) in fit.dims.iter().zip(&fit.counts) {
                counts.push((index, fit.epsilon, n, c));
            }
        } else if name == GAP_FILE {
            let g: GapReport = from_json(&path)?;
            row.pressure = Some(g.pressure_half);
            row.gamma = Some(g.gamma);
            row.gap_radii = g.radii.clone();
            row.notes.push(format!("gap rule {}: radius at largest N {} gamma + {}", if g.pass { "passes" } else { "fails" }, if g.pass { "<=" } else { ">" }, g.pass_margin));
            if let Some(note) = g.note {
                row.notes.push(note);
            }
        } else if name == TRANSPORT_FILE {
            let t: TransportRun = from_json(&path)?;
            row.transport_distances = t.reports.iter().map(|r| (r.h, r.distance)).collect();
            if !t.nonincreasing {
                row.notes.push("transport distances grow along the h sweep".into());
            }
        }
    }
    row.weyl_slopes.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(row)
}

/// Reads and verifies every artifact listed in the manifest of `dir`.
pub fn collect(dir: &Path) -> Result<Report, LabError> {
    if !dir.is_dir() {
        return Err(LabError::artifact(dir, "not a directory"));
    }
    if crate::commands::is_empty_dir(dir) {
        return Err(LabError::artifact(dir, "directory is empty"));
    }
    if !dir.join(MANIFEST_NAME).exists() {
        return Err(LabError::artifact(dir.join(MANIFEST_NAME), "no manifest"));
    }
    let manifest = RunManifest::load(dir)?;
    manifest.verify(dir)?;
    let mut counts = Vec::new();
    let mut rows = Vec::new();
    for (index, run, owned) in live_runs(&manifest) {
        let owned: Vec<&str> = owned.into_iter().filter(|n| !is_report_file(n)).collect();
        for name in &owned {
            if manifest.entry(name).is_none() {
                return Err(LabError::artifact(dir.join(name), "listed by a run but missing from the file table"));
            }
        }
        rows.push(row_for(dir, index, run, &owned, &mut counts)?);
    }
    if rows.is_empty() {
        return Err(LabError::artifact(dir, "manifest lists no experiment runs"));
    }
    Ok(Report { rows, weyl_counts: counts })
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into())
}

fn pairs<K: std::fmt::Display>(items: &[(K, f64)]) -> String {
    if items.is_empty() {
        return "-".into();
    }
    items.iter().map(|(k, v)| format!("{k}: {v:.4}")).collect::<Vec<_>>().join(", ")
}

impl Report {
    pub fn markdown(&self) -> String {
        let mut md = String::from("# Open quantum map runs\n\n");
        md.push_str("| run | command | model | pressure | gamma | dimension | Weyl slope (eps: slope) | predicted | gap radii (N: r) | transport (h: dist) |\n");
        md.push_str("|---|---|---|---|---|---|---|---|---|---|\n");
        for r in &self.rows {
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |",
                r.run,
                r.command,
                r.model,
                cell(r.pressure),
                cell(r.gamma),
                cell(r.dimension),
                pairs(&r.weyl_slopes),
                cell(r.predicted_exponent),
                pairs(&r.gap_radii),
                pairs(&r.transport_distances),
            );
        }
        let notes: Vec<String> = self
            .rows
            .iter()
            .flat_map(|r| r.notes.iter().map(move |n| format!("- run {}: {n}", r.run)))
            .collect();
        if !notes.is_empty() {
            md.push_str("\n## Notes\n\n");
            md.push_str(&notes.join("\n"));
            md.push('\n');
        }
        md
    }

    /// Long format: `run,command,quantity,key,value`.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("run,command,quantity,key,value\n");
        for r in &self.rows {
            let mut line = |q: &str, k: String, v: f64| {
                let _ = writeln!(out, "{},{},{q},{k},{v:.16e}", r.run, r.command);
            };
            if let Some(v) = r.pressure {
                line("pressure", String::new(), v);
            }
            if let Some(v) = r.gamma {
                line("gamma", String::new(), v);
            }
            if let Some(v) = r.dimension {
                line("dimension", String::new(), v);
            }
            for &(e, s) in &r.weyl_slopes {
                line("weyl_slope", e.to_string(), s);
            }
            if let Some(v) = r.predicted_exponent {
                line("predicted_exponent", String::new(), v);
            }
            for &(n, rad) in &r.gap_radii {
                line("spectral_radius", n.to_string(), rad);
            }
            for &(h, d) in &r.transport_distances {
                line("transport_distance", h.to_string(), d);
            }
        }
        out
    }

    pub fn weyl_counts_csv(&self) -> String {
        let mut out = String::from("run,epsilon,N,count\n");
        for &(run, eps, n, c) in &self.weyl_counts {
            let _ = writeln!(out, "{run},{eps},{n},{c}");
        }
        out
    }

    pub fn transport_csv(&self) -> String {
        let mut out = String::from("run,h,distance\n");
        for r in &self.rows {
            for &(h, d) in &r.transport_distances {
                let _ = writeln!(out, "{},{h},{d:.16e}", r.run);
            }
        }
        out
    }

    pub fn write(&self, out: &mut RunWriter) -> Result<(), LabError> {
        out.write(REPORT_FILE, self.markdown().as_bytes())?;
        out.write(SUMMARY_FILE, self.summary_csv().as_bytes())?;
        out.write(WEYL_COUNTS_FILE, self.weyl_counts_csv().as_bytes())?;
        out.write(TRANSPORT_TABLE_FILE, self.transport_csv().as_bytes())?;
        Ok(())
    }
}
