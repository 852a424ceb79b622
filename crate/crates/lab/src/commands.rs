//! The experiment pipelines behind each subcommand.

use std::path::Path;

use oqm_core::classical::{DimensionEstimate, PressureResult};
use oqm_core::quantize::fio::{transport_check_with, transport_symbol, TransportReport};
use oqm_core::quantize::{quantize_open_baker, quantize_open_cat, QuantumMap};
use oqm_core::spectra::{
    eigenvalues_with, fit_weyl, gap_from_spectra, write_spectrum_csv, EigenOptions, GapReport, SpectrumResult, WeylFit,
};
use oqm_core::Execution;
use serde::{Deserialize, Serialize};

use crate::artifact::RunWriter;
use crate::config::{ExperimentConfig, ModelConfig, Stage};
use crate::error::LabError;

pub const PRESSURE_FILE: &str = "pressure.json";
pub const DIMENSION_FILE: &str = "dimension.json";
pub const SPECTRUM_FILE: &str = "spectrum.csv";
pub const GAP_FILE: &str = "gap.json";
pub const TRANSPORT_FILE: &str = "transport.json";

pub fn weyl_file(epsilon: f64) -> String {
    format!("weyl_eps{epsilon}.json")
}

pub fn spectrum_file_for(dim: usize) -> String {
    format!("spectrum_N{dim}.csv")
}

/// Relative growth tolerated between consecutive distances of an h sweep.
pub const SWEEP_SLACK: f64 = 0.2;
/// Distances below this are quadrature roundoff; exact for linear maps.
pub const SWEEP_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportRun {
    pub generator: String,
    pub start: (f64, f64),
    /// One report per h, in decreasing h.
    pub reports: Vec<TransportReport>,
    /// Each distance is at most `1 + SWEEP_SLACK` times the previous one,
    /// up to the roundoff floor.
    pub nonincreasing: bool,
}

fn spectrum_csv(results: &[SpectrumResult]) -> Vec<u8> {
    let mut out = Vec::new();
    write_spectrum_csv(results, &mut out).expect("writing to memory");
    out
}

fn build_maps(cfg: &ExperimentConfig) -> Result<Vec<QuantumMap>, LabError> {
    match &cfg.model {
        ModelConfig::Baker { .. } => {
            let spec = cfg.baker_spec()?;
            cfg.dims
                .iter()
                .map(|&n| quantize_open_baker(&spec, n, cfg.theta).map_err(LabError::from))
                .collect()
        }
        ModelConfig::Cat { .. } => {
            let (spec, hole) = cfg.cat_spec()?;
            cfg.dims
                .iter()
                .map(|&n| quantize_open_cat(&spec, hole, n).map_err(LabError::from))
                .collect()
        }
    }
}

/// Spectra of the configured model at every dimension, in config order.
pub fn compute_spectra(cfg: &ExperimentConfig, exec: Execution) -> Result<Vec<SpectrumResult>, LabError> {
    // every matrix is built before the first diagonalization, so
    // construction errors surface before any expensive work
    let maps = build_maps(cfg)?;
    let options = EigenOptions { max_dim: cfg.caps.max_dim };
    exec.map_slice(&maps, |m| eigenvalues_with(m, options))
        .into_iter()
        .map(|r| r.map_err(LabError::from))
        .collect()
}

pub fn pressure(cfg: &ExperimentConfig, out: &mut RunWriter) -> Result<PressureResult, LabError> {
    cfg.validate(Stage::Pressure)?;
    let spec = cfg.baker_spec()?;
    let result = out.time("pressure", || spec.topological_pressure(cfg.pressure_s, cfg.word_length, cfg.caps.enumeration))?;
    out.write_json(PRESSURE_FILE, &result)?;
    Ok(result)
}

pub fn dimension(cfg: &ExperimentConfig, out: &mut RunWriter) -> Result<DimensionEstimate, LabError> {
    cfg.validate(Stage::Dimension)?;
    let spec = cfg.baker_spec()?;
    let est = out.time("box counting", || spec.minkowski_dimension(cfg.max_depth, cfg.caps.enumeration))?;
    out.write_json(DIMENSION_FILE, &est)?;
    Ok(est)
}

pub fn spectrum(cfg: &ExperimentConfig, exec: Execution, out: &mut RunWriter) -> Result<Vec<SpectrumResult>, LabError> {
    cfg.validate(Stage::Spectrum)?;
    let spectra = out.time("diagonalization", || compute_spectra(cfg, exec))?;
    out.write(SPECTRUM_FILE, &spectrum_csv(&spectra))?;
    Ok(spectra)
}

pub fn weyl(cfg: &ExperimentConfig, exec: Execution, out: &mut RunWriter) -> Result<Vec<WeylFit>, LabError> {
    cfg.validate(Stage::Weyl)?;
    let spec = cfg.baker_spec()?;
    let spectra = out.time("diagonalization", || compute_spectra(cfg, exec))?;
    for s in &spectra {
        out.write(&spectrum_file_for(s.dim()), &spectrum_csv(std::slice::from_ref(s)))?;
    }
    let fits = out.time("fit", || {
        cfg.epsilons
            .iter()
            .map(|&eps| fit_weyl(&spec, &spectra, eps))
            .collect::<Result<Vec<_>, _>>()
    })?;
    for fit in &fits {
        out.write_json(&weyl_file(fit.epsilon), fit)?;
    }
    Ok(fits)
}

pub fn gap(cfg: &ExperimentConfig, exec: Execution, out: &mut RunWriter) -> Result<GapReport, LabError> {
    cfg.validate(Stage::Gap)?;
    let spec = cfg.baker_spec()?;
    // cheap, and fails fast on an enumeration cap before diagonalizing
    spec.topological_pressure(0.5, 1, cfg.caps.enumeration)?;
    let spectra = out.time("diagonalization", || compute_spectra(cfg, exec))?;
    let report = gap_from_spectra(&spec, &spectra, cfg.gap_margin)?;
    out.write_json(GAP_FILE, &report)?;
    Ok(report)
}

pub fn transport(cfg: &ExperimentConfig, exec: Execution, out: &mut RunWriter) -> Result<TransportRun, LabError> {
    cfg.validate(Stage::Transport)?;
    let w = cfg.generator()?;
    let start = (cfg.transport.start[0], cfg.transport.start[1]);
    let mut hs = cfg.transport.h.clone();
    hs.sort_by(|a, b| b.total_cmp(a));
    let reports = out.time("propagation", || {
        hs.iter()
            .map(|&h| {
                let a = transport_symbol(&w, h, start)?;
                transport_check_with(&w, &a, h, start, exec)
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    let nonincreasing = reports
        .windows(2)
        .all(|p| p[1].distance <= (1.0 + SWEEP_SLACK) * p[0].distance + SWEEP_FLOOR);
    let run = TransportRun {
        generator: w.name.clone(),
        start,
        reports,
        nonincreasing,
    };
    out.write_json(TRANSPORT_FILE, &run)?;
    Ok(run)
}

/// True when `dir` holds nothing at all.
pub fn is_empty_dir(dir: &Path) -> bool {
    std::fs::read_dir(dir).map(|mut it| it.next().is_none()).unwrap_or(true)
}
