//! Experiment configuration. Every CLI invocation compiles into one of these,
//! so a run can always be replayed from the JSON echoed into its manifest.

use std::path::{Path, PathBuf};

use oqm_core::classical::{OpenBakerSpec, DEFAULT_ENUMERATION_CAP};
use oqm_core::quantize::fio::QuadraticGenerator;
use oqm_core::quantize::{CatSpec, HoleInterval, DEFAULT_THETA};
use oqm_core::spectra::{DEFAULT_GAP_MARGIN, DEFAULT_MAX_DIM};
use serde::{Deserialize, Serialize};

use crate::error::LabError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Baker { base: u32, kept: Vec<u32> },
    /// `matrix` is `[a, b, c, d]`; positions in `[hole[0], hole[1])` are removed.
    Cat { matrix: [i64; 4], hole: [f64; 2] },
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::Baker { base: 3, kept: vec![0, 2] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Caps {
    /// Largest number of words or boxes any classical enumeration may visit.
    pub enumeration: u64,
    pub max_dim: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            enumeration: DEFAULT_ENUMERATION_CAP,
            max_dim: DEFAULT_MAX_DIM,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportConfig {
    pub generator: String,
    pub h: Vec<f64>,
    pub start: [f64; 2],
}

impl Default for TransportConfig {
    fn default() -> Self {
        TransportConfig {
            generator: "shear".into(),
            h: vec![0.08, 0.04, 0.02],
            start: [0.1, 0.3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub theta: f64,
    pub dims: Vec<usize>,
    pub epsilons: Vec<f64>,
    pub pressure_s: f64,
    pub word_length: u32,
    pub max_depth: u32,
    pub gap_margin: f64,
    pub transport: TransportConfig,
    pub output_dir: PathBuf,
    pub caps: Caps,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: ModelConfig::default(),
            theta: DEFAULT_THETA,
            dims: vec![81, 243, 729],
            epsilons: vec![0.3, 0.5, 0.7],
            pressure_s: 0.5,
            word_length: 6,
            max_depth: 6,
            gap_margin: DEFAULT_GAP_MARGIN,
            transport: TransportConfig::default(),
            output_dir: PathBuf::from("oqm-out"),
            caps: Caps::default(),
        }
    }
}

/// What a command is about to do with the config; selects which fields must
/// be valid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Pressure,
    Dimension,
    Spectrum,
    Weyl,
    Gap,
    Transport,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::validation("config", format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| LabError::validation("config", e))
    }

    /// The baker spec, or a validation error naming the offending field.
    pub fn baker_spec(&self) -> Result<OpenBakerSpec, LabError> {
        match &self.model {
            ModelConfig::Baker { base, kept } => {
                OpenBakerSpec::new(*base, kept.clone()).map_err(|e| match e {
                    oqm_core::ClassicalError::InvalidBase(_) => LabError::validation("model.base", e),
                    _ => LabError::validation("model.kept", e),
                })
            }
            ModelConfig::Cat { .. } => Err(LabError::validation("model.kind", "this command needs the baker model")),
        }
    }

    pub fn cat_spec(&self) -> Result<(CatSpec, HoleInterval), LabError> {
        match &self.model {
            ModelConfig::Cat { matrix: [a, b, c, d], hole } => {
                let spec = CatSpec::new(*a, *b, *c, *d).map_err(|e| LabError::validation("model.matrix", e))?;
                let hole = HoleInterval::new(hole[0], hole[1]).map_err(|e| LabError::validation("model.hole", e))?;
                Ok((spec, hole))
            }
            ModelConfig::Baker { .. } => Err(LabError::validation("model.kind", "expected the cat model")),
        }
    }

    pub fn generator(&self) -> Result<QuadraticGenerator, LabError> {
        QuadraticGenerator::by_name(&self.transport.generator).ok_or_else(|| {
            LabError::validation(
                "transport.generator",
                format!("unknown generating function {:?}", self.transport.generator),
            )
        })
    }

    /// Checks every field the stage depends on before any computation.
    pub fn validate(&self, stage: Stage) -> Result<(), LabError> {
        if self.caps.enumeration == 0 {
            return Err(LabError::validation("caps.enumeration", "must be positive"));
        }
        if self.caps.max_dim == 0 {
            return Err(LabError::validation("caps.max_dim", "must be positive"));
        }
        let needs_model = !matches!(stage, Stage::Transport);
        let baker_only = matches!(stage, Stage::Pressure | Stage::Dimension | Stage::Weyl | Stage::Gap);
        if needs_model {
            match self.model {
                ModelConfig::Baker { .. } => {
                    self.baker_spec()?;
                }
                ModelConfig::Cat { .. } if baker_only => {
                    return Err(LabError::validation("model.kind", "this command needs the baker model"));
                }
                ModelConfig::Cat { .. } => {
                    self.cat_spec()?;
                }
            }
        }
        match stage {
            Stage::Pressure => {
                if !self.pressure_s.is_finite() {
                    return Err(LabError::validation("pressure_s", "must be finite"));
                }
                if self.word_length < 1 {
                    return Err(LabError::validation("word_length", "must be at least 1"));
                }
            }
            Stage::Dimension => {
                if self.max_depth < 2 {
                    return Err(LabError::validation("max_depth", "must be at least 2"));
                }
            }
            Stage::Spectrum | Stage::Weyl | Stage::Gap => {
                if !self.theta.is_finite() {
                    return Err(LabError::validation("theta", "must be finite"));
                }
                if self.dims.is_empty() {
                    return Err(LabError::validation("dims", "at least one dimension is required"));
                }
                if let Some(&n) = self.dims.iter().find(|&&n| n == 0 || n > self.caps.max_dim) {
                    return Err(LabError::validation("dims", format!("{n} is outside 1..={}", self.caps.max_dim)));
                }
                let mut sorted = self.dims.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != self.dims.len() {
                    return Err(LabError::validation("dims", "dimensions must be distinct"));
                }
                if stage == Stage::Weyl {
                    if self.dims.len() < 3 {
                        return Err(LabError::validation(
                            "dims",
                            format!("a Weyl fit needs at least 3 dimensions, got {}", self.dims.len()),
                        ));
                    }
                    if self.epsilons.is_empty() {
                        return Err(LabError::validation("epsilons", "at least one threshold is required"));
                    }
                    if let Some(e) = self.epsilons.iter().find(|&&e| !(e > 0.0 && e < 1.0)) {
                        return Err(LabError::validation("epsilons", format!("{e} is not in (0, 1)")));
                    }
                }
                if stage == Stage::Gap && !(self.gap_margin >= 0.0 && self.gap_margin.is_finite()) {
                    return Err(LabError::validation("gap_margin", "must be a nonnegative number"));
                }
            }
            Stage::Transport => {
                self.generator()?;
                if self.transport.h.is_empty() {
                    return Err(LabError::validation("transport.h", "at least one value is required"));
                }
                if let Some(h) = self.transport.h.iter().find(|&&h| !(h > 0.0 && h < 1.0)) {
                    return Err(LabError::validation("transport.h", format!("{h} is not in (0, 1)")));
                }
                if !self.transport.start.iter().all(|v| v.is_finite()) {
                    return Err(LabError::validation("transport.start", "must be finite"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_of(err: LabError) -> String {
        match err {
            LabError::Validation { field, .. } => field,
            other => panic!("expected a validation error, got {other}"),
        }
    }

    #[test]
    fn defaults_are_valid_for_every_stage() {
        let cfg = ExperimentConfig::default();
        for stage in [Stage::Pressure, Stage::Dimension, Stage::Spectrum, Stage::Weyl, Stage::Gap, Stage::Transport] {
            cfg.validate(stage).unwrap();
        }
    }

    #[test]
    fn errors_name_the_field() {
        let mut cfg = ExperimentConfig::default();
        cfg.model = ModelConfig::Baker { base: 3, kept: vec![7] };
        let err = cfg.validate(Stage::Pressure).unwrap_err();
        assert!(err.to_string().contains("branch out of range"));
        assert_eq!(field_of(err), "model.kept");

        let mut cfg = ExperimentConfig::default();
        cfg.dims = vec![81, 243];
        assert_eq!(field_of(cfg.validate(Stage::Weyl).unwrap_err()), "dims");
        cfg.validate(Stage::Spectrum).unwrap();

        let mut cfg = ExperimentConfig::default();
        cfg.epsilons = vec![0.5, 1.0];
        assert_eq!(field_of(cfg.validate(Stage::Weyl).unwrap_err()), "epsilons");

        let mut cfg = ExperimentConfig::default();
        cfg.model = ModelConfig::Cat { matrix: [2, 1, 1, 2], hole: [0.0, 0.1] };
        assert_eq!(field_of(cfg.validate(Stage::Spectrum).unwrap_err()), "model.matrix");
        cfg.model = ModelConfig::Cat { matrix: [2, 1, 1, 1], hole: [0.5, 0.2] };
        assert_eq!(field_of(cfg.validate(Stage::Spectrum).unwrap_err()), "model.hole");
        cfg.model = ModelConfig::Cat { matrix: [2, 1, 1, 1], hole: [0.2, 0.5] };
        cfg.validate(Stage::Spectrum).unwrap();
        assert_eq!(field_of(cfg.validate(Stage::Gap).unwrap_err()), "model.kind");

        let mut cfg = ExperimentConfig::default();
        cfg.transport.generator = "spiral".into();
        assert_eq!(field_of(cfg.validate(Stage::Transport).unwrap_err()), "transport.generator");
    }

    #[test]
    fn json_round_trip_and_partial_documents() {
        let cfg = ExperimentConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), cfg);

        let partial: ExperimentConfig =
            serde_json::from_str(r#"{"model": {"kind": "baker", "base": 5, "kept": [0, 2]}, "dims": [125]}"#).unwrap();
        assert_eq!(partial.dims, vec![125]);
        assert_eq!(partial.epsilons, cfg.epsilons);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"dimz": [1]}"#).is_err());
    }
}
