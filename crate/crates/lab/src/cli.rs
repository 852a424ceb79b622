use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use oqm_core::Execution;

use crate::artifact::{to_json, RunWriter};
use crate::commands;
use crate::config::{ExperimentConfig, ModelConfig};
use crate::error::LabError;
use crate::report;

#[derive(Debug, Parser)]
#[command(name = "oqm", version, about = "Open quantum map laboratory")]
pub struct Cli {
    /// JSON experiment config; when given it replaces every other flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for artifacts and the manifest.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Cap on classical enumeration size.
    #[arg(long, global = true)]
    pub cap: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Baker,
    Cat,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// Baker base D.
    #[arg(long)]
    pub base: Option<u32>,
    /// Kept baker branches, e.g. 0,2. Defaults to all branches when only
    /// --base is given.
    #[arg(long, value_delimiter = ',')]
    pub kept: Option<Vec<u32>>,
    /// Cat matrix entries a,b,c,d.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1)]
    pub cat: Option<Vec<i64>>,
    /// Removed position interval start,end for the cat map.
    #[arg(long, value_delimiter = ',')]
    pub hole: Option<Vec<f64>>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Topological pressure of the baker map.
    Pressure {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
        s: f64,
        /// Periodic word length.
        #[arg(long, default_value_t = 6)]
        length: u32,
    },
    /// Box-counting dimension of the trapped set.
    Dimension {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 6)]
        max_depth: u32,
    },
    /// Full spectra written as CSV.
    Spectrum {
        #[command(flatten)]
        model: ModelArgs,
        /// One or more matrix dimensions.
        #[arg(long, value_delimiter = ',', required = true)]
        dim: Vec<usize>,
        #[arg(long)]
        theta: Option<f64>,
    },
    /// Eigenvalue counts and fractal Weyl exponent fits.
    Weyl {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        #[arg(long, alias = "epsilon", value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
        #[arg(long)]
        theta: Option<f64>,
    },
    /// Spectral radius against the half-pressure bound.
    Gap {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        margin: Option<f64>,
    },
    /// Propagates a coherent state with the oscillatory-integral operator.
    Transport {
        /// identity, shear, position_shear or kicked.
        #[arg(long)]
        generator: Option<String>,
        #[arg(long, value_delimiter = ',')]
        h: Option<Vec<f64>>,
        /// Start point x,xi.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1)]
        start: Option<Vec<f64>>,
    },
    /// Summarizes a directory of run artifacts.
    Report {
        /// Directory holding a manifest and its artifacts.
        dir: PathBuf,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Pressure { .. } => "pressure",
            Command::Dimension { .. } => "dimension",
            Command::Spectrum { .. } => "spectrum",
            Command::Weyl { .. } => "weyl",
            Command::Gap { .. } => "gap",
            Command::Transport { .. } => "transport",
            Command::Report { .. } => "report",
        }
    }
}

fn apply_model(cfg: &mut ExperimentConfig, args: &ModelArgs) -> Result<(), LabError> {
    let cat = args.model == Some(ModelKind::Cat) || (args.model.is_none() && (args.cat.is_some() || args.hole.is_some()));
    if cat {
        let matrix = match &args.cat {
            Some(v) => <[i64; 4]>::try_from(v.as_slice()).map_err(|_| LabError::validation("model.matrix", "expected four entries a,b,c,d"))?,
            None => [2, 1, 1, 1],
        };
        let hole = match &args.hole {
            Some(v) => <[f64; 2]>::try_from(v.as_slice()).map_err(|_| LabError::validation("model.hole", "expected start,end"))?,
            None => [0.0, 0.0],
        };
        cfg.model = ModelConfig::Cat { matrix, hole };
    } else if args.base.is_some() || args.kept.is_some() {
        let base = args.base.unwrap_or(3);
        let kept = args.kept.clone().unwrap_or_else(|| (0..base).collect());
        cfg.model = ModelConfig::Baker { base, kept };
    }
    Ok(())
}

/// Compiles the command-line flags into a config.
pub fn config_from_flags(cli: &Cli) -> Result<ExperimentConfig, LabError> {
    let mut cfg = ExperimentConfig::default();
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(cap) = cli.cap {
        cfg.caps.enumeration = cap;
    }
    match &cli.command {
        Command::Pressure { model, s, length } => {
            apply_model(&mut cfg, model)?;
            cfg.pressure_s = *s;
            cfg.word_length = *length;
        }
        Command::Dimension { model, max_depth } => {
            apply_model(&mut cfg, model)?;
            cfg.max_depth = *max_depth;
        }
        Command::Spectrum { model, dim, theta } => {
            apply_model(&mut cfg, model)?;
            cfg.dims = dim.clone();
            if let Some(t) = theta {
                cfg.theta = *t;
            }
        }
        Command::Weyl { model, dims, epsilons, theta } => {
            apply_model(&mut cfg, model)?;
            if let Some(d) = dims {
                cfg.dims = d.clone();
            }
            if let Some(e) = epsilons {
                cfg.epsilons = e.clone();
            }
            if let Some(t) = theta {
                cfg.theta = *t;
            }
        }
        Command::Gap { model, dims, theta, margin } => {
            apply_model(&mut cfg, model)?;
            if let Some(d) = dims {
                cfg.dims = d.clone();
            }
            if let Some(t) = theta {
                cfg.theta = *t;
            }
            if let Some(m) = margin {
                cfg.gap_margin = *m;
            }
        }
        Command::Transport { generator, h, start } => {
            if let Some(g) = generator {
                cfg.transport.generator = g.clone();
            }
            if let Some(h) = h {
                cfg.transport.h = h.clone();
            }
            if let Some(s) = start {
                cfg.transport.start =
                    <[f64; 2]>::try_from(s.as_slice()).map_err(|_| LabError::validation("transport.start", "expected x,xi"))?;
            }
        }
        Command::Report { .. } => {}
    }
    Ok(cfg)
}

fn execute(cli: &Cli, exec: Execution) -> Result<String, LabError> {
    if let Command::Report { dir } = &cli.command {
        let report = report::collect(dir)?;
        let out_dir = cli.out.clone().unwrap_or_else(|| dir.clone());
        let mut writer = RunWriter::new(&out_dir, "report", &ExperimentConfig::default());
        report.write(&mut writer)?;
        writer.finish()?;
        return Ok(report.markdown());
    }
    let cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => config_from_flags(cli)?,
    };
    let mut out = RunWriter::new(&cfg.output_dir, cli.command.name(), &cfg);
    let text = match cli.command {
        Command::Pressure { .. } => {
            let p = commands::pressure(&cfg, &mut out)?;
            let mut text = format!(
                "pressure P({}·phi_u) = {:.12} (analytic {:.12}, word length {})",
                p.s, p.value, p.analytic_value, p.word_length
            );
            if p.s == 0.5 {
                text.push_str(&format!("\ngamma = exp(P) = {:.12}", p.value.exp()));
            }
            text
        }
        Command::Dimension { .. } => {
            let d = commands::dimension(&cfg, &mut out)?;
            format!("box dimension {:.12} (fit residual {:.3e}, counts {:?})", d.slope, d.residual, d.counts)
        }
        Command::Spectrum { .. } => {
            let spectra = commands::spectrum(&cfg, exec, &mut out)?;
            spectra
                .iter()
                .map(|s| {
                    let r = s.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
                    format!("N = {}: {} eigenvalues, spectral radius {:.12}", s.dim(), s.eigenvalues.len(), r)
                })
                .collect::<Vec<_>>()
                .join("\n")
        }
        Command::Weyl { .. } => {
            let fits = commands::weyl(&cfg, exec, &mut out)?;
            fits.iter()
                .map(|f| {
                    format!(
                        "eps = {}: counts {:?}, slope {:.6} (r^2 {:.4}), predicted {:.6}",
                        f.epsilon, f.counts, f.slope, f.r_squared, f.predicted_exponent
                    )
                })
                .collect::<Vec<_>>()
                .join("\n")
        }
        Command::Gap { .. } => {
            let g = commands::gap(&cfg, exec, &mut out)?;
            String::from_utf8(to_json(&g)).expect("JSON is UTF-8")
        }
        Command::Transport { .. } => {
            let t = commands::transport(&cfg, exec, &mut out)?;
            let mut lines: Vec<String> = t
                .reports
                .iter()
                .map(|r| {
                    format!(
                        "h = {}: expected ({:.6}, {:.6}), measured ({:.6}, {:.6}), distance {:.3e} = {:.3} sqrt(h)",
                        r.h,
                        r.expected.0,
                        r.expected.1,
                        r.measured.0,
                        r.measured.1,
                        r.distance,
                        r.distance / r.h.sqrt()
                    )
                })
                .collect();
            lines.push(format!("distances nonincreasing along the sweep: {}", t.nonincreasing));
            lines.join("\n")
        }
        Command::Report { .. } => unreachable!("handled above"),
    };
    out.finish()?;
    Ok(text)
}

#[cfg(feature = "parallel")]
fn with_threads(threads: usize, cli: &Cli) -> Result<String, LabError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| LabError::validation("threads", e))?;
    pool.install(|| execute(cli, Execution::default()))
}

#[cfg(not(feature = "parallel"))]
fn with_threads(_threads: usize, cli: &Cli) -> Result<String, LabError> {
    execute(cli, Execution::Sequential)
}

/// Runs a parsed command and returns the text to print.
pub fn run(cli: &Cli) -> Result<String, LabError> {
    with_threads(cli.threads, cli)
}
