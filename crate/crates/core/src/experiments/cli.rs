//! `hetnet` command line.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use super::output::{write_rows, write_table, Metadata};
use super::sweep::{
    case_label, evaluate_analytic, evaluate_sim, figure, parse_range, run_sweep, Engine,
    RunSettings, SweepRow, SweepSpec,
};
use super::ExperimentError;
use crate::analytic::solve_tier_probabilities;
use crate::model::config::{ConfigFile, NoiseSetting};
use crate::model::{AssociationScheme, RateMetric, Scheme, SpectrumCase};
use crate::sim::{estimate_cell_area_distribution, validate_thinning, SimSettings};

const DEFAULT_REPLICATIONS: usize = 200;
const DEFAULT_AREA_REPLICATIONS: usize = 30;

#[derive(Debug, Parser)]
#[command(
    name = "hetnet",
    version,
    about = "Load-aware cell association in K-tier heterogeneous networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Network configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output CSV path; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Monte Carlo replications (snapshots).
    #[arg(long, global = true)]
    pub replications: Option<usize>,
    /// full_band or equal_share.
    #[arg(long, global = true, default_value = "full_band")]
    pub rate_metric: RateMetric,
    /// Comma-separated: proposed, cre, max_rss, max_sinr, nearest.
    #[arg(long, global = true, value_delimiter = ',')]
    pub scheme: Vec<Scheme>,
    /// Noise power in dBm; overrides the config.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub noise_dbm: Option<f64>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Spectrum case preset, e.g. 132 or B1>B3>B2.
    #[arg(long, global = true)]
    pub case: Option<SpectrumCase>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineChoice {
    Analytic,
    Sim,
    Both,
}

impl EngineChoice {
    fn engines(self) -> Vec<Engine> {
        match self {
            EngineChoice::Analytic => vec![Engine::Analytic],
            EngineChoice::Sim => vec![Engine::Sim],
            EngineChoice::Both => vec![Engine::Analytic, Engine::Sim],
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tier probabilities and average rate from the analytic model.
    Analytic,
    /// Monte Carlo estimate for one or more schemes.
    Simulate,
    /// Sweep one config parameter.
    Sweep {
        /// Dotted config path, e.g. network.alpha or tier[2].density_per_km2.
        #[arg(long)]
        target: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<f64>,
        /// from:to:steps, as an alternative to --values.
        #[arg(long, allow_hyphen_values = true)]
        range: Option<String>,
        #[arg(long, value_enum, default_value = "analytic")]
        engine: EngineChoice,
    },
    /// Preset sweeps fig2 … fig5.
    Figure {
        #[arg(long)]
        id: String,
        #[arg(long, value_enum, default_value = "analytic")]
        engine: EngineChoice,
    },
    /// Cell-area and thinning checks of the load model.
    ValidateApprox {
        /// Probe lattice density, in probes per expected cell.
        #[arg(long, default_value_t = 400.0)]
        probes_per_cell: f64,
    },
}

/// Parses arguments, runs the command and returns the process exit code.
/// Errors are reported as JSON on stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let err = ExperimentError::Usage(e.to_string().trim_end().to_string());
            eprintln!("{}", err.to_json());
            return err.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<(), ExperimentError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| ExperimentError::Usage("--config PATH is required".into()))?;
    let bytes = std::fs::read(path).map_err(|source| crate::model::config::ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let text = String::from_utf8_lossy(&bytes);
    let mut config = ConfigFile::parse(&text)?;
    if let Some(x) = cli.noise_dbm {
        config.network.noise_dbm = NoiseSetting::Dbm(x);
    }
    if let Some(case) = cli.case {
        config.apply_spectrum_case(case)?;
    }
    // Surface invalid configs before any work starts.
    config.to_model()?;

    match cli.jobs {
        Some(0) => Err(ExperimentError::Usage("--jobs must be at least 1".into())),
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| ExperimentError::Usage(e.to_string()))?
            .install(|| dispatch(cli, &config, &bytes)),
        None => dispatch(cli, &config, &bytes),
    }
}

fn open_out(cli: &Cli) -> Result<Box<dyn Write>, ExperimentError> {
    Ok(match &cli.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn command_name(c: &Command) -> String {
    match c {
        Command::Analytic => "analytic".into(),
        Command::Simulate => "simulate".into(),
        Command::Sweep { target, .. } => format!("sweep {target}"),
        Command::Figure { id, .. } => format!("figure {id}"),
        Command::ValidateApprox { .. } => "validate-approx".into(),
    }
}

fn dispatch(cli: &Cli, config: &ConfigFile, bytes: &[u8]) -> Result<(), ExperimentError> {
    let replications = cli.replications.unwrap_or(match cli.command {
        Command::ValidateApprox { .. } => DEFAULT_AREA_REPLICATIONS,
        _ => DEFAULT_REPLICATIONS,
    });
    if replications == 0 {
        return Err(ExperimentError::Usage(
            "--replications must be at least 1".into(),
        ));
    }
    let settings = RunSettings {
        seed: cli.seed,
        replications,
        rate_metric: cli.rate_metric,
        ..RunSettings::default()
    };
    let schemes: Vec<AssociationScheme> = if cli.scheme.is_empty() {
        vec![AssociationScheme::new(Scheme::Proposed, cli.rate_metric)]
    } else {
        cli.scheme
            .iter()
            .map(|&s| AssociationScheme::new(s, cli.rate_metric))
            .collect()
    };
    let meta = Metadata::new(&command_name(&cli.command), bytes, cli.seed, replications);
    let k = config.tier.len();
    let model = config.to_model()?.into_inner();
    let case = case_label(config);

    let rows: Vec<SweepRow> = match &cli.command {
        Command::Analytic => {
            let cell = evaluate_analytic(&model, &settings)?;
            vec![SweepRow::single(
                "analytic",
                Engine::Analytic,
                schemes[0].variant,
                &settings,
                &case,
                cell,
            )]
        }
        Command::Simulate => schemes
            .iter()
            .map(|&s| {
                let cell = evaluate_sim(&model, s, &settings)?;
                Ok(SweepRow::single(
                    "simulate",
                    Engine::Sim,
                    s.variant,
                    &settings,
                    &case,
                    cell,
                ))
            })
            .collect::<Result<_, ExperimentError>>()?,
        Command::Sweep {
            target,
            values,
            range,
            engine,
        } => {
            let values = match (values.is_empty(), range) {
                (false, None) => values.clone(),
                (true, Some(r)) => parse_range(r)?,
                _ => {
                    return Err(ExperimentError::Usage(
                        "sweep needs exactly one of --values or --range".into(),
                    ))
                }
            };
            let spec = SweepSpec {
                label: "sweep".into(),
                target: target.clone(),
                values,
                engines: engine.engines(),
                schemes: schemes.clone(),
                spectrum_case: None,
                fixed: vec![],
            };
            run_sweep(config, &[spec], &settings)?
        }
        Command::Figure { id, engine } => {
            let specs = figure(id, &engine.engines(), &schemes)?;
            run_sweep(config, &specs, &settings)?
        }
        Command::ValidateApprox { probes_per_cell } => {
            return validate_approx(cli, config, &meta, replications, *probes_per_cell);
        }
    };
    write_rows(open_out(cli)?, &meta, &rows, k)
}

fn validate_approx(
    cli: &Cli,
    config: &ConfigFile,
    meta: &Metadata,
    replications: usize,
    probes_per_cell: f64,
) -> Result<(), ExperimentError> {
    if probes_per_cell.is_nan() || probes_per_cell <= 1.0 {
        return Err(ExperimentError::Usage(
            "--probes-per-cell must exceed 1".into(),
        ));
    }
    let model = config.to_model()?.into_inner();
    let c = model.cell_area_shape;
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut push = |check: &str,
                    tier: usize,
                    stat: &str,
                    value: f64,
                    reference: f64,
                    tol: f64,
                    pass: Option<bool>| {
        rows.push(vec![
            check.to_string(),
            tier.to_string(),
            stat.to_string(),
            format!("{value}"),
            format!("{reference}"),
            format!("{tol}"),
            pass.map(|p| p.to_string()).unwrap_or_default(),
        ]);
    };
    for (k, tier) in config.tier.iter().enumerate() {
        let probes = probes_per_cell * tier.density_per_km2;
        let s = estimate_cell_area_distribution(&model, k, replications, probes, cli.seed)?;
        let mean = s.mean();
        let var = s.variance();
        let ks = s.ks_to_gamma(c)?;
        push(
            "cell_area",
            k + 1,
            "cells",
            s.normalized_areas.len() as f64,
            0.0,
            0.0,
            None,
        );
        push(
            "cell_area",
            k + 1,
            "mean",
            mean,
            1.0,
            0.01,
            Some((mean - 1.0).abs() <= 0.01),
        );
        push(
            "cell_area",
            k + 1,
            "variance",
            var,
            1.0 / c,
            0.05,
            Some((var * c - 1.0).abs() <= 0.05),
        );
        push(
            "cell_area",
            k + 1,
            "ks_gamma",
            ks,
            0.0,
            0.02,
            Some(ks < 0.02),
        );
    }
    let settings = RunSettings::default();
    let tp = solve_tier_probabilities(&model, &settings.quad, &settings.fixed_point)?;
    let sim = SimSettings::new(replications, cli.seed);
    for r in validate_thinning(&model, &tp.t, &sim)? {
        push("thinning", r.tier, "cells", r.cells as f64, 0.0, 0.0, None);
        push(
            "thinning",
            r.tier,
            "total_variation",
            r.total_variation,
            0.0,
            0.05,
            Some(r.total_variation < 0.05),
        );
    }
    write_table(
        open_out(cli)?,
        meta,
        &[
            "check",
            "tier",
            "statistic",
            "value",
            "reference",
            "tolerance",
            "pass",
        ],
        &rows,
    )
}
