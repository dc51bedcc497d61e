//! Sweep evaluation.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::ExperimentError;
use crate::analytic::rate::average_ergodic_rate_with;
use crate::analytic::{FixedPointSettings, PairEvaluator, QuadSettings, SinrLaw};
use crate::model::config::ConfigFile;
use crate::model::{AssociationScheme, NetworkModel, RateMetric, Scheme, SpectrumCase};
use crate::sim::{estimate_metrics, SimSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Engine {
    Analytic,
    Sim,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Analytic => "analytic",
            Engine::Sim => "sim",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "analytic" => Ok(Engine::Analytic),
            "sim" | "simulate" => Ok(Engine::Sim),
            _ => Err(format!("unknown engine `{s}` (expected analytic or sim)")),
        }
    }
}

/// One swept parameter with its evaluation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Free-form tag copied to every row, e.g. a figure id.
    pub label: String,
    /// Dotted config path, e.g. `network.alpha` or `tier[2].density_per_km2`.
    pub target: String,
    pub values: Vec<f64>,
    pub engines: Vec<Engine>,
    /// Schemes for the simulator; the analytic engine always evaluates the
    /// load-aware scheme.
    pub schemes: Vec<AssociationScheme>,
    pub spectrum_case: Option<SpectrumCase>,
    /// Config overrides applied before the swept value.
    pub fixed: Vec<(String, f64)>,
}

impl SweepSpec {
    pub fn check(&self) -> Result<(), ExperimentError> {
        if self.values.is_empty() {
            return Err(ExperimentError::Usage(
                "sweep needs at least one value".into(),
            ));
        }
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(ExperimentError::Usage(format!(
                "sweep value {v} is not finite"
            )));
        }
        if self.engines.is_empty() {
            return Err(ExperimentError::Usage(
                "sweep needs at least one engine".into(),
            ));
        }
        if self.engines.contains(&Engine::Sim) && self.schemes.is_empty() {
            return Err(ExperimentError::Usage(
                "simulation sweep needs a scheme".into(),
            ));
        }
        Ok(())
    }
}

/// Parses `from:to:steps` into `steps` evenly spaced values.
pub fn parse_range(s: &str) -> Result<Vec<f64>, ExperimentError> {
    let bad = || ExperimentError::Usage(format!("range `{s}` is not of the form from:to:steps"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let from: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let to: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let steps: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if steps == 0 || !from.is_finite() || !to.is_finite() {
        return Err(bad());
    }
    if steps == 1 {
        return Ok(vec![from]);
    }
    Ok((0..steps)
        .map(|i| from + (to - from) * i as f64 / (steps - 1) as f64)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub seed: u64,
    pub replications: usize,
    pub rate_metric: RateMetric,
    pub quad: QuadSettings,
    pub fixed_point: FixedPointSettings,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            seed: 1,
            replications: 200,
            rate_metric: RateMetric::FullBand,
            quad: QuadSettings::default(),
            fixed_point: FixedPointSettings::default(),
        }
    }
}

/// Successful evaluation of one sweep cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub t: Vec<f64>,
    pub t_se: Option<Vec<f64>>,
    /// ℜ̄ [nats/s].
    pub average_rate: f64,
    pub average_rate_se: Option<f64>,
    pub per_tier_rate: Vec<f64>,
    pub per_tier_rate_se: Option<Vec<f64>>,
    /// 1/0 for the fixed point; fraction of converged replications for the
    /// simulator.
    pub converged: f64,
    /// Fixed-point iterations, or mean best-response rounds.
    pub iterations: f64,
    pub residual: Option<f64>,
    pub sum_deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub label: String,
    pub target: String,
    pub value: f64,
    pub engine: Engine,
    pub scheme: Scheme,
    pub rate_metric: RateMetric,
    pub spectrum_case: String,
    pub outcome: Result<CellResult, String>,
}

impl SweepRow {
    /// A row for a single-point command: no swept target.
    pub fn single(
        label: &str,
        engine: Engine,
        scheme: Scheme,
        settings: &RunSettings,
        case: &str,
        cell: CellResult,
    ) -> Self {
        SweepRow {
            label: label.to_string(),
            target: String::new(),
            value: f64::NAN,
            engine,
            scheme,
            rate_metric: settings.rate_metric,
            spectrum_case: case.to_string(),
            outcome: Ok(cell),
        }
    }
}

struct Cell {
    label: String,
    target: String,
    value: f64,
    engine: Engine,
    scheme: AssociationScheme,
    case: String,
    model: Result<NetworkModel, String>,
}

/// Name of the spectrum case the config's bandwidths match, or `custom`.
pub fn case_label(config: &ConfigFile) -> String {
    if config.tier.len() == 3 {
        for case in SpectrumCase::ALL {
            let b = case.bandwidths_mhz();
            if config
                .tier
                .iter()
                .zip(b)
                .all(|(t, mhz)| t.bandwidth_mhz == mhz)
            {
                return case.label().to_string();
            }
        }
    }
    "custom".to_string()
}

fn cell_model(
    base: &ConfigFile,
    spec: &SweepSpec,
    value: f64,
) -> Result<(String, Result<NetworkModel, String>), ExperimentError> {
    let mut cfg = base.clone();
    if let Some(case) = spec.spectrum_case {
        cfg.apply_spectrum_case(case)?;
    }
    for (path, v) in &spec.fixed {
        cfg.set(path, *v)?;
    }
    cfg.set(&spec.target, value)?;
    let label = case_label(&cfg);
    // An invalid swept value fails its own cells, not the whole sweep.
    let model = cfg
        .to_model()
        .map(|m| m.into_inner())
        .map_err(|e| e.to_string());
    Ok((label, model))
}

fn law_key(model: &NetworkModel) -> Option<Vec<u64>> {
    let mut key = Vec::with_capacity(2 * model.num_tiers());
    for k in 0..model.num_tiers() {
        let law = SinrLaw::for_tier(model, k).ok()?;
        key.push(law.alpha.to_bits());
        key.push(law.eta.to_bits());
    }
    Some(key)
}

/// Evaluates every (value × engine × scheme) cell of the specs, in order.
///
/// Cells run in parallel on the current rayon pool; the returned rows are in
/// spec order whatever the completion order. Config errors (unknown target,
/// impossible spectrum case) abort the sweep; failures of individual cells
/// become error rows.
pub fn run_sweep(
    base: &ConfigFile,
    specs: &[SweepSpec],
    settings: &RunSettings,
) -> Result<Vec<SweepRow>, ExperimentError> {
    let mut cells = Vec::new();
    for spec in specs {
        spec.check()?;
        for &value in &spec.values {
            let (case, model) = cell_model(base, spec, value)?;
            for &engine in &spec.engines {
                let schemes: Vec<AssociationScheme> = match engine {
                    Engine::Analytic => vec![AssociationScheme::new(
                        Scheme::Proposed,
                        settings.rate_metric,
                    )],
                    Engine::Sim => spec.schemes.clone(),
                };
                for scheme in schemes {
                    cells.push(Cell {
                        label: spec.label.clone(),
                        target: spec.target.clone(),
                        value,
                        engine,
                        scheme,
                        case: case.clone(),
                        model: model.clone(),
                    });
                }
            }
        }
    }

    // Ratio tables depend only on the SINR laws; build each distinct set once.
    let mut evaluators: HashMap<Vec<u64>, Result<PairEvaluator, String>> = HashMap::new();
    for cell in &cells {
        if cell.engine != Engine::Analytic {
            continue;
        }
        if let Ok(model) = &cell.model {
            if let Some(key) = law_key(model) {
                evaluators.entry(key).or_insert_with(|| {
                    PairEvaluator::new(model, &settings.quad).map_err(|e| e.to_string())
                });
            }
        }
    }

    let rows = cells
        .par_iter()
        .map(|cell| {
            let outcome = match &cell.model {
                Err(e) => Err(e.clone()),
                Ok(model) => match cell.engine {
                    Engine::Analytic => analytic_cell(model, &evaluators, settings),
                    Engine::Sim => {
                        evaluate_sim(model, cell.scheme, settings).map_err(|e| e.to_string())
                    }
                },
            };
            SweepRow {
                label: cell.label.clone(),
                target: cell.target.clone(),
                value: cell.value,
                engine: cell.engine,
                scheme: cell.scheme.variant,
                rate_metric: cell.scheme.rate_metric,
                spectrum_case: cell.case.clone(),
                outcome,
            }
        })
        .collect();
    Ok(rows)
}

fn analytic_cell(
    model: &NetworkModel,
    evaluators: &HashMap<Vec<u64>, Result<PairEvaluator, String>>,
    settings: &RunSettings,
) -> Result<CellResult, String> {
    let key = law_key(model).ok_or_else(|| "invalid SINR law".to_string())?;
    let eval = evaluators
        .get(&key)
        .expect("evaluator prepared for every analytic cell")
        .as_ref()
        .map_err(Clone::clone)?;
    analytic_result(eval, model, settings).map_err(|e| e.to_string())
}

/// Tier probabilities and average rate of the load-aware scheme.
pub fn evaluate_analytic(
    model: &NetworkModel,
    settings: &RunSettings,
) -> Result<CellResult, ExperimentError> {
    let eval = PairEvaluator::new(model, &settings.quad)?;
    analytic_result(&eval, model, settings)
}

fn analytic_result(
    eval: &PairEvaluator,
    model: &NetworkModel,
    settings: &RunSettings,
) -> Result<CellResult, ExperimentError> {
    let report = average_ergodic_rate_with(
        eval,
        model,
        &settings.quad,
        settings.rate_metric,
        &settings.fixed_point,
    )?;
    let tp = report.tier_probs;
    Ok(CellResult {
        t: tp.t,
        t_se: None,
        average_rate: report.average_rate,
        average_rate_se: None,
        per_tier_rate: report.per_tier_rate,
        per_tier_rate_se: None,
        converged: if tp.converged { 1.0 } else { 0.0 },
        iterations: tp.iterations as f64,
        residual: Some(tp.residual),
        sum_deviation: Some(tp.sum_deviation),
    })
}

/// Monte Carlo tier shares and average rate of one scheme.
pub fn evaluate_sim(
    model: &NetworkModel,
    scheme: AssociationScheme,
    settings: &RunSettings,
) -> Result<CellResult, ExperimentError> {
    let sim = SimSettings::new(settings.replications, settings.seed);
    let table = estimate_metrics(model, scheme, &sim)?;
    let rate = table.average_rate();
    let tier_rate = table.tier_rate();
    Ok(CellResult {
        t: table.tier_share.iter().map(|e| e.mean).collect(),
        t_se: Some(table.tier_share.iter().map(|e| e.se).collect()),
        average_rate: rate.mean,
        average_rate_se: Some(rate.se),
        // A tier that never serves anyone has no conditional rate; report 0.
        per_tier_rate: tier_rate.iter().map(|e| finite_or_zero(e.mean)).collect(),
        per_tier_rate_se: Some(tier_rate.iter().map(|e| finite_or_zero(e.se)).collect()),
        converged: table.converged_fraction,
        iterations: table.mean_rounds,
        residual: None,
        sum_deviation: None,
    })
}

fn finite_or_zero(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        0.0
    }
}

/// Preset sweeps for the figure ids `fig2` … `fig5`.
///
/// * `fig2`: tier-2 density 0.4–0.9 /km² at α ∈ {3.5, 4, 4.5}, B1>B2>B3.
/// * `fig3`–`fig5`: α from 3 to 5 for B1>B2>B3 against B1>B3>B2,
///   B2>B3>B1 and B3>B2>B1 respectively.
pub fn figure(
    id: &str,
    engines: &[Engine],
    schemes: &[AssociationScheme],
) -> Result<Vec<SweepSpec>, ExperimentError> {
    let spec = |target: &str, values: Vec<f64>, case, fixed: Vec<(String, f64)>| SweepSpec {
        label: id.to_string(),
        target: target.to_string(),
        values,
        engines: engines.to_vec(),
        schemes: schemes.to_vec(),
        spectrum_case: Some(case),
        fixed,
    };
    let alphas = parse_range("3:5:9")?;
    let versus = |other| {
        vec![
            spec(
                "network.alpha",
                alphas.clone(),
                SpectrumCase::B1B2B3,
                vec![],
            ),
            spec("network.alpha", alphas.clone(), other, vec![]),
        ]
    };
    match id {
        "fig2" => Ok([3.5, 4.0, 4.5]
            .into_iter()
            .map(|a| {
                spec(
                    "tier[2].density_per_km2",
                    parse_range("0.4:0.9:6").expect("valid range"),
                    SpectrumCase::B1B2B3,
                    vec![("network.alpha".to_string(), a)],
                )
            })
            .collect()),
        "fig3" => Ok(versus(SpectrumCase::B1B3B2)),
        "fig4" => Ok(versus(SpectrumCase::B2B3B1)),
        "fig5" => Ok(versus(SpectrumCase::B3B2B1)),
        _ => Err(ExperimentError::Usage(format!(
            "unknown figure `{id}` (expected fig2, fig3, fig4 or fig5)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_range("2:9:1").unwrap(), vec![2.0]);
        assert!(parse_range("0:1").is_err());
        assert!(parse_range("0:1:0").is_err());
        let v = parse_range("0.4:0.9:6").unwrap();
        assert_eq!(v.len(), 6);
        assert!((v[5] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn figure_presets() {
        let e = [Engine::Analytic];
        let f2 = figure("fig2", &e, &[]).unwrap();
        assert_eq!(f2.len(), 3);
        assert!(f2.iter().all(|s| s.target == "tier[2].density_per_km2"));
        let f5 = figure("fig5", &e, &[]).unwrap();
        assert_eq!(f5[1].spectrum_case, Some(SpectrumCase::B3B2B1));
        assert!(figure("fig9", &e, &[]).is_err());
    }

    #[test]
    fn bad_values_become_error_rows() {
        let spec = SweepSpec {
            label: "t".into(),
            target: "network.alpha".into(),
            values: vec![1.5, 4.0],
            engines: vec![Engine::Analytic],
            schemes: vec![],
            spectrum_case: None,
            fixed: vec![],
        };
        let rows = run_sweep(
            &ConfigFile::reference_default(),
            &[spec],
            &RunSettings::default(),
        )
        .unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].outcome.is_err());
        let ok = rows[1].outcome.as_ref().unwrap();
        assert!((ok.t.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(rows[1].spectrum_case, "B1>B2>B3");
    }

    #[test]
    fn unknown_target_aborts() {
        let spec = SweepSpec {
            label: "t".into(),
            target: "network.beta".into(),
            values: vec![1.0],
            engines: vec![Engine::Analytic],
            schemes: vec![],
            spectrum_case: None,
            fixed: vec![],
        };
        assert!(matches!(
            run_sweep(
                &ConfigFile::reference_default(),
                &[spec],
                &RunSettings::default()
            ),
            Err(ExperimentError::Config(_))
        ));
    }
}
