//! CSV emission.
//!
//! Every file starts with `#`-prefixed metadata lines followed by one header
//! row. Sweep columns, for K tiers:
//!
//! ```text
//! label, target, value, engine, scheme, rate_metric, spectrum_case, status,
//! t_1..t_K, t_se_1..t_se_K, avg_rate_nats, avg_rate_bits, avg_rate_se_nats,
//! rate_1..rate_K, rate_se_1..rate_se_K, converged, iterations, residual,
//! sum_deviation, error
//! ```
//!
//! Rates are per second. Fields that do not apply to a row (standard errors
//! of analytic rows, fixed-point diagnostics of simulated rows, everything
//! numeric in an error row) are left empty.

use std::io::Write;

use sha2::{Digest, Sha256};

use super::sweep::SweepRow;
use super::ExperimentError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Metadata {
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub replications: usize,
}

impl Metadata {
    pub fn new(command: &str, config_bytes: &[u8], seed: u64, replications: usize) -> Self {
        let digest = Sha256::digest(config_bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        Metadata {
            command: command.to_string(),
            config_sha256: hex,
            seed,
            replications,
        }
    }

    pub fn write_header<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "# hetnet {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(out, "# command: {}", self.command)?;
        writeln!(out, "# config_sha256: {}", self.config_sha256)?;
        writeln!(out, "# seed: {}", self.seed)?;
        writeln!(out, "# replications: {}", self.replications)
    }
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        String::new()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn sweep_columns(k: usize) -> Vec<String> {
    let mut cols: Vec<String> = [
        "label",
        "target",
        "value",
        "engine",
        "scheme",
        "rate_metric",
        "spectrum_case",
        "status",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    cols.extend((1..=k).map(|i| format!("t_{i}")));
    cols.extend((1..=k).map(|i| format!("t_se_{i}")));
    cols.extend(["avg_rate_nats", "avg_rate_bits", "avg_rate_se_nats"].map(String::from));
    cols.extend((1..=k).map(|i| format!("rate_{i}")));
    cols.extend((1..=k).map(|i| format!("rate_se_{i}")));
    cols.extend(
        [
            "converged",
            "iterations",
            "residual",
            "sum_deviation",
            "error",
        ]
        .map(String::from),
    );
    cols
}

fn per_tier(values: Option<&[f64]>, k: usize) -> Vec<String> {
    (0..k)
        .map(|i| {
            values
                .and_then(|v| v.get(i))
                .map(|x| num(*x))
                .unwrap_or_default()
        })
        .collect()
}

/// Writes metadata, header and rows. `k` is the number of tiers.
pub fn write_rows<W: Write>(
    mut out: W,
    meta: &Metadata,
    rows: &[SweepRow],
    k: usize,
) -> Result<(), ExperimentError> {
    meta.write_header(&mut out)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(sweep_columns(k))?;
    for row in rows {
        let mut rec = vec![
            row.label.clone(),
            row.target.clone(),
            if row.target.is_empty() {
                String::new()
            } else {
                num(row.value)
            },
            row.engine.name().to_string(),
            row.scheme.name().to_string(),
            row.rate_metric.name().to_string(),
            row.spectrum_case.clone(),
        ];
        match &row.outcome {
            Ok(c) => {
                rec.push("ok".into());
                rec.extend(per_tier(Some(&c.t), k));
                rec.extend(per_tier(c.t_se.as_deref(), k));
                rec.push(num(c.average_rate));
                rec.push(num(c.average_rate / std::f64::consts::LN_2));
                rec.push(opt(c.average_rate_se));
                rec.extend(per_tier(Some(&c.per_tier_rate), k));
                rec.extend(per_tier(c.per_tier_rate_se.as_deref(), k));
                rec.push(num(c.converged));
                rec.push(num(c.iterations));
                rec.push(opt(c.residual));
                rec.push(opt(c.sum_deviation));
                rec.push(String::new());
            }
            Err(msg) => {
                rec.push("error".into());
                rec.extend(std::iter::repeat_n(String::new(), 4 * k + 7));
                rec.push(msg.clone());
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes metadata and an arbitrary table.
pub fn write_table<W: Write>(
    mut out: W,
    meta: &Metadata,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<(), ExperimentError> {
    meta.write_header(&mut out)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}
