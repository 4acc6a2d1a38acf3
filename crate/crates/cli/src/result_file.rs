//! JSON files for aggregation results, dispatch logs and bands.

use std::path::Path;
use std::time::Duration;

use flexagg::aggregation::{ScenarioSolution, SolveStats};
use flexagg::disaggregation::DispatchLog;
use flexagg::{AggregationResult, Certificate, Envelopes, FlexBand, Mode, ModelKind, SocBox};
use serde::{Deserialize, Serialize};

use crate::error::{read, write, CliError, Result};
use crate::{sig, sig_grid, sig_vec};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandEntry {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BandEntry {
    pub fn from_band(band: &FlexBand) -> Self {
        Self { lower: sig_vec(&band.lower), upper: sig_vec(&band.upper) }
    }

    pub fn to_band(&self) -> Result<FlexBand> {
        Ok(FlexBand::new(self.lower.clone(), self.upper.clone())?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CertificateEntry {
    None,
    SocBox { lo: Vec<Vec<f64>>, hi: Vec<Vec<f64>> },
    Envelopes { p_lo: Vec<Vec<f64>>, p_hi: Vec<Vec<f64>>, d_lo: Vec<Vec<f64>>, d_hi: Vec<Vec<f64>>, e_lo: Vec<Vec<f64>>, e_hi: Vec<Vec<f64>> },
    ScenarioTree { depth: usize, soc: Vec<Vec<f64>> },
}

impl CertificateEntry {
    fn from_certificate(c: &Certificate) -> Self {
        match c {
            Certificate::None => CertificateEntry::None,
            Certificate::SocBox(b) => CertificateEntry::SocBox { lo: sig_grid(&b.lo), hi: sig_grid(&b.hi) },
            Certificate::Envelopes(e) => CertificateEntry::Envelopes {
                p_lo: sig_grid(&e.p_lo),
                p_hi: sig_grid(&e.p_hi),
                d_lo: sig_grid(&e.d_lo),
                d_hi: sig_grid(&e.d_hi),
                e_lo: sig_grid(&e.e_lo),
                e_hi: sig_grid(&e.e_hi),
            },
            Certificate::ScenarioTree(s) => CertificateEntry::ScenarioTree { depth: s.depth, soc: sig_grid(&s.soc) },
        }
    }

    fn to_certificate(&self) -> Certificate {
        match self.clone() {
            CertificateEntry::None => Certificate::None,
            CertificateEntry::SocBox { lo, hi } => Certificate::SocBox(SocBox { lo, hi }),
            CertificateEntry::Envelopes { p_lo, p_hi, d_lo, d_hi, e_lo, e_hi } => {
                Certificate::Envelopes(Envelopes { p_lo, p_hi, d_lo, d_hi, e_lo, e_hi })
            }
            CertificateEntry::ScenarioTree { depth, soc } => Certificate::ScenarioTree(ScenarioSolution { depth, soc }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsEntry {
    pub lp_solves: usize,
    pub iterations: usize,
    pub rounds: usize,
    pub added_cuts: usize,
    pub rows: usize,
    pub columns: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl StatsEntry {
    pub fn from_stats(s: &SolveStats, timings: bool) -> Self {
        Self {
            lp_solves: s.lp_solves,
            iterations: s.iterations,
            rounds: s.rounds,
            added_cuts: s.added_cuts,
            rows: s.rows,
            columns: s.columns,
            wall_time_s: timings.then(|| sig(s.wall_time.as_secs_f64())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultFile {
    pub format_version: u32,
    pub model: String,
    pub mode: String,
    pub objective: f64,
    pub band: BandEntry,
    pub certificate: CertificateEntry,
    pub stats: StatsEntry,
}

pub fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Full => "full",
        Mode::Lazy => "lazy",
    }
}

impl ResultFile {
    pub fn from_result(r: &AggregationResult, mode: Mode, timings: bool) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            model: r.model.name().into(),
            mode: mode_name(mode).into(),
            objective: sig(r.objective),
            band: BandEntry::from_band(&r.band),
            certificate: CertificateEntry::from_certificate(&r.certificate),
            stats: StatsEntry::from_stats(&r.stats, timings),
        }
    }

    pub fn to_result(&self) -> Result<AggregationResult> {
        if self.format_version != FORMAT_VERSION {
            return Err(CliError::Usage(format!("unsupported result format_version {}", self.format_version)));
        }
        let s = &self.stats;
        Ok(AggregationResult {
            model: self.model.parse::<ModelKind>()?,
            band: self.band.to_band()?,
            objective: self.objective,
            certificate: self.certificate.to_certificate(),
            stats: SolveStats {
                lp_solves: s.lp_solves,
                iterations: s.iterations,
                rounds: s.rounds,
                added_cuts: s.added_cuts,
                rows: s.rows,
                columns: s.columns,
                wall_time: Duration::from_secs_f64(s.wall_time_s.unwrap_or(0.0)),
            },
        })
    }
}

pub fn load_result(path: &Path) -> Result<ResultFile> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::parse(path, e))
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write(path, &(to_json(value) + "\n"))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("plain data always serializes")
}

/// Reads a band from either a result file or a bare `{lower, upper}` object.
pub fn load_band(path: &Path) -> Result<FlexBand> {
    let value: serde_json::Value = serde_json::from_str(&read(path)?).map_err(|e| CliError::parse(path, e))?;
    let band = value.get("band").cloned().unwrap_or(value);
    let entry: BandEntry = serde_json::from_value(band).map_err(|e| CliError::parse(path, e))?;
    entry.to_band()
}

/// A trajectory file is a JSON array of setpoints in MW.
pub fn load_trajectory(path: &Path) -> Result<Vec<f64>> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::parse(path, e))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodEntry {
    pub period: usize,
    pub setpoint: f64,
    pub gens: Vec<f64>,
    pub loads: Vec<f64>,
    pub discharge: Vec<f64>,
    pub charge: Vec<f64>,
    pub flows: Vec<f64>,
    pub soc_after: Vec<f64>,
    pub cost: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogFile {
    pub format_version: u32,
    pub strategy: String,
    pub total_cost: f64,
    pub periods: Vec<PeriodEntry>,
}

impl LogFile {
    pub fn from_log(log: &DispatchLog) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            strategy: log.strategy.name().into(),
            total_cost: sig(log.total_cost),
            periods: log
                .periods
                .iter()
                .map(|p| PeriodEntry {
                    period: p.period,
                    setpoint: sig(p.setpoint),
                    gens: sig_vec(&p.dispatch.gens),
                    loads: sig_vec(&p.dispatch.loads),
                    discharge: sig_vec(&p.dispatch.discharge),
                    charge: sig_vec(&p.dispatch.charge),
                    flows: sig_vec(&p.dispatch.flows),
                    soc_after: sig_vec(&p.soc_after),
                    cost: sig(p.cost),
                    residual: sig(p.residual),
                })
                .collect(),
        }
    }
}

/// Band curves as CSV with columns `period,lower,upper,model`.
pub fn band_csv(results: &[ResultFile]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Usage(format!("csv: {e}"));
    w.write_record(["period", "lower", "upper", "model"]).map_err(io)?;
    for r in results {
        for t in 0..r.band.lower.len() {
            w.write_record([(t + 1).to_string(), r.band.lower[t].to_string(), r.band.upper[t].to_string(), r.model.clone()])
                .map_err(io)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| CliError::Usage(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
