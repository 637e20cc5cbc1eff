//! Output files: per-replication round tables, the experiment summary and a
//! long-format table for plotting. Every file starts from the effective
//! configuration so nothing is silently defaulted.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, WcbError};
use crate::metrics::aggregate::{aggregate, BandCheck, Pairwise, PolicyAggregate};
use crate::metrics::compare::Comparison;
use crate::metrics::report::RoundReport;
use crate::sim::config::SimulationConfig;
use crate::sim::experiment::ExperimentBundle;

pub const CONFIG_PREFIX: &str = "# config: ";

/// Resolved pay schedule of the baselines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineSchedule {
    pub base: f64,
    pub slope: f64,
}

/// Shapes the synthetic generator assumes beyond the published means.
pub const GENERATOR_SHAPES: [(&str, &str); 7] = [
    ("volunteer_skills", "poisson(volunteer_skills_mean) truncated to [1, catalog_size]"),
    ("task_skills", "poisson(task_skills_mean) truncated to [1, catalog_size]"),
    ("expense", "normal(expense_mean, expense_sd) truncated at 1"),
    ("budget", "normal(budget_mean, budget_sd) truncated at an independent expense draw"),
    ("duration", "exponential(mean duration_mean)"),
    ("stay", "exponential(mean stay_mean)"),
    ("willingness_bias_rating", "uniform(0, 1)"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDoc {
    pub config: SimulationConfig,
    pub baseline_schedule: BaselineSchedule,
    pub generator: Option<Vec<(String, String)>>,
    pub replications: usize,
    pub seeds: Vec<u64>,
    pub max_abs_imbalance: f64,
    pub policies: Vec<PolicyAggregate>,
    pub pairwise: Vec<Pairwise>,
    pub bands: Vec<BandCheck>,
}

impl SummaryDoc {
    pub fn new(config: &SimulationConfig, bundles: &[ExperimentBundle], comparison: Option<&Comparison>) -> Self {
        let average_expense = bundles.first().map_or(config.synthetic.expense_mean, |b| b.average_expense);
        let (base, slope) = config.resolve_baseline(average_expense);
        let replications = bundles.first().map_or(0, |b| b.replications.len());
        SummaryDoc {
            config: config.clone(),
            baseline_schedule: BaselineSchedule { base, slope },
            generator: config.dataset.is_none().then(|| {
                GENERATOR_SHAPES
                    .iter()
                    .map(|(k, v)| (k.to_string(), v.to_string()))
                    .collect()
            }),
            replications,
            seeds: (0..replications as u64).map(|k| config.replication_seed(k)).collect(),
            max_abs_imbalance: bundles
                .iter()
                .flat_map(|b| &b.replications)
                .map(|r| r.imbalance.abs())
                .fold(0.0, f64::max),
            policies: match comparison {
                Some(c) => c.aggregates.clone(),
                None => bundles.iter().map(aggregate).collect(),
            },
            pairwise: comparison.map(|c| c.pairwise.clone()).unwrap_or_default(),
            bands: comparison.map(|c| c.bands.clone()).unwrap_or_default(),
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| WcbError::io(path, e))?))
}

fn csv_err(path: &Path, e: csv::Error) -> WcbError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => WcbError::io(path, io),
        other => WcbError::Invalid(format!("{}: {other:?}", path.display())),
    }
}

fn config_line(config: &SimulationConfig) -> Result<String> {
    let json = serde_json::to_string(config).map_err(|e| WcbError::Invalid(e.to_string()))?;
    Ok(format!("{CONFIG_PREFIX}{json}\n"))
}

pub fn rounds_file_name(bundle: &ExperimentBundle, replication: u64) -> String {
    format!("rounds_{}_{replication}.csv", bundle.policy)
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .has_headers(false)
        .from_writer(out)
}

pub const ROUND_COLUMNS: [&str; 24] = [
    "round",
    "policy",
    "task_arrivals",
    "newcomers_admitted",
    "departed",
    "expired_tasks",
    "open_tasks",
    "active_volunteers",
    "assigned",
    "completed_tasks",
    "retained",
    "exempt",
    "below_threshold",
    "dropped",
    "total_remuneration",
    "paid_volunteers",
    "total_dividend",
    "dividend_recipients",
    "avg_remuneration",
    "sat_count",
    "sat_mean",
    "sat_median",
    "sat_iqr",
    "contingency",
];

pub fn write_rounds(path: &Path, config: &SimulationConfig, reports: &[RoundReport]) -> Result<()> {
    let mut out = create(path)?;
    out.write_all(config_line(config)?.as_bytes()).map_err(|e| WcbError::io(path, e))?;
    let mut w = csv_writer(out);
    w.write_record(ROUND_COLUMNS).map_err(|e| csv_err(path, e))?;
    for r in reports {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| WcbError::io(path, e))
}

pub fn read_rounds(path: &Path) -> Result<Vec<RoundReport>> {
    let file = File::open(path).map_err(|e| WcbError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file);
    rdr.deserialize()
        .map(|row| {
            row.map_err(|e| WcbError::Parse {
                path: path.to_path_buf(),
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })
        })
        .collect()
}

/// Long format: one row per policy, replication, round and metric.
pub fn write_figures(path: &Path, config: &SimulationConfig, bundles: &[ExperimentBundle]) -> Result<()> {
    let mut out = create(path)?;
    out.write_all(config_line(config)?.as_bytes()).map_err(|e| WcbError::io(path, e))?;
    let mut w = csv_writer(out);
    w.write_record(["policy", "replication", "round", "metric", "value"]).map_err(|e| csv_err(path, e))?;
    for b in bundles {
        for rep in &b.replications {
            for r in &rep.reports {
                let metrics: [(&str, f64); 8] = [
                    ("completed_tasks", r.completed_tasks as f64),
                    ("retained", r.retained as f64),
                    ("dropped", r.dropped as f64),
                    ("avg_remuneration", r.avg_remuneration),
                    ("total_dividend", r.total_dividend),
                    ("sat_mean", r.sat_mean),
                    ("sat_median", r.sat_median),
                    ("sat_iqr", r.sat_iqr),
                ];
                for (name, value) in metrics {
                    w.write_record([
                        b.policy.as_str(),
                        &rep.index.to_string(),
                        &r.round.to_string(),
                        name,
                        &value.to_string(),
                    ])
                    .map_err(|e| csv_err(path, e))?;
                }
            }
        }
    }
    w.flush().map_err(|e| WcbError::io(path, e))
}

pub fn write_summary(path: &Path, doc: &SummaryDoc) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, doc).map_err(|e| WcbError::Invalid(e.to_string()))?;
    out.write_all(b"\n").and_then(|_| out.flush()).map_err(|e| WcbError::io(path, e))
}

pub fn read_summary(path: &Path) -> Result<SummaryDoc> {
    let text = std::fs::read_to_string(path).map_err(|e| WcbError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| WcbError::Parse {
        path: path.to_path_buf(),
        line: e.line() as u64,
        message: e.to_string(),
    })
}

/// Writes the whole file set into `out_dir` and returns the paths written.
pub fn emit_outputs(
    config: &SimulationConfig,
    bundles: &[ExperimentBundle],
    comparison: Option<&Comparison>,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| WcbError::io(out_dir, e))?;
    let mut written = Vec::new();
    for b in bundles {
        for rep in &b.replications {
            let path = out_dir.join(rounds_file_name(b, rep.index));
            write_rounds(&path, &b.config, &rep.reports)?;
            written.push(path);
        }
    }
    let figures = out_dir.join("figures.csv");
    write_figures(&figures, config, bundles)?;
    written.push(figures);
    let summary = out_dir.join("summary.json");
    write_summary(&summary, &SummaryDoc::new(config, bundles, comparison))?;
    written.push(summary);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::experiment::run_experiment;

    fn small() -> SimulationConfig {
        SimulationConfig {
            rounds: 6,
            round_length: 3.0,
            replications: 2,
            volunteer_rate: 8.0,
            task_rate: 1.0,
            ..Default::default()
        }
    }

    #[test]
    fn round_columns_match_struct() {
        let mut w = csv::Writer::from_writer(vec![]);
        w.serialize(RoundReport::empty(1, crate::sim::config::PolicyName::Fixed)).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        assert_eq!(text.lines().next().unwrap(), ROUND_COLUMNS.join(","));
    }

    #[test]
    fn rounds_round_trip_and_row_count() {
        let c = small();
        let bundle = run_experiment(&c).unwrap();
        let dir = tempfile::tempdir().unwrap();
        emit_outputs(&c, std::slice::from_ref(&bundle), None, dir.path()).unwrap();
        let back = read_rounds(&dir.path().join("rounds_vrave_1.csv")).unwrap();
        assert_eq!(back.len(), 6);
        assert_eq!(back, bundle.replications[1].reports);
        let text = std::fs::read_to_string(dir.path().join("figures.csv")).unwrap();
        assert!(text.starts_with(CONFIG_PREFIX));
    }

    #[test]
    fn empty_bundle_writes_headers_only() {
        let dir = tempfile::tempdir().unwrap();
        let written = emit_outputs(&small(), &[], None, dir.path()).unwrap();
        assert_eq!(written.len(), 2);
        let figures = std::fs::read_to_string(dir.path().join("figures.csv")).unwrap();
        assert_eq!(figures.lines().count(), 2);
        let doc = read_summary(&dir.path().join("summary.json")).unwrap();
        assert_eq!(doc.replications, 0);
    }

    #[test]
    fn unwritable_directory_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        assert!(emit_outputs(&small(), &[], None, &blocker.join("sub")).unwrap_err().is_io());
    }
}
