//! Result files: RFC 4180 CSV tables, JSON reports and long-format plot data.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::Result;

/// One row of a result table. Wall time lives in `timings.csv` so that
/// result files are bit-identical across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub series: String,
    pub n: u64,
    pub delta: f64,
    pub total: f64,
    #[serde(rename = "G")]
    pub g: f64,
    #[serde(rename = "F")]
    pub f: f64,
    pub gamma: f64,
    pub reference: f64,
    pub rel_error: f64,
    /// `;`-separated flags such as `outside_regime`.
    pub flags: String,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub experiment: String,
    pub series: String,
    pub n: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub experiment: String,
    pub n: u64,
    pub series: String,
    pub value: f64,
}

#[derive(Debug, Serialize)]
struct ConfigSnapshot<'a> {
    config_hash: String,
    config: &'a ExperimentConfig,
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn from_csv<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[derive(Debug, Clone)]
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self { root })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<PathBuf> {
        let p = self.root.join(name);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&p, text)?;
        Ok(p)
    }

    pub fn write_csv<T: Serialize>(&self, name: &str, rows: &[T]) -> Result<PathBuf> {
        self.write_text(name, &to_csv(rows)?)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_text(name, &text)
    }

    pub fn write_config(&self, cfg: &ExperimentConfig) -> Result<PathBuf> {
        self.write_json("config.json", &ConfigSnapshot { config_hash: cfg.hash(), config: cfg })
    }

    /// Writes per-step row files, then merges them in the given order into
    /// `name`.
    pub fn merge_steps(&self, name: &str, steps: &[(String, Vec<ResultRow>)]) -> Result<PathBuf> {
        let mut all = Vec::new();
        for (step, rows) in steps {
            let p = self.write_csv(&format!("steps/{step}.csv"), rows)?;
            all.extend(from_csv::<ResultRow>(&fs::read_to_string(p)?)?);
        }
        self.write_csv(name, &all)
    }
}

/// Long-format plot data from result rows: `rel_error`, `total` and `gamma`
/// per series.
pub fn plot_points(rows: &[ResultRow]) -> Vec<PlotPoint> {
    let mut out = Vec::with_capacity(3 * rows.len());
    for r in rows {
        for (name, v) in [("total", r.total), ("rel_error", r.rel_error), ("gamma", r.gamma)] {
            out.push(PlotPoint {
                experiment: r.experiment.clone(),
                n: r.n,
                series: format!("{}/{name}", r.series),
                value: v,
            });
        }
    }
    out
}
