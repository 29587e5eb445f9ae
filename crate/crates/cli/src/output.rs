//! Run directories, manifests and optional SVG plots.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use ssf_core::csv::CsvTable;

use crate::config::Tolerances;
use crate::error::CliError;

/// One CSV artifact, optionally plotted as `y_column` against `x_column`.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub table: CsvTable,
    pub plot: Option<(String, String)>,
}

impl Artifact {
    pub fn new(name: &str, table: CsvTable) -> Self {
        Self {
            name: name.to_string(),
            table,
            plot: None,
        }
    }

    pub fn plotted(mut self, x: &str, y: &str) -> Self {
        self.plot = Some((x.to_string(), y.to_string()));
        self
    }
}

/// Everything a subcommand produced, held in memory until the run completes.
#[derive(Debug, Clone, Default)]
pub struct RunOutputs {
    pub artifacts: Vec<Artifact>,
    pub notes: Vec<String>,
    pub grid_spacings: Vec<f64>,
    /// Failed checks (selftest only).
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub subcommand: String,
    pub master_seed: u64,
    pub threads: usize,
    pub grid_spacings: Vec<f64>,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<String>,
    /// Truncation and bias bounds reported by the estimators.
    pub notes: Vec<String>,
    pub tolerances: Tolerances,
    /// The configuration file exactly as read (empty when none was given).
    pub config_snapshot: String,
}

impl RunManifest {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest fields are TOML-representable")
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("manifest: {e}")))
    }
}

/// Creates `<out>/<subcommand>-<UTC timestamp>`, adding a counter on collision.
pub fn create_run_dir(out: &Path, subcommand: &str, stamp: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(out)?;
    let base = out.join(format!("{subcommand}-{stamp}"));
    let mut dir = base.clone();
    let mut n = 1;
    while dir.exists() {
        dir = PathBuf::from(format!("{}-{n}", base.display()));
        n += 1;
    }
    fs::create_dir(&dir)?;
    Ok(dir)
}

/// Writes all artifacts (and plots if asked); returns the file names written.
pub fn write_artifacts(dir: &Path, outputs: &RunOutputs, emit_svg: bool) -> Result<Vec<String>, CliError> {
    let mut names = Vec::new();
    for a in &outputs.artifacts {
        let file = format!("{}.csv", a.name);
        a.table.save(&dir.join(&file))?;
        names.push(file);
        if emit_svg {
            if let Some((x, y)) = &a.plot {
                if let Some(svg) = line_plot(&a.table, x, y) {
                    let file = format!("{}.svg", a.name);
                    fs::write(dir.join(&file), svg)?;
                    names.push(file);
                }
            }
        }
    }
    Ok(names)
}

/// Minimal SVG polyline of one column against another.
pub fn line_plot(table: &CsvTable, x_col: &str, y_col: &str) -> Option<String> {
    let xs = table.column_f64(x_col)?;
    let ys = table.column_f64(y_col)?;
    if xs.is_empty() {
        return None;
    }
    let (w, h, pad) = (640.0, 400.0, 40.0);
    let span = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, lo + 0.5)
        }
    };
    let (x0, x1) = span(&xs);
    let (y0, y1) = span(&ys);
    let points: Vec<String> = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let px = pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
            let py = h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
            format!("{px:.2},{py:.2}")
        })
        .collect();
    Some(format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"{}\"/>\n\
         <text x=\"{pad}\" y=\"{}\" font-size=\"12\">{x_col} [{x0}, {x1}]</text>\n\
         <text x=\"4\" y=\"16\" font-size=\"12\">{y_col} [{y0}, {y1}]</text>\n\
         </svg>\n",
        points.join(" "),
        h - 8.0
    ))
}
