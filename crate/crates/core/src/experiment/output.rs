use std::path::Path;

use plotters::prelude::*;
use serde::{Deserialize, Serialize};

use super::sweep::SweepResult;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str =
    "sigma,mc_mean,mc_sd,n_ok,n_failed,regime_saturated,regime_linear,regime_intermediate";

/// One CSV data row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub sigma: f64,
    pub mc_mean: f64,
    pub mc_sd: f64,
    pub n_ok: usize,
    pub n_failed: usize,
    pub regime_saturated: usize,
    pub regime_linear: usize,
    pub regime_intermediate: usize,
}

impl SweepResult {
    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.rows
            .iter()
            .map(|r| CsvRow {
                sigma: r.sigma,
                mc_mean: r.mc_mean,
                mc_sd: r.mc_sd,
                n_ok: r.n_ok,
                n_failed: r.n_failed,
                regime_saturated: r.regime_saturated,
                regime_linear: r.regime_linear,
                regime_intermediate: r.regime_intermediate,
            })
            .collect()
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn emit_csv(res: &SweepResult, path: &Path) -> Result<()> {
    if res.rows.is_empty() {
        return Err(Error::InvalidArgument(
            "sweep result has an empty grid".into(),
        ));
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for row in res.csv_rows() {
        w.serialize(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize()
        .map(|row| row.map_err(csv_err(path)))
        .collect()
}

/// Bar chart of mean total capacity against `log10 sigma`, with reference
/// lines at `N` and 1. Written as SVG.
pub fn emit_plot(res: &SweepResult, path: &Path) -> Result<()> {
    if res.rows.is_empty() {
        return Err(Error::InvalidArgument(
            "sweep result has an empty grid".into(),
        ));
    }
    let plot_err = |e: String| Error::Plot {
        path: path.to_path_buf(),
        message: e,
    };
    let n = res.config.n as f64;
    let xs: Vec<f64> = res.rows.iter().map(|r| r.sigma.log10()).collect();
    let step = if xs.len() > 1 {
        (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64
    } else {
        1.0
    };
    let half = 0.4 * step.abs().max(1e-6);
    let x_lo = xs.iter().copied().fold(f64::INFINITY, f64::min) - 2.0 * half;
    let x_hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 2.0 * half;

    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(e.to_string()))?;
    let title = format!(
        "{} reservoir, {} activation, N = {}",
        res.config.ensemble.label(),
        res.config.activation,
        res.config.n
    );
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(15)
        .x_label_area_size(40)
        .y_label_area_size(50)
        .build_cartesian_2d(x_lo..x_hi, 0.0..(n * 1.1).max(1.5))
        .map_err(|e| plot_err(e.to_string()))?;
    chart
        .configure_mesh()
        .x_desc("log10 sigma")
        .y_desc("mean total MC")
        .draw()
        .map_err(|e| plot_err(e.to_string()))?;

    chart
        .draw_series(
            res.rows
                .iter()
                .zip(&xs)
                .filter(|(r, _)| r.mc_mean.is_finite())
                .map(|(r, &x)| {
                    Rectangle::new(
                        [(x - half, 0.0), (x + half, r.mc_mean)],
                        BLUE.mix(0.6).filled(),
                    )
                }),
        )
        .map_err(|e| plot_err(e.to_string()))?;
    for level in [n, 1.0] {
        chart
            .draw_series(LineSeries::new(
                vec![(x_lo, level), (x_hi, level)],
                RED.stroke_width(1),
            ))
            .map_err(|e| plot_err(e.to_string()))?;
    }
    root.present().map_err(|e| plot_err(e.to_string()))
}
