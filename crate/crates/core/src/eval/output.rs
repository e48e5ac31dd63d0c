use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use plotters::prelude::*;

use super::sim::EstimatorKind;
use super::sweep::SweepRow;
use crate::error::{Error, Result};
use crate::phy::Modulation;

pub const CSV_HEADER: &str = "n0_db,estimator,modulation,ber,mse,trials,bits,ci95";

fn nonempty(rows: &[SweepRow]) -> Result<()> {
    if rows.is_empty() {
        Err(Error::EmptyInput)
    } else {
        Ok(())
    }
}

/// Serializes rows to CSV text. Floats use the shortest round-tripping form.
pub fn csv_string(rows: &[SweepRow]) -> Result<String> {
    nonempty(rows)?;
    let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidConfig(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidConfig(e.to_string()))
}

pub fn emit_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let text = csv_string(rows)?;
    let mut f = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
    f.flush().map_err(|e| Error::io(path, e))
}

pub fn parse_csv_str(text: &str) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| Error::InvalidConfig(e.to_string()))?;
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(Error::InvalidConfig(format!(
            "unexpected CSV header `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    r.deserialize()
        .map(|row| row.map_err(|e| Error::InvalidConfig(e.to_string())))
        .collect()
}

pub fn parse_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv_str(&text).map_err(|e| match e {
        Error::InvalidConfig(m) => Error::Io {
            path: path.display().to_string(),
            message: m,
        },
        other => other,
    })
}

fn color(kind: EstimatorKind) -> RGBColor {
    match kind {
        EstimatorKind::Ideal => RGBColor(200, 30, 30),
        EstimatorKind::Ls => RGBColor(30, 30, 30),
        EstimatorKind::Bpdn => RGBColor(30, 90, 200),
        EstimatorKind::PhaselessLs => RGBColor(230, 140, 0),
        EstimatorKind::PhaselessBpdn => RGBColor(20, 150, 60),
        EstimatorKind::Sdp => RGBColor(140, 60, 170),
    }
}

type Curve = (EstimatorKind, Vec<(f64, f64)>);

fn curves(rows: &[SweepRow], m: Modulation, value: impl Fn(&SweepRow) -> f64) -> Vec<Curve> {
    let mut out: Vec<Curve> = Vec::new();
    for r in rows.iter().filter(|r| r.modulation == m) {
        let v = value(r);
        let pt = (r.n0_db, if v > 0.0 { v } else { f64::NAN });
        match out.iter_mut().find(|(k, _)| *k == r.estimator) {
            Some((_, pts)) => pts.push(pt),
            None => out.push((r.estimator, vec![pt])),
        }
    }
    for (_, pts) in &mut out {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    out
}

fn log_range(cs: &[Curve]) -> (f64, f64) {
    let vals = cs
        .iter()
        .flat_map(|(_, p)| p.iter().map(|q| q.1))
        .filter(|v| v.is_finite() && *v > 0.0);
    let (lo, hi) = vals.fold((f64::INFINITY, 0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (1e-6, 1.0);
    }
    let lo = 10f64.powf(lo.log10().floor());
    let hi = 10f64.powf(hi.log10().ceil()).max(lo * 10.0);
    (lo, hi)
}

fn plot_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::io(path, e)
}

/// Renders BER and MSE against `N₀` as SVG, one row of two panels per
/// modulation, both with logarithmic ordinates.
pub fn emit_plot(rows: &[SweepRow], path: &Path) -> Result<()> {
    nonempty(rows)?;
    let mut mods: Vec<Modulation> = Vec::new();
    for r in rows {
        if !mods.contains(&r.modulation) {
            mods.push(r.modulation);
        }
    }
    let (xlo, xhi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| {
        (a.min(r.n0_db), b.max(r.n0_db))
    });
    let (xlo, xhi) = if xhi > xlo { (xlo, xhi) } else { (xlo - 1.0, xhi + 1.0) };

    let root = SVGBackend::new(path, (1000, 420 * mods.len() as u32)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(path, e))?;
    let rows_area = root.split_evenly((mods.len(), 2));
    for (i, m) in mods.iter().enumerate() {
        let panels: [(&str, Vec<Curve>); 2] = [
            ("BER", curves(rows, *m, |r| r.ber)),
            ("MSE per dimension", curves(rows, *m, |r| r.mse)),
        ];
        for (j, (label, cs)) in panels.iter().enumerate() {
            let (ylo, yhi) = log_range(cs);
            let mut chart = ChartBuilder::on(&rows_area[2 * i + j])
                .caption(format!("{m}: {label}"), ("sans-serif", 18))
                .margin(12)
                .x_label_area_size(36)
                .y_label_area_size(60)
                .build_cartesian_2d(xlo..xhi, (ylo..yhi).log_scale())
                .map_err(|e| plot_err(path, e))?;
            chart
                .configure_mesh()
                .x_desc("N0 [dB]")
                .y_desc(*label)
                .draw()
                .map_err(|e| plot_err(path, e))?;
            for (kind, pts) in cs {
                let col = color(*kind);
                let finite: Vec<(f64, f64)> = pts.iter().copied().filter(|p| p.1.is_finite()).collect();
                chart
                    .draw_series(LineSeries::new(finite, col.stroke_width(2)))
                    .map_err(|e| plot_err(path, e))?
                    .label(kind.name())
                    .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], col.stroke_width(2)));
            }
            chart
                .configure_series_labels()
                .background_style(WHITE.mix(0.8))
                .border_style(BLACK)
                .draw()
                .map_err(|e| plot_err(path, e))?;
        }
    }
    root.present().map_err(|e| plot_err(path, e))
}
