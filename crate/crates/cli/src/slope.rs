//! Least-squares fits of `log2(metric)` against `log2(L)`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::args::{Metric, SlopeArgs};
use crate::bench::BenchRecord;
use crate::error::{CliError, CliResult};
use crate::files::Sink;

pub const MIN_POINTS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EngineFit {
    pub engine: String,
    pub points: usize,
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeFit {
    pub metric: String,
    pub fits: Vec<EngineFit>,
}

fn metric_value(r: &BenchRecord, m: Metric) -> u64 {
    match m {
        Metric::MacCount => r.mac_count,
        Metric::FfCost => r.ff_cost,
        Metric::TotalCost => r.total_cost(),
        Metric::WallNs => r.wall_ns,
    }
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    (slope, intercept, (rss / n).sqrt())
}

/// Fits every engine in `records` (or only `engine`), using per-L means of
/// the metric.
pub fn fit_records(records: &[BenchRecord], metric: Metric, engine: Option<&str>) -> CliResult<SlopeFit> {
    let mut by_engine: BTreeMap<&str, BTreeMap<usize, (f64, usize)>> = BTreeMap::new();
    for r in records.iter().filter(|r| engine.is_none_or(|e| e == r.engine)) {
        let slot = by_engine.entry(&r.engine).or_default().entry(r.l_gen).or_insert((0.0, 0));
        slot.0 += metric_value(r, metric) as f64;
        slot.1 += 1;
    }
    if by_engine.is_empty() {
        return Err(CliError::Usage(match engine {
            Some(e) => format!("no rows for engine `{e}`"),
            None => "no rows to fit".into(),
        }));
    }
    let mut fits = Vec::new();
    for (name, per_len) in by_engine {
        if per_len.len() < MIN_POINTS {
            return Err(CliError::Usage(format!(
                "engine `{name}` has {} distinct lengths; at least {MIN_POINTS} are needed",
                per_len.len()
            )));
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (len, (sum, count)) in per_len {
            let mean = sum / count as f64;
            if mean <= 0.0 {
                return Err(CliError::Usage(format!("engine `{name}`: {} is zero at L={len}", metric.as_str())));
            }
            xs.push((len as f64).log2());
            ys.push(mean.log2());
        }
        let (slope, intercept, residual_rms) = fit_line(&xs, &ys);
        fits.push(EngineFit { engine: name.to_string(), points: xs.len(), slope, intercept, residual_rms });
    }
    Ok(SlopeFit { metric: metric.as_str().to_string(), fits })
}

pub fn read_records(path: &Path) -> CliResult<Vec<BenchRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Parse { path: path.to_path_buf(), line: 0, msg: format!("{other:?}") },
    })?;
    reader
        .deserialize::<BenchRecord>()
        .map(|row| {
            row.map_err(|e| {
                let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
                CliError::Parse { path: path.to_path_buf(), line, msg: e.to_string() }
            })
        })
        .collect()
}

pub fn cmd_slope(args: &SlopeArgs, sink: &Sink, json: bool) -> CliResult<()> {
    let records = read_records(&args.input)?;
    let fit = fit_records(&records, args.metric, args.engine.as_deref())?;
    sink.write_with(|w| {
        if json {
            writeln!(w, "{}", serde_json::to_string_pretty(&fit).expect("fit serializes"))
        } else {
            for f in &fit.fits {
                writeln!(
                    w,
                    "{:<11} {}: slope {:.4}  intercept {:.4}  residual rms {:.2e}  ({} lengths)",
                    f.engine, fit.metric, f.slope, f.intercept, f.residual_rms, f.points
                )?;
            }
            Ok(())
        }
    })
}
