//! Fixed-layout CSV tables.

use std::io::{Read, Write};
use std::str::FromStr;

use obsnoise::experiments::{ExperimentKind, ResultRow, SurvivalRow};
use obsnoise::MapKind;

pub const ROW_HEADER: [&str; 13] = [
    "experiment",
    "map",
    "z",
    "p",
    "q",
    "m",
    "realization",
    "kappa",
    "mu",
    "sigma",
    "converged",
    "bm_theory",
    "seed",
];

pub const SURVIVAL_HEADER: [&str; 9] = [
    "z",
    "p",
    "m",
    "t",
    "radius",
    "empirical",
    "theoretical",
    "realizations",
    "censored",
];

/// 17 significant digits, enough to round-trip every double.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

pub fn write_rows<W: Write>(out: W, rows: &[ResultRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ROW_HEADER)?;
    for r in rows {
        w.write_record([
            r.experiment.name().to_string(),
            r.map.name().to_string(),
            r.z.clone(),
            opt_float(r.p),
            r.q.map(|q| q.to_string()).unwrap_or_default(),
            r.m.to_string(),
            r.realization.to_string(),
            opt_float(r.kappa),
            opt_float(r.mu),
            opt_float(r.sigma),
            r.converged.to_string(),
            opt_float(r.bm_theory),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_survival<W: Write>(out: W, rows: &[SurvivalRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SURVIVAL_HEADER)?;
    for r in rows {
        w.write_record([
            r.z.clone(),
            float(r.p),
            r.m.to_string(),
            float(r.t),
            float(r.radius),
            float(r.empirical),
            opt_float(r.theoretical),
            r.realizations.to_string(),
            r.censored.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn parse_opt<T: FromStr>(field: &str, name: &str, line: u64) -> Result<Option<T>, String> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse()
        .map(Some)
        .map_err(|_| format!("line {line}: cannot parse {name} '{field}'"))
}

fn parse_req<T: FromStr>(field: &str, name: &str, line: u64) -> Result<T, String> {
    parse_opt(field, name, line)?.ok_or_else(|| format!("line {line}: missing {name}"))
}

fn parse_kind(s: &str, line: u64) -> Result<ExperimentKind, String> {
    [
        ExperimentKind::Truncation,
        ExperimentKind::BmConvergence,
        ExperimentKind::Dimension,
        ExperimentKind::HittingTime,
    ]
    .into_iter()
    .find(|k| k.name() == s)
    .ok_or_else(|| format!("line {line}: unknown experiment '{s}'"))
}

/// Reads a table written by [`write_rows`].
pub fn read_rows<R: Read>(input: R) -> Result<Vec<ResultRow>, String> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers().map_err(|e| e.to_string())?.clone();
    if header.iter().ne(ROW_HEADER) {
        return Err(format!(
            "unexpected header; expected {}",
            ROW_HEADER.join(",")
        ));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| e.to_string())?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let f = |i: usize| record.get(i).unwrap_or("");
        rows.push(ResultRow {
            experiment: parse_kind(f(0), line)?,
            map: MapKind::from_str(f(1)).map_err(|e| format!("line {line}: {e}"))?,
            z: f(2).to_string(),
            p: parse_opt(f(3), "p", line)?,
            q: parse_opt(f(4), "q", line)?,
            m: parse_req(f(5), "m", line)?,
            realization: parse_req(f(6), "realization", line)?,
            kappa: parse_opt(f(7), "kappa", line)?,
            mu: parse_opt(f(8), "mu", line)?,
            sigma: parse_opt(f(9), "sigma", line)?,
            converged: parse_req(f(10), "converged", line)?,
            bm_theory: parse_opt(f(11), "bm_theory", line)?,
            seed: parse_req(f(12), "seed", line)?,
        });
    }
    Ok(rows)
}
