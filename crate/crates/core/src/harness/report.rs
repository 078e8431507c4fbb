//! CSV, plain-text summary and gnuplot script for a preset run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::presets::PresetOutcome;
use super::series::{limit_of, Axis, ConvergenceSeries};
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 8] = ["scenario", "axis", "param", "functional", "energy", "ratio", "pairs", "seed_grid"];

/// C's `%.17g`: 17 significant digits, trailing zeros dropped, exponent
/// form when the decimal exponent is below -4 or at least 17.
pub fn format_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("exponent digits");
    if !(-4..17).contains(&exp) {
        let mant = strip_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        let prec = (16 - exp) as usize;
        strip_zeros(&format!("{x:.prec$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// CSV text of the given series, in order.
pub fn series_csv<'a>(series: impl IntoIterator<Item = &'a ConvergenceSeries>) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for s in series {
        for p in &s.points {
            w.write_record([
                s.scenario.clone(),
                s.axis.name().to_string(),
                format_g17(p.param),
                format_g17(p.functional.value),
                format_g17(p.energy.value),
                format_g17(p.ratio),
                p.functional.pair_count.to_string(),
                p.grid.to_string(),
            ])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// One row of a series CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub scenario: String,
    pub axis: Axis,
    pub param: f64,
    pub functional: f64,
    pub energy: f64,
    pub ratio: f64,
    pub pairs: u64,
    pub seed_grid: u64,
}

fn parse_num(field: &str, what: &str) -> Result<f64> {
    match field {
        "nan" => Ok(f64::NAN),
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => field.parse().map_err(|_| Error::Config(format!("bad {what} value {field:?}"))),
    }
}

/// Parse a series CSV written by [`series_csv`].
pub fn read_series_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Config("unexpected CSV header".into()));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != CSV_HEADER.len() {
            return Err(Error::Config(format!("row has {} fields", rec.len())));
        }
        let axis = Axis::from_name(&rec[1]).ok_or_else(|| Error::Config(format!("unknown axis {:?}", &rec[1])))?;
        rows.push(CsvRow {
            scenario: rec[0].to_string(),
            axis,
            param: parse_num(&rec[2], "param")?,
            functional: parse_num(&rec[3], "functional")?,
            energy: parse_num(&rec[4], "energy")?,
            ratio: parse_num(&rec[5], "ratio")?,
            pairs: rec[6].parse().map_err(|_| Error::Config(format!("bad pairs {:?}", &rec[6])))?,
            seed_grid: rec[7].parse().map_err(|_| Error::Config(format!("bad grid {:?}", &rec[7])))?,
        });
    }
    Ok(rows)
}

/// Plain-text summary of CSV rows: the plateau of each scenario.
pub fn summarize_rows(rows: &[CsvRow], tolerance: f64) -> String {
    let mut out = String::new();
    let mut names: Vec<&str> = Vec::new();
    for r in rows {
        if !names.contains(&r.scenario.as_str()) {
            names.push(&r.scenario);
        }
    }
    for name in names {
        let ratios: Vec<f64> = rows.iter().filter(|r| r.scenario == name).map(|r| r.ratio).collect();
        match limit_of(&ratios, tolerance) {
            Ok(p) => {
                let _ = writeln!(
                    out,
                    "{name}: {} points, plateau {} +/- {} ({})",
                    ratios.len(),
                    format_g17(p.value),
                    format_g17(p.half_width),
                    p.status.name()
                );
            }
            Err(e) => {
                let _ = writeln!(out, "{name}: {} points, no plateau: {e}", ratios.len());
            }
        }
    }
    out
}

pub fn summary_text(o: &PresetOutcome) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "preset {}", o.name);
    for s in &o.sweeps {
        let series = &s.series;
        let _ = writeln!(out, "\n[{}] axis {} ({} points)", series.scenario, series.axis.name(), series.points.len());
        for p in &series.points {
            let _ = writeln!(
                out,
                "  {} = {:<12} functional {:<22} energy {:<22} ratio {}",
                series.axis.name(),
                format_g17(p.param),
                format_g17(p.functional.value),
                format_g17(p.energy.value),
                format_g17(p.ratio)
            );
        }
        match series.plateau {
            Some(pl) => {
                let _ = writeln!(
                    out,
                    "  plateau {} +/- {} status {}",
                    format_g17(pl.value),
                    format_g17(pl.half_width),
                    pl.status.name()
                );
            }
            None => {
                let _ = writeln!(out, "  plateau none");
            }
        }
        if let Some((lo, hi)) = series.ratio_band() {
            let _ = writeln!(out, "  ratio band [{}, {}]", format_g17(lo), format_g17(hi));
        }
        if let Some(oracle) = s.oracle {
            let _ = writeln!(out, "  oracle {}", format_g17(oracle));
        }
        for n in &s.notes {
            let _ = writeln!(out, "  note: {n}");
        }
        for c in &s.checks {
            write_check(&mut out, c);
        }
    }
    if !o.cross.is_empty() || !o.conclusions.is_empty() {
        let _ = writeln!(out, "\n[cross]");
        for c in &o.cross {
            write_check(&mut out, c);
        }
        for c in &o.conclusions {
            let _ = writeln!(out, "  conclusion: {c}");
        }
    }
    let _ = writeln!(out, "\nresult {}", if o.passed() { "PASS" } else { "FAIL" });
    out
}

fn write_check(out: &mut String, c: &super::series::BoundCheck) {
    let _ = writeln!(
        out,
        "  check {:<28} {} lhs {} rhs {} margin {}",
        c.name,
        if c.pass { "PASS" } else { "FAIL" },
        format_g17(c.lhs),
        format_g17(c.rhs),
        format_g17(c.margin)
    );
}

pub fn gnuplot_script(o: &PresetOutcome, csv_name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "set datafile separator ','");
    let _ = writeln!(out, "set logscale x");
    let _ = writeln!(out, "set key outside");
    let _ = writeln!(out, "set ylabel 'functional / energy'");
    let mut plots = Vec::new();
    for s in &o.sweeps {
        let name = &s.series.scenario;
        plots.push(format!(
            "'{csv_name}' using (strcol(1) eq '{name}' ? $3 : 1/0):6 skip 1 with linespoints title '{name}'"
        ));
        if let Some(oracle) = s.oracle {
            plots.push(format!("{} with lines dashtype 2 title '{name} oracle'", format_g17(oracle)));
        }
    }
    if let Some(s) = o.sweeps.first() {
        let _ = writeln!(out, "set xlabel '{}'", s.series.axis.name());
    }
    let _ = writeln!(out, "plot {}", plots.join(", \\\n     "));
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub gnuplot: PathBuf,
}

/// Write `<name>.csv`, `<name>.txt` and `<name>.gp` into `dir`.
pub fn emit_report(o: &PresetOutcome, dir: &Path) -> Result<ReportFiles> {
    std::fs::create_dir_all(dir)?;
    let csv = dir.join(format!("{}.csv", o.name));
    let summary = dir.join(format!("{}.txt", o.name));
    let gnuplot = dir.join(format!("{}.gp", o.name));
    std::fs::write(&csv, series_csv(o.sweeps.iter().map(|s| &s.series))?)?;
    std::fs::write(&summary, summary_text(o))?;
    std::fs::write(&gnuplot, gnuplot_script(o, &format!("{}.csv", o.name)))?;
    Ok(ReportFiles { csv, summary, gnuplot })
}
