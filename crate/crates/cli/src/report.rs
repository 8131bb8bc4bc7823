//! Relative QoI errors of reduced runs against the HDM run.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use qmor_core::rom::{read_qoi_csv, relative_error, QoiHistory};
use qmor_core::{Error, Result};

/// One report row.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub rom: String,
    pub qoi: String,
    pub relative_error: f64,
}

fn check_aligned(reference: &QoiHistory, rom: &QoiHistory, label: &str) -> Result<()> {
    if reference.names() != rom.names() {
        return Err(Error::InvalidArgument(format!(
            "{label}: QoI columns {:?} differ from the reference {:?}",
            rom.names(),
            reference.names()
        )));
    }
    if reference.len() != rom.len() {
        return Err(Error::InvalidArgument(format!(
            "{label}: misaligned time stamps ({} samples, reference has {})",
            rom.len(),
            reference.len()
        )));
    }
    for (a, b) in rom.times.iter().zip(&reference.times) {
        if (a - b).abs() > 1e-9 * b.abs().max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "{label}: misaligned time stamps (t = {a} against t = {b})"
            )));
        }
    }
    Ok(())
}

/// Rows ordered by ROM input, then by QoI.
pub fn error_rows(reference: &QoiHistory, roms: &[(String, QoiHistory)]) -> Result<Vec<ErrorRow>> {
    let mut rows = Vec::new();
    for (label, rom) in roms {
        check_aligned(reference, rom, label)?;
        for ((name, a), b) in reference
            .names()
            .into_iter()
            .zip(rom.series())
            .zip(reference.series())
        {
            rows.push(ErrorRow {
                rom: label.clone(),
                qoi: name,
                relative_error: relative_error(a, b)?,
            });
        }
    }
    Ok(rows)
}

pub fn report_csv(rows: &[ErrorRow]) -> String {
    let mut out = String::from("rom,qoi,relative_error\n");
    for r in rows {
        writeln!(out, "{},{},{:e}", r.rom, r.qoi, r.relative_error).unwrap();
    }
    out
}

/// Every series in long format, `source,qoi,time,value`, ready for plotting.
pub fn histories_csv(series: &[(String, &QoiHistory)]) -> String {
    let mut out = String::from("source,qoi,time,value\n");
    for (label, h) in series {
        for (name, values) in h.names().iter().zip(h.series()) {
            for (t, v) in h.times.iter().zip(values) {
                writeln!(out, "{label},{name},{t},{v}").unwrap();
            }
        }
    }
    out
}

/// `report.csv` -> `report_histories.csv`
pub fn histories_path(report: &Path) -> PathBuf {
    let stem = report
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    report.with_file_name(format!("{stem}_histories.csv"))
}

fn load(path: &Path) -> Result<QoiHistory> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    read_qoi_csv(&text)
}

pub fn compare(hdm: &Path, roms: &[PathBuf], out: &Path) -> Result<()> {
    let reference = load(hdm)?;
    let roms = roms
        .iter()
        .map(|p| Ok((p.display().to_string(), load(p)?)))
        .collect::<Result<Vec<_>>>()?;
    let rows = error_rows(&reference, &roms)?;

    let mut series = vec![("hdm".to_string(), &reference)];
    series.extend(roms.iter().map(|(l, h)| (l.clone(), h)));
    let write = |path: &Path, text: String| {
        fs::write(path, text)
            .map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display())))
    };
    write(out, report_csv(&rows))?;
    let long = histories_path(out);
    write(&long, histories_csv(&series))?;

    for r in &rows {
        println!("{:<40} {:<14} {:.6e}", r.rom, r.qoi, r.relative_error);
    }
    println!("report -> {}", out.display());
    println!("time histories -> {}", long.display());
    Ok(())
}
