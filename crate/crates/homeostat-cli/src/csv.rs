//! Trace serialization: CSV with a fixed seven-column header, float cells
//! printed with 17 significant digits so a written trace re-reads bit for
//! bit, and the event log appended as '#' comment lines. Files are written
//! to a temporary sibling and renamed into place, so readers never observe
//! a partial trace.

use crate::error::CliError;
use homeostat_core::trace::{Trace, TraceEvent};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

pub const HEADER: &str = "t_s,i_syn_A,v_thr_V,i_gain_A,sw,rate_Hz,v_syn_V";

fn event_line(e: &TraceEvent) -> String {
    match e {
        TraceEvent::InputStep { t, label, current } => {
            format!("# event input_step t={t:.16e} current={current:.16e} label={label:?}")
        }
        TraceEvent::LockEntry { t } => format!("# event lock_entry t={t:.16e}"),
        TraceEvent::SaturationEnter { t } => format!("# event saturation_enter t={t:.16e}"),
        TraceEvent::SaturationExit { t } => format!("# event saturation_exit t={t:.16e}"),
        TraceEvent::Reset { t } => format!("# event reset t={t:.16e}"),
    }
}

/// Write a trace to `path` atomically. `comments` are emitted right after
/// the header; each must already carry its '#' prefix.
pub fn write_trace_csv(path: &Path, trace: &Trace, comments: &[String]) -> Result<(), CliError> {
    let tmp = tmp_sibling(path);
    let result = (|| -> std::io::Result<()> {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        writeln!(w, "{HEADER}")?;
        for c in comments {
            writeln!(w, "{c}")?;
        }
        for r in &trace.rows {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e}",
                r.t,
                r.i_syn,
                r.v_thr,
                r.i_gain,
                r.sw as u8,
                r.rate,
                r.v_syn
            )?;
        }
        for e in &trace.events {
            writeln!(w, "{}", event_line(e))?;
        }
        writeln!(w, "# feedback_sign_violations {}", trace.feedback_sign_violations)?;
        writeln!(w, "# steps {}", trace.steps)?;
        w.flush()
    })();
    match result {
        Ok(()) => {
            fs::rename(&tmp, path).map_err(|e| {
                let _ = fs::remove_file(&tmp);
                CliError::Io(format!("renaming {} into place: {e}", tmp.display()))
            })
        }
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(CliError::Io(format!("writing {}: {e}", tmp.display())))
        }
    }
}

fn tmp_sibling(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".tmp");
    path.with_file_name(name)
}

/// One re-read sample; mirrors the CSV columns, not the full in-memory row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsvRow {
    pub t: f64,
    pub i_syn: f64,
    pub v_thr: f64,
    pub i_gain: f64,
    pub sw: bool,
    pub rate: f64,
    pub v_syn: f64,
}

/// Read a trace CSV back. Comment lines are skipped; the header must match
/// [`HEADER`] exactly.
pub fn read_trace_csv(path: &Path) -> Result<Vec<CsvRow>, CliError> {
    let file = fs::File::open(path)
        .map_err(|e| CliError::Io(format!("opening {}: {e}", path.display())))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| CliError::Io(format!("{}: empty file", path.display())))?;
    if header != HEADER {
        return Err(CliError::Io(format!(
            "{}: unexpected header {header:?}",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lineno = idx + 2;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 7 {
            return Err(CliError::Io(format!(
                "{}:{lineno}: expected 7 cells, found {}",
                path.display(),
                cells.len()
            )));
        }
        let f = |i: usize| -> Result<f64, CliError> {
            cells[i].parse().map_err(|e| {
                CliError::Io(format!("{}:{lineno}: cell {i}: {e}", path.display()))
            })
        };
        let sw = match cells[4] {
            "0" => false,
            "1" => true,
            other => {
                return Err(CliError::Io(format!(
                    "{}:{lineno}: sw must be 0 or 1, found {other:?}",
                    path.display()
                )))
            }
        };
        rows.push(CsvRow {
            t: f(0)?,
            i_syn: f(1)?,
            v_thr: f(2)?,
            i_gain: f(3)?,
            sw,
            rate: f(5)?,
            v_syn: f(6)?,
        });
    }
    Ok(rows)
}
