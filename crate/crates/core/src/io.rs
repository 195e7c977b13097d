//! Lossless text serialization: JSON lines for instances, CSV for tables.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::runner::RunTrace;

/// 17 significant digits, so that parsing returns the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

pub fn write_jsonl<W: Write, T: Serialize>(mut w: W, items: &[T]) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead, T: DeserializeOwned>(r: R) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| Error::Parameter(format!("line {}: {e}", i + 1)))?,
        );
    }
    Ok(out)
}

/// A CSV table whose cells are already formatted.
pub fn write_csv<W: Write>(w: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header).map_err(csv_error)?;
    for row in rows {
        out.write_record(row).map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Parameter(format!("csv: {other:?}")),
    }
}

pub const TRACE_HEADER: [&str; 4] = ["instance_id", "T", "P_T", "norm"];

/// One row per instance and iteration, `T = 0` included.
pub fn trace_rows(traces: &[RunTrace]) -> Vec<Vec<String>> {
    traces
        .iter()
        .flat_map(|tr| {
            tr.probs.iter().zip(&tr.norms).enumerate().map(move |(t, (p, norm))| {
                vec![tr.instance_id.to_string(), t.to_string(), fmt_f64(*p), fmt_f64(*norm)]
            })
        })
        .collect()
}

pub fn write_traces<W: Write>(w: W, traces: &[RunTrace]) -> Result<()> {
    write_csv(w, &TRACE_HEADER, &trace_rows(traces))
}
