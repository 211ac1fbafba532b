//! Aligned-log CSV contract.
//!
//! One file per log, header `time,label,anomaly_type,<channel...>`, times in
//! seconds, missing values as empty fields, UTF-8 with LF line endings. Raw
//! (pre-alignment) tables use the same column names but may omit `label` and
//! `anomaly_type`, carry any channel set, and have irregular timestamps.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::telemetry::{AlignedLog, RawLog, RawRow};

const TIME: &str = "time";
const LABEL: &str = "label";
const ANOMALY_TYPE: &str = "anomaly_type";

fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        // `Display` for f64 prints the shortest string that parses back exactly.
        v.to_string()
    }
}

fn parse_value(field: &str) -> Option<f64> {
    let field = field.trim();
    if field.is_empty() {
        return None;
    }
    match field.to_ascii_lowercase().as_str() {
        "nan" | "na" | "null" => None,
        _ => field.parse::<f64>().ok(),
    }
}

fn parse_label(field: &str) -> Option<u8> {
    match parse_value(field)? {
        0.0 => Some(0),
        1.0 => Some(1),
        _ => None,
    }
}

pub fn write_aligned_csv<W: Write>(log: &AlignedLog, writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    let mut header = vec![TIME.to_string(), LABEL.to_string(), ANOMALY_TYPE.to_string()];
    header.extend(log.channels.iter().cloned());
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for (t, row) in log.data.rows().into_iter().enumerate() {
        record.clear();
        record.push(fmt_value(log.time_at(t)));
        record.push(log.labels[t].to_string());
        record.push(log.anomaly_types[t].clone().unwrap_or_default());
        record.extend(row.iter().map(|&v| fmt_value(v)));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_aligned_csv_file(log: &AlignedLog, path: &Path) -> Result<()> {
    let f = BufWriter::new(File::create(path)?);
    write_aligned_csv(log, f)
}

/// Reads an aligned log. The sample rate is not stored in the file, so the
/// caller supplies it (it lives in the dataset manifest).
pub fn read_aligned_csv<R: Read>(reader: R, log_id: &str, rate_hz: f64) -> Result<AlignedLog> {
    let origin = format!("<aligned log {log_id}>");
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = r.headers()?.clone();
    let expect = [TIME, LABEL, ANOMALY_TYPE];
    for (i, name) in expect.iter().enumerate() {
        if header.get(i) != Some(name) {
            return Err(Error::format(&origin, format!("column {i} must be `{name}`, found {:?}", header.get(i))));
        }
    }
    let channels: Vec<String> = header.iter().skip(3).map(str::to_string).collect();
    let d = channels.len();
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut types = Vec::new();
    let mut start_time = None;
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != d + 3 {
            return Err(Error::format(&origin, format!("row {line}: {} fields, expected {}", rec.len(), d + 3)));
        }
        if start_time.is_none() {
            start_time = Some(parse_value(&rec[0]).ok_or_else(|| Error::format(&origin, "first row has no time"))?);
        }
        labels.push(
            parse_label(&rec[1])
                .ok_or_else(|| Error::format(&origin, format!("row {line}: bad label {:?}", &rec[1])))?,
        );
        types.push((!rec[2].is_empty()).then(|| rec[2].to_string()));
        values.extend(rec.iter().skip(3).map(|f| parse_value(f).unwrap_or(f64::NAN)));
    }
    let t = labels.len();
    let data = Array2::from_shape_vec((t, d), values).map_err(|e| Error::format(&origin, e.to_string()))?;
    AlignedLog::new(log_id, rate_hz, start_time.unwrap_or(0.0), channels, data, labels, types)
}

pub fn read_aligned_csv_file(path: &Path, log_id: &str, rate_hz: f64) -> Result<AlignedLog> {
    let f = BufReader::new(File::open(path)?);
    read_aligned_csv(f, log_id, rate_hz).map_err(|e| match e {
        Error::Format { message, .. } => Error::format(path, message),
        other => other,
    })
}

/// Reads a raw flight table. Only the `time` column is mandatory; every column
/// other than `time`, `label` and `anomaly_type` is a channel.
pub fn read_raw_csv<R: Read>(reader: R, log_id: &str) -> Result<RawLog> {
    let origin = format!("<raw log {log_id}>");
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = r.headers()?.clone();
    let find = |name: &str| header.iter().position(|h| h.trim() == name);
    let time_col = find(TIME).ok_or_else(|| Error::format(&origin, "missing `time` column"))?;
    let label_col = find(LABEL);
    let type_col = find(ANOMALY_TYPE);
    let channel_cols: Vec<usize> =
        (0..header.len()).filter(|&i| i != time_col && Some(i) != label_col && Some(i) != type_col).collect();
    let channels = channel_cols.iter().map(|&i| header[i].trim().to_string()).collect();

    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let time =
            parse_value(field(time_col)).ok_or_else(|| Error::format(&origin, format!("row {line}: missing time")))?;
        let label = match label_col {
            Some(c) => parse_label(field(c)).ok_or_else(|| Error::format(&origin, format!("row {line}: bad label")))?,
            None => 0,
        };
        let anomaly_type = type_col.map(field).filter(|s| !s.trim().is_empty()).map(|s| s.trim().to_string());
        let values = channel_cols.iter().map(|&c| parse_value(field(c)).filter(|v| v.is_finite())).collect();
        rows.push(RawRow { time, values, label, anomaly_type });
    }
    Ok(RawLog { log_id: log_id.to_string(), channels, rows, has_labels: label_col.is_some() })
}

pub fn read_raw_csv_file(path: &Path, log_id: &str) -> Result<RawLog> {
    let f = BufReader::new(File::open(path)?);
    read_raw_csv(f, log_id).map_err(|e| match e {
        Error::Format { message, .. } => Error::format(path, message),
        other => other,
    })
}

/// Writes a raw log with the aligned-log column layout.
pub fn write_raw_csv<W: Write>(log: &RawLog, writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    let mut header = vec![TIME.to_string(), LABEL.to_string(), ANOMALY_TYPE.to_string()];
    header.extend(log.channels.iter().cloned());
    w.write_record(&header)?;
    for row in &log.rows {
        let mut rec = vec![fmt_value(row.time), row.label.to_string(), row.anomaly_type.clone().unwrap_or_default()];
        rec.extend(row.values.iter().map(|v| v.map(fmt_value).unwrap_or_default()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_raw_csv_file(log: &RawLog, path: &Path) -> Result<()> {
    write_raw_csv(log, BufWriter::new(File::create(path)?))
}
