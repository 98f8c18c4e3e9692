//! Delimited text files: samples, prediction runs, external fallback
//! probabilities and β sweeps.
//!
//! Every file has a header line, uses `,` as separator and `\n` line ends.
//! Floats are written in Rust's shortest round-trip form, so reading a file
//! this module wrote and writing it again reproduces the same bytes.

use std::fs;
use std::path::Path;

use relcal_core::ensemble::RunRow;
use relcal_core::methods::SweepRow;
use relcal_core::{Label, PredictionTensor, SampleRecord};

use crate::error::{CliError, Result};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    let bytes = w.into_inner().expect("in-memory writer cannot fail");
    String::from_utf8(bytes).expect("csv output is utf-8")
}

fn put(w: &mut csv::Writer<Vec<u8>>, fields: &[String]) {
    w.write_record(fields)
        .expect("in-memory writer cannot fail");
}

/// Parsed rows of a delimited file, with the header checked.
struct Table<'a> {
    path: &'a Path,
    records: Vec<(u64, csv::StringRecord)>,
}

impl<'a> Table<'a> {
    fn parse(
        path: &'a Path,
        text: &str,
        header_ok: impl Fn(&csv::StringRecord) -> bool,
        expected: &str,
    ) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let header = reader
            .headers()
            .map_err(|e| CliError::parse(path, e.to_string()))?
            .clone();
        if !header_ok(&header) {
            return Err(CliError::parse(
                path,
                format!("expected header `{expected}`"),
            ));
        }
        let mut records = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| CliError::parse(path, e.to_string()))?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != header.len() {
                return Err(CliError::parse(
                    path,
                    format!("line {line}: expected {} fields", header.len()),
                ));
            }
            records.push((line, rec));
        }
        Ok(Self { path, records })
    }

    fn field<T: std::str::FromStr>(
        &self,
        line: u64,
        rec: &csv::StringRecord,
        i: usize,
        what: &str,
    ) -> Result<T> {
        rec[i].trim().parse().map_err(|_| {
            CliError::parse(self.path, format!("line {line}: bad {what} `{}`", &rec[i]))
        })
    }
}

fn label_code(label: Label) -> String {
    label.index().to_string()
}

// ---------------------------------------------------------------- samples

/// One row per variable: `sample_id,label,variable_index,t_0,…`.
pub fn write_samples(samples: &[SampleRecord]) -> Result<String> {
    let len = samples.first().map_or(0, |s| s.sequence_length());
    if samples.iter().any(|s| s.sequence_length() != len) {
        return Err(CliError::Config(
            "all samples in one file need the same sequence length".into(),
        ));
    }
    let mut w = writer();
    let mut header = vec![
        "sample_id".to_string(),
        "label".into(),
        "variable_index".into(),
    ];
    header.extend((0..len).map(|t| format!("t_{t}")));
    put(&mut w, &header);
    for s in samples {
        for (v, seq) in s.sequences().iter().enumerate() {
            let mut row = vec![s.id.clone(), label_code(s.label), v.to_string()];
            row.extend(seq.iter().map(|x| x.to_string()));
            put(&mut w, &row);
        }
    }
    Ok(finish(w))
}

type Partial = (i64, Vec<Option<Vec<f64>>>, u64);

/// Samples in order of first appearance. Variable rows may come in any
/// order but every index `0..V` must appear exactly once.
pub fn read_samples(path: &Path, text: &str) -> Result<Vec<SampleRecord>> {
    let table = Table::parse(
        path,
        text,
        |h| {
            h.len() > 3
                && &h[0] == "sample_id"
                && &h[1] == "label"
                && &h[2] == "variable_index"
                && h.iter()
                    .skip(3)
                    .enumerate()
                    .all(|(t, f)| f == format!("t_{t}"))
        },
        "sample_id,label,variable_index,t_0,…",
    )?;
    let mut order: Vec<String> = Vec::new();
    // id -> (label, sequences by variable index, first line)
    let mut grouped: std::collections::HashMap<String, Partial> = Default::default();
    for (line, rec) in &table.records {
        let id = rec[0].to_string();
        let label: i64 = table.field(*line, rec, 1, "label")?;
        let var: usize = table.field(*line, rec, 2, "variable index")?;
        let seq = (3..rec.len())
            .map(|i| table.field::<f64>(*line, rec, i, "value"))
            .collect::<Result<Vec<_>>>()?;
        let entry = grouped.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            (label, Vec::new(), *line)
        });
        if entry.0 != label {
            return Err(CliError::parse(
                path,
                format!("line {line}: sample `{id}` has conflicting labels"),
            ));
        }
        if entry.1.len() <= var {
            entry.1.resize(var + 1, None);
        }
        if entry.1[var].replace(seq).is_some() {
            return Err(CliError::parse(
                path,
                format!("line {line}: sample `{id}` repeats variable {var}"),
            ));
        }
    }
    order
        .into_iter()
        .map(|id| {
            let (label, seqs, line) = grouped.remove(&id).unwrap();
            let seqs = seqs
                .into_iter()
                .enumerate()
                .map(|(v, s)| {
                    s.ok_or_else(|| {
                        CliError::parse(
                            path,
                            format!("line {line}: sample `{id}` is missing variable {v}"),
                        )
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SampleRecord::new(id, seqs, Label::from_index(label)?)?)
        })
        .collect()
}

// ---------------------------------------------------------------- runs

pub const RUNS_HEADER: [&str; 5] = ["sample_id", "variant_index", "run_index", "p1", "p2"];

/// Sample-major, then variant, then run.
pub fn write_runs(tensors: &[PredictionTensor]) -> String {
    let mut w = writer();
    put(&mut w, &RUNS_HEADER.map(String::from));
    for t in tensors {
        for n in 0..t.n_variants() {
            for (r, run) in t.runs().iter().enumerate() {
                let p = run[n];
                put(
                    &mut w,
                    &[
                        t.sample_id.clone(),
                        n.to_string(),
                        r.to_string(),
                        p.p1().to_string(),
                        p.p2().to_string(),
                    ],
                );
            }
        }
    }
    finish(w)
}

pub fn read_runs(path: &Path, text: &str) -> Result<Vec<RunRow>> {
    let table = Table::parse(
        path,
        text,
        |h| h.iter().eq(RUNS_HEADER),
        &RUNS_HEADER.join(","),
    )?;
    table
        .records
        .iter()
        .map(|(line, rec)| {
            Ok(RunRow {
                sample_id: rec[0].to_string(),
                variant_index: table.field(*line, rec, 1, "variant index")?,
                run_index: table.field(*line, rec, 2, "run index")?,
                p1: table.field(*line, rec, 3, "p1")?,
                p2: table.field(*line, rec, 4, "p2")?,
            })
        })
        .collect()
}

// ---------------------------------------------------------------- external

pub const EXTERNAL_HEADER: [&str; 3] = ["sample_id", "p1", "p2"];

pub fn write_external(rows: &[(String, f64, f64)]) -> String {
    let mut w = writer();
    put(&mut w, &EXTERNAL_HEADER.map(String::from));
    for (id, p1, p2) in rows {
        put(&mut w, &[id.clone(), p1.to_string(), p2.to_string()]);
    }
    finish(w)
}

pub fn read_external(path: &Path, text: &str) -> Result<Vec<(String, f64, f64)>> {
    let table = Table::parse(
        path,
        text,
        |h| h.iter().eq(EXTERNAL_HEADER),
        &EXTERNAL_HEADER.join(","),
    )?;
    table
        .records
        .iter()
        .map(|(line, rec)| {
            Ok((
                rec[0].to_string(),
                table.field(*line, rec, 1, "p1")?,
                table.field(*line, rec, 2, "p2")?,
            ))
        })
        .collect()
}

// ---------------------------------------------------------------- sweep

pub const SWEEP_HEADER: [&str; 3] = ["beta", "rejected_fraction", "accepted_accuracy"];

/// An empty accuracy field means every sample was rejected.
pub fn write_sweep(rows: &[SweepRow]) -> String {
    let mut w = writer();
    put(&mut w, &SWEEP_HEADER.map(String::from));
    for r in rows {
        put(
            &mut w,
            &[
                r.beta.to_string(),
                r.rejected_fraction.to_string(),
                r.accepted_accuracy
                    .map_or_else(String::new, |a| a.to_string()),
            ],
        );
    }
    finish(w)
}

pub fn read_sweep(path: &Path, text: &str) -> Result<Vec<SweepRow>> {
    let table = Table::parse(
        path,
        text,
        |h| h.iter().eq(SWEEP_HEADER),
        &SWEEP_HEADER.join(","),
    )?;
    table
        .records
        .iter()
        .map(|(line, rec)| {
            Ok(SweepRow {
                beta: table.field(*line, rec, 0, "beta")?,
                rejected_fraction: table.field(*line, rec, 1, "rejected fraction")?,
                accepted_accuracy: if rec[2].trim().is_empty() {
                    None
                } else {
                    Some(table.field(*line, rec, 2, "accuracy")?)
                },
            })
        })
        .collect()
}
