//! CSV datasets and JSON output.
//!
//! CSV files carry a header `f1,...,fh[,y]`. JSON floats are written with 17
//! significant digits; non-finite values become `null`.

use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::Formatter;

use crate::error::{usage, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct CsvData {
    pub features: Vec<Vec<f64>>,
    pub labels: Option<Vec<i64>>,
}

impl CsvData {
    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn labels(&self) -> CliResult<&[i64]> {
        match &self.labels {
            Some(l) => Ok(l),
            None => usage("dataset has no 'y' column"),
        }
    }

    /// Class ids 0..|Y| for threshold models.
    pub fn class_labels(&self) -> CliResult<Vec<usize>> {
        self.labels()?
            .iter()
            .map(|&y| if y >= 0 { Ok(y as usize) } else { usage("class labels must be non-negative integers") })
            .collect()
    }

    /// ±1 labels for SVMs.
    pub fn signed_labels(&self) -> CliResult<Vec<i8>> {
        self.labels()?
            .iter()
            .map(|&y| match y {
                1 => Ok(1),
                -1 => Ok(-1),
                _ => usage("SVM labels must be -1 or +1"),
            })
            .collect()
    }
}

pub fn parse_csv<R: io::Read>(reader: R) -> CliResult<CsvData> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|s| s.trim().to_string()).collect();
    let has_y = header.last().map_or(false, |h| h == "y");
    let h = header.len() - has_y as usize;
    for (i, name) in header.iter().take(h).enumerate() {
        if *name != format!("f{}", i + 1) {
            return usage(format!("expected header column 'f{}', found '{name}'", i + 1));
        }
    }
    if h == 0 {
        return usage("dataset needs at least one feature column");
    }
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != header.len() {
            return usage(format!("row {} has {} fields, expected {}", line + 1, rec.len(), header.len()));
        }
        let row = (0..h)
            .map(|j| {
                rec[j].trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                    crate::error::CliError::Usage(format!("row {}: '{}' is not a finite number", line + 1, &rec[j]))
                })
            })
            .collect::<CliResult<Vec<f64>>>()?;
        features.push(row);
        if has_y {
            let y = rec[h]
                .trim()
                .parse::<i64>()
                .map_err(|_| crate::error::CliError::Usage(format!("row {}: label '{}' is not an integer", line + 1, &rec[h])))?;
            labels.push(y);
        }
    }
    if features.is_empty() {
        return usage("dataset has no rows");
    }
    Ok(CsvData { features, labels: has_y.then_some(labels) })
}

pub fn read_csv(path: &Path) -> CliResult<CsvData> {
    let file = std::fs::File::open(path)
        .map_err(|e| crate::error::CliError::Usage(format!("cannot open {}: {e}", path.display())))?;
    parse_csv(file)
}

pub fn write_csv<W: io::Write>(data: &CsvData, writer: W) -> CliResult<()> {
    let mut w = csv::WriterBuilder::new().from_writer(writer);
    let mut header: Vec<String> = (1..=data.dim()).map(|j| format!("f{j}")).collect();
    if data.labels.is_some() {
        header.push("y".into());
    }
    w.write_record(&header)?;
    for (i, row) in data.features.iter().enumerate() {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        if let Some(l) = &data.labels {
            rec.push(l[i].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

struct Sig17;

impl Formatter for Sig17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Compact JSON with 17 significant digits per float.
pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    // Round-trip through Value so non-finite floats become null.
    let v = serde_json::to_value(value)?;
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Sig17);
    v.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

pub fn emit<T: Serialize>(value: &T) -> CliResult<()> {
    println!("{}", to_json(value)?);
    Ok(())
}

pub fn write_json_file<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    std::fs::write(path, to_json(value)? + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let text = "f1,f2,y\n0.25,0.5,1\n0.125,0.75,0\n";
        let d = parse_csv(text.as_bytes()).unwrap();
        let mut out = Vec::new();
        write_csv(&d, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
        let unlabeled = parse_csv("f1\n0.5\n".as_bytes()).unwrap();
        assert!(unlabeled.labels.is_none());
        assert!(parse_csv("a,y\n0.5,1\n".as_bytes()).is_err());
        assert!(parse_csv("f1,y\nx,1\n".as_bytes()).is_err());
    }

    #[test]
    fn json_digits() {
        #[derive(Serialize)]
        struct S {
            a: f64,
            b: f64,
            c: u64,
        }
        let s = to_json(&S { a: 0.1, b: f64::INFINITY, c: 3 }).unwrap();
        assert_eq!(s, r#"{"a":1.0000000000000001e-1,"b":null,"c":3}"#);
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["a"].as_f64().unwrap(), 0.1);
    }
}
