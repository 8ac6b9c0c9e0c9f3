use std::path::Path;

use crate::linalg::Vector;
use crate::{Error, Result};

/// Reads one `d`-dimensional sample per row under a `dim0,…,dim{d-1}` header.
pub fn read_samples_csv(path: &Path) -> Result<Vec<Vector>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header = rdr.headers()?.clone();
    let d = header.len();
    for (i, h) in header.iter().enumerate() {
        if h != format!("dim{i}") {
            return Err(Error::Parse { line: 1, msg: format!("expected header dim{i}, found `{h}`") });
        }
    }
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        if rec.len() != d {
            return Err(Error::Parse { line, msg: format!("expected {d} fields, found {}", rec.len()) });
        }
        let v = rec
            .iter()
            .map(|f| f.parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Parse { line, msg: "not a finite number".into() })?;
        out.push(Vector::from_vec(v));
    }
    if out.is_empty() {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    Ok(out)
}

pub fn samples_to_csv(samples: &[Vector]) -> Result<String> {
    let d = samples.first().map_or(0, |s| s.len());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record((0..d).map(|i| format!("dim{i}")))?;
    for s in samples {
        w.write_record(s.iter().map(|v| format!("{v:.16e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("ascii"))
}

pub fn write_samples_csv(path: &Path, samples: &[Vector]) -> Result<()> {
    std::fs::write(path, samples_to_csv(samples)?).map_err(|e| Error::io(path, e))
}
