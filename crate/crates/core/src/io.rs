//! Count-series CSV interchange: a single `count` column with a header row.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::CountSeries;

pub fn read_counts<R: Read>(reader: R) -> Result<CountSeries> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Data(e.to_string()))?.clone();
    if headers.len() != 1 || headers.get(0).map(str::trim) != Some("count") {
        return Err(Error::Data(format!(
            "line 1: expected a single `count` header, found {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let mut values = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        // header is line 1
        let line = i + 2;
        let record = record.map_err(|e| Error::Data(format!("line {line}: {e}")))?;
        let field = record.get(0).unwrap_or("").trim();
        let value: f64 = field
            .parse()
            .map_err(|_| Error::Data(format!("line {line}: `{field}` is not a number")))?;
        if !value.is_finite() {
            return Err(Error::Data(format!("line {line}: non-finite value `{field}`")));
        }
        if value < 0.0 || value.fract() != 0.0 {
            return Err(Error::Data(format!(
                "line {line}: `{field}` is not a non-negative integer count"
            )));
        }
        values.push(value as u64);
    }
    CountSeries::new(values).map_err(|e| Error::Data(e.to_string()))
}

pub fn read_counts_file(path: &Path) -> Result<CountSeries> {
    let file = std::fs::File::open(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    read_counts(file).map_err(|e| match e {
        Error::Data(msg) => Error::Data(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_counts<W: Write>(series: &CountSeries, mut writer: W) -> std::io::Result<()> {
    writeln!(writer, "count")?;
    for v in series.values() {
        writeln!(writer, "{v}")?;
    }
    Ok(())
}
