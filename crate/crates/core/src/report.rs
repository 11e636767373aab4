//! CSV and JSON persistence for experiment reports.
//!
//! CSV files start with `# key=value` metadata lines followed by a header row;
//! floats are written with 17 significant digits so every value round-trips.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// A row of a report table.
pub trait CsvRow: Serialize + DeserializeOwned {
    const HEADERS: &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

/// Metadata plus a table of rows.
pub trait Report: Sized + Serialize + DeserializeOwned {
    type Row: CsvRow;

    fn metadata(&self) -> Vec<(&'static str, String)>;
    fn rows(&self) -> &[Self::Row];
    fn from_parts(meta: &Metadata, rows: Vec<Self::Row>) -> Result<Self>;

    fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for (k, v) in self.metadata() {
            if v.contains('\n') {
                return Err(Error::Validation(format!("metadata {k} spans lines")));
            }
            writeln!(out, "# {k}={v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::Row::HEADERS)?;
        for row in self.rows() {
            w.write_record(row.fields())?;
        }
        w.flush()?;
        Ok(())
    }

    fn read_csv<R: Read>(mut input: R) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        let mut meta = BTreeMap::new();
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            let body = line.trim_start_matches('#').trim_start();
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| Error::Validation(format!("bad metadata line {line:?}")))?;
            meta.insert(k.to_string(), v.to_string());
        }
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let rows = rdr.deserialize().collect::<std::result::Result<Vec<Self::Row>, _>>()?;
        Self::from_parts(&Metadata(meta), rows)
    }

    fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    fn read_json<R: Read>(input: R) -> Result<Self> {
        Ok(serde_json::from_reader(input)?)
    }

    fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Internal(e.to_string()))
    }

    fn to_json_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_json(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Internal(e.to_string()))
    }
}

/// Parsed `# key=value` lines.
#[derive(Debug, Clone, Default)]
pub struct Metadata(BTreeMap<String, String>);

impl Metadata {
    pub fn get(&self, key: &str) -> Result<&str> {
        self.0
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Validation(format!("missing metadata key {key}")))
    }

    pub fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)?
            .parse()
            .map_err(|e| Error::Validation(format!("metadata {key}: {e}")))
    }
}
