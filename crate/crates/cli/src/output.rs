use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::settings::CliResult;

pub fn out_path(dir: &Path, name: &str) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir)?;
    Ok(dir.join(name))
}

/// CSV file with `#! key=value` header lines before the column header.
pub struct CsvOut {
    writer: csv::Writer<BufWriter<File>>,
}

impl CsvOut {
    pub fn create(path: &Path, header: &[(String, String)], columns: &[&str]) -> CliResult<Self> {
        let mut file = BufWriter::new(File::create(path)?);
        for (k, v) in header {
            writeln!(file, "#! {k}={v}")?;
        }
        let mut writer = csv::WriterBuilder::new().from_writer(file);
        writer.write_record(columns)?;
        Ok(CsvOut { writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> CliResult<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.writer.flush()?;
        Ok(())
    }
}

pub fn header_value(header: &[(String, String)]) -> Value {
    Value::Object(
        header
            .iter()
            .map(|(k, v)| (k.clone(), Value::String(v.clone())))
            .collect(),
    )
}

/// Pretty JSON object with a `header` field followed by `body`'s fields.
pub fn write_json<T: Serialize>(
    path: &Path,
    header: &[(String, String)],
    body: &T,
) -> CliResult<()> {
    let mut obj = Map::new();
    obj.insert("header".into(), header_value(header));
    match serde_json::to_value(body)? {
        Value::Object(m) => obj.extend(m),
        other => {
            obj.insert("data".into(), other);
        }
    }
    let mut file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut file, &Value::Object(obj))?;
    writeln!(file)?;
    file.flush()?;
    Ok(())
}

pub fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}
