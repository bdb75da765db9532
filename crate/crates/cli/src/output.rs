//! Output files: CSV and pretty-printed JSON under the output directory.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone)]
pub struct OutputOptions {
    pub dir: PathBuf,
    /// Adds a `generated_at` field (Unix seconds) to every JSON summary.
    pub timestamp: bool,
}

impl OutputOptions {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn ensure_dir(&self) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.dir)?;
        Ok(())
    }

    pub fn create(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        self.ensure_dir()?;
        Ok(BufWriter::new(File::create(self.path(name))?))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut v = serde_json::to_value(value)?;
        if self.timestamp {
            if let Value::Object(map) = &mut v {
                let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
                map.insert("generated_at".into(), Value::from(secs));
            }
        }
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, &v)?;
        writeln!(w)?;
        w.flush()?;
        Ok(self.path(name))
    }
}

pub fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
