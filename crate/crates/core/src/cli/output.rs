use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

pub const TOOL: &str = "moral-sentiment";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_hash: String,
}

/// Writes result files into the output directory, each stamped with the run
/// metadata.
#[derive(Debug, Clone)]
pub struct Output {
    pub dir: PathBuf,
    pub meta: Meta,
}

impl Output {
    pub fn new(dir: &Path, command: &str, config_hash: String) -> Self {
        Output {
            dir: dir.to_path_buf(),
            meta: Meta {
                tool: TOOL,
                version: VERSION,
                command: command.to_string(),
                config_hash,
            },
        }
    }

    /// `value` serialised as a JSON object with a leading `meta` entry.
    pub fn json_string<T: Serialize>(&self, value: &T) -> Result<String> {
        let mut map = serde_json::Map::new();
        map.insert("meta".into(), serde_json::to_value(&self.meta)?);
        match serde_json::to_value(value)? {
            serde_json::Value::Object(obj) => map.extend(obj),
            other => {
                map.insert("result".into(), other);
            }
        }
        let mut s = serde_json::to_string_pretty(&serde_json::Value::Object(map))?;
        s.push('\n');
        Ok(s)
    }

    fn write(&self, name: &str, body: &[u8]) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let path = self.dir.join(name);
        let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        f.write_all(body).map_err(|e| Error::io(&path, e))?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let s = self.json_string(value)?;
        self.write(name, s.as_bytes())
    }

    /// Comment line opening every CSV output.
    pub fn csv_comment(&self) -> String {
        format!(
            "# {} {} command={} config_hash={}\n",
            self.meta.tool, self.meta.version, self.meta.command, self.meta.config_hash
        )
    }

    /// Writes `body` (header included) after the metadata comment line.
    pub fn write_csv(&self, name: &str, body: &str) -> Result<PathBuf> {
        let mut s = self.csv_comment();
        s.push_str(body);
        self.write(name, s.as_bytes())
    }
}
