//! Run directory writer. Data files are byte-identical across reruns with the
//! same configuration; wall-clock data goes to `timestamp.json` only.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const SCHEMA: &str = "ifs-ergodic/1";
pub const MANIFEST: &str = "manifest.json";
pub const TIMESTAMP: &str = "timestamp.json";

pub struct RunDir {
    root: PathBuf,
    command: String,
    files: Vec<String>,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl RunDir {
    pub fn create(root: &Path, command: &str) -> CliResult<Self> {
        std::fs::create_dir_all(root).map_err(io(root))?;
        Ok(Self {
            root: root.to_path_buf(),
            command: command.to_string(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, text: &str) -> CliResult<()> {
        let path = self.root.join(name);
        std::fs::write(&path, text).map_err(io(&path))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Writes `body`'s fields under a `schema` and `command` header.
    pub fn json(&mut self, name: &str, body: impl Serialize) -> CliResult<()> {
        let mut object = Map::new();
        object.insert("schema".into(), json!(SCHEMA));
        object.insert("command".into(), json!(self.command));
        match serde_json::to_value(body).expect("report serializes") {
            Value::Object(fields) => object.extend(fields),
            other => {
                object.insert("value".into(), other);
            }
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(object)).expect("json");
        text.push('\n');
        self.write(name, &text)
    }

    /// Comma-separated rows with LF line endings. Cells must not contain commas.
    pub fn csv<R>(
        &mut self,
        name: &str,
        header: &[&str],
        rows: impl IntoIterator<Item = R>,
    ) -> CliResult<()>
    where
        R: IntoIterator<Item = String>,
    {
        let mut text = header.join(",");
        text.push('\n');
        for row in rows {
            let mut first = true;
            for cell in row {
                if !first {
                    text.push(',');
                }
                first = false;
                text.push_str(&cell);
            }
            text.push('\n');
        }
        self.write(name, &text)
    }

    /// Manifest (hash, seed, versions, file list) and the separate timestamp.
    pub fn finish(
        mut self,
        config: &RunConfig,
        system_json: &str,
        started: SystemTime,
    ) -> CliResult<PathBuf> {
        let system_sha256 = {
            use sha2::{Digest, Sha256};
            hex::encode(Sha256::digest(system_json.as_bytes()))
        };
        let files = self.files.clone();
        self.json(
            MANIFEST,
            json!({
                "config": config,
                "config_sha256": config.hash(),
                "system_sha256": system_sha256,
                "seed": config.seed,
                "versions": {
                    "ifs-ergodic": ifs_ergodic::VERSION,
                    "ifs-ergodic-cli": env!("CARGO_PKG_VERSION"),
                },
                "files": files,
            }),
        )?;
        let secs = |t: SystemTime| {
            t.duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs_f64())
                .unwrap_or(0.0)
        };
        self.json(
            TIMESTAMP,
            json!({
                "started_unix": secs(started),
                "finished_unix": secs(SystemTime::now()),
                "threads": rayon::current_num_threads(),
            }),
        )?;
        Ok(self.root)
    }
}

/// Shortest round-trip decimal with `.` as separator; `nan`/`inf` spelled out.
pub fn num(v: f64) -> String {
    let mut s = String::new();
    if v.is_nan() {
        s.push_str("nan");
    } else if v.is_infinite() {
        s.push_str(if v > 0.0 { "inf" } else { "-inf" });
    } else {
        write!(s, "{v}").expect("write to string");
    }
    s
}
