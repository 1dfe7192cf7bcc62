//! `manifest.txt` written into every run directory.
//!
//! Tool version, command, timestamps and outputs go in `#` lines; resolved
//! settings are plain `key=value` lines, so the file doubles as a config file
//! for re-running. Dataset manifests also list slice files one per line.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::Result;
use crate::io::{write_file, DATASET_MANIFEST};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone)]
pub struct RunManifest {
    pub command: String,
    pub settings: Vec<(String, String)>,
    pub outputs: Vec<String>,
    /// Listed as bare lines (dataset slices).
    pub files: Vec<String>,
    pub started_unix: f64,
    pub finished_unix: f64,
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

impl RunManifest {
    pub fn start(command: &str, settings: Vec<(String, String)>) -> Self {
        Self {
            command: command.to_string(),
            settings,
            outputs: Vec::new(),
            files: Vec::new(),
            started_unix: unix_now(),
            finished_unix: 0.0,
        }
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "# cdiffmr {TOOL_VERSION}\n# command={}\n# started_unix={:.3}\n# finished_unix={:.3}\n",
            self.command, self.started_unix, self.finished_unix
        );
        for o in &self.outputs {
            out.push_str(&format!("# output={o}\n"));
        }
        for (k, v) in &self.settings {
            out.push_str(&format!("{k}={v}\n"));
        }
        for f in &self.files {
            out.push_str(f);
            out.push('\n');
        }
        out
    }

    /// Stamps the finish time and writes `dir/manifest.txt`.
    pub fn finish(mut self, dir: &Path) -> Result<()> {
        self.finished_unix = unix_now();
        write_file(&dir.join(DATASET_MANIFEST), self.render().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::parse_config;
    use crate::io::manifest_entries;

    #[test]
    fn render_is_a_config_and_a_file_list() {
        let mut m = RunManifest::start("phantom", vec![("size".into(), "64".into()), ("seed".into(), "7".into())]);
        m.outputs.push("slice_0000.cim".into());
        m.files.push("slice_0000.cim".into());
        let text = m.render();
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.len(), 2);
        assert_eq!(cfg["size"], "64");
        assert_eq!(manifest_entries(&text), vec!["slice_0000.cim".to_string()]);
    }
}
