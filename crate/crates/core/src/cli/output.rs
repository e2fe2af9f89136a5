use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::CliError;

/// Writes files into one directory and remembers their names for the manifest.
pub struct OutDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root)
            .map_err(|e| CliError::data(format!("cannot create {}: {e}", root.display())))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn text(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.root.join(name);
        fs::write(&path, contents)
            .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::data(format!("cannot serialize {name}: {e}")))?;
        s.push('\n');
        self.text(name, &s)
    }

    /// Writes `manifest.json` listing every file written so far.
    pub fn finish<C: Serialize>(mut self, command: &str, config: &C) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct Manifest<'a, C> {
            tool: &'static str,
            version: &'static str,
            command: &'a str,
            config: &'a C,
            files: &'a [String],
        }
        let files = self.files.clone();
        self.json(
            "manifest.json",
            &Manifest {
                tool: env!("CARGO_PKG_NAME"),
                version: env!("CARGO_PKG_VERSION"),
                command,
                config,
                files: &files,
            },
        )
    }
}

/// Two or more columns of plot-ready CSV.
pub fn columns_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
