//! Artifacts with provenance headers.

use std::path::Path;

use serde::Serialize;

use crate::error::CliError;

pub const TOOLKIT: &str = concat!("sdlps ", env!("CARGO_PKG_VERSION"));

/// `# sdlps <version> config-sha256=<hex>`, the first line of every text artifact.
pub fn provenance_line(digest: &str) -> String {
    format!("# {TOOLKIT} config-sha256={digest}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    /// The artifact printed to stdout when no output directory is set.
    pub primary: bool,
    pub contents: String,
}

impl Artifact {
    pub fn new(name: impl Into<String>, primary: bool, contents: String) -> Self {
        Self {
            name: name.into(),
            primary,
            contents,
        }
    }
}

/// CSV of `rows` under the provenance line.
pub fn csv_table<T: Serialize>(digest: &str, rows: &[T]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let body = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    let mut out = provenance_line(digest);
    out.push('\n');
    out.push_str(std::str::from_utf8(&body).expect("csv writes utf-8"));
    Ok(out)
}

/// CSV with an explicit header for tables whose rows are plain tuples.
pub fn csv_with_header<T: Serialize>(digest: &str, header: &[&str], rows: &[T]) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    let body = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    let mut out = provenance_line(digest);
    out.push('\n');
    out.push_str(std::str::from_utf8(&body).expect("csv writes utf-8"));
    Ok(out)
}

/// Writes every artifact into `dir`, or the primary ones to stdout.
pub fn write_artifacts(artifacts: &[Artifact], dir: Option<&Path>) -> Result<(), CliError> {
    match dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)
                .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
            for a in artifacts {
                let path = dir.join(&a.name);
                std::fs::write(&path, &a.contents)
                    .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
                log::info!("wrote {}", path.display());
            }
        }
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            for a in artifacts {
                if a.primary {
                    out.write_all(a.contents.as_bytes())?;
                } else {
                    log::info!("{} not written (no output directory)", a.name);
                }
            }
            out.flush()?;
        }
    }
    Ok(())
}
