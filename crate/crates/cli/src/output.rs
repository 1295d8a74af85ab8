//! CSV emission. Every file is written to a temporary sibling and renamed
//! into place, so readers never see a partial file.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Shortest decimal text that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else if v == 0.0 || (1e-4..1e16).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Output directory: `--out`, then `EPIWAVE_OUT`, then `out.dir`, then `out`.
pub fn resolve_out_dir(flag: Option<&Path>, config: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(env) = std::env::var_os("EPIWAVE_OUT").filter(|v| !v.is_empty()) {
        return PathBuf::from(env);
    }
    config.map_or_else(|| PathBuf::from("out"), Path::to_path_buf)
}

pub struct OutDir {
    pub path: PathBuf,
}

impl OutDir {
    pub fn create(path: PathBuf) -> Result<Self, CliError> {
        std::fs::create_dir_all(&path)
            .map_err(|e| CliError::new(1, format!("cannot create {}: {e}", path.display())))?;
        Ok(Self { path })
    }

    /// Writes `header` and `rows`, then `trailer` lines verbatim (each
    /// should start with `#`).
    pub fn write_csv<R, I>(&self, name: &str, header: &[&str], rows: I, trailer: &[String]) -> Result<PathBuf, CliError>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator,
        R::Item: AsRef<[u8]>,
    {
        let target = self.path.join(name);
        let io_err = |e: &dyn std::fmt::Display| CliError::new(1, format!("writing {}: {e}", target.display()));
        let tmp = tempfile::NamedTempFile::new_in(&self.path).map_err(|e| io_err(&e))?;
        let mut w = csv::WriterBuilder::new().from_writer(std::io::BufWriter::new(tmp));
        w.write_record(header).map_err(|e| io_err(&e))?;
        for row in rows {
            w.write_record(row).map_err(|e| io_err(&e))?;
        }
        let mut buf = w.into_inner().map_err(|e| io_err(&e))?;
        for line in trailer {
            writeln!(buf, "{line}").map_err(|e| io_err(&e))?;
        }
        let tmp = buf.into_inner().map_err(|e| io_err(&e))?;
        tmp.persist(&target).map_err(|e| io_err(&e))?;
        Ok(target)
    }

    /// Two-column `key,value` file.
    pub fn write_pairs(&self, name: &str, pairs: &[(String, String)]) -> Result<PathBuf, CliError> {
        self.write_csv(name, &["key", "value"], pairs.iter().map(|(k, v)| [k.as_str(), v.as_str()]), &[])
    }
}

/// Snapshot file name for time `t`, e.g. `snap_12.5.csv`.
pub fn snapshot_name(t: f64) -> String {
    format!("snap_{}.csv", num(t))
}
