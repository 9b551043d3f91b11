//! Work-directory layout and report writing.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

pub const FINGERPRINT_DB: &str = "fingerprints.db";
pub const GROUPS: &str = "groups.csv";
pub const DISTINCT: &str = "distinct.csv";
pub const MANIFEST: &str = "manifest.json";
pub const IMPORT_ERRORS: &str = "import_errors.csv";
pub const REJECTED: &str = "rejected.csv";
pub const DUPLICATES: &str = "duplicates.txt";
pub const PAIRS: &str = "pairs.csv";
pub const COMPARE_SUMMARY: &str = "compare.json";
pub const CLUSTERS_CSV: &str = "clusters.csv";
pub const CLUSTERS_TXT: &str = "clusters.txt";
pub const SINGLETONS: &str = "singletons.csv";
pub const PARETO: &str = "pareto.csv";
pub const SUMMARY: &str = "summary.json";
pub const DAPP_PAIRS: &str = "dapp_pairs.csv";
pub const DAPP_CLUSTERS: &str = "dapp_clusters.csv";
pub const VOLUME: &str = "volume.txt";
pub const DAPP_SUMMARY: &str = "dapp.json";
pub const PROVENANCE_TXT: &str = "provenance.txt";
pub const PROVENANCE_JSON: &str = "provenance.json";

pub struct WorkDir {
    root: PathBuf,
    timestamp: bool,
}

impl WorkDir {
    pub fn create(root: &Path, timestamp: bool) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(WorkDir {
            root: root.to_path_buf(),
            timestamp,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn writer(&self, name: &str) -> Result<BufWriter<File>> {
        let path = self.path(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(BufWriter::new(file))
    }

    /// Plain-text report, with a generation-time comment line unless
    /// timestamps are disabled.
    pub fn write_text(&self, name: &str, body: &str) -> Result<()> {
        let mut w = self.writer(name)?;
        if self.timestamp {
            let now = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
            writeln!(w, "# generated {now}")?;
        }
        w.write_all(body.as_bytes())?;
        if !body.ends_with('\n') {
            w.write_all(b"\n")?;
        }
        w.flush()?;
        log::info!("wrote {}", self.path(name).display());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut w = self.writer(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        w.write_all(b"\n")?;
        w.flush()?;
        log::info!("wrote {}", self.path(name).display());
        Ok(())
    }

    /// CSV with a fixed header, written even when there are no rows.
    pub fn write_csv<R, I>(&self, name: &str, header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator,
        R::Item: AsRef<[u8]>,
    {
        let mut w = csv::Writer::from_writer(self.writer(name)?);
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
        log::info!("wrote {}", self.path(name).display());
        Ok(())
    }
}
