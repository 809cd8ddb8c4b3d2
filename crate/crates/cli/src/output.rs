use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::RunConfig;

/// Report files of one command, plus the run metadata written last.
pub struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

#[derive(Serialize)]
struct RunMetadata<'a> {
    command: &'a str,
    version: &'a str,
    seeds: Vec<u64>,
    outputs: &'a [String],
    config: &'a RunConfig,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: vec![],
        })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(BufWriter::new(f))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_writer(self.create(name)?);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Hands a writer to a library routine that emits its own format.
    pub fn with_writer(&mut self, name: &str, f: impl FnOnce(BufWriter<File>) -> dfcl::Result<()>) -> Result<()> {
        let w = self.create(name)?;
        f(w).with_context(|| format!("writing {name}"))
    }

    pub fn finish(mut self, command: &str, cfg: &RunConfig, seeds: Vec<u64>) -> Result<Vec<String>> {
        let mut outputs = self.written.clone();
        outputs.push("run.json".into());
        let meta = RunMetadata {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seeds,
            outputs: &outputs,
            config: cfg,
        };
        self.json("run.json", &meta)?;
        Ok(outputs)
    }
}

pub fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

pub fn num(x: f64) -> String {
    x.to_string()
}
