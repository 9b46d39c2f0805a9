//! Writers for the result files. Floats are printed with 17 significant digits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use arrival_ic::numeric::fmt_g17;
use serde::Serialize;

use crate::error::CliError;

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: PathBuf) -> Result<Self, CliError> {
        std::fs::create_dir_all(&root)?;
        Ok(Self { root })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn csv(&self, name: &str) -> Result<Table, CliError> {
        Ok(Table { w: csv::Writer::from_path(self.path(name))? })
    }

    pub fn json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let mut w = BufWriter::new(File::create(self.path(name))?);
        serde_json::to_writer_pretty(&mut w, value)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    pub fn text(&self, name: &str, body: &str) -> Result<(), CliError> {
        std::fs::write(self.path(name), body)?;
        Ok(())
    }

    pub fn root(&self) -> &Path {
        &self.root
    }
}

pub struct Table {
    w: csv::Writer<File>,
}

impl Table {
    pub fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.w.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.w.flush()?;
        Ok(())
    }
}

pub fn num(x: f64) -> String {
    fmt_g17(x)
}

pub fn opt(x: Option<f64>) -> String {
    x.map(fmt_g17).unwrap_or_default()
}
