//! File emission. CSV files use LF line endings and always carry a header.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use cbsel::montecarlo::write_rows_csv;
use cbsel::units::{linear_to_db, rad_to_deg};
use cbsel::{EstimateRow, SweepAxis};
use serde::Serialize;

use crate::Failure;

pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(root)
            .with_context(|| format!("creating {}", root.display()))
            .map_err(Failure::Runtime)?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn create_file(&mut self, name: &str) -> Result<fs::File, Failure> {
        let path = self.root.join(name);
        let file = fs::File::create(&path)
            .with_context(|| format!("creating {}", path.display()))
            .map_err(Failure::Runtime)?;
        self.written.push(path);
        Ok(file)
    }

    pub fn text(&mut self, name: &str, text: &str) -> Result<(), Failure> {
        use std::io::Write;
        let mut f = self.create_file(name)?;
        f.write_all(text.as_bytes())
            .with_context(|| format!("writing {name}"))
            .map_err(Failure::Runtime)
    }

    pub fn json<V: Serialize>(&mut self, name: &str, value: &V) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value)
            .with_context(|| format!("serializing {name}"))
            .map_err(Failure::Runtime)?;
        text.push('\n');
        self.text(name, &text)
    }

    /// Columns `angle_deg,power_db`.
    pub fn curve(&mut self, name: &str, angles: &[f64], power: &[f64]) -> Result<(), Failure> {
        let file = self.create_file(name)?;
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(file);
        let result = (|| -> csv::Result<()> {
            w.write_record(["angle_deg", "power_db"])?;
            for (&a, &p) in angles.iter().zip(power) {
                w.write_record([rad_to_deg(a).to_string(), linear_to_db(p).to_string()])?;
            }
            w.flush()?;
            Ok(())
        })();
        result
            .with_context(|| format!("writing {name}"))
            .map_err(Failure::Runtime)
    }

    pub fn rows(&mut self, name: &str, axis: SweepAxis, rows: &[EstimateRow<f64>]) -> Result<(), Failure> {
        let file = self.create_file(name)?;
        write_rows_csv(axis, rows, file)
            .with_context(|| format!("writing {name}"))
            .map_err(Failure::Runtime)
    }

    pub fn trial_log(&mut self, name: &str, log: &[cbsel::TrialRecord<f64>]) -> Result<(), Failure> {
        let file = self.create_file(name)?;
        cbsel::selection::write_trial_log_csv(log, file)
            .with_context(|| format!("writing {name}"))
            .map_err(Failure::Runtime)
    }
}

pub fn to_db(values: &[f64]) -> Vec<f64> {
    values.iter().map(|&v| linear_to_db(v)).collect()
}

pub fn to_deg(values: &[f64]) -> Vec<f64> {
    values.iter().map(|&v| rad_to_deg(v)).collect()
}
