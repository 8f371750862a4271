//! File emission. CSV is the authoritative output; JSON and SVG are
//! written alongside when requested.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;

use crate::config::Format;
use crate::svg::Chart;
use crate::CliError;

/// A float with 17 significant digits; non-finite values become empty
/// cells.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

/// Error text made safe for a CSV cell.
pub fn cell_text(s: &str) -> String {
    s.replace([',', '\n', '\r'], ";")
}

pub struct Emitter {
    dir: PathBuf,
    formats: Vec<Format>,
    files: Vec<String>,
}

impl Emitter {
    pub fn new(dir: PathBuf, formats: Vec<Format>) -> Result<Self, CliError> {
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            formats,
            files: Vec::new(),
        })
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    fn create(&mut self, name: &str) -> Result<fs::File, CliError> {
        self.files.push(name.to_string());
        Ok(fs::File::create(self.dir.join(name))?)
    }

    pub fn csv(
        &mut self,
        name: &str,
        header: &[&str],
        rows: &[Vec<String>],
    ) -> Result<(), CliError> {
        if !self.wants(Format::Csv) {
            return Ok(());
        }
        let mut out = std::io::BufWriter::new(self.create(name)?);
        writeln!(out, "{}", header.join(","))?;
        for r in rows {
            writeln!(out, "{}", r.join(","))?;
        }
        out.flush()?;
        Ok(())
    }

    /// A CSV produced by a writer callback (used for trajectories).
    pub fn csv_with<F>(&mut self, name: &str, write: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
    {
        if !self.wants(Format::Csv) {
            return Ok(());
        }
        let mut out = std::io::BufWriter::new(self.create(name)?);
        write(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        if !self.wants(Format::Json) {
            return Ok(());
        }
        let mut out = std::io::BufWriter::new(self.create(name)?);
        serde_json::to_writer_pretty(&mut out, value)?;
        writeln!(out)?;
        out.flush()?;
        Ok(())
    }

    pub fn svg(&mut self, name: &str, chart: &Chart) -> Result<(), CliError> {
        if !self.wants(Format::Svg) {
            return Ok(());
        }
        let mut out = self.create(name)?;
        out.write_all(chart.render().as_bytes())?;
        Ok(())
    }

    /// Always written, whatever the requested formats.
    pub fn diagnostics<T: Serialize>(&mut self, value: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value)?;
        fs::write(self.dir.join("diagnostics.json"), format!("{text}\n"))?;
        Ok(())
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(-2.5), "-2.5000000000000000e0");
        assert_eq!(num(f64::NAN), "");
        assert_eq!("1.0000000000000001e-1".parse::<f64>().unwrap(), 0.1);
        assert_eq!(opt(None), "");
        assert_eq!(flag(true), "1");
        assert_eq!(cell_text("a,b\nc"), "a;b;c");
    }
}
