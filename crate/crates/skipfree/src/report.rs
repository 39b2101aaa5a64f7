//! CSV and JSON output helpers.
//!
//! Floats print with 17 significant digits and a '.' decimal separator
//! regardless of locale, so repeated runs diff bit-exactly.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::Result;

/// 17 significant digits; round-trips any f64 exactly.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{x:.16e}")
    }
}

/// Line-buffered CSV sink targeting a file or stdout.
pub struct CsvWriter {
    out: Box<dyn Write>,
}

impl CsvWriter {
    pub fn create(path: Option<&Path>) -> Result<Self> {
        let out: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout())),
        };
        Ok(CsvWriter { out })
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) -> Result<()> {
        let line = fields
            .iter()
            .map(|f| f.as_ref())
            .collect::<Vec<_>>()
            .join(",");
        writeln!(self.out, "{line}")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Write the `{pass, details}` summary JSON to a file, or pretty-print it
/// to stdout when no path is given.
pub fn write_json_summary(path: Option<&Path>, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("summary serializes");
    match path {
        Some(p) => {
            std::fs::write(p, text + "\n")?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_roundtrips() {
        for &x in &[0.0, 1.0, -1.5, std::f64::consts::PI, 1e-300, 2.2250738585072014e-308, 1.7e308] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, x, "{s}");
        }
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
    }
}
