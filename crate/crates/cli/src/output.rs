//! Report writers. Every float is printed with 17 significant digits so that
//! it parses back to the same value.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::Formatter;

pub fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

/// Compact JSON with floats in 17-digit scientific notation.
struct FullPrecision;

impl Formatter for FullPrecision {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(float(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

pub fn json<T: Serialize>(out: &mut impl Write, value: &T) -> io::Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(&mut *out, FullPrecision);
    value.serialize(&mut ser).map_err(io::Error::other)?;
    writeln!(out)
}

pub fn csv<R, I>(out: &mut impl Write, header: &[&str], rows: I) -> io::Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = ::csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()
}

/// Two-column `key,value` table.
pub fn csv_pairs(out: &mut impl Write, pairs: &[(&str, String)]) -> io::Result<()> {
    csv(out, &["key", "value"], pairs.iter().map(|(k, v)| [k.to_string(), v.clone()]))
}

pub fn text_pairs(out: &mut impl Write, pairs: &[(&str, String)]) -> io::Result<()> {
    let width = pairs.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    for (k, v) in pairs {
        writeln!(out, "{k:<width$}  {v}")?;
    }
    Ok(())
}

pub fn float_list(v: &[f64]) -> String {
    v.iter().map(|&x| float(x)).collect::<Vec<_>>().join(" ")
}
