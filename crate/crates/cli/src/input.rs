//! Matrix and region arguments: a path to a JSON file or inline text.

use std::path::Path;

use densilab::{parse_inline, Error, MatrixJson, RegionDescriptor};
use nalgebra::DMatrix;

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))
}

/// `{"dim": d, "rows": [...]}` from a file, or the inline `"a,b;c,d"` form.
pub fn matrix(arg: &str) -> Result<DMatrix<f64>, Error> {
    let path = Path::new(arg);
    if path.is_file() {
        let m: MatrixJson = serde_json::from_str(&read(path)?)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        return m.to_dmatrix();
    }
    if arg.trim_start().starts_with('{') {
        let m: MatrixJson = serde_json::from_str(arg).map_err(|e| Error::Parse(e.to_string()))?;
        return m.to_dmatrix();
    }
    parse_inline(arg).map_err(|e| match e {
        Error::Parse(m) if !arg.contains([',', ';']) => {
            Error::Parse(format!("{arg:?} is neither a file nor an inline matrix ({m})"))
        }
        e => e,
    })
}

/// A region descriptor from a JSON file or inline JSON.
pub fn region(arg: &str) -> Result<RegionDescriptor, Error> {
    let path = Path::new(arg);
    let text = if path.is_file() { read(path)? } else { arg.to_string() };
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("region descriptor: {e}")))
}
