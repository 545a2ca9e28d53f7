//! Text persistence for generator triples.
//!
//! The format is TOML with a fixed key order and every float written with
//! 17 significant digits, so serializing a parsed file reproduces it byte
//! for byte:
//!
//! ```text
//! version = 1
//! mode = "max-freq"
//! n = 3
//! k = 1
//! seed = 0
//! residual = 0.0000000000000000e0
//! e_hat = [0.0000000000000000e0, 0.0000000000000000e0, 1.0000000000000000e0]
//! J1 = [
//!   [0.0000000000000000e0, 0.0000000000000000e0, 0.0000000000000000e0],
//!   ...
//! ]
//! ```
//!
//! Loading checks structure only; numerical validation is left to
//! [`validate`](crate::generators::validate) so damaged triples can still be
//! inspected.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::generators::{GeneratorMode, GeneratorTriple};

pub const FORMAT_VERSION: i64 = 1;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    version: i64,
    mode: String,
    n: i64,
    k: i64,
    seed: i64,
    residual: f64,
    e_hat: Vec<f64>,
    #[serde(rename = "J1")]
    j1: Vec<Vec<f64>>,
    #[serde(rename = "J2")]
    j2: Vec<Vec<f64>>,
    #[serde(rename = "J3")]
    j3: Vec<Vec<f64>>,
}

fn float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn row(values: impl Iterator<Item = f64>) -> String {
    let items: Vec<String> = values.map(float).collect();
    format!("[{}]", items.join(", "))
}

pub fn to_string(g: &GeneratorTriple) -> Result<String> {
    let seed = i64::try_from(g.seed)
        .map_err(|_| Error::InvalidConfig(format!("seed {} does not fit the file format", g.seed)))?;
    let mut out = String::new();
    let _ = writeln!(out, "version = {FORMAT_VERSION}");
    let _ = writeln!(out, "mode = \"{}\"", g.mode);
    let _ = writeln!(out, "n = {}", g.n);
    let _ = writeln!(out, "k = {}", g.k);
    let _ = writeln!(out, "seed = {seed}");
    let _ = writeln!(out, "residual = {}", float(g.residual));
    let _ = writeln!(out, "e_hat = {}", row(g.e_hat.iter().copied()));
    for (i, j) in g.j.iter().enumerate() {
        let _ = writeln!(out, "J{} = [", i + 1);
        for r in 0..j.nrows() {
            let _ = writeln!(out, "  {},", row(j.row(r).iter().copied()));
        }
        let _ = writeln!(out, "]");
    }
    Ok(out)
}

fn matrix(name: &str, rows: Vec<Vec<f64>>, n: usize) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse(format!("{name} must be {n}×{n}")));
    }
    Ok(DMatrix::from_fn(n, n, |r, c| rows[r][c]))
}

pub fn from_str(text: &str) -> Result<GeneratorTriple> {
    let raw: RawFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if raw.version != FORMAT_VERSION {
        return Err(Error::Parse(format!("unsupported version {}", raw.version)));
    }
    let mode: GeneratorMode = raw.mode.parse()?;
    let n = usize::try_from(raw.n).map_err(|_| Error::Parse(format!("bad n {}", raw.n)))?;
    let k = usize::try_from(raw.k).map_err(|_| Error::Parse(format!("bad k {}", raw.k)))?;
    let seed = u64::try_from(raw.seed).map_err(|_| Error::Parse(format!("bad seed {}", raw.seed)))?;
    if raw.e_hat.len() != n {
        return Err(Error::Parse(format!("e_hat has {} entries, expected {n}", raw.e_hat.len())));
    }
    Ok(GeneratorTriple {
        n,
        k,
        mode,
        j: [matrix("J1", raw.j1, n)?, matrix("J2", raw.j2, n)?, matrix("J3", raw.j3, n)?],
        e_hat: DVector::from_vec(raw.e_hat),
        residual: raw.residual,
        seed,
    })
}

pub fn load(path: &Path) -> Result<GeneratorTriple> {
    from_str(&fs::read_to_string(path)?)
}

pub fn save(path: &Path, g: &GeneratorTriple) -> Result<()> {
    write_atomic(path, to_string(g)?.as_bytes())
}

/// Write to a sibling temporary file, then rename over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| Error::InvalidConfig(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}
