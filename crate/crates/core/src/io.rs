//! Instance files and command-line overrides.
//!
//! Instances are TOML documents. Matrices are flat row-major lists, so a
//! binary source with Hamming distortions reads
//!
//! ```toml
//! x_size = 2
//! y_size = 2
//! xhat_size = 2
//! pxy = [0.375, 0.125, 0.125, 0.375]
//! dd = [0, 1, 1, 0]
//! de = [0, 1, 1, 0]
//! ```
//!
//! Extended instances replace `xhat_size`, `dd` and `de` by `xhat_d_size`,
//! `xhat_e_size`, `k`, `dk` (indexed `[k][x][xhat_d][xhat_e]`) and `targets`.
//! An auxiliary-`U` witness lives in a `[witness]` table.

use serde::de::DeserializeOwned;
use serde::Deserialize;
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::extended::ExtChannel;
use crate::model::{DistortionSpec, ExtendedInstance, JointSource};

/// Parses a TOML document into a table.
pub fn parse_document(text: &str) -> Result<Table> {
    text.parse::<Table>()
        .map_err(|e| Error::Parse(e.message().to_string()))
}

/// Deserializes a table (or part of one) into `T`, reporting failures as
/// parse errors.
pub fn from_table<T: DeserializeOwned>(table: &Table) -> Result<T> {
    T::deserialize(Value::Table(table.clone())).map_err(|e| Error::Parse(e.message().to_string()))
}

fn reshape(flat: &[f64], rows: usize, cols: usize, what: &str) -> Result<Vec<Vec<f64>>> {
    if rows == 0 || cols == 0 || rows.checked_mul(cols) != Some(flat.len()) {
        return Err(Error::Dimension(format!(
            "{what} has {} entries, expected {rows} x {cols}",
            flat.len()
        )));
    }
    Ok(flat.chunks(cols).map(<[f64]>::to_vec).collect())
}

fn reshape_idx(flat: &[usize], rows: usize, cols: usize, what: &str) -> Result<Vec<Vec<usize>>> {
    if rows == 0 || cols == 0 || rows.checked_mul(cols) != Some(flat.len()) {
        return Err(Error::Dimension(format!(
            "{what} has {} entries, expected {rows} x {cols}",
            flat.len()
        )));
    }
    Ok(flat.chunks(cols).map(<[usize]>::to_vec).collect())
}

#[derive(Deserialize)]
struct RawSource {
    x_size: usize,
    y_size: usize,
    pxy: Vec<f64>,
}

impl RawSource {
    fn build(&self) -> Result<JointSource> {
        let src = JointSource {
            x_size: self.x_size,
            y_size: self.y_size,
            pxy: reshape(&self.pxy, self.x_size, self.y_size, "pxy")?,
        };
        src.ensure_valid()?;
        Ok(src)
    }
}

#[derive(Deserialize)]
struct RawInstance {
    #[serde(flatten)]
    source: RawSource,
    xhat_size: usize,
    dd: Vec<f64>,
    de: Vec<f64>,
}

/// Reads a source and distortion pair from a parsed document. Keys other
/// than the instance fields are ignored.
pub fn instance_from_table(table: &Table) -> Result<(JointSource, DistortionSpec)> {
    let raw: RawInstance = from_table(table)?;
    let src = raw.source.build()?;
    let n = raw.xhat_size;
    let spec = DistortionSpec::new(
        reshape(&raw.dd, src.x_size, n, "dd")?,
        reshape(&raw.de, n, n, "de")?,
    )?;
    spec.check_source(&src)?;
    Ok((src, spec))
}

pub fn parse_instance(text: &str) -> Result<(JointSource, DistortionSpec)> {
    instance_from_table(&parse_document(text)?)
}

#[derive(Deserialize)]
struct RawDecoderInstance {
    #[serde(flatten)]
    source: RawSource,
    xhat_size: usize,
    dd: Vec<f64>,
}

/// Source and decoder distortion table only, for the baselines; `de` may be
/// absent.
pub fn decoder_instance_from_table(table: &Table) -> Result<(JointSource, Vec<Vec<f64>>)> {
    let raw: RawDecoderInstance = from_table(table)?;
    let src = raw.source.build()?;
    let dd = reshape(&raw.dd, src.x_size, raw.xhat_size, "dd")?;
    if dd.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Domain(
            "distortions must be finite and nonnegative".into(),
        ));
    }
    Ok((src, dd))
}

#[derive(Deserialize)]
struct RawExtended {
    #[serde(flatten)]
    source: RawSource,
    xhat_d_size: usize,
    xhat_e_size: usize,
    k: usize,
    dk: Vec<f64>,
    targets: Vec<f64>,
}

pub fn extended_from_table(table: &Table) -> Result<(JointSource, ExtendedInstance)> {
    let raw: RawExtended = from_table(table)?;
    let src = raw.source.build()?;
    let (nx, nd, ne, k) = (src.x_size, raw.xhat_d_size, raw.xhat_e_size, raw.k);
    let block = nx
        .checked_mul(nd)
        .and_then(|v| v.checked_mul(ne))
        .unwrap_or(0);
    if k == 0 || block == 0 || k.checked_mul(block) != Some(raw.dk.len()) {
        return Err(Error::Dimension(format!(
            "dk has {} entries, expected {k} x {nx} x {nd} x {ne}",
            raw.dk.len()
        )));
    }
    if raw.targets.len() != k {
        return Err(Error::Dimension(format!(
            "{} targets given for {k} constraints",
            raw.targets.len()
        )));
    }
    let dk = raw
        .dk
        .chunks(block)
        .map(|t| {
            t.chunks(nd * ne)
                .map(|r| r.chunks(ne).map(<[f64]>::to_vec).collect())
                .collect()
        })
        .collect();
    let ext = ExtendedInstance {
        xhat_d_size: nd,
        xhat_e_size: ne,
        k,
        dk,
        targets: raw.targets,
    };
    ext.validate(nx)?;
    Ok((src, ext))
}

pub fn parse_extended_instance(text: &str) -> Result<(JointSource, ExtendedInstance)> {
    extended_from_table(&parse_document(text)?)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWitness {
    z_size: usize,
    u_size: usize,
    pz_given_x: Vec<f64>,
    pu_given_xz: Vec<f64>,
    phi: Vec<usize>,
    psi: Vec<usize>,
}

/// Reads the `[witness]` table of an extended instance document.
pub fn witness_from_table(
    table: &Table,
    src: &JointSource,
    ext: &ExtendedInstance,
) -> Result<ExtChannel> {
    let w = table
        .get("witness")
        .and_then(Value::as_table)
        .ok_or_else(|| Error::Parse("missing [witness] table".into()))?;
    let raw: RawWitness = from_table(w)?;
    let (nx, nz, nu) = (src.x_size, raw.z_size, raw.u_size);
    let cells = nx
        .checked_mul(nz)
        .ok_or_else(|| Error::Dimension("witness is too large".into()))?;
    let pu = reshape(&raw.pu_given_xz, cells, nu, "pu_given_xz")?;
    let psi = reshape_idx(&raw.psi, cells, nu, "psi")?;
    let ch = ExtChannel {
        z_size: nz,
        u_size: nu,
        pz_given_x: reshape(&raw.pz_given_x, nx, nz, "pz_given_x")?,
        pu_given_xz: pu.chunks(nz).map(<[Vec<f64>]>::to_vec).collect(),
        phi: reshape_idx(&raw.phi, src.y_size, nz, "phi")?,
        psi: psi.chunks(nz).map(<[Vec<usize>]>::to_vec).collect(),
    };
    ch.validate(src, ext)?;
    Ok(ch)
}

/// Splits `KEY=VALUE`. The value is read as a TOML value when it parses as
/// one and kept as a string otherwise; dotted keys address nested tables.
pub fn parse_override(s: &str) -> Result<(Vec<String>, Value)> {
    let (key, raw) = s
        .split_once('=')
        .ok_or_else(|| Error::Parse(format!("override `{s}` is not KEY=VALUE")))?;
    let path: Vec<String> = key
        .trim()
        .split('.')
        .map(|p| p.trim().to_string())
        .collect();
    let valid = |p: &String| {
        !p.is_empty()
            && p.chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
    };
    if !path.iter().all(valid) {
        return Err(Error::Parse(format!("bad override key `{key}`")));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    Ok((path, value))
}

/// Writes `value` at `path`, creating tables on the way.
pub fn apply_override(table: &mut Table, path: &[String], value: Value) -> Result<()> {
    let (last, parents) = path
        .split_last()
        .ok_or_else(|| Error::Parse("empty override key".into()))?;
    let mut cur = table;
    for p in parents {
        let entry = cur
            .entry(p.clone())
            .or_insert_with(|| Value::Table(Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Parse(format!("`{p}` is not a table")))?;
    }
    cur.insert(last.clone(), value);
    Ok(())
}

/// A list of values, written either as a TOML array or as
/// `"start:stop:count"` (inclusive, evenly spaced).
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Spec(String),
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>> {
        match self {
            Grid::List(v) => Ok(v.clone()),
            Grid::Spec(s) => parse_grid(s),
        }
    }
}

pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let bad = || Error::Parse(format!("grid `{s}` is not start:stop:count"));
    let [a, b, n] = parts[..] else {
        return Err(bad());
    };
    let a: f64 = a.parse().map_err(|_| bad())?;
    let b: f64 = b.parse().map_err(|_| bad())?;
    let n: usize = n.parse().map_err(|_| bad())?;
    if !a.is_finite() || !b.is_finite() || n == 0 {
        return Err(bad());
    }
    if n > 1_000_000 {
        return Err(Error::ResourceCap(format!("grid of {n} points")));
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    let step = (b - a) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| if i == n - 1 { b } else { a + step * i as f64 })
        .collect())
}
