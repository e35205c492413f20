//! Output encodings.

use serde::Serialize;
use sirate::{Error, Result};

/// Version tag written into every JSON document.
pub const SPEC_VERSION: &str = "1.0";

/// Float with 12 significant digits, in the style of C's `%.12g`.
pub fn sig12(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.into();
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.11e}");
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..12).contains(&exp) {
        let mant = trim_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mant}e{sign}{:02}", exp.abs());
    }
    let decimals = (11 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(sig12).unwrap_or_default()
}

/// CSV document with a fixed header.
pub struct Csv {
    w: csv::Writer<Vec<u8>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Result<Self> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(io_err)?;
        Ok(Csv { w })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.w.write_record(fields).map_err(io_err)
    }

    pub fn finish(self) -> Result<Vec<u8>> {
        self.w
            .into_inner()
            .map_err(|e| Error::Numerical(e.to_string()))
    }
}

fn io_err(e: csv::Error) -> Error {
    Error::Numerical(format!("csv: {e}"))
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    spec_version: &'static str,
    command: &'a str,
    seed: u64,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON with the version, command name and seed up front.
pub fn json_report<T: Serialize>(command: &str, seed: u64, body: &T) -> Result<Vec<u8>> {
    let env = Envelope {
        spec_version: SPEC_VERSION,
        command,
        seed,
        body,
    };
    let mut out = serde_json::to_vec_pretty(&env).map_err(|e| Error::Numerical(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}
