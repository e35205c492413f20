//! Finite-alphabet instances: joint sources, distortion tables, test channels
//! and reconstruction rules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalization tolerance applied when a law is constructed.
pub const CONSTRUCTION_TOL: f64 = 1e-12;
/// Normalization tolerance for laws produced by arithmetic.
pub const ARITHMETIC_TOL: f64 = 1e-10;

/// Joint law of the source `X` and the side information `Y`.
///
/// `pxy[x][y]` is the probability of the pair `(x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSource {
    pub x_size: usize,
    pub y_size: usize,
    pub pxy: Vec<Vec<f64>>,
}

/// One problem found by [`validate_source`].
#[derive(Debug, Clone, PartialEq)]
pub enum SourceViolation {
    Shape(String),
    NegativeEntry { x: usize, y: usize, value: f64 },
    NonFinite { x: usize, y: usize },
    Mass(f64),
    ZeroMassSymbol(usize),
}

impl SourceViolation {
    /// Whether the violation makes the law unusable. Zero-mass source symbols
    /// are only reported.
    pub fn is_fatal(&self) -> bool {
        !matches!(self, SourceViolation::ZeroMassSymbol(_))
    }
}

impl std::fmt::Display for SourceViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SourceViolation::Shape(s) => write!(f, "shape: {s}"),
            SourceViolation::NegativeEntry { x, y, value } => {
                write!(f, "negative entry {value} at ({x}, {y})")
            }
            SourceViolation::NonFinite { x, y } => write!(f, "non-finite entry at ({x}, {y})"),
            SourceViolation::Mass(m) => write!(f, "mass {m} != 1"),
            SourceViolation::ZeroMassSymbol(x) => write!(f, "source symbol {x} has zero mass"),
        }
    }
}

/// Checks a joint law and lists everything wrong with it.
pub fn validate_source(src: &JointSource) -> Vec<SourceViolation> {
    let mut out = Vec::new();
    if src.x_size == 0 || src.y_size == 0 {
        out.push(SourceViolation::Shape(
            "alphabet sizes must be positive".into(),
        ));
        return out;
    }
    if src.pxy.len() != src.x_size || src.pxy.iter().any(|r| r.len() != src.y_size) {
        out.push(SourceViolation::Shape(format!(
            "pxy must be {}x{}",
            src.x_size, src.y_size
        )));
        return out;
    }
    let mut total = 0.0;
    for (x, row) in src.pxy.iter().enumerate() {
        for (y, &p) in row.iter().enumerate() {
            if !p.is_finite() {
                out.push(SourceViolation::NonFinite { x, y });
            } else if p < 0.0 {
                out.push(SourceViolation::NegativeEntry { x, y, value: p });
            }
            total += p;
        }
    }
    if total.is_finite() && (total - 1.0).abs() > CONSTRUCTION_TOL {
        out.push(SourceViolation::Mass(total));
    }
    for (x, row) in src.pxy.iter().enumerate() {
        if row.iter().all(|&p| p == 0.0) {
            out.push(SourceViolation::ZeroMassSymbol(x));
        }
    }
    out
}

impl JointSource {
    /// Builds a source and rejects it if [`validate_source`] finds a fatal
    /// violation.
    pub fn new(pxy: Vec<Vec<f64>>) -> Result<Self> {
        let src = JointSource {
            x_size: pxy.len(),
            y_size: pxy.first().map_or(0, Vec::len),
            pxy,
        };
        src.ensure_valid()?;
        Ok(src)
    }

    /// Builds a source from a row-major list.
    pub fn from_row_major(x_size: usize, y_size: usize, flat: &[f64]) -> Result<Self> {
        if flat.len() != x_size * y_size {
            return Err(Error::Dimension(format!(
                "pxy has {} entries, expected {}",
                flat.len(),
                x_size * y_size
            )));
        }
        if x_size == 0 || y_size == 0 {
            return Err(Error::Domain("alphabet sizes must be positive".into()));
        }
        Self::new(flat.chunks(y_size).map(<[f64]>::to_vec).collect())
    }

    /// Uniform binary `X` observed through a binary symmetric channel.
    pub fn doubly_symmetric_binary(crossover: f64) -> Self {
        let a = 0.5 * (1.0 - crossover);
        let b = 0.5 * crossover;
        JointSource {
            x_size: 2,
            y_size: 2,
            pxy: vec![vec![a, b], vec![b, a]],
        }
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let fatal: Vec<String> = validate_source(self)
            .into_iter()
            .filter(SourceViolation::is_fatal)
            .map(|v| v.to_string())
            .collect();
        if fatal.is_empty() {
            Ok(())
        } else {
            Err(Error::Domain(fatal.join("; ")))
        }
    }

    pub fn px(&self) -> Vec<f64> {
        self.pxy.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn py(&self) -> Vec<f64> {
        (0..self.y_size)
            .map(|y| self.pxy.iter().map(|r| r[y]).sum())
            .collect()
    }

    /// `P(y | x)`. Rows of zero-mass source symbols are uniform.
    pub fn py_given_x(&self) -> Vec<Vec<f64>> {
        self.pxy
            .iter()
            .map(|row| {
                let m: f64 = row.iter().sum();
                if m > 0.0 {
                    row.iter().map(|p| p / m).collect()
                } else {
                    vec![1.0 / self.y_size as f64; self.y_size]
                }
            })
            .collect()
    }
}

/// `H(X|Y)` in bits.
pub fn conditional_entropy_x_given_y(src: &JointSource) -> Result<f64> {
    src.ensure_valid()?;
    let py = src.py();
    let mut h = 0.0;
    for row in &src.pxy {
        for (y, &p) in row.iter().enumerate() {
            if p > 0.0 {
                h += p * (py[y] / p).log2();
            }
        }
    }
    Ok(h.max(0.0))
}

/// Decoder and encoder distortion tables.
///
/// `dd[x][xhat]` scores the decoder's reconstruction against the source and
/// `de[xhat_d][xhat_e]` scores the encoder's estimate against the decoder's
/// reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionSpec {
    pub xhat_size: usize,
    pub dd: Vec<Vec<f64>>,
    pub de: Vec<Vec<f64>>,
}

impl DistortionSpec {
    pub fn new(dd: Vec<Vec<f64>>, de: Vec<Vec<f64>>) -> Result<Self> {
        let xhat_size = de.len();
        let spec = DistortionSpec { xhat_size, dd, de };
        spec.validate()?;
        Ok(spec)
    }

    /// Hamming distortion for both tables on an alphabet of size `n`.
    pub fn hamming(n: usize) -> Self {
        let h = hamming_table(n, n);
        DistortionSpec {
            xhat_size: n,
            dd: h.clone(),
            de: h,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.xhat_size == 0 {
            return Err(Error::Domain("reconstruction alphabet is empty".into()));
        }
        if self.dd.iter().any(|r| r.len() != self.xhat_size) {
            return Err(Error::Dimension(format!(
                "dd rows must have {} columns",
                self.xhat_size
            )));
        }
        if self.de.len() != self.xhat_size || self.de.iter().any(|r| r.len() != self.xhat_size) {
            return Err(Error::Dimension(format!(
                "de must be {0}x{0}",
                self.xhat_size
            )));
        }
        for v in self.dd.iter().chain(self.de.iter()).flatten() {
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::Domain(format!(
                    "distortion entries must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn check_source(&self, src: &JointSource) -> Result<()> {
        if self.dd.len() != src.x_size {
            return Err(Error::Dimension(format!(
                "dd has {} rows but |X| = {}",
                self.dd.len(),
                src.x_size
            )));
        }
        Ok(())
    }
}

/// `d(a, b) = 1{a != b}` as an `rows x cols` table.
pub fn hamming_table(rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|a| (0..cols).map(|b| if a == b { 0.0 } else { 1.0 }).collect())
        .collect()
}

/// True iff every source symbol admits a zero-distortion decoder output that
/// itself admits a zero-distortion encoder estimate.
pub fn check_zero_distortion_assumption(spec: &DistortionSpec) -> bool {
    spec.dd.iter().all(|row| {
        row.iter()
            .enumerate()
            .any(|(xd, &d)| d == 0.0 && spec.de[xd].iter().any(|&e| e == 0.0))
    })
}

/// Test channel `P(z|x)` with the decoder rule `phi[y][z]` and the encoder rule
/// `psi[x][z]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestChannel {
    pub z_size: usize,
    pub pz_given_x: Vec<Vec<f64>>,
    pub phi: Vec<Vec<usize>>,
    pub psi: Vec<Vec<usize>>,
}

impl TestChannel {
    /// Checks the channel against the source and reconstruction alphabets.
    pub fn validate(&self, src: &JointSource, xhat_size: usize) -> Result<()> {
        if self.z_size == 0 {
            return Err(Error::Domain("z alphabet is empty".into()));
        }
        let shape_ok = self.pz_given_x.len() == src.x_size
            && self.pz_given_x.iter().all(|r| r.len() == self.z_size)
            && self.phi.len() == src.y_size
            && self.phi.iter().all(|r| r.len() == self.z_size)
            && self.psi.len() == src.x_size
            && self.psi.iter().all(|r| r.len() == self.z_size);
        if !shape_ok {
            return Err(Error::Dimension(format!(
                "channel must be {x}x{z}, phi {y}x{z}, psi {x}x{z}",
                x = src.x_size,
                y = src.y_size,
                z = self.z_size
            )));
        }
        for row in &self.pz_given_x {
            if row.iter().any(|&p| !p.is_finite() || p < 0.0) {
                return Err(Error::Domain("channel entries must be nonnegative".into()));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ARITHMETIC_TOL {
                return Err(Error::Domain(format!("channel row sums to {s}")));
            }
        }
        if self
            .phi
            .iter()
            .chain(self.psi.iter())
            .flatten()
            .any(|&i| i >= xhat_size)
        {
            return Err(Error::Domain(format!(
                "reconstruction index outside alphabet of size {xhat_size}"
            )));
        }
        Ok(())
    }
}

/// Law of `(X, Y, Z)` induced by a source and a test channel, together with the
/// deterministic reconstructions.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedLaw {
    /// `pxyz[x][y][z]`.
    pub pxyz: Vec<Vec<Vec<f64>>>,
    pub phi: Vec<Vec<usize>>,
    pub psi: Vec<Vec<usize>>,
}

impl InducedLaw {
    pub fn total(&self) -> f64 {
        self.pxyz.iter().flatten().flatten().sum()
    }

    /// Marginal law of `(X, Y)`.
    pub fn pxy(&self) -> Vec<Vec<f64>> {
        self.pxyz
            .iter()
            .map(|row| row.iter().map(|zs| zs.iter().sum()).collect())
            .collect()
    }

    /// Mass of the atom `(x, y, z, phi(y, z), psi(x, z))`.
    pub fn atom(&self, x: usize, y: usize, z: usize) -> (f64, usize, usize) {
        (self.pxyz[x][y][z], self.phi[y][z], self.psi[x][z])
    }
}

/// Materializes `p(x, y, z) = P(x, y) P(z | x)`.
pub fn induced_distribution(src: &JointSource, ch: &TestChannel) -> Result<InducedLaw> {
    let xhat_bound = ch
        .phi
        .iter()
        .chain(ch.psi.iter())
        .flatten()
        .max()
        .map_or(1, |m| m + 1);
    ch.validate(src, xhat_bound)?;
    let pxyz = src
        .pxy
        .iter()
        .zip(&ch.pz_given_x)
        .map(|(row, qz)| {
            row.iter()
                .map(|&p| qz.iter().map(|&q| p * q).collect())
                .collect()
        })
        .collect();
    Ok(InducedLaw {
        pxyz,
        phi: ch.phi.clone(),
        psi: ch.psi.clone(),
    })
}

/// Folds an encoder-side observation `W` into the source: the new source
/// symbol is the pair `(x, w)` with index `x * w_size + w`, and its decoder
/// distortion ignores `w`.
///
/// `pxwy[x][w][y]` is the three-way joint law.
pub fn absorb_encoder_observation(
    pxwy: &[Vec<Vec<f64>>],
    dd: &[Vec<f64>],
) -> Result<(JointSource, Vec<Vec<f64>>)> {
    let x_size = pxwy.len();
    let w_size = pxwy.first().map_or(0, Vec::len);
    let y_size = pxwy.first().and_then(|w| w.first()).map_or(0, Vec::len);
    if x_size == 0 || w_size == 0 || y_size == 0 {
        return Err(Error::Domain("empty alphabet".into()));
    }
    if pxwy
        .iter()
        .any(|w| w.len() != w_size || w.iter().any(|r| r.len() != y_size))
    {
        return Err(Error::Dimension("ragged three-way law".into()));
    }
    if dd.len() != x_size {
        return Err(Error::Dimension(format!(
            "dd has {} rows but |X| = {x_size}",
            dd.len()
        )));
    }
    let rows: Vec<Vec<f64>> = pxwy.iter().flat_map(|w| w.iter().cloned()).collect();
    let src = JointSource::new(rows)?;
    let dd_tilde = (0..x_size)
        .flat_map(|x| std::iter::repeat(dd[x].clone()).take(w_size))
        .collect();
    Ok((src, dd_tilde))
}

/// Extended instance with `K` three-argument distortion functions.
///
/// `dk[k][x][xd][xe]` is `d_k(x, xhat_d, xhat_e)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedInstance {
    pub xhat_d_size: usize,
    pub xhat_e_size: usize,
    pub k: usize,
    pub dk: Vec<Vec<Vec<Vec<f64>>>>,
    pub targets: Vec<f64>,
}

impl ExtendedInstance {
    pub fn validate(&self, x_size: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Domain(
                "at least one distortion constraint required".into(),
            ));
        }
        if self.xhat_d_size == 0 || self.xhat_e_size == 0 {
            return Err(Error::Domain(
                "reconstruction alphabets must be nonempty".into(),
            ));
        }
        if self.dk.len() != self.k || self.targets.len() != self.k {
            return Err(Error::Dimension(format!(
                "expected {} distortion tables and targets",
                self.k
            )));
        }
        for table in &self.dk {
            let ok = table.len() == x_size
                && table.iter().all(|a| {
                    a.len() == self.xhat_d_size && a.iter().all(|b| b.len() == self.xhat_e_size)
                });
            if !ok {
                return Err(Error::Dimension(format!(
                    "each d_k must be {x_size}x{}x{}",
                    self.xhat_d_size, self.xhat_e_size
                )));
            }
            if table
                .iter()
                .flatten()
                .flatten()
                .any(|v| !v.is_finite() || *v < 0.0)
            {
                return Err(Error::Domain(
                    "distortions must be finite and nonnegative".into(),
                ));
            }
        }
        if self.targets.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::Domain(
                "targets must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// Embeds a two-table instance as `K = 2` constraints
    /// `d_1 = d_d(x, xd)`, `d_2 = d_e(xd, xe)`.
    pub fn from_base(spec: &DistortionSpec, dd_target: f64, de_target: f64) -> Self {
        let n = spec.xhat_size;
        let d1 = spec
            .dd
            .iter()
            .map(|row| (0..n).map(|xd| vec![row[xd]; n]).collect())
            .collect();
        let d2 = spec
            .dd
            .iter()
            .map(|_| (0..n).map(|xd| spec.de[xd].clone()).collect())
            .collect();
        ExtendedInstance {
            xhat_d_size: n,
            xhat_e_size: n,
            k: 2,
            dk: vec![d1, d2],
            targets: vec![dd_target, de_target],
        }
    }
}

/// True iff every source symbol admits reconstructions that zero all `K`
/// distortions at once.
pub fn check_extended_assumption(ext: &ExtendedInstance, x_size: usize) -> bool {
    (0..x_size).all(|x| {
        (0..ext.xhat_d_size)
            .any(|xd| (0..ext.xhat_e_size).any(|xe| ext.dk.iter().all(|t| t[x][xd][xe] == 0.0)))
    })
}
