//! Monte-Carlo simulation of the sphere-codebook scheme for the Gaussian case.
//!
//! Codewords are drawn uniformly on the sphere of radius `sqrt(n var_z)` and
//! split into contiguous bins. The encoder picks the codeword whose angle with
//! the source is closest to the nominal one and sends its bin; the decoder
//! searches that bin for the codeword with the nominal angle to the side
//! information.
//!
//! Randomness comes from ChaCha20 seeded with the run seed. Stream 0 draws the
//! codebook; trial `i` draws its source and noise, in that order, from stream
//! `i + 1`. Results therefore do not depend on how trials are scheduled.

pub mod geometry;

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{scheme_rate, SchemeParams};

pub use geometry::{cap_exponent, cap_fraction, cap_ratio};

/// Default cap on the number of codewords.
pub const DEFAULT_CODEWORD_CAP: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub var_x: f64,
    pub var_u: f64,
    pub params: SchemeParams,
    /// Rate slack.
    pub delta: f64,
    /// Typicality slack.
    pub epsilon: f64,
    pub trials: usize,
    pub seed: u64,
    pub codeword_cap: usize,
}

/// `2^e` rounded up, treating values within `1e-9` relative of an integer as
/// that integer.
fn ceil_pow2(e: f64) -> f64 {
    let v = e.exp2();
    let r = v.round();
    if (v - r).abs() <= 1e-9 * v {
        r
    } else {
        v.ceil()
    }
}

fn floor_pow2(e: f64) -> f64 {
    let v = e.exp2();
    let r = v.round();
    if (v - r).abs() <= 1e-9 * v {
        r
    } else {
        v.floor()
    }
}

/// Codebook rate `R' = 1/2 log2((var_x + var_w) / var_w)`.
pub fn codebook_rate(params: &SchemeParams, var_x: f64) -> f64 {
    0.5 * ((var_x + params.var_w) / params.var_w).log2()
}

/// Largest `epsilon` allowed by the typicality condition
/// `(1 - 4 eps) sqrt(1 - 2^{-2(R'-R)}) > sqrt(1 - 2^{-2(R'-R-delta/2)})`
/// (exclusive).
pub fn max_epsilon(params: &SchemeParams, var_x: f64, var_u: f64, delta: f64) -> Result<f64> {
    let r = scheme_rate(params, var_x, var_u)?;
    let rp = codebook_rate(params, var_x);
    let lhs = (1.0 - (-2.0 * (rp - r)).exp2()).sqrt();
    let rhs = (1.0 - (-2.0 * (rp - r - delta / 2.0)).exp2())
        .max(0.0)
        .sqrt();
    if !(lhs > 0.0) {
        return Err(Error::Domain("binning rate R' - R must be positive".into()));
    }
    Ok((1.0 - rhs / lhs) / 4.0)
}

/// Half of [`max_epsilon`].
pub fn default_epsilon(params: &SchemeParams, var_x: f64, var_u: f64, delta: f64) -> Result<f64> {
    Ok(max_epsilon(params, var_x, var_u, delta)? / 2.0)
}

/// Number of codewords at blocklength `n`.
pub fn codebook_size(params: &SchemeParams, var_x: f64, n: usize) -> f64 {
    ceil_pow2(n as f64 * codebook_rate(params, var_x))
}

/// Largest blocklength whose codebook fits within `cap` codewords.
pub fn largest_feasible_n(params: &SchemeParams, var_x: f64, cap: usize) -> Result<usize> {
    let rp = codebook_rate(params, var_x);
    if !(rp > 0.0 && rp.is_finite()) {
        return Err(Error::Domain(
            "codebook rate must be positive and finite".into(),
        ));
    }
    let mut n = ((cap as f64).log2() / rp).floor() as usize + 1;
    while n >= 2 && codebook_size(params, var_x, n) > cap as f64 {
        n -= 1;
    }
    if n < 2 {
        return Err(Error::ResourceCap(format!(
            "even n = 2 needs more than {cap} codewords"
        )));
    }
    Ok(n)
}

impl SimConfig {
    /// A configuration with the default typicality slack and codeword cap.
    pub fn new(
        n: usize,
        var_x: f64,
        var_u: f64,
        params: SchemeParams,
        delta: f64,
        trials: usize,
        seed: u64,
    ) -> Result<Self> {
        Ok(SimConfig {
            n,
            var_x,
            var_u,
            params,
            delta,
            epsilon: default_epsilon(&params, var_x, var_u, delta)?,
            trials,
            seed,
            codeword_cap: DEFAULT_CODEWORD_CAP,
        })
    }

    pub fn rate(&self) -> Result<f64> {
        scheme_rate(&self.params, self.var_x, self.var_u)
    }

    pub fn rate_prime(&self) -> f64 {
        codebook_rate(&self.params, self.var_x)
    }

    pub fn var_z(&self) -> f64 {
        self.params.codeword_variance(self.var_x)
    }

    /// Nominal cosine between source and chosen codeword.
    pub fn encoder_target(&self) -> f64 {
        (1.0 - (-2.0 * self.rate_prime()).exp2()).sqrt()
    }

    /// Nominal cosine between side information and chosen codeword.
    pub fn decoder_target(&self) -> Result<f64> {
        Ok((1.0 - (-2.0 * (self.rate_prime() - self.rate()?)).exp2()).sqrt())
    }

    /// Domain errors for bad parameters, `Infeasible` when `epsilon` is too
    /// large for `delta`, `ResourceCap` when the codebook is too big.
    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        let finite = [
            self.var_x,
            self.var_u,
            p.a,
            p.b,
            p.var_w,
            self.delta,
            self.epsilon,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite
            || self.n < 2
            || self.var_x <= 0.0
            || self.var_u <= 0.0
            || p.a <= 0.0
            || p.b < 0.0
            || p.var_w <= 0.0
            || self.delta <= 0.0
            || self.epsilon <= 0.0
            || self.trials == 0
        {
            return Err(Error::Domain(
                "need n >= 2, positive variances, a > 0, b >= 0, var_w > 0, delta > 0, \
                 epsilon > 0 and at least one trial"
                    .into(),
            ));
        }
        let limit = max_epsilon(p, self.var_x, self.var_u, self.delta)?;
        if self.epsilon >= limit {
            return Err(Error::Infeasible(format!(
                "epsilon = {} is too large for delta = {}; it must be below {limit}",
                self.epsilon, self.delta
            )));
        }
        let size = codebook_size(p, self.var_x, self.n);
        if size > self.codeword_cap as f64 {
            let n_max = largest_feasible_n(p, self.var_x, self.codeword_cap).ok();
            return Err(Error::ResourceCap(format!(
                "n = {} needs {size} codewords, above the cap of {}; largest feasible n is {}",
                self.n,
                self.codeword_cap,
                n_max.map_or("none".to_string(), |n| n.to_string())
            )));
        }
        Ok(())
    }

    /// Contiguous bins over `size` codewords. There are
    /// `floor(2^{n(R+delta)})` bins of `ceil(2^{n(R'-R-delta)})` codewords,
    /// the last one taking whatever is left. If that size leaves the last bin
    /// empty, the size drops to `floor(size / bins)`; with more bins than
    /// codewords every codeword gets its own bin.
    pub fn bin_layout(&self, size: usize) -> Result<Vec<Range<usize>>> {
        let n = self.n as f64;
        let r = self.rate()?;
        let m = floor_pow2(n * (r + self.delta)).max(1.0);
        if m >= size as f64 {
            return Ok((0..size).map(|i| i..i + 1).collect());
        }
        let m = m as usize;
        let mut s = ceil_pow2(n * (self.rate_prime() - r - self.delta)).max(1.0) as usize;
        if (m - 1) * s >= size {
            s = size / m;
        }
        let mut bins: Vec<Range<usize>> = (0..m - 1).map(|i| i * s..(i + 1) * s).collect();
        bins.push((m - 1) * s..size);
        Ok(bins)
    }
}

/// A point uniform on the centered sphere of the given radius.
pub fn sample_sphere<R: Rng + ?Sized>(n: usize, radius: f64, rng: &mut R) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::Domain(format!(
            "dimension must be at least 2, got {n}"
        )));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Domain(format!(
            "radius must be positive, got {radius}"
        )));
    }
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dot(&v, &v).sqrt();
        if norm > 0.0 {
            return Ok(v.into_iter().map(|c| c * radius / norm).collect());
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b) / (dot(a, a).sqrt() * dot(b, b).sqrt())
}

/// Codewords of equal norm, partitioned into contiguous bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    n: usize,
    radius: f64,
    data: Vec<f64>,
    bins: Vec<Range<usize>>,
}

impl Codebook {
    /// Checks that all vectors have length `n` and a common norm, and that
    /// `bins` are nonempty contiguous ranges covering every index in order.
    pub fn new(n: usize, vectors: Vec<Vec<f64>>, bins: Vec<Range<usize>>) -> Result<Self> {
        if vectors.is_empty() || vectors.iter().any(|v| v.len() != n) {
            return Err(Error::Dimension(format!(
                "codewords must be nonempty {n}-vectors"
            )));
        }
        let radius = dot(&vectors[0], &vectors[0]).sqrt();
        if !(radius > 0.0) {
            return Err(Error::Domain("codewords must be nonzero".into()));
        }
        if vectors
            .iter()
            .any(|v| (dot(v, v).sqrt() - radius).abs() > 1e-9 * radius)
        {
            return Err(Error::Domain("codewords must share one norm".into()));
        }
        let mut next = 0;
        for b in &bins {
            if b.start != next || b.end <= b.start {
                return Err(Error::Domain(
                    "bins must be nonempty contiguous ranges".into(),
                ));
            }
            next = b.end;
        }
        if next != vectors.len() {
            return Err(Error::Domain("bins must cover every codeword".into()));
        }
        Ok(Codebook {
            n,
            radius,
            data: vectors.into_iter().flatten().collect(),
            bins,
        })
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn bins(&self) -> &[Range<usize>] {
        &self.bins
    }

    /// Index of the bin holding codeword `i`.
    pub fn bin_of(&self, i: usize) -> usize {
        self.bins.partition_point(|b| b.end <= i)
    }

    /// Index in `range` whose angle to `v` has cosine closest to `target`;
    /// lowest index on ties.
    fn closest_angle(&self, v: &[f64], target: f64, range: Range<usize>) -> usize {
        let scale = dot(v, v).sqrt() * self.radius;
        let mut best = (f64::INFINITY, range.start);
        for i in range {
            let miss = (dot(v, self.vector(i)) / scale - target).abs();
            if miss < best.0 {
                best = (miss, i);
            }
        }
        best.1
    }
}

/// Draws the codebook of `cfg` from stream 0 of the seed.
pub fn build_codebook(cfg: &SimConfig) -> Result<Codebook> {
    cfg.validate()?;
    let size = codebook_size(&cfg.params, cfg.var_x, cfg.n) as usize;
    let radius = (cfg.n as f64 * cfg.var_z()).sqrt();
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let vectors = (0..size)
        .map(|_| sample_sphere(cfg.n, radius, &mut rng))
        .collect::<Result<_>>()?;
    Codebook::new(cfg.n, vectors, cfg.bin_layout(size)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Encoding {
    pub bin: usize,
    pub index: usize,
    /// `z* + b x`.
    pub xhat_e: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoding {
    pub index: usize,
    /// `z_hat + b y`.
    pub xhat_d: Vec<f64>,
}

fn check_vector(v: &[f64], cb: &Codebook) -> Result<()> {
    if v.len() != cb.n {
        return Err(Error::Dimension(format!("expected a {}-vector", cb.n)));
    }
    if dot(v, v) == 0.0 {
        return Err(Error::Domain("zero vector has no angle".into()));
    }
    Ok(())
}

/// Searches the whole codebook for the codeword at the nominal angle to `x`.
pub fn encode(x: &[f64], cb: &Codebook, cfg: &SimConfig) -> Result<Encoding> {
    check_vector(x, cb)?;
    let index = cb.closest_angle(x, cfg.encoder_target(), 0..cb.len());
    let b = cfg.params.b;
    Ok(Encoding {
        bin: cb.bin_of(index),
        index,
        xhat_e: cb
            .vector(index)
            .iter()
            .zip(x)
            .map(|(z, x)| z + b * x)
            .collect(),
    })
}

/// Searches bin `m` for the codeword at the nominal angle to `y`.
pub fn decode(m: usize, y: &[f64], cb: &Codebook, cfg: &SimConfig) -> Result<Decoding> {
    check_vector(y, cb)?;
    let range = cb
        .bins
        .get(m)
        .cloned()
        .ok_or_else(|| Error::Domain(format!("bin {m} does not exist")))?;
    assert!(!range.is_empty(), "bins are nonempty by construction");
    let index = cb.closest_angle(y, cfg.decoder_target()?, range);
    let b = cfg.params.b;
    Ok(Decoding {
        index,
        xhat_d: cb
            .vector(index)
            .iter()
            .zip(y)
            .map(|(z, y)| z + b * y)
            .collect(),
    })
}

/// Aggregate over all trials of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub n: usize,
    pub trials_run: usize,
    pub seed: u64,
    pub a: f64,
    pub b: f64,
    pub var_w: f64,
    pub delta: f64,
    pub epsilon: f64,
    /// Scheme rate `R`, bits per symbol.
    pub rate_nominal: f64,
    pub codebook_size: usize,
    pub bins: usize,
    /// Averages over all trials, error trials included.
    pub empirical_dd: f64,
    pub empirical_de: f64,
    /// Averages over trials where no error event occurred; `None` if there
    /// were none.
    pub success_dd: Option<f64>,
    pub success_de: Option<f64>,
    pub freq_src: f64,
    pub freq_enc: f64,
    pub freq_dec1: f64,
    pub freq_dec2: f64,
    pub freq_any: f64,
}

impl SimResult {
    /// Standard error of an event frequency estimated from this run.
    pub fn standard_error(&self, freq: f64) -> f64 {
        (freq * (1.0 - freq) / self.trials_run as f64).sqrt()
    }
}

struct Trial {
    dd: f64,
    de: f64,
    src: bool,
    enc: bool,
    dec1: bool,
    dec2: bool,
}

fn run_trial(cfg: &SimConfig, cb: &Codebook, i: usize, targets: (f64, f64)) -> Result<Trial> {
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    rng.set_stream(i as u64 + 1);
    let n = cfg.n;
    let sx = cfg.var_x.sqrt();
    let su = cfg.var_u.sqrt();
    let x: Vec<f64> = (0..n)
        .map(|_| sx * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let u: Vec<f64> = (0..n)
        .map(|_| su * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let y: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + b).collect();

    let enc = encode(&x, cb, cfg)?;
    let dec = decode(enc.bin, &y, cb, cfg)?;

    let eps = cfg.epsilon;
    let var_y = cfg.var_x + cfg.var_u;
    let rho = (cfg.var_x / var_y).sqrt();
    let nf = n as f64;
    let src = (dot(&x, &x) / nf - cfg.var_x).abs() > eps * cfg.var_x
        || (dot(&y, &y) / nf - var_y).abs() > eps * var_y
        || (cosine(&x, &y) - rho).abs() > eps * rho;
    let (te, td) = targets;
    let zs = cb.vector(enc.index);
    let mse =
        |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() / nf;
    Ok(Trial {
        dd: mse(&x, &dec.xhat_d),
        de: mse(&dec.xhat_d, &enc.xhat_e),
        src,
        enc: (cosine(&x, zs) - te).abs() > eps * te,
        dec1: (cosine(&y, zs) - td).abs() > 4.0 * eps * td,
        dec2: dec.index != enc.index,
    })
}

/// Runs `cfg.trials` independent trials.
pub fn run_simulation(cfg: &SimConfig) -> Result<SimResult> {
    let cb = build_codebook(cfg)?;
    simulate_with(cfg, &cb)
}

/// Runs the trials of `cfg` against a given codebook.
pub fn simulate_with(cfg: &SimConfig, cb: &Codebook) -> Result<SimResult> {
    cfg.validate()?;
    let targets = (cfg.encoder_target(), cfg.decoder_target()?);
    let trials: Vec<Trial> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| run_trial(cfg, cb, i, targets))
        .collect::<Result<_>>()?;
    let t = trials.len() as f64;
    let freq = |f: fn(&Trial) -> bool| trials.iter().filter(|tr| f(tr)).count() as f64 / t;
    let ok: Vec<&Trial> = trials
        .iter()
        .filter(|tr| !(tr.src || tr.enc || tr.dec1 || tr.dec2))
        .collect();
    let mean_ok = |f: fn(&Trial) -> f64| {
        (!ok.is_empty()).then(|| ok.iter().map(|tr| f(tr)).sum::<f64>() / ok.len() as f64)
    };
    Ok(SimResult {
        n: cfg.n,
        trials_run: trials.len(),
        seed: cfg.seed,
        a: cfg.params.a,
        b: cfg.params.b,
        var_w: cfg.params.var_w,
        delta: cfg.delta,
        epsilon: cfg.epsilon,
        rate_nominal: cfg.rate()?,
        codebook_size: cb.len(),
        bins: cb.bins().len(),
        empirical_dd: trials.iter().map(|tr| tr.dd).sum::<f64>() / t,
        empirical_de: trials.iter().map(|tr| tr.de).sum::<f64>() / t,
        success_dd: mean_ok(|tr| tr.dd),
        success_de: mean_ok(|tr| tr.de),
        freq_src: freq(|tr| tr.src),
        freq_enc: freq(|tr| tr.enc),
        freq_dec1: freq(|tr| tr.dec1),
        freq_dec2: freq(|tr| tr.dec2),
        freq_any: freq(|tr| tr.src || tr.enc || tr.dec1 || tr.dec2),
    })
}
