//! One function per subcommand; each returns the bytes to write.

use serde::Serialize;
use sirate::caratheodory::AuxReduction;
use sirate::extended::{solve_rate_ext, verify_u_reduction, ExtChannel};
use sirate::gaussian::{
    classify_case, r_cr_gaussian, r_gaussian, r_wz_gaussian, scheme_params, GaussianProblem, Scheme,
};
use sirate::io::{
    decoder_instance_from_table, extended_from_table, instance_from_table, witness_from_table, Grid,
};
use sirate::solver::{r_cr, r_wz, solve_rate, tradeoff_sweep, BaselinePoint, Diagnostics};
use sirate::sphere::{
    largest_feasible_n, run_simulation, SimConfig, SimResult, DEFAULT_CODEWORD_CAP,
};
use sirate::{Error, Result, TestChannel};

use crate::format::{json_report, opt, sig12, Csv};
use crate::manifest::{Manifest, EXTENDED_KEYS, INSTANCE_KEYS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

fn grid(m: &Manifest, key: &str) -> Result<Vec<f64>> {
    let values = m.require::<Grid>(key)?.values()?;
    if values.is_empty() {
        return Err(Error::Parse(format!("`{key}` is empty")));
    }
    Ok(values)
}

pub fn discrete_solve(m: &Manifest, format: Format) -> Result<Vec<u8>> {
    m.allow(&[INSTANCE_KEYS, &["dd_target", "de_target", "solver"]])?;
    let (src, spec) = instance_from_table(&m.table)?;
    let cfg = m.solve_config()?;
    let p = solve_rate(
        &src,
        &spec,
        m.require("dd_target")?,
        m.require("de_target")?,
        &cfg,
    )?;
    match format {
        Format::Json => json_report(m.command, m.seed, &p),
        Format::Csv => {
            let mut csv = Csv::new(&SWEEP_HEADER)?;
            csv.row([
                sig12(p.dd_target),
                sig12(p.de_target),
                sig12(p.rate),
                sig12(p.achieved_dd),
                sig12(p.achieved_de),
                "ok".into(),
                m.seed.to_string(),
            ])?;
            csv.finish()
        }
    }
}

const SWEEP_HEADER: [&str; 7] = [
    "dd",
    "de",
    "rate",
    "achieved_dd",
    "achieved_de",
    "status",
    "seed",
];

#[derive(Serialize)]
struct SweepCell {
    dd: f64,
    de: f64,
    status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    achieved_dd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    achieved_de: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnostics: Option<Diagnostics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct Cells<T> {
    cells: Vec<T>,
}

pub fn discrete_sweep(m: &Manifest, format: Format) -> Result<Vec<u8>> {
    m.allow(&[INSTANCE_KEYS, &["dd_grid", "de_grid", "solver"]])?;
    let (src, spec) = instance_from_table(&m.table)?;
    let cfg = m.solve_config()?;
    let (dd_grid, de_grid) = (grid(m, "dd_grid")?, grid(m, "de_grid")?);
    let rows = tradeoff_sweep(&src, &spec, &dd_grid, &de_grid, &cfg)?;
    let mut cells = Vec::new();
    for (i, row) in rows.into_iter().enumerate() {
        for (j, cell) in row.into_iter().enumerate() {
            cells.push(match cell {
                Ok(p) => SweepCell {
                    dd: dd_grid[i],
                    de: de_grid[j],
                    status: "ok".into(),
                    rate: Some(p.rate),
                    achieved_dd: Some(p.achieved_dd),
                    achieved_de: Some(p.achieved_de),
                    diagnostics: Some(p.diagnostics),
                    error: None,
                },
                Err(e) => SweepCell {
                    dd: dd_grid[i],
                    de: de_grid[j],
                    status: e.kind().into(),
                    rate: None,
                    achieved_dd: None,
                    achieved_de: None,
                    diagnostics: None,
                    error: Some(e.to_string()),
                },
            });
        }
    }
    match format {
        Format::Json => json_report(m.command, m.seed, &Cells { cells }),
        Format::Csv => {
            let mut csv = Csv::new(&SWEEP_HEADER)?;
            for c in &cells {
                csv.row([
                    sig12(c.dd),
                    sig12(c.de),
                    opt(c.rate),
                    opt(c.achieved_dd),
                    opt(c.achieved_de),
                    c.status.clone(),
                    m.seed.to_string(),
                ])?;
            }
            csv.finish()
        }
    }
}

#[derive(Serialize)]
struct BaselineCell {
    dd: f64,
    status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    achieved_dd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<TestChannel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnostics: Option<Diagnostics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

type Baseline = fn(
    &sirate::JointSource,
    &[Vec<f64>],
    f64,
    &sirate::solver::SolveConfig,
) -> Result<BaselinePoint>;

/// `wz` and `cr`: one cell per entry of `dd_grid`, or a single `dd_target`.
pub fn baseline(m: &Manifest, format: Format, f: Baseline) -> Result<Vec<u8>> {
    m.allow(&[INSTANCE_KEYS, &["dd_grid", "dd_target", "solver"]])?;
    let (src, dd) = decoder_instance_from_table(&m.table)?;
    let cfg = m.solve_config()?;
    let single = m.get::<f64>("dd_target")?;
    let targets = match (single, m.table.contains_key("dd_grid")) {
        (Some(_), true) => {
            return Err(Error::Parse(
                "give either `dd_target` or `dd_grid`, not both".into(),
            ))
        }
        (Some(t), false) => vec![t],
        (None, _) => grid(m, "dd_grid")?,
    };
    let mut results: Vec<Result<BaselinePoint>> =
        targets.iter().map(|&t| f(&src, &dd, t, &cfg)).collect();
    // A lone `dd_target` behaves like a solve: failure is the exit status.
    if single.is_some() && results[0].is_err() {
        return Err(results.remove(0).unwrap_err());
    }
    let cells: Vec<BaselineCell> = targets
        .iter()
        .zip(results)
        .map(|(&t, r)| match r {
            Ok(p) => BaselineCell {
                dd: t,
                status: "ok".into(),
                rate: Some(p.rate),
                achieved_dd: Some(p.achieved_dd),
                witness: Some(p.witness),
                diagnostics: Some(p.diagnostics),
                error: None,
            },
            Err(e) => BaselineCell {
                dd: t,
                status: e.kind().into(),
                rate: None,
                achieved_dd: None,
                witness: None,
                diagnostics: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    match format {
        Format::Json => json_report(m.command, m.seed, &Cells { cells }),
        Format::Csv => {
            let mut csv = Csv::new(&["dd", "rate", "achieved_dd", "status", "seed"])?;
            for c in &cells {
                csv.row([
                    sig12(c.dd),
                    opt(c.rate),
                    opt(c.achieved_dd),
                    c.status.clone(),
                    m.seed.to_string(),
                ])?;
            }
            csv.finish()
        }
    }
}

pub fn wz(m: &Manifest, format: Format) -> Result<Vec<u8>> {
    baseline(m, format, r_wz)
}

pub fn cr(m: &Manifest, format: Format) -> Result<Vec<u8>> {
    baseline(m, format, r_cr)
}

#[derive(Serialize, Default)]
struct GaussianRow {
    dd: f64,
    de: f64,
    case_id: Option<u8>,
    r_gaussian: Option<f64>,
    r_wz: Option<f64>,
    r_cr: Option<f64>,
    a: Option<f64>,
    b: Option<f64>,
    var_w: Option<f64>,
    error: Option<String>,
}

fn gaussian_row(var_x: f64, var_u: f64, xi: f64, dd: f64, de: f64) -> GaussianRow {
    let mut row = GaussianRow {
        dd,
        de,
        ..Default::default()
    };
    let r: Result<()> = (|| {
        let p = GaussianProblem::with_gain(var_x, var_u, dd, de, xi)?;
        row.case_id = Some(classify_case(&p)?);
        row.r_gaussian = Some(r_gaussian(&p)?);
        row.r_wz = Some(r_wz_gaussian(p.var_x, p.var_u, dd)?);
        row.r_cr = Some(r_cr_gaussian(p.var_x, p.var_u, dd)?);
        if let Scheme::Coding(s) = scheme_params(&p)? {
            row.a = Some(s.a);
            row.b = Some(s.b);
            row.var_w = Some(s.var_w);
        }
        Ok(())
    })();
    if let Err(e) = r {
        row.error = Some(e.to_string());
    }
    row
}

pub fn gaussian_curve(m: &Manifest, format: Format) -> Result<Vec<u8>> {
    m.allow(&[&["var_x", "var_u", "xi", "dd_grid", "de_grid"]])?;
    let var_x: f64 = m.require("var_x")?;
    let var_u: f64 = m.require("var_u")?;
    let xi: f64 = m.get("xi")?.unwrap_or(1.0);
    let (dd_grid, de_grid) = (grid(m, "dd_grid")?, grid(m, "de_grid")?);
    let rows: Vec<GaussianRow> = dd_grid
        .iter()
        .flat_map(|&dd| de_grid.iter().map(move |&de| (dd, de)))
        .map(|(dd, de)| gaussian_row(var_x, var_u, xi, dd, de))
        .collect();
    match format {
        Format::Json => json_report(m.command, m.seed, &Rows { rows }),
        Format::Csv => {
            let mut csv = Csv::new(&[
                "dd",
                "de",
                "case_id",
                "r_gaussian",
                "r_wz",
                "r_cr",
                "a",
                "b",
                "var_w",
                "error",
                "seed",
            ])?;
            for r in &rows {
                csv.row([
                    sig12(r.dd),
                    sig12(r.de),
                    r.case_id.map(|c| c.to_string()).unwrap_or_default(),
                    opt(r.r_gaussian),
                    opt(r.r_wz),
                    opt(r.r_cr),
                    opt(r.a),
                    opt(r.b),
                    opt(r.var_w),
                    r.error.clone().unwrap_or_default(),
                    m.seed.to_string(),
                ])?;
            }
            csv.finish()
        }
    }
}

#[derive(Serialize)]
struct Rows<T> {
    rows: Vec<T>,
}

#[derive(serde::Deserialize)]
#[serde(untagged)]
enum Blocklengths {
    One(usize),
    Many(Vec<usize>),
}

pub fn sphere_sim(m: &Manifest, format: Format) -> Result<Vec<u8>> {
    m.allow(&[&[
        "var_x",
        "var_u",
        "dd",
        "de",
        "delta",
        "epsilon",
        "trials",
        "n",
        "codeword_cap",
    ]])?;
    let var_x: f64 = m.require("var_x")?;
    let var_u: f64 = m.require("var_u")?;
    let p = GaussianProblem::new(var_x, var_u, m.require("dd")?, m.require("de")?)?;
    let params = match scheme_params(&p)? {
        Scheme::Coding(s) => s,
        Scheme::NoCoding { case_id, .. } => {
            return Err(Error::Domain(format!(
                "case {case_id} needs no codebook; there is nothing to simulate"
            )))
        }
    };
    let delta: f64 = m.get("delta")?.unwrap_or(0.1);
    let trials: usize = m.get("trials")?.unwrap_or(200);
    let cap: usize = m.get("codeword_cap")?.unwrap_or(DEFAULT_CODEWORD_CAP);
    let epsilon: Option<f64> = m.get("epsilon")?;
    let ns = match m.get::<Blocklengths>("n")? {
        Some(Blocklengths::One(n)) => vec![n],
        Some(Blocklengths::Many(v)) if !v.is_empty() => v,
        Some(Blocklengths::Many(_)) => return Err(Error::Parse("`n` is empty".into())),
        None => vec![largest_feasible_n(&params, var_x, cap)?],
    };
    let mut results: Vec<SimResult> = Vec::new();
    for n in ns {
        let mut cfg = SimConfig::new(n, var_x, var_u, params, delta, trials, m.seed)?;
        cfg.codeword_cap = cap;
        if let Some(e) = epsilon {
            cfg.epsilon = e;
        }
        results.push(run_simulation(&cfg)?);
    }
    match format {
        Format::Json => json_report(m.command, m.seed, &Rows { rows: results }),
        Format::Csv => {
            let mut csv = Csv::new(&[
                "n",
                "trials",
                "seed",
                "a",
                "b",
                "var_w",
                "delta",
                "epsilon",
                "rate_nominal",
                "empirical_dd",
                "empirical_de",
                "freq_src",
                "freq_enc",
                "freq_dec1",
                "freq_dec2",
                "freq_any",
            ])?;
            for r in &results {
                csv.row([
                    r.n.to_string(),
                    r.trials_run.to_string(),
                    r.seed.to_string(),
                    sig12(r.a),
                    sig12(r.b),
                    sig12(r.var_w),
                    sig12(r.delta),
                    sig12(r.epsilon),
                    sig12(r.rate_nominal),
                    sig12(r.empirical_dd),
                    sig12(r.empirical_de),
                    sig12(r.freq_src),
                    sig12(r.freq_enc),
                    sig12(r.freq_dec1),
                    sig12(r.freq_dec2),
                    sig12(r.freq_any),
                ])?;
            }
            csv.finish()
        }
    }
}

pub fn ext_solve(m: &Manifest, format: Format) -> Result<Vec<u8>> {
    m.allow(&[EXTENDED_KEYS, &["solver"]])?;
    let (src, ext) = extended_from_table(&m.table)?;
    let cfg = m.ext_config()?;
    let p = solve_rate_ext(&src, &ext, &cfg)?;
    match format {
        Format::Json => json_report(m.command, m.seed, &p),
        Format::Csv => {
            let mut header = vec!["rate".to_string()];
            header.extend((0..ext.k).map(|k| format!("target_{k}")));
            header.extend((0..ext.k).map(|k| format!("achieved_{k}")));
            header.push("seed".into());
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            let mut csv = Csv::new(&header)?;
            let mut row = vec![sig12(p.rate)];
            row.extend(p.targets.iter().map(|v| sig12(*v)));
            row.extend(p.achieved.iter().map(|v| sig12(*v)));
            row.push(m.seed.to_string());
            csv.row(row)?;
            csv.finish()
        }
    }
}

#[derive(Serialize)]
struct ReduceReport {
    ok: bool,
    u_size: usize,
    u_tilde_size: usize,
    rate_before: f64,
    rate_after: f64,
    distortions_before: Vec<f64>,
    distortions_after: Vec<f64>,
    reduced: AuxReduction,
}

pub fn reduce_u(m: &Manifest, format: Format) -> Result<Vec<u8>> {
    m.allow(&[EXTENDED_KEYS, &["witness"]])?;
    let (src, ext) = extended_from_table(&m.table)?;
    let ch: ExtChannel = witness_from_table(&m.table, &src, &ext)?;
    let r = verify_u_reduction(&src, &ext, &ch)?;
    match format {
        Format::Json => json_report(
            m.command,
            m.seed,
            &ReduceReport {
                ok: r.ok,
                u_size: ch.u_size,
                u_tilde_size: r.reduced.u_size,
                rate_before: r.rate_before,
                rate_after: r.rate_after,
                distortions_before: r.distortions_before,
                distortions_after: r.distortions_after,
                reduced: AuxReduction {
                    pu_given_xz: r.reduced.pu_given_xz,
                    psi: r.reduced.psi,
                },
            },
        ),
        Format::Csv => {
            let mut csv = Csv::new(&["x", "z", "u", "p_u", "psi", "seed"])?;
            for (x, (pr, sr)) in r.reduced.pu_given_xz.iter().zip(&r.reduced.psi).enumerate() {
                for (z, (pc, sc)) in pr.iter().zip(sr).enumerate() {
                    for (u, (p, s)) in pc.iter().zip(sc).enumerate() {
                        csv.row([
                            x.to_string(),
                            z.to_string(),
                            u.to_string(),
                            sig12(*p),
                            s.to_string(),
                            m.seed.to_string(),
                        ])?;
                    }
                }
            }
            csv.finish()
        }
    }
}
