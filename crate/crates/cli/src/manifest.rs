//! Run manifests: the input document with `--config` overrides applied.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;
use sirate::extended::ExtSolveConfig;
use sirate::io::{apply_override, from_table, parse_document, parse_override};
use sirate::solver::SolveConfig;
use sirate::{Error, Result};
use toml::{Table, Value};

pub const INSTANCE_KEYS: &[&str] = &["x_size", "y_size", "xhat_size", "pxy", "dd", "de"];
pub const EXTENDED_KEYS: &[&str] = &[
    "x_size",
    "y_size",
    "pxy",
    "xhat_d_size",
    "xhat_e_size",
    "k",
    "dk",
    "targets",
];

pub struct Manifest {
    pub command: &'static str,
    pub output: Option<PathBuf>,
    pub seed: u64,
    pub table: Table,
}

impl Manifest {
    pub fn load(
        command: &'static str,
        input: Option<&Path>,
        output: Option<PathBuf>,
        seed: u64,
        overrides: &[String],
    ) -> Result<Self> {
        let mut table = match input {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Parse(format!("cannot read {}: {e}", p.display())))?;
                parse_document(&text)?
            }
            None => Table::new(),
        };
        for o in overrides {
            let (path, value) = parse_override(o)?;
            apply_override(&mut table, &path, value)?;
        }
        if output.as_ref().is_some_and(|p| p.as_os_str().is_empty()) {
            return Err(Error::Parse("output path is empty".into()));
        }
        Ok(Manifest {
            command,
            output,
            seed,
            table,
        })
    }

    /// Rejects top-level keys outside `groups`, which catches typos in
    /// overrides.
    pub fn allow(&self, groups: &[&[&str]]) -> Result<()> {
        for key in self.table.keys() {
            if !groups.iter().any(|g| g.contains(&key.as_str())) {
                return Err(Error::Parse(format!(
                    "unknown key `{key}` for {}",
                    self.command
                )));
            }
        }
        Ok(())
    }

    pub fn get<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(v) => T::deserialize(v.clone())
                .map(Some)
                .map_err(|e| Error::Parse(format!("`{key}`: {}", e.message()))),
        }
    }

    pub fn require<T: DeserializeOwned>(&self, key: &str) -> Result<T> {
        self.get(key)?
            .ok_or_else(|| Error::Parse(format!("missing `{key}` for {}", self.command)))
    }

    fn solver_table(&self) -> Result<Table> {
        match self.table.get("solver") {
            None => Ok(Table::new()),
            Some(Value::Table(t)) => Ok(t.clone()),
            Some(_) => Err(Error::Parse("`solver` must be a table".into())),
        }
    }

    pub fn solve_config(&self) -> Result<SolveConfig> {
        let cfg: SolveConfig = from_table(&self.solver_table()?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Solver settings plus `solver.u_size`.
    pub fn ext_config(&self) -> Result<ExtSolveConfig> {
        let mut t = self.solver_table()?;
        let u_size = match t.remove("u_size") {
            None => None,
            Some(v) => Some(
                usize::deserialize(v)
                    .map_err(|e| Error::Parse(format!("`u_size`: {}", e.message())))?,
            ),
        };
        let solve: SolveConfig = from_table(&t)?;
        solve.validate()?;
        Ok(ExtSolveConfig { u_size, solve })
    }
}
