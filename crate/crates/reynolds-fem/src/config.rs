//! Run configuration for the command-line tools.
//!
//! Configs are plain text with `[section]` headers and `key = value` lines.
//! Parsing is strict: unknown sections or keys are errors, so a config that
//! parses today keeps meaning the same thing tomorrow. The resolved
//! configuration is embedded verbatim in every artifact header, which makes
//! a run reproducible from its outputs alone.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::solver::SolverConfig;
use crate::verification::ManufacturedCase;

/// Mesh selection: one mesh, or a refinement series for convergence runs.
#[derive(Debug, Clone, PartialEq)]
pub enum MeshSpec {
    Single { nx: usize, ny: usize },
    Series { base_nx: usize, base_ny: usize, levels: usize },
}

/// Scenario selection: a built-in case with its forcing, or a bare gap
/// configuration with zero forcing.
#[derive(Debug, Clone)]
pub enum CaseSelection {
    Named(ManufacturedCase),
    Custom,
}

impl CaseSelection {
    pub fn name(&self) -> &'static str {
        match self {
            CaseSelection::Named(case) => case.name(),
            CaseSelection::Custom => "custom",
        }
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub case: CaseSelection,
    pub model: ModelConfig,
    pub mesh: MeshSpec,
    pub solver: SolverConfig,
    pub output_dir: PathBuf,
    pub vtk: bool,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse_str(&text)
    }

    /// Parses the strict key-value format. Every key must belong to a known
    /// section and appear at most once.
    pub fn parse_str(text: &str) -> Result<RunConfig> {
        let raw = RawConfig::parse(text)?;
        RunConfig::resolve(raw)
    }

    /// Built-in scenarios runnable without a config file.
    pub fn preset(name: &str) -> Result<RunConfig> {
        let case = ManufacturedCase::from_name(name)
            .map_err(|_| Error::Config(format!("unknown preset '{name}'")))?;
        let mesh = if case.has_exact_solution() {
            MeshSpec::Single { nx: 96, ny: 32 }
        } else {
            let (nx, ny) = crate::verification::bearing_reference_mesh();
            MeshSpec::Single { nx, ny }
        };
        Ok(RunConfig {
            model: case.config.clone(),
            case: CaseSelection::Named(case),
            mesh,
            solver: SolverConfig::default(),
            output_dir: PathBuf::from("out"),
            vtk: false,
        })
    }

    /// Forcing term of the selected scenario; zero for custom gap setups.
    pub fn forcing(&self) -> Box<dyn Fn(f64, f64) -> f64 + '_> {
        match &self.case {
            CaseSelection::Named(case) => case.forcing(),
            CaseSelection::Custom => Box::new(|_, _| 0.0),
        }
    }

    /// The exact-solution case, when the scenario has one.
    pub fn manufactured_case(&self) -> Option<&ManufacturedCase> {
        match &self.case {
            CaseSelection::Named(case) if case.has_exact_solution() => Some(case),
            _ => None,
        }
    }

    /// Resolved key-value pairs embedded in artifact headers.
    pub fn provenance(&self) -> Vec<(String, String)> {
        let mut lines = vec![
            ("case".to_string(), self.case.name().to_string()),
            ("zeta".to_string(), format_float(self.model.zeta)),
            ("x_a".to_string(), format_float(self.model.x_a)),
            ("u_bar".to_string(), format_float(self.model.u_bar)),
            ("c1".to_string(), format_float(self.model.c1)),
            ("c2".to_string(), format_float(self.model.c2)),
            ("beta".to_string(), format_float(self.model.beta)),
            ("stabilization".to_string(), self.model.stabilization.to_string()),
            ("shock_capturing".to_string(), self.model.shock_capturing.to_string()),
        ];
        match self.mesh {
            MeshSpec::Single { nx, ny } => {
                lines.push(("nx".to_string(), nx.to_string()));
                lines.push(("ny".to_string(), ny.to_string()));
            }
            MeshSpec::Series { base_nx, base_ny, levels } => {
                lines.push(("base_nx".to_string(), base_nx.to_string()));
                lines.push(("base_ny".to_string(), base_ny.to_string()));
                lines.push(("levels".to_string(), levels.to_string()));
            }
        }
        lines.push(("picard_warmup".to_string(), self.solver.picard_warmup.to_string()));
        lines.push(("max_iterations".to_string(), self.solver.max_iterations.to_string()));
        lines.push(("rel_tolerance".to_string(), format_float(self.solver.rel_tolerance)));
        lines.push(("abs_tolerance".to_string(), format_float(self.solver.abs_tolerance)));
        lines.push((
            "initial_guess".to_string(),
            format_float(self.solver.initial_guess_value),
        ));
        lines.push(("linearization".to_string(), self.solver.linearization.to_string()));
        lines.push(("output".to_string(), self.output_dir.display().to_string()));
        lines.push(("vtk".to_string(), self.vtk.to_string()));
        lines
    }

    fn resolve(raw: RawConfig) -> Result<RunConfig> {
        let mut raw = raw;

        let case_name = raw.take("case", "name")?;
        let zeta = raw.take_parsed::<f64>("model", "zeta")?;
        let x_a = raw.take_parsed::<f64>("model", "x_a")?;
        let u_bar = raw.take_parsed::<f64>("model", "u_bar")?;

        let (case, mut model) = match case_name {
            Some(name) => {
                if zeta.is_some() || x_a.is_some() || u_bar.is_some() {
                    return Err(Error::Config(
                        "model keys zeta/x_a/u_bar are fixed by the named case; \
                         remove them or drop [case] name"
                            .to_string(),
                    ));
                }
                let case = ManufacturedCase::from_name(&name)
                    .map_err(|_| Error::Config(format!("unknown case '{name}'")))?;
                let model = case.config.clone();
                (CaseSelection::Named(case), model)
            }
            None => {
                let (zeta, x_a, u_bar) = match (zeta, x_a, u_bar) {
                    (Some(z), Some(x), Some(u)) => (z, x, u),
                    _ => {
                        return Err(Error::Config(
                            "either [case] name or all of [model] zeta, x_a, u_bar \
                             must be given"
                                .to_string(),
                        ))
                    }
                };
                (CaseSelection::Custom, ModelConfig::new(zeta, x_a, u_bar))
            }
        };

        if let Some(c1) = raw.take_parsed::<f64>("model", "c1")? {
            model.c1 = c1;
        }
        if let Some(c2) = raw.take_parsed::<f64>("model", "c2")? {
            model.c2 = c2;
        }
        if let Some(beta) = raw.take_parsed::<f64>("model", "beta")? {
            model.beta = beta;
        }
        if let Some(s) = raw.take("model", "stabilization")? {
            model.stabilization = s
                .parse()
                .map_err(|e: Error| Error::Config(format!("key stabilization: {e}")))?;
        }
        if let Some(sc) = raw.take_parsed::<bool>("model", "shock_capturing")? {
            model.shock_capturing = sc;
        }
        model.validate().map_err(|e| Error::Config(e.to_string()))?;

        let nx = raw.take_parsed::<usize>("mesh", "nx")?;
        let ny = raw.take_parsed::<usize>("mesh", "ny")?;
        let base_nx = raw.take_parsed::<usize>("mesh", "base_nx")?;
        let base_ny = raw.take_parsed::<usize>("mesh", "base_ny")?;
        let levels = raw.take_parsed::<usize>("mesh", "levels")?;
        let mesh = match (nx, ny, base_nx, base_ny, levels) {
            (Some(nx), Some(ny), None, None, None) => MeshSpec::Single { nx, ny },
            (None, None, Some(bx), Some(by), Some(l)) => {
                if l == 0 {
                    return Err(Error::Config("levels must be at least 1".to_string()));
                }
                MeshSpec::Series { base_nx: bx, base_ny: by, levels: l }
            }
            (None, None, None, None, None) => {
                return Err(Error::Config(
                    "[mesh] requires nx/ny or base_nx/base_ny/levels".to_string(),
                ))
            }
            _ => {
                return Err(Error::Config(
                    "[mesh] must give either nx/ny or base_nx/base_ny/levels, not a mix"
                        .to_string(),
                ))
            }
        };

        let mut solver = SolverConfig::default();
        if let Some(v) = raw.take_parsed::<usize>("solver", "picard_warmup")? {
            solver.picard_warmup = v;
        }
        if let Some(v) = raw.take_parsed::<usize>("solver", "max_iterations")? {
            solver.max_iterations = v;
        }
        if let Some(v) = raw.take_parsed::<f64>("solver", "rel_tolerance")? {
            solver.rel_tolerance = v;
        }
        if let Some(v) = raw.take_parsed::<f64>("solver", "abs_tolerance")? {
            solver.abs_tolerance = v;
        }
        if let Some(v) = raw.take_parsed::<f64>("solver", "initial_guess")? {
            solver.initial_guess_value = v;
        }
        if let Some(v) = raw.take("solver", "linearization")? {
            solver.linearization = v
                .parse()
                .map_err(|e: Error| Error::Config(format!("key linearization: {e}")))?;
        }
        solver.validate().map_err(|e| Error::Config(e.to_string()))?;

        let output_dir = raw
            .take("output", "directory")?
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("out"));
        let vtk = raw.take_parsed::<bool>("output", "vtk")?.unwrap_or(false);

        raw.ensure_empty()?;

        Ok(RunConfig { case, model, mesh, solver, output_dir, vtk })
    }
}

/// 17 significant digits, enough to reproduce the exact double.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

const SECTIONS: [&str; 5] = ["case", "model", "mesh", "solver", "output"];

struct RawConfig {
    entries: BTreeMap<(String, String), String>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<RawConfig> {
        let mut entries = BTreeMap::new();
        let mut section: Option<String> = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim().to_string();
                if !SECTIONS.contains(&name.as_str()) {
                    return Err(Error::Config(format!(
                        "line {}: unknown section [{name}]",
                        lineno + 1
                    )));
                }
                section = Some(name);
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            let section = section.as_ref().ok_or_else(|| {
                Error::Config(format!(
                    "line {}: key outside of any [section]",
                    lineno + 1
                ))
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if entries
                .insert((section.clone(), key.clone()), value)
                .is_some()
            {
                return Err(Error::Config(format!(
                    "line {}: duplicate key '{key}' in [{section}]",
                    lineno + 1
                )));
            }
        }
        Ok(RawConfig { entries })
    }

    fn take(&mut self, section: &str, key: &str) -> Result<Option<String>> {
        Ok(self.entries.remove(&(section.to_string(), key.to_string())))
    }

    fn take_parsed<T: std::str::FromStr>(
        &mut self,
        section: &str,
        key: &str,
    ) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.take(section, key)? {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|e| {
                Error::Config(format!("key {key} in [{section}]: invalid value '{v}': {e}"))
            }),
        }
    }

    /// Anything left over is a key we do not know.
    fn ensure_empty(&self) -> Result<()> {
        if let Some(((section, key), _)) = self.entries.iter().next() {
            return Err(Error::Config(format!(
                "unknown key '{key}' in [{section}]"
            )));
        }
        Ok(())
    }
}
