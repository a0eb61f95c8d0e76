//! JSON run configuration shared by the batch commands.

use fps::material::{sensitivity_set, MaterialModel};
use fps::solver::SolverSettings;
use fps::ScrewSpec;
use serde::Deserialize;
use std::path::{Path, PathBuf};

/// Material selection: an inline model or the literal sweep keyword.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MaterialChoice {
    Keyword(String),
    Inline(MaterialModel),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationTarget {
    pub delta_mm: f64,
    pub force_n: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_elements")]
    pub n_elements: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    pub kappa_f: Option<f64>,
    pub calibration: Option<CalibrationTarget>,
}

fn default_elements() -> usize {
    64
}

fn default_tol() -> f64 {
    1e-6
}

fn default_max_iterations() -> usize {
    25
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            n_elements: default_elements(),
            tol: default_tol(),
            max_iterations: default_max_iterations(),
            kappa_f: None,
            calibration: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub screw: ScrewSpec,
    pub material: Option<MaterialChoice>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| format!("invalid config {}: {e}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), String> {
        if let Err(violations) = self.screw.validate() {
            let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return Err(format!("invalid screw spec: {}", list.join("; ")));
        }
        if self.solver.kappa_f.is_some() && self.solver.calibration.is_some() {
            return Err("config must set exactly one of solver.kappa_f and solver.calibration".into());
        }
        if let Some(MaterialChoice::Keyword(word)) = &self.material {
            if word != "paper-sweep" {
                return Err(format!(
                    "unknown material keyword '{word}' (expected \"paper-sweep\" or an inline material object)"
                ));
            }
        }
        if let Some(MaterialChoice::Inline(m)) = &self.material {
            m.validate().map_err(|e| e.to_string())?;
        }
        Ok(())
    }

    /// Materials to run: the sweep set or the single inline model.
    pub fn materials(&self) -> Result<Vec<MaterialModel>, String> {
        match &self.material {
            Some(MaterialChoice::Keyword(_)) => Ok(sensitivity_set()),
            Some(MaterialChoice::Inline(m)) => Ok(vec![*m]),
            None => Err("config has no material block".into()),
        }
    }

    pub fn is_sweep(&self) -> bool {
        matches!(&self.material, Some(MaterialChoice::Keyword(_)))
    }

    pub fn solver_settings(&self) -> SolverSettings {
        SolverSettings {
            tol: self.solver.tol,
            max_iterations: self.solver.max_iterations,
            ..SolverSettings::default()
        }
    }

    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.output.dir.clone())
            .unwrap_or_else(|| PathBuf::from("."))
    }
}
