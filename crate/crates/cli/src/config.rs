//! Run configuration: built-in defaults, then a preset, then the user's
//! TOML file, then command-line flags.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use elasto::init::NccParams;
use elasto::metrics::WindowSweepSpec;
use elasto::phantom::{DeformationSpec, PhantomSpec};
use elasto::render::RenderSpec;
use elasto::solver::{Method, SolverParams};
use elasto::strain::LsqParams;
use serde::Deserialize;
use toml::{Table, Value};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Sim,
    Phantom,
    Invivo,
}

impl Preset {
    /// Mechanical weights and TVD sharpness for the dataset class.
    fn values(self) -> [(&'static str, f64); 5] {
        let (alpha3, alpha3s, eta_first, eta_second, eta_m) = match self {
            Preset::Sim => (20.0, 0.045, 0.001, 0.0005, 0.001),
            Preset::Phantom => (80.0, 0.072, 0.0006, 0.0001, 0.0006),
            Preset::Invivo => (5.0, 0.1, 0.008, 0.0013, 0.008),
        };
        [
            ("alpha3", alpha3),
            ("alpha3s", alpha3s),
            ("eta_first", eta_first),
            ("eta_second", eta_second),
            ("eta_m", eta_m),
        ]
    }
}

/// Tracking method: one of the regularized solvers or a baseline.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrackMethod {
    Solver(Method),
    Ncc,
    Dp,
}

impl FromStr for TrackMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "ncc" => Ok(Self::Ncc),
            "dp" => Ok(Self::Dp),
            other => other.parse::<Method>().map(Self::Solver).map_err(|_| {
                format!("unknown method '{s}' (expected soul, l1_soul, mechsoul, l1_mechsoul, ncc or dp)")
            }),
        }
    }
}

impl std::fmt::Display for TrackMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TrackMethod::Solver(m) => write!(f, "{m}"),
            TrackMethod::Ncc => f.write_str("ncc"),
            TrackMethod::Dp => f.write_str("dp"),
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomSection {
    pub speckle: PhantomSpec,
    pub deformation: DeformationSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub method: String,
    pub params: SolverParams,
    pub ncc: NccParams,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            method: "mechsoul".into(),
            params: SolverParams::default(),
            ncc: NccParams::default(),
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoSection {
    pub out_dir: Option<PathBuf>,
    pub pre: Option<PathBuf>,
    pub post: Option<PathBuf>,
    pub field: Option<PathBuf>,
    pub estimate: Option<PathBuf>,
    pub truth: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Option<Preset>,
    pub phantom: PhantomSection,
    pub solver: SolverSection,
    /// Windows for reported strains (`track` and `strain`).
    pub strain: LsqParams,
    pub metrics: WindowSweepSpec,
    pub io: IoSection,
    pub render: RenderSpec,
}

/// Overrides taken from command-line flags.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub preset: Option<Preset>,
    pub method: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

fn table_mut<'a>(root: &'a mut Table, key: &str) -> Result<&'a mut Table, CliError> {
    root.entry(key)
        .or_insert_with(|| Value::Table(Table::new()))
        .as_table_mut()
        .ok_or_else(|| CliError::Usage(format!("config key '{key}' must be a table")))
}

fn apply_preset(root: &mut Table, preset: Preset) -> Result<(), CliError> {
    let params = table_mut(table_mut(root, "solver")?, "params")?;
    for (key, value) in preset.values() {
        params.entry(key).or_insert(Value::Float(value));
    }
    Ok(())
}

fn describe_toml_error(path: &str, text: &str, e: &toml::de::Error) -> CliError {
    let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1);
    match line {
        Some(l) => CliError::Usage(format!("{path}:{l}: {}", e.message())),
        None => CliError::Usage(format!("{path}: {}", e.message())),
    }
}

impl RunConfig {
    /// Parses `text` (from `origin`) and applies presets and overrides.
    pub fn from_toml(text: &str, origin: &str, overrides: &Overrides) -> Result<Self, CliError> {
        let mut root: Table = text.parse().map_err(|e| describe_toml_error(origin, text, &e))?;
        let file_preset = match root.get("preset") {
            Some(v) => Some(
                Preset::deserialize(v.clone())
                    .map_err(|_| CliError::Usage(format!("{origin}: unknown preset {v} (expected sim, phantom or invivo)")))?,
            ),
            None => None,
        };
        let preset = overrides.preset.or(file_preset).unwrap_or(Preset::Sim);
        apply_preset(&mut root, preset)?;
        let normalized = toml::to_string(&root).map_err(|e| CliError::Usage(e.to_string()))?;
        let mut cfg: RunConfig = toml::from_str(&normalized).map_err(|e| {
            match toml::from_str::<RunConfig>(text) {
                Err(orig) => describe_toml_error(origin, text, &orig),
                Ok(_) => CliError::Usage(format!("{origin}: {}", e.message())),
            }
        })?;
        cfg.preset = Some(preset);
        if let Some(m) = &overrides.method {
            cfg.solver.method = m.clone();
        }
        if let Some(seed) = overrides.seed {
            cfg.phantom.speckle.seed = seed;
        }
        if let Some(out) = &overrides.out {
            cfg.io.out_dir = Some(out.clone());
        }
        cfg.solver.params.report_strain = cfg.strain;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
                Self::from_toml(&text, &p.display().to_string(), overrides)
            }
            None => Self::from_toml("", "<defaults>", overrides),
        }
    }

    pub fn method(&self) -> Result<TrackMethod, CliError> {
        self.solver.method.parse().map_err(CliError::Usage)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.io.out_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_use_the_sim_preset() {
        let cfg = RunConfig::load(None, &Overrides::default()).unwrap();
        assert_eq!(cfg.preset, Some(Preset::Sim));
        assert_eq!(cfg.solver.params.alpha3, 20.0);
        assert_eq!(cfg.solver.params.alpha3s, 0.045);
        assert_eq!(cfg.method().unwrap(), TrackMethod::Solver(Method::MechSoul));
    }

    #[test]
    fn file_values_beat_presets_and_flags_beat_files() {
        let text = "preset = \"phantom\"\n[solver]\nmethod = \"soul\"\n[solver.params]\nalpha3 = 7.0\n";
        let cfg = RunConfig::from_toml(text, "t", &Overrides::default()).unwrap();
        assert_eq!(cfg.preset, Some(Preset::Phantom));
        assert_eq!(cfg.solver.params.alpha3, 7.0);
        assert_eq!(cfg.solver.params.alpha3s, 0.072);
        let flags = Overrides {
            preset: Some(Preset::Invivo),
            method: Some("ncc".into()),
            seed: Some(9),
            out: None,
        };
        let cfg = RunConfig::from_toml(text, "t", &flags).unwrap();
        assert_eq!(cfg.solver.params.eta_m, 0.008);
        assert_eq!(cfg.solver.params.alpha3, 7.0);
        assert_eq!(cfg.method().unwrap(), TrackMethod::Ncc);
        assert_eq!(cfg.phantom.speckle.seed, 9);
    }

    #[test]
    fn unknown_keys_report_the_line() {
        let text = "[solver]\nmethod = \"soul\"\n\n[solver.params]\nalpha9 = 1.0\n";
        match RunConfig::from_toml(text, "cfg.toml", &Overrides::default()) {
            Err(CliError::Usage(msg)) => assert!(msg.starts_with("cfg.toml:5:"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn method_names() {
        assert_eq!("L1-MechSOUL".parse::<TrackMethod>().unwrap(), TrackMethod::Solver(Method::L1MechSoul));
        assert_eq!("dp".parse::<TrackMethod>().unwrap(), TrackMethod::Dp);
        assert!("sad".parse::<TrackMethod>().is_err());
    }
}
