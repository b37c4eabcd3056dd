//! Run configuration files.
//!
//! Configs are TOML. Every table rejects unknown keys, so a typo is an
//! error rather than a silently ignored setting. The schema:
//!
//! ```toml
//! [system]
//! potential = "coulomb"            # or "harmonic" (oscillator check only)
//! nuclei = [
//!     { element = "Li", xyz = [0.0, 0.0, 0.0] },
//!     { charge = 1, xyz = [3.015, 0.0, 0.0] },
//! ]
//! # alternatively a hydrogen rectangle instead of `nuclei`:
//! # h4 = { theta = 90.0, radius = 3.2843 }
//!
//! [electrons]                      # optional, both or neither
//! n_up = 2
//! n_down = 1
//!
//! [run]
//! seed = 7
//! proposal = "all_electron"        # or "single_electron"
//! reference_energy = -7.47806      # optional, used for error curves
//!
//! [ansatz]                         # kind, hidden, layers, sortlets
//! [train]                          # iterations, walkers, sweeps, burn_in,
//!                                  # adapt_window, clip, checkpoint_every
//! [train.adam]                     # lr, beta1, beta2, eps, decay
//! [evaluate]                       # estimates, equilibration, spacing
//! [probe]                          # trials, paths, resolution, dim, draws
//! [toy1d]                          # lambda, half_width, grid_points,
//!                                  # theta, samples
//! ```
//!
//! A config needs either a `[system]` or a `[toy1d]` table.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sortlet_core::backbone::ModelConfig;
use sortlet_core::geometry::{atomic_number, Nucleus, PotentialKind, SystemSpec};
use sortlet_core::optimizer::TrainConfig;
use sortlet_core::sampler::Proposal;
use sortlet_core::toy::Toy1d;
use sortlet_core::GeometryError;

/// Default circle radius for the hydrogen rectangle, in Bohr.
pub const H4_RADIUS: f64 = 3.2843;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{0}")]
    Syntax(#[from] toml::de::Error),
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

fn field_error(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { field: field.into(), message: message.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NucleusEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element: Option<String>,
    /// Signed so that a negative charge is reported as such rather than as
    /// a type error.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charge: Option<i64>,
    pub xyz: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct H4Section {
    /// Angle in degrees subtended by the short sides.
    pub theta: f64,
    #[serde(default = "default_h4_radius")]
    pub radius: f64,
}

fn default_h4_radius() -> f64 {
    H4_RADIUS
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    #[serde(default)]
    pub nuclei: Vec<NucleusEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h4: Option<H4Section>,
    #[serde(default)]
    pub potential: PotentialKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectronsSection {
    pub n_up: Option<usize>,
    pub n_down: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
    pub proposal: Proposal,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_energy: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateSection {
    pub estimates: usize,
    pub equilibration: usize,
    /// Metropolis steps between consecutive estimates.
    pub spacing: usize,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        Self { estimates: 200, equilibration: 500, spacing: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeSection {
    pub trials: usize,
    pub paths: usize,
    pub resolution: usize,
    pub dim: usize,
    pub draws: usize,
}

impl Default for ProbeSection {
    fn default() -> Self {
        Self { trials: 1000, paths: 100, resolution: 1000, dim: 50, draws: 10_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToySection {
    pub lambda: f64,
    pub half_width: f64,
    pub grid_points: usize,
    pub theta: [f64; 3],
    pub samples: usize,
}

impl Default for ToySection {
    fn default() -> Self {
        let t = Toy1d::default();
        Self {
            lambda: t.lambda,
            half_width: t.half_width,
            grid_points: t.grid_points,
            theta: [0.45, 0.03, 0.2],
            samples: 200_000,
        }
    }
}

impl ToySection {
    pub fn toy(&self) -> Toy1d {
        Toy1d { lambda: self.lambda, half_width: self.half_width, grid_points: self.grid_points }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub electrons: Option<ElectronsSection>,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub ansatz: ModelConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub evaluate: EvaluateSection,
    #[serde(default)]
    pub probe: ProbeSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub toy1d: Option<ToySection>,
}

/// Command-line values that replace config entries before hashing.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub iterations: Option<u64>,
    pub walkers: Option<usize>,
    pub sortlets: Option<usize>,
    pub seed: Option<u64>,
    pub lr: Option<f64>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.system.is_none() && self.toy1d.is_none() {
            return Err(field_error("system", "missing; a config needs [system] or [toy1d]"));
        }
        if self.system.is_some() {
            self.system_spec()?;
        }
        if self.ansatz.sortlets == 0 {
            return Err(field_error("ansatz.sortlets", "must be >= 1"));
        }
        if self.ansatz.hidden == 0 {
            return Err(field_error("ansatz.hidden", "must be >= 1"));
        }
        if self.train.walkers == 0 {
            return Err(field_error("train.walkers", "must be >= 1"));
        }
        if !(self.train.adam.lr > 0.0) {
            return Err(field_error("train.adam.lr", "must be positive"));
        }
        if let Some(t) = &self.toy1d {
            if t.grid_points < 3 || !(t.half_width > 0.0) {
                return Err(field_error("toy1d", "needs grid_points >= 3 and half_width > 0"));
            }
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        if let Some(v) = o.iterations {
            self.train.iterations = v;
        }
        if let Some(v) = o.walkers {
            self.train.walkers = v;
        }
        if let Some(v) = o.sortlets {
            self.ansatz.sortlets = v;
        }
        if let Some(v) = o.seed {
            self.run.seed = v;
        }
        if let Some(v) = o.lr {
            self.train.adam.lr = v;
        }
        self.validate()
    }

    /// The validated molecule described by `[system]` and `[electrons]`.
    pub fn system_spec(&self) -> Result<SystemSpec, ConfigError> {
        let section = self.system.as_ref().ok_or_else(|| field_error("system", "missing"))?;
        let nuclei = match (&section.h4, section.nuclei.is_empty()) {
            (Some(_), false) => return Err(field_error("system", "give either nuclei or h4, not both")),
            (Some(h4), true) => SystemSpec::h4_rectangle(h4.theta, h4.radius)?.nuclei().to_vec(),
            (None, true) => return Err(field_error("system.nuclei", "at least one nucleus is required")),
            (None, false) => section
                .nuclei
                .iter()
                .enumerate()
                .map(|(i, n)| nucleus(i, n))
                .collect::<Result<Vec<_>, _>>()?,
        };
        let total: usize = nuclei.iter().map(|n| n.charge as usize).sum();
        let (n_up, n_down) = match self.electrons {
            None | Some(ElectronsSection { n_up: None, n_down: None }) => {
                let up = total.div_ceil(2);
                (up, total - up)
            }
            Some(ElectronsSection { n_up: Some(u), n_down: Some(d) }) => (u, d),
            Some(_) => return Err(field_error("electrons", "give both n_up and n_down or neither")),
        };
        Ok(SystemSpec::new(nuclei, n_up, n_down, section.potential)?)
    }

    pub fn toy(&self) -> Result<ToySection, ConfigError> {
        self.toy1d.ok_or_else(|| field_error("toy1d", "missing"))
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn nucleus(index: usize, n: &NucleusEntry) -> Result<Nucleus, ConfigError> {
    let field = format!("system.nuclei[{index}]");
    let charge = match (&n.element, n.charge) {
        (Some(e), None) => atomic_number(e).map_err(|err| field_error(&field, err.to_string()))?,
        (None, Some(c)) if c >= 1 && c <= u32::MAX as i64 => c as u32,
        (None, Some(c)) => return Err(field_error(&field, format!("charge must be >= 1, got {c}"))),
        _ => return Err(field_error(&field, "give exactly one of element or charge")),
    };
    if n.xyz.iter().any(|x| !x.is_finite()) {
        return Err(field_error(&field, "xyz must be finite"));
    }
    Ok(Nucleus { position: n.xyz, charge })
}

/// Parse a config and return only its molecule.
pub fn load_system(text: &str) -> Result<SystemSpec, ConfigError> {
    RunConfig::parse(text)?.system_spec()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lithium_defaults_to_aufbau_split() {
        let s = load_system("[system]\nnuclei = [{ element = \"Li\", xyz = [0, 0, 0] }]\n").unwrap();
        assert_eq!((s.nuclei().len(), s.n_up(), s.n_down()), (1, 2, 1));
    }

    #[test]
    fn hydrogen_has_no_down_electron() {
        let s = load_system("[system]\nnuclei = [{ charge = 1, xyz = [0, 0, 0] }]\n").unwrap();
        assert_eq!((s.n_up(), s.n_down()), (1, 0));
    }

    #[test]
    fn h4_square_sits_on_a_circle() {
        let s = load_system("[system]\nh4 = { theta = 90.0 }\n").unwrap();
        assert_eq!((s.n_up(), s.n_down()), (2, 2));
        for n in s.nuclei() {
            let r = n.position.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((r - H4_RADIUS).abs() < 1e-12);
        }
    }

    #[test]
    fn rejections_name_the_field() {
        let neg = load_system("[system]\nnuclei = [{ charge = -1, xyz = [0, 0, 0] }]\n").unwrap_err();
        assert!(neg.to_string().contains("system.nuclei[0]") && neg.to_string().contains("-1"), "{neg}");

        let dup = "[system]\nnuclei = [{ charge = 1, xyz = [0, 0, 1] }, { charge = 1, xyz = [0, 0, 1] }]\n";
        assert!(matches!(load_system(dup), Err(ConfigError::Geometry(GeometryError::DuplicateNuclei { .. }))));

        let unknown = load_system("[system]\nnuclei = [{ charge = 1, xyz = [0, 0, 0] }]\ncolour = 3\n").unwrap_err();
        assert!(unknown.to_string().contains("colour"), "{unknown}");

        let unknown_table = RunConfig::parse("[system]\nh4 = { theta = 90.0 }\n[trian]\n").unwrap_err();
        assert!(unknown_table.to_string().contains("trian"), "{unknown_table}");

        let both = "[system]\nnuclei = [{ element = \"H\", charge = 1, xyz = [0, 0, 0] }]\n";
        assert!(load_system(both).unwrap_err().to_string().contains("exactly one"));

        let half = "[system]\nnuclei = [{ charge = 3, xyz = [0, 0, 0] }]\n[electrons]\nn_up = 2\n";
        assert!(load_system(half).unwrap_err().to_string().contains("electrons"));

        assert!(RunConfig::parse("[run]\nseed = 1\n").is_err());
    }

    #[test]
    fn electron_override_makes_an_ion() {
        let s = load_system("[system]\nnuclei = [{ element = \"Li\", xyz = [0, 0, 0] }]\n[electrons]\nn_up = 1\nn_down = 1\n").unwrap();
        assert_eq!(s.n_electrons(), 2);
    }

    #[test]
    fn parsing_and_hashing_are_deterministic() {
        let text = "[system]\nnuclei = [{ element = \"Be\", xyz = [0, 0, 0] }]\n[run]\nseed = 3\n";
        let a = RunConfig::parse(text).unwrap();
        let b = RunConfig::parse(text).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
        let mut c = a.clone();
        c.apply(&Overrides { sortlets: Some(4), ..Default::default() }).unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn shipped_configs_parse() {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
        let mut n = 0;
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            let text = std::fs::read_to_string(&path).unwrap();
            RunConfig::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
        assert!(n >= 8);
    }
}
