//! Instance files and the random instance generator.
//!
//! An instance is a JSON document:
//!
//! ```json
//! {
//!   "viewpoints": [{"d_in": 1e7, "d_out": 2e7, "cycles_per_bit": 10, "deadline": 0.02, "popularity": 0.5}, ...],
//!   "zipf": {"gamma": 0.8, "n": 100},
//!   "device": {"cache_bits": 3e8, "energy_budget": 2.5, "cpu_freq": 5e10, "k_eff": 1e-27},
//!   "homogeneous": {"task": {...}, "n": 10, "cache_units": 3}
//! }
//! ```
//!
//! Popularities are either given per viewpoint or all derived from the
//! `zipf` block. The `homogeneous` block is only read by the homogeneous
//! modes, in which case `viewpoints` may be omitted.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::homogeneous::HomogeneousInstance;
use crate::model::{self, DeviceCapability, ProjectionTask, Viewpoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZipfSpec {
    pub gamma: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousSpec {
    pub task: ProjectionTask,
    pub n: u64,
    pub cache_units: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ViewpointEntry {
    #[serde(flatten)]
    task: ProjectionTask,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    popularity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct InstanceFile {
    #[serde(default)]
    viewpoints: Vec<ViewpointEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    zipf: Option<ZipfSpec>,
    device: DeviceCapability,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    homogeneous: Option<HomogeneousSpec>,
}

/// A parsed and validated instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub viewpoints: Vec<Viewpoint>,
    pub device: DeviceCapability,
    pub homogeneous: Option<HomogeneousSpec>,
}

impl Instance {
    pub fn from_json(text: &str) -> std::result::Result<Self, (usize, usize, String)> {
        let file: InstanceFile = serde_json::from_str(text).map_err(|e| (e.line(), e.column(), e.to_string()))?;
        Self::from_file(file).map_err(|e| (0, 0, e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text).map_err(|(line, column, message)| Error::InstanceParse {
            path: path.to_path_buf(),
            line,
            column,
            message,
        })
    }

    /// Serializes with explicit popularities.
    pub fn to_json(&self) -> String {
        let file = InstanceFile {
            viewpoints: self
                .viewpoints
                .iter()
                .map(|vp| ViewpointEntry {
                    task: vp.task,
                    popularity: Some(vp.popularity),
                })
                .collect(),
            zipf: None,
            device: self.device,
            homogeneous: self.homogeneous,
        };
        serde_json::to_string_pretty(&file).expect("instance serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    fn from_file(file: InstanceFile) -> Result<Self> {
        file.device.validate()?;
        let pops: Vec<f64> = match file.zipf {
            Some(z) => {
                if z.n != file.viewpoints.len() {
                    return Err(Error::InvalidViewpoints(format!(
                        "zipf block covers {} viewpoints but {} are listed",
                        z.n,
                        file.viewpoints.len()
                    )));
                }
                if file.viewpoints.iter().any(|v| v.popularity.is_some()) {
                    return Err(Error::InvalidViewpoints(
                        "popularities given both explicitly and by zipf".into(),
                    ));
                }
                model::zipf_popularities(z.gamma, z.n)
            }
            None => file
                .viewpoints
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    v.popularity
                        .ok_or_else(|| Error::InvalidViewpoints(format!("viewpoint {i} has no popularity")))
                })
                .collect::<Result<_>>()?,
        };
        let viewpoints: Vec<Viewpoint> = file
            .viewpoints
            .iter()
            .zip(pops)
            .map(|(v, popularity)| Viewpoint {
                task: v.task,
                popularity,
            })
            .collect();
        if !viewpoints.is_empty() {
            model::validate_popularities(&viewpoints)?;
        }
        if viewpoints.is_empty() && file.homogeneous.is_none() {
            return Err(Error::InvalidViewpoints("instance has neither viewpoints nor a homogeneous block".into()));
        }
        Ok(Self {
            viewpoints,
            device: file.device,
            homogeneous: file.homogeneous,
        })
    }

    /// The homogeneous problem described by the `homogeneous` block.
    pub fn homogeneous_instance(&self) -> Result<HomogeneousInstance> {
        let spec = self
            .homogeneous
            .ok_or_else(|| Error::InvalidViewpoints("instance has no homogeneous block".into()))?;
        HomogeneousInstance::new(spec.task, spec.n, spec.cache_units, self.device)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SizeDistribution {
    Uniform,
    LogUniform,
}

/// Parameters of random heterogeneous instances: 2D FOV sizes drawn from
/// `[d_min, d_max]`, Zipf popularities, and budgets set as fractions of the
/// total 2D size and of the energy of projecting every request locally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub n: usize,
    pub d_min: f64,
    pub d_max: f64,
    pub distribution: SizeDistribution,
    pub alpha: f64,
    pub cycles_per_bit: f64,
    pub deadline: f64,
    pub gamma: f64,
    pub cache_fraction: f64,
    pub energy_fraction: f64,
    pub cpu_freq: f64,
    pub k_eff: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n: 100,
            d_min: 1e6,
            d_max: 25e6,
            distribution: SizeDistribution::Uniform,
            alpha: 2.0,
            cycles_per_bit: 10.0,
            deadline: 0.02,
            gamma: 0.8,
            cache_fraction: 0.3,
            energy_fraction: 0.25,
            cpu_freq: 5e10,
            k_eff: 1e-27,
        }
    }
}

pub fn generate(cfg: &GeneratorConfig, seed: u64) -> Result<Instance> {
    if cfg.n == 0 || !(cfg.d_min > 0.0 && cfg.d_max >= cfg.d_min) {
        return Err(Error::InvalidViewpoints(format!(
            "need n > 0 and 0 < d_min <= d_max, got n={}, [{}, {}]",
            cfg.n, cfg.d_min, cfg.d_max
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pops = model::zipf_popularities(cfg.gamma, cfg.n);
    let viewpoints = pops
        .into_iter()
        .map(|popularity| {
            let u: f64 = rng.gen();
            let d_in = match cfg.distribution {
                SizeDistribution::Uniform => cfg.d_min + u * (cfg.d_max - cfg.d_min),
                SizeDistribution::LogUniform => cfg.d_min * (cfg.d_max / cfg.d_min).powf(u),
            };
            Ok(Viewpoint {
                task: ProjectionTask::new(d_in, cfg.alpha * d_in, cfg.cycles_per_bit, cfg.deadline)?,
                popularity,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let total_d: f64 = viewpoints.iter().map(|v| v.task.d_in()).sum();
    let expected_energy: f64 = viewpoints
        .iter()
        .map(|v| v.popularity * cfg.k_eff * cfg.cpu_freq * cfg.cpu_freq * v.task.cycles())
        .sum();
    let device = DeviceCapability::new(
        cfg.cache_fraction * total_d,
        cfg.energy_fraction * expected_energy,
        cfg.cpu_freq,
        cfg.k_eff,
    )?;
    Ok(Instance {
        viewpoints,
        device,
        homogeneous: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_instance_round_trips() {
        let inst = generate(&GeneratorConfig::default(), 17).unwrap();
        let back = Instance::from_json(&inst.to_json()).unwrap();
        assert_eq!(back, inst);
        assert_eq!(generate(&GeneratorConfig::default(), 17).unwrap(), inst);
        assert_ne!(generate(&GeneratorConfig::default(), 18).unwrap(), inst);
    }

    #[test]
    fn generator_budgets() {
        let cfg = GeneratorConfig {
            n: 50,
            ..GeneratorConfig::default()
        };
        let inst = generate(&cfg, 1).unwrap();
        let total: f64 = inst.viewpoints.iter().map(|v| v.task.d_in()).sum();
        assert!((inst.device.cache_bits - 0.3 * total).abs() <= 1e-9 * total);
        for v in &inst.viewpoints {
            assert!((1e6..=25e6).contains(&v.task.d_in()));
            assert_eq!(v.task.alpha(), 2.0);
        }
    }

    #[test]
    fn zipf_block_expands() {
        let text = r#"{
            "viewpoints": [
                {"d_in": 1e7, "d_out": 2e7, "cycles_per_bit": 10, "deadline": 0.02},
                {"d_in": 2e7, "d_out": 4e7, "cycles_per_bit": 10, "deadline": 0.02}
            ],
            "zipf": {"gamma": 0.8, "n": 2},
            "device": {"cache_bits": 1e7, "energy_budget": 1.0, "cpu_freq": 5e10, "k_eff": 1e-27}
        }"#;
        let inst = Instance::from_json(text).unwrap();
        let want = model::zipf_popularities(0.8, 2);
        assert_eq!(inst.viewpoints[0].popularity, want[0]);
        assert_eq!(inst.viewpoints[1].popularity, want[1]);
    }

    #[test]
    fn syntax_error_has_position() {
        let text = "{\n  \"viewpoints\": [,\n}";
        let (line, column, _) = Instance::from_json(text).unwrap_err();
        assert_eq!(line, 2);
        assert!(column > 0);
    }

    #[test]
    fn bad_popularities_rejected() {
        let text = r#"{
            "viewpoints": [{"d_in": 1e7, "d_out": 2e7, "cycles_per_bit": 10, "deadline": 0.02, "popularity": 0.4}],
            "device": {"cache_bits": 0, "energy_budget": 0, "cpu_freq": 5e10, "k_eff": 1e-27}
        }"#;
        assert!(Instance::from_json(text).is_err());
        let bad_alpha = r#"{
            "viewpoints": [{"d_in": 1e7, "d_out": 1e7, "cycles_per_bit": 10, "deadline": 0.02, "popularity": 1}],
            "device": {"cache_bits": 0, "energy_budget": 0, "cpu_freq": 5e10, "k_eff": 1e-27}
        }"#;
        assert!(Instance::from_json(bad_alpha).is_err());
    }

    #[test]
    fn homogeneous_block() {
        let text = r#"{
            "device": {"cache_bits": 0, "energy_budget": 1.2, "cpu_freq": 1e10, "k_eff": 1e-27},
            "homogeneous": {"task": {"d_in": 1e7, "d_out": 2e7, "cycles_per_bit": 10, "deadline": 0.02}, "n": 10, "cache_units": 3}
        }"#;
        let inst = Instance::from_json(text).unwrap();
        let h = inst.homogeneous_instance().unwrap();
        assert_eq!(h.n, 10);
        assert_eq!(h.dev.cache_bits, 3e7);
        assert!(Instance::from_json(&inst.to_json()).unwrap() == inst);
    }
}
