//! Model hyperparameters and named parameter tensors: construction,
//! deterministic initialization, graph binding, and manifest round-trips
//! for checkpoint files.

use std::collections::BTreeMap;

use crate::autodiff::{Graph, Real, Tensor};
use crate::encoder::{SetAbstractionConfig, VarMap};
use crate::error::{Error, Result};
use crate::io::{Container, NamedTensor};

/// Architecture hyperparameters: two set-abstraction levels plus the
/// integration MLP producing m probability rows.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    /// Structure-point count.
    pub m: usize,
    pub level1: SetAbstractionConfig,
    pub level2: SetAbstractionConfig,
    /// Hidden widths of the integration MLP; the final layer maps to m.
    pub integrator_hidden: Vec<usize>,
    /// Dropout before the final integrator layer, training mode only.
    pub dropout_rate: f64,
}

impl ModelConfig {
    /// Default architecture: 512/128 grouping centers, grouping scales
    /// (0.1, 0.2, 0.4) and (0.2, 0.4, 0.8), 128 sample points with 640
    /// feature channels, integrator widths (640, 512, m).
    pub fn standard(m: usize) -> Self {
        let level1 = SetAbstractionConfig {
            center_count: 512,
            radii: vec![0.1, 0.2, 0.4],
            samples_per_radius: vec![16, 32, 64],
            mlp_widths: vec![vec![32, 32, 64], vec![32, 32, 64], vec![32, 32, 64]],
        };
        let level2 = SetAbstractionConfig {
            center_count: 128,
            radii: vec![0.2, 0.4, 0.8],
            samples_per_radius: vec![16, 32, 64],
            mlp_widths: vec![vec![64, 64, 128], vec![64, 96, 192], vec![64, 96, 320]],
        };
        let c = level2.output_channels();
        ModelConfig {
            m,
            level1,
            level2,
            integrator_hidden: vec![c, 512],
            dropout_rate: 0.2,
        }
    }

    /// Miniature architecture for fast tests and finite-difference checks.
    /// Radii are sized for sparse test clouds (tens of points in the unit
    /// box), where the production radii would leave most balls empty.
    pub fn tiny() -> Self {
        ModelConfig {
            m: 4,
            level1: SetAbstractionConfig {
                center_count: 8,
                radii: vec![0.7, 1.4],
                samples_per_radius: vec![4, 8],
                mlp_widths: vec![vec![8, 8], vec![8, 8]],
            },
            level2: SetAbstractionConfig {
                center_count: 4,
                radii: vec![0.9, 1.8],
                samples_per_radius: vec![4, 4],
                mlp_widths: vec![vec![8, 16], vec![8, 16]],
            },
            integrator_hidden: vec![32, 16],
            dropout_rate: 0.2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::invalid("model", "m must be ≥ 1"));
        }
        self.level1.validate()?;
        self.level2.validate()?;
        if self.level2.center_count > self.level1.center_count {
            return Err(Error::invalid(
                "model",
                "level 2 cannot use more centers than level 1 produces",
            ));
        }
        if self.integrator_hidden.is_empty() || self.integrator_hidden.contains(&0) {
            return Err(Error::invalid("model", "integrator widths must be nonempty and ≥ 1"));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::invalid("model", "dropout rate must be in [0, 1)"));
        }
        Ok(())
    }

    pub fn levels(&self) -> Vec<SetAbstractionConfig> {
        vec![self.level1.clone(), self.level2.clone()]
    }

    /// Feature channels c of the encoded cloud.
    pub fn feature_channels(&self) -> usize {
        self.level2.output_channels()
    }

    /// Sample-point count l of the encoded cloud.
    pub fn sample_count(&self) -> usize {
        self.level2.center_count
    }

    /// Smallest admissible input cloud.
    pub fn min_input_points(&self) -> usize {
        self.level1.center_count
    }

    /// Every parameter tensor the model owns, as (name, shape), in a fixed
    /// order. Weights are fan_in×fan_out, biases fan_out.
    pub fn parameter_specs(&self) -> Vec<(String, Vec<usize>)> {
        let mut specs = Vec::new();
        let mut level = |prefix: &str, input: usize, config: &SetAbstractionConfig| {
            for (s, widths) in config.mlp_widths.iter().enumerate() {
                let mut fan_in = input;
                for (j, &w) in widths.iter().enumerate() {
                    specs.push((format!("{}.scale{}.layer{}.weight", prefix, s, j), vec![fan_in, w]));
                    specs.push((format!("{}.scale{}.layer{}.bias", prefix, s, j), vec![w]));
                    fan_in = w;
                }
            }
        };
        level("sa1", 3, &self.level1);
        level("sa2", 3 + self.level1.output_channels(), &self.level2);
        let mut fan_in = self.feature_channels();
        for (j, &w) in self
            .integrator_hidden
            .iter()
            .chain(std::iter::once(&self.m))
            .enumerate()
        {
            specs.push((format!("integrator.layer{}.weight", j), vec![fan_in, w]));
            specs.push((format!("integrator.layer{}.bias", j), vec![w]));
            fan_in = w;
        }
        specs
    }

    /// Record the architecture in a container manifest.
    pub fn write_manifest(&self, container: &mut Container) -> Result<()> {
        container.set("m", self.m)?;
        container.set("dropout", self.dropout_rate)?;
        for (key, level) in [("level1", &self.level1), ("level2", &self.level2)] {
            container.set(&format!("{}.centers", key), level.center_count)?;
            container.set(&format!("{}.radii", key), join(&level.radii))?;
            container.set(&format!("{}.samples", key), join(&level.samples_per_radius))?;
            let widths = level
                .mlp_widths
                .iter()
                .map(|ws| join(ws))
                .collect::<Vec<_>>()
                .join(";");
            container.set(&format!("{}.widths", key), widths)?;
        }
        container.set("integrator.hidden", join(&self.integrator_hidden))?;
        Ok(())
    }

    /// Rebuild the architecture recorded by [`write_manifest`].
    pub fn read_manifest(container: &Container) -> Result<Self> {
        let level = |key: &str| -> Result<SetAbstractionConfig> {
            Ok(SetAbstractionConfig {
                center_count: container.get_parsed(&format!("{}.centers", key))?,
                radii: split(container, &format!("{}.radii", key))?,
                samples_per_radius: split(container, &format!("{}.samples", key))?,
                mlp_widths: container
                    .get(&format!("{}.widths", key))
                    .ok_or_else(|| Error::CorruptManifest(format!("missing key '{}.widths'", key)))?
                    .split(';')
                    .map(|chunk| parse_list(chunk, key))
                    .collect::<Result<_>>()?,
            })
        };
        let config = ModelConfig {
            m: container.get_parsed("m")?,
            dropout_rate: container.get_parsed("dropout")?,
            level1: level("level1")?,
            level2: level("level2")?,
            integrator_hidden: split(container, "integrator.hidden")?,
        };
        config.validate()?;
        Ok(config)
    }
}

fn join<V: std::fmt::Display>(values: &[V]) -> String {
    values
        .iter()
        .map(V::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_list<V: std::str::FromStr>(raw: &str, key: &str) -> Result<Vec<V>> {
    raw.split(',')
        .map(|tok| {
            tok.parse()
                .map_err(|_| Error::CorruptManifest(format!("key '{}' has bad value '{}'", key, tok)))
        })
        .collect()
}

fn split<V: std::str::FromStr>(container: &Container, key: &str) -> Result<Vec<V>> {
    let raw = container
        .get(key)
        .ok_or_else(|| Error::CorruptManifest(format!("missing key '{}'", key)))?;
    parse_list(raw, key)
}

/// The model's named parameter tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T: Real> {
    pub tensors: BTreeMap<String, Tensor<T>>,
}

impl<T: Real> ModelParams<T> {
    /// Xavier-uniform weights (±√(6/(fan_in+fan_out))), zero biases, drawn
    /// in the fixed [`ModelConfig::parameter_specs`] order.
    pub fn init(config: &ModelConfig, rng: &mut impl rand::Rng) -> Result<Self> {
        config.validate()?;
        let mut tensors = BTreeMap::new();
        for (name, shape) in config.parameter_specs() {
            let tensor = if shape.len() == 2 {
                let bound = (6.0 / (shape[0] + shape[1]) as f64).sqrt();
                let data = (0..shape[0] * shape[1])
                    .map(|_| T::from_f64(rng.gen_range(-bound..bound)))
                    .collect();
                Tensor::new(shape, data)?
            } else {
                Tensor::zeros(shape)
            };
            tensors.insert(name, tensor);
        }
        Ok(ModelParams { tensors })
    }

    /// Bind every tensor as a trainable graph parameter.
    pub fn bind(&self, graph: &mut Graph<T>) -> VarMap {
        self.tensors
            .iter()
            .map(|(name, t)| (name.clone(), graph.parameter(t.clone())))
            .collect()
    }

    /// Bind every tensor as a constant (inference: no gradients tracked).
    pub fn bind_frozen(&self, graph: &mut Graph<T>) -> VarMap {
        self.tensors
            .iter()
            .map(|(name, t)| (name.clone(), graph.constant(t.clone())))
            .collect()
    }

    pub fn cast<U: Real>(&self) -> ModelParams<U> {
        ModelParams {
            tensors: self
                .tensors
                .iter()
                .map(|(name, t)| (name.clone(), t.cast()))
                .collect(),
        }
    }

    /// Check the tensor set matches the architecture exactly.
    pub fn validate_against(&self, config: &ModelConfig) -> Result<()> {
        let specs = config.parameter_specs();
        if specs.len() != self.tensors.len() {
            return Err(Error::invalid(
                "parameters",
                format!("expected {} tensors, found {}", specs.len(), self.tensors.len()),
            ));
        }
        for (name, shape) in specs {
            let t = self
                .tensors
                .get(&name)
                .ok_or_else(|| Error::invalid("parameters", format!("missing tensor '{}'", name)))?;
            if t.shape() != shape.as_slice() {
                return Err(Error::shape(
                    "parameters",
                    format!("tensor '{}' is {:?}, expected {:?}", name, t.shape(), shape),
                ));
            }
        }
        Ok(())
    }
}

impl ModelParams<f32> {
    /// Append every parameter as an f32 tensor record.
    pub fn write_tensors(&self, container: &mut Container) -> Result<()> {
        for (name, t) in &self.tensors {
            container.push_tensor(NamedTensor::new(
                name.clone(),
                t.shape().to_vec(),
                t.data().to_vec(),
            )?);
        }
        Ok(())
    }

    /// Extract the parameters an architecture demands from tensor records.
    pub fn read_tensors(container: &Container, config: &ModelConfig) -> Result<Self> {
        let mut tensors = BTreeMap::new();
        for (name, shape) in config.parameter_specs() {
            let record = container.tensor(&name).ok_or_else(|| {
                Error::CorruptManifest(format!("missing parameter tensor '{}'", name))
            })?;
            if record.dims != shape {
                return Err(Error::shape(
                    "checkpoint",
                    format!("tensor '{}' is {:?}, expected {:?}", name, record.dims, shape),
                ));
            }
            tensors.insert(name, Tensor::new(shape, record.data.clone())?);
        }
        Ok(ModelParams { tensors })
    }
}

/// A tiny ready-to-run model for tests.
pub fn tiny_config() -> (ModelConfig, ModelParams<f32>) {
    let config = ModelConfig::tiny();
    let params = ModelParams::init(&config, &mut crate::rng::seeded(9)).unwrap();
    (config, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn standard_config_dimensions() {
        let config = ModelConfig::standard(16);
        config.validate().unwrap();
        assert_eq!(config.feature_channels(), 640);
        assert_eq!(config.sample_count(), 128);
        assert_eq!(config.min_input_points(), 512);
        assert_eq!(config.level1.output_channels(), 192);
        assert_eq!(config.integrator_hidden, vec![640, 512]);
    }

    #[test]
    fn parameter_specs_cover_every_layer() {
        let config = ModelConfig::tiny();
        let specs = config.parameter_specs();
        // 2 levels × 2 scales × 2 layers + 3 integrator layers, ×2 for bias.
        assert_eq!(specs.len(), (2 * 2 * 2 + 3) * 2);
        let (name, shape) = &specs[0];
        assert_eq!(name, "sa1.scale0.layer0.weight");
        assert_eq!(shape, &vec![3, 8]);
        // Level-2 inputs are offset ⊕ level-1 features.
        let sa2 = specs
            .iter()
            .find(|(n, _)| n == "sa2.scale0.layer0.weight")
            .unwrap();
        assert_eq!(sa2.1, vec![3 + 16, 8]);
        let last = specs
            .iter()
            .find(|(n, _)| n == "integrator.layer2.weight")
            .unwrap();
        assert_eq!(last.1, vec![16, config.m]);
    }

    #[test]
    fn init_is_seed_deterministic_and_in_bounds() {
        let config = ModelConfig::tiny();
        let a = ModelParams::<f32>::init(&config, &mut seeded(3)).unwrap();
        let b = ModelParams::<f32>::init(&config, &mut seeded(3)).unwrap();
        let c = ModelParams::<f32>::init(&config, &mut seeded(4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        for (name, shape) in config.parameter_specs() {
            let t = &a.tensors[&name];
            if shape.len() == 2 {
                let bound = (6.0 / (shape[0] + shape[1]) as f32).sqrt();
                assert!(t.data().iter().all(|v| v.abs() <= bound));
                assert!(t.data().iter().any(|&v| v != 0.0));
            } else {
                assert!(t.data().iter().all(|&v| v == 0.0));
            }
        }
        a.validate_against(&config).unwrap();
    }

    #[test]
    fn manifest_round_trip() {
        let config = ModelConfig::standard(16);
        let mut container = Container::new();
        container.set("kind", "checkpoint").unwrap();
        config.write_manifest(&mut container).unwrap();
        let back = ModelConfig::read_manifest(&container).unwrap();
        assert_eq!(config, back);
    }

    #[test]
    fn tensor_round_trip_is_bitwise() {
        let (config, params) = tiny_config();
        let mut container = Container::new();
        config.write_manifest(&mut container).unwrap();
        params.write_tensors(&mut container).unwrap();
        let back = ModelParams::read_tensors(&container, &config).unwrap();
        assert_eq!(params, back);
    }

    #[test]
    fn read_tensors_rejects_wrong_shape() {
        let (config, params) = tiny_config();
        let mut container = Container::new();
        params.write_tensors(&mut container).unwrap();
        let mut wrong = config.clone();
        wrong.integrator_hidden = vec![32, 8];
        assert!(ModelParams::read_tensors(&container, &wrong).is_err());
    }

    #[test]
    fn validate_rejects_inconsistent_configs() {
        let mut config = ModelConfig::tiny();
        config.m = 0;
        assert!(config.validate().is_err());
        let mut config = ModelConfig::tiny();
        config.dropout_rate = 1.0;
        assert!(config.validate().is_err());
        let mut config = ModelConfig::tiny();
        config.level2.center_count = 99;
        assert!(config.validate().is_err());
    }
}
