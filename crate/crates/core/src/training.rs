//! Unsupervised training: Chamfer reconstruction loss, optional PCA
//! axis-swap augmentation with an MSE consistency term, a deterministic
//! epoch loop with parallel batch evaluation, and checkpoint persistence.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom as _;
use rayon::prelude::*;

use crate::autodiff::{adam_step, AdamConfig, AdamState, Graph, Mode, Real, Tensor, Var};
use crate::error::{Error, Result};
use crate::geometry::{
    axis_swap_augment, consistency_rotation, farthest_point_sample, principal_axes, Permutation,
    PointCloud,
};
use crate::integrator::forward;
use crate::io::{Container, NamedTensor};
use crate::model::{ModelConfig, ModelParams};
use crate::rng::stream;

/// rng stream labels, mixed with the master seed.
const TAG_INIT: u64 = 1;
const TAG_SHUFFLE: u64 = 2;
const TAG_ITEM: u64 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Augmentation {
    None,
    PcaAxisSwap,
}

impl fmt::Display for Augmentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Augmentation::None => "none",
            Augmentation::PcaAxisSwap => "pca_axis_swap",
        })
    }
}

impl FromStr for Augmentation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Augmentation::None),
            "pca_axis_swap" => Ok(Augmentation::PcaAxisSwap),
            other => Err(Error::invalid(
                "augmentation",
                format!("'{}' (expected none|pca_axis_swap)", other),
            )),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Structure-point count; must agree with the model architecture.
    pub m: usize,
    /// Every dataset cloud is FPS-resampled to this count before training.
    pub input_points: usize,
    pub augmentation: Augmentation,
    pub consistency_weight: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 8,
            learning_rate: 1e-3,
            m: 16,
            input_points: 2048,
            augmentation: Augmentation::None,
            consistency_weight: 1.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::invalid("train", "epochs and batch_size must be ≥ 1"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::invalid("train", "learning_rate must be > 0"));
        }
        if !(self.consistency_weight >= 0.0) {
            return Err(Error::invalid("train", "consistency_weight must be ≥ 0"));
        }
        if self.m == 0 || self.input_points == 0 {
            return Err(Error::invalid("train", "m and input_points must be ≥ 1"));
        }
        Ok(())
    }
}

/// Mean per-shape losses of one epoch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    pub chamfer: f64,
    pub consistency: f64,
    pub total: f64,
}

/// Adam moments per parameter tensor; steps advance in lockstep.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub states: BTreeMap<String, AdamState<f32>>,
}

/// Everything needed to resume or deploy a trained model.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub params: ModelParams<f32>,
    pub optimizer: Option<OptimizerState>,
    pub augmentation: Augmentation,
    pub epochs_completed: usize,
    pub seed: u64,
    /// Stored in the checkpoint at f32 precision.
    pub history: Vec<EpochLoss>,
}

/// MSE between the augmented-shape structure points and the rotation image
/// of the original ones (both m×3, compared in the augmented frame).
pub fn consistency_loss<T: Real>(
    graph: &mut Graph<T>,
    s_orig: Var,
    s_aug: Var,
    rotation: &[[f64; 3]; 3],
) -> Result<Var> {
    // Row-vector form of s' = R·s is s·Rᵀ.
    let mut rt = Vec::with_capacity(9);
    for k in 0..3 {
        for j in 0..3 {
            rt.push(T::from_f64(rotation[j][k]));
        }
    }
    let rt = graph.constant(Tensor::new(vec![3, 3], rt)?);
    let transformed = graph.matmul(s_orig, rt)?;
    graph.mse(s_aug, transformed)
}

struct ItemResult {
    grads: Vec<Tensor<f32>>,
    chamfer: f64,
    consistency: f64,
    total: f64,
}

fn cloud_leaf(graph: &mut Graph<f32>, cloud: &PointCloud) -> Result<Var> {
    let mut data = Vec::with_capacity(cloud.points.len() * 3);
    for p in &cloud.points {
        for d in 0..3 {
            data.push(p[d] as f32);
        }
    }
    Ok(graph.constant(Tensor::new(vec![cloud.points.len(), 3], data)?))
}

/// One training item: forward (plus the augmented pass when enabled),
/// backward, and gradient extraction in parameter-name order.
fn run_item(
    cloud: &PointCloud,
    model_config: &ModelConfig,
    config: &TrainConfig,
    params: &ModelParams<f32>,
    names: &[String],
    epoch: usize,
    index: usize,
) -> Result<ItemResult> {
    let mut rng = stream(config.seed, &[TAG_ITEM, epoch as u64, index as u64]);
    let mut graph = Graph::new();
    let vars = params.bind(&mut graph);
    let out = forward(&mut graph, cloud, model_config, &vars, Mode::Train, &mut rng)?;
    let x = cloud_leaf(&mut graph, cloud)?;
    let rec = graph.chamfer(out.structure_points, x)?;

    let (loss, chamfer_val, consistency_val) = match config.augmentation {
        Augmentation::None => (rec, graph.value(rec).item() as f64, 0.0),
        Augmentation::PcaAxisSwap => {
            let frame = principal_axes(cloud)?;
            let perm = Permutation::random(&mut rng);
            let augmented = axis_swap_augment(cloud, &frame, perm);
            let out_aug =
                forward(&mut graph, &augmented, model_config, &vars, Mode::Train, &mut rng)?;
            let x_aug = cloud_leaf(&mut graph, &augmented)?;
            let rec_aug = graph.chamfer(out_aug.structure_points, x_aug)?;
            let rotation = consistency_rotation(&frame, perm);
            let cons = consistency_loss(
                &mut graph,
                out.structure_points,
                out_aug.structure_points,
                &rotation,
            )?;
            let rec_sum = graph.add(rec, rec_aug)?;
            let rec_mean = graph.scale(rec_sum, 0.5)?;
            let cons_weighted = graph.scale(cons, config.consistency_weight as f32)?;
            let total = graph.add(rec_mean, cons_weighted)?;
            (
                total,
                graph.value(rec_mean).item() as f64,
                graph.value(cons).item() as f64,
            )
        }
    };
    let total_val = graph.value(loss).item() as f64;
    if !total_val.is_finite() {
        return Err(Error::NonFinite { op: "train" });
    }
    graph.backward(loss)?;
    let grads = names
        .iter()
        .map(|name| {
            let var = vars[name];
            graph
                .grad(var)
                .cloned()
                .unwrap_or_else(|| Tensor::zeros(graph.value(var).shape().to_vec()))
        })
        .collect();
    Ok(ItemResult {
        grads,
        chamfer: chamfer_val,
        consistency: consistency_val,
        total: total_val,
    })
}

/// Train on a shape collection. Deterministic per seed: parameter init,
/// epoch shuffles, dropout, and augmentation draws all derive from
/// `config.seed`; batch items run in parallel but gradients reduce in
/// index order and a single owner applies the optimizer step.
pub fn train(
    dataset: &[PointCloud],
    model_config: &ModelConfig,
    config: &TrainConfig,
) -> Result<Checkpoint> {
    train_with_progress(dataset, model_config, config, &mut |_| {})
}

/// [`train`], invoking `progress` after each completed epoch.
pub fn train_with_progress(
    dataset: &[PointCloud],
    model_config: &ModelConfig,
    config: &TrainConfig,
    progress: &mut dyn FnMut(&EpochLoss),
) -> Result<Checkpoint> {
    config.validate()?;
    model_config.validate()?;
    if config.m != model_config.m {
        return Err(Error::invalid(
            "train",
            format!("config m={} but model m={}", config.m, model_config.m),
        ));
    }
    if dataset.is_empty() {
        return Err(Error::invalid("train", "empty dataset"));
    }

    // FPS-resample every cloud to the configured input size up front.
    let dataset: Vec<PointCloud> = dataset
        .iter()
        .enumerate()
        .map(|(i, cloud)| {
            if cloud.points.len() < config.input_points {
                return Err(Error::invalid(
                    "train",
                    format!(
                        "shape {} has {} points, need ≥ {}",
                        i,
                        cloud.points.len(),
                        config.input_points
                    ),
                ));
            }
            let picks = farthest_point_sample(cloud, config.input_points)?;
            PointCloud::new(picks.iter().map(|&j| cloud.points[j]).collect())
        })
        .collect::<Result<_>>()?;

    let mut params =
        ModelParams::<f32>::init(model_config, &mut stream(config.seed, &[TAG_INIT]))?;
    let names: Vec<String> = params.tensors.keys().cloned().collect();
    let mut optimizer = OptimizerState {
        states: names
            .iter()
            .map(|n| (n.clone(), AdamState::new(params.tensors[n].shape().to_vec())))
            .collect(),
    };
    let adam = AdamConfig {
        learning_rate: config.learning_rate,
        ..AdamConfig::default()
    };

    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let mut order: Vec<usize> = (0..dataset.len()).collect();
        order.shuffle(&mut stream(config.seed, &[TAG_SHUFFLE, epoch as u64]));

        let mut sums = (0.0, 0.0, 0.0);
        for batch in order.chunks(config.batch_size) {
            let results: Vec<ItemResult> = batch
                .par_iter()
                .map(|&index| {
                    run_item(
                        &dataset[index],
                        model_config,
                        config,
                        &params,
                        &names,
                        epoch,
                        index,
                    )
                    .map_err(|e| {
                        Error::invalid("train", format!("shape {} failed: {}", index, e))
                    })
                })
                .collect::<Result<_>>()?;

            // Mean gradient over the batch, reduced in index order.
            let scale = 1.0 / results.len() as f32;
            for (slot, name) in names.iter().enumerate() {
                let mut mean = Tensor::<f32>::zeros(params.tensors[name].shape().to_vec());
                for item in &results {
                    for (acc, &g) in mean.data_mut().iter_mut().zip(item.grads[slot].data()) {
                        *acc += g;
                    }
                }
                for v in mean.data_mut() {
                    *v *= scale;
                }
                adam_step(
                    params.tensors.get_mut(name).unwrap(),
                    &mean,
                    optimizer.states.get_mut(name).unwrap(),
                    &adam,
                )?;
            }
            for item in &results {
                sums.0 += item.chamfer;
                sums.1 += item.consistency;
                sums.2 += item.total;
            }
        }
        let n = dataset.len() as f64;
        let loss = EpochLoss {
            epoch,
            chamfer: sums.0 / n,
            consistency: sums.1 / n,
            total: sums.2 / n,
        };
        progress(&loss);
        history.push(loss);
    }

    Ok(Checkpoint {
        config: model_config.clone(),
        params,
        optimizer: Some(optimizer),
        augmentation: config.augmentation,
        epochs_completed: config.epochs,
        seed: config.seed,
        history,
    })
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<()> {
    let mut container = Container::new();
    container.set("kind", "checkpoint")?;
    ckpt.config.write_manifest(&mut container)?;
    container.set("augmentation", ckpt.augmentation)?;
    container.set("epochs", ckpt.epochs_completed)?;
    container.set("seed", ckpt.seed)?;
    ckpt.params.write_tensors(&mut container)?;
    let histories: [(&str, fn(&EpochLoss) -> f64); 3] = [
        ("history.chamfer", |e| e.chamfer),
        ("history.consistency", |e| e.consistency),
        ("history.total", |e| e.total),
    ];
    for (name, pick) in histories {
        container.push_tensor(NamedTensor::new(
            name,
            vec![ckpt.history.len()],
            ckpt.history.iter().map(|e| pick(e) as f32).collect(),
        )?);
    }
    if let Some(op) = &ckpt.optimizer {
        let step = op.states.values().next().map_or(0, |s| s.step);
        container.set("adam.step", step)?;
        for (name, state) in &op.states {
            container.push_tensor(NamedTensor::new(
                format!("adam.m.{}", name),
                state.first_moment.shape().to_vec(),
                state.first_moment.data().to_vec(),
            )?);
            container.push_tensor(NamedTensor::new(
                format!("adam.v.{}", name),
                state.second_moment.shape().to_vec(),
                state.second_moment.data().to_vec(),
            )?);
        }
    }
    container.save(path)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let container = Container::load(path)?;
    match container.get("kind") {
        Some("checkpoint") => {}
        other => {
            return Err(Error::CorruptManifest(format!(
                "kind is {:?}, expected 'checkpoint'",
                other
            )))
        }
    }
    let config = ModelConfig::read_manifest(&container)?;
    let params = ModelParams::read_tensors(&container, &config)?;
    let augmentation: Augmentation = container
        .get("augmentation")
        .ok_or_else(|| Error::CorruptManifest("missing key 'augmentation'".into()))?
        .parse()?;
    let epochs_completed: usize = container.get_parsed("epochs")?;
    let seed: u64 = container.get_parsed("seed")?;

    let series = |name: &str| -> Result<Vec<f32>> {
        let t = container
            .tensor(name)
            .ok_or_else(|| Error::CorruptManifest(format!("missing tensor '{}'", name)))?;
        Ok(t.data.clone())
    };
    let (ch, co, to) = (
        series("history.chamfer")?,
        series("history.consistency")?,
        series("history.total")?,
    );
    if ch.len() != co.len() || ch.len() != to.len() {
        return Err(Error::CorruptManifest("history series lengths differ".into()));
    }
    let history = ch
        .iter()
        .zip(&co)
        .zip(&to)
        .enumerate()
        .map(|(i, ((&c, &k), &t))| EpochLoss {
            epoch: i + 1,
            chamfer: c as f64,
            consistency: k as f64,
            total: t as f64,
        })
        .collect();

    let optimizer = if container.get("adam.step").is_some() {
        let step: u64 = container.get_parsed("adam.step")?;
        let mut states = BTreeMap::new();
        for (name, shape) in config.parameter_specs() {
            let mut state = AdamState::<f32>::new(shape.clone());
            state.step = step;
            for (field, slot) in [("m", &mut state.first_moment), ("v", &mut state.second_moment)]
            {
                let record = container
                    .tensor(&format!("adam.{}.{}", field, name))
                    .ok_or_else(|| {
                        Error::CorruptManifest(format!("missing tensor 'adam.{}.{}'", field, name))
                    })?;
                if record.dims != shape {
                    return Err(Error::shape(
                        "checkpoint",
                        format!("optimizer state for '{}' has dims {:?}", name, record.dims),
                    ));
                }
                *slot = Tensor::new(shape.clone(), record.data.clone())?;
            }
            states.insert(name, state);
        }
        Some(OptimizerState { states })
    } else {
        None
    };

    Ok(Checkpoint {
        config,
        params,
        optimizer,
        augmentation,
        epochs_completed,
        seed,
        history,
    })
}

/// Loss history as `epoch,chamfer,consistency,total` CSV.
pub fn write_loss_csv(path: &Path, history: &[EpochLoss]) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "epoch,chamfer,consistency,total").expect("vec write");
    for e in history {
        writeln!(out, "{},{},{},{}", e.epoch, e.chamfer, e.consistency, e.total)
            .expect("vec write");
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tiny_config;
    use crate::rng::seeded;
    use rand::Rng as _;

    fn random_cloud(n: usize, seed: u64) -> PointCloud {
        let mut rng = seeded(seed);
        let points = (0..n)
            .map(|_| {
                [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ]
            })
            .collect();
        PointCloud::new(points).unwrap()
    }

    fn tiny_train_config(epochs: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            batch_size: 2,
            m: 4,
            input_points: 24,
            seed: 11,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let mut c = TrainConfig::default();
        c.epochs = 0;
        assert!(c.validate().is_err());
        let mut c = TrainConfig::default();
        c.learning_rate = 0.0;
        assert!(c.validate().is_err());
        let mut c = TrainConfig::default();
        c.consistency_weight = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn augmentation_parses_and_prints() {
        assert_eq!(
            "pca_axis_swap".parse::<Augmentation>().unwrap(),
            Augmentation::PcaAxisSwap
        );
        assert_eq!(Augmentation::None.to_string(), "none");
        assert!("flip".parse::<Augmentation>().is_err());
    }

    #[test]
    fn consistency_loss_cases() {
        let identity = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let mut graph = Graph::<f64>::new();
        let s = graph.constant(
            Tensor::new(
                vec![4, 3],
                vec![0.1, 0.2, 0.3, -0.4, 0.5, -0.6, 0.7, -0.8, 0.9, 0.0, 0.25, -0.5],
            )
            .unwrap(),
        );
        let zero = consistency_loss(&mut graph, s, s, &identity).unwrap();
        assert_eq!(graph.value(zero).item(), 0.0);

        // A real rotation: swap x/y and negate z (det +1).
        let rot = [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, -1.0]];
        let rotated: Vec<f64> = graph
            .value(s)
            .data()
            .chunks(3)
            .flat_map(|p| [p[1], p[0], -p[2]])
            .collect();
        let s_aug = graph.constant(Tensor::new(vec![4, 3], rotated).unwrap());
        let exact = consistency_loss(&mut graph, s, s_aug, &rot).unwrap();
        assert_eq!(graph.value(exact).item(), 0.0);

        // Unit offset on one coordinate of one of 4 points → 1/12.
        let mut off = graph.value(s).data().to_vec();
        off[5] += 1.0;
        let s_off = graph.constant(Tensor::new(vec![4, 3], off).unwrap());
        let mse = consistency_loss(&mut graph, s, s_off, &identity).unwrap();
        assert!((graph.value(mse).item() - 1.0 / 12.0).abs() < 1e-12);

        // Shape mismatch is rejected.
        let bad = graph.constant(Tensor::zeros(vec![3, 3]));
        assert!(consistency_loss(&mut graph, s, bad, &identity).is_err());
    }

    #[test]
    fn single_shape_loss_decreases() {
        // Dropout off so the recorded loss is noise-free and the descent
        // on a single overfittable instance is monotone.
        let (mut model, _) = tiny_config();
        model.dropout_rate = 0.0;
        let dataset = vec![random_cloud(24, 1)];
        let ckpt = train(&dataset, &model, &tiny_train_config(5)).unwrap();
        assert_eq!(ckpt.history.len(), 5);
        for pair in ckpt.history.windows(2) {
            assert!(
                pair[1].total <= pair[0].total,
                "loss rose: {:?} -> {:?}",
                pair[0],
                pair[1]
            );
        }
        assert!(ckpt.history.iter().all(|e| e.consistency == 0.0));
        assert!(ckpt.history.iter().all(|e| e.total == e.chamfer));
    }

    #[test]
    fn same_seed_same_run() {
        let (model, _) = tiny_config();
        let dataset = vec![random_cloud(30, 2), random_cloud(30, 3), random_cloud(30, 4)];
        let a = train(&dataset, &model, &tiny_train_config(3)).unwrap();
        let b = train(&dataset, &model, &tiny_train_config(3)).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.params, b.params);
        let mut other = tiny_train_config(3);
        other.seed = 99;
        let c = train(&dataset, &model, &other).unwrap();
        assert_ne!(a.params, c.params);
    }

    #[test]
    fn batch_size_changes_steps_not_determinism() {
        let (model, _) = tiny_config();
        let dataset: Vec<PointCloud> = (0..5).map(|i| random_cloud(26, 40 + i)).collect();
        let mut cfg = tiny_train_config(2);
        cfg.batch_size = 5;
        let a = train(&dataset, &model, &cfg).unwrap();
        let b = train(&dataset, &model, &cfg).unwrap();
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn augmented_training_runs_and_reports_consistency() {
        let (model, _) = tiny_config();
        // Anisotropic cloud so principal axes are well defined.
        let mut rng = seeded(8);
        let points: Vec<[f64; 3]> = (0..28)
            .map(|_| {
                [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-0.6..0.6),
                    rng.gen_range(-0.3..0.3),
                ]
            })
            .collect();
        let dataset = vec![PointCloud::new(points).unwrap()];
        let mut cfg = tiny_train_config(3);
        cfg.input_points = 28;
        cfg.augmentation = Augmentation::PcaAxisSwap;
        let ckpt = train(&dataset, &model, &cfg).unwrap();
        assert!(ckpt.history.iter().all(|e| e.consistency >= 0.0));
        assert!(ckpt.history.iter().all(|e| e.total.is_finite()));
        // total = chamfer + weight · consistency, with weight 1 (the sum is
        // taken on the f32 graph, so compare at single precision).
        for e in &ckpt.history {
            assert!((e.total - (e.chamfer + e.consistency)).abs() < 1e-3);
        }
        assert_eq!(ckpt.augmentation, Augmentation::PcaAxisSwap);
    }

    #[test]
    fn resampling_preconditions() {
        let (model, _) = tiny_config();
        // Larger clouds are FPS-reduced; smaller ones are an error.
        let ok = train(&[random_cloud(64, 5)], &model, &tiny_train_config(1));
        assert!(ok.is_ok());
        let err = train(&[random_cloud(12, 6)], &model, &tiny_train_config(1));
        assert!(err.is_err());
        let err = train(&[], &model, &tiny_train_config(1));
        assert!(err.is_err());
    }

    #[test]
    fn mismatched_m_is_rejected() {
        let (model, _) = tiny_config();
        let mut cfg = tiny_train_config(1);
        cfg.m = model.m + 1;
        assert!(train(&[random_cloud(24, 7)], &model, &cfg).is_err());
    }

    #[test]
    fn checkpoint_round_trip_bitwise() {
        let (model, _) = tiny_config();
        let dataset = vec![random_cloud(24, 9)];
        let ckpt = train(&dataset, &model, &tiny_train_config(2)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.spts");
        save_checkpoint(&ckpt, &path).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(loaded.params, ckpt.params);
        assert_eq!(loaded.config, ckpt.config);
        assert_eq!(loaded.optimizer, ckpt.optimizer);
        assert_eq!(loaded.seed, ckpt.seed);
        assert_eq!(loaded.epochs_completed, ckpt.epochs_completed);
        let path2 = dir.path().join("model2.spts");
        save_checkpoint(&loaded, &path2).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap(),
            "save → load → save must be byte-identical"
        );
    }

    #[test]
    fn checkpoint_errors_are_distinct() {
        let (model, _) = tiny_config();
        let ckpt = train(&[random_cloud(24, 10)], &model, &tiny_train_config(1)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.spts");
        save_checkpoint(&ckpt, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();

        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        std::fs::write(&path, &bad_magic).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::BadMagic)));

        let mut bad_version = bytes.clone();
        bad_version[4] = 0xEE;
        std::fs::write(&path, &bad_version).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(Error::UnsupportedVersion { .. })
        ));

        bytes.truncate(bytes.len() - 3);
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(Error::TruncatedTensors(_))
        ));
    }

    #[test]
    fn loss_csv_format() {
        let history = vec![
            EpochLoss {
                epoch: 1,
                chamfer: 12.5,
                consistency: 0.0,
                total: 12.5,
            },
            EpochLoss {
                epoch: 2,
                chamfer: 7.25,
                consistency: 0.125,
                total: 7.375,
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("loss.csv");
        write_loss_csv(&path, &history).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "epoch,chamfer,consistency,total\n1,12.5,0,12.5\n2,7.25,0.125,7.375\n"
        );
    }
}
