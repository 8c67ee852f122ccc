//! The eight subcommands. Every command resolves its settings as
//! flag > config file > default, logs the resolved configuration to stderr,
//! validates inputs before writing any output, and keeps stdout for results.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;

use spts_core::analysis::{
    correspond, correspondence_accuracy, embed_cloud, iou, label_structure_points,
    morphable_to_container, pca_fit, pca_project, pca_reconstruct, stability,
    transfer_labels, Embedding, Exemplar,
};
use spts_core::autodiff::gradcheck::standard_suite;
use spts_core::geometry::{
    axis_swap_augment, farthest_point_sample, generate_family, nonuniform_resample,
    normalize_unit_sphere, principal_axes, upsample_repeat, Permutation, PointCloud,
    ResampleConfig, ShapeFamily,
};
use spts_core::io::{index_color, read_dataset, read_ply, read_xyz, write_dataset, write_ply,
    write_xyz, PlyPayload};
use spts_core::model::{ModelConfig, ModelParams};
use spts_core::rng::{seeded, stream};
use spts_core::training::{
    load_checkpoint, save_checkpoint, train_with_progress, write_loss_csv, Augmentation,
    TrainConfig,
};

use crate::config::{parse_list, CliError, CliResult, FileConfig, Resolver};

// Stream tags for CLI-level sampling, disjoint by construction from the
// per-purpose tags used inside training.
const TAG_PAIRS: u64 = 101;
const TAG_SETS: u64 = 102;
const TAG_RESAMPLE: u64 = 103;

// ---------------------------------------------------------------------------
// shared helpers

fn resolver(config: Option<&Path>) -> CliResult<Resolver> {
    Ok(Resolver::new(FileConfig::load(config)?))
}

fn data_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {}", path.display(), e))
}

/// Read a standalone cloud file, dispatching on the extension.
fn read_cloud(path: &Path) -> CliResult<PointCloud> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("xyz") => Ok(read_xyz(path)?),
        Some("ply") => {
            let payload = read_ply(path)?;
            let mut cloud = PointCloud::new(payload.points)?;
            if let Some(labels) = payload.labels {
                cloud = cloud.with_labels(labels.into_iter().map(u32::from).collect())?;
            }
            Ok(cloud)
        }
        _ => Err(CliError::Usage(format!(
            "{}: unsupported cloud format (expected .xyz or .ply)",
            path.display()
        ))),
    }
}

/// A checkpoint ready for inference, remembering whether shapes must be
/// PCA-aligned to match the training-time augmentation frame.
struct LoadedModel {
    config: ModelConfig,
    params: ModelParams<f32>,
    aligned: bool,
}

fn load_model(path: &Path) -> CliResult<LoadedModel> {
    let ckpt = load_checkpoint(path)?;
    Ok(LoadedModel {
        aligned: ckpt.augmentation == Augmentation::PcaAxisSwap,
        config: ckpt.config,
        params: ckpt.params,
    })
}

/// Bring a raw cloud into the frame the model was trained on: unit-sphere
/// normalization, plus principal-axis alignment for augmented checkpoints.
fn prepare(cloud: &PointCloud, aligned: bool) -> CliResult<PointCloud> {
    let normalized = normalize_unit_sphere(cloud)?;
    if aligned {
        let frame = principal_axes(&normalized)?;
        Ok(axis_swap_augment(&normalized, &frame, Permutation::identity()))
    } else {
        Ok(normalized)
    }
}

fn embed(model: &LoadedModel, cloud: &PointCloud) -> CliResult<Embedding> {
    Ok(embed_cloud(&model.config, &model.params, cloud)?)
}

/// FPS subset of a cloud; labels follow, landmarks are dropped.
fn fps_subset(cloud: &PointCloud, k: usize) -> CliResult<PointCloud> {
    let indices = farthest_point_sample(cloud, k)?;
    let points = indices.iter().map(|&i| cloud.points[i]).collect();
    let mut subset = PointCloud::new(points)?;
    if let Some(labels) = &cloud.labels {
        subset = subset.with_labels(indices.iter().map(|&i| labels[i]).collect())?;
    }
    Ok(subset)
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| data_err(parent, e))?;
        }
    }
    fs::write(path, text).map_err(|e| data_err(path, e))
}

fn structure_point_ply(path: &Path, points: &[[f64; 3]]) -> CliResult<()> {
    let m = points.len();
    let colors = (0..m).map(|i| index_color(i, m)).collect();
    let payload = PlyPayload::new(points.to_vec()).with_colors(colors);
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| data_err(parent, e))?;
        }
    }
    Ok(write_ply(path, &payload)?)
}

fn file_stem(path: &Path) -> CliResult<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_string)
        .ok_or_else(|| CliError::Usage(format!("{}: no usable file stem", path.display())))
}

// ---------------------------------------------------------------------------
// synth

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Shape family: tables | ellipsoids | boxes
    #[arg(long)]
    pub family: Option<String>,
    /// Number of shapes to generate
    #[arg(long)]
    pub count: Option<usize>,
    /// Points per shape
    #[arg(long)]
    pub points: Option<usize>,
    /// Master seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output dataset directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// key=value config file (flags take precedence)
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn cmd_synth(args: SynthArgs) -> CliResult<()> {
    let mut r = resolver(args.config.as_deref())?;
    let family_name = r.value("family", args.family, "tables".to_string())?;
    let count = r.value("count", args.count, 100)?;
    let points = r.value("points", args.points, 2048)?;
    let seed = r.value("seed", args.seed, 0)?;
    let out = r.required_path("out", args.out)?;
    r.log("synth");

    let family =
        ShapeFamily::parse(&family_name).map_err(|e| CliError::Usage(e.to_string()))?;
    let shapes = generate_family(family, count, points, &mut seeded(seed))?;
    write_dataset(&out, family.name(), &shapes)?;
    println!(
        "wrote {} {} shapes x {} points to {}",
        count,
        family.name(),
        points,
        out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// train

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Dataset directory (manifest.csv + .xyz shapes)
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Output checkpoint path
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Loss-curve CSV path (default: loss.csv beside the checkpoint)
    #[arg(long)]
    pub loss_csv: Option<PathBuf>,
    /// Structure-point count m
    #[arg(long)]
    pub m: Option<usize>,
    /// Training epochs
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Shapes per gradient step
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Adam learning rate
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Points each training cloud is FPS-resampled to
    #[arg(long)]
    pub input_points: Option<usize>,
    /// Augmentation: none | pca_axis_swap
    #[arg(long)]
    pub augmentation: Option<Augmentation>,
    /// Weight of the consistency term under pca_axis_swap
    #[arg(long)]
    pub consistency_weight: Option<f64>,
    /// Integrator dropout rate in [0, 1). Large m can learn to exploit the
    /// dropout noise (low train loss, degenerate inference); 0 disables it.
    #[arg(long)]
    pub dropout: Option<f64>,
    /// Master seed (init, shuffling, augmentation, dropout)
    #[arg(long)]
    pub seed: Option<u64>,
    /// key=value config file (flags take precedence)
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn cmd_train(args: TrainArgs) -> CliResult<()> {
    let mut r = resolver(args.config.as_deref())?;
    let dataset_dir = r.required_path("dataset", args.dataset)?;
    let out = r.required_path("out", args.out)?;
    let loss_csv = r.path_or("loss_csv", args.loss_csv, out.with_file_name("loss.csv"));
    let defaults = TrainConfig::default();
    let train_cfg = TrainConfig {
        m: r.value("m", args.m, defaults.m)?,
        epochs: r.value("epochs", args.epochs, defaults.epochs)?,
        batch_size: r.value("batch_size", args.batch_size, defaults.batch_size)?,
        learning_rate: r.value("learning_rate", args.learning_rate, defaults.learning_rate)?,
        input_points: r.value("input_points", args.input_points, defaults.input_points)?,
        augmentation: r.value("augmentation", args.augmentation, defaults.augmentation)?,
        consistency_weight: r.value(
            "consistency_weight",
            args.consistency_weight,
            defaults.consistency_weight,
        )?,
        seed: r.value("seed", args.seed, defaults.seed)?,
    };
    let mut model_config = ModelConfig::standard(train_cfg.m);
    model_config.dropout_rate = r.value("dropout", args.dropout, model_config.dropout_rate)?;
    r.log("train");

    if !(0.0..1.0).contains(&model_config.dropout_rate) {
        return Err(CliError::Usage(format!(
            "dropout {} outside [0, 1)",
            model_config.dropout_rate
        )));
    }
    if train_cfg.input_points < model_config.min_input_points() {
        return Err(CliError::Usage(format!(
            "input_points {} below the encoder minimum {}",
            train_cfg.input_points,
            model_config.min_input_points()
        )));
    }
    let entries = read_dataset(&dataset_dir)?;
    for entry in &entries {
        if entry.cloud.len() < train_cfg.input_points {
            return Err(CliError::Data(format!(
                "shape '{}' has {} points; training needs ≥ {}",
                entry.id,
                entry.cloud.len(),
                train_cfg.input_points
            )));
        }
    }
    let clouds: Vec<PointCloud> = entries.into_iter().map(|e| e.cloud).collect();
    println!("training on {} shapes", clouds.len());

    let ckpt = train_with_progress(&clouds, &model_config, &train_cfg, &mut |loss| {
        println!(
            "epoch {:>4}/{}  chamfer {:.6}  consistency {:.6}  total {:.6}",
            loss.epoch, train_cfg.epochs, loss.chamfer, loss.consistency, loss.total
        );
    })?;
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| data_err(parent, e))?;
        }
    }
    save_checkpoint(&ckpt, &out)?;
    write_loss_csv(&loss_csv, &ckpt.history)?;
    println!(
        "saved checkpoint to {} after {} epochs; loss curve in {}",
        out.display(),
        ckpt.epochs_completed,
        loss_csv.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// embed

#[derive(Args, Debug)]
pub struct EmbedArgs {
    /// Trained checkpoint
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Cloud files (.xyz or .ply) to embed
    #[arg(long, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// key=value config file (flags take precedence)
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn cmd_embed(args: EmbedArgs) -> CliResult<()> {
    let mut r = resolver(args.config.as_deref())?;
    let checkpoint = r.required_path("checkpoint", args.checkpoint)?;
    let inputs = r.paths("inputs", args.inputs);
    let out = r.required_path("out", args.out)?;
    r.log("embed");

    if inputs.is_empty() {
        return Err(CliError::Usage("no input clouds given".to_string()));
    }
    let mut clouds = Vec::with_capacity(inputs.len());
    for path in &inputs {
        clouds.push((file_stem(path)?, read_cloud(path)?));
    }
    let model = load_model(&checkpoint)?;

    // Embed everything before writing anything, so a bad input cannot leave
    // a partial output set behind.
    let mut results = Vec::with_capacity(clouds.len());
    for (i, (stem, cloud)) in clouds.into_iter().enumerate() {
        let prepared =
            prepare(&cloud, model.aligned).map_err(|e| data_err(&inputs[i], e))?;
        let embedding = embed(&model, &prepared).map_err(|e| data_err(&inputs[i], e))?;
        results.push((stem, embedding));
    }

    fs::create_dir_all(&out).map_err(|e| data_err(&out, e))?;
    for (stem, embedding) in &results {
        let ply_path = out.join(format!("{}_sp.ply", stem));
        structure_point_ply(&ply_path, &embedding.structure_points)?;
        let csv_path = out.join(format!("{}_features.csv", stem));
        write_text(&csv_path, &features_csv(embedding))?;
        println!(
            "{}: {} structure points -> {}, features -> {}",
            stem,
            embedding.m(),
            ply_path.display(),
            csv_path.display()
        );
    }
    Ok(())
}

fn features_csv(embedding: &Embedding) -> String {
    let c = embedding.features.first().map_or(0, Vec::len);
    let mut text = String::from("structure_point");
    for j in 0..c {
        text.push_str(&format!(",f{}", j));
    }
    text.push('\n');
    for (i, row) in embedding.features.iter().enumerate() {
        text.push_str(&i.to_string());
        for v in row {
            text.push(',');
            text.push_str(&format!("{}", v));
        }
        text.push('\n');
    }
    text
}

// ---------------------------------------------------------------------------
// eval-corr

#[derive(Args, Debug)]
pub struct EvalCorrArgs {
    /// Trained checkpoint
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Dataset directory with landmarks.csv
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Correspondence-error thresholds, comma-separated
    #[arg(long)]
    pub thresholds: Option<String>,
    /// Evaluate only this many ordered pairs (seeded sample)
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Seed for pair sampling
    #[arg(long)]
    pub seed: Option<u64>,
    /// Accuracy CSV path
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// key=value config file (flags take precedence)
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn cmd_eval_corr(args: EvalCorrArgs) -> CliResult<()> {
    let mut r = resolver(args.config.as_deref())?;
    let checkpoint = r.required_path("checkpoint", args.checkpoint)?;
    let dataset_dir = r.required_path("dataset", args.dataset)?;
    let thresholds_raw = r.value(
        "thresholds",
        args.thresholds,
        "0.05,0.1,0.15,0.2,0.25".to_string(),
    )?;
    let pair_limit = r.optional_value("pairs", args.pairs)?;
    let seed = r.value("seed", args.seed, 0)?;
    let out = r.required_path("out", args.out)?;
    r.log("eval-corr");

    let thresholds: Vec<f64> = parse_list(&thresholds_raw, "threshold")?;
    let model = load_model(&checkpoint)?;
    let entries = read_dataset(&dataset_dir)?;
    if entries.len() < 2 {
        return Err(CliError::Data(format!(
            "correspondence evaluation needs ≥ 2 shapes, dataset has {}",
            entries.len()
        )));
    }

    let mut prepared = Vec::with_capacity(entries.len());
    for entry in &entries {
        let cloud = prepare(&entry.cloud, model.aligned)?;
        if cloud.landmarks.as_ref().map_or(true, Vec::is_empty) {
            return Err(CliError::Data(format!(
                "shape '{}' has no landmarks; eval-corr needs landmarks.csv entries",
                entry.id
            )));
        }
        prepared.push(cloud);
    }
    let embeddings: Vec<Embedding> = prepared
        .iter()
        .map(|c| embed(&model, c))
        .collect::<CliResult<_>>()?;

    let mut pair_list: Vec<(usize, usize)> = Vec::new();
    for i in 0..prepared.len() {
        for j in 0..prepared.len() {
            if i != j {
                pair_list.push((i, j));
            }
        }
    }
    if let Some(limit) = pair_limit {
        if limit == 0 {
            return Err(CliError::Usage("pairs must be ≥ 1".to_string()));
        }
        if limit < pair_list.len() {
            use rand::seq::SliceRandom;
            pair_list.shuffle(&mut stream(seed, &[TAG_PAIRS]));
            pair_list.truncate(limit);
            pair_list.sort_unstable();
        }
    }

    let mut errors = Vec::new();
    for &(i, j) in &pair_list {
        let source = &prepared[i];
        let target = &prepared[j];
        for lm in source.landmarks.as_ref().expect("validated above") {
            if let Some(truth) = target.landmark(&lm.name) {
                let predicted = correspond(
                    lm.position,
                    &embeddings[i].structure_points,
                    &embeddings[j].structure_points,
                )?;
                errors.push(spts_core::geometry::vec3::dist(predicted, truth));
            }
        }
    }
    if errors.is_empty() {
        return Err(CliError::Data(
            "no landmark names shared between any evaluated pair".to_string(),
        ));
    }
    let accuracy = correspondence_accuracy(&errors, &thresholds)?;

    let header: Vec<String> = thresholds.iter().map(|t| format!("{}", t)).collect();
    let row: Vec<String> = accuracy.iter().map(|a| format!("{}", a)).collect();
    write_text(&out, &format!("{}\n{}\n", header.join(","), row.join(",")))?;

    println!(
        "{} pairs, {} landmark transfers",
        pair_list.len(),
        errors.len()
    );
    for (t, a) in thresholds.iter().zip(&accuracy) {
        println!("accuracy@{} = {:.4}", t, a);
    }
    println!("wrote {}", out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// transfer

#[derive(Args, Debug)]
pub struct TransferArgs {
    /// Trained checkpoint
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Dataset directory of query shapes
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Explicit labeled exemplar cloud files (one exemplar set)
    #[arg(long, num_args = 1..)]
    pub exemplars: Vec<PathBuf>,
    /// Dataset directory to draw exemplar sets from
    #[arg(long)]
    pub pool: Option<PathBuf>,
    /// Exemplars per sampled set
    #[arg(long)]
    pub per_set: Option<usize>,
    /// Number of sampled exemplar sets
    #[arg(long)]
    pub sets: Option<usize>,
    /// Seed for exemplar-set sampling
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (labeled clouds + iou.csv)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// key=value config file (flags take precedence)
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn cmd_transfer(args: TransferArgs) -> CliResult<()> {
    let mut r = resolver(args.config.as_deref())?;
    let checkpoint = r.required_path("checkpoint", args.checkpoint)?;
    let queries_dir = r.required_path("queries", args.queries)?;
    let exemplar_files = r.paths("exemplars", args.exemplars);
    let pool_dir = r.optional_path("pool", args.pool);
    let per_set = r.value("per_set", args.per_set, 3)?;
    let sets = r.value("sets", args.sets, 1)?;
    let seed = r.value("seed", args.seed, 0)?;
    let out = r.required_path("out", args.out)?;
    r.log("transfer");

    if exemplar_files.is_empty() == pool_dir.is_none() {
        return Err(CliError::Usage(
            "give either --exemplars files or a --pool dataset, not both".to_string(),
        ));
    }
    if per_set == 0 || sets == 0 {
        return Err(CliError::Usage("per_set and sets must be ≥ 1".to_string()));
    }

    let model = load_model(&checkpoint)?;

    // Exemplar sets as (id, prepared labeled cloud) lists.
    let exemplar_sets: Vec<Vec<(String, PointCloud)>> = if !exemplar_files.is_empty() {
        let mut set = Vec::with_capacity(exemplar_files.len());
        for path in &exemplar_files {
            let cloud = read_cloud(path)?;
            if cloud.labels.is_none() {
                return Err(CliError::Data(format!(
                    "exemplar {} has no labels",
                    path.display()
                )));
            }
            set.push((file_stem(path)?, prepare(&cloud, model.aligned)?));
        }
        vec![set]
    } else {
        let pool_dir = pool_dir.expect("checked above");
        let pool = read_dataset(&pool_dir)?;
        if per_set > pool.len() {
            return Err(CliError::Usage(format!(
                "per_set {} exceeds pool size {}",
                per_set,
                pool.len()
            )));
        }
        let mut prepared_pool = Vec::with_capacity(pool.len());
        for entry in &pool {
            if entry.cloud.labels.is_none() {
                return Err(CliError::Data(format!(
                    "pool shape '{}' has no labels",
                    entry.id
                )));
            }
            prepared_pool.push((entry.id.clone(), prepare(&entry.cloud, model.aligned)?));
        }
        (0..sets)
            .map(|s| {
                use rand::seq::SliceRandom;
                let mut indices: Vec<usize> = (0..prepared_pool.len()).collect();
                indices.shuffle(&mut stream(seed, &[TAG_SETS, s as u64]));
                indices
                    .into_iter()
                    .take(per_set)
                    .map(|i| prepared_pool[i].clone())
                    .collect()
            })
            .collect()
    };

    let query_entries = read_dataset(&queries_dir)?;
    let mut queries = Vec::with_capacity(query_entries.len());
    for entry in &query_entries {
        let cloud = prepare(&entry.cloud, model.aligned)?;
        let embedding = embed(&model, &cloud)?;
        queries.push((entry.id.clone(), cloud, embedding));
    }

    fs::create_dir_all(&out).map_err(|e| data_err(&out, e))?;
    let mut iou_rows = Vec::new();
    let mut iou_values = Vec::new();
    for (set_idx, set) in exemplar_sets.iter().enumerate() {
        let mut exemplars = Vec::with_capacity(set.len());
        for (id, cloud) in set {
            let embedding = embed(&model, cloud)?;
            let labels = label_structure_points(&embedding, cloud)
                .map_err(|e| CliError::Data(format!("exemplar '{}': {}", id, e)))?;
            exemplars.push(Exemplar { embedding, labels });
        }
        let set_dir = out.join(format!("set{}", set_idx));
        fs::create_dir_all(&set_dir).map_err(|e| data_err(&set_dir, e))?;
        let mut set_ious = Vec::new();
        for (id, cloud, embedding) in &queries {
            let predicted = transfer_labels(cloud, embedding, &exemplars)?;
            let labeled = PointCloud::new(cloud.points.clone())?.with_labels(predicted.clone())?;
            write_xyz(&set_dir.join(format!("{}.xyz", id)), &labeled)?;
            if let Some(truth) = &cloud.labels {
                let label_set: Vec<u32> = predicted
                    .iter()
                    .chain(truth.iter())
                    .copied()
                    .collect::<BTreeSet<u32>>()
                    .into_iter()
                    .collect();
                let score = iou(&predicted, truth, &label_set)?;
                iou_rows.push(format!("{},{},{}", set_idx, id, score));
                set_ious.push(score);
                iou_values.push(score);
            }
        }
        if !set_ious.is_empty() {
            println!(
                "set {}: mean IOU {:.4} over {} queries",
                set_idx,
                set_ious.iter().sum::<f64>() / set_ious.len() as f64,
                set_ious.len()
            );
        }
    }

    if !iou_rows.is_empty() {
        let csv = format!("set,shape_id,iou\n{}\n", iou_rows.join("\n"));
        write_text(&out.join("iou.csv"), &csv)?;
        println!(
            "mean IOU {:.4} over {} labeled transfers; table in {}",
            iou_values.iter().sum::<f64>() / iou_values.len() as f64,
            iou_values.len(),
            out.join("iou.csv").display()
        );
    } else {
        println!("queries carry no ground-truth labels; skipped iou.csv");
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// stability

#[derive(Args, Debug)]
pub struct StabilityArgs {
    /// Trained checkpoint
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Cloud files (.xyz or .ply) to evaluate
    #[arg(long, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    /// Resampling densities, comma-separated
    #[arg(long)]
    pub densities: Option<String>,
    /// Reference density the stability is measured against
    #[arg(long)]
    pub reference: Option<usize>,
    /// Punch random holes before resampling (non-uniform density)
    #[arg(long)]
    pub nonuniform: bool,
    /// Seed for hole placement
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV path
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// key=value config file (flags take precedence)
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn cmd_stability(args: StabilityArgs) -> CliResult<()> {
    let mut r = resolver(args.config.as_deref())?;
    let checkpoint = r.required_path("checkpoint", args.checkpoint)?;
    let inputs = r.paths("inputs", args.inputs);
    let densities_raw = r.value("densities", args.densities, "256,512,1024".to_string())?;
    let reference = r.value("reference", args.reference, 2048)?;
    let nonuniform = r.value(
        "nonuniform",
        if args.nonuniform { Some(true) } else { None },
        false,
    )?;
    let seed = r.value("seed", args.seed, 0)?;
    let out = r.required_path("out", args.out)?;
    r.log("stability");

    let densities: Vec<usize> = parse_list(&densities_raw, "density")?;
    if inputs.is_empty() {
        return Err(CliError::Usage("no input clouds given".to_string()));
    }
    if densities.is_empty() {
        return Err(CliError::Usage("no densities given".to_string()));
    }
    if let Some(&d) = densities.iter().find(|&&d| d == 0 || d > reference) {
        return Err(CliError::Usage(format!(
            "density {} outside 1..=reference ({})",
            d, reference
        )));
    }

    let model = load_model(&checkpoint)?;
    let min_points = model.config.min_input_points();

    let mut rows = Vec::new();
    let mut sums = vec![0.0; densities.len()];
    for (shape_idx, path) in inputs.iter().enumerate() {
        let cloud = read_cloud(path)?;
        if cloud.len() < reference {
            return Err(CliError::Data(format!(
                "{}: {} points, fewer than the reference density {}",
                path.display(),
                cloud.len(),
                reference
            )));
        }
        let prepared = prepare(&cloud, model.aligned).map_err(|e| data_err(path, e))?;
        let reference_cloud = fps_subset(&prepared, reference)?;
        let s_ref = embed(&model, &reference_cloud)?.structure_points;

        let stem = file_stem(path)?;
        let mut row = vec![stem.clone()];
        for (di, &d) in densities.iter().enumerate() {
            let source = if nonuniform {
                let mut rng = stream(seed, &[TAG_RESAMPLE, shape_idx as u64, d as u64]);
                let holey =
                    nonuniform_resample(&reference_cloud, &ResampleConfig::default(), &mut rng)?;
                if holey.len() < d {
                    return Err(CliError::Data(format!(
                        "{}: non-uniform resampling kept {} points, below density {}",
                        path.display(),
                        holey.len(),
                        d
                    )));
                }
                holey
            } else {
                reference_cloud.clone()
            };
            let mut resampled = fps_subset(&source, d)?;
            if resampled.len() < min_points {
                resampled = upsample_repeat(&resampled, min_points);
            }
            let s_test = embed(&model, &resampled)?.structure_points;
            let score = stability(&s_ref, &s_test)?;
            sums[di] += score;
            row.push(format!("{}", score));
        }
        rows.push(row.join(","));
    }

    let mut csv = format!(
        "shape_id,{}\n",
        densities
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(",")
    );
    for row in &rows {
        csv.push_str(row);
        csv.push('\n');
    }
    let means: Vec<f64> = sums.iter().map(|s| s / inputs.len() as f64).collect();
    csv.push_str("mean");
    for mean in &means {
        csv.push_str(&format!(",{}", mean));
    }
    csv.push('\n');
    write_text(&out, &csv)?;

    for (d, mean) in densities.iter().zip(&means) {
        println!("density {:>6}: mean stability {:.6}", d, mean);
    }
    println!("wrote {}", out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// pca

#[derive(Args, Debug)]
pub struct PcaArgs {
    /// Trained checkpoint
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Dataset directory to fit on
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Number of principal components (default: min(N-1, 3m))
    #[arg(long)]
    pub k: Option<usize>,
    /// Output morphable-model container path
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Reconstruction-error-vs-k CSV path
    #[arg(long)]
    pub recon_csv: Option<PathBuf>,
    /// Component indices to render traversals for, comma-separated
    #[arg(long)]
    pub traverse: Option<String>,
    /// Traversal coefficients as multiples of each component's sigma
    #[arg(long)]
    pub ratios: Option<String>,
    /// Directory for traversal PLYs
    #[arg(long)]
    pub traverse_out: Option<PathBuf>,
    /// key=value config file (flags take precedence)
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn cmd_pca(args: PcaArgs) -> CliResult<()> {
    let mut r = resolver(args.config.as_deref())?;
    let checkpoint = r.required_path("checkpoint", args.checkpoint)?;
    let dataset_dir = r.required_path("dataset", args.dataset)?;
    let k_setting = r.optional_value("k", args.k)?;
    let out = r.required_path("out", args.out)?;
    let recon_csv = r.path_or("recon_csv", args.recon_csv, out.with_file_name("recon.csv"));
    let traverse_raw = r.value("traverse", args.traverse, String::new())?;
    let ratios_raw = r.value("ratios", args.ratios, "-3,-1.5,0,1.5,3".to_string())?;
    let traverse_out = r.optional_path("traverse_out", args.traverse_out);
    r.log("pca");

    let model = load_model(&checkpoint)?;
    let entries = read_dataset(&dataset_dir)?;
    let mut sets = Vec::with_capacity(entries.len());
    for entry in &entries {
        let cloud = prepare(&entry.cloud, model.aligned)?;
        sets.push(embed(&model, &cloud)?.structure_points);
    }

    let m = model.config.m;
    let k = k_setting.unwrap_or_else(|| (entries.len().saturating_sub(1)).min(3 * m));
    println!("fitting PCA with k = {} over {} shapes", k, sets.len());
    let morphable = pca_fit(&sets, k)?;
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| data_err(parent, e))?;
        }
    }
    morphable_to_container(&morphable)?.save(&out)?;
    println!("wrote morphable model to {}", out.display());

    // Reconstruction error as the component budget grows: project once at
    // full k, reconstruct from truncated (zero-padded) coefficients.
    let coeffs: Vec<Vec<f64>> = sets
        .iter()
        .map(|s| pca_project(&morphable, s))
        .collect::<Result<_, _>>()?;
    let mut csv = String::from("k,error\n");
    for used in 0..=k {
        let mut total = 0.0;
        for (s, alpha) in sets.iter().zip(&coeffs) {
            let mut truncated = vec![0.0; k];
            truncated[..used].copy_from_slice(&alpha[..used]);
            let recon = pca_reconstruct(&morphable, &truncated)?;
            let err: f64 = s
                .iter()
                .zip(&recon)
                .map(|(a, b)| spts_core::geometry::vec3::dist(*a, *b))
                .sum::<f64>()
                / m as f64;
            total += err;
        }
        csv.push_str(&format!("{},{}\n", used, total / sets.len() as f64));
    }
    write_text(&recon_csv, &csv)?;
    println!("wrote {}", recon_csv.display());

    if !traverse_raw.is_empty() {
        let components: Vec<usize> = parse_list(&traverse_raw, "component")?;
        let ratios: Vec<f64> = parse_list(&ratios_raw, "ratio")?;
        let dir = traverse_out.ok_or_else(|| {
            CliError::Usage("traverse requires traverse_out".to_string())
        })?;
        fs::create_dir_all(&dir).map_err(|e| data_err(&dir, e))?;
        for &j in &components {
            if j >= k {
                return Err(CliError::Usage(format!(
                    "traversal component {} out of range for k = {}",
                    j, k
                )));
            }
            let sigma = morphable.variances[j].sqrt();
            for &ratio in &ratios {
                let mut alpha = vec![0.0; k];
                alpha[j] = ratio * sigma;
                let shape = pca_reconstruct(&morphable, &alpha)?;
                let path = dir.join(format!("component{}_ratio{}.ply", j, ratio));
                structure_point_ply(&path, &shape)?;
            }
        }
        println!(
            "wrote {} traversal shapes to {}",
            components.len() * ratios.len(),
            dir.display()
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// gradcheck

#[derive(Args, Debug)]
pub struct GradcheckArgs {
    /// Seed for the randomized operator inputs
    #[arg(long)]
    pub seed: Option<u64>,
    /// key=value config file (flags take precedence)
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn cmd_gradcheck(args: GradcheckArgs) -> CliResult<()> {
    let mut r = resolver(args.config.as_deref())?;
    let seed = r.value("seed", args.seed, 0)?;
    r.log("gradcheck");

    let reports = standard_suite(seed)?;
    let mut failures = 0;
    for report in &reports {
        println!("{}", report);
        if !report.passed() {
            failures += 1;
        }
    }
    if failures > 0 {
        return Err(CliError::Numeric(format!(
            "{} of {} operators failed the gradient check",
            failures,
            reports.len()
        )));
    }
    println!("all {} operators passed", reports.len());
    Ok(())
}
