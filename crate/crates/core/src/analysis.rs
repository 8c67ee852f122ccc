//! Downstream evaluation on ordered structure points: correspondence
//! transfer and accuracy curves, few-shot label transfer scored by IOU,
//! the density-stability metric, and a PCA morphable model over
//! structure-point sets.

use nalgebra::{DMatrix, DVector};

use crate::autodiff::{Graph, Mode};
use crate::error::{Error, Result};
use crate::geometry::{vec3, PointCloud};
use crate::integrator::{forward, per_point_features};
use crate::io::{Container, NamedTensor};
use crate::model::{ModelConfig, ModelParams};

/// Per-shape inference output needed downstream: ordered structure points
/// and their probability-weighted features H (one row per structure point).
#[derive(Clone, Debug, PartialEq)]
pub struct Embedding {
    pub structure_points: Vec<[f64; 3]>,
    pub features: Vec<Vec<f64>>,
}

impl Embedding {
    pub fn new(structure_points: Vec<[f64; 3]>, features: Vec<Vec<f64>>) -> Result<Self> {
        if structure_points.len() != features.len() {
            return Err(Error::shape(
                "embedding",
                format!(
                    "{} structure points, {} feature rows",
                    structure_points.len(),
                    features.len()
                ),
            ));
        }
        if structure_points.is_empty() {
            return Err(Error::invalid("embedding", "empty structure-point set"));
        }
        Ok(Embedding {
            structure_points,
            features,
        })
    }

    pub fn m(&self) -> usize {
        self.structure_points.len()
    }
}

/// A labeled shape used as a label-transfer source: its embedding plus one
/// label per structure point.
#[derive(Clone, Debug)]
pub struct Exemplar {
    pub embedding: Embedding,
    pub labels: Vec<u32>,
}

/// Deterministic inference: structure points plus their Eq.-6-style
/// probability-weighted features for one cloud.
pub fn embed_cloud(
    config: &ModelConfig,
    params: &ModelParams<f32>,
    cloud: &PointCloud,
) -> Result<Embedding> {
    let mut graph = Graph::<f32>::new();
    let vars = params.bind_frozen(&mut graph);
    let mut rng = crate::rng::seeded(0); // inert: inference has no stochastic layers
    let out = forward(&mut graph, cloud, config, &vars, Mode::Infer, &mut rng)?;
    let h = per_point_features(&mut graph, out.probability_maps, out.encoded.features)?;
    let s = graph.value(out.structure_points);
    let structure_points = s
        .data()
        .chunks(3)
        .map(|c| [c[0] as f64, c[1] as f64, c[2] as f64])
        .collect();
    let h = graph.value(h);
    let c = h.dim(1);
    let features = h
        .data()
        .chunks(c)
        .map(|row| row.iter().map(|&v| v as f64).collect())
        .collect();
    Embedding::new(structure_points, features)
}

/// Index of the structure point nearest to `query`, lowest index on ties.
fn nearest_index(query: [f64; 3], points: &[[f64; 3]]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, p) in points.iter().enumerate() {
        let d = vec3::dist_sq(query, *p);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Transfer a query position between shapes: find the structure point of
/// the source nearest to `query`, return the target's structure point of
/// the same index.
pub fn correspond(
    query: [f64; 3],
    source: &[[f64; 3]],
    target: &[[f64; 3]],
) -> Result<[f64; 3]> {
    if source.len() != target.len() {
        return Err(Error::shape(
            "correspond",
            format!("source m={}, target m={}", source.len(), target.len()),
        ));
    }
    if source.is_empty() {
        return Err(Error::invalid("correspond", "empty structure-point set"));
    }
    Ok(target[nearest_index(query, source)])
}

/// Fraction of errors strictly below each threshold.
pub fn correspondence_accuracy(errors: &[f64], thresholds: &[f64]) -> Result<Vec<f64>> {
    if errors.is_empty() {
        return Err(Error::invalid("correspondence_accuracy", "no errors to score"));
    }
    if errors.iter().any(|e| !e.is_finite() || *e < 0.0) {
        return Err(Error::invalid(
            "correspondence_accuracy",
            "errors must be finite and nonnegative",
        ));
    }
    if thresholds.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::invalid(
            "correspondence_accuracy",
            "thresholds must be finite and nonnegative",
        ));
    }
    Ok(thresholds
        .iter()
        .map(|&t| errors.iter().filter(|&&e| e < t).count() as f64 / errors.len() as f64)
        .collect())
}

/// Label each structure point of an embedding by its nearest labeled input
/// point (the binding that makes a shape usable as an exemplar).
pub fn label_structure_points(embedding: &Embedding, cloud: &PointCloud) -> Result<Vec<u32>> {
    let labels = cloud
        .labels
        .as_ref()
        .ok_or_else(|| Error::invalid("label_structure_points", "cloud has no labels"))?;
    Ok(embedding
        .structure_points
        .iter()
        .map(|&s| labels[nearest_index(s, &cloud.points)])
        .collect())
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Per-point labels for a query shape: each query point maps to its nearest
/// structure point s_q; among the exemplars' structure points of the same
/// index, the one with the most similar features (cosine on H rows, lowest
/// exemplar index on ties) donates its label.
pub fn transfer_labels(
    query_cloud: &PointCloud,
    query: &Embedding,
    exemplars: &[Exemplar],
) -> Result<Vec<u32>> {
    if exemplars.is_empty() {
        return Err(Error::invalid("transfer_labels", "no exemplars"));
    }
    for (i, e) in exemplars.iter().enumerate() {
        if e.embedding.m() != query.m() {
            return Err(Error::shape(
                "transfer_labels",
                format!("exemplar {} has m={}, query m={}", i, e.embedding.m(), query.m()),
            ));
        }
        if e.labels.len() != e.embedding.m() {
            return Err(Error::invalid(
                "transfer_labels",
                format!("exemplar {} has {} labels for m={}", i, e.labels.len(), e.embedding.m()),
            ));
        }
    }
    Ok(query_cloud
        .points
        .iter()
        .map(|&x| {
            let i = nearest_index(x, &query.structure_points);
            let h = &query.features[i];
            let mut best_label = exemplars[0].labels[i];
            let mut best_sim = f64::NEG_INFINITY;
            for e in exemplars {
                let sim = cosine(h, &e.embedding.features[i]);
                if sim > best_sim {
                    best_sim = sim;
                    best_label = e.labels[i];
                }
            }
            best_label
        })
        .collect())
}

/// Mean intersection-over-union across `label_set`, skipping labels absent
/// from both prediction and ground truth.
pub fn iou(pred: &[u32], gt: &[u32], label_set: &[u32]) -> Result<f64> {
    if pred.len() != gt.len() {
        return Err(Error::shape(
            "iou",
            format!("{} predictions, {} ground-truth labels", pred.len(), gt.len()),
        ));
    }
    let mut sum = 0.0;
    let mut counted = 0;
    for &label in label_set {
        let mut intersection = 0usize;
        let mut union = 0usize;
        for (&p, &g) in pred.iter().zip(gt) {
            let in_p = p == label;
            let in_g = g == label;
            if in_p && in_g {
                intersection += 1;
            }
            if in_p || in_g {
                union += 1;
            }
        }
        if union == 0 {
            continue;
        }
        sum += intersection as f64 / union as f64;
        counted += 1;
    }
    if counted == 0 {
        return Err(Error::degenerate("iou", "no label of the set occurs in either input"));
    }
    Ok(sum / counted as f64)
}

/// 100 × mean pointwise Euclidean distance between two ordered
/// structure-point sets (on unit-sphere-normalized shapes this is the
/// "average distance (%)" stability measure).
pub fn stability(s_ref: &[[f64; 3]], s_test: &[[f64; 3]]) -> Result<f64> {
    if s_ref.len() != s_test.len() {
        return Err(Error::shape(
            "stability",
            format!("m={} vs m={}", s_ref.len(), s_test.len()),
        ));
    }
    if s_ref.is_empty() {
        return Err(Error::invalid("stability", "empty structure-point set"));
    }
    let mean: f64 = s_ref
        .iter()
        .zip(s_test)
        .map(|(a, b)| vec3::dist(*a, *b))
        .sum::<f64>()
        / s_ref.len() as f64;
    Ok(100.0 * mean)
}

/// PCA over flattened structure-point sets: mean shape, orthonormal
/// components (descending variance), per-component variances.
#[derive(Clone, Debug, PartialEq)]
pub struct MorphableModel {
    /// 3m mean vector S̄.
    pub mean: Vec<f64>,
    /// k×3m orthonormal component rows.
    pub components: Vec<Vec<f64>>,
    /// k variances, sorted descending.
    pub variances: Vec<f64>,
}

impl MorphableModel {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn point_count(&self) -> usize {
        self.mean.len() / 3
    }
}

fn flatten(s: &[[f64; 3]]) -> Vec<f64> {
    s.iter().flat_map(|p| p.iter().copied()).collect()
}

fn unflatten(v: &[f64]) -> Vec<[f64; 3]> {
    v.chunks(3).map(|c| [c[0], c[1], c[2]]).collect()
}

/// Fit a morphable model to N structure-point sets via eigendecomposition
/// of the 3m×3m sample covariance. Deterministic component signs: the first
/// nonzero entry of each component is positive.
pub fn pca_fit(sets: &[Vec<[f64; 3]>], k: usize) -> Result<MorphableModel> {
    if sets.len() < 2 {
        return Err(Error::invalid("pca_fit", "need at least 2 shapes"));
    }
    let m = sets[0].len();
    if m == 0 {
        return Err(Error::invalid("pca_fit", "empty structure-point sets"));
    }
    if sets.iter().any(|s| s.len() != m) {
        return Err(Error::shape("pca_fit", "structure-point sets differ in m"));
    }
    let d = 3 * m;
    let max_k = (sets.len() - 1).min(d);
    if k > max_k {
        return Err(Error::invalid(
            "pca_fit",
            format!("k={} exceeds min(N-1, 3m)={}", k, max_k),
        ));
    }

    let n = sets.len();
    let mut mean = vec![0.0; d];
    let flats: Vec<Vec<f64>> = sets.iter().map(|s| flatten(s)).collect();
    for flat in &flats {
        for (acc, v) in mean.iter_mut().zip(flat) {
            *acc += v;
        }
    }
    for v in &mut mean {
        *v /= n as f64;
    }

    let mut cov = DMatrix::<f64>::zeros(d, d);
    for flat in &flats {
        let centered = DVector::from_iterator(d, flat.iter().zip(&mean).map(|(v, m)| v - m));
        cov.syger(1.0 / (n - 1) as f64, &centered, &centered, 1.0);
    }
    // syger fills the lower triangle; mirror it.
    for r in 0..d {
        for c in (r + 1)..d {
            cov[(r, c)] = cov[(c, r)];
        }
    }

    let eigen = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]));
    let top = eigen.eigenvalues[order[0]].max(0.0);
    if top < 1e-30 {
        return Err(Error::degenerate(
            "pca_fit",
            "zero variance: all shapes identical",
        ));
    }

    let mut components = Vec::with_capacity(k);
    let mut variances = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let mut component: Vec<f64> = eigen.eigenvectors.column(idx).iter().copied().collect();
        if let Some(first) = component.iter().find(|v| **v != 0.0) {
            if *first < 0.0 {
                for v in &mut component {
                    *v = -*v;
                }
            }
        }
        components.push(component);
        variances.push(eigen.eigenvalues[idx].max(0.0));
    }
    Ok(MorphableModel {
        mean,
        components,
        variances,
    })
}

/// S = S̄ + Σ αᵢ cᵢ.
pub fn pca_reconstruct(model: &MorphableModel, coefficients: &[f64]) -> Result<Vec<[f64; 3]>> {
    if coefficients.len() != model.k() {
        return Err(Error::shape(
            "pca_reconstruct",
            format!("{} coefficients for k={}", coefficients.len(), model.k()),
        ));
    }
    let mut flat = model.mean.clone();
    for (component, &alpha) in model.components.iter().zip(coefficients) {
        for (acc, c) in flat.iter_mut().zip(component) {
            *acc += alpha * c;
        }
    }
    Ok(unflatten(&flat))
}

/// αᵢ = cᵢ · (flatten(S) − S̄).
pub fn pca_project(model: &MorphableModel, s: &[[f64; 3]]) -> Result<Vec<f64>> {
    if s.len() != model.point_count() {
        return Err(Error::shape(
            "pca_project",
            format!("shape has m={}, model has m={}", s.len(), model.point_count()),
        ));
    }
    let flat = flatten(s);
    let centered: Vec<f64> = flat.iter().zip(&model.mean).map(|(v, m)| v - m).collect();
    Ok(model
        .components
        .iter()
        .map(|c| c.iter().zip(&centered).map(|(a, b)| a * b).sum())
        .collect())
}

/// Serialize a morphable model (container kind `morphable`, f32 tensors).
pub fn morphable_to_container(model: &MorphableModel) -> Result<Container> {
    let mut container = Container::new();
    container.set("kind", "morphable")?;
    container.set("m", model.point_count())?;
    container.set("k", model.k())?;
    let d = model.mean.len();
    container.push_tensor(NamedTensor::new(
        "mean",
        vec![d],
        model.mean.iter().map(|&v| v as f32).collect(),
    )?);
    container.push_tensor(NamedTensor::new(
        "components",
        vec![model.k(), d],
        model
            .components
            .iter()
            .flat_map(|c| c.iter().map(|&v| v as f32))
            .collect(),
    )?);
    container.push_tensor(NamedTensor::new(
        "variances",
        vec![model.k()],
        model.variances.iter().map(|&v| v as f32).collect(),
    )?);
    Ok(container)
}

/// Inverse of [`morphable_to_container`] (values come back at f32
/// precision).
pub fn morphable_from_container(container: &Container) -> Result<MorphableModel> {
    match container.get("kind") {
        Some("morphable") => {}
        other => {
            return Err(Error::CorruptManifest(format!(
                "kind is {:?}, expected 'morphable'",
                other
            )))
        }
    }
    let m: usize = container.get_parsed("m")?;
    let k: usize = container.get_parsed("k")?;
    let tensor = |name: &str| {
        container
            .tensor(name)
            .ok_or_else(|| Error::CorruptManifest(format!("missing tensor '{}'", name)))
    };
    let mean = tensor("mean")?;
    let components = tensor("components")?;
    let variances = tensor("variances")?;
    if mean.dims != [3 * m] || components.dims != [k, 3 * m] || variances.dims != [k] {
        return Err(Error::shape("morphable", "tensor dims disagree with manifest"));
    }
    Ok(MorphableModel {
        mean: mean.data.iter().map(|&v| v as f64).collect(),
        components: components
            .data
            .chunks(3 * m)
            .map(|c| c.iter().map(|&v| v as f64).collect())
            .collect(),
        variances: variances.data.iter().map(|&v| v as f64).collect(),
    })
}
