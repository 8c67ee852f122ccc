//! Multi-scale set-abstraction encoder: FPS sampling, ball-query grouping,
//! shared per-scale MLPs with max aggregation, and channel-wise fusion of
//! the scales. Two chained levels map a cloud to l sample points with
//! c-dimensional local contextual features.

use std::collections::BTreeMap;

use crate::autodiff::{Graph, Real, Tensor, Var};
use crate::error::{Error, Result};
use crate::geometry::{ball_query, farthest_point_sample, PointCloud};

/// Named parameter bindings on a graph (name → leaf var).
pub type VarMap = BTreeMap<String, Var>;

/// Look up a bound parameter, failing loudly on a missing name.
pub fn param(vars: &VarMap, name: &str) -> Result<Var> {
    vars.get(name)
        .copied()
        .ok_or_else(|| Error::invalid("parameters", format!("missing tensor '{}'", name)))
}

/// One sampling/grouping/aggregation level.
#[derive(Clone, Debug, PartialEq)]
pub struct SetAbstractionConfig {
    pub center_count: usize,
    pub radii: Vec<f64>,
    pub samples_per_radius: Vec<usize>,
    /// Per-radius MLP layer output widths.
    pub mlp_widths: Vec<Vec<usize>>,
}

impl SetAbstractionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.center_count == 0 {
            return Err(Error::invalid("set_abstraction", "center_count must be ≥ 1"));
        }
        let scales = self.radii.len();
        if scales == 0 {
            return Err(Error::invalid("set_abstraction", "need at least one radius"));
        }
        if self.samples_per_radius.len() != scales || self.mlp_widths.len() != scales {
            return Err(Error::invalid(
                "set_abstraction",
                format!(
                    "{} radii, {} sample counts, {} width lists",
                    scales,
                    self.samples_per_radius.len(),
                    self.mlp_widths.len()
                ),
            ));
        }
        for w in self.radii.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::invalid("set_abstraction", "radii must be strictly increasing"));
            }
        }
        if self.radii[0] <= 0.0 {
            return Err(Error::invalid("set_abstraction", "radii must be positive"));
        }
        if self.samples_per_radius.iter().any(|&k| k == 0) {
            return Err(Error::invalid("set_abstraction", "samples_per_radius must be ≥ 1"));
        }
        if self.mlp_widths.iter().any(|ws| ws.is_empty() || ws.contains(&0)) {
            return Err(Error::invalid("set_abstraction", "mlp widths must be nonempty and ≥ 1"));
        }
        Ok(())
    }

    /// Channels after concatenating every scale's aggregated output.
    pub fn output_channels(&self) -> usize {
        self.mlp_widths.iter().map(|ws| *ws.last().unwrap()).sum()
    }
}

/// Sample points Q with their local contextual features F, both living on
/// the graph (Q as a constant leaf so downstream matmuls can consume it).
pub struct EncodedCloud {
    pub sample_points: Vec<[f64; 3]>,
    /// l×3 constant leaf holding `sample_points`.
    pub q: Var,
    /// l×c features.
    pub features: Var,
}

/// Linear+ReLU stack over row vectors, parameters named
/// `{prefix}.layer{i}.weight` / `.bias`.
pub fn mlp_relu_rows<T: Real>(
    graph: &mut Graph<T>,
    input: Var,
    vars: &VarMap,
    prefix: &str,
    layer_count: usize,
) -> Result<Var> {
    let mut x = input;
    for i in 0..layer_count {
        let w = param(vars, &format!("{}.layer{}.weight", prefix, i))?;
        let b = param(vars, &format!("{}.layer{}.bias", prefix, i))?;
        x = graph.linear(x, w, b)?;
        x = graph.relu(x)?;
    }
    Ok(x)
}

/// One set-abstraction level: FPS centers, per-radius ball-query groups,
/// per-point rows = (point − center) ⊕ input feature, shared MLP, per-group
/// max, and channel-wise concatenation across scales.
///
/// `features`, when present, must be an n×c_in var aligned with `points`.
pub fn set_abstraction<T: Real>(
    graph: &mut Graph<T>,
    points: &[[f64; 3]],
    features: Option<Var>,
    config: &SetAbstractionConfig,
    vars: &VarMap,
    prefix: &str,
) -> Result<(Vec<[f64; 3]>, Var)> {
    config.validate()?;
    let n = points.len();
    if config.center_count > n {
        return Err(Error::invalid(
            "set_abstraction",
            format!(
                "{} grouping centers need at least that many input points, got {}; resample the cloud first",
                config.center_count, n
            ),
        ));
    }
    if let Some(f) = features {
        if graph.value(f).rank() != 2 || graph.value(f).dim(0) != n {
            return Err(Error::shape(
                "set_abstraction",
                format!("features {:?} for {} points", graph.value(f).shape(), n),
            ));
        }
    }
    let cloud = PointCloud::new(points.to_vec())?;
    let center_indices = farthest_point_sample(&cloud, config.center_count)?;
    let centers: Vec<[f64; 3]> = center_indices.iter().map(|&i| points[i]).collect();
    let g = centers.len();

    let mut fused: Option<Var> = None;
    for (scale, (&radius, &k)) in config
        .radii
        .iter()
        .zip(&config.samples_per_radius)
        .enumerate()
    {
        let groups = ball_query(&cloud, &centers, radius, k)?;
        let mut offsets = Vec::with_capacity(g * k * 3);
        let mut flat_indices = Vec::with_capacity(g * k);
        for (gi, group) in groups.iter().enumerate() {
            for &pi in &group.indices {
                for d in 0..3 {
                    offsets.push(T::from_f64(points[pi][d] - centers[gi][d]));
                }
                flat_indices.push(pi);
            }
        }
        let offset_var = graph.constant(Tensor::new(vec![g * k, 3], offsets)?);
        let rows = match features {
            Some(f) => {
                let gathered = graph.gather_rows(f, &flat_indices)?;
                graph.concat_channels(offset_var, gathered)?
            }
            None => offset_var,
        };
        let layer_count = config.mlp_widths[scale].len();
        let out = mlp_relu_rows(
            graph,
            rows,
            vars,
            &format!("{}.scale{}", prefix, scale),
            layer_count,
        )?;
        let width = *config.mlp_widths[scale].last().unwrap();
        let grouped = graph.reshape(out, vec![g, k, width])?;
        let pooled = graph.group_max(grouped)?;
        fused = Some(match fused {
            Some(acc) => graph.concat_channels(acc, pooled)?,
            None => pooled,
        });
    }
    Ok((centers, fused.expect("at least one scale")))
}

/// Chained set-abstraction levels (parameters under `sa{1..}`), producing
/// the sample points Q and features F of the last level.
pub fn encode<T: Real>(
    graph: &mut Graph<T>,
    cloud: &PointCloud,
    levels: &[SetAbstractionConfig],
    vars: &VarMap,
) -> Result<EncodedCloud> {
    if levels.is_empty() {
        return Err(Error::invalid("encode", "need at least one set-abstraction level"));
    }
    let mut points: Vec<[f64; 3]> = cloud.points.clone();
    let mut features: Option<Var> = None;
    for (li, level) in levels.iter().enumerate() {
        let (centers, f) =
            set_abstraction(graph, &points, features, level, vars, &format!("sa{}", li + 1))?;
        points = centers;
        features = Some(f);
    }
    let l = points.len();
    let mut q_data = Vec::with_capacity(l * 3);
    for p in &points {
        for d in 0..3 {
            q_data.push(T::from_f64(p[d]));
        }
    }
    let q = graph.constant(Tensor::new(vec![l, 3], q_data)?);
    Ok(EncodedCloud {
        sample_points: points,
        q,
        features: features.expect("nonempty levels"),
    })
}
