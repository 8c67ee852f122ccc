//! Point integration: a shared MLP over sample-point features followed by a
//! softmax across the sample points yields per-structure-point probability
//! maps; structure points are the induced convex combinations S = P·Q and
//! per-point features the matching combinations H = P·F.

use crate::autodiff::{Graph, Mode, Real, Var};
use crate::encoder::{encode, param, EncodedCloud, VarMap};
use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::model::ModelConfig;

/// Probability maps P (m×l): row i weights the l sample points for
/// structure point i; rows are softmax outputs, so each is a convex
/// weighting.
pub fn probability_maps<T: Real>(
    graph: &mut Graph<T>,
    features: Var,
    config: &ModelConfig,
    vars: &VarMap,
    mode: Mode,
    rng: &mut impl rand::Rng,
) -> Result<Var> {
    let shape = graph.value(features).shape().to_vec();
    if shape.len() != 2 || shape[1] != config.feature_channels() {
        return Err(Error::shape(
            "probability_maps",
            format!(
                "features {:?}, expected l×{}",
                shape,
                config.feature_channels()
            ),
        ));
    }
    let layer_count = config.integrator_hidden.len() + 1;
    let mut x = features;
    for j in 0..layer_count {
        if j + 1 == layer_count {
            x = graph.dropout(x, config.dropout_rate, mode, rng)?;
        }
        let w = param(vars, &format!("integrator.layer{}.weight", j))?;
        let b = param(vars, &format!("integrator.layer{}.bias", j))?;
        x = graph.linear(x, w, b)?;
        if j + 1 < layer_count {
            x = graph.relu(x)?;
        }
    }
    // x is l×m logits; the softmax normalizes over the l sample points of
    // each structure point, so transpose to m×l rows first.
    let scores = graph.transpose(x)?;
    graph.softmax_rows(scores)
}

/// S = P·Q: each structure point is a convex combination of sample points.
pub fn structure_points<T: Real>(graph: &mut Graph<T>, p: Var, q: Var) -> Result<Var> {
    let (ps, qs) = (graph.value(p).shape().to_vec(), graph.value(q).shape().to_vec());
    if ps.len() != 2 || qs.len() != 2 || qs[1] != 3 || ps[1] != qs[0] {
        return Err(Error::shape(
            "structure_points",
            format!("P {:?} · Q {:?}", ps, qs),
        ));
    }
    graph.matmul(p, q)
}

/// H = P·F: per-structure-point features under the same weighting.
pub fn per_point_features<T: Real>(graph: &mut Graph<T>, p: Var, f: Var) -> Result<Var> {
    let (ps, fs) = (graph.value(p).shape().to_vec(), graph.value(f).shape().to_vec());
    if ps.len() != 2 || fs.len() != 2 || ps[1] != fs[0] {
        return Err(Error::shape(
            "per_point_features",
            format!("P {:?} · F {:?}", ps, fs),
        ));
    }
    graph.matmul(p, f)
}

/// Full pipeline output: structure points S, probability maps P, and the
/// encoded cloud they were derived from.
pub struct ForwardOutput {
    /// m×3 structure points.
    pub structure_points: Var,
    /// m×l probability maps.
    pub probability_maps: Var,
    pub encoded: EncodedCloud,
}

/// encode → probability_maps → structure_points.
pub fn forward<T: Real>(
    graph: &mut Graph<T>,
    cloud: &PointCloud,
    config: &ModelConfig,
    vars: &VarMap,
    mode: Mode,
    rng: &mut impl rand::Rng,
) -> Result<ForwardOutput> {
    let encoded = encode(graph, cloud, &config.levels(), vars)?;
    let p = probability_maps(graph, encoded.features, config, vars, mode, rng)?;
    let s = structure_points(graph, p, encoded.q)?;
    Ok(ForwardOutput {
        structure_points: s,
        probability_maps: p,
        encoded,
    })
}
