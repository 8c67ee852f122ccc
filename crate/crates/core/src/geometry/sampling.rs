//! Deterministic sampling and grouping kernels.

use rand::Rng as _;

use super::cloud::PointCloud;
use super::vec3;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Greedy max-min farthest point sampling.
///
/// The first pick is the point farthest from the centroid (lexicographic
/// coordinate tie-break), each later pick maximizes the distance to the
/// already-chosen set (lowest-index tie-break). Deterministic, and
/// permutation-invariant as a point set.
pub fn farthest_point_sample(cloud: &PointCloud, k: usize) -> Result<Vec<usize>> {
    let n = cloud.len();
    if k == 0 || k > n {
        return Err(Error::invalid(
            "farthest_point_sample",
            format!("k = {} outside 1..={}", k, n),
        ));
    }
    let c = cloud.centroid();
    let mut first = 0;
    let mut first_d = f64::NEG_INFINITY;
    for (i, &p) in cloud.points.iter().enumerate() {
        let d = vec3::dist_sq(p, c);
        if d > first_d
            || (d == first_d && vec3::lex_less(p, cloud.points[first]))
        {
            first = i;
            first_d = d;
        }
    }

    let mut chosen = Vec::with_capacity(k);
    chosen.push(first);
    // min squared distance from every point to the chosen set
    let mut min_d: Vec<f64> = cloud
        .points
        .iter()
        .map(|&p| vec3::dist_sq(p, cloud.points[first]))
        .collect();
    while chosen.len() < k {
        let mut best = 0;
        let mut best_d = f64::NEG_INFINITY;
        for (i, &d) in min_d.iter().enumerate() {
            if d > best_d {
                best = i;
                best_d = d;
            }
        }
        chosen.push(best);
        let bp = cloud.points[best];
        for (i, d) in min_d.iter_mut().enumerate() {
            let nd = vec3::dist_sq(cloud.points[i], bp);
            if nd < *d {
                *d = nd;
            }
        }
    }
    Ok(chosen)
}

/// One fixed-width neighborhood produced by [`ball_query`].
#[derive(Clone, Debug, PartialEq)]
pub struct Group {
    /// Point indices, `valid` real entries sorted nearest-first, then padded
    /// by repeating the first entry up to the fixed group width.
    pub indices: Vec<usize>,
    pub valid: usize,
}

/// Radius search around each center, nearest-first, truncated to
/// `max_samples` and padded to fixed width by repeating the nearest entry.
/// A center with no point in range falls back to the single globally
/// nearest point.
pub fn ball_query(
    cloud: &PointCloud,
    centers: &[[f64; 3]],
    radius: f64,
    max_samples: usize,
) -> Result<Vec<Group>> {
    if !(radius > 0.0) {
        return Err(Error::invalid("ball_query", format!("radius {} must be > 0", radius)));
    }
    if max_samples == 0 {
        return Err(Error::invalid("ball_query", "max_samples must be ≥ 1"));
    }
    let r2 = radius * radius;
    let mut groups = Vec::with_capacity(centers.len());
    for &c in centers {
        let mut hits: Vec<(f64, usize)> = Vec::new();
        for (i, &p) in cloud.points.iter().enumerate() {
            let d2 = vec3::dist_sq(p, c);
            if d2 <= r2 {
                hits.push((d2, i));
            }
        }
        hits.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        hits.truncate(max_samples);
        if hits.is_empty() {
            let mut best = (f64::INFINITY, 0);
            for (i, &p) in cloud.points.iter().enumerate() {
                let d2 = vec3::dist_sq(p, c);
                if d2 < best.0 {
                    best = (d2, i);
                }
            }
            hits.push(best);
        }
        let valid = hits.len();
        let mut indices: Vec<usize> = hits.into_iter().map(|(_, i)| i).collect();
        while indices.len() < max_samples {
            indices.push(indices[0]);
        }
        groups.push(Group { indices, valid });
    }
    Ok(groups)
}

#[derive(Clone, Copy, Debug)]
pub struct ResampleConfig {
    pub seed_count: usize,
    pub hole_radius: f64,
    pub removal_prob: f64,
}

impl Default for ResampleConfig {
    fn default() -> Self {
        // visible holes while retaining overall coverage
        ResampleConfig {
            seed_count: 8,
            hole_radius: 0.2,
            removal_prob: 0.7,
        }
    }
}

/// Punch random holes: pick `seed_count` seed points uniformly, then drop
/// each point within `hole_radius` of any seed with probability
/// `removal_prob`. Labels follow the surviving points.
pub fn nonuniform_resample(
    cloud: &PointCloud,
    config: &ResampleConfig,
    rng: &mut Rng,
) -> Result<PointCloud> {
    if config.seed_count == 0 {
        return Err(Error::invalid("nonuniform_resample", "seed_count must be ≥ 1"));
    }
    if !(0.0..=1.0).contains(&config.removal_prob) {
        return Err(Error::invalid(
            "nonuniform_resample",
            format!("removal_prob {} outside [0,1]", config.removal_prob),
        ));
    }
    let n = cloud.len();
    let seeds: Vec<[f64; 3]> = (0..config.seed_count)
        .map(|_| cloud.points[rng.gen_range(0..n)])
        .collect();
    let r2 = config.hole_radius * config.hole_radius;
    let mut keep = Vec::with_capacity(n);
    for &p in &cloud.points {
        let near = seeds.iter().any(|&s| vec3::dist_sq(p, s) <= r2);
        let drop = near && rng.gen::<f64>() < config.removal_prob;
        keep.push(!drop);
    }
    let points: Vec<[f64; 3]> = cloud
        .points
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(&p, _)| p)
        .collect();
    if points.is_empty() {
        return Err(Error::degenerate(
            "nonuniform_resample",
            "every point was removed",
        ));
    }
    let labels = cloud.labels.as_ref().map(|ls| {
        ls.iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(&l, _)| l)
            .collect()
    });
    Ok(PointCloud {
        points,
        labels,
        landmarks: cloud.landmarks.clone(),
    })
}

/// Grow a cloud to `target` points by cycling through the existing points
/// in index order. Deterministic; labels follow the duplicated points.
pub fn upsample_repeat(cloud: &PointCloud, target: usize) -> PointCloud {
    let n = cloud.len();
    if target <= n {
        return cloud.clone();
    }
    let mut points = cloud.points.clone();
    let mut labels = cloud.labels.clone();
    for i in n..target {
        points.push(cloud.points[i % n]);
        if let (Some(ls), Some(src)) = (labels.as_mut(), cloud.labels.as_ref()) {
            ls.push(src[i % n]);
        }
    }
    PointCloud {
        points,
        labels,
        landmarks: cloud.landmarks.clone(),
    }
}
