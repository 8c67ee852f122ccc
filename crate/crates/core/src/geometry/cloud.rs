//! Point clouds with optional part labels and named landmarks.

use super::vec3;
use crate::error::{Error, Result};

/// Named semantic position riding along with a cloud (synthetic data only).
#[derive(Clone, Debug, PartialEq)]
pub struct Landmark {
    pub name: String,
    pub position: [f64; 3],
}

/// An unordered set of 3D points in a normalized, unitless space.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    pub points: Vec<[f64; 3]>,
    /// Per-point part labels, same length as `points` when present.
    pub labels: Option<Vec<u32>>,
    pub landmarks: Option<Vec<Landmark>>,
}

impl PointCloud {
    pub fn new(points: Vec<[f64; 3]>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("point cloud", "must contain at least one point"));
        }
        for (i, p) in points.iter().enumerate() {
            if !p.iter().all(|c| c.is_finite()) {
                return Err(Error::invalid(
                    "point cloud",
                    format!("non-finite coordinate at point {}", i),
                ));
            }
        }
        Ok(PointCloud {
            points,
            labels: None,
            landmarks: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != self.points.len() {
            return Err(Error::invalid(
                "point cloud",
                format!("{} labels for {} points", labels.len(), self.points.len()),
            ));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_landmarks(mut self, landmarks: Vec<Landmark>) -> Self {
        self.landmarks = Some(landmarks);
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> [f64; 3] {
        let mut c = [0.0; 3];
        for p in &self.points {
            c = vec3::add(c, *p);
        }
        vec3::scale(c, 1.0 / self.points.len() as f64)
    }

    /// Landmark position by name, if present.
    pub fn landmark(&self, name: &str) -> Option<[f64; 3]> {
        self.landmarks
            .as_ref()?
            .iter()
            .find(|l| l.name == name)
            .map(|l| l.position)
    }

    /// Points whose label equals `label`.
    pub fn indices_with_label(&self, label: u32) -> Vec<usize> {
        match &self.labels {
            Some(ls) => ls
                .iter()
                .enumerate()
                .filter(|(_, &l)| l == label)
                .map(|(i, _)| i)
                .collect(),
            None => Vec::new(),
        }
    }
}

/// Center at the centroid and scale uniformly so the farthest point sits on
/// the unit sphere. Labels carry over; landmarks get the same transform.
pub fn normalize_unit_sphere(cloud: &PointCloud) -> Result<PointCloud> {
    let c = cloud.centroid();
    let mut max_norm: f64 = 0.0;
    for p in &cloud.points {
        max_norm = max_norm.max(vec3::norm(vec3::sub(*p, c)));
    }
    if max_norm < 1e-12 {
        return Err(Error::degenerate(
            "normalize_unit_sphere",
            "all points coincident; unit-sphere scale undefined",
        ));
    }
    let s = 1.0 / max_norm;
    let map = |p: [f64; 3]| vec3::scale(vec3::sub(p, c), s);
    let points = cloud.points.iter().map(|&p| map(p)).collect();
    let landmarks = cloud.landmarks.as_ref().map(|ls| {
        ls.iter()
            .map(|l| Landmark {
                name: l.name.clone(),
                position: map(l.position),
            })
            .collect()
    });
    Ok(PointCloud {
        points,
        labels: cloud.labels.clone(),
        landmarks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_two_points() {
        let cloud = PointCloud::new(vec![[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]]).unwrap();
        let out = normalize_unit_sphere(&cloud).unwrap();
        assert_eq!(out.points, vec![[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
    }

    #[test]
    fn normalize_already_normalized_is_identity() {
        let cloud = PointCloud::new(vec![
            [1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0],
            [0.0, 0.5, 0.0],
            [0.0, -0.5, 0.0],
        ])
        .unwrap();
        let out = normalize_unit_sphere(&cloud).unwrap();
        for (a, b) in cloud.points.iter().zip(&out.points) {
            for d in 0..3 {
                assert!((a[d] - b[d]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn normalize_coincident_points_errors() {
        let cloud = PointCloud::new(vec![[1.0, 2.0, 3.0]; 5]).unwrap();
        assert!(normalize_unit_sphere(&cloud).is_err());
    }

    #[test]
    fn normalize_postconditions_hold() {
        let mut rng = crate::rng::seeded(31);
        use rand::Rng as _;
        for _ in 0..20 {
            let n = rng.gen_range(2..64);
            let points: Vec<[f64; 3]> = (0..n)
                .map(|_| {
                    [
                        rng.gen_range(-5.0..5.0),
                        rng.gen_range(-5.0..5.0),
                        rng.gen_range(-5.0..5.0),
                    ]
                })
                .collect();
            let Ok(out) = normalize_unit_sphere(&PointCloud::new(points).unwrap()) else {
                continue;
            };
            let c = out.centroid();
            assert!(vec3::norm(c) < 1e-6, "centroid {:?}", c);
            let max_norm = out
                .points
                .iter()
                .map(|&p| vec3::norm(p))
                .fold(0.0f64, f64::max);
            assert!((max_norm - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn landmarks_track_transform() {
        let cloud = PointCloud::new(vec![[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
            .unwrap()
            .with_landmarks(vec![Landmark {
                name: "tip".into(),
                position: [2.0, 0.0, 0.0],
            }]);
        let out = normalize_unit_sphere(&cloud).unwrap();
        assert_eq!(out.landmark("tip"), Some([1.0, 0.0, 0.0]));
    }

    #[test]
    fn label_length_checked() {
        let cloud = PointCloud::new(vec![[0.0; 3], [1.0, 0.0, 0.0]]).unwrap();
        assert!(cloud.clone().with_labels(vec![1]).is_err());
        let ok = cloud.with_labels(vec![1, 2]).unwrap();
        assert_eq!(ok.indices_with_label(2), vec![1]);
    }

    #[test]
    fn rejects_empty_and_nonfinite() {
        assert!(PointCloud::new(vec![]).is_err());
        assert!(PointCloud::new(vec![[f64::NAN, 0.0, 0.0]]).is_err());
    }
}
