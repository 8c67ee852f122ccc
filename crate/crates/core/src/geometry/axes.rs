//! Principal axes and the axis-swap alignment used for augmentation.

use nalgebra::{Matrix3, SymmetricEigen};
use rand::Rng as _;

use super::cloud::{Landmark, PointCloud};
use super::vec3;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Right-handed orthonormal frame ordered by descending variance.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisFrame {
    /// Row i is the i-th principal axis (unit length).
    pub axes: [[f64; 3]; 3],
    pub variances: [f64; 3],
    /// False when eigenvalues are nearly tied and the ordering is
    /// numerically arbitrary (near-isotropic cloud).
    pub stable: bool,
}

/// Eigen-decomposition of the point covariance, axes sorted by descending
/// eigenvalue. Each axis's sign is fixed so the sum of raw point projections
/// onto it is ≥ 0, with a lexicographic tie-break (first nonzero component
/// positive) when the sum is exactly zero; the third axis is flipped if
/// needed to make the frame right-handed.
pub fn principal_axes(cloud: &PointCloud) -> Result<AxisFrame> {
    let n = cloud.len();
    if n < 3 {
        return Err(Error::invalid(
            "principal_axes",
            format!("need at least 3 points, got {}", n),
        ));
    }
    let mean = cloud.centroid();
    let mut cov = Matrix3::<f64>::zeros();
    for &p in &cloud.points {
        let d = vec3::sub(p, mean);
        for r in 0..3 {
            for c in 0..3 {
                cov[(r, c)] += d[r] * d[c];
            }
        }
    }
    cov /= n as f64;

    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let variances = [
        eig.eigenvalues[order[0]].max(0.0),
        eig.eigenvalues[order[1]].max(0.0),
        eig.eigenvalues[order[2]].max(0.0),
    ];
    if variances[0] < 1e-300 || variances[2] < 1e-9 * variances[0] {
        return Err(Error::degenerate(
            "principal_axes",
            "rank-deficient covariance: points are coplanar or coincident",
        ));
    }

    let mut axes = [[0.0; 3]; 3];
    for (i, &oi) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(oi);
        let mut a = [col[0], col[1], col[2]];
        let len = vec3::norm(a);
        a = vec3::scale(a, 1.0 / len);
        let proj_sum: f64 = cloud.points.iter().map(|&p| vec3::dot(p, a)).sum();
        let flip = if proj_sum != 0.0 {
            proj_sum < 0.0
        } else {
            // orient so the first nonzero component is positive
            vec3::lex_less(a, vec3::scale(a, -1.0))
        };
        if flip {
            a = vec3::scale(a, -1.0);
        }
        axes[i] = a;
    }
    let det = vec3::dot(axes[0], vec3::cross(axes[1], axes[2]));
    if det < 0.0 {
        axes[2] = vec3::scale(axes[2], -1.0);
    }

    let gap01 = variances[0] - variances[1];
    let gap12 = variances[1] - variances[2];
    let stable = gap01 > 1e-6 * variances[0] && gap12 > 1e-6 * variances[0];
    Ok(AxisFrame {
        axes,
        variances,
        stable,
    })
}

/// One of the six orderings of three axes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Permutation([usize; 3]);

impl Permutation {
    pub const ALL: [Permutation; 6] = [
        Permutation([0, 1, 2]),
        Permutation([0, 2, 1]),
        Permutation([1, 0, 2]),
        Permutation([1, 2, 0]),
        Permutation([2, 0, 1]),
        Permutation([2, 1, 0]),
    ];

    pub fn identity() -> Self {
        Permutation([0, 1, 2])
    }

    pub fn new(order: [usize; 3]) -> Result<Self> {
        let mut seen = [false; 3];
        for &i in &order {
            if i > 2 || seen[i] {
                return Err(Error::invalid(
                    "permutation",
                    format!("{:?} is not an ordering of 0,1,2", order),
                ));
            }
            seen[i] = true;
        }
        Ok(Permutation(order))
    }

    pub fn order(&self) -> [usize; 3] {
        self.0
    }

    pub fn is_even(&self) -> bool {
        let [a, b, c] = self.0;
        // even permutations of (0,1,2) are its cyclic rotations
        matches!((a, b, c), (0, 1, 2) | (1, 2, 0) | (2, 0, 1))
    }

    pub fn random(rng: &mut Rng) -> Self {
        Self::ALL[rng.gen_range(0..6)]
    }
}

/// The permuted frame: axis j of the result is axis `perm[j]` of `frame`,
/// with the last axis negated for odd permutations so the frame stays
/// right-handed.
fn permuted_axes(frame: &AxisFrame, perm: Permutation) -> [[f64; 3]; 3] {
    let o = perm.order();
    let mut b = [frame.axes[o[0]], frame.axes[o[1]], frame.axes[o[2]]];
    if !perm.is_even() {
        b[2] = vec3::scale(b[2], -1.0);
    }
    b
}

/// Re-express every point (and landmark) in the permuted principal frame:
/// output coordinate j is the projection onto permuted axis j. The identity
/// permutation aligns the cloud to its own principal frame.
pub fn axis_swap_augment(cloud: &PointCloud, frame: &AxisFrame, perm: Permutation) -> PointCloud {
    let b = permuted_axes(frame, perm);
    let map = |p: [f64; 3]| [vec3::dot(p, b[0]), vec3::dot(p, b[1]), vec3::dot(p, b[2])];
    PointCloud {
        points: cloud.points.iter().map(|&p| map(p)).collect(),
        labels: cloud.labels.clone(),
        landmarks: cloud.landmarks.as_ref().map(|ls| {
            ls.iter()
                .map(|l| Landmark {
                    name: l.name.clone(),
                    position: map(l.position),
                })
                .collect()
        }),
    }
}

/// Signed permutation R (det +1) relating identity-aligned coordinates q to
/// the coordinates produced under `perm`: q' = R·q. Used by the training
/// consistency loss to compare structure points across augmentations.
pub fn consistency_rotation(frame: &AxisFrame, perm: Permutation) -> [[f64; 3]; 3] {
    let b = permuted_axes(frame, perm);
    let a = frame.axes;
    let mut r = [[0.0; 3]; 3];
    for j in 0..3 {
        for k in 0..3 {
            r[j][k] = vec3::dot(b[j], a[k]);
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    /// Symmetric cloud with distinct spreads along x > y > z.
    fn anisotropic_cloud() -> PointCloud {
        let mut points = Vec::new();
        for &sx in &[-2.0, 2.0] {
            for &sy in &[-0.9, 0.9] {
                for &sz in &[-0.4, 0.4] {
                    points.push([sx, sy, sz]);
                }
            }
        }
        PointCloud::new(points).unwrap()
    }

    fn random_cloud(rng: &mut crate::rng::Rng, n: usize) -> PointCloud {
        let points = (0..n)
            .map(|_| {
                [
                    rng.gen_range(-1.0..1.0) * 2.0,
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0) * 0.5,
                ]
            })
            .collect();
        PointCloud::new(points).unwrap()
    }

    #[test]
    fn axes_of_axis_aligned_cloud() {
        let frame = principal_axes(&anisotropic_cloud()).unwrap();
        assert!(frame.stable);
        let expected = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        for i in 0..3 {
            for d in 0..3 {
                assert!(
                    (frame.axes[i][d] - expected[i][d]).abs() < 1e-9,
                    "axis {} = {:?}",
                    i,
                    frame.axes[i]
                );
            }
        }
        // hand-computed covariance diagonal: mean of squares
        assert!((frame.variances[0] - 4.0).abs() < 1e-9);
        assert!((frame.variances[1] - 0.81).abs() < 1e-9);
        assert!((frame.variances[2] - 0.16).abs() < 1e-9);
    }

    #[test]
    fn frame_is_right_handed_and_orthonormal() {
        let mut rng = seeded(21);
        for _ in 0..20 {
            let cloud = random_cloud(&mut rng, 40);
            let frame = principal_axes(&cloud).unwrap();
            for i in 0..3 {
                assert!((vec3::norm(frame.axes[i]) - 1.0).abs() < 1e-6);
                for j in (i + 1)..3 {
                    assert!(vec3::dot(frame.axes[i], frame.axes[j]).abs() < 1e-6);
                }
            }
            let det = vec3::dot(frame.axes[0], vec3::cross(frame.axes[1], frame.axes[2]));
            assert!((det - 1.0).abs() < 1e-6);
            assert!(frame.variances[0] >= frame.variances[1]);
            assert!(frame.variances[1] >= frame.variances[2]);
        }
    }

    #[test]
    fn cube_corners_are_unstable_but_deterministic() {
        let mut points = Vec::new();
        for &x in &[-1.0, 1.0] {
            for &y in &[-1.0, 1.0] {
                for &z in &[-1.0, 1.0] {
                    points.push([x, y, z]);
                }
            }
        }
        let cloud = PointCloud::new(points).unwrap();
        let a = principal_axes(&cloud).unwrap();
        let b = principal_axes(&cloud).unwrap();
        assert!(!a.stable);
        assert_eq!(a, b);
        // isotropic: all variances 1 (covariance = identity by hand)
        for v in a.variances {
            assert!((v - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn planar_cloud_is_degenerate() {
        let mut rng = seeded(3);
        let points: Vec<[f64; 3]> = (0..30)
            .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.0])
            .collect();
        let cloud = PointCloud::new(points).unwrap();
        assert!(matches!(
            principal_axes(&cloud),
            Err(Error::Degenerate { .. })
        ));
    }

    #[test]
    fn too_few_points_rejected() {
        let cloud = PointCloud::new(vec![[0.0; 3], [1.0, 2.0, 3.0]]).unwrap();
        assert!(principal_axes(&cloud).is_err());
    }

    #[test]
    fn axes_invariant_to_order_and_scale_up_to_sign() {
        let mut rng = seeded(8);
        use rand::seq::SliceRandom as _;
        for _ in 0..10 {
            let cloud = random_cloud(&mut rng, 60);
            let frame = principal_axes(&cloud).unwrap();

            let mut shuffled = cloud.points.clone();
            shuffled.shuffle(&mut rng);
            let frame_shuffled =
                principal_axes(&PointCloud::new(shuffled).unwrap()).unwrap();
            for i in 0..3 {
                let d = vec3::dot(frame.axes[i], frame_shuffled.axes[i]).abs();
                assert!(d > 1.0 - 1e-6, "axis {} changed line under shuffle", i);
            }

            let scaled: Vec<[f64; 3]> =
                cloud.points.iter().map(|&p| vec3::scale(p, 3.7)).collect();
            let frame_scaled = principal_axes(&PointCloud::new(scaled).unwrap()).unwrap();
            for i in 0..3 {
                let d = vec3::dot(frame.axes[i], frame_scaled.axes[i]).abs();
                assert!(d > 1.0 - 1e-9);
                assert!(
                    (frame_scaled.variances[i] - frame.variances[i] * 3.7 * 3.7).abs()
                        < 1e-6 * frame.variances[0] * 3.7 * 3.7
                );
            }
        }
    }

    #[test]
    fn permutation_validation_and_parity() {
        assert!(Permutation::new([0, 1, 2]).is_ok());
        assert!(Permutation::new([0, 0, 2]).is_err());
        assert!(Permutation::new([0, 1, 3]).is_err());
        let even: Vec<bool> = Permutation::ALL.iter().map(|p| p.is_even()).collect();
        assert_eq!(even.iter().filter(|&&e| e).count(), 3);
        assert!(Permutation::identity().is_even());
    }

    #[test]
    fn identity_permutation_aligns_to_principal_frame() {
        let cloud = anisotropic_cloud();
        let frame = principal_axes(&cloud).unwrap();
        let aligned = axis_swap_augment(&cloud, &frame, Permutation::identity());
        // already axis-aligned with +x/+y/+z frame, so alignment is identity
        for (a, b) in cloud.points.iter().zip(&aligned.points) {
            for d in 0..3 {
                assert!((a[d] - b[d]).abs() < 1e-9);
            }
        }
        // aligned cloud's own principal axes are the coordinate axes
        let re = principal_axes(&aligned).unwrap();
        for (i, row) in re.axes.iter().enumerate() {
            assert!((row[i].abs() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn consistency_rotation_reproduces_augmented_coordinates() {
        let mut rng = seeded(14);
        for _ in 0..5 {
            let cloud = random_cloud(&mut rng, 50);
            let frame = principal_axes(&cloud).unwrap();
            let aligned = axis_swap_augment(&cloud, &frame, Permutation::identity());
            for perm in Permutation::ALL {
                let augmented = axis_swap_augment(&cloud, &frame, perm);
                let r = consistency_rotation(&frame, perm);
                // det(R) = +1
                let det = vec3::dot(r[0], vec3::cross(r[1], r[2]));
                assert!((det - 1.0).abs() < 1e-9);
                for (q, q2) in aligned.points.iter().zip(&augmented.points) {
                    let mapped = [
                        vec3::dot(r[0], *q),
                        vec3::dot(r[1], *q),
                        vec3::dot(r[2], *q),
                    ];
                    for d in 0..3 {
                        assert!((mapped[d] - q2[d]).abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn rotation_inverse_returns_aligned_cloud() {
        let mut rng = seeded(15);
        let cloud = random_cloud(&mut rng, 50);
        let frame = principal_axes(&cloud).unwrap();
        let aligned = axis_swap_augment(&cloud, &frame, Permutation::identity());
        for perm in Permutation::ALL {
            let augmented = axis_swap_augment(&cloud, &frame, perm);
            let r = consistency_rotation(&frame, perm);
            // R is orthogonal, so applying Rᵀ undoes the swap
            for (q, q2) in aligned.points.iter().zip(&augmented.points) {
                let back = [
                    r[0][0] * q2[0] + r[1][0] * q2[1] + r[2][0] * q2[2],
                    r[0][1] * q2[0] + r[1][1] * q2[1] + r[2][1] * q2[2],
                    r[0][2] * q2[0] + r[1][2] * q2[1] + r[2][2] * q2[2],
                ];
                for d in 0..3 {
                    assert!((back[d] - q[d]).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn swap_of_first_two_axes_swaps_ellipsoid_extents() {
        // axis-aligned ellipsoid samples with semi-axes 1.0 > 0.6 > 0.3
        let mut rng = seeded(4);
        let points: Vec<[f64; 3]> = (0..400)
            .map(|_| {
                let dir: [f64; 3] = [
                    rng.gen_range(-1.0..1.0f64),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ];
                let n = vec3::norm(dir).max(1e-9);
                [dir[0] / n, 0.6 * dir[1] / n, 0.3 * dir[2] / n]
            })
            .collect();
        let cloud = PointCloud::new(points).unwrap();
        let frame = principal_axes(&cloud).unwrap();
        let swap = Permutation::new([1, 0, 2]).unwrap();
        let augmented = axis_swap_augment(&cloud, &frame, swap);
        let extent = |pts: &[[f64; 3]], d: usize| {
            pts.iter().map(|p| p[d].abs()).fold(0.0f64, f64::max)
        };
        // output axis 0 now carries the middle spread, axis 1 the largest
        assert!((extent(&augmented.points, 0) - 0.6).abs() < 0.1);
        assert!((extent(&augmented.points, 1) - 1.0).abs() < 0.1);
        assert!((extent(&augmented.points, 2) - 0.3).abs() < 0.1);
    }

    #[test]
    fn random_permutation_is_seeded() {
        let mut a = seeded(2);
        let mut b = seeded(2);
        for _ in 0..20 {
            assert_eq!(Permutation::random(&mut a), Permutation::random(&mut b));
        }
    }
}
