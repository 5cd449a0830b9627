use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use super::{GeometryError, Pose};

/// Corresponding 3D points with per-point validity. The homogeneous
/// coordinate is implicit.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointSet3 {
    pub points: Vec<Vector3<f64>>,
    pub valid: Vec<bool>,
}

impl PointSet3 {
    pub fn new(points: Vec<Vector3<f64>>, valid: Vec<bool>) -> Self {
        assert_eq!(points.len(), valid.len());
        Self { points, valid }
    }

    /// All points valid.
    pub fn from_points(points: Vec<Vector3<f64>>) -> Self {
        let valid = vec![true; points.len()];
        Self { points, valid }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn transformed(&self, pose: &Pose) -> PointSet3 {
        PointSet3 {
            points: self.points.iter().map(|p| pose.transform_point(p)).collect(),
            valid: self.valid.clone(),
        }
    }
}

/// Weighted least-squares rigid fit between two point sets.
///
/// Only pairs valid in both sets with positive weight take part.
pub fn fit_rigid(src: &PointSet3, dst: &PointSet3, weights: Option<&[f64]>) -> Result<Pose, GeometryError> {
    if src.len() != dst.len() {
        return Err(GeometryError::LengthMismatch(src.len(), dst.len()));
    }
    if let Some(w) = weights {
        if w.len() != src.len() {
            return Err(GeometryError::LengthMismatch(src.len(), w.len()));
        }
    }
    fit_correspondences(&src.points, &dst.points, |i| {
        if !(src.valid[i] && dst.valid[i]) {
            return 0.0;
        }
        weights.map_or(1.0, |w| w[i])
    })
}

/// Rigid fit over `src[i] -> dst[i]`, where `weight(i)` selects and weights
/// each pair (non-positive weights are skipped).
///
/// Centroid subtraction followed by an SVD of the weighted cross-covariance,
/// with the reflection case corrected on the smallest singular direction.
pub fn fit_correspondences<F>(src: &[Vector3<f64>], dst: &[Vector3<f64>], weight: F) -> Result<Pose, GeometryError>
where
    F: Fn(usize) -> f64,
{
    let n = src.len().min(dst.len());
    let mut count = 0usize;
    let mut wsum = 0.0;
    let mut cs = Vector3::zeros();
    let mut cd = Vector3::zeros();
    for i in 0..n {
        let w = weight(i);
        if w > 0.0 && w.is_finite() {
            count += 1;
            wsum += w;
            cs += w * src[i];
            cd += w * dst[i];
        }
    }
    if count < 3 {
        return Err(GeometryError::InsufficientPoints(count));
    }
    cs /= wsum;
    cd /= wsum;

    let mut cross = Matrix3::zeros();
    let mut scatter = Matrix3::zeros();
    for i in 0..n {
        let w = weight(i);
        if w > 0.0 && w.is_finite() {
            let a = src[i] - cs;
            let b = dst[i] - cd;
            cross += w * a * b.transpose();
            scatter += w * a * a.transpose();
        }
    }

    // rank(centered src) < 2 <=> second largest scatter eigenvalue vanishes
    let mut eig = SymmetricEigen::new(scatter).eigenvalues;
    eig.as_mut_slice().sort_by(|a, b| b.total_cmp(a));
    if eig[0] <= 1e-24 || eig[1] <= 1e-12 * eig[0] {
        return Err(GeometryError::DegenerateConfiguration);
    }

    let svd = cross.svd(true, true);
    let u = svd.u.ok_or(GeometryError::DegenerateConfiguration)?;
    let v = svd.v_t.ok_or(GeometryError::DegenerateConfiguration)?.transpose();
    let mut rotation = v * u.transpose();
    if rotation.determinant() < 0.0 {
        let smallest = svd.singular_values.imin();
        let mut flip = Matrix3::identity();
        flip[(smallest, smallest)] = -1.0;
        rotation = v * flip * u.transpose();
    }
    let pose = Pose::from_matrix(&rotation, Vector3::zeros());
    let translation = cd - pose.rotation * cs;
    Ok(Pose::new(pose.rotation, translation))
}

/// Squared residual `|H x_src - x_dst|^2` per pair; `None` where either
/// side is invalid.
pub fn rigid_error(pose: &Pose, src: &PointSet3, dst: &PointSet3) -> Result<Vec<Option<f64>>, GeometryError> {
    if src.len() != dst.len() {
        return Err(GeometryError::LengthMismatch(src.len(), dst.len()));
    }
    Ok(src
        .points
        .iter()
        .zip(&dst.points)
        .zip(src.valid.iter().zip(&dst.valid))
        .map(|((s, d), (&vs, &vd))| (vs && vd).then(|| squared_residual(pose, s, d)))
        .collect())
}

#[inline]
pub fn squared_residual(pose: &Pose, src: &Vector3<f64>, dst: &Vector3<f64>) -> f64 {
    (pose.transform_point(src) - dst).norm_squared()
}
