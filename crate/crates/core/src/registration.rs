//! Rigid alignment of two embeddings: ICP with orthogonal Procrustes steps,
//! seeded from a fixed set of mirror and rotation pre-transforms.

use kiddo::{ImmutableKdTree, SquaredEuclidean};
use nalgebra::{Matrix3, Vector3};
use ndarray::ArrayView2;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegistrationError {
    #[error("need at least 3 points per cloud, got {0}")]
    TooFewPoints(usize),
    #[error("clouds must share a dimension of 2 or 3, got {p} and {q}")]
    Dimension { p: usize, q: usize },
    #[error("point cloud spans fewer than 2 dimensions")]
    Degenerate,
    #[error("point cloud contains non-finite values")]
    NonFinite,
}

pub type Result<T, E = RegistrationError> = std::result::Result<T, E>;

/// `x ↦ rotation·x + translation`. `rotation` has determinant −1 when
/// `mirrored`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
    pub mirrored: bool,
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self::linear(Matrix3::identity())
    }

    fn linear(m: Matrix3<f64>) -> Self {
        Self {
            rotation: m,
            translation: Vector3::zeros(),
            mirrored: m.determinant() < 0.0,
        }
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// `self ∘ inner`: apply `inner` first.
    pub fn compose(&self, inner: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * inner.rotation,
            translation: self.rotation * inner.translation + self.translation,
            mirrored: self.mirrored != inner.mirrored,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IcpResult {
    /// Maps the moving cloud onto the fixed one.
    pub transform: RigidTransform,
    pub rmse: f64,
    /// RMSE before the first step and after each step.
    pub trace: Vec<f64>,
}

fn to_points(x: ArrayView2<'_, f64>) -> Result<Vec<Vector3<f64>>> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(RegistrationError::NonFinite);
    }
    Ok(x.rows()
        .into_iter()
        .map(|r| Vector3::from_fn(|d, _| r.get(d).copied().unwrap_or(0.0)))
        .collect())
}

type Cloud = Vec<Vector3<f64>>;

fn check(p: ArrayView2<'_, f64>, q: ArrayView2<'_, f64>) -> Result<(Cloud, Cloud)> {
    let (dp, dq) = (p.ncols(), q.ncols());
    if dp != dq || !(2..=3).contains(&dp) {
        return Err(RegistrationError::Dimension { p: dp, q: dq });
    }
    let n = p.nrows().min(q.nrows());
    if n < 3 {
        return Err(RegistrationError::TooFewPoints(n));
    }
    let (p, q) = (to_points(p)?, to_points(q)?);
    if rank(&p) < 2 || rank(&q) < 2 {
        return Err(RegistrationError::Degenerate);
    }
    Ok((p, q))
}

fn centroid(p: &[Vector3<f64>]) -> Vector3<f64> {
    p.iter().sum::<Vector3<f64>>() / p.len() as f64
}

fn rank(p: &[Vector3<f64>]) -> usize {
    let c = centroid(p);
    let cov: Matrix3<f64> = p.iter().map(|x| (x - c) * (x - c).transpose()).sum();
    let sv = cov.singular_values();
    let top = sv.max();
    if top <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > top * 1e-12).count()
}

/// Least-squares proper rotation and translation taking `src[i]` to `dst[i]`.
fn procrustes(src: &[Vector3<f64>], dst: &[Vector3<f64>]) -> RigidTransform {
    let (cs, cd) = (centroid(src), centroid(dst));
    let h: Matrix3<f64> = src.iter().zip(dst).map(|(s, d)| (s - cs) * (d - cd).transpose()).sum();
    let svd = h.svd(true, true);
    let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v requested"));
    let v = vt.transpose();
    // keep det(R) = +1
    let sign = (v * u.transpose()).determinant().signum();
    let r = v * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, sign)) * u.transpose();
    RigidTransform {
        rotation: r,
        translation: cd - r * cs,
        mirrored: false,
    }
}

struct Target {
    tree: ImmutableKdTree<f64, 3>,
    points: Vec<Vector3<f64>>,
}

impl Target {
    fn new(points: Vec<Vector3<f64>>) -> Self {
        let coords: Vec<[f64; 3]> = points.iter().map(|p| [p.x, p.y, p.z]).collect();
        Self {
            tree: ImmutableKdTree::new_from_slice(&coords),
            points,
        }
    }

    /// Nearest target point for each source point, and the RMS distance.
    fn matches(&self, src: &[Vector3<f64>]) -> (Vec<Vector3<f64>>, f64) {
        let mut sum = 0.0;
        let m = src
            .iter()
            .map(|p| {
                let nn = self.tree.nearest_one::<SquaredEuclidean>(&[p.x, p.y, p.z]);
                sum += nn.distance;
                self.points[nn.item as usize]
            })
            .collect();
        (m, (sum / src.len() as f64).sqrt())
    }
}

/// ICP from a starting transform; the fitted steps are proper rotations, so
/// a mirror can only come from `start`.
fn icp_from(p: &[Vector3<f64>], target: &Target, start: RigidTransform, max_iter: usize, tol: f64) -> IcpResult {
    let mut current = start;
    let mut moved: Vec<Vector3<f64>> = p.iter().map(|x| current.apply(x)).collect();
    let (mut matched, mut rmse) = target.matches(&moved);
    let mut trace = vec![rmse];
    for _ in 0..max_iter {
        let step = procrustes(&moved, &matched);
        let candidate = step.compose(&current);
        let next_moved: Vec<Vector3<f64>> = p.iter().map(|x| candidate.apply(x)).collect();
        let (next_matched, next_rmse) = target.matches(&next_moved);
        // round-off can undo a zero-gain step; keep the better transform
        if next_rmse > rmse {
            break;
        }
        let gain = rmse - next_rmse;
        (current, moved, matched, rmse) = (candidate, next_moved, next_matched, next_rmse);
        trace.push(rmse);
        if gain < tol {
            break;
        }
    }
    IcpResult {
        transform: current,
        rmse,
        trace,
    }
}

fn centroid_shift(p: &[Vector3<f64>], q: &[Vector3<f64>]) -> RigidTransform {
    RigidTransform {
        translation: centroid(q) - centroid(p),
        ..RigidTransform::identity()
    }
}

/// Aligns `p` (moving) to `q` (fixed) by iterated nearest-neighbour
/// matching and Procrustes fits, starting from centroid alignment. Stops
/// when an iteration improves the RMSE by less than `tol`.
pub fn icp(p: ArrayView2<'_, f64>, q: ArrayView2<'_, f64>, max_iter: usize, tol: f64) -> Result<IcpResult> {
    let (p, q) = check(p, q)?;
    let start = centroid_shift(&p, &q);
    Ok(icp_from(&p, &Target::new(q), start, max_iter, tol))
}

/// The twelve starting orientations: eight sign flips of the axes, 90°
/// rotations about x, y and z, and the cyclic axis permutation.
pub fn pre_transforms() -> Vec<Matrix3<f64>> {
    let mut out = Vec::with_capacity(12);
    for bits in 0..8u8 {
        let s = |b: u8| if bits & b != 0 { -1.0 } else { 1.0 };
        out.push(Matrix3::from_diagonal(&Vector3::new(s(1), s(2), s(4))));
    }
    out.push(Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0));
    out.push(Matrix3::new(0.0, 0.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0));
    out.push(Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0));
    out.push(Matrix3::new(0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0));
    out
}

pub const DEFAULT_MAX_ITER: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-10;

/// Best ICP result over all [`pre_transforms`], each applied about the
/// moving cloud's centroid after centroid alignment. Ties keep the earlier
/// candidate.
pub fn best_alignment(p: ArrayView2<'_, f64>, q: ArrayView2<'_, f64>, max_iter: usize, tol: f64) -> Result<(IcpResult, usize)> {
    let (p, q) = check(p, q)?;
    let (cp, cq) = (centroid(&p), centroid(&q));
    let target = Target::new(q);
    let results: Vec<IcpResult> = pre_transforms()
        .into_par_iter()
        .map(|m| {
            let start = RigidTransform {
                translation: cq - m * cp,
                ..RigidTransform::linear(m)
            };
            icp_from(&p, &target, start, max_iter, tol)
        })
        .collect();
    let best = (0..results.len())
        .min_by(|&a, &b| results[a].rmse.total_cmp(&results[b].rmse))
        .expect("twelve candidates");
    Ok((results[best].clone(), best))
}

/// Minimal RMSE over the candidate pre-transforms, with default settings.
pub fn best_alignment_rmse(p: ArrayView2<'_, f64>, q: ArrayView2<'_, f64>) -> Result<f64> {
    Ok(best_alignment(p, q, DEFAULT_MAX_ITER, DEFAULT_TOL)?.0.rmse)
}
