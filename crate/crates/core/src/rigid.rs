//! Rigid head motion: 6-DOF poses, timed trajectories, the RMS-deviation
//! motion metric and trilinear rigid resampling.
//!
//! Transforms act in the volume's centred frame: millimetres along the voxel
//! axes with the origin at the geometric centre of the grid. Rotations are
//! Euler angles in degrees, applied about X, then Y, then Z.

use std::ops::Mul;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;
use crate::volume::Volume3D;

/// Default brain radius for the RMS deviation, in mm.
pub const DEFAULT_BRAIN_RADIUS_MM: f64 = 80.0;

/// Homogeneous 4×4 matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat4<T>(pub [[T; 4]; 4]);

impl<T: Real> Mat4<T> {
    pub fn identity() -> Self {
        Self(std::array::from_fn(|r| std::array::from_fn(|c| if r == c { T::one() } else { T::zero() })))
    }

    pub fn translation(t: [T; 3]) -> Self {
        let mut m = Self::identity();
        for (r, &v) in t.iter().enumerate() {
            m.0[r][3] = v;
        }
        m
    }

    fn from_rotation(r: [[T; 3]; 3]) -> Self {
        let mut m = Self::identity();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = r[i][j];
            }
        }
        m
    }

    pub fn rotation_block(&self) -> [[T; 3]; 3] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.0[i][j]))
    }

    pub fn translation_column(&self) -> [T; 3] {
        std::array::from_fn(|i| self.0[i][3])
    }

    /// Inverse of a rigid matrix: `[Rᵀ, −Rᵀt]`.
    pub fn rigid_inverse(&self) -> Self {
        let r = self.rotation_block();
        let t = self.translation_column();
        let mut m = Self::identity();
        for i in 0..3 {
            let mut acc = T::zero();
            for j in 0..3 {
                m.0[i][j] = r[j][i];
                acc += r[j][i] * t[j];
            }
            m.0[i][3] = -acc;
        }
        m
    }

    pub fn sub_identity(&self) -> Self {
        let mut m = *self;
        for i in 0..4 {
            m.0[i][i] -= T::one();
        }
        m
    }

    pub fn apply_point(&self, p: [T; 3]) -> [T; 3] {
        std::array::from_fn(|r| self.0[r][0] * p[0] + self.0[r][1] * p[1] + self.0[r][2] * p[2] + self.0[r][3])
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        let mut m = T::zero();
        for i in 0..4 {
            for j in 0..4 {
                m = m.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        m
    }
}

impl<T: Real> Mul for Mat4<T> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        Self(std::array::from_fn(|i| {
            std::array::from_fn(|j| (0..4).fold(T::zero(), |acc, k| acc + self.0[i][k] * rhs.0[k][j]))
        }))
    }
}

/// A rigid pose change: Euler rotation (degrees) about the centre, then translation (mm).
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct RigidTransform<T> {
    #[serde(rename = "rot_deg")]
    pub rotation_deg: [T; 3],
    #[serde(rename = "trans_mm")]
    pub translation_mm: [T; 3],
}

impl<T: Real> RigidTransform<T> {
    pub fn identity() -> Self {
        Self { rotation_deg: [T::zero(); 3], translation_mm: [T::zero(); 3] }
    }

    pub fn new(rotation_deg: [T; 3], translation_mm: [T; 3]) -> Self {
        Self { rotation_deg, translation_mm }
    }

    pub fn translation(t: [T; 3]) -> Self {
        Self::new([T::zero(); 3], t)
    }

    pub fn rotation(r: [T; 3]) -> Self {
        Self::new(r, [T::zero(); 3])
    }

    /// `Rz · Ry · Rx`, so X is applied first.
    pub fn rotation_matrix(&self) -> [[T; 3]; 3] {
        let [ax, ay, az] = self.rotation_deg.map(|d| d.to_radians());
        let (sx, cx) = ax.sin_cos();
        let (sy, cy) = ay.sin_cos();
        let (sz, cz) = az.sin_cos();
        let (o, z) = (T::one(), T::zero());
        let rx = [[o, z, z], [z, cx, -sx], [z, sx, cx]];
        let ry = [[cy, z, sy], [z, o, z], [-sy, z, cy]];
        let rz = [[cz, -sz, z], [sz, cz, z], [z, z, o]];
        mat3_mul(&rz, &mat3_mul(&ry, &rx))
    }

    /// `Translate(center) · Translate(t) · Rz·Ry·Rx · Translate(−center)`.
    pub fn to_matrix(&self, center: [T; 3]) -> Mat4<T> {
        let neg = center.map(|c| -c);
        Mat4::translation(center)
            * Mat4::translation(self.translation_mm)
            * Mat4::from_rotation(self.rotation_matrix())
            * Mat4::translation(neg)
    }

    pub fn max_abs_translation(&self) -> T {
        self.translation_mm.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn max_abs_rotation(&self) -> T {
        self.rotation_deg.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

fn mat3_mul<T: Real>(a: &[[T; 3]; 3], b: &[[T; 3]; 3]) -> [[T; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j]))
}

/// One pose change during the acquisition, at `time` ∈ (0, 1).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionEvent<T> {
    pub time: T,
    #[serde(flatten)]
    pub transform: RigidTransform<T>,
}

#[derive(Debug, Error, PartialEq)]
pub enum TrajectoryError {
    #[error("event {index} has time {time}, outside the open interval (0, 1)")]
    TimeOutOfRange { index: usize, time: f64 },
    #[error("event times must be strictly increasing (event {index})")]
    NotIncreasing { index: usize },
    #[error("event {index} has a non-finite parameter")]
    NonFinite { index: usize },
}

/// Absolute poses ordered by acquisition time; empty means no motion.
#[derive(Clone, Debug, PartialEq, Default, Serialize)]
pub struct MotionTrajectory<T> {
    events: Vec<MotionEvent<T>>,
}

impl<T: Real> MotionTrajectory<T> {
    pub fn new(events: Vec<MotionEvent<T>>) -> Result<Self, TrajectoryError> {
        for (index, e) in events.iter().enumerate() {
            let params = e.transform.rotation_deg.iter().chain(&e.transform.translation_mm);
            if !e.time.is_finite() || params.clone().any(|p| !p.is_finite()) {
                return Err(TrajectoryError::NonFinite { index });
            }
            if !(e.time > T::zero() && e.time < T::one()) {
                return Err(TrajectoryError::TimeOutOfRange { index, time: e.time.to_f64_lossy() });
            }
            if index > 0 && !(e.time > events[index - 1].time) {
                return Err(TrajectoryError::NotIncreasing { index });
            }
        }
        Ok(Self { events })
    }

    pub fn empty() -> Self {
        Self { events: Vec::new() }
    }

    pub fn events(&self) -> &[MotionEvent<T>] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Pose sequence `(identity, T₁, …, T_N)`.
    pub fn poses(&self) -> impl Iterator<Item = RigidTransform<T>> + '_ {
        std::iter::once(RigidTransform::identity()).chain(self.events.iter().map(|e| e.transform))
    }
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for MotionTrajectory<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw<T> {
            events: Vec<MotionEvent<T>>,
        }
        let raw = Raw::<T>::deserialize(d)?;
        Self::new(raw.events).map_err(serde::de::Error::custom)
    }
}

/// Scalar motion summary in millimetres.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct MotionScore<T>(T);

impl<T: Real> MotionScore<T> {
    /// Panics on negative or non-finite input.
    pub fn new(value: T) -> Self {
        assert!(value >= T::zero() && value.is_finite(), "motion score must be finite and non-negative");
        Self(value)
    }

    pub fn value(self) -> T {
        self.0
    }
}

/// Head centre and brain radius used by the RMS deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig<T> {
    pub center: [T; 3],
    pub brain_radius: T,
}

impl<T: Real> Default for MetricConfig<T> {
    /// Centre at the origin of the centred frame (the volume centre), 80 mm radius.
    fn default() -> Self {
        Self { center: [T::zero(); 3], brain_radius: T::lit(DEFAULT_BRAIN_RADIUS_MM) }
    }
}

impl<T: Real> MetricConfig<T> {
    pub fn with_radius(brain_radius: T) -> Self {
        assert!(brain_radius > T::zero(), "brain radius must be positive");
        Self { brain_radius, ..Self::default() }
    }
}

/// RMS displacement over a sphere of radius `R_c` between two poses.
///
/// With `M = T₂·T₁⁻¹ − I = [A t; 0 0]`, the value is
/// `sqrt(R_c²/5 · tr(AᵀA) + |t + A·x_c|²)`. Both poses are rotated about
/// `cfg.center`. The earlier pose is `t1`.
pub fn rms_deviation<T: Real>(t1: &RigidTransform<T>, t2: &RigidTransform<T>, cfg: &MetricConfig<T>) -> MotionScore<T> {
    let m1 = t1.to_matrix(cfg.center);
    let m2 = t2.to_matrix(cfg.center);
    let m = (m2 * m1.rigid_inverse()).sub_identity();
    let a = m.rotation_block();
    let t = m.translation_column();

    let mut trace = T::zero();
    for row in &a {
        for &x in row {
            trace += x * x;
        }
    }
    let mut norm = T::zero();
    for i in 0..3 {
        let d = t[i] + a[i][0] * cfg.center[0] + a[i][1] * cfg.center[1] + a[i][2] * cfg.center[2];
        norm += d * d;
    }
    let r2 = cfg.brain_radius * cfg.brain_radius;
    let e2 = r2 / T::lit(5.0) * trace + norm;
    MotionScore::new(e2.max(T::zero()).sqrt())
}

/// Mean RMS deviation over consecutive poses `(identity, T₁, …, T_N)`; zero for no motion.
pub fn trajectory_score<T: Real>(traj: &MotionTrajectory<T>, cfg: &MetricConfig<T>) -> MotionScore<T> {
    if traj.is_empty() {
        return MotionScore::new(T::zero());
    }
    let poses: Vec<_> = traj.poses().collect();
    let total = poses.windows(2).fold(T::zero(), |acc, w| acc + rms_deviation(&w[0], &w[1], cfg).value());
    MotionScore::new(total / T::lit(traj.len() as f64))
}

/// Applies `t` to a volume by inverse mapping with trilinear interpolation.
/// Samples outside the grid read zero; output geometry equals input geometry.
pub fn resample_rigid<V: Real>(v: &Volume3D<V>, t: &RigidTransform<f64>) -> Volume3D<V> {
    if *t == RigidTransform::identity() {
        return v.clone();
    }
    let dims = v.dims();
    let s = v.spacing();
    let c: [f64; 3] = std::array::from_fn(|a| (dims[a] as f64 - 1.0) / 2.0);

    // Inverse map in index units: q_in = S⁻¹·Rᵀ·(S·q − t), q = index − c.
    let inv = t.to_matrix([0.0; 3]).rigid_inverse();
    let r = inv.rotation_block();
    let o = inv.translation_column();
    let b: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| r[i][j] * s[j] / s[i]));
    let off: [f64; 3] = std::array::from_fn(|i| o[i] / s[i] + c[i]);

    let mut out = Vec::with_capacity(v.len());
    for k in 0..dims[2] {
        let qz = k as f64 - c[2];
        for j in 0..dims[1] {
            let qy = j as f64 - c[1];
            for i in 0..dims[0] {
                let qx = i as f64 - c[0];
                let p: [f64; 3] = std::array::from_fn(|a| b[a][0] * qx + b[a][1] * qy + b[a][2] * qz + off[a]);
                out.push(V::lit(v.sample_trilinear(p)));
            }
        }
    }
    v.replace_data(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> MetricConfig<f64> {
        MetricConfig::default()
    }

    #[test]
    fn identity_pair_scores_zero() {
        let id = RigidTransform::identity();
        assert_eq!(rms_deviation(&id, &id, &cfg()).value(), 0.0);
    }

    #[test]
    fn pure_translation_scores_its_norm() {
        let t2 = RigidTransform::translation([3.0, 0.0, 0.0]);
        assert_eq!(rms_deviation(&RigidTransform::identity(), &t2, &cfg()).value(), 3.0);
    }

    #[test]
    fn one_degree_about_center() {
        let t2 = RigidTransform::rotation([0.0, 0.0, 1.0]);
        let want = 80.0 * (4.0 * (1.0 - 1f64.to_radians().cos()) / 5.0).sqrt();
        let got = rms_deviation(&RigidTransform::identity(), &t2, &cfg()).value();
        assert!((got - want).abs() < 1e-12);
        assert!((got - 0.8830).abs() < 1e-4);
    }

    #[test]
    fn rotation_matrix_is_proper_orthogonal() {
        let t = RigidTransform::new([12.0, -33.0, 71.0], [1.0, 2.0, 3.0]);
        let r = t.rotation_matrix();
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| r[k][i] * r[k][j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() <= 1e-9);
            }
        }
        let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
        assert!((det - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn to_matrix_examples() {
        let id = RigidTransform::<f64>::identity().to_matrix([5.0, 6.0, 7.0]);
        assert_eq!(id, Mat4::identity());

        let rz = RigidTransform::<f64>::rotation([0.0, 0.0, 90.0]).to_matrix([0.0; 3]);
        let p = rz.apply_point([1.0, 0.0, 0.0]);
        assert!((p[0]).abs() < 1e-12 && (p[1] - 1.0).abs() < 1e-12 && p[2].abs() < 1e-12);

        let a = RigidTransform::new([10.0, 20.0, 30.0], [1.0, -2.0, 3.0]).to_matrix([4.0, 5.0, 6.0]);
        assert!((a * a.rigid_inverse()).max_abs_diff(&Mat4::identity()) < 1e-12);
    }

    #[test]
    fn euler_order_is_x_then_y_then_z() {
        // Rx(90) sends y to z, then Rz(90) leaves z alone.
        let t = RigidTransform::<f64>::rotation([90.0, 0.0, 90.0]).to_matrix([0.0; 3]);
        let p = t.apply_point([0.0, 1.0, 0.0]);
        assert!(p[0].abs() < 1e-12 && p[1].abs() < 1e-12 && (p[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trajectory_examples() {
        assert_eq!(trajectory_score(&MotionTrajectory::<f64>::empty(), &cfg()).value(), 0.0);
        let ev = |time, x| MotionEvent { time, transform: RigidTransform::translation([x, 0.0, 0.0]) };
        let one = MotionTrajectory::new(vec![ev(0.5, 2.0)]).unwrap();
        assert_eq!(trajectory_score(&one, &cfg()).value(), 2.0);
        let two = MotionTrajectory::new(vec![ev(0.3, 2.0), ev(0.6, 4.0)]).unwrap();
        assert_eq!(trajectory_score(&two, &cfg()).value(), 2.0);
    }

    #[test]
    fn trajectory_validation() {
        let ev = |time| MotionEvent { time, transform: RigidTransform::<f64>::identity() };
        assert!(matches!(MotionTrajectory::new(vec![ev(0.0)]), Err(TrajectoryError::TimeOutOfRange { .. })));
        assert!(matches!(MotionTrajectory::new(vec![ev(1.0)]), Err(TrajectoryError::TimeOutOfRange { .. })));
        assert_eq!(MotionTrajectory::new(vec![ev(0.5), ev(0.5)]), Err(TrajectoryError::NotIncreasing { index: 1 }));
        assert!(matches!(MotionTrajectory::new(vec![ev(f64::NAN)]), Err(TrajectoryError::NonFinite { index: 0 })));
    }

    #[test]
    fn trajectory_json_round_trip() {
        let json = r#"{"events":[{"time":0.3,"rot_deg":[1.0,2.0,3.0],"trans_mm":[0.5,0.0,-1.0]}]}"#;
        let t: MotionTrajectory<f64> = serde_json::from_str(json).unwrap();
        assert_eq!(t.events()[0].transform.rotation_deg, [1.0, 2.0, 3.0]);
        let back = serde_json::to_string(&t).unwrap();
        assert_eq!(serde_json::from_str::<MotionTrajectory<f64>>(&back).unwrap(), t);
        let bad = r#"{"events":[{"time":0.7,"rot_deg":[0,0,0],"trans_mm":[0,0,0]},{"time":0.2,"rot_deg":[0,0,0],"trans_mm":[0,0,0]}]}"#;
        assert!(serde_json::from_str::<MotionTrajectory<f64>>(bad).is_err());
    }

    #[test]
    fn resample_identity_is_exact() {
        let v = Volume3D::<f32>::from_fn([5, 4, 3], |x, y, z| (x * y + z) as f32 * 0.37).unwrap();
        assert_eq!(resample_rigid(&v, &RigidTransform::identity()), v);
    }

    #[test]
    fn integer_translation_shifts_support() {
        let v = Volume3D::<f32>::from_fn([8, 8, 8], |x, y, z| {
            if (2..5).contains(&x) && (2..5).contains(&y) && (2..5).contains(&z) {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let t = RigidTransform::translation([2.0, 0.0, -1.0]);
        let out = resample_rigid(&v, &t);
        for z in 0..8 {
            for y in 0..8 {
                for x in 0..8 {
                    let want =
                        if (4..7).contains(&x) && (2..5).contains(&y) && (1..4).contains(&z) { 1.0 } else { 0.0 };
                    assert!((out.get(x, y, z) - want).abs() < 1e-6, "voxel ({x},{y},{z})");
                }
            }
        }
    }

    #[test]
    fn translation_respects_spacing() {
        let v = Volume3D::<f32>::new([6, 1, 1], [2.0, 1.0, 1.0], vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let out = resample_rigid(&v, &RigidTransform::translation([4.0, 0.0, 0.0]));
        assert!((out.data()[3] - 1.0).abs() < 1e-6);
    }
}
