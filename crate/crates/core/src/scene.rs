//! Core scene description types.
//!
//! Conventions: the world frame is right-handed and z-up, with the ground
//! plane at `z = 0`. A camera frame has `x` pointing right in the image, `y`
//! pointing down and `z` along the optical axis; a [`Pose`] maps that frame
//! into the world. All lengths are meters.

use std::fmt;

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;
pub type Vec2 = Vector2<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("degenerate look-at: {0}")]
    DegenerateLookAt(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeClass {
    Box,
    Cylinder,
    Sphere,
}

impl ShapeClass {
    pub const ALL: [ShapeClass; 3] = [ShapeClass::Box, ShapeClass::Cylinder, ShapeClass::Sphere];

    /// Stable integer code used in serialized artifacts.
    pub fn code(self) -> u8 {
        match self {
            ShapeClass::Box => 0,
            ShapeClass::Cylinder => 1,
            ShapeClass::Sphere => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ShapeClass::Box => "box",
            ShapeClass::Cylinder => "cylinder",
            ShapeClass::Sphere => "sphere",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

impl fmt::Display for ShapeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: UnitQuaternion<f64>,
}

impl Pose {
    pub fn new(position: Vec3, orientation: UnitQuaternion<f64>) -> Self {
        Self { position, orientation }
    }

    /// Pose rotated about world `z` only.
    pub fn from_yaw(position: Vec3, yaw: f64) -> Self {
        Self::new(position, UnitQuaternion::from_axis_angle(&Vec3::z_axis(), yaw))
    }

    /// Optical axis (local `+z`) expressed in the world frame.
    pub fn forward(&self) -> Vec3 {
        self.orientation * Vec3::z()
    }

    pub fn right(&self) -> Vec3 {
        self.orientation * Vec3::x()
    }

    pub fn down(&self) -> Vec3 {
        self.orientation * Vec3::y()
    }

    pub fn to_local(&self, world: &Vec3) -> Vec3 {
        self.orientation.inverse_transform_vector(&(world - self.position))
    }
}

/// Builds a camera pose at `eye` whose optical axis points at `target`.
///
/// Image "up" is aligned as closely as possible with `up_hint`.
pub fn look_at(eye: Vec3, target: Vec3, up_hint: Vec3) -> Result<Pose, SceneError> {
    let to_target = target - eye;
    let dist = to_target.norm();
    if !(dist > 1e-9) {
        return Err(SceneError::DegenerateLookAt("eye coincides with target"));
    }
    let forward = to_target / dist;
    let up_norm = up_hint.norm();
    if !(up_norm > 0.0) {
        return Err(SceneError::DegenerateLookAt("zero up hint"));
    }
    let cross = forward.cross(&(up_hint / up_norm));
    // |f x u| = sin(angle) for unit vectors
    if !(cross.norm() > 1e-6) {
        return Err(SceneError::DegenerateLookAt("up hint parallel to view direction"));
    }
    let right = cross.normalize();
    let down = forward.cross(&right);
    let m = Matrix3::from_columns(&[right, down, forward]);
    let rot = Rotation3::from_matrix_unchecked(m);
    Ok(Pose::new(eye, UnitQuaternion::from_rotation_matrix(&rot)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectInstance {
    pub id: u32,
    pub class: ShapeClass,
    pub pose: Pose,
    /// Box: width/depth/height. Cylinder: radius/radius/length. Sphere: radius x3.
    pub dims: Vec3,
    pub texture_id: usize,
}

impl ObjectInstance {
    /// Places an upright object resting on the ground at `(x, y)`.
    pub fn resting(
        id: u32,
        class: ShapeClass,
        dims: Vec3,
        x: f64,
        y: f64,
        yaw: f64,
        texture_id: usize,
    ) -> Self {
        let z = half_height(class, &dims);
        Self {
            id,
            class,
            pose: Pose::from_yaw(Vec3::new(x, y, z), yaw),
            dims,
            texture_id,
        }
    }

    pub fn half_height(&self) -> f64 {
        half_height(self.class, &self.dims)
    }

    /// Lowest world `z` reached by the shape. Valid for yaw-only orientations.
    pub fn min_z(&self) -> f64 {
        self.pose.position.z - self.half_height()
    }

    /// Radius of a circle in the ground plane that contains the footprint
    /// for every yaw.
    pub fn footprint_radius(&self) -> f64 {
        footprint_radius(self.class, &self.dims)
    }

    pub fn bounding_radius(&self) -> f64 {
        match self.class {
            ShapeClass::Sphere => self.dims.x,
            ShapeClass::Box => 0.5 * self.dims.norm(),
            ShapeClass::Cylinder => (self.dims.x * self.dims.x + 0.25 * self.dims.z * self.dims.z).sqrt(),
        }
    }

    pub fn is_valid(&self) -> bool {
        let positive = self.dims.iter().all(|d| *d > 0.0 && d.is_finite());
        let round = match self.class {
            ShapeClass::Box => true,
            ShapeClass::Cylinder => self.dims.x == self.dims.y,
            ShapeClass::Sphere => self.dims.x == self.dims.y && self.dims.y == self.dims.z,
        };
        positive && round && self.min_z().abs() <= 1e-9
    }
}

pub(crate) fn half_height(class: ShapeClass, dims: &Vec3) -> f64 {
    match class {
        ShapeClass::Box | ShapeClass::Cylinder => 0.5 * dims.z,
        ShapeClass::Sphere => dims.x,
    }
}

pub(crate) fn footprint_radius(class: ShapeClass, dims: &Vec3) -> f64 {
    match class {
        ShapeClass::Box => 0.5 * (dims.x * dims.x + dims.y * dims.y).sqrt(),
        ShapeClass::Cylinder | ShapeClass::Sphere => dims.x,
    }
}

/// Result of projecting a world point through a pinhole camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    Pixel(Vec2),
    Behind,
}

impl Projection {
    pub fn pixel(self) -> Option<Vec2> {
        match self {
            Projection::Pixel(p) => Some(p),
            Projection::Behind => None,
        }
    }
}

/// Pinhole camera with square pixels and the principal point at the image
/// center. Pixel `(i, j)` covers `[i, i+1) x [j, j+1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    pub pose: Pose,
    pub horizontal_fov: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraModel {
    pub fn new(pose: Pose, horizontal_fov: f64, width: u32, height: u32) -> Self {
        debug_assert!(horizontal_fov > 0.0 && horizontal_fov < std::f64::consts::PI);
        debug_assert!(width > 0 && height > 0);
        Self { pose, horizontal_fov, width, height }
    }

    pub fn focal_px(&self) -> f64 {
        (self.width as f64 / 2.0) / (self.horizontal_fov / 2.0).tan()
    }

    pub fn principal_point(&self) -> Vec2 {
        Vec2::new(self.width as f64 / 2.0, self.height as f64 / 2.0)
    }

    /// Same camera with the image grid scaled by `1/factor`.
    pub fn downscaled(&self, factor: u32) -> Self {
        Self { width: self.width / factor, height: self.height / factor, ..*self }
    }

    pub fn project(&self, point: &Vec3) -> Projection {
        let p = self.pose.to_local(point);
        if !(p.z > 0.0) {
            return Projection::Behind;
        }
        let f = self.focal_px();
        let c = self.principal_point();
        Projection::Pixel(Vec2::new(c.x + f * p.x / p.z, c.y + f * p.y / p.z))
    }
}

pub fn project(camera: &CameraModel, point: &Vec3) -> Projection {
    camera.project(point)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightSource {
    pub position: Vec3,
    /// Diffuse intensity in `(0, 2]`.
    pub intensity: f64,
    /// Ambient term in `[0, 1]`.
    pub ambient: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub scene_index: u64,
    pub seed: u64,
    pub objects: Vec<ObjectInstance>,
    pub camera: CameraModel,
    pub light: LightSource,
    pub ground_texture_id: usize,
}

const SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

fn fmix64(mut x: u64) -> u64 {
    x ^= x >> 33;
    x = x.wrapping_mul(0xFF51_AFD7_ED55_8CCD);
    x ^= x >> 33;
    x = x.wrapping_mul(0xC4CE_B9FE_1A85_EC53);
    x ^= x >> 33;
    x
}

/// Per-item seed derived from a master seed.
///
/// `x = master ^ index * 0x9E3779B97F4A7C15`, followed by two rounds of the
/// MurmurHash3 64-bit finalizer, each preceded by a round constant so that
/// zero is not a fixed point.
pub fn derived_seed(master_seed: u64, index: u64) -> u64 {
    let x = master_seed ^ index.wrapping_mul(SEED_STRIDE);
    let x = fmix64(x.wrapping_add(0x6A09_E667_F3BC_C909));
    fmix64(x ^ 0xBB67_AE85_84CA_A73B)
}
