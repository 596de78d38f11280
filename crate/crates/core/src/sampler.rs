//! Randomized scene composition.
//!
//! Objects sit on a `rows x cols` grid centered on the world origin, at most
//! one per cell, jittered inside their cell. The camera either stays at a
//! fixed pose or is drawn from a spherical shell sector around the grid
//! center and aimed at it. The point light moves through its own shell
//! unless `light_moves` is false.
//!
//! Random draws for a scene happen in this order, all from one ChaCha8
//! stream seeded with `derived_seed(master_seed, scene_index)`: object
//! count, grid cells, then per object (class, dims, yaw, jitter x, jitter y,
//! texture), ground texture, camera, light position, light intensity.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::Interval;
use crate::scene::{
    derived_seed, look_at, CameraModel, LightSource, ObjectInstance, Pose, SceneError, SceneSpec,
    ShapeClass, Vec3,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("cannot place {requested} objects on a grid with {cells} cells")]
    TooManyObjects { requested: usize, cells: usize },
    #[error("invalid sampler config: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum CameraMode {
    /// Static viewpoint aimed from `eye` at `target`.
    Fixed { eye: [f64; 3], target: [f64; 3] },
    /// Eye drawn per scene in a shell sector around the grid center.
    Moving { radius: Interval<f64>, elevation: Interval<f64>, azimuth: Interval<f64> },
}

impl CameraMode {
    pub fn default_moving() -> Self {
        CameraMode::Moving {
            radius: Interval::new(1.5, 3.5),
            elevation: Interval::new(0.25, 1.25),
            azimuth: Interval::new(0.0, TAU),
        }
    }

    pub fn default_fixed() -> Self {
        CameraMode::Fixed { eye: [0.0, -2.5, 2.0], target: [0.0, 0.0, 0.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LightConfig {
    pub radius: Interval<f64>,
    pub elevation: Interval<f64>,
    pub azimuth: Interval<f64>,
    /// Used when the light does not move.
    pub fixed_position: [f64; 3],
    pub intensity: Interval<f64>,
    pub ambient: f64,
}

impl Default for LightConfig {
    fn default() -> Self {
        Self {
            radius: Interval::new(1.5, 3.5),
            elevation: Interval::new(0.25, 1.25),
            azimuth: Interval::new(0.0, TAU),
            fixed_position: [1.5, -1.5, 3.0],
            intensity: Interval::new(0.7, 1.3),
            ambient: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub min_count: usize,
    pub max_count: usize,
    pub grid_rows: usize,
    pub grid_cols: usize,
    /// Edge length of one grid cell, meters.
    pub cell_size: f64,
    /// Maximum offset of an object center from its cell center, as a
    /// fraction of `cell_size`, per axis.
    pub jitter_fraction: f64,
    pub box_edge: Interval<f64>,
    pub cylinder_radius: Interval<f64>,
    pub cylinder_length: Interval<f64>,
    pub sphere_radius: Interval<f64>,
    pub camera: CameraMode,
    /// Horizontal field of view, radians.
    pub horizontal_fov: f64,
    pub light_moves: bool,
    pub light: LightConfig,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            min_count: 2,
            max_count: 7,
            grid_rows: 3,
            grid_cols: 3,
            cell_size: 0.85,
            jitter_fraction: 0.15,
            box_edge: Interval::new(0.1, 0.4),
            cylinder_radius: Interval::new(0.05, 0.15),
            cylinder_length: Interval::new(0.1, 0.4),
            sphere_radius: Interval::new(0.05, 0.2),
            camera: CameraMode::default_moving(),
            horizontal_fov: PI / 3.0,
            light_moves: true,
            light: LightConfig::default(),
        }
    }
}

/// Image size and texture count a sampled scene must be consistent with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SceneContext {
    pub width: u32,
    pub height: u32,
    pub texture_count: usize,
}

fn positive(iv: &Interval<f64>) -> bool {
    iv.is_ordered() && iv.min > 0.0 && iv.max.is_finite()
}

fn shell_ok(radius: &Interval<f64>, elevation: &Interval<f64>, azimuth: &Interval<f64>) -> bool {
    positive(radius)
        && elevation.is_ordered()
        && elevation.min > -FRAC_PI_2
        && elevation.max < FRAC_PI_2
        && azimuth.is_ordered()
        && azimuth.min.is_finite()
        && azimuth.max.is_finite()
}

impl SamplerConfig {
    pub fn cell_count(&self) -> usize {
        self.grid_rows * self.grid_cols
    }

    /// Widest ground footprint any sampled object can have, for any yaw.
    pub fn max_footprint(&self) -> f64 {
        let boxes = std::f64::consts::SQRT_2 * self.box_edge.max;
        let cylinders = 2.0 * self.cylinder_radius.max;
        let spheres = 2.0 * self.sphere_radius.max;
        boxes.max(cylinders).max(spheres)
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        let fail = |m: String| Err(SamplerError::ConfigInvalid(m));
        if self.grid_rows == 0 || self.grid_cols == 0 {
            return fail("grid must have at least one row and column".into());
        }
        if !(1 <= self.min_count && self.min_count <= self.max_count && self.max_count <= self.cell_count()) {
            return fail(format!(
                "object counts must satisfy 1 <= min_count ({}) <= max_count ({}) <= grid cells ({})",
                self.min_count,
                self.max_count,
                self.cell_count()
            ));
        }
        if !(self.cell_size > 0.0 && self.cell_size.is_finite()) {
            return fail("cell_size must be positive".into());
        }
        if !(0.0..0.5).contains(&self.jitter_fraction) {
            return fail("jitter_fraction must be in [0, 0.5)".into());
        }
        for (name, iv) in [
            ("box_edge", &self.box_edge),
            ("cylinder_radius", &self.cylinder_radius),
            ("cylinder_length", &self.cylinder_length),
            ("sphere_radius", &self.sphere_radius),
        ] {
            if !positive(iv) {
                return fail(format!("{name} must satisfy 0 < min <= max"));
            }
        }
        let room = self.cell_size * (1.0 - 2.0 * self.jitter_fraction);
        if self.max_footprint() > room {
            return fail(format!(
                "largest object footprint {:.4} m exceeds the jitter-free cell room {:.4} m",
                self.max_footprint(),
                room
            ));
        }
        if !(self.horizontal_fov > 0.0 && self.horizontal_fov < PI) {
            return fail("horizontal_fov must be in (0, pi)".into());
        }
        match &self.camera {
            CameraMode::Fixed { eye, target } => {
                look_at(Vec3::from(*eye), Vec3::from(*target), Vec3::z())?;
            }
            CameraMode::Moving { radius, elevation, azimuth } => {
                if !shell_ok(radius, elevation, azimuth) {
                    return fail("moving camera needs radius > 0 and ordered ranges with |elevation| < pi/2".into());
                }
            }
        }
        let l = &self.light;
        if self.light_moves && !shell_ok(&l.radius, &l.elevation, &l.azimuth) {
            return fail("light shell needs radius > 0 and ordered ranges with |elevation| < pi/2".into());
        }
        if !(l.intensity.is_ordered() && l.intensity.min > 0.0 && l.intensity.max <= 2.0) {
            return fail("light intensity must lie in (0, 2]".into());
        }
        if !(0.0..=1.0).contains(&l.ambient) {
            return fail("light ambient must lie in [0, 1]".into());
        }
        Ok(())
    }

    /// World `(x, y)` of the center of cell `(row, col)`.
    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        let x = (col as f64 - (self.grid_cols as f64 - 1.0) / 2.0) * self.cell_size;
        let y = (row as f64 - (self.grid_rows as f64 - 1.0) / 2.0) * self.cell_size;
        (x, y)
    }

    /// Grid cell containing the ground point `(x, y)`, if any.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let col = (x / self.cell_size + self.grid_cols as f64 / 2.0).floor();
        let row = (y / self.cell_size + self.grid_rows as f64 / 2.0).floor();
        if col < 0.0 || row < 0.0 || col >= self.grid_cols as f64 || row >= self.grid_rows as f64 {
            return None;
        }
        Some((row as usize, col as usize))
    }

    pub fn grid_center(&self) -> Vec3 {
        Vec3::zeros()
    }
}

/// `n` distinct cells of a `rows x cols` grid, uniformly without replacement.
pub fn sample_grid_cells<R: Rng + ?Sized>(
    n: usize,
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>, SamplerError> {
    let cells = rows * cols;
    if n > cells {
        return Err(SamplerError::TooManyObjects { requested: n, cells });
    }
    Ok(index::sample(rng, cells, n).into_iter().map(|i| (i / cols, i % cols)).collect())
}

fn shell_point<R: Rng + ?Sized>(
    center: &Vec3,
    radius: &Interval<f64>,
    elevation: &Interval<f64>,
    azimuth: &Interval<f64>,
    rng: &mut R,
) -> Vec3 {
    let r = radius.sample(rng);
    let el = elevation.sample(rng);
    let az = azimuth.sample(rng);
    center + r * Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin())
}

pub fn sample_camera<R: Rng + ?Sized>(mode: &CameraMode, grid_center: &Vec3, rng: &mut R) -> Result<Pose, SceneError> {
    match mode {
        CameraMode::Fixed { eye, target } => look_at(Vec3::from(*eye), Vec3::from(*target), Vec3::z()),
        CameraMode::Moving { radius, elevation, azimuth } => {
            let eye = shell_point(grid_center, radius, elevation, azimuth, rng);
            look_at(eye, *grid_center, Vec3::z())
        }
    }
}

fn sample_dims<R: Rng + ?Sized>(config: &SamplerConfig, class: ShapeClass, rng: &mut R) -> Vec3 {
    match class {
        ShapeClass::Box => Vec3::new(config.box_edge.sample(rng), config.box_edge.sample(rng), config.box_edge.sample(rng)),
        ShapeClass::Cylinder => {
            let r = config.cylinder_radius.sample(rng);
            Vec3::new(r, r, config.cylinder_length.sample(rng))
        }
        ShapeClass::Sphere => {
            let r = config.sphere_radius.sample(rng);
            Vec3::new(r, r, r)
        }
    }
}

/// Samples scene `scene_index`. A pure function of its arguments.
pub fn sample_scene(
    config: &SamplerConfig,
    ctx: SceneContext,
    master_seed: u64,
    scene_index: u64,
) -> Result<SceneSpec, SamplerError> {
    config.validate()?;
    if ctx.texture_count == 0 || ctx.width == 0 || ctx.height == 0 {
        return Err(SamplerError::ConfigInvalid("scene context needs a non-empty image and texture set".into()));
    }
    let seed = derived_seed(master_seed, scene_index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let n = rng.gen_range(config.min_count..=config.max_count);
    let cells = sample_grid_cells(n, config.grid_rows, config.grid_cols, &mut rng)?;
    let jitter = config.jitter_fraction * config.cell_size;
    let objects = cells
        .into_iter()
        .enumerate()
        .map(|(k, (row, col))| {
            let class = ShapeClass::ALL[rng.gen_range(0..ShapeClass::ALL.len())];
            let dims = sample_dims(config, class, &mut rng);
            let yaw = rng.gen_range(0.0..TAU);
            let (cx, cy) = config.cell_center(row, col);
            let x = cx + rng.gen_range(-jitter..=jitter);
            let y = cy + rng.gen_range(-jitter..=jitter);
            let texture_id = rng.gen_range(0..ctx.texture_count);
            ObjectInstance::resting(k as u32, class, dims, x, y, yaw, texture_id)
        })
        .collect();
    let ground_texture_id = rng.gen_range(0..ctx.texture_count);

    let center = config.grid_center();
    let pose = sample_camera(&config.camera, &center, &mut rng)?;
    let camera = CameraModel::new(pose, config.horizontal_fov, ctx.width, ctx.height);

    let l = &config.light;
    let position = if config.light_moves {
        shell_point(&center, &l.radius, &l.elevation, &l.azimuth, &mut rng)
    } else {
        Vec3::from(l.fixed_position)
    };
    let light = LightSource { position, intensity: l.intensity.sample(&mut rng), ambient: l.ambient };

    Ok(SceneSpec { scene_index, seed, objects, camera, light, ground_texture_id })
}

/// Axis-aligned ground footprint `[xmin, ymin, xmax, ymax]` of a yaw-only
/// object.
pub fn ground_footprint(obj: &ObjectInstance) -> [f64; 4] {
    let p = obj.pose.position;
    let (hx, hy) = match obj.class {
        ShapeClass::Box => {
            let (_, _, yaw) = obj.pose.orientation.euler_angles();
            let (s, c) = yaw.sin_cos();
            let (w, d) = (0.5 * obj.dims.x, 0.5 * obj.dims.y);
            ((w * c).abs() + (d * s).abs(), (w * s).abs() + (d * c).abs())
        }
        _ => (obj.dims.x, obj.dims.x),
    };
    [p.x - hx, p.y - hy, p.x + hx, p.y + hy]
}
