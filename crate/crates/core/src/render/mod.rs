//! CPU ray caster producing a color image and a per-pixel object-ID mask.
//!
//! One primary ray goes through the center of every pixel; the nearest hit
//! among the scene objects and the ground plane wins. Shading is Lambertian
//! with an ambient term and one hard shadow ray towards the point light.
//! Rows are rendered in parallel on the ambient rayon pool; every pixel is
//! computed independently, so output does not depend on the worker count.

mod image;
mod primitive;

use rayon::prelude::*;
use thiserror::Error;

pub use self::image::{downscale, downscale_ids, ColorImage, IdMask, BACKGROUND_ID, GROUND_ID};
pub use primitive::{intersect, intersect_ground, occluded, Hit, HitTarget, Ray, RenderObject};

use crate::scene::{CameraModel, LightSource, SceneSpec, Vec3};
use crate::texture::TextureImage;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenderError {
    #[error("texture id {id} out of range for a library of {len}")]
    BadTextureId { id: usize, len: usize },
    #[error("image of {width}x{height} is not divisible by {factor}")]
    IndivisibleDimensions { width: u32, height: u32, factor: u32 },
    #[error("object id {0} collides with the reserved mask ids")]
    ReservedObjectId(u32),
}

pub type Rgb32 = [f32; 3];

/// Offset applied along the normal before casting a shadow ray.
const SHADOW_EPS: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    pub color: ColorImage,
    pub id_mask: IdMask,
}

impl RenderOutput {
    pub fn new(width: u32, height: u32) -> Self {
        Self { color: ColorImage::new(width, height), id_mask: IdMask::new(width, height) }
    }

    fn ensure_size(&mut self, width: u32, height: u32) {
        if self.color.width != width || self.color.height != height {
            *self = Self::new(width, height);
        }
    }
}

/// Camera basis plus intrinsics, enough to generate primary rays.
#[derive(Debug, Clone, Copy)]
pub struct RayGenerator {
    origin: Vec3,
    right: Vec3,
    down: Vec3,
    forward: Vec3,
    cx: f64,
    cy: f64,
    inv_f: f64,
}

impl RayGenerator {
    pub fn new(camera: &CameraModel) -> Self {
        let c = camera.principal_point();
        Self {
            origin: camera.pose.position,
            right: camera.pose.right(),
            down: camera.pose.down(),
            forward: camera.pose.forward(),
            cx: c.x,
            cy: c.y,
            inv_f: 1.0 / camera.focal_px(),
        }
    }

    /// Ray through the center of pixel `(px, py)`.
    #[inline]
    pub fn primary(&self, px: u32, py: u32) -> Ray {
        let x = (px as f64 + 0.5 - self.cx) * self.inv_f;
        let y = (py as f64 + 0.5 - self.cy) * self.inv_f;
        Ray::new(self.origin, self.forward + self.right * x + self.down * y)
    }
}

pub fn primary_ray(camera: &CameraModel, px: u32, py: u32) -> Ray {
    RayGenerator::new(camera).primary(px, py)
}

/// Lambert shading with ambient term and one shadow ray.
///
/// The result is `texel * (ambient + intensity * max(0, n.l) * visible)`,
/// clamped to `[0, 1]`, where `visible` is 0 when `occluders` (or the ground
/// plane) block the segment towards the light.
pub fn shade(hit: &Hit, light: &LightSource, texture: &TextureImage, occluders: &[RenderObject]) -> Rgb32 {
    let texel = texture.sample(hit.uv.x, hit.uv.y);
    let to_light = light.position - hit.point;
    let dist = to_light.norm();
    let mut factor = light.ambient;
    if dist > 0.0 {
        let l = to_light / dist;
        let cos = hit.normal.dot(&l);
        if cos > 0.0 {
            let shadow_ray = Ray { origin: hit.point + hit.normal * SHADOW_EPS, direction: l };
            let blocked_by_ground = intersect_ground(&shadow_ray).is_some_and(|g| g.t < dist && g.t > SHADOW_EPS);
            if !blocked_by_ground && !occluded(occluders, &shadow_ray, dist) {
                factor += light.intensity * cos;
            }
        }
    }
    let f = factor as f32;
    [(texel[0] * f).clamp(0.0, 1.0), (texel[1] * f).clamp(0.0, 1.0), (texel[2] * f).clamp(0.0, 1.0)]
}

/// Nearest hit among `objects` and the ground; ties keep the earlier
/// candidate (ground first, then objects in slice order).
#[inline]
pub fn trace(objects: &[RenderObject], ray: &Ray) -> Option<Hit> {
    let mut best = intersect_ground(ray);
    for o in objects {
        let limit = best.as_ref().map_or(f64::INFINITY, |h| h.t);
        if let Some(h) = o.intersect_within(ray, limit) {
            best = Some(h);
        }
    }
    best
}

/// Everything the ray caster needs for one frame, with objects already
/// prepared.
pub struct Frame<'a> {
    pub camera: &'a CameraModel,
    pub light: &'a LightSource,
    pub objects: &'a [RenderObject],
    pub ground_texture_id: usize,
    pub textures: &'a [TextureImage],
    pub background: Rgb32,
}

impl Frame<'_> {
    fn check(&self) -> Result<(), RenderError> {
        let len = self.textures.len();
        let bad = |id: usize| (id >= len).then_some(RenderError::BadTextureId { id, len });
        if let Some(e) = bad(self.ground_texture_id) {
            return Err(e);
        }
        for o in self.objects {
            if let Some(e) = bad(o.texture_id) {
                return Err(e);
            }
            if o.id >= GROUND_ID as u32 {
                return Err(RenderError::ReservedObjectId(o.id));
            }
        }
        Ok(())
    }

    /// Renders into `out`, reusing its buffers when the size matches.
    pub fn render_into(&self, out: &mut RenderOutput) -> Result<(), RenderError> {
        self.check()?;
        let (w, h) = (self.camera.width, self.camera.height);
        out.ensure_size(w, h);
        let rays = RayGenerator::new(self.camera);
        let width = w as usize;
        out.color
            .pixels
            .par_chunks_mut(width)
            .zip(out.id_mask.ids.par_chunks_mut(width))
            .enumerate()
            .for_each(|(row, (colors, ids))| {
                for (col, (color, id)) in colors.iter_mut().zip(ids.iter_mut()).enumerate() {
                    let ray = rays.primary(col as u32, row as u32);
                    (*color, *id) = self.pixel(&ray);
                }
            });
        Ok(())
    }

    #[inline]
    fn pixel(&self, ray: &Ray) -> (Rgb32, u16) {
        match trace(self.objects, ray) {
            None => (self.background, BACKGROUND_ID),
            Some(hit) => {
                let (tex, id) = match hit.target {
                    HitTarget::Ground => (self.ground_texture_id, GROUND_ID),
                    HitTarget::Object(k) => {
                        let o = self.objects.iter().find(|o| o.id == k).expect("hit object is in the frame");
                        (o.texture_id, k as u16)
                    }
                };
                (shade(&hit, self.light, &self.textures[tex], self.objects), id)
            }
        }
    }
}

/// Renders `scene` at its camera resolution.
pub fn render(scene: &SceneSpec, textures: &[TextureImage], background: Rgb32) -> Result<RenderOutput, RenderError> {
    let objects: Vec<RenderObject> = scene.objects.iter().map(RenderObject::from).collect();
    let frame = Frame {
        camera: &scene.camera,
        light: &scene.light,
        objects: &objects,
        ground_texture_id: scene.ground_texture_id,
        textures,
        background,
    };
    let mut out = RenderOutput::new(scene.camera.width, scene.camera.height);
    frame.render_into(&mut out)?;
    Ok(out)
}
