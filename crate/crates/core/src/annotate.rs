//! Ground-truth boxes from the rendered ID mask.
//!
//! Boxes are modal by default: they bound the visible pixels of each object
//! only, so occluded parts are excluded. Amodal boxes bound the projection
//! of the whole object instead. Either way, objects without enough visible
//! pixels are dropped.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::render::{IdMask, GROUND_ID};
use crate::scene::{CameraModel, ObjectInstance, Projection, ShapeClass, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoxMode {
    /// Tight box around the visible mask pixels.
    #[default]
    Modal,
    /// Box around the full projected object, occluded parts included.
    Amodal,
}

/// Axis-aligned box in pixels covering `[xmin, xmax) x [ymin, ymax)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl BBox {
    pub const fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Self {
        Self { xmin, ymin, xmax, ymax }
    }

    pub fn is_valid(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite()) && self.xmin < self.xmax && self.ymin < self.ymax
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.xmin, self.ymin, self.xmax, self.ymax]
    }

    pub fn clamp_to(&self, width: f64, height: f64) -> Self {
        Self::new(
            self.xmin.clamp(0.0, width),
            self.ymin.clamp(0.0, height),
            self.xmax.clamp(0.0, width),
            self.ymax.clamp(0.0, height),
        )
    }

    /// Whether `self` contains `other` after growing `self` by `slack` on
    /// every side.
    pub fn contains_with_slack(&self, other: &BBox, slack: f64) -> bool {
        other.xmin >= self.xmin - slack
            && other.ymin >= self.ymin - slack
            && other.xmax <= self.xmax + slack
            && other.ymax <= self.ymax + slack
    }

    pub fn max_edge_difference(&self, other: &BBox) -> f64 {
        self.to_array().iter().zip(other.to_array()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

impl From<[f64; 4]> for BBox {
    fn from(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        b.to_array()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Annotation {
    pub object_id: u32,
    pub class: ShapeClass,
    pub bbox: BBox,
    pub visible_pixels: u64,
}

#[derive(Debug, Clone, Copy)]
struct Extent {
    x0: u32,
    y0: u32,
    x1: u32,
    y1: u32,
    count: u64,
}

/// Tight boxes around every object id present in `mask`, sorted by id.
/// Objects covering fewer than `min_visible_pixels` pixels are omitted.
pub fn boxes_from_idmask(mask: &IdMask, objects: &[ObjectInstance], min_visible_pixels: u64) -> Vec<Annotation> {
    let mut extents: BTreeMap<u16, Extent> = BTreeMap::new();
    let w = mask.width as usize;
    for (row, ids) in mask.ids.chunks_exact(w.max(1)).enumerate() {
        let y = row as u32;
        for (col, &id) in ids.iter().enumerate() {
            if id >= GROUND_ID {
                continue;
            }
            let x = col as u32;
            extents
                .entry(id)
                .and_modify(|e| {
                    e.x0 = e.x0.min(x);
                    e.x1 = e.x1.max(x);
                    e.y0 = e.y0.min(y);
                    e.y1 = e.y1.max(y);
                    e.count += 1;
                })
                .or_insert(Extent { x0: x, y0: y, x1: x, y1: y, count: 1 });
        }
    }
    extents
        .into_iter()
        .filter(|(_, e)| e.count >= min_visible_pixels)
        .filter_map(|(id, e)| {
            let obj = objects.iter().find(|o| o.id == id as u32);
            debug_assert!(obj.is_some(), "mask id {id} has no scene object");
            obj.map(|o| Annotation {
                object_id: o.id,
                class: o.class,
                bbox: BBox::new(e.x0 as f64, e.y0 as f64, e.x1 as f64 + 1.0, e.y1 as f64 + 1.0),
                visible_pixels: e.count,
            })
        })
        .collect()
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("sphere is not visible from the camera")]
pub struct NotVisible;

/// Bounding box of a sphere's projected silhouette.
///
/// For each image axis the sphere's extent is the pair of planes through the
/// camera center tangent to it: the center's angle on that axis plus/minus
/// the angular radius, mapped through the focal length. The box is clamped
/// to the image; spheres not entirely in front of the camera, or projecting
/// outside the image, are [`NotVisible`].
pub fn analytic_sphere_bbox(sphere: &ObjectInstance, camera: &CameraModel) -> Result<BBox, NotVisible> {
    let r = sphere.dims.x;
    let c = camera.pose.to_local(&sphere.pose.position);
    if !(c.z > r) {
        return Err(NotVisible);
    }
    let f = camera.focal_px();
    let pp = camera.principal_point();
    let extent = |lateral: f64| {
        let dist = (lateral * lateral + c.z * c.z).sqrt();
        let center = lateral.atan2(c.z);
        let half = (r / dist).asin();
        (f * (center - half).tan(), f * (center + half).tan())
    };
    let (x0, x1) = extent(c.x);
    let (y0, y1) = extent(c.y);
    let b = BBox::new(pp.x + x0, pp.y + y0, pp.x + x1, pp.y + y1).clamp_to(camera.width as f64, camera.height as f64);
    if b.is_valid() {
        Ok(b)
    } else {
        Err(NotVisible)
    }
}

/// Points sampled on each cylinder rim for the amodal box.
const RIM_SAMPLES: usize = 1024;

/// Bounding box of an object's full projection, clamped to the image.
///
/// Boxes use their eight corners and spheres the analytic tangent bound.
/// Cylinders use densely sampled rims, which under-reach the true extent by
/// at most `r * (1 - cos(pi / RIM_SAMPLES))`. Objects that cross the
/// camera plane or project outside the image are [`NotVisible`].
pub fn amodal_bbox(object: &ObjectInstance, camera: &CameraModel) -> Result<BBox, NotVisible> {
    let points: Vec<Vec3> = match object.class {
        ShapeClass::Sphere => return analytic_sphere_bbox(object, camera),
        ShapeClass::Box => {
            let h = object.dims * 0.5;
            (0..8)
                .map(|k| {
                    let sign = |bit: usize| if k >> bit & 1 == 1 { 1.0 } else { -1.0 };
                    Vec3::new(sign(0) * h.x, sign(1) * h.y, sign(2) * h.z)
                })
                .collect()
        }
        ShapeClass::Cylinder => {
            let (r, half) = (object.dims.x, 0.5 * object.dims.z);
            (0..RIM_SAMPLES)
                .flat_map(|k| {
                    let a = std::f64::consts::TAU * k as f64 / RIM_SAMPLES as f64;
                    let (s, c) = a.sin_cos();
                    [Vec3::new(r * c, r * s, -half), Vec3::new(r * c, r * s, half)]
                })
                .collect()
        }
    };
    let mut b = BBox::new(f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for local in points {
        let world = object.pose.position + object.pose.orientation * local;
        let Projection::Pixel(p) = camera.project(&world) else { return Err(NotVisible) };
        b = BBox::new(b.xmin.min(p.x), b.ymin.min(p.y), b.xmax.max(p.x), b.ymax.max(p.y));
    }
    let b = b.clamp_to(camera.width as f64, camera.height as f64);
    if b.is_valid() {
        Ok(b)
    } else {
        Err(NotVisible)
    }
}

/// Annotations for a rendered scene at output resolution. `camera` must
/// match the mask size.
pub fn annotate(
    mask: &IdMask,
    objects: &[ObjectInstance],
    camera: &CameraModel,
    min_visible_pixels: u64,
    mode: BoxMode,
) -> Vec<Annotation> {
    let mut anns = boxes_from_idmask(mask, objects, min_visible_pixels);
    if mode == BoxMode::Amodal {
        for a in &mut anns {
            let obj = objects.iter().find(|o| o.id == a.object_id).expect("annotated object exists");
            // an object straddling the camera plane keeps its modal box
            if let Ok(b) = amodal_bbox(obj, camera) {
                a.bbox = b;
            }
        }
    }
    anns
}
