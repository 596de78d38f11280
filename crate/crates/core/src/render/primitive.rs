//! Analytic ray intersection for the three shape classes and the ground.

use nalgebra::Matrix3;

use crate::scene::{ObjectInstance, ShapeClass, Vec2, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
}

impl Ray {
    /// Normalizes `direction`.
    pub fn new(origin: Vec3, direction: Vec3) -> Self {
        Self { origin, direction: direction.normalize() }
    }

    #[inline]
    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HitTarget {
    Object(u32),
    Ground,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub point: Vec3,
    /// Unit normal facing the ray origin.
    pub normal: Vec3,
    pub target: HitTarget,
    pub uv: Vec2,
}

/// Ground plane tiling period, meters.
pub const GROUND_TILE: f64 = 2.0;

/// Object prepared for repeated intersection: world-to-local rotation and
/// bounding sphere cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderObject {
    pub id: u32,
    pub class: ShapeClass,
    pub center: Vec3,
    /// Columns are the object's local axes in world coordinates.
    pub axes: Matrix3<f64>,
    /// Box half extents; cylinder (r, r, half length); sphere (r, r, r).
    pub half: Vec3,
    pub bound_sq: f64,
    pub texture_id: usize,
}

impl From<&ObjectInstance> for RenderObject {
    fn from(o: &ObjectInstance) -> Self {
        let mut obj = RenderObject {
            id: 0,
            class: ShapeClass::Sphere,
            center: Vec3::zeros(),
            axes: Matrix3::identity(),
            half: Vec3::zeros(),
            bound_sq: 0.0,
            texture_id: 0,
        };
        obj.assign(o);
        obj
    }
}

impl RenderObject {
    /// Rebinds this slot to `o` in place.
    pub fn assign(&mut self, o: &ObjectInstance) {
        self.id = o.id;
        self.class = o.class;
        self.center = o.pose.position;
        self.axes = *o.pose.orientation.to_rotation_matrix().matrix();
        self.half = match o.class {
            ShapeClass::Box => o.dims * 0.5,
            ShapeClass::Cylinder => Vec3::new(o.dims.x, o.dims.x, 0.5 * o.dims.z),
            ShapeClass::Sphere => Vec3::new(o.dims.x, o.dims.x, o.dims.x),
        };
        let r = o.bounding_radius();
        self.bound_sq = r * r;
        self.texture_id = o.texture_id;
    }

    /// Cheap rejection against the bounding sphere; `limit` is the current
    /// nearest distance.
    #[inline]
    fn may_hit(&self, ray: &Ray, limit: f64) -> bool {
        let oc = self.center - ray.origin;
        let tca = oc.dot(&ray.direction);
        let d2 = oc.norm_squared() - tca * tca;
        if d2 > self.bound_sq {
            return false;
        }
        let thc = (self.bound_sq - d2).sqrt();
        tca + thc >= 0.0 && tca - thc < limit
    }

    #[inline]
    pub fn intersect_within(&self, ray: &Ray, limit: f64) -> Option<Hit> {
        if !self.may_hit(ray, limit) {
            return None;
        }
        let hit = self.intersect_exact(ray)?;
        (hit.t < limit).then_some(hit)
    }

    pub fn intersect(&self, ray: &Ray) -> Option<Hit> {
        self.intersect_within(ray, f64::INFINITY)
    }

    fn intersect_exact(&self, ray: &Ray) -> Option<Hit> {
        let o = self.axes.tr_mul(&(ray.origin - self.center));
        let d = self.axes.tr_mul(&ray.direction);
        let (t, local_normal, uv) = match self.class {
            ShapeClass::Sphere => sphere_local(&o, &d, self.half.x)?,
            ShapeClass::Box => box_local(&o, &d, &self.half)?,
            ShapeClass::Cylinder => cylinder_local(&o, &d, self.half.x, self.half.z)?,
        };
        let mut normal = self.axes * local_normal;
        if normal.dot(&ray.direction) > 0.0 {
            normal = -normal;
        }
        Some(Hit { t, point: ray.at(t), normal, target: HitTarget::Object(self.id), uv })
    }
}

/// Any-hit query used for shadow rays.
pub fn occluded(objects: &[RenderObject], ray: &Ray, limit: f64) -> bool {
    objects.iter().any(|o| o.intersect_within(ray, limit).is_some())
}

/// Intersection with a single object (not cached).
pub fn intersect(ray: &Ray, object: &ObjectInstance) -> Option<Hit> {
    RenderObject::from(object).intersect(ray)
}

pub fn intersect_ground(ray: &Ray) -> Option<Hit> {
    let dz = ray.direction.z;
    if dz == 0.0 {
        return None;
    }
    let t = -ray.origin.z / dz;
    if !(t >= 0.0) {
        return None;
    }
    let mut point = ray.at(t);
    point.z = 0.0;
    let normal = if dz < 0.0 { Vec3::z() } else { -Vec3::z() };
    let uv = Vec2::new((point.x / GROUND_TILE).rem_euclid(1.0), (point.y / GROUND_TILE).rem_euclid(1.0));
    Some(Hit { t, point, normal, target: HitTarget::Ground, uv })
}

fn angle_u(x: f64, y: f64) -> f64 {
    (y.atan2(x) + std::f64::consts::PI) / std::f64::consts::TAU
}

fn sphere_local(o: &Vec3, d: &Vec3, r: f64) -> Option<(f64, Vec3, Vec2)> {
    let b = o.dot(d);
    let c = o.norm_squared() - r * r;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t = if -b - sq >= 0.0 { -b - sq } else { -b + sq };
    if t < 0.0 {
        return None;
    }
    let n = (o + d * t) / r;
    let uv = Vec2::new(angle_u(n.x, n.y), n.z.clamp(-1.0, 1.0).acos() / std::f64::consts::PI);
    Some((t, n, uv))
}

fn box_local(o: &Vec3, d: &Vec3, h: &Vec3) -> Option<(f64, Vec3, Vec2)> {
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    let mut near_axis = 0;
    let mut far_axis = 0;
    for k in 0..3 {
        if d[k] == 0.0 {
            if o[k].abs() > h[k] {
                return None;
            }
            continue;
        }
        let inv = 1.0 / d[k];
        let (t0, t1) = {
            let a = (-h[k] - o[k]) * inv;
            let b = (h[k] - o[k]) * inv;
            if a <= b { (a, b) } else { (b, a) }
        };
        if t0 > t_near {
            t_near = t0;
            near_axis = k;
        }
        if t1 < t_far {
            t_far = t1;
            far_axis = k;
        }
    }
    if t_near > t_far || t_far < 0.0 {
        return None;
    }
    let (t, axis) = if t_near >= 0.0 { (t_near, near_axis) } else { (t_far, far_axis) };
    let p = o + d * t;
    let mut n = Vec3::zeros();
    n[axis] = if p[axis] >= 0.0 { 1.0 } else { -1.0 };
    let (a, b) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let uv = Vec2::new(0.5 * (p[a] / h[a] + 1.0), 0.5 * (p[b] / h[b] + 1.0));
    Some((t, n, uv))
}

fn cylinder_local(o: &Vec3, d: &Vec3, r: f64, hz: f64) -> Option<(f64, Vec3, Vec2)> {
    let mut best: Option<(f64, Vec3, Vec2)> = None;
    let mut consider = |t: f64, n: Vec3, uv: Vec2| {
        if t >= 0.0 && best.is_none_or(|(bt, _, _)| t < bt) {
            best = Some((t, n, uv));
        }
    };

    let a = d.x * d.x + d.y * d.y;
    if a > 0.0 {
        let b = o.x * d.x + o.y * d.y;
        let c = o.x * o.x + o.y * o.y - r * r;
        let disc = b * b - a * c;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            for t in [(-b - sq) / a, (-b + sq) / a] {
                let p = o + d * t;
                if p.z.abs() <= hz {
                    let uv = Vec2::new(angle_u(p.x, p.y), (p.z + hz) / (2.0 * hz));
                    consider(t, Vec3::new(p.x / r, p.y / r, 0.0), uv);
                }
            }
        }
    }
    if d.z != 0.0 {
        for cap in [-hz, hz] {
            let t = (cap - o.z) / d.z;
            let p = o + d * t;
            if p.x * p.x + p.y * p.y <= r * r {
                let uv = Vec2::new(0.5 * (p.x / r + 1.0), 0.5 * (p.y / r + 1.0));
                consider(t, Vec3::new(0.0, 0.0, cap.signum()), uv);
            }
        }
    }
    best
}
