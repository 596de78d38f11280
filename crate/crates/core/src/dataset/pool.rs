//! Persistent object slots reused across scenes.
//!
//! The pool spawns the maximum number of objects of every class once, parked
//! below the ground plane. For each scene it moves the needed slots into
//! place and rebinds their dims and textures, then renders into frame
//! buffers that also persist between scenes.

use crate::render::{Frame, RenderError, RenderObject, RenderOutput, Rgb32};
use crate::sampler::SamplerConfig;
use crate::scene::{ObjectInstance, SceneSpec, ShapeClass, Vec3};
use crate::texture::TextureImage;

/// Depth below the ground at which idle slots wait.
const PARK_DEPTH: f64 = 100.0;

#[derive(Debug, Clone)]
struct Slot {
    class: ShapeClass,
    object: RenderObject,
    in_use: bool,
}

#[derive(Debug)]
pub struct ScenePool {
    slots: Vec<Slot>,
    active: Vec<RenderObject>,
    frame: RenderOutput,
}

fn parked(class: ShapeClass) -> ObjectInstance {
    let mut o = ObjectInstance::resting(0, class, Vec3::repeat(0.1), 0.0, 0.0, 0.0, 0);
    o.pose.position.z -= PARK_DEPTH;
    o
}

impl ScenePool {
    pub fn new(sampler: &SamplerConfig, width: u32, height: u32) -> Self {
        let slots = ShapeClass::ALL
            .into_iter()
            .flat_map(|class| {
                (0..sampler.max_count).map(move |_| Slot { class, object: RenderObject::from(&parked(class)), in_use: false })
            })
            .collect();
        Self { slots, active: Vec::with_capacity(sampler.max_count), frame: RenderOutput::new(width, height) }
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    /// Parks every slot and moves one slot per scene object into place.
    pub fn bind(&mut self, scene: &SceneSpec) {
        for slot in self.slots.iter_mut().filter(|s| s.in_use) {
            slot.object.center.z = -PARK_DEPTH;
            slot.in_use = false;
        }
        self.active.clear();
        for obj in &scene.objects {
            let slot = self
                .slots
                .iter_mut()
                .find(|s| s.class == obj.class && !s.in_use)
                .expect("pool holds max_count slots per class");
            slot.object.assign(obj);
            slot.in_use = true;
            self.active.push(slot.object);
        }
    }

    /// Objects bound for the current scene, in scene order.
    pub fn active(&self) -> &[RenderObject] {
        &self.active
    }

    pub fn render(&mut self, scene: &SceneSpec, textures: &[TextureImage], background: Rgb32) -> Result<&RenderOutput, RenderError> {
        self.bind(scene);
        let frame = Frame {
            camera: &scene.camera,
            light: &scene.light,
            objects: &self.active,
            ground_texture_id: scene.ground_texture_id,
            textures,
            background,
        };
        frame.render_into(&mut self.frame)?;
        Ok(&self.frame)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::render;
    use crate::sampler::{sample_scene, SceneContext};
    use crate::texture::{build_texture_library, PatternKind, TextureParams};

    #[test]
    fn pooled_render_equals_fresh_render() {
        let cfg = SamplerConfig::default();
        let ctx = SceneContext { width: 96, height: 54, texture_count: 6 };
        let lib = build_texture_library(6, 8, &PatternKind::ALL, &TextureParams::default(), 1).unwrap();
        let mut pool = ScenePool::new(&cfg, 96, 54);
        assert_eq!(pool.capacity(), 21);
        for i in 0..30 {
            let scene = sample_scene(&cfg, ctx, 5, i).unwrap();
            let fresh = render(&scene, &lib.images, [0.5; 3]).unwrap();
            let pooled = pool.render(&scene, &lib.images, [0.5; 3]).unwrap();
            assert_eq!(&fresh, pooled, "scene {i}");
            assert_eq!(pool.active().len(), scene.objects.len());
            // idle slots stay below ground
            assert!(pool.slots.iter().filter(|s| !s.in_use).all(|s| s.object.center.z < 0.0));
        }
    }
}
