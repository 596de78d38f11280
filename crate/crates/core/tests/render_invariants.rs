use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use randr::annotate::{amodal_bbox, analytic_sphere_bbox, annotate, boxes_from_idmask, BoxMode};
use randr::render::{downscale_ids, intersect, intersect_ground, primary_ray, render, BACKGROUND_ID, GROUND_ID};
use randr::sampler::{sample_scene, SamplerConfig, SceneContext};
use randr::scene::{look_at, CameraModel, LightSource, ObjectInstance, SceneSpec, ShapeClass, Vec3};
use randr::texture::{build_texture_library, PatternKind, TextureLibrary, TextureParams};

const W: u32 = 640;
const H: u32 = 360;

fn library() -> TextureLibrary {
    build_texture_library(24, 32, &PatternKind::ALL, &TextureParams::default(), 3).unwrap()
}

fn ctx() -> SceneContext {
    SceneContext { width: W, height: H, texture_count: 24 }
}

#[test]
fn mask_ids_are_nearest_hits() {
    let lib = library();
    let cfg = SamplerConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for index in 0..6 {
        let scene = sample_scene(&cfg, ctx(), 17, index).unwrap();
        let out = render(&scene, &lib.images, [0.5; 3]).unwrap();
        for _ in 0..10_000 {
            let (px, py) = (rng.gen_range(0..W), rng.gen_range(0..H));
            let ray = primary_ray(&scene.camera, px, py);
            let hits: Vec<(u32, f64)> = scene
                .objects
                .iter()
                .filter_map(|o| {
                    intersect(&ray, o).map(|h| {
                        assert!(h.normal.dot(&ray.direction) < 0.0, "normal faces away at ({px}, {py})");
                        (o.id, h.t)
                    })
                })
                .collect();
            let nearest_obj = hits.iter().map(|h| h.1).fold(f64::INFINITY, f64::min);
            let ground = intersect_ground(&ray).map(|h| h.t);
            match out.id_mask.get(px, py) {
                BACKGROUND_ID => assert!(hits.is_empty() && ground.is_none(), "({px}, {py})"),
                GROUND_ID => {
                    let g = ground.expect("ground pixel without ground hit");
                    assert!(g <= nearest_obj, "object in front of ground at ({px}, {py})");
                }
                k => {
                    let t = hits.iter().find(|h| h.0 == k as u32).expect("mask id not hit").1;
                    assert!(t <= nearest_obj, "object {k} is not nearest at ({px}, {py})");
                    assert!(ground.is_none_or(|g| t <= g));
                }
            }
        }
    }
}

#[test]
fn rendering_is_pure() {
    let lib = library();
    let scene = sample_scene(&SamplerConfig::default(), ctx(), 4, 2).unwrap();
    let a = render(&scene, &lib.images, [0.5; 3]).unwrap();
    let b = render(&scene, &lib.images, [0.5; 3]).unwrap();
    assert_eq!(a, b);
    assert!(a.color.pixels.iter().flatten().all(|c| (0.0..=1.0).contains(c)));
}

fn lone_sphere_scene(rng: &mut ChaCha8Rng, index: u64) -> SceneSpec {
    let mut scene = sample_scene(&SamplerConfig::default(), ctx(), 23, index).unwrap();
    let r = rng.gen_range(0.05..0.2);
    let (x, y) = (rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4));
    scene.objects = vec![ObjectInstance::resting(0, ShapeClass::Sphere, Vec3::repeat(r), x, y, 0.0, 1)];
    scene
}

#[test]
fn analytic_sphere_box_contains_mask_box() {
    let lib = library();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    for index in 0..20 {
        let scene = lone_sphere_scene(&mut rng, index);
        let full = render(&scene, &lib.images, [0.5; 3]).unwrap();
        let mask = downscale_ids(&full.id_mask, 2).unwrap();
        let anns = boxes_from_idmask(&mask, &scene.objects, 1);
        let Ok(analytic) = analytic_sphere_bbox(&scene.objects[0], &scene.camera.downscaled(2)) else { continue };
        let [ann] = anns.as_slice() else { panic!("scene {index}: sphere not annotated") };
        assert!(analytic.contains_with_slack(&ann.bbox, 1.0), "scene {index}: {analytic:?} vs {:?}", ann.bbox);
        assert!(analytic.max_edge_difference(&ann.bbox) <= 1.0, "scene {index}: {analytic:?} vs {:?}", ann.bbox);
        checked += 1;
    }
    assert_eq!(checked, 20);
}

#[test]
fn hidden_object_gets_no_box() {
    let eye = Vec3::new(0.0, -3.0, 0.2);
    let camera = CameraModel::new(look_at(eye, Vec3::new(0.0, 0.0, 0.2), Vec3::z()).unwrap(), 1.0, W, H);
    let wall = ObjectInstance::resting(0, ShapeClass::Box, Vec3::new(0.8, 0.1, 0.8), 0.0, -1.0, 0.0, 0);
    let hidden = ObjectInstance::resting(1, ShapeClass::Sphere, Vec3::repeat(0.1), 0.0, 0.5, 0.0, 1);
    let scene = SceneSpec {
        scene_index: 0,
        seed: 0,
        objects: vec![wall, hidden],
        camera,
        light: LightSource { position: Vec3::new(1.0, -2.0, 3.0), intensity: 1.0, ambient: 0.25 },
        ground_texture_id: 2,
    };
    let full = render(&scene, &library().images, [0.5; 3]).unwrap();
    let mask = downscale_ids(&full.id_mask, 2).unwrap();
    let anns = boxes_from_idmask(&mask, &scene.objects, 25);
    assert_eq!(anns.len(), 1);
    assert_eq!(anns[0].object_id, 0);
}

#[test]
fn amodal_boxes_contain_modal_boxes() {
    let lib = library();
    let cfg = SamplerConfig::default();
    let mut amodal_differs = 0;
    for index in 0..30 {
        let scene = sample_scene(&cfg, ctx(), 41, index).unwrap();
        let full = render(&scene, &lib.images, [0.5; 3]).unwrap();
        let mask = downscale_ids(&full.id_mask, 2).unwrap();
        let cam = scene.camera.downscaled(2);
        let modal = annotate(&mask, &scene.objects, &cam, 25, BoxMode::Modal);
        let amodal = annotate(&mask, &scene.objects, &cam, 25, BoxMode::Amodal);
        assert_eq!(modal.len(), amodal.len());
        for (m, a) in modal.iter().zip(&amodal) {
            assert_eq!(m.object_id, a.object_id);
            let obj = scene.objects.iter().find(|o| o.id == m.object_id).unwrap();
            assert_eq!(Ok(a.bbox), amodal_bbox(obj, &cam));
            // mask pixels are sampled at full-resolution pixel centers, a
            // quarter output pixel inside the output pixel
            assert!(a.bbox.contains_with_slack(&m.bbox, 1.0), "scene {index}: {:?} vs {:?}", a.bbox, m.bbox);
            amodal_differs += (a.bbox.max_edge_difference(&m.bbox) > 2.0) as usize;
        }
    }
    assert!(amodal_differs > 0, "some objects should be partly occluded");
}
