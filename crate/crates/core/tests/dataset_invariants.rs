use std::fs;
use std::path::Path;

use randr::config::{GenerationStrategy, PipelineConfig};
use randr::dataset::{generate_dataset, sample_config_scene, AnnotationFile, Manifest};
use randr::sampler::{ground_footprint, CameraMode};
use randr::scene::ShapeClass;

fn small_config(dir: &Path, scenes: usize) -> PipelineConfig {
    let mut c = PipelineConfig::from_json(&format!(
        r#"{{"master_seed": 314, "num_scenes": {scenes}, "output_dir": {:?},
            "render": {{"width": 320, "height": 180, "write_png": true}},
            "textures": {{"library_size": 16, "resolution": 32}}}}"#,
        dir.to_str().unwrap()
    ))
    .unwrap();
    c.validate().unwrap();
    c.output_dir = dir.to_path_buf();
    c
}

fn tree_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for sub in ["annotations", "images"] {
        let mut names: Vec<_> = fs::read_dir(dir.join(sub)).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        for n in names {
            let rel = format!("{sub}/{}", n.to_string_lossy());
            out.push((rel.clone(), fs::read(dir.join(&rel)).unwrap()));
        }
    }
    out
}

#[test]
fn manifest_regenerates_the_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    generate_dataset(&small_config(&first, 8), GenerationStrategy::Pool).unwrap();
    let manifest = Manifest::load(&first.join(Manifest::FILE_NAME)).unwrap();
    assert_eq!(manifest.scenes.len(), 8);
    assert_eq!(manifest.master_seed, "314");

    let second = tmp.path().join("second");
    let config = PipelineConfig { output_dir: second.clone(), ..manifest.config.clone() };
    generate_dataset(&config, manifest.strategy).unwrap();
    assert_eq!(tree_bytes(&first), tree_bytes(&second));
}

#[test]
fn annotations_stay_inside_the_image() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = generate_dataset(&small_config(tmp.path(), 12), GenerationStrategy::Respawn).unwrap();
    for e in &manifest.scenes {
        let doc = AnnotationFile::parse(&fs::read_to_string(tmp.path().join(&e.paths.annotation)).unwrap()).unwrap();
        assert_eq!((doc.width, doc.height), (160, 90));
        assert_eq!(doc.seed().unwrap().to_string(), e.scene_seed);
        let mut last = None;
        for a in doc.annotations() {
            assert!(a.bbox.is_valid());
            assert!(a.bbox.xmin >= 0.0 && a.bbox.ymin >= 0.0 && a.bbox.xmax <= 160.0 && a.bbox.ymax <= 90.0);
            assert!(a.visible_pixels >= 25 && a.visible_pixels as f64 <= a.bbox.area());
            assert!(last < Some(a.object_id), "objects sorted by id");
            last = Some(a.object_id);
        }
    }
}

#[test]
fn class_totals_over_500_scenes_are_uniform() {
    let config = PipelineConfig::default();
    let mut counts = [0usize; 3];
    for i in 0..500 {
        for o in sample_config_scene(&config, i).unwrap().objects {
            counts[o.class.code() as usize] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    for class in ShapeClass::ALL {
        let f = counts[class.code() as usize] as f64 / total as f64;
        assert!((f - 1.0 / 3.0).abs() <= 0.03, "{class}: {f}");
    }
}

#[test]
fn sampled_geometry_is_well_formed() {
    for camera in [CameraMode::default_moving(), CameraMode::default_fixed()] {
        let mut config = PipelineConfig::default();
        config.sampler.camera = camera;
        for i in 0..300 {
            let scene = sample_config_scene(&config, i).unwrap();
            assert!((scene.camera.pose.orientation.norm() - 1.0).abs() < 1e-12);
            for (k, a) in scene.objects.iter().enumerate() {
                assert!((a.pose.orientation.norm() - 1.0).abs() < 1e-12);
                assert!(a.min_z().abs() < 1e-9);
                let fa = ground_footprint(a);
                for b in &scene.objects[k + 1..] {
                    let fb = ground_footprint(b);
                    let apart = fa[2] <= fb[0] || fb[2] <= fa[0] || fa[3] <= fb[1] || fb[3] <= fa[1];
                    assert!(apart, "scene {i}: objects {} and {} overlap", a.id, b.id);
                }
            }
        }
    }
}
