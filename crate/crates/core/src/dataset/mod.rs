//! Dataset emission and the two scene-resource strategies.
//!
//! Output tree:
//!
//! ```text
//! <out>/images/scene_XXXXXX.jpg        (plus scene_XXXXXX.png with write_png)
//! <out>/annotations/scene_XXXXXX.json
//! <out>/manifest.json
//! ```
//!
//! Scenes are processed in parallel on the ambient rayon pool. Each scene is
//! a pure function of the config and its index, so the emitted annotations
//! and PNGs do not depend on the strategy or the worker count.

mod bench;
pub mod json;
mod pool;

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use image::codecs::jpeg::JpegEncoder;
use image::codecs::png::PngEncoder;
use image::{ExtendedColorType, ImageEncoder};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bench::{bench, StrategyTiming, ThroughputReport, MIN_BENCH_SCENES};
pub use json::{annotation_json, format_g17, AnnotationFile, AnnotationRecord};
pub use pool::ScenePool;

use crate::annotate::{annotate, Annotation};
use crate::config::{ConfigError, GenerationStrategy, PipelineConfig};
use crate::render::{downscale, downscale_ids, ColorImage, IdMask, RenderError, RenderObject, RenderOutput};
use crate::sampler::{sample_scene, SamplerError, SceneContext};
use crate::scene::SceneSpec;
use crate::texture::{build_texture_library, TextureError, TextureLibrary};

pub const TOOL_VERSION: &str = concat!("randr ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Texture(#[from] TextureError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("i/o failure at {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot encode {path}: {message}")]
    Encode { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.to_path_buf(), source }
}

pub fn scene_stem(index: u64) -> String {
    format!("scene_{index:06}")
}

/// One rendered and annotated scene at output resolution.
#[derive(Debug, Clone)]
pub struct SceneSample {
    pub scene: SceneSpec,
    pub image: ColorImage,
    pub mask: IdMask,
    pub annotations: Vec<Annotation>,
}

impl SceneSample {
    fn from_render(scene: SceneSpec, full: &RenderOutput, config: &PipelineConfig) -> Result<Self, DatasetError> {
        let factor = config.render.downscale;
        let image = downscale(&full.color, factor)?;
        let mask = downscale_ids(&full.id_mask, factor)?;
        let a = &config.annotator;
        let annotations = annotate(&mask, &scene.objects, &scene.camera.downscaled(factor), a.min_visible_pixels, a.box_mode);
        Ok(Self { scene, image, mask, annotations })
    }
}

fn scene_context(config: &PipelineConfig) -> SceneContext {
    SceneContext { width: config.render.width, height: config.render.height, texture_count: config.textures.library_size }
}

pub fn sample_config_scene(config: &PipelineConfig, index: u64) -> Result<SceneSpec, DatasetError> {
    Ok(sample_scene(&config.sampler, scene_context(config), config.master_seed, index)?)
}

pub fn build_library(config: &PipelineConfig) -> Result<TextureLibrary, DatasetError> {
    let t = &config.textures;
    Ok(build_texture_library(t.library_size, t.resolution, &t.enabled_patterns, &t.params, config.texture_seed())?)
}

/// Samples, renders and annotates scene `index` with freshly allocated
/// resources.
pub fn produce_scene(config: &PipelineConfig, library: &TextureLibrary, index: u64) -> Result<SceneSample, DatasetError> {
    let scene = sample_config_scene(config, index)?;
    let full = crate::render::render(&scene, &library.images, config.render.background_color)?;
    SceneSample::from_render(scene, &full, config)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplePaths {
    pub image: PathBuf,
    pub annotation: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub png: Option<PathBuf>,
}

/// Scene metadata needed to name and describe the written files.
#[derive(Debug, Clone, Copy)]
pub struct SceneMeta {
    pub index: u64,
    pub seed: u64,
}

fn encode_error(path: &Path, e: image::ImageError) -> DatasetError {
    DatasetError::Encode { path: path.to_path_buf(), message: e.to_string() }
}

/// Writes the image (JPEG, plus optional PNG) and annotation document of one
/// scene below `output_dir`. Returned paths are relative to `output_dir`.
pub fn write_sample(
    image: &ColorImage,
    annotations: &[Annotation],
    meta: SceneMeta,
    output_dir: &Path,
    jpeg_quality: u8,
    write_png: bool,
) -> Result<SamplePaths, DatasetError> {
    let stem = scene_stem(meta.index);
    let images = output_dir.join("images");
    let annots = output_dir.join("annotations");
    fs::create_dir_all(&images).map_err(io_err(&images))?;
    fs::create_dir_all(&annots).map_err(io_err(&annots))?;
    let rgb = image.to_rgb8();

    let jpg_name = format!("{stem}.jpg");
    let jpg_path = images.join(&jpg_name);
    let file = fs::File::create(&jpg_path).map_err(io_err(&jpg_path))?;
    JpegEncoder::new_with_quality(BufWriter::new(file), jpeg_quality)
        .write_image(&rgb, image.width, image.height, ExtendedColorType::Rgb8)
        .map_err(|e| encode_error(&jpg_path, e))?;

    let png = if write_png {
        let png_path = images.join(format!("{stem}.png"));
        let file = fs::File::create(&png_path).map_err(io_err(&png_path))?;
        PngEncoder::new(BufWriter::new(file))
            .write_image(&rgb, image.width, image.height, ExtendedColorType::Rgb8)
            .map_err(|e| encode_error(&png_path, e))?;
        Some(PathBuf::from("images").join(format!("{stem}.png")))
    } else {
        None
    };

    let json_path = annots.join(format!("{stem}.json"));
    let doc = annotation_json(&jpg_name, image.width, image.height, meta.seed, annotations);
    fs::write(&json_path, doc).map_err(io_err(&json_path))?;

    Ok(SamplePaths {
        image: PathBuf::from("images").join(jpg_name),
        annotation: PathBuf::from("annotations").join(format!("{stem}.json")),
        png,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub index: u64,
    pub scene_seed: String,
    #[serde(flatten)]
    pub paths: SamplePaths,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub master_seed: String,
    pub strategy: GenerationStrategy,
    pub config: PipelineConfig,
    pub scenes: Vec<ManifestEntry>,
}

impl Manifest {
    pub const FILE_NAME: &'static str = "manifest.json";

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|e| DatasetError::Config(ConfigError::Parse(e.to_string())))
    }

    fn write(&self, dir: &Path) -> Result<(), DatasetError> {
        let path = dir.join(Self::FILE_NAME);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(io_err(&path))
    }
}

/// Wall-clock breakdown of one generation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationTiming {
    /// One-off startup work (the pooled texture library).
    pub setup_secs: f64,
    pub total_secs: f64,
}

pub fn generate_dataset(config: &PipelineConfig, strategy: GenerationStrategy) -> Result<Manifest, DatasetError> {
    generate_timed(config, strategy).map(|(m, _)| m)
}

/// Generates `config.num_scenes` scenes into `config.output_dir`.
pub fn generate_timed(
    config: &PipelineConfig,
    strategy: GenerationStrategy,
) -> Result<(Manifest, GenerationTiming), DatasetError> {
    config.validate()?;
    let start = Instant::now();
    let out = &config.output_dir;
    fs::create_dir_all(out).map_err(io_err(out))?;
    let n = config.num_scenes as u64;

    let (entries, setup_secs) = match strategy {
        GenerationStrategy::Pool => {
            let library = build_library(config)?;
            let setup_secs = start.elapsed().as_secs_f64();
            let entries = (0..n)
                .into_par_iter()
                .map_init(
                    || ScenePool::new(&config.sampler, config.render.width, config.render.height),
                    |pool, index| {
                        let scene = sample_config_scene(config, index)?;
                        let full = pool.render(&scene, &library.images, config.render.background_color)?;
                        let sample = SceneSample::from_render(scene, full, config)?;
                        emit(config, &sample)
                    },
                )
                .collect::<Result<Vec<_>, _>>()?;
            (entries, setup_secs)
        }
        GenerationStrategy::Respawn => {
            let entries = (0..n)
                .into_par_iter()
                .map(|index| {
                    let scene = sample_config_scene(config, index)?;
                    // nothing survives between scenes: textures, object state
                    // and frame buffers are all rebuilt
                    let library = build_library(config)?;
                    let objects: Vec<RenderObject> = scene.objects.iter().map(RenderObject::from).collect();
                    let mut full = RenderOutput::new(config.render.width, config.render.height);
                    crate::render::Frame {
                        camera: &scene.camera,
                        light: &scene.light,
                        objects: &objects,
                        ground_texture_id: scene.ground_texture_id,
                        textures: &library.images,
                        background: config.render.background_color,
                    }
                    .render_into(&mut full)?;
                    let sample = SceneSample::from_render(scene, &full, config)?;
                    emit(config, &sample)
                })
                .collect::<Result<Vec<_>, _>>()?;
            (entries, 0.0)
        }
    };

    let manifest = Manifest {
        tool_version: TOOL_VERSION.to_string(),
        master_seed: config.master_seed.to_string(),
        strategy,
        config: config.clone(),
        scenes: entries,
    };
    manifest.write(out)?;
    Ok((manifest, GenerationTiming { setup_secs, total_secs: start.elapsed().as_secs_f64() }))
}

fn emit(config: &PipelineConfig, sample: &SceneSample) -> Result<ManifestEntry, DatasetError> {
    let meta = SceneMeta { index: sample.scene.scene_index, seed: sample.scene.seed };
    let paths = write_sample(
        &sample.image,
        &sample.annotations,
        meta,
        &config.output_dir,
        config.render.jpeg_quality,
        config.render.write_png,
    )?;
    Ok(ManifestEntry { index: meta.index, scene_seed: meta.seed.to_string(), paths })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::BBox;
    use crate::scene::ShapeClass;

    fn small_config(dir: &Path) -> PipelineConfig {
        let mut c = PipelineConfig::default();
        c.render.width = 192;
        c.render.height = 108;
        c.render.write_png = true;
        c.textures.library_size = 12;
        c.textures.resolution = 16;
        c.annotator.min_visible_pixels = 4;
        c.num_scenes = 5;
        c.master_seed = 3;
        c.output_dir = dir.to_path_buf();
        c
    }

    #[test]
    fn naming_rule() {
        assert_eq!(scene_stem(123), "scene_000123");
    }

    #[test]
    fn write_sample_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let img = ColorImage::filled(8, 4, [0.2, 0.4, 0.6]);
        let anns = vec![Annotation { object_id: 1, class: ShapeClass::Cylinder, bbox: BBox::new(1.0, 0.0, 3.0, 2.0), visible_pixels: 4 }];
        let paths = write_sample(&img, &anns, SceneMeta { index: 123, seed: 99 }, dir.path(), 90, true).unwrap();
        assert_eq!(paths.image, PathBuf::from("images/scene_000123.jpg"));
        assert_eq!(paths.annotation, PathBuf::from("annotations/scene_000123.json"));
        let text = fs::read_to_string(dir.path().join(&paths.annotation)).unwrap();
        let doc = AnnotationFile::parse(&text).unwrap();
        assert_eq!(doc.annotations(), anns);
        assert_eq!((doc.width, doc.height), (8, 4));
        let png = image::open(dir.path().join(paths.png.unwrap())).unwrap().to_rgb8();
        assert_eq!(png.as_raw(), &img.to_rgb8());
        let jpg = image::open(dir.path().join(&paths.image)).unwrap();
        assert_eq!((jpg.width(), jpg.height()), (8, 4));
    }

    #[test]
    fn write_sample_reports_io_failures() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, b"x").unwrap();
        let err = write_sample(&ColorImage::new(2, 2), &[], SceneMeta { index: 0, seed: 0 }, &blocker, 90, false).unwrap_err();
        assert!(matches!(err, DatasetError::Io { .. }), "{err}");
    }

    #[test]
    fn generate_counts_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small_config(dir.path());
        c.render.write_png = false;
        let m = generate_dataset(&c, GenerationStrategy::Pool).unwrap();
        assert_eq!(m.scenes.len(), 5);
        let count = |sub: &str| fs::read_dir(dir.path().join(sub)).unwrap().count();
        assert_eq!(count("images") + count("annotations"), 10);
        assert!(dir.path().join("manifest.json").exists());
        for e in &m.scenes {
            assert!(dir.path().join(&e.paths.image).exists());
            assert!(dir.path().join(&e.paths.annotation).exists());
        }
        let loaded = Manifest::load(&dir.path().join("manifest.json")).unwrap();
        assert_eq!(loaded, m);
    }

    #[test]
    fn pool_and_respawn_agree() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ma = generate_dataset(&small_config(a.path()), GenerationStrategy::Pool).unwrap();
        let mb = generate_dataset(&small_config(b.path()), GenerationStrategy::Respawn).unwrap();
        for (ea, eb) in ma.scenes.iter().zip(&mb.scenes) {
            for rel in [&ea.paths.annotation, ea.paths.png.as_ref().unwrap()] {
                assert_eq!(fs::read(a.path().join(rel)).unwrap(), fs::read(b.path().join(rel)).unwrap());
            }
            assert_eq!(ea.paths, eb.paths);
        }
    }

    #[test]
    fn produced_scene_matches_written_annotations() {
        let dir = tempfile::tempdir().unwrap();
        let c = small_config(dir.path());
        let m = generate_dataset(&c, GenerationStrategy::Pool).unwrap();
        let library = build_library(&c).unwrap();
        for e in &m.scenes {
            let sample = produce_scene(&c, &library, e.index).unwrap();
            let doc = AnnotationFile::parse(&fs::read_to_string(dir.path().join(&e.paths.annotation)).unwrap()).unwrap();
            assert_eq!(doc.annotations(), sample.annotations);
            assert_eq!(doc.seed(), Some(sample.scene.seed));
        }
    }
}
