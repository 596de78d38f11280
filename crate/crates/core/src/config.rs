//! Pipeline configuration, read from JSON.
//!
//! Every field has a default; unknown fields are rejected at every level.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::BoxMode;
use crate::sampler::SamplerConfig;
use crate::texture::{PatternKind, TextureParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("unknown config field: {0}")]
    UnknownField(String),
    #[error("invalid config: {0}")]
    Validation(String),
}

/// How scene resources are managed between scenes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenerationStrategy {
    /// Texture library and object slots are built once and rebound per scene.
    Pool,
    /// Textures and every scene resource are rebuilt from scratch per scene.
    Respawn,
}

impl GenerationStrategy {
    pub fn name(self) -> &'static str {
        match self {
            GenerationStrategy::Pool => "pool",
            GenerationStrategy::Respawn => "respawn",
        }
    }
}

impl fmt::Display for GenerationStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GenerationStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pool" => Ok(Self::Pool),
            "respawn" => Ok(Self::Respawn),
            _ => Err(format!("unknown strategy '{s}' (expected pool|respawn)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    pub width: u32,
    pub height: u32,
    /// Written images are downscaled by this factor.
    pub downscale: u32,
    pub jpeg_quality: u8,
    pub background_color: [f32; 3],
    /// Also write a lossless PNG next to each JPEG.
    pub write_png: bool,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self { width: 1920, height: 1080, downscale: 2, jpeg_quality: 90, background_color: [0.5; 3], write_png: false }
    }
}

impl RenderConfig {
    pub fn output_size(&self) -> (u32, u32) {
        (self.width / self.downscale, self.height / self.downscale)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextureConfig {
    pub library_size: usize,
    pub resolution: u32,
    pub enabled_patterns: Vec<PatternKind>,
    pub params: TextureParams,
}

impl Default for TextureConfig {
    fn default() -> Self {
        Self { library_size: 500, resolution: 256, enabled_patterns: PatternKind::ALL.to_vec(), params: TextureParams::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotatorConfig {
    /// Objects with fewer visible pixels at output resolution get no box.
    pub min_visible_pixels: u64,
    pub box_mode: BoxMode,
}

impl Default for AnnotatorConfig {
    fn default() -> Self {
        Self { min_visible_pixels: 25, box_mode: BoxMode::Modal }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub master_seed: u64,
    pub num_scenes: usize,
    pub render: RenderConfig,
    pub sampler: SamplerConfig,
    pub textures: TextureConfig,
    pub annotator: AnnotatorConfig,
    pub strategy: GenerationStrategy,
    pub output_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            master_seed: 0,
            num_scenes: 100,
            render: RenderConfig::default(),
            sampler: SamplerConfig::default(),
            textures: TextureConfig::default(),
            annotator: AnnotatorConfig::default(),
            strategy: GenerationStrategy::Pool,
            output_dir: PathBuf::from("randr_out"),
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: PipelineConfig = serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            if msg.starts_with("unknown field") || msg.starts_with("unknown variant") {
                ConfigError::UnknownField(msg)
            } else {
                ConfigError::Parse(msg)
            }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: String| Err(ConfigError::Validation(m));
        if self.num_scenes == 0 {
            return fail("num_scenes must be at least 1".into());
        }
        let r = &self.render;
        if r.width == 0 || r.height == 0 {
            return fail("render size must be positive".into());
        }
        if r.downscale == 0 || r.width % r.downscale != 0 || r.height % r.downscale != 0 {
            return fail(format!("render size {}x{} is not divisible by downscale {}", r.width, r.height, r.downscale));
        }
        if !(1..=100).contains(&r.jpeg_quality) {
            return fail("jpeg_quality must be in [1, 100]".into());
        }
        if !r.background_color.iter().all(|c| (0.0..=1.0).contains(c)) {
            return fail("background_color channels must be in [0, 1]".into());
        }
        self.sampler.validate().map_err(|e| ConfigError::Validation(e.to_string()))?;
        let t = &self.textures;
        if t.library_size == 0 {
            return fail("textures.library_size must be at least 1".into());
        }
        if t.resolution < 2 {
            return fail("textures.resolution must be at least 2".into());
        }
        if t.enabled_patterns.is_empty() {
            return fail("at least one texture pattern must be enabled".into());
        }
        t.params.validate().map_err(|m| ConfigError::Validation(format!("textures.params: {m}")))?;
        if self.annotator.min_visible_pixels == 0 {
            return fail("annotator.min_visible_pixels must be at least 1".into());
        }
        Ok(())
    }

    /// Removes `kinds` from the enabled texture families.
    pub fn disable_patterns(&mut self, kinds: &[PatternKind]) {
        self.textures.enabled_patterns.retain(|k| !kinds.contains(k));
    }

    /// Seed of the texture library stream, kept apart from the scene stream.
    pub fn texture_seed(&self) -> u64 {
        crate::scene::derived_seed(self.master_seed, TEXTURE_STREAM)
    }
}

const TEXTURE_STREAM: u64 = 0x7465_7874_7572_6573;

/// Reads a config file. A dataset `manifest.json` is accepted too, and its
/// embedded config is used.
pub fn parse_config(path: &Path) -> Result<PipelineConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    if let Ok(serde_json::Value::Object(mut doc)) = serde_json::from_str(&text) {
        if doc.contains_key("tool_version") {
            if let Some(config) = doc.remove("config") {
                return PipelineConfig::from_json(&config.to_string());
            }
        }
    }
    PipelineConfig::from_json(&text)
}
