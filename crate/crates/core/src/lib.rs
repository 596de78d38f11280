//! Domain-randomized synthetic data for 2-D object detection.
//!
//! Scenes of textured boxes, cylinders and spheres on a textured ground are
//! sampled from a master seed, ray cast, and annotated with tight boxes
//! read off the object-ID mask. The [`eval`] module scores detectors on the
//! resulting datasets.
//!
//! Everything is reproducible: scene `i` depends only on the configuration
//! and the master seed, never on worker count or generation order.

pub mod annotate;
pub mod config;
pub mod dataset;
pub mod eval;
pub mod interval;
pub mod parallel;
pub mod render;
pub mod sampler;
pub mod scene;
pub mod texture;

pub use annotate::{boxes_from_idmask, Annotation, BBox};
pub use config::{parse_config, ConfigError, GenerationStrategy, PipelineConfig};
pub use dataset::{generate_dataset, DatasetError, Manifest};
pub use scene::{derived_seed, ShapeClass};
