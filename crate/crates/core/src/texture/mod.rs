//! Procedural texture families: flat colors, color gradients, chess boards
//! and octave gradient noise.

mod library;
pub mod noise;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use library::{build_texture_library, PatternKind, TextureLibrary, TextureParams};
pub use ::image::ImageError;
pub use noise::{fbm2, perlin2, perlin2_gradient, PermutationTable};

pub type Rgb = [f64; 3];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TextureError {
    #[error("invalid texture pattern: {0}")]
    InvalidPattern(String),
    #[error("no texture pattern families are enabled")]
    EmptyPatternSet,
    #[error("texture resolution must be at least 2, got {0}")]
    InvalidResolution(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TexturePattern {
    Flat {
        color: Rgb,
    },
    Gradient {
        color_a: Rgb,
        color_b: Rgb,
        /// Unit direction in texture space (`+x` = increasing column).
        direction: [f64; 2],
    },
    Chess {
        color_a: Rgb,
        color_b: Rgb,
        cells_per_side: u32,
    },
    Perlin {
        /// Lattice cycles across the texture width.
        base_frequency: f64,
        octaves: u32,
        persistence: f64,
        color_a: Rgb,
        color_b: Rgb,
    },
}

impl TexturePattern {
    pub fn kind(&self) -> PatternKind {
        match self {
            TexturePattern::Flat { .. } => PatternKind::Flat,
            TexturePattern::Gradient { .. } => PatternKind::Gradient,
            TexturePattern::Chess { .. } => PatternKind::Chess,
            TexturePattern::Perlin { .. } => PatternKind::Perlin,
        }
    }

    pub fn validate(&self) -> Result<(), TextureError> {
        let color_ok = |c: &Rgb| c.iter().all(|v| (0.0..=1.0).contains(v));
        let invalid = |msg: &str| Err(TextureError::InvalidPattern(msg.to_string()));
        match self {
            TexturePattern::Flat { color } if !color_ok(color) => invalid("flat color outside [0,1]"),
            TexturePattern::Gradient { color_a, color_b, direction } => {
                if !color_ok(color_a) || !color_ok(color_b) {
                    return invalid("gradient color outside [0,1]");
                }
                let n = (direction[0] * direction[0] + direction[1] * direction[1]).sqrt();
                if !((n - 1.0).abs() <= 1e-6) {
                    return invalid("gradient direction is not a unit vector");
                }
                Ok(())
            }
            TexturePattern::Chess { color_a, color_b, cells_per_side } => {
                if !color_ok(color_a) || !color_ok(color_b) {
                    return invalid("chess color outside [0,1]");
                }
                if *cells_per_side < 2 {
                    return invalid("chess needs at least 2 cells per side");
                }
                Ok(())
            }
            TexturePattern::Perlin { base_frequency, octaves, persistence, color_a, color_b } => {
                if !color_ok(color_a) || !color_ok(color_b) {
                    return invalid("noise color outside [0,1]");
                }
                if !(base_frequency.is_finite() && *base_frequency > 0.0) {
                    return invalid("noise frequency must be positive");
                }
                if !(1..=8).contains(octaves) {
                    return invalid("noise octaves must be in [1, 8]");
                }
                if !(*persistence > 0.0 && *persistence <= 1.0) {
                    return invalid("noise persistence must be in (0, 1]");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Square RGB texture, row-major, 8 bits per channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextureImage {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<[u8; 3]>,
}

impl TextureImage {
    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        self.pixels[(y * self.width + x) as usize]
    }

    /// Channel values of pixel `(x, y)` in `[0, 1]`.
    pub fn rgb(&self, x: u32, y: u32) -> [f32; 3] {
        let p = self.pixel(x, y);
        [p[0] as f32 / 255.0, p[1] as f32 / 255.0, p[2] as f32 / 255.0]
    }

    /// Nearest-texel lookup; `u` runs along columns, `v` along rows, both
    /// clamped to `[0, 1]`.
    #[inline]
    pub fn sample(&self, u: f64, v: f64) -> [f32; 3] {
        let x = ((u.clamp(0.0, 1.0) * self.width as f64) as u32).min(self.width - 1);
        let y = ((v.clamp(0.0, 1.0) * self.height as f64) as u32).min(self.height - 1);
        self.rgb(x, y)
    }

    pub fn save_png(&self, path: &std::path::Path) -> Result<(), ::image::ImageError> {
        let raw: Vec<u8> = self.pixels.iter().flatten().copied().collect();
        ::image::save_buffer(path, &raw, self.width, self.height, ::image::ExtendedColorType::Rgb8)
    }
}

#[inline]
fn quantize(c: f64) -> u8 {
    (c.clamp(0.0, 1.0) * 255.0).round() as u8
}

#[inline]
fn mix(a: &Rgb, b: &Rgb, t: f64) -> [u8; 3] {
    [
        quantize(a[0] + (b[0] - a[0]) * t),
        quantize(a[1] + (b[1] - a[1]) * t),
        quantize(a[2] + (b[2] - a[2]) * t),
    ]
}

/// Renders `pattern` into a `resolution x resolution` texture. `seed` drives
/// the lattice hash of noise patterns and is ignored by the others.
pub fn gen_texture(pattern: &TexturePattern, resolution: u32, seed: u64) -> Result<TextureImage, TextureError> {
    if resolution < 2 {
        return Err(TextureError::InvalidResolution(resolution));
    }
    pattern.validate()?;
    let n = resolution as usize;
    let mut pixels = Vec::with_capacity(n * n);
    match pattern {
        TexturePattern::Flat { color } => {
            pixels.resize(n * n, mix(color, color, 0.0));
        }
        TexturePattern::Gradient { color_a, color_b, direction } => {
            // project pixel positions onto the direction; the extreme corners
            // of the unit square map to t = 0 and t = 1
            let [dx, dy] = *direction;
            let lo = dx.min(0.0) + dy.min(0.0);
            let span = dx.abs() + dy.abs();
            let last = (n - 1) as f64;
            for y in 0..n {
                for x in 0..n {
                    let s = dx * (x as f64 / last) + dy * (y as f64 / last);
                    pixels.push(mix(color_a, color_b, (s - lo) / span));
                }
            }
        }
        TexturePattern::Chess { color_a, color_b, cells_per_side } => {
            let a = mix(color_a, color_a, 0.0);
            let b = mix(color_b, color_b, 0.0);
            let cells = *cells_per_side as usize;
            for y in 0..n {
                let cy = y * cells / n;
                for x in 0..n {
                    let cx = x * cells / n;
                    pixels.push(if (cx + cy) % 2 == 0 { a } else { b });
                }
            }
        }
        TexturePattern::Perlin { base_frequency, octaves, persistence, color_a, color_b } => {
            let table = PermutationTable::from_seed(seed);
            let scale = base_frequency / resolution as f64;
            for y in 0..n {
                let fy = (y as f64 + 0.5) * scale;
                for x in 0..n {
                    let fx = (x as f64 + 0.5) * scale;
                    let v = fbm2(fx, fy, *octaves, *persistence, &table);
                    pixels.push(mix(color_a, color_b, 0.5 * (v + 1.0)));
                }
            }
        }
    }
    Ok(TextureImage { width: resolution, height: resolution, pixels })
}
