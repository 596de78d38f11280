use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{gen_texture, Rgb, TextureError, TextureImage, TexturePattern};
use crate::interval::Interval;
use crate::scene::derived_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternKind {
    Flat,
    Gradient,
    Chess,
    Perlin,
}

impl PatternKind {
    pub const ALL: [PatternKind; 4] = [PatternKind::Flat, PatternKind::Gradient, PatternKind::Chess, PatternKind::Perlin];

    pub fn name(self) -> &'static str {
        match self {
            PatternKind::Flat => "flat",
            PatternKind::Gradient => "gradient",
            PatternKind::Chess => "chess",
            PatternKind::Perlin => "perlin",
        }
    }
}

impl fmt::Display for PatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PatternKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown texture pattern '{s}' (expected flat|gradient|chess|perlin)"))
    }
}

/// Parameter ranges the library builder samples pattern fields from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextureParams {
    pub perlin_frequency: Interval<f64>,
    pub perlin_octaves: Interval<u32>,
    pub perlin_persistence: Interval<f64>,
    pub chess_cells: Interval<u32>,
}

impl Default for TextureParams {
    fn default() -> Self {
        Self {
            perlin_frequency: Interval::new(2.0, 16.0),
            perlin_octaves: Interval::new(1, 4),
            perlin_persistence: Interval::new(0.4, 0.6),
            chess_cells: Interval::new(4, 16),
        }
    }
}

impl TextureParams {
    pub fn validate(&self) -> Result<(), String> {
        let f = &self.perlin_frequency;
        if !(f.is_ordered() && f.min > 0.0 && f.max.is_finite()) {
            return Err("perlin_frequency must satisfy 0 < min <= max".into());
        }
        let o = &self.perlin_octaves;
        if !(o.is_ordered() && o.min >= 1 && o.max <= 8) {
            return Err("perlin_octaves must satisfy 1 <= min <= max <= 8".into());
        }
        let p = &self.perlin_persistence;
        if !(p.is_ordered() && p.min > 0.0 && p.max <= 1.0) {
            return Err("perlin_persistence must satisfy 0 < min <= max <= 1".into());
        }
        let c = &self.chess_cells;
        if !(c.is_ordered() && c.min >= 2) {
            return Err("chess_cells must satisfy 2 <= min <= max".into());
        }
        Ok(())
    }

    /// Draws one pattern of family `kind`, plus the lattice seed used when
    /// the pattern is rendered.
    pub fn sample_pattern<R: Rng + ?Sized>(&self, kind: PatternKind, rng: &mut R) -> TexturePattern {
        let color = |rng: &mut R| -> Rgb { [rng.gen(), rng.gen(), rng.gen()] };
        match kind {
            PatternKind::Flat => TexturePattern::Flat { color: color(rng) },
            PatternKind::Gradient => {
                let color_a = color(rng);
                let color_b = color(rng);
                let angle = rng.gen_range(0.0..TAU);
                TexturePattern::Gradient { color_a, color_b, direction: [angle.cos(), angle.sin()] }
            }
            PatternKind::Chess => {
                let color_a = color(rng);
                let color_b = color(rng);
                TexturePattern::Chess { color_a, color_b, cells_per_side: self.chess_cells.sample(rng) }
            }
            PatternKind::Perlin => {
                let color_a = color(rng);
                let color_b = color(rng);
                TexturePattern::Perlin {
                    base_frequency: self.perlin_frequency.sample(rng),
                    octaves: self.perlin_octaves.sample(rng),
                    persistence: self.perlin_persistence.sample(rng),
                    color_a,
                    color_b,
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextureLibrary {
    pub resolution: u32,
    pub patterns: Vec<TexturePattern>,
    pub images: Vec<TextureImage>,
}

impl TextureLibrary {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }
}

fn library_entry(
    index: usize,
    resolution: u32,
    enabled: &[PatternKind],
    params: &TextureParams,
    master_seed: u64,
) -> Result<(TexturePattern, TextureImage), TextureError> {
    let mut rng = ChaCha8Rng::seed_from_u64(derived_seed(master_seed, index as u64));
    let kind = enabled[rng.gen_range(0..enabled.len())];
    let pattern = params.sample_pattern(kind, &mut rng);
    let lattice_seed: u64 = rng.gen();
    let image = gen_texture(&pattern, resolution, lattice_seed)?;
    Ok((pattern, image))
}

/// Builds `count` textures in parallel on the current rayon pool.
///
/// Texture `i` depends only on `derived_seed(master_seed, i)`, so the result
/// is identical for any number of workers.
pub fn build_texture_library(
    count: usize,
    resolution: u32,
    enabled: &[PatternKind],
    params: &TextureParams,
    master_seed: u64,
) -> Result<TextureLibrary, TextureError> {
    if enabled.is_empty() {
        return Err(TextureError::EmptyPatternSet);
    }
    if count == 0 {
        return Err(TextureError::InvalidPattern("library needs at least one texture".into()));
    }
    params.validate().map_err(TextureError::InvalidPattern)?;
    let mut enabled = enabled.to_vec();
    enabled.sort();
    enabled.dedup();

    let entries: Vec<_> = (0..count)
        .into_par_iter()
        .map(|i| library_entry(i, resolution, &enabled, params, master_seed))
        .collect::<Result<_, _>>()?;
    let (patterns, images) = entries.into_iter().unzip();
    Ok(TextureLibrary { resolution, patterns, images })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parallel::with_workers;

    #[test]
    fn empty_pattern_set_is_rejected() {
        let r = build_texture_library(4, 8, &[], &TextureParams::default(), 0);
        assert_eq!(r, Err(TextureError::EmptyPatternSet));
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let params = TextureParams::default();
        let serial = with_workers(1, || build_texture_library(40, 32, &PatternKind::ALL, &params, 9)).unwrap();
        let wide = with_workers(8, || build_texture_library(40, 32, &PatternKind::ALL, &params, 9)).unwrap();
        assert_eq!(serial, wide);
        assert_eq!(serial.len(), 40);
    }

    #[test]
    fn disabled_families_never_appear() {
        let lib = build_texture_library(200, 4, &[PatternKind::Chess, PatternKind::Flat], &TextureParams::default(), 3).unwrap();
        assert!(lib.patterns.iter().all(|p| matches!(p.kind(), PatternKind::Chess | PatternKind::Flat)));
    }

    #[test]
    fn family_frequencies_are_uniform() {
        let n = 10_000;
        let params = TextureParams::default();
        let mut counts = [0usize; 4];
        for i in 0..n {
            let mut rng = ChaCha8Rng::seed_from_u64(derived_seed(77, i as u64));
            counts[rng.gen_range(0..4usize)] += 1;
        }
        // the builder draws the family first from the same stream
        let lib = build_texture_library(n, 2, &PatternKind::ALL, &params, 77).unwrap();
        let mut lib_counts = [0usize; 4];
        for p in &lib.patterns {
            lib_counts[PatternKind::ALL.iter().position(|k| *k == p.kind()).unwrap()] += 1;
        }
        assert_eq!(counts, lib_counts);
        for c in lib_counts {
            let freq = c as f64 / n as f64;
            assert!((freq - 0.25).abs() <= 0.03, "{lib_counts:?}");
        }
    }

    #[test]
    fn sampled_parameters_respect_ranges() {
        let params = TextureParams::default();
        let lib = build_texture_library(300, 2, &[PatternKind::Perlin, PatternKind::Chess], &params, 5).unwrap();
        for p in &lib.patterns {
            match p {
                TexturePattern::Perlin { base_frequency, octaves, persistence, .. } => {
                    assert!(params.perlin_frequency.contains(*base_frequency));
                    assert!(params.perlin_octaves.contains(*octaves));
                    assert!(params.perlin_persistence.contains(*persistence));
                }
                TexturePattern::Chess { cells_per_side, .. } => assert!(params.chess_cells.contains(*cells_per_side)),
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn pattern_kind_parses() {
        assert_eq!("perlin".parse::<PatternKind>(), Ok(PatternKind::Perlin));
        assert!("noise".parse::<PatternKind>().is_err());
    }
}
