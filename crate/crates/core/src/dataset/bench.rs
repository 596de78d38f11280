use std::fmt::Write as _;

use rayon::current_num_threads;
use serde::{Deserialize, Serialize};

use super::{generate_timed, DatasetError};
use crate::config::{ConfigError, GenerationStrategy, PipelineConfig};

/// Fewest scenes for which timings are considered stable.
pub const MIN_BENCH_SCENES: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyTiming {
    pub strategy: GenerationStrategy,
    pub scenes: usize,
    pub setup_secs: f64,
    pub total_secs: f64,
    /// Scenes over total wall-clock, startup included.
    pub scenes_per_sec: f64,
    /// Wall-clock per scene with startup excluded.
    pub per_scene_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    pub workers: usize,
    pub library_size: usize,
    pub width: u32,
    pub height: u32,
    pub timings: Vec<StrategyTiming>,
    /// Pool scenes/sec over Respawn scenes/sec, when both ran.
    pub pool_over_respawn: Option<f64>,
}

impl ThroughputReport {
    pub fn timing(&self, strategy: GenerationStrategy) -> Option<&StrategyTiming> {
        self.timings.iter().find(|t| t.strategy == strategy)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "{} scenes at {}x{}, library {} textures, {} workers",
            self.timings.first().map_or(0, |t| t.scenes),
            self.width,
            self.height,
            self.library_size,
            self.workers
        )
        .unwrap();
        writeln!(s, "{:<10} {:>10} {:>10} {:>12} {:>14}", "strategy", "setup s", "total s", "scenes/s", "ms/scene").unwrap();
        for t in &self.timings {
            writeln!(
                s,
                "{:<10} {:>10.3} {:>10.3} {:>12.3} {:>14.2}",
                t.strategy.name(),
                t.setup_secs,
                t.total_secs,
                t.scenes_per_sec,
                t.per_scene_secs * 1e3
            )
            .unwrap();
        }
        if let Some(r) = self.pool_over_respawn {
            writeln!(s, "pool / respawn speedup: {r:.2}x").unwrap();
        }
        s
    }
}

/// Times full dataset generation (sample, render, annotate, encode, write)
/// for each strategy. Output goes to scratch directories that are removed
/// afterwards; `config.output_dir` is not touched.
pub fn bench(
    config: &PipelineConfig,
    strategies: &[GenerationStrategy],
    num_scenes: usize,
) -> Result<ThroughputReport, DatasetError> {
    if num_scenes < MIN_BENCH_SCENES {
        return Err(ConfigError::Validation(format!("bench needs at least {MIN_BENCH_SCENES} scenes, got {num_scenes}")).into());
    }
    if strategies.is_empty() {
        return Err(ConfigError::Validation("bench needs at least one strategy".into()).into());
    }
    let mut timings = Vec::with_capacity(strategies.len());
    for &strategy in strategies {
        let scratch = tempfile::tempdir().map_err(|source| DatasetError::Io { path: std::env::temp_dir(), source })?;
        let run = PipelineConfig { num_scenes, output_dir: scratch.path().to_path_buf(), ..config.clone() };
        let (_, t) = generate_timed(&run, strategy)?;
        timings.push(StrategyTiming {
            strategy,
            scenes: num_scenes,
            setup_secs: t.setup_secs,
            total_secs: t.total_secs,
            scenes_per_sec: num_scenes as f64 / t.total_secs,
            per_scene_secs: (t.total_secs - t.setup_secs) / num_scenes as f64,
        });
    }
    let rate = |s: GenerationStrategy| timings.iter().find(|t| t.strategy == s).map(|t| t.scenes_per_sec);
    let pool_over_respawn = match (rate(GenerationStrategy::Pool), rate(GenerationStrategy::Respawn)) {
        (Some(p), Some(r)) => Some(p / r),
        _ => None,
    };
    Ok(ThroughputReport {
        workers: current_num_threads(),
        library_size: config.textures.library_size,
        width: config.render.width,
        height: config.render.height,
        timings,
        pool_over_respawn,
    })
}
