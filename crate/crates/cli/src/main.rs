use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand};
use randr::config::{parse_config, ConfigError, GenerationStrategy, PipelineConfig};
use randr::dataset::{bench, generate_timed, DatasetError, MIN_BENCH_SCENES};
use randr::eval::{self, ApMode, EvalError, EvalReport, DEFAULT_IOU_THRESHOLD};
use randr::parallel::{with_workers, workers_from_env, THREADS_ENV};
use randr::texture::{build_texture_library, PatternKind};

/// Domain-randomized synthetic detection datasets.
///
/// Worker threads default to all cores; set RANDR_THREADS to override.
#[derive(Debug, Parser)]
#[command(name = "randr", version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a dataset of images, annotations and a manifest.
    Generate {
        /// Pipeline config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Scene recycling strategy; overrides the config.
        #[arg(long)]
        strategy: Option<GenerationStrategy>,
        /// Also write a lossless PNG next to every JPEG.
        #[arg(long)]
        png: bool,
        /// Drop a texture family (flat, gradient, chess, perlin). Repeatable.
        #[arg(long = "disable-texture", value_name = "T")]
        disable_texture: Vec<PatternKind>,
        /// Output directory; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of scenes; overrides the config.
        #[arg(long)]
        scenes: Option<usize>,
        /// Master seed; overrides the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Time Pool against Respawn generation on the same config.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Scenes per strategy.
        #[arg(long, default_value_t = 200)]
        scenes: usize,
        /// Strategies to time (default: both). Repeatable.
        #[arg(long)]
        strategy: Vec<GenerationStrategy>,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Dump the first K library textures as PNG files.
    Textures {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 16)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score detections against dataset annotations (AP, mAP, PR).
    Eval {
        /// Dataset directory or its annotations/ directory.
        #[arg(long)]
        gt: PathBuf,
        /// Detections JSON.
        #[arg(long)]
        dets: PathBuf,
        /// AP interpolation: allpoint or 11point.
        #[arg(long, default_value = "allpoint")]
        ap_mode: ApMode,
        /// IoU needed for a true positive.
        #[arg(long, default_value_t = DEFAULT_IOU_THRESHOLD)]
        iou: f64,
        /// Report JSON to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write per-class PR CSVs and an SVG plot from an eval report.
    PrCurve {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(path: &Path, overrides: impl FnOnce(&mut PipelineConfig)) -> anyhow::Result<PipelineConfig> {
    let mut config = parse_config(path).with_context(|| format!("config {}", path.display()))?;
    overrides(&mut config);
    config.validate().with_context(|| format!("config {}", path.display()))?;
    Ok(config)
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Generate { config, strategy, png, disable_texture, out, scenes, seed } => {
            let config = load(&config, |c| {
                c.render.write_png |= png;
                c.disable_patterns(&disable_texture);
                if let Some(s) = strategy {
                    c.strategy = s;
                }
                if let Some(o) = out {
                    c.output_dir = o;
                }
                if let Some(n) = scenes {
                    c.num_scenes = n;
                }
                if let Some(s) = seed {
                    c.master_seed = s;
                }
            })?;
            let (manifest, timing) = generate_timed(&config, config.strategy)?;
            let count = manifest.scenes.len();
            println!(
                "wrote {count} scenes to {} ({}, {:.2} s, {:.2} scenes/s)",
                config.output_dir.display(),
                config.strategy,
                timing.total_secs,
                count as f64 / timing.total_secs
            );
        }
        Command::Bench { config, scenes, strategy, json } => {
            let config = load(&config, |_| {})?;
            if scenes < MIN_BENCH_SCENES {
                anyhow::bail!(ConfigError::Validation(format!("--scenes must be at least {MIN_BENCH_SCENES}")));
            }
            let strategies =
                if strategy.is_empty() { vec![GenerationStrategy::Pool, GenerationStrategy::Respawn] } else { strategy };
            let report = bench(&config, &strategies, scenes)?;
            print!("{}", report.to_table());
            if let Some(path) = json {
                write_file(&path, &(report.to_json() + "\n"))?;
            }
        }
        Command::Textures { config, count, out } => {
            let config = load(&config, |_| {})?;
            let t = &config.textures;
            let start = Instant::now();
            // texture i depends only on the seed and i, so these are the
            // first `count` textures of the full library
            let library = build_texture_library(count, t.resolution, &t.enabled_patterns, &t.params, config.texture_seed())
                .map_err(DatasetError::from)?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            for (i, (img, pattern)) in library.images.iter().zip(&library.patterns).enumerate() {
                let path = out.join(format!("texture_{i:04}_{}.png", pattern.kind()));
                img.save_png(&path).with_context(|| format!("writing {}", path.display()))?;
            }
            println!("wrote {count} textures to {} in {:.2} s", out.display(), start.elapsed().as_secs_f64());
        }
        Command::Eval { gt, dets, ap_mode, iou, out } => {
            if !(iou > 0.0 && iou <= 1.0) {
                anyhow::bail!(ConfigError::Validation(format!("--iou must lie in (0, 1], got {iou}")));
            }
            let report = eval::evaluate(&gt, &dets, ap_mode, iou)?;
            write_file(&out, &(report.to_json() + "\n"))?;
            print!("{}", report.summary());
        }
        Command::PrCurve { report, out } => {
            let text = fs::read_to_string(&report).with_context(|| format!("reading {}", report.display()))?;
            let parsed: EvalReport = serde_json::from_str(&text).map_err(|e| EvalError::Parse {
                context: report.display().to_string(),
                message: e.to_string(),
            })?;
            let files = eval::write_pr_curves(&parsed, &out)?;
            println!("wrote {} files to {}", files.len(), out.display());
        }
    }
    Ok(())
}

/// 2 config error, 3 I/O error, 4 evaluation input error, 1 anything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<ConfigError>() {
            return if matches!(e, ConfigError::Io { .. }) { 3 } else { 2 };
        }
        if let Some(e) = cause.downcast_ref::<DatasetError>() {
            return match e {
                DatasetError::Config(ConfigError::Io { .. }) => 3,
                DatasetError::Config(_) | DatasetError::Texture(_) | DatasetError::Sampler(_) => 2,
                DatasetError::Io { .. } | DatasetError::Encode { .. } => 3,
                DatasetError::Render(_) => 1,
            };
        }
        if let Some(e) = cause.downcast_ref::<EvalError>() {
            return if matches!(e, EvalError::Io { .. }) { 3 } else { 4 };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() || cause.downcast_ref::<randr::texture::ImageError>().is_some() {
            return 3;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = match std::env::var(THREADS_ENV) {
        Ok(raw) => match workers_from_env() {
            Some(n) => n,
            None => {
                eprintln!("error: {THREADS_ENV}={raw:?} is not a worker count");
                return ExitCode::from(2);
            }
        },
        Err(_) => 0,
    };
    match with_workers(workers, || run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
