use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use randr::config::parse_config;

fn randr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_randr")).args(args).env("RANDR_THREADS", "2").output().expect("binary runs")
}

fn docs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs")
}

fn small_config(dir: &Path) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(
        &path,
        r#"{"master_seed": 5, "num_scenes": 6, "render": {"width": 320, "height": 180},
            "textures": {"library_size": 12, "resolution": 32}, "output_dir": "unused"}"#,
    )
    .unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn every_docs_config_parses_and_validates() {
    let mut seen = 0;
    for entry in fs::read_dir(docs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let config = parse_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            config.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 4);
}

#[test]
fn example_config_spells_out_the_defaults() {
    let example = parse_config(&docs_dir().join("config.example.json")).unwrap();
    let defaults = randr::PipelineConfig { master_seed: 42, ..Default::default() };
    assert_eq!(example, defaults);
}

#[test]
fn generate_is_repeatable_and_honors_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for out in [&a, &b] {
        let o = randr(&["generate", "--config", s(&cfg), "--png", "--disable-texture", "perlin", "--out", s(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    // a manifest is a valid config and reproduces its dataset
    let c = tmp.path().join("c");
    let o = randr(&["generate", "--config", s(&a.join("manifest.json")), "--out", s(&c)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for sub in ["annotations", "images"] {
        let mut names: Vec<_> = fs::read_dir(a.join(sub)).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        assert_eq!(names.len(), if sub == "images" { 12 } else { 6 });
        for n in names {
            let want = fs::read(a.join(sub).join(&n)).unwrap();
            assert_eq!(want, fs::read(b.join(sub).join(&n)).unwrap());
            assert_eq!(want, fs::read(c.join(sub).join(&n)).unwrap());
        }
    }
    let manifest = fs::read_to_string(a.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"enabled_patterns\": [\n        \"flat\",\n        \"gradient\",\n        \"chess\"\n      ]"));
}

#[test]
fn textures_are_dumped_as_png() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("tex");
    let o = randr(&["textures", "--config", s(&small_config(tmp.path())), "--count", "5", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let files: Vec<_> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(files.len(), 5);
    for f in files {
        assert_eq!(image::open(&f).unwrap().to_rgb8().dimensions(), (32, 32));
    }
}

#[test]
fn eval_and_pr_curve_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    assert!(randr(&["generate", "--config", s(&small_config(tmp.path())), "--out", s(&data)]).status.success());
    // the dataset's own boxes as detections
    let mut dets = Vec::new();
    for entry in fs::read_dir(data.join("annotations")).unwrap() {
        let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(entry.unwrap().path()).unwrap()).unwrap();
        for o in doc["objects"].as_array().unwrap() {
            dets.push(serde_json::json!({"image": doc["image"], "class": o["class"], "bbox": o["bbox"], "score": 1.0}));
        }
    }
    let dets_path = tmp.path().join("dets.json");
    fs::write(&dets_path, serde_json::json!({ "detections": dets }).to_string()).unwrap();
    let report = tmp.path().join("report.json");
    let o = randr(&["eval", "--gt", s(&data), "--dets", s(&dets_path), "--ap-mode", "11point", "--out", s(&report)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let parsed: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(parsed["map"], 1.0);
    assert_eq!(parsed["ap_mode"], "11point");
    assert_eq!(parsed["iou_threshold"], 0.5);

    let curves = tmp.path().join("curves");
    assert!(randr(&["pr-curve", "--report", s(&report), "--out", s(&curves)]).status.success());
    for name in ["pr_box.csv", "pr_cylinder.csv", "pr_sphere.csv", "pr_curves.svg"] {
        assert!(curves.join(name).exists(), "{name}");
    }
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"typo_field": 1}"#).unwrap();
    assert_eq!(randr(&["generate", "--config", s(&bad)]).status.code(), Some(2));
    fs::write(&bad, r#"{"sampler": {"min_count": 8}}"#).unwrap();
    assert_eq!(randr(&["generate", "--config", s(&bad)]).status.code(), Some(2));
    assert_eq!(randr(&["generate", "--config", s(&tmp.path().join("missing.json"))]).status.code(), Some(3));

    let gt = tmp.path().join("gt");
    fs::create_dir_all(&gt).unwrap();
    let dets = tmp.path().join("dets.json");
    fs::write(&dets, "{\"detections\": [oops]}").unwrap();
    let o = randr(&["eval", "--gt", s(&gt), "--dets", s(&dets), "--out", s(&tmp.path().join("r.json"))]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
    let o = randr(&["eval", "--gt", s(&tmp.path().join("none")), "--dets", s(&dets), "--out", s(&tmp.path().join("r.json"))]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn help_lists_every_subcommand() {
    let o = randr(&["--help"]);
    let text = String::from_utf8_lossy(&o.stdout);
    for cmd in ["generate", "bench", "textures", "eval", "pr-curve"] {
        assert!(text.contains(cmd), "{cmd}");
    }
    let gen = String::from_utf8_lossy(&randr(&["generate", "--help"]).stdout).to_string();
    for flag in ["--config", "--strategy", "--png", "--disable-texture"] {
        assert!(gen.contains(flag), "{flag}");
    }
}
