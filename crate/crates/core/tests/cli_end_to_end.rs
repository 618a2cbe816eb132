use std::fs;
use std::path::Path;

use tilebesov::cli::{main_with_args, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION};

fn run(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("tilebesov").chain(args.iter().copied()))
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn exponent_command_writes_report_and_battery() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let code = run(&[
        "exponent",
        "--out",
        out,
        "--set",
        "function.level=12",
        "--set",
        "analysis.levels=[3,8]",
        "--set",
        "analysis.routes=[\"osc\",\"sigma\"]",
    ]);
    assert_eq!(code, EXIT_OK);
    let report = json(&dir.path().join("exponent.json"));
    let text = report.to_string();
    assert!(text.contains("\"osc\"") && text.contains("\"sigma\""), "{text}");
    let battery = fs::read_to_string(dir.path().join("battery.csv")).unwrap();
    assert!(battery.lines().count() >= 3);
}

#[test]
fn tile_command_for_the_twin_dragon() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let code = run(&[
        "tile",
        "-o",
        out,
        "--set",
        "tiling.matrix=[[1,-1],[1,1]]",
        "--set",
        "tiling.digits=[[0,0],[1,0]]",
        "--set",
        "tiling.depth=8",
    ]);
    assert_eq!(code, EXIT_OK);
    let points = fs::read_to_string(dir.path().join("tile_points.csv")).unwrap();
    assert_eq!(points.lines().count(), 1 + 256);
    assert!(dir.path().join("tile.json").exists());
}

#[test]
fn config_file_and_overrides_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[function]\nlevel = 10\n\n[analysis]\nlevels = [2, 7]\n").unwrap();
    let out = dir.path().join("out");
    let code = run(&["norm", "-c", cfg.to_str().unwrap(), "-o", out.to_str().unwrap(), "--set", "analysis.s=0.3"]);
    assert_eq!(code, EXIT_OK);
    let norm = json(&out.join("norm.json"));
    assert!(norm.to_string().contains("0.3"));
}

#[test]
fn error_classes_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(run(&["tile", "-c", "/nonexistent/run.toml"]), EXIT_CONFIG);
    assert_eq!(run(&["tile", "-o", out, "--set", "tiling.digits=[[0],[2]]"]), EXIT_VALIDATION);
    assert_eq!(run(&["exponent", "-o", out, "--set", "analysis.levels=[4,5]"]), EXIT_NUMERICAL);
    assert_ne!(run(&["no-such-command"]), EXIT_OK);
}

#[test]
fn print_config_round_trips() {
    let code = run(&["print-config", "--set", "analysis.p=2"]);
    assert_eq!(code, EXIT_OK);
}
