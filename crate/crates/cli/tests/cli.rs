use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_terrapath"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn summary(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let line = text.lines().last().expect("summary line");
    serde_json::from_str(line).unwrap()
}

const FLAT: &str = r#"
a = [-25.0, 0.0]
b = [25.0, 0.0]

[terrain.grid]
nx = 71
ny = 31
dx = 1.0
origin = [-35.0, -15.0]

[terrain.synth]
kind = "flat"

[solver]
delta = 3.0

[output]
dir = "out"
fronts = 2
"#;

fn flat_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), FLAT).unwrap();
    dir
}

#[test]
fn solve_reports_flat_closed_form() {
    let dir = flat_dir();
    let s = summary(&run(dir.path(), &["solve", "-c", "run.toml"]));
    let t = s["t_star"].as_f64().unwrap();
    let p0v0 = (0.5 - 0.5 * (-1.0f64).tanh()) * 1.11 * (-4.0f64 / 2345.0).exp();
    let exact = 47.0 / p0v0;
    assert!((t - exact).abs() / exact < 0.02, "{t} vs {exact}");
    let hash = s["config_hash"].as_str().unwrap();
    for f in ["arrival.csv", "phi_000.csv", "phi_001.csv"] {
        let text = std::fs::read_to_string(dir.path().join("out").join(f)).unwrap();
        assert!(text.starts_with(&format!("# config_hash={hash}")), "{f}");
    }
}

#[test]
fn path_and_oracle_outputs_carry_the_hash() {
    let dir = flat_dir();
    let p = summary(&run(dir.path(), &["path", "-c", "run.toml"]));
    assert_eq!(p["terminus"], "reached_seed_disk");
    let o = summary(&run(dir.path(), &["oracle", "-c", "run.toml"]));
    assert!(o["relative_delta"].as_f64().unwrap().abs() < 0.05);
    let hash = p["config_hash"].as_str().unwrap();
    assert_eq!(o["config_hash"], hash);
    let out = dir.path().join("out");
    for f in ["path.geojson", "oracle_path.geojson", "comparison.json"] {
        let v: Value = serde_json::from_str(&std::fs::read_to_string(out.join(f)).unwrap()).unwrap();
        assert_eq!(v["config_hash"], hash, "{f}");
    }
    for f in ["path.csv", "oracle_times.csv"] {
        assert!(std::fs::read_to_string(out.join(f)).unwrap().contains(hash), "{f}");
    }
}

#[test]
fn synth_output_round_trips() {
    let dir = flat_dir();
    let cfg = "[terrain.grid]\nnx = 9\nny = 7\ndx = 0.5\norigin = [1.0, -2.0]\n\
               [terrain.synth]\nkind = \"gaussian_sum\"\nbumps = [{ center = { x = 3.0, y = -0.5 }, height = 2.5, sigma = 1.3 }]\n";
    std::fs::write(dir.path().join("g.toml"), cfg).unwrap();
    let s = summary(&run(dir.path(), &["synth", "-c", "g.toml", "-o", "dem"]));
    assert_eq!(s["nx"], 9);
    let text = std::fs::read_to_string(dir.path().join("dem/terrain.asc")).unwrap();
    let grid = terrapath::io::parse_esri_ascii(&text).unwrap();
    let mut again = vec![];
    terrapath::io::write_esri_ascii(&mut again, &grid).unwrap();
    assert_eq!(again, text.as_bytes());
    let meta: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("dem/terrain.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config_hash"], s["config_hash"]);

    // The written grid is a valid terrain source for further runs.
    let cfg2 = "a = [1.5, -1.0]\nb = [4.5, 0.0]\n[terrain]\nfile = \"dem/terrain.asc\"\n";
    std::fs::write(dir.path().join("f.toml"), cfg2).unwrap();
    let s2 = summary(&run(dir.path(), &["synth", "-c", "f.toml", "-o", "copy"]));
    assert_eq!(s2["max_elevation"], s["max_elevation"]);
}

#[test]
fn exit_codes() {
    let dir = flat_dir();
    assert_eq!(run(dir.path(), &["plot"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["solve", "-c", "run.toml", "--set", "solver.cfll=0.3"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["solve", "-c", "missing.toml"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["solve", "-c", "run.toml", "--set", "b=[40.0, 0.0]"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["ensemble", "-c", "run.toml"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["solve", "-c", "run.toml", "--set", "solver.max_steps=3"]).status.code(), Some(4));
    assert_eq!(run(dir.path(), &["no-such-verb"]).status.code(), Some(2));
}

#[test]
fn overrides_change_the_hash_but_not_the_output_dir() {
    let dir = flat_dir();
    let a = summary(&run(dir.path(), &["synth", "-c", "run.toml"]));
    let b = summary(&run(dir.path(), &["synth", "-c", "run.toml", "-o", "elsewhere"]));
    let c = summary(&run(dir.path(), &["synth", "-c", "run.toml", "--set", "terrain.synth.height=2"]));
    assert_eq!(a["config_hash"], b["config_hash"]);
    assert_ne!(a["config_hash"], c["config_hash"]);
    assert_eq!(c["max_elevation"], 2.0);
}

const SADDLE: &str = r#"
b = [50.0, 0.0]

[terrain.grid]
nx = 121
ny = 101
dx = 1.0
origin = [-60.0, -50.0]

[terrain.synth]
kind = "saddle"
height = 30.0
sigma = 9.0
separation = 40.0

[region]
center = [0.0, 0.0]
radius = 6.0

[ensemble]
n = 100
k = 2
"#;

#[test]
fn ensemble_writes_its_reports_and_plot_reads_them() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.toml"), SADDLE).unwrap();
    let s = summary(&run(dir.path(), &["ensemble", "-c", "s.toml", "-o", "ens"]));
    let ens = dir.path().join("ens");
    for f in ["paths.geojson", "summary.csv", "fractions.json"] {
        assert!(ens.join(f).is_file(), "{f}");
    }
    let report: Value = serde_json::from_str(&std::fs::read_to_string(ens.join("fractions.json")).unwrap()).unwrap();
    let fr: Vec<f64> = report["fractions"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(fr.len(), 2);
    assert!((fr.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert_eq!(report["starts"], 100);
    assert_eq!(s["fractions"], report["fractions"]);

    let csv = std::fs::read_to_string(ens.join("summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 102);
    assert!(csv.lines().nth(1).unwrap().starts_with("index,start_x,start_y,t_star"));

    let lines = terrapath::io::read_lines_geojson(&std::fs::read_to_string(ens.join("paths.geojson")).unwrap()).unwrap();
    let reps = lines.iter().filter(|(_, p)| p.get("representative") == Some(&Value::Bool(true))).count();
    assert_eq!(reps, 2);

    summary(&run(dir.path(), &["synth", "-c", "s.toml", "-o", "ens"]));
    let p = summary(&run(
        dir.path(),
        &["plot", "--terrain", "ens/terrain.asc", "--paths", "ens/paths.geojson", "-o", "ens/plot.svg"],
    ));
    assert_eq!(p["layers"]["elevation_contours"], 12);
    let svg = std::fs::read_to_string(ens.join("plot.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert!(svg.contains(s["config_hash"].as_str().unwrap()));
    assert!(svg.matches("<polyline").count() >= 100);
}
