use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Map, Value};
use terrapath::ensemble::run_ensemble;
use terrapath::io::{feature_collection, line_feature, trace_feature, write_esri_ascii, write_grid_csv, write_trace_csv};
use terrapath::levelset::init_run;
use terrapath::oracle::{dijkstra_path, dijkstra_times_from, disk_sources};
use terrapath::path::{extract_path, path_length_time};
use terrapath::{ControlDisc, LevelSetRun, Mode, TerrainGrid};

use crate::config::{self, RunConfig};
use crate::{CliError, RunArgs};

struct Ctx {
    cfg: RunConfig,
    hash: String,
    dir: PathBuf,
    terrain: TerrainGrid,
    disc: ControlDisc,
}

fn setup(args: &RunArgs) -> Result<Ctx, CliError> {
    let mut cfg = config::load(args.config.as_deref(), &args.set)?;
    if let Some(o) = &args.out {
        cfg.output.dir = o.clone();
    }
    let hash = cfg.hash();
    let terrain = cfg.load_terrain()?;
    let disc = cfg.control_disc()?;
    let dir = cfg.output.dir.clone();
    std::fs::create_dir_all(&dir)?;
    Ok(Ctx { cfg, hash, dir, terrain, disc })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json(dir: &Path, name: &str, v: &Value) -> Result<(), CliError> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, v).map_err(std::io::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn props(pairs: &[(&str, Value)]) -> Map<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn files(dir: &Path, names: &[&str]) -> Value {
    json!(names.iter().map(|n| dir.join(n).display().to_string()).collect::<Vec<_>>())
}

/// Forward solve from `a` until the front passes `b`.
fn forward_solve(ctx: &Ctx) -> Result<(LevelSetRun, f64), CliError> {
    let (a, b) = (ctx.cfg.point_a()?, ctx.cfg.point_b()?);
    let mut run = init_run(&ctx.terrain, &ctx.cfg.mobility, &ctx.disc, Mode::Forward, a, &ctx.cfg.solver)?;
    let t_star = run.run_until_point(b)?;
    Ok((run, t_star))
}

pub fn synth(args: &RunArgs) -> Result<Value, CliError> {
    let ctx = setup(args)?;
    let spec = *ctx.terrain.spec();
    let mut w = create(&ctx.dir, "terrain.asc")?;
    write_esri_ascii(&mut w, &ctx.terrain)?;
    w.flush()?;
    let meta = json!({
        "config_hash": ctx.hash,
        "nx": spec.nx,
        "ny": spec.ny,
        "dx": spec.dx,
        "dy": spec.dy,
        "origin": [spec.origin.x, spec.origin.y],
        "min_elevation": ctx.terrain.min_elevation(),
        "max_elevation": ctx.terrain.max_elevation(),
    });
    write_json(&ctx.dir, "terrain.meta.json", &meta)?;
    Ok(json!({
        "command": "synth",
        "config_hash": ctx.hash,
        "nx": spec.nx,
        "ny": spec.ny,
        "min_elevation": ctx.terrain.min_elevation(),
        "max_elevation": ctx.terrain.max_elevation(),
        "files": files(&ctx.dir, &["terrain.asc", "terrain.meta.json"]),
    }))
}

fn write_arrival(ctx: &Ctx, run: &LevelSetRun) -> Result<Vec<String>, CliError> {
    let spec = *run.spec();
    let mut names = vec!["arrival.csv".to_string()];
    let mut w = create(&ctx.dir, "arrival.csv")?;
    write_grid_csv(&mut w, &spec, run.arrival_times(), None, Some(&ctx.hash))?;
    w.flush()?;
    let snaps = run.snapshots();
    let n = ctx.cfg.output.fronts.min(snaps.len());
    for f in 0..n {
        // Evenly spaced, always including the first and the last snapshot.
        let k = if n == 1 { snaps.len() - 1 } else { f * (snaps.len() - 1) / (n - 1) };
        let name = format!("phi_{f:03}.csv");
        let mut w = create(&ctx.dir, &name)?;
        write_grid_csv(&mut w, &spec, &snaps[k].phi, Some(snaps[k].time), Some(&ctx.hash))?;
        w.flush()?;
        names.push(name);
    }
    Ok(names)
}

pub fn solve(args: &RunArgs) -> Result<Value, CliError> {
    let ctx = setup(args)?;
    let clock = Instant::now();
    let (run, t_star) = forward_solve(&ctx)?;
    let names = write_arrival(&ctx, &run)?;
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    Ok(json!({
        "command": "solve",
        "config_hash": ctx.hash,
        "t_star": t_star,
        "delta": run.delta(),
        "dt": run.dt(),
        "steps": run.steps(),
        "redistances": run.redistance_count(),
        "coverage": run.coverage(),
        "elapsed_s": clock.elapsed().as_secs_f64(),
        "files": files(&ctx.dir, &names),
    }))
}

pub fn path(args: &RunArgs) -> Result<Value, CliError> {
    let ctx = setup(args)?;
    let clock = Instant::now();
    let (run, t_star) = forward_solve(&ctx)?;
    let b = ctx.cfg.point_b()?;
    let trace = extract_path(&run, b, t_star, &ctx.cfg.path)?;

    let feature = trace_feature(&trace, props(&[("kind", json!("path"))]));
    write_json(&ctx.dir, "path.geojson", &feature_collection(vec![feature], Some(&ctx.hash)))?;
    let mut w = create(&ctx.dir, "path.csv")?;
    write_trace_csv(&mut w, &trace, Some(&ctx.hash))?;
    w.flush()?;

    if !trace.terminus.is_success() {
        return Err(CliError::Failed(format!(
            "trace ended with {} at ({}, {}); partial path written to {}",
            trace.terminus.as_str(),
            trace.end().x,
            trace.end().y,
            ctx.dir.join("path.geojson").display()
        )));
    }
    let (length, _) = path_length_time(&trace);
    let max_elevation = trace
        .points()
        .filter_map(|p| ctx.terrain.sample_elevation(p).ok())
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(json!({
        "command": "path",
        "config_hash": ctx.hash,
        "t_star": t_star,
        "terminus": trace.terminus.as_str(),
        "vertices": trace.vertices.len(),
        "length": length,
        "max_elevation": max_elevation,
        "elapsed_s": clock.elapsed().as_secs_f64(),
        "files": files(&ctx.dir, &["path.geojson", "path.csv"]),
    }))
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt_num(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

pub fn ensemble(args: &RunArgs) -> Result<Value, CliError> {
    let ctx = setup(args)?;
    let clock = Instant::now();
    let b = ctx.cfg.point_b()?;
    let region = ctx.cfg.start_region()?;
    let opts = ctx.cfg.ensemble_options();
    let e = &ctx.cfg.ensemble;
    let result = run_ensemble(&ctx.terrain, &ctx.cfg.mobility, &ctx.disc, b, &region, e.n, e.k, &opts)?;

    let mut features = vec![];
    for (i, o) in result.outcomes.iter().enumerate() {
        if let Some(trace) = &o.trace {
            features.push(trace_feature(
                trace,
                props(&[
                    ("kind", json!("path")),
                    ("index", json!(i)),
                    ("label", json!(o.label)),
                    ("start", json!([o.start.x, o.start.y])),
                ]),
            ));
        }
    }
    for (c, rep) in result.representatives.iter().enumerate() {
        features.push(line_feature(
            rep.iter().copied(),
            props(&[
                ("kind", json!("representative")),
                ("representative", json!(true)),
                ("label", json!(c)),
                ("fraction", json!(result.fractions[c])),
            ]),
        ));
    }
    write_json(&ctx.dir, "paths.geojson", &feature_collection(features, Some(&ctx.hash)))?;

    let mut w = create(&ctx.dir, "summary.csv")?;
    writeln!(w, "# config_hash={}", ctx.hash)?;
    writeln!(w, "index,start_x,start_y,t_star,terminus,label,failure")?;
    for (i, o) in result.outcomes.iter().enumerate() {
        writeln!(
            w,
            "{i},{},{},{},{},{},{}",
            o.start.x,
            o.start.y,
            opt_num(o.t_star),
            o.trace.as_ref().map_or("", |t| t.terminus.as_str()),
            o.label.map_or_else(String::new, |l| l.to_string()),
            csv_text(o.failure.as_deref().unwrap_or(""))
        )?;
    }
    w.flush()?;

    let report = json!({
        "config_hash": ctx.hash,
        "seed": result.seed,
        "samples": result.samples,
        "starts": result.outcomes.len(),
        "successes": result.successes(),
        "failures": result.failures(),
        "fractions": result.fractions,
    });
    write_json(&ctx.dir, "fractions.json", &report)?;

    Ok(json!({
        "command": "ensemble",
        "config_hash": ctx.hash,
        "starts": result.outcomes.len(),
        "successes": result.successes(),
        "failures": result.failures(),
        "fractions": result.fractions,
        "elapsed_s": clock.elapsed().as_secs_f64(),
        "files": files(&ctx.dir, &["paths.geojson", "summary.csv", "fractions.json"]),
    }))
}

pub fn oracle(args: &RunArgs) -> Result<Value, CliError> {
    let ctx = setup(args)?;
    let clock = Instant::now();
    let (a, b) = (ctx.cfg.point_a()?, ctx.cfg.point_b()?);
    let spec = *ctx.terrain.spec();
    let stencil = ctx.cfg.oracle.stencil;
    let (run, t_star) = forward_solve(&ctx)?;

    // Seed the graph search on the same δ-circle the front starts from.
    let sources = disk_sources(&ctx.terrain, &ctx.cfg.mobility, a, run.delta());
    let times = dijkstra_times_from(&ctx.terrain, &ctx.cfg.mobility, &sources, stencil);
    let oracle_time = spec.bilinear(&times, b)?;
    let (route, route_time) =
        dijkstra_path(&ctx.terrain, &ctx.cfg.mobility, spec.nearest_node(a), spec.nearest_node(b), stencil)?;

    let mut w = create(&ctx.dir, "oracle_times.csv")?;
    write_grid_csv(&mut w, &spec, &times, None, Some(&ctx.hash))?;
    w.flush()?;
    let route_feature = line_feature(
        route.iter().map(|&(i, j)| spec.node(i, j)),
        props(&[("kind", json!("oracle")), ("time", json!(route_time))]),
    );
    write_json(&ctx.dir, "oracle_path.geojson", &feature_collection(vec![route_feature], Some(&ctx.hash)))?;

    let rel = (t_star - oracle_time) / oracle_time;
    let report = json!({
        "config_hash": ctx.hash,
        "stencil": stencil,
        "hjb_t_star": t_star,
        "oracle_time": oracle_time,
        "relative_delta": rel,
        "oracle_node_route_time": route_time,
    });
    write_json(&ctx.dir, "comparison.json", &report)?;

    Ok(json!({
        "command": "oracle",
        "config_hash": ctx.hash,
        "hjb_t_star": t_star,
        "oracle_time": oracle_time,
        "relative_delta": rel,
        "elapsed_s": clock.elapsed().as_secs_f64(),
        "files": files(&ctx.dir, &["oracle_times.csv", "oracle_path.geojson", "comparison.json"]),
    }))
}
