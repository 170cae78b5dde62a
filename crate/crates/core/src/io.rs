//! File formats: ESRI ASCII rasters, CSV grids and traces, GeoJSON paths.
//!
//! Floats are written with Rust's shortest round-trip formatting so that
//! identical inputs give byte-identical files.

use std::io::{BufRead, Write};

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::grid::GridSpec;
use crate::path::PathTrace;
use crate::terrain::TerrainGrid;

const DEFAULT_NODATA: f64 = -9999.0;

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn fmt_f(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v}")
    }
}

/// Reads an ESRI ASCII grid. Values are taken as nodes at cell centres;
/// the first body row is the northernmost and ends up at the largest `y`.
pub fn load_esri_ascii(reader: impl BufRead) -> Result<TerrainGrid> {
    let mut ncols = None;
    let mut nrows = None;
    let mut x_ll = None;
    let mut y_ll = None;
    let mut corner = None;
    let mut cellsize = None;
    let mut dx = None;
    let mut dy = None;
    let mut nodata = None;
    let mut body: Vec<(usize, f64)> = vec![];

    let mut in_body = false;
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = n + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let first = trimmed.split_whitespace().next().unwrap();
        let is_key = first.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
            && !first.eq_ignore_ascii_case("nan")
            && !first.eq_ignore_ascii_case("inf");
        if is_key && !in_body {
            let mut parts = trimmed.split_whitespace();
            let key = parts.next().unwrap().to_ascii_lowercase();
            let value = parts
                .next()
                .ok_or_else(|| parse_err(lineno, format!("header key {key} has no value")))?;
            if parts.next().is_some() {
                return Err(parse_err(lineno, format!("trailing tokens after {key}")));
            }
            let num = |v: &str| -> Result<f64> {
                v.parse::<f64>()
                    .map_err(|_| parse_err(lineno, format!("{key}: not a number: {v}")))
            };
            let count = |v: &str| -> Result<usize> {
                v.parse::<usize>()
                    .map_err(|_| parse_err(lineno, format!("{key}: not a count: {v}")))
            };
            match key.as_str() {
                "ncols" => ncols = Some(count(value)?),
                "nrows" => nrows = Some(count(value)?),
                "xllcorner" | "xllcenter" => {
                    x_ll = Some(num(value)?);
                    corner = Some(key == "xllcorner");
                }
                "yllcorner" | "yllcenter" => y_ll = Some(num(value)?),
                "cellsize" => cellsize = Some(num(value)?),
                "dx" => dx = Some(num(value)?),
                "dy" => dy = Some(num(value)?),
                "nodata_value" => nodata = Some(num(value)?),
                _ => return Err(parse_err(lineno, format!("unknown header key {key}"))),
            }
            continue;
        }
        in_body = true;
        for tok in trimmed.split_whitespace() {
            let v = tok
                .parse::<f64>()
                .map_err(|_| parse_err(lineno, format!("not a number: {tok}")))?;
            body.push((lineno, v));
        }
    }

    let missing = |what: &str| parse_err(0, format!("header is missing {what}"));
    let nx = ncols.ok_or_else(|| missing("ncols"))?;
    let ny = nrows.ok_or_else(|| missing("nrows"))?;
    let x_ll = x_ll.ok_or_else(|| missing("xllcorner"))?;
    let y_ll = y_ll.ok_or_else(|| missing("yllcorner"))?;
    let (dx, dy) = match (cellsize, dx, dy) {
        (Some(c), None, None) => (c, c),
        (None, Some(a), Some(b)) => (a, b),
        _ => return Err(missing("cellsize (or both dx and dy)")),
    };
    if body.len() != nx * ny {
        return Err(parse_err(
            body.last().map_or(0, |b| b.0),
            format!("expected {} values ({nx}x{ny}), found {}", nx * ny, body.len()),
        ));
    }
    let origin = if corner == Some(true) {
        Vec2::new(x_ll + 0.5 * dx, y_ll + 0.5 * dy)
    } else {
        Vec2::new(x_ll, y_ll)
    };
    let spec = GridSpec::new(nx, ny, dx, dy, origin)?;
    let nodata = nodata.unwrap_or(DEFAULT_NODATA);
    let mut elevation = vec![0.0; nx * ny];
    for (n, &(_, v)) in body.iter().enumerate() {
        let (row, col) = (n / nx, n % nx);
        if v == nodata || !v.is_finite() {
            return Err(Error::NoData { row, col });
        }
        elevation[spec.idx(col, ny - 1 - row)] = v;
    }
    TerrainGrid::new(spec, elevation)
}

pub fn parse_esri_ascii(text: &str) -> Result<TerrainGrid> {
    load_esri_ascii(text.as_bytes())
}

/// Writes a terrain with `xllcenter`/`yllcenter` so that node positions
/// round-trip exactly.
pub fn write_esri_ascii(mut w: impl Write, terrain: &TerrainGrid) -> Result<()> {
    let s = terrain.spec();
    writeln!(w, "ncols {}", s.nx)?;
    writeln!(w, "nrows {}", s.ny)?;
    writeln!(w, "xllcenter {}", fmt_f(s.origin.x))?;
    writeln!(w, "yllcenter {}", fmt_f(s.origin.y))?;
    if s.dx == s.dy {
        writeln!(w, "cellsize {}", fmt_f(s.dx))?;
    } else {
        writeln!(w, "dx {}", fmt_f(s.dx))?;
        writeln!(w, "dy {}", fmt_f(s.dy))?;
    }
    writeln!(w, "NODATA_value {}", fmt_f(DEFAULT_NODATA))?;
    let e = terrain.elevation();
    for j in (0..s.ny).rev() {
        let row: Vec<String> = (0..s.nx).map(|i| fmt_f(e[s.idx(i, j)])).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

/// A scalar field on grid nodes as read back from CSV.
#[derive(Clone, Debug)]
pub struct GridCsv {
    pub spec: GridSpec,
    pub values: Vec<f64>,
    pub time: Option<f64>,
    pub config_hash: Option<String>,
}

/// Row-major CSV grid: optional `# config_hash=` line, a one-line header
/// with `nx,ny,dx,dy,x0,y0,time`, then one line per grid row from the
/// smallest `y` upward. Unset values are written as `nan`.
pub fn write_grid_csv(
    mut w: impl Write,
    spec: &GridSpec,
    values: &[f64],
    time: Option<f64>,
    config_hash: Option<&str>,
) -> Result<()> {
    if values.len() != spec.len() {
        return Err(Error::SampleMismatch(values.len(), spec.len()));
    }
    if let Some(h) = config_hash {
        writeln!(w, "# config_hash={h}")?;
    }
    writeln!(w, "nx,ny,dx,dy,x0,y0,time")?;
    writeln!(
        w,
        "{},{},{},{},{},{},{}",
        spec.nx,
        spec.ny,
        fmt_f(spec.dx),
        fmt_f(spec.dy),
        fmt_f(spec.origin.x),
        fmt_f(spec.origin.y),
        time.map_or_else(|| "nan".to_string(), fmt_f)
    )?;
    for row in values.chunks(spec.nx) {
        let cells: Vec<String> = row.iter().map(|&v| fmt_f(v)).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

pub fn read_grid_csv(text: &str) -> Result<GridCsv> {
    let mut config_hash = None;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let mut header = None;
    for (n, line) in lines.by_ref() {
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(h) = rest.trim().strip_prefix("config_hash=") {
                config_hash = Some(h.to_string());
            }
            continue;
        }
        header = Some((n + 1, line));
        break;
    }
    let (hl, names) = header.ok_or_else(|| parse_err(0, "empty grid file"))?;
    if names.trim() != "nx,ny,dx,dy,x0,y0,time" {
        return Err(parse_err(hl, format!("unexpected header: {names}")));
    }
    let (ml, meta) = lines.next().ok_or_else(|| parse_err(hl + 1, "missing grid metadata"))?;
    let f: Vec<&str> = meta.split(',').map(str::trim).collect();
    if f.len() != 7 {
        return Err(parse_err(ml + 1, "metadata needs 7 fields"));
    }
    let num = |s: &str| -> Result<f64> {
        s.parse::<f64>().map_err(|_| parse_err(ml + 1, format!("not a number: {s}")))
    };
    let cnt = |s: &str| -> Result<usize> {
        s.parse::<usize>().map_err(|_| parse_err(ml + 1, format!("not a count: {s}")))
    };
    let spec = GridSpec::new(cnt(f[0])?, cnt(f[1])?, num(f[2])?, num(f[3])?, Vec2::new(num(f[4])?, num(f[5])?))?;
    let time = Some(num(f[6])?).filter(|t| !t.is_nan());
    let mut values = Vec::with_capacity(spec.len());
    for (n, line) in lines {
        for tok in line.split(',') {
            let v = tok
                .trim()
                .parse::<f64>()
                .map_err(|_| parse_err(n + 1, format!("not a number: {tok}")))?;
            values.push(v);
        }
    }
    if values.len() != spec.len() {
        return Err(parse_err(0, format!("expected {} values, found {}", spec.len(), values.len())));
    }
    Ok(GridCsv { spec, values, time, config_hash })
}

/// Trace vertices as `tau,x,y,p_x,p_y`.
pub fn write_trace_csv(mut w: impl Write, trace: &PathTrace, config_hash: Option<&str>) -> Result<()> {
    if let Some(h) = config_hash {
        writeln!(w, "# config_hash={h}")?;
    }
    writeln!(w, "# t_star={} terminus={}", fmt_f(trace.t_star), trace.terminus.as_str())?;
    writeln!(w, "tau,x,y,p_x,p_y")?;
    for v in &trace.vertices {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_f(v.tau),
            fmt_f(v.x.x),
            fmt_f(v.x.y),
            fmt_f(v.p.x),
            fmt_f(v.p.y)
        )?;
    }
    Ok(())
}

/// GeoJSON `LineString` feature.
pub fn line_feature(points: impl IntoIterator<Item = Vec2>, properties: Map<String, Value>) -> Value {
    let coords: Vec<Value> = points.into_iter().map(|p| json!([p.x, p.y])).collect();
    json!({
        "type": "Feature",
        "geometry": { "type": "LineString", "coordinates": coords },
        "properties": Value::Object(properties),
    })
}

/// A trace as a feature carrying `t_star`, `terminus` and any extra
/// properties.
pub fn trace_feature(trace: &PathTrace, mut extra: Map<String, Value>) -> Value {
    extra.insert("t_star".into(), json!(trace.t_star));
    extra.insert("terminus".into(), json!(trace.terminus.as_str()));
    line_feature(trace.points(), extra)
}

pub fn feature_collection(features: Vec<Value>, config_hash: Option<&str>) -> Value {
    let mut fc = Map::new();
    fc.insert("type".into(), json!("FeatureCollection"));
    if let Some(h) = config_hash {
        fc.insert("config_hash".into(), json!(h));
    }
    fc.insert("features".into(), Value::Array(features));
    Value::Object(fc)
}

/// Line strings from a GeoJSON document, each with its properties.
pub fn read_lines_geojson(text: &str) -> Result<Vec<(Vec<Vec2>, Map<String, Value>)>> {
    let doc: Value = serde_json::from_str(text).map_err(|e| parse_err(e.line(), e.to_string()))?;
    let features: Vec<&Value> = match doc.get("type").and_then(Value::as_str) {
        Some("FeatureCollection") => doc
            .get("features")
            .and_then(Value::as_array)
            .ok_or_else(|| parse_err(0, "feature collection without features"))?
            .iter()
            .collect(),
        Some("Feature") => vec![&doc],
        other => return Err(parse_err(0, format!("unsupported GeoJSON type {other:?}"))),
    };
    let mut out = vec![];
    for f in features {
        let geom = &f["geometry"];
        if geom["type"].as_str() != Some("LineString") {
            continue;
        }
        let coords = geom["coordinates"]
            .as_array()
            .ok_or_else(|| parse_err(0, "line string without coordinates"))?;
        let pts = coords
            .iter()
            .map(|c| match (c.get(0).and_then(Value::as_f64), c.get(1).and_then(Value::as_f64)) {
                (Some(x), Some(y)) => Ok(Vec2::new(x, y)),
                _ => Err(parse_err(0, "bad coordinate pair")),
            })
            .collect::<Result<Vec<_>>>()?;
        let props = f.get("properties").and_then(Value::as_object).cloned().unwrap_or_default();
        out.push((pts, props));
    }
    Ok(out)
}
