//! SVG rendering: elevation contours, arrival isochrones, front zero
//! contours and paths coloured by cluster label.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use serde_json::{json, Map, Value};
use terrapath::io::{load_esri_ascii, read_grid_csv, read_lines_geojson};
use terrapath::{GridSpec, Vec2};

use crate::CliError;

#[derive(Args, Clone, Debug)]
pub struct PlotArgs {
    /// ESRI ASCII elevation grid (drawn as contour lines).
    #[arg(long)]
    pub terrain: Option<PathBuf>,
    /// Arrival-time CSV grid (drawn as isochrones).
    #[arg(long)]
    pub arrival: Option<PathBuf>,
    /// φ snapshot CSV grids; the zero contour of each is drawn. Repeatable.
    #[arg(long = "front")]
    pub fronts: Vec<PathBuf>,
    /// GeoJSON line strings (paths, representatives, oracle routes). Repeatable.
    #[arg(long = "paths")]
    pub paths: Vec<PathBuf>,
    #[arg(short, long, default_value = "plot.svg")]
    pub output: PathBuf,
    /// Number of elevation contour levels.
    #[arg(long, default_value_t = 12)]
    pub contours: usize,
    /// Number of isochrones.
    #[arg(long, default_value_t = 10)]
    pub isochrones: usize,
    /// Image width in pixels.
    #[arg(long, default_value_t = 800.0)]
    pub width: f64,
}

const PALETTE: [&str; 8] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#1f78b4",
];

type Segment = (Vec2, Vec2);

/// Marching squares over one level. Cells with an unset (NaN) corner are
/// skipped; ambiguous saddle cells are resolved with the cell-centre mean.
pub fn contour_segments(spec: &GridSpec, values: &[f64], level: f64) -> Vec<Segment> {
    let mut out = vec![];
    let cross = |pa: Vec2, va: f64, pb: Vec2, vb: f64| -> Option<Vec2> {
        if (va > level) == (vb > level) {
            return None;
        }
        let t = (level - va) / (vb - va);
        Some(pa.lerp(pb, t))
    };
    for j in 0..spec.ny - 1 {
        for i in 0..spec.nx - 1 {
            let k = spec.idx(i, j);
            let (v00, v10, v01, v11) = (values[k], values[k + 1], values[k + spec.nx], values[k + spec.nx + 1]);
            if [v00, v10, v01, v11].iter().any(|v| v.is_nan()) {
                continue;
            }
            let (p00, p10, p01, p11) = (spec.node(i, j), spec.node(i + 1, j), spec.node(i, j + 1), spec.node(i + 1, j + 1));
            let bottom = cross(p00, v00, p10, v10);
            let right = cross(p10, v10, p11, v11);
            let top = cross(p01, v01, p11, v11);
            let left = cross(p00, v00, p01, v01);
            match (bottom, right, top, left) {
                (Some(b), Some(r), Some(t), Some(l)) => {
                    let centre = 0.25 * (v00 + v10 + v01 + v11);
                    if (v00 > level) == (centre > level) {
                        out.push((b, r));
                        out.push((t, l));
                    } else {
                        out.push((b, l));
                        out.push((r, t));
                    }
                }
                _ => {
                    let pts: Vec<Vec2> = [bottom, right, top, left].into_iter().flatten().collect();
                    if pts.len() == 2 {
                        out.push((pts[0], pts[1]));
                    }
                }
            }
        }
    }
    out
}

fn finite_range(values: &[f64]) -> Option<(f64, f64)> {
    let mut it = values.iter().copied().filter(|v| v.is_finite());
    let first = it.next()?;
    let (lo, hi) = it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v)));
    (hi > lo).then_some((lo, hi))
}

/// `n` levels strictly inside `(lo, hi)`.
fn levels(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|m| lo + (hi - lo) * m as f64 / (n + 1) as f64).collect()
}

struct Canvas {
    lo: Vec2,
    hi: Vec2,
    scale: f64,
    body: String,
}

impl Canvas {
    fn new(lo: Vec2, hi: Vec2, width: f64) -> Self {
        let span = (hi.x - lo.x).max(1e-9);
        Canvas { lo, hi, scale: width / span, body: String::new() }
    }

    fn width(&self) -> f64 {
        (self.hi.x - self.lo.x) * self.scale
    }

    fn height(&self) -> f64 {
        (self.hi.y - self.lo.y) * self.scale
    }

    fn xy(&self, p: Vec2) -> (f64, f64) {
        ((p.x - self.lo.x) * self.scale, (self.hi.y - p.y) * self.scale)
    }

    fn segments(&mut self, segs: &[Segment], style: &str) {
        if segs.is_empty() {
            return;
        }
        let mut d = String::new();
        for &(a, b) in segs {
            let ((ax, ay), (bx, by)) = (self.xy(a), self.xy(b));
            let _ = write!(d, "M{ax:.2} {ay:.2}L{bx:.2} {by:.2}");
        }
        let _ = writeln!(self.body, "<path fill=\"none\" {style} d=\"{d}\"/>");
    }

    fn polyline(&mut self, pts: &[Vec2], style: &str) {
        let coords: Vec<String> = pts
            .iter()
            .map(|&p| {
                let (x, y) = self.xy(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(self.body, "<polyline fill=\"none\" {style} points=\"{}\"/>", coords.join(" "));
    }

    fn finish(&self, hashes: &[String]) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.2} {h:.2}\">",
            w = self.width(),
            h = self.height()
        );
        for h in hashes {
            let _ = writeln!(s, "<!-- config_hash={h} -->");
        }
        let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"#fbfaf6\"/>");
        s.push_str(&self.body);
        s.push_str("</svg>\n");
        s
    }
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

fn label_of(props: &Map<String, Value>) -> Option<usize> {
    props.get("label").and_then(Value::as_u64).map(|l| l as usize)
}

pub fn run(args: &PlotArgs) -> Result<Value, CliError> {
    if args.terrain.is_none() && args.arrival.is_none() && args.fronts.is_empty() && args.paths.is_empty() {
        return Err(CliError::Config(
            "nothing to plot: give --terrain, --arrival, --front or --paths".into(),
        ));
    }
    if !(args.width.is_finite() && args.width > 0.0) {
        return Err(CliError::Config(format!("width must be positive, got {}", args.width)));
    }

    let terrain = match &args.terrain {
        Some(p) => Some(load_esri_ascii(std::io::BufReader::new(
            std::fs::File::open(p).map_err(|e| CliError::Config(format!("cannot open {}: {e}", p.display())))?,
        ))?),
        None => None,
    };
    let arrival = args.arrival.as_ref().map(|p| read(p).and_then(|t| Ok(read_grid_csv(&t)?))).transpose()?;
    let fronts = args
        .fronts
        .iter()
        .map(|p| read(p).and_then(|t| Ok(read_grid_csv(&t)?)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut lines = vec![];
    let mut hashes = vec![];
    for p in &args.paths {
        let text = read(p)?;
        if let Ok(doc) = serde_json::from_str::<Value>(&text) {
            if let Some(h) = doc.get("config_hash").and_then(Value::as_str) {
                hashes.push(h.to_string());
            }
        }
        lines.extend(read_lines_geojson(&text)?);
    }
    hashes.extend(arrival.iter().chain(&fronts).filter_map(|g| g.config_hash.clone()));
    hashes.sort();
    hashes.dedup();

    // Extent: union of all grids, else of all path vertices.
    let mut boxes: Vec<(Vec2, Vec2)> = vec![];
    if let Some(t) = &terrain {
        boxes.push((t.spec().origin, t.spec().far_corner()));
    }
    for g in arrival.iter().chain(&fronts) {
        boxes.push((g.spec.origin, g.spec.far_corner()));
    }
    if boxes.is_empty() {
        for (pts, _) in &lines {
            for &p in pts {
                boxes.push((p, p));
            }
        }
    }
    if boxes.is_empty() {
        return Err(CliError::Config("inputs contain nothing drawable".into()));
    }
    let mut lo = boxes[0].0;
    let mut hi = boxes[0].1;
    for (a, b) in &boxes {
        lo = Vec2::new(lo.x.min(a.x), lo.y.min(a.y));
        hi = Vec2::new(hi.x.max(b.x), hi.y.max(b.y));
    }
    if hi.x - lo.x < 1e-9 || hi.y - lo.y < 1e-9 {
        let pad = 1.0;
        lo = lo - Vec2::new(pad, pad);
        hi += Vec2::new(pad, pad);
    }
    let mut canvas = Canvas::new(lo, hi, args.width);
    let mut counts = Map::new();

    if let Some(t) = &terrain {
        let mut n = 0;
        if let Some((a, b)) = finite_range(t.elevation()) {
            for level in levels(a, b, args.contours) {
                let segs = contour_segments(t.spec(), t.elevation(), level);
                n += usize::from(!segs.is_empty());
                canvas.segments(&segs, "stroke=\"#8c6d46\" stroke-width=\"0.8\" stroke-opacity=\"0.7\"");
            }
        }
        counts.insert("elevation_contours".into(), json!(n));
    }
    if let Some(g) = &arrival {
        let mut n = 0;
        if let Some((a, b)) = finite_range(&g.values) {
            for level in levels(a, b, args.isochrones) {
                let segs = contour_segments(&g.spec, &g.values, level);
                n += usize::from(!segs.is_empty());
                canvas.segments(&segs, "stroke=\"#3b6fb6\" stroke-width=\"1\" stroke-dasharray=\"4 3\"");
            }
        }
        counts.insert("isochrones".into(), json!(n));
    }
    for g in &fronts {
        let segs = contour_segments(&g.spec, &g.values, 0.0);
        canvas.segments(&segs, "stroke=\"#c0392b\" stroke-width=\"1.2\"");
    }
    counts.insert("fronts".into(), json!(fronts.len()));

    // Individual paths first, representatives on top.
    let is_rep = |p: &Map<String, Value>| p.get("representative").and_then(Value::as_bool) == Some(true);
    for (pts, props) in lines.iter().filter(|(_, p)| !is_rep(p)) {
        let colour = label_of(props).map_or("#777777", |l| PALETTE[l % PALETTE.len()]);
        canvas.polyline(pts, &format!("stroke=\"{colour}\" stroke-width=\"1.2\" stroke-opacity=\"0.6\""));
    }
    for (pts, props) in lines.iter().filter(|(_, p)| is_rep(p)) {
        let colour = label_of(props).map_or("#000000", |l| PALETTE[l % PALETTE.len()]);
        canvas.polyline(pts, "stroke=\"#000000\" stroke-width=\"4.5\"");
        canvas.polyline(pts, &format!("stroke=\"{colour}\" stroke-width=\"3\""));
    }
    counts.insert("paths".into(), json!(lines.len()));

    std::fs::write(&args.output, canvas.finish(&hashes))?;
    Ok(json!({
        "command": "plot",
        "config_hashes": hashes,
        "layers": Value::Object(counts),
        "files": [args.output.display().to_string()],
    }))
}
