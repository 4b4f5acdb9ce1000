//! Artifact emission: JSON snapshots (restart-exact), CSV diagnostic
//! streams, SVG boundary renderings and run metadata. All file writes are
//! atomic (temp file + rename).

use crate::contour::{PatchCurve, SimulationState};
use crate::diagnostics::DiagnosticRecord;
use crate::geometry::Vec2;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Serialized form of a simulation snapshot. Node coordinates round-trip
/// exactly (serde_json emits shortest-roundtrip floats), so a re-ingested
/// snapshot restarts the run bit-identically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub curves: Vec<SnapshotCurve>,
    #[serde(default)]
    pub tracers: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotCurve {
    pub id: usize,
    pub strength: f64,
    pub nodes: Vec<[f64; 2]>,
}

impl Snapshot {
    pub fn of_state(state: &SimulationState) -> Snapshot {
        Snapshot {
            t: state.t,
            curves: state
                .curves
                .iter()
                .map(|c| SnapshotCurve {
                    id: c.id,
                    strength: c.strength,
                    nodes: c.nodes.iter().map(|p| [p.x, p.y]).collect(),
                })
                .collect(),
            tracers: state.tracers.iter().map(|p| [p.x, p.y]).collect(),
        }
    }

    pub fn to_curves(&self) -> Result<Vec<PatchCurve>> {
        self.curves
            .iter()
            .map(|c| {
                PatchCurve::new(
                    c.id,
                    c.strength,
                    c.nodes.iter().map(|p| Vec2::new(p[0], p[1])).collect(),
                )
            })
            .collect()
    }

    pub fn tracer_points(&self) -> Vec<Vec2> {
        self.tracers.iter().map(|p| Vec2::new(p[0], p[1])).collect()
    }
}

/// Write bytes atomically: write to `<path>.tmp`, then rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}tmp",
        path.extension()
            .map(|e| format!("{}.", e.to_string_lossy()))
            .unwrap_or_default()
    ));
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_snapshot(path: &Path, state: &SimulationState) -> Result<()> {
    let snap = Snapshot::of_state(state);
    let text = serde_json::to_string_pretty(&snap)
        .map_err(|e| Error::Io(format!("snapshot serialization: {e}")))?;
    atomic_write(path, text.as_bytes())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| {
        Error::Config(format!(
            "bad snapshot {} at line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

/// Column header of the diagnostics CSV for a given configuration.
pub fn diagnostics_csv_header(gammas: &[f64], max_k: usize, tracer_pairs: usize) -> String {
    let mut cols = vec![
        "t".to_string(),
        "patch_id".into(),
        "area".into(),
        "perimeter".into(),
        "w_inf".into(),
    ];
    for k in 1..=max_k {
        for g in gammas {
            cols.push(format!("holder_k{k}_g{g}"));
        }
    }
    for g in gammas {
        cols.push(format!("delta_g{g}"));
    }
    cols.push("max_curvature".into());
    cols.push("min_dist".into());
    for i in 0..tracer_pairs {
        cols.push(format!("tracer_pair_{i}"));
    }
    cols.join(",")
}

/// One CSV row per patch for a diagnostics record. Float formatting is the
/// shortest round-trip representation, so identical records give identical
/// bytes.
pub fn diagnostics_csv_rows(rec: &DiagnosticRecord) -> String {
    let mut out = String::new();
    for p in &rec.patches {
        let mut cols: Vec<String> = vec![
            format!("{}", rec.t),
            format!("{}", p.patch_id),
            format!("{}", p.area),
            format!("{}", p.perimeter),
            format!("{}", p.w_inf),
        ];
        for (_, _, v) in &p.holder {
            cols.push(format!("{v}"));
        }
        for (_, v) in &p.delta {
            cols.push(format!("{v}"));
        }
        cols.push(format!("{}", p.max_curvature));
        cols.push(if rec.min_dist.is_finite() {
            format!("{}", rec.min_dist)
        } else {
            "inf".into()
        });
        for v in &rec.tracer_pairs {
            cols.push(format!("{v}"));
        }
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

/// Render the boundaries (and tracers) of a snapshot as a standalone SVG.
/// The viewport is fixed by the caller so successive frames align.
pub fn render_svg(state: &SimulationState, viewport: (Vec2, Vec2)) -> String {
    let (lo, hi) = viewport;
    let w = 800.0;
    let h = 800.0 * (hi.y - lo.y) / (hi.x - lo.x);
    let sx = w / (hi.x - lo.x);
    let sy = h / (hi.y - lo.y);
    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" \
         viewBox=\"0 0 {w} {h}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    ));
    let map = |p: Vec2| ((p.x - lo.x) * sx, (hi.y - p.y) * sy);
    let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
    for (i, c) in state.curves.iter().enumerate() {
        let color = palette[i % palette.len()];
        let mut d = String::new();
        for (j, p) in c.nodes.iter().enumerate() {
            let (x, y) = map(*p);
            d.push_str(&format!("{}{x:.3},{y:.3} ", if j == 0 { "M" } else { "L" }));
        }
        d.push('Z');
        s.push_str(&format!(
            "<path d=\"{d}\" fill=\"{color}\" fill-opacity=\"0.25\" stroke=\"{color}\" \
             stroke-width=\"1.5\"/>\n"
        ));
    }
    for p in &state.tracers {
        let (x, y) = map(*p);
        s.push_str(&format!(
            "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"2\" fill=\"black\"/>\n"
        ));
    }
    s.push_str(&format!(
        "<text x=\"10\" y=\"20\" font-family=\"monospace\" font-size=\"14\">t = {}</text>\n",
        state.t
    ));
    s.push_str("</svg>\n");
    s
}

/// Append-friendly CSV writer that buffers rows in memory and rewrites the
/// file atomically at each flush (runs are desk scale).
pub struct CsvStream {
    path: std::path::PathBuf,
    content: String,
}

impl CsvStream {
    pub fn create(path: &Path, header: &str) -> CsvStream {
        CsvStream {
            path: path.to_path_buf(),
            content: format!("{header}\n"),
        }
    }

    pub fn push(&mut self, rows: &str) {
        self.content.push_str(rows);
    }

    pub fn flush(&self) -> Result<()> {
        atomic_write(&self.path, self.content.as_bytes())
    }

    pub fn content(&self) -> &str {
        &self.content
    }
}

/// run_meta.json payload: the full resolved configuration plus versions and
/// the kernel table digest, enough to reproduce the run exactly.
pub fn run_meta_json(
    config: &crate::config::RunConfig,
    table: &crate::kernel::KernelTable,
) -> serde_json::Value {
    serde_json::json!({
        "program": "patchflow",
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "kernel_table": table.metadata_json(),
    })
}

/// Emit `writer` lines per criterion/report; helper shared by CLI
/// subcommands writing CSV tables of profile functions.
pub fn write_profile_csv<W: Write>(
    w: &mut W,
    profile: &crate::osgood::OsgoodProfile,
    rs: &[f64],
) -> Result<()> {
    writeln!(w, "r,H,Htilde,scriptH,scriptM")?;
    for &r in rs {
        writeln!(
            w,
            "{},{},{},{},{}",
            r,
            profile.h_eval(r)?,
            profile.h_tilde_eval(r)?,
            profile.script_h(r)?,
            profile.script_m(r)?
        )?;
    }
    Ok(())
}
