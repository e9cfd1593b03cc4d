//! Run artifacts: the monitor time series as CSV, polyline frames as JSON,
//! SVG snapshots and a JSON run summary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::admissibility::AdmissibilityReport;
use crate::error::Result;
use crate::model::{FlowParams, NetworkState};
use crate::monitors::{MonitorReport, Thresholds};
use crate::scene::Scene;
use crate::solver::{RunOutput, Termination};
use crate::vec2::Vec2;

/// Which frame artifacts to write. The CSV series and the run summary are
/// always written.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    /// Polylines as JSON text.
    #[default]
    Csv,
    /// One SVG file per frame.
    Svg,
    Both,
}

impl ExportFormat {
    pub fn text_frames(self) -> bool {
        matches!(self, ExportFormat::Csv | ExportFormat::Both)
    }

    pub fn svg_frames(self) -> bool {
        matches!(self, ExportFormat::Svg | ExportFormat::Both)
    }
}

/// Steps at which frames are kept for a run of `steps` accepted steps:
/// the initial state, every `cadence`-th step and the last one.
pub fn frame_steps(steps: usize, cadence: usize) -> Vec<usize> {
    let cadence = cadence.max(1);
    let mut out: Vec<usize> = (0..=steps).step_by(cadence).collect();
    if out.last() != Some(&steps) {
        out.push(steps);
    }
    out
}

/// Monitor series as CSV with a header row.
pub fn monitor_csv(reports: &[MonitorReport]) -> String {
    let Some(first) = reports.first() else {
        return String::new();
    };
    let mut s = first.csv_header();
    s.push('\n');
    for r in reports {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

/// One exported frame: every curve as its node polyline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub step: usize,
    pub time: f64,
    pub curves: Vec<Vec<Vec2>>,
}

impl Frame {
    /// Closed curves repeat their first node at the end.
    pub fn of(step: usize, state: &NetworkState) -> Frame {
        let curves = (0..state.curve_count()).map(|c| state.curve_points(c)).collect();
        Frame {
            step,
            time: state.time,
            curves,
        }
    }
}

/// Frames as a JSON array. Coordinates round-trip exactly.
pub fn frames_json(frames: &[Frame]) -> Result<String> {
    Ok(serde_json::to_string_pretty(frames)?)
}

pub fn parse_frames_json(text: &str) -> Result<Vec<Frame>> {
    Ok(serde_json::from_str(text)?)
}

/// Margin around the bounding box, as a fraction of its larger side.
pub const SVG_MARGIN: f64 = 0.05;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// SVG drawing of one frame. The y axis points up.
pub fn frame_svg(frame: &Frame) -> String {
    let (lo, hi) = bounding_box(frame.curves.iter().flatten().copied());
    let extent = (hi.x - lo.x).max(hi.y - lo.y).max(1e-12);
    let margin = SVG_MARGIN * extent;
    let (x0, y0) = (lo.x - margin, -hi.y - margin);
    let (w, h) = (hi.x - lo.x + 2.0 * margin, hi.y - lo.y + 2.0 * margin);
    let stroke = 4e-3 * extent;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{x0} {y0} {w} {h}" width="640" height="{}">"#,
        (640.0 * h / w).round().max(1.0)
    );
    let _ = writeln!(s, "<title>step {} t = {}</title>", frame.step, frame.time);
    for (c, curve) in frame.curves.iter().enumerate() {
        let points: Vec<String> = curve.iter().map(|p| format!("{},{}", p.x, 0.0 - p.y)).collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="{stroke}" points="{}"/>"#,
            PALETTE[c % PALETTE.len()],
            points.join(" ")
        );
    }
    s.push_str("</svg>\n");
    s
}

fn bounding_box(points: impl Iterator<Item = Vec2>) -> (Vec2, Vec2) {
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (Vec2::ZERO, Vec2::ZERO);
    }
    (lo, hi)
}

/// Contents of `report.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scene: String,
    pub params: FlowParams,
    pub admissibility: AdmissibilityReport,
    pub thresholds: Thresholds,
    pub termination: Termination,
    pub steps: usize,
    pub final_time: f64,
    pub initial_energy: Option<f64>,
    pub final_energy: Option<f64>,
}

impl RunSummary {
    pub fn new(scene: &Scene, out: &RunOutput) -> RunSummary {
        RunSummary {
            scene: scene.name.clone(),
            params: scene.params.clone(),
            admissibility: out.admissibility.clone(),
            thresholds: out.thresholds,
            termination: out.termination.clone(),
            steps: out.reports.len().saturating_sub(1),
            final_time: out.reports.last().map_or(0.0, |r| r.time),
            initial_energy: out.reports.first().map(|r| r.energy),
            final_energy: out.reports.last().map(|r| r.energy),
        }
    }
}

/// Writes `monitor.csv`, `report.json` and the requested frame files into
/// `dir` (created if missing). Returns the written paths.
pub fn write_run(scene: &Scene, out: &RunOutput, dir: &Path, format: ExportFormat) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: String, contents: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, contents)?;
        written.push(path);
        Ok(())
    };
    put("monitor.csv".into(), monitor_csv(&out.reports))?;
    let summary = RunSummary::new(scene, out);
    put("report.json".into(), serde_json::to_string_pretty(&summary)? + "\n")?;
    let frames: Vec<Frame> = out.frames.iter().map(|(step, s)| Frame::of(*step, s)).collect();
    if format.text_frames() {
        put("frames.json".into(), frames_json(&frames)? + "\n")?;
    }
    if format.svg_frames() {
        for f in &frames {
            put(format!("frame_{:06}.svg", f.step), frame_svg(f))?;
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{builtin, BuiltinArgs};
    use crate::model::build_state;

    #[test]
    fn frame_schedule_counts() {
        assert_eq!(frame_steps(1, 10), vec![0, 1]);
        assert_eq!(frame_steps(100, 10).len(), 11);
        assert_eq!(frame_steps(105, 10).len(), 12);
        assert_eq!(frame_steps(0, 3), vec![0]);
    }

    #[test]
    fn json_frames_round_trip_exactly() {
        let scene = builtin("perturbed_triod", &BuiltinArgs::default()).unwrap();
        let state = build_state(scene.topology.clone(), &scene.curves, 16).unwrap();
        let frames = vec![Frame::of(0, &state)];
        let back = parse_frames_json(&frames_json(&frames).unwrap()).unwrap();
        assert_eq!(back, frames);
    }

    #[test]
    fn closed_curves_are_drawn_closed() {
        let scene = builtin("circle", &BuiltinArgs::default()).unwrap();
        let state = build_state(scene.topology.clone(), &scene.curves, 16).unwrap();
        let f = Frame::of(0, &state);
        assert_eq!(f.curves[0].len(), 17);
        assert_eq!(f.curves[0][0], f.curves[0][16]);
    }

    #[test]
    fn svg_view_box_encloses_the_frame_with_margin() {
        let frame = Frame {
            step: 0,
            time: 0.0,
            curves: vec![vec![Vec2::new(0.0, 0.0), Vec2::new(2.0, 1.0)]],
        };
        let svg = frame_svg(&frame);
        assert!(svg.contains(r#"viewBox="-0.1 -1.1 2.2 1.2""#), "{svg}");
        assert!(svg.contains("points=\"0,0 2,-1\""));
    }
}
