//! Self-contained SVG plots: group-average trajectories with threshold lines,
//! per-node input staircases, and inter-event-time scatter. Text output with
//! fixed-precision coordinates, so plots diff cleanly in tests.

use std::path::{Path, PathBuf};

use super::{write_atomic, IoError};
use crate::model::Objective;
use crate::sim::{Mode, Trajectory};

const W: f64 = 720.0;
const H: f64 = 420.0;
const MARGIN: f64 = 50.0;

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    body: String,
}

impl Frame {
    fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        let pad = 0.05 * (y_max - y_min + 1e-12);
        Self { x_min, x_max, y_min: y_min - pad, y_max: y_max + pad, body: String::new() }
    }

    fn sx(&self, x: f64) -> f64 {
        MARGIN + (x - self.x_min) / (self.x_max - self.x_min).max(1e-300) * (W - 2.0 * MARGIN)
    }

    fn sy(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y_min) / (self.y_max - self.y_min).max(1e-300) * (H - 2.0 * MARGIN)
    }

    fn polyline(&mut self, pts: impl Iterator<Item = (f64, f64)>, color: &str, dash: Option<&str>) {
        let mut d = String::new();
        for (x, y) in pts {
            d.push_str(&format!("{:.2},{:.2} ", self.sx(x), self.sy(y)));
        }
        let dash = dash.map_or(String::new(), |v| format!(" stroke-dasharray=\"{v}\""));
        self.body.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.2\"{dash} points=\"{}\"/>\n",
            d.trim_end()
        ));
    }

    fn dot(&mut self, x: f64, y: f64, color: &str) {
        self.body.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2\" fill=\"{color}\"/>\n",
            self.sx(x),
            self.sy(y)
        ));
    }

    fn hline(&mut self, y: f64, color: &str) {
        self.polyline([(self.x_min, y), (self.x_max, y)].into_iter(), color, Some("6,4"));
    }

    fn finish(self, title: &str, x_label: &str, y_label: &str) -> String {
        let mut out = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
        );
        out.push_str(&format!(
            "<text x=\"{:.0}\" y=\"24\" font-family=\"monospace\" font-size=\"14\" text-anchor=\"middle\">{title}</text>\n",
            W / 2.0
        ));
        // axes
        out.push_str(&format!(
            "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n<line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
            m = MARGIN,
            b = H - MARGIN,
            r = W - MARGIN,
            t = MARGIN
        ));
        out.push_str(&format!(
            "<text x=\"{:.0}\" y=\"{:.0}\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"middle\">{x_label}</text>\n",
            W / 2.0,
            H - 12.0
        ));
        out.push_str(&format!(
            "<text x=\"14\" y=\"{:.0}\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.0})\">{y_label}</text>\n",
            H / 2.0,
            H / 2.0
        ));
        for (v, x_tick) in [(self.x_min, true), (self.x_max, true), (self.y_min, false), (self.y_max, false)] {
            if x_tick {
                out.push_str(&format!(
                    "<text x=\"{:.0}\" y=\"{:.0}\" font-family=\"monospace\" font-size=\"10\" text-anchor=\"middle\">{v:.4}</text>\n",
                    self.sx(v),
                    H - MARGIN + 16.0
                ));
            } else {
                out.push_str(&format!(
                    "<text x=\"{:.0}\" y=\"{:.0}\" font-family=\"monospace\" font-size=\"10\" text-anchor=\"end\">{v:.4}</text>\n",
                    MARGIN - 4.0,
                    self.sy(v) + 4.0
                ));
            }
        }
        out.push_str(&self.body);
        out.push_str("</svg>\n");
        out
    }
}

const COLORS: [&str; 6] = ["#c0392b", "#2980b9", "#27ae60", "#8e44ad", "#d35400", "#16a085"];

/// Emit the plot set for a completed run; returns the written paths.
pub fn emit_plots(
    traj: &Trajectory,
    obj: &Objective,
    dir: &Path,
) -> Result<Vec<PathBuf>, IoError> {
    if traj.is_empty() {
        return Err(IoError::Schema { path: dir.into(), msg: "empty trajectory".into() });
    }
    std::fs::create_dir_all(dir)
        .map_err(|source| IoError::File { path: dir.into(), source })?;
    let mut written = Vec::new();
    let t_max = *traj.times().last().unwrap();

    // group averages with threshold lines
    let mut y_max = 0.0f64;
    let mut series: Vec<Vec<(f64, f64)>> = Vec::new();
    for m in 0..obj.len() {
        let scale = obj.support(m).len() as f64;
        let pts: Vec<(f64, f64)> = traj
            .times()
            .iter()
            .enumerate()
            .map(|(idx, &t)| (t, obj.selector_dot(m, traj.state(idx)) / scale))
            .collect();
        for &(_, y) in &pts {
            y_max = y_max.max(y);
        }
        y_max = y_max.max(obj.d_bar()[m] / scale);
        series.push(pts);
    }
    let mut frame = Frame::new(0.0, t_max, 0.0, y_max);
    for (m, pts) in series.into_iter().enumerate() {
        let color = COLORS[m % COLORS.len()];
        frame.polyline(pts.into_iter(), color, None);
        frame.hline(obj.d_bar()[m] / obj.support(m).len() as f64, color);
    }
    let group_path = dir.join("groups.svg");
    write_atomic(
        &group_path,
        frame
            .finish("group averages vs thresholds", "t", "avg infected fraction")
            .as_bytes(),
    )?;
    written.push(group_path);

    // recovery-input staircases (right-continuous between triggers)
    let n = traj.state(0).len();
    let mut u_max = 0.0f64;
    let mut stairs: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
    for idx in 0..traj.len() {
        let (u, _) = traj.inputs_at(idx);
        for i in 0..n {
            u_max = u_max.max(u[i]);
            if let Some(&(_, prev)) = stairs[i].last() {
                // hold the previous level up to this sample for a staircase look
                if prev != u[i] {
                    stairs[i].push((traj.times()[idx], prev));
                }
            }
            stairs[i].push((traj.times()[idx], u[i]));
        }
    }
    let mut frame = Frame::new(0.0, t_max, 0.0, u_max.max(1e-9));
    for (i, pts) in stairs.into_iter().enumerate() {
        frame.polyline(pts.into_iter(), COLORS[i % COLORS.len()], None);
    }
    let inputs_path = dir.join("inputs.svg");
    write_atomic(
        &inputs_path,
        frame.finish("recovery control inputs", "t", "u_i").as_bytes(),
    )?;
    written.push(inputs_path);

    // inter-event scatter (event mode only)
    if traj.mode == Mode::EventTriggered {
        let mut pts = Vec::new();
        let mut dt_max = 0.0f64;
        for i in 0..traj.triggers().node_count() {
            for w in traj.triggers().node(i).windows(2) {
                let dt = w[1].time - w[0].time;
                dt_max = dt_max.max(dt);
                pts.push((w[1].time, dt, i));
            }
        }
        let mut frame = Frame::new(0.0, t_max, 0.0, dt_max.max(1e-9));
        for (t, dt, i) in pts {
            frame.dot(t, dt, COLORS[i % COLORS.len()]);
        }
        let events_path = dir.join("inter_event.svg");
        write_atomic(
            &events_path,
            frame.finish("inter-event times", "trigger time", "dt").as_bytes(),
        )?;
        written.push(events_path);
    }
    Ok(written)
}
