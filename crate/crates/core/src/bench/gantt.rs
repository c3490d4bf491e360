use std::fmt::Write as _;

use crate::schedulers::Schedule;
use crate::taskmodel::ProblemInstance;

const LABEL_W: f64 = 70.0;
const PLOT_W: f64 = 800.0;
const LANE_H: f64 = 28.0;
const TOP: f64 = 24.0;

/// Fill for frequency level `k` of `levels`: light for slow, dark for fast.
fn shade(k: usize, levels: usize) -> String {
    let t = if levels <= 1 { 1.0 } else { k as f64 / (levels - 1) as f64 };
    let lightness = 85.0 - 50.0 * t;
    format!("hsl(210,60%,{lightness:.0}%)")
}

/// Draws `schedule` as an SVG Gantt chart: one lane per core, time scaled so
/// the deadline spans the lane.
pub fn export_gantt(schedule: &Schedule, inst: &ProblemInstance) -> String {
    let p = inst.p() as usize;
    let horizon = schedule.entries.iter().map(|e| e.end).fold(inst.deadline, f64::max).max(f64::MIN_POSITIVE);
    let scale = PLOT_W / horizon;
    let width = LABEL_W + PLOT_W + 10.0;
    let height = TOP + LANE_H * p as f64 + 10.0;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{LABEL_W:.0}" y="16">{} schedule, deadline {:.4} s, energy {:.4} J</text>"#,
        schedule.kind, inst.deadline, schedule.total_energy
    );
    for c in 0..p {
        let y = TOP + LANE_H * c as f64;
        let _ = writeln!(
            svg,
            r##"<rect class="lane" x="{LABEL_W:.2}" y="{y:.2}" width="{PLOT_W:.2}" height="{LANE_H:.2}" fill="#f4f4f4" stroke="#bbbbbb"/>"##
        );
        let _ = writeln!(svg, r#"<text x="4" y="{:.2}">core {c}</text>"#, y + LANE_H * 0.65);
    }
    let mut entries: Vec<_> = schedule.entries.iter().collect();
    entries.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.task.cmp(&b.task)));
    for e in entries {
        let x = LABEL_W + e.start * scale;
        let w = (e.end - e.start) * scale;
        let fill = shade(e.level, inst.k());
        let mut cores = e.cores.clone();
        cores.sort_unstable();
        for c in cores {
            let y = TOP + LANE_H * c as f64 + 2.0;
            let _ = writeln!(
                svg,
                r##"<rect class="task" data-task="{}" data-level="{}" x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{:.2}" fill="{fill}" stroke="#333333"/>"##,
                e.task,
                e.level,
                LANE_H - 4.0
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                x + w / 2.0,
                y + LANE_H * 0.6,
                e.task
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}
