//! Deterministic SVG frame rendering of plans: arms as polylines, the
//! object polygon, the environment, and a phase label per sampled instant.

use crate::plan::{CompositePlan, FlatStep};
use crate::scenario::ScenarioFile;
use crate::world::WorldDescription;
use std::fmt::Write as _;

/// Wall-clock seconds represented by one flattened plan step.
pub const STEP_SECONDS: f64 = 0.008;

/// Number of frames a plan yields at the given frame rate:
/// `max(1, ceil(fps * steps * STEP_SECONDS))`, frame `j` showing step
/// `floor(j * steps / frames)`.
pub fn frame_count(steps: usize, fps: f64) -> usize {
    ((fps * steps as f64 * STEP_SECONDS).ceil() as usize).max(1)
}

/// Render one SVG per sampled instant into `out_dir`, returning the file
/// names written (lexicographically ordered). Output bytes are a pure
/// function of the inputs.
pub fn render_svg(
    plan: &CompositePlan,
    scenario: &ScenarioFile,
    out_dir: &std::path::Path,
    fps: f64,
) -> std::io::Result<Vec<String>> {
    let steps = plan.flatten_steps();
    let frames = frame_count(steps.len(), fps);
    std::fs::create_dir_all(out_dir)?;
    let mut names = Vec::with_capacity(frames);
    for j in 0..frames {
        let idx = (j * steps.len()) / frames;
        let svg = frame_svg(&steps[idx], &scenario.world, idx);
        let name = format!("frame_{j:05}.svg");
        std::fs::write(out_dir.join(&name), svg)?;
        names.push(name);
    }
    Ok(names)
}

fn world_bounds(world: &WorldDescription) -> (f64, f64, f64, f64) {
    let mut min = [f64::INFINITY; 2];
    let mut max = [f64::NEG_INFINITY; 2];
    let mut take = |p: [f64; 2]| {
        min[0] = min[0].min(p[0]);
        min[1] = min[1].min(p[1]);
        max[0] = max[0].max(p[0]);
        max[1] = max[1].max(p[1]);
    };
    for arm in &world.arms {
        let (x, y, _) = arm.base().planar_parts();
        let r = arm.reach();
        take([x - r, y - r]);
        take([x + r, y + r]);
    }
    for s in world
        .environment
        .supports
        .iter()
        .chain(&world.environment.obstacles)
    {
        take(s.a);
        take(s.b);
    }
    let margin = 0.1;
    (
        min[0] - margin,
        min[1] - margin,
        max[0] - min[0] + 2.0 * margin,
        max[1] - min[1] + 2.0 * margin,
    )
}

/// One frame. The y axis is flipped so +y points up.
pub fn frame_svg(step: &FlatStep, world: &WorldDescription, step_index: usize) -> String {
    let (x0, y0, w, h) = world_bounds(world);
    let scale = 800.0 / w;
    let px = |x: f64| (x - x0) * scale;
    let py = |y: f64| (y0 + h - y) * scale;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"{:.0}\" viewBox=\"0 0 800 {:.0}\">",
        h * scale,
        h * scale
    );
    let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>");

    for seg in &world.environment.supports {
        let _ = writeln!(
            s,
            "<line x1=\"{:.4}\" y1=\"{:.4}\" x2=\"{:.4}\" y2=\"{:.4}\" stroke=\"#8a6f4d\" stroke-width=\"6\"/>",
            px(seg.a[0]), py(seg.a[1]), px(seg.b[0]), py(seg.b[1])
        );
    }
    for seg in &world.environment.obstacles {
        let _ = writeln!(
            s,
            "<line x1=\"{:.4}\" y1=\"{:.4}\" x2=\"{:.4}\" y2=\"{:.4}\" stroke=\"#b03030\" stroke-width=\"4\"/>",
            px(seg.a[0]), py(seg.a[1]), px(seg.b[0]), py(seg.b[1])
        );
    }

    let verts = world.object_vertices(&step.object_pose);
    let mut points = String::new();
    for v in &verts {
        let _ = write!(points, "{:.4},{:.4} ", px(v[0]), py(v[1]));
    }
    let _ = writeln!(
        s,
        "<polygon points=\"{}\" fill=\"#5b84b1\" fill-opacity=\"0.8\" stroke=\"#2d4a6b\" stroke-width=\"2\"/>",
        points.trim_end()
    );

    let colors = ["#2e7d32", "#c62828", "#6a1b9a", "#ef6c00"];
    for (i, (arm, q)) in world.arms.iter().zip(&step.arm_configs).enumerate() {
        let pts = arm.joint_points(q);
        let released = step.released_arm == Some(i);
        let dash = if released { " stroke-dasharray=\"8 6\"" } else { "" };
        let mut poly = String::new();
        for p in &pts {
            let _ = write!(poly, "{:.4},{:.4} ", px(p[0]), py(p[1]));
        }
        let _ = writeln!(
            s,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"5\"{} stroke-linecap=\"round\"/>",
            poly.trim_end(),
            colors[i % colors.len()],
            dash
        );
        for p in &pts {
            let _ = writeln!(
                s,
                "<circle cx=\"{:.4}\" cy=\"{:.4}\" r=\"4\" fill=\"#222222\"/>",
                px(p[0]),
                py(p[1])
            );
        }
    }

    let _ = writeln!(
        s,
        "<text x=\"12\" y=\"24\" font-family=\"monospace\" font-size=\"18\">step {} phase {}</text>",
        step_index, step.phase
    );
    let _ = writeln!(s, "</svg>");
    s
}
