//! Static SVG renderings of maps, coverage and plans.
//!
//! Output is a pure function of its inputs: fixed number formatting, no
//! timestamps, and iteration in index order only.

use std::fmt::Write as _;

use relaynet::gridmap::{CellIndex, GridMap, Material, WorldPoint};
use relaynet::mission::{DeploymentPlan, Purpose, Scenario};
use relaynet::radio::{LinkModel, RssField};
use relaynet::Result;

/// Pixels per meter.
const SCALE: f64 = 20.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f",
];

/// Color of robot `r` in renders.
pub fn robot_color(r: usize) -> &'static str {
    PALETTE[r % PALETTE.len()]
}

fn px(v: f64) -> String {
    format!("{:.2}", v * SCALE)
}

/// Coverage of the base station plus every planned relay post.
pub fn plan_coverage(scenario: &Scenario, plan: Option<&DeploymentPlan>) -> Result<RssField> {
    let links = LinkModel::new(&scenario.map, &scenario.radio);
    let mut txs = vec![scenario.map.free_cell(scenario.bs)?];
    if let Some(plan) = plan {
        for relay in &plan.relays {
            txs.push(scenario.map.to_cell(relay.position)?);
        }
    }
    Ok(links.coverage(&txs))
}

/// Renders the map, coverage mask, planned paths, relays, goals and base
/// station.
pub fn render_svg(scenario: &Scenario, plan: Option<&DeploymentPlan>, coverage: Option<&RssField>) -> String {
    let map = &scenario.map;
    let (w, h) = (map.world_width(), map.world_height());
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{1}" viewBox="0 0 {0} {1}">"#,
        px(w),
        px(h)
    );
    let _ = writeln!(out, r##"<rect width="{}" height="{}" fill="#ffffff"/>"##, px(w), px(h));

    if let Some(cov) = coverage {
        let _ = writeln!(out, r##"<g id="coverage" fill="#cfe8ff">"##);
        write_runs(&mut out, map, |c| map.is_free(c) && cov.is_covered(c));
        out.push_str("</g>\n");
    }
    let _ = writeln!(out, r##"<g id="walls" fill="#333333">"##);
    write_runs(&mut out, map, |c| map.material(c) == Material::Wall);
    out.push_str("</g>\n");
    let _ = writeln!(out, r##"<g id="glass" fill="#7fc8c8">"##);
    write_runs(&mut out, map, |c| map.material(c) == Material::Glass);
    out.push_str("</g>\n");

    if let Some(plan) = plan {
        out.push_str("<g id=\"paths\" fill=\"none\" stroke-width=\"2\">\n");
        for (r, robot) in plan.robots.iter().enumerate() {
            for seg in &robot.segments {
                if matches!(seg.purpose, Purpose::WaitUntil { .. }) || seg.path.points.len() < 2 {
                    continue;
                }
                let dash = if matches!(seg.purpose, Purpose::RelayMove { .. }) {
                    r#" stroke-dasharray="6 3""#
                } else {
                    ""
                };
                let pts: Vec<String> =
                    seg.path.points.iter().map(|p| format!("{},{}", px(p.x), px(p.y))).collect();
                let _ = writeln!(
                    out,
                    r#"<polyline stroke="{}"{} points="{}"/>"#,
                    robot_color(r),
                    dash,
                    pts.join(" ")
                );
            }
        }
        out.push_str("</g>\n");
        out.push_str("<g id=\"relays\" stroke=\"#000000\" stroke-width=\"2\">\n");
        for relay in &plan.relays {
            cross(&mut out, relay.position, robot_color(relay.robot));
        }
        out.push_str("</g>\n");
    }

    out.push_str("<g id=\"goals\" fill=\"#ffd700\" stroke=\"#000000\">\n");
    for (i, g) in scenario.goals.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<circle id="goal-{}" cx="{}" cy="{}" r="5"/>"#,
            i,
            px(g.x),
            px(g.y)
        );
    }
    out.push_str("</g>\n");
    out.push_str("<g id=\"starts\" fill=\"#ffffff\" stroke-width=\"2\">\n");
    for (r, s) in scenario.robot_starts.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<circle cx="{}" cy="{}" r="3" stroke="{}"/>"#,
            px(s.x),
            px(s.y),
            robot_color(r)
        );
    }
    out.push_str("</g>\n");
    let _ = writeln!(
        out,
        r##"<rect id="bs" x="{:.2}" y="{:.2}" width="12.00" height="12.00" fill="#000000"/>"##,
        scenario.bs.x * SCALE - 6.0,
        scenario.bs.y * SCALE - 6.0
    );
    out.push_str("</svg>\n");
    out
}

fn cross(out: &mut String, p: WorldPoint, color: &str) {
    let (x, y) = (p.x * SCALE, p.y * SCALE);
    let _ = writeln!(
        out,
        r#"<path stroke="{color}" d="M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}"/>"#,
        x - 6.0,
        y - 6.0,
        x + 6.0,
        y + 6.0,
        x - 6.0,
        y + 6.0,
        x + 6.0,
        y - 6.0
    );
}

/// Horizontal runs of cells matching `pick`, one rect per run.
fn write_runs(out: &mut String, map: &GridMap, pick: impl Fn(CellIndex) -> bool) {
    let res = map.resolution();
    for row in 0..map.height() {
        let mut col = 0;
        while col < map.width() {
            if !pick(CellIndex::new(col, row)) {
                col += 1;
                continue;
            }
            let begin = col;
            while col < map.width() && pick(CellIndex::new(col, row)) {
                col += 1;
            }
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="{}" height="{}"/>"#,
                px(begin as f64 * res),
                px(row as f64 * res),
                px((col - begin) as f64 * res),
                px(res)
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use relaynet::gridmap::parse_map;
    use relaynet::mission::{plan_deployment, Mode};
    use relaynet::radio::RadioParams;

    fn scenario() -> Scenario {
        let map = parse_map("width 10\nheight 4\nresolution 1\n..........\n....#.....\n....#.....\n..........\n").unwrap();
        Scenario::new(
            map,
            WorldPoint::new(0.5, 0.5),
            vec![WorldPoint::new(1.5, 0.5)],
            vec![WorldPoint::new(8.5, 2.5)],
            RadioParams::default(),
        )
    }

    #[test]
    fn render_is_deterministic_and_complete() {
        let s = scenario();
        let plan = plan_deployment(&s, Mode::Fmm).unwrap();
        let cov = plan_coverage(&s, Some(&plan)).unwrap();
        let a = render_svg(&s, Some(&plan), Some(&cov));
        let b = render_svg(&s, Some(&plan), Some(&cov));
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.trim_end().ends_with("</svg>"));
        assert!(a.contains("<polyline"));
        assert!(a.contains(r#"id="goal-0""#));
        let walls = a.split(r#"<g id="walls""#).nth(1).unwrap().split("</g>").next().unwrap();
        assert_eq!(walls.matches("<rect").count(), 2);
    }
}
