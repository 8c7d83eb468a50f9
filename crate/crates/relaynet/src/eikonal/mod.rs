//! Eikonal path planning.
//!
//! [`solve_eikonal`] propagates a front from a source cell at the local speed
//! `F`, producing the cost-to-go `D` with `|∇D|·F = 1`. Paths come from
//! steepest descent on `D` ([`extract_path`]). Raising `F` inside radio
//! coverage ([`comm_velocity`]) bends the optimal paths into connected areas.

mod descent;
mod fmm;

use serde::{Deserialize, Serialize};

pub use descent::extract_path;
pub use fmm::{solve_eikonal, solve_eikonal_observed, DistanceField};

use crate::error::{Error, Result};
use crate::gridmap::{CellIndex, GridMap, Material, WorldPoint};
use crate::radio::{combine_coverage, coverage_field, RadioParams, RssField};

/// Wavefront speed per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    width: usize,
    height: usize,
    resolution: f64,
    speed: Vec<f64>,
}

impl VelocityField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn speeds(&self) -> &[f64] {
        &self.speed
    }

    pub fn index(&self, cell: CellIndex) -> usize {
        cell.row * self.width + cell.col
    }

    pub fn contains(&self, cell: CellIndex) -> bool {
        cell.col < self.width && cell.row < self.height
    }

    pub fn speed(&self, cell: CellIndex) -> f64 {
        self.speed[self.index(cell)]
    }

    pub fn set_speed(&mut self, cell: CellIndex, speed: f64) {
        let i = self.index(cell);
        self.speed[i] = speed;
    }
}

/// `F = 1` on free cells, `0` on walls and glass.
pub fn base_velocity(map: &GridMap) -> VelocityField {
    VelocityField {
        width: map.width(),
        height: map.height(),
        resolution: map.resolution(),
        speed: map
            .cells()
            .iter()
            .map(|&m| if m == Material::Free { 1.0 } else { 0.0 })
            .collect(),
    }
}

/// Communication-aware speed `F_c = F + f`.
///
/// `f = w_c · clamp((rss − γ) / (rss_ref − γ), 0, 1)` on covered free cells
/// and zero elsewhere, with `rss_ref = p_tx − l0`. Cells in `other_robots`
/// get zero speed.
pub fn comm_velocity(
    map: &GridMap,
    cov: &RssField,
    other_robots: &[CellIndex],
    w_c: f64,
    params: &RadioParams,
) -> Result<VelocityField> {
    if !(w_c >= 0.0 && w_c.is_finite()) {
        return Err(Error::InvalidRadio(format!("w_c must be >= 0, got {w_c}")));
    }
    if !cov.aligned_with(map) {
        return Err(Error::MismatchedGrids);
    }
    let gamma = cov.gamma();
    let span = params.rss_ref() - gamma;
    if span <= 0.0 {
        return Err(Error::InvalidRadio(format!(
            "rss_ref {} does not exceed the threshold {gamma}",
            params.rss_ref()
        )));
    }
    let mut field = base_velocity(map);
    for (speed, &rss) in field.speed.iter_mut().zip(cov.values()) {
        if *speed > 0.0 && rss >= gamma {
            *speed += w_c * ((rss - gamma) / span).clamp(0.0, 1.0);
        }
    }
    for &cell in other_robots {
        if field.contains(cell) {
            field.set_speed(cell, 0.0);
        }
    }
    Ok(field)
}

/// A polyline through free space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub points: Vec<WorldPoint>,
    pub length: f64,
    /// Fraction of arc length inside the coverage mask used for planning.
    pub coverage_fraction: f64,
}

impl Path {
    pub fn new(points: Vec<WorldPoint>) -> Self {
        let length = points.windows(2).map(|w| w[0].distance(w[1])).sum();
        Path {
            points,
            length,
            coverage_fraction: 0.0,
        }
    }

    pub fn start(&self) -> WorldPoint {
        self.points[0]
    }

    pub fn end(&self) -> WorldPoint {
        *self.points.last().expect("paths are never empty")
    }

    /// Recomputes `coverage_fraction` against `cov`. Each segment counts as
    /// covered when its midpoint is.
    pub fn measure_coverage(&mut self, cov: &RssField) {
        self.coverage_fraction = coverage_fraction(&self.points, cov);
    }

    /// Point reached after travelling `s` meters (clamped to the ends).
    pub fn point_at(&self, s: f64) -> WorldPoint {
        let mut remaining = s.max(0.0);
        for w in self.points.windows(2) {
            let seg = w[0].distance(w[1]);
            if remaining <= seg {
                return if seg > 0.0 { w[0].lerp(w[1], remaining / seg) } else { w[1] };
            }
            remaining -= seg;
        }
        self.end()
    }

    /// Plain-text point list, one `x y` pair per line.
    pub fn to_text(&self) -> String {
        self.points.iter().map(|p| format!("{} {}\n", p.x, p.y)).collect()
    }

    pub fn from_text(text: &str) -> Result<Path> {
        let points = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(n, l)| {
                let mut it = l.split_whitespace().map(str::parse::<f64>);
                match (it.next(), it.next(), it.next()) {
                    (Some(Ok(x)), Some(Ok(y)), None) => Ok(WorldPoint::new(x, y)),
                    _ => Err(Error::MapParse {
                        line: n + 1,
                        column: 1,
                        message: "expected `x y`".into(),
                    }),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if points.is_empty() {
            return Err(Error::MapParse {
                line: 1,
                column: 1,
                message: "empty path".into(),
            });
        }
        Ok(Path::new(points))
    }
}

pub fn coverage_fraction(points: &[WorldPoint], cov: &RssField) -> f64 {
    let mut total = 0.0;
    let mut covered = 0.0;
    for w in points.windows(2) {
        let seg = w[0].distance(w[1]);
        total += seg;
        if cov.covers(w[0].lerp(w[1], 0.5)) {
            covered += seg;
        }
    }
    if total > 0.0 {
        covered / total
    } else if points.first().is_some_and(|&p| cov.covers(p)) {
        1.0
    } else {
        0.0
    }
}

/// Plans a path from `start` to `goal` on a prepared coverage field.
///
/// The front is propagated from the goal so that descent from the start
/// flows toward it. `blocked` cells get zero speed except the two endpoints.
pub fn plan_on_coverage(
    map: &GridMap,
    start: CellIndex,
    goal: CellIndex,
    cov: &RssField,
    blocked: &[CellIndex],
    w_c: f64,
    params: &RadioParams,
) -> Result<Path> {
    for cell in [start, goal] {
        if !map.contains(cell) {
            let p = WorldPoint::new(cell.col as f64, cell.row as f64);
            return Err(Error::OutOfBounds { x: p.x, y: p.y });
        }
        if !map.is_free(cell) {
            let p = map.to_world(cell);
            return Err(Error::OnObstacle { x: p.x, y: p.y });
        }
    }
    let others: Vec<CellIndex> = blocked
        .iter()
        .copied()
        .filter(|&c| c != start && c != goal)
        .collect();
    let speed = comm_velocity(map, cov, &others, w_c, params)?;
    let distance = solve_eikonal(&speed, goal)?;
    let mut path = extract_path(&distance, start)?;
    path.measure_coverage(cov);
    Ok(path)
}

/// Communication-aware shortest path for one robot.
///
/// Coverage is the combination of every transmitter in `relay_sources`.
/// With no sources the speed field is the plain obstacle field.
pub fn ca_fmm_path(
    map: &GridMap,
    start: CellIndex,
    goal: CellIndex,
    relay_sources: &[WorldPoint],
    params: &RadioParams,
    w_c: f64,
) -> Result<Path> {
    let cov = if relay_sources.is_empty() {
        RssField::silent(map, params.gamma)
    } else {
        let fields = relay_sources
            .iter()
            .map(|&tx| coverage_field(map, tx, params))
            .collect::<Result<Vec<_>>>()?;
        combine_coverage(&fields)?
    };
    plan_on_coverage(map, start, goal, &cov, &[], w_c, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridmap::parse_map;
    use crate::radio::NO_SIGNAL;

    #[test]
    fn base_velocity_cases() {
        let open = GridMap::open(3, 2, 0.5).unwrap();
        assert!(base_velocity(&open).speeds().iter().all(|&s| s == 1.0));
        let map = parse_map("width 3\nheight 1\n.#%\n").unwrap();
        let f = base_velocity(&map);
        assert_eq!(f.speeds(), &[1.0, 0.0, 0.0]);
        assert_eq!(f.speeds().len(), map.len());
    }

    fn field_with(map: &GridMap, values: &[f64]) -> RssField {
        RssField::from_values(map, -70.0, values.to_vec()).unwrap()
    }

    #[test]
    fn comm_velocity_normalisation() {
        let map = GridMap::open(4, 1, 0.5).unwrap();
        let p = RadioParams::default();
        let rss_ref = p.rss_ref();
        let cov = field_with(&map, &[NO_SIGNAL, -70.0, rss_ref, (rss_ref - 70.0) / 2.0]);
        let f = comm_velocity(&map, &cov, &[], 1.0, &p).unwrap();
        assert_eq!(f.speeds()[0], 1.0);
        assert_eq!(f.speeds()[1], 1.0);
        assert_eq!(f.speeds()[2], 2.0);
        assert!((f.speeds()[3] - 1.5).abs() < 1e-12);

        let blocked = comm_velocity(&map, &cov, &[CellIndex::new(2, 0)], 1.0, &p).unwrap();
        assert_eq!(blocked.speeds()[2], 0.0);
    }

    #[test]
    fn comm_velocity_rejects_degenerate_reference() {
        let map = GridMap::open(2, 1, 0.5).unwrap();
        let p = RadioParams {
            p_tx: -40.0,
            l0: 40.0,
            ..RadioParams::default()
        };
        let cov = RssField::silent(&map, p.gamma);
        assert!(matches!(
            comm_velocity(&map, &cov, &[], 1.0, &p),
            Err(Error::InvalidRadio(_))
        ));
    }

    #[test]
    fn path_text_round_trip() {
        let path = Path::new(vec![WorldPoint::new(0.25, 0.25), WorldPoint::new(1.25, 0.75)]);
        let back = Path::from_text(&path.to_text()).unwrap();
        assert_eq!(back.points, path.points);
        assert_eq!(back.length, path.length);
    }

    #[test]
    fn point_at_walks_the_polyline() {
        let path = Path::new(vec![
            WorldPoint::new(0.0, 0.0),
            WorldPoint::new(1.0, 0.0),
            WorldPoint::new(1.0, 2.0),
        ]);
        assert_eq!(path.point_at(0.5), WorldPoint::new(0.5, 0.0));
        assert_eq!(path.point_at(2.0), WorldPoint::new(1.0, 1.0));
        assert_eq!(path.point_at(10.0), WorldPoint::new(1.0, 2.0));
    }

    #[test]
    fn empty_sources_match_plain_fmm() {
        let map = parse_map(
            "width 8\nheight 6\n\
             ........\n\
             ..##....\n\
             ..##....\n\
             ..##.#..\n\
             .....#..\n\
             ........\n",
        )
        .unwrap();
        let p = RadioParams::default();
        let start = CellIndex::new(0, 0);
        let goal = CellIndex::new(7, 5);
        let ca = ca_fmm_path(&map, start, goal, &[], &p, 1.0).unwrap();
        let plain = extract_path(&solve_eikonal(&base_velocity(&map), goal).unwrap(), start).unwrap();
        assert_eq!(ca.points, plain.points);
        assert_eq!(ca.coverage_fraction, 0.0);
    }

    #[test]
    fn walled_off_goal_is_unreachable() {
        let map = parse_map("width 5\nheight 3\n..#..\n..#..\n..#..\n").unwrap();
        let err = ca_fmm_path(&map, CellIndex::new(0, 0), CellIndex::new(4, 2), &[], &RadioParams::default(), 1.0);
        assert!(matches!(err, Err(Error::Unreachable { .. })), "{err:?}");
    }
}
