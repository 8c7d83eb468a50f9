//! Occupancy-grid world model.
//!
//! Cells are addressed by `(col, row)`; row 0 is the first raster line of the
//! map document. A cell `(c, r)` covers the world square
//! `[c·res, (c+1)·res) × [r·res, (r+1)·res)`, so `y` grows with the row index.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Resolution assumed when a map document has no `resolution` line.
pub const DEFAULT_RESOLUTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Material {
    Free,
    Wall,
    Glass,
}

impl Material {
    pub fn from_char(c: char) -> Option<Material> {
        match c {
            '.' => Some(Material::Free),
            '#' => Some(Material::Wall),
            '%' => Some(Material::Glass),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Material::Free => '.',
            Material::Wall => '#',
            Material::Glass => '%',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct CellIndex {
    pub col: usize,
    pub row: usize,
}

impl CellIndex {
    pub const fn new(col: usize, row: usize) -> Self {
        CellIndex { col, row }
    }
}

impl From<[usize; 2]> for CellIndex {
    fn from([col, row]: [usize; 2]) -> Self {
        CellIndex { col, row }
    }
}

impl From<CellIndex> for [usize; 2] {
    fn from(c: CellIndex) -> Self {
        [c.col, c.row]
    }
}

/// A position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct WorldPoint {
    pub x: f64,
    pub y: f64,
}

impl WorldPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        WorldPoint { x, y }
    }

    pub fn distance(self, other: WorldPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn lerp(self, other: WorldPoint, t: f64) -> WorldPoint {
        WorldPoint::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }
}

impl From<[f64; 2]> for WorldPoint {
    fn from([x, y]: [f64; 2]) -> Self {
        WorldPoint { x, y }
    }
}

impl From<WorldPoint> for [f64; 2] {
    fn from(p: WorldPoint) -> Self {
        [p.x, p.y]
    }
}

/// Obstacle runs crossed by a straight segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TraversalCount {
    pub walls: usize,
    pub glass: usize,
}

impl TraversalCount {
    pub fn total(self) -> usize {
        self.walls + self.glass
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    width: usize,
    height: usize,
    resolution: f64,
    cells: Vec<Material>,
}

impl GridMap {
    pub fn new(width: usize, height: usize, resolution: f64, cells: Vec<Material>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Scenario("map must be at least 1x1".into()));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::Scenario(format!("resolution must be positive, got {resolution}")));
        }
        if cells.len() != width * height {
            return Err(Error::Scenario(format!(
                "expected {} cells, got {}",
                width * height,
                cells.len()
            )));
        }
        Ok(GridMap {
            width,
            height,
            resolution,
            cells,
        })
    }

    /// An obstacle-free map.
    pub fn open(width: usize, height: usize, resolution: f64) -> Result<Self> {
        GridMap::new(width, height, resolution, vec![Material::Free; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Material] {
        &self.cells
    }

    /// Flat row-major index of a cell.
    pub fn index(&self, cell: CellIndex) -> usize {
        cell.row * self.width + cell.col
    }

    pub fn cell_at(&self, index: usize) -> CellIndex {
        CellIndex::new(index % self.width, index / self.width)
    }

    pub fn contains(&self, cell: CellIndex) -> bool {
        cell.col < self.width && cell.row < self.height
    }

    pub fn material(&self, cell: CellIndex) -> Material {
        self.cells[self.index(cell)]
    }

    pub fn is_free(&self, cell: CellIndex) -> bool {
        self.material(cell) == Material::Free
    }

    pub fn set(&mut self, cell: CellIndex, material: Material) {
        let i = self.index(cell);
        self.cells[i] = material;
    }

    pub fn world_width(&self) -> f64 {
        self.width as f64 * self.resolution
    }

    pub fn world_height(&self) -> f64 {
        self.height as f64 * self.resolution
    }

    pub fn in_bounds(&self, p: WorldPoint) -> bool {
        p.x >= 0.0 && p.y >= 0.0 && p.x < self.world_width() && p.y < self.world_height()
    }

    pub fn to_cell(&self, p: WorldPoint) -> Result<CellIndex> {
        if !self.in_bounds(p) {
            return Err(Error::OutOfBounds { x: p.x, y: p.y });
        }
        let col = ((p.x / self.resolution).floor() as usize).min(self.width - 1);
        let row = ((p.y / self.resolution).floor() as usize).min(self.height - 1);
        Ok(CellIndex::new(col, row))
    }

    /// Center of a cell.
    pub fn to_world(&self, cell: CellIndex) -> WorldPoint {
        WorldPoint::new(
            (cell.col as f64 + 0.5) * self.resolution,
            (cell.row as f64 + 0.5) * self.resolution,
        )
    }

    /// Snaps a point to the center of its cell.
    pub fn snap(&self, p: WorldPoint) -> Result<WorldPoint> {
        Ok(self.to_world(self.to_cell(p)?))
    }

    /// Resolves a point to a cell, rejecting anything that is not `Free`.
    pub fn free_cell(&self, p: WorldPoint) -> Result<CellIndex> {
        let cell = self.to_cell(p)?;
        if !self.is_free(cell) {
            return Err(Error::OnObstacle { x: p.x, y: p.y });
        }
        Ok(cell)
    }

    /// 4-neighbours inside the map.
    pub fn neighbors4(&self, cell: CellIndex) -> impl Iterator<Item = CellIndex> + '_ {
        const OFFSETS: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
        OFFSETS.iter().filter_map(move |&(dc, dr)| self.offset(cell, dc, dr))
    }

    pub fn offset(&self, cell: CellIndex, dc: isize, dr: isize) -> Option<CellIndex> {
        let col = cell.col.checked_add_signed(dc)?;
        let row = cell.row.checked_add_signed(dr)?;
        let next = CellIndex::new(col, row);
        self.contains(next).then_some(next)
    }

    /// Counts the wall and glass runs crossed by the segment `a → b`.
    ///
    /// The segment is sampled at a quarter of the resolution. Each maximal run
    /// of consecutive samples on the same obstacle material counts once, so a
    /// wall several cells thick is a single crossing. Endpoints are put in a
    /// canonical order first, which makes the count exactly symmetric.
    pub fn count_traversals(&self, a: WorldPoint, b: WorldPoint) -> Result<TraversalCount> {
        for p in [a, b] {
            if !self.in_bounds(p) {
                return Err(Error::OutOfBounds { x: p.x, y: p.y });
            }
        }
        let (a, b) = if (a.x, a.y) <= (b.x, b.y) { (a, b) } else { (b, a) };
        Ok(self.walk(a, b))
    }

    fn walk(&self, a: WorldPoint, b: WorldPoint) -> TraversalCount {
        let step = self.resolution / 4.0;
        let samples = (a.distance(b) / step).ceil().max(1.0) as usize;
        let mut count = TraversalCount::default();
        let mut previous: Option<Material> = None;
        for i in 0..=samples {
            let p = a.lerp(b, i as f64 / samples as f64);
            // Endpoints are in bounds and the map is convex, so only rounding
            // at the far edge can push a sample out; clamp it back.
            let col = ((p.x / self.resolution).floor().max(0.0) as usize).min(self.width - 1);
            let row = ((p.y / self.resolution).floor().max(0.0) as usize).min(self.height - 1);
            let material = self.material(CellIndex::new(col, row));
            if previous != Some(material) {
                match material {
                    Material::Wall => count.walls += 1,
                    Material::Glass => count.glass += 1,
                    Material::Free => {}
                }
            }
            previous = Some(material);
        }
        count
    }

    pub fn line_of_sight(&self, a: WorldPoint, b: WorldPoint) -> Result<bool> {
        Ok(self.count_traversals(a, b)?.total() == 0)
    }
}

impl fmt::Display for GridMap {
    /// Writes the map in the text format read by [`parse_map`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "width {}", self.width)?;
        writeln!(f, "height {}", self.height)?;
        writeln!(f, "resolution {}", self.resolution)?;
        for row in self.cells.chunks(self.width) {
            let line: String = row.iter().map(|m| m.as_char()).collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

/// Parses a map document.
///
/// The header holds `width N`, `height N` and optionally `resolution R`
/// lines (any order, blank lines ignored). The raster follows: exactly
/// `height` rows of `width` characters drawn from `.` (free), `#` (wall) and
/// `%` (glass).
pub fn parse_map(text: &str) -> Result<GridMap> {
    let mut width = None;
    let mut height = None;
    let mut resolution = None;
    let mut lines = text.lines().enumerate().peekable();

    while let Some(&(n, line)) = lines.peek() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            lines.next();
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        let key = parts.next().unwrap_or_default();
        let slot = match key {
            "width" => HeaderSlot::Width,
            "height" => HeaderSlot::Height,
            "resolution" => HeaderSlot::Resolution,
            _ => break,
        };
        let value = parts.next().ok_or_else(|| parse_error(n, 1, format!("`{key}` needs a value")))?;
        if parts.next().is_some() {
            return Err(parse_error(n, 1, format!("trailing tokens after `{key}`")));
        }
        let column = line.find(value).map_or(1, |c| c + 1);
        match slot {
            HeaderSlot::Width => width = Some(parse_dimension(value, n, column)?),
            HeaderSlot::Height => height = Some(parse_dimension(value, n, column)?),
            HeaderSlot::Resolution => {
                let r: f64 = value
                    .parse()
                    .map_err(|_| parse_error(n, column, format!("bad resolution `{value}`")))?;
                if !(r > 0.0 && r.is_finite()) {
                    return Err(parse_error(n, column, "resolution must be positive".into()));
                }
                resolution = Some(r);
            }
        }
        lines.next();
    }

    let width = width.ok_or_else(|| parse_error(0, 1, "missing `width` header".into()))?;
    let height = height.ok_or_else(|| parse_error(0, 1, "missing `height` header".into()))?;
    let resolution = resolution.unwrap_or(DEFAULT_RESOLUTION);

    let mut cells = Vec::with_capacity(width * height);
    let mut rows = 0;
    let mut last_line = 0;
    for (n, line) in lines {
        last_line = n;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if rows == height {
            return Err(parse_error(n, 1, format!("more than {height} raster rows")));
        }
        let mut len = 0;
        for (i, c) in line.chars().enumerate() {
            let m = Material::from_char(c)
                .ok_or_else(|| parse_error(n, i + 1, format!("unknown cell character `{c}`")))?;
            cells.push(m);
            len += 1;
        }
        if len != width {
            return Err(parse_error(
                n,
                len.min(width) + 1,
                format!("ragged raster: row has {len} cells, expected {width}"),
            ));
        }
        rows += 1;
    }
    if rows != height {
        return Err(parse_error(
            last_line,
            1,
            format!("raster has {rows} rows, expected {height}"),
        ));
    }
    GridMap::new(width, height, resolution, cells)
}

enum HeaderSlot {
    Width,
    Height,
    Resolution,
}

fn parse_dimension(value: &str, line: usize, column: usize) -> Result<usize> {
    match value.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(parse_error(line, column, format!("bad dimension `{value}`"))),
    }
}

fn parse_error(line: usize, column: usize, message: String) -> Error {
    Error::MapParse {
        line: line + 1,
        column,
        message,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 10×10 fixture: a wall three cells thick (cols 4..=6) spanning rows
    /// 0..=7 with a doorway at rows 8..=9, and a glass pane at col 8.
    pub(crate) fn fixture() -> GridMap {
        let raster = "\
....###.%.
....###.%.
....###.%.
....###...
....###...
....###...
....###...
....###...
..........
..........";
        parse_map(&format!("width 10\nheight 10\nresolution 1\n{raster}\n")).unwrap()
    }

    fn center(map: &GridMap, col: usize, row: usize) -> WorldPoint {
        map.to_world(CellIndex::new(col, row))
    }

    #[test]
    fn parses_single_cell() {
        let map = parse_map("width 1\nheight 1\n.\n").unwrap();
        assert_eq!(map.cells(), &[Material::Free]);
        assert_eq!(map.resolution(), DEFAULT_RESOLUTION);
    }

    #[test]
    fn parses_materials_in_row_order() {
        let map = parse_map("width 2\nheight 2\nresolution 0.25\n.#\n%.\n").unwrap();
        assert_eq!(
            map.cells(),
            &[Material::Free, Material::Wall, Material::Glass, Material::Free]
        );
        assert_eq!(map.resolution(), 0.25);
    }

    #[test]
    fn rejects_ragged_rows() {
        let err = parse_map("width 3\nheight 2\n...\n..\n").unwrap_err();
        match err {
            Error::MapParse { line, message, .. } => {
                assert_eq!(line, 4);
                assert!(message.contains("ragged"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_character_with_position() {
        let err = parse_map("width 3\nheight 1\n.x.\n").unwrap_err();
        assert!(matches!(err, Error::MapParse { line: 3, column: 2, .. }), "{err:?}");
    }

    #[test]
    fn rejects_bad_header() {
        assert!(matches!(
            parse_map("width two\nheight 1\n.\n"),
            Err(Error::MapParse { line: 1, .. })
        ));
        assert!(parse_map("height 1\n.\n").is_err());
        assert!(parse_map("width 1\nheight 2\n.\n").is_err());
    }

    #[test]
    fn display_round_trips() {
        let map = fixture();
        assert_eq!(parse_map(&map.to_string()).unwrap(), map);
    }

    #[test]
    fn cell_world_conversion() {
        let map = GridMap::open(4, 3, 0.5).unwrap();
        let c = CellIndex::new(3, 2);
        assert_eq!(map.to_cell(map.to_world(c)).unwrap(), c);
        assert!(map.to_cell(WorldPoint::new(2.0, 0.1)).is_err());
        assert!(map.to_cell(WorldPoint::new(-0.01, 0.1)).is_err());
    }

    #[test]
    fn zero_length_segment_crosses_nothing() {
        let map = fixture();
        let p = center(&map, 1, 1);
        assert_eq!(map.count_traversals(p, p).unwrap(), TraversalCount::default());
    }

    #[test]
    fn thick_wall_counts_once() {
        // Row 2 from col 1 to col 7: samples walk cells 4, 5, 6 of one run.
        let map = fixture();
        let count = map
            .count_traversals(center(&map, 1, 2), center(&map, 7, 2))
            .unwrap();
        assert_eq!(count, TraversalCount { walls: 1, glass: 0 });
    }

    #[test]
    fn glass_and_wall_are_counted_separately() {
        let map = fixture();
        let count = map
            .count_traversals(center(&map, 1, 0), center(&map, 9, 0))
            .unwrap();
        assert_eq!(count, TraversalCount { walls: 1, glass: 1 });
    }

    #[test]
    fn doorway_row_is_open() {
        let map = fixture();
        let count = map
            .count_traversals(center(&map, 0, 9), center(&map, 9, 9))
            .unwrap();
        assert_eq!(count, TraversalCount::default());
    }

    #[test]
    fn line_of_sight_cases() {
        let map = fixture();
        assert!(map.line_of_sight(center(&map, 0, 0), center(&map, 1, 0)).unwrap());
        // Around the corridor corner: (2,2) to (7,8) crosses the wall block.
        assert!(!map.line_of_sight(center(&map, 2, 2), center(&map, 7, 8)).unwrap());
        assert!(!map.line_of_sight(center(&map, 1, 2), center(&map, 7, 2)).unwrap());
    }

    #[test]
    fn out_of_bounds_endpoint_is_an_error() {
        let map = fixture();
        let err = map
            .count_traversals(center(&map, 0, 0), WorldPoint::new(11.0, 0.5))
            .unwrap_err();
        assert!(matches!(err, Error::OutOfBounds { .. }));
    }

    #[test]
    fn free_cell_rejects_obstacles() {
        let map = fixture();
        assert!(matches!(
            map.free_cell(center(&map, 5, 0)),
            Err(Error::OnObstacle { .. })
        ));
        assert!(matches!(
            map.free_cell(center(&map, 8, 0)),
            Err(Error::OnObstacle { .. })
        ));
    }
}
