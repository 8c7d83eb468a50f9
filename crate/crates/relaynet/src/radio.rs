//! Indoor propagation model and coverage fields.
//!
//! Path loss follows the log-distance multi-wall form
//!
//! ```text
//! L = L0 + 10·n·log10(d) + S + M
//! ```
//!
//! where `S` sums a fixed attenuation per crossed wall or glass run and `M` is
//! zero-mean Gaussian multipath fading. The exponent and fading variance switch
//! between line-of-sight and non-line-of-sight regimes per transmitter/receiver
//! pair. Planning always uses the deterministic model (`M = 0`).

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridmap::{CellIndex, GridMap, Material, WorldPoint};

/// Transmitter/receiver separations below this are clamped (or rejected by
/// [`path_loss`]) to stay away from the `log10` singularity.
pub const MIN_SEPARATION: f64 = 0.1;

/// Value carried by obstacle cells in an [`RssField`].
pub const NO_SIGNAL: f64 = f64::NEG_INFINITY;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioParams {
    /// Transmit power, dBm.
    pub p_tx: f64,
    /// Path loss at 1 m, dB.
    pub l0: f64,
    pub n_los: f64,
    pub n_nlos: f64,
    /// Attenuation per crossed wall run, dB.
    pub a_wall: f64,
    /// Attenuation per crossed glass run, dB.
    pub a_glass: f64,
    /// Multipath variance, dB².
    pub sigma2_los: f64,
    pub sigma2_nlos: f64,
    /// Communication threshold, dBm.
    pub gamma: f64,
    /// Multipath safety factor used by [`coverage_distance`].
    pub margin_k: f64,
    pub seed: u64,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            p_tx: 10.0,
            l0: 40.0,
            n_los: 1.7,
            n_nlos: 1.4,
            a_wall: 10.0,
            a_glass: 2.5,
            sigma2_los: 3.45,
            sigma2_nlos: 3.25,
            gamma: -70.0,
            margin_k: 0.0,
            seed: 0,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.p_tx,
            self.l0,
            self.n_los,
            self.n_nlos,
            self.a_wall,
            self.a_glass,
            self.sigma2_los,
            self.sigma2_nlos,
            self.gamma,
            self.margin_k,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidRadio("all parameters must be finite".into()));
        }
        let checks = [
            (self.l0 >= 0.0, "l0 must be >= 0"),
            (self.a_wall >= 0.0, "a_wall must be >= 0"),
            (self.a_glass >= 0.0, "a_glass must be >= 0"),
            (self.sigma2_los >= 0.0, "sigma2_los must be >= 0"),
            (self.sigma2_nlos >= 0.0, "sigma2_nlos must be >= 0"),
            (self.n_los > 0.0, "n_los must be > 0"),
            (self.n_nlos > 0.0, "n_nlos must be > 0"),
            (self.margin_k >= 0.0, "margin_k must be >= 0"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::InvalidRadio((*msg).into())),
            None => Ok(()),
        }
    }

    /// Strongest plausible signal, `p_tx − l0`, used to normalise coverage.
    pub fn rss_ref(&self) -> f64 {
        self.p_tx - self.l0
    }
}

/// Whether the multipath term is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fading {
    Deterministic,
    /// Seeded Gaussian draw. `stream` separates independent draws for the
    /// same link, e.g. one per simulation tick.
    Stochastic { stream: u64 },
}

/// Path loss in dB between two points.
///
/// Errors when the points are closer than [`MIN_SEPARATION`].
pub fn path_loss(
    map: &GridMap,
    tx: WorldPoint,
    rx: WorldPoint,
    params: &RadioParams,
    fading: Fading,
) -> Result<f64> {
    let d = tx.distance(rx);
    if d < MIN_SEPARATION {
        return Err(Error::TooClose {
            distance: d,
            minimum: MIN_SEPARATION,
        });
    }
    loss_clamped(map, tx, rx, params, fading)
}

/// Received power `p_tx − L` with the separation clamped to
/// [`MIN_SEPARATION`].
pub fn received_power(
    map: &GridMap,
    tx: WorldPoint,
    rx: WorldPoint,
    params: &RadioParams,
    fading: Fading,
) -> Result<f64> {
    Ok(params.p_tx - loss_clamped(map, tx, rx, params, fading)?)
}

fn loss_clamped(
    map: &GridMap,
    tx: WorldPoint,
    rx: WorldPoint,
    params: &RadioParams,
    fading: Fading,
) -> Result<f64> {
    let crossings = map.count_traversals(tx, rx)?;
    let los = crossings.total() == 0;
    let d = tx.distance(rx).max(MIN_SEPARATION);
    let n = if los { params.n_los } else { params.n_nlos };
    let shadowing = crossings.walls as f64 * params.a_wall + crossings.glass as f64 * params.a_glass;
    let multipath = match fading {
        Fading::Deterministic => 0.0,
        Fading::Stochastic { stream } => {
            let sigma2 = if los { params.sigma2_los } else { params.sigma2_nlos };
            multipath_draw(params.seed, stream, map.to_cell(tx)?, map.to_cell(rx)?, sigma2)
        }
    };
    Ok(params.l0 + 10.0 * n * d.log10() + shadowing + multipath)
}

/// One Gaussian multipath sample for the link between two cells.
///
/// The RNG seed mixes `(seed, stream, cell pair)` with the cell pair in
/// canonical order, so the draw is independent of evaluation order and of
/// the link direction.
pub fn multipath_draw(seed: u64, stream: u64, a: CellIndex, b: CellIndex, sigma2: f64) -> f64 {
    if sigma2 == 0.0 {
        return 0.0;
    }
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let mut h = splitmix(seed);
    for v in [stream, lo.col as u64, lo.row as u64, hi.col as u64, hi.row as u64] {
        h = splitmix(h ^ v);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(h);
    Normal::new(0.0, sigma2.sqrt())
        .expect("variance validated as non-negative")
        .sample(&mut rng)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Largest LoS distance at which the signal, minus `margin_k` standard
/// deviations of LoS multipath, still meets the threshold.
pub fn coverage_distance(params: &RadioParams) -> Result<f64> {
    params.validate()?;
    let budget = params.p_tx - params.l0 - params.margin_k * params.sigma2_los.sqrt() - params.gamma;
    let d = 10f64.powf(budget / (10.0 * params.n_los));
    if !d.is_finite() || d < MIN_SEPARATION {
        return Err(Error::InfeasibleRadio { distance: d });
    }
    Ok(d)
}

/// Received signal strength over a map.
#[derive(Debug, Clone, PartialEq)]
pub struct RssField {
    width: usize,
    height: usize,
    resolution: f64,
    gamma: f64,
    values: Vec<f64>,
    sources: Vec<WorldPoint>,
}

impl RssField {
    /// A field with no transmitters: every cell carries [`NO_SIGNAL`].
    pub fn silent(map: &GridMap, gamma: f64) -> Self {
        RssField {
            width: map.width(),
            height: map.height(),
            resolution: map.resolution(),
            gamma,
            values: vec![NO_SIGNAL; map.len()],
            sources: Vec::new(),
        }
    }

    /// Wraps precomputed per-cell values (row-major, dBm).
    pub fn from_values(map: &GridMap, gamma: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() != map.len() {
            return Err(Error::MismatchedGrids);
        }
        Ok(RssField {
            width: map.width(),
            height: map.height(),
            resolution: map.resolution(),
            gamma,
            values,
            sources: Vec::new(),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn sources(&self) -> &[WorldPoint] {
        &self.sources
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, cell: CellIndex) -> f64 {
        self.values[cell.row * self.width + cell.col]
    }

    pub fn is_covered(&self, cell: CellIndex) -> bool {
        self.value(cell) >= self.gamma
    }

    /// Coverage at a world point (false outside the grid).
    pub fn covers(&self, p: WorldPoint) -> bool {
        if p.x < 0.0 || p.y < 0.0 {
            return false;
        }
        let col = (p.x / self.resolution).floor() as usize;
        let row = (p.y / self.resolution).floor() as usize;
        col < self.width && row < self.height && self.is_covered(CellIndex::new(col, row))
    }

    pub fn mask(&self) -> Vec<bool> {
        self.values.iter().map(|&v| v >= self.gamma).collect()
    }

    pub fn covered_count(&self) -> usize {
        self.values.iter().filter(|&&v| v >= self.gamma).count()
    }

    pub fn aligned_with(&self, map: &GridMap) -> bool {
        self.width == map.width() && self.height == map.height() && self.resolution == map.resolution()
    }

    /// Matrix of dBm values, one grid row per line.
    pub fn to_csv(&self) -> String {
        write_matrix(self.width, &self.values)
    }
}

/// Coverage of a single transmitter evaluated at every cell center.
pub fn coverage_field(map: &GridMap, tx: WorldPoint, params: &RadioParams) -> Result<RssField> {
    params.validate()?;
    map.free_cell(tx)?;
    let mut field = RssField::silent(map, params.gamma);
    for (i, value) in field.values.iter_mut().enumerate() {
        let cell = map.cell_at(i);
        if map.material(cell) != Material::Free {
            continue;
        }
        *value = received_power(map, tx, map.to_world(cell), params, Fading::Deterministic)?;
    }
    field.sources.push(tx);
    Ok(field)
}

/// Cellwise maximum of several fields over the same grid.
pub fn combine_coverage(fields: &[RssField]) -> Result<RssField> {
    let (first, rest) = fields.split_first().ok_or(Error::MismatchedGrids)?;
    let mut out = first.clone();
    for f in rest {
        if f.width != out.width || f.height != out.height || f.resolution != out.resolution {
            return Err(Error::MismatchedGrids);
        }
        for (o, &v) in out.values.iter_mut().zip(&f.values) {
            *o = o.max(v);
        }
        for s in &f.sources {
            if !out.sources.contains(s) {
                out.sources.push(*s);
            }
        }
    }
    Ok(out)
}

/// Memoised deterministic link budget between cell centers.
///
/// Planning and execution query the same cell pairs many times; the cache
/// key is the unordered pair, matching the model's reciprocity.
pub struct LinkModel<'a> {
    map: &'a GridMap,
    params: &'a RadioParams,
    rss: RefCell<HashMap<(usize, usize), f64>>,
    fields: RefCell<HashMap<usize, RssField>>,
}

impl<'a> LinkModel<'a> {
    pub fn new(map: &'a GridMap, params: &'a RadioParams) -> Self {
        LinkModel {
            map,
            params,
            rss: RefCell::new(HashMap::new()),
            fields: RefCell::new(HashMap::new()),
        }
    }

    pub fn map(&self) -> &'a GridMap {
        self.map
    }

    pub fn params(&self) -> &'a RadioParams {
        self.params
    }

    pub fn rss(&self, a: CellIndex, b: CellIndex) -> f64 {
        let (ia, ib) = (self.map.index(a), self.map.index(b));
        let key = (ia.min(ib), ia.max(ib));
        if let Some(&v) = self.rss.borrow().get(&key) {
            return v;
        }
        let (lo, hi) = (self.map.cell_at(key.0), self.map.cell_at(key.1));
        let v = received_power(
            self.map,
            self.map.to_world(lo),
            self.map.to_world(hi),
            self.params,
            Fading::Deterministic,
        )
        .expect("cells are inside the map");
        self.rss.borrow_mut().insert(key, v);
        v
    }

    /// Mutual threshold test; both directions are evaluated by the same
    /// reciprocal model.
    pub fn linked(&self, a: CellIndex, b: CellIndex) -> bool {
        self.rss(a, b) >= self.params.gamma
    }

    /// Link test with a multipath draw on top of the cached mean.
    pub fn linked_noisy(&self, a: CellIndex, b: CellIndex, stream: u64) -> bool {
        let los = self
            .map
            .line_of_sight(self.map.to_world(a), self.map.to_world(b))
            .expect("cells are inside the map");
        let sigma2 = if los { self.params.sigma2_los } else { self.params.sigma2_nlos };
        let m = multipath_draw(self.params.seed, stream, a, b, sigma2);
        self.rss(a, b) - m >= self.params.gamma
    }

    /// Cached single-transmitter coverage for a free cell.
    pub fn field(&self, tx: CellIndex) -> RssField {
        let key = self.map.index(tx);
        if let Some(f) = self.fields.borrow().get(&key) {
            return f.clone();
        }
        let f = coverage_field(self.map, self.map.to_world(tx), self.params)
            .expect("transmitter cell is free");
        self.fields.borrow_mut().insert(key, f.clone());
        f
    }

    /// Combined coverage of several transmitter cells.
    pub fn coverage(&self, txs: &[CellIndex]) -> RssField {
        if txs.is_empty() {
            return RssField::silent(self.map, self.params.gamma);
        }
        let fields: Vec<RssField> = txs.iter().map(|&c| self.field(c)).collect();
        combine_coverage(&fields).expect("fields share the map grid")
    }
}

/// Writes a row-major matrix as comma-separated lines.
pub fn write_matrix(width: usize, values: &[f64]) -> String {
    let mut out = String::new();
    for row in values.chunks(width) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write!(out, "{v}").expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

/// Reads a matrix written by [`write_matrix`], returning `(width, values)`.
pub fn read_matrix(text: &str) -> Result<(usize, Vec<f64>)> {
    let mut width = None;
    let mut values = Vec::new();
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row: Vec<f64> = line
            .split(',')
            .enumerate()
            .map(|(c, s)| {
                s.trim().parse::<f64>().map_err(|_| Error::MapParse {
                    line: n + 1,
                    column: c + 1,
                    message: format!("bad number `{s}`"),
                })
            })
            .collect::<Result<_>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::MapParse {
                    line: n + 1,
                    column: 1,
                    message: format!("row has {} values, expected {w}", row.len()),
                })
            }
            _ => {}
        }
        values.extend(row);
    }
    Ok((width.unwrap_or(0), values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridmap::parse_map;
    use approx::assert_abs_diff_eq;

    fn open(n: usize) -> GridMap {
        GridMap::open(n, n, 0.5).unwrap()
    }

    #[test]
    fn defaults_match_published_parameter_set() {
        let p = RadioParams::default();
        assert_eq!(p.gamma, -70.0);
        assert_eq!((p.a_wall, p.a_glass), (10.0, 2.5));
        assert_eq!((p.n_los, p.n_nlos), (1.7, 1.4));
        assert_eq!((p.sigma2_los, p.sigma2_nlos), (3.45, 3.25));
        p.validate().unwrap();
    }

    #[test]
    fn one_meter_los_loss_is_l0() {
        let map = open(10);
        let p = RadioParams::default();
        let l = path_loss(
            &map,
            WorldPoint::new(1.25, 1.25),
            WorldPoint::new(2.25, 1.25),
            &p,
            Fading::Deterministic,
        )
        .unwrap();
        assert_abs_diff_eq!(l, p.l0, epsilon = 1e-12);
    }

    #[test]
    fn ten_meters_through_one_wall() {
        // 24 cells at 0.5 m, one wall column in the middle. The pair is NLoS
        // because a wall is crossed; force n_nlos = n_los = 1.7 to match the
        // hand evaluation l0 + 17 + 10.
        let mut raster = String::new();
        for _ in 0..3 {
            raster.push_str(&".".repeat(12));
            raster.push('#');
            raster.push_str(&".".repeat(11));
            raster.push('\n');
        }
        let map = parse_map(&format!("width 24\nheight 3\nresolution 0.5\n{raster}")).unwrap();
        let p = RadioParams {
            n_nlos: 1.7,
            ..RadioParams::default()
        };
        let l = path_loss(
            &map,
            WorldPoint::new(0.75, 0.75),
            WorldPoint::new(10.75, 0.75),
            &p,
            Fading::Deterministic,
        )
        .unwrap();
        assert_abs_diff_eq!(l, p.l0 + 17.0 + 10.0, epsilon = 1e-9);
    }

    #[test]
    fn too_close_is_rejected_but_clamped_internally() {
        let map = open(4);
        let p = RadioParams::default();
        let a = WorldPoint::new(0.25, 0.25);
        let b = WorldPoint::new(0.30, 0.25);
        assert!(matches!(
            path_loss(&map, a, b, &p, Fading::Deterministic),
            Err(Error::TooClose { .. })
        ));
        let rss = received_power(&map, a, a, &p, Fading::Deterministic).unwrap();
        assert_abs_diff_eq!(rss, p.p_tx - p.l0 + 17.0, epsilon = 1e-12);
    }

    #[test]
    fn stochastic_draw_is_repeatable() {
        let map = open(20);
        let p = RadioParams {
            seed: 42,
            ..RadioParams::default()
        };
        let a = WorldPoint::new(1.0, 1.0);
        let b = WorldPoint::new(6.0, 3.0);
        let f = Fading::Stochastic { stream: 3 };
        let l1 = path_loss(&map, a, b, &p, f).unwrap();
        let l2 = path_loss(&map, a, b, &p, f).unwrap();
        assert_eq!(l1, l2);
        let l3 = path_loss(&map, b, a, &p, f).unwrap();
        assert_eq!(l1, l3);
        let det = path_loss(&map, a, b, &p, Fading::Deterministic).unwrap();
        assert_ne!(l1, det);
    }

    #[test]
    fn coverage_distance_closed_form() {
        let p = RadioParams {
            p_tx: 10.0,
            l0: 40.0,
            gamma: -70.0,
            margin_k: 0.0,
            n_los: 1.7,
            ..RadioParams::default()
        };
        // 10^(40/17), evaluated independently.
        assert_abs_diff_eq!(coverage_distance(&p).unwrap(), 225.393_390_473_479_1, epsilon = 1e-9);

        let boundary = RadioParams {
            p_tx: -30.0,
            l0: 40.0,
            gamma: -70.0,
            ..RadioParams::default()
        };
        assert_abs_diff_eq!(coverage_distance(&boundary).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn margin_shrinks_coverage_distance() {
        let mut p = RadioParams::default();
        let mut last = coverage_distance(&p).unwrap();
        for k in [0.5, 1.0, 2.0, 3.0] {
            p.margin_k = k;
            let d = coverage_distance(&p).unwrap();
            assert!(d < last);
            last = d;
        }
    }

    #[test]
    fn hopeless_power_is_infeasible() {
        let p = RadioParams {
            p_tx: -200.0,
            ..RadioParams::default()
        };
        assert!(matches!(coverage_distance(&p), Err(Error::InfeasibleRadio { .. })));
    }

    #[test]
    fn transmitter_cell_is_covered() {
        let map = open(10);
        let p = RadioParams::default();
        let tx = map.to_world(CellIndex::new(4, 4));
        let f = coverage_field(&map, tx, &p).unwrap();
        assert!(f.is_covered(CellIndex::new(4, 4)));
        assert_abs_diff_eq!(f.value(CellIndex::new(4, 4)), p.p_tx - p.l0 + 17.0, epsilon = 1e-12);
    }

    #[test]
    fn walls_lower_signal_by_their_attenuation() {
        // Transmitter at col 0; receivers 10 cells (5 m) away, one row
        // clear, another behind two single-cell wall columns.
        let mut rows = vec![".".repeat(12); 3];
        rows[2] = "...#...#....".into();
        let map = parse_map(&format!(
            "width 12\nheight 3\nresolution 0.5\n{}\n",
            rows.join("\n")
        ))
        .unwrap();
        let p = RadioParams {
            n_nlos: 1.7,
            ..RadioParams::default()
        };
        let clear = received_power(
            &map,
            map.to_world(CellIndex::new(0, 0)),
            map.to_world(CellIndex::new(10, 0)),
            &p,
            Fading::Deterministic,
        )
        .unwrap();
        let blocked = received_power(
            &map,
            map.to_world(CellIndex::new(0, 2)),
            map.to_world(CellIndex::new(10, 2)),
            &p,
            Fading::Deterministic,
        )
        .unwrap();
        assert_abs_diff_eq!(clear - blocked, 2.0 * p.a_wall, epsilon = 1e-9);
    }

    #[test]
    fn walled_map_covers_only_transmitter() {
        let raster = ["###", "#.#", "###"];
        let map = parse_map(&format!("width 3\nheight 3\n{}\n", raster.join("\n"))).unwrap();
        let f = coverage_field(&map, map.to_world(CellIndex::new(1, 1)), &RadioParams::default()).unwrap();
        assert_eq!(f.covered_count(), 1);
        assert!(f.is_covered(CellIndex::new(1, 1)));
        assert_eq!(f.value(CellIndex::new(0, 0)), NO_SIGNAL);
    }

    #[test]
    fn transmitter_on_obstacle_is_rejected() {
        let map = parse_map("width 2\nheight 1\n.#\n").unwrap();
        let err = coverage_field(&map, map.to_world(CellIndex::new(1, 0)), &RadioParams::default());
        assert!(matches!(err, Err(Error::OnObstacle { .. })));
    }

    #[test]
    fn combine_identity_and_idempotence() {
        let map = open(8);
        let p = RadioParams::default();
        let f = coverage_field(&map, WorldPoint::new(1.0, 1.0), &p).unwrap();
        assert_eq!(combine_coverage(std::slice::from_ref(&f)).unwrap(), f);
        assert_eq!(combine_coverage(&[f.clone(), f.clone()]).unwrap(), f);
    }

    #[test]
    fn disjoint_disks_add_up() {
        // Two rooms sealed from each other by a thick wall; each transmitter
        // covers exactly its own room, hand-counted as 3×5 = 15 cells.
        let raster = "\
...#####...
...#####...
...#####...
...#####...
...#####...";
        let map = parse_map(&format!("width 11\nheight 5\n{raster}\n")).unwrap();
        let p = RadioParams {
            a_wall: 200.0,
            ..RadioParams::default()
        };
        let a = coverage_field(&map, map.to_world(CellIndex::new(1, 2)), &p).unwrap();
        let b = coverage_field(&map, map.to_world(CellIndex::new(9, 2)), &p).unwrap();
        assert_eq!(a.covered_count(), 15);
        assert_eq!(b.covered_count(), 15);
        assert_eq!(combine_coverage(&[a, b]).unwrap().covered_count(), 30);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let p = RadioParams::default();
        let a = coverage_field(&open(4), WorldPoint::new(0.5, 0.5), &p).unwrap();
        let b = coverage_field(&open(5), WorldPoint::new(0.5, 0.5), &p).unwrap();
        assert!(matches!(combine_coverage(&[a, b]), Err(Error::MismatchedGrids)));
    }

    #[test]
    fn csv_round_trip() {
        let mut raster = vec!["....".to_string(); 3];
        raster[1] = ".#..".into();
        let map = parse_map(&format!("width 4\nheight 3\n{}\n", raster.join("\n"))).unwrap();
        let f = coverage_field(&map, WorldPoint::new(0.25, 0.25), &RadioParams::default()).unwrap();
        let (w, values) = read_matrix(&f.to_csv()).unwrap();
        assert_eq!(w, 4);
        assert_eq!(values, f.values());
    }

    #[test]
    fn link_model_matches_direct_evaluation() {
        let map = open(12);
        let p = RadioParams::default();
        let links = LinkModel::new(&map, &p);
        let (a, b) = (CellIndex::new(1, 2), CellIndex::new(9, 7));
        let direct = received_power(&map, map.to_world(a), map.to_world(b), &p, Fading::Deterministic).unwrap();
        assert_eq!(links.rss(a, b), direct);
        assert_eq!(links.rss(b, a), direct);
    }
}
