//! Random rooms-and-corridors scenarios.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use relaynet::connectivity::check_feasibility;
use relaynet::gridmap::{CellIndex, GridMap, Material};
use relaynet::mission::{Knobs, Scenario};
use relaynet::radio::RadioParams;
use relaynet::{Error, Result};

/// Number of whole-scenario resamples before a trial is skipped.
pub const MAX_RESAMPLES: usize = 20;

/// Map and team layout for generated scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    /// Map width in cells.
    pub width: usize,
    /// Map height in cells.
    pub height: usize,
    pub resolution: f64,
    /// Room pitch in cells.
    pub room_size: usize,
    /// Door gap width in cells.
    pub door_width: usize,
    /// Probability that a wall segment between two rooms exists.
    pub density: f64,
    /// Share of existing wall segments built from glass.
    pub glass_fraction: f64,
    /// Robots per scenario; the goal count when omitted.
    pub robots: Option<usize>,
    pub radio: RadioParams,
    pub w_c: f64,
    pub knobs: Knobs,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            width: 80,
            height: 80,
            resolution: 0.5,
            room_size: 16,
            door_width: 3,
            density: 0.7,
            glass_fraction: 0.2,
            robots: None,
            radio: RadioParams::default(),
            w_c: 1.0,
            knobs: Knobs::default(),
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width < 4 || self.height < 4 {
            return Err(Error::Scenario("generated maps need at least 4x4 cells".into()));
        }
        if !(self.resolution > 0.0) {
            return Err(Error::Scenario("resolution must be positive".into()));
        }
        if self.room_size < self.door_width + 3 {
            return Err(Error::Scenario("rooms must be wider than their doors".into()));
        }
        if !(0.0..=1.0).contains(&self.density) || !(0.0..=1.0).contains(&self.glass_fraction) {
            return Err(Error::Scenario("density and glass_fraction must lie in [0, 1]".into()));
        }
        self.radio.validate()
    }
}

/// Rooms on a regular pitch separated by wall segments with one door each.
pub fn rooms_map(config: &GeneratorConfig, rng: &mut ChaCha8Rng) -> Result<GridMap> {
    let (w, h, pitch) = (config.width, config.height, config.room_size);
    let mut map = GridMap::open(w, h, config.resolution)?;
    let segment = |map: &mut GridMap, cells: Vec<CellIndex>, rng: &mut ChaCha8Rng| {
        if cells.len() <= config.door_width + 1 || !rng.random_bool(config.density) {
            return;
        }
        let material = if rng.random_bool(config.glass_fraction) {
            Material::Glass
        } else {
            Material::Wall
        };
        let door = rng.random_range(1..cells.len() - config.door_width);
        for (i, c) in cells.into_iter().enumerate() {
            if !(door..door + config.door_width).contains(&i) {
                map.set(c, material);
            }
        }
    };
    for x in (pitch..w).step_by(pitch) {
        for y0 in (0..h).step_by(pitch) {
            let cells = (y0..(y0 + pitch).min(h)).map(|y| CellIndex::new(x, y)).collect();
            segment(&mut map, cells, rng);
        }
    }
    for y in (pitch..h).step_by(pitch) {
        for x0 in (0..w).step_by(pitch) {
            let cells = (x0..(x0 + pitch).min(w))
                .map(|x| CellIndex::new(x, y))
                .filter(|&c| x0 == 0 || c.col % pitch != 0)
                .collect();
            segment(&mut map, cells, rng);
        }
    }
    Ok(map)
}

/// One random scenario with `n_goals` goals, resampled until the
/// feasibility test passes. Errors after [`MAX_RESAMPLES`] attempts.
pub fn generate_scenario(config: &GeneratorConfig, n_goals: usize, seed: u64) -> Result<Scenario> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_robots = config.robots.unwrap_or(n_goals);
    let mut last = None;
    for attempt in 0..MAX_RESAMPLES {
        match sample(config, n_goals, n_robots, &mut rng) {
            Ok(s) => return Ok(s),
            Err(e) => {
                log::debug!("seed {seed}: attempt {attempt} rejected: {e}");
                last = Some(e);
            }
        }
    }
    Err(last.unwrap_or_else(|| Error::Scenario("generator produced no scenario".into())))
}

fn sample(config: &GeneratorConfig, n_goals: usize, n_robots: usize, rng: &mut ChaCha8Rng) -> Result<Scenario> {
    let map = rooms_map(config, rng)?;
    let pitch = config.room_size;
    let (rooms_x, rooms_y) = (map.width().div_ceil(pitch), map.height().div_ceil(pitch));

    // Base station in the middle of a room on the map border.
    let mut edge_rooms = Vec::new();
    for ry in 0..rooms_y {
        for rx in 0..rooms_x {
            if rx == 0 || ry == 0 || rx + 1 == rooms_x || ry + 1 == rooms_y {
                edge_rooms.push((rx, ry));
            }
        }
    }
    let (rx, ry) = edge_rooms[rng.random_range(0..edge_rooms.len())];
    let centre = CellIndex::new(
        (rx * pitch + pitch / 2).min(map.width() - 1),
        (ry * pitch + pitch / 2).min(map.height() - 1),
    );
    let order = bfs_order(&map, centre);
    if order.len() < 1 + n_robots + n_goals {
        return Err(Error::Scenario("not enough free cells".into()));
    }
    let bs = order[0];
    let starts: Vec<CellIndex> = order[1..=n_robots].to_vec();

    let reachable: Vec<CellIndex> = order[1 + n_robots..].to_vec();
    let min_sep = 2.0 * map.resolution();
    let mut goals: Vec<CellIndex> = Vec::new();
    let mut tries = 0;
    while goals.len() < n_goals {
        tries += 1;
        if tries > 100 * n_goals + 1000 {
            return Err(Error::Scenario("could not place goals".into()));
        }
        let c = reachable[rng.random_range(0..reachable.len())];
        let p = map.to_world(c);
        if goals.iter().all(|&g| map.to_world(g).distance(p) >= min_sep) {
            goals.push(c);
        }
    }

    let bs_pt = map.to_world(bs);
    let goal_pts: Vec<_> = goals.iter().map(|&g| map.to_world(g)).collect();
    let report = check_feasibility(&map, bs_pt, &goal_pts, n_robots, &config.radio)?;
    if !report.feasible {
        return Err(Error::Infeasible(Box::new(report)));
    }
    let starts = starts.iter().map(|&c| map.to_world(c)).collect();
    let mut scenario = Scenario::new(map, bs_pt, starts, goal_pts, config.radio.clone());
    scenario.w_c = config.w_c;
    scenario.knobs = config.knobs.clone();
    Ok(scenario)
}

/// Free cells reachable from `from`, nearest first.
fn bfs_order(map: &GridMap, from: CellIndex) -> Vec<CellIndex> {
    if !map.is_free(from) {
        return Vec::new();
    }
    let mut seen = vec![false; map.len()];
    seen[map.index(from)] = true;
    let mut order = vec![from];
    let mut queue = VecDeque::from([from]);
    while let Some(c) = queue.pop_front() {
        for n in map.neighbors4(c) {
            if map.is_free(n) && !seen[map.index(n)] {
                seen[map.index(n)] = true;
                order.push(n);
                queue.push_back(n);
            }
        }
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_scenario() {
        let config = GeneratorConfig::default();
        let a = generate_scenario(&config, 6, 11).unwrap();
        let b = generate_scenario(&config, 6, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.goals.len(), 6);
        assert_eq!(a.robot_starts.len(), 6);
        a.validate().unwrap();
    }

    #[test]
    fn goals_keep_their_distance() {
        let config = GeneratorConfig::default();
        let s = generate_scenario(&config, 15, 3).unwrap();
        for (i, a) in s.goals.iter().enumerate() {
            for b in &s.goals[i + 1..] {
                assert!(a.distance(*b) >= 2.0 * config.resolution - 1e-9);
            }
        }
    }

    #[test]
    fn full_density_builds_walls_with_doors() {
        let config = GeneratorConfig {
            density: 1.0,
            glass_fraction: 0.0,
            ..GeneratorConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let map = rooms_map(&config, &mut rng).unwrap();
        let walls = map.cells().iter().filter(|&&m| m == Material::Wall).count();
        assert!(walls > 0);
        // Every free cell is reachable through the doors.
        let free = map.cells().iter().filter(|&&m| m == Material::Free).count();
        assert_eq!(bfs_order(&map, CellIndex::new(1, 1)).len(), free);
    }
}
