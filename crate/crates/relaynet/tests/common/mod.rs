//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use relaynet::gridmap::{CellIndex, GridMap, Material, WorldPoint};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random map with each cell a wall with probability `density`.
pub fn random_map(rng: &mut ChaCha8Rng, width: usize, height: usize, density: f64) -> GridMap {
    let cells = (0..width * height)
        .map(|_| if rng.random_bool(density) { Material::Wall } else { Material::Free })
        .collect();
    GridMap::new(width, height, 1.0, cells).unwrap()
}

pub fn random_free_cell(rng: &mut ChaCha8Rng, map: &GridMap) -> CellIndex {
    loop {
        let c = CellIndex::new(rng.random_range(0..map.width()), rng.random_range(0..map.height()));
        if map.is_free(c) {
            return c;
        }
    }
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// 8-neighbour Dijkstra from `source` with edge cost `2·step/(F(u)+F(v))`.
/// Diagonal moves need both side cells passable. Unreachable cells are
/// infinite.
pub fn dijkstra8(width: usize, height: usize, resolution: f64, speed: &[f64], source: CellIndex) -> Vec<f64> {
    let idx = |c: usize, r: usize| r * width + c;
    let mut dist = vec![f64::INFINITY; width * height];
    let s = idx(source.col, source.row);
    dist[s] = 0.0;
    let mut heap = BinaryHeap::from([Item(0.0, s)]);
    while let Some(Item(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        let (uc, ur) = ((u % width) as isize, (u / width) as isize);
        for dr in -1isize..=1 {
            for dc in -1isize..=1 {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let (vc, vr) = (uc + dc, ur + dr);
                if vc < 0 || vr < 0 || vc >= width as isize || vr >= height as isize {
                    continue;
                }
                let v = idx(vc as usize, vr as usize);
                if speed[v] <= 0.0 {
                    continue;
                }
                if dr != 0 && dc != 0 {
                    let a = idx(vc as usize, ur as usize);
                    let b = idx(uc as usize, vr as usize);
                    if speed[a] <= 0.0 || speed[b] <= 0.0 {
                        continue;
                    }
                }
                let step = if dr != 0 && dc != 0 { resolution * 2f64.sqrt() } else { resolution };
                let nd = d + 2.0 * step / (speed[u] + speed[v]);
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Item(nd, v));
                }
            }
        }
    }
    dist
}

/// Brute-force assignment over the zero-padded square: the minimum total
/// cost and, among assignments within `1e-9·max(1,|C*|)` of it, the
/// lexicographically smallest column vector (dummy columns last).
pub fn brute_assignment(costs: &[Vec<f64>]) -> (f64, Vec<Option<usize>>) {
    let rows = costs.len();
    let cols = costs[0].len();
    let n = rows.max(cols);
    let at = |i: usize, j: usize| if i < rows && j < cols { costs[i][j] } else { 0.0 };
    let mut all = Vec::new();
    permutations(n, &mut Vec::new(), &mut vec![false; n], &mut all);
    let cost_of = |p: &[usize]| p.iter().enumerate().map(|(i, &j)| at(i, j)).sum::<f64>();
    let best = all.iter().map(|p| cost_of(p)).fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * best.abs().max(1.0);
    // `all` is generated in lexicographic order.
    let chosen = all.iter().find(|p| cost_of(p) <= best + tol).unwrap();
    let robot_to_task = (0..rows).map(|i| (chosen[i] < cols).then_some(chosen[i])).collect();
    let real: f64 = (0..rows).filter(|&i| chosen[i] < cols).map(|i| costs[i][chosen[i]]).sum();
    (real, robot_to_task)
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize, prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
    if prefix.len() == n {
        out.push(prefix.clone());
        return;
    }
    for j in 0..n {
        if !used[j] {
            used[j] = true;
            prefix.push(j);
            permutations(n, prefix, used, out);
            prefix.pop();
            used[j] = false;
        }
    }
}

/// Hop counts from node 0 by plain breadth-first search over an adjacency
/// matrix.
pub fn bfs_depths(adj: &[Vec<bool>]) -> Vec<Option<usize>> {
    let n = adj.len();
    let mut depth = vec![None; n];
    depth[0] = Some(0);
    let mut queue = VecDeque::from([0]);
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if adj[u][v] && depth[v].is_none() {
                depth[v] = Some(depth[u].unwrap() + 1);
                queue.push_back(v);
            }
        }
    }
    depth
}

/// Cheapest `start → waypoints → dest` tour under `cost`, by enumerating
/// every order; among orders within a relative `1e-9` of the first minimum
/// found, the lexicographically first wins.
pub fn best_tour(m: usize, cost: impl Fn(usize, usize) -> f64) -> (Vec<usize>, f64) {
    // Node 0 is the start, 1..=m the waypoints, m+1 the destination.
    let mut all = Vec::new();
    permutations(m, &mut Vec::new(), &mut vec![false; m], &mut all);
    let total = |p: &[usize]| {
        let mut prev = 0;
        let mut t = 0.0;
        for &w in p {
            t += cost(prev, w + 1);
            prev = w + 1;
        }
        t + cost(prev, m + 1)
    };
    let mut best: Option<(Vec<usize>, f64)> = None;
    for p in all {
        let c = total(&p);
        match &best {
            Some((_, b)) if c >= b - 1e-9 * b.abs().max(1.0) => {}
            _ => best = Some((p, c)),
        }
    }
    best.unwrap()
}

/// Log-distance path loss by hand: `l0 + 10·n·log10(d) + walls·a_wall +
/// glass·a_glass`, with the exponent chosen by whether anything is crossed.
#[allow(clippy::too_many_arguments)]
pub fn hand_loss(l0: f64, n_los: f64, n_nlos: f64, a_wall: f64, a_glass: f64, d: f64, walls: usize, glass: usize) -> f64 {
    let n = if walls + glass == 0 { n_los } else { n_nlos };
    l0 + 10.0 * n * d.log10() + walls as f64 * a_wall + glass as f64 * a_glass
}

pub fn pt(x: f64, y: f64) -> WorldPoint {
    WorldPoint::new(x, y)
}
