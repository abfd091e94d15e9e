// Copyright contributors to the Interleave project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Logical-level compute-time estimation: layouts, greedy mapping, ASAP
//! scheduling and slice-by-slice routing with lattice surgery or movement.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::benchmarks::{InteractionGraph, LogicalGate, LogicalProgram};
use crate::geometry::{group_side, round_duration, GeometryError};

#[derive(Debug, Error, PartialEq)]
pub enum RoutingError {
    #[error("{n} program qubits exceed data capacity {capacity}")]
    Capacity { n: usize, capacity: usize },
    #[error("program has T gates but the layout has no factory")]
    NoFactory,
    #[error("no routing path for gate {0} even on an idle device")]
    Unroutable(usize),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayoutKind {
    Compact,
    Fast,
}

impl FromStr for LayoutKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "compact" => Ok(LayoutKind::Compact),
            "fast" => Ok(LayoutKind::Fast),
            _ => Err(format!("unknown layout `{s}` (expected compact or fast)")),
        }
    }
}

impl fmt::Display for LayoutKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LayoutKind::Compact => "compact",
            LayoutKind::Fast => "fast",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RoutingMode {
    StandardLs,
    InterleavedLs,
    Movement,
}

impl FromStr for RoutingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sls" | "standard_ls" => Ok(RoutingMode::StandardLs),
            "ils" | "interleaved_ls" => Ok(RoutingMode::InterleavedLs),
            "movement" => Ok(RoutingMode::Movement),
            _ => Err(format!(
                "unknown mode `{s}` (expected sls, ils or movement)"
            )),
        }
    }
}

impl fmt::Display for RoutingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RoutingMode::StandardLs => "standard_ls",
            RoutingMode::InterleavedLs => "interleaved_ls",
            RoutingMode::Movement => "movement",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tile {
    Data,
    Routing,
    Factory,
    Empty,
}

/// Tile grid; every tile is one group of `k` logical patches.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceLayout {
    pub kind: LayoutKind,
    pub k: usize,
    pub d: usize,
    pub rows: usize,
    pub cols: usize,
    pub tiles: Vec<Tile>,
    /// Data tiles in row-major order.
    pub data_tiles: Vec<usize>,
    pub factories: Vec<usize>,
}

impl DeviceLayout {
    /// Smallest near-square layout holding `n` program qubits in groups of
    /// `k`, with `max(1, n / 8)` factories split between the top and bottom
    /// edges. The first and last columns are routing spines joining the lanes.
    pub fn new(kind: LayoutKind, n: usize, k: usize, d: usize) -> Result<Self, RoutingError> {
        if k == 0 {
            return Err(RoutingError::Parameter(
                "group size must be positive".into(),
            ));
        }
        let groups = n.div_ceil(k).max(1);
        let factories = (n / 8).max(1);
        let top = factories.div_ceil(2);
        let width = (groups as f64)
            .sqrt()
            .ceil()
            .max(top.saturating_sub(2) as f64)
            .max(1.0) as usize;
        let data_rows = groups.div_ceil(width);

        let mut body: Vec<bool> = vec![false];
        match kind {
            LayoutKind::Compact => {
                for r in 0..data_rows {
                    body.push(true);
                    if r % 2 == 1 || r + 1 == data_rows {
                        body.push(false);
                    }
                }
            }
            LayoutKind::Fast => {
                for _ in 0..data_rows {
                    body.push(true);
                    body.push(false);
                }
            }
        }

        let cols = width + 2;
        let rows = body.len() + 2;
        let mut tiles = vec![Tile::Empty; rows * cols];
        for (i, &is_data) in body.iter().enumerate() {
            let r = i + 1;
            for c in 0..cols {
                tiles[r * cols + c] = if is_data && c > 0 && c + 1 < cols {
                    Tile::Data
                } else {
                    Tile::Routing
                };
            }
        }
        let mut place = |row: usize, count: usize| {
            for j in 0..count {
                let c = ((2 * j + 1) * cols) / (2 * count);
                tiles[row * cols + c] = Tile::Factory;
            }
        };
        place(0, top);
        place(rows - 1, factories - top);

        let data_tiles = (0..tiles.len())
            .filter(|&t| tiles[t] == Tile::Data)
            .collect();
        let factories = (0..tiles.len())
            .filter(|&t| tiles[t] == Tile::Factory)
            .collect();
        Ok(DeviceLayout {
            kind,
            k,
            d,
            rows,
            cols,
            tiles,
            data_tiles,
            factories,
        })
    }

    /// Parses the `ascii` format (D, R, F, `.`), one row per line.
    pub fn from_ascii(
        kind: LayoutKind,
        k: usize,
        d: usize,
        text: &str,
    ) -> Result<Self, RoutingError> {
        let lines: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect();
        let cols = lines.first().map_or(0, |l| l.len());
        if cols == 0 || lines.iter().any(|l| l.len() != cols) {
            return Err(RoutingError::Parameter(
                "layout rows must be nonempty and equally long".into(),
            ));
        }
        let mut tiles = Vec::with_capacity(lines.len() * cols);
        for ch in lines.iter().flat_map(|l| l.chars()) {
            tiles.push(match ch {
                'D' => Tile::Data,
                'R' => Tile::Routing,
                'F' => Tile::Factory,
                '.' => Tile::Empty,
                _ => return Err(RoutingError::Parameter(format!("unknown tile `{ch}`"))),
            });
        }
        let data_tiles = (0..tiles.len())
            .filter(|&t| tiles[t] == Tile::Data)
            .collect();
        let factories = (0..tiles.len())
            .filter(|&t| tiles[t] == Tile::Factory)
            .collect();
        Ok(DeviceLayout {
            kind,
            k,
            d,
            rows: lines.len(),
            cols,
            tiles,
            data_tiles,
            factories,
        })
    }

    pub fn data_capacity(&self) -> usize {
        self.data_tiles.len() * self.k
    }

    pub fn count(&self, kind: Tile) -> usize {
        self.tiles.iter().filter(|&&t| t == kind).count()
    }

    pub fn neighbors(&self, t: usize) -> impl Iterator<Item = usize> + '_ {
        let (r, c) = (t / self.cols, t % self.cols);
        let up = (r > 0).then(|| t - self.cols);
        let left = (c > 0).then(|| t - 1);
        let right = (c + 1 < self.cols).then_some(t + 1);
        let down = (r + 1 < self.rows).then_some(t + self.cols);
        [up, left, right, down].into_iter().flatten()
    }

    /// Tile-centre distance in units of the tile pitch.
    pub fn center_distance(&self, a: usize, b: usize) -> f64 {
        let (ra, ca) = ((a / self.cols) as f64, (a % self.cols) as f64);
        let (rb, cb) = ((b / self.cols) as f64, (b % self.cols) as f64);
        (ra - rb).hypot(ca - cb)
    }

    /// CSV dump: `tile,row,col,kind`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("tile,row,col,kind\n");
        for (i, t) in self.tiles.iter().enumerate() {
            let kind = match t {
                Tile::Data => "data",
                Tile::Routing => "routing",
                Tile::Factory => "factory",
                Tile::Empty => "empty",
            };
            s.push_str(&format!("{i},{},{},{kind}\n", i / self.cols, i % self.cols));
        }
        s
    }

    /// One character per tile: D data, R routing, F factory, `.` empty.
    pub fn ascii(&self) -> String {
        let mut s = String::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                s.push(match self.tiles[r * self.cols + c] {
                    Tile::Data => 'D',
                    Tile::Routing => 'R',
                    Tile::Factory => 'F',
                    Tile::Empty => '.',
                });
            }
            s.push('\n');
        }
        s
    }
}

/// Device parameters for routing estimates, in micrometres and microseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteConfig {
    pub k: usize,
    pub d: usize,
    pub t_1q_us: f64,
    pub t_2q_us: f64,
    pub t_meas_us: f64,
    pub speed_um_per_us: f64,
    pub spacing_um: f64,
}

impl Default for RouteConfig {
    fn default() -> Self {
        RouteConfig {
            k: 16,
            d: 9,
            t_1q_us: 1.0,
            t_2q_us: 5.0,
            t_meas_us: 1e4,
            speed_um_per_us: 0.55,
            spacing_um: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingParams {
    pub d: usize,
    pub t_round_us: f64,
    pub speed_um_per_us: f64,
    pub pitch_um: f64,
}

impl TimingParams {
    /// Round time with `4k` serialized CZ layers; a tile spans the bounding
    /// box of a rotated distance-`d` patch, `2d` clusters of `sqrt(k)` atoms.
    pub fn derive(cfg: &RouteConfig, k: usize) -> Result<Self, RoutingError> {
        let side = group_side(k)?;
        if !(cfg.speed_um_per_us > 0.0) || !(cfg.t_meas_us >= 0.0) || cfg.d == 0 {
            return Err(RoutingError::Parameter(
                "speed, t_meas and d must be positive".into(),
            ));
        }
        let t_round_us = round_duration(4 * k, 3, cfg.t_2q_us, cfg.t_1q_us, cfg.t_meas_us);
        if !(t_round_us > 0.0) {
            return Err(RoutingError::Parameter(
                "round time must be positive".into(),
            ));
        }
        Ok(TimingParams {
            d: cfg.d,
            t_round_us,
            speed_um_per_us: cfg.speed_um_per_us,
            pitch_um: 2.0 * cfg.d as f64 * side as f64 * cfg.spacing_um,
        })
    }

    pub fn rounds(&self, n: usize) -> f64 {
        (n * self.d) as f64 * self.t_round_us
    }

    /// One-way transit time between tiles `dist` pitches apart.
    pub fn transit(&self, dist: f64) -> f64 {
        dist * self.pitch_um / self.speed_um_per_us
    }
}

/// Group (index into `data_tiles`) of each program qubit.
///
/// Pairs are visited by descending CNOT count; both ends go into one group
/// while it has room, then leftovers fill groups in row-major order.
pub fn map_qubits(
    graph: &InteractionGraph,
    layout: &DeviceLayout,
) -> Result<Vec<usize>, RoutingError> {
    let capacity = layout.data_capacity();
    if graph.n > capacity {
        return Err(RoutingError::Capacity {
            n: graph.n,
            capacity,
        });
    }
    let k = layout.k;
    let mut free = vec![k; layout.data_tiles.len()];
    let mut group: Vec<Option<usize>> = vec![None; graph.n];
    let mut edges: Vec<((u32, u32), usize)> = graph.counts.iter().map(|(&e, &c)| (e, c)).collect();
    edges.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

    for ((a, b), _) in edges {
        let (a, b) = (a as usize, b as usize);
        match (group[a], group[b]) {
            (None, None) => {
                if let Some(g) = free.iter().position(|&f| f >= 2) {
                    group[a] = Some(g);
                    group[b] = Some(g);
                    free[g] -= 2;
                }
            }
            (Some(g), None) | (None, Some(g)) if free[g] > 0 => {
                group[a] = Some(g);
                group[b] = Some(g);
                free[g] -= 1;
            }
            _ => {}
        }
    }
    let mut next = 0;
    for slot in group.iter_mut().filter(|g| g.is_none()) {
        while free[next] == 0 {
            next += 1;
        }
        *slot = Some(next);
        free[next] -= 1;
    }
    Ok(group
        .into_iter()
        .map(|g| g.expect("every qubit placed"))
        .collect())
}

/// ASAP levels: gate indices per slice, each gate one slice after the
/// latest earlier gate sharing a qubit.
pub fn schedule_asap(program: &LogicalProgram) -> Vec<Vec<usize>> {
    let mut level = vec![0usize; program.n];
    let mut slices: Vec<Vec<usize>> = Vec::new();
    for (i, g) in program.gates.iter().enumerate() {
        let s = g.qubits().map(|q| level[q as usize]).max().unwrap_or(0);
        for q in g.qubits() {
            level[q as usize] = s + 1;
        }
        if slices.len() <= s {
            slices.resize(s + 1, Vec::new());
        }
        slices[s].push(i);
    }
    slices
}

/// Only the gates that cost routing time: T and CNOT.
pub fn routable(program: &LogicalProgram) -> LogicalProgram {
    LogicalProgram {
        n: program.n,
        gates: program
            .gates
            .iter()
            .copied()
            .filter(|g| matches!(g, LogicalGate::T(_) | LogicalGate::Cnot(..)))
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Cnot,
    T,
    Move,
}

/// One executed operation. `gate` indexes the routable gate list; MOVE
/// events carry the gate they serve.
#[derive(Debug, Clone, PartialEq)]
pub struct LogicalOpEvent {
    pub kind: EventKind,
    pub gate: usize,
    pub qubits: Vec<u32>,
    pub factory: Option<usize>,
    pub slice: usize,
    pub start_us: f64,
    pub end_us: f64,
    pub path: Vec<usize>,
}

impl fmt::Display for LogicalOpEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            EventKind::Cnot => "CNOT",
            EventKind::T => "T",
            EventKind::Move => "MOVE",
        };
        let qs: Vec<String> = self.qubits.iter().map(u32::to_string).collect();
        let path: Vec<String> = self.path.iter().map(usize::to_string).collect();
        write!(
            f,
            "{kind} gate={} qubits={} factory={} slice={} start={:.3} end={:.3} path={}",
            self.gate,
            qs.join(","),
            self.factory.map_or("-".to_string(), |x| x.to_string()),
            self.slice,
            self.start_us,
            self.end_us,
            if path.is_empty() {
                "-".to_string()
            } else {
                path.join(",")
            },
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimOutcome {
    pub total_us: f64,
    pub slices: usize,
    pub postponed: usize,
    /// Inter-group CNOTs that used the routing space or a move.
    pub routed_cnots: usize,
    pub transversal_cnots: usize,
    pub moves: usize,
    pub events: Vec<LogicalOpEvent>,
}

/// Mutable routing state over one slice: per-tile capacity in use and the
/// busy intervals of the movement channel.
struct SliceState {
    used: Vec<usize>,
    channel: Vec<(f64, f64)>,
}

impl SliceState {
    /// Earliest start at or after `t` for a channel hold of `len`.
    fn reserve(&mut self, t: f64, len: f64) -> f64 {
        let mut start = t;
        for &(a, b) in &self.channel {
            if start + len <= a {
                break;
            }
            start = start.max(b);
        }
        let at = self.channel.partition_point(|&(a, _)| a < start);
        self.channel.insert(at, (start, start + len));
        start
    }
}

struct Router<'a> {
    layout: &'a DeviceLayout,
    capacity: usize,
    routing_adj: Vec<Vec<usize>>,
    dist: Vec<u32>,
    queue: VecDeque<usize>,
}

impl<'a> Router<'a> {
    fn new(layout: &'a DeviceLayout, capacity: usize) -> Self {
        let n = layout.tiles.len();
        let routing_adj = (0..n)
            .map(|t| {
                let mut v: Vec<usize> = layout
                    .neighbors(t)
                    .filter(|&u| layout.tiles[u] == Tile::Routing)
                    .collect();
                v.sort_unstable();
                v
            })
            .collect();
        Router {
            layout,
            capacity,
            routing_adj,
            dist: vec![u32::MAX; n],
            queue: VecDeque::new(),
        }
    }

    /// Lexicographically smallest shortest path of free routing tiles from
    /// a neighbour of `from` to a tile accepted by `is_end`.
    fn path(
        &mut self,
        used: &[usize],
        from: usize,
        is_end: impl Fn(usize) -> bool,
    ) -> Option<Vec<usize>> {
        let free = |t: usize| used[t] < self.capacity;
        self.dist.fill(u32::MAX);
        self.queue.clear();
        for t in 0..self.layout.tiles.len() {
            if self.layout.tiles[t] == Tile::Routing && free(t) && is_end(t) {
                self.dist[t] = 0;
                self.queue.push_back(t);
            }
        }
        while let Some(t) = self.queue.pop_front() {
            for &u in &self.routing_adj[t] {
                if free(u) && self.dist[u] == u32::MAX {
                    self.dist[u] = self.dist[t] + 1;
                    self.queue.push_back(u);
                }
            }
        }
        let mut cur = *self.routing_adj[from]
            .iter()
            .filter(|&&t| self.dist[t] != u32::MAX)
            .min_by_key(|&&t| (self.dist[t], t))?;
        let mut path = vec![cur];
        while self.dist[cur] > 0 {
            cur = *self.routing_adj[cur]
                .iter()
                .find(|&&u| self.dist[u] == self.dist[cur] - 1)?;
            path.push(cur);
        }
        Some(path)
    }
}

/// Layout and mapping `simulate` uses for `mode`.
pub fn prepare(
    program: &LogicalProgram,
    kind: LayoutKind,
    mode: RoutingMode,
    cfg: &RouteConfig,
) -> Result<(DeviceLayout, Vec<usize>), RoutingError> {
    let k = if mode == RoutingMode::StandardLs {
        1
    } else {
        cfg.k
    };
    let layout = DeviceLayout::new(kind, program.n, k, cfg.d)?;
    let groups = map_qubits(&routable(program).interaction(), &layout)?;
    Ok((layout, groups))
}

/// Runs `program` (T and CNOT gates only are timed) slice by slice.
///
/// Each slice starts when the previous one ends. Gates whose qubit
/// predecessors have all finished are tried in program order; a gate that
/// finds no free path waits for the next slice.
pub fn simulate(
    program: &LogicalProgram,
    kind: LayoutKind,
    mode: RoutingMode,
    cfg: &RouteConfig,
    log: bool,
) -> Result<SimOutcome, RoutingError> {
    let (layout, groups) = prepare(program, kind, mode, cfg)?;
    simulate_mapped(program, &layout, &groups, mode, cfg, log)
}

/// As `simulate`, on a given layout with `groups[q]` indexing its data tiles.
/// Routing capacity is 1 in standard mode and the layout's `k` otherwise.
pub fn simulate_mapped(
    program: &LogicalProgram,
    layout: &DeviceLayout,
    groups: &[usize],
    mode: RoutingMode,
    cfg: &RouteConfig,
    log: bool,
) -> Result<SimOutcome, RoutingError> {
    let capacity = if mode == RoutingMode::StandardLs {
        1
    } else {
        layout.k
    };
    let timing = TimingParams::derive(cfg, layout.k)?;
    let ops = routable(program);
    ops.validate()
        .map_err(|e| RoutingError::Parameter(e.to_string()))?;
    if ops.count_t() > 0 && layout.factories.is_empty() {
        return Err(RoutingError::NoFactory);
    }
    if groups.len() != ops.n || groups.iter().any(|&g| g >= layout.data_tiles.len()) {
        return Err(RoutingError::Parameter(
            "mapping does not match program and layout".into(),
        ));
    }
    let tile_of = |q: u32| layout.data_tiles[groups[q as usize]];
    run(&ops, layout, capacity, &timing, mode, &tile_of, log)
}

fn run(
    ops: &LogicalProgram,
    layout: &DeviceLayout,
    capacity: usize,
    timing: &TimingParams,
    mode: RoutingMode,
    tile_of: &dyn Fn(u32) -> usize,
    log: bool,
) -> Result<SimOutcome, RoutingError> {
    let mut queues: Vec<VecDeque<usize>> = vec![VecDeque::new(); ops.n];
    for (i, g) in ops.gates.iter().enumerate() {
        for q in g.qubits() {
            queues[q as usize].push_back(i);
        }
    }
    let nearest_factory: HashMap<usize, (usize, f64)> = layout
        .data_tiles
        .iter()
        .filter_map(|&t| {
            layout
                .factories
                .iter()
                .map(|&f| (f, layout.center_distance(t, f)))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                .map(|x| (t, x))
        })
        .collect();

    let mut router = Router::new(layout, capacity);
    let factory_side: Vec<bool> = (0..layout.tiles.len())
        .map(|t| {
            layout.tiles[t] == Tile::Routing
                && layout
                    .neighbors(t)
                    .any(|u| layout.tiles[u] == Tile::Factory)
        })
        .collect();
    let mut out = SimOutcome::default();
    let mut state = SliceState {
        used: vec![0; layout.tiles.len()],
        channel: Vec::new(),
    };
    let mut now = 0.0f64;
    let mut remaining = ops.gates.len();
    let mut ready: Vec<usize> = Vec::new();

    while remaining > 0 {
        ready.clear();
        for q in &queues {
            if let Some(&g) = q.front() {
                if ops.gates[g]
                    .qubits()
                    .all(|p| queues[p as usize].front() == Some(&g))
                {
                    ready.push(g);
                }
            }
        }
        ready.sort_unstable();
        ready.dedup();
        state.used.fill(0);
        state.channel.clear();
        let mut end = now;
        let mut done = Vec::new();

        for &g in &ready {
            let gate = ops.gates[g];
            let qubits: Vec<u32> = gate.qubits().collect();
            let executed = match gate {
                LogicalGate::Cnot(a, b)
                    if mode != RoutingMode::StandardLs && tile_of(a) == tile_of(b) =>
                {
                    out.transversal_cnots += 1;
                    Some((EventKind::Cnot, now + timing.rounds(1), Vec::new(), None))
                }
                LogicalGate::Cnot(a, b) if mode == RoutingMode::Movement => {
                    let dist = layout.center_distance(tile_of(a), tile_of(b));
                    out.routed_cnots += 1;
                    let fin = movement(&mut state, &mut out, timing, now, dist, g, a, None, log);
                    Some((EventKind::Cnot, fin, Vec::new(), None))
                }
                LogicalGate::T(q) if mode == RoutingMode::Movement => {
                    let (f, dist) = nearest_factory[&tile_of(q)];
                    let fin = movement(&mut state, &mut out, timing, now, dist, g, q, Some(f), log);
                    Some((EventKind::T, fin, Vec::new(), Some(f)))
                }
                LogicalGate::Cnot(a, b) => {
                    let target = tile_of(b);
                    router
                        .path(&state.used, tile_of(a), |t| {
                            layout.neighbors(t).any(|u| u == target)
                        })
                        .map(|p| {
                            out.routed_cnots += 1;
                            (EventKind::Cnot, now + timing.rounds(2), p, None)
                        })
                }
                LogicalGate::T(q) => router
                    .path(&state.used, tile_of(q), |t| factory_side[t])
                    .map(|p| {
                        let last = *p.last().expect("paths are nonempty");
                        let f = layout
                            .neighbors(last)
                            .filter(|&u| layout.tiles[u] == Tile::Factory)
                            .min()
                            .expect("path ends beside a factory");
                        (EventKind::T, now + timing.rounds(1), p, Some(f))
                    }),
                _ => unreachable!("only T and CNOT are routed"),
            };
            match executed {
                Some((kind, fin, path, factory)) => {
                    for &t in &path {
                        state.used[t] += 1;
                    }
                    end = end.max(fin);
                    done.push(g);
                    if log {
                        out.events.push(LogicalOpEvent {
                            kind,
                            gate: g,
                            qubits,
                            factory,
                            slice: out.slices,
                            start_us: now,
                            end_us: fin,
                            path,
                        });
                    }
                }
                None => out.postponed += 1,
            }
        }
        if done.is_empty() {
            return Err(RoutingError::Unroutable(ready[0]));
        }
        for &g in &done {
            for q in ops.gates[g].qubits() {
                queues[q as usize].pop_front();
            }
        }
        remaining -= done.len();
        out.slices += 1;
        now = end;
    }
    out.total_us = now;
    Ok(out)
}

/// Out-and-back transit on the shared channel around a `d`-round
/// interaction; returns the completion time.
#[allow(clippy::too_many_arguments)]
fn movement(
    state: &mut SliceState,
    out: &mut SimOutcome,
    timing: &TimingParams,
    now: f64,
    dist: f64,
    gate: usize,
    qubit: u32,
    factory: Option<usize>,
    log: bool,
) -> f64 {
    let leg = timing.transit(dist);
    let go = state.reserve(now, leg);
    let back = state.reserve(go + leg + timing.rounds(1), leg);
    out.moves += 2;
    if log {
        for s in [go, back] {
            out.events.push(LogicalOpEvent {
                kind: EventKind::Move,
                gate,
                qubits: vec![qubit],
                factory,
                slice: out.slices,
                start_us: s,
                end_us: s + leg,
                path: Vec::new(),
            });
        }
    }
    back + leg
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AuditReport {
    pub capacity_violations: usize,
    pub move_overlaps: usize,
    pub missing_gates: usize,
    pub duplicate_gates: usize,
    pub order_violations: usize,
    pub bad_paths: usize,
}

impl AuditReport {
    pub fn clean(&self) -> bool {
        *self == AuditReport::default()
    }
}

/// Checks an event log against tile capacities, channel exclusivity,
/// gate conservation, per-qubit order and path shape.
pub fn audit(
    ops: &LogicalProgram,
    events: &[LogicalOpEvent],
    layout: &DeviceLayout,
    capacity: usize,
    tile_of: &dyn Fn(u32) -> usize,
) -> AuditReport {
    const EPS: f64 = 1e-6;
    let mut rep = AuditReport::default();

    let mut per_tile: HashMap<usize, Vec<(f64, i32)>> = HashMap::new();
    for e in events.iter().filter(|e| e.kind != EventKind::Move) {
        for &t in &e.path {
            per_tile
                .entry(t)
                .or_default()
                .extend([(e.start_us, 1), (e.end_us, -1)]);
        }
    }
    for marks in per_tile.values_mut() {
        marks.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut live = 0i32;
        for &(_, delta) in marks.iter() {
            live += delta;
            if live > capacity as i32 {
                rep.capacity_violations += 1;
            }
        }
    }

    let mut moves: Vec<(f64, f64)> = events
        .iter()
        .filter(|e| e.kind == EventKind::Move)
        .map(|e| (e.start_us, e.end_us))
        .collect();
    moves.sort_by(|a, b| a.0.total_cmp(&b.0));
    rep.move_overlaps = moves.windows(2).filter(|w| w[1].0 < w[0].1 - EPS).count();

    let mut seen = vec![0usize; ops.gates.len()];
    let mut span = vec![(0.0, 0.0); ops.gates.len()];
    for e in events.iter().filter(|e| e.kind != EventKind::Move) {
        seen[e.gate] += 1;
        span[e.gate] = (e.start_us, e.end_us);
        if !e.path.is_empty() {
            let ok_tiles = e.path.iter().all(|&t| layout.tiles[t] == Tile::Routing);
            let steps = e
                .path
                .windows(2)
                .all(|w| layout.neighbors(w[0]).any(|u| u == w[1]));
            let first = layout
                .neighbors(e.path[0])
                .any(|u| u == tile_of(e.qubits[0]));
            let last = *e.path.last().expect("nonempty");
            let end_ok = match (e.kind, e.factory) {
                (EventKind::T, Some(f)) => layout.neighbors(last).any(|u| u == f),
                (EventKind::Cnot, _) => layout.neighbors(last).any(|u| u == tile_of(e.qubits[1])),
                _ => false,
            };
            if !(ok_tiles && steps && first && end_ok) {
                rep.bad_paths += 1;
            }
        }
    }
    rep.missing_gates = seen.iter().filter(|&&c| c == 0).count();
    rep.duplicate_gates = seen.iter().filter(|&&c| c > 1).count();

    let mut last_end = vec![f64::NEG_INFINITY; ops.n];
    for (g, gate) in ops.gates.iter().enumerate() {
        if seen[g] == 0 {
            continue;
        }
        for q in gate.qubits() {
            if span[g].0 < last_end[q as usize] - EPS {
                rep.order_violations += 1;
            }
            last_end[q as usize] = span[g].1;
        }
    }
    rep
}

/// Simulates with a full event log and audits it.
pub fn simulate_audited(
    program: &LogicalProgram,
    kind: LayoutKind,
    mode: RoutingMode,
    cfg: &RouteConfig,
) -> Result<(SimOutcome, AuditReport), RoutingError> {
    let (layout, groups) = prepare(program, kind, mode, cfg)?;
    let out = simulate_mapped(program, &layout, &groups, mode, cfg, true)?;
    let capacity = if mode == RoutingMode::StandardLs {
        1
    } else {
        layout.k
    };
    let tile_of = |q: u32| layout.data_tiles[groups[q as usize]];
    let rep = audit(&routable(program), &out.events, &layout, capacity, &tile_of);
    Ok((out, rep))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComputeTime {
    pub total_us: f64,
    pub baseline_us: f64,
    pub relative: f64,
}

/// Total time under `mode`, and relative to standard lattice surgery on the
/// same layout kind with one logical qubit per tile.
pub fn estimate_compute_time(
    program: &LogicalProgram,
    kind: LayoutKind,
    mode: RoutingMode,
    cfg: &RouteConfig,
) -> Result<ComputeTime, RoutingError> {
    let baseline_us = simulate(program, kind, RoutingMode::StandardLs, cfg, false)?.total_us;
    let total_us = simulate(program, kind, mode, cfg, false)?.total_us;
    Ok(ComputeTime {
        total_us,
        baseline_us,
        relative: ratio(total_us, baseline_us),
    })
}

fn ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        1.0
    }
}

pub const ROUTE_CSV_HEADER: &str =
    "benchmark,n,layout,mode,k,d,t_meas_us,speed_um_per_us,total_us,relative,seed";

#[derive(Debug, Clone, PartialEq)]
pub struct RouteRow {
    pub benchmark: String,
    pub n: usize,
    pub layout: LayoutKind,
    pub mode: RoutingMode,
    pub k: usize,
    pub d: usize,
    pub t_meas_us: f64,
    pub speed_um_per_us: f64,
    pub total_us: f64,
    pub relative: f64,
    pub seed: u64,
}

impl RouteRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{:.3},{:.6},{}",
            self.benchmark,
            self.n,
            self.layout,
            self.mode,
            self.k,
            self.d,
            self.t_meas_us,
            self.speed_um_per_us,
            self.total_us,
            self.relative,
            self.seed
        )
    }
}

pub fn route_rows_to_csv(rows: &[RouteRow]) -> String {
    let mut s = format!("{ROUTE_CSV_HEADER}\n");
    for r in rows {
        s.push_str(&r.to_csv());
        s.push('\n');
    }
    s
}

/// Rows for each requested mode; the baseline run is shared.
pub fn route_rows(
    name: &str,
    program: &LogicalProgram,
    kind: LayoutKind,
    modes: &[RoutingMode],
    cfg: &RouteConfig,
    seed: u64,
) -> Result<Vec<RouteRow>, RoutingError> {
    let baseline = simulate(program, kind, RoutingMode::StandardLs, cfg, false)?.total_us;
    modes
        .iter()
        .map(|&mode| {
            let total = if mode == RoutingMode::StandardLs {
                baseline
            } else {
                simulate(program, kind, mode, cfg, false)?.total_us
            };
            Ok(RouteRow {
                benchmark: name.to_string(),
                n: program.n,
                layout: kind,
                mode,
                k: if mode == RoutingMode::StandardLs {
                    1
                } else {
                    cfg.k
                },
                d: cfg.d,
                t_meas_us: cfg.t_meas_us,
                speed_um_per_us: cfg.speed_um_per_us,
                total_us: total,
                relative: ratio(total, baseline),
                seed,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    GroupSize,
    TMeas,
    Speed,
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "group_size" | "k" => Ok(SweepAxis::GroupSize),
            "t_meas" => Ok(SweepAxis::TMeas),
            "movement_speed" | "speed" => Ok(SweepAxis::Speed),
            _ => Err(format!(
                "unknown sweep axis `{s}` (expected group_size, t_meas or movement_speed)"
            )),
        }
    }
}

impl SweepAxis {
    pub fn default_grid(self) -> Vec<f64> {
        match self {
            SweepAxis::GroupSize => vec![4.0, 9.0, 16.0],
            SweepAxis::TMeas => vec![1e2, 1e3, 1e4],
            SweepAxis::Speed => vec![0.055, 0.55, 5.5],
        }
    }

    fn apply(self, cfg: &RouteConfig, v: f64) -> RouteConfig {
        let mut c = *cfg;
        match self {
            SweepAxis::GroupSize => c.k = v as usize,
            SweepAxis::TMeas => c.t_meas_us = v,
            SweepAxis::Speed => c.speed_um_per_us = v,
        }
        c
    }
}

/// Interleaved-surgery and movement rows at each grid point, other
/// parameters held at `cfg`. Grid points run in parallel.
pub fn sensitivity_sweep(
    axis: SweepAxis,
    grid: &[f64],
    name: &str,
    program: &LogicalProgram,
    kind: LayoutKind,
    cfg: &RouteConfig,
    seed: u64,
) -> Result<Vec<RouteRow>, RoutingError> {
    let modes = [RoutingMode::InterleavedLs, RoutingMode::Movement];
    let parts: Result<Vec<Vec<RouteRow>>, RoutingError> = grid
        .par_iter()
        .map(|&v| route_rows(name, program, kind, &modes, &axis.apply(cfg, v), seed))
        .collect();
    Ok(parts?.into_iter().flatten().collect())
}
