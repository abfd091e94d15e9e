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

//! Detector error models and minimum-weight perfect matching.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::blossom::max_weight_matching;
use crate::circuit::{Basis, Circuit, CircuitError, Op};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecoderError {
    #[error("instruction {instruction}: error mechanism is not graphlike ({detail})")]
    NonGraphlike { instruction: usize, detail: String },
    #[error("detector {id} out of range ({n} detectors)")]
    DetectorOutOfRange { id: u32, n: usize },
    #[error("brute-force oracle limited to {max} detectors, got {got}")]
    OracleSize { max: usize, got: usize },
    #[error("at most 64 observables are supported, circuit has {0}")]
    TooManyObservables(usize),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// One independent fault: fires `dets` and flips the observables in `obs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mechanism {
    pub p: f64,
    pub dets: Vec<u32>,
    pub obs: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DetectorErrorModel {
    pub num_detectors: usize,
    pub num_observables: usize,
    pub mechanisms: Vec<Mechanism>,
}

impl fmt::Display for DetectorErrorModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for m in &self.mechanisms {
            write!(f, "error({})", m.p)?;
            for d in &m.dets {
                write!(f, " D{d}")?;
            }
            for o in 0..64 {
                if m.obs >> o & 1 == 1 {
                    write!(f, " L{o}")?;
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Probability that exactly one of two independent events happens.
pub fn xor_prob(p1: f64, p2: f64) -> f64 {
    p1 * (1.0 - p2) + p2 * (1.0 - p1)
}

type Key = (Vec<u32>, u64);

/// Sensitivity of every qubit to X and Z faults, as bitsets over detectors
/// followed by observables.
struct Frames {
    words: usize,
    fx: Vec<u64>,
    fz: Vec<u64>,
}

impl Frames {
    fn x(&self, q: u32) -> &[u64] {
        let w = self.words;
        &self.fx[q as usize * w..(q as usize + 1) * w]
    }
    fn z(&self, q: u32) -> &[u64] {
        let w = self.words;
        &self.fz[q as usize * w..(q as usize + 1) * w]
    }
    fn swap_xz(&mut self, q: u32) {
        let w = self.words;
        let r = q as usize * w..(q as usize + 1) * w;
        for i in r {
            std::mem::swap(&mut self.fx[i], &mut self.fz[i]);
        }
    }
    /// `dst[a] ^= src[b]` across the two tables (`x` selects each side).
    fn xor_into(&mut self, dst_x: bool, a: u32, src_x: bool, b: u32) {
        let w = self.words;
        for i in 0..w {
            let v = if src_x {
                self.fx[b as usize * w + i]
            } else {
                self.fz[b as usize * w + i]
            };
            if dst_x {
                self.fx[a as usize * w + i] ^= v;
            } else {
                self.fz[a as usize * w + i] ^= v;
            }
        }
    }
    fn clear(&mut self, q: u32) {
        let w = self.words;
        for i in q as usize * w..(q as usize + 1) * w {
            self.fx[i] = 0;
            self.fz[i] = 0;
        }
    }
}

fn xor_words(a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}

fn sparse(bits: &[u64], n_det: usize) -> Key {
    let mut dets = Vec::new();
    let mut obs = 0u64;
    for (wi, &w) in bits.iter().enumerate() {
        let mut w = w;
        while w != 0 {
            let b = w.trailing_zeros() as usize;
            w &= w - 1;
            let id = wi * 64 + b;
            if id < n_det {
                dets.push(id as u32);
            } else {
                obs |= 1 << (id - n_det);
            }
        }
    }
    (dets, obs)
}

/// Raw (undecomposed) fault list: merged probability and the first
/// instruction producing each distinct effect.
fn raw_mechanisms(
    c: &Circuit,
) -> Result<(BTreeMap<Key, (f64, usize)>, usize, usize), DecoderError> {
    c.validate()?;
    let n_det = c.detector_count();
    let n_obs = c.observable_count();
    if n_obs > 64 {
        return Err(DecoderError::TooManyObservables(n_obs));
    }
    let nbits = n_det + n_obs;
    let words = nbits.div_ceil(64).max(1);
    let n_meas = c.measurement_count();
    let mut hits: Vec<Vec<usize>> = vec![Vec::new(); n_meas];
    for (d, recs) in c.detector_records().iter().enumerate() {
        for &m in recs {
            hits[m].push(d);
        }
    }
    for (o, recs) in c.observable_records().iter().enumerate() {
        for &m in recs {
            hits[m].push(n_det + o);
        }
    }
    let meas_bits = |m: usize| {
        let mut v = vec![0u64; words];
        for &b in &hits[m] {
            v[b / 64] ^= 1 << (b % 64);
        }
        v
    };
    // first measurement index of every instruction
    let mut first = Vec::with_capacity(c.instructions.len());
    let mut m = 0usize;
    for ins in &c.instructions {
        first.push(m);
        if ins.op.is_measurement() {
            m += ins.targets.len();
        }
    }
    let mut f = Frames {
        words,
        fx: vec![0; c.n_qubits * words],
        fz: vec![0; c.n_qubits * words],
    };
    let mut next_meas: Vec<Option<usize>> = vec![None; c.n_qubits];
    let mut out: BTreeMap<Key, (f64, usize)> = BTreeMap::new();
    let record = |bits: Vec<u64>, p: f64, at: usize, out: &mut BTreeMap<Key, (f64, usize)>| {
        if p <= 0.0 || bits.iter().all(|&w| w == 0) {
            return;
        }
        let key = sparse(&bits, n_det);
        let e = out.entry(key).or_insert((0.0, at));
        e.0 = xor_prob(e.0, p);
        e.1 = e.1.min(at);
    };
    for (idx, ins) in c.instructions.iter().enumerate().rev() {
        let ts = &ins.targets;
        match &ins.op {
            Op::H => ts.iter().for_each(|&q| f.swap_xz(q)),
            Op::S => ts.iter().for_each(|&q| f.xor_into(true, q, false, q)),
            Op::X | Op::Z => {}
            Op::CX => {
                for pair in ts.chunks(2) {
                    let (c0, t) = (pair[0], pair[1]);
                    f.xor_into(true, c0, true, t);
                    f.xor_into(false, t, false, c0);
                }
            }
            Op::CZ => {
                for pair in ts.chunks(2) {
                    let (a, b) = (pair[0], pair[1]);
                    f.xor_into(true, a, false, b);
                    f.xor_into(true, b, false, a);
                }
            }
            Op::Reset => ts.iter().for_each(|&q| f.clear(q)),
            Op::MZ | Op::MX => {
                for (i, &q) in ts.iter().enumerate().rev() {
                    let mi = first[idx] + i;
                    let bits = meas_bits(mi);
                    let w = f.words;
                    let tab = if ins.op == Op::MZ {
                        &mut f.fx
                    } else {
                        &mut f.fz
                    };
                    for (k, b) in bits.iter().enumerate() {
                        tab[q as usize * w + k] ^= b;
                    }
                    next_meas[q as usize] = Some(mi);
                }
            }
            Op::MFlip(p) => {
                for &q in ts {
                    if let Some(mi) = next_meas[q as usize] {
                        record(meas_bits(mi), *p, idx, &mut out);
                    }
                }
            }
            Op::Depol1(p) => {
                for &q in ts {
                    let (x, z) = (f.x(q).to_vec(), f.z(q).to_vec());
                    let y = xor_words(&x, &z);
                    for b in [x, y, z] {
                        record(b, p / 3.0, idx, &mut out);
                    }
                }
            }
            Op::PauliChannel(px, py, pz) => {
                for &q in ts {
                    let (x, z) = (f.x(q).to_vec(), f.z(q).to_vec());
                    let y = xor_words(&x, &z);
                    record(x, *px, idx, &mut out);
                    record(y, *py, idx, &mut out);
                    record(z, *pz, idx, &mut out);
                }
            }
            Op::Depol2(p) => {
                for pair in ts.chunks(2) {
                    let (a, b) = (pair[0], pair[1]);
                    let pa = paulis(f.x(a), f.z(a));
                    let pb = paulis(f.x(b), f.z(b));
                    for i in 0..4 {
                        for j in 0..4 {
                            if i + j > 0 {
                                record(xor_words(&pa[i], &pb[j]), p / 15.0, idx, &mut out);
                            }
                        }
                    }
                }
            }
            Op::Tick(_) | Op::Detector { .. } | Op::Observable { .. } => {}
        }
    }
    Ok((out, n_det, n_obs))
}

fn paulis(x: &[u64], z: &[u64]) -> [Vec<u64>; 4] {
    [vec![0; x.len()], x.to_vec(), xor_words(x, z), z.to_vec()]
}

/// How [`extract_dem_with`] treats parts it cannot split into known
/// graphlike effects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Decomposition {
    /// Fail with [`DecoderError::NonGraphlike`].
    #[default]
    Strict,
    /// Cover as much as possible with known effects and keep the rest (at
    /// most two detectors at a time) as new edges.
    Approximate,
}

/// Propagates every single fault of a noisy circuit to the detectors and
/// observables it flips, then splits each effect into its X-detecting and
/// Z-detecting parts. Parts with more than two detectors are rewritten as a
/// sum of graphlike effects that other faults produce on their own.
pub fn extract_dem(c: &Circuit) -> Result<DetectorErrorModel, DecoderError> {
    extract_dem_with(c, Decomposition::Strict).map(|(dem, _)| dem)
}

/// As [`extract_dem`]; also returns how many parts needed new edges.
pub fn extract_dem_with(
    c: &Circuit,
    mode: Decomposition,
) -> Result<(DetectorErrorModel, usize), DecoderError> {
    let (raw, n_det, n_obs) = raw_mechanisms(c)?;
    let det_basis = c.detector_bases();
    let obs_basis = c.observable_bases();
    let mut parts: Vec<(Key, f64, usize)> = Vec::new();
    for ((dets, obs), (p, at)) in &raw {
        // Z-type detectors see X faults, which flip Z-type observables
        for b in [Some(Basis::Z), Some(Basis::X), None] {
            let ds: Vec<u32> = dets
                .iter()
                .copied()
                .filter(|&d| det_basis[d as usize] == b)
                .collect();
            let mut os = 0u64;
            for (o, ob) in obs_basis.iter().enumerate() {
                if *ob == b && obs >> o & 1 == 1 {
                    os |= 1 << o;
                }
            }
            if !ds.is_empty() {
                parts.push(((ds, os), *p, *at));
            }
        }
    }
    let mut prims: HashMap<u32, Vec<Key>> = HashMap::new();
    let mut known: std::collections::HashSet<Key> = std::collections::HashSet::new();
    for (key, _, _) in &parts {
        if key.0.len() <= 2 && known.insert(key.clone()) {
            for &d in &key.0 {
                prims.entry(d).or_default().push(key.clone());
            }
        }
    }
    for list in prims.values_mut() {
        list.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.cmp(b)));
    }
    let mut approximated = 0;
    let mut hops = Hops::new(n_det, &known);
    let mut merged: BTreeMap<Key, f64> = BTreeMap::new();
    for (key, p, at) in parts {
        let pieces = if key.0.len() <= 2 {
            vec![key]
        } else {
            let mut acc = Vec::new();
            let mut found = split(&key.0, 0, key.1, &prims, &mut acc);
            if !found && mode == Decomposition::Approximate {
                approximated += 1;
                acc = approximate(&key, &prims, &mut hops);
                found = true;
            }
            if !found {
                return Err(DecoderError::NonGraphlike {
                    instruction: at,
                    detail: format!("detectors {:?} observables {:#b}", key.0, key.1),
                });
            }
            acc
        };
        for k in pieces {
            let e = merged.entry(k).or_insert(0.0);
            *e = xor_prob(*e, p);
        }
    }
    let dem = DetectorErrorModel {
        num_detectors: n_det,
        num_observables: n_obs,
        mechanisms: merged
            .into_iter()
            .map(|((dets, obs), p)| Mechanism { p, dets, obs })
            .collect(),
    };
    Ok((dem, approximated))
}

/// Hop distances over the graph of known graphlike effects, tracking the
/// parity of each observable along the way. Node `n` is the boundary.
struct Hops {
    adj: Vec<Vec<(u32, u64)>>,
    bits: Vec<u32>,
    cache: HashMap<(u32, u32), Vec<u32>>,
}

impl Hops {
    fn new(n: usize, known: &std::collections::HashSet<Key>) -> Self {
        let mut adj = vec![Vec::new(); n + 1];
        let mut mask = 0u64;
        for (dets, obs) in known {
            let (a, b) = match dets[..] {
                [a] => (a, n as u32),
                [a, b] => (a, b),
                _ => continue,
            };
            adj[a as usize].push((b, *obs));
            adj[b as usize].push((a, *obs));
            mask |= obs;
        }
        let bits = (0..64).filter(|b| mask >> b & 1 == 1).collect();
        Hops {
            adj,
            bits,
            cache: HashMap::new(),
        }
    }

    fn boundary(&self) -> u32 {
        (self.adj.len() - 1) as u32
    }

    /// Length of the shortest logical loop closed by a new edge `a`–`b`
    /// flipping `obs`.
    fn loop_through(&mut self, a: u32, b: u32, obs: u64) -> u32 {
        let cap = 2 * self.adj.len() as u32;
        let mut best = cap;
        for &bit in &self.bits {
            let adj = &self.adj;
            let dist = self.cache.entry((a, bit)).or_insert_with(|| {
                let mut dist = vec![u32::MAX; 2 * adj.len()];
                dist[2 * a as usize] = 0;
                let mut q = VecDeque::from([2 * a as usize]);
                while let Some(x) = q.pop_front() {
                    for &(v, o) in &adj[x / 2] {
                        let y = 2 * v as usize + ((x & 1) ^ (o >> bit & 1) as usize);
                        if dist[y] == u32::MAX {
                            dist[y] = dist[x] + 1;
                            q.push_back(y);
                        }
                    }
                }
                dist
            });
            let other = 2 * b as usize + (1 ^ (obs >> bit & 1) as usize);
            best = best.min(dist[other].saturating_add(1));
        }
        best
    }
}

/// Best cover of a hyperedge part by known effects plus at most two new
/// edges. Prefers new edges that close the longest logical loops, then fewer
/// pieces, then fewer pieces that flip observables.
fn approximate(key: &Key, prims: &HashMap<u32, Vec<Key>>, hops: &mut Hops) -> Vec<Key> {
    struct Search<'a> {
        prims: &'a HashMap<u32, Vec<Key>>,
        target: u64,
        acc: Vec<Key>,
        fresh: Vec<Vec<u32>>,
        best: Option<((Reverse<u32>, usize, usize), Vec<Key>)>,
    }
    fn go(s: &mut Search, rem: &[u32], obs: u64, hops: &mut Hops) {
        let Some(&d0) = rem.first() else {
            if s.fresh.is_empty() && obs != s.target {
                return;
            }
            let mut pieces = s.acc.clone();
            for (i, f) in s.fresh.iter().enumerate() {
                pieces.push((f.clone(), if i == 0 { obs ^ s.target } else { 0 }));
            }
            let flips = pieces.iter().filter(|p| p.1 != 0).count();
            let shortest = pieces[s.acc.len()..]
                .iter()
                .map(|(f, o)| match f[..] {
                    [a] => hops.loop_through(a, hops.boundary(), *o),
                    [a, b] => hops.loop_through(a, b, *o),
                    _ => unreachable!(),
                })
                .min()
                .unwrap_or(u32::MAX);
            let score = (Reverse(shortest), pieces.len(), flips);
            if s.best.as_ref().is_none_or(|(b, _)| score < *b) {
                s.best = Some((score, pieces));
            }
            return;
        };
        if let Some(cands) = s.prims.get(&d0) {
            for k in cands.clone() {
                if k.0.iter().all(|d| rem.contains(d)) {
                    let next: Vec<u32> = rem.iter().copied().filter(|d| !k.0.contains(d)).collect();
                    let o = k.1;
                    s.acc.push(k);
                    go(s, &next, obs ^ o, hops);
                    s.acc.pop();
                }
            }
        }
        if s.fresh.len() < 2 {
            for j in 0..rem.len() {
                let piece: Vec<u32> = if j == 0 { vec![d0] } else { vec![d0, rem[j]] };
                let next: Vec<u32> = rem.iter().copied().filter(|d| !piece.contains(d)).collect();
                s.fresh.push(piece);
                go(s, &next, obs, hops);
                s.fresh.pop();
            }
        }
    }
    let mut s = Search {
        prims,
        target: key.1,
        acc: Vec::new(),
        fresh: Vec::new(),
        best: None,
    };
    go(&mut s, &key.0, 0, hops);
    match s.best {
        Some((_, pieces)) => pieces,
        None => key
            .0
            .chunks(2)
            .enumerate()
            .map(|(i, ch)| (ch.to_vec(), if i == 0 { key.1 } else { 0 }))
            .collect(),
    }
}

/// Covers `rem` with known graphlike effects whose observables XOR to
/// `target`.
fn split(
    rem: &[u32],
    obs: u64,
    target: u64,
    prims: &HashMap<u32, Vec<Key>>,
    acc: &mut Vec<Key>,
) -> bool {
    let Some(&d0) = rem.first() else {
        return obs == target;
    };
    if let Some(cands) = prims.get(&d0) {
        for k in cands {
            if k.0.iter().all(|d| rem.contains(d)) {
                let next: Vec<u32> = rem.iter().copied().filter(|d| !k.0.contains(d)).collect();
                acc.push(k.clone());
                if split(&next, obs ^ k.1, target, prims, acc) {
                    return true;
                }
                acc.pop();
            }
        }
    }
    false
}

/// Integer scale applied to log-likelihood weights.
pub const WEIGHT_SCALE: f64 = 1000.0;
const INF: i64 = i64::MAX / 8;

/// Log-likelihood weight of an edge with flip probability `p`, scaled to an
/// integer and clamped to at least 1.
pub fn edge_weight(p: f64) -> i64 {
    let p = p.clamp(1e-300, 0.5);
    (((1.0 - p) / p).ln() * WEIGHT_SCALE).round().max(1.0) as i64
}

/// Detector graph with a boundary node and all-pairs shortest paths.
#[derive(Debug, Clone)]
pub struct MatchingGraph {
    n: usize,
    /// adjacency over detectors plus the boundary node `n`
    adj: Vec<Vec<(u32, i64, u64)>>,
    dist: Vec<i64>,
    path_obs: Vec<u64>,
}

impl MatchingGraph {
    pub fn from_dem(dem: &DetectorErrorModel) -> Self {
        let n = dem.num_detectors;
        // merge parallel mechanisms; when they disagree on observables the
        // likelier one labels the edge
        let mut best: BTreeMap<(u32, u32), BTreeMap<u64, f64>> = BTreeMap::new();
        for m in &dem.mechanisms {
            let (a, b) = match m.dets.as_slice() {
                [a] => (*a, n as u32),
                [a, b] => (*a.min(b), *a.max(b)),
                _ => continue,
            };
            let e = best.entry((a, b)).or_default().entry(m.obs).or_insert(0.0);
            *e = xor_prob(*e, m.p);
        }
        let mut edges = Vec::new();
        for ((a, b), by_obs) in best {
            let (obs, p) =
                by_obs.into_iter().fold(
                    (0u64, -1.0f64),
                    |acc, (o, p)| if p > acc.1 { (o, p) } else { acc },
                );
            edges.push((a, b, edge_weight(p), obs));
        }
        Self::from_edges(n, &edges)
    }

    /// Builds a graph from explicit `(a, b, weight, obs)` edges; `b == n`
    /// denotes the boundary.
    pub fn from_edges(n: usize, edges: &[(u32, u32, i64, u64)]) -> Self {
        let mut adj = vec![Vec::new(); n + 1];
        for &(a, b, w, o) in edges {
            adj[a as usize].push((b, w, o));
            adj[b as usize].push((a, w, o));
        }
        let m = n + 1;
        let mut dist = vec![INF; m * m];
        let mut path_obs = vec![0u64; m * m];
        let mut heap = BinaryHeap::new();
        for s in 0..m {
            let row = s * m;
            dist[row + s] = 0;
            heap.push(Reverse((0i64, s as u32)));
            while let Some(Reverse((d, u))) = heap.pop() {
                let u = u as usize;
                if d > dist[row + u] {
                    continue;
                }
                for &(v, w, o) in &adj[u] {
                    let v = v as usize;
                    let nd = d + w;
                    if nd < dist[row + v] {
                        dist[row + v] = nd;
                        path_obs[row + v] = path_obs[row + u] ^ o;
                        heap.push(Reverse((nd, v as u32)));
                    }
                }
            }
        }
        MatchingGraph {
            n,
            adj,
            dist,
            path_obs,
        }
    }

    pub fn num_detectors(&self) -> usize {
        self.n
    }

    pub fn distance(&self, a: usize, b: usize) -> i64 {
        self.dist[a * (self.n + 1) + b]
    }

    fn obs(&self, a: usize, b: usize) -> u64 {
        self.path_obs[a * (self.n + 1) + b]
    }

    pub fn boundary_distance(&self, a: usize) -> i64 {
        self.distance(a, self.n)
    }

    pub fn edges(&self) -> impl Iterator<Item = (u32, u32, i64, u64)> + '_ {
        self.adj.iter().enumerate().flat_map(|(a, list)| {
            list.iter()
                .filter(move |(b, _, _)| (a as u32) < *b)
                .map(move |&(b, w, o)| (a as u32, b, w, o))
        })
    }

    fn check(&self, syndrome: &[u32]) -> Result<(), DecoderError> {
        for &d in syndrome {
            if d as usize >= self.n {
                return Err(DecoderError::DetectorOutOfRange { id: d, n: self.n });
            }
        }
        Ok(())
    }

    /// Minimum-weight matching of the fired detectors (to each other or to
    /// the boundary). Returns the matching weight and predicted flips.
    pub fn decode_with_weight(&self, syndrome: &[u32]) -> Result<(i64, u64), DecoderError> {
        self.check(syndrome)?;
        let mut fired: Vec<usize> = syndrome.iter().map(|&d| d as usize).collect();
        fired.sort_unstable();
        fired.dedup();
        let k = fired.len();
        // pairs worth matching directly; anything else is no worse matched
        // to the boundary, so independent clusters decode separately
        let mut uf: Vec<usize> = (0..k).collect();
        fn find(uf: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while uf[r] != r {
                r = uf[r];
            }
            let mut y = x;
            while uf[y] != r {
                let nx = uf[y];
                uf[y] = r;
                y = nx;
            }
            r
        }
        for i in 0..k {
            for j in i + 1..k {
                let (a, b) = (fired[i], fired[j]);
                if self.distance(a, b)
                    < self
                        .boundary_distance(a)
                        .saturating_add(self.boundary_distance(b))
                {
                    let (ra, rb) = (find(&mut uf, i), find(&mut uf, j));
                    if ra != rb {
                        uf[ra.max(rb)] = ra.min(rb);
                    }
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..k {
            let r = find(&mut uf, i);
            groups.entry(r).or_default().push(fired[i]);
        }
        let mut weight = 0i64;
        let mut obs = 0u64;
        for nodes in groups.values() {
            match nodes.as_slice() {
                [a] => {
                    weight += self.boundary_distance(*a);
                    obs ^= self.obs(*a, self.n);
                }
                [a, b] => {
                    weight += self.distance(*a, *b);
                    obs ^= self.obs(*a, *b);
                }
                _ => {
                    let (w, o) = self.match_cluster(nodes);
                    weight += w;
                    obs ^= o;
                }
            }
        }
        Ok((weight, obs))
    }

    pub fn decode(&self, syndrome: &[u32]) -> Result<u64, DecoderError> {
        Ok(self.decode_with_weight(syndrome)?.1)
    }

    /// Exact matching of one cluster via blossom on the detectors plus one
    /// boundary copy each (copies are mutually free to pair).
    fn match_cluster(&self, nodes: &[usize]) -> (i64, u64) {
        let m = nodes.len();
        let mut costs = Vec::new();
        for i in 0..m {
            for j in i + 1..m {
                costs.push((i, j, self.distance(nodes[i], nodes[j])));
                costs.push((m + i, m + j, 0));
            }
            costs.push((i, m + i, self.boundary_distance(nodes[i])));
        }
        let cap = costs
            .iter()
            .map(|c| c.2)
            .filter(|&w| w < INF)
            .max()
            .unwrap_or(0)
            + 1;
        let edges: Vec<(usize, usize, i64)> = costs
            .iter()
            .filter(|c| c.2 < INF)
            .map(|&(a, b, w)| (a, b, cap - w))
            .collect();
        let mate = max_weight_matching(2 * m, &edges, true);
        let mut weight = 0;
        let mut obs = 0;
        for i in 0..m {
            let j = mate[i].expect("perfect matching exists");
            if j >= m {
                weight += self.boundary_distance(nodes[i]);
                obs ^= self.obs(nodes[i], self.n);
            } else if i < j {
                weight += self.distance(nodes[i], nodes[j]);
                obs ^= self.obs(nodes[i], nodes[j]);
            }
        }
        (weight, obs)
    }
}

/// Largest syndrome accepted by [`brute_force_decode`].
pub const ORACLE_MAX: usize = 10;

/// Exhaustive minimum over all pairings of the fired detectors, each either
/// paired with another or sent to the boundary.
pub fn brute_force_decode(g: &MatchingGraph, syndrome: &[u32]) -> Result<(i64, u64), DecoderError> {
    g.check(syndrome)?;
    let mut fired: Vec<usize> = syndrome.iter().map(|&d| d as usize).collect();
    fired.sort_unstable();
    fired.dedup();
    if fired.len() > ORACLE_MAX {
        return Err(DecoderError::OracleSize {
            max: ORACLE_MAX,
            got: fired.len(),
        });
    }
    fn go(g: &MatchingGraph, rest: &[usize]) -> (i64, u64) {
        let Some((&a, tail)) = rest.split_first() else {
            return (0, 0);
        };
        let (w, o) = go(g, tail);
        let mut best = (g.boundary_distance(a).saturating_add(w), g.obs(a, g.n) ^ o);
        for (i, &b) in tail.iter().enumerate() {
            let others: Vec<usize> = tail
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &x)| x)
                .collect();
            let (w, o) = go(g, &others);
            let cand = g.distance(a, b).saturating_add(w);
            if cand < best.0 {
                best = (cand, g.obs(a, b) ^ o);
            }
        }
        best
    }
    Ok(go(g, &fired))
}

/// Fewest edges forming an undetectable error that flips some observable:
/// a closed walk through the boundary or any detector whose observable
/// parity is odd. `None` if no such error exists.
pub fn graph_distance(g: &MatchingGraph) -> Option<usize> {
    let m = g.n + 1;
    let mask = g.edges().fold(0u64, |acc, e| acc | e.3);
    let mut best: Option<usize> = None;
    for bit in (0..64).filter(|b| mask >> b & 1 == 1) {
        for s in 0..m {
            let mut seen = vec![usize::MAX; 2 * m];
            let mut q = VecDeque::new();
            seen[2 * s] = 0;
            q.push_back((s, 0usize));
            while let Some((u, par)) = q.pop_front() {
                let du = seen[2 * u + par];
                if best.is_some_and(|b| du + 1 >= b) {
                    break;
                }
                for &(v, _, o) in &g.adj[u] {
                    let idx = 2 * v as usize + (par ^ (o >> bit & 1) as usize);
                    if seen[idx] == usize::MAX {
                        seen[idx] = du + 1;
                        q.push_back((v as usize, idx & 1));
                    }
                }
            }
            let hit = seen[2 * s + 1];
            if hit != usize::MAX && best.is_none_or(|b| hit < b) {
                best = Some(hit);
            }
        }
    }
    best
}
