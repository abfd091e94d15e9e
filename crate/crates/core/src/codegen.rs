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

//! Physical circuit generators for ZXXZ surface-code experiments.
//!
//! Patches are laid out on one global lattice. The ZXXZ frame is the CSS
//! rotated code conjugated by Hadamard on every data qubit with odd
//! `i + j`, so CSS basis `b` on an odd qubit is the opposite physical basis.
//! All stabilizer legs are CZ gates; the middle two steps sit between global
//! data Hadamard layers, which turns them into X legs.

use std::collections::HashMap;

use thiserror::Error;

use crate::circuit::{Basis, Circuit, Op};
use crate::geometry::{
    patch_plaquettes, schedule_cz_layers, ArrayParams, Coord, Gate, GeometryError,
    InterleavedLayout, Plaquette,
};
use crate::noise::NoiseParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodegenError {
    #[error("at least one round is required")]
    Rounds,
    #[error("experiment needs a group of at least {needed} logical qubits, layout has k = {k}")]
    GroupTooSmall { needed: usize, k: usize },
    #[error("lattice surgery needs a standard (k = 1) layout, got k = {0}")]
    NotStandard(usize),
    #[error("patches are not adjacent: {0}")]
    NotAdjacent(String),
    #[error("infeasible seam: {0}")]
    InfeasibleSeam(String),
    #[error("position {pos} out of range for group size {k}")]
    Position { pos: u32, k: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Gate and measurement durations in microseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    pub t_1q: f64,
    pub t_2q: f64,
    pub t_meas: f64,
}

impl Default for Timing {
    fn default() -> Self {
        let p = NoiseParams::default();
        Timing::from(&p)
    }
}

impl From<&NoiseParams> for Timing {
    fn from(p: &NoiseParams) -> Self {
        Timing {
            t_1q: p.t_1q,
            t_2q: p.t_2q,
            t_meas: p.t_meas,
        }
    }
}

fn odd(c: Coord) -> bool {
    (c.0 + c.1).rem_euclid(2) == 1
}

/// Physical measurement/preparation basis realising CSS basis `b` at `c`.
pub fn physical_basis(c: Coord, b: Basis) -> Basis {
    match (odd(c), b) {
        (false, b) => b,
        (true, Basis::X) => Basis::Z,
        (true, Basis::Z) => Basis::X,
    }
}

/// A `d x d` patch owned by one logical position of a group.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfacePatch {
    pub d: usize,
    pub pos: u32,
    pub row0: i32,
    pub col0: i32,
    pub plaquettes: Vec<Plaquette>,
}

impl SurfacePatch {
    pub fn new(d: usize, pos: u32, row0: i32, col0: i32) -> Self {
        SurfacePatch {
            d,
            pos,
            row0,
            col0,
            plaquettes: patch_plaquettes(row0, col0, d as i32, d as i32),
        }
    }

    pub fn data(&self) -> Vec<Coord> {
        let d = self.d as i32;
        (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| (self.row0 + i, self.col0 + j))
            .collect()
    }

    /// Support of the logical Z operator (top row) in the CSS frame.
    pub fn logical_z(&self) -> Vec<Coord> {
        (0..self.d as i32)
            .map(|j| (self.row0, self.col0 + j))
            .collect()
    }

    /// Support of the logical X operator (left column) in the CSS frame.
    pub fn logical_x(&self) -> Vec<Coord> {
        (0..self.d as i32)
            .map(|i| (self.row0 + i, self.col0))
            .collect()
    }

    /// Logical Z along row `i` of the patch.
    pub fn row(&self, i: usize) -> Vec<Coord> {
        (0..self.d as i32)
            .map(|j| (self.row0 + i as i32, self.col0 + j))
            .collect()
    }

    /// Logical X along column `j` of the patch.
    pub fn col(&self, j: usize) -> Vec<Coord> {
        (0..self.d as i32)
            .map(|i| (self.row0 + i, self.col0 + j as i32))
            .collect()
    }

    pub fn logical(&self, b: Basis) -> Vec<Coord> {
        match b {
            Basis::Z => self.logical_z(),
            Basis::X => self.logical_x(),
        }
    }

    pub fn physical_qubits(&self) -> usize {
        self.data().len() + self.plaquettes.len()
    }
}

/// A stabilizer measured by one ancilla atom. Legs name `(position, coord)`
/// so seam plaquettes may join different positions of two groups.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActivePlaquette {
    pub anc_pos: u32,
    pub tl: Coord,
    pub basis: Basis,
    pub legs: [Option<(u32, Coord)>; 4],
}

impl ActivePlaquette {
    pub fn on(pos: u32, p: &Plaquette) -> Self {
        ActivePlaquette {
            anc_pos: pos,
            tl: p.tl,
            basis: p.basis,
            legs: p.legs.map(|l| l.map(|c| (pos, c))),
        }
    }

    fn key(&self) -> (u32, Coord) {
        (self.anc_pos, self.tl)
    }

    fn leg_set(&self) -> Vec<(u32, Coord)> {
        let mut v: Vec<_> = self.legs.iter().flatten().copied().collect();
        v.sort();
        v
    }
}

/// Starting logical state of a patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogicalState {
    Zero,
    One,
    Plus,
    Minus,
}

impl LogicalState {
    pub fn basis(self) -> Basis {
        match self {
            LogicalState::Zero | LogicalState::One => Basis::Z,
            LogicalState::Plus | LogicalState::Minus => Basis::X,
        }
    }

    pub fn flipped(self) -> bool {
        matches!(self, LogicalState::One | LogicalState::Minus)
    }

    pub const ALL: [LogicalState; 4] = [
        LogicalState::Zero,
        LogicalState::One,
        LogicalState::Plus,
        LogicalState::Minus,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum DataState {
    Fresh { basis: Basis, at: u64 },
    Measured { basis: Basis, rec: usize, at: u64 },
    Live,
}

#[derive(Debug, Clone)]
struct PlaqRecord {
    recs: Vec<usize>,
    legs: Vec<(u32, Coord)>,
    basis: Basis,
    at: u64,
}

fn xor_sets(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut v: Vec<usize> = a.iter().chain(b).copied().collect();
    v.sort_unstable();
    let mut out = Vec::with_capacity(v.len());
    let mut i = 0;
    while i < v.len() {
        if i + 1 < v.len() && v[i] == v[i + 1] {
            i += 2;
        } else {
            out.push(v[i]);
            i += 1;
        }
    }
    out
}

/// Emits rounds onto a circuit and wires detectors from a record of the
/// last measurement of every plaquette and the state of every data atom.
struct Builder<'a> {
    layout: &'a InterleavedLayout,
    timing: Timing,
    circuit: Circuit,
    qubit_of_site: HashMap<u32, u32>,
    sites: Vec<u32>,
    n_meas: usize,
    clock: u64,
    last: HashMap<(u32, Coord), PlaqRecord>,
    data: HashMap<(u32, Coord), DataState>,
    schedules: HashMap<Vec<ActivePlaquette>, [Vec<Vec<Gate>>; 4]>,
    cz_layers: usize,
    /// Plaquettes whose next detector also includes another plaquette's
    /// outcome from the same round, or is skipped (`None`).
    partner: HashMap<(u32, Coord), Option<(u32, Coord)>>,
}

impl<'a> Builder<'a> {
    fn new(layout: &'a InterleavedLayout, timing: Timing) -> Self {
        Builder {
            layout,
            timing,
            circuit: Circuit::new(0),
            qubit_of_site: HashMap::new(),
            sites: Vec::new(),
            n_meas: 0,
            clock: 0,
            last: HashMap::new(),
            data: HashMap::new(),
            schedules: HashMap::new(),
            cz_layers: 0,
            partner: HashMap::new(),
        }
    }

    fn qubit(&mut self, site: u32) -> u32 {
        if let Some(&q) = self.qubit_of_site.get(&site) {
            return q;
        }
        let q = self.sites.len() as u32;
        self.sites.push(site);
        self.qubit_of_site.insert(site, q);
        q
    }

    fn data_site(&self, pos: u32, c: Coord) -> u32 {
        self.layout
            .data_site(c, pos)
            .unwrap_or_else(|| panic!("no data atom at {c:?} position {pos}"))
    }

    fn anc_site(&self, pos: u32, tl: Coord) -> u32 {
        self.layout
            .ancilla_site(tl, pos)
            .unwrap_or_else(|| panic!("no ancilla atom at {tl:?} position {pos}"))
    }

    fn dq(&mut self, pos: u32, c: Coord) -> u32 {
        let s = self.data_site(pos, c);
        self.qubit(s)
    }

    fn aq(&mut self, pos: u32, tl: Coord) -> u32 {
        let s = self.anc_site(pos, tl);
        self.qubit(s)
    }

    fn push(&mut self, op: Op, targets: Vec<u32>) {
        if !targets.is_empty()
            || matches!(
                op,
                Op::Tick(_) | Op::Detector { .. } | Op::Observable { .. }
            )
        {
            self.circuit.push(op, targets);
        }
    }

    fn tick(&mut self, t: f64) {
        self.push(Op::Tick(t), vec![]);
    }

    fn measure(&mut self, basis: Basis, q: u32) -> usize {
        let op = match basis {
            Basis::Z => Op::MZ,
            Basis::X => Op::MX,
        };
        // merge consecutive measurements of the same kind into one line
        match self.circuit.instructions.last_mut() {
            Some(last) if last.op == op => last.targets.push(q),
            _ => self.circuit.push(op, vec![q]),
        }
        self.n_meas += 1;
        self.clock += 1;
        self.n_meas - 1
    }

    fn detector(&mut self, basis: Basis, recs: &[usize]) {
        let mut r: Vec<u32> = recs.iter().map(|&m| (self.n_meas - m) as u32).collect();
        r.sort_unstable();
        self.push(
            Op::Detector {
                basis: Some(basis),
                recs: r,
            },
            vec![],
        );
    }

    fn observable(&mut self, id: u32, basis: Basis, recs: &[usize]) {
        let recs = xor_sets(recs, &[]);
        let mut r: Vec<u32> = recs.iter().map(|&m| (self.n_meas - m) as u32).collect();
        r.sort_unstable();
        self.push(
            Op::Observable {
                id,
                basis: Some(basis),
                recs: r,
            },
            vec![],
        );
    }

    /// Resets data atoms into CSS basis states (emits into the current segment).
    fn prep_data(&mut self, items: &[(u32, Coord, Basis)]) {
        let mut resets = Vec::new();
        let mut hs = Vec::new();
        for &(pos, c, b) in items {
            let q = self.dq(pos, c);
            resets.push(q);
            if physical_basis(c, b) == Basis::X {
                hs.push(q);
            }
            self.clock += 1;
            self.data.insert(
                (pos, c),
                DataState::Fresh {
                    basis: b,
                    at: self.clock,
                },
            );
        }
        self.push(Op::Reset, resets);
        self.push(Op::H, hs);
    }

    /// Applies a CSS-frame logical Pauli (`X` on the X support, `Z` on the Z support).
    fn logical_flip(&mut self, pos: u32, support: &[Coord], kind: Basis) {
        let mut xs = Vec::new();
        let mut zs = Vec::new();
        for &c in support {
            let q = self.dq(pos, c);
            match physical_basis(c, kind) {
                Basis::X => xs.push(q),
                Basis::Z => zs.push(q),
            }
        }
        self.push(Op::X, xs);
        self.push(Op::Z, zs);
    }

    fn measure_data(&mut self, items: &[(u32, Coord, Basis)]) {
        for &(pos, c, b) in items {
            let q = self.dq(pos, c);
            let rec = self.measure(physical_basis(c, b), q);
            self.data.insert(
                (pos, c),
                DataState::Measured {
                    basis: b,
                    rec,
                    at: self.clock,
                },
            );
        }
    }

    /// Layered CZ gates of each step. The template is every plaquette on
    /// every position of the group, so idle positions leave idle layers.
    fn schedule(&mut self, parts: &[ActivePlaquette]) -> [Vec<Vec<Gate>>; 4] {
        let mut key: Vec<ActivePlaquette> = parts.to_vec();
        key.sort();
        if let Some(s) = self.schedules.get(&key) {
            return s.clone();
        }
        let k = self.layout.k as u32;
        let mut out: [Vec<Vec<Gate>>; 4] = Default::default();
        for step in 0..4 {
            let mut active: Vec<Gate> = Vec::new();
            let mut template: Vec<Gate> = Vec::new();
            let mut seen = std::collections::HashSet::new();
            for p in &key {
                if let Some((dpos, c)) = p.legs[step] {
                    let g = (self.anc_site(p.anc_pos, p.tl), self.data_site(dpos, c));
                    active.push(g);
                    if dpos == p.anc_pos {
                        for pos in 0..k {
                            let t = (self.anc_site(pos, p.tl), self.data_site(pos, c));
                            if seen.insert(t) {
                                template.push(t);
                            }
                        }
                    } else if seen.insert(g) {
                        template.push(g);
                    }
                }
            }
            let active_set: std::collections::HashSet<Gate> = active.iter().copied().collect();
            out[step] = schedule_cz_layers(self.layout, &template)
                .into_iter()
                .map(|layer| {
                    layer
                        .into_iter()
                        .map(|g| template[g])
                        .filter(|g| active_set.contains(g))
                        .collect()
                })
                .collect();
        }
        self.schedules.insert(key, out.clone());
        out
    }

    fn emit_layers(&mut self, layers: &[Vec<Gate>]) {
        for layer in layers {
            for &(a, d) in layer {
                let qa = self.qubit(a);
                let qd = self.qubit(d);
                self.push(Op::CZ, vec![qa, qd]);
            }
            self.tick(self.timing.t_2q);
            self.cz_layers += 1;
        }
    }

    /// One stabilizer round over `parts`. `data` lists every live data atom
    /// (they all receive the global Hadamard layers). `prep` data atoms are
    /// reset in the first segment; `meas` data atoms are read out alongside
    /// the ancillas. Returns the record index of each plaquette.
    fn round(
        &mut self,
        parts: &[ActivePlaquette],
        data: &[(u32, Coord)],
        prep: &[(u32, Coord, Basis)],
        meas: &[(u32, Coord, Basis)],
        flips: &[(u32, Vec<Coord>, Basis)],
    ) -> HashMap<(u32, Coord), usize> {
        let mut parts = parts.to_vec();
        parts.sort();
        let sched = self.schedule(&parts);
        let ancs: Vec<u32> = parts.iter().map(|p| self.aq(p.anc_pos, p.tl)).collect();
        let dqs: Vec<u32> = data.iter().map(|&(pos, c)| self.dq(pos, c)).collect();
        self.push(Op::Reset, ancs.clone());
        self.prep_data(prep);
        for (pos, support, kind) in flips {
            self.logical_flip(*pos, support, *kind);
        }
        self.push(Op::H, ancs.clone());
        self.tick(self.timing.t_1q);
        self.emit_layers(&sched[0]);
        self.push(Op::H, dqs.clone());
        self.tick(self.timing.t_1q);
        self.emit_layers(&sched[1]);
        self.emit_layers(&sched[2]);
        self.push(Op::H, dqs);
        self.tick(self.timing.t_1q);
        self.emit_layers(&sched[3]);
        let mut recs = HashMap::new();
        for (p, &q) in parts.iter().zip(&ancs) {
            let m = self.measure(Basis::X, q);
            recs.insert(p.key(), m);
        }
        let before_meas = self.clock;
        self.measure_data(meas);
        self.tick(self.timing.t_meas);
        for p in &parts {
            let pair = self.partner.remove(&p.key());
            let emit = pair != Some(None);
            let extra = pair.flatten().map(|k| recs[&k]);
            self.plaquette_detector(p, recs[&p.key()], extra, emit, before_meas);
        }
        for p in &parts {
            for leg in p.leg_set() {
                if !matches!(self.data.get(&leg), Some(DataState::Measured { .. })) {
                    self.data.insert(leg, DataState::Live);
                }
            }
        }
        recs
    }

    fn plaquette_detector(
        &mut self,
        p: &ActivePlaquette,
        m: usize,
        extra: Option<usize>,
        emit: bool,
        at: u64,
    ) {
        let legs = p.leg_set();
        let b = p.basis;
        let mut recs = vec![m];
        recs.extend(extra);
        let ok = match self.last.get(&p.key()).filter(|prev| prev.basis == b) {
            Some(prev) => {
                recs.extend_from_slice(&prev.recs);
                let mut ok = true;
                for leg in legs.iter().filter(|l| !prev.legs.contains(l)) {
                    ok &= matches!(self.data.get(leg), Some(&DataState::Fresh { basis, at: t }) if basis == b && t > prev.at);
                }
                for leg in prev.legs.iter().filter(|l| !legs.contains(l)) {
                    match self.data.get(leg) {
                        Some(&DataState::Measured { basis, rec, at: t })
                            if basis == b && t > prev.at =>
                        {
                            recs.push(rec)
                        }
                        _ => ok = false,
                    }
                }
                ok
            }
            None => legs.iter().all(
                |l| matches!(self.data.get(l), Some(&DataState::Fresh { basis, .. }) if basis == b),
            ),
        };
        if ok && emit {
            let recs = xor_sets(&recs, &[]);
            self.detector(b, &recs);
        }
        self.last.insert(
            p.key(),
            PlaqRecord {
                recs: vec![m],
                legs,
                basis: b,
                at,
            },
        );
    }

    /// Detectors comparing each plaquette's last value with the data readout.
    fn close(&mut self) {
        let mut keys: Vec<(u32, Coord)> = self.last.keys().copied().collect();
        keys.sort();
        for key in keys {
            let prev = self.last.remove(&key).expect("key from map");
            let mut recs = prev.recs.clone();
            let mut ok = true;
            for leg in &prev.legs {
                match self.data.get(leg) {
                    Some(&DataState::Measured { basis, rec, at })
                        if basis == prev.basis && at > prev.at =>
                    {
                        recs.push(rec)
                    }
                    _ => ok = false,
                }
            }
            if ok {
                let recs = xor_sets(&recs, &[]);
                self.detector(prev.basis, &recs);
            }
        }
    }

    fn data_records(&self, pos: u32, support: &[Coord], basis: Basis) -> Vec<usize> {
        support
            .iter()
            .map(|&c| match self.data.get(&(pos, c)) {
                Some(&DataState::Measured { basis: b, rec, .. }) if b == basis => rec,
                other => {
                    panic!("data atom {c:?} at position {pos} not read out in {basis:?}: {other:?}")
                }
            })
            .collect()
    }

    fn finish(mut self) -> Built {
        self.circuit.n_qubits = self.sites.len();
        self.circuit.sites = self.sites.iter().map(|&s| Some(s)).collect();
        Built {
            circuit: self.circuit,
            cz_layers: self.cz_layers,
        }
    }
}

struct Built {
    circuit: Circuit,
    cz_layers: usize,
}

fn active(pos: u32, plaqs: &[Plaquette]) -> Vec<ActivePlaquette> {
    plaqs.iter().map(|p| ActivePlaquette::on(pos, p)).collect()
}

fn tag(pos: u32, cs: &[Coord]) -> Vec<(u32, Coord)> {
    cs.iter().map(|&c| (pos, c)).collect()
}

fn tag_basis(pos: u32, cs: &[Coord], b: Basis) -> Vec<(u32, Coord, Basis)> {
    cs.iter().map(|&c| (pos, c, b)).collect()
}

fn flip_of(pos: u32, patch: &SurfacePatch, state: LogicalState) -> Vec<(u32, Vec<Coord>, Basis)> {
    match state {
        LogicalState::One => vec![(pos, patch.logical_x(), Basis::X)],
        LogicalState::Minus => vec![(pos, patch.logical_z(), Basis::Z)],
        _ => vec![],
    }
}

/// Memory experiment: prepare a patch in `state`, run `rounds` rounds, read
/// out in the preparation basis. Observable 0 is the logical readout.
pub fn gen_memory(
    layout: &InterleavedLayout,
    patch: &SurfacePatch,
    rounds: usize,
    state: LogicalState,
    timing: Timing,
) -> Result<Circuit, CodegenError> {
    Ok(memory_with_stats(layout, patch, rounds, state, timing)?.0)
}

/// As [`gen_memory`], also returning the number of CZ layers emitted.
pub fn memory_with_stats(
    layout: &InterleavedLayout,
    patch: &SurfacePatch,
    rounds: usize,
    state: LogicalState,
    timing: Timing,
) -> Result<(Circuit, usize), CodegenError> {
    if rounds < 1 {
        return Err(CodegenError::Rounds);
    }
    if patch.pos as usize >= layout.k {
        return Err(CodegenError::Position {
            pos: patch.pos,
            k: layout.k,
        });
    }
    let basis = state.basis();
    let mut b = Builder::new(layout, timing);
    let pos = patch.pos;
    let parts = active(pos, &patch.plaquettes);
    let data = tag(pos, &patch.data());
    let prep = tag_basis(pos, &patch.data(), basis);
    let flips = flip_of(pos, patch, state);
    for r in 0..rounds {
        if r == 0 {
            b.round(&parts, &data, &prep, &[], &flips);
        } else {
            b.round(&parts, &data, &[], &[], &[]);
        }
    }
    b.measure_data(&prep);
    b.tick(timing.t_meas);
    b.close();
    let recs = b.data_records(pos, &patch.logical(basis), basis);
    b.observable(0, basis, &recs);
    let built = b.finish();
    Ok((built.circuit, built.cz_layers))
}

/// Inputs and readout bases of a CNOT experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CnotSpec {
    pub control: LogicalState,
    pub target: LogicalState,
    pub readout_control: Basis,
    pub readout_target: Basis,
}

impl Default for CnotSpec {
    /// `|0>` control and `|+>` target, read out as control Z and target X.
    fn default() -> Self {
        CnotSpec {
            control: LogicalState::Zero,
            target: LogicalState::Plus,
            readout_control: Basis::Z,
            readout_target: Basis::X,
        }
    }
}

/// Transversal CNOT between positions 0 (control) and 1 (target) of one
/// interleaved group: `d` rounds, the CNOT, `d` rounds, readout.
/// Observable 0 is the control readout, observable 1 the target readout.
pub fn gen_transversal_cnot_experiment(
    layout: &InterleavedLayout,
    d: usize,
    spec: CnotSpec,
    timing: Timing,
) -> Result<Circuit, CodegenError> {
    if layout.k < 2 {
        return Err(CodegenError::GroupTooSmall {
            needed: 2,
            k: layout.k,
        });
    }
    let (c, t) = (0u32, 1u32);
    let patch = SurfacePatch::new(d, 0, 0, 0);
    let mut b = Builder::new(layout, timing);
    let mut parts = active(c, &patch.plaquettes);
    parts.extend(active(t, &patch.plaquettes));
    let coords = patch.data();
    let mut data = tag(c, &coords);
    data.extend(tag(t, &coords));
    let mut prep = tag_basis(c, &coords, spec.control.basis());
    prep.extend(tag_basis(t, &coords, spec.target.basis()));
    let mut flips = flip_of(c, &patch, spec.control);
    flips.extend(flip_of(t, &patch, spec.target));

    for r in 0..d {
        if r == 0 {
            b.round(&parts, &data, &prep, &[], &flips);
        } else {
            b.round(&parts, &data, &[], &[], &[]);
        }
    }

    // CNOT: physical CX control->target on even atoms, reversed on odd ones
    // (the Hadamard frame swaps roles); each CX is H-CZ-H on its target.
    let mut h_targets = Vec::new();
    let mut gates = Vec::new();
    for &x in &coords {
        let qc = b.data_site(c, x);
        let qt = b.data_site(t, x);
        let (ctl, tgt) = if odd(x) { (qt, qc) } else { (qc, qt) };
        h_targets.push(b.qubit(tgt));
        gates.push((ctl, tgt));
    }
    b.push(Op::H, h_targets.clone());
    b.tick(timing.t_1q);
    for layer in schedule_cz_layers(layout, &gates) {
        for g in layer {
            let (qa, qb) = (b.qubit(gates[g].0), b.qubit(gates[g].1));
            b.push(Op::CZ, vec![qa, qb]);
        }
        b.tick(timing.t_2q);
    }
    b.push(Op::H, h_targets);
    b.tick(timing.t_1q);

    // Control X checks now carry target X checks and target Z checks carry
    // control Z checks. Pairing each with its partner's next outcome keeps
    // faults from before the gate inside one patch. Where the patch is not
    // read out in the check's basis the paired detector only sees errors
    // that cannot reach either readout, so it is left out.
    for p in &patch.plaquettes {
        let (from, to, readout) = match p.basis {
            Basis::X => (t, c, spec.readout_control),
            Basis::Z => (c, t, spec.readout_target),
        };
        let pair = (readout == p.basis).then_some((from, p.tl));
        b.partner.insert((to, p.tl), pair);
    }

    for _ in 0..d {
        b.round(&parts, &data, &[], &[], &[]);
    }
    let mut readout = tag_basis(c, &coords, spec.readout_control);
    readout.extend(tag_basis(t, &coords, spec.readout_target));
    b.measure_data(&readout);
    b.tick(timing.t_meas);
    b.close();
    let rc = b.data_records(
        c,
        &patch.logical(spec.readout_control),
        spec.readout_control,
    );
    b.observable(0, spec.readout_control, &rc);
    let rt = b.data_records(t, &patch.logical(spec.readout_target), spec.readout_target);
    b.observable(1, spec.readout_target, &rt);
    Ok(b.finish().circuit)
}

/// Three `d x d` patches on a standard array: control above the routing
/// patch, target to its right, each separated by one gap row or column.
#[derive(Debug, Clone, PartialEq)]
pub struct SurgeryLayout {
    pub d: usize,
    pub control: SurfacePatch,
    pub ancilla: SurfacePatch,
    pub target: SurfacePatch,
    pub layout: InterleavedLayout,
}

impl SurgeryLayout {
    pub fn new(d: usize, params: ArrayParams) -> Result<Self, CodegenError> {
        let s = d as i32 + 1;
        Self::with_patches(
            d,
            params,
            SurfacePatch::new(d, 0, 0, 0),
            SurfacePatch::new(d, 0, s, 0),
            SurfacePatch::new(d, 0, s, s),
        )
    }

    /// Builds the atom array for the given patch placement after checking
    /// that the patches leave exactly one gap row/column between them.
    pub fn with_patches(
        d: usize,
        params: ArrayParams,
        control: SurfacePatch,
        ancilla: SurfacePatch,
        target: SurfacePatch,
    ) -> Result<Self, CodegenError> {
        if d < 3 || d % 2 == 0 {
            return Err(GeometryError::Distance(d).into());
        }
        let s = d as i32 + 1;
        if control.col0 != ancilla.col0 || ancilla.row0 - control.row0 != s {
            return Err(CodegenError::NotAdjacent(
                "control must sit directly above the routing patch with one gap row".into(),
            ));
        }
        if target.row0 != ancilla.row0 || target.col0 - ancilla.col0 != s {
            return Err(CodegenError::NotAdjacent(
                "target must sit directly right of the routing patch with one gap column".into(),
            ));
        }
        let mut sl = SurgeryLayout {
            d,
            control,
            ancilla,
            target,
            layout: InterleavedLayout::from_cells(1, params, &[], &[])?,
        };
        let mut data: Vec<Coord> = Vec::new();
        data.extend(sl.control.data());
        data.extend(sl.ancilla.data());
        data.extend(sl.target.data());
        data.extend(sl.gap_row());
        data.extend(sl.gap_col());
        let mut anc: Vec<Coord> = Vec::new();
        for p in sl
            .merged_zz()
            .iter()
            .chain(sl.merged_xx().iter())
            .chain(sl.control.plaquettes.iter())
            .chain(sl.target.plaquettes.iter())
        {
            anc.push(p.tl);
        }
        // readout atoms for the routing patch: the ancilla cluster whose
        // top-left leg is the data atom
        anc.extend(sl.ancilla.data());
        anc.sort();
        anc.dedup();
        sl.layout = InterleavedLayout::from_cells(1, params, &data, &anc)?;
        Ok(sl)
    }

    pub fn gap_row(&self) -> Vec<Coord> {
        let r = self.control.row0 + self.d as i32;
        (0..self.d as i32)
            .map(|j| (r, self.control.col0 + j))
            .collect()
    }

    pub fn gap_col(&self) -> Vec<Coord> {
        let c = self.ancilla.col0 + self.d as i32;
        (0..self.d as i32)
            .map(|i| (self.ancilla.row0 + i, c))
            .collect()
    }

    pub fn merged_zz(&self) -> Vec<Plaquette> {
        patch_plaquettes(
            self.control.row0,
            self.control.col0,
            2 * self.d as i32 + 1,
            self.d as i32,
        )
    }

    pub fn merged_xx(&self) -> Vec<Plaquette> {
        patch_plaquettes(
            self.ancilla.row0,
            self.ancilla.col0,
            self.d as i32,
            2 * self.d as i32 + 1,
        )
    }

    /// Merged plaquettes that touch `gap` and have the merge basis; their
    /// product is the joint logical outcome.
    pub(crate) fn seam(merged: &[Plaquette], gap: &[Coord], basis: Basis) -> Vec<Coord> {
        merged
            .iter()
            .filter(|p| p.basis == basis && p.data().any(|c| gap.contains(&c)))
            .map(|p| p.tl)
            .collect()
    }

    pub fn seam_zz(&self) -> Vec<Coord> {
        Self::seam(&self.merged_zz(), &self.gap_row(), Basis::Z)
    }

    pub fn seam_xx(&self) -> Vec<Coord> {
        Self::seam(&self.merged_xx(), &self.gap_col(), Basis::X)
    }
}

/// Lattice-surgery CNOT: routing patch in |+>, `d` rounds of ZZ merge with
/// the control, split, `d` rounds of XX merge with the target, split, and a
/// Z readout of the routing patch through swaps onto ancilla atoms.
/// Corrections are folded into the observables: the target's Z readout
/// absorbs `m_zz ^ m_z`, the control's X readout absorbs `m_xx`, each with
/// the split outcome of the gap atom on the logical's row or column.
pub fn gen_lattice_surgery_cnot_experiment(
    sl: &SurgeryLayout,
    spec: CnotSpec,
    timing: Timing,
) -> Result<Circuit, CodegenError> {
    if sl.layout.k != 1 {
        return Err(CodegenError::NotStandard(sl.layout.k));
    }
    let layout = &sl.layout;
    let d = sl.d;
    let (cp, ap, tp) = (&sl.control, &sl.ancilla, &sl.target);
    let mut b = Builder::new(layout, timing);
    let gap_row = sl.gap_row();
    let gap_col = sl.gap_col();

    // stage 0: independent patches
    let mut parts = active(0, &cp.plaquettes);
    parts.extend(active(0, &ap.plaquettes));
    parts.extend(active(0, &tp.plaquettes));
    let mut data: Vec<Coord> = cp.data();
    data.extend(ap.data());
    data.extend(tp.data());
    let mut prep = tag_basis(0, &cp.data(), spec.control.basis());
    prep.extend(tag_basis(0, &ap.data(), Basis::X));
    prep.extend(tag_basis(0, &tp.data(), spec.target.basis()));
    let mut flips = flip_of(0, cp, spec.control);
    flips.extend(flip_of(0, tp, spec.target));
    for r in 0..d {
        if r == 0 {
            b.round(&parts, &tag(0, &data), &prep, &[], &flips);
        } else {
            b.round(&parts, &tag(0, &data), &[], &[], &[]);
        }
    }

    // stage 1: ZZ merge of control and routing patch through a |+> gap row
    let mut parts1 = active(0, &sl.merged_zz());
    parts1.extend(active(0, &tp.plaquettes));
    let mut data1 = data.clone();
    data1.extend(gap_row.iter().copied());
    let seam_zz = sl.seam_zz();
    let mut m_zz = Vec::new();
    for r in 0..d {
        let prep = if r == 0 {
            tag_basis(0, &gap_row, Basis::X)
        } else {
            vec![]
        };
        let meas = if r == d - 1 {
            tag_basis(0, &gap_row, Basis::X)
        } else {
            vec![]
        };
        let recs = b.round(&parts1, &tag(0, &data1), &prep, &meas, &[]);
        if r == 0 {
            m_zz = seam_zz.iter().map(|tl| recs[&(0, *tl)]).collect();
        }
    }

    // stage 2: XX merge of routing patch and target through a |0> gap column
    let mut parts2 = active(0, &cp.plaquettes);
    parts2.extend(active(0, &sl.merged_xx()));
    let mut data2 = data.clone();
    data2.extend(gap_col.iter().copied());
    let seam_xx = sl.seam_xx();
    let mut m_xx = Vec::new();
    for r in 0..d {
        let prep = if r == 0 {
            tag_basis(0, &gap_col, Basis::Z)
        } else {
            vec![]
        };
        let recs = b.round(&parts2, &tag(0, &data2), &prep, &[], &[]);
        if r == 0 {
            m_xx = seam_xx.iter().map(|tl| recs[&(0, *tl)]).collect();
        }
    }

    // routing patch readout: swap each data atom onto the ancilla atom of
    // the plaquette it heads (three CX, each H-CZ-H), then measure ancillas
    let pairs: Vec<(Coord, u32, u32)> = ap
        .data()
        .into_iter()
        .map(|c| {
            let dq = b.dq(0, c);
            let aq = b.aq(0, c);
            (c, dq, aq)
        })
        .collect();
    let sites: Vec<Gate> = ap
        .data()
        .into_iter()
        .map(|c| (b.data_site(0, c), b.anc_site(0, c)))
        .collect();
    let layers = schedule_cz_layers(layout, &sites);
    let aqs: Vec<u32> = pairs.iter().map(|p| p.2).collect();
    let dqs: Vec<u32> = pairs.iter().map(|p| p.1).collect();
    let cz_all = |b: &mut Builder| {
        for layer in &layers {
            for &g in layer {
                b.push(Op::CZ, vec![pairs[g].1, pairs[g].2]);
            }
            b.tick(timing.t_2q);
        }
    };
    b.push(Op::Reset, aqs.clone());
    b.push(Op::H, aqs.clone());
    b.tick(timing.t_1q);
    cz_all(&mut b);
    let mut both = aqs.clone();
    both.extend(dqs.iter().copied());
    b.push(Op::H, both.clone());
    b.tick(timing.t_1q);
    cz_all(&mut b);
    b.push(Op::H, both);
    b.tick(timing.t_1q);
    cz_all(&mut b);
    b.push(Op::H, aqs);
    b.tick(timing.t_1q);

    // final readout: routing patch via ancillas, gap column, control, target
    for &(c, _, aq) in &pairs {
        let rec = b.measure(physical_basis(c, Basis::Z), aq);
        b.data.insert(
            (0, c),
            DataState::Measured {
                basis: Basis::Z,
                rec,
                at: b.clock,
            },
        );
    }
    b.measure_data(&tag_basis(0, &gap_col, Basis::Z));
    b.measure_data(&tag_basis(0, &cp.data(), spec.readout_control));
    b.measure_data(&tag_basis(0, &tp.data(), spec.readout_target));
    b.tick(timing.t_meas);
    b.close();

    let m_z = b.data_records(0, &ap.logical_z(), Basis::Z);
    // Control logicals run along the seam-side row and column so they match
    // the representatives inside the seam products; the gap atoms on those
    // lines carry split outcomes.
    let c_logical = match spec.readout_control {
        Basis::Z => cp.row(d - 1),
        Basis::X => cp.col(d - 1),
    };
    let mut oc = b.data_records(0, &c_logical, spec.readout_control);
    if spec.readout_control == Basis::X {
        oc.extend(&m_xx);
        oc.extend(b.data_records(0, &[gap_row[d - 1]], Basis::X));
    }
    let mut ot = b.data_records(0, &tp.logical(spec.readout_target), spec.readout_target);
    if spec.readout_target == Basis::Z {
        ot.extend(&m_zz);
        ot.extend(&m_z);
        ot.extend(b.data_records(0, &[gap_col[0]], Basis::Z));
    }
    b.observable(0, spec.readout_control, &oc);
    b.observable(1, spec.readout_target, &ot);
    Ok(b.finish().circuit)
}

/// Two adjacent interleaved groups, each holding one patch per position,
/// separated by a gap line of data clusters. An X merge joins the groups
/// side by side through a gap column, a Z merge stacks them through a gap row.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeLayout {
    pub d: usize,
    pub basis: Basis,
    /// Patch origin of group A and of group B.
    pub origin_a: Coord,
    pub origin_b: Coord,
    pub layout: InterleavedLayout,
}

impl MergeLayout {
    pub fn new(
        k: usize,
        d: usize,
        basis: Basis,
        params: ArrayParams,
    ) -> Result<Self, CodegenError> {
        if d < 3 || d % 2 == 0 {
            return Err(GeometryError::Distance(d).into());
        }
        let s = d as i32 + 1;
        let origin_b = match basis {
            Basis::X => (0, s),
            Basis::Z => (s, 0),
        };
        let mut ml = MergeLayout {
            d,
            basis,
            origin_a: (0, 0),
            origin_b,
            layout: InterleavedLayout::from_cells(k, params, &[], &[])?,
        };
        let mut data = ml.patch(0, 'a').data();
        data.extend(ml.patch(0, 'b').data());
        data.extend(ml.gap());
        let mut anc: Vec<Coord> = ml.merged().iter().map(|p| p.tl).collect();
        anc.extend(ml.patch(0, 'a').plaquettes.iter().map(|p| p.tl));
        anc.extend(ml.patch(0, 'b').plaquettes.iter().map(|p| p.tl));
        anc.sort();
        anc.dedup();
        ml.layout = InterleavedLayout::from_cells(k, params, &data, &anc)?;
        Ok(ml)
    }

    /// Patch of group `'a'` or `'b'` at position `pos`.
    pub fn patch(&self, pos: u32, group: char) -> SurfacePatch {
        let o = if group == 'a' {
            self.origin_a
        } else {
            self.origin_b
        };
        SurfacePatch::new(self.d, pos, o.0, o.1)
    }

    pub fn gap(&self) -> Vec<Coord> {
        let d = self.d as i32;
        match self.basis {
            Basis::X => (0..d).map(|i| (i, d)).collect(),
            Basis::Z => (0..d).map(|j| (d, j)).collect(),
        }
    }

    pub fn merged(&self) -> Vec<Plaquette> {
        let (d, w) = (self.d as i32, 2 * self.d as i32 + 1);
        match self.basis {
            Basis::X => patch_plaquettes(0, 0, d, w),
            Basis::Z => patch_plaquettes(0, 0, w, d),
        }
    }

    fn on_a_side(&self, c: Coord) -> bool {
        match self.basis {
            Basis::X => c.1 < self.d as i32,
            Basis::Z => c.0 < self.d as i32,
        }
    }

    /// Merged stabilizers joining `pos_a` of group A with `pos_b` of group B.
    /// Gap atoms use `pos_a`. Every leg is checked against the ancilla-data
    /// radius.
    pub fn seam_plaquettes(
        &self,
        pos_a: u32,
        pos_b: u32,
    ) -> Result<Vec<ActivePlaquette>, CodegenError> {
        let k = self.layout.k;
        for pos in [pos_a, pos_b] {
            if pos as usize >= k {
                return Err(CodegenError::Position { pos, k });
            }
        }
        let gap = self.gap();
        let a_tls: Vec<Coord> = self.patch(0, 'a').plaquettes.iter().map(|p| p.tl).collect();
        let b_tls: Vec<Coord> = self.patch(0, 'b').plaquettes.iter().map(|p| p.tl).collect();
        let mut out = Vec::new();
        for p in self.merged() {
            let anc_pos = if a_tls.contains(&p.tl) {
                pos_a
            } else if b_tls.contains(&p.tl) {
                pos_b
            } else if self.on_a_side(p.tl) {
                pos_a
            } else {
                pos_b
            };
            let legs = p.legs.map(|l| {
                l.map(|c| {
                    let pos = if gap.contains(&c) || self.on_a_side(c) {
                        pos_a
                    } else {
                        pos_b
                    };
                    (pos, c)
                })
            });
            let ap = ActivePlaquette {
                anc_pos,
                tl: p.tl,
                basis: p.basis,
                legs,
            };
            let a = self
                .layout
                .ancilla_site(p.tl, anc_pos)
                .expect("merged ancilla cluster");
            for &(pos, c) in legs.iter().flatten() {
                let dsite = self.layout.data_site(c, pos).expect("merged data cluster");
                let dist = crate::geometry::distance(self.layout.site(a), self.layout.site(dsite));
                if dist > self.layout.r_ancilla_data + 1e-9 {
                    return Err(CodegenError::InfeasibleSeam(format!(
                        "leg from ancilla {:?}@{} to data {:?}@{} is {dist:.2} um > {} um",
                        p.tl, anc_pos, c, pos, self.layout.r_ancilla_data
                    )));
                }
            }
            out.push(ap);
        }
        Ok(out)
    }

    /// Top-left corners of the new merge-basis stabilizers along the gap.
    pub fn seam(&self) -> Vec<Coord> {
        SurgeryLayout::seam(&self.merged(), &self.gap(), self.basis)
    }
}

/// Joint `basis` measurement between position `pos_a` of group A and
/// `pos_b` of group B: one round on every patch, `d` merged rounds, readout.
/// Uninvolved positions of both groups run ordinary rounds on `|0>` patches.
/// Observable 0 is the seam product of the first merged round.
pub fn gen_interleaved_merge(
    ml: &MergeLayout,
    pos_a: u32,
    pos_b: u32,
    state_a: LogicalState,
    state_b: LogicalState,
    timing: Timing,
) -> Result<Circuit, CodegenError> {
    Ok(merge_with_stats(ml, pos_a, pos_b, state_a, state_b, timing)?.0)
}

/// As [`gen_interleaved_merge`], also returning the CZ layers per merged round.
pub fn merge_with_stats(
    ml: &MergeLayout,
    pos_a: u32,
    pos_b: u32,
    state_a: LogicalState,
    state_b: LogicalState,
    timing: Timing,
) -> Result<(Circuit, usize), CodegenError> {
    let seam_parts = ml.seam_plaquettes(pos_a, pos_b)?;
    let k = ml.layout.k as u32;
    let mut b = Builder::new(&ml.layout, timing);
    let mut parts = Vec::new();
    let mut data = Vec::new();
    let mut prep = Vec::new();
    let mut flips = Vec::new();
    let mut readout = Vec::new();
    let mut others = Vec::new();
    for (group, involved) in [('a', pos_a), ('b', pos_b)] {
        let state_of = |pos| {
            if pos != involved {
                LogicalState::Zero
            } else if group == 'a' {
                state_a
            } else {
                state_b
            }
        };
        for pos in 0..k {
            let patch = ml.patch(pos, group);
            let st = state_of(pos);
            parts.extend(active(pos, &patch.plaquettes));
            if pos != involved {
                others.extend(active(pos, &patch.plaquettes));
            }
            data.extend(tag(pos, &patch.data()));
            prep.extend(tag_basis(pos, &patch.data(), st.basis()));
            readout.extend(tag_basis(pos, &patch.data(), st.basis()));
            flips.extend(flip_of(pos, &patch, st));
        }
    }
    b.round(&parts, &data, &prep, &[], &flips);

    let gap_basis = match ml.basis {
        Basis::X => Basis::Z,
        Basis::Z => Basis::X,
    };
    let gap = tag_basis(pos_a, &ml.gap(), gap_basis);
    let mut merged_parts = others;
    merged_parts.extend(seam_parts);
    let mut merged_data = data.clone();
    merged_data.extend(tag(pos_a, &ml.gap()));
    let seam = ml.seam();
    let mut seam_recs = Vec::new();
    let before = b.cz_layers;
    for r in 0..ml.d {
        let p = if r == 0 { gap.clone() } else { vec![] };
        let recs = b.round(&merged_parts, &merged_data, &p, &[], &[]);
        if r == 0 {
            seam_recs = recs
                .iter()
                .filter(|((_, tl), _)| seam.contains(tl))
                .map(|(_, &m)| m)
                .collect();
        }
    }
    let per_round = (b.cz_layers - before) / ml.d;
    readout.extend(gap);
    b.measure_data(&readout);
    b.tick(timing.t_meas);
    b.close();
    b.observable(0, ml.basis, &seam_recs);
    Ok((b.finish().circuit, per_round))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{parities, random_sample, reference_sample};
    use crate::geometry::build_layout;
    use crate::noise::FrameSampler;

    fn all_zero(c: &Circuit, seeds: u64) -> Vec<Vec<bool>> {
        c.validate().unwrap();
        let (dets, obs) = parities(c, &reference_sample(c));
        assert!(dets.iter().all(|&x| !x), "reference detectors must be zero");
        let mut out = vec![obs];
        for seed in 0..seeds {
            let (dets, obs) = parities(c, &random_sample(c, seed));
            assert!(
                dets.iter().all(|&x| !x),
                "detector fired on noiseless sample, seed {seed}"
            );
            out.push(obs);
        }
        out
    }

    #[test]
    fn memory_detectors_are_deterministic() {
        for k in [1, 4] {
            let layout = build_layout(k, 3, ArrayParams::default()).unwrap();
            for state in LogicalState::ALL {
                let patch = SurfacePatch::new(3, 0, 0, 0);
                let c = gen_memory(&layout, &patch, 3, state, Timing::default()).unwrap();
                assert_eq!(c.detector_count(), 24);
                for obs in all_zero(&c, 4) {
                    assert_eq!(obs, vec![state.flipped()]);
                }
            }
        }
    }

    #[test]
    fn memory_round_has_sixteen_layers_at_k4() {
        let layout = build_layout(4, 3, ArrayParams::default()).unwrap();
        let patch = SurfacePatch::new(3, 2, 0, 0);
        let (_, layers) =
            memory_with_stats(&layout, &patch, 2, LogicalState::Zero, Timing::default()).unwrap();
        assert_eq!(layers, 32);
        let layout = build_layout(1, 3, ArrayParams::default()).unwrap();
        let patch = SurfacePatch::new(3, 0, 0, 0);
        let (_, layers) =
            memory_with_stats(&layout, &patch, 1, LogicalState::Zero, Timing::default()).unwrap();
        assert_eq!(layers, 4);
    }

    #[test]
    fn memory_rejects_zero_rounds_and_bad_position() {
        let layout = build_layout(1, 3, ArrayParams::default()).unwrap();
        let patch = SurfacePatch::new(3, 0, 0, 0);
        assert_eq!(
            gen_memory(&layout, &patch, 0, LogicalState::Zero, Timing::default()),
            Err(CodegenError::Rounds)
        );
        let patch = SurfacePatch::new(3, 1, 0, 0);
        assert!(matches!(
            gen_memory(&layout, &patch, 1, LogicalState::Zero, Timing::default()),
            Err(CodegenError::Position { .. })
        ));
    }

    #[test]
    fn single_data_flip_fires_two_detectors() {
        let layout = build_layout(1, 5, ArrayParams::default()).unwrap();
        let patch = SurfacePatch::new(5, 0, 0, 0);
        let c = gen_memory(&layout, &patch, 4, LogicalState::Zero, Timing::default()).unwrap();
        // after the second round's measurement tick, flip a bulk data atom
        let target = layout.data_site((2, 2), 0).unwrap();
        let q = c.sites.iter().position(|&s| s == Some(target)).unwrap() as u32;
        let mut seen = 0;
        let at = c
            .instructions
            .iter()
            .position(|i| {
                if i.op == Op::Tick(Timing::default().t_meas) {
                    seen += 1;
                }
                seen == 2
            })
            .unwrap();
        for (px, pz) in [(1.0, 0.0), (0.0, 1.0)] {
            let mut noisy = c.clone();
            noisy.instructions.insert(
                at + 1,
                crate::circuit::Instruction::new(Op::PauliChannel(px, 0.0, pz), vec![q]),
            );
            let batch = FrameSampler::new(&noisy).sample_batch(1, 0, 8);
            for fired in batch.fired_lists() {
                assert_eq!(fired.len(), 2, "fired {fired:?}");
            }
        }
        c.validate().unwrap();
    }

    fn expected(spec: CnotSpec) -> Option<(bool, bool)> {
        let (c, t) = (spec.control, spec.target);
        match (c.basis(), t.basis()) {
            (Basis::Z, Basis::Z) => Some((c.flipped(), c.flipped() ^ t.flipped())),
            (Basis::X, Basis::X) => Some((c.flipped() ^ t.flipped(), t.flipped())),
            (Basis::Z, Basis::X) => Some((c.flipped(), t.flipped())),
            (Basis::X, Basis::Z) => None,
        }
    }

    fn truth_specs() -> Vec<(CnotSpec, Option<(bool, bool)>, Option<bool>)> {
        let mut out = Vec::new();
        for c in LogicalState::ALL {
            for t in LogicalState::ALL {
                let mut spec = CnotSpec {
                    control: c,
                    target: t,
                    readout_control: c.basis(),
                    readout_target: t.basis(),
                };
                let e = expected(spec);
                // |+-> control with a Z target makes a Bell pair: check Z Z parity
                let parity = if e.is_none() {
                    spec.readout_control = Basis::Z;
                    spec.readout_target = Basis::Z;
                    Some(t.flipped())
                } else {
                    None
                };
                out.push((spec, e, parity));
            }
        }
        out
    }

    fn check_truth(c: &Circuit, e: Option<(bool, bool)>, parity: Option<bool>) {
        for obs in all_zero(c, 6) {
            if let Some((a, b)) = e {
                assert_eq!(obs, vec![a, b]);
            }
            if let Some(p) = parity {
                assert_eq!(obs[0] ^ obs[1], p);
            }
        }
    }

    #[test]
    fn transversal_cnot_truth_table() {
        let layout = build_layout(4, 3, ArrayParams::default()).unwrap();
        for (spec, e, parity) in truth_specs() {
            let c = gen_transversal_cnot_experiment(&layout, 3, spec, Timing::default()).unwrap();
            check_truth(&c, e, parity);
        }
    }

    #[test]
    fn transversal_needs_two_positions() {
        let layout = build_layout(1, 3, ArrayParams::default()).unwrap();
        assert!(matches!(
            gen_transversal_cnot_experiment(&layout, 3, CnotSpec::default(), Timing::default()),
            Err(CodegenError::GroupTooSmall { .. })
        ));
    }

    #[test]
    fn lattice_surgery_truth_table() {
        let sl = SurgeryLayout::new(3, ArrayParams::default()).unwrap();
        for (spec, e, parity) in truth_specs() {
            let c = gen_lattice_surgery_cnot_experiment(&sl, spec, Timing::default()).unwrap();
            check_truth(&c, e, parity);
        }
    }

    #[test]
    fn surgery_rejects_misplaced_patches() {
        let p = ArrayParams::default();
        let r = SurgeryLayout::with_patches(
            3,
            p,
            SurfacePatch::new(3, 0, 0, 0),
            SurfacePatch::new(3, 0, 6, 0),
            SurfacePatch::new(3, 0, 6, 4),
        );
        assert!(matches!(r, Err(CodegenError::NotAdjacent(_))));
    }

    #[test]
    fn seam_products_are_joint_logicals() {
        let sl = SurgeryLayout::new(5, ArrayParams::default()).unwrap();
        assert_eq!(sl.seam_zz().len(), 5 + 1);
        assert_eq!(sl.seam_xx().len(), 5 + 1);
    }

    #[test]
    fn interleaved_merge_measures_joint_parity() {
        for basis in [Basis::X, Basis::Z] {
            let ml = MergeLayout::new(4, 3, basis, ArrayParams::default()).unwrap();
            let (s0, s1) = match basis {
                Basis::X => (LogicalState::Plus, LogicalState::Minus),
                Basis::Z => (LogicalState::Zero, LogicalState::One),
            };
            for (sa, sb) in [(s0, s0), (s0, s1), (s1, s0), (s1, s1)] {
                let c = gen_interleaved_merge(&ml, 1, 1, sa, sb, Timing::default()).unwrap();
                for obs in all_zero(&c, 4) {
                    assert_eq!(obs, vec![sa.flipped() ^ sb.flipped()]);
                }
            }
        }
    }

    #[test]
    fn same_position_merge_matches_standard_seam() {
        let ml = MergeLayout::new(4, 3, Basis::X, ArrayParams::default()).unwrap();
        let (_, layers) = merge_with_stats(
            &ml,
            3,
            3,
            LogicalState::Plus,
            LogicalState::Plus,
            Timing::default(),
        )
        .unwrap();
        assert_eq!(layers, 16);
        let sl = SurgeryLayout::new(3, ArrayParams::default()).unwrap();
        let shift = sl.ancilla.row0;
        let mut standard: Vec<Coord> = sl.seam_xx().iter().map(|&(i, j)| (i - shift, j)).collect();
        let mut ours = ml.seam();
        standard.sort();
        ours.sort();
        assert_eq!(ours, standard);
        let all = ml.seam_plaquettes(3, 3).unwrap();
        assert!(all
            .iter()
            .all(|p| p.anc_pos == 3 && p.legs.iter().flatten().all(|l| l.0 == 3)));
    }

    #[test]
    fn cross_position_seams_are_checked() {
        let ml = MergeLayout::new(4, 3, Basis::X, ArrayParams::default()).unwrap();
        let mut feasible = 0;
        for a in 0..4 {
            for b in 0..4 {
                match ml.seam_plaquettes(a, b) {
                    Ok(_) => {
                        feasible += 1;
                        let c = gen_interleaved_merge(
                            &ml,
                            a,
                            b,
                            LogicalState::Plus,
                            LogicalState::Minus,
                            Timing::default(),
                        )
                        .unwrap();
                        for obs in all_zero(&c, 2) {
                            assert_eq!(obs, vec![true]);
                        }
                    }
                    Err(e) => assert!(matches!(e, CodegenError::InfeasibleSeam(_))),
                }
            }
        }
        assert!(feasible >= 4);
        let tight = ArrayParams {
            r_ancilla_data: 20.0,
            ..ArrayParams::default()
        };
        let ml = MergeLayout::new(4, 3, Basis::X, tight).unwrap();
        assert!(matches!(
            ml.seam_plaquettes(0, 3),
            Err(CodegenError::InfeasibleSeam(_))
        ));
    }

    #[test]
    fn patch_invariants() {
        use crate::pauli::PauliString;
        for d in [3, 5, 7] {
            let patch = SurfacePatch::new(d, 0, 0, 0);
            assert_eq!(patch.physical_qubits(), 2 * d * d - 1);
            let n = d * d;
            let idx = |c: Coord| (c.0 as usize) * d + c.1 as usize;
            let op = |cs: &[Coord], kind: char| {
                let mut p = PauliString::identity(n);
                for &c in cs {
                    p = p.mul(&PauliString::single(n, idx(c), kind)).unwrap();
                }
                p
            };
            let stabs: Vec<PauliString> = patch
                .plaquettes
                .iter()
                .map(|p| {
                    let legs: Vec<Coord> = p.data().collect();
                    op(&legs, if p.basis == Basis::X { 'X' } else { 'Z' })
                })
                .collect();
            let lz = op(&patch.logical_z(), 'Z');
            let lx = op(&patch.logical_x(), 'X');
            for a in &stabs {
                assert!(a.commutes(&lz).unwrap() && a.commutes(&lx).unwrap());
                for b in &stabs {
                    assert!(a.commutes(b).unwrap());
                }
            }
            assert!(!lz.commutes(&lx).unwrap());
            for p in patch.plaquettes.iter().filter(|p| p.weight() == 4) {
                let kinds: Vec<Basis> = p
                    .legs
                    .iter()
                    .map(|l| physical_basis(l.unwrap(), p.basis))
                    .collect();
                assert_eq!(kinds, vec![Basis::Z, Basis::X, Basis::X, Basis::Z]);
            }
        }
    }
}
