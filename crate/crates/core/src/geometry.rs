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

//! Atom-array geometry for interleaved surface-code groups.
//!
//! Data qubit `(i, j)` of the code lattice and the plaquette whose top-left
//! data qubit is `(i, j)` live on a checkerboard of cells rotated by 45
//! degrees: data at cell `(i + j, j - i)`, plaquettes at `(i + j + 1, j - i)`.
//! Each cell holds a square cluster of `k` atoms, one per logical qubit of the
//! group, so the whole array is a uniform square grid with pitch `spacing`
//! and each stabilizer leg spans `sqrt(k) * spacing`.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::circuit::Basis;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("group size {0} is not one of 1, 4, 9, 16")]
    GroupSize(usize),
    #[error("code distance {0} must be odd and at least 3")]
    Distance(usize),
    #[error("infeasible layout: {invariant} ({detail})")]
    Infeasible { invariant: String, detail: String },
    #[error("unknown site {0}")]
    UnknownSite(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Species {
    Data,
    Ancilla,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomSite {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub species: Species,
    pub cluster: u32,
    pub pos: u32,
}

/// Lattice coordinate of a data qubit, or of a plaquette's top-left corner.
pub type Coord = (i32, i32);

/// A stabilizer plaquette with its data legs in scheduler order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plaquette {
    pub tl: Coord,
    pub basis: Basis,
    /// Legs for the four schedule steps; `None` where the plaquette is cut by a boundary.
    pub legs: [Option<Coord>; 4],
}

impl Plaquette {
    pub fn data(&self) -> impl Iterator<Item = Coord> + '_ {
        self.legs.iter().flatten().copied()
    }

    pub fn weight(&self) -> usize {
        self.legs.iter().flatten().count()
    }
}

/// CSS type of the plaquette with top-left corner `tl`.
pub fn plaquette_basis(tl: Coord) -> Basis {
    if (tl.0 + tl.1).rem_euclid(2) == 1 {
        Basis::X
    } else {
        Basis::Z
    }
}

/// Plaquette at `tl` restricted to data qubits inside the rectangle.
/// X plaquettes visit corners in Z order (TL, TR, BL, BR), Z plaquettes in
/// N order (TL, BL, TR, BR); hook errors then run parallel to the logical
/// operator they could otherwise shorten.
pub fn plaquette(tl: Coord, inside: impl Fn(Coord) -> bool) -> Plaquette {
    let (i, j) = tl;
    let basis = plaquette_basis(tl);
    let order = match basis {
        Basis::X => [(i, j), (i, j + 1), (i + 1, j), (i + 1, j + 1)],
        Basis::Z => [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)],
    };
    let legs = order.map(|c| if inside(c) { Some(c) } else { None });
    Plaquette { tl, basis, legs }
}

/// Stabilizers of a rectangular patch of `h x w` data qubits with top-left
/// data qubit `(row0, col0)`. Top and bottom boundaries carry X-type
/// two-leg checks, left and right boundaries Z-type. `row0` and `col0` must
/// be even so boundary types match the global checkerboard.
pub fn patch_plaquettes(row0: i32, col0: i32, h: i32, w: i32) -> Vec<Plaquette> {
    assert!(row0 % 2 == 0 && col0 % 2 == 0, "patch origin must be even");
    let inside = |(i, j): Coord| i >= row0 && i < row0 + h && j >= col0 && j < col0 + w;
    let mut out = Vec::new();
    for i in row0 - 1..row0 + h {
        for j in col0 - 1..col0 + w {
            let p = plaquette((i, j), inside);
            let top = i == row0 - 1;
            let bottom = i == row0 + h - 1;
            let left = j == col0 - 1;
            let right = j == col0 + w - 1;
            let keep = match (top || bottom, left || right) {
                (true, true) => false,
                (true, false) => p.basis == Basis::X,
                (false, true) => p.basis == Basis::Z,
                (false, false) => true,
            };
            if keep && p.weight() >= 2 {
                out.push(p);
            }
        }
    }
    out
}

fn data_cell((i, j): Coord) -> (i32, i32) {
    (i + j, j - i)
}

fn ancilla_cell((i, j): Coord) -> (i32, i32) {
    (i + j + 1, j - i)
}

#[derive(Debug, Clone, PartialEq)]
struct Cluster {
    species: Species,
    key: Coord,
    first_site: u32,
}

/// Atom positions for one or more interleaved groups of `k` logical qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct InterleavedLayout {
    pub k: usize,
    pub spacing: f64,
    pub r_ancilla_data: f64,
    pub r_data_data: f64,
    pub sites: Vec<AtomSite>,
    clusters: Vec<Cluster>,
    data_index: HashMap<Coord, u32>,
    ancilla_index: HashMap<Coord, u32>,
}

/// Interaction radii and spacing, in micrometres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayParams {
    pub spacing: f64,
    pub r_ancilla_data: f64,
    pub r_data_data: f64,
}

impl Default for ArrayParams {
    fn default() -> Self {
        ArrayParams {
            spacing: 10.0,
            r_ancilla_data: 28.0,
            r_data_data: 14.0,
        }
    }
}

pub fn group_side(k: usize) -> Result<usize, GeometryError> {
    match k {
        1 => Ok(1),
        4 => Ok(2),
        9 => Ok(3),
        16 => Ok(4),
        _ => Err(GeometryError::GroupSize(k)),
    }
}

/// Single d x d patch per position of a group of `k` logical qubits.
pub fn build_layout(
    k: usize,
    d: usize,
    params: ArrayParams,
) -> Result<InterleavedLayout, GeometryError> {
    if d < 3 || d % 2 == 0 {
        return Err(GeometryError::Distance(d));
    }
    let d = d as i32;
    let data: Vec<Coord> = (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).collect();
    let anc: Vec<Coord> = patch_plaquettes(0, 0, d, d).iter().map(|p| p.tl).collect();
    InterleavedLayout::from_cells(k, params, &data, &anc)
}

impl InterleavedLayout {
    /// Places a data cluster at each data coordinate and an ancilla cluster
    /// at each plaquette corner, then checks the radius invariants.
    pub fn from_cells(
        k: usize,
        params: ArrayParams,
        data: &[Coord],
        ancillas: &[Coord],
    ) -> Result<Self, GeometryError> {
        let side = group_side(k)?;
        let pitch = side as f64 * params.spacing;
        let cells: Vec<(Species, Coord, (i32, i32))> = data
            .iter()
            .map(|&c| (Species::Data, c, data_cell(c)))
            .chain(
                ancillas
                    .iter()
                    .map(|&c| (Species::Ancilla, c, ancilla_cell(c))),
            )
            .collect();
        let min_a = cells.iter().map(|c| c.2 .0).min().unwrap_or(0);
        let min_b = cells.iter().map(|c| c.2 .1).min().unwrap_or(0);
        let mut layout = InterleavedLayout {
            k,
            spacing: params.spacing,
            r_ancilla_data: params.r_ancilla_data,
            r_data_data: params.r_data_data,
            sites: Vec::new(),
            clusters: Vec::new(),
            data_index: HashMap::new(),
            ancilla_index: HashMap::new(),
        };
        for (species, key, (a, b)) in cells {
            let index = match species {
                Species::Data => &mut layout.data_index,
                Species::Ancilla => &mut layout.ancilla_index,
            };
            if index.contains_key(&key) {
                continue;
            }
            let cid = layout.clusters.len() as u32;
            index.insert(key, cid);
            let first_site = layout.sites.len() as u32;
            layout.clusters.push(Cluster {
                species,
                key,
                first_site,
            });
            let ox = (a - min_a) as f64 * pitch;
            let oy = (b - min_b) as f64 * pitch;
            for p in 0..k {
                layout.sites.push(AtomSite {
                    id: layout.sites.len() as u32,
                    x: ox + (p / side) as f64 * params.spacing,
                    y: oy + (p % side) as f64 * params.spacing,
                    species,
                    cluster: cid,
                    pos: p as u32,
                });
            }
        }
        layout.check_radii()?;
        Ok(layout)
    }

    fn check_radii(&self) -> Result<(), GeometryError> {
        let tol = 1e-9;
        for (&tl, &cid) in &self.ancilla_index {
            let p = plaquette(tl, |c| self.data_index.contains_key(&c));
            for leg in p.data() {
                let did = self.data_index[&leg];
                for pos in 0..self.k as u32 {
                    let a = self.site(self.clusters[cid as usize].first_site + pos);
                    let b = self.site(self.clusters[did as usize].first_site + pos);
                    let dist = distance(a, b);
                    if dist > self.r_ancilla_data + tol {
                        return Err(GeometryError::Infeasible {
                            invariant: "stabilizer leg within ancilla-data radius".into(),
                            detail: format!(
                                "ancilla site {} reaches data site {} at {dist} um > {} um",
                                a.id, b.id, self.r_ancilla_data
                            ),
                        });
                    }
                }
            }
        }
        if self.k > 1 && self.spacing > self.r_data_data + tol {
            return Err(GeometryError::Infeasible {
                invariant: "transversal pairs within data-data radius".into(),
                detail: format!(
                    "neighbouring cluster members are {} um apart > {} um",
                    self.spacing, self.r_data_data
                ),
            });
        }
        Ok(())
    }

    pub fn side(&self) -> usize {
        group_side(self.k).expect("validated at construction")
    }

    pub fn site(&self, id: u32) -> &AtomSite {
        &self.sites[id as usize]
    }

    /// Atom holding logical position `pos` of the data cluster at `c`.
    pub fn data_site(&self, c: Coord, pos: u32) -> Option<u32> {
        self.data_index
            .get(&c)
            .map(|&cid| self.clusters[cid as usize].first_site + pos)
    }

    /// Atom holding logical position `pos` of the ancilla cluster at plaquette `tl`.
    pub fn ancilla_site(&self, tl: Coord, pos: u32) -> Option<u32> {
        self.ancilla_index
            .get(&tl)
            .map(|&cid| self.clusters[cid as usize].first_site + pos)
    }

    pub fn data_coords(&self) -> Vec<Coord> {
        let mut v: Vec<Coord> = self.data_index.keys().copied().collect();
        v.sort();
        v
    }

    pub fn ancilla_coords(&self) -> Vec<Coord> {
        let mut v: Vec<Coord> = self.ancilla_index.keys().copied().collect();
        v.sort();
        v
    }

    pub fn count(&self, species: Species) -> usize {
        self.sites.iter().filter(|s| s.species == species).count()
    }

    /// Cluster centre-to-centre distance between neighbouring cells.
    pub fn cluster_pitch(&self) -> f64 {
        self.side() as f64 * self.spacing
    }

    /// CSV dump: `site_id,x_um,y_um,species,cluster,pos`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("site_id,x_um,y_um,species,cluster,pos\n");
        for a in &self.sites {
            let sp = match a.species {
                Species::Data => "data",
                Species::Ancilla => "ancilla",
            };
            let _ = writeln!(s, "{},{},{},{},{},{}", a.id, a.x, a.y, sp, a.cluster, a.pos);
        }
        s
    }
}

pub fn distance(a: &AtomSite, b: &AtomSite) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
}

/// A two-site Rydberg gate.
pub type Gate = (u32, u32);

/// Whether two distinct gates may not run in the same layer. Each gate
/// blockades a disk around each of its atoms whose radius is its leg length;
/// gates conflict when an atom of one lies strictly inside a disk of the other.
pub fn gates_conflict(layout: &InterleavedLayout, g: Gate, h: Gate) -> bool {
    if g.0 == h.0 || g.0 == h.1 || g.1 == h.0 || g.1 == h.1 {
        return true;
    }
    let (g0, g1) = (layout.site(g.0), layout.site(g.1));
    let (h0, h1) = (layout.site(h.0), layout.site(h.1));
    let reach = distance(g0, g1).max(distance(h0, h1)) - 1e-9;
    [g0, g1]
        .iter()
        .any(|a| [h0, h1].iter().any(|b| distance(a, b) < reach))
}

/// Symmetric, irreflexive conflict relation as adjacency lists.
pub fn rydberg_conflicts(layout: &InterleavedLayout, gates: &[Gate]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); gates.len()];
    for i in 0..gates.len() {
        for j in i + 1..gates.len() {
            if gates_conflict(layout, gates[i], gates[j]) {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    adj
}

/// Greedy first-fit layering in (cluster, position) order of each gate's first site.
/// Returns gate indices per layer.
pub fn schedule_cz_layers(layout: &InterleavedLayout, gates: &[Gate]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..gates.len()).collect();
    order.sort_by_key(|&g| {
        let s = layout.site(gates[g].0);
        (s.cluster, s.pos, g)
    });
    let mut layers: Vec<Vec<usize>> = Vec::new();
    for g in order {
        let slot = layers.iter().position(|layer| {
            layer
                .iter()
                .all(|&h| !gates_conflict(layout, gates[g], gates[h]))
        });
        match slot {
            Some(l) => layers[l].push(g),
            None => layers.push(vec![g]),
        }
    }
    layers
}

/// The stabilizer CZ/CX legs of one full round for every position of the
/// group, one list per schedule step. Gates are `(ancilla site, data site)`.
pub fn stabilizer_steps(layout: &InterleavedLayout, plaquettes: &[Plaquette]) -> [Vec<Gate>; 4] {
    let mut steps: [Vec<Gate>; 4] = Default::default();
    for p in plaquettes {
        for (step, leg) in p.legs.iter().enumerate() {
            if let Some(c) = leg {
                for pos in 0..layout.k as u32 {
                    let a = layout
                        .ancilla_site(p.tl, pos)
                        .expect("plaquette has an ancilla cluster");
                    let d = layout.data_site(*c, pos).expect("leg has a data cluster");
                    steps[step].push((a, d));
                }
            }
        }
    }
    steps
}

/// Layered schedule of a full round: each step is scheduled on its own so
/// leg order is preserved.
pub fn schedule_round(layout: &InterleavedLayout, plaquettes: &[Plaquette]) -> Vec<Vec<Gate>> {
    stabilizer_steps(layout, plaquettes)
        .iter()
        .flat_map(|gates| {
            schedule_cz_layers(layout, gates)
                .into_iter()
                .map(|layer| layer.into_iter().map(|g| gates[g]).collect::<Vec<_>>())
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Wall-clock duration of a stabilizer round.
pub fn round_duration(
    cz_layers: usize,
    one_qubit_layers: usize,
    t_2q: f64,
    t_1q: f64,
    t_meas: f64,
) -> f64 {
    cz_layers as f64 * t_2q + one_qubit_layers as f64 * t_1q + t_meas
}
