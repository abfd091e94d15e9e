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

//! Maximum-weight general matching (Edmonds' blossom algorithm with dual
//! variables, O(n^3)), following Joris van Rantwijk's reference formulation.
//! Integer weights keep every dual update exact.

struct Matcher<'a> {
    nv: usize,
    edges: &'a [(usize, usize, i64)],
    endpoint: Vec<usize>,
    neighbend: Vec<Vec<usize>>,
    mate: Vec<isize>,
    label: Vec<u8>,
    labelend: Vec<isize>,
    inblossom: Vec<usize>,
    blossomparent: Vec<isize>,
    blossomchilds: Vec<Vec<usize>>,
    blossombase: Vec<isize>,
    blossomendps: Vec<Vec<usize>>,
    bestedge: Vec<isize>,
    blossombestedges: Vec<Option<Vec<usize>>>,
    unusedblossoms: Vec<usize>,
    dualvar: Vec<i64>,
    allowedge: Vec<bool>,
    queue: Vec<usize>,
}

impl<'a> Matcher<'a> {
    fn slack(&self, k: usize) -> i64 {
        let (i, j, w) = self.edges[k];
        self.dualvar[i] + self.dualvar[j] - 2 * w
    }

    fn leaves(&self, b: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![b];
        while let Some(t) = stack.pop() {
            if t < self.nv {
                out.push(t);
            } else {
                for &c in self.blossomchilds[t].iter().rev() {
                    stack.push(c);
                }
            }
        }
        out
    }

    fn assign_label(&mut self, w: usize, t: u8, p: isize) {
        let b = self.inblossom[w];
        self.label[w] = t;
        self.label[b] = t;
        self.labelend[w] = p;
        self.labelend[b] = p;
        self.bestedge[w] = -1;
        self.bestedge[b] = -1;
        if t == 1 {
            let l = self.leaves(b);
            self.queue.extend(l);
        } else if t == 2 {
            let base = self.blossombase[b] as usize;
            let mb = self.mate[base];
            debug_assert!(mb >= 0);
            self.assign_label(self.endpoint[mb as usize], 1, mb ^ 1);
        }
    }

    fn scan_blossom(&mut self, v: usize, w: usize) -> isize {
        let mut path = Vec::new();
        let mut base = -1isize;
        let (mut v, mut w) = (v as isize, w as isize);
        while v != -1 || w != -1 {
            let mut b = self.inblossom[v as usize];
            if self.label[b] & 4 != 0 {
                base = self.blossombase[b];
                break;
            }
            path.push(b);
            self.label[b] = 5;
            if self.labelend[b] == -1 {
                v = -1;
            } else {
                v = self.endpoint[self.labelend[b] as usize] as isize;
                b = self.inblossom[v as usize];
                v = self.endpoint[self.labelend[b] as usize] as isize;
            }
            if w != -1 {
                std::mem::swap(&mut v, &mut w);
            }
        }
        for b in path {
            self.label[b] = 1;
        }
        base
    }

    fn add_blossom(&mut self, base: usize, k: usize) {
        let (v, w, _) = self.edges[k];
        let bb = self.inblossom[base];
        let mut bv = self.inblossom[v];
        let mut bw = self.inblossom[w];
        let b = self.unusedblossoms.pop().expect("free blossom slot");
        self.blossombase[b] = base as isize;
        self.blossomparent[b] = -1;
        self.blossomparent[bb] = b as isize;
        let mut path = Vec::new();
        let mut endps = Vec::new();
        while bv != bb {
            self.blossomparent[bv] = b as isize;
            path.push(bv);
            endps.push(self.labelend[bv] as usize);
            let v = self.endpoint[self.labelend[bv] as usize];
            bv = self.inblossom[v];
        }
        path.push(bb);
        path.reverse();
        endps.reverse();
        endps.push(2 * k);
        while bw != bb {
            self.blossomparent[bw] = b as isize;
            path.push(bw);
            endps.push((self.labelend[bw] ^ 1) as usize);
            let w = self.endpoint[self.labelend[bw] as usize];
            bw = self.inblossom[w];
        }
        self.label[b] = 1;
        self.labelend[b] = self.labelend[bb];
        self.dualvar[b] = 0;
        self.blossomchilds[b] = path.clone();
        self.blossomendps[b] = endps;
        for v in self.leaves(b) {
            if self.label[self.inblossom[v]] == 2 {
                self.queue.push(v);
            }
            self.inblossom[v] = b;
        }
        let mut bestedgeto = vec![-1isize; 2 * self.nv];
        for &bv in &path {
            let nblists: Vec<Vec<usize>> = match self.blossombestedges[bv].take() {
                Some(list) => vec![list],
                None => self
                    .leaves(bv)
                    .into_iter()
                    .map(|v| self.neighbend[v].iter().map(|p| p / 2).collect())
                    .collect(),
            };
            for nblist in nblists {
                for k in nblist {
                    let (mut i, mut j, _) = self.edges[k];
                    if self.inblossom[j] == b {
                        std::mem::swap(&mut i, &mut j);
                    }
                    let _ = i;
                    let bj = self.inblossom[j];
                    if bj != b
                        && self.label[bj] == 1
                        && (bestedgeto[bj] == -1
                            || self.slack(k) < self.slack(bestedgeto[bj] as usize))
                    {
                        bestedgeto[bj] = k as isize;
                    }
                }
            }
            self.bestedge[bv] = -1;
        }
        let list: Vec<usize> = bestedgeto
            .into_iter()
            .filter(|&k| k != -1)
            .map(|k| k as usize)
            .collect();
        self.bestedge[b] = -1;
        for &k in &list {
            if self.bestedge[b] == -1 || self.slack(k) < self.slack(self.bestedge[b] as usize) {
                self.bestedge[b] = k as isize;
            }
        }
        self.blossombestedges[b] = Some(list);
    }

    fn expand_blossom(&mut self, b: usize, endstage: bool) {
        let childs = self.blossomchilds[b].clone();
        for &s in &childs {
            self.blossomparent[s] = -1;
            if s < self.nv {
                self.inblossom[s] = s;
            } else if endstage && self.dualvar[s] == 0 {
                self.expand_blossom(s, endstage);
            } else {
                for v in self.leaves(s) {
                    self.inblossom[v] = s;
                }
            }
        }
        if !endstage && self.label[b] == 2 {
            let entrychild = self.inblossom[self.endpoint[(self.labelend[b] ^ 1) as usize]];
            let len = childs.len() as isize;
            let mut j = childs
                .iter()
                .position(|&c| c == entrychild)
                .expect("entry child") as isize;
            let (jstep, endptrick): (isize, usize) = if j & 1 == 1 {
                j -= len;
                (1, 0)
            } else {
                (-1, 1)
            };
            let at = |j: isize| -> usize { j.rem_euclid(len) as usize };
            let endps = self.blossomendps[b].clone();
            let mut p = self.labelend[b] as usize;
            while j != 0 {
                self.label[self.endpoint[p ^ 1]] = 0;
                let q = endps[at(j - endptrick as isize)];
                self.label[self.endpoint[q ^ endptrick ^ 1]] = 0;
                self.assign_label(self.endpoint[p ^ 1], 2, p as isize);
                self.allowedge[q / 2] = true;
                j += jstep;
                p = endps[at(j - endptrick as isize)] ^ endptrick;
                self.allowedge[p / 2] = true;
                j += jstep;
            }
            let bv = childs[at(j)];
            self.label[self.endpoint[p ^ 1]] = 2;
            self.label[bv] = 2;
            self.labelend[self.endpoint[p ^ 1]] = p as isize;
            self.labelend[bv] = p as isize;
            self.bestedge[bv] = -1;
            j += jstep;
            while childs[at(j)] != entrychild {
                let bv = childs[at(j)];
                if self.label[bv] == 1 {
                    j += jstep;
                    continue;
                }
                let mut found = None;
                for v in self.leaves(bv) {
                    if self.label[v] != 0 {
                        found = Some(v);
                        break;
                    }
                }
                if let Some(v) = found {
                    self.label[v] = 0;
                    let mb = self.mate[self.blossombase[bv] as usize];
                    self.label[self.endpoint[mb as usize]] = 0;
                    let le = self.labelend[v];
                    self.assign_label(v, 2, le);
                }
                j += jstep;
            }
        }
        self.label[b] = 0;
        self.labelend[b] = -1;
        self.blossomchilds[b].clear();
        self.blossomendps[b].clear();
        self.blossombase[b] = -1;
        self.blossombestedges[b] = None;
        self.bestedge[b] = -1;
        self.unusedblossoms.push(b);
    }

    fn augment_blossom(&mut self, b: usize, v: usize) {
        let mut t = v;
        while self.blossomparent[t] != b as isize {
            t = self.blossomparent[t] as usize;
        }
        if t >= self.nv {
            self.augment_blossom(t, v);
        }
        let len = self.blossomchilds[b].len() as isize;
        let i = self.blossomchilds[b]
            .iter()
            .position(|&c| c == t)
            .expect("child") as isize;
        let mut j = i;
        let (jstep, endptrick): (isize, usize) = if i & 1 == 1 {
            j -= len;
            (1, 0)
        } else {
            (-1, 1)
        };
        let at = |j: isize| -> usize { j.rem_euclid(len) as usize };
        while j != 0 {
            j += jstep;
            let t = self.blossomchilds[b][at(j)];
            let p = self.blossomendps[b][at(j - endptrick as isize)] ^ endptrick;
            if t >= self.nv {
                self.augment_blossom(t, self.endpoint[p]);
            }
            j += jstep;
            let t = self.blossomchilds[b][at(j)];
            if t >= self.nv {
                self.augment_blossom(t, self.endpoint[p ^ 1]);
            }
            self.mate[self.endpoint[p]] = (p ^ 1) as isize;
            self.mate[self.endpoint[p ^ 1]] = p as isize;
        }
        let i = i as usize;
        self.blossomchilds[b].rotate_left(i);
        self.blossomendps[b].rotate_left(i);
        self.blossombase[b] = self.blossombase[self.blossomchilds[b][0]];
    }

    fn augment_matching(&mut self, k: usize) {
        let (v, w, _) = self.edges[k];
        for (s0, p0) in [(v, 2 * k + 1), (w, 2 * k)] {
            let (mut s, mut p) = (s0, p0);
            loop {
                let bs = self.inblossom[s];
                if bs >= self.nv {
                    self.augment_blossom(bs, s);
                }
                self.mate[s] = p as isize;
                if self.labelend[bs] == -1 {
                    break;
                }
                let t = self.endpoint[self.labelend[bs] as usize];
                let bt = self.inblossom[t];
                s = self.endpoint[self.labelend[bt] as usize];
                let j = self.endpoint[(self.labelend[bt] ^ 1) as usize];
                if bt >= self.nv {
                    self.augment_blossom(bt, j);
                }
                self.mate[j] = self.labelend[bt];
                p = (self.labelend[bt] ^ 1) as usize;
            }
        }
    }
}

/// Maximum-weight matching on `nv` vertices. With `max_cardinality`, the
/// heaviest among the maximum-cardinality matchings. Returns each vertex's
/// partner.
pub fn max_weight_matching(
    nv: usize,
    edges: &[(usize, usize, i64)],
    max_cardinality: bool,
) -> Vec<Option<usize>> {
    if edges.is_empty() {
        return vec![None; nv];
    }
    let maxweight = edges.iter().map(|e| e.2).max().unwrap_or(0).max(0);
    let endpoint: Vec<usize> = (0..2 * edges.len())
        .map(|p| {
            if p % 2 == 0 {
                edges[p / 2].0
            } else {
                edges[p / 2].1
            }
        })
        .collect();
    let mut neighbend = vec![Vec::new(); nv];
    for (k, &(i, j, _)) in edges.iter().enumerate() {
        neighbend[i].push(2 * k + 1);
        neighbend[j].push(2 * k);
    }
    let mut m = Matcher {
        nv,
        edges,
        endpoint,
        neighbend,
        mate: vec![-1; nv],
        label: vec![0; 2 * nv],
        labelend: vec![-1; 2 * nv],
        inblossom: (0..nv).collect(),
        blossomparent: vec![-1; 2 * nv],
        blossomchilds: vec![Vec::new(); 2 * nv],
        blossombase: (0..nv as isize)
            .chain(std::iter::repeat_n(-1, nv))
            .collect(),
        blossomendps: vec![Vec::new(); 2 * nv],
        bestedge: vec![-1; 2 * nv],
        blossombestedges: vec![None; 2 * nv],
        unusedblossoms: (nv..2 * nv).collect(),
        dualvar: std::iter::repeat_n(maxweight, nv)
            .chain(std::iter::repeat_n(0, nv))
            .collect(),
        allowedge: vec![false; edges.len()],
        queue: Vec::new(),
    };
    for _ in 0..nv {
        m.label.iter_mut().for_each(|l| *l = 0);
        m.bestedge.iter_mut().for_each(|b| *b = -1);
        for b in nv..2 * nv {
            m.blossombestedges[b] = None;
        }
        m.allowedge.iter_mut().for_each(|a| *a = false);
        m.queue.clear();
        for v in 0..nv {
            if m.mate[v] == -1 && m.label[m.inblossom[v]] == 0 {
                m.assign_label(v, 1, -1);
            }
        }
        let mut augmented = false;
        loop {
            while !augmented {
                let Some(v) = m.queue.pop() else { break };
                for idx in 0..m.neighbend[v].len() {
                    let p = m.neighbend[v][idx];
                    let k = p / 2;
                    let w = m.endpoint[p];
                    if m.inblossom[v] == m.inblossom[w] {
                        continue;
                    }
                    let mut kslack = 0;
                    if !m.allowedge[k] {
                        kslack = m.slack(k);
                        if kslack <= 0 {
                            m.allowedge[k] = true;
                        }
                    }
                    if m.allowedge[k] {
                        if m.label[m.inblossom[w]] == 0 {
                            m.assign_label(w, 2, (p ^ 1) as isize);
                        } else if m.label[m.inblossom[w]] == 1 {
                            let base = m.scan_blossom(v, w);
                            if base >= 0 {
                                m.add_blossom(base as usize, k);
                            } else {
                                m.augment_matching(k);
                                augmented = true;
                                break;
                            }
                        } else if m.label[w] == 0 {
                            m.label[w] = 2;
                            m.labelend[w] = (p ^ 1) as isize;
                        }
                    } else if m.label[m.inblossom[w]] == 1 {
                        let b = m.inblossom[v];
                        if m.bestedge[b] == -1 || kslack < m.slack(m.bestedge[b] as usize) {
                            m.bestedge[b] = k as isize;
                        }
                    } else if m.label[w] == 0
                        && (m.bestedge[w] == -1 || kslack < m.slack(m.bestedge[w] as usize))
                    {
                        m.bestedge[w] = k as isize;
                    }
                }
            }
            if augmented {
                break;
            }
            let mut deltatype = -1;
            let mut delta = 0i64;
            let mut deltaedge = 0usize;
            let mut deltablossom = 0usize;
            if !max_cardinality {
                deltatype = 1;
                delta = *m.dualvar[..nv].iter().min().expect("vertices");
            }
            for v in 0..nv {
                if m.label[m.inblossom[v]] == 0 && m.bestedge[v] != -1 {
                    let d = m.slack(m.bestedge[v] as usize);
                    if deltatype == -1 || d < delta {
                        delta = d;
                        deltatype = 2;
                        deltaedge = m.bestedge[v] as usize;
                    }
                }
            }
            for b in 0..2 * nv {
                if m.blossomparent[b] == -1 && m.label[b] == 1 && m.bestedge[b] != -1 {
                    let kslack = m.slack(m.bestedge[b] as usize);
                    debug_assert_eq!(kslack % 2, 0);
                    let d = kslack / 2;
                    if deltatype == -1 || d < delta {
                        delta = d;
                        deltatype = 3;
                        deltaedge = m.bestedge[b] as usize;
                    }
                }
            }
            for b in nv..2 * nv {
                if m.blossombase[b] >= 0
                    && m.blossomparent[b] == -1
                    && m.label[b] == 2
                    && (deltatype == -1 || m.dualvar[b] < delta)
                {
                    delta = m.dualvar[b];
                    deltatype = 4;
                    deltablossom = b;
                }
            }
            if deltatype == -1 {
                deltatype = 1;
                delta = (*m.dualvar[..nv].iter().min().expect("vertices")).max(0);
            }
            for v in 0..nv {
                match m.label[m.inblossom[v]] {
                    1 => m.dualvar[v] -= delta,
                    2 => m.dualvar[v] += delta,
                    _ => {}
                }
            }
            for b in nv..2 * nv {
                if m.blossombase[b] >= 0 && m.blossomparent[b] == -1 {
                    match m.label[b] {
                        1 => m.dualvar[b] += delta,
                        2 => m.dualvar[b] -= delta,
                        _ => {}
                    }
                }
            }
            match deltatype {
                1 => break,
                2 => {
                    m.allowedge[deltaedge] = true;
                    let (mut i, j, _) = m.edges[deltaedge];
                    if m.label[m.inblossom[i]] == 0 {
                        i = j;
                    }
                    m.queue.push(i);
                }
                3 => {
                    m.allowedge[deltaedge] = true;
                    let (i, _, _) = m.edges[deltaedge];
                    m.queue.push(i);
                }
                _ => m.expand_blossom(deltablossom, false),
            }
        }
        if !augmented {
            break;
        }
        for b in nv..2 * nv {
            if m.blossomparent[b] == -1
                && m.blossombase[b] >= 0
                && m.label[b] == 1
                && m.dualvar[b] == 0
            {
                m.expand_blossom(b, true);
            }
        }
    }
    (0..nv)
        .map(|v| {
            if m.mate[v] >= 0 {
                Some(m.endpoint[m.mate[v] as usize])
            } else {
                None
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Best (cardinality, weight) over all matchings by enumeration.
    fn brute(nv: usize, edges: &[(usize, usize, i64)], used: u32, max_card: bool) -> (usize, i64) {
        let Some(v) = (0..nv).find(|&v| used >> v & 1 == 0) else {
            return (0, 0);
        };
        let mut best = brute(nv, edges, used | 1 << v, max_card);
        for &(a, b, w) in edges {
            let other = if a == v {
                b
            } else if b == v {
                a
            } else {
                continue;
            };
            if used >> other & 1 == 1 || other == v {
                continue;
            }
            let (c, s) = brute(nv, edges, used | 1 << v | 1 << other, max_card);
            let cand = (c + 1, s + w);
            let better = if max_card {
                cand > best
            } else {
                cand.1 > best.1
            };
            if better {
                best = cand;
            }
        }
        best
    }

    #[test]
    fn matches_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for case in 0..400 {
            let nv = rng.gen_range(2..=9);
            let mut edges = Vec::new();
            for i in 0..nv {
                for j in i + 1..nv {
                    if rng.gen_bool(0.6) {
                        edges.push((i, j, rng.gen_range(1..40)));
                    }
                }
            }
            let max_card = case % 2 == 0;
            let mate = max_weight_matching(nv, &edges, max_card);
            let mut card = 0;
            let mut weight = 0;
            for (v, m) in mate.iter().enumerate() {
                if let Some(u) = *m {
                    assert_eq!(mate[u], Some(v));
                    if v < u {
                        card += 1;
                        weight += edges
                            .iter()
                            .filter(|e| (e.0 == v && e.1 == u) || (e.0 == u && e.1 == v))
                            .map(|e| e.2)
                            .next()
                            .expect("matched along an edge");
                    }
                }
            }
            let (bc, bw) = brute(nv, &edges, 0, max_card);
            if max_card {
                assert_eq!((card, weight), (bc, bw), "case {case}");
            } else {
                assert_eq!(weight, bw, "case {case}");
            }
        }
    }
}
