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

//! Circuit-level noise and a bit-packed Pauli-frame sampler.
//!
//! Shots are simulated 1024 at a time: every qubit carries 16 words of X
//! and Z frame bits, one bit per shot. Faults are drawn with geometric skips
//! so that sparse channels cost one draw per batch.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::circuit::{Circuit, Op};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("invalid noise parameter: {0}")]
    Param(String),
    #[error("circuit already carries noise instructions")]
    AlreadyNoisy,
    #[error("reference sample has {got} measurements, circuit has {expected}")]
    ReferenceLength { expected: usize, got: usize },
}

/// Physical error rates and timings. Times in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NoiseParams {
    pub p_1q: f64,
    pub p_2q: f64,
    pub p_meas: f64,
    pub t_1q: f64,
    pub t_2q: f64,
    pub t_meas: f64,
    /// Energy relaxation time.
    pub t1: f64,
    /// Dephasing time.
    pub t2: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams {
            p_1q: 1e-3,
            p_2q: 1e-3,
            p_meas: 1e-3,
            t_1q: 1.0,
            t_2q: 5.0,
            t_meas: 1e4,
            t1: 1e6,
            t2: 1e6,
        }
    }
}

impl NoiseParams {
    /// All gate and measurement error rates set to `p`, timings at defaults.
    pub fn uniform(p: f64) -> Self {
        NoiseParams {
            p_1q: p,
            p_2q: p,
            p_meas: p,
            ..Default::default()
        }
    }

    /// No errors and no decoherence.
    pub fn noiseless() -> Self {
        NoiseParams {
            t1: f64::INFINITY,
            t2: f64::INFINITY,
            ..NoiseParams::uniform(0.0)
        }
    }

    pub fn with_coherence(mut self, t: f64) -> Self {
        self.t1 = t;
        self.t2 = t;
        self
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        for (name, p) in [
            ("p_1q", self.p_1q),
            ("p_2q", self.p_2q),
            ("p_meas", self.p_meas),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(NoiseError::Param(format!("{name} = {p} outside [0, 1]")));
            }
        }
        for (name, t) in [
            ("t_1q", self.t_1q),
            ("t_2q", self.t_2q),
            ("t_meas", self.t_meas),
            ("T1", self.t1),
            ("T2", self.t2),
        ] {
            if !(t > 0.0) {
                return Err(NoiseError::Param(format!("{name} = {t} must be positive")));
            }
        }
        if self.t2 > 2.0 * self.t1 {
            return Err(NoiseError::Param(format!(
                "T2 = {} exceeds 2*T1 = {}",
                self.t2,
                2.0 * self.t1
            )));
        }
        Ok(())
    }
}

/// Pauli-twirled amplitude and phase damping over an idle period `t`.
pub fn idle_twirl_probs(t: f64, t1: f64, t2: f64) -> Result<(f64, f64, f64), NoiseError> {
    if !(t >= 0.0) {
        return Err(NoiseError::Param(format!("idle time {t} is negative")));
    }
    if t2 > 2.0 * t1 {
        return Err(NoiseError::Param(format!(
            "T2 = {t2} exceeds 2*T1 = {}",
            2.0 * t1
        )));
    }
    let decay = |tau: f64| {
        if tau.is_infinite() {
            0.0
        } else {
            -(-t / tau).exp_m1()
        }
    };
    let pxy = decay(t1) / 4.0;
    let pz = (decay(t2) / 2.0 - pxy).max(0.0);
    Ok((pxy, pxy, pz))
}

/// Inserts depolarizing gate errors, measurement flips, reset errors and
/// per-tick idle decoherence.
pub fn attach_noise(c: &Circuit, params: &NoiseParams) -> Result<Circuit, NoiseError> {
    params.validate()?;
    if c.has_noise() {
        return Err(NoiseError::AlreadyNoisy);
    }
    let mut out = Circuit::new(c.n_qubits);
    out.sites = c.sites.clone();
    let mut busy = vec![0.0f64; c.n_qubits];
    let mut touched: Vec<usize> = Vec::new();
    let mark = |busy: &mut Vec<f64>, touched: &mut Vec<usize>, q: u32, t: f64| {
        let q = q as usize;
        if busy[q] == 0.0 {
            touched.push(q);
        }
        // tiny offset so zero-duration operations still count as activity
        busy[q] += t.max(f64::MIN_POSITIVE);
    };
    for ins in &c.instructions {
        let ts = &ins.targets;
        match &ins.op {
            Op::H | Op::S | Op::X | Op::Z => {
                out.instructions.push(ins.clone());
                if params.p_1q > 0.0 {
                    out.push(Op::Depol1(params.p_1q), ts.clone());
                }
                for &q in ts {
                    mark(&mut busy, &mut touched, q, params.t_1q);
                }
            }
            Op::CX | Op::CZ => {
                out.instructions.push(ins.clone());
                if params.p_2q > 0.0 {
                    out.push(Op::Depol2(params.p_2q), ts.clone());
                }
                for &q in ts {
                    mark(&mut busy, &mut touched, q, params.t_2q);
                }
            }
            Op::Reset => {
                out.instructions.push(ins.clone());
                if params.p_meas > 0.0 {
                    out.push(Op::PauliChannel(params.p_meas, 0.0, 0.0), ts.clone());
                }
                for &q in ts {
                    mark(&mut busy, &mut touched, q, 0.0);
                }
            }
            Op::MZ | Op::MX => {
                if params.p_meas > 0.0 {
                    out.push(Op::MFlip(params.p_meas), ts.clone());
                }
                out.instructions.push(ins.clone());
                for &q in ts {
                    mark(&mut busy, &mut touched, q, params.t_meas);
                }
            }
            Op::Tick(t) => {
                let full = idle_twirl_probs(*t, params.t1, params.t2)?;
                let mut groups: Vec<((f64, f64, f64), Vec<u32>)> = Vec::new();
                if full != (0.0, 0.0, 0.0) {
                    groups.push((
                        full,
                        (0..c.n_qubits as u32)
                            .filter(|&q| busy[q as usize] == 0.0)
                            .collect(),
                    ));
                }
                for &q in &touched {
                    let gap = *t - busy[q];
                    if gap > 1e-9 {
                        let probs = idle_twirl_probs(gap, params.t1, params.t2)?;
                        if probs != (0.0, 0.0, 0.0) {
                            groups.push((probs, vec![q as u32]));
                        }
                    }
                }
                for ((px, py, pz), qs) in groups {
                    if !qs.is_empty() {
                        out.push(Op::PauliChannel(px, py, pz), qs);
                    }
                }
                for q in touched.drain(..) {
                    busy[q] = 0.0;
                }
                out.instructions.push(ins.clone());
            }
            _ => out.instructions.push(ins.clone()),
        }
    }
    Ok(out)
}

pub const BATCH: usize = 1024;
const W: usize = BATCH / 64;

#[derive(Debug, Clone, Copy)]
enum FrameOp {
    H(u32),
    S(u32),
    Cx(u32, u32),
    Cz(u32, u32),
    Reset(u32),
    Mz(u32),
    Mx(u32),
    Depol1 {
        q: u32,
        p: f64,
        ln: f64,
    },
    Depol2 {
        a: u32,
        b: u32,
        p: f64,
        ln: f64,
    },
    Pauli {
        q: u32,
        p: f64,
        ln: f64,
        px: f64,
        py: f64,
    },
    Flip {
        q: u32,
        p: f64,
        ln: f64,
    },
}

/// One sampled batch: detector and observable flips, bit-packed by shot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub shots: usize,
    /// `n_det * 16` words; detector `d` occupies words `16d..16d+16`.
    pub det: Vec<u64>,
    pub obs: Vec<u64>,
}

impl Batch {
    pub fn detector(&self, d: usize, shot: usize) -> bool {
        self.det[d * W + shot / 64] >> (shot % 64) & 1 == 1
    }

    pub fn observable(&self, o: usize, shot: usize) -> bool {
        self.obs[o * W + shot / 64] >> (shot % 64) & 1 == 1
    }

    /// Fired detectors of every shot.
    pub fn fired_lists(&self) -> Vec<Vec<u32>> {
        let n_det = self.det.len() / W;
        let mut out = vec![Vec::new(); self.shots];
        for d in 0..n_det {
            for w in 0..W {
                let mut bits = self.det[d * W + w];
                while bits != 0 {
                    let b = bits.trailing_zeros() as usize;
                    out[w * 64 + b].push(d as u32);
                    bits &= bits - 1;
                }
            }
        }
        out
    }

    /// Observable flips of a shot as a bit mask.
    pub fn observable_mask(&self, shot: usize) -> u64 {
        let n_obs = self.obs.len() / W;
        (0..n_obs).fold(0, |m, o| m | (self.observable(o, shot) as u64) << o)
    }
}

/// Pauli-frame sampler compiled from a noisy circuit.
#[derive(Debug, Clone)]
pub struct FrameSampler {
    n_qubits: usize,
    n_meas: usize,
    ops: Vec<FrameOp>,
    detectors: Vec<Vec<usize>>,
    observables: Vec<Vec<usize>>,
}

impl FrameSampler {
    pub fn new(c: &Circuit) -> Self {
        let ln = |p: f64| (1.0 - p).ln();
        let mut ops = Vec::new();
        for ins in &c.instructions {
            let ts = &ins.targets;
            match ins.op {
                Op::H => ops.extend(ts.iter().map(|&q| FrameOp::H(q))),
                Op::S => ops.extend(ts.iter().map(|&q| FrameOp::S(q))),
                Op::CX => ops.push(FrameOp::Cx(ts[0], ts[1])),
                Op::CZ => ops.push(FrameOp::Cz(ts[0], ts[1])),
                Op::Reset => ops.extend(ts.iter().map(|&q| FrameOp::Reset(q))),
                Op::MZ => ops.extend(ts.iter().map(|&q| FrameOp::Mz(q))),
                Op::MX => ops.extend(ts.iter().map(|&q| FrameOp::Mx(q))),
                Op::Depol1(p) if p > 0.0 => {
                    ops.extend(ts.iter().map(|&q| FrameOp::Depol1 { q, p, ln: ln(p) }))
                }
                Op::Depol2(p) if p > 0.0 => ops.push(FrameOp::Depol2 {
                    a: ts[0],
                    b: ts[1],
                    p,
                    ln: ln(p),
                }),
                Op::PauliChannel(px, py, pz) if px + py + pz > 0.0 => {
                    let p = (px + py + pz).min(1.0);
                    ops.extend(ts.iter().map(|&q| FrameOp::Pauli {
                        q,
                        p,
                        ln: ln(p),
                        px: px / p,
                        py: py / p,
                    }))
                }
                Op::MFlip(p) if p > 0.0 => {
                    ops.extend(ts.iter().map(|&q| FrameOp::Flip { q, p, ln: ln(p) }))
                }
                _ => {}
            }
        }
        FrameSampler {
            n_qubits: c.n_qubits,
            n_meas: c.measurement_count(),
            ops,
            detectors: c.detector_records(),
            observables: c.observable_records(),
        }
    }

    pub fn num_detectors(&self) -> usize {
        self.detectors.len()
    }

    pub fn num_observables(&self) -> usize {
        self.observables.len()
    }

    /// Deterministic generator for batch `index` of a run seeded by `seed`.
    pub fn batch_rng(seed: u64, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        rng
    }

    /// Samples `shots <= 1024` shots of batch `index`.
    pub fn sample_batch(&self, seed: u64, index: u64, shots: usize) -> Batch {
        assert!(shots <= BATCH);
        let mut rng = Self::batch_rng(seed, index);
        let n = self.n_qubits;
        let mut x = vec![0u64; n * W];
        let mut z = vec![0u64; n * W];
        let mut pending = vec![0u64; n * W];
        let mut rec = vec![0u64; self.n_meas * W];
        let mut m = 0usize;

        // Calls `hit(shot)` for each shot in which an event of probability p fires.
        fn hits(
            rng: &mut ChaCha8Rng,
            p: f64,
            ln: f64,
            shots: usize,
            mut hit: impl FnMut(&mut ChaCha8Rng, usize),
        ) {
            if p >= 1.0 {
                for s in 0..shots {
                    hit(rng, s);
                }
                return;
            }
            let mut s = 0usize;
            loop {
                let u: f64 = 1.0 - rng.gen::<f64>();
                let skip = (u.ln() / ln).floor();
                if skip >= (shots - s) as f64 {
                    return;
                }
                s += skip as usize;
                hit(rng, s);
                s += 1;
                if s >= shots {
                    return;
                }
            }
        }

        #[inline]
        fn flip(v: &mut [u64], q: u32, s: usize) {
            v[q as usize * W + s / 64] ^= 1 << (s % 64);
        }

        for op in &self.ops {
            match *op {
                FrameOp::H(q) => {
                    let q = q as usize * W;
                    for w in 0..W {
                        std::mem::swap(&mut x[q + w], &mut z[q + w]);
                    }
                }
                FrameOp::S(q) => {
                    let q = q as usize * W;
                    for w in 0..W {
                        z[q + w] ^= x[q + w];
                    }
                }
                FrameOp::Cx(c, t) => {
                    let (c, t) = (c as usize * W, t as usize * W);
                    for w in 0..W {
                        x[t + w] ^= x[c + w];
                        z[c + w] ^= z[t + w];
                    }
                }
                FrameOp::Cz(a, b) => {
                    let (a, b) = (a as usize * W, b as usize * W);
                    for w in 0..W {
                        z[a + w] ^= x[b + w];
                        z[b + w] ^= x[a + w];
                    }
                }
                FrameOp::Reset(q) => {
                    let q = q as usize * W;
                    x[q..q + W].fill(0);
                    z[q..q + W].fill(0);
                }
                FrameOp::Mz(q) | FrameOp::Mx(q) => {
                    let src = if matches!(op, FrameOp::Mz(_)) { &x } else { &z };
                    let qi = q as usize * W;
                    for w in 0..W {
                        rec[m * W + w] = src[qi + w] ^ pending[qi + w];
                    }
                    pending[qi..qi + W].fill(0);
                    m += 1;
                }
                FrameOp::Depol1 { q, p, ln } => hits(&mut rng, p, ln, shots, |rng, s| {
                    let k = rng.gen_range(1..4u8);
                    if k & 1 == 1 {
                        flip(&mut x, q, s);
                    }
                    if k & 2 == 2 {
                        flip(&mut z, q, s);
                    }
                }),
                FrameOp::Depol2 { a, b, p, ln } => hits(&mut rng, p, ln, shots, |rng, s| {
                    let k = rng.gen_range(1..16u8);
                    if k & 1 == 1 {
                        flip(&mut x, a, s);
                    }
                    if k & 2 == 2 {
                        flip(&mut z, a, s);
                    }
                    if k & 4 == 4 {
                        flip(&mut x, b, s);
                    }
                    if k & 8 == 8 {
                        flip(&mut z, b, s);
                    }
                }),
                FrameOp::Pauli { q, p, ln, px, py } => hits(&mut rng, p, ln, shots, |rng, s| {
                    let u: f64 = rng.gen();
                    if u < px {
                        flip(&mut x, q, s);
                    } else if u < px + py {
                        flip(&mut x, q, s);
                        flip(&mut z, q, s);
                    } else {
                        flip(&mut z, q, s);
                    }
                }),
                FrameOp::Flip { q, p, ln } => {
                    hits(&mut rng, p, ln, shots, |_, s| flip(&mut pending, q, s))
                }
            }
        }

        let parity = |sets: &[Vec<usize>]| {
            let mut out = vec![0u64; sets.len() * W];
            for (i, set) in sets.iter().enumerate() {
                for &mi in set {
                    for w in 0..W {
                        out[i * W + w] ^= rec[mi * W + w];
                    }
                }
            }
            out
        };
        let mut det = parity(&self.detectors);
        let mut obs = parity(&self.observables);
        if shots < BATCH {
            for v in [&mut det, &mut obs] {
                for chunk in v.chunks_mut(W) {
                    for (w, word) in chunk.iter_mut().enumerate() {
                        let lo = w * 64;
                        if lo >= shots {
                            *word = 0;
                        } else if shots - lo < 64 {
                            *word &= (1u64 << (shots - lo)) - 1;
                        }
                    }
                }
            }
        }
        Batch { shots, det, obs }
    }
}

/// Detector and observable outcomes for each shot (`true` = parity 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotTable {
    pub detectors: Vec<Vec<bool>>,
    pub observables: Vec<Vec<bool>>,
}

/// Samples `shots` noisy shots. Outcome parities are frame flips XORed with
/// the parities of the noiseless reference record.
pub fn sample_shots(
    c: &Circuit,
    reference: &[bool],
    shots: usize,
    seed: u64,
) -> Result<ShotTable, NoiseError> {
    let expected = c.measurement_count();
    if reference.len() != expected {
        return Err(NoiseError::ReferenceLength {
            expected,
            got: reference.len(),
        });
    }
    let (ref_det, ref_obs) = crate::circuit::parities(c, reference);
    let sampler = FrameSampler::new(c);
    let mut table = ShotTable {
        detectors: Vec::with_capacity(shots),
        observables: Vec::with_capacity(shots),
    };
    let mut done = 0usize;
    let mut index = 0u64;
    while done < shots {
        let n = (shots - done).min(BATCH);
        let b = sampler.sample_batch(seed, index, n);
        for s in 0..n {
            table.detectors.push(
                (0..ref_det.len())
                    .map(|d| b.detector(d, s) ^ ref_det[d])
                    .collect(),
            );
            table.observables.push(
                (0..ref_obs.len())
                    .map(|o| b.observable(o, s) ^ ref_obs[o])
                    .collect(),
            );
        }
        done += n;
        index += 1;
    }
    Ok(table)
}
