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

//! Logical benchmark programs and a T-count model for rotation synthesis.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ProgramError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("gate on qubit {qubit} but program has {n} qubits")]
    QubitRange { qubit: u32, n: usize },
    #[error("CNOT with identical control and target {0}")]
    SelfCnot(u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogicalGate {
    H(u32),
    S(u32),
    T(u32),
    Cnot(u32, u32),
    Rz(f64, u32),
}

impl LogicalGate {
    pub fn qubits(&self) -> impl Iterator<Item = u32> {
        let (a, b) = match *self {
            LogicalGate::H(q) | LogicalGate::S(q) | LogicalGate::T(q) | LogicalGate::Rz(_, q) => {
                (q, None)
            }
            LogicalGate::Cnot(c, t) => (c, Some(t)),
        };
        std::iter::once(a).chain(b)
    }
}

impl fmt::Display for LogicalGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogicalGate::H(q) => write!(f, "H {q}"),
            LogicalGate::S(q) => write!(f, "S {q}"),
            LogicalGate::T(q) => write!(f, "T {q}"),
            LogicalGate::Cnot(c, t) => write!(f, "CNOT {c} {t}"),
            LogicalGate::Rz(theta, q) => write!(f, "RZ({theta}) {q}"),
        }
    }
}

/// An ordered gate list over `n` logical qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct LogicalProgram {
    pub n: usize,
    pub gates: Vec<LogicalGate>,
}

impl LogicalProgram {
    pub fn new(n: usize) -> Self {
        LogicalProgram {
            n,
            gates: Vec::new(),
        }
    }

    fn push(&mut self, g: LogicalGate) {
        self.gates.push(g);
    }

    fn cnot(&mut self, c: u32, t: u32) {
        self.push(LogicalGate::Cnot(c, t));
    }

    pub fn validate(&self) -> Result<(), ProgramError> {
        for g in &self.gates {
            if let LogicalGate::Cnot(c, t) = *g {
                if c == t {
                    return Err(ProgramError::SelfCnot(c));
                }
            }
            if let Some(q) = g.qubits().find(|&q| q as usize >= self.n) {
                return Err(ProgramError::QubitRange {
                    qubit: q,
                    n: self.n,
                });
            }
        }
        Ok(())
    }

    pub fn count_t(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g, LogicalGate::T(_)))
            .count()
    }

    pub fn count_cnot(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g, LogicalGate::Cnot(..)))
            .count()
    }

    pub fn count_rz(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g, LogicalGate::Rz(..)))
            .count()
    }

    /// CNOT counts per unordered qubit pair, keyed `(min, max)`.
    pub fn interaction(&self) -> InteractionGraph {
        let mut counts = BTreeMap::new();
        for g in &self.gates {
            if let LogicalGate::Cnot(a, b) = *g {
                *counts.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        InteractionGraph { n: self.n, counts }
    }

    /// One gate per line, as read back by `parse`.
    pub fn dump(&self) -> String {
        let mut s = format!("QUBITS {}\n", self.n);
        for g in &self.gates {
            s.push_str(&g.to_string());
            s.push('\n');
        }
        s
    }

    /// Parses the `dump` format. Without a `QUBITS` line the register size
    /// is one more than the largest qubit index.
    pub fn parse(text: &str) -> Result<Self, ProgramError> {
        let mut declared = None;
        let mut gates = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| ProgramError::Parse {
                line: i + 1,
                msg: msg.to_string(),
            };
            let mut parts = line.split_whitespace();
            let head = parts.next().unwrap_or_default();
            let args: Vec<u32> = parts
                .map(u32::from_str)
                .collect::<Result<_, _>>()
                .map_err(|_| err("bad qubit index"))?;
            let arity = |k: usize| {
                if args.len() == k {
                    Ok(())
                } else {
                    Err(err("wrong number of operands"))
                }
            };
            let upper = head.to_ascii_uppercase();
            let g = match upper.as_str() {
                "QUBITS" => {
                    arity(1)?;
                    declared = Some(args[0] as usize);
                    continue;
                }
                "H" => arity(1).map(|_| LogicalGate::H(args[0]))?,
                "S" => arity(1).map(|_| LogicalGate::S(args[0]))?,
                "T" => arity(1).map(|_| LogicalGate::T(args[0]))?,
                "CNOT" | "CX" => arity(2).map(|_| LogicalGate::Cnot(args[0], args[1]))?,
                _ if upper.starts_with("RZ(") && upper.ends_with(')') => {
                    arity(1)?;
                    let theta = head[3..head.len() - 1]
                        .parse::<f64>()
                        .map_err(|_| err("bad angle"))?;
                    LogicalGate::Rz(theta, args[0])
                }
                _ => return Err(err(&format!("unknown gate `{head}`"))),
            };
            gates.push(g);
        }
        let used = gates
            .iter()
            .flat_map(|g| g.qubits())
            .max()
            .map_or(0, |q| q as usize + 1);
        let p = LogicalProgram {
            n: declared.unwrap_or(used),
            gates,
        };
        p.validate()?;
        Ok(p)
    }
}

/// Symmetric CNOT-count graph of a program.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InteractionGraph {
    pub n: usize,
    pub counts: BTreeMap<(u32, u32), usize>,
}

impl InteractionGraph {
    pub fn count(&self, a: u32, b: u32) -> usize {
        self.counts.get(&(a.min(b), a.max(b))).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }
}

/// Bernstein-Vazirani over `n` data qubits; qubit `n` is the oracle target.
pub fn gen_bv(n: usize, secret: u64) -> LogicalProgram {
    let mut p = LogicalProgram::new(n + 1);
    let target = n as u32;
    for q in 0..=target {
        p.push(LogicalGate::H(q));
    }
    for q in 0..n as u32 {
        if q < 64 && secret >> q & 1 == 1 {
            p.cnot(q, target);
        }
    }
    for q in 0..n as u32 {
        p.push(LogicalGate::H(q));
    }
    p
}

pub fn gen_ghz(n: usize) -> LogicalProgram {
    let mut p = LogicalProgram::new(n);
    if n > 0 {
        p.push(LogicalGate::H(0));
    }
    for q in 1..n as u32 {
        p.cnot(q - 1, q);
    }
    p
}

/// Controlled phase as two CNOTs and three Z rotations.
fn controlled_phase(p: &mut LogicalProgram, theta: f64, c: u32, t: u32) {
    p.push(LogicalGate::Rz(theta / 2.0, c));
    p.push(LogicalGate::Rz(theta / 2.0, t));
    p.cnot(c, t);
    p.push(LogicalGate::Rz(-theta / 2.0, t));
    p.cnot(c, t);
}

/// Textbook QFT with bit-reversal swaps as CNOT triples.
pub fn gen_qft(n: usize) -> LogicalProgram {
    let mut p = LogicalProgram::new(n);
    for j in 0..n {
        p.push(LogicalGate::H(j as u32));
        for k in j + 1..n {
            controlled_phase(
                &mut p,
                PI / f64::powi(2.0, (k - j) as i32),
                k as u32,
                j as u32,
            );
        }
    }
    for i in 0..n / 2 {
        let (a, b) = (i as u32, (n - 1 - i) as u32);
        p.cnot(a, b);
        p.cnot(b, a);
        p.cnot(a, b);
    }
    p
}

fn t_dagger(p: &mut LogicalProgram, q: u32) {
    for _ in 0..3 {
        p.push(LogicalGate::S(q));
    }
    p.push(LogicalGate::T(q));
}

/// Toffoli in 7 T gates and 6 CNOTs.
fn toffoli(p: &mut LogicalProgram, a: u32, b: u32, c: u32) {
    p.push(LogicalGate::H(c));
    p.cnot(b, c);
    t_dagger(p, c);
    p.cnot(a, c);
    p.push(LogicalGate::T(c));
    p.cnot(b, c);
    t_dagger(p, c);
    p.cnot(a, c);
    p.push(LogicalGate::T(b));
    p.push(LogicalGate::T(c));
    p.push(LogicalGate::H(c));
    p.cnot(a, b);
    p.push(LogicalGate::T(a));
    t_dagger(p, b);
    p.cnot(a, b);
}

fn cz(p: &mut LogicalProgram, a: u32, b: u32) {
    p.push(LogicalGate::H(b));
    p.cnot(a, b);
    p.push(LogicalGate::H(b));
}

/// Phase flip on all-ones over `qubits`, using `ancillas` (len = qubits - 2)
/// as a Toffoli ladder. The ladder is undone by measurement and Clifford
/// fix-ups, so only the compute half costs T gates.
fn multi_cz(p: &mut LogicalProgram, qubits: &[u32], ancillas: &[u32]) {
    match qubits.len() {
        0 | 1 => return,
        2 => return cz(p, qubits[0], qubits[1]),
        _ => {}
    }
    let last = qubits.len() - 1;
    toffoli(p, qubits[0], qubits[1], ancillas[0]);
    for i in 2..last {
        toffoli(p, ancillas[i - 2], qubits[i], ancillas[i - 1]);
    }
    cz(p, ancillas[last - 2], qubits[last]);
    for i in (2..last).rev() {
        p.push(LogicalGate::H(ancillas[i - 1]));
        cz(p, ancillas[i - 2], qubits[i]);
    }
    p.push(LogicalGate::H(ancillas[0]));
    cz(p, qubits[0], qubits[1]);
}

/// Grover search for the all-ones string over `n` qubits, with `n - 2`
/// clean ancillas after the search register.
pub fn gen_grover(n: usize, iterations: usize) -> LogicalProgram {
    let anc = n.saturating_sub(2);
    let mut p = LogicalProgram::new(n + anc);
    let search: Vec<u32> = (0..n as u32).collect();
    let ancillas: Vec<u32> = (n as u32..(n + anc) as u32).collect();
    for &q in &search {
        p.push(LogicalGate::H(q));
    }
    for _ in 0..iterations {
        multi_cz(&mut p, &search, &ancillas);
        for &q in &search {
            p.push(LogicalGate::H(q));
            p.push(LogicalGate::S(q));
            p.push(LogicalGate::S(q));
        }
        multi_cz(&mut p, &search, &ancillas);
        for &q in &search {
            p.push(LogicalGate::S(q));
            p.push(LogicalGate::S(q));
            p.push(LogicalGate::H(q));
        }
    }
    p
}

/// QAOA layers over `edges`: a ZZ phase per edge and an X mixer per node.
pub fn gen_qaoa(n: usize, edges: &[(u32, u32)], layers: usize) -> LogicalProgram {
    let (gamma, beta) = (0.4, 0.3);
    let mut p = LogicalProgram::new(n);
    for q in 0..n as u32 {
        p.push(LogicalGate::H(q));
    }
    for _ in 0..layers {
        for &(u, v) in edges {
            p.cnot(u, v);
            p.push(LogicalGate::Rz(gamma, v));
            p.cnot(u, v);
        }
        for q in 0..n as u32 {
            p.push(LogicalGate::H(q));
            p.push(LogicalGate::Rz(beta, q));
            p.push(LogicalGate::H(q));
        }
    }
    p
}

/// All pairs of `n` nodes.
pub fn complete_graph(n: usize) -> Vec<(u32, u32)> {
    (0..n as u32)
        .flat_map(|a| (a + 1..n as u32).map(move |b| (a, b)))
        .collect()
}

pub fn cycle_graph(n: usize) -> Vec<(u32, u32)> {
    match n {
        0 | 1 => Vec::new(),
        2 => vec![(0, 1)],
        _ => (0..n as u32).map(|a| (a, (a + 1) % n as u32)).collect(),
    }
}

/// 15-to-1 distillation: qubits 0..15 hold the punctured Reed-Muller code
/// (qubit i is column i + 1), qubit 15 is the output paired with the
/// encoded input.
pub fn gen_distill_15to1() -> LogicalProgram {
    let mut p = LogicalProgram::new(16);
    let q = |col: u32| col - 1;
    let source = q(15);
    p.push(LogicalGate::H(15));
    p.cnot(15, source);
    for col in [3, 5, 6, 9, 10, 12] {
        p.cnot(source, q(col));
    }
    for bit in 0..4 {
        let pivot = 1u32 << bit;
        p.push(LogicalGate::H(q(pivot)));
        for col in 1..16u32 {
            if col != pivot && col & pivot != 0 {
                p.cnot(q(pivot), q(col));
            }
        }
    }
    for i in 0..15 {
        p.push(LogicalGate::T(i));
    }
    p
}

/// T count of one generic rotation synthesised to precision `eps`.
pub fn rotation_t_count(eps: f64) -> usize {
    (3.0 * (1.0 / eps).log2()).ceil() as usize
}

/// Replaces every RZ by Clifford+T: multiples of pi/4 exactly as S^a T^b,
/// anything else as `rotation_t_count(eps)` T gates separated by H.
pub fn synthesize_rotations(program: &LogicalProgram, eps: f64) -> LogicalProgram {
    assert!(eps > 0.0 && eps < 1.0, "precision must lie in (0, 1)");
    let len = rotation_t_count(eps);
    let mut out = LogicalProgram::new(program.n);
    for &g in &program.gates {
        let LogicalGate::Rz(theta, q) = g else {
            out.push(g);
            continue;
        };
        let eighths = theta / (PI / 4.0);
        if (eighths - eighths.round()).abs() < 1e-9 {
            let m = (eighths.round() as i64).rem_euclid(8);
            for _ in 0..m / 2 {
                out.push(LogicalGate::S(q));
            }
            if m % 2 == 1 {
                out.push(LogicalGate::T(q));
            }
        } else {
            for _ in 0..len {
                out.push(LogicalGate::H(q));
                out.push(LogicalGate::T(q));
            }
        }
    }
    out
}

/// Named benchmark as accepted on the command line, e.g. `qft:8`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Benchmark {
    Bv(usize),
    Ghz(usize),
    Qft(usize),
    Grover(usize),
    Qaoa(usize),
    Distill15,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown benchmark `{0}` (expected bv:N, ghz:N, qft:N, grover:N, qaoa:N or distill15)")]
pub struct UnknownBenchmark(pub String);

impl FromStr for Benchmark {
    type Err = UnknownBenchmark;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || UnknownBenchmark(s.to_string());
        if s == "distill15" {
            return Ok(Benchmark::Distill15);
        }
        let (name, size) = s.split_once(':').ok_or_else(bad)?;
        let n: usize = size.parse().map_err(|_| bad())?;
        if n == 0 {
            return Err(bad());
        }
        Ok(match name {
            "bv" => Benchmark::Bv(n),
            "ghz" => Benchmark::Ghz(n),
            "qft" => Benchmark::Qft(n),
            "grover" if n >= 2 => Benchmark::Grover(n),
            "qaoa" if n >= 2 => Benchmark::Qaoa(n),
            _ => return Err(bad()),
        })
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Benchmark::Bv(n) => write!(f, "bv:{n}"),
            Benchmark::Ghz(n) => write!(f, "ghz:{n}"),
            Benchmark::Qft(n) => write!(f, "qft:{n}"),
            Benchmark::Grover(n) => write!(f, "grover:{n}"),
            Benchmark::Qaoa(n) => write!(f, "qaoa:{n}"),
            Benchmark::Distill15 => write!(f, "distill15"),
        }
    }
}

impl Benchmark {
    /// Pre-synthesis program. BV uses the alternating secret 0b...0101,
    /// QAOA a complete graph with one layer.
    pub fn program(self, grover_iterations: usize) -> LogicalProgram {
        match self {
            Benchmark::Bv(n) => gen_bv(n, 0x5555_5555_5555_5555),
            Benchmark::Ghz(n) => gen_ghz(n),
            Benchmark::Qft(n) => gen_qft(n),
            Benchmark::Grover(n) => gen_grover(n, grover_iterations),
            Benchmark::Qaoa(n) => gen_qaoa(n, &complete_graph(n), 1),
            Benchmark::Distill15 => gen_distill_15to1(),
        }
    }

    /// Clifford+T program ready for routing.
    pub fn synthesized(self, grover_iterations: usize, eps: f64) -> LogicalProgram {
        synthesize_rotations(&self.program(grover_iterations), eps)
    }
}
