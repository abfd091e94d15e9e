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

//! Circuit representation and its line-oriented text format.
//!
//! ```text
//! #! qubits 3
//! RESET 0 1 2
//! H 0
//! CZ 0 1
//! DEPOL2(0.001) 0 1
//! TICK(5)
//! MX 0
//! DETECTOR(X) rec[-1]
//! OBSERVABLE(0,Z) rec[-1]
//! ```

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::pauli::{PauliString, StabilizerTableau};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("instruction {index}: {msg}")]
    Invalid { index: usize, msg: String },
}

/// CSS type of the operator a detector or observable is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Basis {
    X,
    Z,
}

impl Basis {
    fn letter(self) -> char {
        match self {
            Basis::X => 'X',
            Basis::Z => 'Z',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    H,
    S,
    X,
    Z,
    CX,
    CZ,
    Reset,
    MZ,
    MX,
    /// End of a time step lasting the given number of microseconds.
    Tick(f64),
    Depol1(f64),
    Depol2(f64),
    PauliChannel(f64, f64, f64),
    /// Flips the record of the next measurement on each target.
    MFlip(f64),
    Detector {
        basis: Option<Basis>,
        recs: Vec<u32>,
    },
    Observable {
        id: u32,
        basis: Option<Basis>,
        recs: Vec<u32>,
    },
}

impl Op {
    pub fn mnemonic(&self) -> &'static str {
        match self {
            Op::H => "H",
            Op::S => "S",
            Op::X => "X",
            Op::Z => "Z",
            Op::CX => "CX",
            Op::CZ => "CZ",
            Op::Reset => "RESET",
            Op::MZ => "MZ",
            Op::MX => "MX",
            Op::Tick(_) => "TICK",
            Op::Depol1(_) => "DEPOL1",
            Op::Depol2(_) => "DEPOL2",
            Op::PauliChannel(..) => "PAULI_CHANNEL",
            Op::MFlip(_) => "MFLIP",
            Op::Detector { .. } => "DETECTOR",
            Op::Observable { .. } => "OBSERVABLE",
        }
    }

    pub fn is_noise(&self) -> bool {
        matches!(
            self,
            Op::Depol1(_) | Op::Depol2(_) | Op::PauliChannel(..) | Op::MFlip(_)
        )
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Op::CX | Op::CZ | Op::Depol2(_))
    }

    pub fn is_measurement(&self) -> bool {
        matches!(self, Op::MZ | Op::MX)
    }

    pub fn is_unitary(&self) -> bool {
        matches!(self, Op::H | Op::S | Op::X | Op::Z | Op::CX | Op::CZ)
    }

    fn probabilities(&self) -> Vec<f64> {
        match *self {
            Op::Depol1(p) | Op::Depol2(p) | Op::MFlip(p) => vec![p],
            Op::PauliChannel(x, y, z) => vec![x, y, z],
            _ => vec![],
        }
    }
}

/// One line of a circuit. Measurement offsets in detectors and observables
/// are stored as positive distances back from the end of the record
/// (`rec[-k]` is stored as `k`).
#[derive(Debug, Clone, PartialEq)]
pub struct Instruction {
    pub op: Op,
    pub targets: Vec<u32>,
}

impl Instruction {
    pub fn new(op: Op, targets: Vec<u32>) -> Self {
        Instruction { op, targets }
    }

    /// Wall-clock duration in microseconds; only ticks take time.
    pub fn duration(&self) -> f64 {
        match self.op {
            Op::Tick(t) => t,
            _ => 0.0,
        }
    }
}

fn fmt_recs(f: &mut fmt::Formatter<'_>, recs: &[u32]) -> fmt::Result {
    for r in recs {
        write!(f, " rec[-{r}]")?;
    }
    Ok(())
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.op.mnemonic())?;
        match &self.op {
            Op::Tick(t) => write!(f, "({t})")?,
            Op::Depol1(p) | Op::Depol2(p) | Op::MFlip(p) => write!(f, "({p})")?,
            Op::PauliChannel(x, y, z) => write!(f, "({x},{y},{z})")?,
            Op::Detector { basis, recs } => {
                if let Some(b) = basis {
                    write!(f, "({})", b.letter())?;
                }
                return fmt_recs(f, recs);
            }
            Op::Observable { id, basis, recs } => {
                match basis {
                    Some(b) => write!(f, "({id},{})", b.letter())?,
                    None => write!(f, "({id})")?,
                }
                return fmt_recs(f, recs);
            }
            _ => {}
        }
        for t in &self.targets {
            write!(f, " {t}")?;
        }
        Ok(())
    }
}

/// An ordered instruction list over `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    pub n_qubits: usize,
    pub instructions: Vec<Instruction>,
    /// Layout site id of each qubit, when the circuit was generated on a layout.
    pub sites: Vec<Option<u32>>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit {
            n_qubits,
            instructions: Vec::new(),
            sites: vec![None; n_qubits],
        }
    }

    pub fn push(&mut self, op: Op, targets: Vec<u32>) {
        self.instructions.push(Instruction::new(op, targets));
    }

    pub fn measurement_count(&self) -> usize {
        self.instructions
            .iter()
            .filter(|i| i.op.is_measurement())
            .map(|i| i.targets.len())
            .sum()
    }

    pub fn detector_count(&self) -> usize {
        self.instructions
            .iter()
            .filter(|i| matches!(i.op, Op::Detector { .. }))
            .count()
    }

    pub fn observable_count(&self) -> usize {
        self.instructions
            .iter()
            .filter_map(|i| match i.op {
                Op::Observable { id, .. } => Some(id as usize + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn has_noise(&self) -> bool {
        self.instructions.iter().any(|i| i.op.is_noise())
    }

    pub fn strip_noise(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            instructions: self
                .instructions
                .iter()
                .filter(|i| !i.op.is_noise())
                .cloned()
                .collect(),
            sites: self.sites.clone(),
        }
    }

    /// Total wall-clock time: the sum of tick durations.
    pub fn duration(&self) -> f64 {
        self.instructions.iter().map(|i| i.duration()).sum()
    }

    /// Absolute measurement indices of every detector.
    pub fn detector_records(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut m = 0usize;
        for ins in &self.instructions {
            match &ins.op {
                Op::MZ | Op::MX => m += ins.targets.len(),
                Op::Detector { recs, .. } => {
                    out.push(recs.iter().map(|&r| m - r as usize).collect())
                }
                _ => {}
            }
        }
        out
    }

    /// Absolute measurement indices of each observable (repeated entries XOR).
    pub fn observable_records(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.observable_count()];
        let mut m = 0usize;
        for ins in &self.instructions {
            match &ins.op {
                Op::MZ | Op::MX => m += ins.targets.len(),
                Op::Observable { id, recs, .. } => {
                    out[*id as usize].extend(recs.iter().map(|&r| m - r as usize))
                }
                _ => {}
            }
        }
        out
    }

    pub fn detector_bases(&self) -> Vec<Option<Basis>> {
        self.instructions
            .iter()
            .filter_map(|i| match i.op {
                Op::Detector { basis, .. } => Some(basis),
                _ => None,
            })
            .collect()
    }

    pub fn observable_bases(&self) -> Vec<Option<Basis>> {
        let mut out = vec![None; self.observable_count()];
        for ins in &self.instructions {
            if let Op::Observable { id, basis, .. } = ins.op {
                out[id as usize] = out[id as usize].or(basis);
            }
        }
        out
    }

    /// Checks target ranges, arities, probabilities and record references.
    pub fn validate(&self) -> Result<(), CircuitError> {
        let mut m = 0usize;
        for (index, ins) in self.instructions.iter().enumerate() {
            let bad = |msg: String| Err(CircuitError::Invalid { index, msg });
            for &t in &ins.targets {
                if t as usize >= self.n_qubits {
                    return bad(format!(
                        "target {t} out of range for {} qubits",
                        self.n_qubits
                    ));
                }
            }
            for p in ins.op.probabilities() {
                if !(0.0..=1.0).contains(&p) {
                    return bad(format!("probability {p} outside [0, 1]"));
                }
            }
            if let Op::PauliChannel(x, y, z) = ins.op {
                if x + y + z > 1.0 + 1e-12 {
                    return bad("pauli channel probabilities sum above 1".into());
                }
            }
            if let Op::Tick(t) = ins.op {
                if !(t >= 0.0) {
                    return bad(format!("negative tick duration {t}"));
                }
            }
            match &ins.op {
                op if op.is_two_qubit() => {
                    if ins.targets.len() != 2 {
                        return bad(format!("{} takes exactly 2 targets", op.mnemonic()));
                    }
                    if ins.targets[0] == ins.targets[1] {
                        return bad(format!("{} targets must differ", op.mnemonic()));
                    }
                }
                Op::Tick(_) | Op::Detector { .. } | Op::Observable { .. } => {
                    if !ins.targets.is_empty() {
                        return bad(format!("{} takes no qubit targets", ins.op.mnemonic()));
                    }
                }
                _ => {}
            }
            match &ins.op {
                Op::MZ | Op::MX => m += ins.targets.len(),
                Op::Detector { recs, .. } | Op::Observable { recs, .. } => {
                    for &r in recs {
                        if r == 0 || r as usize > m {
                            return bad(format!(
                                "rec[-{r}] does not refer to an earlier measurement"
                            ));
                        }
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Canonical text form.
    pub fn to_text(&self) -> String {
        self.to_string()
    }

    /// Parses the text format; the result is validated.
    pub fn parse(text: &str) -> Result<Circuit, CircuitError> {
        let mut instructions = Vec::new();
        let mut declared: Option<usize> = None;
        let mut sites: Vec<(usize, u32)> = Vec::new();
        let mut max_target: Option<u32> = None;
        let mut measured = 0usize;
        for (ln, raw) in text.lines().enumerate() {
            let line = ln + 1;
            let err = |msg: String| CircuitError::Parse { line, msg };
            let trimmed = raw.trim();
            if let Some(pragma) = trimmed.strip_prefix("#!") {
                let parts: Vec<&str> = pragma.split_whitespace().collect();
                match parts.as_slice() {
                    ["qubits", n] => {
                        declared = Some(
                            n.parse()
                                .map_err(|_| err(format!("bad qubit count '{n}'")))?,
                        )
                    }
                    ["site", q, s] => {
                        let q = q.parse().map_err(|_| err(format!("bad qubit '{q}'")))?;
                        let s = s.parse().map_err(|_| err(format!("bad site '{s}'")))?;
                        sites.push((q, s));
                    }
                    _ => return Err(err(format!("unknown pragma '{pragma}'"))),
                }
                continue;
            }
            let body = trimmed.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (head, rest) = match body.find(char::is_whitespace) {
                Some(i) => (&body[..i], body[i..].trim()),
                None => (body, ""),
            };
            let (name, args) = match head.find('(') {
                Some(i) => {
                    let close = head
                        .rfind(')')
                        .filter(|&c| c == head.len() - 1)
                        .ok_or_else(|| err(format!("unbalanced parentheses in '{head}'")))?;
                    (&head[..i], Some(&head[i + 1..close]))
                }
                None => (head, None),
            };
            let arg_list: Vec<&str> = args
                .map(|a| a.split(',').map(str::trim).collect())
                .unwrap_or_default();
            let floats = || -> Result<Vec<f64>, CircuitError> {
                arg_list
                    .iter()
                    .map(|a| {
                        a.parse::<f64>()
                            .map_err(|_| err(format!("bad argument '{a}'")))
                    })
                    .collect()
            };
            let one_prob = |name: &str| -> Result<f64, CircuitError> {
                let v = floats()?;
                if v.len() != 1 {
                    return Err(err(format!("{name} takes one argument")));
                }
                if !(0.0..=1.0).contains(&v[0]) {
                    return Err(err(format!("probability {} outside [0, 1]", v[0])));
                }
                Ok(v[0])
            };
            let basis_of = |s: &str| match s {
                "X" => Ok(Basis::X),
                "Z" => Ok(Basis::Z),
                _ => Err(err(format!("bad basis '{s}'"))),
            };
            let recs = || -> Result<Vec<u32>, CircuitError> {
                rest.split_whitespace()
                    .map(|tok| {
                        tok.strip_prefix("rec[-")
                            .and_then(|t| t.strip_suffix(']'))
                            .and_then(|t| t.parse::<u32>().ok())
                            .filter(|&k| k > 0)
                            .ok_or_else(|| err(format!("bad record reference '{tok}'")))
                    })
                    .collect()
            };
            let no_args = |op: Op| {
                if args.is_some() {
                    Err(err(format!("{name} takes no arguments")))
                } else {
                    Ok(op)
                }
            };
            let op = match name {
                "H" => no_args(Op::H)?,
                "S" => no_args(Op::S)?,
                "X" => no_args(Op::X)?,
                "Z" => no_args(Op::Z)?,
                "CX" | "CNOT" => no_args(Op::CX)?,
                "CZ" => no_args(Op::CZ)?,
                "RESET" | "R" => no_args(Op::Reset)?,
                "MZ" | "M" => no_args(Op::MZ)?,
                "MX" => no_args(Op::MX)?,
                "TICK" => {
                    let v = floats()?;
                    match v.as_slice() {
                        [] => Op::Tick(0.0),
                        [t] if *t >= 0.0 => Op::Tick(*t),
                        _ => return Err(err("TICK takes one non-negative duration".into())),
                    }
                }
                "DEPOL1" => Op::Depol1(one_prob(name)?),
                "DEPOL2" => Op::Depol2(one_prob(name)?),
                "MFLIP" => Op::MFlip(one_prob(name)?),
                "PAULI_CHANNEL" => {
                    let v = floats()?;
                    if v.len() != 3 {
                        return Err(err("PAULI_CHANNEL takes three arguments".into()));
                    }
                    if v.iter().any(|p| !(0.0..=1.0).contains(p)) {
                        return Err(err("probability outside [0, 1]".into()));
                    }
                    Op::PauliChannel(v[0], v[1], v[2])
                }
                "DETECTOR" => {
                    let basis = match arg_list.as_slice() {
                        [] => None,
                        [b] => Some(basis_of(b)?),
                        _ => return Err(err("DETECTOR takes at most one argument".into())),
                    };
                    Op::Detector {
                        basis,
                        recs: recs()?,
                    }
                }
                "OBSERVABLE" => {
                    let (id, basis) = match arg_list.as_slice() {
                        [id] => (*id, None),
                        [id, b] => (*id, Some(basis_of(b)?)),
                        _ => return Err(err("OBSERVABLE takes (id) or (id,basis)".into())),
                    };
                    let id = id
                        .parse()
                        .map_err(|_| err(format!("bad observable id '{id}'")))?;
                    Op::Observable {
                        id,
                        basis,
                        recs: recs()?,
                    }
                }
                other => return Err(err(format!("unknown mnemonic '{other}'"))),
            };
            let targets: Vec<u32> = match op {
                Op::Detector { .. } | Op::Observable { .. } => Vec::new(),
                _ => rest
                    .split_whitespace()
                    .map(|t| t.parse().map_err(|_| err(format!("bad target '{t}'"))))
                    .collect::<Result<_, _>>()?,
            };
            match &op {
                Op::Detector { recs, .. } | Op::Observable { recs, .. } => {
                    if let Some(&r) = recs.iter().find(|&&r| r as usize > measured) {
                        return Err(err(format!(
                            "rec[-{r}] refers to a measurement not yet made"
                        )));
                    }
                }
                Op::MZ | Op::MX => measured += targets.len(),
                _ => {}
            }
            if op.is_two_qubit() && targets.len() != 2 {
                return Err(err(format!("{name} takes exactly 2 targets")));
            }
            if let Some(&m) = targets.iter().max() {
                max_target = Some(max_target.map_or(m, |x| x.max(m)));
            }
            instructions.push(Instruction::new(op, targets));
        }
        let n_qubits = declared.unwrap_or(max_target.map_or(0, |m| m as usize + 1));
        let mut c = Circuit::new(n_qubits);
        c.instructions = instructions;
        for (q, s) in sites {
            if q >= n_qubits {
                return Err(CircuitError::Parse {
                    line: 0,
                    msg: format!("site label for qubit {q} out of range"),
                });
            }
            c.sites[q] = Some(s);
        }
        c.validate().map_err(|e| match e {
            CircuitError::Invalid { index, msg } => CircuitError::Parse {
                line: index + 1,
                msg,
            },
            e => e,
        })?;
        Ok(c)
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "#! qubits {}", self.n_qubits)?;
        for (q, s) in self.sites.iter().enumerate() {
            if let Some(s) = s {
                writeln!(f, "#! site {q} {s}")?;
            }
        }
        for ins in &self.instructions {
            writeln!(f, "{ins}")?;
        }
        Ok(())
    }
}

/// Noiseless outcome of every measurement, with random outcomes pinned to 0.
pub fn reference_sample(c: &Circuit) -> Vec<bool> {
    reference_sample_with(c, &mut || false)
}

/// Noiseless run where random outcomes are drawn from a seeded generator.
/// Used to confirm that detectors do not depend on the pinning convention.
pub fn random_sample(c: &Circuit, seed: u64) -> Vec<bool> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    reference_sample_with(c, &mut || rng.gen())
}

fn reference_sample_with(c: &Circuit, pick: &mut dyn FnMut() -> bool) -> Vec<bool> {
    let n = c.n_qubits;
    let mut t = StabilizerTableau::new(n);
    let mut out = Vec::with_capacity(c.measurement_count());
    for ins in &c.instructions {
        let ts = &ins.targets;
        match ins.op {
            Op::H => ts.iter().for_each(|&q| t.h(q as usize)),
            Op::S => ts.iter().for_each(|&q| t.s(q as usize)),
            Op::X => ts.iter().for_each(|&q| t.x(q as usize)),
            Op::Z => ts.iter().for_each(|&q| t.z(q as usize)),
            Op::CX => t.cx(ts[0] as usize, ts[1] as usize),
            Op::CZ => t.cz(ts[0] as usize, ts[1] as usize),
            Op::Reset => ts.iter().for_each(|&q| t.reset_with(q as usize, pick)),
            Op::MZ | Op::MX => {
                let kind = if ins.op == Op::MZ { 'Z' } else { 'X' };
                for &q in ts {
                    let p = PauliString::single(n, q as usize, kind);
                    let (o, _) = t.measure_with(&p, pick).expect("validated circuit");
                    out.push(o);
                }
            }
            _ => {}
        }
    }
    out
}

/// Parity of each detector and observable over a measurement record.
pub fn parities(c: &Circuit, record: &[bool]) -> (Vec<bool>, Vec<bool>) {
    let eval = |sets: Vec<Vec<usize>>| -> Vec<bool> {
        sets.iter()
            .map(|s| s.iter().fold(false, |acc, &m| acc ^ record[m]))
            .collect()
    };
    (eval(c.detector_records()), eval(c.observable_records()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_simple_program() {
        let c = Circuit::parse("H 0\nMZ 0").unwrap();
        assert_eq!(c.instructions.len(), 2);
        assert_eq!(c.measurement_count(), 1);
    }

    #[test]
    fn parses_two_qubit_depolarizing() {
        let c = Circuit::parse("DEPOL2(0.001) 0 1").unwrap();
        assert_eq!(c.instructions[0].op, Op::Depol2(0.001));
        assert_eq!(c.instructions[0].targets, vec![0, 1]);
    }

    #[test]
    fn rejects_forward_reference() {
        let e = Circuit::parse("DETECTOR rec[-1] rec[-2]").unwrap_err();
        assert!(matches!(e, CircuitError::Parse { line: 1, .. }));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            Circuit::parse("FOO 1"),
            Err(CircuitError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            Circuit::parse("H 0\nDEPOL1(1.5) 0"),
            Err(CircuitError::Parse { line: 2, .. })
        ));
        assert!(Circuit::parse("CZ 0").is_err());
        assert!(Circuit::parse("CZ 1 1").is_err());
    }

    #[test]
    fn reference_samples() {
        assert_eq!(
            reference_sample(&Circuit::parse("RESET 0\nMZ 0").unwrap()),
            vec![false]
        );
        assert_eq!(
            reference_sample(&Circuit::parse("H 0\nMX 0").unwrap()),
            vec![false]
        );
        assert_eq!(
            reference_sample(&Circuit::parse("X 0\nMZ 0\nMZ 0").unwrap()),
            vec![true, true]
        );
    }

    #[test]
    fn counts_detectors_and_observables() {
        let c = Circuit::parse(
            "MZ 0 1\nDETECTOR(Z) rec[-1] rec[-2]\nOBSERVABLE(1) rec[-1]\nOBSERVABLE(1,Z) rec[-2]",
        )
        .unwrap();
        assert_eq!(c.detector_count(), 1);
        assert_eq!(c.observable_count(), 2);
        assert_eq!(c.observable_records()[1], vec![1, 0]);
        assert_eq!(c.observable_bases()[1], Some(Basis::Z));
        assert_eq!(Circuit::new(0).detector_count(), 0);
    }

    fn instruction(n: u32) -> impl Strategy<Value = Instruction> {
        let q = 0..n;
        let pair = (0..n, 1..n).prop_map(move |(a, o)| vec![a, (a + o) % n]);
        let prob = (0u32..=1000).prop_map(|k| k as f64 / 1000.0);
        prop_oneof![
            (
                prop_oneof![
                    Just(Op::H),
                    Just(Op::S),
                    Just(Op::X),
                    Just(Op::Z),
                    Just(Op::Reset),
                    Just(Op::MZ),
                    Just(Op::MX)
                ],
                proptest::collection::vec(q.clone(), 1..3)
            )
                .prop_map(|(op, t)| Instruction::new(op, t)),
            (prop_oneof![Just(Op::CX), Just(Op::CZ)], pair.clone())
                .prop_map(|(op, t)| Instruction::new(op, t)),
            (prob.clone(), pair).prop_map(|(p, t)| Instruction::new(Op::Depol2(p), t)),
            (prob.clone(), q.clone()).prop_map(|(p, t)| Instruction::new(Op::Depol1(p), vec![t])),
            (prob.clone(), q).prop_map(|(p, t)| Instruction::new(Op::MFlip(p), vec![t])),
            (0u32..100).prop_map(|t| Instruction::new(Op::Tick(t as f64 * 0.5), vec![])),
            (prob.clone(), prob.clone(), prob).prop_map(|(a, b, c)| Instruction::new(
                Op::PauliChannel(a / 3.0, b / 3.0, c / 3.0),
                vec![0]
            )),
        ]
    }

    proptest! {
        #[test]
        fn emit_then_parse_is_identity(body in proptest::collection::vec(instruction(5), 0..40), det in 0usize..4) {
            let mut c = Circuit::new(5);
            c.instructions = body;
            let m = c.measurement_count() as u32;
            if m > 0 {
                for k in 0..det {
                    c.push(Op::Detector { basis: if k % 2 == 0 { Some(Basis::X) } else { None }, recs: vec![1 + k as u32 % m] }, vec![]);
                }
                c.push(Op::Observable { id: 0, basis: Some(Basis::Z), recs: vec![m] }, vec![]);
            }
            c.sites[2] = Some(17);
            let text = c.to_text();
            let back = Circuit::parse(&text).unwrap();
            prop_assert_eq!(&back, &c);
            prop_assert_eq!(back.to_text(), text);
        }
    }
}
