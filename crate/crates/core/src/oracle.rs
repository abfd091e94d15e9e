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

//! Dense statevector oracle used by unit tests to cross-check the tableau.

use crate::pauli::PauliString;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C(pub f64, pub f64);

impl C {
    pub fn mul(self, o: C) -> C {
        C(self.0 * o.0 - self.1 * o.1, self.0 * o.1 + self.1 * o.0)
    }
    pub fn add(self, o: C) -> C {
        C(self.0 + o.0, self.1 + o.1)
    }
    pub fn conj(self) -> C {
        C(self.0, -self.1)
    }
    pub fn scale(self, s: f64) -> C {
        C(self.0 * s, self.1 * s)
    }
}

fn i_pow(k: u8) -> C {
    match k & 3 {
        0 => C(1.0, 0.0),
        1 => C(0.0, 1.0),
        2 => C(-1.0, 0.0),
        _ => C(0.0, -1.0),
    }
}

/// Applies a Pauli string (with phase) to a basis-indexed vector.
pub fn apply_pauli(p: &PauliString, v: &[C]) -> Vec<C> {
    let n = p.num_qubits();
    let mut out = vec![C(0.0, 0.0); v.len()];
    let phase = i_pow(p.sign().power());
    for (b, amp) in v.iter().enumerate() {
        let mut coeff = phase;
        let mut nb = b;
        for q in 0..n {
            let bit = b >> q & 1;
            match (p.x(q), p.z(q)) {
                (false, false) => {}
                (true, false) => nb ^= 1 << q,
                (false, true) => {
                    if bit == 1 {
                        coeff = coeff.scale(-1.0);
                    }
                }
                (true, true) => {
                    // Y|0> = i|1>, Y|1> = -i|0>
                    nb ^= 1 << q;
                    coeff = coeff.mul(if bit == 0 { C(0.0, 1.0) } else { C(0.0, -1.0) });
                }
            }
        }
        out[nb] = out[nb].add(coeff.mul(*amp));
    }
    out
}

/// Dense matrix of a Pauli string, column-major by basis index.
pub fn pauli_matrix(p: &PauliString) -> Vec<Vec<C>> {
    let dim = 1 << p.num_qubits();
    (0..dim)
        .map(|c| {
            let mut e = vec![C(0.0, 0.0); dim];
            e[c] = C(1.0, 0.0);
            apply_pauli(p, &e)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct StateVector {
    pub amp: Vec<C>,
}

impl StateVector {
    pub fn new(n: usize) -> Self {
        let mut amp = vec![C(0.0, 0.0); 1 << n];
        amp[0] = C(1.0, 0.0);
        StateVector { amp }
    }

    fn map1(&mut self, q: usize, m: [[C; 2]; 2]) {
        for b in 0..self.amp.len() {
            if b >> q & 1 == 0 {
                let b1 = b | 1 << q;
                let (a0, a1) = (self.amp[b], self.amp[b1]);
                self.amp[b] = m[0][0].mul(a0).add(m[0][1].mul(a1));
                self.amp[b1] = m[1][0].mul(a0).add(m[1][1].mul(a1));
            }
        }
    }

    pub fn h(&mut self, q: usize) {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        self.map1(q, [[C(r, 0.0), C(r, 0.0)], [C(r, 0.0), C(-r, 0.0)]]);
    }
    pub fn s(&mut self, q: usize) {
        self.map1(q, [[C(1.0, 0.0), C(0.0, 0.0)], [C(0.0, 0.0), C(0.0, 1.0)]]);
    }
    pub fn x(&mut self, q: usize) {
        self.map1(q, [[C(0.0, 0.0), C(1.0, 0.0)], [C(1.0, 0.0), C(0.0, 0.0)]]);
    }
    pub fn z(&mut self, q: usize) {
        self.map1(q, [[C(1.0, 0.0), C(0.0, 0.0)], [C(0.0, 0.0), C(-1.0, 0.0)]]);
    }
    pub fn cx(&mut self, c: usize, t: usize) {
        for b in 0..self.amp.len() {
            if b >> c & 1 == 1 && b >> t & 1 == 0 {
                self.amp.swap(b, b | 1 << t);
            }
        }
    }
    pub fn cz(&mut self, a: usize, b: usize) {
        for i in 0..self.amp.len() {
            if i >> a & 1 == 1 && i >> b & 1 == 1 {
                self.amp[i] = self.amp[i].scale(-1.0);
            }
        }
    }

    /// Probability that measuring Hermitian `p` yields eigenvalue -1.
    pub fn prob_minus(&self, p: &PauliString) -> f64 {
        let pv = apply_pauli(p, &self.amp);
        let exp: f64 = self
            .amp
            .iter()
            .zip(&pv)
            .map(|(a, b)| a.conj().mul(*b).0)
            .sum();
        ((1.0 - exp) / 2.0).clamp(0.0, 1.0)
    }

    /// Projects onto the given eigenvalue of `p` and renormalises.
    pub fn project(&mut self, p: &PauliString, minus: bool) {
        let pv = apply_pauli(p, &self.amp);
        let s = if minus { -1.0 } else { 1.0 };
        let mut norm = 0.0;
        for (a, b) in self.amp.iter_mut().zip(pv) {
            *a = a.add(b.scale(s)).scale(0.5);
            norm += a.0 * a.0 + a.1 * a.1;
        }
        let inv = 1.0 / norm.sqrt();
        for a in &mut self.amp {
            *a = a.scale(inv);
        }
    }
}
