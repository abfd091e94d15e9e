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

//! Simulation core for interleaved neutral-atom surface-code architectures.
//!
//! Circuit-level pieces (`pauli`, `circuit`, `noise`, `geometry`, `codegen`,
//! `decoder`, `montecarlo`) estimate logical CNOT error rates; `benchmarks`
//! and `routing` estimate compute time of logical programs.

pub mod benchmarks;
pub(crate) mod blossom;
pub mod circuit;
pub mod codegen;
pub mod decoder;
pub mod geometry;
pub mod montecarlo;
pub mod noise;
pub mod pauli;
pub mod routing;

#[cfg(test)]
pub(crate) mod oracle;
