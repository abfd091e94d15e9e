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

use interleave_core::benchmarks::{Benchmark, LogicalProgram};
use interleave_core::codegen::{gen_memory, LogicalState, SurfacePatch, Timing};
use interleave_core::decoder::{extract_dem, graph_distance, MatchingGraph};
use interleave_core::geometry::{build_layout, ArrayParams};
use interleave_core::montecarlo::estimate_logical_error_rate;
use interleave_core::noise::{attach_noise, NoiseParams};
use interleave_core::routing::{simulate, LayoutKind, RouteConfig, RoutingMode};

#[test]
fn dumped_programs_parse_back_and_route_identically() {
    let cfg = RouteConfig::default();
    for name in ["bv:8", "ghz:12", "qft:6", "grover:4", "qaoa:5", "distill15"] {
        let b: Benchmark = name.parse().unwrap();
        let p = b.synthesized(2, 1e-6);
        let back = LogicalProgram::parse(&p.dump()).unwrap();
        assert_eq!(back, p, "{name}");
        for mode in [RoutingMode::InterleavedLs, RoutingMode::Movement] {
            let a = simulate(&p, LayoutKind::Compact, mode, &cfg, false).unwrap();
            let b = simulate(&back, LayoutKind::Compact, mode, &cfg, false).unwrap();
            assert_eq!(a.total_us, b.total_us, "{name} {mode}");
        }
    }
}

#[test]
fn memory_experiment_through_the_whole_stack() {
    let layout = build_layout(1, 3, ArrayParams::default()).unwrap();
    let c = gen_memory(
        &layout,
        &SurfacePatch::new(3, 0, 0, 0),
        3,
        LogicalState::Zero,
        Timing::default(),
    )
    .unwrap();
    let quiet = estimate_logical_error_rate(&c, &NoiseParams::noiseless(), 2000, 3).unwrap();
    assert_eq!(quiet.errors, 0);

    let params = NoiseParams::uniform(0.001);
    let noisy = attach_noise(&c, &params).unwrap();
    let g = MatchingGraph::from_dem(&extract_dem(&noisy).unwrap());
    assert_eq!(graph_distance(&g), Some(3));
    let low = estimate_logical_error_rate(&c, &params, 20_000, 3).unwrap();
    let high = estimate_logical_error_rate(&c, &NoiseParams::uniform(0.01), 20_000, 3).unwrap();
    assert!(low.clearly_below(&high), "{low:?} vs {high:?}");
}
