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

//! Logical error rate estimation by sampling and matching.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::circuit::Circuit;
use crate::codegen::{
    gen_lattice_surgery_cnot_experiment, gen_transversal_cnot_experiment, CnotSpec, CodegenError,
    SurgeryLayout, Timing,
};
use crate::decoder::{extract_dem_with, DecoderError, Decomposition, MatchingGraph};
use crate::geometry::{build_layout, ArrayParams, GeometryError};
use crate::noise::{attach_noise, FrameSampler, NoiseError, NoiseParams, BATCH};

#[derive(Debug, Error)]
pub enum MonteCarloError {
    #[error("at least one shot is required")]
    NoShots,
    #[error("could not build worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Decoder(#[from] DecoderError),
    #[error(transparent)]
    Codegen(#[from] CodegenError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// 95% two-sided normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `errors` successes out of `shots` at 95%.
pub fn wilson_interval(errors: u64, shots: u64) -> (f64, f64) {
    if shots == 0 {
        return (0.0, 1.0);
    }
    let n = shots as f64;
    let p = errors as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // the bounds are exactly 0 and 1 at the extremes; avoid rounding residue
    let lo = if errors == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let hi = if errors >= shots {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub shots: u64,
    pub errors: u64,
    pub rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl Estimate {
    pub fn new(errors: u64, shots: u64) -> Self {
        let (ci_lo, ci_hi) = wilson_interval(errors, shots);
        Estimate {
            shots,
            errors,
            rate: if shots == 0 {
                0.0
            } else {
                errors as f64 / shots as f64
            },
            ci_lo,
            ci_hi,
        }
    }

    /// True when the two 95% intervals do not overlap and `self` is lower.
    pub fn clearly_below(&self, other: &Estimate) -> bool {
        self.ci_hi < other.ci_lo
    }
}

/// A noisy circuit compiled for sampling, with its matching graph.
pub struct Experiment {
    sampler: FrameSampler,
    graph: MatchingGraph,
    /// Error parts that needed new edges during decomposition.
    pub approximated: usize,
}

impl Experiment {
    pub fn new(noisy: &Circuit) -> Result<Self, MonteCarloError> {
        let (dem, approximated) = extract_dem_with(noisy, Decomposition::Approximate)?;
        Ok(Experiment {
            sampler: FrameSampler::new(noisy),
            graph: MatchingGraph::from_dem(&dem),
            approximated,
        })
    }

    /// Failures in batch `index` (a shot fails if any observable is mispredicted).
    fn batch_failures(&self, seed: u64, index: u64, shots: usize) -> u64 {
        let batch = self.sampler.sample_batch(seed, index, shots);
        batch
            .fired_lists()
            .iter()
            .enumerate()
            .filter(|(s, fired)| {
                let predicted = self
                    .graph
                    .decode(fired)
                    .expect("detectors come from the same circuit");
                predicted != batch.observable_mask(*s)
            })
            .count() as u64
    }

    /// Samples `shots` shots in batches spread over the current rayon pool.
    /// Batch `i` always uses stream `i` of `seed`, so the count does not
    /// depend on the number of workers.
    pub fn run(&self, shots: u64, seed: u64) -> Estimate {
        let batches = shots.div_ceil(BATCH as u64);
        let errors: u64 = (0..batches)
            .into_par_iter()
            .map(|i| {
                let n = (shots - i * BATCH as u64).min(BATCH as u64) as usize;
                self.batch_failures(seed, i, n)
            })
            .sum();
        Estimate::new(errors, shots)
    }
}

/// Runs `f` on a dedicated pool of `workers` threads (`None` = rayon default).
pub fn with_workers<T: Send>(
    workers: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, MonteCarloError> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| MonteCarloError::Pool(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Attaches `params` noise to a noiseless circuit, decodes `shots` samples
/// and reports the logical failure rate with a Wilson interval.
pub fn estimate_logical_error_rate(
    circuit: &Circuit,
    params: &NoiseParams,
    shots: u64,
    seed: u64,
) -> Result<Estimate, MonteCarloError> {
    if shots == 0 {
        return Err(MonteCarloError::NoShots);
    }
    let noisy = attach_noise(circuit, params)?;
    Ok(Experiment::new(&noisy)?.run(shots, seed))
}

/// How the logical CNOT is realised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CnotMode {
    Transversal,
    LatticeSurgery,
}

impl CnotMode {
    pub const ALL: [CnotMode; 2] = [CnotMode::Transversal, CnotMode::LatticeSurgery];

    /// Group size used for the transversal experiment.
    pub const TRANSVERSAL_K: usize = 4;

    /// Noiseless experiment circuit at distance `d`.
    pub fn circuit(
        self,
        d: usize,
        spec: CnotSpec,
        timing: Timing,
    ) -> Result<Circuit, MonteCarloError> {
        Ok(match self {
            CnotMode::Transversal => {
                let layout = build_layout(Self::TRANSVERSAL_K, d, ArrayParams::default())?;
                gen_transversal_cnot_experiment(&layout, d, spec, timing)?
            }
            CnotMode::LatticeSurgery => {
                let sl = SurgeryLayout::new(d, ArrayParams::default())?;
                gen_lattice_surgery_cnot_experiment(&sl, spec, timing)?
            }
        })
    }
}

impl fmt::Display for CnotMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CnotMode::Transversal => "transversal",
            CnotMode::LatticeSurgery => "lattice_surgery",
        })
    }
}

impl FromStr for CnotMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "transversal" => Ok(CnotMode::Transversal),
            "lattice_surgery" | "lattice-surgery" | "ls" => Ok(CnotMode::LatticeSurgery),
            _ => Err(format!(
                "unknown mode '{s}' (expected transversal or lattice_surgery)"
            )),
        }
    }
}

pub const CSV_HEADER: &str = "mode,d,p,T1_us,shots,errors,rate,ci_lo,ci_hi,seed";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub mode: CnotMode,
    pub d: usize,
    pub p: f64,
    pub t1_us: f64,
    pub estimate: Estimate,
    pub seed: u64,
}

impl SweepRow {
    pub fn to_csv(&self) -> String {
        let e = &self.estimate;
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.mode,
            self.d,
            self.p,
            self.t1_us,
            e.shots,
            e.errors,
            e.rate,
            e.ci_lo,
            e.ci_hi,
            self.seed
        )
    }
}

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.to_csv());
        s.push('\n');
    }
    s
}

/// Logical failure rate of one CNOT experiment under `params`.
pub fn cnot_rate(
    mode: CnotMode,
    d: usize,
    params: &NoiseParams,
    shots: u64,
    seed: u64,
) -> Result<SweepRow, MonteCarloError> {
    let c = mode.circuit(d, CnotSpec::default(), Timing::from(params))?;
    let estimate = estimate_logical_error_rate(&c, params, shots, seed)?;
    Ok(SweepRow {
        mode,
        d,
        p: params.p_2q,
        t1_us: params.t1,
        estimate,
        seed,
    })
}

/// One row per `(d, p)`: gate and measurement errors all set to `p`,
/// everything else at defaults.
pub fn threshold_sweep(
    mode: CnotMode,
    distances: &[usize],
    error_rates: &[f64],
    shots: u64,
    seed: u64,
) -> Result<Vec<SweepRow>, MonteCarloError> {
    threshold_sweep_from(
        &NoiseParams::default(),
        mode,
        distances,
        error_rates,
        shots,
        seed,
    )
}

/// As `threshold_sweep`, with durations and coherence taken from `base`.
pub fn threshold_sweep_from(
    base: &NoiseParams,
    mode: CnotMode,
    distances: &[usize],
    error_rates: &[f64],
    shots: u64,
    seed: u64,
) -> Result<Vec<SweepRow>, MonteCarloError> {
    let mut rows = Vec::new();
    for &d in distances {
        for &p in error_rates {
            let params = NoiseParams {
                p_1q: p,
                p_2q: p,
                p_meas: p,
                ..*base
            };
            rows.push(cnot_rate(mode, d, &params, shots, seed)?);
        }
    }
    Ok(rows)
}

/// One row per coherence time (T2 = T1), other parameters at defaults.
pub fn coherence_sweep(
    mode: CnotMode,
    d: usize,
    t1_values: &[f64],
    shots: u64,
    seed: u64,
) -> Result<Vec<SweepRow>, MonteCarloError> {
    coherence_sweep_from(&NoiseParams::default(), mode, d, t1_values, shots, seed)
}

/// As `coherence_sweep`, with every other parameter taken from `base`.
pub fn coherence_sweep_from(
    base: &NoiseParams,
    mode: CnotMode,
    d: usize,
    t1_values: &[f64],
    shots: u64,
    seed: u64,
) -> Result<Vec<SweepRow>, MonteCarloError> {
    t1_values
        .iter()
        .map(|&t| cnot_rate(mode, d, &base.with_coherence(t), shots, seed))
        .collect()
}

/// Error rate at which two rate curves sampled on the same grid cross,
/// interpolated linearly in log-log space. `None` if they never cross.
pub fn crossing(ps: &[f64], small_d: &[f64], large_d: &[f64]) -> Option<f64> {
    let diff: Vec<f64> = small_d.iter().zip(large_d).map(|(a, b)| b - a).collect();
    for i in 1..ps.len() {
        if diff[i - 1] < 0.0 && diff[i] >= 0.0 {
            let l = |x: f64| x.max(1e-12).ln();
            let (x0, x1) = (l(ps[i - 1]), l(ps[i]));
            let g0 = l(large_d[i - 1]) - l(small_d[i - 1]);
            let g1 = l(large_d[i]) - l(small_d[i]);
            let t = if g1 == g0 { 0.5 } else { -g0 / (g1 - g0) };
            return Some((x0 + t * (x1 - x0)).exp());
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegen::{gen_memory, LogicalState, SurfacePatch};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn memory(d: usize) -> Circuit {
        let layout = build_layout(1, d, ArrayParams::default()).unwrap();
        gen_memory(
            &layout,
            &SurfacePatch::new(d, 0, 0, 0),
            d,
            LogicalState::Zero,
            Timing::default(),
        )
        .unwrap()
    }

    #[test]
    fn wilson_matches_closed_form_values() {
        let (lo, hi) = wilson_interval(0, 10);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.277_53).abs() < 1e-4, "{hi}");
        let (lo, hi) = wilson_interval(50, 100);
        assert!(
            (lo - 0.403_83).abs() < 1e-4 && (hi - 0.596_17).abs() < 1e-4,
            "{lo} {hi}"
        );
        assert_eq!(wilson_interval(0, 0), (0.0, 1.0));
    }

    #[test]
    fn wilson_covers_true_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = 0.01;
        let covered = (0..200)
            .filter(|_| {
                let errors = (0..2000).filter(|_| rng.gen_bool(p)).count() as u64;
                let e = Estimate::new(errors, 2000);
                e.ci_lo <= p && p <= e.ci_hi
            })
            .count();
        assert!(covered >= 180, "{covered}/200");
    }

    #[test]
    fn zero_noise_gives_zero_rate() {
        for mode in CnotMode::ALL {
            let c = mode
                .circuit(3, CnotSpec::default(), Timing::default())
                .unwrap();
            let e = estimate_logical_error_rate(&c, &NoiseParams::noiseless(), 2000, 1).unwrap();
            assert_eq!(e.errors, 0, "{mode}");
            assert_eq!(e.rate, 0.0);
        }
    }

    #[test]
    fn zero_shots_is_an_error() {
        let r = estimate_logical_error_rate(&memory(3), &NoiseParams::default(), 0, 1);
        assert!(matches!(r, Err(MonteCarloError::NoShots)));
    }

    #[test]
    fn counts_do_not_depend_on_workers() {
        let noisy = attach_noise(&memory(3), &NoiseParams::uniform(0.005)).unwrap();
        let exp = Experiment::new(&noisy).unwrap();
        let one = with_workers(Some(1), || exp.run(3000, 9)).unwrap();
        let three = with_workers(Some(3), || exp.run(3000, 9)).unwrap();
        assert_eq!(one, three);
        assert!(one.errors > 0);
        assert_ne!(exp.run(3000, 10).errors, 0);
    }

    #[test]
    fn saturates_far_above_threshold() {
        // two independent random observables fail together 3/4 of the time
        let c = CnotMode::Transversal
            .circuit(3, CnotSpec::default(), Timing::default())
            .unwrap();
        let e = estimate_logical_error_rate(&c, &NoiseParams::uniform(0.05), 4000, 3).unwrap();
        assert!(e.ci_lo <= 0.75 && 0.75 <= e.ci_hi, "{e:?}");
    }

    #[test]
    fn table_defaults_row_is_shared_by_both_sweeps() {
        let a = threshold_sweep(CnotMode::Transversal, &[3], &[0.001], 2000, 4).unwrap();
        let b = coherence_sweep(CnotMode::Transversal, 3, &[1e6], 2000, 4).unwrap();
        assert_eq!(a[0].estimate, b[0].estimate);
    }

    #[test]
    fn rate_grows_with_physical_error() {
        let rows =
            threshold_sweep(CnotMode::Transversal, &[3], &[0.0005, 0.003, 0.01], 3000, 5).unwrap();
        for w in rows.windows(2) {
            assert!(w[0].estimate.ci_lo <= w[1].estimate.ci_hi, "{w:?}");
            assert!(w[0].estimate.rate < w[1].estimate.rate);
        }
    }

    #[test]
    fn csv_rows_follow_header() {
        let rows = coherence_sweep(CnotMode::LatticeSurgery, 3, &[1e6], 500, 2).unwrap();
        let text = rows_to_csv(&rows);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields.len(), CSV_HEADER.split(',').count());
        assert_eq!(fields[0], "lattice_surgery");
        assert_eq!(fields[3], "1000000");
    }

    #[test]
    fn mode_names_round_trip() {
        for m in CnotMode::ALL {
            assert_eq!(m.to_string().parse::<CnotMode>(), Ok(m));
        }
        assert!("teleport".parse::<CnotMode>().is_err());
    }

    #[test]
    fn crossing_interpolates_in_log_space() {
        let ps = [0.001, 0.01];
        // 10p and 100p^2 meet at p = 0.1, outside the grid
        let small: Vec<f64> = ps.iter().map(|p| 10.0 * p).collect();
        let large: Vec<f64> = ps.iter().map(|p| 100.0 * p * p).collect();
        assert_eq!(crossing(&ps, &small, &large), None);
        // p and 100p^2 meet at p = 0.01
        let ps = [0.001, 0.1];
        let small = ps.to_vec();
        let large: Vec<f64> = ps.iter().map(|p| 100.0 * p * p).collect();
        let x = crossing(&ps, &small, &large).unwrap();
        assert!((x - 0.01).abs() < 1e-9, "{x}");
    }
}
