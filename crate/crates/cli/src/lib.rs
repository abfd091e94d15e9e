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

//! Argument handling and command implementations for the `interleave` binary.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use interleave_core::benchmarks::{synthesize_rotations, Benchmark, LogicalProgram};
use interleave_core::geometry::{build_layout, ArrayParams};
use interleave_core::montecarlo::{
    coherence_sweep_from, rows_to_csv, threshold_sweep_from, with_workers, CnotMode, SweepRow,
};
use interleave_core::noise::{attach_noise, NoiseParams};
use interleave_core::routing::{
    prepare, route_rows, route_rows_to_csv, sensitivity_sweep, simulate_mapped, DeviceLayout,
    LayoutKind, RouteConfig, RouteRow, RoutingMode, SweepAxis,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed(_) | CliError::Io { .. } => 1,
        }
    }
}

fn failed(e: impl std::fmt::Display) -> CliError {
    CliError::Failed(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "interleave",
    version,
    about = "Logical CNOT error rates and routing-time estimates for interleaved neutral-atom surface codes"
)]
pub struct Cli {
    /// Flat `key = value` parameter file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Transversal vs lattice-surgery CNOT logical error rates.
    CnotCompare(CnotCompareArgs),
    /// Compute time of a benchmark under each routing mode.
    Route(RouteArgs),
    /// Compute-time sensitivity to group size, measurement time or speed.
    Sweep(SweepArgs),
    /// Print a benchmark program, one gate per line.
    BenchGen(BenchGenArgs),
    /// Print atom positions of a group, or the tile grid of a device.
    LayoutDump(LayoutDumpArgs),
}

#[derive(Debug, Args)]
pub struct CnotCompareArgs {
    #[arg(long, value_delimiter = ',', default_value = "3,5,7")]
    pub distances: Vec<usize>,
    /// Physical gate and measurement error rates.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.001,0.002,0.003,0.005,0.007,0.01"
    )]
    pub error_rates: Vec<f64>,
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the noisy circuits of the first grid point here.
    #[arg(long)]
    pub dump_circuit: Option<PathBuf>,
    /// Sweep T1 = T2 instead of the error rate.
    #[arg(long)]
    pub t1_sweep: bool,
    #[arg(long, value_delimiter = ',', default_value = "1e4,1e5,1e6")]
    pub t1_values: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct RouteArgs {
    /// Benchmarks such as `qft:8`, `ghz:16`, `distill15`.
    #[arg(long, value_delimiter = ',', value_parser = parse_bench)]
    pub bench: Vec<Benchmark>,
    /// Route a program file in the `bench-gen` format.
    #[arg(long, conflicts_with = "bench")]
    pub program: Option<PathBuf>,
    /// compact, fast or both.
    #[arg(long, default_value = "compact")]
    pub layout: String,
    /// movement, ils, sls or all.
    #[arg(long, default_value = "all")]
    pub mode: String,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub grover_iterations: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the event log of every run here, one event per line.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// group_size, t_meas, movement_speed or all.
    #[arg(long, default_value = "all")]
    pub axis: String,
    /// Grid values for a single axis.
    #[arg(long, value_delimiter = ',')]
    pub grid: Vec<f64>,
    #[arg(long, default_value = "qft:32", value_parser = parse_bench)]
    pub bench: Benchmark,
    #[arg(long, default_value = "compact")]
    pub layout: String,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct BenchGenArgs {
    #[arg(long, value_parser = parse_bench)]
    pub bench: Benchmark,
    /// Replace rotations by Clifford+T.
    #[arg(long)]
    pub synthesize: bool,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub grover_iterations: Option<usize>,
}

#[derive(Debug, Args)]
pub struct LayoutDumpArgs {
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    /// Dump the device tile grid for this many program qubits instead of atoms.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value = "compact")]
    pub layout: String,
    /// Print the tile grid as characters rather than CSV.
    #[arg(long)]
    pub ascii: bool,
}

fn parse_bench(s: &str) -> Result<Benchmark, String> {
    s.parse::<Benchmark>().map_err(|e| e.to_string())
}

/// Parameters gathered from the config file, before flag overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub noise: NoiseParams,
    pub route: RouteConfig,
    pub shots: u64,
    pub seed: u64,
    pub epsilon: f64,
    pub grover_iterations: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            noise: NoiseParams::default(),
            route: RouteConfig::default(),
            shots: 10_000,
            seed: 0,
            epsilon: 1e-10,
            grover_iterations: 2,
        }
    }
}

impl Settings {
    /// Reads `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut s = Settings::default();
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: &str| CliError::Usage(format!("config line {}: {msg}", i + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad("expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            if seen.insert(key.to_string(), ()).is_some() {
                return Err(bad(&format!("duplicate key `{key}`")));
            }
            let num = || {
                value
                    .parse::<f64>()
                    .map_err(|_| bad(&format!("`{value}` is not a number")))
            };
            let int = || {
                value
                    .parse::<u64>()
                    .map_err(|_| bad(&format!("`{value}` is not an integer")))
            };
            match key {
                "atom_spacing_um" => s.route.spacing_um = num()?,
                "movement_speed_um_per_us" => s.route.speed_um_per_us = num()?,
                "t_1q_us" => {
                    s.noise.t_1q = num()?;
                    s.route.t_1q_us = s.noise.t_1q;
                }
                "t_2q_us" => {
                    s.noise.t_2q = num()?;
                    s.route.t_2q_us = s.noise.t_2q;
                }
                "t_meas_us" => {
                    s.noise.t_meas = num()?;
                    s.route.t_meas_us = s.noise.t_meas;
                }
                "t1_us" => s.noise.t1 = num()?,
                "t2_us" => s.noise.t2 = num()?,
                "p_1q" => s.noise.p_1q = num()?,
                "p_2q" => s.noise.p_2q = num()?,
                "p_meas" => s.noise.p_meas = num()?,
                "group_size" => s.route.k = int()? as usize,
                "code_distance" => s.route.d = int()? as usize,
                "shots" => s.shots = int()?,
                "seed" => s.seed = int()?,
                "epsilon" => s.epsilon = num()?,
                "grover_iterations" => s.grover_iterations = int()? as usize,
                _ => return Err(bad(&format!("unknown key `{key}`"))),
            }
        }
        s.noise
            .validate()
            .map_err(|e| CliError::Usage(format!("config: {e}")))?;
        Ok(s)
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Settings::default()),
            Some(p) => Settings::parse(&read(p)?),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn layouts(s: &str) -> Result<Vec<LayoutKind>, CliError> {
    if s == "both" {
        return Ok(vec![LayoutKind::Compact, LayoutKind::Fast]);
    }
    s.parse::<LayoutKind>()
        .map(|k| vec![k])
        .map_err(CliError::Usage)
}

fn modes(s: &str) -> Result<Vec<RoutingMode>, CliError> {
    if s == "all" {
        return Ok(vec![
            RoutingMode::StandardLs,
            RoutingMode::InterleavedLs,
            RoutingMode::Movement,
        ]);
    }
    s.split(',')
        .map(|m| m.parse::<RoutingMode>().map_err(CliError::Usage))
        .collect()
}

fn axes(s: &str) -> Result<Vec<SweepAxis>, CliError> {
    if s == "all" {
        return Ok(vec![
            SweepAxis::GroupSize,
            SweepAxis::TMeas,
            SweepAxis::Speed,
        ]);
    }
    s.parse::<SweepAxis>()
        .map(|a| vec![a])
        .map_err(CliError::Usage)
}

fn check_epsilon(eps: f64) -> Result<f64, CliError> {
    if eps > 0.0 && eps < 1.0 {
        Ok(eps)
    } else {
        Err(CliError::Usage(format!(
            "epsilon must lie in (0, 1), got {eps}"
        )))
    }
}

/// Parses `args` (including the program name) and runs the command,
/// writing its output to `--out` or `stdout`.
pub fn run<I, S>(args: I, stdout: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                return write!(stdout, "{}", e.render()).map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                });
            }
            _ => return Err(CliError::Usage(e.render().to_string())),
        },
    };
    let settings = Settings::load(cli.config.as_deref())?;
    let text = with_workers(cli.workers, || execute(&cli.command, &settings)).map_err(failed)??;
    match &cli.out {
        Some(p) => write(p, &text),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

fn execute(cmd: &Command, s: &Settings) -> Result<String, CliError> {
    match cmd {
        Command::CnotCompare(a) => cnot_compare(a, s),
        Command::Route(a) => route(a, s),
        Command::Sweep(a) => sweep(a, s),
        Command::BenchGen(a) => bench_gen(a, s),
        Command::LayoutDump(a) => layout_dump(a, s),
    }
}

fn cnot_compare(a: &CnotCompareArgs, s: &Settings) -> Result<String, CliError> {
    let shots = a.shots.unwrap_or(s.shots);
    let seed = a.seed.unwrap_or(s.seed);
    if shots == 0 {
        return Err(CliError::Usage("--shots must be at least 1".into()));
    }
    if a.distances.is_empty() || a.distances.iter().any(|&d| d < 3 || d % 2 == 0) {
        return Err(CliError::Usage(
            "distances must be odd and at least 3".into(),
        ));
    }
    if a.error_rates.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(CliError::Usage("error rates must lie in [0, 1]".into()));
    }
    if let Some(path) = &a.dump_circuit {
        let mut text = String::new();
        for mode in CnotMode::ALL {
            let params = if a.t1_sweep {
                s.noise
                    .with_coherence(a.t1_values.first().copied().unwrap_or(s.noise.t1))
            } else {
                let p = a.error_rates.first().copied().unwrap_or(s.noise.p_2q);
                NoiseParams {
                    p_1q: p,
                    p_2q: p,
                    p_meas: p,
                    ..s.noise
                }
            };
            let c = mode
                .circuit(a.distances[0], Default::default(), (&params).into())
                .map_err(failed)?;
            let noisy = attach_noise(&c, &params).map_err(failed)?;
            text.push_str(&format!("# mode={mode} d={}\n{noisy}\n", a.distances[0]));
        }
        write(path, &text)?;
    }
    let mut rows: Vec<SweepRow> = Vec::new();
    for mode in CnotMode::ALL {
        if a.t1_sweep {
            for &d in &a.distances {
                rows.extend(
                    coherence_sweep_from(&s.noise, mode, d, &a.t1_values, shots, seed)
                        .map_err(failed)?,
                );
            }
        } else {
            rows.extend(
                threshold_sweep_from(&s.noise, mode, &a.distances, &a.error_rates, shots, seed)
                    .map_err(failed)?,
            );
        }
    }
    Ok(rows_to_csv(&rows))
}

fn route_config(s: &Settings, k: Option<usize>, d: Option<usize>) -> RouteConfig {
    RouteConfig {
        k: k.unwrap_or(s.route.k),
        d: d.unwrap_or(s.route.d),
        ..s.route
    }
}

fn route(a: &RouteArgs, s: &Settings) -> Result<String, CliError> {
    let eps = check_epsilon(a.epsilon.unwrap_or(s.epsilon))?;
    let iters = a.grover_iterations.unwrap_or(s.grover_iterations);
    let seed = a.seed.unwrap_or(s.seed);
    let cfg = route_config(s, a.k, a.d);
    let programs: Vec<(String, LogicalProgram)> = match (&a.program, a.bench.is_empty()) {
        (Some(path), _) => {
            let p =
                LogicalProgram::parse(&read(path)?).map_err(|e| CliError::Usage(e.to_string()))?;
            let name = path
                .file_stem()
                .map_or("program".into(), |x| x.to_string_lossy().into_owned());
            vec![(name, synthesize_rotations(&p, eps))]
        }
        (None, false) => a
            .bench
            .iter()
            .map(|b| (b.to_string(), b.synthesized(iters, eps)))
            .collect(),
        (None, true) => return Err(CliError::Usage("route needs --bench or --program".into())),
    };
    let kinds = layouts(&a.layout)?;
    let modes = modes(&a.mode)?;
    let mut rows: Vec<RouteRow> = Vec::new();
    let mut trace = String::new();
    for (name, p) in &programs {
        for &kind in &kinds {
            rows.extend(route_rows(name, p, kind, &modes, &cfg, seed).map_err(failed)?);
            if a.trace.is_some() {
                for &mode in &modes {
                    let (layout, groups) = prepare(p, kind, mode, &cfg).map_err(failed)?;
                    let out =
                        simulate_mapped(p, &layout, &groups, mode, &cfg, true).map_err(failed)?;
                    trace.push_str(&format!(
                        "# {name} {kind} {mode} total_us={:.3}\n",
                        out.total_us
                    ));
                    for e in &out.events {
                        trace.push_str(&e.to_string());
                        trace.push('\n');
                    }
                }
            }
        }
    }
    if let Some(path) = &a.trace {
        write(path, &trace)?;
    }
    Ok(route_rows_to_csv(&rows))
}

fn sweep(a: &SweepArgs, s: &Settings) -> Result<String, CliError> {
    let eps = check_epsilon(a.epsilon.unwrap_or(s.epsilon))?;
    let axes = axes(&a.axis)?;
    if !a.grid.is_empty() && axes.len() != 1 {
        return Err(CliError::Usage("--grid needs a single --axis".into()));
    }
    let program = a.bench.synthesized(s.grover_iterations, eps);
    let name = a.bench.to_string();
    let mut rows = Vec::new();
    for &kind in &layouts(&a.layout)? {
        for &axis in &axes {
            let grid = if a.grid.is_empty() {
                axis.default_grid()
            } else {
                a.grid.clone()
            };
            let seed = a.seed.unwrap_or(s.seed);
            rows.extend(
                sensitivity_sweep(axis, &grid, &name, &program, kind, &s.route, seed)
                    .map_err(failed)?,
            );
        }
    }
    Ok(route_rows_to_csv(&rows))
}

fn bench_gen(a: &BenchGenArgs, s: &Settings) -> Result<String, CliError> {
    let iters = a.grover_iterations.unwrap_or(s.grover_iterations);
    let p = a.bench.program(iters);
    Ok(if a.synthesize {
        synthesize_rotations(&p, check_epsilon(a.epsilon.unwrap_or(s.epsilon))?).dump()
    } else {
        p.dump()
    })
}

fn layout_dump(a: &LayoutDumpArgs, s: &Settings) -> Result<String, CliError> {
    let k = a.k.unwrap_or(s.route.k);
    let d = a.d.unwrap_or(s.route.d);
    match a.n {
        Some(n) => {
            let kind = a.layout.parse::<LayoutKind>().map_err(CliError::Usage)?;
            let l = DeviceLayout::new(kind, n, k, d).map_err(failed)?;
            Ok(if a.ascii { l.ascii() } else { l.to_csv() })
        }
        None => {
            let params = ArrayParams {
                spacing: s.route.spacing_um,
                ..ArrayParams::default()
            };
            Ok(build_layout(k, d, params).map_err(failed)?.to_csv())
        }
    }
}
