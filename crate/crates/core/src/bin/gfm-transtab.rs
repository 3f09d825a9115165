//! Command-line front end: power-angle curves, equilibria, clearing-time
//! searches, swing traces, time-domain simulations, and limiter
//! characterisation. All artifacts are deterministic CSV/JSON files with
//! a run manifest written beside them.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gfm_transtab::limiter::{
    equivalent_resistance, phase_peaks, scale_decoupled, scaling_factor,
};
use gfm_transtab::network::FaultKind;
use gfm_transtab::phasor::polar;
use gfm_transtab::power_angle::{
    find_equilibria, healthy_scenario, p_delta_curve, EquilibriumKind,
};
use gfm_transtab::report::{
    fmt_num, scenario_hash, write_curve_csv, write_sim_csv, write_swing_csv, CctRecord,
    RunManifest,
};
use gfm_transtab::scenario::{load_scenario, LoadedScenario, Scenario};
use gfm_transtab::sim::{simulate, SimOptions};
use gfm_transtab::swing::{
    critical_clearing_time, integrate_swing, CctOutcome, EvalMode, EventTimeline,
    PostFaultAnchors, PowerEvaluator, SwingState,
};
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "gfm-transtab", version, about = "Transient-stability analysis of grid-forming converters under asymmetrical grid faults")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    Slg,
    Dlg,
    Ll,
    None,
}

impl From<FaultArg> for FaultKind {
    fn from(f: FaultArg) -> Self {
        match f {
            FaultArg::Slg => FaultKind::Slg,
            FaultArg::Dlg => FaultKind::Dlg,
            FaultArg::Ll => FaultKind::Ll,
            FaultArg::None => FaultKind::None,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Re-solve the operating point at every integration stage.
    Exact,
    /// Interpolate precomputed curves (cubic, periodic).
    Interpolated,
}

impl From<ModeArg> for EvalMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Exact => EvalMode::Exact,
            ModeArg::Interpolated => EvalMode::Interpolated,
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario file (TOML sections; `.json` selects JSON). Omitted keys
    /// use the documented defaults.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Override the fault class.
    #[arg(long, value_enum)]
    fault: Option<FaultArg>,
    /// Override the fault resistance, pu.
    #[arg(long)]
    rf: Option<f64>,
    /// Override the fault-location fraction in (0, 1).
    #[arg(long)]
    split: Option<f64>,
    /// Output directory for artifacts and the run manifest.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the limiter-aware power-angle curve to CSV.
    Curve {
        #[command(flatten)]
        common: CommonArgs,
        /// Grid points over (-pi, pi].
        #[arg(long)]
        delta_points: Option<usize>,
    },
    /// Locate and classify curve/reference intersections.
    Equilibria {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        delta_points: Option<usize>,
    },
    /// Search the critical clearing time on a duration grid.
    Cct {
        #[command(flatten)]
        common: CommonArgs,
        /// Duration grid resolution, s.
        #[arg(long)]
        resolution: Option<f64>,
        /// Post-clearing observation window (and duration cap), s.
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long, value_enum, default_value = "exact")]
        mode: ModeArg,
    },
    /// Integrate one fault-on/fault-cleared swing trace to CSV.
    Swing {
        #[command(flatten)]
        common: CommonArgs,
        /// Fault application time, s.
        #[arg(long, default_value_t = 0.1)]
        fault_on: f64,
        /// Fault duration, s.
        #[arg(long)]
        fault_duration: f64,
        /// Study horizon, s.
        #[arg(long)]
        horizon: Option<f64>,
        /// Integration step, s.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, value_enum, default_value = "exact")]
        mode: ModeArg,
    },
    /// Run the average-model time-domain simulation to CSV.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 1.0)]
        fault_on: f64,
        #[arg(long, default_value_t = 0.2)]
        fault_duration: f64,
        #[arg(long)]
        horizon: Option<f64>,
        /// Pin the power angle at this value (degrees) instead of running
        /// the synchronisation loop.
        #[arg(long)]
        frozen_delta: Option<f64>,
        /// Initial power angle (degrees) for the synchronisation loop.
        #[arg(long, default_value_t = 0.0)]
        init_delta: f64,
        /// Keep every n-th recorded row in the CSV.
        #[arg(long, default_value_t = 1)]
        downsample: usize,
    },
    /// Characterise the elliptical limiter for one reference pair.
    Limiter {
        #[command(flatten)]
        common: CommonArgs,
        /// Positive-sequence reference magnitude, pu.
        #[arg(long)]
        ipos: f64,
        /// Negative-sequence reference magnitude, pu.
        #[arg(long)]
        ineg: f64,
        /// Reference angle sum, degrees.
        #[arg(long, default_value_t = 0.0)]
        phisum: f64,
        /// Decoupled positive-sequence factor (sequence priority).
        #[arg(long)]
        cpos: Option<f64>,
        /// Decoupled negative-sequence factor (sequence priority).
        #[arg(long)]
        cneg: Option<f64>,
    },
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    init_thread_pool()?;
    let cli = Cli::parse();
    match cli.command {
        Command::Curve { common, delta_points } => cmd_curve(common, delta_points),
        Command::Equilibria { common, delta_points } => cmd_equilibria(common, delta_points),
        Command::Cct { common, resolution, horizon, mode } => {
            cmd_cct(common, resolution, horizon, mode.into())
        }
        Command::Swing { common, fault_on, fault_duration, horizon, dt, mode } => {
            cmd_swing(common, fault_on, fault_duration, horizon, dt, mode.into())
        }
        Command::Simulate {
            common,
            fault_on,
            fault_duration,
            horizon,
            frozen_delta,
            init_delta,
            downsample,
        } => cmd_simulate(
            common,
            fault_on,
            fault_duration,
            horizon,
            frozen_delta,
            init_delta,
            downsample,
        ),
        Command::Limiter { common, ipos, ineg, phisum, cpos, cneg } => {
            cmd_limiter(common, ipos, ineg, phisum, cpos, cneg)
        }
    }
}

fn init_thread_pool() -> Result<()> {
    if let Ok(v) = std::env::var("GFM_TRANSTAB_THREADS") {
        let n: usize = v
            .parse()
            .with_context(|| format!("GFM_TRANSTAB_THREADS = {v:?} is not a worker count"))?;
        if n == 0 {
            bail!("GFM_TRANSTAB_THREADS must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("worker pool already initialised")?;
    }
    Ok(())
}

/// Load the scenario file (or pure defaults), apply flag overrides, and
/// report both the defaulted keys and the overrides.
fn prepare(common: &CommonArgs) -> Result<(Scenario, Vec<String>, Vec<String>)> {
    let LoadedScenario {
        mut scenario,
        applied_defaults,
    } = match &common.scenario {
        Some(path) => load_scenario(path)
            .with_context(|| format!("loading scenario {}", path.display()))?,
        None => LoadedScenario {
            scenario: Scenario::paper_defaults(),
            applied_defaults: vec!["<no scenario file: all defaults>".to_string()],
        },
    };
    let mut overrides = Vec::new();
    if let Some(f) = common.fault {
        scenario.fault.kind = f.into();
        overrides.push(format!("fault.kind = {} (--fault)", scenario.fault.kind.label()));
    }
    if let Some(rf) = common.rf {
        scenario.fault.r_f = rf;
        overrides.push(format!("fault.r_f = {rf} (--rf)"));
    }
    if let Some(split) = common.split {
        scenario.network.split = split;
        overrides.push(format!("network.split = {split} (--split)"));
    }
    scenario
        .validate()
        .context("scenario invalid after overrides")?;
    Ok((scenario, applied_defaults, overrides))
}

fn ensure_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))
}

fn write_manifest(
    dir: &Path,
    scenario: &Scenario,
    command: &str,
    outputs: &[PathBuf],
    applied_defaults: Vec<String>,
    overrides: Vec<String>,
) -> Result<()> {
    let manifest = RunManifest::new(
        scenario,
        command,
        outputs.iter().map(|p| p.display().to_string()).collect(),
        applied_defaults,
        overrides,
    );
    manifest
        .write(&dir.join("manifest.json"))
        .context("writing manifest")?;
    Ok(())
}

fn cmd_curve(common: CommonArgs, delta_points: Option<usize>) -> Result<()> {
    let (mut scenario, defaults, mut overrides) = prepare(&common)?;
    if let Some(n) = delta_points {
        scenario.solver.delta_points = n;
        overrides.push(format!("solver.delta_points = {n} (--delta-points)"));
    }
    ensure_out(&common.out)?;
    let curve = p_delta_curve(&scenario, scenario.solver.delta_points)?;
    let path = common.out.join("curve.csv");
    write_curve_csv(&curve, BufWriter::new(File::create(&path)?))?;
    println!(
        "curve: {} samples, fault {}, max P {} pu -> {}",
        curve.samples.len(),
        scenario.fault.kind.label(),
        fmt_num(curve.max_p_total()),
        path.display()
    );
    write_manifest(&common.out, &scenario, "curve", &[path], defaults, overrides)
}

fn cmd_equilibria(common: CommonArgs, delta_points: Option<usize>) -> Result<()> {
    let (mut scenario, defaults, mut overrides) = prepare(&common)?;
    if let Some(n) = delta_points {
        scenario.solver.delta_points = n;
        overrides.push(format!("solver.delta_points = {n} (--delta-points)"));
    }
    ensure_out(&common.out)?;
    let curve = p_delta_curve(&scenario, scenario.solver.delta_points)?;
    let eq = find_equilibria(&curve, scenario.converter.p_ref)?;
    let path = common.out.join("equilibria.csv");
    {
        let mut out = BufWriter::new(File::create(&path)?);
        use std::io::Write;
        writeln!(out, "delta_rad,kind,p_ref_pu")?;
        for e in &eq {
            let kind = match e.kind {
                EquilibriumKind::Sep => "sep",
                EquilibriumKind::Uep => "uep",
            };
            writeln!(out, "{},{},{}", fmt_num(e.delta), kind, fmt_num(scenario.converter.p_ref))?;
        }
    }
    if eq.is_empty() {
        println!("equilibria: none (reference above the curve)");
    }
    for e in &eq {
        println!(
            "equilibria: {} at delta = {} rad ({} deg)",
            match e.kind {
                EquilibriumKind::Sep => "SEP",
                EquilibriumKind::Uep => "UEP",
            },
            fmt_num(e.delta),
            fmt_num(e.delta.to_degrees())
        );
    }
    write_manifest(&common.out, &scenario, "equilibria", &[path], defaults, overrides)
}

fn cmd_cct(
    common: CommonArgs,
    resolution: Option<f64>,
    horizon: Option<f64>,
    mode: EvalMode,
) -> Result<()> {
    let (scenario, defaults, overrides) = prepare(&common)?;
    if scenario.fault.kind == FaultKind::None {
        bail!("cct needs a fault; pass --fault slg|dlg|ll");
    }
    ensure_out(&common.out)?;
    let resolution = resolution.unwrap_or(scenario.solver.cct_resolution);
    let horizon = horizon.unwrap_or(scenario.solver.horizon);
    let report = critical_clearing_time(&scenario, resolution, horizon, mode)?;
    let record = CctRecord::new(&scenario, &report);
    let path = common.out.join("cct.json");
    std::fs::write(&path, record.to_json_line() + "\n")?;
    match report.outcome {
        CctOutcome::Bounded(s) => println!("cct: {} s at {} s resolution", fmt_num(s), resolution),
        CctOutcome::Unbounded => println!("cct: unbounded (stable at horizon-length fault)"),
    }
    for v in &report.monotonicity_violations {
        println!("cct: diagnostic: stable duration {v} s above the first unstable one");
    }
    write_manifest(&common.out, &scenario, "cct", &[path], defaults, overrides)
}

fn cmd_swing(
    common: CommonArgs,
    fault_on: f64,
    fault_duration: f64,
    horizon: Option<f64>,
    dt: Option<f64>,
    mode: EvalMode,
) -> Result<()> {
    let (scenario, defaults, overrides) = prepare(&common)?;
    ensure_out(&common.out)?;
    let timeline = EventTimeline {
        fault_on,
        fault_duration,
        horizon: horizon.unwrap_or(fault_on + fault_duration + scenario.solver.horizon),
    };
    let dt = dt.unwrap_or(scenario.solver.swing_dt);

    let healthy = healthy_scenario(&scenario);
    let healthy_curve = p_delta_curve(&healthy, scenario.solver.delta_points)?;
    let eq = find_equilibria(&healthy_curve, scenario.converter.p_ref)?;
    let sep = eq
        .iter()
        .find(|e| e.kind == EquilibriumKind::Sep)
        .map(|e| e.delta)
        .context("no pre-fault stable equilibrium")?;
    let uep = eq
        .iter()
        .filter(|e| e.kind == EquilibriumKind::Uep && e.delta > sep)
        .map(|e| e.delta)
        .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.min(d))));
    let anchors = PostFaultAnchors { sep: Some(sep), uep };

    let fault_curve;
    let (pre, fault, post) = match mode {
        EvalMode::Exact => (
            PowerEvaluator::exact(&healthy),
            PowerEvaluator::exact(&scenario),
            PowerEvaluator::exact(&healthy),
        ),
        EvalMode::Interpolated => {
            fault_curve = p_delta_curve(&scenario, scenario.solver.delta_points)?;
            (
                PowerEvaluator::interpolated(&healthy_curve),
                PowerEvaluator::interpolated(&fault_curve),
                PowerEvaluator::interpolated(&healthy_curve),
            )
        }
    };

    let trace = integrate_swing(
        &scenario,
        &pre,
        &fault,
        &post,
        &timeline,
        SwingState { delta: sep, omega: 0.0 },
        dt,
        &anchors,
    )?;
    let path = common.out.join("swing.csv");
    write_swing_csv(&trace, BufWriter::new(File::create(&path)?))?;
    println!(
        "swing: verdict {:?}, {} samples -> {}",
        trace.verdict,
        trace.samples.len(),
        path.display()
    );
    write_manifest(&common.out, &scenario, "swing", &[path], defaults, overrides)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    common: CommonArgs,
    fault_on: f64,
    fault_duration: f64,
    horizon: Option<f64>,
    frozen_delta_deg: Option<f64>,
    init_delta_deg: f64,
    downsample: usize,
) -> Result<()> {
    let (scenario, defaults, overrides) = prepare(&common)?;
    ensure_out(&common.out)?;
    let timeline = EventTimeline {
        fault_on,
        fault_duration,
        horizon: horizon.unwrap_or(fault_on + fault_duration + 2.0),
    };
    let options = SimOptions {
        frozen_delta: frozen_delta_deg.map(f64::to_radians),
        init_delta: init_delta_deg.to_radians(),
        record_every: 10,
    };
    let trace = simulate(&scenario, &timeline, &options)?;
    let path = common.out.join("waveform.csv");
    write_sim_csv(&trace, downsample, BufWriter::new(File::create(&path)?))?;
    println!(
        "simulate: {} rows at {} s spacing -> {}",
        trace.rows.len().div_ceil(downsample.max(1)),
        fmt_num(trace.dt_row * downsample.max(1) as f64),
        path.display()
    );
    write_manifest(&common.out, &scenario, "simulate", &[path], defaults, overrides)
}

fn cmd_limiter(
    common: CommonArgs,
    ipos: f64,
    ineg: f64,
    phisum_deg: f64,
    cpos: Option<f64>,
    cneg: Option<f64>,
) -> Result<()> {
    let (scenario, defaults, overrides) = prepare(&common)?;
    ensure_out(&common.out)?;
    // Angle sum is what the peaks depend on; put it on the positive
    // reference and keep the negative one real.
    let refs_pos = polar(ipos, phisum_deg.to_radians());
    let refs_neg = polar(ineg, 0.0);
    let peaks = phase_peaks(refs_pos, refs_neg);
    let i_lim = scenario.converter.i_lim;
    let k_pv = scenario.converter.k_pv;

    let (c_pos, c_neg, label) = match (cpos, cneg) {
        (Some(cp), Some(cn)) => (cp, cn, "decoupled"),
        (None, None) => {
            let c = scaling_factor(peaks.max_peak, i_lim);
            (c, c, "coupled")
        }
        _ => bail!("--cpos and --cneg must be given together"),
    };
    let (lim_pos, lim_neg) = scale_decoupled(refs_pos, refs_neg, c_pos, c_neg)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let after = phase_peaks(lim_pos, lim_neg);

    let header = "quantity,value";
    let mut lines = vec![
        format!("peak_a_pu,{}", fmt_num(peaks.peak_a)),
        format!("peak_b_pu,{}", fmt_num(peaks.peak_b)),
        format!("peak_c_pu,{}", fmt_num(peaks.peak_c)),
        format!("max_peak_pu,{}", fmt_num(peaks.max_peak)),
        format!("i_lim_pu,{}", fmt_num(i_lim)),
        format!("mode,{label}"),
        format!("c_pos,{}", fmt_num(c_pos)),
        format!("c_neg,{}", fmt_num(c_neg)),
        format!("max_peak_after_pu,{}", fmt_num(after.max_peak)),
    ];
    if label == "coupled" {
        let r_eq = equivalent_resistance(c_pos, k_pv).map_err(|e| anyhow::anyhow!("{e}"))?;
        lines.push(format!("r_eq_pu,{}", fmt_num(r_eq)));
    }
    println!("{header}");
    for l in &lines {
        println!("{l}");
    }
    let path = common.out.join("limiter.csv");
    std::fs::write(&path, format!("{header}\n{}\n", lines.join("\n")))?;
    write_manifest(&common.out, &scenario, "limiter", &[path], defaults, overrides)?;
    let _ = scenario_hash(&scenario);
    Ok(())
}
