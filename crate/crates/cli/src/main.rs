//! `perilod`: design advice, single-trial simulation, experiment sweeps and
//! calibration for head-tracked peripheral degradation.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use perilod::geometry::{self, Axis};
use perilod::harness::{self, ExperimentConfig, ReferenceTable, DEFAULT_MASTER_SEED};
use perilod::simulator::{self, generate_trial, simulate_trial, trial_seed};
use perilod::{DisplaySpec, InsetSpec};
use serde::Serialize;

const SEED_ENV: &str = "PERILOD_SEED";

/// Smallest inset extent, per axis, with no measurable search cost.
const RULE_INSET_DEG: f64 = 30.0;

#[derive(Debug, Parser)]
#[command(name = "perilod", version, about = "Head-tracked peripheral degradation model")]
struct Cli {
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the configuration file and PERILOD_SEED.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Recommend an inset for a display and report its pixel budget.
    Advise(AdviseArgs),
    /// Simulate one trial and print its fixation log as CSV.
    Simulate(SimulateArgs),
    /// Run the full condition grid and write the results CSV.
    Run(RunArgs),
    /// Fit gaze kinematics to the reference times and write a parameter file.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Args)]
struct AdviseArgs {
    #[arg(long, default_value_t = DisplaySpec::FLIGHT_HELMET.hfov_deg)]
    hfov: f64,
    #[arg(long, default_value_t = DisplaySpec::FLIGHT_HELMET.vfov_deg)]
    vfov: f64,
    #[arg(long, default_value_t = DisplaySpec::FLIGHT_HELMET.h_px)]
    hpx: u32,
    #[arg(long, default_value_t = DisplaySpec::FLIGHT_HELMET.v_px)]
    vpx: u32,
    #[arg(long, default_value_t = 42)]
    periphery_hpx: u32,
    #[arg(long, default_value_t = 28)]
    periphery_vpx: u32,
    /// Blend band on each inset edge, degrees.
    #[arg(long, default_value_t = geometry::DEFAULT_BLEND_BAND_DEG)]
    band: f64,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Trial index within the seeded stream.
    #[arg(long, default_value_t = 0)]
    trial: u64,
    /// Force a target-absent trial.
    #[arg(long)]
    absent: bool,
    /// Inset as HxV degrees, or "undegraded".
    #[arg(long, default_value = "40x40")]
    inset: String,
    /// Print trial and result as JSON instead of the CSV log.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Exit 1 unless the results reproduce the reference pattern.
    #[arg(long)]
    check: bool,
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[arg(long)]
    trials: Option<usize>,
}

enum Failure {
    Pattern,
    Config(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Pattern => 1,
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

/// Flag, then file, then `PERILOD_SEED`, then the built-in default.
fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> Result<u64, Failure> {
    if let Some(s) = flag.or(file) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(DEFAULT_MASTER_SEED),
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let (mut config, file_seed) = match &cli.config {
        None => (ExperimentConfig::default(), None),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            let raw: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            let file_seed = raw.get("master_seed").and_then(|v| v.as_u64());
            let config = ExperimentConfig::from_json(&text)
                .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            (config, file_seed)
        }
    };
    config.master_seed = resolve_seed(cli.seed, file_seed)?;
    Ok(config)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| runtime(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn parse_inset(s: &str, config: &ExperimentConfig) -> Result<Option<InsetSpec>, Failure> {
    if s.eq_ignore_ascii_case("undegraded") || s.eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    let bad = || Failure::Config(format!("--inset expects HxV degrees or \"undegraded\", got {s:?}"));
    let (h, v) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let h: f64 = h.trim().parse().map_err(|_| bad())?;
    let v: f64 = v.trim().parse().map_err(|_| bad())?;
    let inset = config.inset(h, v);
    inset
        .validate_for(&config.display)
        .map_err(|e| Failure::Config(e.to_string()))?;
    Ok(Some(inset))
}

fn pct(x: f64) -> String {
    format!("{:.2}%", x * 100.0)
}

fn report_inset(
    out: &mut dyn Write,
    display: &DisplaySpec,
    inset: &InsetSpec,
) -> Result<(), Failure> {
    let fraction = geometry::inset_area_fraction(display, inset).map_err(runtime)?;
    let degraded = geometry::degraded_area_fraction(display, inset).map_err(runtime)?;
    let b = geometry::pixel_budget(display, inset).map_err(runtime)?;
    writeln!(out, "  inset area fraction: {}", pct(fraction)).map_err(runtime)?;
    writeln!(out, "  degraded area fraction: {}", pct(degraded)).map_err(runtime)?;
    writeln!(
        out,
        "  pixel budget: {} inset + {} periphery = {} of {} full ({} saved)",
        b.inset_hi_px,
        b.periphery_lo_px,
        b.composite_px,
        b.full_hi_px,
        pct(b.savings_fraction)
    )
    .map_err(runtime)?;
    Ok(())
}

fn advise(cli: &Cli, a: &AdviseArgs) -> Result<(), Failure> {
    let display =
        DisplaySpec::new(a.hfov, a.vfov, a.hpx, a.vpx).map_err(|e| Failure::Config(e.to_string()))?;
    let base = InsetSpec::new(1.0, 1.0)
        .with_periphery(a.periphery_hpx, a.periphery_vpx)
        .with_blend_band(a.band);
    base.validate().map_err(|e| Failure::Config(e.to_string()))?;

    let mut out = output(cli.out.as_deref())?;
    let hres = geometry::angular_resolution(&display, Axis::Horizontal).map_err(runtime)?;
    let vres = geometry::angular_resolution(&display, Axis::Vertical).map_err(runtime)?;
    let pres = geometry::periphery_resolution(&display, &base, Axis::Horizontal).map_err(runtime)?;
    let w = |out: &mut dyn Write, s: String| writeln!(out, "{s}").map_err(runtime);
    w(&mut out, format!(
        "display: {} x {} deg, {} x {} px",
        display.hfov_deg, display.vfov_deg, display.h_px, display.v_px
    ))?;
    w(&mut out, format!("resolution: {hres:.2} arcmin/px horizontal, {vres:.2} arcmin/px vertical"))?;
    w(&mut out, format!(
        "periphery: {} x {} px, {pres:.2} arcmin/px horizontal",
        a.periphery_hpx, a.periphery_vpx
    ))?;

    if display.hfov_deg < RULE_INSET_DEG || display.vfov_deg < RULE_INSET_DEG {
        eprintln!(
            "warning: the display is narrower than {RULE_INSET_DEG} deg on at least one axis; \
             the full display must stay high-detail"
        );
        let full = InsetSpec {
            h_extent_deg: display.hfov_deg,
            v_extent_deg: display.vfov_deg,
            ..base
        };
        w(&mut out, "recommended inset: full display".into())?;
        report_inset(&mut out, &display, &full)?;
        return out.flush().map_err(runtime);
    }

    let rule = InsetSpec {
        h_extent_deg: RULE_INSET_DEG,
        v_extent_deg: RULE_INSET_DEG,
        ..base
    };
    w(&mut out, format!("minimum high-detail inset: {RULE_INSET_DEG} x {RULE_INSET_DEG} deg"))?;
    report_inset(&mut out, &display, &rule)?;

    let with_band = RULE_INSET_DEG + 2.0 * a.band;
    let rec = InsetSpec {
        h_extent_deg: with_band.min(display.hfov_deg),
        v_extent_deg: with_band.min(display.vfov_deg),
        ..base
    };
    w(&mut out, format!(
        "recommended inset with {} deg blend band: {} x {} deg",
        a.band, rec.h_extent_deg, rec.v_extent_deg
    ))?;
    report_inset(&mut out, &display, &rec)?;
    out.flush().map_err(runtime)
}

#[derive(Serialize)]
struct SimulationDump<'a> {
    trial: &'a simulator::Trial,
    result: &'a simulator::TrialResult,
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> Result<(), Failure> {
    let config = load_config(cli)?;
    let inset = parse_inset(&a.inset, &config)?;
    let present = !a.absent && config.target_present(a.trial);
    let trial = generate_trial(&config.protocol, present, trial_seed(config.master_seed, a.trial))
        .map_err(runtime)?;
    let result = simulate_trial(&trial, &config.display, inset.as_ref(), &config.params, &config.protocol)
        .map_err(runtime)?;

    let mut out = output(cli.out.as_deref())?;
    if a.json {
        serde_json::to_writer_pretty(&mut out, &SimulationDump { trial: &trial, result: &result })
            .map_err(runtime)?;
        writeln!(out).map_err(runtime)?;
    } else {
        simulator::write_fixation_log(&mut out, [(a.trial, &result)]).map_err(runtime)?;
    }
    out.flush().map_err(runtime)?;
    eprintln!(
        "trial {} ({}): {} fixations, {:.3} s, {}",
        a.trial,
        if present { "target present" } else { "target absent" },
        result.fixations.len(),
        result.search_time_s,
        if result.correct { "correct" } else { "slip" }
    );
    Ok(())
}

fn run(cli: &Cli, a: &RunArgs) -> Result<(), Failure> {
    let mut config = load_config(cli)?;
    if let Some(n) = a.trials {
        config.trials_per_condition = n;
        config.validate().map_err(|e| Failure::Config(e.to_string()))?;
    }
    let stats = harness::run_experiment(&config).map_err(runtime)?;
    let mut out = output(cli.out.as_deref())?;
    harness::write_results_csv(&mut out, &stats).map_err(runtime)?;
    out.flush().map_err(runtime)?;

    if cli.verbose > 0 {
        for s in &stats {
            eprintln!(
                "{:>12}: {:.3} s (sd {:.3}, n {}, accuracy {:.3})",
                s.condition.to_string(),
                s.mean_time_present_s,
                s.sd_time_s,
                s.n,
                s.accuracy_present
            );
        }
    }
    if a.check {
        let report = harness::check_pattern(&stats, &ReferenceTable::MEASURED).map_err(runtime)?;
        let mark = |ok: bool| if ok { "pass" } else { "FAIL" };
        eprintln!(
            "horizontal 10 deg slower than 30/40 deg: {} {:?}",
            mark(report.horizontal_effect),
            report.horizontal_marginals_s
        );
        eprintln!(
            "vertical 10 deg slower than 30/40 deg: {} {:?}",
            mark(report.vertical_effect),
            report.vertical_marginals_s
        );
        eprintln!(
            "40x40 matches undegraded: {} ({:.1}% apart)",
            mark(report.baseline_match),
            report.baseline_rel_diff * 100.0
        );
        eprintln!("rank correlation with reference: {:.3}", report.rank_correlation);
        if !report.passed() {
            return Err(Failure::Pattern);
        }
    }
    Ok(())
}

fn calibrate(cli: &Cli, a: &CalibrateArgs) -> Result<(), Failure> {
    let mut config = load_config(cli)?;
    if let Some(n) = a.trials {
        config.trials_per_condition = n;
        config.validate().map_err(|e| Failure::Config(e.to_string()))?;
    }
    let cal = harness::calibrate(&config, &ReferenceTable::MEASURED).map_err(runtime)?;
    let text = cal.param_file(&config).to_json().map_err(runtime)?;
    let mut out = output(cli.out.as_deref())?;
    out.write_all(text.as_bytes()).map_err(runtime)?;
    out.flush().map_err(runtime)?;
    for f in &cal.fitted {
        eprintln!("{:>12}: simulated {:.3} s, reference {:.3} s", f.condition, f.simulated_s, f.reference_s);
    }
    eprintln!("rms residual {:.4} s after {} evaluations", cal.rms_residual_s, cal.evaluations);
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Advise(a) => advise(cli, a),
        Command::Simulate(a) => simulate(cli, a),
        Command::Run(a) => run(cli, a),
        Command::Calibrate(a) => calibrate(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n.max(1));
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Pattern => eprintln!("pattern check failed"),
                Failure::Config(m) => eprintln!("config error: {m}"),
                Failure::Runtime(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
