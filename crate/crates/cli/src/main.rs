use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use threshold_survival::phenology::write_event_table;
use threshold_survival::*;

const EXIT_DIVERGENT: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;
const EXIT_NO_INPUT: u8 = 66;
const EXIT_IO: u8 = 74;
const THREADS_VAR: &str = "THRESHOLD_SURVIVAL_THREADS";

#[derive(Parser)]
#[command(name = "threshold-survival", version, about = "Fit, simulate and check threshold survival phenology models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the posterior of a model given temperatures and events.
    Fit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        temps: PathBuf,
        #[arg(long)]
        events: PathBuf,
        /// Output path for the fit document, `-` for stdout.
        #[arg(long)]
        out: String,
        /// Overrides `hmc.seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Simulate an event table from fixed parameters.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        temps: PathBuf,
        /// JSON object with t_min, t_opt, t_max and psi0/sigma or gamma.
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: String,
        #[arg(long, default_value_t = 155)]
        start_day: u32,
        /// Start days are drawn uniformly within this many days of `start_day`.
        #[arg(long, default_value_t = 2)]
        start_jitter: u32,
    },
    /// Retrodictive histogram check of a fit against the observed events.
    Check {
        #[arg(long)]
        fit: PathBuf,
        #[arg(long)]
        temps: PathBuf,
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        out: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Tabulate a forcing curve.
    Forcing {
        #[arg(long, value_parser = parse_family)]
        family: ForcingFamily,
        #[arg(long, allow_hyphen_values = true)]
        tmin: f64,
        #[arg(long, allow_hyphen_values = true)]
        topt: f64,
        #[arg(long, allow_hyphen_values = true)]
        tmax: f64,
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        /// `lo:hi:step`, both ends inclusive.
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[arg(long)]
        out: String,
    },
    /// Run the gradient, conservation and invariance checks.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    model: ModelKind,
    #[serde(default = "default_family")]
    forcing_family: ForcingFamily,
    #[serde(default = "default_delta")]
    delta: f64,
    #[serde(default)]
    priors: PriorConfig,
    #[serde(default)]
    hmc: HmcConfig,
    #[serde(default)]
    likelihood: LikelihoodForm,
}

fn default_family() -> ForcingFamily {
    ForcingFamily::SmoothBeta
}

fn default_delta() -> f64 {
    1.0
}

impl RunConfig {
    fn template(&self) -> ModelTemplate {
        ModelTemplate::new(self.model, self.forcing_family, self.delta)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsFile {
    t_min: f64,
    t_opt: f64,
    t_max: f64,
    psi0: Option<f64>,
    sigma: Option<f64>,
    gamma: Option<f64>,
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Self { code, error: error.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::new(EXIT_DATA, e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn parse_family(s: &str) -> std::result::Result<ForcingFamily, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown forcing family `{s}` (expected wang-engel or smooth-beta)"))
}

fn open_input(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| {
        let code = if e.kind() == io::ErrorKind::NotFound { EXIT_NO_INPUT } else { EXIT_IO };
        Failure::new(code, anyhow!("{}: {e}", path.display()))
    })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    serde_json::from_reader(open_input(path)?)
        .map_err(|e| Failure::new(EXIT_DATA, anyhow!("{}: {e}", path.display())))
}

fn load_data(temps: &Path, events: &Path) -> CliResult<ObservationSet> {
    let series = parse_temperature_table(open_input(temps)?)?;
    let obs = parse_event_table(open_input(events)?)?;
    Ok(ObservationSet::new(obs, series)?)
}

/// Writes to `target`, where `-` is stdout.
fn write_output(target: &str, body: impl FnOnce(&mut dyn Write) -> CliResult<()>) -> CliResult<()> {
    let io_fail = |e: io::Error| Failure::new(EXIT_IO, anyhow!("{target}: {e}"));
    if target == "-" {
        let stdout = io::stdout();
        let mut lock = stdout.lock();
        body(&mut lock)?;
        lock.flush().map_err(io_fail)
    } else {
        let mut w = BufWriter::new(File::create(target).map_err(io_fail)?);
        body(&mut w)?;
        w.flush().map_err(io_fail)
    }
}

fn write_json(target: &str, value: &impl Serialize) -> CliResult<()> {
    write_output(target, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(|e| Failure::new(EXIT_IO, e))?;
        writeln!(w).map_err(|e| Failure::new(EXIT_IO, e))
    })
}

/// Human-readable output goes to stderr when stdout carries data.
fn report_stream(out: &str) -> Box<dyn Write> {
    if out == "-" {
        Box::new(io::stderr())
    } else {
        Box::new(io::stdout())
    }
}

fn print_diagnostics(w: &mut dyn Write, d: &Diagnostics) -> io::Result<()> {
    writeln!(w, "{:>8} {:>10} {:>9} {:>10} {:>10} {:>10} {:>8} {:>8}", "param", "mean", "sd", "q5", "median", "q95", "rhat", "ess")?;
    for p in &d.parameters {
        let opt = |v: Option<f64>, prec: usize| v.map_or("-".to_string(), |x| format!("{x:.prec$}"));
        writeln!(
            w,
            "{:>8} {:>10.4} {:>9.4} {:>10.4} {:>10.4} {:>10.4} {:>8} {:>8}",
            p.name,
            p.mean,
            p.sd,
            p.q5,
            p.median,
            p.q95,
            opt(p.rhat, 4),
            opt(p.ess_bulk, 0)
        )?;
    }
    writeln!(w, "divergences per chain: {:?}", d.divergences)?;
    if let Some(t) = &d.truncation_mass {
        writeln!(w, "truncation mass: mean {:.3e}, max {:.3e}", t.mean, t.max)?;
    }
    if !d.flagged.is_empty() {
        writeln!(w, "flagged: {}", d.flagged.join(", "))?;
    }
    Ok(())
}

fn run_fit(config: &Path, temps: &Path, events: &Path, out: &str, seed: Option<u64>) -> CliResult<u8> {
    let mut cfg: RunConfig = read_json(config)?;
    if let Some(s) = seed {
        cfg.hmc.seed = s;
    }
    let data = load_data(temps, events)?;
    let settings = FitSettings {
        template: cfg.template(),
        priors: cfg.priors.clone(),
        likelihood: cfg.likelihood,
        hmc: cfg.hmc.clone(),
    };
    let result = fit(&data, &settings)?;
    let echo = serde_json::to_value(&cfg).map_err(|e| Failure::new(EXIT_DATA, e))?;
    write_json(out, &result.to_document(echo))?;
    print_diagnostics(&mut *report_stream(out), &result.diagnostics).map_err(|e| Failure::new(EXIT_IO, e))?;
    Ok(if result.diagnostics.is_clean() { 0 } else { EXIT_DIVERGENT })
}

#[allow(clippy::too_many_arguments)]
fn run_simulate(
    config: &Path,
    temps: &Path,
    params: &Path,
    n: usize,
    seed: u64,
    out: &str,
    start_day: u32,
    start_jitter: u32,
) -> CliResult<u8> {
    let cfg: RunConfig = read_json(config)?;
    let p: ParamsFile = read_json(params)?;
    let block = ParameterBlock::from_temperatures(p.t_min, p.t_opt, p.t_max, p.psi0, p.sigma, p.gamma);
    let series = parse_temperature_table(open_input(temps)?)?;
    if series.is_empty() {
        return Err(Failure::new(EXIT_DATA, anyhow!("{}: no temperature rows", temps.display())));
    }
    let events = phenology::simulate_events(&series, &cfg.template(), &block, n, start_day, start_jitter, seed)?;
    write_output(out, |w| Ok(write_event_table(w, &events)?))?;
    Ok(0)
}

fn run_check(fit_path: &Path, temps: &Path, events: &Path, out: &str, seed: u64) -> CliResult<u8> {
    let doc: FitDocument = read_json(fit_path)?;
    let data = load_data(temps, events)?;
    let ribbon = retrodictive_histograms(&doc.blocks()?, &data, &doc.model.template(), seed, &BinSpec::default())?;
    write_json(out, &ribbon)?;
    Ok(0)
}

fn parse_grid(grid: &str) -> CliResult<Vec<f64>> {
    let bad = || Failure::new(EXIT_USAGE, anyhow!("--grid must be lo:hi:step with step > 0 and lo <= hi, got `{grid}`"));
    let parts: Vec<f64> = grid.split(':').map(|s| s.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
    let [lo, hi, step] = parts[..] else { return Err(bad()) };
    if !(step > 0.0 && lo <= hi && lo.is_finite() && hi.is_finite()) {
        return Err(bad());
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}

fn run_forcing(family: ForcingFamily, params: ForcingParams, grid: &str, out: &str) -> CliResult<u8> {
    let temps = parse_grid(grid)?;
    let curve = ForcingCurve::new(family, &params)?;
    write_output(out, |w| {
        let mut csv = csv::Writer::from_writer(w);
        let fail = |e: csv::Error| Failure::new(EXIT_IO, e);
        csv.write_record(["temp_c", "forcing"]).map_err(fail)?;
        for t in temps {
            csv.write_record([t.to_string(), curve.eval(t).to_string()]).map_err(fail)?;
        }
        csv.flush().map_err(|e| Failure::new(EXIT_IO, e))
    })?;
    Ok(0)
}

fn run_selftest(seed: u64) -> CliResult<u8> {
    let reports = selftest::run_all(seed)?;
    for r in &reports {
        println!(
            "{} {}: worst {:.2e} (tolerance {:.0e})",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.worst,
            r.tolerance
        );
    }
    Ok(if reports.iter().all(|r| r.passed) { 0 } else { 1 })
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Failure::new(EXIT_USAGE, anyhow!("{THREADS_VAR} must be a non-negative integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::new(EXIT_USAGE, e))
}

fn run(cli: Cli) -> CliResult<u8> {
    configure_threads()?;
    match cli.command {
        Command::Fit { config, temps, events, out, seed } => run_fit(&config, &temps, &events, &out, seed),
        Command::Simulate { config, temps, params, n, seed, out, start_day, start_jitter } => {
            run_simulate(&config, &temps, &params, n, seed, &out, start_day, start_jitter)
        }
        Command::Check { fit, temps, events, out, seed } => run_check(&fit, &temps, &events, &out, seed),
        Command::Forcing { family, tmin, topt, tmax, delta, grid, out } => {
            run_forcing(family, ForcingParams::new(tmin, topt, tmax, delta)?, &grid, &out)
        }
        Command::Selftest { seed } => run_selftest(seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
