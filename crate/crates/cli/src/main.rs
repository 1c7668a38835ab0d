mod args;

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use mixfourier::em::EmConfig;
use mixfourier::experiments::{
    compare_em, comparison_csv, phase_summary, phase_transition, separation_sweep, summarize_comparison, trials_csv,
    CompareConfig, CutoffRule, PhaseConfig, ProposedSettings, ThresholdRule,
};
use mixfourier::fourier::{cutoff_search_scaled, synth_fourier};
use mixfourier::pipeline::{estimate, estimate_from_fourier};
use mixfourier::spectral::DEFAULT_RESOLUTION;
use mixfourier::svr::{candidate_grid, sample_threshold};
use mixfourier::{Error, GaussianMixture, PipelineConfig, SampleSet, SvrConfig};

use args::{Cli, Command, CompareArgs, CutoffArgs, EstimateArgs, PhaseArgs};

/// A one-line diagnostic and the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidMixture(_)
            | Error::InvalidDistribution(_)
            | Error::EmptySamples
            | Error::InvalidArgument(_)
            | Error::LengthMismatch { .. }
            | Error::Parse(_)
            | Error::Io { .. } => 1,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type Outcome = Result<(), Failure>;

/// Prints a line, ignoring a closed stdout.
fn say(text: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout(), "{text}");
}

const DEFAULT_T: usize = 8;
const DEFAULT_OMEGA_INIT: f64 = 10.0;

fn seed_or_env(seed: Option<u64>) -> Result<u64, Failure> {
    if let Some(s) = seed {
        return Ok(s);
    }
    match std::env::var("MIXFOURIER_SEED") {
        Ok(text) => text
            .trim()
            .parse()
            .map_err(|_| Failure::config(format!("MIXFOURIER_SEED is not an integer: {text:?}"))),
        Err(_) => Err(Failure::config("a seed is required: pass --seed or set MIXFOURIER_SEED")),
    }
}

fn out_dir(out: Option<PathBuf>) -> Result<PathBuf, Failure> {
    let dir = out.unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| Failure::config(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn write(path: &Path, text: &str) -> Outcome {
    std::fs::write(path, text).map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display())))
}

fn parse_range(text: &str, what: &str) -> Result<(f64, f64), Failure> {
    let bad = || Failure::config(format!("{what} must look like lo:hi, got {text:?}"));
    let (a, b) = text.split_once(':').ok_or_else(bad)?;
    let lo: f64 = a.trim().parse().map_err(|_| bad())?;
    let hi: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Failure::config(format!("{what} range {text:?} is empty")));
    }
    Ok((lo, hi))
}

/// `start:end:step`, both ends included.
fn parse_sweep(text: &str) -> Result<Vec<f64>, Failure> {
    let bad = || Failure::config(format!("separations must look like start:end:step, got {text:?}"));
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let [start, end, step] = parts[..] else {
        return Err(bad());
    };
    if !(start.is_finite() && end.is_finite() && step > 0.0 && start <= end && start > 0.0) {
        return Err(bad());
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, Failure> {
    let values: Vec<T> = text
        .split(',')
        .map(|p| p.trim().parse::<T>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::config(format!("{what} must be a comma-separated list, got {text:?}")))?;
    if values.is_empty() {
        return Err(Failure::config(format!("{what} is empty")));
    }
    Ok(values)
}

enum Omega {
    Auto,
    Fixed(f64),
}

fn parse_omega(text: Option<&str>) -> Result<Omega, Failure> {
    match text {
        None | Some("auto") => Ok(Omega::Auto),
        Some(t) => match t.parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => Ok(Omega::Fixed(v)),
            _ => Err(Failure::config(format!("--omega must be a positive number or auto, got {t:?}"))),
        },
    }
}

fn svr_config(
    vmax: Option<f64>,
    vstep: Option<f64>,
    threshold: f64,
    known_order: Option<usize>,
) -> Result<SvrConfig, Failure> {
    let candidates = candidate_grid(vmax.unwrap_or(2.0), vstep.unwrap_or(0.01))?;
    Ok(SvrConfig::new(candidates, threshold, known_order)?)
}

fn run_estimate(args: EstimateArgs) -> Outcome {
    let args = args.resolve()?;
    let half_count = args.half_count.unwrap_or(4);
    let omega = parse_omega(args.omega.as_deref())?;
    let dir = out_dir(args.out.clone())?;

    let result = match (&args.samples, &args.model) {
        (Some(_), Some(_)) => return Err(Failure::config("give either --samples or --model, not both")),
        (None, None) => return Err(Failure::config("an input is required: --samples or --model")),
        (Some(path), None) => {
            if args.sigma.is_some() {
                return Err(Failure::config("--sigma applies to --model input only"));
            }
            let samples = SampleSet::read_file(path)?;
            let cutoff = match omega {
                Omega::Fixed(v) => v,
                Omega::Auto => cutoff_search_scaled(
                    &samples,
                    args.t.unwrap_or(DEFAULT_T),
                    args.omega_init.unwrap_or(DEFAULT_OMEGA_INIT),
                    args.tau.unwrap_or(1.0),
                )?,
            };
            let threshold = match (args.threshold, args.threshold_c) {
                (Some(_), Some(_)) => return Err(Failure::config("give --threshold or --threshold-c, not both")),
                (Some(t), None) => t,
                (None, Some(c)) => sample_threshold(c, samples.len()),
                (None, None) => 0.0,
            };
            let mut config =
                PipelineConfig::new(cutoff, half_count, svr_config(args.vmax, args.vstep, threshold, args.known_order)?);
            config.music_resolution = args.resolution.unwrap_or(DEFAULT_RESOLUTION);
            estimate(&samples, &config)?
        }
        (None, Some(path)) => {
            if args.threshold_c.is_some() {
                return Err(Failure::config("--threshold-c needs --samples; use --threshold"));
            }
            let model = GaussianMixture::read_json(path)?;
            let cutoff = match omega {
                Omega::Fixed(v) => v,
                // Widest grid step that keeps every mean identifiable, with 5% room.
                Omega::Auto => {
                    let reach = model.means().iter().fold(0.0f64, |m, x| m.max(x.abs()));
                    let step = if reach > 0.0 { PI / (2.0 * reach * 1.05) } else { 1.0 };
                    step * half_count as f64
                }
            };
            let sigma = args.sigma.unwrap_or(0.0);
            let seed = if sigma > 0.0 { seed_or_env(args.seed)? } else { args.seed.unwrap_or(0) };
            let mut config = PipelineConfig::new(
                cutoff,
                half_count,
                svr_config(args.vmax, args.vstep, args.threshold.unwrap_or(0.0), args.known_order)?,
            );
            config.music_resolution = args.resolution.unwrap_or(DEFAULT_RESOLUTION);
            let data = synth_fourier(&model, &config.grid()?, sigma, seed)?;
            estimate_from_fourier(&data, &config)?
        }
    };

    write(&dir.join("result.json"), &(result.to_json() + "\n"))?;
    if let Some(surface) = &result.surface {
        write(&dir.join("surface.csv"), &surface.to_csv())?;
    }
    say(&result.to_json());
    Ok(())
}

fn run_phase(args: PhaseArgs) -> Outcome {
    let args = args.resolve()?;
    let seed = seed_or_env(args.seed)?;
    let known = match args.variance.as_deref() {
        None | Some("known") => true,
        Some("unknown") => false,
        Some(other) => return Err(Failure::config(format!("--variance must be known or unknown, got {other:?}"))),
    };
    let trials = args.trials.unwrap_or(2000);
    if trials == 0 {
        return Err(Failure::config("--trials must be at least 1"));
    }
    let mut config = PhaseConfig::new(args.order.unwrap_or(2), trials, known, seed);
    if let Some(r) = &args.srf {
        config.log_srf = parse_range(r, "--srf")?;
    }
    if let Some(r) = &args.snr {
        config.log_snr = parse_range(r, "--snr")?;
    }
    if let Some(v) = args.vmax {
        config.vmax = v;
    }
    if let Some(v) = args.vstep {
        config.vstep = v;
    }
    if let Some(r) = args.resolution {
        config.music_resolution = r;
    }
    let dir = out_dir(args.out)?;
    let records = phase_transition(&config)?;
    let summary = phase_summary(&config, &records)?;
    write(&dir.join("trials.csv"), &trials_csv(&records))?;
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write(&dir.join("summary.json"), &(json.clone() + "\n"))?;
    say(&json);
    Ok(())
}

fn run_compare(args: CompareArgs) -> Outcome {
    let args = args.resolve()?;
    if args.samples.is_some() {
        return Err(Failure::config(if args.model.is_some() {
            "give either --model or --samples, not both; compare-em samples from --model"
        } else {
            "compare-em simulates its data; use --model instead of --samples"
        }));
    }
    let sweep = args.separations.as_deref().map(parse_sweep).transpose()?;
    if sweep.is_some() && args.model.is_some() {
        return Err(Failure::config("--separations builds its own models; drop --model"));
    }
    let seed = seed_or_env(args.seed)?;
    let model = match &args.model {
        Some(path) => GaussianMixture::read_json(path)?,
        None => GaussianMixture::equal_weights(vec![-0.5, 0.5], 1.0)?,
    };
    let trials = args.trials.unwrap_or(100);
    if trials == 0 {
        return Err(Failure::config("--trials must be at least 1"));
    }
    let default_sizes = if sweep.is_some() { "5000" } else { "1000,10000,100000" };
    let sizes: Vec<usize> = parse_list(args.n.as_deref().unwrap_or(default_sizes), "--n")?;

    let mut proposed = if sweep.is_some() {
        ProposedSettings::separation_sweep()
    } else {
        ProposedSettings {
            known_order: Some(model.order()),
            ..ProposedSettings::known_two_components()
        }
    };
    if let Some(k) = args.half_count {
        proposed.half_count = k;
    }
    if args.unknown_order == Some(true) {
        if args.known_order.is_some() {
            return Err(Failure::config("--known-order conflicts with --unknown-order"));
        }
        proposed.known_order = None;
    } else if let Some(k) = args.known_order {
        proposed.known_order = Some(k);
    }
    proposed.threshold = match (args.threshold, args.threshold_c) {
        (Some(_), Some(_)) => return Err(Failure::config("give --threshold or --threshold-c, not both")),
        (Some(t), None) => ThresholdRule::Fixed(t),
        (None, Some(c)) => ThresholdRule::PerSample(c),
        (None, None) => proposed.threshold,
    };
    if let Some(v) = args.vmax {
        proposed.vmax = v;
    }
    if let Some(v) = args.vstep {
        proposed.vstep = v;
    }
    if let Some(r) = args.resolution {
        proposed.music_resolution = r;
    }
    proposed.cutoff = match parse_omega(args.omega.as_deref())? {
        Omega::Fixed(v) => CutoffRule::Fixed(v),
        Omega::Auto => match proposed.cutoff {
            CutoffRule::Search {
                iterations,
                initial,
                noise_multiplier,
            } => CutoffRule::Search {
                iterations: args.t.unwrap_or(iterations),
                initial: args.omega_init.unwrap_or(initial),
                noise_multiplier: args.tau.unwrap_or(noise_multiplier),
            },
            fixed => fixed,
        },
    };
    let em_orders = match &args.em_orders {
        Some(text) => parse_list(text, "--em-orders")?,
        None if sweep.is_some() => vec![1, 2],
        None => vec![model.order()],
    };
    let defaults = EmConfig::default();
    let config = CompareConfig {
        model: model.clone(),
        sizes,
        trials,
        seed,
        proposed,
        em: EmConfig {
            tol: args.em_tol.unwrap_or(defaults.tol),
            max_iter: args.em_max_iter.unwrap_or(defaults.max_iter),
        },
        em_orders,
    };

    let dir = out_dir(args.out)?;
    let (records, true_order) = match &sweep {
        Some(seps) => (separation_sweep(&config, seps)?, 2),
        None => (compare_em(&config)?, model.order()),
    };
    write(&dir.join("comparison.csv"), &comparison_csv(&records))?;
    let summary = summarize_comparison(&records, true_order);
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write(&dir.join("summary.json"), &(json + "\n"))?;
    say(&format!("{} records written to {}", records.len(), dir.display()));
    Ok(())
}

fn run_cutoff(args: CutoffArgs) -> Outcome {
    let args = args.resolve()?;
    let path = args.samples.ok_or_else(|| Failure::config("--samples is required"))?;
    let t = args.t.unwrap_or(DEFAULT_T);
    if t == 0 {
        return Err(Failure::config("--t must be at least 1"));
    }
    let samples = SampleSet::read_file(&path)?;
    let omega = cutoff_search_scaled(
        &samples,
        t,
        args.omega_init.unwrap_or(DEFAULT_OMEGA_INIT),
        args.tau.unwrap_or(1.0),
    )?;
    say(&format!("{omega:.16e}"));
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(1);
        }
    }
    let outcome = match cli.command {
        Command::Estimate(a) => run_estimate(a),
        Command::PhaseTransition(a) => run_phase(a),
        Command::CompareEm(a) => run_compare(a),
        Command::Cutoff(a) => run_cutoff(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
