use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fsolink::harness::{
    preset, preset_names, run_sweep_with_workers, write_csv, ChannelPreset, ChannelSpec, ExperimentSpec,
    ReceiverEntry, ReceiverState, RunManifest, SweepResult, WarmupAccounting,
};
use fsolink::signal::NbModel;
use fsolink::validate::fast_checks;

#[derive(Parser, Debug)]
#[command(name = "fsolink", version, about = "Photon-counting FSO link simulator")]
struct Cli {
    /// Worker threads for the simulation pool.
    #[arg(long, global = true, env = "FSOLINK_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte-Carlo BEP sweep.
    Sweep(SweepArgs),
    /// Genie-bound table by quadrature.
    Genie(ExperimentArgs),
    /// Quick self-checks against closed forms and exhaustive searches.
    Validate,
    /// List the bundled presets.
    Presets,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// Bundled experiment name.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// JSON experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Channel preset (static, weak, strong, weak_no_pointing, strong_no_pointing).
    #[arg(long)]
    channel: Option<String>,
    /// Background model, `const:v` or `uniform:lo:hi`.
    #[arg(long)]
    nb_model: Option<String>,
    /// SNR grid in dB: `a,b,c` or `start:stop:step`.
    #[arg(long)]
    snr: Option<String>,
    /// Output directory for the CSV table and run manifest; stdout if absent.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    #[arg(long)]
    seed: Option<u64>,
    /// Memory lengths applied to every receiver, e.g. `2,32`.
    #[arg(long)]
    levels: Option<String>,
    /// Receivers as `kind[@engine]`, comma separated, e.g. `glrt_seq,gmlsd_seq@msd`.
    #[arg(long)]
    receivers: Option<String>,
    /// Background level assumed by receivers that need one.
    #[arg(long)]
    assumed_nb: Option<f64>,
    /// Coherence length in slots.
    #[arg(long)]
    l_c: Option<usize>,
    #[arg(long)]
    min_errors: Option<u64>,
    #[arg(long)]
    max_slots: Option<u64>,
    /// Restart receivers at every coherence block.
    #[arg(long)]
    per_block: bool,
    /// Count provisional warm-up decisions and the first block.
    #[arg(long)]
    include_warmup: bool,
    /// Skip the genie-bound rows.
    #[arg(long)]
    no_genie: bool,
    /// Exit successfully even if some points hit the slot budget.
    #[arg(long)]
    allow_censored: bool,
}

fn parse_list<T: std::str::FromStr>(flag: &str, text: &str) -> Result<Vec<T>, String> {
    text.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|_| format!("--{flag}: cannot parse `{}`", s.trim())))
        .collect()
}

fn parse_snr(text: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 1 {
        return parse_list("snr", text);
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("--snr: cannot parse `{p}`")))
        .collect::<Result<_, _>>()?;
    let [start, stop, step] = nums[..] else {
        return Err("--snr: range form is start:stop:step".into());
    };
    if !(step > 0.0) || stop < start {
        return Err("--snr: range needs step > 0 and stop >= start".into());
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

fn base_spec(args: &ExperimentArgs) -> Result<ExperimentSpec, String> {
    let mut spec = match (&args.preset, &args.config) {
        (Some(name), _) => preset(name).map_err(|e| e.to_string())?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            ExperimentSpec::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        (None, None) => {
            let (Some(_), Some(_)) = (&args.nb_model, &args.snr) else {
                return Err("give --preset, --config, or at least --nb-model and --snr".into());
            };
            ExperimentSpec::new(ChannelSpec::Preset(ChannelPreset::Weak), NbModel::Constant(39.0), Vec::new())
        }
    };
    if let Some(c) = &args.channel {
        spec.channel = ChannelSpec::Preset(c.parse().map_err(|e: fsolink::Error| e.to_string())?);
    }
    if let Some(m) = &args.nb_model {
        spec.nb_model = m.parse().map_err(|e: fsolink::Error| e.to_string())?;
    }
    if let Some(s) = &args.snr {
        spec.snr_db = parse_snr(s)?;
    }
    Ok(spec)
}

fn sweep_spec(args: &SweepArgs) -> Result<ExperimentSpec, String> {
    let mut spec = base_spec(&args.experiment)?;
    if let Some(list) = &args.receivers {
        spec.receivers = parse_list::<ReceiverEntry>("receivers", list)?;
    }
    if let Some(list) = &args.levels {
        let levels: Vec<usize> = parse_list("levels", list)?;
        for entry in &mut spec.receivers {
            entry.levels = levels.clone();
        }
        spec.levels = levels;
    }
    if let Some(nb) = args.assumed_nb {
        for entry in &mut spec.receivers {
            entry.assumed_nb = Some(nb);
        }
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(l_c) = args.l_c {
        spec.l_c = l_c;
    }
    if let Some(n) = args.min_errors {
        spec.min_errors = n;
    }
    if let Some(n) = args.max_slots {
        spec.max_slots = n;
    }
    if args.per_block {
        spec.receiver_state = ReceiverState::PerBlock;
    }
    if args.include_warmup {
        spec.warmup = WarmupAccounting::Include;
    }
    if args.no_genie {
        spec.genie = false;
    }
    spec.validate().map_err(|e| e.to_string())?;
    spec.receiver_configs().map_err(|e| e.to_string())?;
    Ok(spec)
}

fn workers(cli: Option<usize>) -> usize {
    cli.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn emit(spec: &ExperimentSpec, result: &SweepResult, out: Option<&Path>) -> Result<(), String> {
    match out {
        None => write_csv(&result.points, io::stdout().lock()).map_err(|e| e.to_string()),
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
            let csv_path = dir.join(format!("{}.csv", spec.name));
            let file = fs::File::create(&csv_path).map_err(|e| format!("{}: {e}", csv_path.display()))?;
            write_csv(&result.points, io::BufWriter::new(file)).map_err(|e| e.to_string())?;
            let manifest_path = dir.join(format!("{}.manifest.json", spec.name));
            fs::write(&manifest_path, RunManifest::new(spec, result).to_json())
                .map_err(|e| format!("{}: {e}", manifest_path.display()))?;
            eprintln!("wrote {} and {}", csv_path.display(), manifest_path.display());
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    let workers = workers(cli.workers);
    match cli.command {
        Command::Sweep(args) => {
            let spec = sweep_spec(&args)?;
            let result = run_sweep_with_workers(&spec, workers).map_err(|e| e.to_string())?;
            emit(&spec, &result, args.experiment.out.as_deref())?;
            for f in &result.failures {
                eprintln!("failed: {} L={} at {} dB: {}", f.receiver, f.l, f.snr_db, f.message);
            }
            for c in &result.censored {
                eprintln!("censored: {} L={} at {} dB ({} errors in {} slots)", c.receiver, c.l, c.snr_db, c.errors, c.slots);
            }
            let censored = !result.censored.is_empty() && !args.allow_censored;
            Ok(if censored || !result.failures.is_empty() { ExitCode::FAILURE } else { ExitCode::SUCCESS })
        }
        Command::Genie(args) => {
            let mut spec = base_spec(&args)?;
            spec.receivers.clear();
            spec.genie = true;
            spec.validate().map_err(|e| e.to_string())?;
            let result = run_sweep_with_workers(&spec, workers).map_err(|e| e.to_string())?;
            emit(&spec, &result, args.out.as_deref())?;
            for f in &result.failures {
                eprintln!("failed at {} dB: {}", f.snr_db, f.message);
            }
            Ok(if result.failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Validate => {
            let checks = fast_checks();
            let mut stdout = io::stdout().lock();
            for c in &checks {
                let mark = if c.passed { "PASS" } else { "FAIL" };
                writeln!(stdout, "{mark}  {:<44} {}", c.name, c.detail).map_err(|e| e.to_string())?;
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            writeln!(stdout, "{} checks, {failed} failed", checks.len()).map_err(|e| e.to_string())?;
            Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Presets => {
            for name in preset_names() {
                let spec = preset(name).map_err(|e| e.to_string())?;
                println!("{name:<8} {}", spec.description.unwrap_or_default());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
