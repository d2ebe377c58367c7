//! Batch front end: analyze / prepare / train / synth / copysynth / eval.

use clap::{Parser, Subcommand, ValueEnum};
use excitnet::config::RunConfig;
use excitnet::error::{Error, Result};
use excitnet::features::io::{load_features, save_features, save_stats};
use excitnet::features::{analyze, compute_stats};
use excitnet::io::wav::{read_wav, resample_linear, write_wav};
use excitnet::net::{load_checkpoint, GenMode};
use excitnet::signal::Signal;
use excitnet::vocoder::{
    copy_synthesis, prepare_dataset, synthesize, train_vocoder, MetricsReport,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "excitnet",
    version,
    about = "Neural excitation vocoder toolkit",
    propagate_version = true
)]
struct Cli {
    /// plain-text key = value configuration file
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// overrides the seed from the configuration
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// worker threads for per-utterance parallel stages (0 = all cores)
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SynthMode {
    Argmax,
    Sample,
}

#[derive(Subcommand)]
enum Command {
    /// Extract acoustic features from WAV files into EXNF files
    Analyze {
        /// input 16-bit PCM mono WAV files
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// output EXNF file (single input) or directory
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        /// linearly resample inputs to the configured sample rate
        #[arg(long)]
        resample: bool,
    },
    /// Analyze a corpus: per-utterance EXNF files plus corpus EXNS stats
    Prepare {
        /// input WAV files
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// output directory
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Train a vocoder on a directory of WAV files
    Train {
        /// directory containing training WAVs
        data: PathBuf,
        /// output EXNM checkpoint path
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Generate a waveform from features with a trained checkpoint
    Synth {
        /// EXNM checkpoint
        checkpoint: PathBuf,
        /// EXNF feature file
        features: PathBuf,
        /// output WAV path
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = SynthMode::Argmax)]
        mode: SynthMode,
    },
    /// Analysis-synthesis without the neural model
    Copysynth {
        /// input WAV
        input: PathBuf,
        /// output WAV path
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        /// pass the excitation through 8-bit mu-law quantization
        #[arg(long)]
        quantize: bool,
    },
    /// Objective metrics between a reference and a degraded WAV
    Eval {
        reference: PathBuf,
        degraded: PathBuf,
    },
}

fn file_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::File {
        path: path.display().to_string(),
        msg: e.to_string(),
    }
}

fn load_wav_at_rate(path: &Path, cfg: &RunConfig, resample: bool) -> Result<Signal> {
    let signal = read_wav(path).map_err(|e| file_err(path, e))?;
    if signal.sample_rate == cfg.sample_rate {
        return Ok(signal);
    }
    if resample {
        Ok(resample_linear(&signal, cfg.sample_rate))
    } else {
        Err(file_err(
            path,
            format!(
                "sample rate {} != configured {} (pass --resample to convert)",
                signal.sample_rate, cfg.sample_rate
            ),
        ))
    }
}

fn feature_path(out: &Path, input: &Path, many: bool) -> Result<PathBuf> {
    if !many && out.extension().is_some() {
        return Ok(out.to_path_buf());
    }
    std::fs::create_dir_all(out).map_err(|e| file_err(out, e))?;
    let stem = input
        .file_stem()
        .ok_or_else(|| file_err(input, "no file name"))?;
    Ok(out.join(format!("{}.exnf", stem.to_string_lossy())))
}

fn wav_dir_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut wavs: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| file_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .map(|x| x.eq_ignore_ascii_case("wav"))
                .unwrap_or(false)
        })
        .collect();
    wavs.sort();
    if wavs.is_empty() {
        return Err(file_err(dir, "no .wav files found"));
    }
    Ok(wavs)
}

fn utterance_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    #[cfg(feature = "parallel")]
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::InvalidArg(format!("--jobs: {e}")))?;
    }
    #[cfg(not(feature = "parallel"))]
    if cli.jobs.is_some() {
        eprintln!("note: built without the parallel feature; --jobs ignored");
    }
    println!("# resolved configuration");
    for line in cfg.to_text().lines() {
        println!("# {line}");
    }

    let acfg = cfg.analysis_config();
    match cli.command {
        Command::Analyze {
            inputs,
            out,
            resample,
        } => {
            let many = inputs.len() > 1;
            let results = excitnet::par::map_slice(&inputs, |path| {
                let signal = load_wav_at_rate(path, &cfg, resample)?;
                analyze(&signal, &acfg).map_err(|e| file_err(path, e))
            });
            for (path, seq) in inputs.iter().zip(results) {
                let seq = seq?;
                let dest = feature_path(&out, path, many)?;
                save_features(&dest, &seq)?;
                println!("{} -> {} ({} frames)", path.display(), dest.display(), seq.n_frames());
            }
        }
        Command::Prepare { inputs, out } => {
            std::fs::create_dir_all(&out).map_err(|e| file_err(&out, e))?;
            let results = excitnet::par::map_slice(&inputs, |path| {
                let signal = load_wav_at_rate(path, &cfg, false)?;
                analyze(&signal, &acfg).map_err(|e| file_err(path, e))
            });
            let mut sequences = Vec::with_capacity(inputs.len());
            for (path, seq) in inputs.iter().zip(results) {
                let seq = seq?;
                let dest = feature_path(&out, path, true)?;
                save_features(&dest, &seq)?;
                println!("{} -> {}", path.display(), dest.display());
                sequences.push(seq);
            }
            let stats = compute_stats(&sequences)?;
            let stats_path = out.join("stats.exns");
            save_stats(&stats_path, &stats)?;
            println!("stats -> {}", stats_path.display());
        }
        Command::Train { data, out } => {
            let wavs = wav_dir_entries(&data)?;
            let utterances: Vec<(String, Signal)> = wavs
                .iter()
                .map(|p| Ok((utterance_id(p), load_wav_at_rate(p, &cfg, false)?)))
                .collect::<Result<_>>()?;
            println!("training on {} utterances ({})", utterances.len(), cfg.kind);
            let dataset = prepare_dataset(&utterances, cfg.kind, &acfg)?;
            let net = cfg.net_config();
            let train = cfg.train_config(Some(out.clone()));
            let ckpt = train_vocoder(&dataset, &net, &train, |step, loss| {
                println!("step {step} loss {loss:.6}");
            })?;
            println!("checkpoint -> {} (step {})", out.display(), ckpt.step);
        }
        Command::Synth {
            checkpoint,
            features,
            out,
            mode,
        } => {
            let ckpt = load_checkpoint(&checkpoint).map_err(|e| file_err(&checkpoint, e))?;
            let seq = load_features(&features).map_err(|e| file_err(&features, e))?;
            let gen_mode = match mode {
                SynthMode::Argmax => GenMode::Argmax,
                SynthMode::Sample => GenMode::Sample { seed: cfg.seed },
            };
            let signal = synthesize(&ckpt, &seq, cfg.kind, gen_mode)?;
            write_wav(&out, &signal)?;
            println!("{} -> {} ({} samples)", features.display(), out.display(), signal.len());
        }
        Command::Copysynth {
            input,
            out,
            quantize,
        } => {
            let signal = load_wav_at_rate(&input, &cfg, false)?;
            let rec = copy_synthesis(&signal, &acfg, quantize)?;
            write_wav(&out, &rec)?;
            println!("{} -> {} (quantize={quantize})", input.display(), out.display());
        }
        Command::Eval {
            reference,
            degraded,
        } => {
            let r = read_wav(&reference).map_err(|e| file_err(&reference, e))?;
            let d = read_wav(&degraded).map_err(|e| file_err(&degraded, e))?;
            let mut report = MetricsReport::default();
            report.push_pair(&utterance_id(&degraded), &r, &d)?;
            print!("{}", report.to_tsv());
            print!("{}", report.summary());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
