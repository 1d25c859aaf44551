use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spkseg::eval::{benchmark, ChangePointSet, Segmenter};
use spkseg::pipeline::{run, Method, MethodSegmenter};
use spkseg::synth::{envelope_seed, SpeakerSpec, SynthConfig, DEFAULT_F0_HZ};
use spkseg::{
    evaluate, load_wav, pitch_track, synthesize, write_wav, Error, PitchMethod, RunConfig,
};

#[derive(Parser)]
#[command(
    name = "spkseg",
    version,
    about = "Speaker change detection with BIC and pitch-based segmentation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the pitch track of a WAV file as TSV.
    Pitch {
        audio: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Detect speaker change points.
    Segment {
        audio: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Score a hypothesis change-point file against a reference.
    Evaluate {
        reference: PathBuf,
        hypothesis: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run several methods on one file and compare accuracy and wall time.
    Bench {
        audio: PathBuf,
        reference: PathBuf,
        /// Comma-separated methods; the first is the speedup baseline.
        #[arg(long, value_delimiter = ',', default_value = "bic-grow,pitch")]
        methods: Vec<CliMethod>,
        #[command(flatten)]
        common: Common,
    },
    /// Generate a synthetic multi-speaker WAV and its ground-truth boundaries.
    Synth {
        #[command(flatten)]
        synth: SynthArgs,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum CliMethod {
    Pitch,
    BicGrow,
    BicFixed,
}

impl From<CliMethod> for Method {
    fn from(m: CliMethod) -> Self {
        match m {
            CliMethod::Pitch => Method::Pitch,
            CliMethod::BicGrow => Method::BicGrow,
            CliMethod::BicFixed => Method::BicFixed,
        }
    }
}

#[derive(Args, Default)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, value_enum)]
    method: Option<CliMethod>,
    /// Matching tolerance in seconds.
    #[arg(long, value_name = "S")]
    tolerance: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Primary output file (stdout when omitted).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Print a JSON report on stdout.
    #[arg(long)]
    json: bool,
    /// Print the resolved configuration as JSON and exit.
    #[arg(long)]
    dry_run: bool,
    #[arg(long, value_name = "NAME")]
    pitch_method: Option<PitchMethod>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, value_name = "C")]
    threshold_coef: Option<f64>,
    #[arg(long, value_name = "S")]
    verify_window: Option<f64>,
}

#[derive(Args)]
struct SynthArgs {
    /// Number of speakers (ignored when --f0 is given).
    #[arg(long, default_value_t = 2)]
    speakers: usize,
    /// Per-speaker duration in seconds; one value applies to all.
    #[arg(long, value_delimiter = ',', default_value = "5.0")]
    durations: Vec<f64>,
    /// Per-speaker f0 in Hz.
    #[arg(long, value_delimiter = ',')]
    f0: Vec<f64>,
    /// Per-speaker envelope seeds; derived from --seed when omitted.
    #[arg(long, value_delimiter = ',')]
    envelope_seeds: Vec<u64>,
    /// Standard deviation of the added white noise.
    #[arg(long, default_value_t = 0.01)]
    noise: f64,
    #[arg(long, default_value_t = 8000)]
    sample_rate: u32,
    /// Ground-truth file (defaults to the WAV path with a .txt extension).
    #[arg(long, value_name = "PATH")]
    truth: Option<PathBuf>,
}

fn resolve(common: &Common) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &common.config {
        cfg.apply_file(path)?;
    }
    for assignment in &common.set {
        cfg.apply_override(assignment)?;
    }
    if let Some(m) = common.method {
        cfg.method = m.into();
    }
    if let Some(t) = common.tolerance {
        cfg.tolerance_s = t;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.out = Some(o.clone());
    }
    if let Some(p) = common.pitch_method {
        cfg.seg.pitch.method = p;
    }
    if let Some(l) = common.lambda {
        cfg.seg.lambda = l;
        cfg.bic.lambda = l;
    }
    if let Some(g) = common.gamma {
        cfg.seg.gamma = g;
    }
    if let Some(c) = common.threshold_coef {
        cfg.seg.threshold_coef = c;
    }
    if let Some(w) = common.verify_window {
        cfg.seg.verify_window_s = w;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_out(path: Option<&Path>, content: &str) -> Result<(), Error> {
    match path {
        Some(p) => fs::write(p, content).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::Io {
                    path: PathBuf::from("<stdout>"),
                    source: e,
                })
        }
    }
}

fn read_points(path: &Path) -> Result<ChangePointSet, Error> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound {
            path: path.to_path_buf(),
        },
        _ => Error::Io {
            path: path.to_path_buf(),
            source: e,
        },
    })?;
    ChangePointSet::parse(&text)
        .map_err(|e| Error::InvalidChangePoints(format!("{}: {e}", path.display())))
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::Pitch { audio, common } => {
            let cfg = resolve(&common)?;
            if common.dry_run {
                return write_out(None, &cfg.to_json());
            }
            let buffer = load_wav(&audio)?;
            let track = pitch_track(&buffer, &cfg.seg.pitch)?;
            let body = if common.json {
                to_json(&track)
            } else {
                track.to_tsv()
            };
            write_out(cfg.out.as_deref(), &body)
        }
        Command::Segment { audio, common } => {
            let cfg = resolve(&common)?;
            if common.dry_run {
                return write_out(None, &cfg.to_json());
            }
            let buffer = load_wav(&audio)?;
            let result = run(&buffer, cfg.method, &cfg.seg, &cfg.bic)?;
            eprintln!(
                "{}: {} change points in {:.4} s",
                cfg.method,
                result.change_points.len(),
                result.wall_time_s
            );
            if let Some(out) = &cfg.out {
                write_out(Some(out), &result.to_text())?;
            }
            if common.json {
                write_out(None, &result.to_json())
            } else if cfg.out.is_none() {
                write_out(None, &result.to_text())
            } else {
                Ok(())
            }
        }
        Command::Evaluate {
            reference,
            hypothesis,
            common,
        } => {
            let cfg = resolve(&common)?;
            if common.dry_run {
                return write_out(None, &cfg.to_json());
            }
            let report = evaluate(
                &read_points(&reference)?,
                &read_points(&hypothesis)?,
                cfg.tolerance_s,
            );
            if let Some(out) = &cfg.out {
                write_out(Some(out), &to_json(&report))?;
            }
            if common.json {
                write_out(None, &to_json(&report))
            } else {
                write_out(None, &report.to_table())
            }
        }
        Command::Bench {
            audio,
            reference,
            methods,
            common,
        } => {
            let cfg = resolve(&common)?;
            if common.dry_run {
                return write_out(None, &cfg.to_json());
            }
            let reference = read_points(&reference)?;
            let buffer = load_wav(&audio)?;
            let segmenters: Vec<MethodSegmenter> = methods
                .iter()
                .map(|&m| MethodSegmenter {
                    method: m.into(),
                    seg: cfg.seg,
                    bic: cfg.bic,
                })
                .collect();
            let refs: Vec<&dyn Segmenter> =
                segmenters.iter().map(|s| s as &dyn Segmenter).collect();
            let table = benchmark(&buffer, &reference, &refs, cfg.tolerance_s, None)?;
            eprint!("{}", table.to_table());
            if common.json {
                if let Some(out) = &cfg.out {
                    write_out(Some(out), &table.to_csv())?;
                }
                write_out(None, &to_json(&table))
            } else {
                write_out(cfg.out.as_deref(), &table.to_csv())
            }
        }
        Command::Synth { synth, common } => {
            let cfg = resolve(&common)?;
            let out = cfg.out.clone().ok_or_else(|| {
                Error::InvalidConfig("synth needs --out PATH for the WAV file".into())
            })?;
            let n = if synth.f0.is_empty() {
                synth.speakers
            } else {
                synth.f0.len()
            };
            let pick = |v: &[f64], i: usize, default: f64| -> f64 {
                match v.len() {
                    0 => default,
                    1 => v[0],
                    _ => v.get(i).copied().unwrap_or(default),
                }
            };
            if synth.durations.len() > 1 && synth.durations.len() != n {
                return Err(Error::InvalidConfig(format!(
                    "{} durations given for {n} speakers",
                    synth.durations.len()
                )));
            }
            if !synth.envelope_seeds.is_empty() && synth.envelope_seeds.len() != n {
                return Err(Error::InvalidConfig(format!(
                    "{} envelope seeds given for {n} speakers",
                    synth.envelope_seeds.len()
                )));
            }
            let speakers = (0..n)
                .map(|i| SpeakerSpec {
                    f0_hz: synth
                        .f0
                        .get(i)
                        .copied()
                        .unwrap_or(DEFAULT_F0_HZ[i % DEFAULT_F0_HZ.len()]),
                    duration_s: pick(&synth.durations, i, 5.0),
                    envelope_seed: synth
                        .envelope_seeds
                        .get(i)
                        .copied()
                        .unwrap_or_else(|| envelope_seed(cfg.seed, i)),
                })
                .collect();
            let scfg = SynthConfig {
                speakers,
                sample_rate_hz: synth.sample_rate,
                noise: synth.noise,
                seed: cfg.seed,
            };
            if common.dry_run {
                return write_out(None, &to_json(&scfg));
            }
            let generated = synthesize(&scfg)?;
            write_wav(&out, &generated.audio)?;
            let truth = synth.truth.unwrap_or_else(|| out.with_extension("txt"));
            write_out(Some(&truth), &generated.boundaries.to_text())?;
            eprintln!(
                "wrote {} ({:.2} s) and {}",
                out.display(),
                generated.audio.duration_seconds(),
                truth.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.class().exit_code() as u8)
        }
    }
}
