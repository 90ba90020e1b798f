use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use eccm::detectors::{DetectorSpec, IdtAmfParams, RankMethod};
use eccm::harness::presets::{self, Figure, Scale};
use eccm::harness::{
    calibrate_thresholds, emit_results, null_trials, pd_sweep_many, result_rows,
    run_classification_experiment, trial_log, write_classification, write_trial_log,
    ClassificationConfig, ExperimentConfig, ThresholdCache,
};
use eccm::{Error, Result};

#[derive(Parser)]
#[command(name = "eccm", version, about = "Monte Carlo radar ECCM detection and classification")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Calibrate detection thresholds on target-free trials.
    Calibrate {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        detector: DetectorArgs,
        /// Write `trial,seed,statistic,r_hat,decision` rows here.
        #[arg(long)]
        trial_log: Option<PathBuf>,
        /// Write the thresholds as JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Detection probability versus SINR.
    PdCurve {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        detector: DetectorArgs,
        /// Calibration trials.
        #[arg(long)]
        calib_trials: Option<usize>,
        /// Output CSV; a JSON sidecar with the config is written next to it.
        #[arg(long, default_value = "pd_curve.csv")]
        out: PathBuf,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
    /// Sparse-recovery detection and hypothesis classification.
    Classify {
        /// Classification config (TOML).
        #[arg(long, conflicts_with = "figure")]
        config: Option<PathBuf>,
        /// Preset figure (8 or 9).
        #[arg(long)]
        figure: Option<u8>,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        calib_trials: Option<usize>,
        /// Output prefix for `.csv`, `.jsonl` and `.json` files.
        #[arg(long, default_value = "classification")]
        out: PathBuf,
    },
    /// Regenerate the data behind one of figures 4 to 9.
    Reproduce {
        #[arg(long, value_parser = clap::value_parser!(u8).range(4..=9))]
        figure: u8,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        calib_trials: Option<usize>,
        /// Output directory.
        #[arg(long, default_value = "results")]
        out: PathBuf,
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
    /// Print a preset configuration as TOML.
    ShowConfig {
        #[arg(long, value_parser = clap::value_parser!(u8).range(4..=9))]
        figure: u8,
        #[arg(long)]
        full_scale: bool,
    },
}

#[derive(Args)]
struct Source {
    /// Experiment config (TOML).
    #[arg(long, conflicts_with = "figure")]
    config: Option<PathBuf>,
    /// Preset figure (4 to 7); defaults to 4.
    #[arg(long)]
    figure: Option<u8>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    pfa: Option<f64>,
    /// Number of trials (calibration trials for `calibrate`).
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Use false-alarm probability 1e-4 and 100/pfa calibration trials.
    #[arg(long)]
    full_scale: bool,
}

impl RunArgs {
    fn scale(&self) -> Scale {
        if self.full_scale {
            Scale::full()
        } else {
            Scale::desk()
        }
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(presets::DEFAULT_SEED)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DetectorKind {
    Mf,
    Scm,
    Idt,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    Known,
    Aic,
    Bic,
    Gic,
    Eig,
}

#[derive(Args)]
struct DetectorArgs {
    /// Evaluate only this detector instead of the config's list.
    #[arg(long, value_enum)]
    detector: Option<DetectorKind>,
    /// Rank selection for `--detector idt`.
    #[arg(long, value_enum, default_value = "bic")]
    rule: Rule,
    /// Jammer rank for `--rule known`.
    #[arg(long, default_value_t = 3)]
    rank: usize,
    #[arg(long, default_value_t = 2.0)]
    gic_rho: f64,
    #[arg(long, default_value_t = 10.0)]
    eig_threshold: f64,
    #[arg(long, default_value_t = 0.0)]
    diagonal_loading: f64,
}

impl DetectorArgs {
    fn spec(&self) -> Option<DetectorSpec> {
        let kind = self.detector?;
        Some(match kind {
            DetectorKind::Mf => DetectorSpec::Mf,
            DetectorKind::Scm => DetectorSpec::ScmAmf,
            DetectorKind::Idt => {
                let rank_method = match self.rule {
                    Rule::Known => RankMethod::Known { rank: self.rank },
                    Rule::Aic => RankMethod::Aic,
                    Rule::Bic => RankMethod::Bic,
                    Rule::Gic => RankMethod::Gic { rho: self.gic_rho },
                    Rule::Eig => RankMethod::Eig {
                        threshold: self.eig_threshold,
                    },
                };
                DetectorSpec::IdtAmf {
                    params: IdtAmfParams {
                        diagonal_loading: self.diagonal_loading,
                        ..IdtAmfParams::new(rank_method)
                    },
                }
            }
        })
    }
}

fn detection_config(source: &Source, run: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match (&source.config, source.figure) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, figure) => match presets::figure(figure.unwrap_or(4), &run.scale(), run.seed())? {
            Figure::Detection(cfg) => cfg,
            Figure::Classification(_) => {
                return Err(Error::InvalidConfig(
                    "figures 8 and 9 are classification presets; use `classify`".into(),
                ))
            }
        },
    };
    if let Some(pfa) = run.pfa {
        cfg.pfa = pfa;
    }
    if let Some(seed) = run.seed {
        cfg.base_seed = seed;
    }
    Ok(cfg)
}

fn thresholds(cfg: &ExperimentConfig, cache_dir: Option<&Path>) -> Result<Vec<f64>> {
    match cache_dir {
        Some(dir) => ThresholdCache::new(dir)?.thresholds(cfg),
        None => calibrate_thresholds(cfg),
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Serialize(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

#[derive(Serialize)]
struct CalibrationOut {
    detector: String,
    spec: DetectorSpec,
    threshold: f64,
}

fn run_calibrate(
    source: &Source,
    run: &RunArgs,
    detector: &DetectorArgs,
    log_path: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    let mut cfg = detection_config(source, run)?;
    if let Some(spec) = detector.spec() {
        cfg.detectors = vec![spec];
    }
    if let Some(n) = run.trials {
        cfg.n_calib_trials = n;
    }
    let trials = null_trials(&cfg)?;
    let mut results = Vec::new();
    for (d, spec) in cfg.detectors.iter().enumerate() {
        let stats: Vec<f64> = trials.iter().map(|t| t.statistics[d]).collect();
        let threshold = eccm::harness::empirical_threshold(&stats, cfg.pfa)?;
        println!("{:<14} {threshold:.6}", spec.id());
        if let Some(path) = log_path {
            let path = if cfg.detectors.len() == 1 {
                path.to_path_buf()
            } else {
                suffixed(path, &spec.id().to_string().to_lowercase())
            };
            write_trial_log(&path, &trial_log(&trials, d, threshold))?;
        }
        results.push(CalibrationOut {
            detector: spec.id().to_string(),
            spec: *spec,
            threshold,
        });
    }
    if let Some(path) = out {
        write_json(path, &results)?;
    }
    Ok(())
}

/// `dir/stem_suffix.ext`.
fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("trials");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}_{suffix}.{ext}"))
}

fn run_detection(cfg: &ExperimentConfig, out: &Path, cache_dir: Option<&Path>) -> Result<()> {
    let th = thresholds(cfg, cache_dir)?;
    let curves = pd_sweep_many(cfg, &th)?;
    let mut rows = Vec::new();
    for ((spec, curve), &t) in cfg.detectors.iter().zip(&curves).zip(&th) {
        rows.extend(result_rows(spec, curve, t, cfg.base_seed));
        let at = curve
            .iter()
            .find(|p| p.pd >= 0.9)
            .map_or("-".to_string(), |p| format!("{:.0} dB", p.sinr_db));
        println!("{:<14} threshold {t:>10.4}  Pd>=0.9 at {at}", spec.id());
    }
    emit_results(&rows, cfg, out)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn classification_config(
    config: Option<&Path>,
    figure: Option<u8>,
    run: &RunArgs,
) -> Result<Vec<(String, ClassificationConfig)>> {
    let mut cfgs = match (config, figure) {
        (Some(path), _) => vec![(String::new(), ClassificationConfig::load(path)?)],
        (None, figure) => match presets::figure(figure.unwrap_or(9), &run.scale(), run.seed())? {
            Figure::Classification(list) => list,
            Figure::Detection(_) => {
                return Err(Error::InvalidConfig(
                    "figures 4 to 7 are detection presets; use `pd-curve`".into(),
                ))
            }
        },
    };
    for (_, cfg) in &mut cfgs {
        if let Some(pfa) = run.pfa {
            cfg.pfa = pfa;
        }
        if let Some(n) = run.trials {
            cfg.n_trials = n;
        }
        if let Some(seed) = run.seed {
            cfg.base_seed = seed;
        }
    }
    Ok(cfgs)
}

fn run_classify(cfgs: &[(String, ClassificationConfig)], prefix: &Path) -> Result<()> {
    for (label, cfg) in cfgs {
        let report = run_classification_experiment(cfg)?;
        let prefix = if label.is_empty() {
            prefix.to_path_buf()
        } else {
            let mut s = prefix.as_os_str().to_owned();
            s.push(format!("_{label}"));
            PathBuf::from(s)
        };
        let paths = write_classification(&report, cfg, &prefix)?;
        println!(
            "{}: lrt threshold {:.4}, peak gate {:.4}",
            if cfg.name.is_empty() { "classification" } else { &cfg.name },
            report.thresholds.lrt,
            report.thresholds.peak
        );
        for p in &report.points {
            let m = &p.metrics;
            let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.3}"));
            println!(
                "  {:>5.1} dB {:<3} Pd {}  Pt|H3 {}  P(correct) {}  n_mj {:.3}  n_g {:.3}  hausdorff {:.3}",
                p.sinr_db,
                p.truth.label(),
                fmt(m.pd),
                fmt(m.pt_given_h3),
                fmt(m.probability(p.truth, p.truth)),
                m.n_mj,
                m.n_g,
                m.hausdorff_rms
            );
        }
        println!("wrote {}", paths[0].display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Calibrate {
            source,
            run,
            detector,
            trial_log,
            out,
        } => run_calibrate(&source, &run, &detector, trial_log.as_deref(), out.as_deref()),
        Command::PdCurve {
            source,
            run,
            detector,
            calib_trials,
            out,
            cache_dir,
        } => {
            let mut cfg = detection_config(&source, &run)?;
            if let Some(spec) = detector.spec() {
                cfg.detectors = vec![spec];
            }
            if let Some(n) = run.trials {
                cfg.n_pd_trials = n;
            }
            if let Some(n) = calib_trials {
                cfg.n_calib_trials = n;
            }
            run_detection(&cfg, &out, cache_dir.as_deref())
        }
        Command::Classify {
            config,
            figure,
            run,
            calib_trials,
            out,
        } => {
            let mut cfgs = classification_config(config.as_deref(), figure, &run)?;
            if let Some(n) = calib_trials {
                cfgs.iter_mut().for_each(|(_, c)| c.n_calib_trials = n);
            }
            run_classify(&cfgs, &out)
        }
        Command::Reproduce {
            figure,
            run,
            calib_trials,
            out,
            cache_dir,
        } => {
            create_dir(&out)?;
            let prefix = out.join(format!("figure{figure}"));
            if presets::detection_training(figure).is_some() {
                let source = Source {
                    config: None,
                    figure: Some(figure),
                };
                let mut cfg = detection_config(&source, &run)?;
                if let Some(n) = run.trials {
                    cfg.n_pd_trials = n;
                }
                if let Some(n) = calib_trials {
                    cfg.n_calib_trials = n;
                }
                run_detection(&cfg, &prefix.with_extension("csv"), cache_dir.as_deref())
            } else {
                let mut cfgs = classification_config(None, Some(figure), &run)?;
                if let Some(n) = calib_trials {
                    cfgs.iter_mut().for_each(|(_, c)| c.n_calib_trials = n);
                }
                run_classify(&cfgs, &prefix)
            }
        }
        Command::ShowConfig { figure, full_scale } => {
            let scale = if full_scale { Scale::full() } else { Scale::desk() };
            match presets::figure(figure, &scale, presets::DEFAULT_SEED)? {
                Figure::Detection(cfg) => print!("{}", cfg.to_toml_string()?),
                Figure::Classification(list) => {
                    for (i, (_, cfg)) in list.iter().enumerate() {
                        if i > 0 {
                            println!("\n# ---");
                        }
                        print!("{}", cfg.to_toml_string()?);
                    }
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
