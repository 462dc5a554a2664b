//! The four experiment commands: train, adapt (deployment evaluation),
//! ablate and report.

use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::data::{load_corpus, load_noise, Corpus};
use super::metrics::{pct, read_csv, render_cells, render_svg, render_table, write_csv, CellSummary, Grid, MetricsRow};
use super::stream::{DeploymentStream, StreamSpec};
use crate::audio::{AudioClip, Environment};
use crate::cl::{
    continual_update, load_state, noise_logmels, run_intervals, save_state, ClConfig, ClState, IntervalMetrics,
    RehearsalBuffer,
};
use crate::codec::write_file;
use crate::error::{KwsError, Result};
use crate::features::FeaturePair;
use crate::nn::{train, KwsModel, TrainConfig, TrainReport};
use crate::pipeline::FrontEnd;
use crate::prototypes::compute_artifacts;
use crate::quant::{calibrate, quantize_model, QuantizedModel};
use crate::spectral::DenoiseConfig;
use crate::wavelet::{denoise_clip_traced, ThresholdMode};
use crate::Class;

/// Calibration subset size taken from the training set.
const CALIBRATION_SAMPLES: usize = 256;

pub fn front_end(cfg: &ExperimentConfig) -> Result<FrontEnd> {
    let spectral = if cfg.spectral {
        Some(DenoiseConfig::new(cfg.cl.alpha)?)
    } else {
        None
    };
    Ok(FrontEnd::new(cfg.wavelet, spectral))
}

pub fn raw_pairs(front: &FrontEnd, clips: &[AudioClip]) -> Result<Vec<FeaturePair>> {
    clips.par_iter().map(|c| front.raw_pair(c)).collect()
}

pub fn quantized_accuracy(qm: &QuantizedModel, pairs: &[FeaturePair]) -> f64 {
    let labeled: Vec<&FeaturePair> = pairs.iter().filter(|p| p.label.is_some()).collect();
    if labeled.is_empty() {
        return 0.0;
    }
    let correct = labeled
        .par_iter()
        .filter(|p| Some(qm.infer(p).class) == p.label)
        .count();
    correct as f64 / labeled.len() as f64
}

pub fn float_accuracy(model: &KwsModel<f32>, pairs: &[FeaturePair]) -> f64 {
    let labeled: Vec<&FeaturePair> = pairs.iter().filter(|p| p.label.is_some()).collect();
    if labeled.is_empty() {
        return 0.0;
    }
    let correct = labeled
        .par_iter()
        .filter(|p| Some(Class::from_probability(model.forward_pair(p).0 as f64)) == p.label)
        .count();
    correct as f64 / labeled.len() as f64
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub state: ClState,
    pub float_accuracy: f64,
    pub quantized_accuracy: f64,
    pub report: TrainReport,
}

/// Float training, optional fake-quantised fine-tuning, calibration,
/// quantisation, prototypes and rehearsal selection. No files are written.
pub fn train_state(cfg: &ExperimentConfig, corpus: &Corpus, front: &FrontEnd) -> Result<TrainOutcome> {
    let raw = raw_pairs(front, &corpus.train)?;
    let train_set: Vec<FeaturePair> = raw.par_iter().map(|p| front.finish(p)).collect();
    let mut model = KwsModel::<f32>::dual(cfg.seed);
    let mut tc = TrainConfig {
        learning_rate: cfg.train_learning_rate,
        epochs: cfg.train_epochs,
        batch_size: cfg.cl.train.batch_size,
        seed: cfg.seed,
        optimizer: cfg.train_optimizer,
        fake_quant: false,
    };
    let mut report = train(&mut model, &train_set, &tc)?;
    if cfg.qat_epochs > 0 {
        tc.epochs = cfg.qat_epochs;
        tc.fake_quant = true;
        tc.seed = cfg.seed.wrapping_add(1);
        report
            .epoch_losses
            .extend(train(&mut model, &train_set, &tc)?.epoch_losses);
    }
    let stride = (train_set.len() / CALIBRATION_SAMPLES).max(1);
    let calib: Vec<FeaturePair> = train_set.iter().step_by(stride).cloned().collect();
    let qm = quantize_model(&model, &calibrate(&model, &calib)?)?;
    let rehearsal = RehearsalBuffer::from_pairs(&raw, cfg.cl.rehearsal_per_class, cfg.seed)?;
    let latents = crate::cl::quantized_latents(&qm, &train_set);
    let artifacts = compute_artifacts(&latents, cfg.cl.n_sigma)?;

    let test_raw = raw_pairs(front, &corpus.test)?;
    let test: Vec<FeaturePair> = test_raw.iter().map(|p| front.finish(p)).collect();
    let float_acc = float_accuracy(&model, &test);
    let q_acc = quantized_accuracy(&qm, &test);
    info!("clean test accuracy: float {:.4}, int8 {:.4}", float_acc, q_acc);
    Ok(TrainOutcome {
        state: ClState::new(model, qm, artifacts, rehearsal, &cfg.cl),
        float_accuracy: float_acc,
        quantized_accuracy: q_acc,
        report,
    })
}

pub fn checkpoint_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir.join("checkpoint")
}

/// Trains and writes `<output_dir>/checkpoint/` (state snapshot, config,
/// `train_report.txt`), plus `tau.csv` when threshold dumping is on.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<TrainOutcome> {
    let corpus = load_corpus(cfg)?;
    let front = front_end(cfg)?;
    let outcome = train_state(cfg, &corpus, &front)?;
    let dir = checkpoint_dir(cfg);
    save_state(&outcome.state, &dir)?;
    write_file(&dir.join("config.txt"), cfg.to_text().as_bytes())?;
    let mut report = format!(
        "clean_accuracy_float = {:.6}\nclean_accuracy_int8 = {:.6}\nparameters = {}\n",
        outcome.float_accuracy,
        outcome.quantized_accuracy,
        outcome.state.model.param_count()
    );
    for (i, l) in outcome.report.epoch_losses.iter().enumerate() {
        report.push_str(&format!("epoch_{}_loss = {l:.6}\n", i + 1));
    }
    write_file(&dir.join("train_report.txt"), report.as_bytes())?;
    if cfg.dump_tau {
        dump_tau(&corpus.train, &cfg.output_dir.join("tau.csv"))?;
    }
    info!("checkpoint written to {}", dir.display());
    Ok(outcome)
}

/// Per-frame MAD and threshold of the wavelet stage:
/// `clip,frame,mad,tau`.
pub fn dump_tau(clips: &[AudioClip], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["clip", "frame", "mad", "tau"])?;
    for (i, clip) in clips.iter().enumerate() {
        for t in denoise_clip_traced(clip, ThresholdMode::Universal).1 {
            w.write_record([
                i.to_string(),
                t.frame.to_string(),
                t.params.mad.to_string(),
                t.params.tau.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| KwsError::io(path, e))
}

/// Shared inputs of every deployment cell.
pub struct CellContext<'a> {
    pub cfg: &'a ExperimentConfig,
    pub state: &'a ClState,
    pub front: &'a FrontEnd,
    pub test: &'a [AudioClip],
    /// Map-level processed clean test pairs.
    pub clean: &'a [FeaturePair],
}

#[derive(Debug, Clone, PartialEq)]
struct Progress {
    environment: Environment,
    snr_db: f64,
    next_interval: usize,
    baseline_accuracy: Option<f64>,
    clean_before: f64,
}

impl Progress {
    fn to_text(&self) -> String {
        format!(
            "environment = {}\nsnr_db = {}\nnext_interval = {}\nbaseline_accuracy = {}\nclean_before = {}\n",
            self.environment,
            self.snr_db,
            self.next_interval,
            self.baseline_accuracy.map_or(String::new(), |b| b.to_string()),
            self.clean_before
        )
    }

    fn parse(text: &str) -> Result<Self> {
        let get = |key: &str| {
            text.lines()
                .filter_map(|l| l.split_once('='))
                .find(|(k, _)| k.trim() == key)
                .map(|(_, v)| v.trim().to_string())
                .ok_or_else(|| KwsError::Checkpoint(format!("progress file lacks {key}")))
        };
        let num = |key: &str| -> Result<f64> {
            get(key)?
                .parse()
                .map_err(|_| KwsError::Checkpoint(format!("bad {key} in progress file")))
        };
        Ok(Progress {
            environment: get("environment")?.parse()?,
            snr_db: num("snr_db")?,
            next_interval: num("next_interval")? as usize,
            baseline_accuracy: get("baseline_accuracy")?.parse().ok(),
            clean_before: num("clean_before")?,
        })
    }
}

fn cell_seed(seed: u64, env: Environment, snr: f64) -> u64 {
    let mut h = seed ^ 0x005E_ED0F_C311;
    for b in env.to_string().bytes().chain(snr.to_bits().to_le_bytes()) {
        h = (h ^ b as u64).wrapping_mul(0x100_0000_01B3);
    }
    h
}

pub fn cell_dir_name(env: Environment, snr: f64) -> String {
    format!("{env}_{snr}dB")
}

fn mean_accuracy(metrics: &[IntervalMetrics]) -> f64 {
    let (c, n) = metrics
        .iter()
        .fold((0, 0), |(c, n), m| (c + m.n_correct, n + m.n_labeled));
    if n == 0 {
        0.0
    } else {
        c as f64 / n as f64
    }
}

/// One environment × SNR deployment: a no-adaptation baseline over the
/// stream, then initial adaptation and interval-by-interval updates. With
/// `out` set, the state, progress and metrics so far are written after
/// every interval so the run can be resumed.
pub fn run_cell(
    ctx: &CellContext<'_>,
    env: Environment,
    snr_db: f64,
    with_baseline: bool,
    out: Option<&Path>,
) -> Result<(Vec<MetricsRow>, CellSummary)> {
    let cfg = ctx.cfg;
    let noise = load_noise(cfg, env)?;
    let spec = StreamSpec {
        snr_db,
        intervals: cfg.intervals,
        interval: cfg.cl.interval,
        keywords_per_class: cfg.keywords_per_class,
        seed: cell_seed(cfg.seed, env, snr_db),
    };
    let stream = DeploymentStream::new(ctx.test, &noise, spec)?;
    let noise_maps = noise_logmels(ctx.front, &stream.noise_clips(cfg.noise_clips)?)?;

    let frozen = ClConfig {
        retrain: false,
        ..cfg.cl.clone()
    };
    let baseline = if with_baseline {
        Some(mean_accuracy(&run_intervals(
            &mut ctx.state.clone(),
            stream.intervals(),
            &noise_maps,
            ctx.front,
            &frozen,
        )?))
    } else {
        None
    };
    let clean_before = quantized_accuracy(&ctx.state.qm, ctx.clean);

    let mut state = ctx.state.clone();
    if cfg.cl.retrain {
        continual_update(&mut state, &noise_maps, ctx.front, &cfg.cl)?;
    }
    let progress = Progress {
        environment: env,
        snr_db,
        next_interval: 0,
        baseline_accuracy: baseline,
        clean_before,
    };
    continue_cell(ctx, state, &stream, &noise_maps, progress, Vec::new(), out)
}

fn continue_cell(
    ctx: &CellContext<'_>,
    mut state: ClState,
    stream: &DeploymentStream<'_>,
    noise_maps: &[crate::features::FeatureMap],
    mut progress: Progress,
    mut rows: Vec<MetricsRow>,
    out: Option<&Path>,
) -> Result<(Vec<MetricsRow>, CellSummary)> {
    let cfg = ctx.cfg;
    let env_name = progress.environment.to_string();
    let mut all: Vec<IntervalMetrics> = Vec::new();
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| KwsError::io(dir, e))?;
        write_file(&dir.join("config.txt"), cfg.to_text().as_bytes())?;
    }
    for k in progress.next_interval..cfg.intervals {
        let mut m = run_intervals(&mut state, [stream.interval(k)], noise_maps, ctx.front, &cfg.cl)?;
        let mut m = m.pop().expect("one interval in, one metrics record out");
        m.interval = k;
        rows.push(MetricsRow::from_interval(&env_name, progress.snr_db, &m));
        all.push(m);
        progress.next_interval = k + 1;
        if let Some(dir) = out {
            save_state(&state, &dir.join("state"))?;
            write_csv(&dir.join("metrics.csv"), &rows)?;
            write_file(&dir.join("progress.txt"), progress.to_text().as_bytes())?;
        }
    }
    let final_accuracy = rows.last().map_or(0.0, |r| r.accuracy);
    let (c, n) = rows.iter().fold((0.0, 0usize), |(c, n), r| {
        (c + r.accuracy * r.n_labeled as f64, n + r.n_labeled)
    });
    let summary = CellSummary {
        environment: env_name,
        snr_db: progress.snr_db,
        final_accuracy,
        mean_accuracy: if n == 0 { 0.0 } else { c / n as f64 },
        baseline_accuracy: progress.baseline_accuracy,
        clean_before: progress.clean_before,
        clean_after: quantized_accuracy(&state.qm, ctx.clean),
    };
    Ok((rows, summary))
}

/// Loads a checkpoint written by [`cmd_train`].
pub fn load_checkpoint(dir: &Path, cfg: &ExperimentConfig) -> Result<ClState> {
    let mut state = load_state(dir)?;
    state.effective = crate::cl::EffectiveBuffer::new(cfg.cl.effective_capacity);
    Ok(state)
}

pub struct AdaptOutcome {
    pub rows: Vec<MetricsRow>,
    pub cells: Vec<CellSummary>,
}

fn write_adapt_outputs(dir: &Path, rows: &[MetricsRow], cells: &[CellSummary]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| KwsError::io(dir, e))?;
    write_csv(&dir.join("metrics.csv"), rows)?;
    write_csv(&dir.join("cells.csv"), cells)?;
    write_file(&dir.join("summary.txt"), render_cells(cells).as_bytes())
}

/// Runs every cell of `cfg` in memory (no files).
pub fn evaluate_cells(
    cfg: &ExperimentConfig,
    state: &ClState,
    corpus: &Corpus,
    with_baseline: bool,
    cell_root: Option<&Path>,
) -> Result<AdaptOutcome> {
    let front = front_end(cfg)?;
    let clean: Vec<FeaturePair> = raw_pairs(&front, &corpus.test)?
        .iter()
        .map(|p| front.finish(p))
        .collect();
    let ctx = CellContext {
        cfg,
        state,
        front: &front,
        test: &corpus.test,
        clean: &clean,
    };
    let grid: Vec<(Environment, f64)> = cfg
        .environments
        .iter()
        .flat_map(|&e| cfg.snrs_db.iter().map(move |&s| (e, s)))
        .collect();
    let results: Vec<(Vec<MetricsRow>, CellSummary)> = grid
        .par_iter()
        .map(|&(env, snr)| {
            let dir = cell_root.map(|r| r.join(cell_dir_name(env, snr)));
            run_cell(&ctx, env, snr, with_baseline, dir.as_deref())
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for (r, c) in results {
        rows.extend(r);
        cells.push(c);
    }
    Ok(AdaptOutcome { rows, cells })
}

/// Deployment evaluation over every environment × SNR cell. Writes
/// `metrics.csv`, `cells.csv` and `summary.txt` to the output directory and
/// resumable per-cell state under `cells/`.
pub fn cmd_adapt_eval(cfg: &ExperimentConfig, checkpoint: &Path) -> Result<AdaptOutcome> {
    let state = load_checkpoint(checkpoint, cfg)?;
    let corpus = load_corpus(cfg)?;
    let outcome = evaluate_cells(cfg, &state, &corpus, true, Some(&cfg.output_dir.join("cells")))?;
    write_adapt_outputs(&cfg.output_dir, &outcome.rows, &outcome.cells)?;
    Ok(outcome)
}

/// Continues an interrupted cell from its directory and returns the full
/// metrics of that cell.
pub fn cmd_resume(cell_dir: &Path) -> Result<AdaptOutcome> {
    let cfg = ExperimentConfig::from_file(&cell_dir.join("config.txt"))?;
    let progress = Progress::parse(
        &fs::read_to_string(cell_dir.join("progress.txt"))
            .map_err(|e| KwsError::io(cell_dir.join("progress.txt"), e))?,
    )?;
    let state = load_state(&cell_dir.join("state"))?;
    let rows: Vec<MetricsRow> = read_csv(&cell_dir.join("metrics.csv"))?;
    let corpus = load_corpus(&cfg)?;
    let front = front_end(&cfg)?;
    let clean: Vec<FeaturePair> = raw_pairs(&front, &corpus.test)?
        .iter()
        .map(|p| front.finish(p))
        .collect();
    let noise = load_noise(&cfg, progress.environment)?;
    let spec = StreamSpec {
        snr_db: progress.snr_db,
        intervals: cfg.intervals,
        interval: cfg.cl.interval,
        keywords_per_class: cfg.keywords_per_class,
        seed: cell_seed(cfg.seed, progress.environment, progress.snr_db),
    };
    let stream = DeploymentStream::new(&corpus.test, &noise, spec)?;
    let noise_maps = noise_logmels(&front, &stream.noise_clips(cfg.noise_clips)?)?;
    let ctx = CellContext {
        cfg: &cfg,
        state: &state,
        front: &front,
        test: &corpus.test,
        clean: &clean,
    };
    info!("resuming {} at interval {}", cell_dir.display(), progress.next_interval);
    let (rows, summary) = continue_cell(
        &ctx,
        state.clone(),
        &stream,
        &noise_maps,
        progress,
        rows,
        Some(cell_dir),
    )?;
    write_file(
        &cell_dir.join("summary.txt"),
        render_cells(std::slice::from_ref(&summary)).as_bytes(),
    )?;
    Ok(AdaptOutcome {
        rows,
        cells: vec![summary],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    Alpha,
    Confidence,
    NSigma,
    Components,
}

impl std::str::FromStr for Sweep {
    type Err = KwsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "alpha" => Ok(Sweep::Alpha),
            "prob_threshold" | "confidence" => Ok(Sweep::Confidence),
            "dist_threshold" | "n_sigma" => Ok(Sweep::NSigma),
            "components" => Ok(Sweep::Components),
            other => Err(KwsError::Usage(format!(
                "unknown sweep '{other}' (alpha, prob_threshold, dist_threshold, components)"
            ))),
        }
    }
}

impl Sweep {
    pub fn name(self) -> &'static str {
        match self {
            Sweep::Alpha => "alpha",
            Sweep::Confidence => "prob_threshold",
            Sweep::NSigma => "dist_threshold",
            Sweep::Components => "components",
        }
    }

    /// `(label, config)` for every grid point.
    pub fn variants(self, base: &ExperimentConfig) -> Vec<(String, ExperimentConfig)> {
        let with = |f: &dyn Fn(&mut ExperimentConfig)| {
            let mut c = base.clone();
            f(&mut c);
            c
        };
        let steps = |lo: f64, hi: f64, step: f64| -> Vec<f64> {
            let n = ((hi - lo) / step).round() as usize;
            (0..=n)
                .map(|i| ((lo + step * i as f64) * 100.0).round() / 100.0)
                .collect()
        };
        match self {
            Sweep::Alpha => steps(0.4, 0.9, 0.1)
                .into_iter()
                .map(|a| (format!("{a}"), with(&|c| c.cl.alpha = a)))
                .collect(),
            Sweep::Confidence => steps(0.70, 0.85, 0.05)
                .into_iter()
                .map(|p| {
                    let q = crate::quant::confidence_to_q(p);
                    (format!("{p}"), with(&|c| c.cl.confidence_threshold_q = q))
                })
                .collect(),
            Sweep::NSigma => steps(1.7, 2.4, 0.1)
                .into_iter()
                .map(|n| (format!("{n}"), with(&|c| c.cl.n_sigma = n)))
                .collect(),
            Sweep::Components => [
                ("spectral", false, false),
                ("wavelet+spectral", false, true),
                ("retrain+spectral", true, false),
                ("retrain+wavelet+spectral", true, true),
            ]
            .into_iter()
            .map(|(label, retrain, wavelet)| {
                (
                    label.to_string(),
                    with(&|c| {
                        c.cl.retrain = retrain;
                        c.wavelet = wavelet;
                        c.spectral = true;
                    }),
                )
            })
            .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AblationRow {
    pub sweep: String,
    pub value: String,
    pub environment: String,
    pub snr_db: f64,
    pub final_accuracy: f64,
    pub mean_accuracy: f64,
}

/// Spread (max − min) of mean accuracy across sweep values, per
/// environment × SNR.
pub fn ablation_spread(rows: &[AblationRow]) -> Vec<(String, f64, f64)> {
    let mut keys: Vec<(String, f64)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|(e, s)| e == &r.environment && *s == r.snr_db) {
            keys.push((r.environment.clone(), r.snr_db));
        }
    }
    keys.into_iter()
        .map(|(env, snr)| {
            let vals: Vec<f64> = rows
                .iter()
                .filter(|r| r.environment == env && r.snr_db == snr)
                .map(|r| r.mean_accuracy)
                .collect();
            let hi = vals.iter().cloned().fold(f64::MIN, f64::max);
            let lo = vals.iter().cloned().fold(f64::MAX, f64::min);
            (env, snr, hi - lo)
        })
        .collect()
}

/// Evaluates every variant of `sweep` from one trained state. No separate
/// baseline runs: the component sweep's no-retraining rows serve as one.
pub fn ablate_state(
    cfg: &ExperimentConfig,
    state: &ClState,
    corpus: &Corpus,
    sweep: Sweep,
) -> Result<Vec<AblationRow>> {
    let mut rows = Vec::new();
    for (label, variant) in sweep.variants(cfg) {
        variant.validate()?;
        let mut s = state.clone();
        s.effective = crate::cl::EffectiveBuffer::new(variant.cl.effective_capacity);
        info!("{} = {label}", sweep.name());
        for c in evaluate_cells(&variant, &s, corpus, false, None)?.cells {
            rows.push(AblationRow {
                sweep: sweep.name().into(),
                value: label.clone(),
                environment: c.environment,
                snr_db: c.snr_db,
                final_accuracy: c.final_accuracy,
                mean_accuracy: c.mean_accuracy,
            });
        }
    }
    Ok(rows)
}

pub fn render_ablation(rows: &[AblationRow]) -> String {
    let header = ["value", "environment", "snr_db", "final_%", "mean_%"].map(String::from);
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.value.clone(),
                r.environment.clone(),
                format!("{}", r.snr_db),
                pct(r.final_accuracy),
                pct(r.mean_accuracy),
            ]
        })
        .collect();
    let mut out = render_table(&header, &body);
    out.push('\n');
    let spread: Vec<Vec<String>> = ablation_spread(rows)
        .into_iter()
        .map(|(e, s, d)| vec![e, format!("{s}"), pct(d)])
        .collect();
    out.push_str(&render_table(
        &["environment", "snr_db", "spread_%"].map(String::from),
        &spread,
    ));
    out
}

/// Writes `ablation_<sweep>.csv` and `ablation_<sweep>.txt`.
pub fn cmd_ablate(cfg: &ExperimentConfig, checkpoint: &Path, sweep: Sweep) -> Result<Vec<AblationRow>> {
    let state = load_checkpoint(checkpoint, cfg)?;
    let corpus = load_corpus(cfg)?;
    let rows = ablate_state(cfg, &state, &corpus, sweep)?;
    fs::create_dir_all(&cfg.output_dir).map_err(|e| KwsError::io(&cfg.output_dir, e))?;
    write_csv(&cfg.output_dir.join(format!("ablation_{}.csv", sweep.name())), &rows)?;
    write_file(
        &cfg.output_dir.join(format!("ablation_{}.txt", sweep.name())),
        render_ablation(&rows).as_bytes(),
    )?;
    Ok(rows)
}

fn is_metrics_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "csv")
        && fs::read_to_string(path)
            .ok()
            .and_then(|t| {
                t.lines()
                    .next()
                    .map(|l| l.starts_with("environment,snr_db,interval_index"))
            })
            .unwrap_or(false)
}

/// Aggregates every metrics CSV directly inside `dir` into the
/// environment × SNR grid; with `plots`, writes one SVG per environment.
pub fn cmd_report(dir: &Path, plots: bool) -> Result<String> {
    let entries = fs::read_dir(dir).map_err(|e| KwsError::io(dir, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| is_metrics_csv(p))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(KwsError::Usage(format!("no metrics CSV files in {}", dir.display())));
    }
    let mut rows: Vec<MetricsRow> = Vec::new();
    for f in &files {
        rows.extend(read_csv::<MetricsRow>(f)?);
    }
    for r in &rows {
        if let Err(e) = r.validate() {
            warn!("{e}");
        }
    }
    let grid = Grid::from_rows(&rows);
    let text = grid.render();
    write_file(&dir.join("report.txt"), text.as_bytes())?;
    if plots {
        for env in &grid.environments {
            let series: Vec<(String, Vec<f64>)> = grid
                .snrs
                .iter()
                .filter_map(|&snr| {
                    let mut pts: Vec<&MetricsRow> = rows
                        .iter()
                        .filter(|r| &r.environment == env && r.snr_db == snr)
                        .collect();
                    if pts.is_empty() {
                        return None;
                    }
                    pts.sort_by_key(|r| r.interval_index);
                    Some((format!("{snr} dB"), pts.iter().map(|r| r.accuracy).collect()))
                })
                .collect();
            let svg = render_svg(&format!("{env}: accuracy per interval"), &series);
            write_file(&dir.join(format!("plot_{env}.svg")), svg.as_bytes())?;
        }
    }
    Ok(text)
}
