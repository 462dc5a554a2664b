//! Flat `key = value` experiment configuration. Blank lines and lines
//! starting with `#` are ignored; later keys override earlier ones.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::audio::{Environment, SyntheticNoise};
use crate::cl::ClConfig;
use crate::error::{KwsError, Result};
use crate::nn::Optimizer;
use crate::quant::confidence_to_q;

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    /// Generated keywords and noise; `train_per_class` and
    /// `test_per_class` clips of each keyword.
    Synthetic {
        train_per_class: usize,
        test_per_class: usize,
    },
    /// Speech Commands layout plus DEMAND noise directories.
    Real { gscd_dir: PathBuf, demand_dir: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub environments: Vec<Environment>,
    pub snrs_db: Vec<f64>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub wavelet: bool,
    pub spectral: bool,
    pub cl: ClConfig,
    /// Update intervals per deployment stream.
    pub intervals: usize,
    /// Keyword items of each class per interval; the rest are noise only.
    pub keywords_per_class: usize,
    /// Noise clips handed to rehearsal augmentation.
    pub noise_clips: usize,
    /// Initial training, before any deployment.
    pub train_epochs: usize,
    pub train_learning_rate: f32,
    pub train_optimizer: Optimizer,
    pub qat_epochs: usize,
    /// Write a per-frame wavelet threshold CSV during training.
    pub dump_tau: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: DatasetSource::Synthetic {
                train_per_class: 400,
                test_per_class: 200,
            },
            environments: vec![Environment::Synthetic(SyntheticNoise::White)],
            snrs_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0],
            seed: 0,
            output_dir: PathBuf::from("kws-out"),
            wavelet: true,
            spectral: true,
            cl: ClConfig::default(),
            intervals: 25,
            keywords_per_class: 64,
            noise_clips: 16,
            train_epochs: 30,
            train_learning_rate: 0.001,
            train_optimizer: Optimizer::Adam,
            qat_epochs: 0,
            dump_tau: false,
        }
    }
}

fn parse<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| KwsError::Config {
        line,
        msg: format!("invalid value '{value}' for {key}"),
    })
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(KwsError::Config {
            line,
            msg: format!("invalid boolean '{value}' for {key}"),
        }),
    }
}

fn parse_list<T: FromStr>(line: usize, key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(line, key, s))
        .collect()
}

pub fn parse_optimizer(s: &str) -> Option<Optimizer> {
    match s.to_ascii_lowercase().as_str() {
        "sgd" => Some(Optimizer::Sgd),
        "adam" => Some(Optimizer::Adam),
        _ => None,
    }
}

fn optimizer_name(o: Optimizer) -> &'static str {
    match o {
        Optimizer::Sgd => "sgd",
        Optimizer::Adam => "adam",
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| KwsError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut kind = String::from("synthetic");
        let (mut train_n, mut test_n) = (400usize, 200usize);
        let (mut gscd, mut demand) = (None::<PathBuf>, None::<PathBuf>);
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| KwsError::Config {
                line,
                msg: format!("expected 'key = value', got '{content}'"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "dataset" => kind = value.to_ascii_lowercase(),
                "data.synthetic_train_per_class" => train_n = parse(line, key, value)?,
                "data.synthetic_test_per_class" => test_n = parse(line, key, value)?,
                "data.gscd_dir" => gscd = Some(PathBuf::from(value)),
                "data.demand_dir" => demand = Some(PathBuf::from(value)),
                "environments" => cfg.environments = parse_list(line, key, value)?,
                "snrs_db" => cfg.snrs_db = parse_list(line, key, value)?,
                "seed" => cfg.seed = parse(line, key, value)?,
                "output_dir" => cfg.output_dir = PathBuf::from(value),
                "denoise.alpha" => cfg.cl.alpha = parse(line, key, value)?,
                "denoise.wavelet" => cfg.wavelet = parse_bool(line, key, value)?,
                "denoise.spectral" => cfg.spectral = parse_bool(line, key, value)?,
                "cl.confidence" => {
                    let p: f64 = parse(line, key, value)?;
                    if !(0.5..=1.0).contains(&p) {
                        return Err(KwsError::Config {
                            line,
                            msg: format!("confidence {p} outside [0.5, 1]"),
                        });
                    }
                    cfg.cl.confidence_threshold_q = confidence_to_q(p);
                }
                "cl.confidence_q" => cfg.cl.confidence_threshold_q = parse(line, key, value)?,
                "prototypes.n_sigma" => cfg.cl.n_sigma = parse(line, key, value)?,
                "cl.interval" => cfg.cl.interval = parse(line, key, value)?,
                "cl.intervals" => cfg.intervals = parse(line, key, value)?,
                "cl.keywords_per_class" => cfg.keywords_per_class = parse(line, key, value)?,
                "cl.rehearsal_per_class" => cfg.cl.rehearsal_per_class = parse(line, key, value)?,
                "cl.effective_capacity" => cfg.cl.effective_capacity = parse(line, key, value)?,
                "cl.epochs_per_update" => cfg.cl.train.epochs = parse(line, key, value)?,
                "cl.learning_rate" => cfg.cl.train.learning_rate = parse(line, key, value)?,
                "cl.batch_size" => cfg.cl.train.batch_size = parse(line, key, value)?,
                "cl.optimizer" => {
                    cfg.cl.train.optimizer = parse_optimizer(value).ok_or_else(|| KwsError::Config {
                        line,
                        msg: format!("unknown optimizer '{value}'"),
                    })?
                }
                "cl.retrain" => cfg.cl.retrain = parse_bool(line, key, value)?,
                "cl.noise_clips" => cfg.noise_clips = parse(line, key, value)?,
                "train.epochs" => cfg.train_epochs = parse(line, key, value)?,
                "train.learning_rate" => cfg.train_learning_rate = parse(line, key, value)?,
                "train.optimizer" => {
                    cfg.train_optimizer = parse_optimizer(value).ok_or_else(|| KwsError::Config {
                        line,
                        msg: format!("unknown optimizer '{value}'"),
                    })?
                }
                "train.qat_epochs" => cfg.qat_epochs = parse(line, key, value)?,
                "debug.dump_tau" => cfg.dump_tau = parse_bool(line, key, value)?,
                _ => {
                    return Err(KwsError::Config {
                        line,
                        msg: format!("unknown key '{key}'"),
                    })
                }
            }
        }
        cfg.dataset = match kind.as_str() {
            "synthetic" => DatasetSource::Synthetic {
                train_per_class: train_n,
                test_per_class: test_n,
            },
            "real" | "gscd" => DatasetSource::Real {
                gscd_dir: gscd.ok_or_else(|| KwsError::Config {
                    line: 0,
                    msg: "dataset = real needs data.gscd_dir".into(),
                })?,
                demand_dir: demand.ok_or_else(|| KwsError::Config {
                    line: 0,
                    msg: "dataset = real needs data.demand_dir".into(),
                })?,
            },
            other => {
                return Err(KwsError::Config {
                    line: 0,
                    msg: format!("unknown dataset '{other}'"),
                })
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.cl.validate()?;
        if self.environments.is_empty() || self.snrs_db.is_empty() {
            return Err(KwsError::Usage("at least one environment and one SNR required".into()));
        }
        if 2 * self.keywords_per_class > self.cl.interval {
            return Err(KwsError::Usage(format!(
                "{} keywords per class do not fit an interval of {}",
                self.keywords_per_class, self.cl.interval
            )));
        }
        if self.train_epochs == 0 {
            return Err(KwsError::Usage("train.epochs must be positive".into()));
        }
        Ok(())
    }

    /// Canonical text form; parsing it yields an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        match &self.dataset {
            DatasetSource::Synthetic {
                train_per_class,
                test_per_class,
            } => {
                let _ = writeln!(s, "dataset = synthetic");
                let _ = writeln!(s, "data.synthetic_train_per_class = {train_per_class}");
                let _ = writeln!(s, "data.synthetic_test_per_class = {test_per_class}");
            }
            DatasetSource::Real { gscd_dir, demand_dir } => {
                let _ = writeln!(s, "dataset = real");
                let _ = writeln!(s, "data.gscd_dir = {}", gscd_dir.display());
                let _ = writeln!(s, "data.demand_dir = {}", demand_dir.display());
            }
        }
        let envs: Vec<String> = self.environments.iter().map(ToString::to_string).collect();
        let snrs: Vec<String> = self.snrs_db.iter().map(ToString::to_string).collect();
        let c = &self.cl;
        let lines = [
            format!("environments = {}", envs.join(",")),
            format!("snrs_db = {}", snrs.join(",")),
            format!("seed = {}", self.seed),
            format!("output_dir = {}", self.output_dir.display()),
            format!("denoise.alpha = {}", c.alpha),
            format!("denoise.wavelet = {}", self.wavelet),
            format!("denoise.spectral = {}", self.spectral),
            format!("cl.confidence_q = {}", c.confidence_threshold_q),
            format!("prototypes.n_sigma = {}", c.n_sigma),
            format!("cl.interval = {}", c.interval),
            format!("cl.intervals = {}", self.intervals),
            format!("cl.keywords_per_class = {}", self.keywords_per_class),
            format!("cl.rehearsal_per_class = {}", c.rehearsal_per_class),
            format!("cl.effective_capacity = {}", c.effective_capacity),
            format!("cl.epochs_per_update = {}", c.train.epochs),
            format!("cl.learning_rate = {}", c.train.learning_rate),
            format!("cl.batch_size = {}", c.train.batch_size),
            format!("cl.optimizer = {}", optimizer_name(c.train.optimizer)),
            format!("cl.retrain = {}", c.retrain),
            format!("cl.noise_clips = {}", self.noise_clips),
            format!("train.epochs = {}", self.train_epochs),
            format!("train.learning_rate = {}", self.train_learning_rate),
            format!("train.optimizer = {}", optimizer_name(self.train_optimizer)),
            format!("train.qat_epochs = {}", self.qat_epochs),
            format!("debug.dump_tau = {}", self.dump_tau),
        ];
        for l in lines {
            s.push_str(&l);
            s.push('\n');
        }
        s
    }
}
