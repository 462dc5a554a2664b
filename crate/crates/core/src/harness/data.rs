//! Dataset loading: the synthetic corpus, or Speech Commands `yes`/`no`
//! folders with their split lists plus DEMAND noise recordings.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use log::info;

use super::config::{DatasetSource, ExperimentConfig};
use crate::audio::{
    load_noise_recording, load_wav, synth_keywords, synth_noise_recording, AudioClip, Environment, NoiseRecording,
    SYNTH_NOISE_SECONDS,
};
use crate::class::Class;
use crate::error::{KwsError, Result};

/// Keyword clips split for training and clean evaluation.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub train: Vec<AudioClip>,
    pub test: Vec<AudioClip>,
}

const TEST_SEED_OFFSET: u64 = 0x7E57;
const NOISE_SEED_OFFSET: u64 = 0x4015E;

pub fn load_corpus(cfg: &ExperimentConfig) -> Result<Corpus> {
    match &cfg.dataset {
        DatasetSource::Synthetic {
            train_per_class,
            test_per_class,
        } => Ok(Corpus {
            train: synth_keywords(*train_per_class, cfg.seed),
            test: synth_keywords(*test_per_class, cfg.seed.wrapping_add(TEST_SEED_OFFSET)),
        }),
        DatasetSource::Real { gscd_dir, .. } => load_gscd(gscd_dir),
    }
}

pub fn load_noise(cfg: &ExperimentConfig, env: Environment) -> Result<NoiseRecording> {
    match (env, &cfg.dataset) {
        (Environment::Synthetic(kind), _) => Ok(synth_noise_recording(
            kind,
            SYNTH_NOISE_SECONDS,
            cfg.seed.wrapping_add(NOISE_SEED_OFFSET).wrapping_add(kind as u64),
        )),
        (env, DatasetSource::Real { demand_dir, .. }) => {
            let path = demand_dir.join(env.to_string()).join("ch01.wav");
            if !path.exists() {
                return Err(KwsError::Dataset(format!(
                    "missing DEMAND recording {}",
                    path.display()
                )));
            }
            load_noise_recording(&path, env)
        }
        (env, DatasetSource::Synthetic { .. }) => Err(KwsError::Dataset(format!(
            "environment {env} needs dataset = real with data.demand_dir"
        ))),
    }
}

fn read_list(path: &Path) -> Result<HashSet<String>> {
    if !path.exists() {
        return Ok(HashSet::new());
    }
    let text = fs::read_to_string(path).map_err(|e| KwsError::io(path, e))?;
    Ok(text
        .lines()
        .map(|l| l.trim().to_string())
        .filter(|l| !l.is_empty())
        .collect())
}

/// `yes/` and `no/` clips; files named in `testing_list.txt` form the test
/// split, those in `validation_list.txt` are skipped, the rest train.
pub fn load_gscd(dir: &Path) -> Result<Corpus> {
    let test_list = read_list(&dir.join("testing_list.txt"))?;
    let val_list = read_list(&dir.join("validation_list.txt"))?;
    let mut corpus = Corpus {
        train: Vec::new(),
        test: Vec::new(),
    };
    for class in Class::ALL {
        let sub = dir.join(class.to_string());
        let mut files: Vec<_> = fs::read_dir(&sub)
            .map_err(|_| KwsError::Dataset(format!("missing keyword folder {}", sub.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
            .collect();
        files.sort();
        for path in files {
            let name = format!("{class}/{}", path.file_name().unwrap_or_default().to_string_lossy());
            if val_list.contains(&name) {
                continue;
            }
            let clip = AudioClip::keyword(load_wav(&path)?.samples().to_vec(), class);
            if test_list.contains(&name) {
                corpus.test.push(clip);
            } else {
                corpus.train.push(clip);
            }
        }
    }
    if corpus.train.is_empty() || corpus.test.is_empty() {
        return Err(KwsError::Dataset(format!(
            "no yes/no clips found under {}",
            dir.display()
        )));
    }
    info!(
        "loaded {} training and {} test clips",
        corpus.train.len(),
        corpus.test.len()
    );
    Ok(corpus)
}
