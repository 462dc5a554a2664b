//! Class prototypes in latent space and the distance statistics that
//! decide whether a confident prediction is also representative.
//!
//! Artifact file (little-endian):
//!
//! ```text
//! magic      8 bytes  "KWSART\0\0"
//! version    u32      1
//! n_classes  u32      2
//! repeated per class, No then Yes:
//!   class      u8     0 = no, 1 = yes
//!   mean_dist  f64
//!   std_dist   f64
//!   n_sigma    f64
//!   threshold  f64
//!   len        u32
//!   prototype  f32 × len
//! ```

use std::path::Path;

use crate::class::Class;
use crate::codec::{read_file, write_file, ByteReader, ByteWriter};
use crate::error::{KwsError, Result};

pub const DEFAULT_N_SIGMA: f64 = 2.0;
pub const ARTIFACT_MAGIC: &[u8; 8] = b"KWSART\0\0";
const ARTIFACT_VERSION: u32 = 1;

/// A latent vector with its (true or pseudo) label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledLatent {
    pub latent: Vec<f32>,
    pub class: Class,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassArtifacts {
    pub class: Class,
    pub prototype: Vec<f32>,
    pub mean_dist: f64,
    pub std_dist: f64,
    pub n_sigma: f64,
    pub threshold: f64,
}

impl ClassArtifacts {
    pub fn with_n_sigma(&self, n_sigma: f64) -> Self {
        ClassArtifacts {
            n_sigma,
            threshold: self.mean_dist + n_sigma * self.std_dist,
            ..self.clone()
        }
    }
}

/// Artifacts for both classes, indexed by [`Class::index`].
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub classes: [ClassArtifacts; 2],
}

impl Artifacts {
    pub fn get(&self, class: Class) -> &ClassArtifacts {
        &self.classes[class.index()]
    }

    pub fn latent_len(&self) -> usize {
        self.classes[0].prototype.len()
    }

    pub fn with_n_sigma(&self, n_sigma: f64) -> Self {
        Artifacts {
            classes: [
                self.classes[0].with_n_sigma(n_sigma),
                self.classes[1].with_n_sigma(n_sigma),
            ],
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.bytes(ARTIFACT_MAGIC);
        w.u32(ARTIFACT_VERSION);
        w.u32(2);
        for a in &self.classes {
            w.u8(a.class.index() as u8);
            w.f64(a.mean_dist);
            w.f64(a.std_dist);
            w.f64(a.n_sigma);
            w.f64(a.threshold);
            w.u32(a.prototype.len() as u32);
            a.prototype.iter().for_each(|&v| w.f32(v));
        }
        w.into_inner()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        r.expect_magic(ARTIFACT_MAGIC)?;
        let version = r.u32()?;
        if version != ARTIFACT_VERSION {
            return Err(KwsError::Checkpoint(format!("unsupported artifact version {version}")));
        }
        if r.u32()? != 2 {
            return Err(KwsError::Checkpoint("artifact file must hold two classes".into()));
        }
        let mut read_one = |expect: Class| -> Result<ClassArtifacts> {
            let tag = r.u8()?;
            let class = Class::from_index(tag as usize)
                .ok_or_else(|| KwsError::Checkpoint(format!("unknown class tag {tag}")))?;
            if class != expect {
                return Err(KwsError::Checkpoint(format!("class {class} where {expect} expected")));
            }
            let mean_dist = r.f64()?;
            let std_dist = r.f64()?;
            let n_sigma = r.f64()?;
            let threshold = r.f64()?;
            let len = r.u32()? as usize;
            let prototype = (0..len).map(|_| r.f32()).collect::<Result<_>>()?;
            Ok(ClassArtifacts {
                class,
                prototype,
                mean_dist,
                std_dist,
                n_sigma,
                threshold,
            })
        };
        let no = read_one(Class::No)?;
        let yes = read_one(Class::Yes)?;
        if !r.is_done() {
            return Err(KwsError::Checkpoint("trailing bytes in artifact file".into()));
        }
        Ok(Artifacts { classes: [no, yes] })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&read_file(path)?)
    }
}

fn check_lengths(latents: &[LabeledLatent]) -> Result<usize> {
    let len = latents.first().map_or(0, |l| l.latent.len());
    if latents.iter().any(|l| l.latent.len() != len) {
        return Err(KwsError::Shape("latents of unequal length".into()));
    }
    Ok(len)
}

fn mean_of<'a>(vectors: impl Iterator<Item = &'a [f32]>, len: usize) -> Vec<f32> {
    let mut sum = vec![0.0f64; len];
    let mut n = 0usize;
    for v in vectors {
        for (s, &x) in sum.iter_mut().zip(v) {
            *s += x as f64;
        }
        n += 1;
    }
    sum.into_iter().map(|s| (s / n as f64) as f32).collect()
}

/// Elementwise mean latent of each class.
pub fn compute_prototypes(latents: &[LabeledLatent]) -> Result<[Vec<f32>; 2]> {
    let len = check_lengths(latents)?;
    let mut out: [Vec<f32>; 2] = Default::default();
    for class in Class::ALL {
        let members = latents.iter().filter(|l| l.class == class);
        if members.clone().next().is_none() {
            return Err(KwsError::IncompleteArtifacts(class));
        }
        out[class.index()] = mean_of(members.map(|l| l.latent.as_slice()), len);
    }
    Ok(out)
}

/// Mean absolute error between two latents.
pub fn mae_distance(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(KwsError::Shape(format!(
            "distance between lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = a.iter().zip(b).map(|(&x, &y)| (x as f64 - y as f64).abs()).sum();
    Ok(sum / a.len() as f64)
}

/// Prototypes plus within-class distance mean, population standard
/// deviation and threshold `mean + n_sigma · std`.
pub fn compute_artifacts(latents: &[LabeledLatent], n_sigma: f64) -> Result<Artifacts> {
    for class in Class::ALL {
        let n = latents.iter().filter(|l| l.class == class).count();
        if n == 0 {
            return Err(KwsError::IncompleteArtifacts(class));
        }
        if n < 2 {
            return Err(KwsError::InsufficientData(format!(
                "class {class} has {n} latent, need at least 2"
            )));
        }
    }
    let prototypes = compute_prototypes(latents)?;
    let classes = Class::ALL.map(|class| {
        let prototype = prototypes[class.index()].clone();
        let dists: Vec<f64> = latents
            .iter()
            .filter(|l| l.class == class)
            .map(|l| mae_distance(&l.latent, &prototype).expect("lengths checked"))
            .collect();
        let n = dists.len() as f64;
        let mean_dist = dists.iter().sum::<f64>() / n;
        let std_dist = (dists.iter().map(|d| (d - mean_dist).powi(2)).sum::<f64>() / n).sqrt();
        ClassArtifacts {
            class,
            prototype,
            mean_dist,
            std_dist,
            n_sigma,
            threshold: mean_dist + n_sigma * std_dist,
        }
    });
    Ok(Artifacts { classes })
}
