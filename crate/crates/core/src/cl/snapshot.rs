//! State snapshot directory, rewritten after every update:
//!
//! ```text
//! state.txt       version=1, updates=<n>
//! model.kwsf      float checkpoint
//! model.kwsq      quantised checkpoint
//! artifacts.kwsa  class artifacts
//! rehearsal.bin   "KWSREH\0\0", u32 version, u32 count, count pair records
//! effective.bin   "KWSEFF\0\0", u32 version, u32 capacity, u64 evicted,
//!                 u32 count, then per sample: u8 pseudo-label,
//!                 u8 confidence_q, f64 distance, pair record
//! ```

use std::fs;
use std::path::Path;

use super::{ClState, EffectiveBuffer, EffectiveSample, RehearsalBuffer};
use crate::class::Class;
use crate::codec::{read_file, write_file, ByteReader, ByteWriter};
use crate::error::{KwsError, Result};
use crate::features::{FeaturePair, MAP_LEN};
use crate::nn::{load_model, save_model};
use crate::prototypes::Artifacts;
use crate::quant::{load_quantized, save_quantized};

pub const SNAPSHOT_VERSION: u32 = 1;
const REHEARSAL_MAGIC: &[u8; 8] = b"KWSREH\0\0";
const EFFECTIVE_MAGIC: &[u8; 8] = b"KWSEFF\0\0";
const PAIR_RECORD_LEN: usize = 2 + 2 * (1 + 4 * MAP_LEN);

fn write_pair(w: &mut ByteWriter, pair: &FeaturePair) {
    pair.write_to(&mut w.buf).expect("writing to memory");
}

fn read_pair(r: &mut ByteReader<'_>) -> Result<FeaturePair> {
    let mut record = r.take(PAIR_RECORD_LEN)?;
    FeaturePair::read_from(&mut record)
}

fn check_version(r: &mut ByteReader<'_>, what: &str) -> Result<()> {
    let v = r.u32()?;
    if v != SNAPSHOT_VERSION {
        return Err(KwsError::Checkpoint(format!("unsupported {what} version {v}")));
    }
    Ok(())
}

pub fn save_state(state: &ClState, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| KwsError::io(dir, e))?;
    save_model(&state.model, &dir.join("model.kwsf"))?;
    save_quantized(&state.qm, &dir.join("model.kwsq"))?;
    state.artifacts.save(&dir.join("artifacts.kwsa"))?;

    let mut w = ByteWriter::new();
    w.bytes(REHEARSAL_MAGIC);
    w.u32(SNAPSHOT_VERSION);
    w.u32(state.rehearsal.len() as u32);
    state.rehearsal.entries().iter().for_each(|p| write_pair(&mut w, p));
    write_file(&dir.join("rehearsal.bin"), &w.into_inner())?;

    let mut w = ByteWriter::new();
    w.bytes(EFFECTIVE_MAGIC);
    w.u32(SNAPSHOT_VERSION);
    w.u32(state.effective.capacity() as u32);
    w.u64(state.effective.evicted());
    w.u32(state.effective.len() as u32);
    for s in state.effective.iter() {
        w.u8(s.pseudo_label.index() as u8);
        w.u8(s.confidence_q);
        w.f64(s.distance);
        write_pair(&mut w, &s.pair);
    }
    write_file(&dir.join("effective.bin"), &w.into_inner())?;

    let text = format!("version={SNAPSHOT_VERSION}\nupdates={}\n", state.updates);
    write_file(&dir.join("state.txt"), text.as_bytes())
}

pub fn load_state(dir: &Path) -> Result<ClState> {
    let text = String::from_utf8(read_file(&dir.join("state.txt"))?)
        .map_err(|_| KwsError::Checkpoint("state.txt is not UTF-8".into()))?;
    let mut updates = None;
    for line in text.lines() {
        match line.split_once('=') {
            Some(("version", v)) if v.trim() != SNAPSHOT_VERSION.to_string() => {
                return Err(KwsError::Checkpoint(format!("unsupported snapshot version {v}")));
            }
            Some(("updates", v)) => {
                updates = Some(
                    v.trim()
                        .parse()
                        .map_err(|_| KwsError::Checkpoint(format!("bad update count {v}")))?,
                )
            }
            _ => {}
        }
    }
    let updates = updates.ok_or_else(|| KwsError::Checkpoint("state.txt lacks an update count".into()))?;

    let bytes = read_file(&dir.join("rehearsal.bin"))?;
    let mut r = ByteReader::new(&bytes);
    r.expect_magic(REHEARSAL_MAGIC)?;
    check_version(&mut r, "rehearsal")?;
    let n = r.u32()? as usize;
    let entries = (0..n).map(|_| read_pair(&mut r)).collect::<Result<Vec<_>>>()?;
    let rehearsal = RehearsalBuffer::from_entries(entries)?;

    let bytes = read_file(&dir.join("effective.bin"))?;
    let mut r = ByteReader::new(&bytes);
    r.expect_magic(EFFECTIVE_MAGIC)?;
    check_version(&mut r, "effective buffer")?;
    let capacity = r.u32()? as usize;
    let evicted = r.u64()?;
    let n = r.u32()? as usize;
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let tag = r.u8()?;
        let pseudo_label =
            Class::from_index(tag as usize).ok_or_else(|| KwsError::Checkpoint(format!("unknown class tag {tag}")))?;
        samples.push(EffectiveSample {
            pseudo_label,
            confidence_q: r.u8()?,
            distance: r.f64()?,
            pair: read_pair(&mut r)?,
        });
    }
    if !r.is_done() {
        return Err(KwsError::Checkpoint("trailing bytes in effective.bin".into()));
    }

    Ok(ClState {
        model: load_model(&dir.join("model.kwsf"))?,
        qm: load_quantized(&dir.join("model.kwsq"))?,
        artifacts: Artifacts::load(&dir.join("artifacts.kwsa"))?,
        rehearsal,
        effective: EffectiveBuffer::restore(capacity, evicted, samples),
        updates,
    })
}
