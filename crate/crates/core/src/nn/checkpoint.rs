//! Float checkpoint container (all integers and floats little-endian):
//!
//! ```text
//! magic      8 bytes  "KWSFLT\0\0"
//! version    u32      1
//! arch       u8       1 = single, 2 = dual
//! n_tensors  u32
//! repeated n_tensors times:
//!   name     u16 length + UTF-8
//!   ndim     u8
//!   dims     u32 × ndim
//!   values   f32 × product(dims), row-major
//! ```

use std::path::Path;

use super::model::{Architecture, KwsModel};
use super::tensor::Tensor;
use crate::codec::{read_file, write_file, ByteReader, ByteWriter};
use crate::error::{KwsError, Result};

pub const FLOAT_MAGIC: &[u8; 8] = b"KWSFLT\0\0";
pub const FORMAT_VERSION: u32 = 1;

pub(crate) fn write_tensor_header(w: &mut ByteWriter, name: &str, shape: &[usize]) {
    w.str(name);
    w.u8(shape.len() as u8);
    for &d in shape {
        w.u32(d as u32);
    }
}

pub(crate) fn read_tensor_header(r: &mut ByteReader<'_>) -> Result<(String, Vec<usize>)> {
    let name = r.str()?;
    let ndim = r.u8()? as usize;
    let shape = (0..ndim)
        .map(|_| r.u32().map(|d| d as usize))
        .collect::<Result<Vec<_>>>()?;
    Ok((name, shape))
}

pub fn write_model(model: &KwsModel<f32>) -> Vec<u8> {
    let mut w = ByteWriter::new();
    w.bytes(FLOAT_MAGIC);
    w.u32(FORMAT_VERSION);
    w.u8(model.arch.tag());
    let params = model.named_params();
    w.u32(params.len() as u32);
    for (name, t) in params {
        write_tensor_header(&mut w, &name, t.shape());
        for &v in t.data() {
            w.f32(v);
        }
    }
    w.into_inner()
}

pub fn read_model(bytes: &[u8]) -> Result<KwsModel<f32>> {
    let mut r = ByteReader::new(bytes);
    r.expect_magic(FLOAT_MAGIC)?;
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(KwsError::Checkpoint(format!(
            "unsupported float checkpoint version {version}"
        )));
    }
    let arch = Architecture::from_tag(r.u8()?)?;
    let mut model = KwsModel::<f32>::zeros(arch);
    let expected: Vec<(String, Vec<usize>)> = model
        .named_params()
        .into_iter()
        .map(|(n, t)| (n, t.shape().to_vec()))
        .collect();
    let n = r.u32()? as usize;
    if n != expected.len() {
        return Err(KwsError::Checkpoint(format!(
            "{n} tensors, architecture needs {}",
            expected.len()
        )));
    }
    for ((exp_name, exp_shape), slot) in expected.into_iter().zip(model.params_mut()) {
        let (name, shape) = read_tensor_header(&mut r)?;
        if name != exp_name || shape != exp_shape {
            return Err(KwsError::Checkpoint(format!(
                "tensor {name} {shape:?} where {exp_name} {exp_shape:?} expected"
            )));
        }
        let count = shape.iter().product();
        let values = (0..count).map(|_| r.f32()).collect::<Result<Vec<_>>>()?;
        *slot = Tensor::from_vec(&shape, values)?;
    }
    if !r.is_done() {
        return Err(KwsError::Checkpoint("trailing bytes after last tensor".into()));
    }
    Ok(model)
}

pub fn save_model(model: &KwsModel<f32>, path: &Path) -> Result<()> {
    write_file(path, &write_model(model))
}

pub fn load_model(path: &Path) -> Result<KwsModel<f32>> {
    read_model(&read_file(path)?)
}
