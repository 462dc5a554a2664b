//! Quantised checkpoint container, little-endian throughout:
//!
//! ```text
//! magic      8 bytes  "KWSQNT\0\0"
//! version    u32      1
//! arch       u8       1 = single, 2 = dual
//! n_tensors  u32
//! repeated n_tensors times (same names and order as the float container):
//!   name        u16 length + UTF-8
//!   ndim        u8
//!   dims        u32 × ndim
//!   dtype       u8     1 = i8 weight, 4 = i32 bias
//!   scale       f32
//!   zero_point  i32
//!   values      i8 or i32 × product(dims)
//! n_sites    u32
//! repeated n_sites times:
//!   name        u16 length + UTF-8
//!   scale       f32
//!   zero_point  i32
//! ```
//!
//! Site order: per path `<path>.input`, `<path>.conv1`, `<path>.conv2`,
//! then `latent`, `logit`, `prob`. Requantisation multipliers and the
//! sigmoid table are rebuilt on load.

use std::path::Path;

use super::{Calibration, QuantParams, QuantizedModel};
use crate::codec::{read_file, write_file, ByteReader, ByteWriter};
use crate::error::{KwsError, Result};
use crate::nn::checkpoint::{read_tensor_header, write_tensor_header};
use crate::nn::{Architecture, KwsModel, FORMAT_VERSION};

pub const QUANT_MAGIC: &[u8; 8] = b"KWSQNT\0\0";
const DTYPE_I8: u8 = 1;
const DTYPE_I32: u8 = 4;

fn site_names(arch: Architecture) -> Vec<String> {
    let mut names = Vec::new();
    for p in arch.path_names().iter().take(arch.n_paths()) {
        for s in ["input", "conv1", "conv2"] {
            names.push(format!("{p}.{s}"));
        }
    }
    names.extend(["latent", "logit", "prob"].map(String::from));
    names
}

fn sites(cal: &Calibration) -> Vec<QuantParams> {
    let mut out = Vec::new();
    for (input, hidden) in cal.inputs.iter().zip(&cal.hidden) {
        out.extend([*input, hidden[0], hidden[1]]);
    }
    out.extend([cal.latent, cal.logit, cal.prob]);
    out
}

fn write_params(w: &mut ByteWriter, p: QuantParams) {
    w.f32(p.scale);
    w.i32(p.zero_point);
}

fn read_params(r: &mut ByteReader<'_>) -> Result<QuantParams> {
    Ok(QuantParams {
        scale: r.f32()?,
        zero_point: r.i32()?,
    })
}

pub fn write_quantized(qm: &QuantizedModel) -> Vec<u8> {
    let mut w = ByteWriter::new();
    w.bytes(QUANT_MAGIC);
    w.u32(FORMAT_VERSION);
    w.u8(qm.arch.tag());
    let template = KwsModel::<f32>::zeros(qm.arch);
    let named = template.named_params();
    w.u32(named.len() as u32);
    let mut named = named.into_iter();
    for path in &qm.paths {
        for conv in &path.convs {
            let (name, t) = named.next().expect("weight tensor");
            write_tensor_header(&mut w, &name, t.shape());
            w.u8(DTYPE_I8);
            write_params(&mut w, conv.weight_params);
            conv.weight.iter().for_each(|&q| w.u8(q as u8));
            let (name, t) = named.next().expect("bias tensor");
            write_tensor_header(&mut w, &name, t.shape());
            w.u8(DTYPE_I32);
            write_params(
                &mut w,
                QuantParams {
                    scale: conv.bias_scale(),
                    zero_point: 0,
                },
            );
            conv.bias.iter().for_each(|&q| w.i32(q));
        }
    }
    let (name, t) = named.next().expect("head weight");
    write_tensor_header(&mut w, &name, t.shape());
    w.u8(DTYPE_I8);
    write_params(&mut w, qm.head_params);
    qm.head_weight.iter().for_each(|&q| w.u8(q as u8));
    let (name, t) = named.next().expect("head bias");
    write_tensor_header(&mut w, &name, t.shape());
    w.u8(DTYPE_I32);
    write_params(
        &mut w,
        QuantParams {
            scale: qm.head_bias_scale(),
            zero_point: 0,
        },
    );
    w.i32(qm.head_bias);

    let names = site_names(qm.arch);
    let params = sites(&qm.calibration);
    w.u32(names.len() as u32);
    for (name, p) in names.iter().zip(params) {
        w.str(name);
        write_params(&mut w, p);
    }
    w.into_inner()
}

enum Record {
    Weight(Vec<i8>, QuantParams),
    Bias(Vec<i32>),
}

pub fn read_quantized(bytes: &[u8]) -> Result<QuantizedModel> {
    let mut r = ByteReader::new(bytes);
    r.expect_magic(QUANT_MAGIC)?;
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(KwsError::Checkpoint(format!(
            "unsupported quantised checkpoint version {version}"
        )));
    }
    let arch = Architecture::from_tag(r.u8()?)?;
    let template = KwsModel::<f32>::zeros(arch);
    let expected = template.named_params();
    let n = r.u32()? as usize;
    if n != expected.len() {
        return Err(KwsError::Checkpoint(format!(
            "{n} tensors, architecture needs {}",
            expected.len()
        )));
    }
    let mut records = Vec::with_capacity(n);
    for (exp_name, exp_t) in &expected {
        let (name, shape) = read_tensor_header(&mut r)?;
        if &name != exp_name || shape != exp_t.shape() {
            return Err(KwsError::Checkpoint(format!(
                "tensor {name} {shape:?} where {exp_name} {:?} expected",
                exp_t.shape()
            )));
        }
        let count: usize = shape.iter().product();
        let dtype = r.u8()?;
        let params = read_params(&mut r)?;
        let record = match dtype {
            DTYPE_I8 if name.ends_with("weight") => {
                Record::Weight(r.take(count)?.iter().map(|&b| b as i8).collect(), params)
            }
            DTYPE_I32 if name.ends_with("bias") => Record::Bias((0..count).map(|_| r.i32()).collect::<Result<_>>()?),
            _ => return Err(KwsError::Checkpoint(format!("tensor {name} has dtype {dtype}"))),
        };
        records.push(record);
    }
    let names = site_names(arch);
    let n_sites = r.u32()? as usize;
    if n_sites != names.len() {
        return Err(KwsError::Checkpoint(format!(
            "{n_sites} sites, expected {}",
            names.len()
        )));
    }
    let mut site_params = Vec::with_capacity(n_sites);
    for exp in &names {
        let name = r.str()?;
        if &name != exp {
            return Err(KwsError::Checkpoint(format!("site {name} where {exp} expected")));
        }
        site_params.push(read_params(&mut r)?);
    }
    if !r.is_done() {
        return Err(KwsError::Checkpoint("trailing bytes after last site".into()));
    }
    let n_paths = arch.n_paths();
    let calibration = Calibration {
        inputs: (0..n_paths).map(|p| site_params[3 * p]).collect(),
        hidden: (0..n_paths)
            .map(|p| [site_params[3 * p + 1], site_params[3 * p + 2]])
            .collect(),
        latent: site_params[3 * n_paths],
        logit: site_params[3 * n_paths + 1],
        prob: site_params[3 * n_paths + 2],
    };
    let mut it = records.into_iter();
    let mut pair = || -> Result<(Vec<i8>, QuantParams, Vec<i32>)> {
        match (it.next(), it.next()) {
            (Some(Record::Weight(w, p)), Some(Record::Bias(b))) => Ok((w, p, b)),
            _ => Err(KwsError::Checkpoint("weight/bias records out of order".into())),
        }
    };
    let mut conv_weights = Vec::with_capacity(n_paths);
    for _ in 0..n_paths {
        conv_weights.push([pair()?, pair()?, pair()?]);
    }
    let (hw, hp, hb) = pair()?;
    QuantizedModel::assemble(arch, calibration, conv_weights, hw, hp, hb[0])
}

pub fn save_quantized(qm: &QuantizedModel, path: &Path) -> Result<()> {
    write_file(path, &write_quantized(qm))
}

pub fn load_quantized(path: &Path) -> Result<QuantizedModel> {
    read_quantized(&read_file(path)?)
}
