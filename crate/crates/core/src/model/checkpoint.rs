//! Checkpoint encoding: named parameter tensors plus optimizer state.
//!
//! Layout: magic "ATCK", version u16, the config block, its hash, epoch,
//! seed, the named tensors, then the Adam state (step, hyperparameters,
//! and both moment tensor sets in parameter order).

use alloc::vec::Vec;

use super::{Cgru, CgruConfig};
use crate::codec::{fnv1a64, ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::nn::{AdamState, ConvSpec, Parameter, Tensor};

const MAGIC: &[u8; 4] = b"ATCK";
const VERSION: u16 = 1;

/// A deserialized checkpoint, ready to resume training or predict.
pub struct Checkpoint {
    pub model: Cgru,
    pub adam: Option<AdamState>,
    pub epoch: u32,
    pub seed: u64,
}

fn write_config(w: &mut ByteWriter, config: &CgruConfig) {
    w.u32(config.input_channels as u32);
    w.u32(config.input_bins as u32);
    w.u32(config.gru_hidden as u32);
    w.u32(config.conv.len() as u32);
    for c in &config.conv {
        for v in [
            c.in_channels,
            c.out_channels,
            c.kernel.0,
            c.kernel.1,
            c.stride.0,
            c.stride.1,
            c.padding.0,
            c.padding.1,
        ] {
            w.u32(v as u32);
        }
    }
}

fn read_config(r: &mut ByteReader<'_>) -> Result<CgruConfig> {
    let input_channels = r.u32()? as usize;
    let input_bins = r.u32()? as usize;
    let gru_hidden = r.u32()? as usize;
    let n_conv = r.u32()? as usize;
    if n_conv > 64 {
        return Err(Error::CorruptData("implausible conv layer count".into()));
    }
    let mut conv = Vec::with_capacity(n_conv);
    for _ in 0..n_conv {
        let vals: [usize; 8] = {
            let mut a = [0usize; 8];
            for v in a.iter_mut() {
                *v = r.u32()? as usize;
            }
            a
        };
        conv.push(ConvSpec {
            in_channels: vals[0],
            out_channels: vals[1],
            kernel: (vals[2], vals[3]),
            stride: (vals[4], vals[5]),
            padding: (vals[6], vals[7]),
        });
    }
    Ok(CgruConfig {
        conv,
        gru_hidden,
        input_bins,
        input_channels,
    })
}

fn write_tensor(w: &mut ByteWriter, name: &str, t: &Tensor) {
    w.str(name);
    w.u8(t.shape.len() as u8);
    for &d in &t.shape {
        w.u32(d as u32);
    }
    for &v in &t.values {
        w.f64(v);
    }
}

fn read_tensor(r: &mut ByteReader<'_>) -> Result<(alloc::string::String, Tensor)> {
    let name = r.str()?;
    let ndim = r.u8()? as usize;
    let mut shape = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        shape.push(r.u32()? as usize);
    }
    let n: usize = shape.iter().product();
    if n > 1 << 28 {
        return Err(Error::CorruptData("implausible tensor size".into()));
    }
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        values.push(r.f64()?);
    }
    Ok((name, Tensor::from_values(&shape, values)))
}

pub fn encode_checkpoint(
    model: &Cgru,
    adam: Option<&AdamState>,
    epoch: u32,
    seed: u64,
) -> Vec<u8> {
    let mut w = ByteWriter::new();
    w.bytes(MAGIC);
    w.u16(VERSION);

    let mut config_block = ByteWriter::new();
    write_config(&mut config_block, &model.config);
    let config_bytes = config_block.into_bytes();
    w.u32(config_bytes.len() as u32);
    w.bytes(&config_bytes);
    w.u64(fnv1a64(&config_bytes));

    w.u32(epoch);
    w.u64(seed);

    let params = model.parameters();
    w.u16(params.len() as u16);
    for p in &params {
        write_tensor(&mut w, &p.name, &p.value);
    }

    match adam {
        Some(state) => {
            w.u8(1);
            w.u64(state.step);
            w.f64(state.lr);
            w.f64(state.beta1);
            w.f64(state.beta2);
            w.f64(state.eps);
            for t in &state.first_moment {
                write_tensor(&mut w, "m", t);
            }
            for t in &state.second_moment {
                write_tensor(&mut w, "v", t);
            }
        }
        None => w.u8(0),
    }
    w.into_bytes()
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = ByteReader::new(bytes, "checkpoint");
    r.expect_header(MAGIC, VERSION)?;

    let config_len = r.u32()? as usize;
    let config_bytes = r.bytes(config_len)?;
    let stored_hash = r.u64()?;
    let actual_hash = fnv1a64(config_bytes);
    if stored_hash != actual_hash {
        return Err(Error::ConfigMismatch {
            expected: actual_hash,
            got: stored_hash,
        });
    }
    let config = {
        let mut cr = ByteReader::new(config_bytes, "checkpoint config");
        read_config(&mut cr)?
    };

    let epoch = r.u32()?;
    let seed = r.u64()?;

    // Build the skeleton, then overwrite every tensor by name.
    let mut model = Cgru::init(config, seed);
    let n_params = r.u16()? as usize;
    let expected = model.parameters().len();
    if n_params != expected {
        return Err(Error::CorruptData(alloc::format!(
            "checkpoint has {n_params} tensors, config implies {expected}"
        )));
    }
    {
        let mut params: Vec<&mut Parameter> = model.parameters_mut();
        for p in params.iter_mut() {
            let (name, tensor) = read_tensor(&mut r)?;
            if name != p.name {
                return Err(Error::CorruptData(alloc::format!(
                    "tensor order mismatch: expected {}, found {name}",
                    p.name
                )));
            }
            if tensor.shape != p.value.shape {
                return Err(Error::CorruptData(alloc::format!(
                    "tensor {} has shape {:?}, config implies {:?}",
                    name,
                    tensor.shape,
                    p.value.shape
                )));
            }
            p.value = tensor;
        }
    }

    let adam = if r.u8()? == 1 {
        let step = r.u64()?;
        let lr = r.f64()?;
        let beta1 = r.f64()?;
        let beta2 = r.f64()?;
        let eps = r.f64()?;
        let n = model.parameters().len();
        let mut first_moment = Vec::with_capacity(n);
        for _ in 0..n {
            first_moment.push(read_tensor(&mut r)?.1);
        }
        let mut second_moment = Vec::with_capacity(n);
        for _ in 0..n {
            second_moment.push(read_tensor(&mut r)?.1);
        }
        Some(AdamState {
            lr,
            beta1,
            beta2,
            eps,
            step,
            first_moment,
            second_moment,
        })
    } else {
        None
    };

    if r.remaining() != 0 {
        return Err(Error::CorruptData(alloc::format!(
            "checkpoint: {} trailing bytes",
            r.remaining()
        )));
    }
    Ok(Checkpoint {
        model,
        adam,
        epoch,
        seed,
    })
}
