//! Binary checkpoint format.
//!
//! A single ASCII header line
//! `refgame-checkpoint v1 vocab=<V> features=<D> embed=<d> max_len=<L> schema=<hash>`
//! followed by the parameter buffer as little-endian `f64`s. Round trips are
//! bit-exact.

use std::path::Path;

use sha2::{Digest, Sha256};

use super::params::{ModelDims, ModelParams};
use crate::error::{invalid, Error, Result};
use crate::world::AttributeSchema;

const MAGIC: &str = "refgame-checkpoint";
const VERSION: &str = "v1";

/// Short content hash of a schema, stored in checkpoint headers.
pub fn schema_hash(schema: &AttributeSchema) -> String {
    let json = serde_json::to_vec(schema).expect("schema serializes");
    hex::encode(&Sha256::digest(&json)[..8])
}

/// Content-derived identifier of a parameter snapshot.
pub fn checkpoint_id(params: &ModelParams) -> String {
    let mut hasher = Sha256::new();
    let d = params.dims();
    for x in [d.vocab, d.features, d.embed, d.max_len] {
        hasher.update((x as u64).to_le_bytes());
    }
    for x in params.data() {
        hasher.update(x.to_le_bytes());
    }
    hex::encode(&hasher.finalize()[..8])
}

pub fn encode(params: &ModelParams, schema: &AttributeSchema) -> Vec<u8> {
    let d = params.dims();
    let header = format!(
        "{MAGIC} {VERSION} vocab={} features={} embed={} max_len={} schema={}\n",
        d.vocab,
        d.features,
        d.embed,
        d.max_len,
        schema_hash(schema)
    );
    let mut out = header.into_bytes();
    for x in params.data() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8], schema: &AttributeSchema) -> Result<ModelParams> {
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| invalid("checkpoint header is not terminated"))?;
    let header = std::str::from_utf8(&bytes[..newline]).map_err(|_| invalid("checkpoint header is not UTF-8"))?;
    let mut words = header.split_whitespace();
    if words.next() != Some(MAGIC) || words.next() != Some(VERSION) {
        return Err(invalid("not a v1 checkpoint"));
    }
    let mut fields = std::collections::BTreeMap::new();
    for w in words {
        let (k, v) = w.split_once('=').ok_or_else(|| invalid(format!("bad header field {w}")))?;
        fields.insert(k, v);
    }
    let num = |k: &str| -> Result<usize> {
        fields
            .get(k)
            .ok_or_else(|| invalid(format!("checkpoint header lacks {k}")))?
            .parse()
            .map_err(|_| invalid(format!("bad value for {k}")))
    };
    let dims = ModelDims {
        vocab: num("vocab")?,
        features: num("features")?,
        embed: num("embed")?,
        max_len: num("max_len")?,
    };
    let expected = schema_hash(schema);
    if fields.get("schema").copied() != Some(expected.as_str()) {
        return Err(invalid("checkpoint was written for a different attribute schema"));
    }
    if dims.features != schema.dim() {
        return Err(invalid("checkpoint feature dimension does not match the schema"));
    }
    let body = &bytes[newline + 1..];
    if body.len() != dims.param_count() * 8 {
        return Err(invalid(format!(
            "checkpoint body has {} bytes, expected {}",
            body.len(),
            dims.param_count() * 8
        )));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    ModelParams::from_data(dims, data)
}

pub fn save(path: &Path, params: &ModelParams, schema: &AttributeSchema) -> Result<()> {
    std::fs::write(path, encode(params, schema)).map_err(Error::from)
}

pub fn load(path: &Path, schema: &AttributeSchema) -> Result<ModelParams> {
    decode(&std::fs::read(path)?, schema)
}
