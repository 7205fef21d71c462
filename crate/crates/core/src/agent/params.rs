use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lang::{TokenKind, Vocabulary};
use crate::rng;
use crate::world::AttributeSchema;

pub const DEFAULT_EMBED_DIM: usize = 16;
pub const DEFAULT_MAX_LEN: usize = 6;
pub const DEFAULT_FILLERS: usize = 4;
const INIT_RANGE: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub vocab: usize,
    pub features: usize,
    pub embed: usize,
    /// Maximum number of content tokens before EOS is forced.
    pub max_len: usize,
}

impl ModelDims {
    pub fn new(vocab: &Vocabulary, schema: &AttributeSchema, embed: usize, max_len: usize) -> Self {
        ModelDims {
            vocab: vocab.len(),
            features: schema.dim(),
            embed,
            max_len,
        }
    }

    fn embed_len(&self) -> usize {
        self.vocab * self.embed
    }

    fn proj_len(&self) -> usize {
        self.embed * self.features
    }

    fn mixer_len(&self) -> usize {
        self.embed * self.embed
    }

    pub fn param_count(&self) -> usize {
        self.embed_len() + self.proj_len() + 1 + self.mixer_len() + self.vocab
    }
}

/// All trainable parameters, stored contiguously.
///
/// Layout: token embeddings `E` (vocab × embed, row-major), shape projection
/// `M` (embed × features, row-major), listener scale `β`, prefix mixer `W_c`
/// (embed × embed, row-major), token bias `b` (vocab). The same layout is used
/// for gradients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    dims: ModelDims,
    data: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(dims: ModelDims) -> Self {
        ModelParams {
            dims,
            data: vec![0.0; dims.param_count()],
        }
    }

    /// I.i.d. uniform entries in [-0.1, 0.1].
    pub fn init(dims: ModelDims, seed: u64) -> Self {
        let mut rng = rng::stream(&[seed, rng::label("init")]);
        let data = (0..dims.param_count())
            .map(|_| rng.gen_range(-INIT_RANGE..=INIT_RANGE))
            .collect();
        ModelParams { dims, data }
    }

    pub fn from_data(dims: ModelDims, data: Vec<f64>) -> Result<Self> {
        if data.len() != dims.param_count() {
            return Err(invalid(format!(
                "expected {} parameters, got {}",
                dims.param_count(),
                data.len()
            )));
        }
        Ok(ModelParams { dims, data })
    }

    /// Hand-set literal semantics: each content token embeds as the one-hot of
    /// its attribute value, so the listener scores shapes by matched attributes
    /// and the greedy speaker names every attribute of the target in family
    /// order before stopping. Used as a fixture with a known-good behaviour.
    pub fn literal_fixture(schema: &AttributeSchema, vocab: &Vocabulary, max_len: usize) -> Self {
        let features = schema.dim();
        let dims = ModelDims::new(vocab, schema, features, max_len);
        let mut p = ModelParams::zeros(dims);
        let gain = 5.0;
        for t in 0..vocab.len() {
            if let TokenKind::Content { .. } = vocab.kind(t) {
                p.embed_mut()[t * features + t] = 1.0;
            }
        }
        for i in 0..features {
            p.proj_mut()[i * features + i] = gain;
            p.mixer_mut()[i * features + i] = -2.0 * gain;
        }
        *p.scale_mut() = 20.0;
        p.bias_mut()[vocab.eos()] = 0.5 * gain;
        p
    }

    pub fn dims(&self) -> ModelDims {
        self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn embed(&self) -> &[f64] {
        &self.data[..self.dims.embed_len()]
    }

    pub fn embed_row(&self, token: usize) -> &[f64] {
        let d = self.dims.embed;
        &self.embed()[token * d..(token + 1) * d]
    }

    pub fn embed_mut(&mut self) -> &mut [f64] {
        let end = self.dims.embed_len();
        &mut self.data[..end]
    }

    pub fn proj(&self) -> &[f64] {
        let start = self.dims.embed_len();
        &self.data[start..start + self.dims.proj_len()]
    }

    pub fn proj_mut(&mut self) -> &mut [f64] {
        let start = self.dims.embed_len();
        let len = self.dims.proj_len();
        &mut self.data[start..start + len]
    }

    fn scale_index(&self) -> usize {
        self.dims.embed_len() + self.dims.proj_len()
    }

    pub fn scale(&self) -> f64 {
        self.data[self.scale_index()]
    }

    pub fn scale_mut(&mut self) -> &mut f64 {
        let i = self.scale_index();
        &mut self.data[i]
    }

    pub fn mixer(&self) -> &[f64] {
        let start = self.scale_index() + 1;
        &self.data[start..start + self.dims.mixer_len()]
    }

    pub fn mixer_mut(&mut self) -> &mut [f64] {
        let start = self.scale_index() + 1;
        let len = self.dims.mixer_len();
        &mut self.data[start..start + len]
    }

    pub fn bias(&self) -> &[f64] {
        let start = self.scale_index() + 1 + self.dims.mixer_len();
        &self.data[start..]
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        let start = self.scale_index() + 1 + self.dims.mixer_len();
        &mut self.data[start..]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// `self += alpha * other`.
    pub fn add_scaled(&mut self, other: &ModelParams, alpha: f64) {
        debug_assert_eq!(self.dims, other.dims);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn dot(&self, other: &ModelParams) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Shape projection `M f` of one feature vector.
    pub fn project(&self, features: &[f64]) -> Vec<f64> {
        let df = self.dims.features;
        self.proj()
            .chunks_exact(df)
            .map(|row| row.iter().zip(features).map(|(m, f)| m * f).sum())
            .collect()
    }
}
