//! Shared fixtures and straight-line reference implementations.
#![allow(dead_code)]

use rand::Rng;
use refgame::agent::{ModelDims, ModelParams};
use refgame::arena::CampaignConfig;
use refgame::lang::{TokenId, Utterance, Vocabulary};
use refgame::rng::StreamRng;
use refgame::world::{AttributeSchema, Board};

/// One binary family, no fillers: tokens are two content words, UNK and EOS.
pub fn tiny_world() -> (AttributeSchema, Vocabulary) {
    let schema = AttributeSchema::from_cardinalities(&[("KIND", 2)]).unwrap();
    let vocab = Vocabulary::new(&schema, 0);
    (schema, vocab)
}

pub fn random_params(dims: ModelDims, scale: f64, rng: &mut StreamRng) -> ModelParams {
    let data = (0..dims.param_count()).map(|_| rng.gen_range(-scale..=scale)).collect();
    ModelParams::from_data(dims, data).unwrap()
}

pub fn random_board(n: usize, features: usize, rng: &mut StreamRng) -> Board {
    Board((0..n).map(|_| (0..features).map(|_| rng.gen_range(0.0..1.0)).collect()).collect())
}

/// Every terminated utterance with at most `max_len` non-EOS tokens.
pub fn all_utterances(vocab_size: usize, eos: TokenId, max_len: usize) -> Vec<Utterance> {
    let words: Vec<TokenId> = (0..vocab_size).filter(|&t| t != eos).collect();
    let mut prefixes: Vec<Vec<TokenId>> = vec![Vec::new()];
    let mut out = Vec::new();
    for len in 0..=max_len {
        for p in &prefixes {
            let mut t = p.clone();
            t.push(eos);
            out.push(Utterance::from_tokens_unchecked(t));
        }
        if len < max_len {
            prefixes = prefixes
                .iter()
                .flat_map(|p| {
                    words.iter().map(move |&w| {
                        let mut q = p.clone();
                        q.push(w);
                        q
                    })
                })
                .collect();
        }
    }
    out
}

/// Unpacks the flat layout: E (V×d), M (d×D), β, W_c (d×d), b (V).
pub struct Unpacked {
    pub e: Vec<Vec<f64>>,
    pub m: Vec<Vec<f64>>,
    pub beta: f64,
    pub w: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

pub fn unpack(params: &ModelParams) -> Unpacked {
    let dims = params.dims();
    let (v, d, f) = (dims.vocab, dims.embed, dims.features);
    let x = params.data();
    let mut at = 0;
    let mut take = |n: usize| {
        let s = x[at..at + n].to_vec();
        at += n;
        s
    };
    let e = take(v * d).chunks(d).map(<[f64]>::to_vec).collect();
    let m = take(d * f).chunks(f).map(<[f64]>::to_vec).collect();
    let beta = take(1)[0];
    let w = take(d * d).chunks(d).map(<[f64]>::to_vec).collect();
    let b = take(v);
    Unpacked { e, m, beta, w, b }
}

fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

fn mean_rows(rows: &[Vec<f64>], ids: &[TokenId], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d];
    for &t in ids {
        for k in 0..d {
            out[k] += rows[t][k] / ids.len() as f64;
        }
    }
    out
}

pub fn reference_listener(params: &ModelParams, board: &Board, content: &[TokenId]) -> Vec<f64> {
    let u = unpack(params);
    let d = params.dims().embed;
    let psi = mean_rows(&u.e, content, d);
    let scores: Vec<f64> = board.iter().map(|f| (u.beta * dot(&psi, &matvec(&u.m, f))).exp()).collect();
    let z: f64 = scores.iter().sum();
    scores.iter().map(|s| s / z).collect()
}

pub fn reference_speaker_logprob(params: &ModelParams, board: &Board, target: usize, tokens: &[TokenId]) -> f64 {
    let u = unpack(params);
    let d = params.dims().embed;
    let proj = matvec(&u.m, &board[target]);
    let mut total = 0.0;
    for j in 0..tokens.len() {
        let prefix = mean_rows(&u.e, &tokens[..j], d);
        let mixed = matvec(&u.w, &prefix);
        let h: Vec<f64> = proj.iter().zip(&mixed).map(|(a, b)| a + b).collect();
        let logits: Vec<f64> = u.e.iter().zip(&u.b).map(|(e, b)| dot(e, &h) + b).collect();
        let z: f64 = logits.iter().map(|l| l.exp()).sum();
        total += logits[tokens[j]] - z.ln();
    }
    total
}

/// A scaled-down campaign that still exercises every code path.
pub fn small_config(seed: u64) -> CampaignConfig {
    let mut cfg = CampaignConfig::parse(
        "rounds = 2\n\
         interactions_base = 24\n\
         interactions_step = 8\n\
         library_size = 64\n\
         seed_games = 32\n\
         validation_games = 40\n\
         eval_pairs = 20\n\
         bootstrap_resamples = 200\n\
         offline_extra_round = true\n\
         hyper.max_epochs = 3\n\
         hyper.patience = 2\n",
    )
    .unwrap();
    cfg.master_seed = seed;
    cfg
}
