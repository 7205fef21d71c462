//! Listener and speaker distributions of the shared-embedding model.
//!
//! Listener: `P_l(t | u) = softmax_t(β · ψ(u) · M f_t)` where `ψ(u)` is the
//! mean embedding of the non-EOS tokens of `u` (zero for an empty utterance).
//!
//! Speaker: autoregressive, step `j` scores token `v` with
//! `e_v · (M f_t + W_c c_j) + b_v`, `c_j` the mean embedding of the tokens
//! already emitted (zero at the first step). The EOS step is scored like any
//! other, so [`speaker_logprob`] does not account for the EOS forced after
//! `max_len` content tokens: the probabilities of all terminated utterances
//! up to that length sum to one minus the mass of unterminated prefixes.

use rand::Rng;

use super::params::ModelParams;
use crate::error::{invalid, Error, Result};
use crate::lang::{TokenId, Utterance};
use crate::world::Board;

fn check_board(params: &ModelParams, board: &Board) -> Result<()> {
    let df = params.dims().features;
    if board.is_empty() {
        return Err(invalid("empty board"));
    }
    if let Some(f) = board.iter().find(|f| f.len() != df) {
        return Err(invalid(format!("feature length {} does not match model ({df})", f.len())));
    }
    Ok(())
}

fn check_tokens(params: &ModelParams, utterance: &Utterance) -> Result<()> {
    let v = params.dims().vocab;
    match utterance.tokens().iter().find(|&&t| t >= v) {
        Some(t) => Err(invalid(format!("token id {t} out of range for vocabulary of {v}"))),
        None if utterance.is_empty() => Err(invalid("empty token sequence")),
        None => Ok(()),
    }
}

fn check_target(board: &Board, target: usize) -> Result<()> {
    if target >= board.len() {
        return Err(invalid(format!("target {target} outside board of {}", board.len())));
    }
    Ok(())
}

pub(crate) fn softmax_in_place(xs: &mut [f64]) {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in xs.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in xs.iter_mut() {
        *x /= sum;
    }
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn mean_embedding(params: &ModelParams, tokens: &[TokenId]) -> Vec<f64> {
    let d = params.dims().embed;
    let mut out = vec![0.0; d];
    if tokens.is_empty() {
        return out;
    }
    for &t in tokens {
        for (o, e) in out.iter_mut().zip(params.embed_row(t)) {
            *o += e;
        }
    }
    let n = tokens.len() as f64;
    out.iter_mut().for_each(|o| *o /= n);
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn listener_logits(params: &ModelParams, board: &Board, utterance: &Utterance) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
    let psi = mean_embedding(params, utterance.content());
    let projections: Vec<Vec<f64>> = board.iter().map(|f| params.project(f)).collect();
    let beta = params.scale();
    let logits = projections.iter().map(|p| beta * dot(&psi, p)).collect();
    (logits, psi, projections)
}

pub fn listener_distribution(params: &ModelParams, board: &Board, utterance: &Utterance) -> Result<Vec<f64>> {
    check_board(params, board)?;
    check_tokens(params, utterance)?;
    let (mut logits, _, _) = listener_logits(params, board, utterance);
    softmax_in_place(&mut logits);
    Ok(logits)
}

/// Step context `h_j = M f_t + W_c c_j` for every step of `tokens`.
fn speaker_states(params: &ModelParams, projection: &[f64], tokens: &[TokenId]) -> Vec<(Vec<f64>, Vec<f64>)> {
    let d = params.dims().embed;
    let mut prefix_sum = vec![0.0; d];
    let mut out = Vec::with_capacity(tokens.len());
    for (j, &tok) in tokens.iter().enumerate() {
        let prefix: Vec<f64> = if j == 0 {
            vec![0.0; d]
        } else {
            prefix_sum.iter().map(|s| s / j as f64).collect()
        };
        let h = step_state(params, projection, &prefix);
        out.push((prefix, h));
        for (s, e) in prefix_sum.iter_mut().zip(params.embed_row(tok)) {
            *s += e;
        }
    }
    out
}

fn step_state(params: &ModelParams, projection: &[f64], prefix: &[f64]) -> Vec<f64> {
    params
        .mixer()
        .chunks_exact(params.dims().embed)
        .zip(projection)
        .map(|(row, p)| p + dot(row, prefix))
        .collect()
}

fn token_logits(params: &ModelParams, h: &[f64]) -> Vec<f64> {
    params
        .embed()
        .chunks_exact(params.dims().embed)
        .zip(params.bias())
        .map(|(e, b)| dot(e, h) + b)
        .collect()
}

pub fn speaker_logprob(params: &ModelParams, board: &Board, target: usize, utterance: &Utterance) -> Result<f64> {
    check_board(params, board)?;
    check_target(board, target)?;
    check_tokens(params, utterance)?;
    let projection = params.project(&board[target]);
    let tokens = utterance.tokens();
    let total = speaker_states(params, &projection, tokens)
        .iter()
        .zip(tokens)
        .map(|((_, h), &tok)| {
            let logits = token_logits(params, h);
            logits[tok] - log_sum_exp(&logits)
        })
        .sum();
    Ok(total)
}

/// First-step token distribution, exposed for sampling checks.
pub fn speaker_first_step(params: &ModelParams, board: &Board, target: usize) -> Vec<f64> {
    let projection = params.project(&board[target]);
    let h = step_state(params, &projection, &vec![0.0; params.dims().embed]);
    let mut logits = token_logits(params, &h);
    softmax_in_place(&mut logits);
    logits
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Decoding {
    /// Ancestral sampling with logits divided by the temperature.
    Sample { temperature: f64 },
    /// Argmax at every step; ties go to the lowest token id.
    Greedy,
}

pub fn sample_utterance<R: Rng + ?Sized>(
    params: &ModelParams,
    board: &Board,
    target: usize,
    decoding: Decoding,
    eos: TokenId,
    rng: &mut R,
) -> Utterance {
    let dims = params.dims();
    let projection = params.project(&board[target]);
    let mut tokens: Vec<TokenId> = Vec::with_capacity(dims.max_len + 1);
    let mut prefix_sum = vec![0.0; dims.embed];
    loop {
        if tokens.len() == dims.max_len {
            tokens.push(eos);
            break;
        }
        let prefix: Vec<f64> = if tokens.is_empty() {
            vec![0.0; dims.embed]
        } else {
            prefix_sum.iter().map(|s| s / tokens.len() as f64).collect()
        };
        let h = step_state(params, &projection, &prefix);
        let mut logits = token_logits(params, &h);
        let tok = match decoding {
            Decoding::Greedy => {
                let mut best = 0;
                for (i, &l) in logits.iter().enumerate() {
                    if l > logits[best] {
                        best = i;
                    }
                }
                best
            }
            Decoding::Sample { temperature } => {
                logits.iter_mut().for_each(|l| *l /= temperature);
                softmax_in_place(&mut logits);
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut pick = logits.len() - 1;
                for (i, p) in logits.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        pick = i;
                        break;
                    }
                }
                pick
            }
        };
        tokens.push(tok);
        if tok == eos {
            break;
        }
        for (s, e) in prefix_sum.iter_mut().zip(params.embed_row(tok)) {
            *s += e;
        }
    }
    Utterance::from_tokens_unchecked(tokens)
}

/// Gradient of `log P_l(selection | u)` with respect to all parameters.
pub fn grad_log_listener(params: &ModelParams, board: &Board, utterance: &Utterance, selection: usize) -> Result<ModelParams> {
    check_board(params, board)?;
    check_tokens(params, utterance)?;
    check_target(board, selection)?;
    let dims = params.dims();
    let (mut probs, psi, projections) = listener_logits(params, board, utterance);
    softmax_in_place(&mut probs);
    let beta = params.scale();
    let mut grad = ModelParams::zeros(dims);

    // d log P / d logit_t = 1[t = selection] - P_t
    let g: Vec<f64> = probs
        .iter()
        .enumerate()
        .map(|(t, p)| f64::from(u8::from(t == selection)) - p)
        .collect();

    *grad.scale_mut() = g.iter().zip(&projections).map(|(gt, p)| gt * dot(&psi, p)).sum();

    let mut d_psi = vec![0.0; dims.embed];
    for (gt, p) in g.iter().zip(&projections) {
        for (a, pi) in d_psi.iter_mut().zip(p) {
            *a += beta * gt * pi;
        }
    }
    let content = utterance.content();
    if !content.is_empty() {
        let inv = 1.0 / content.len() as f64;
        let embed = grad.embed_mut();
        for &tok in content {
            for (i, a) in d_psi.iter().enumerate() {
                embed[tok * dims.embed + i] += a * inv;
            }
        }
    }

    let proj = grad.proj_mut();
    for (gt, f) in g.iter().zip(board.iter()) {
        for (i, psi_i) in psi.iter().enumerate() {
            let coef = beta * gt * psi_i;
            if coef == 0.0 {
                continue;
            }
            for (k, fk) in f.iter().enumerate() {
                proj[i * dims.features + k] += coef * fk;
            }
        }
    }
    ensure_finite(&grad, "listener gradient")?;
    Ok(grad)
}

/// Gradient of `log P_s(u | target)` with respect to all parameters.
pub fn grad_log_speaker(params: &ModelParams, board: &Board, target: usize, utterance: &Utterance) -> Result<ModelParams> {
    check_board(params, board)?;
    check_target(board, target)?;
    check_tokens(params, utterance)?;
    let dims = params.dims();
    let d = dims.embed;
    let features = &board[target];
    let projection = params.project(features);
    let tokens = utterance.tokens();
    let states = speaker_states(params, &projection, tokens);
    let mut grad = ModelParams::zeros(dims);
    let mut d_proj = vec![0.0; d];

    for (j, ((prefix, h), &tok)) in states.iter().zip(tokens).enumerate() {
        let mut probs = token_logits(params, h);
        softmax_in_place(&mut probs);
        // g_v = 1[v = tok] - pi_v
        let g: Vec<f64> = probs
            .iter()
            .enumerate()
            .map(|(v, p)| f64::from(u8::from(v == tok)) - p)
            .collect();

        let mut d_h = vec![0.0; d];
        {
            let embed = params.embed();
            let g_embed = grad.embed_mut();
            for (v, gv) in g.iter().enumerate() {
                let row = &embed[v * d..(v + 1) * d];
                for i in 0..d {
                    g_embed[v * d + i] += gv * h[i];
                    d_h[i] += gv * row[i];
                }
            }
        }
        for (b, gv) in grad.bias_mut().iter_mut().zip(&g) {
            *b += gv;
        }
        for (a, dh) in d_proj.iter_mut().zip(&d_h) {
            *a += dh;
        }
        if j > 0 {
            let mixer = grad.mixer_mut();
            for (r, dh) in d_h.iter().enumerate() {
                for (c, pc) in prefix.iter().enumerate() {
                    mixer[r * d + c] += dh * pc;
                }
            }
            // d prefix = W_c^T d_h, spread evenly over the j prefix tokens.
            let w = params.mixer();
            let mut d_prefix = vec![0.0; d];
            for (r, dh) in d_h.iter().enumerate() {
                for c in 0..d {
                    d_prefix[c] += w[r * d + c] * dh;
                }
            }
            let inv = 1.0 / j as f64;
            let g_embed = grad.embed_mut();
            for &ptok in &tokens[..j] {
                for c in 0..d {
                    g_embed[ptok * d + c] += d_prefix[c] * inv;
                }
            }
        }
    }

    let proj = grad.proj_mut();
    for (i, a) in d_proj.iter().enumerate() {
        for (k, fk) in features.iter().enumerate() {
            proj[i * dims.features + k] += a * fk;
        }
    }
    ensure_finite(&grad, "speaker gradient")?;
    Ok(grad)
}

fn ensure_finite(grad: &ModelParams, what: &str) -> Result<()> {
    if let Some(i) = grad.data().iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("{what} has a non-finite entry at index {i}")));
    }
    Ok(())
}
