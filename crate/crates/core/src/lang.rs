//! Token vocabulary and utterances.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::world::AttributeSchema;

pub type TokenId = usize;

const DEFAULT_FILLERS: [&str; 4] = ["the", "a", "shape", "one"];
pub const UNK_SURFACE: &str = "<unk>";
pub const EOS_SURFACE: &str = "</s>";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TokenKind {
    Content { family: usize, value: usize },
    Filler,
    Unk,
    Eos,
}

/// Content tokens (one per attribute value, in family order), then fillers,
/// then UNK, then EOS. EOS is always the last id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    surfaces: Vec<String>,
    family_offsets: Vec<usize>,
    content_len: usize,
    fillers: usize,
}

impl Vocabulary {
    pub fn new(schema: &AttributeSchema, fillers: usize) -> Self {
        let mut surfaces = Vec::new();
        let mut family_offsets = Vec::new();
        for family in schema.families() {
            family_offsets.push(surfaces.len());
            surfaces.extend(family.labels.iter().cloned());
        }
        let content_len = surfaces.len();
        for i in 0..fillers {
            surfaces.push(match DEFAULT_FILLERS.get(i) {
                Some(s) => s.to_string(),
                None => format!("filler{i}"),
            });
        }
        surfaces.push(UNK_SURFACE.to_string());
        surfaces.push(EOS_SURFACE.to_string());
        Vocabulary {
            surfaces,
            family_offsets,
            content_len,
            fillers,
        }
    }

    pub fn len(&self) -> usize {
        self.surfaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surfaces.is_empty()
    }

    pub fn content_len(&self) -> usize {
        self.content_len
    }

    pub fn filler_count(&self) -> usize {
        self.fillers
    }

    pub fn eos(&self) -> TokenId {
        self.surfaces.len() - 1
    }

    pub fn unk(&self) -> TokenId {
        self.surfaces.len() - 2
    }

    pub fn filler(&self, i: usize) -> TokenId {
        assert!(i < self.fillers);
        self.content_len + i
    }

    pub fn content_token(&self, family: usize, value: usize) -> TokenId {
        self.family_offsets[family] + value
    }

    pub fn kind(&self, token: TokenId) -> TokenKind {
        if token == self.eos() {
            TokenKind::Eos
        } else if token == self.unk() {
            TokenKind::Unk
        } else if token >= self.content_len {
            TokenKind::Filler
        } else {
            let family = self.family_offsets.partition_point(|&o| o <= token) - 1;
            TokenKind::Content {
                family,
                value: token - self.family_offsets[family],
            }
        }
    }

    pub fn surface(&self, token: TokenId) -> &str {
        &self.surfaces[token]
    }

    pub fn surfaces(&self) -> &[String] {
        &self.surfaces
    }

    /// Surfaces of the content tokens of one attribute family.
    pub fn family_surfaces(&self, family: usize) -> Vec<String> {
        let start = self.family_offsets[family];
        let end = self
            .family_offsets
            .get(family + 1)
            .copied()
            .unwrap_or(self.content_len);
        self.surfaces[start..end].to_vec()
    }

    /// Lowercases, splits on whitespace, and maps each word to a token by
    /// exact surface match. Unknown words (and the EOS surface) become UNK.
    pub fn tokenize(&self, text: &str) -> Vec<TokenId> {
        let lookup: HashMap<&str, TokenId> = self
            .surfaces
            .iter()
            .enumerate()
            .take(self.eos())
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        text.to_lowercase()
            .split_whitespace()
            .map(|w| lookup.get(w).copied().unwrap_or(self.unk()))
            .collect()
    }

    pub fn render(&self, utterance: &Utterance) -> String {
        utterance
            .content()
            .iter()
            .map(|&t| self.surface(t))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Token sequence terminated by exactly one EOS.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Utterance {
    tokens: Vec<TokenId>,
}

impl Utterance {
    pub fn new(mut content: Vec<TokenId>, vocab: &Vocabulary) -> Self {
        content.push(vocab.eos());
        Utterance { tokens: content }
    }

    /// Wraps a full token sequence (including the trailing EOS) after checking it.
    pub fn from_tokens(tokens: Vec<TokenId>, vocab: &Vocabulary, max_len: usize) -> Result<Self> {
        let u = Utterance { tokens };
        u.validate(vocab, max_len)?;
        Ok(u)
    }

    /// Wraps tokens produced by a decoder that already guarantees the invariants.
    pub fn from_tokens_unchecked(tokens: Vec<TokenId>) -> Self {
        Utterance { tokens }
    }

    pub fn validate(&self, vocab: &Vocabulary, max_len: usize) -> Result<()> {
        let eos = vocab.eos();
        match self.tokens.last() {
            Some(&t) if t == eos => {}
            _ => return Err(invalid("utterance must end with EOS")),
        }
        if self.tokens.iter().filter(|&&t| t == eos).count() != 1 {
            return Err(invalid("EOS must appear exactly once"));
        }
        if let Some(&t) = self.tokens.iter().find(|&&t| t >= vocab.len()) {
            return Err(invalid(format!("token id {t} out of range")));
        }
        if self.tokens.len() > max_len + 1 {
            return Err(invalid(format!(
                "utterance has {} content tokens, limit {max_len}",
                self.tokens.len() - 1
            )));
        }
        Ok(())
    }

    pub fn tokens(&self) -> &[TokenId] {
        &self.tokens
    }

    /// Tokens without the trailing EOS.
    pub fn content(&self) -> &[TokenId] {
        &self.tokens[..self.tokens.len().saturating_sub(1)]
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}
