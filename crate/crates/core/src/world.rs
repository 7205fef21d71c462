//! Synthetic shape universe, reference-game contexts and simulated partners.
//!
//! Shapes are tuples of attribute values (one per family) encoded as
//! concatenated one-hot feature vectors. Contexts are built from similarity
//! blocks: each block is anchored by a uniformly drawn shape and filled with
//! shapes drawn in proportion to their cosine similarity to the anchor.

use std::fmt::Write as _;
use std::ops::Deref;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lang::{TokenKind, Utterance, Vocabulary};
use crate::rng;

pub const CONTEXT_SIZE: usize = 10;
pub const DEFAULT_BLOCKS: [usize; 3] = [3, 3, 4];
const SIMILARITY_EPS: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Family {
    pub name: String,
    pub labels: Vec<String>,
}

impl Family {
    pub fn cardinality(&self) -> usize {
        self.labels.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSchema {
    families: Vec<Family>,
}

impl Default for AttributeSchema {
    fn default() -> Self {
        let family = |name: &str, labels: &[&str]| Family {
            name: name.to_string(),
            labels: labels.iter().map(|s| s.to_string()).collect(),
        };
        AttributeSchema {
            families: vec![
                family(
                    "KIND",
                    &["circle", "square", "triangle", "star", "cross", "heart", "moon", "arrow"],
                ),
                family("ORIENT", &["up", "right", "down", "left"]),
                family("DETAIL", &["dotted", "striped", "solid", "hollow", "spiky", "wavy"]),
            ],
        }
    }
}

impl AttributeSchema {
    /// Schema with generated value labels (`<family><i>`, lowercased).
    pub fn from_cardinalities(families: &[(&str, usize)]) -> Result<Self> {
        let families = families
            .iter()
            .map(|&(name, card)| Family {
                name: name.to_string(),
                labels: (0..card).map(|i| format!("{}{i}", name.to_lowercase())).collect(),
            })
            .collect();
        Self::from_families(families)
    }

    pub fn from_families(families: Vec<Family>) -> Result<Self> {
        if families.is_empty() {
            return Err(invalid("schema needs at least one family"));
        }
        for (i, f) in families.iter().enumerate() {
            if f.cardinality() < 2 {
                return Err(invalid(format!("family {} has cardinality < 2", f.name)));
            }
            if families[..i].iter().any(|g| g.name == f.name) {
                return Err(invalid(format!("duplicate family name {}", f.name)));
            }
        }
        let mut labels: Vec<&String> = families.iter().flat_map(|f| &f.labels).collect();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("attribute value labels must be unique"));
        }
        Ok(AttributeSchema { families })
    }

    pub fn families(&self) -> &[Family] {
        &self.families
    }

    /// Total one-hot dimension.
    pub fn dim(&self) -> usize {
        self.families.iter().map(Family::cardinality).sum()
    }

    pub fn combinations(&self) -> usize {
        self.families
            .iter()
            .try_fold(1usize, |acc, f| acc.checked_mul(f.cardinality()))
            .unwrap_or(usize::MAX)
    }

    pub fn family_index(&self, name: &str) -> Option<usize> {
        self.families.iter().position(|f| f.name == name)
    }

    pub fn features(&self, attributes: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        let mut offset = 0;
        for (f, &v) in self.families.iter().zip(attributes) {
            out[offset + v] = 1.0;
            offset += f.cardinality();
        }
        out
    }

    fn decode(&self, mut code: usize) -> Vec<usize> {
        self.families
            .iter()
            .map(|f| {
                let v = code % f.cardinality();
                code /= f.cardinality();
                v
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shape {
    pub id: usize,
    pub attributes: Vec<usize>,
    pub features: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeLibrary {
    pub schema: AttributeSchema,
    shapes: Vec<Shape>,
}

impl ShapeLibrary {
    /// Samples attribute tuples without replacement until the tuple space is
    /// exhausted, then with replacement.
    pub fn generate(schema: AttributeSchema, size: usize, seed: u64) -> Result<Self> {
        if size < CONTEXT_SIZE {
            return Err(invalid(format!("library size {size} < {CONTEXT_SIZE}")));
        }
        let mut rng = rng::stream(&[seed, rng::label("library")]);
        let combos = schema.combinations();
        let distinct = size.min(combos);
        let mut codes: Vec<usize> = index::sample(&mut rng, combos, distinct).into_vec();
        codes.extend((distinct..size).map(|_| rng.gen_range(0..combos)));
        let shapes = codes
            .into_iter()
            .enumerate()
            .map(|(id, code)| {
                let attributes = schema.decode(code);
                let features = schema.features(&attributes);
                Shape { id, attributes, features }
            })
            .collect();
        Ok(ShapeLibrary { schema, shapes })
    }

    pub fn from_shapes(schema: AttributeSchema, attributes: Vec<Vec<usize>>) -> Result<Self> {
        let mut shapes = Vec::with_capacity(attributes.len());
        for (id, attrs) in attributes.into_iter().enumerate() {
            if attrs.len() != schema.families().len()
                || attrs.iter().zip(schema.families()).any(|(&v, f)| v >= f.cardinality())
            {
                return Err(invalid(format!("shape {id} does not fit the schema")));
            }
            let features = schema.features(&attrs);
            shapes.push(Shape { id, attributes: attrs, features });
        }
        Ok(ShapeLibrary { schema, shapes })
    }

    pub fn shapes(&self) -> &[Shape] {
        &self.shapes
    }

    pub fn len(&self) -> usize {
        self.shapes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shapes.is_empty()
    }

    pub fn shape(&self, id: usize) -> &Shape {
        &self.shapes[id]
    }

    /// Feature vectors of a context's shapes, in canonical slot order.
    pub fn board(&self, context: &Context) -> Board {
        Board(
            context
                .shape_ids
                .iter()
                .map(|&id| self.shapes[id].features.clone())
                .collect(),
        )
    }

    /// Plain-text table: `# family` header lines, then `id v0 v1 ...` per shape.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for f in self.schema.families() {
            let _ = writeln!(out, "# family {} {}", f.name, f.labels.join(" "));
        }
        for s in &self.shapes {
            let attrs: Vec<String> = s.attributes.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{} {}", s.id, attrs.join(" "));
        }
        out
    }

    pub fn from_table(text: &str) -> Result<Self> {
        let mut families = Vec::new();
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let parse_err = |message: String| Error::Parse { line: i + 1, message };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut words = rest.split_whitespace();
                if words.next() == Some("family") {
                    let name = words
                        .next()
                        .ok_or_else(|| parse_err("family line without a name".into()))?;
                    families.push(Family {
                        name: name.to_string(),
                        labels: words.map(str::to_string).collect(),
                    });
                }
                continue;
            }
            let nums: Vec<usize> = line
                .split_whitespace()
                .map(|w| w.parse().map_err(|e| parse_err(format!("{w}: {e}"))))
                .collect::<Result<_>>()?;
            if nums.first() != Some(&rows.len()) {
                return Err(parse_err("shape ids must be contiguous from 0".into()));
            }
            rows.push(nums[1..].to_vec());
        }
        let schema = AttributeSchema::from_families(families)?;
        Self::from_shapes(schema, rows)
    }
}

/// Shape feature vectors of one context in canonical slot order.
#[derive(Clone, Debug, PartialEq)]
pub struct Board(pub Vec<Vec<f64>>);

impl Deref for Board {
    type Target = [Vec<f64>];

    fn deref(&self) -> &Self::Target {
        &self.0
    }
}

/// Cosine similarity of the two feature vectors.
pub fn similarity(a: &Shape, b: &Shape) -> Result<f64> {
    if a.features.len() != b.features.len() {
        return Err(invalid("shapes come from different schemas"));
    }
    Ok(cosine(&a.features, &b.features))
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na * nb).sqrt()
}

/// An ordered game board plus the order in which each player sees it.
///
/// `speaker_perm[p]` is the canonical slot shown at view position `p`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Context {
    pub shape_ids: Vec<usize>,
    pub speaker_perm: Vec<usize>,
    pub listener_perm: Vec<usize>,
    pub block_spec: Vec<usize>,
}

impl Context {
    pub fn len(&self) -> usize {
        self.shape_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shape_ids.is_empty()
    }

    /// Context with identity views, for tests and hand-built boards.
    pub fn fixed(shape_ids: Vec<usize>) -> Self {
        let n = shape_ids.len();
        Context {
            shape_ids,
            speaker_perm: (0..n).collect(),
            listener_perm: (0..n).collect(),
            block_spec: vec![n],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.shape_ids.len();
        let mut ids = self.shape_ids.clone();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("context shape ids must be distinct"));
        }
        for perm in [&self.speaker_perm, &self.listener_perm] {
            let mut p = perm.clone();
            p.sort_unstable();
            if p != (0..n).collect::<Vec<_>>() {
                return Err(invalid("view permutation is not a bijection"));
            }
        }
        if self.block_spec.iter().sum::<usize>() != n {
            return Err(invalid("block sizes do not sum to the context size"));
        }
        Ok(())
    }

    pub fn speaker_view_of(&self, slot: usize) -> usize {
        self.speaker_perm.iter().position(|&s| s == slot).expect("bijection")
    }

    pub fn listener_view_of(&self, slot: usize) -> usize {
        self.listener_perm.iter().position(|&s| s == slot).expect("bijection")
    }
}

pub fn build_context(library: &ShapeLibrary, seed: u64) -> Result<Context> {
    let mut rng = rng::stream(&[seed, rng::label("context")]);
    build_context_with(library, &DEFAULT_BLOCKS, &mut rng)
}

pub fn build_context_with<R: Rng + ?Sized>(
    library: &ShapeLibrary,
    blocks: &[usize],
    rng: &mut R,
) -> Result<Context> {
    let n: usize = blocks.iter().sum();
    if blocks.contains(&0) {
        return Err(invalid("block sizes must be positive"));
    }
    if library.len() < n {
        return Err(invalid(format!("library of {} shapes cannot fill a context of {n}", library.len())));
    }
    let mut taken = vec![false; library.len()];
    let mut ids = Vec::with_capacity(n);
    for &size in blocks {
        let free: Vec<usize> = (0..library.len()).filter(|&i| !taken[i]).collect();
        let anchor = *free.choose(rng).expect("library larger than context");
        taken[anchor] = true;
        ids.push(anchor);
        for _ in 1..size {
            let pool: Vec<usize> = (0..library.len()).filter(|&i| !taken[i]).collect();
            let weights = pool.iter().map(|&i| {
                cosine(&library.shape(anchor).features, &library.shape(i).features).max(0.0)
                    + SIMILARITY_EPS
            });
            let dist = WeightedIndex::new(weights).expect("weights are positive");
            let pick = pool[dist.sample(rng)];
            taken[pick] = true;
            ids.push(pick);
        }
    }
    let mut speaker_perm: Vec<usize> = (0..n).collect();
    speaker_perm.shuffle(rng);
    let mut listener_perm: Vec<usize> = (0..n).collect();
    listener_perm.shuffle(rng);
    Ok(Context {
        shape_ids: ids,
        speaker_perm,
        listener_perm,
        block_spec: blocks.to_vec(),
    })
}

/// Error rates of the simulated partners.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartnerNoise {
    /// Probability of omitting one needed attribute token (needs at least two).
    pub speaker_drop: f64,
    /// Probability of replacing one content token by a random content token.
    pub speaker_swap: f64,
    /// Probability of discarding the best candidate and picking among the rest.
    pub listener_err: f64,
    /// Probability of prefixing the description with a filler word.
    pub filler_prefix: f64,
}

impl PartnerNoise {
    pub const NONE: PartnerNoise = PartnerNoise {
        speaker_drop: 0.0,
        speaker_swap: 0.0,
        listener_err: 0.0,
        filler_prefix: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("speaker_drop", self.speaker_drop),
            ("speaker_swap", self.speaker_swap),
            ("listener_err", self.listener_err),
            ("filler_prefix", self.filler_prefix),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid(format!("{name} = {p} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

impl Default for PartnerNoise {
    fn default() -> Self {
        PartnerNoise {
            speaker_drop: 0.08,
            speaker_swap: 0.04,
            listener_err: 0.06,
            filler_prefix: 0.25,
        }
    }
}

/// Families needed to single out `target`, chosen greedily by how many
/// remaining distractors each eliminates (ties go to the earlier family).
/// Returns `None` when some distractor shares every attribute.
pub fn distinguishing_families(library: &ShapeLibrary, context: &Context, target: usize) -> Option<Vec<usize>> {
    let attrs = |slot: usize| &library.shape(context.shape_ids[slot]).attributes;
    let target_attrs = attrs(target);
    let families = library.schema.families().len();
    let mut remaining: Vec<usize> = (0..context.len()).filter(|&s| s != target).collect();
    let mut chosen = Vec::new();
    while !remaining.is_empty() {
        let best = (0..families)
            .filter(|f| !chosen.contains(f))
            .map(|f| {
                let hits = remaining.iter().filter(|&&s| attrs(s)[f] != target_attrs[f]).count();
                (f, hits)
            })
            .fold(None, |best: Option<(usize, usize)>, cand| match best {
                Some(b) if b.1 >= cand.1 => Some(b),
                _ => Some(cand),
            });
        match best {
            Some((f, hits)) if hits > 0 => {
                chosen.push(f);
                remaining.retain(|&s| attrs(s)[f] == target_attrs[f]);
            }
            _ => return None,
        }
    }
    chosen.sort_unstable();
    Some(chosen)
}

/// Simulated human speaker.
pub fn oracle_speak<R: Rng + ?Sized>(
    library: &ShapeLibrary,
    context: &Context,
    target: usize,
    vocab: &Vocabulary,
    noise: &PartnerNoise,
    rng: &mut R,
) -> Utterance {
    let target_attrs = &library.shape(context.shape_ids[target]).attributes;
    let families = distinguishing_families(library, context, target)
        .unwrap_or_else(|| (0..library.schema.families().len()).collect());
    let mut content: Vec<usize> = families
        .iter()
        .map(|&f| vocab.content_token(f, target_attrs[f]))
        .collect();

    if content.len() >= 2 && rng.gen_bool(noise.speaker_drop) {
        let i = rng.gen_range(0..content.len());
        content.remove(i);
    }
    if !content.is_empty() && rng.gen_bool(noise.speaker_swap) {
        let i = rng.gen_range(0..content.len());
        content[i] = rng.gen_range(0..vocab.content_len());
    }
    if vocab.filler_count() > 0 && rng.gen_bool(noise.filler_prefix) {
        let filler = vocab.filler(rng.gen_range(0..vocab.filler_count()));
        content.insert(0, filler);
    }
    Utterance::new(content, vocab)
}

/// Number of content tokens in `utterance` that name an attribute value of each slot.
pub fn match_scores(library: &ShapeLibrary, context: &Context, utterance: &Utterance, vocab: &Vocabulary) -> Vec<usize> {
    context
        .shape_ids
        .iter()
        .map(|&id| {
            let attrs = &library.shape(id).attributes;
            utterance
                .content()
                .iter()
                .filter(|&&t| match vocab.kind(t) {
                    TokenKind::Content { family, value } => attrs[family] == value,
                    _ => false,
                })
                .count()
        })
        .collect()
}

/// Simulated human listener.
pub fn oracle_listen<R: Rng + ?Sized>(
    library: &ShapeLibrary,
    context: &Context,
    utterance: &Utterance,
    vocab: &Vocabulary,
    noise: &PartnerNoise,
    rng: &mut R,
) -> usize {
    let scores = match_scores(library, context, utterance, vocab);
    let best = *scores.iter().max().expect("non-empty context");
    let tied: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] == best).collect();
    let pick = *tied.choose(rng).expect("at least one maximum");
    if rng.gen_bool(noise.listener_err) {
        let others: Vec<usize> = (0..scores.len()).filter(|&i| i != pick).collect();
        return *others.choose(rng).unwrap_or(&pick);
    }
    pick
}
