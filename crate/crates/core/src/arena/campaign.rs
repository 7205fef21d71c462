//! Round-based deployment: interact, share, retrain, redeploy.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::CampaignConfig;
use super::game::{bootstrap_seed_data, draw_game, play_game, Agent, GameSetup, GameStreams, Lab};
use super::variant::{VariantSpec, CONTROL, FULL};
use crate::agent::{checkpoint, ModelParams};
use crate::analysis::{
    compute_metrics, regenerate_eval_utterances, sample_pairs, EvalPair, EvalRecord, LogHeader, LogLine, MetricTable, OfflineRecord,
    LOG_FORMAT,
};
use crate::error::{invalid, Result};
use crate::learning::{share_data, train, Example, InteractionRecord, Provenance, Role, RoundDatasets, TrainReport, ValidationGame};
use crate::rng::{self, derive_seed, label};
use crate::world::{oracle_speak, AttributeSchema, ShapeLibrary};

/// Sizes of one role's training set, by provenance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSizes {
    pub native: usize,
    pub shared: usize,
    pub seed: usize,
    pub total: usize,
}

impl DatasetSizes {
    fn of(data: &[InteractionRecord]) -> Self {
        let count = |p| data.iter().filter(|r| r.provenance == p).count();
        DatasetSizes {
            native: count(Provenance::Native),
            shared: count(Provenance::Shared),
            seed: count(Provenance::Seed),
            total: data.len(),
        }
    }
}

/// One system in one round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantRoundLog {
    pub variant: String,
    pub deployed_checkpoint: Option<String>,
    /// This round's games, comprehension first, each in game order.
    pub records: Vec<InteractionRecord>,
    /// Training sets assembled after the round (model variants only).
    pub listener_data: Option<DatasetSizes>,
    pub speaker_data: Option<DatasetSizes>,
    pub train: Option<TrainReport>,
    pub trained_checkpoint: Option<String>,
}

impl VariantRoundLog {
    pub fn role_records(&self, role: Role) -> impl Iterator<Item = &InteractionRecord> {
        self.records.iter().filter(move |r| r.role == role)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub round: u32,
    pub interactions_per_role: usize,
    pub variants: Vec<VariantRoundLog>,
    pub eval_pairs: Vec<EvalPair>,
    pub eval: Vec<EvalRecord>,
}

impl RoundLog {
    pub fn variant(&self, name: &str) -> Option<&VariantRoundLog> {
        self.variants.iter().find(|v| v.variant == name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedLog {
    pub attempts: usize,
    pub seed_games: usize,
    pub validation_games: usize,
    /// One seed-trained model per validation listener strategy.
    pub initial: Vec<InitialModel>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialModel {
    pub listener_strategy: String,
    pub checkpoint: String,
    pub train: TrainReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignLog {
    pub config: CampaignConfig,
    pub schema: AttributeSchema,
    pub vocabulary: Vec<String>,
    pub marked_words: Vec<String>,
    pub seed: SeedLog,
    pub rounds: Vec<RoundLog>,
    /// Comprehension of post-campaign models on the final-round control games.
    pub offline: Vec<OfflineRecord>,
    pub metrics: MetricTable,
}

impl CampaignLog {
    pub fn header(&self) -> LogHeader {
        LogHeader {
            format: LOG_FORMAT.to_string(),
            master_seed: self.config.master_seed,
            rounds: self.config.rounds as u32,
            bootstrap_resamples: self.config.bootstrap_resamples,
            variants: self.config.variants.iter().map(|v| v.name.clone()).collect(),
            marked_words: self.marked_words.clone(),
            corpus_divergence: crate::analysis::divergence::UnigramJsd::NAME.to_string(),
            note: "corpus_similarity is 1 - JSD of add-one smoothed unigram distributions, not MAUVE".to_string(),
        }
    }

    /// The JSONL view: header, every interaction, every regenerated description,
    /// every offline outcome.
    pub fn lines(&self) -> Vec<LogLine> {
        let words = |r: &InteractionRecord| match &r.text {
            Some(t) => crate::analysis::divergence::words(t),
            None => r.utterance.content().iter().map(|&t| self.vocabulary[t].clone()).collect(),
        };
        let mut lines = vec![LogLine::Header(self.header())];
        for round in &self.rounds {
            for v in &round.variants {
                lines.extend(v.records.iter().map(|r| LogLine::Interaction {
                    record: r.clone(),
                    words: words(r),
                }));
            }
            lines.extend(round.eval.iter().cloned().map(LogLine::Eval));
        }
        lines.extend(self.offline.iter().cloned().map(LogLine::Offline));
        lines
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// The log together with every parameter snapshot it names.
#[derive(Clone, Debug)]
pub struct CampaignOutcome {
    pub log: CampaignLog,
    pub checkpoints: BTreeMap<String, Arc<ModelParams>>,
}

/// Builds the shape library, vocabulary and model dimensions for a config.
pub fn lab_from_config(config: &CampaignConfig) -> Result<Lab> {
    let library = ShapeLibrary::generate(
        AttributeSchema::default(),
        config.library_size,
        derive_seed(&[config.master_seed, label("library")]),
    )?;
    Ok(Lab::new(library, config.fillers, config.embed_dim, config.max_len, config.noise, config.hyper.clone()))
}

/// Marked words of the config, defaulting to the ORIENT family surfaces.
pub fn marked_words(config: &CampaignConfig, lab: &Lab) -> Vec<String> {
    if !config.marked_words.is_empty() {
        return config.marked_words.clone();
    }
    lab.library
        .schema
        .family_index("ORIENT")
        .map(|f| lab.vocab.family_surfaces(f))
        .unwrap_or_default()
}

/// Seed of game `game` in `role` of `round`. The system is deliberately not an
/// input, so every system meets the same contexts, targets and partner noise.
pub fn game_seed(master: u64, round: u32, role: Role, game: u64) -> u64 {
    derive_seed(&[master, label("game"), u64::from(round), role as u64, game])
}

/// Plays `per_role` games in each role for one system.
pub fn play_arm(lab: &Lab, agent: Option<&Agent>, name: &str, round: u32, per_role: usize, master: u64) -> Result<Vec<InteractionRecord>> {
    let mut records = Vec::with_capacity(2 * per_role);
    for role in Role::ALL {
        let played: Vec<InteractionRecord> = (0..per_role as u64)
            .into_par_iter()
            .map(|game| {
                let mut streams = GameStreams::new(game_seed(master, round, role, game));
                let (context, target) = draw_game(&lab.library, &mut streams.context)?;
                let setup = GameSetup {
                    round,
                    game,
                    variant: name,
                    role,
                    context,
                    target,
                };
                play_game(lab, agent, setup, &mut streams)
            })
            .collect::<Result<_>>()?;
        records.extend(played);
    }
    Ok(records)
}

/// One deployed system in a round.
pub struct Deployment<'a> {
    pub name: &'a str,
    pub agent: Option<Agent>,
}

/// Plays every deployment's games for `round`.
pub fn run_round(lab: &Lab, deployments: &[Deployment<'_>], round: u32, per_role: usize, master: u64) -> Result<Vec<Vec<InteractionRecord>>> {
    deployments
        .iter()
        .map(|d| play_arm(lab, d.agent.as_ref(), d.name, round, per_role, master))
        .collect()
}

/// Training sets of a system from its seed records and all native records so far.
pub fn assemble_training_data(seed: &RoundDatasets, native: &RoundDatasets, data_sharing: bool) -> RoundDatasets {
    let (listener, speaker) = if data_sharing {
        share_data(&native.listener, &native.speaker)
    } else {
        (native.listener.clone(), native.speaker.clone())
    };
    let mut out = seed.clone();
    out.extend(RoundDatasets { listener, speaker });
    out
}

fn examples(records: &[InteractionRecord], library: &ShapeLibrary) -> Vec<Example> {
    records.iter().map(|r| Example::from_record(r, library)).collect()
}

fn train_on(
    lab: &Lab,
    initial: &ModelParams,
    data: &RoundDatasets,
    validation: &[ValidationGame],
    listener_strategy: &str,
    seed: u64,
) -> Result<(ModelParams, TrainReport)> {
    let listener = lab.registry.listener(listener_strategy)?;
    train(
        initial,
        &examples(&data.listener, &lab.library),
        &examples(&data.speaker, &lab.library),
        validation,
        listener.as_ref(),
        &lab.hyper,
        seed,
    )
}

/// Runs the whole campaign.
pub fn run_campaign(config: &CampaignConfig) -> Result<CampaignOutcome> {
    config.validate()?;
    let lab = lab_from_config(config)?;
    let master = config.master_seed;
    let marked = marked_words(config, &lab);
    let variants: &[VariantSpec] = &config.variants;
    for v in variants.iter().filter(|v| v.has_model) {
        lab.registry.listener(&v.listener_strategy)?;
        lab.registry.speaker(&v.speaker_strategy)?;
    }
    let mut checkpoints: BTreeMap<String, Arc<ModelParams>> = BTreeMap::new();
    let mut keep = |p: ModelParams| {
        let p = Arc::new(p);
        let id = checkpoint::checkpoint_id(&p);
        checkpoints.insert(id.clone(), p.clone());
        (id, p)
    };

    let seed_data = bootstrap_seed_data(&lab, config.seed_games, config.validation_games, derive_seed(&[master, label("seed")]))?;
    let validation = seed_data.validation_games(&lab.library);
    let seed_sets = RoundDatasets {
        listener: seed_data.listener.clone(),
        speaker: seed_data.speaker.clone(),
    };
    let initial = ModelParams::init(lab.dims.clone(), derive_seed(&[master, label("init")]));
    // Model selection depends on the listener strategy, so variants sharing
    // one share their seed-trained model.
    let strategies: BTreeSet<&str> = variants.iter().filter(|v| v.has_model).map(|v| v.listener_strategy.as_str()).collect();
    let mut initial_models = Vec::new();
    let mut by_strategy: BTreeMap<&str, Arc<ModelParams>> = BTreeMap::new();
    for strategy in strategies {
        let (params, report) = train_on(&lab, &initial, &seed_sets, &validation, strategy, derive_seed(&[master, label("train"), 0]))?;
        let (id, params) = keep(params);
        log::info!("initial model {id} ({strategy}): validation accuracy {:.3}", report.best_accuracy);
        by_strategy.insert(strategy, params);
        initial_models.push(InitialModel {
            listener_strategy: strategy.to_string(),
            checkpoint: id,
            train: report,
        });
    }

    let mut deployed: BTreeMap<&str, Arc<ModelParams>> = variants
        .iter()
        .filter(|v| v.has_model)
        .map(|v| (v.name.as_str(), by_strategy[v.listener_strategy.as_str()].clone()))
        .collect();
    let first_full = deployed.get(FULL).cloned();
    let mut native: BTreeMap<&str, RoundDatasets> = BTreeMap::new();
    let mut rounds = Vec::with_capacity(config.rounds);
    let mut offline = Vec::new();
    let control_spec = variants.iter().find(|v| v.name == FULL).map(|v| VariantSpec {
        name: CONTROL.to_string(),
        ..v.clone()
    });

    for round in 1..=config.rounds as u32 {
        let last = round as usize == config.rounds;
        let per_role = config.interactions(round as usize);
        let mut deployments = Vec::new();
        for v in variants {
            let agent = match deployed.get(v.name.as_str()) {
                Some(p) => Some(Agent::new(p.clone(), v, &lab.registry)?),
                None if v.has_model => return Err(invalid(format!("no checkpoint for variant '{}'", v.name))),
                None => None,
            };
            deployments.push(Deployment { name: &v.name, agent });
        }
        let control = match (&control_spec, &first_full, last && config.control_redeploy_final_round) {
            (Some(spec), Some(params), true) => Some(Agent::new(params.clone(), spec, &lab.registry)?),
            _ => None,
        };
        if let Some(agent) = control {
            deployments.push(Deployment { name: CONTROL, agent: Some(agent) });
        }
        let played = run_round(&lab, &deployments, round, per_role, master)?;

        let (eval_pairs, eval) = evaluate_language(&lab, config, variants, &deployments, &played, round)?;

        let train_now = !last || config.offline_extra_round;
        type Trained = (Option<(ModelParams, TrainReport)>, DatasetSizes, DatasetSizes);
        let trained: Vec<Option<Trained>> = variants
            .par_iter()
            .zip(played.par_iter())
            .map(|(v, records)| {
                if !v.has_model {
                    return Ok(None);
                }
                let mut so_far = native.get(v.name.as_str()).cloned().unwrap_or_default();
                so_far.extend(RoundDatasets {
                    listener: records.iter().filter(|r| r.role == Role::Listener).cloned().collect(),
                    speaker: records.iter().filter(|r| r.role == Role::Speaker).cloned().collect(),
                });
                let data = assemble_training_data(&seed_sets, &so_far, v.data_sharing);
                let sizes = (DatasetSizes::of(&data.listener), DatasetSizes::of(&data.speaker));
                let model = if train_now {
                    let train_seed = derive_seed(&[master, label("train"), u64::from(round)]);
                    Some(train_on(&lab, &initial, &data, &validation, &v.listener_strategy, train_seed)?)
                } else {
                    None
                };
                Ok(Some((model, sizes.0, sizes.1)))
            })
            .collect::<Result<_>>()?;

        let mut logs = Vec::with_capacity(deployments.len());
        for (i, (d, records)) in deployments.iter().zip(played).enumerate() {
            let mut entry = VariantRoundLog {
                variant: d.name.to_string(),
                deployed_checkpoint: d.agent.as_ref().map(|a| a.checkpoint.clone()),
                records,
                listener_data: None,
                speaker_data: None,
                train: None,
                trained_checkpoint: None,
            };
            if let Some(Some((model, l, s))) = trained.get(i).cloned() {
                entry.listener_data = Some(l);
                entry.speaker_data = Some(s);
                if let Some((params, report)) = model {
                    let (id, p) = keep(params);
                    log::info!("round {round} {}: trained {id}, validation accuracy {:.3}", d.name, report.best_accuracy);
                    entry.train = Some(report);
                    entry.trained_checkpoint = Some(id);
                    deployed.insert(variants[i].name.as_str(), p);
                }
                let n = native.entry(variants[i].name.as_str()).or_default();
                n.extend(RoundDatasets {
                    listener: entry.role_records(Role::Listener).cloned().collect(),
                    speaker: entry.role_records(Role::Speaker).cloned().collect(),
                });
            }
            logs.push(entry);
        }

        if last && config.offline_extra_round {
            if let Some(control_log) = logs.iter().find(|l| l.variant == CONTROL) {
                for v in variants.iter().filter(|v| v.has_model) {
                    let params = &deployed[v.name.as_str()];
                    let listener = lab.registry.listener(&v.listener_strategy)?;
                    for r in control_log.role_records(Role::Listener) {
                        let board = lab.library.board(&r.context);
                        let (pick, _) = listener.select(params, &board, &r.utterance, &lab.hyper)?;
                        offline.push(OfflineRecord {
                            round: round + 1,
                            system: v.name.clone(),
                            game: r.game,
                            success: pick == r.target,
                        });
                    }
                }
            }
        }

        rounds.push(RoundLog {
            round,
            interactions_per_role: per_role,
            variants: logs,
            eval_pairs,
            eval,
        });
    }

    let mut log = CampaignLog {
        config: config.clone(),
        schema: lab.library.schema.clone(),
        vocabulary: lab.vocab.surfaces().to_vec(),
        marked_words: marked,
        seed: SeedLog {
            attempts: seed_data.attempts,
            seed_games: seed_data.listener.len(),
            validation_games: seed_data.validation.len(),
            initial: initial_models,
        },
        rounds,
        offline,
        metrics: MetricTable::default(),
    };
    log.metrics = compute_metrics(&log.lines(), None)?;
    Ok(CampaignOutcome { log, checkpoints })
}

/// Samples this round's evaluation pairs from partner-partner games and
/// regenerates a description for each with every system.
fn evaluate_language(
    lab: &Lab,
    config: &CampaignConfig,
    variants: &[VariantSpec],
    deployments: &[Deployment<'_>],
    played: &[Vec<InteractionRecord>],
    round: u32,
) -> Result<(Vec<EvalPair>, Vec<EvalRecord>)> {
    let master = config.master_seed;
    let Some(human) = variants.iter().position(|v| !v.has_model) else {
        return Ok((Vec::new(), Vec::new()));
    };
    let pool: Vec<EvalPair> = played[human]
        .iter()
        .map(|r| EvalPair {
            context: r.context.clone(),
            target: r.target,
        })
        .collect();
    let pairs = sample_pairs(&pool, config.eval_pairs, &mut rng::stream(&[master, label("eval-pairs"), u64::from(round)]));
    let eval_seed = derive_seed(&[master, label("eval"), u64::from(round)]);
    let mut out = Vec::new();
    for d in deployments.iter().take(variants.len()) {
        let utterances = match &d.agent {
            Some(agent) => regenerate_eval_utterances(&agent.params, agent.speaker.as_ref(), &lab.library, &pairs, &lab.hyper, lab.vocab.eos(), eval_seed)?,
            None => pairs
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let mut rng = rng::stream(&[eval_seed, i as u64]);
                    oracle_speak(&lab.library, &p.context, p.target, &lab.vocab, &lab.noise, &mut rng)
                })
                .collect(),
        };
        out.extend(pairs.iter().zip(utterances).enumerate().map(|(i, (p, u))| EvalRecord {
            round,
            system: d.name.to_string(),
            pair: i,
            shape_id: p.shape_id(),
            words: u.content().iter().map(|&t| lab.vocab.surface(t).to_string()).collect(),
            utterance: u,
        }));
    }
    Ok((pairs, out))
}

/// Words of the configured marked set, for analysis overrides.
pub fn word_set(words: &[String]) -> BTreeSet<String> {
    words.iter().cloned().collect()
}
