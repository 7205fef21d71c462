//! HTTP service for live games between people and deployed checkpoints.
//!
//! Each session alternates the player between speaker and listener blocks on
//! a shared context. Every finished game becomes an interaction record with
//! `partner = human`; `POST /api/admin/train` retrains each variant on seed
//! plus human data and swaps the served checkpoint for new games.

pub mod error;
pub mod glyph;
pub mod session;

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicU32, AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use refgame::agent::checkpoint::checkpoint_id;
use refgame::agent::ModelParams;
use refgame::analysis::LogLine;
use refgame::arena::{assemble_training_data, bootstrap_seed_data, lab_from_config, Agent, CampaignConfig, Lab, SeedData, VariantSpec};
use refgame::learning::{train, Example, InteractionRecord, RoundDatasets, Role, ValidationGame};
use refgame::rng::{derive_seed, label, stream};

use error::{ApiError, ApiResult};
use session::{GameState, RolePolicy, Score, Session};

/// Served parameters of one variant.
#[derive(Clone)]
struct Served {
    spec: VariantSpec,
    params: Arc<ModelParams>,
    checkpoint: String,
}

pub struct AppState {
    pub lab: Lab,
    master_seed: u64,
    seed: RoundDatasets,
    validation: Vec<ValidationGame>,
    /// Retraining always starts here.
    initial: Arc<ModelParams>,
    served: RwLock<BTreeMap<String, Served>>,
    human: Mutex<BTreeMap<String, RoundDatasets>>,
    sessions: Mutex<HashMap<String, Arc<tokio::sync::Mutex<Session>>>>,
    next_session: AtomicU64,
    round: AtomicU32,
    training: AtomicBool,
    last_train: Mutex<Option<TrainSummary>>,
    log: Option<Mutex<BufWriter<File>>>,
}

/// Held while a retraining job runs; dropping it lets the next one start.
pub struct TrainingGuard(Arc<AppState>);

impl Drop for TrainingGuard {
    fn drop(&mut self) {
        self.0.training.store(false, Ordering::SeqCst);
    }
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

impl AppState {
    /// Serves `models` (variant name to parameters) with the seed data of `config`.
    pub fn with_models(config: &CampaignConfig, lab: Lab, seed: SeedData, models: BTreeMap<String, Arc<ModelParams>>) -> refgame::Result<Self> {
        let mut served = BTreeMap::new();
        for v in config.variants.iter().filter(|v| v.has_model) {
            lab.registry.listener(&v.listener_strategy)?;
            lab.registry.speaker(&v.speaker_strategy)?;
            let params = models
                .get(&v.name)
                .cloned()
                .ok_or_else(|| refgame::Error::InvalidArgument(format!("no model for variant '{}'", v.name)))?;
            if params.dims() != lab.dims {
                return Err(refgame::Error::InvalidArgument(format!("model for '{}' does not match the config dimensions", v.name)));
            }
            served.insert(
                v.name.clone(),
                Served {
                    spec: v.clone(),
                    checkpoint: checkpoint_id(&params),
                    params,
                },
            );
        }
        let master_seed = config.master_seed;
        Ok(AppState {
            validation: seed.validation_games(&lab.library),
            seed: RoundDatasets {
                listener: seed.listener,
                speaker: seed.speaker,
            },
            initial: Arc::new(ModelParams::init(lab.dims.clone(), derive_seed(&[master_seed, label("init")]))),
            lab,
            master_seed,
            served: RwLock::new(served),
            human: Mutex::new(BTreeMap::new()),
            sessions: Mutex::new(HashMap::new()),
            next_session: AtomicU64::new(0),
            round: AtomicU32::new(1),
            training: AtomicBool::new(false),
            last_train: Mutex::new(None),
            log: None,
        })
    }

    /// Builds the seed data and trains one initial model per listener strategy.
    pub fn bootstrap(config: &CampaignConfig) -> refgame::Result<Self> {
        config.validate()?;
        let lab = lab_from_config(config)?;
        let master = config.master_seed;
        let seed = bootstrap_seed_data(&lab, config.seed_games, config.validation_games, derive_seed(&[master, label("seed")]))?;
        let validation = seed.validation_games(&lab.library);
        let initial = ModelParams::init(lab.dims.clone(), derive_seed(&[master, label("init")]));
        let listener_examples = examples(&seed.listener, &lab);
        let speaker_examples = examples(&seed.speaker, &lab);
        let mut by_strategy: BTreeMap<String, Arc<ModelParams>> = BTreeMap::new();
        let mut models = BTreeMap::new();
        for v in config.variants.iter().filter(|v| v.has_model) {
            if !by_strategy.contains_key(&v.listener_strategy) {
                let listener = lab.registry.listener(&v.listener_strategy)?;
                let (params, report) = train(
                    &initial,
                    &listener_examples,
                    &speaker_examples,
                    &validation,
                    listener.as_ref(),
                    &lab.hyper,
                    derive_seed(&[master, label("train"), 0]),
                )?;
                log::info!("initial model ({}): validation accuracy {:.3}", v.listener_strategy, report.best_accuracy);
                by_strategy.insert(v.listener_strategy.clone(), Arc::new(params));
            }
            models.insert(v.name.clone(), by_strategy[&v.listener_strategy].clone());
        }
        Self::with_models(config, lab, seed, models)
    }

    /// Appends every finished game to `path` as JSONL interaction lines.
    pub fn with_log(mut self, path: &Path) -> std::io::Result<Self> {
        let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
        self.log = Some(Mutex::new(BufWriter::new(file)));
        Ok(self)
    }

    fn agent(&self, variant: &str) -> ApiResult<Agent> {
        let served = self.served.read().expect("served lock");
        let s = served.get(variant).ok_or_else(|| ApiError::NotFound(format!("unknown variant '{variant}'")))?;
        Ok(Agent {
            params: s.params.clone(),
            checkpoint: s.checkpoint.clone(),
            listener: self.lab.registry.listener(&s.spec.listener_strategy)?,
            speaker: self.lab.registry.speaker(&s.spec.speaker_strategy)?,
        })
    }

    fn spec(&self, variant: &str) -> ApiResult<VariantSpec> {
        let served = self.served.read().expect("served lock");
        served
            .get(variant)
            .map(|s| s.spec.clone())
            .ok_or_else(|| ApiError::NotFound(format!("unknown variant '{variant}'")))
    }

    fn session(&self, id: &str) -> ApiResult<Arc<tokio::sync::Mutex<Session>>> {
        self.sessions
            .lock()
            .expect("sessions lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(format!("unknown session '{id}'")))
    }

    fn store(&self, record: InteractionRecord) {
        if let Some(log) = &self.log {
            let words = record.words(&self.lab.vocab);
            let line = LogLine::Interaction { record: record.clone(), words };
            let mut out = log.lock().expect("log lock");
            let written = serde_json::to_writer(&mut *out, &line)
                .map_err(std::io::Error::from)
                .and_then(|_| out.write_all(b"\n"))
                .and_then(|_| out.flush());
            if let Err(e) = written {
                log::error!("could not append to the interaction log: {e}");
            }
        }
        let mut human = self.human.lock().expect("human lock");
        let data = human.entry(record.system.clone()).or_default();
        match record.role {
            Role::Listener => data.listener.push(record),
            Role::Speaker => data.speaker.push(record),
        }
    }

    /// Claims the training slot, or `None` when a job is already running.
    pub fn try_begin_training(self: &Arc<Self>) -> Option<TrainingGuard> {
        self.training
            .compare_exchange(false, true, Ordering::SeqCst, Ordering::SeqCst)
            .ok()
            .map(|_| TrainingGuard(self.clone()))
    }

    /// Retrains every variant from the initial weights and swaps the results in.
    pub fn retrain(&self, round_tag: Option<String>) -> refgame::Result<TrainSummary> {
        let round = self.round.load(Ordering::SeqCst);
        let specs: Vec<VariantSpec> = self.served.read().expect("served lock").values().map(|s| s.spec.clone()).collect();
        let human = self.human.lock().expect("human lock").clone();
        let mut trained = Vec::with_capacity(specs.len());
        let mut variants = BTreeMap::new();
        for spec in specs {
            let native = human.get(&spec.name).cloned().unwrap_or_default();
            let data = assemble_training_data(&self.seed, &native, spec.data_sharing);
            let listener = self.lab.registry.listener(&spec.listener_strategy)?;
            let (params, report) = train(
                &self.initial,
                &examples(&data.listener, &self.lab),
                &examples(&data.speaker, &self.lab),
                &self.validation,
                listener.as_ref(),
                &self.lab.hyper,
                derive_seed(&[self.master_seed, label("train"), u64::from(round)]),
            )?;
            let id = checkpoint_id(&params);
            variants.insert(
                spec.name.clone(),
                VariantTrainSummary {
                    checkpoint: id.clone(),
                    human_listener: native.listener.len(),
                    human_speaker: native.speaker.len(),
                    validation_accuracy: report.best_accuracy,
                },
            );
            trained.push((spec, Arc::new(params), id));
        }
        {
            let mut served = self.served.write().expect("served lock");
            for (spec, params, checkpoint) in trained {
                served.insert(spec.name.clone(), Served { spec, params, checkpoint });
            }
        }
        self.round.store(round + 1, Ordering::SeqCst);
        let summary = TrainSummary {
            trained_round: round,
            round_tag,
            variants,
        };
        *self.last_train.lock().expect("train lock") = Some(summary.clone());
        Ok(summary)
    }
}

fn examples(records: &[InteractionRecord], lab: &Lab) -> Vec<Example> {
    records.iter().map(|r| Example::from_record(r, &lab.library)).collect()
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct CreateSession {
    pub variant: String,
    #[serde(default)]
    pub role_policy: RolePolicy,
    #[serde(default)]
    pub max_games: Option<u32>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UtteranceRequest {
    pub text: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SelectionRequest {
    pub index: usize,
}

/// Result of a submission. `chosen_index` echoes the player's own pick; the
/// model's pick and the target of a listening player are never returned.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubmitResponse {
    pub success: bool,
    pub game: u32,
    pub score: Score,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chosen_index: Option<usize>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TrainRequest {
    #[serde(default)]
    pub round_tag: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantTrainSummary {
    pub checkpoint: String,
    pub human_listener: usize,
    pub human_speaker: usize,
    pub validation_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    /// Round whose human data this job trained on.
    pub trained_round: u32,
    pub round_tag: Option<String>,
    pub variants: BTreeMap<String, VariantTrainSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainAccepted {
    pub status: String,
    pub round: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantStatus {
    pub checkpoint: String,
    pub human_listener: usize,
    pub human_speaker: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatusResponse {
    pub round: u32,
    pub training: bool,
    pub sessions: usize,
    pub variants: BTreeMap<String, VariantStatus>,
    pub last_train: Option<TrainSummary>,
}

async fn create_session(State(state): State<Arc<AppState>>, Json(req): Json<CreateSession>) -> ApiResult<(StatusCode, Json<GameState>)> {
    let spec = state.spec(&req.variant)?;
    if req.max_games == Some(0) {
        return Err(ApiError::InvalidArgument("max_games must be positive".into()));
    }
    let agent = state.agent(&req.variant)?;
    let n = state.next_session.fetch_add(1, Ordering::SeqCst);
    let id = format!("{:016x}", derive_seed(&[state.master_seed, label("session-id"), n]));
    let rng = stream(&[state.master_seed, label("session"), n]);
    let session = Session::new(id.clone(), spec, req.role_policy, req.max_games, rng, agent, &state.lab)?;
    let view = session.state(&state.lab);
    state
        .sessions
        .lock()
        .expect("sessions lock")
        .insert(id, Arc::new(tokio::sync::Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_state(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<GameState>> {
    let session = state.session(&id)?;
    let mut session = session.lock().await;
    let view = session.state(&state.lab);
    if session.phase == session::Phase::Feedback {
        let agent = state.agent(&session.variant.name)?;
        let fresh = (agent.checkpoint != session.agent.checkpoint).then_some(agent);
        session.advance(&state.lab, fresh)?;
        let mut next = session.state(&state.lab);
        next.previous_outcome = view.previous_outcome;
        return Ok(Json(next));
    }
    Ok(Json(view))
}

async fn post_utterance(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<UtteranceRequest>,
) -> ApiResult<Json<SubmitResponse>> {
    let session = state.session(&id)?;
    let mut session = session.lock().await;
    let round = state.round.load(Ordering::SeqCst);
    let record = session.submit_utterance(&state.lab, &req.text, round, now_ms())?;
    let success = record.success();
    state.store(record);
    Ok(Json(SubmitResponse {
        success,
        game: session.game,
        score: session.score,
        chosen_index: None,
    }))
}

async fn post_selection(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<SelectionRequest>,
) -> ApiResult<Json<SubmitResponse>> {
    let session = state.session(&id)?;
    let mut session = session.lock().await;
    let round = state.round.load(Ordering::SeqCst);
    let record = session.submit_selection(&state.lab, req.index, round, now_ms())?;
    let success = record.success();
    state.store(record);
    Ok(Json(SubmitResponse {
        success,
        game: session.game,
        score: session.score,
        chosen_index: Some(req.index),
    }))
}

async fn post_train(State(state): State<Arc<AppState>>, body: Option<Json<TrainRequest>>) -> ApiResult<(StatusCode, Json<TrainAccepted>)> {
    let req = body.map(|Json(r)| r).unwrap_or_default();
    let guard = state.try_begin_training().ok_or_else(|| ApiError::Busy("a training job is already running".into()))?;
    let round = state.round.load(Ordering::SeqCst);
    let job = state.clone();
    tokio::task::spawn_blocking(move || {
        let _guard = guard;
        match job.retrain(req.round_tag) {
            Ok(summary) => log::info!("retrained on round {} data", summary.trained_round),
            Err(e) => log::error!("retraining failed: {e}"),
        }
    });
    Ok((
        StatusCode::ACCEPTED,
        Json(TrainAccepted {
            status: "started".into(),
            round,
        }),
    ))
}

async fn get_status(State(state): State<Arc<AppState>>) -> Json<StatusResponse> {
    let human = state.human.lock().expect("human lock").clone();
    let variants = state
        .served
        .read()
        .expect("served lock")
        .iter()
        .map(|(name, s)| {
            let data = human.get(name);
            (
                name.clone(),
                VariantStatus {
                    checkpoint: s.checkpoint.clone(),
                    human_listener: data.map_or(0, |d| d.listener.len()),
                    human_speaker: data.map_or(0, |d| d.speaker.len()),
                },
            )
        })
        .collect();
    Json(StatusResponse {
        round: state.round.load(Ordering::SeqCst),
        training: state.training.load(Ordering::SeqCst),
        sessions: state.sessions.lock().expect("sessions lock").len(),
        variants,
        last_train: state.last_train.lock().expect("train lock").clone(),
    })
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/session", post(create_session))
        .route("/api/session/{id}/state", get(get_state))
        .route("/api/session/{id}/utterance", post(post_utterance))
        .route("/api/session/{id}/selection", post(post_selection))
        .route("/api/admin/train", post(post_train))
        .route("/api/admin/status", get(get_status))
        .with_state(state)
}
