mod common;

use std::sync::OnceLock;

use refgame::agent::{speaker_logprob, ModelParams};
use refgame::analysis::{compute_metrics, read_lines, write_lines, LogLine};
use refgame::arena::{bootstrap_seed_data, lab_from_config, run_campaign, CampaignOutcome, CONTROL, FULL, HUMAN, NO_DS};
use refgame::learning::{train, Example, Partner, Provenance, Role};
use refgame::rng;
use refgame::strategy::LITERAL_LISTENER;
use refgame::world::PartnerNoise;

fn outcome() -> &'static CampaignOutcome {
    static RUN: OnceLock<CampaignOutcome> = OnceLock::new();
    RUN.get_or_init(|| run_campaign(&common::small_config(9)).unwrap())
}

#[test]
fn per_role_counts_follow_the_schedule() {
    let out = outcome();
    let cfg = &out.log.config;
    for round in &out.log.rounds {
        let n = cfg.interactions(round.round as usize);
        assert_eq!(round.interactions_per_role, n);
        for v in &round.variants {
            for role in Role::ALL {
                assert_eq!(v.role_records(role).count(), n, "{} round {}", v.variant, round.round);
            }
        }
        let has_control = round.variant(CONTROL).is_some();
        assert_eq!(has_control, round.round as usize == cfg.rounds);
    }
}

#[test]
fn behavior_probabilities_recompute_from_the_logged_checkpoint() {
    let out = outcome();
    let lab = lab_from_config(&out.log.config).unwrap();
    for round in &out.log.rounds {
        for v in &round.variants {
            let Some(id) = &v.deployed_checkpoint else {
                assert!(v.records.iter().all(|r| r.checkpoint.is_none() && r.behavior_prob == 1.0));
                continue;
            };
            let params: &ModelParams = &out.checkpoints[id];
            let spec = out.log.config.variants.iter().find(|s| s.name == v.variant).cloned().unwrap_or_else(|| {
                let full = out.log.config.variants.iter().find(|s| s.name == FULL).unwrap();
                refgame::arena::VariantSpec { name: CONTROL.into(), ..full.clone() }
            });
            let listener = lab.registry.listener(&spec.listener_strategy).unwrap();
            for r in &v.records {
                assert_eq!(r.checkpoint.as_deref(), Some(id.as_str()));
                let board = lab.library.board(&r.context);
                let want = match r.role {
                    Role::Listener => listener.distribution(params, &board, &r.utterance, &lab.hyper).unwrap()[r.selection],
                    Role::Speaker => speaker_logprob(params, &board, r.target, &r.utterance).unwrap().exp(),
                };
                assert!((r.behavior_prob - want).abs() <= 1e-12 * want.max(1.0), "{} vs {want}", r.behavior_prob);
            }
        }
    }
}

#[test]
fn records_are_valid_and_tagged() {
    let out = outcome();
    for round in &out.log.rounds {
        for v in &round.variants {
            for r in &v.records {
                r.validate().unwrap();
                r.context.validate().unwrap();
                assert_eq!(r.round, round.round);
                assert_eq!(r.system, v.variant);
                assert_eq!(r.partner, Partner::Oracle);
                assert_eq!(r.provenance, Provenance::Native);
                assert_eq!(r.success(), r.selection == r.target);
            }
        }
    }
    assert!(out.log.rounds[0].variant(HUMAN).unwrap().train.is_none());
}

#[test]
fn round_one_records_coincide_for_equivalent_variants() {
    let round = &out_round(1);
    let strip = |name: &str| {
        round
            .variant(name)
            .unwrap()
            .records
            .iter()
            .map(|r| (r.context.clone(), r.utterance.clone(), r.target, r.selection, r.behavior_prob))
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(FULL), strip(NO_DS));
}

fn out_round(n: u32) -> refgame::arena::RoundLog {
    outcome().log.rounds.iter().find(|r| r.round == n).unwrap().clone()
}

#[test]
fn campaigns_are_deterministic_and_seed_sensitive() {
    let again = run_campaign(&common::small_config(9)).unwrap();
    assert_eq!(again.log.to_json().unwrap(), outcome().log.to_json().unwrap());
    let other = run_campaign(&common::small_config(10)).unwrap();
    assert_ne!(other.log.to_json().unwrap(), outcome().log.to_json().unwrap());
}

#[test]
fn jsonl_round_trip_reproduces_metrics() {
    let log = &outcome().log;
    let mut buf = Vec::new();
    write_lines(&log.lines(), &mut buf).unwrap();
    let lines = read_lines(buf.as_slice()).unwrap();
    assert_eq!(lines, log.lines());
    assert!(matches!(lines[0], LogLine::Header(_)));
    assert_eq!(compute_metrics(&lines, None).unwrap(), log.metrics);
    let csv = log.metrics.to_csv().unwrap();
    assert!(csv.starts_with("round,variant,role,metric,value,lo,hi\n"));
    for row in &log.metrics.rows {
        if let (Some(lo), Some(hi)) = (row.lo, row.hi) {
            assert!(lo <= row.value && row.value <= hi);
        }
    }
}

#[test]
fn metric_table_covers_every_cell() {
    let log = &outcome().log;
    let m = &log.metrics;
    for round in &log.rounds {
        for v in &round.variants {
            for role in Role::ALL {
                assert!(m.value(round.round, &v.variant, Some(role), "accuracy").is_some());
            }
        }
        for name in [FULL, HUMAN] {
            assert!(m.value(round.round, name, None, "effective_vocabulary").is_some());
            assert!(m.value(round.round, name, None, "new_words").is_some());
        }
        assert!(m.value(round.round, FULL, None, "corpus_similarity").is_some());
    }
    let offline_round = log.config.rounds as u32 + 1;
    assert!(m.value(offline_round, FULL, Some(Role::Listener), "offline_accuracy").is_some());
    assert!(!log.offline.is_empty());
}

#[test]
fn eval_pairs_come_from_partner_games_and_are_shared() {
    let log = &outcome().log;
    for round in &log.rounds {
        let human = round.variant(HUMAN).unwrap();
        assert_eq!(round.eval_pairs.len(), log.config.eval_pairs);
        for p in &round.eval_pairs {
            assert!(human.records.iter().any(|r| r.context == p.context && r.target == p.target));
        }
        let per_system = |name: &str| round.eval.iter().filter(|e| e.system == name).count();
        assert_eq!(per_system(FULL), round.eval_pairs.len());
        assert_eq!(per_system(HUMAN), round.eval_pairs.len());
    }
}

#[test]
fn seed_data_is_successful_and_disjoint() {
    let cfg = common::small_config(4);
    let lab = lab_from_config(&cfg).unwrap();
    let seed = bootstrap_seed_data(&lab, 30, 50, 77).unwrap();
    assert_eq!((seed.listener.len(), seed.speaker.len(), seed.validation.len()), (30, 30, 50));
    assert!(seed.listener.iter().chain(&seed.speaker).chain(&seed.validation).all(|r| r.success()));
    assert!(seed.listener.iter().all(|r| r.provenance == Provenance::Seed));
    assert!(seed.listener.iter().all(|a| seed.validation.iter().all(|b| a.game != b.game)));
    let again = bootstrap_seed_data(&lab, 30, 50, 77).unwrap();
    assert_eq!(again.listener, seed.listener);

    let mut quiet = cfg.clone();
    quiet.noise = PartnerNoise::NONE;
    let lab = lab_from_config(&quiet).unwrap();
    let seed = bootstrap_seed_data(&lab, 30, 50, 77).unwrap();
    assert!(seed.attempts >= 80);
}

#[test]
fn seed_only_training_beats_chance() {
    let mut cfg = common::small_config(5);
    cfg.hyper.max_epochs = 15;
    cfg.hyper.patience = 5;
    let lab = lab_from_config(&cfg).unwrap();
    let seed = bootstrap_seed_data(&lab, 104, 280, rng::derive_seed(&[5, rng::label("seed")])).unwrap();
    let ex = |rs: &[refgame::learning::InteractionRecord]| rs.iter().map(|r| Example::from_record(r, &lab.library)).collect::<Vec<_>>();
    let initial = ModelParams::init(lab.dims.clone(), 5);
    let listener = lab.registry.listener(LITERAL_LISTENER).unwrap();
    let validation = seed.validation_games(&lab.library);
    let run = || train(&initial, &ex(&seed.listener), &ex(&seed.speaker), &validation, listener.as_ref(), &lab.hyper, 3).unwrap();
    let (params, report) = run();
    assert!(report.best_accuracy > 0.2, "{}", report.best_accuracy);
    let (again, report2) = run();
    assert_eq!(params.data(), again.data());
    assert_eq!(report, report2);
}
