mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use refgame::agent::{checkpoint, listener_distribution, speaker_logprob, ModelDims, ModelParams};
use refgame::analysis::divergence::{corpus_divergence, description_jsd, shape_divergence, snd, Description};
use refgame::analysis::role_accuracy;
use refgame::arena::CampaignConfig;
use refgame::lang::{Utterance, Vocabulary};
use refgame::learning::{ips_coefficient, share_data, InteractionRecord, Partner, Provenance, Reward, Role};
use refgame::pragmatics::joint_listener;
use refgame::rng;
use refgame::world::{build_context, AttributeSchema, Board, Context, ShapeLibrary, CONTEXT_SIZE};

fn default_world() -> (AttributeSchema, Vocabulary, ShapeLibrary) {
    let schema = AttributeSchema::default();
    let vocab = Vocabulary::new(&schema, 4);
    let library = ShapeLibrary::generate(schema.clone(), 128, 11).unwrap();
    (schema, vocab, library)
}

fn record(role: Role, success: bool, target: usize, token: usize) -> InteractionRecord {
    InteractionRecord {
        round: 1,
        system: "full".into(),
        role,
        context: Context::fixed((0..10).collect()),
        utterance: Utterance::from_tokens_unchecked(vec![token, 23]),
        text: None,
        target,
        selection: if success { target } else { (target + 1) % 10 },
        reward: Reward::from_outcome(success),
        behavior_prob: 0.5,
        partner: Partner::Oracle,
        provenance: Provenance::Native,
        checkpoint: None,
        game: token as u64,
        timestamp: 0,
    }
}

fn records(role: Role) -> impl Strategy<Value = Vec<InteractionRecord>> {
    prop::collection::vec((any::<bool>(), 0..10usize, 0..20usize), 0..25)
        .prop_map(move |xs| xs.into_iter().map(|(s, t, w)| record(role, s, t, w)).collect())
}

fn description() -> impl Strategy<Value = Description> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e"]), 1..5)
        .prop_map(|ws| ws.into_iter().map(String::from).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn contexts_are_valid_for_any_seed(seed in any::<u64>()) {
        let (_, _, library) = default_world();
        let ctx = build_context(&library, seed).unwrap();
        prop_assert_eq!(ctx.len(), CONTEXT_SIZE);
        prop_assert!(ctx.validate().is_ok());
        prop_assert!(ctx.shape_ids.iter().all(|&id| id < library.len()));
        prop_assert_eq!(&ctx, &build_context(&library, seed).unwrap());
    }

    #[test]
    fn sharing_cardinalities(dl in records(Role::Listener), ds in records(Role::Speaker)) {
        let (l2, s2) = share_data(&dl, &ds);
        let pos = |d: &[InteractionRecord]| d.iter().filter(|r| r.success()).count();
        prop_assert_eq!(l2.len(), dl.len() + pos(&ds));
        prop_assert_eq!(s2.len(), ds.len() + pos(&dl));
        prop_assert_eq!(&l2[..dl.len()], &dl[..]);
        prop_assert_eq!(&s2[..ds.len()], &ds[..]);
        for r in l2[dl.len()..].iter().chain(&s2[ds.len()..]) {
            prop_assert!(r.success());
            prop_assert_eq!(r.provenance, Provenance::Shared);
            prop_assert_eq!(r.selection, r.target);
            prop_assert!(r.validate().is_ok());
        }
    }

    #[test]
    fn ips_is_bounded(cur in 1e-6f64..=1.0, beh in 1e-6f64..=1.0, pos in any::<bool>(), clip in 1.0f64..10.0) {
        let c = ips_coefficient(cur, beh, Reward::from_outcome(pos), clip).unwrap();
        prop_assert!(c > 0.0 && c <= clip);
        prop_assert_eq!(c == 1.0 || !pos, true);
        if pos {
            prop_assert_eq!(c, 1.0);
        }
    }

    #[test]
    fn listener_is_permutation_equivariant(seed in any::<u64>(), shift in 1..10usize) {
        let (schema, vocab, library) = default_world();
        let board = library.board(&build_context(&library, seed).unwrap());
        let params = ModelParams::init(ModelDims::new(&vocab, &schema, 16, 6), seed);
        let utt = Utterance::new(vec![(seed % 18) as usize, 3], &vocab);
        let p = listener_distribution(&params, &board, &utt).unwrap();
        let mut rows = board.0.clone();
        rows.rotate_left(shift);
        let q = listener_distribution(&params, &Board(rows), &utt).unwrap();
        for i in 0..10 {
            prop_assert!((p[(i + shift) % 10] - q[i]).abs() < 1e-12);
        }
        let joint = joint_listener(&params, &board, &utt, 0.5).unwrap();
        prop_assert!((joint.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn speaker_ignores_distractor_order(seed in any::<u64>()) {
        let (schema, vocab, library) = default_world();
        let board = library.board(&build_context(&library, seed).unwrap());
        let params = ModelParams::init(ModelDims::new(&vocab, &schema, 16, 6), seed);
        let utt = Utterance::new(vec![1, 9, 20], &vocab);
        let a = speaker_logprob(&params, &board, 0, &utt).unwrap();
        let mut rows = board.0.clone();
        rows[1..].reverse();
        let b = speaker_logprob(&params, &Board(rows), 0, &utt).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!(a < 0.0 && a.is_finite());
    }

    #[test]
    fn snd_is_a_bounded_mean(descs in prop::collection::vec(description(), 2..8)) {
        let s = shape_divergence(&descs).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
        let mut doubled = descs.clone();
        doubled.extend(descs.iter().cloned());
        prop_assert!(shape_divergence(&doubled).unwrap() <= s + 1e-12);
        // Appending a copy of a medoid never raises the mean pairwise divergence.
        let total = |x: &Description| descs.iter().map(|y| description_jsd(x, y)).sum::<f64>();
        let medoid = descs.iter().min_by(|a, b| total(a).total_cmp(&total(b))).unwrap();
        let mut more = descs.clone();
        more.push(medoid.clone());
        prop_assert!(shape_divergence(&more).unwrap() <= s + 1e-12);
    }

    #[test]
    fn corpus_similarity_properties(a in prop::collection::vec(description(), 1..6), b in prop::collection::vec(description(), 1..6)) {
        let ab = corpus_divergence(&a, &b).unwrap();
        let ba = corpus_divergence(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!(ab > 0.0 && ab <= 1.0);
        prop_assert_eq!(corpus_divergence(&a, &a).unwrap(), 1.0);
        let counts = |c: &[Description]| {
            let mut m = BTreeMap::new();
            for w in c.iter().flatten() {
                *m.entry(w.clone()).or_insert(0usize) += 1;
            }
            m
        };
        let size = |c: &[Description]| c.iter().map(Vec::len).sum::<usize>();
        if size(&a) == size(&b) && counts(&a) != counts(&b) {
            prop_assert!(ab < 1.0);
        }
    }

    #[test]
    fn bootstrap_interval_contains_estimate(outcomes in prop::collection::vec(any::<bool>(), 1..60), seed in any::<u64>()) {
        let e = role_accuracy(&outcomes, 300, seed).unwrap();
        prop_assert!(e.lo <= e.value && e.value <= e.hi);
        prop_assert!(e.lo >= 0.0 && e.hi <= 1.0);
        prop_assert_eq!(e, role_accuracy(&outcomes, 300, seed).unwrap());
    }

    #[test]
    fn render_tokenize_round_trip(content in prop::collection::vec(0usize..23, 0..6)) {
        let (_, vocab, _) = default_world();
        let utt = Utterance::new(content.clone(), &vocab);
        let text = vocab.render(&utt);
        prop_assert_eq!(vocab.tokenize(&text), content);
        prop_assert_eq!(vocab.tokenize(&text.to_uppercase()), vocab.tokenize(&text));
    }

    #[test]
    fn checkpoints_round_trip(seed in any::<u64>()) {
        let (schema, vocab, _) = default_world();
        let params = ModelParams::init(ModelDims::new(&vocab, &schema, 8, 4), seed);
        let back = checkpoint::decode(&checkpoint::encode(&params, &schema), &schema).unwrap();
        prop_assert_eq!(back.data(), params.data());
        prop_assert_eq!(checkpoint::checkpoint_id(&back), checkpoint::checkpoint_id(&params));
    }

    #[test]
    fn config_text_round_trip(rounds in 1usize..8, base in 1usize..500, step in 0usize..100, seed in any::<u64>(), lambda in 0.0f64..=1.0) {
        let cfg = CampaignConfig {
            rounds,
            interactions_base: base,
            interactions_step: step,
            master_seed: seed,
            ..CampaignConfig::default()
        };
        let mut cfg = cfg;
        cfg.hyper.lambda_listener = lambda;
        prop_assert_eq!(CampaignConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }
}

#[test]
fn duplicating_an_outlier_can_raise_snd() {
    let w = |t: &str| refgame::analysis::divergence::words(t);
    let mut by_shape = BTreeMap::new();
    by_shape.insert(0, vec![w("a"), w("a"), w("a"), w("b")]);
    assert!((snd(&by_shape).unwrap() - 0.5).abs() < 1e-12);
    by_shape.get_mut(&0).unwrap().push(w("b"));
    assert!((snd(&by_shape).unwrap() - 0.6).abs() < 1e-12);
}

#[test]
fn smoothing_can_hide_a_difference_between_corpora() {
    let w = |t: &str| refgame::analysis::divergence::words(t);
    // Counts (1, 0) and (3, 1) over {x, y} both smooth to (2/3, 1/3).
    let a = vec![w("x")];
    let b = vec![w("x x x y")];
    assert!((corpus_divergence(&a, &b).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn stream_labels_separate_streams() {
    let a = rng::derive_seed(&[1, rng::label("context")]);
    let b = rng::derive_seed(&[1, rng::label("partner")]);
    assert_ne!(a, b);
}
