mod objective {
    use refgame::learning::*;
    use refgame::agent::{grad_log_listener, Hyper, ModelDims, ModelParams};
    use refgame::lang::{Utterance, Vocabulary};
    use refgame::rng;
    use refgame::world::{build_context, oracle_speak, AttributeSchema, PartnerNoise, ShapeLibrary};

    #[test]
    fn ips_cases() {
        assert_eq!(ips_coefficient(0.3, 0.9, Reward::Positive, 5.0).unwrap(), 1.0);
        assert_eq!(ips_coefficient(0.2, 0.1, Reward::Negative, 5.0).unwrap(), 2.0);
        assert_eq!(ips_coefficient(1.0, 0.1, Reward::Negative, 5.0).unwrap(), 5.0);
        assert!(ips_coefficient(0.5, 0.0, Reward::Negative, 5.0).is_err());
        assert!(ips_coefficient(0.5, 0.5, Reward::Negative, 0.5).is_err());
    }

    pub(crate) fn record(role: Role, reward: Reward, game: u64) -> InteractionRecord {
        InteractionRecord {
            round: 1,
            system: "full".into(),
            role,
            context: refgame::world::Context::fixed((0..10).collect()),
            utterance: Utterance::from_tokens_unchecked(vec![1, 23]),
            text: None,
            target: 2,
            selection: if reward.is_positive() { 2 } else { 5 },
            reward,
            behavior_prob: 0.4,
            partner: Partner::Oracle,
            provenance: Provenance::Native,
            checkpoint: None,
            game,
            timestamp: game,
        }
    }

    #[test]
    fn sharing_cases() {
        let pos_s = record(Role::Speaker, Reward::Positive, 0);
        let neg_s = record(Role::Speaker, Reward::Negative, 1);
        let (l, s) = share_data(&[], &[pos_s.clone()]);
        assert_eq!(l.len(), 1);
        assert_eq!(l[0].role, Role::Listener);
        assert_eq!(l[0].selection, pos_s.target);
        assert_eq!(l[0].provenance, Provenance::Shared);
        assert_eq!(s, vec![pos_s]);
        let (l, _) = share_data(&[], &[neg_s]);
        assert!(l.is_empty());
        let (l, s) = share_data(&[], &[]);
        assert!(l.is_empty() && s.is_empty());
    }

    struct World {
        lib: ShapeLibrary,
        vocab: Vocabulary,
        params: ModelParams,
    }

    fn world() -> World {
        let schema = AttributeSchema::default();
        let vocab = Vocabulary::new(&schema, 4);
        let lib = ShapeLibrary::generate(schema.clone(), 128, 4).unwrap();
        let params = ModelParams::init(ModelDims::new(&vocab, &schema, 16, 6), 4);
        World { lib, vocab, params }
    }

    fn positive_examples(w: &World, n: u64) -> Vec<Example> {
        (0..n)
            .flat_map(|i| {
                let ctx = build_context(&w.lib, i).unwrap();
                let target = (i % 10) as usize;
                let u = oracle_speak(&w.lib, &ctx, target, &w.vocab, &PartnerNoise::NONE, &mut rng::stream(&[i]));
                let board = w.lib.board(&ctx);
                [Role::Listener, Role::Speaker].map(|role| Example {
                    role,
                    board: board.clone(),
                    utterance: u.clone(),
                    action: target,
                    reward: Reward::Positive,
                    behavior_prob: 1.0,
                })
            })
            .collect()
    }

    #[test]
    fn positive_step_follows_the_likelihood_gradient() {
        let w = world();
        let ex = &positive_examples(&w, 1)[0];
        let (g, _) = accumulate_gradient(&w.params, &[ex], &[], 5.0).unwrap();
        let mle = grad_log_listener(&w.params, &ex.board, &ex.utterance, ex.action).unwrap();
        let cos = g.dot(&mle) / (g.norm() * mle.norm());
        assert!((cos - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_batches_only_decay() {
        let w = world();
        let hyper = Hyper::default();
        let mut opt = AdamW::new(&w.params);
        let (next, _) = policy_gradient_step(&w.params, &mut opt, &[], &[], &hyper).unwrap();
        let decay = 1.0 - hyper.lr * hyper.weight_decay;
        for (a, b) in next.data().iter().zip(w.params.data()) {
            assert!((a - b * decay).abs() < 1e-15);
        }
    }

    #[test]
    fn negative_examples_push_probability_down() {
        let w = world();
        let mut ex = positive_examples(&w, 1).remove(0);
        ex.reward = Reward::Negative;
        ex.behavior_prob = 0.1;
        let before = ex.log_prob(&w.params).unwrap();
        let (g, _) = accumulate_gradient(&w.params, &[&ex], &[], 5.0).unwrap();
        let mut moved = w.params.clone();
        moved.add_scaled(&g, 1e-3);
        assert!(ex.log_prob(&moved).unwrap() < before);
    }

    #[test]
    fn surrogate_loss_falls_on_positive_data() {
        let w = world();
        let data = positive_examples(&w, 16);
        let (l, s): (Vec<&Example>, Vec<&Example>) = data.iter().partition(|e| e.role == Role::Listener);
        let hyper = Hyper::default();
        let mut params = w.params.clone();
        let mut opt = AdamW::new(&params);
        let (_, first) = accumulate_gradient(&params, &l, &s, 5.0).unwrap();
        for _ in 0..50 {
            params = policy_gradient_step(&params, &mut opt, &l, &s, &hyper).unwrap().0;
        }
        let (_, last) = accumulate_gradient(&params, &l, &s, 5.0).unwrap();
        assert!(last.listener_loss < first.listener_loss);
        assert!(last.speaker_loss < first.speaker_loss);
    }
}

mod train {
    use refgame::learning::*;

    #[test]
    fn patience_arithmetic() {
        let mut s = EarlyStopping::new(5, 15);
        let scores = [0.5, 0.6, 0.6, 0.6, 0.6, 0.6, 0.6];
        let mut outcome = Vec::new();
        for &x in &scores {
            outcome.push(s.observe(x));
        }
        assert_eq!(outcome[1], Progress::Improved);
        assert!(outcome[..6].iter().all(|p| !matches!(p, Progress::Stop(_))));
        assert_eq!(outcome[6], Progress::Stop(StopReason::Patience));
        assert_eq!(s.epoch(), 7);
        assert_eq!(s.best(), Some((2, 0.6)));
    }

    #[test]
    fn max_epochs_wins() {
        let mut s = EarlyStopping::new(3, 4);
        let seq: Vec<Progress> = [0.1, 0.2, 0.3, 0.4].iter().map(|&x| s.observe(x)).collect();
        assert_eq!(seq[3], Progress::Stop(StopReason::MaxEpochs));
        assert_eq!(s.best(), Some((4, 0.4)));
    }
}

mod records {
    use refgame::learning::*;

    #[test]
    fn reward_mapping() {
        assert_eq!(i8::from(reward_from_outcome(true)), 1);
        assert_eq!(i8::from(reward_from_outcome(false)), -1);
        for success in [true, false] {
            let r = reward_from_outcome(success);
            let json = serde_json::to_string(&r).unwrap();
            let back: Reward = serde_json::from_str(&json).unwrap();
            assert_eq!(back.is_positive(), success);
        }
        assert!(serde_json::from_str::<Reward>("0").is_err());
    }
}
