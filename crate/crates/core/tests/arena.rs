mod variant {
    use refgame::arena::*;

    #[test]
    fn builtin_flags() {
        let flags = |n: &str| {
            let v = VariantSpec::builtin(n).unwrap();
            (v.joint_inference, v.data_sharing)
        };
        assert_eq!(flags(FULL), (true, true));
        assert_eq!(flags(NO_DS), (true, false));
        assert_eq!(flags(NO_JI), (false, true));
        assert_eq!(flags(BASELINE), (false, false));
        assert!(!VariantSpec::builtin(HUMAN).unwrap().has_model);
        assert!(VariantSpec::builtin("oracle").is_err());
    }
}

mod config {
    use refgame::arena::*;
    use refgame::Error;

    #[test]
    fn schedule() {
        let cfg = CampaignConfig::default();
        let counts: Vec<usize> = (1..=4).map(|r| cfg.interactions(r)).collect();
        assert_eq!(counts, vec![200, 250, 300, 350]);
    }

    #[test]
    fn parse_overrides_and_round_trip() {
        let text = "# desk run\nrounds = 2\nhyper.k = 4\nnoise.listener_err=0.1\nvariants = full, human\nvariant.full.speaker = greedy\nmarked_words = Up, left\n";
        let cfg = CampaignConfig::parse(text).unwrap();
        assert_eq!(cfg.rounds, 2);
        assert_eq!(cfg.hyper.k, 4);
        assert_eq!(cfg.noise.listener_err, 0.1);
        assert_eq!(cfg.variants.len(), 2);
        assert_eq!(cfg.variants[0].speaker_strategy, "greedy");
        assert_eq!(cfg.marked_words, vec!["up", "left"]);
        assert_eq!(CampaignConfig::parse(&cfg.to_text()).unwrap(), cfg);
        assert_eq!(CampaignConfig::parse(&CampaignConfig::default().to_text()).unwrap(), CampaignConfig::default());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match CampaignConfig::parse("rounds = 2\nbogus = 1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(CampaignConfig::parse("rounds two").is_err());
        assert!(CampaignConfig::parse("variant.nobody.speaker = greedy").is_err());
        assert!(CampaignConfig::parse("hyper.k = 0").is_err());
    }
}
