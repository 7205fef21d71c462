mod accuracy {
    use std::collections::BTreeSet;

    use refgame::analysis::accuracy::*;

    #[test]
    fn constant_data() {
        let e = role_accuracy(&[true; 40], 1000, 1).unwrap();
        assert_eq!((e.value, e.lo, e.hi), (1.0, 1.0, 1.0));
        for seed in 0..5 {
            assert_eq!(role_accuracy(&[false; 12], 500, seed).unwrap().value, 0.0);
        }
        assert!(role_accuracy(&[], 10, 1).is_err());
    }

    #[test]
    fn marked_sides() {
        let w = |t: &str| refgame::analysis::divergence::words(t);
        let (a, b, c) = (w("left star"), w("star"), w("up moon"));
        let games = [(a.as_slice(), false), (b.as_slice(), true), (c.as_slice(), false)];
        let set: BTreeSet<String> = ["left", "up"].iter().map(|s| s.to_string()).collect();
        let m = marked_word_breakdown(&games, &set, 200, 1).unwrap();
        assert_eq!(m.with.unwrap().value, 0.0);
        assert_eq!(m.without.unwrap().value, 1.0);
        let all: BTreeSet<String> = ["left", "up", "star", "moon"].iter().map(|s| s.to_string()).collect();
        assert!(marked_word_breakdown(&games, &all, 200, 1).unwrap().without.is_none());
        let none: BTreeSet<String> = ["heart"].iter().map(|s| s.to_string()).collect();
        assert!(marked_word_breakdown(&games, &none, 200, 1).unwrap().with.is_none());
        assert!(marked_word_breakdown(&games, &BTreeSet::new(), 200, 1).is_err());
    }

    #[test]
    fn half_successes() {
        let data: Vec<bool> = (0..100).map(|i| i % 2 == 0).collect();
        let e = role_accuracy(&data, 10_000, 3).unwrap();
        assert_eq!(e.value, 0.5);
        assert!(e.lo > 0.35 && e.hi < 0.65, "{e:?}");
        assert!(e.lo <= e.value && e.value <= e.hi);
    }
}

mod language {
    use refgame::analysis::language::*;
    use refgame::analysis::divergence::words;

    #[test]
    fn counters() {
        let set = vec![words("a b"), words("b c")];
        assert_eq!(effective_vocabulary(&set), 3);
        assert_eq!(utterance_length(&[words("w x y z")]), 4.0);
        assert_eq!(new_words(&[set.clone(), set.clone(), set]), vec![3, 0, 0]);
        assert_eq!(new_words(&[vec![words("a")], vec![words("a b c")]]), vec![1, 2]);
    }
}

mod divergence {
    use std::collections::BTreeMap;

    use refgame::analysis::divergence::*;

    fn d(s: &str) -> Description {
        words(s)
    }

    #[test]
    fn hand_computed_jsd() {
        assert_eq!(description_jsd(&d("a b"), &d("a c")), 0.5);
        assert_eq!(description_jsd(&d("a b"), &d("c d")), 1.0);
        assert_eq!(description_jsd(&d("a b"), &d("b a")), 0.0);
    }

    #[test]
    fn snd_cases() {
        let mut m = BTreeMap::new();
        m.insert(0, vec![d("x y"), d("x y"), d("x y")]);
        assert_eq!(snd(&m).unwrap(), 0.0);
        m.insert(1, vec![d("a"), d("b")]);
        assert_eq!(snd(&m).unwrap(), 0.5);
        m.insert(2, vec![d("lonely")]);
        assert_eq!(snd(&m).unwrap(), 0.5);
        let mut single = BTreeMap::new();
        single.insert(0, vec![d("a")]);
        assert!(snd(&single).is_err());
    }

    #[test]
    fn duplicating_an_outlier_can_raise_snd() {
        // Mean pairwise divergence is not monotone under arbitrary duplication.
        let base = vec![d("a"), d("a"), d("a"), d("b")];
        let mut more = base.clone();
        more.push(d("b"));
        assert_eq!(shape_divergence(&base).unwrap(), 0.5);
        assert!((shape_divergence(&more).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn corpus_similarity_basics() {
        let a = vec![d("red up"), d("blue")];
        let b = vec![d("green up up")];
        assert_eq!(corpus_divergence(&a, &a).unwrap(), 1.0);
        assert_eq!(corpus_divergence(&a, &b).unwrap(), corpus_divergence(&b, &a).unwrap());
        assert!(corpus_divergence(&a, &b).unwrap() < 1.0);
        assert!(corpus_divergence(&a, &[]).is_err());
    }

    #[test]
    fn disjoint_three_word_corpora_match_a_direct_computation() {
        let a = vec![d("x x y")];
        let b = vec![d("z z z")];
        // Union vocabulary {x, y, z}; add-one smoothing, both corpora have 3 tokens.
        let p = [3.0 / 6.0, 2.0 / 6.0, 1.0 / 6.0];
        let q = [1.0 / 6.0, 1.0 / 6.0, 4.0 / 6.0];
        let mut expected = 0.0;
        for i in 0..3 {
            let m: f64 = (p[i] + q[i]) / 2.0;
            expected += 0.5 * p[i] * (p[i] / m).log2() + 0.5 * q[i] * (q[i] / m).log2();
        }
        let got = corpus_divergence(&a, &b).unwrap();
        assert!((got - (1.0 - expected)).abs() < 1e-12, "{got} vs {}", 1.0 - expected);
    }
}
