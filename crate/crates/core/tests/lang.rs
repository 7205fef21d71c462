use refgame::lang::*;
use refgame::world::AttributeSchema;

#[test]
fn default_layout() {
    let vocab = Vocabulary::new(&AttributeSchema::default(), 4);
    assert_eq!(vocab.len(), 18 + 6);
    assert_eq!(vocab.eos(), 23);
    assert_eq!(vocab.unk(), 22);
    assert_eq!(vocab.kind(0), TokenKind::Content { family: 0, value: 0 });
    assert_eq!(vocab.kind(8), TokenKind::Content { family: 1, value: 0 });
    assert_eq!(vocab.kind(17), TokenKind::Content { family: 2, value: 5 });
    assert_eq!(vocab.kind(18), TokenKind::Filler);
    assert_eq!(vocab.content_token(2, 3), 15);
}

#[test]
fn tokenize_maps_unknown_words_to_unk() {
    let vocab = Vocabulary::new(&AttributeSchema::default(), 4);
    let toks = vocab.tokenize("The  STAR pointing up </s>");
    assert_eq!(toks[0], vocab.filler(0));
    assert_eq!(vocab.surface(toks[1]), "star");
    assert_eq!(toks[2], vocab.unk());
    assert_eq!(vocab.surface(toks[3]), "up");
    assert_eq!(toks[4], vocab.unk());
}

#[test]
fn utterance_validation() {
    let vocab = Vocabulary::new(&AttributeSchema::default(), 4);
    let eos = vocab.eos();
    assert!(Utterance::from_tokens(vec![1, 2, eos], &vocab, 6).is_ok());
    assert!(Utterance::from_tokens(vec![1, 2], &vocab, 6).is_err());
    assert!(Utterance::from_tokens(vec![eos, eos], &vocab, 6).is_err());
    assert!(Utterance::from_tokens(vec![1, 99, eos], &vocab, 6).is_err());
    assert!(Utterance::from_tokens(vec![1; 7].into_iter().chain([eos]).collect(), &vocab, 6).is_err());
}
