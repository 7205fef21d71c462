use refgame::rng::*;

#[test]
fn derivation_is_order_sensitive() {
    assert_ne!(derive_seed(&[1, 2]), derive_seed(&[2, 1]));
    assert_eq!(derive_seed(&[1, 2, 3]), derive_seed(&[1, 2, 3]));
    assert_ne!(derive_seed(&[0]), derive_seed(&[0, 0]));
}
