use borcherds_cm::gzoracle::{coprime_pairs, gz_product, gz_support_check};

#[test]
fn support_law_holds_for_small_pairs() {
    let pairs = coprime_pairs(2000);
    assert!(pairs.len() > 100);
    for (a, b) in pairs {
        let r = gz_product(a, b, 64).unwrap();
        let s = gz_support_check(&r);
        assert!(s.ok, "({a}, {b}) -> {r}: {:?}", s.violations);
        assert!(r.margin < 1e-20);
    }
}
