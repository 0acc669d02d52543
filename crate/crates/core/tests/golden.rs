mod common;

#[test]
fn exports_match_goldens() {
    let differ = common::compare_goldens();
    assert!(differ.is_empty(), "golden files differ (rerun with MINIWHY_BLESS=1 to accept): {differ:?}");
}

#[test]
fn rendering_is_deterministic() {
    assert_eq!(common::render_goldens(), common::render_goldens());
}
