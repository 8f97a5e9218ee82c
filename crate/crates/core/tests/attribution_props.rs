mod common;

use common::oracles;
use lidarxai_core::attribution::postprocess;
use lidarxai_core::world::NUM_SECTORS;

#[test]
fn postprocess_properties() {
    oracles::postprocess_properties(10_000).unwrap();
}

#[test]
fn postprocess_degenerate_is_zero() {
    assert_eq!(postprocess(&[0.3; NUM_SECTORS]).g_star, [0.0; NUM_SECTORS]);
    let mut alternating = [0.3; NUM_SECTORS];
    alternating.iter_mut().step_by(2).for_each(|v| *v = -0.3);
    assert_eq!(postprocess(&alternating).g_star, [0.0; NUM_SECTORS]);
}

#[test]
fn object_mapping_matches_exhaustive_oracle() {
    oracles::mapping_matches_exhaustive_loop(1000).unwrap();
}
