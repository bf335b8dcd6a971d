mod support;

use support::oracle::oracle_mismatches;

#[test]
fn fifty_meshes_match_exhaustive_scan() {
    let mut total = 0;
    for seed in 0..50 {
        let (bad, n) = oracle_mismatches(seed);
        assert_eq!(bad, 0, "seed {seed} diverged after {n} collapses");
        total += n;
    }
    assert!(total > 100);
}
