use cpt::analysis;
use cpt::channel_sim::{run, FailedPath, SimSpec};
use cpt::transport::CptConfig;

#[test]
fn z_scores_stay_within_four_for_most_seeds() {
    let cases = [
        (CptConfig::new(6, 12, 3, 8).unwrap(), 0.2, None),
        (
            CptConfig::new(6, 12, 3, 8).unwrap(),
            0.1,
            Some(FailedPath::Worst),
        ),
        (CptConfig::new(10, 16, 4, 8).unwrap(), 0.1, None),
    ];
    for (config, p, failed) in cases {
        let mut spec = SimSpec::counting(config, p, 1_000_000, 0);
        spec.failed_path = failed;
        let seeds = 20u64;
        let mut within = 0;
        for seed in 0..seeds {
            let est = run(&SimSpec {
                master_seed: seed,
                ..spec
            })
            .unwrap();
            assert!(est.analytic >= 1e-4);
            within += u64::from(est.z_score.abs() <= 4.0);
        }
        assert!(
            within * 100 >= 95 * seeds,
            "{config:?} p={p}: {within}/{seeds}"
        );
    }
}

#[test]
fn analytic_column_matches_the_model() {
    let config = CptConfig::new(6, 12, 3, 8).unwrap();
    let est = run(&SimSpec::counting(config, 0.25, 10, 1)).unwrap();
    assert_eq!(est.analytic, analysis::p_fail(12, 6, 0.25).unwrap());
    let est = run(&SimSpec::counting(config, 0.25, 10, 1).with_failed_path(FailedPath::Index(3)))
        .unwrap();
    assert_eq!(est.analytic, analysis::p_fail(8, 6, 0.25).unwrap());
}
