mod common;

use common::esl_scan::{fixture, scan};
use robust_panel::estimator::{fit_esl_with, high_breakdown_init, EslOptions, IrlsConfig};
use robust_panel::tuning::{esl_select_c, EslGrid};
use robust_panel::within_transform;

#[test]
fn selection_matches_exhaustive_scan() {
    let p = fixture();
    let c = within_transform(&p).unwrap();
    let b0 = high_breakdown_init(&c, 500, 1).unwrap();
    let state = esl_select_c(&c, &b0, &EslGrid::default()).unwrap();
    let oracle = scan(&p, [b0[0], b0[1]], &state.grid);
    let best = oracle.best.expect("feasible point");
    assert_eq!(state.c_selected, state.grid[best]);
    assert!(state.outlier_count > 0);
    for (a, b) in state.xi_values.iter().zip(&oracle.xi) {
        assert!((a - b).abs() < 1e-12);
    }
    for (a, b) in state.det_v_values.iter().zip(&oracle.det) {
        match (a, b) {
            (Some(a), Some(b)) => assert!((a - b).abs() <= 1e-8 * b.abs()),
            (None, None) => {}
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn second_outer_round_barely_moves() {
    let p = fixture();
    let opts = |rounds| EslOptions {
        max_outer: rounds,
        seed: 3,
        ..EslOptions::default()
    };
    let once = fit_esl_with(&p, &opts(1)).unwrap();
    let twice = fit_esl_with(&p, &opts(2)).unwrap();
    let tol = IrlsConfig::default().tol;
    let d = once.beta.iter().zip(&twice.beta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(d < 10.0 * tol, "{d}");
}
