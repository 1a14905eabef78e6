use jes_demo::{acquisition_curves, decompose, generalized_hypervolume, hypervolume};

#[test]
fn decomposition_boxes_cover_the_hypervolume() {
    let pts = [1.0, 0.2, 0.6, 0.6, 0.1, 0.9];
    let reference = [0.0, 0.0];
    let boxes = decompose(&pts, &reference).unwrap();
    assert_eq!(boxes.len() % 4, 0);
    let area: f64 = boxes.chunks(4).map(|b| (b[2] - b[0]) * (b[3] - b[1])).sum();
    assert!((area - hypervolume(&pts, &reference).unwrap()).abs() < 1e-12);
    assert!(decompose(&[1.0], &reference).is_err());
    assert!(decompose(&[], &reference).unwrap().is_empty());
}

#[test]
fn curves_have_expected_shape_and_signs() {
    let grid = 41;
    let out = acquisition_curves(&[0.1, 0.5, 0.8], &[0.0, 1.0, -0.5], 0.2, 1e-3, grid, 4, 1).unwrap();
    assert_eq!(out.len(), 4 * grid);
    let sd = &out[grid..2 * grid];
    assert!(sd.iter().all(|v| *v >= 0.0));
    // the posterior is tight at an observation
    assert!(sd[20] < 0.1);
    let jes = &out[2 * grid..3 * grid];
    assert!(jes.iter().all(|v| *v >= -1e-9));
    assert!(acquisition_curves(&[0.1], &[], 0.2, 1e-3, grid, 2, 1).is_err());
}

#[test]
fn ghv_matches_hypervolume_for_uniform_weights() {
    let out = generalized_hypervolume(&[1.0, 1.0], &[0.0, 0.0], "uniform", 200_000, 3).unwrap();
    assert!((out[0] - out[2]).abs() <= 4.0 * out[1]);
    assert!(generalized_hypervolume(&[1.0, 1.0], &[0.0, 0.0], "beta:0,1", 10, 3).is_err());
}
