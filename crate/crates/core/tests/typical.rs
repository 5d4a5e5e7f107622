use blowzoom::measure::{discretize_lebesgue, sample_s};
use blowzoom::triadic::{pow3, standard_box};
use blowzoom::typical::{certify_r_membership, construct_mu_k, tangent_probe};

#[test]
fn constructed_measure_is_certified_at_its_generation() {
    let window = standard_box(2, 1);
    let mu = discretize_lebesgue(&window, pow3(-5)).unwrap();
    let nu = sample_s(1, &standard_box(3, 1), 1.0 / 9.0, 2).unwrap().measure;
    let mk = construct_mu_k(&mu, &nu, 1, 2, &window).unwrap();
    let membership = certify_r_membership(&mk, &nu, 1, 1, 3, &window, None).unwrap();
    assert_eq!(membership.generation(), Some(2));
}

#[test]
fn lebesgue_is_not_certified_against_a_point() {
    let window = standard_box(2, 1);
    let mu = discretize_lebesgue(&window, pow3(-5)).unwrap();
    let nu = blowzoom::AtomicMeasure::dirac(&[0.0], 1.0).unwrap();
    let membership = certify_r_membership(&mu, &nu, 1, 1, 2, &window, None).unwrap();
    assert_eq!(membership.generation(), None);
}

#[test]
fn tangent_probe_sees_the_target_inside_central_cubes() {
    let window = standard_box(3, 1);
    let mu = discretize_lebesgue(&window, pow3(-6)).unwrap();
    let nu = blowzoom::AtomicMeasure::dirac(&[0.0], 1.0).unwrap();
    let mk = construct_mu_k(&mu, &nu, 1, 2, &window).unwrap();
    let rows = tangent_probe(&mk, &[0.0], &nu, &[1], 2, 0, &window).unwrap();
    assert_eq!(rows.len(), 1);
    let row = &rows[0];
    assert!(row.in_central_cube);
    assert!(row.best_distance <= 1e-9, "{row:?}");
}
