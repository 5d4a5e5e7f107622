use blowzoom::blowup::{blowup, inverse_blowup};
use blowzoom::metric::{best_constant, d_metric, f_a, f_a_via, Route};
use blowzoom::AtomicMeasure;
use proptest::prelude::*;

fn measure(dim: usize) -> impl Strategy<Value = AtomicMeasure> {
    prop::collection::vec((prop::collection::vec(-2.0f64..2.0, dim), 0.05f64..2.0), 1..6)
        .prop_map(move |atoms| AtomicMeasure::from_atoms(dim, &atoms).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chain_and_simplex_agree(mu in measure(1), nu in measure(1), a in 0i32..3) {
        let chain = f_a_via(&mu, &nu, a, Route::Auto).unwrap();
        let simplex = f_a_via(&mu, &nu, a, Route::Simplex).unwrap();
        prop_assert!((chain - simplex).abs() <= 1e-9, "{chain} vs {simplex}");
    }

    #[test]
    fn zooming_by_three_moves_one_level(mu in measure(2), nu in measure(2), a in 0i32..2) {
        let origin = [0.0, 0.0];
        let big_mu = blowup(&mu, &origin, 1.0 / 3.0, 1.0).unwrap();
        let big_nu = blowup(&nu, &origin, 1.0 / 3.0, 1.0).unwrap();
        let lhs = f_a(&big_mu, &big_nu, a + 1).unwrap();
        let rhs = 3.0 * f_a(&mu, &nu, a).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs), "{lhs} vs {rhs}");
    }

    #[test]
    fn blowup_round_trips(mu in measure(2), x in prop::collection::vec(-1.0f64..1.0, 2), r in 0.01f64..3.0, c in 0.1f64..10.0) {
        let back = inverse_blowup(&blowup(&mu, &x, r, c).unwrap(), &x, r, c).unwrap();
        prop_assert!(f_a(&back, &mu, 3).unwrap() <= 1e-9);
    }

    #[test]
    fn summed_metric_is_bounded(mu in measure(1), nu in measure(1)) {
        let m = d_metric(&mu, &nu, 12).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&m.value));
        prop_assert!(m.certified_error <= 0.5f64.powi(12));
    }
}

#[test]
fn best_constant_undoes_a_scaling() {
    let nu = AtomicMeasure::from_atoms(1, &[([-0.4], 1.0), ([0.3], 2.0)]).unwrap();
    let mu = nu.scaled(0.25).unwrap();
    let best = best_constant(&mu, &nu, 1).unwrap();
    assert!((best.c - 4.0).abs() <= 4.0 * 1e-5, "{}", best.c);
    assert!(best.value <= 1e-6);
}

#[test]
fn far_mass_is_invisible() {
    let mu = AtomicMeasure::dirac(&[10.0], 5.0).unwrap();
    let zero = AtomicMeasure::zero(1);
    assert_eq!(f_a(&mu, &zero, 2).unwrap(), 0.0);
    assert_eq!(f_a(&mu, &zero, 3).unwrap(), 5.0 * 3.5);
}
