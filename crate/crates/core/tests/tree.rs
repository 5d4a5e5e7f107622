use blowzoom::tree::{
    construct_tree_approximant, distribution_distance, empirical_distribution, micromeasure_orbit, parse_word,
    pi_metric, zoom_n, TreeMeasure, TreeState,
};

fn example() -> TreeMeasure {
    TreeMeasure::new(2, 2, vec![0.1, 0.3, 0.4, 0.2]).unwrap()
}

#[test]
fn zooming_an_approximant_reaches_the_target() {
    let nu = TreeMeasure::new(2, 1, vec![0.25, 0.75]).unwrap();
    let ap = construct_tree_approximant(&example(), &nu, 2).unwrap();
    assert!(ap.zero_cylinders.is_empty());
    let x = parse_word("121", 2).unwrap();
    let state = zoom_n(&TreeState::new(ap.measure.clone(), x.clone()).unwrap(), 2).unwrap();
    assert_eq!(state.word, vec![1]);
    assert!(pi_metric(&state.measure, &nu).unwrap() <= 1e-15);
    let orbit = micromeasure_orbit(&ap.measure, &x, &[0, 1, 2]).unwrap();
    assert_eq!(orbit[0], ap.measure);
    assert!(pi_metric(&orbit[2], &nu).unwrap() <= 1e-15);
}

#[test]
fn microdistributions() {
    let uniform = TreeMeasure::<f64>::uniform(2, 4).unwrap();
    let x = parse_word("1212", 2).unwrap();
    let p = empirical_distribution(&uniform, &x, 3).unwrap();
    assert_eq!(p.len(), 3);
    assert!((p.iter().map(|s| s.1).sum::<f64>() - 1.0).abs() <= 1e-12);
    assert!(distribution_distance(&p, &p).unwrap().abs() <= 1e-12);
    // Uniform measures zoom to uniform measures, so only the words differ.
    let y = parse_word("2121", 2).unwrap();
    let q = empirical_distribution(&uniform, &y, 1).unwrap();
    let one = empirical_distribution(&uniform, &x, 1).unwrap();
    let d = distribution_distance(&one, &q).unwrap();
    assert!((d - 0.5).abs() <= 1e-9, "{d}");
}

#[test]
fn zero_cylinders_are_reported() {
    let mu = TreeMeasure::new(2, 1, vec![1.0, 0.0]).unwrap();
    let nu = TreeMeasure::<f64>::uniform(2, 1).unwrap();
    let ap = construct_tree_approximant(&mu, &nu, 1).unwrap();
    assert_eq!(ap.zero_cylinders, vec![vec![2]]);
    assert!(ap.measure.condition(&[2]).is_err());
}
