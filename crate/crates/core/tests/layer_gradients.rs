use haegan::selftest::{layer_gradient_checks, GRADIENT_TOL, LAYER_GRADIENTS};

#[test]
fn all_layers_match_central_differences_over_many_seeds() {
    let results = layer_gradient_checks(1000..1200, 1e-5).unwrap();
    assert_eq!(results.len(), LAYER_GRADIENTS.len());
    for r in &results {
        assert_eq!(r.cases, 200);
        assert!(r.max_error <= GRADIENT_TOL, "{}: {:e}", r.name, r.max_error);
    }
}
