use haegan::autodiff::{Graph, ParamKind, ParamStore};
use haegan::layers::ops;
use haegan::lorentz::{self, Curvature, LorentzPoint};
use haegan::optim::{AdamConfig, RiemannianAdam, RiemannianSgd, StepLr};
use haegan::Matrix;

fn point_param(store: &mut ParamStore, spatial: &[f64], k: Curvature) -> haegan::autodiff::ParamId {
    let p = LorentzPoint::from_spatial(spatial, k);
    store.add("x", Matrix::row_vector(p.coords()), ParamKind::Manifold(k))
}

/// Loads `d(x, target)^2` gradients into the store.
fn distance_grad(store: &mut ParamStore, id: haegan::autodiff::ParamId, target: &LorentzPoint, k: Curvature) -> f64 {
    let mut g = Graph::new();
    let x = g.param(store, id);
    let t = g.constant(Matrix::row_vector(target.coords()));
    let d = ops::rowwise_distance(&mut g, x, t, k).unwrap();
    let sq = g.square(d);
    let loss = g.sum(sq);
    store.zero_grad();
    g.backward(loss).unwrap();
    g.accumulate_grads(store);
    g.value(d).item()
}

fn current(store: &ParamStore, id: haegan::autodiff::ParamId, k: Curvature) -> LorentzPoint {
    LorentzPoint::from_coords(store.get(id).value.row(0), k, 1e-6).unwrap()
}

#[test]
fn adam_reaches_a_target_point_and_stays_on_the_manifold() {
    for (k, start, goal) in [
        (-1.0, vec![0.0, 0.0], vec![1.0, -2.0]),
        (-0.5, vec![0.5, 0.2, -0.3], vec![-0.5, 0.5, 0.0]),
        (-2.0, vec![0.3], vec![-1.5]),
    ] {
        let k = Curvature::new(k).unwrap();
        let mut store = ParamStore::new();
        let id = point_param(&mut store, &start, k);
        let target = LorentzPoint::from_spatial(&goal, k);
        let mut opt = RiemannianAdam::new(AdamConfig::new(1e-2, 0.9, 0.999));
        let mut reached = None;
        for step in 0..500 {
            distance_grad(&mut store, id, &target, k);
            opt.step(&mut store).unwrap();
            let x = &store.get(id).value;
            assert!(lorentz::closure_error(x.row(0), k) <= 1e-8, "step {step}");
            let d = lorentz::distance(&current(&store, id, k), &target).unwrap();
            if d < 1e-3 {
                reached = Some(step + 1);
                break;
            }
        }
        assert!(reached.is_some(), "no convergence for {goal:?}");
    }
}

#[test]
fn adam_without_moments_is_normalized_gradient_descent() {
    let k = Curvature::new(-1.3).unwrap();
    let target = LorentzPoint::from_spatial(&[0.7, -0.4], k);
    let eps = AdamConfig::default().eps;
    let lr = 0.05;

    let mut a = ParamStore::new();
    let ia = point_param(&mut a, &[-0.5, 1.0], k);
    let mut b = a.clone();
    let mut adam = RiemannianAdam::new(AdamConfig::new(lr, 0.0, 0.0));
    for _ in 0..20 {
        distance_grad(&mut a, ia, &target, k);
        adam.step(&mut a).unwrap();

        distance_grad(&mut b, ia, &target, k);
        let x = current(&b, ia, k);
        let rg = haegan::autodiff::riemannian_grad(&x, b.get(ia).grad.row(0)).unwrap();
        let sgd = RiemannianSgd { lr: lr / (rg.lorentz_norm() + eps) };
        sgd.step(&mut b).unwrap();

        for (u, v) in a.get(ia).value.data().iter().zip(b.get(ia).value.data()) {
            assert!((u - v).abs() <= 1e-12 * (1.0 + v.abs()), "{u} vs {v}");
        }
    }
}

#[test]
fn step_schedule_halves_exactly_at_the_boundary() {
    let k = Curvature::new(-1.0).unwrap();
    let mut store = ParamStore::new();
    let id = point_param(&mut store, &[0.2, 0.1], k);
    store.add("w", Matrix::from_vec(1, 2, vec![1.0, -1.0]), ParamKind::Euclidean);
    let target = LorentzPoint::from_spatial(&[1.0, 1.0], k);
    let mut opt = RiemannianAdam::new(AdamConfig::new(0.1, 0.9, 0.999)).with_schedule(StepLr { step_size: 10, gamma: 0.5 });
    let mut lrs = Vec::new();
    for _ in 0..25 {
        lrs.push(opt.lr());
        distance_grad(&mut store, id, &target, k);
        opt.step(&mut store).unwrap();
    }
    for (i, &lr) in lrs.iter().enumerate() {
        let expected = match i {
            0..=9 => 0.1,
            10..=19 => 0.05,
            _ => 0.025,
        };
        assert_eq!(lr, expected, "step {i}");
    }
}

#[test]
fn non_finite_gradient_leaves_parameters_untouched() {
    let k = Curvature::new(-1.0).unwrap();
    let mut store = ParamStore::new();
    let id = point_param(&mut store, &[0.2, 0.1], k);
    let before = store.get(id).value.clone();
    store.get_mut(id).grad = Matrix::from_vec(1, 3, vec![0.0, f64::NAN, 1.0]);
    let mut opt = RiemannianAdam::new(AdamConfig::default());
    assert!(opt.step(&mut store).is_err());
    assert_eq!(store.get(id).value, before);
    assert_eq!(opt.steps(), 0);
}
