use haegan::autodiff::Graph;
use haegan::layers::{ops, WrappedNormal};
use haegan::lorentz::{self, Curvature, LorentzPoint};
use haegan::wgan::{self, critic_loss, geodesic_interpolates, gradient_penalty_at, GanConfig, GanModel, NoCallbacks};
use haegan::Matrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn row(m: &Matrix, r: usize, k: Curvature) -> LorentzPoint {
    LorentzPoint::from_spatial(&m.row(r)[1..], k)
}

/// Points from a wrapped normal kept at least `min_dist` away from `center`.
fn points_away_from(center: &LorentzPoint, count: usize, min_dist: f64, seed: u64) -> Matrix {
    let wn = WrappedNormal::isotropic(center.clone(), 1.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    while rows.len() < count {
        let p = wn.sample(&mut rng);
        if lorentz::distance(center, &p).unwrap() >= min_dist {
            rows.push(p.into_coords());
        }
    }
    Matrix::from_rows(&rows)
}

#[test]
fn distance_critic_has_unit_riemannian_gradient() {
    for (k, dim) in [(-1.0, 2), (-0.4, 5), (-2.5, 16)] {
        let k = Curvature::new(k).unwrap();
        let reference = LorentzPoint::from_spatial(&vec![0.3; dim], k);
        let points = points_away_from(&reference, 64, 0.1, dim as u64);
        let mut g = Graph::new();
        let c = g.constant(Matrix::row_vector(reference.coords()));
        let gp = gradient_penalty_at(&mut g, |g: &mut Graph, x| ops::pairwise_distance(g, x, c, k), &points, k).unwrap();
        let value = g.value(gp).item();
        assert!(value <= 1e-3, "penalty {value} at K={}", k.value());
    }
}

#[test]
fn scaled_distance_critic_has_known_penalty() {
    // D = 3 d(x, o) has gradient norm 3, so the penalty is (3 - 1)^2.
    let k = Curvature::new(-1.0).unwrap();
    let o = LorentzPoint::origin(3, k);
    let points = points_away_from(&o, 32, 0.1, 5);
    let mut g = Graph::new();
    let c = g.constant(Matrix::row_vector(o.coords()));
    let gp = gradient_penalty_at(
        &mut g,
        |g: &mut Graph, x| {
            let d = ops::pairwise_distance(g, x, c, k)?;
            Ok(g.scale(d, 3.0))
        },
        &points,
        k,
    )
    .unwrap();
    assert!((g.value(gp).item() - 4.0).abs() <= 1e-3);
}

#[test]
fn zero_critic_without_penalty_has_zero_loss() {
    let k = Curvature::new(-1.0).unwrap();
    let real = points_away_from(&LorentzPoint::origin(2, k), 8, 0.0, 1);
    let fake = points_away_from(&LorentzPoint::origin(2, k), 8, 0.0, 2);
    let mut g = Graph::new();
    let loss = critic_loss(
        &mut g,
        |g: &mut Graph, x| {
            let rows = g.shape(x).0;
            Ok(g.constant(Matrix::zeros(rows, 1)))
        },
        &real,
        &fake,
        0.0,
        k,
        &mut ChaCha8Rng::seed_from_u64(0),
    )
    .unwrap();
    assert_eq!(g.value(loss.total).item(), 0.0);
}

fn tiny_config(seed: u64) -> GanConfig {
    GanConfig {
        latent_dim: 3,
        hidden_dim: 6,
        depth_gen: 2,
        depth_critic: 2,
        output_dim: 2,
        batch_size: 16,
        epochs: 2,
        seed,
        ..GanConfig::default()
    }
}

#[test]
fn training_is_reproducible_and_stays_on_the_manifold() {
    let k = Curvature::new(-1.0).unwrap();
    let data = WrappedNormal::isotropic(LorentzPoint::origin(2, k), 0.1)
        .unwrap()
        .sample_batch(&mut ChaCha8Rng::seed_from_u64(3), 128);
    let run = || {
        let mut model = GanModel::new(tiny_config(7)).unwrap();
        let report = wgan::train(&mut model, &data, &mut NoCallbacks).unwrap();
        (model, report)
    };
    let (model, a) = run();
    let (_, b) = run();
    assert_eq!(a.history, b.history);
    assert!(a.nan_step.is_none());
    assert_eq!(a.history.len(), 2 * (128 / 16));
    let sample = model.generate(&mut ChaCha8Rng::seed_from_u64(1), 50).unwrap();
    assert!(ops::max_closure_error(&sample, k) <= 1e-9);
    for p in model.gen_store.iter().chain(model.critic_store.iter()) {
        if let haegan::autodiff::ParamKind::Manifold(k) = p.kind {
            assert!(ops::max_closure_error(&p.value, k) <= 1e-8, "{}", p.name);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn interpolates_lie_on_the_connecting_geodesic(seed in any::<u64>(), dim in 1usize..6) {
        let k = Curvature::new(-0.8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let wn = WrappedNormal::standard(LorentzPoint::origin(dim, k));
        let real = wn.sample_batch(&mut rng, 8);
        let fake = wn.sample_batch(&mut rng, 8);
        let mid = geodesic_interpolates(&real, &fake, k, &mut rng).unwrap();
        for r in 0..8 {
            let (x, y, p) = (row(&fake, r, k), row(&real, r, k), row(&mid, r, k));
            let d = lorentz::distance(&x, &y).unwrap();
            let via = lorentz::distance(&x, &p).unwrap() + lorentz::distance(&p, &y).unwrap();
            prop_assert!((via - d).abs() <= 1e-6, "{via} vs {d}");
        }
    }

    #[test]
    fn critic_loss_is_finite_on_random_batches(seed in any::<u64>()) {
        let model = GanModel::new(tiny_config(seed)).unwrap();
        let k = model.curvature;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let real = WrappedNormal::standard(LorentzPoint::origin(2, k)).sample_batch(&mut rng, 8);
        let fake = model.generate(&mut rng, 8).unwrap();
        let mut g = Graph::new();
        let critic = &model.critic;
        let store = &model.critic_store;
        let loss = critic_loss(&mut g, |g: &mut Graph, x| critic.forward(g, store, x, None), &real, &fake, 10.0, k, &mut rng).unwrap();
        prop_assert!(g.value(loss.total).item().is_finite());
    }
}
