use haegan::layers::WrappedNormal;
use haegan::lorentz::{self, Curvature, LorentzPoint, TangentVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn curvature() -> impl Strategy<Value = Curvature> {
    (0.25f64..2.0).prop_map(|c| Curvature::new(-c).unwrap())
}

fn spatial(n: usize, scale: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-scale..scale, n)
}

/// A point, a second point and a tangent vector at the first, all in the same
/// dimension and curvature.
fn setup() -> impl Strategy<Value = (LorentzPoint, LorentzPoint, Vec<f64>)> {
    (curvature(), 1usize..=6).prop_flat_map(|(k, n)| {
        (spatial(n, 1.5), spatial(n, 1.5), spatial(n + 1, 1.0)).prop_map(move |(a, b, v)| {
            let x = LorentzPoint::from_spatial(&a, k);
            let y = LorentzPoint::from_spatial(&b, k);
            let v = TangentVector::projected(x.clone(), v).unwrap().into_components();
            (x, y, v)
        })
    })
}

/// Lifting rounds the time component, so the closure error of a point grows
/// with the square of its time coordinate.
fn closure_ok(coords: &[f64], k: Curvature) -> bool {
    lorentz::closure_error(coords, k) <= 1e-9 * 1f64.max(-k.value() * coords[0] * coords[0])
}

fn norm(v: &[f64]) -> f64 {
    lorentz::lorentz_inner(v, v).unwrap().max(0.0).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn exp_map_stays_on_hyperboloid((x, _y, v) in setup()) {
        let p = lorentz::exp_map(&x, &v).unwrap();
        prop_assert!(closure_ok(p.coords(), x.curvature()), "closure {}", p.closure_error());
    }

    #[test]
    fn log_inverts_exp((x, _y, v) in setup()) {
        let p = lorentz::exp_map(&x, &v).unwrap();
        let back = lorentz::log_map(&x, &p).unwrap();
        for (a, b) in back.components().iter().zip(&v) {
            prop_assert!((a - b).abs() <= 1e-6 * (1.0 + norm(&v)));
        }
    }

    #[test]
    fn log_norm_is_distance((x, y, _v) in setup()) {
        let u = lorentz::log_map(&x, &y).unwrap();
        let d = lorentz::distance(&x, &y).unwrap();
        prop_assert!((u.lorentz_norm() - d).abs() <= 1e-6 * (1.0 + d));
    }

    #[test]
    fn transport_preserves_inner_products((x, y, v) in setup(), w in spatial(7, 1.0)) {
        let w = TangentVector::projected(x.clone(), w[..x.coords().len()].to_vec()).unwrap().into_components();
        let pv = lorentz::parallel_transport(&x, &y, &v).unwrap();
        let pw = lorentz::parallel_transport(&x, &y, &w).unwrap();
        let before = lorentz::lorentz_inner(&v, &w).unwrap();
        let after = lorentz::lorentz_inner(pv.components(), pw.components()).unwrap();
        let scale = 1f64.max(norm(&v) * norm(&w));
        prop_assert!((before - after).abs() <= 1e-8 * scale, "{before} vs {after}");
        // The result is tangent at the destination.
        let tangency = lorentz::lorentz_inner(y.coords(), pv.components()).unwrap();
        prop_assert!(tangency.abs() <= 1e-8 * 1f64.max(norm(&v)) * y.time());
    }

    #[test]
    fn distance_is_a_metric((x, y, _v) in setup(), c in spatial(6, 1.5)) {
        let z = LorentzPoint::from_spatial(&c[..x.dim()], x.curvature());
        let dxy = lorentz::distance(&x, &y).unwrap();
        let dyx = lorentz::distance(&y, &x).unwrap();
        prop_assert!(dxy >= 0.0);
        prop_assert!((dxy - dyx).abs() <= 1e-12 * (1.0 + dxy));
        prop_assert!(lorentz::distance(&x, &x).unwrap() <= 1e-7);
        let via = lorentz::distance(&x, &z).unwrap() + lorentz::distance(&z, &y).unwrap();
        prop_assert!(dxy <= via + 1e-9);
    }

    #[test]
    fn geodesic_splits_distance((x, y, _v) in setup(), t in 0.0f64..=1.0) {
        let p = lorentz::geodesic_point(&x, &y, t).unwrap();
        let d = lorentz::distance(&x, &y).unwrap();
        prop_assert!(closure_ok(p.coords(), x.curvature()));
        let dxp = lorentz::distance(&x, &p).unwrap();
        let dpy = lorentz::distance(&p, &y).unwrap();
        prop_assert!((dxp - t * d).abs() <= 1e-6 * (1.0 + d));
        prop_assert!((dxp + dpy - d).abs() <= 1e-6 * (1.0 + d));
    }

    #[test]
    fn direct_split_inverts_concat(k in curvature(), parts in prop::collection::vec(spatial(3, 2.0), 1..4)) {
        let points: Vec<LorentzPoint> = parts.iter().map(|s| LorentzPoint::from_spatial(s, k)).collect();
        let cat = lorentz::direct_concat(&points).unwrap();
        prop_assert!(closure_ok(cat.coords(), k));
        let back = lorentz::direct_split(&cat, &vec![3; points.len()]).unwrap();
        for (a, b) in back.iter().zip(&points) {
            prop_assert_eq!(a.spatial(), b.spatial());
        }
    }

    #[test]
    fn tangent_split_inverts_concat(k in curvature(), parts in prop::collection::vec(spatial(2, 1.0), 1..4)) {
        let points: Vec<LorentzPoint> = parts.iter().map(|s| LorentzPoint::from_spatial(s, k)).collect();
        let cat = lorentz::tangent_concat(&points).unwrap();
        prop_assert!(closure_ok(cat.coords(), k));
        let back = lorentz::tangent_split(&cat, &vec![2; points.len()]).unwrap();
        for (a, b) in back.iter().zip(&points) {
            for (u, v) in a.coords().iter().zip(b.coords()) {
                prop_assert!((u - v).abs() <= 1e-6 * (1.0 + v.abs()));
            }
        }
    }

    #[test]
    fn centroid_of_points_is_on_hyperboloid(
        k in curvature(),
        pts in prop::collection::vec(spatial(4, 2.0), 1..6),
        w in prop::collection::vec(0.1f64..3.0, 6),
    ) {
        let points: Vec<LorentzPoint> = pts.iter().map(|s| LorentzPoint::from_spatial(s, k)).collect();
        let c = lorentz::centroid(&points, &w[..points.len()]).unwrap();
        prop_assert!(closure_ok(c.coords(), k));
        // A single point is its own centroid.
        let single = lorentz::centroid(&points[..1], &[w[0]]).unwrap();
        for (a, b) in single.coords().iter().zip(points[0].coords()) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn e2h_lands_on_hyperboloid(k in curvature(), t in spatial(5, 3.0)) {
        let p = lorentz::e2h(&t, k);
        prop_assert!(closure_ok(p.coords(), k));
    }

    #[test]
    fn wrapped_normal_samples_are_on_hyperboloid(k in curvature(), mu in spatial(4, 1.5), seed in any::<u64>()) {
        let wn = WrappedNormal::isotropic(LorentzPoint::from_spatial(&mu, k), 2.0).unwrap();
        let batch = wn.sample_batch(&mut ChaCha8Rng::seed_from_u64(seed), 16);
        for r in 0..batch.rows() {
            prop_assert!(closure_ok(batch.row(r), k), "row {r}");
        }
    }
}

/// The tangent coordinates of wrapped-normal samples at the mean have the
/// configured mean and variances.
#[test]
fn wrapped_normal_moments_in_tangent_space() {
    let k = Curvature::new(-0.7).unwrap();
    let mean = LorentzPoint::from_spatial(&[0.4, -0.2, 0.9], k);
    let var = vec![0.5, 1.0, 2.0];
    let wn = WrappedNormal::new(mean.clone(), var.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let count = 40_000;
    let origin = LorentzPoint::origin(3, k);
    let mut sum = [0.0; 3];
    let mut sq = [0.0; 3];
    for _ in 0..count {
        let p = wn.sample(&mut rng);
        // Carry the log back to the origin, where tangent vectors are plain
        // spatial vectors.
        let u = lorentz::log_map(&mean, &p).unwrap();
        let at_o = lorentz::parallel_transport(&mean, &origin, u.components()).unwrap();
        for i in 0..3 {
            let c = at_o.components()[i + 1];
            sum[i] += c;
            sq[i] += c * c;
        }
    }
    for i in 0..3 {
        let m = sum[i] / count as f64;
        let v = sq[i] / count as f64 - m * m;
        // Five standard errors.
        assert!(m.abs() < 5.0 * (var[i] / count as f64).sqrt(), "mean {i}: {m}");
        assert!((v - var[i]).abs() < 5.0 * var[i] * (2.0 / count as f64).sqrt(), "variance {i}: {v}");
    }
}
