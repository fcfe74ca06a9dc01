use haartv::gradient::{renormalized_gradients, tv_estimate_averaged, tv_estimate_level};
use haartv::haar::{continuum_scale, forward};
use haartv::metrics::discrete_tv;
use haartv::phantom::gaussian_bump;
use haartv::{GradientMode, LevelWeights, Volume};
use proptest::prelude::*;

fn volume() -> impl Strategy<Value = Volume<f64>> {
    (1usize..=3, 1u32..=4).prop_flat_map(|(s, m)| {
        let side = 1usize << m;
        prop::collection::vec(-5.0f64..5.0, side.pow(s as u32))
            .prop_map(move |data| Volume::new(vec![side; s], data).unwrap())
    })
}

proptest! {
    #[test]
    fn tv_estimate_is_positively_homogeneous(v in volume(), c in 0.01f64..100.0) {
        let p = forward(&v).unwrap();
        let q = forward(&v.map(|x| c * x)).unwrap();
        for n in 0..p.levels() {
            let (a, b) = (tv_estimate_level(&p, n).unwrap(), tv_estimate_level(&q, n).unwrap());
            prop_assert!((c * a - b).abs() <= 1e-10 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn averaged_estimate_is_a_convex_combination(v in volume(), a in 0usize..4, b in 0usize..4) {
        let p = forward(&v).unwrap();
        let top = p.levels() - 1;
        let (n0, n1) = (a.min(b).min(top), a.max(b).min(top));
        let w = LevelWeights::new(n0, n1).unwrap();
        let est: Vec<f64> = (n0..=n1).map(|n| tv_estimate_level(&p, n).unwrap()).collect();
        let avg = tv_estimate_averaged(&p, &w).unwrap();
        let lo = est.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = est.iter().copied().fold(0.0, f64::max);
        prop_assert!(lo - 1e-12 * hi <= avg && avg <= hi * (1.0 + 1e-12));
    }
}

#[test]
fn linear_ramp_recovers_unit_slope() {
    let m = 9u32;
    let k = 1.0 / continuum_scale::<f64>(1, m);
    let v = Volume::from_unit_fn(vec![1 << m], |x| k * x[0]).unwrap();
    let p = forward(&v).unwrap();
    for n in 0..p.levels() {
        for smp in renormalized_gradients(&p, n, GradientMode::Smooth).unwrap() {
            assert!(
                (smp.vec[0] - 1.0).abs() <= (-(m as f64)).exp2(),
                "level {n}: {:?}",
                smp.vec
            );
        }
    }
}

#[test]
fn step_gradients_point_along_the_normal() {
    for s in 2..=3usize {
        let side = 32;
        // edge normal to storage axis s-1, i.e. coordinate x_1
        let v = Volume::from_fn(vec![side; s], |i| if i[s - 1] >= 13 { 1.0 } else { 0.0 }).unwrap();
        let p = forward(&v).unwrap();
        let mut seen = 0;
        for n in 0..p.levels() {
            for mode in [GradientMode::Smooth, GradientMode::Edge] {
                for smp in renormalized_gradients(&p, n, mode).unwrap() {
                    if smp.length() > 0.0 {
                        seen += 1;
                        assert!(smp.vec[0] != 0.0);
                        assert!(
                            smp.vec[1..].iter().all(|t: &f64| t.abs() <= 1e-12),
                            "{:?}",
                            smp.vec
                        );
                    }
                }
            }
        }
        assert!(seen > 0);
    }
}

#[test]
fn tv_estimate_convergence_rate_is_first_order() {
    // smooth radial bump; reference is the finite-difference TV at m = 10
    let m = 10u32;
    let side = 1usize << m;
    let k = 1.0 / continuum_scale::<f64>(2, m);
    let v = Volume::from_unit_fn(vec![side, side], |x| {
        k * gaussian_bump(x, &[0.5, 0.5], 0.1, 1.0)
    })
    .unwrap();
    let p = forward(&v).unwrap();
    let reference = discrete_tv(&v);
    let errs: Vec<f64> = (4..=8)
        .map(|n| (tv_estimate_level(&p, n).unwrap() - reference).abs())
        .collect();
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    assert!(
        orders.iter().all(|o| (0.6..=1.4).contains(o)),
        "consecutive orders {orders:?} (errors {errs:?})"
    );
}
