use fbmbt::fgn::{DyadicLevel, HurstExponent};
use fbmbt::limitlaw::{default_kappa, CorrectionSampler};
use fbmbt::rng::derive_seed;
use fbmbt::skeleton::{crossings_bruteforce, signed_crossings_closed_form, terminal_y, SkeletonPath};
use fbmbt::stats::{mc_run, summarize};
use fbmbt::studies::{relative_deviation, sample_skeleton_pair, telescoping_sides};
use fbmbt::variations::{kl_reduce, v_tilde_pq, w_pq};
use fbmbt::TestFunction2D;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn telescoping_holds_for_any_hurst(h in 0.01f64..0.99, m in 1u64..5000) {
        let (lhs, rhs) = telescoping_sides(HurstExponent::new(h).unwrap(), m);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn net_crossings_depend_only_on_the_endpoint(steps in prop::collection::vec(prop::bool::ANY, 0..400), n in 0u32..12) {
        let steps: Vec<i8> = steps.into_iter().map(|up| if up { 1 } else { -1 }).collect();
        let walk = SkeletonPath::from_steps(DyadicLevel::new(n).unwrap(), &steps).unwrap();
        let horizon = steps.len();
        let mut brute = crossings_bruteforce(&walk, horizon).unwrap().net();
        brute.retain(|_, v| *v != 0);
        prop_assert_eq!(brute, signed_crossings_closed_form(&walk, horizon).unwrap());
        let end: i64 = steps.iter().map(|&s| s as i64).sum();
        prop_assert_eq!(terminal_y(&walk, horizon).unwrap(), end as f64 * (-(n as f64) / 2.0).exp2());
    }

    #[test]
    fn skeleton_sums_reduce_to_the_terminal_value(seed in any::<u64>(), n in 0u32..10, t in 0.1f64..1.5, pq in 0usize..4) {
        let (p, q) = [(3, 0), (2, 1), (1, 2), (0, 3)][pq];
        let level = DyadicLevel::new(n).unwrap();
        let f = TestFunction2D::SinCos(0.7, 1.3);
        let (x, w) = sample_skeleton_pair(HurstExponent::new(0.3).unwrap(), level, t, seed).unwrap();
        let y = terminal_y(&w, level.skeleton_steps(t)).unwrap();
        let direct = v_tilde_pq(&f, &x, &w, t, p, q).unwrap();
        let reduced = kl_reduce(&f, &x, &w, t, p, q).unwrap();
        let one_sided = w_pq(&f, &x, y, p, q).unwrap();
        prop_assert!(relative_deviation(direct.value, reduced.value, direct.abs_sum.max(reduced.abs_sum)) <= 1e-10);
        prop_assert!(relative_deviation(direct.value, one_sided.value, direct.abs_sum.max(one_sided.abs_sum)) <= 1e-10);
    }
}

/// For `f = x^3` the Brownian-clock correction is `6 k1 B_{|Y|}` given `Y`, so
/// its variance grows linearly in `|Y|` with slope `36 k1^2`.
#[test]
fn brownian_clock_correction_is_conditionally_gaussian() {
    let k = default_kappa();
    let sampler = CorrectionSampler::with_capacity(k, 512).unwrap();
    let f = TestFunction2D::Monomial(3, 0);
    let mut draws = mc_run(20_000, derive_seed(0xC0DE, 1), None, |_, s| {
        let c = sampler.fbmbt(&f, 1.0, Some(1.0 / 64.0), s)?;
        Ok((c.t_effective.abs(), c.value))
    })
    .unwrap();
    draws.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for bucket in draws.chunks(draws.len() / 5) {
        xs.push(bucket.iter().map(|d| d.0).sum::<f64>() / bucket.len() as f64);
        ys.push(summarize(&bucket.iter().map(|d| d.1).collect::<Vec<_>>()).variance);
    }
    let (mx, my) = (xs.iter().sum::<f64>() / 5.0, ys.iter().sum::<f64>() / 5.0);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let target = 36.0 * k.kappa1 * k.kappa1;
    assert!((slope / target - 1.0).abs() <= 0.10, "slope {slope} vs {target}");
}
