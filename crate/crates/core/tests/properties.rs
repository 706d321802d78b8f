mod common;

use mxlogit::estimation::Prepared;
use mxlogit::inference::{krinsky_robb_draws, vcov};
use mxlogit::likelihood::ln_chosen_prob;
use mxlogit::predict::sample_index;
use mxlogit::spec::initial_values;
use mxlogit::*;
use proptest::prelude::*;

fn utilities() -> impl Strategy<Value = (Vec<f64>, usize)> {
    (2usize..6).prop_flat_map(|j| (prop::collection::vec(-30.0..30.0_f64, j), 0..j))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn chosen_probability_is_softmax((v, c) in utilities()) {
        let m = v.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        let denom: f64 = v.iter().map(|x| (x - m).exp()).sum();
        let direct = (v[c] - m).exp() / denom;
        let p = ln_chosen_prob(&v, c).exp();
        prop_assert!(((p - direct) / direct).abs() < 1e-12);
    }

    #[test]
    fn probabilities_sum_to_one((v, _) in utilities()) {
        let total: f64 = (0..v.len()).map(|c| ln_chosen_prob(&v, c).exp()).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shifting_all_utilities_changes_nothing((v, c) in utilities(), shift in -100.0..100.0_f64) {
        let moved: Vec<f64> = v.iter().map(|x| x + shift).collect();
        let a = ln_chosen_prob(&v, c);
        let b = ln_chosen_prob(&moved, c);
        prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
    }

    #[test]
    fn odds_ratios_ignore_other_alternatives((v, c) in utilities(), extra in -30.0..30.0_f64) {
        let k = (c + 1) % v.len();
        let before = ln_chosen_prob(&v, c) - ln_chosen_prob(&v, k);
        let mut wider = v.clone();
        wider.push(extra);
        let after = ln_chosen_prob(&wider, c) - ln_chosen_prob(&wider, k);
        prop_assert!((before - after).abs() < 1e-9);
        prop_assert!((before - (v[c] - v[k])).abs() < 1e-9);
    }

    #[test]
    fn sampled_index_lands_in_its_segment(raw in prop::collection::vec(0.01..1.0_f64, 2..6), u in 0.0..1.0_f64) {
        let total: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let i = sample_index(&p, u);
        let below: f64 = p[..i].iter().sum();
        prop_assert!(below <= u + 1e-12 && u < below + p[i] + 1e-12);
    }

    #[test]
    fn inverse_of_positive_definite_hessian_is_positive_definite(
        a in prop::collection::vec(-1.0..1.0_f64, 9),
        x in prop::collection::vec(-1.0..1.0_f64, 3),
    ) {
        // H = A'A + I
        let mut h = vec![0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                h[i * 3 + j] = (0..3).map(|k| a[k * 3 + i] * a[k * 3 + j]).sum::<f64>() + f64::from(u8::from(i == j));
            }
        }
        let v = vcov(&Matrix::from_vec(3, 3, h), None).unwrap();
        let s = v.as_slice();
        for i in 0..3 {
            for j in 0..3 {
                prop_assert_eq!(s[i * 3 + j], s[j * 3 + i]);
            }
        }
        let quad: f64 = (0..3).map(|i| (0..3).map(|j| x[i] * s[i * 3 + j] * x[j]).sum::<f64>()).sum();
        let norm: f64 = x.iter().map(|v| v * v).sum();
        prop_assert!(quad >= 0.0 && (norm == 0.0 || quad > 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn preference_and_wtp_likelihoods_agree(
        seed in 0u64..1000,
        n_alts in 2usize..5,
        alpha in 0.1..3.0_f64,
        b1 in -2.0..2.0_f64,
        b2 in -2.0..2.0_f64,
    ) {
        let data = common::synthetic(seed, 8, n_alts);
        let pref = ModelSpec::preference(["price", "x1", "x2"]);
        let wtp = ModelSpec::wtp(["x1", "x2"], "price");
        let o = EstimationOptions::default();
        let pp = Prepared::<f64>::new(&data, &pref, &o).unwrap();
        let pw = Prepared::<f64>::new(&data, &wtp, &o).unwrap();
        let a = pp.context(&pref).unwrap().loglik(&[-alpha, b1, b2], None).unwrap();
        let b = pw.context(&wtp).unwrap().loglik(&[alpha, b1 / alpha, b2 / alpha], None).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn mixed_gradient_matches_finite_differences(
        seed in 0u64..1000,
        theta in prop::collection::vec(-1.0..1.0_f64, 5),
        dist in prop::sample::select(vec![Dist::Normal, Dist::LogNormal, Dist::CensoredNormal]),
    ) {
        let data = common::synthetic(seed, 6, 3);
        let spec = ModelSpec::preference(["price", "x1", "x2"])
            .with_rand_par("x1", dist)
            .with_rand_par("x2", Dist::Normal)
            .with_panel(true);
        let o = EstimationOptions { num_draws: 16, ..Default::default() };
        let prep = Prepared::<f64>::new(&data, &spec, &o).unwrap();
        let mut ctx = prep.context(&spec).unwrap();
        let err = common::fd_relative_error(|x, g| ctx.loglik(x, g).unwrap(), &theta, 1e-6);
        prop_assert!(err < 1e-5, "relative error {}", err);
    }

    #[test]
    fn start_values_depend_only_on_seed_and_run(seed in any::<u64>(), run in 2usize..50) {
        let data = common::synthetic(1, 4, 3);
        let spec = ModelSpec::wtp(["x1", "x2"], "price");
        let o = EstimationOptions { seed, ..Default::default() };
        let layout = Prepared::<f64>::new(&data, &spec, &o).unwrap().layout;
        let a: Vec<f64> = initial_values(&layout, &o, run).unwrap();
        let b: Vec<f64> = initial_values(&layout, &o, run).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a[0] >= 0.0 && a[0] <= 2.0);
        prop_assert!(a[1..].iter().all(|v| (-1.0..=1.0).contains(v)));
    }
}

#[test]
fn krinsky_robb_moments_converge() {
    let theta = [1.0, -2.0];
    let v = Matrix::from_vec(2, 2, vec![0.04, 0.01, 0.01, 0.09]);
    let kr = krinsky_robb_draws(&theta, &v, 100_000, 3).unwrap();
    assert!(!kr.repaired);
    let n = kr.draws.rows() as f64;
    for (i, &t) in theta.iter().enumerate() {
        let col = kr.draws.column(i);
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((mean - t).abs() < 5e-3, "{mean}");
        assert!((var - v.as_slice()[i * 3]).abs() < 0.03 * v.as_slice()[i * 3], "{var}");
    }
}

#[test]
fn multistart_results_do_not_depend_on_core_count() {
    let data = common::synthetic(9, 30, 3);
    let spec = ModelSpec::wtp(["x1", "x2"], "price");
    let run = |cores| {
        let o = EstimationOptions {
            num_multi_starts: 4,
            num_cores: cores,
            seed: 2,
            ..Default::default()
        };
        let fit: Fit = estimate(&data, &spec, &o).unwrap();
        fit.all_runs
            .iter()
            .map(|r| (r.theta_hat.clone(), r.loglik, r.exit_status))
            .collect::<Vec<_>>()
    };
    assert_eq!(run(1), run(3));
}
