mod common;

use approx::assert_abs_diff_eq;
use mxlogit::predict::outcome_accuracy;
use mxlogit::*;

fn fit() -> (LongChoiceData, Fit) {
    let data = common::yogurt();
    let spec = ModelSpec::preference(["price", "feat", "brand"]);
    let fit = estimate(&data, &spec, &EstimationOptions::default()).unwrap();
    (data, fit)
}

#[test]
fn probabilities_sum_to_one_per_observation() {
    let (data, fit) = fit();
    let frame = predict_probabilities(&fit, None, &PredictOptions::default()).unwrap();
    for r in data.obs_ranges() {
        let s: f64 = frame.rows[r.clone()].iter().map(|row| row.predicted_prob).sum();
        assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
    }
}

#[test]
fn subset_prediction_matches_reference_values() {
    let (data, fit) = fit();
    let subset = data.filter_obs(&["13", "42"]).unwrap();
    let frame = predict_probabilities(&fit, Some(&subset), &PredictOptions::default()).unwrap();
    let want = [
        0.43685145, 0.03312986, 0.19155548, 0.33846321, 0.60764778, 0.02602007, 0.17803313, 0.18829902,
    ];
    for (row, w) in frame.rows.iter().zip(want) {
        assert_abs_diff_eq!(row.predicted_prob, w, epsilon = 1e-4);
    }
    assert_eq!(frame.rows[0].obs_id, "13");
    assert_eq!(frame.rows[7].obs_id, "42");
}

#[test]
fn intervals_bracket_point_and_are_reproducible() {
    let (data, fit) = fit();
    let subset = data.filter_obs(&["1", "2", "3"]).unwrap();
    let opts = PredictOptions {
        ci: Some(0.95),
        kr_draws: 2000,
        seed: 7,
        ..Default::default()
    };
    let a = predict_probabilities(&fit, Some(&subset), &opts).unwrap();
    let b = predict_probabilities(&fit, Some(&subset), &opts).unwrap();
    assert_eq!(a, b);
    for row in &a.rows {
        let (lo, hi) = (row.predicted_prob_lower.unwrap(), row.predicted_prob_upper.unwrap());
        assert!(lo <= row.predicted_prob && row.predicted_prob <= hi);
        assert!(hi - lo < 0.2);
    }
}

#[test]
fn outcomes_pick_one_alternative_each() {
    let (data, fit) = fit();
    let opts = PredictOptions {
        seed: 1,
        return_data: true,
        ..Default::default()
    };
    let frame = predict_outcomes(&fit, None, &opts).unwrap();
    for r in data.obs_ranges() {
        let chosen = frame.rows[r.clone()]
            .iter()
            .filter(|row| row.predicted_outcome == Some(true))
            .count();
        assert_eq!(chosen, 1);
    }
    let acc = outcome_accuracy(&frame, &data).unwrap();
    assert!((0.30..0.45).contains(&acc), "{acc}");
    let echoed = frame.data.unwrap();
    assert!(echoed.iter().any(|(name, _)| name == "price"));
    assert_eq!(predict_outcomes(&fit, None, &opts).unwrap().rows, frame.rows);
}

#[test]
fn mixed_logit_prediction_uses_fit_draws() {
    let data = common::yogurt();
    let spec = ModelSpec::preference(["price", "feat", "brand"])
        .with_rand_par("feat", Dist::Normal)
        .with_panel(true);
    let opts = EstimationOptions {
        num_draws: 30,
        ..Default::default()
    };
    let fit: Fit = estimate(&data, &spec, &opts).unwrap();
    let subset = data.filter_obs(&["5"]).unwrap();
    let frame = predict_probabilities(&fit, Some(&subset), &PredictOptions::default()).unwrap();
    let total: f64 = frame.probabilities().iter().sum();
    assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
}

#[test]
fn newdata_without_outcome_is_accepted() {
    let (_, fit) = fit();
    let csv = "obsID,price,feat,brand\n1,8.1,0,dannon\n1,6.1,0,hiland\n1,7.9,1,weight\n1,10.8,0,yoplait\n";
    let data = LongChoiceData::read_csv(csv.as_bytes(), &Schema::unlabeled("obsID")).unwrap();
    let frame = predict_probabilities(&fit, Some(&data), &PredictOptions::default()).unwrap();
    assert_eq!(frame.rows.len(), 4);
    // featured weight beats its unfeatured price disadvantage against hiland
    assert!(frame.rows[2].predicted_prob > frame.rows[1].predicted_prob);
}
