//! Property tests for the structural invariants of counting,
//! normalization, fitting, and prediction.

use proptest::prelude::*;

use mtdchain::{
    count_frequencies, empirical_distribution, fit, normalize, parse_sequence, solve_lp,
    History, LinearProgram, LpStatus, MtdModel, Sequence, StateSpace,
};

fn wdl_sequence(max_len: usize) -> impl Strategy<Value = Sequence> {
    prop::collection::vec(0..3usize, 1..max_len)
        .prop_map(|states| Sequence::from_indices(StateSpace::wdl(), states).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn count_total_is_window_count(seq in wdl_sequence(60), lag in 1..12usize) {
        let f = count_frequencies(&seq, lag).unwrap();
        prop_assert_eq!(f.total(), seq.len().saturating_sub(lag) as u64);
    }

    #[test]
    fn normalized_columns_are_stochastic_or_zero(seq in wdl_sequence(60), lag in 1..12usize) {
        let f = count_frequencies(&seq, lag).unwrap();
        let q = normalize::<f64>(&f);
        for j in 0..3 {
            let sum: f64 = q.column(j).iter().sum();
            if f.column_sum(j) == 0 {
                prop_assert!(q.column_is_zero(j));
            } else {
                prop_assert!((sum - 1.0).abs() <= 1e-9, "column {} sums to {}", j, sum);
                prop_assert!(!q.column_is_zero(j));
            }
        }
    }

    #[test]
    fn empirical_distribution_is_proper(seq in wdl_sequence(200)) {
        let d = empirical_distribution::<f64>(&seq).unwrap();
        let sum: f64 = d.probs().iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
        prop_assert!(d.probs().iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn render_parse_round_trip(seq in wdl_sequence(80)) {
        let reparsed = parse_sequence(&seq.render(), seq.space()).unwrap();
        prop_assert_eq!(reparsed, seq);
    }

    #[test]
    fn optimal_lp_solutions_are_feasible(
        v in 2..5usize,
        seed_coeffs in prop::collection::vec(-1.0..1.0f64, 2..40),
    ) {
        // Assemble a box-bounded program from the raw coefficient pool.
        let mut it = seed_coeffs.into_iter().cycle();
        let mut lp = LinearProgram::<f64>::new((0..v).map(|_| it.next().unwrap()).collect());
        for i in 0..v {
            let mut row = vec![0.0; v];
            row[i] = 1.0;
            lp.ub_constraints.push((row, 1.0 + it.next().unwrap().abs()));
        }
        let row: Vec<f64> = (0..v).map(|_| it.next().unwrap()).collect();
        lp.ub_constraints.push((row, it.next().unwrap()));

        let sol = solve_lp(&lp).unwrap();
        let again = solve_lp(&lp).unwrap();
        prop_assert_eq!(sol.status, again.status, "status must be deterministic");
        if sol.status == LpStatus::Optimal {
            prop_assert_eq!(&sol, &again, "solution vector must be deterministic");
            prop_assert!(sol.max_violation(&lp) <= 1e-8);
            prop_assert!(sol.x.iter().all(|&xi| xi >= -1e-12));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fitted_models_satisfy_weight_and_residual_invariants(
        seq in wdl_sequence(90).prop_filter("long enough", |s| s.len() >= 8),
        k in 1..6usize,
    ) {
        let model: MtdModel<f64> = fit(&seq, k).unwrap();

        let sum: f64 = model.lambda().iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-9);
        prop_assert!(model.lambda().iter().all(|&l| l >= 0.0));

        let recomputed = model.residual_for(model.lambda());
        prop_assert!((model.lp_residual() - recomputed).abs() <= 1e-8);

        let uniform = vec![1.0 / k as f64; k];
        prop_assert!(model.lp_residual() <= model.residual_for(&uniform) + 1e-8);
        for l in 0..k {
            let mut vertex = vec![0.0; k];
            vertex[l] = 1.0;
            prop_assert!(model.lp_residual() <= model.residual_for(&vertex) + 1e-8);
        }
    }

    #[test]
    fn predictions_are_proper_distributions_for_every_history(
        seq in wdl_sequence(60).prop_filter("long enough", |s| s.len() >= 6),
        k in 1..4usize,
    ) {
        let model: MtdModel<f64> = fit(&seq, k).unwrap();
        let m = 3usize;
        for code in 0..m.pow(k as u32) {
            let mut states = Vec::with_capacity(k);
            let mut rest = code;
            for _ in 0..k {
                states.push(rest % m);
                rest /= m;
            }
            let hist = History::new(states.clone());
            let dist = model.predict_distribution(&hist).unwrap();
            let sum: f64 = dist.probs().iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-9, "history {:?} sums to {}", states, sum);
            prop_assert!(dist.probs().iter().all(|&p| (0.0..=1.0 + 1e-12).contains(&p)));

            // When every addressed column carries mass the raw mixture
            // needs no renormalization.
            let all_active = (0..k).all(|l| !model.q(l + 1).column_is_zero(states[l]));
            if all_active {
                let mut raw_sum = 0.0;
                for (l, &s) in states.iter().enumerate() {
                    let col: f64 = model.q(l + 1).column(s).iter().sum();
                    raw_sum += model.lambda()[l] * col;
                }
                prop_assert!((raw_sum - 1.0).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn model_documents_round_trip(
        seq in wdl_sequence(70).prop_filter("long enough", |s| s.len() >= 8),
        k in 1..5usize,
    ) {
        let model: MtdModel<f64> = fit(&seq, k).unwrap();
        let restored = MtdModel::<f64>::from_json(&model.to_json()).unwrap();
        prop_assert_eq!(model, restored);
    }
}
