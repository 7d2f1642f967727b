//! Property-based checks of the algebraic invariants.

use gcb_cvar::cvar::{concentrate, johansen_eigen, loglik_from_eigen, quasi_loglik, solve_rrr, trace_test, VecmSpec};
use gcb_cvar::data::{compose_emissions, AlignedDataset, GcbTable};
use gcb_cvar::diagnostics::{jarque_bera, ljung_box, sample_moments};
use gcb_cvar::projection::{
    decay_coeffs, quantile_sorted, simulate_paths, step_system, FeedbackSpec, ProjectionConfig, ProjectionSetup,
    SinkCoeffs, SystemState,
};
use gcb_cvar::restrictions::all_variable_tests;
use gcb_cvar::simulate::{ramp_scenario, VecmDgp};
use gcb_cvar::structural::{theta_to_reduced, theta_to_structural, StructuralTheta};
use nalgebra::{DMatrix, Matrix4};
use proptest::prelude::*;

fn theta_strategy() -> impl Strategy<Value = StructuralTheta> {
    (
        (-10.0..0.0f64, -10.0..0.0f64, 0.0..0.05f64, 0.0..0.05f64),
        (-1.0..1.0f64, -1.0..1.0f64, -0.5..0.5f64),
        (-0.95..0.95f64, -0.95..0.95f64, -0.95..0.95f64, -0.95..0.95f64),
    )
        .prop_map(|((a1, a2, b1, b2), (b3, b4, d), (phi1, phi2, phi3, phi4))| StructuralTheta {
            a1,
            a2,
            b1,
            b2,
            b3,
            b4,
            d,
            phi1,
            phi2,
            phi3,
            phi4,
        })
}

fn canonical_dataset(rank: usize, seed: u64, n: usize) -> AlignedDataset {
    let mut dgp = VecmDgp::canonical(rank, 0.3);
    dgp.phi_soi = nalgebra::Vector4::new(0.2, -0.1, 0.0, 0.1);
    dgp.simulate(n, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reduced_form_matches_numerical_inversion(th in theta_strategy()) {
        let rf = theta_to_reduced(&th).unwrap();
        let sys = theta_to_structural(&th).unwrap();
        let inv = sys.a0.try_inverse().unwrap();
        prop_assert!((rf.pi() - inv * sys.level_coef).amax() < 1e-10);
        prop_assert!((rf.gamma1 - inv * sys.diff_coef).amax() < 1e-10);
        prop_assert!((rf.mu - inv * sys.intercept).amax() < 1e-10);
        prop_assert!((rf.phi_soi - inv * sys.soi_load).amax() < 1e-10);
        prop_assert!((rf.error_rotation - inv).amax() < 1e-10);
        prop_assert!(rf.alpha.row(2).iter().all(|&v| v == 0.0));
        prop_assert!(rf.gamma1.columns(0, 2).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn loglik_is_nested_and_matches_trace(seed in 0u64..10_000, rank in 0usize..4, lags in 0usize..2) {
        let ds = canonical_dataset(rank, seed, 120);
        let m = concentrate(&ds, VecmSpec::new(rank, lags, true)).unwrap();
        let eig = johansen_eigen(&m).unwrap();
        let ll: Vec<f64> = (0..=4).map(|r| loglik_from_eigen(&m, &eig.values, r).unwrap()).collect();
        for w in ll.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9);
        }
        let tt = trace_test(&m).unwrap();
        for r in 0..4 {
            prop_assert!((tt.trace_stats[r] + 2.0 * (ll[r] - ll[4])).abs() < 1e-6);
        }
        for w in tt.eigenvalues.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
        prop_assert!(tt.eigenvalues.iter().all(|l| (0.0..1.0).contains(l)));
        let est = solve_rrr(&m, rank).unwrap();
        prop_assert!((est.loglik - ll[rank]).abs() < 1e-6);
        prop_assert!((quasi_loglik(&est.residuals).unwrap() - est.loglik).abs() < 1e-6);
        let lead = est.beta.rows(0, rank);
        prop_assert!((lead - DMatrix::<f64>::identity(rank, rank)).amax() < 1e-12);
    }

    #[test]
    fn eigenvalues_are_invariant_to_units(seed in 0u64..10_000, scale in 0.1..10.0f64) {
        let ds = canonical_dataset(3, seed, 100);
        let mut scaled = ds.clone();
        scaled.concentration.iter_mut().for_each(|c| *c /= 2.12);
        scaled.land_sink.iter_mut().for_each(|s| *s *= scale);
        let a = trace_test(&concentrate(&ds, VecmSpec::BENCHMARK).unwrap()).unwrap();
        let b = trace_test(&concentrate(&scaled, VecmSpec::BENCHMARK).unwrap()).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            prop_assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn lr_statistics_are_valid(seed in 0u64..10_000) {
        let ds = canonical_dataset(3, seed, 80);
        for t in all_variable_tests(&ds, VecmSpec::BENCHMARK).unwrap() {
            for r in [&t.exclusion, &t.weak_exogeneity] {
                prop_assert!(r.statistic >= 0.0);
                prop_assert!((0.0..=1.0).contains(&r.p_value));
                prop_assert_eq!(r.df, 3);
            }
        }
    }

    #[test]
    fn quasi_loglik_shifts_under_rescaling(
        values in prop::collection::vec(-5.0..5.0f64, 40..=40),
        s in 0.1..10.0f64,
    ) {
        let u = DMatrix::from_vec(20, 2, values);
        let Ok(base) = quasi_loglik(&u) else { return Ok(()); };
        let scaled = quasi_loglik(&(&u * s)).unwrap();
        prop_assert!((scaled - (base - 20.0 * 2.0 * s.ln())).abs() < 1e-8);
    }

    #[test]
    fn canonical_csv_round_trips(
        rows in prop::collection::vec((-5.0..5.0f64, 0.0..5.0f64, 0.0..15.0f64, 500.0..900.0f64, -3.0..3.0f64), 3..40),
        first in 1850i32..2000,
    ) {
        let n = rows.len();
        let ds = AlignedDataset::new(
            (first..first + n as i32).collect(),
            rows.iter().map(|r| r.0).collect(),
            rows.iter().map(|r| r.1).collect(),
            rows.iter().map(|r| r.2).collect(),
            rows.iter().map(|r| r.3).collect(),
            rows.iter().map(|r| r.4).collect(),
        ).unwrap();
        let mut buf = vec![];
        ds.write_csv(&mut buf).unwrap();
        let back = AlignedDataset::read_csv(buf.as_slice(), "mem.csv".as_ref()).unwrap();
        prop_assert_eq!(&back.years, &ds.years);
        for (a, b) in [
            (&back.land_sink, &ds.land_sink),
            (&back.ocean_sink, &ds.ocean_sink),
            (&back.emissions, &ds.emissions),
            (&back.concentration, &ds.concentration),
            (&back.soi, &ds.soi),
        ] {
            for (x, y) in a.iter().zip(b) {
                prop_assert!((x - y).abs() <= 5e-7);
            }
        }
    }

    #[test]
    fn emissions_composition_is_linear(
        rows in prop::collection::vec((0.0..12.0f64, 0.0..2.0f64, 0.0..0.3f64), 1..20),
        k in -3.0..3.0f64,
    ) {
        let table = |scale: f64| GcbTable {
            years: (0..rows.len() as i32).collect(),
            fossil: rows.iter().map(|r| scale * r.0).collect(),
            land_use: rows.iter().map(|r| scale * r.1).collect(),
            cement_carbonation: rows.iter().map(|r| scale * r.2).collect(),
            atmospheric_growth: vec![0.0; rows.len()],
            land_sink: vec![0.0; rows.len()],
            ocean_sink: vec![0.0; rows.len()],
            budget_imbalance: None,
        };
        let base = compose_emissions(&table(1.0)).unwrap();
        let scaled = compose_emissions(&table(k)).unwrap();
        for (i, r) in rows.iter().enumerate() {
            prop_assert!((base[i] - (r.0 + r.1 - r.2)).abs() < 1e-12);
            prop_assert!((scaled[i] - k * base[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn one_step_keeps_the_budget_identity(
        th in theta_strategy(),
        c in 600.0..1500.0f64,
        e in 0.0..20.0f64,
        xs in (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64),
        shocks in (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64),
        drift in -0.5..0.5f64,
        soi in -2.0..2.0f64,
    ) {
        let state = SystemState {
            year: 2022,
            land_sink: 0.0,
            ocean_sink: 0.0,
            emissions: e,
            concentration: c,
            x1: xs.0,
            x2: xs.1,
            x4: xs.2,
        };
        let coeffs = SinkCoeffs { a1: th.a1, b1: th.b1, a2: th.a2, b2: th.b2 };
        let next = step_system(&state, &coeffs, drift, soi, [shocks.0, shocks.1, shocks.2], &th).unwrap();
        let lhs = next.concentration - c;
        let rhs = next.emissions - next.land_sink - next.ocean_sink + next.x4;
        prop_assert!((lhs - rhs).abs() < 1e-10);
        prop_assert!((next.emissions - (e + drift)).abs() < 1e-12);
    }

    #[test]
    fn feedback_decay_is_monotone(p in 0.0..0.95f64, h in 0i32..100) {
        let th = StructuralTheta::GCB_1959_2022;
        let spec = FeedbackSpec::new(p, p).unwrap();
        let now = decay_coeffs(&th, &spec, 2022 + h, 2022);
        let later = decay_coeffs(&th, &spec, 2023 + h, 2022);
        prop_assert!(later.b1 <= now.b1 && later.b2 <= now.b2);
        prop_assert!(now.b1 <= th.b1 && now.b1 > 0.0);
    }

    #[test]
    fn type7_quantiles_are_monotone(mut xs in prop::collection::vec(-100.0..100.0f64, 1..200), p in 0.0..1.0f64, q in 0.0..1.0f64) {
        xs.sort_by(f64::total_cmp);
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        let a = quantile_sorted(&xs, lo);
        let b = quantile_sorted(&xs, hi);
        prop_assert!(a <= b);
        prop_assert!(xs[0] <= a && b <= xs[xs.len() - 1]);
    }

    #[test]
    fn univariate_tests_are_affine_invariant(
        xs in prop::collection::vec(-10.0..10.0f64, 30..120),
        a in -50.0..50.0f64,
        b in 0.01..100.0f64,
    ) {
        let Ok(m) = sample_moments(&xs) else { return Ok(()); };
        prop_assume!(m.std_dev > 1e-3);
        let ys: Vec<f64> = xs.iter().map(|x| a + b * x).collect();
        let jb0 = jarque_bera(&xs).unwrap();
        let jb1 = jarque_bera(&ys).unwrap();
        prop_assert!((jb0.statistic - jb1.statistic).abs() < 1e-6 * (1.0 + jb0.statistic));
        let lb0 = ljung_box(&xs, 5).unwrap();
        let lb1 = ljung_box(&ys, 5).unwrap();
        prop_assert!((lb0.statistic - lb1.statistic).abs() < 1e-6 * (1.0 + lb0.statistic));
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        let mn = sample_moments(&neg).unwrap();
        prop_assert!((mn.skewness + m.skewness).abs() < 1e-9);
        prop_assert!((mn.kurtosis - m.kurtosis).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn simulated_paths_keep_the_budget_identity(seed in 0u64..1_000_000, p in 0.0..0.6f64) {
        let th = StructuralTheta::GCB_1959_2022;
        let ds = canonical_dataset(3, seed, 64);
        let mut shifted = ds.clone();
        shifted.years = (1959..2023).collect();
        shifted.concentration.iter_mut().for_each(|c| *c += 800.0);
        let sigma_u = Matrix4::from_diagonal(&nalgebra::Vector4::new(0.4, 0.01, 0.04, 0.4));
        let setup = ProjectionSetup::new(th, sigma_u, &shifted).unwrap();
        let e_last = *shifted.emissions.last().unwrap();
        let scenario = ramp_scenario("ramp", e_last, 0.1, 2023, 2100, 2070);
        let config = ProjectionConfig {
            feedback: FeedbackSpec::new(p, p / 2.0).unwrap(),
            n_paths: 200,
            seed,
            ..ProjectionConfig::default()
        };
        let ens = simulate_paths(&setup, &scenario, &config).unwrap();
        prop_assert!(ens.max_budget_error() < 1e-10);
        for (a, b) in ens.emissions.iter().zip(&scenario.emissions) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
