//! Property tests for the invariants of forms, constants, sequences and search.

use std::f64::consts::SQRT_2;

use bhlab::constants::{
    alpha, beta, envelope, real_lower_bound, upper_bound, ConstantSequence, UpperCatalogue,
    UpperName,
};
use bhlab::forms::{
    bh_ratio, sup_norm_ascend, sup_norm_complex_certified_upper, sup_norm_real_exact, CertPolicy,
    SupConfig,
};
use bhlab::search::{optimize_lower_bound, ResultStore, SearchConfig};
use bhlab::sequences::{
    classify, difference_limit_estimate, dyadic_probe, gen, parse_params, ratio_limit_estimate,
    DichotomyBranch, LimitStatus, Schedule, SequenceSpec, WellBehaved,
};
use bhlab::{Form, ScalarField};
use num_complex::Complex;
use proptest::prelude::*;

fn field() -> impl Strategy<Value = ScalarField> {
    prop_oneof![Just(ScalarField::Real), Just(ScalarField::Complex)]
}

fn seq(id: &str, params: &str, horizon: u64, candidate: bool) -> SequenceSpec {
    gen(id, &parse_params(params).unwrap(), horizon, candidate).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ratio_is_scale_invariant(
        n in 1usize..=3, dim in 1usize..=3, seed in any::<u64>(),
        re in -8.0f64..8.0, im in -8.0f64..8.0,
    ) {
        prop_assume!(re.abs() > 1e-3);
        let f = Form::random(ScalarField::Real, n, dim, seed).unwrap();
        let g = f.scaled(Complex::new(re, 0.0)).unwrap();
        let cfg = SupConfig::default();
        let a = bh_ratio(&f, CertPolicy::Exact, &cfg).unwrap();
        let b = bh_ratio(&g, CertPolicy::Exact, &cfg).unwrap();
        prop_assert!(rel(a.ratio_lower, b.ratio_lower) < 1e-14);

        let h = Form::random(ScalarField::Complex, n, dim, seed).unwrap();
        let k = h.scaled(Complex::new(re, im)).unwrap();
        let mesh = 0.3;
        let a = bh_ratio(&h, CertPolicy::Grid { mesh }, &cfg).unwrap();
        let b = bh_ratio(&k, CertPolicy::Grid { mesh }, &cfg).unwrap();
        prop_assert!(rel(a.ratio_lower, b.ratio_lower) < 1e-12);
    }

    #[test]
    fn permuting_coordinates_changes_nothing(
        n in 1usize..=3, dim in 2usize..=4, seed in any::<u64>(), slot_pick in any::<usize>(),
        perm in Just(()).prop_perturb(|_, mut rng| {
            let mut p: Vec<usize> = (0..4).collect();
            for i in (1..4).rev() { p.swap(i, rng.random_range(0..=i)); }
            p
        }),
    ) {
        let perm: Vec<usize> = perm.into_iter().filter(|&i| i < dim).collect();
        let slot = slot_pick % n;
        let f = Form::random(ScalarField::Real, n, dim, seed).unwrap();
        let g = f.permute_slot(slot, &perm).unwrap();
        prop_assert!(rel(f.mixed_norm(), g.mixed_norm()) < 1e-14);
        let a = sup_norm_real_exact(&f).unwrap().lower;
        let b = sup_norm_real_exact(&g).unwrap().lower;
        prop_assert!(rel(a, b) < 1e-13);
    }

    #[test]
    fn degree_one_ratio_is_one(dim in 1usize..=8, seed in any::<u64>(), field in field()) {
        let f = Form::random(field, 1, dim, seed).unwrap();
        let r = bh_ratio(&f, CertPolicy::Auto, &SupConfig::default()).unwrap();
        prop_assert!((r.ratio_lower - 1.0).abs() < 1e-14);
        prop_assert!((r.ratio_upper - 1.0).abs() < 1e-14);
    }

    #[test]
    fn certificates_are_ordered(n in 1usize..=3, dim in 1usize..=3, seed in any::<u64>()) {
        let f = Form::random(ScalarField::Real, n, dim, seed).unwrap();
        let exact = sup_norm_real_exact(&f).unwrap().lower;
        let heur = sup_norm_ascend(&f, 5, seed).unwrap();
        prop_assert!(heur.lower <= exact * (1.0 + 1e-12));
        prop_assert!(exact <= heur.upper * (1.0 + 1e-12));

        let c = Form::random(ScalarField::Complex, n, dim, seed).unwrap();
        let heur = sup_norm_ascend(&c, 5, seed).unwrap();
        let grid = sup_norm_complex_certified_upper(&c, 0.2).unwrap();
        prop_assert!(heur.lower <= grid.upper * (1.0 + 1e-12));
        prop_assert!(grid.lower <= grid.upper);
    }

    #[test]
    fn sup_is_multiplicative(na in 1usize..=2, nb in 1usize..=2, dim in 1usize..=3, seed in any::<u64>()) {
        let a = Form::random(ScalarField::Real, na, dim, seed).unwrap();
        let b = Form::random(ScalarField::Real, nb, dim, seed ^ 0xABCD).unwrap();
        let ab = a.tensor_product(&b).unwrap();
        let lhs = sup_norm_real_exact(&ab).unwrap().lower;
        let rhs = sup_norm_real_exact(&a).unwrap().lower * sup_norm_real_exact(&b).unwrap().lower;
        prop_assert!((lhs - rhs).abs() <= 1e-9);
    }

    #[test]
    fn shipped_bounds_are_ordered(n in 1usize..2000) {
        let dk: f64 = upper_bound(UpperName::DavieKaijser, n).unwrap();
        let bh: f64 = upper_bound(UpperName::BhOriginal, n).unwrap();
        let q: f64 = upper_bound(UpperName::Queffelec, n).unwrap();
        prop_assert!(q <= dk && dk <= bh);
        let rl: f64 = real_lower_bound(n).unwrap();
        prop_assert!(rl < 2.0 && rl < real_lower_bound::<f64>(n + 1).unwrap());
        for field in [ScalarField::Real, ScalarField::Complex] {
            let e = envelope(n.min(50), field, None, &UpperCatalogue::<f64>::default()).unwrap();
            prop_assert!(e.lower <= e.upper);
        }
    }
}

#[test]
fn log_space_switch_is_continuous() {
    for u in UpperName::ALL {
        let a: f64 = upper_bound(u, 300).unwrap();
        let b: f64 = upper_bound(u, 301).unwrap();
        let seq = ConstantSequence::<f64>::upper(u);
        assert!(rel(a.ln(), seq.log_eval(300).unwrap()) < 1e-12);
        assert!(rel(b.ln(), seq.log_eval(301).unwrap()) < 1e-12);
    }
    let a = alpha::<f64>();
    let b = beta::<f64>();
    assert!(SQRT_2 < a && a < 1.5);
    assert!(0.5 < b && b < 0.53);
}

#[test]
fn real_lower_sequence_is_well_behaved() {
    let s = seq("real-lower", "", 1 << 18, true);
    let sched = Schedule::default();
    let um = ratio_limit_estimate(&s, &sched).unwrap();
    assert!((um.converged_value().unwrap() - 1.0).abs() < 1e-3);
    let dois = difference_limit_estimate(&s, &sched).unwrap();
    assert!(dois.converged_value().unwrap().abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn power_estimators_are_sound(a in 0.05f64..0.95, b in 0.5f64..5.0, up in 1.05f64..2.0) {
        let sched = Schedule::with_tol(1e-3);
        let h = 1 << 18;
        let s = seq("power", &format!("a={a},b={b}"), h, false);
        let um = ratio_limit_estimate(&s, &sched).unwrap();
        prop_assert!((um.converged_value().unwrap() - a.exp2()).abs() <= 1e-3);
        let dois = difference_limit_estimate(&s, &sched).unwrap();
        prop_assert!(dois.converged_value().unwrap().abs() <= 1e-3);

        let lin = seq("power", &format!("a=1,b={b}"), h, false);
        let dois = difference_limit_estimate(&lin, &sched).unwrap();
        prop_assert!((dois.converged_value().unwrap() - b).abs() <= 1e-3);

        let fast = seq("power", &format!("a={up},b={b}"), h, false);
        let um = ratio_limit_estimate(&fast, &sched).unwrap();
        prop_assert!((um.converged_value().unwrap() - up.exp2()).abs() <= 1e-3);
        let dois = difference_limit_estimate(&fast, &sched).unwrap();
        prop_assert_eq!(dois.status, LimitStatus::DivergesToInfinity);
    }

    #[test]
    fn classification_is_a_trichotomy(pick in 0usize..8, a in 0.0f64..1.2, b in 0.2f64..3.0) {
        let (id, params) = match pick {
            0 => ("power", format!("a={a},b={b},c=1")),
            1 => ("log", format!("b={b}")),
            2 => ("constant", format!("value={}", 1.0 + b)),
            3 => ("contra", String::new()),
            4 => ("blocks", String::new()),
            5 => ("mix", String::new()),
            6 => ("real-lower", String::new()),
            _ => ("inverse-exponential", format!("a=2,b=1,c={b}")),
        };
        let s = seq(id, &params, 1 << 14, false);
        for reference in ["davie-kaijser", "alpha-power"] {
            let r = classify(&s, &ConstantSequence::named(reference).unwrap(), &Schedule::default()).unwrap();
            let both = r.um.status != LimitStatus::NoExtendedLimit && r.dois.status != LimitStatus::NoExtendedLimit;
            if r.well_behaved != WellBehaved::Undetermined {
                prop_assert_eq!(r.well_behaved == WellBehaved::Yes, both);
            }
            match r.dichotomy_branch {
                DichotomyBranch::BranchIi => {
                    let v = r.um.converged_value().unwrap();
                    prop_assert!((1.0 - r.tol..=alpha::<f64>() + r.tol).contains(&v));
                    prop_assert!(r.dois.converged_value().unwrap().abs() <= r.tol);
                    prop_assert!(r.envelope.ok());
                }
                DichotomyBranch::BranchI => {
                    prop_assert_eq!(r.well_behaved, WellBehaved::No);
                    prop_assert!(r.envelope.ok());
                }
                DichotomyBranch::EnvelopeViolation => {
                    prop_assert!(r.envelope.first_violation.is_some() || r.crossing_index.is_some());
                }
                DichotomyBranch::Undetermined => {}
            }
        }
    }

    #[test]
    fn ratio_above_alpha_breaks_an_alpha_envelope(a in 0.56f64..0.95, b in 0.05f64..1.0) {
        // b n^a + 1 - b starts at 1; its doubling ratio tends to 2^a > alpha
        let s = seq("power", &format!("a={a},b={b},c={}", 1.0 - b), 1 << 14, true);
        let r = classify(&s, &ConstantSequence::alpha_power(), &Schedule::default()).unwrap();
        prop_assert_eq!(r.well_behaved, WellBehaved::Yes);
        prop_assert_eq!(r.dichotomy_branch, DichotomyBranch::EnvelopeViolation);
    }

    #[test]
    fn slow_ratio_gives_dyadic_growth(a in 0.0f64..0.55, b in 0.5f64..4.0, n0 in 1u64..16) {
        let s = seq("power", &format!("a={a},b={b},c=1"), 1 << 24, true);
        let um = ratio_limit_estimate(&s, &Schedule::default()).unwrap();
        prop_assert!(um.converged_value().unwrap() < 1.5 - 0.01);
        let l_max = 63 - n0.leading_zeros();
        let p = dyadic_probe(&s, n0, 24 - l_max - 1).unwrap();
        prop_assert!(!p.growth_violation);
    }

    #[test]
    fn sub_doubling_ratio_forces_zero_difference(a in 0.0f64..0.99, b in 0.1f64..10.0, c in 0.0f64..10.0) {
        let s = seq("power", &format!("a={a},b={b},c={c}"), 1 << 18, false);
        let sched = Schedule::default();
        let um = ratio_limit_estimate(&s, &sched).unwrap();
        let v = um.converged_value().unwrap();
        prop_assert!((1.0..=2.0 - 0.01).contains(&v));
        let dois = difference_limit_estimate(&s, &sched).unwrap();
        prop_assert!(dois.converged_value().unwrap().abs() <= 0.01);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn stored_results_recertify_and_never_decrease(seeds in prop::collection::vec(0u64..1000, 1..5)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.json");
        let mut best = 0.0f64;
        for (i, seed) in seeds.iter().enumerate() {
            let field = if i % 2 == 0 { ScalarField::Real } else { ScalarField::Complex };
            let cfg = SearchConfig { restarts: 2, steps: 60, seed: *seed, ..SearchConfig::new(2, 2, field) };
            let r = optimize_lower_bound(&cfg).unwrap();
            ResultStore::commit(&path, &r).unwrap();
            let store = ResultStore::open(&path).unwrap();
            if field == ScalarField::Real {
                let now = store.best(field, 2, 2).unwrap().certified_lower;
                prop_assert!(now >= best);
                best = now;
            }
            for rec in store.records() {
                let again = rec.recertify(&SupConfig::default()).unwrap();
                prop_assert!((again.ratio_lower - rec.certified_lower).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn complex_search_respects_the_upper_bound(n in 1usize..=3, dim in 2usize..=3, seed in 0u64..1000) {
        prop_assume!(n * dim <= 6);
        let cfg = SearchConfig { restarts: 2, steps: 40, seed, mesh: Some(0.3), ..SearchConfig::new(n, dim, ScalarField::Complex) };
        let r = optimize_lower_bound(&cfg).unwrap();
        let dk: f64 = upper_bound(UpperName::DavieKaijser, n).unwrap();
        prop_assert!(r.certified_lower <= dk + 1e-9);
    }
}
