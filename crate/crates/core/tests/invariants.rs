use proptest::prelude::*;
use splpo::exact::{branch_and_bound, brute_force, Limits, ProblemSpec};
use splpo::instance::{cost_ladder, generate_instance, parse_instance, write_instance, GeneratorConfig, PreferenceMode};
use splpo::lagrange::{solve_lr, LagrangeMultipliers};
use splpo::semilagrange::{dual_ascent, solve_slr, DaConfig};
use splpo::solution::{check_feasible, heuristic_hc, heuristic_hs, Solution};
use splpo::Instance;

fn instance(max_m: usize, max_n: usize) -> impl Strategy<Value = Instance> {
    (1..=max_m, 1..=max_n, any::<u64>(), 0u64..3, any::<bool>()).prop_map(|(m, n, seed, f, consistent)| {
        let cfg = GeneratorConfig {
            opening_range: [(8000, 12000), (1000, 3000), (0, 500)][f as usize],
            mode: if consistent {
                PreferenceMode::CostConsistent
            } else {
                PreferenceMode::Uniform
            },
            ..GeneratorConfig::default()
        };
        generate_instance(m, n, seed, &cfg).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn write_then_parse_is_identity(inst in instance(12, 12)) {
        prop_assert_eq!(parse_instance(&write_instance(&inst)).unwrap(), inst);
    }

    #[test]
    fn most_preferred_assignment_is_feasible(inst in instance(8, 8), mask in 1u32..256) {
        let open: Vec<usize> = (0..inst.n()).filter(|j| mask >> j & 1 == 1).collect();
        prop_assume!(!open.is_empty());
        let sol = Solution::from_open_set(&inst, &open).unwrap();
        prop_assert!(check_feasible(&inst, &sol).is_empty());
    }

    #[test]
    fn exact_engines_agree(inst in instance(8, 8)) {
        let spec = ProblemSpec::splpo(&inst);
        let bf = brute_force(&spec).unwrap();
        let bb = branch_and_bound(&spec, Limits::default()).unwrap();
        let par = branch_and_bound(&spec, Limits::default().parallel()).unwrap();
        prop_assert_eq!(bb.value, bf.value);
        prop_assert_eq!(&bb.solution, &bf.solution);
        prop_assert_eq!(&par.solution, &bf.solution);
        prop_assert!(bb.lower_bound <= bb.value);
    }

    #[test]
    fn heuristics_bound_the_optimum(inst in instance(10, 8)) {
        let opt = brute_force(&ProblemSpec::splpo(&inst)).unwrap().value;
        let (hc, trace) = heuristic_hc(&inst);
        let hs = heuristic_hs(&inst).0;
        prop_assert!(opt <= hc.objective);
        prop_assert!(hc.objective <= hs.objective);
        prop_assert!(check_feasible(&inst, &hc).is_empty());
        prop_assert_eq!(trace.rounds.len(), inst.n());
    }

    #[test]
    fn relaxation_values_are_lower_bounds(inst in instance(6, 6), scale in 0.0f64..2.0, lam in 0.0f64..400.0) {
        let opt = brute_force(&ProblemSpec::splpo(&inst)).unwrap().value;
        let mu: Vec<f64> = inst.cheapest_total().iter().map(|v| v * scale).collect();
        let mult = LagrangeMultipliers { mu, lambda: vec![lam; inst.m() * inst.n()] };
        prop_assert!(solve_lr(&inst, &mult).unwrap().value <= opt + 1e-9);
        let gamma: Vec<f64> = cost_ladder(&inst).cp().iter().map(|v| v * scale.min(1.0)).collect();
        prop_assert!(solve_slr(&inst, &gamma, false, Limits::default()).unwrap().value <= opt + 1e-9);
    }

    #[test]
    fn ascent_stays_in_the_box(inst in instance(8, 6)) {
        let r = dual_ascent(&inst, &vec![0.0; inst.m()], &DaConfig::default()).unwrap();
        let ladder = cost_ladder(&inst);
        prop_assert!(r.state.gamma.iter().zip(ladder.cp()).all(|(g, cp)| g <= cp));
        prop_assert!(r.state.gamma.iter().enumerate().all(|(i, &g)| g > ladder.lowest(i) || g == ladder.cp()[i]));
        prop_assert!(r.trace.windows(2).all(|w| w[1].value >= w[0].value - 1e-9));
    }
}
