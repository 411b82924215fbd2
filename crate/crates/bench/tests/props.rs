use alspg_bench::layouts::candidate;
use alspg_bench::suite::Stat;
use alspg_bench::ProblemConfig;
use proptest::prelude::*;

const TOP: [&str; 5] = [
    "version = 1",
    "kind = \"ik\"",
    "solver = \"alspg\"",
    "initial_state = [0.1, 0.1, 0.1]",
    "model = { name = \"planar_arm\", links = [1.0, 1.0, 1.0] }",
];

const TAIL: &str = "\n[[constraints]]\nselector = { kind = \"end_effector\" }\nset = { type = \"point\", target = [1.0, 1.5] }\n";

proptest! {
    #[test]
    fn stat_matches_the_sum_of_squares_form(values in prop::collection::vec(-1e3f64..1e3, 1..40)) {
        let s = Stat::of(&values).unwrap();
        let n = values.len() as f64;
        let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
        prop_assert_eq!(s.count, values.len());
        prop_assert!(s.mean >= lo - 1e-9 && s.mean <= hi + 1e-9);
        if values.len() > 1 {
            let sum: f64 = values.iter().sum();
            let sq: f64 = values.iter().map(|v| v * v).sum();
            let var = ((sq - sum * sum / n) / (n - 1.0)).max(0.0);
            prop_assert!((s.std - var.sqrt()).abs() <= 1e-6 * (1.0 + var.sqrt()), "{} vs {}", s.std, var.sqrt());
        } else {
            prop_assert_eq!(s.std, 0.0);
        }
    }

    #[test]
    fn stat_is_shift_equivariant(values in prop::collection::vec(-10f64..10.0, 2..20), c in -100f64..100.0) {
        let a = Stat::of(&values).unwrap();
        let shifted: Vec<f64> = values.iter().map(|v| v + c).collect();
        let b = Stat::of(&shifted).unwrap();
        prop_assert!((b.mean - a.mean - c).abs() <= 1e-9);
        prop_assert!((b.std - a.std).abs() <= 1e-9);
    }

    #[test]
    fn digest_ignores_key_order(order in Just((0..TOP.len()).collect::<Vec<_>>()).prop_shuffle()) {
        let canonical = TOP.join("\n") + TAIL;
        let shuffled = order.iter().map(|&i| TOP[i]).collect::<Vec<_>>().join("\n") + TAIL;
        let a = ProblemConfig::from_toml(&canonical).unwrap();
        let b = ProblemConfig::from_toml(&shuffled).unwrap();
        prop_assert_eq!(a.digest(), b.digest());
    }

    #[test]
    fn digest_separates_seeds(s1 in any::<u64>(), s2 in any::<u64>()) {
        let base = ProblemConfig::from_toml(&(TOP.join("\n") + TAIL)).unwrap();
        let (mut a, mut b) = (base.clone(), base);
        a.seed = Some(s1);
        b.seed = Some(s2);
        prop_assert_eq!(a.digest() == b.digest(), s1 == s2);
    }

    #[test]
    fn candidate_layouts_stay_in_their_ranges(seed in any::<u64>()) {
        for r in candidate(seed) {
            prop_assert!(r.center.iter().all(|c| (0.15..0.85).contains(c)));
            prop_assert!((0.15..0.3).contains(&r.length));
            prop_assert!((0.05..0.15).contains(&r.width));
            prop_assert!((0.0..std::f64::consts::PI).contains(&r.theta));
        }
    }
}
