use cfqmc_core::estimators::{optimal_split, split_budget};
use cfqmc_core::points::{baker_fold, halton, random_shift};
use cfqmc_core::{KernelSpec, Point, Smoothness};
use proptest::prelude::*;

proptest! {
    #[test]
    fn optimal_split_is_a_fraction_increasing_in_alpha(
        alpha_l in 0.1f64..4.0,
        gap in 1e-6f64..10.0,
        step in 1e-3f64..10.0,
    ) {
        let lo = optimal_split(alpha_l + gap, alpha_l).unwrap();
        let hi = optimal_split(alpha_l + gap + step, alpha_l).unwrap();
        prop_assert!(lo > 0.0 && hi < 1.0);
        prop_assert!(lo < hi);
    }

    #[test]
    fn budget_split_accounts_for_every_evaluation(
        n in 4usize..5000,
        frac in 0.05f64..0.95,
        pow2 in any::<bool>(),
        dim in 1usize..5,
    ) {
        let s = split_budget(n, frac, pow2, dim).unwrap();
        prop_assert_eq!(s.nodes + s.eval + s.discarded, n);
        prop_assert_eq!(s.nodes, s.per_axis.pow(dim as u32));
        prop_assert!(s.nodes >= 1 && s.eval >= 1);
        if pow2 {
            prop_assert!(s.eval.is_power_of_two());
        }
    }

    #[test]
    fn randomized_points_stay_in_the_cube_and_kernels_are_symmetric(
        shift in prop::collection::vec(0.0f64..1.0, 3),
        k in 0u32..3,
        rho in 0.05f64..=1.0,
    ) {
        let ps = halton(64, 3, true).unwrap();
        let shifted = random_shift(&ps, &Point::new(shift).unwrap()).unwrap();
        let folded = baker_fold(&shifted);
        prop_assert!(shifted.coords().iter().chain(folded.coords()).all(|v| (0.0..=1.0).contains(v)));
        let spec = KernelSpec::new(Smoothness::from_index(k).unwrap(), 3, rho).unwrap();
        for i in 0..8 {
            let (a, b) = (folded.point(i), shifted.point(63 - i));
            let kab = spec.eval(a, b).unwrap();
            prop_assert_eq!(kab, spec.eval(b, a).unwrap());
            prop_assert!((0.0..=1.0).contains(&kab));
        }
    }
}
