use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use realinterp::extrapolate::{p_of_n, theta_of_t, xi_of_t, ExponentMap, ExtrapProfile};
use realinterp::grand::{grand_norm_def, grand_norm_fk, GrandParams};
use realinterp::grid::{rearrange, LogGrid, Measure, SampledFunction, StepRearrangement};
use realinterp::kfunctional::{pisier_k, pisier_product_k, VectorValuedInstance};
use realinterp::lattice::{lattice_norm, random_concave_profile, LatticeParam};
use realinterp::schatten::CompactOperator;

fn coarse() -> Arc<LogGrid> {
    LogGrid::new(1e-6, 16).unwrap()
}

fn steps() -> impl Strategy<Value = StepRearrangement> {
    prop::collection::vec((0.01f64..50.0, 0.001f64..1.0), 1..12).prop_map(|cells| {
        let total: f64 = cells.iter().map(|c| c.1).sum();
        StepRearrangement::from_cells(cells.into_iter().map(|(l, w)| (l, w / total))).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rearrangement_is_idempotent(vals in prop::collection::vec(0.0f64..10.0, 1..40)) {
        let f = StepRearrangement::from_uniform(&vals).unwrap();
        prop_assert_eq!(f.rearrange(), f.clone());
        let sorted = {
            let mut v = vals.clone();
            v.sort_by(|a, b| b.total_cmp(a));
            v
        };
        prop_assert_eq!(StepRearrangement::from_uniform(&sorted).unwrap(), f);
    }

    #[test]
    fn cell_sum_matches_rearranged_l1(a in 0.1f64..3.0, b in 0.0f64..2.0) {
        let g = coarse();
        let f = SampledFunction::from_fn(g, Measure::Lebesgue, |t| t.powf(-a / 4.0) * (1.0 - t.ln()).powf(b)).unwrap();
        let r = rearrange(&f).unwrap();
        prop_assert!((f.cell_sum() - r.l1()).abs() <= 1e-12 * r.l1());
    }

    #[test]
    fn lattice_norm_is_homogeneous_and_refinement_stable(c in 0.01f64..100.0, g0 in 0.0f64..1.0, d in -2i32..=0) {
        let grid = LogGrid::new(1e-8, 32).unwrap();
        let fine = grid.refined();
        let f = |t: f64| t.powf(g0) * (1.0 - t.ln()).powi(d);
        let lat = LatticeParam::g_bq(1.5, 2.0);
        let n1 = lattice_norm(&SampledFunction::from_fn(grid.clone(), Measure::Haar, f).unwrap(), &lat).unwrap();
        let nc = lattice_norm(&SampledFunction::from_fn(grid.clone(), Measure::Haar, |t| c * f(t)).unwrap(), &lat).unwrap();
        prop_assert!((nc.value / (c * n1.value) - 1.0).abs() < 1e-12);
        let n2 = lattice_norm(&SampledFunction::from_fn(fine, Measure::Haar, f).unwrap(), &lat).unwrap();
        prop_assert!((n2.value / n1.value - 1.0).abs() < 5e-3);
    }

    #[test]
    fn random_profiles_are_quasi_concave(seed in any::<u64>()) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let p = random_concave_profile(&mut rng, 1e-12);
        prop_assert!((p.plateau() - 1.0).abs() < 1e-12);
        let ts: Vec<f64> = (0..200).map(|i| 10f64.powf(-12.0 + 12.0 * i as f64 / 199.0)).collect();
        for w in ts.windows(2) {
            let (k0, k1) = (p.eval(w[0]), p.eval(w[1]));
            prop_assert!(k1 >= k0 * (1.0 - 1e-12));
            prop_assert!(k1 / w[1] <= k0 / w[0] * (1.0 + 1e-9));
        }
    }

    #[test]
    fn pisier_k_is_concave_and_homogeneous(seed in any::<u64>(), c in 0.1f64..10.0) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let profiles: Vec<_> = (0..3).map(|_| random_concave_profile(&mut rng, 1e-6)).collect();
        let inst = VectorValuedInstance::from_profiles(vec![0.2, 0.3, 0.5], &profiles).unwrap();
        let scaled = VectorValuedInstance::new(
            inst.weights().to_vec(),
            inst.densities().iter().map(|d| d.scaled(c).unwrap()).collect(),
        ).unwrap();
        let ts = [1e-4, 1e-3, 1e-2, 0.1, 0.5, 1.0];
        let ks: Vec<f64> = ts.iter().map(|&t| pisier_k(t, &inst).unwrap()).collect();
        for (i, &t) in ts.iter().enumerate() {
            prop_assert!((pisier_k(t, &scaled).unwrap() / (c * ks[i]) - 1.0).abs() < 1e-6);
            prop_assert!((pisier_product_k(t, &inst).unwrap() / ks[i] - 1.0).abs() < 1e-6);
        }
        for i in 1..ts.len() - 1 {
            // concavity on the three-point stencil
            let (a, b, m) = (ts[i - 1], ts[i + 1], ts[i]);
            let chord = ks[i - 1] + (ks[i + 1] - ks[i - 1]) * (m - a) / (b - a);
            prop_assert!(ks[i] >= chord * (1.0 - 1e-6));
        }
    }

    #[test]
    fn parameter_map_ranges(x in 0.0f64..60.0) {
        let t = (-x).exp();
        let th = theta_of_t(t).unwrap();
        prop_assert!((0.5..1.0).contains(&th));
        prop_assert!(xi_of_t(t).unwrap() <= 0.5);
        prop_assert!(t.powf(1.0 - th) >= (-0.5f64).exp() * (1.0 - 1e-15));
        let p = p_of_n(1.0 / t).unwrap();
        prop_assert!(p > 1.0 && p <= 2.0);
    }

    #[test]
    fn grand_norms_homogeneous_and_monotone(f in steps(), c in 0.1f64..10.0, bump in 1.0f64..3.0) {
        let grid = coarse();
        let gp = GrandParams::with_points(2.0, 1.0, 64).unwrap();
        let cf = f.scaled(c).unwrap();
        prop_assert!((grand_norm_def(&cf, &gp) / (c * grand_norm_def(&f, &gp)) - 1.0).abs() < 1e-12);
        prop_assert!((grand_norm_fk(&cf, &gp, &grid) / (c * grand_norm_fk(&f, &gp, &grid)) - 1.0).abs() < 1e-12);
        let big = f.scaled(bump).unwrap();
        prop_assert!(grand_norm_def(&big, &gp) >= grand_norm_def(&f, &gp));
        prop_assert!(grand_norm_fk(&big, &gp, &grid) >= grand_norm_fk(&f, &gp, &grid));
    }

    #[test]
    fn schatten_norms_decrease_in_p(seed in 0u64..1000) {
        let m = CompactOperator::random_gaussian(8, seed).unwrap();
        let ps = [1.0, 1.2, 1.5, 2.0, 3.0, 8.0, f64::INFINITY];
        let ns: Vec<f64> = ps.iter().map(|&p| m.schatten_norm(p).unwrap()).collect();
        for w in ns.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
        prop_assert!(m.matsaev_norm(1.0).unwrap() <= ns[0] * (1.0 + 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn extrapolation_floor_holds_nodewise(seed in any::<u64>(), q in prop::sample::select(vec![1.0, 2.0, f64::INFINITY])) {
        let grid = coarse();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let k = random_concave_profile(&mut rng, grid.t_min()).sample(&grid);
        let ep = ExtrapProfile::new(&k, ExponentMap::Fixed(q)).unwrap();
        let (_, bad) = ep.floor_margin(&k, 1e-9);
        prop_assert_eq!(bad, 0);
    }
}
