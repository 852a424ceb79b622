use num_complex::Complex64;
use oqm_core::quantize::{quantize_open_baker, quantize_open_cat, torus_coherent_state, CatSpec, HoleInterval};
use oqm_core::spectra::{baker_spectra, count_above, eigenvalues, iterate, spectral_radius, weyl_fit, write_spectrum_csv, NORM_SLACK};
use oqm_core::{Execution, OpenBakerSpec, PhasePoint};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn baker_case() -> impl Strategy<Value = (OpenBakerSpec, usize)> {
    (2u32..=5).prop_flat_map(|base| {
        let kept = proptest::sample::subsequence((0..base).collect::<Vec<_>>(), 1..=base as usize);
        (kept, 1usize..=6).prop_map(move |(kept, mult)| (OpenBakerSpec::new(base, kept).unwrap(), base as usize * mult))
    })
}

fn cat_case() -> impl Strategy<Value = (CatSpec, HoleInterval, usize)> {
    let matrices = prop_oneof![
        Just(CatSpec::new(2, 1, 1, 1).unwrap()),
        Just(CatSpec::new(2, 1, 3, 2).unwrap()),
        Just(CatSpec::new(1, 1, 1, 2).unwrap()),
        Just(CatSpec::new(3, 2, 4, 3).unwrap()),
    ];
    (matrices, 0.0..1.0f64, 0.0..0.5f64, 1usize..=15).prop_map(|(spec, start, width, half)| {
        let hole = HoleInterval::new(start, (start + width).min(1.0)).unwrap();
        (spec, hole, 2 * half)
    })
}

fn random_state(planck: oqm_core::PlanckParameter, seed: u64) -> oqm_core::TorusState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = oqm_core::TorusState::zeros(planck, 0.5);
    for a in &mut state.amplitudes {
        *a = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    }
    state
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn open_baker_is_subunitary((spec, dim) in baker_case()) {
        let map = quantize_open_baker(&spec, dim, 0.5).unwrap();
        prop_assert!(map.max_singular_value().unwrap() <= 1.0 + 1e-10);
        let spectrum = eigenvalues(&map).unwrap();
        prop_assert!(spectral_radius(&spectrum) <= 1.0 + 1e-8);
        prop_assert_eq!(spectrum.eigenvalues.len(), dim);
    }

    #[test]
    fn open_cat_is_subunitary((spec, hole, dim) in cat_case()) {
        let map = quantize_open_cat(&spec, hole, dim).unwrap();
        prop_assert!(map.max_singular_value().unwrap() <= 1.0 + 1e-10);
        prop_assert!(spectral_radius(&eigenvalues(&map).unwrap()) <= 1.0 + 1e-8);
    }

    #[test]
    fn norms_never_grow((spec, dim) in baker_case(), seed in any::<u64>()) {
        let map = quantize_open_baker(&spec, dim, 0.5).unwrap();
        let norms = iterate(&map, &random_state(map.planck, seed), 8).unwrap();
        for pair in norms.windows(2) {
            prop_assert!(pair[1] <= pair[0] + NORM_SLACK);
        }
    }

    #[test]
    fn cat_norms_never_grow((spec, hole, dim) in cat_case(), x in 0.0..1.0f64, xi in 0.0..1.0f64) {
        let map = quantize_open_cat(&spec, hole, dim).unwrap();
        let psi = torus_coherent_state(map.planck, 0.0, PhasePoint::new(x, xi));
        let norms = iterate(&map, &psi, 6).unwrap();
        for pair in norms.windows(2) {
            prop_assert!(pair[1] <= pair[0] + NORM_SLACK);
        }
    }

    #[test]
    fn counting_is_monotone_in_the_threshold((spec, dim) in baker_case(), a in 0.01..0.99f64, b in 0.01..0.99f64) {
        let map = quantize_open_baker(&spec, dim, 0.5).unwrap();
        let spectrum = eigenvalues(&map).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(count_above(&spectrum, hi).unwrap() <= count_above(&spectrum, lo).unwrap());
        let near_one = count_above(&spectrum, 1.0 - 1e-9).unwrap();
        let unit = spectrum.eigenvalues.iter().filter(|z| (z.norm() - 1.0).abs() <= 1e-8).count();
        prop_assert!(near_one <= unit);
    }
}

#[test]
fn counting_rejects_thresholds_outside_the_unit_interval() {
    let map = quantize_open_baker(&OpenBakerSpec::closed(2).unwrap(), 4, 0.5).unwrap();
    let spectrum = eigenvalues(&map).unwrap();
    for eps in [0.0, 1.0, -0.5, 2.0, f64::NAN] {
        assert!(count_above(&spectrum, eps).is_err());
    }
}

#[test]
fn closed_weyl_slope_is_one() {
    for base in [2u32, 3, 5] {
        let b = base as usize;
        let dims = [b * b, b * b * b, b * b * b * b];
        let fit = weyl_fit(&OpenBakerSpec::closed(base).unwrap(), &dims, 0.5, 0.5).unwrap();
        assert!((fit.slope - 1.0).abs() <= 1e-6, "D = {base}: slope {}", fit.slope);
    }
}

#[test]
fn spectra_csv_is_identical_across_strategies() {
    let spec = OpenBakerSpec::new(3, vec![0, 2]).unwrap();
    let dims = [27, 81, 243];
    let mut seq = Vec::new();
    write_spectrum_csv(&baker_spectra(&spec, &dims, 0.5, Execution::Sequential).unwrap(), &mut seq).unwrap();
    let mut par = Vec::new();
    write_spectrum_csv(&baker_spectra(&spec, &dims, 0.5, Execution::default()).unwrap(), &mut par).unwrap();
    assert_eq!(seq, par);
}
