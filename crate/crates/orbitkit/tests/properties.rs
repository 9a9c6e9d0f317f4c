use proptest::prelude::*;

use orbitkit::density::{
    conjugate, haar_unitary, kron, partial_transpose, partial_transpose_matrix,
    random_density, DensityMatrix, RandomSource, Subsystem,
};
use orbitkit::orbits::{
    coords_d2, coords_d3, coords_d4, entropy, inverse_coords_d4, purity, spectrum_of, Spectrum,
};
use orbitkit::product::factor_bipartite;

fn spectrum_strategy(dim: usize) -> impl Strategy<Value = Spectrum> {
    prop::collection::vec(1e-6..1.0f64, dim).prop_map(|raw| {
        let sum: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.iter().map(|x| x / sum).collect();
        Spectrum::from_probabilities(&probs).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coords_d4_roundtrip(s in spectrum_strategy(4)) {
        let c = coords_d4(&s).unwrap();
        prop_assert!(c.in_chamber(1e-9));
        let back = inverse_coords_d4(&c).unwrap();
        for (a, b) in s.entries().iter().zip(back.entries()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn coords_d2_range(s in spectrum_strategy(2)) {
        let r = coords_d2(&s).unwrap();
        prop_assert!((0.0..=1.0).contains(&r));
    }

    #[test]
    fn coords_d3_injective_offset(s in spectrum_strategy(3), t in spectrum_strategy(3)) {
        let max_gap: f64 = s.entries().iter().zip(t.entries())
            .map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assume!(max_gap > 1e-6);
        let (u1, v1) = coords_d3(&s).unwrap();
        let (u2, v2) = coords_d3(&t).unwrap();
        prop_assert!((u1 - u2).abs() > 1e-12 || (v1 - v2).abs() > 1e-12);
    }

    #[test]
    fn partial_transpose_involution_and_trace(seed in 0u64..1000) {
        let rho = random_density(6, RandomSource::with_stream(7001, seed)).unwrap();
        let pt = partial_transpose(&rho, (2, 3), Subsystem::A).unwrap();
        prop_assert!((pt.trace().re - 1.0).abs() < 1e-14);
        // PT is an index permutation, so applying it twice is the identity
        // bit-for-bit.
        let twice = partial_transpose_matrix(&pt, (2, 3), Subsystem::A).unwrap();
        prop_assert!(twice == *rho.matrix());
    }

    #[test]
    fn orbit_invariants_under_conjugation(seed in 0u64..500) {
        let rho = random_density(4, RandomSource::with_stream(7002, seed)).unwrap();
        let u = haar_unitary(4, RandomSource::with_stream(7003, seed)).unwrap();
        let moved = conjugate(&rho, &u).unwrap();
        let s1 = spectrum_of(&rho).unwrap();
        let s2 = spectrum_of(&moved).unwrap();
        prop_assert!((entropy(&s1) - entropy(&s2)).abs() < 1e-9);
        prop_assert!((purity(&s1) - purity(&s2)).abs() < 1e-9);
    }

    #[test]
    fn product_spectrum_factors(a in 0.5f64..1.0, b in 0.5f64..1.0) {
        let (a, b) = if a >= b { (a, b) } else { (b, a) };
        let probs = [a * b, a * (1.0 - b), (1.0 - a) * b, (1.0 - a) * (1.0 - b)];
        let s = Spectrum::from_probabilities(&probs).unwrap();
        let f = factor_bipartite(&s, 2, 2, 1e-9).unwrap();
        prop_assert!(f.is_some());
        let f = f.unwrap();
        prop_assert!(f.residual < 1e-9);
        // Soundness: the sorted outer product of the marginals reproduces s.
        let ma = f.marginals[0].entries();
        let mb = f.marginals[1].entries();
        let mut outer: Vec<f64> = ma.iter()
            .flat_map(|&x| mb.iter().map(move |&y| x * y))
            .collect();
        outer.sort_by(|p, q| q.partial_cmp(p).unwrap());
        for (got, want) in outer.iter().zip(s.entries()) {
            prop_assert!((got - want).abs() <= f.residual + 1e-12);
        }
    }

    #[test]
    fn spectrum_of_product_is_outer_product(sa in 0u64..200, sb in 0u64..200) {
        let ra = random_density(2, RandomSource::with_stream(7004, sa)).unwrap();
        let rb = random_density(2, RandomSource::with_stream(7005, sb)).unwrap();
        let prod = DensityMatrix::new(kron(ra.matrix(), rb.matrix())).unwrap();
        let s = spectrum_of(&prod).unwrap();
        let a = spectrum_of(&ra).unwrap();
        let b = spectrum_of(&rb).unwrap();
        let mut outer: Vec<f64> = a.entries().iter()
            .flat_map(|&x| b.entries().iter().map(move |&y| x * y))
            .collect();
        outer.sort_by(|p, q| q.partial_cmp(p).unwrap());
        for (got, want) in s.entries().iter().zip(&outer) {
            prop_assert!((got - want).abs() < 1e-10);
        }
    }
}
