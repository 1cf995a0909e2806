use chiral_core::fit::fit_exponential;
use chiral_core::greens::{greens_column, greens_finite, greens_zero_block, kernel_dim, tolerance_scale};
use chiral_core::linalg::{det, herm_eig, inverse, qr_thin, singular_values, CMatrix, C64};
use chiral_core::model::random::{ginibre, random_hermitian};
use chiral_core::model::{
    assemble_hamiltonian, bloch_spectrum, periodic_gap_bound, periodic_gap_bound_spectral, sample_realization, ModelConfig,
};
use chiral_core::par::{map_indices_with, Execution};
use chiral_core::seed::derive_seed;
use chiral_core::symplectic::{
    chart_from_matrix, is_symplectic, matrix_from_chart, spectral_symmetry_check, AsymmetryPolicy, DrsChart,
};
use chiral_core::transfer::{explicit_product, transfer_matrix};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn qr_reconstructs(seed in any::<u64>(), cols in 1usize..5, extra in 0usize..4) {
        let m = ginibre(cols + extra, 1.0, &mut rng(seed)).block(0, 0, cols + extra, cols);
        let qr = qr_thin(&m).unwrap();
        prop_assert!(qr.q.matmul(&qr.r).max_abs_diff(&m) < 1e-12 * m.norm_inf().max(1.0));
        prop_assert!(qr.q.adjoint_mul(&qr.q).max_abs_diff(&CMatrix::identity(cols)) < 1e-12);
        for i in 0..cols {
            prop_assert!(qr.r[(i, i)].im == 0.0 && qr.r[(i, i)].re > 0.0);
        }
    }

    #[test]
    fn inverse_reverses_singular_values(seed in any::<u64>(), n in 1usize..6) {
        let m = ginibre(n, 1.0, &mut rng(seed));
        let s = singular_values(&m).values;
        let si = singular_values(&inverse(&m).unwrap()).values;
        for j in 0..n {
            let want = 1.0 / s[n - 1 - j];
            prop_assert!((si[j] - want).abs() <= 1e-8 * want);
        }
    }

    #[test]
    fn herm_eig_diagonalizes(seed in any::<u64>(), n in 1usize..7) {
        let h = random_hermitian(n, 1.0, &mut rng(seed));
        let e = herm_eig(&h).unwrap();
        let trace: f64 = e.values.iter().sum();
        prop_assert!((trace - h.trace().re).abs() < 1e-10);
        let lam = CMatrix::from_real_diag(&e.values);
        prop_assert!(h.matmul(&e.vectors).max_abs_diff(&e.vectors.matmul(&lam)) < 1e-10);
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn transfer_products_stay_symplectic(seed in any::<u64>(), n in 1usize..4, lambda in -3.0f64..3.0, len in 1i64..8) {
        let cfg = ModelConfig::ginibre_pair(n, 1.0, 0.7, seed);
        let r = sample_realization(&cfg, (1, len), 0).unwrap();
        let b = explicit_product(&r, C64::new(lambda, 0.0), 1, len).unwrap();
        let m = is_symplectic(&b, 1e-10).unwrap();
        prop_assert!(m.is_member, "residual {} scale {}", m.residual, m.scale);
        prop_assert!((det(&b).unwrap().norm() - 1.0).abs() < 1e-8 * m.scale);
        let t = r.hopping(1).unwrap();
        let a = transfer_matrix(t, C64::new(lambda, 0.0)).unwrap();
        let sym = spectral_symmetry_check(&a).unwrap();
        prop_assert!(sym.singular_defect < 1e-7);
    }

    #[test]
    fn chart_round_trip(seed in any::<u64>(), n in 1usize..4) {
        let mut g = rng(seed);
        let c = DrsChart::new(ginibre(n, 1.0, &mut g), random_hermitian(n, 1.0, &mut g), random_hermitian(n, 1.0, &mut g)).unwrap();
        let m = matrix_from_chart(&c).unwrap();
        prop_assert!(is_symplectic(&m, 1e-10).unwrap().is_member);
        let back = chart_from_matrix(&m, AsymmetryPolicy::default()).unwrap();
        prop_assert!(back.chart.max_deviation(&c) <= 1e-10 * c.scale() * back.d_condition);
    }

    #[test]
    fn chiral_spectrum_is_symmetric(seed in any::<u64>(), n in 1usize..4, len in 2i64..12) {
        let cfg = ModelConfig::ginibre_pair(n, 1.0, 0.5, seed);
        let r = sample_realization(&cfg, (1, len), 0).unwrap();
        let h = assemble_hamiltonian(&r).unwrap();
        let e = herm_eig(h.matrix()).unwrap().values;
        let d = e.len();
        for j in 0..d {
            prop_assert!((e[j] + e[d - 1 - j]).abs() <= 1e-9 * h.norm());
        }
    }

    #[test]
    fn bloch_minimum_below_gap_bound(seed in any::<u64>(), n in 1usize..3) {
        let mut g = rng(seed);
        let (a, b) = (ginibre(n, 1.0, &mut g), ginibre(n, 1.0, &mut g));
        let bands = bloch_spectrum(&a, &b, 256).unwrap();
        let inf = bands.inf_h_squared();
        let spectral = periodic_gap_bound_spectral(&a, &b).unwrap();
        prop_assert!(inf <= spectral + 1e-8, "inf {} bound {}", inf, spectral);
        if n == 1 {
            prop_assert!(inf <= periodic_gap_bound(&a, &b).unwrap() + 1e-8);
        }
    }

    #[test]
    fn greens_conjugate_symmetry(seed in any::<u64>(), re in -2.0f64..2.0, im in 0.05f64..2.0) {
        let cfg = ModelConfig::wegner(2, 1.0, 0.5, seed);
        let r = sample_realization(&cfg, (0, 7), 0).unwrap();
        let h = assemble_hamiltonian(&r).unwrap();
        let z = C64::new(re, im);
        let pairs: Vec<(i64, i64)> = (0..8).flat_map(|x| (0..8).map(move |y| (x, y))).collect();
        let g = greens_finite(&h, z, &pairs).unwrap();
        let gb = greens_finite(&h, z.conj(), &pairs).unwrap();
        let scale = tolerance_scale(&h, z);
        for &(x, y) in &pairs {
            prop_assert!(g.get(x, y).unwrap().max_abs_diff(&gb.get(y, x).unwrap().adjoint()) <= 1e-10 * scale);
        }
    }

    #[test]
    fn zero_energy_checkerboard(seed in any::<u64>(), n in 1usize..4, cells in 1i64..8) {
        let cfg = ModelConfig::ginibre_pair(n, 1.0, 1.0, seed);
        let len = 2 * cells;
        let r = sample_realization(&cfg, (1, len), 0).unwrap();
        let h = assemble_hamiltonian(&r).unwrap();
        let scale = tolerance_scale(&h, C64::new(0.0, 0.0));
        for y in 1..=len {
            let col = greens_column(&h, C64::new(0.0, 0.0), y).unwrap();
            for x in 1..=len {
                let got = &col[(x - 1) as usize];
                if (x - y) % 2 == 0 {
                    prop_assert!(got.norm_max() <= 1e-10 * scale);
                } else {
                    prop_assert!(got.max_abs_diff(&greens_zero_block(&r, x, y).unwrap()) <= 1e-8 * scale);
                }
            }
        }
        prop_assert_eq!(kernel_dim(&h, 1e-8), 0);
        let odd = sample_realization(&cfg, (1, len + 1), 0).unwrap();
        prop_assert_eq!(kernel_dim(&assemble_hamiltonian(&odd).unwrap(), 1e-8), n);
    }

    #[test]
    fn seeds_separate_tuples(master in any::<u64>(), i in 0u64..1000, site in -1000i64..1000, tag in 0u64..5) {
        let k = derive_seed(master, i, site, tag);
        prop_assert_eq!(k, derive_seed(master, i, site, tag));
        prop_assert_ne!(k, derive_seed(master, i + 1, site, tag));
        prop_assert_ne!(k, derive_seed(master, i, site + 1, tag));
        prop_assert_ne!(k, derive_seed(master, i, site, tag + 1));
        prop_assert_ne!(k, derive_seed(master.wrapping_add(1), i, site, tag));
    }

    #[test]
    fn exponential_fit_recovers_rate(rate in 0.01f64..2.0, c0 in -5.0f64..5.0) {
        let xs: Vec<f64> = (0..20).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (c0 - rate * x).exp()).collect();
        let f = fit_exponential(&xs, &ys, None).unwrap();
        prop_assert!((f.rate() - rate).abs() < 1e-10 && (f.intercept - c0).abs() < 1e-9);
        prop_assert!(f.r_squared > 1.0 - 1e-12);
    }
}

#[test]
fn execution_paths_agree() {
    let cfg = ModelConfig::ginibre_pair(2, 1.0, 0.8, 5);
    let work = |i: usize| {
        let r = sample_realization(&cfg, (1, 40), i as u64).unwrap();
        let h = assemble_hamiltonian(&r).unwrap();
        let col = greens_column(&h, C64::new(0.5, 0.1), 1).unwrap();
        col.iter().map(|b| b.as_slice().iter().map(|z| z.re.to_bits() ^ z.im.to_bits()).fold(0u64, |a, b| a ^ b)).collect::<Vec<_>>()
    };
    assert_eq!(map_indices_with(Execution::Sequential, 24, work), map_indices_with(Execution::Parallel, 24, work));
}

#[test]
fn million_seed_keys_are_distinct() {
    let mut keys: Vec<u64> = (0..1_000_000u64).map(|i| derive_seed(42, i, (i % 97) as i64, i % 5)).collect();
    keys.sort_unstable();
    keys.dedup();
    assert_eq!(keys.len(), 1_000_000);
}
