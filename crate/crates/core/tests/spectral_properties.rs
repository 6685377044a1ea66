//! Property tests for the spectral invariants: Parseval, norm homogeneity,
//! dyadic block disjointness, and the product-split partition, over random
//! band-limited fields.

use proptest::prelude::*;

use minsurf_core::norms::sobolev_norm;
use minsurf_core::spectral::{hl_decompose, SpectralField, TorusGrid};

fn field_from(values: Vec<f64>, n: usize) -> SpectralField {
    let grid = TorusGrid::spatial(1, n);
    // band-limit through the dealias mask so products stay representable
    SpectralField::from_values(grid, values).dealias()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parseval_holds(values in prop::collection::vec(-1.0f64..1.0, 32)) {
        let f = field_from(values, 32);
        let grid_l2 = f.l2_norm();
        let coef_l2: f64 = f.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!((grid_l2 - coef_l2).abs() <= 1e-12 * grid_l2.max(1.0));
    }

    #[test]
    fn norms_scale_linearly(values in prop::collection::vec(-1.0f64..1.0, 32), c in -8.0f64..8.0) {
        let f = field_from(values, 32);
        let a = sobolev_norm(&f.scale(c), 1.2, 4.0);
        let b = c.abs() * sobolev_norm(&f, 1.2, 4.0);
        prop_assert!((a - b).abs() <= 1e-11 * b.max(1e-12));
    }

    #[test]
    fn distant_blocks_are_disjoint(values in prop::collection::vec(-1.0f64..1.0, 64)) {
        let f = field_from(values, 64);
        let jmax = f.grid().jmax();
        for j in 0..=jmax {
            for jp in 0..=jmax {
                if j.abs_diff(jp) >= 2 {
                    let z = f.lp_project(j).unwrap().lp_project(jp).unwrap().max_abs();
                    prop_assert!(z < 1e-12);
                }
            }
        }
    }

    #[test]
    fn product_split_partitions(
        a in prop::collection::vec(-1.0f64..1.0, 32),
        b in prop::collection::vec(-1.0f64..1.0, 32),
    ) {
        let f = field_from(a, 32);
        let g = field_from(b, 32);
        for j in 0..=f.grid().jmax() {
            let (hl, lh, hh) = hl_decompose(&f, &g, j).unwrap();
            let pj = f.mul(&g).dealias().lp_project(j).unwrap();
            let err = hl.add(&lh).add(&hh).sub(&pj).max_abs();
            prop_assert!(err <= 1e-11 * pj.max_abs().max(1.0));
        }
    }

    #[test]
    fn sobolev_monotone_in_s(values in prop::collection::vec(-1.0f64..1.0, 32)) {
        let f = field_from(values, 32);
        let lo = sobolev_norm(&f, 0.4, 2.0);
        let hi = sobolev_norm(&f, 1.9, 2.0);
        prop_assert!(lo <= hi * (1.0 + 1e-13));
    }
}
