//! Besov norms `‖f‖_{B^s_{p,r}} = ‖ { 2^{sj} ‖P_j f‖_{L^p} }_j ‖_{ℓ^r}`.

use crate::spectral::SpectralField;

pub fn besov_norm(f: &SpectralField, s: f64, p: f64, r: f64) -> f64 {
    let jmax = f.grid().jmax();
    let terms: Vec<f64> = (0..=jmax)
        .map(|j| {
            let w = (2f64).powf(s * j as f64);
            w * f.lp_project(j).expect("within range").lq_norm(p)
        })
        .collect();
    if r.is_infinite() {
        terms.into_iter().fold(0.0, f64::max)
    } else {
        terms.into_iter().map(|t| t.powf(r)).sum::<f64>().powf(1.0 / r)
    }
}
