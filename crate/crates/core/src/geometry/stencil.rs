//! Finite-difference time stencils over stored slices.
//!
//! Spatial derivatives are spectral everywhere; time derivatives of stored
//! quantities come from 5-point stencils, 4th order both centered and
//! one-sided.

use crate::error::{CoreError, Result};
use crate::spectral::SpectralField;

/// 5-point finite-difference weights for the `order`-th derivative at
/// offset position `pos` (0..=4) within the stencil, unit spacing.
fn weights5(order: usize, pos: usize) -> [f64; 5] {
    // Fornberg weights, tabulated for the two orders we use.
    const D1: [[f64; 5]; 5] = [
        [-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -0.25],
        [-0.25, -5.0 / 6.0, 1.5, -0.5, 1.0 / 12.0],
        [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0],
        [-1.0 / 12.0, 0.5, -1.5, 5.0 / 6.0, 0.25],
        [0.25, -4.0 / 3.0, 3.0, -4.0, 25.0 / 12.0],
    ];
    const D2: [[f64; 5]; 5] = [
        [35.0 / 12.0, -26.0 / 3.0, 9.5, -14.0 / 3.0, 11.0 / 12.0],
        [11.0 / 12.0, -5.0 / 3.0, 0.5, 1.0 / 3.0, -1.0 / 12.0],
        [-1.0 / 12.0, 4.0 / 3.0, -2.5, 4.0 / 3.0, -1.0 / 12.0],
        [-1.0 / 12.0, 1.0 / 3.0, 0.5, -5.0 / 3.0, 11.0 / 12.0],
        [11.0 / 12.0, -14.0 / 3.0, 9.5, -26.0 / 3.0, 35.0 / 12.0],
    ];
    match order {
        1 => D1[pos],
        2 => D2[pos],
        _ => panic!("stencil supports orders 1 and 2"),
    }
}

/// `order`-th time derivative of a slice sequence at slice `s`.
pub fn fd_time_derivative(
    slices: &[SpectralField],
    dt: f64,
    s: usize,
    order: usize,
) -> Result<SpectralField> {
    if slices.len() < 5 {
        return Err(CoreError::StencilDepth { needed: 5, available: slices.len() });
    }
    let n = slices.len();
    // place the 5-point window so that s sits at offset `pos`
    let start = if s < 2 {
        0
    } else if s + 2 >= n {
        n - 5
    } else {
        s - 2
    };
    let pos = s - start;
    let w = weights5(order, pos);
    let scale = 1.0 / dt.powi(order as i32);
    let terms: Vec<(f64, &SpectralField)> = (0..5)
        .map(|k| (w[k] * scale, &slices[start + k]))
        .collect();
    Ok(SpectralField::linear_combination(&terms))
}

/// Best-available-order time derivative: 5-point (4th order) when the
/// series allows it, otherwise 3-point (2nd order) or 2-point (1st order).
/// Short-history diagnostics degrade in order instead of failing.
pub fn fd_time_derivative_any(
    slices: &[SpectralField],
    dt: f64,
    s: usize,
    order: usize,
) -> Result<SpectralField> {
    let n = slices.len();
    if n >= 5 {
        return fd_time_derivative(slices, dt, s, order);
    }
    match order {
        1 => {
            if n >= 3 {
                let (a, b, c, w) = if s == 0 {
                    (0, 1, 2, [-1.5, 2.0, -0.5])
                } else if s + 1 >= n {
                    (n - 3, n - 2, n - 1, [0.5, -2.0, 1.5])
                } else {
                    (s - 1, s, s + 1, [-0.5, 0.0, 0.5])
                };
                Ok(SpectralField::linear_combination(&[
                    (w[0] / dt, &slices[a]),
                    (w[1] / dt, &slices[b]),
                    (w[2] / dt, &slices[c]),
                ]))
            } else if n == 2 {
                Ok(slices[1].sub(&slices[0]).scale(1.0 / dt))
            } else {
                Err(CoreError::StencilDepth { needed: 2, available: n })
            }
        }
        2 => {
            if n >= 3 {
                let a = if s == 0 { 0 } else if s + 1 >= n { n - 3 } else { s - 1 };
                Ok(SpectralField::linear_combination(&[
                    (1.0 / (dt * dt), &slices[a]),
                    (-2.0 / (dt * dt), &slices[a + 1]),
                    (1.0 / (dt * dt), &slices[a + 2]),
                ]))
            } else {
                Err(CoreError::StencilDepth { needed: 3, available: n })
            }
        }
        _ => Err(CoreError::Other(format!("order {order} not supported"))),
    }
}

/// Scalar version of [`fd_time_derivative`] for plain samples.
pub fn fd_scalar_derivative(samples: &[f64], dt: f64, s: usize, order: usize) -> Result<f64> {
    if samples.len() < 5 {
        return Err(CoreError::StencilDepth { needed: 5, available: samples.len() });
    }
    let n = samples.len();
    let start = if s < 2 {
        0
    } else if s + 2 >= n {
        n - 5
    } else {
        s - 2
    };
    let pos = s - start;
    let w = weights5(order, pos);
    let mut acc = 0.0;
    for k in 0..5 {
        acc += w[k] * samples[start + k];
    }
    Ok(acc / dt.powi(order as i32))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourth_order_on_polynomials() {
        // exact for cubics at every stencil position
        let dt = 0.1;
        let f = |t: f64| 1.0 + 2.0 * t - 0.7 * t * t + 0.3 * t * t * t;
        let df = |t: f64| 2.0 - 1.4 * t + 0.9 * t * t;
        let ddf = |t: f64| -1.4 + 1.8 * t;
        let samples: Vec<f64> = (0..7).map(|k| f(k as f64 * dt)).collect();
        for s in 0..7 {
            let t = s as f64 * dt;
            let d1 = fd_scalar_derivative(&samples, dt, s, 1).unwrap();
            let d2 = fd_scalar_derivative(&samples, dt, s, 2).unwrap();
            assert!((d1 - df(t)).abs() < 1e-10, "d1 at slice {s}: {d1} vs {}", df(t));
            assert!((d2 - ddf(t)).abs() < 1e-9, "d2 at slice {s}");
        }
    }

    #[test]
    fn convergence_rate_on_sine() {
        let f = |t: f64| (1.3 * t).sin();
        let df = |t: f64| 1.3 * (1.3 * t).cos();
        let mut errs = Vec::new();
        for &dt in &[0.1, 0.05] {
            let samples: Vec<f64> = (0..5).map(|k| f(k as f64 * dt)).collect();
            let d1 = fd_scalar_derivative(&samples, dt, 2, 1).unwrap();
            errs.push((d1 - df(2.0 * dt)).abs());
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 3.5, "central first derivative order ≈ {order}");
    }
}
