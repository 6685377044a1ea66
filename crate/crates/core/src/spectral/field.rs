use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use super::grid::{same_grid, TorusGrid};
use crate::error::Result;

/// Real scalar field on a torus grid with lazily cached Fourier
/// coefficients.
///
/// A field is constructed either from physical samples or from
/// coefficients; the other representation materializes on first use and the
/// two stay consistent because fields are immutable. Synthesis from
/// coefficients takes the real part (all operators in this crate preserve
/// realness analytically, so the imaginary content is rounding dust).
pub struct SpectralField {
    grid: Arc<TorusGrid>,
    values: OnceLock<Vec<f64>>,
    coeffs: OnceLock<Vec<Complex64>>,
}

impl Clone for SpectralField {
    fn clone(&self) -> Self {
        let f = SpectralField {
            grid: self.grid.clone(),
            values: OnceLock::new(),
            coeffs: OnceLock::new(),
        };
        if let Some(v) = self.values.get() {
            let _ = f.values.set(v.clone());
        }
        if let Some(c) = self.coeffs.get() {
            let _ = f.coeffs.set(c.clone());
        }
        f
    }
}

impl std::fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "SpectralField(dim={}, N={}, max|f|={:.3e})",
            self.grid.dim,
            self.grid.points_per_axis,
            self.max_abs()
        )
    }
}

impl SpectralField {
    pub fn from_values(grid: Arc<TorusGrid>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len(), "sample count must match grid");
        let f = SpectralField { grid, values: OnceLock::new(), coeffs: OnceLock::new() };
        f.values.set(values).unwrap();
        f
    }

    pub fn from_coeffs(grid: Arc<TorusGrid>, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), grid.len(), "coefficient count must match grid");
        let f = SpectralField { grid, values: OnceLock::new(), coeffs: OnceLock::new() };
        f.coeffs.set(coeffs).unwrap();
        f
    }

    pub fn zeros(grid: Arc<TorusGrid>) -> Self {
        let n = grid.len();
        Self::from_values(grid, vec![0.0; n])
    }

    pub fn constant(grid: Arc<TorusGrid>, c: f64) -> Self {
        let n = grid.len();
        Self::from_values(grid, vec![c; n])
    }

    /// Sample a function of the grid coordinates.
    pub fn from_fn(grid: Arc<TorusGrid>, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut vals = vec![0.0; grid.len()];
        let mut p = vec![0.0; grid.dim];
        for (flat, v) in vals.iter_mut().enumerate() {
            grid.point(flat, &mut p);
            *v = f(&p);
        }
        Self::from_values(grid, vals)
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        self.values.get_or_init(|| {
            let coeffs = self.coeffs.get().expect("field constructed empty");
            let mut buf = coeffs.clone();
            self.grid.fft_nd(&mut buf, false);
            buf.into_iter().map(|z| z.re).collect()
        })
    }

    pub fn coeffs(&self) -> &[Complex64] {
        self.coeffs.get_or_init(|| {
            let values = self.values.get().expect("field constructed empty");
            let mut buf: Vec<Complex64> =
                values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            self.grid.fft_nd(&mut buf, true);
            buf
        })
    }

    /// Apply a diagonal Fourier multiplier.
    pub fn multiplier(&self, symbol: impl Fn(usize, &TorusGrid) -> Complex64) -> SpectralField {
        let coeffs = self.coeffs();
        let out: Vec<Complex64> = coeffs
            .iter()
            .enumerate()
            .map(|(flat, &c)| symbol(flat, &self.grid) * c)
            .collect();
        SpectralField::from_coeffs(self.grid.clone(), out)
    }

    /// Coordinate derivative `∂_axis` (multiplication by `iξ_axis`).
    pub fn derivative(&self, axis: usize) -> SpectralField {
        assert!(axis < self.grid.dim);
        let dim = self.grid.dim;
        self.multiplier(move |flat, g| {
            let mut xi = [0i64; 3];
            g.xi(flat, &mut xi[..dim]);
            Complex64::new(0.0, xi[axis] as f64)
        })
    }

    /// Zero every mode outside the 2/3-rule mask.
    pub fn dealias(&self) -> SpectralField {
        let coeffs = self.coeffs();
        let out: Vec<Complex64> = coeffs
            .iter()
            .enumerate()
            .map(|(flat, &c)| if self.grid.dealias_keep(flat) { c } else { Complex64::default() })
            .collect();
        SpectralField::from_coeffs(self.grid.clone(), out)
    }

    /// Mean value over the torus (the `ξ = 0` coefficient).
    pub fn mean(&self) -> f64 {
        self.coeffs()[0].re
    }

    /// Subtract the flat mean.
    pub fn mean_free(&self) -> SpectralField {
        let mut coeffs = self.coeffs().to_vec();
        coeffs[0] = Complex64::default();
        SpectralField::from_coeffs(self.grid.clone(), coeffs)
    }

    pub fn max_abs(&self) -> f64 {
        self.values().iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    /// Grid `L²` norm with the normalized measure.
    pub fn l2_norm(&self) -> f64 {
        let vals = self.values();
        let s: f64 = vals.iter().map(|&v| v * v).sum();
        (s / vals.len() as f64).sqrt()
    }

    /// Grid `L^q` norm with the normalized measure; `q = ∞` is the max.
    pub fn lq_norm(&self, q: f64) -> f64 {
        if q.is_infinite() {
            return self.max_abs();
        }
        let vals = self.values();
        let s: f64 = vals.iter().map(|&v| v.abs().powf(q)).sum();
        (s / vals.len() as f64).powf(1.0 / q)
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }

    // ---- pointwise arithmetic (products are the caller's responsibility
    //      to dealias where the pipeline requires it) ----

    pub fn zip(&self, other: &SpectralField, f: impl Fn(f64, f64) -> f64) -> SpectralField {
        same_grid(&self.grid, &other.grid).expect("zip on mismatched grids");
        let a = self.values();
        let b = other.values();
        let out: Vec<f64> = a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect();
        SpectralField::from_values(self.grid.clone(), out)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> SpectralField {
        let out: Vec<f64> = self.values().iter().map(|&x| f(x)).collect();
        SpectralField::from_values(self.grid.clone(), out)
    }

    pub fn add(&self, other: &SpectralField) -> SpectralField {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        self.zip(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &SpectralField) -> SpectralField {
        self.zip(other, |a, b| a * b)
    }

    /// Pointwise product followed by the dealiasing mask.
    pub fn mul_dealiased(&self, other: &SpectralField) -> SpectralField {
        self.mul(other).dealias()
    }

    pub fn scale(&self, c: f64) -> SpectralField {
        self.map(|x| c * x)
    }

    pub fn axpy(&self, c: f64, other: &SpectralField) -> SpectralField {
        self.zip(other, |a, b| a + c * b)
    }

    /// Accumulate `Σ c_k f_k` deterministically.
    pub fn linear_combination(fields: &[(f64, &SpectralField)]) -> SpectralField {
        assert!(!fields.is_empty());
        let grid = fields[0].1.grid.clone();
        let mut out = vec![0.0; grid.len()];
        for (c, f) in fields {
            same_grid(&grid, &f.grid).expect("linear_combination on mismatched grids");
            for (o, v) in out.iter_mut().zip(f.values()) {
                *o += c * v;
            }
        }
        SpectralField::from_values(grid, out)
    }

    /// Evaluate the trigonometric interpolant at an arbitrary point.
    ///
    /// Direct summation over the lattice, `O(N^dim)` per call; meant for
    /// verification oracles and the gauge-flow background lookup, not for
    /// bulk transforms.
    pub fn eval_at(&self, x: &[f64]) -> f64 {
        let grid = &self.grid;
        let n = grid.points_per_axis;
        let dim = grid.dim;
        // per-axis phase tables e^{i m x_ax} for m = 0..N (wavenumber mapping
        // applied below)
        let mut phase: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
        for ax in 0..dim {
            let mut tab = vec![Complex64::default(); n];
            for (m, t) in tab.iter_mut().enumerate() {
                let k = grid.wavenumber(m) as f64;
                *t = Complex64::from_polar(1.0, k * x[ax]);
            }
            phase.push(tab);
        }
        let coeffs = self.coeffs();
        let mut acc = Complex64::default();
        let mut idx = [0usize; 3];
        for (flat, &c) in coeffs.iter().enumerate() {
            grid.unravel(flat, &mut idx[..dim]);
            let mut ph = Complex64::new(1.0, 0.0);
            for ax in 0..dim {
                ph *= phase[ax][idx[ax]];
            }
            acc += c * ph;
        }
        acc.re
    }

    /// Relative distance `‖a−b‖_∞ / max(1, ‖a‖_∞)`.
    pub fn rel_linf_distance(&self, other: &SpectralField) -> f64 {
        let denom = self.max_abs().max(1.0);
        self.sub(other).max_abs() / denom
    }
}

/// A field sampled on the stored time grid: one spatial field per slice.
#[derive(Clone, Debug)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub slices: Vec<SpectralField>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, slices: Vec<SpectralField>) -> Self {
        assert_eq!(times.len(), slices.len());
        TimeSeries { times, slices }
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    pub fn dt(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }

    /// 4th-order finite-difference time derivative at slice `s` using a
    /// 5-point stencil (one-sided near the ends).
    pub fn time_derivative(&self, s: usize) -> Result<SpectralField> {
        crate::geometry::stencil::fd_time_derivative(&self.slices, self.dt(), s, 1)
    }
}
