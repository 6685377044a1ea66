use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{CoreError, Result};

/// Uniform grid on `[0,T] × 𝕋^dim` with `points_per_axis` collocation
/// points per spatial axis and period `2π` per axis.
///
/// The Fourier lattice is `ξ ∈ ℤ^dim` with `|ξ_i| ≤ N/2`; axis index `m`
/// maps to wavenumber `m` for `m ≤ N/2` and `m − N` otherwise.
pub struct TorusGrid {
    pub dim: usize,
    pub points_per_axis: usize,
    pub time_extent: f64,
    pub time_steps: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// Largest dyadic index resolvable on this lattice: smallest `J` with
    /// `Σ_{j≤J} χ_j ≡ 1` on the whole lattice.
    jmax: usize,
    /// per-axis dealiasing cutoff (2/3 rule): keep modes with |ξ_i| ≤ cutoff
    dealias_cutoff: usize,
    /// tabulated cutoff profiles, built on first use
    pub(crate) tables: std::sync::OnceLock<super::multiplier::ChiTables>,
}

impl std::fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TorusGrid")
            .field("dim", &self.dim)
            .field("points_per_axis", &self.points_per_axis)
            .field("time_extent", &self.time_extent)
            .field("time_steps", &self.time_steps)
            .finish()
    }
}

impl TorusGrid {
    pub fn new(dim: usize, points_per_axis: usize, time_extent: f64, time_steps: usize) -> Arc<Self> {
        assert!((1..=3).contains(&dim), "dim must be 1, 2 or 3");
        assert!(points_per_axis >= 4 && points_per_axis % 2 == 0, "N must be even and ≥ 4");
        assert!(time_extent > 0.0);
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(points_per_axis);
        let inv = planner.plan_fft_inverse(points_per_axis);
        // max |ξ| on the lattice is sqrt(dim) * N/2; χ_{≤J} ≡ 1 for |ξ| ≤ 1.5·2^J
        let ximax = (dim as f64).sqrt() * (points_per_axis as f64) / 2.0;
        let mut jmax = 0usize;
        while 1.5 * ((1u64 << jmax) as f64) < ximax {
            jmax += 1;
        }
        Arc::new(TorusGrid {
            dim,
            points_per_axis,
            time_extent,
            time_steps,
            fwd,
            inv,
            jmax,
            dealias_cutoff: points_per_axis / 3,
            tables: std::sync::OnceLock::new(),
        })
    }

    /// Spatial-only grid (time extent irrelevant).
    pub fn spatial(dim: usize, points_per_axis: usize) -> Arc<Self> {
        Self::new(dim, points_per_axis, 1.0, 1)
    }

    /// Total number of spatial grid points `N^dim`.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.time_extent / self.time_steps as f64
    }

    /// Grid spacing `2π/N`.
    pub fn dx(&self) -> f64 {
        2.0 * PI / self.points_per_axis as f64
    }

    pub fn jmax(&self) -> usize {
        self.jmax
    }

    pub fn check_dyadic(&self, j: usize) -> Result<()> {
        if j > self.jmax {
            Err(CoreError::DyadicRange { j, jmax: self.jmax })
        } else {
            Ok(())
        }
    }

    /// Wavenumber along one axis for flat index component `m`.
    #[inline]
    pub fn wavenumber(&self, m: usize) -> i64 {
        let n = self.points_per_axis as i64;
        let m = m as i64;
        if m <= n / 2 {
            m
        } else {
            m - n
        }
    }

    /// Decompose a flat index into per-axis indices (row-major, axis 0
    /// slowest).
    #[inline]
    pub fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        let n = self.points_per_axis;
        for ax in (0..self.dim).rev() {
            out[ax] = flat % n;
            flat /= n;
        }
    }

    /// Wavenumber vector at a flat index.
    #[inline]
    pub fn xi(&self, flat: usize, out: &mut [i64]) {
        let n = self.points_per_axis;
        let mut rem = flat;
        for ax in (0..self.dim).rev() {
            out[ax] = self.wavenumber(rem % n);
            rem /= n;
        }
    }

    /// |ξ| at a flat index.
    #[inline]
    pub fn xi_norm(&self, flat: usize) -> f64 {
        let mut xi = [0i64; 3];
        self.xi(flat, &mut xi[..self.dim]);
        let mut s = 0.0;
        for ax in 0..self.dim {
            s += (xi[ax] * xi[ax]) as f64;
        }
        s.sqrt()
    }

    /// Coordinates of a grid point (flat index), in `[0, 2π)^dim`.
    pub fn point(&self, flat: usize, out: &mut [f64]) {
        let n = self.points_per_axis;
        let h = self.dx();
        let mut rem = flat;
        for ax in (0..self.dim).rev() {
            out[ax] = (rem % n) as f64 * h;
            rem /= n;
        }
    }

    /// Iterate grid coordinates as a fresh vector (convenience for setup).
    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(move |flat| {
            let mut p = vec![0.0; self.dim];
            self.point(flat, &mut p);
            p
        })
    }

    /// True if the mode at `flat` survives the 2/3-rule dealiasing mask.
    #[inline]
    pub fn dealias_keep(&self, flat: usize) -> bool {
        let mut xi = [0i64; 3];
        self.xi(flat, &mut xi[..self.dim]);
        for ax in 0..self.dim {
            if xi[ax].unsigned_abs() as usize > self.dealias_cutoff {
                return false;
            }
        }
        true
    }

    /// In-place multidimensional FFT of `data` (physical → coefficients when
    /// `forward`). Forward output is normalized to interpolation
    /// coefficients (`1/N^dim`).
    pub(crate) fn fft_nd(&self, data: &mut [Complex64], forward: bool) {
        let n = self.points_per_axis;
        let total = self.len();
        debug_assert_eq!(data.len(), total);
        let plan = if forward { &self.fwd } else { &self.inv };
        let mut line = vec![Complex64::default(); n];
        // Transform along each axis. Row-major layout, axis `dim-1` contiguous.
        for ax in 0..self.dim {
            let stride = n.pow((self.dim - 1 - ax) as u32);
            let lines = total / n;
            for l in 0..lines {
                // Compute base offset of the l-th line along `ax`:
                // iterate all index tuples with the ax-component = 0.
                let block = stride * n;
                let outer = l / stride;
                let inner = l % stride;
                let base = outer * block + inner;
                for k in 0..n {
                    line[k] = data[base + k * stride];
                }
                plan.process(&mut line);
                for k in 0..n {
                    data[base + k * stride] = line[k];
                }
            }
        }
        if forward {
            let scale = 1.0 / total as f64;
            for v in data.iter_mut() {
                *v *= scale;
            }
        }
    }
}

/// Two grids are compatible when they discretize the same torus.
pub(crate) fn same_grid(a: &TorusGrid, b: &TorusGrid) -> Result<()> {
    if a.dim != b.dim || a.points_per_axis != b.points_per_axis {
        return Err(CoreError::GridMismatch(format!(
            "dim {}×N{} vs dim {}×N{}",
            a.dim, a.points_per_axis, b.dim, b.points_per_axis
        )));
    }
    Ok(())
}
