//! Immersions `Y: [0,T] × 𝕋^d → ℝ × 𝕋^d × ℝ^codim` stored as time slices,
//! together with their time jets.
//!
//! The target components `Y^1..Y^d` are torus-valued and `Y^0` grows like
//! `t`, so what is stored spectrally is the periodic displacement
//! `u = Y − Y₀` from the flat reference `Y₀(t,x) = (t; x; 0,…,0)`. The
//! velocity `∂₀Y` is periodic as it stands and is stored whole.
//!
//! Time derivatives of `Y` of order ≥ 2 come from exact jets when the
//! producer knows them (an attached evolution right-hand side, or an
//! analytic test immersion) and from 5-point finite differences of the
//! stored `∂₀Y` series otherwise. Spatial derivatives are always spectral.

use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::spectral::{SpectralField, TorusGrid};

use super::stencil::fd_time_derivative_any;

/// Target-signature metadata: Minkowski metric `diag(−1, +1, …, +1)` on
/// the ambient Cartesian chart.
#[derive(Clone, Copy, Debug)]
pub struct MinkowskiTarget {
    /// ambient dimension (spacetime dim + codim)
    pub ambient_dim: usize,
}

impl MinkowskiTarget {
    pub fn new(spatial_dim: usize, codim: usize) -> Self {
        MinkowskiTarget { ambient_dim: spatial_dim + 1 + codim }
    }

    #[inline]
    pub fn eta(&self, a: usize) -> f64 {
        if a == 0 {
            -1.0
        } else {
            1.0
        }
    }

    #[inline]
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut s = -u[0] * v[0];
        for a in 1..self.ambient_dim {
            s += u[a] * v[a];
        }
        s
    }
}

/// One time slice: periodic displacement `u^A = Y^A − Y₀^A` and the full
/// velocity `∂₀Y^A`.
#[derive(Clone, Debug)]
pub struct Immersion {
    pub disp: Vec<SpectralField>,
    pub dy0: Vec<SpectralField>,
}

impl Immersion {
    pub fn components(&self) -> usize {
        self.disp.len()
    }
}

/// A stored immersion history: slices at uniformly spaced times with
/// optional exact higher time jets per slice.
pub struct ImmersionHistory {
    pub grid: Arc<TorusGrid>,
    pub target: MinkowskiTarget,
    pub codim: usize,
    pub times: Vec<f64>,
    slices: Vec<Immersion>,
    /// exact jets of order 2 and 3 where known: `jets[s][k-2]`
    exact_jets: Vec<[Option<Vec<SpectralField>>; 2]>,
}

impl ImmersionHistory {
    pub fn new(grid: Arc<TorusGrid>, spatial_dim: usize, codim: usize) -> Self {
        assert_eq!(grid.dim, spatial_dim);
        ImmersionHistory {
            grid,
            target: MinkowskiTarget::new(spatial_dim, codim),
            codim,
            times: Vec::new(),
            slices: Vec::new(),
            exact_jets: Vec::new(),
        }
    }

    /// Spacetime dimension `d + 1` of the base.
    pub fn base_dim(&self) -> usize {
        self.grid.dim + 1
    }

    pub fn push_slice(&mut self, t: f64, slice: Immersion) {
        assert_eq!(slice.disp.len(), self.target.ambient_dim);
        assert_eq!(slice.dy0.len(), self.target.ambient_dim);
        self.times.push(t);
        self.slices.push(slice);
        self.exact_jets.push([None, None]);
    }

    pub fn push_slice_with_jets(
        &mut self,
        t: f64,
        slice: Immersion,
        d2: Vec<SpectralField>,
        d3: Vec<SpectralField>,
    ) {
        self.push_slice(t, slice);
        let last = self.exact_jets.len() - 1;
        self.exact_jets[last] = [Some(d2), Some(d3)];
    }

    /// Attach an exact second jet (e.g. from the evolution right-hand side).
    pub fn set_jet2(&mut self, s: usize, d2: Vec<SpectralField>) {
        self.exact_jets[s][0] = Some(d2);
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

    pub fn slice(&self, s: usize) -> &Immersion {
        &self.slices[s]
    }

    /// Spatial derivative `∂_i Y^A` on slice `s` (unit affine part plus the
    /// spectral derivative of the displacement).
    pub fn dy_spatial(&self, s: usize, axis: usize, a: usize) -> SpectralField {
        let d = self.slices[s].disp[a].derivative(axis);
        if a == axis + 1 {
            d.map(|v| v + 1.0)
        } else {
            d
        }
    }

    /// `∂₀^k Y` on slice `s` for `k = 1..=3`; falls back to finite
    /// differences of the stored `∂₀Y` series when no exact jet is stored.
    pub fn y_jet(&self, s: usize, k: usize) -> Result<Vec<SpectralField>> {
        let na = self.target.ambient_dim;
        match k {
            1 => Ok(self.slices[s].dy0.clone()),
            2 | 3 => {
                if let Some(exact) = &self.exact_jets[s][k - 2] {
                    return Ok(exact.clone());
                }
                let dt = self.dt();
                let mut out = Vec::with_capacity(na);
                for a in 0..na {
                    let series: Vec<SpectralField> =
                        self.slices.iter().map(|sl| sl.dy0[a].clone()).collect();
                    out.push(fd_time_derivative_any(&series, dt, s, k - 1)?);
                }
                Ok(out)
            }
            _ => Err(CoreError::Other(format!("jet order {k} not supported"))),
        }
    }

    /// The flat reference with `time_steps + 1` slices (zero displacement).
    pub fn flat(grid: Arc<TorusGrid>, codim: usize) -> Self {
        let d = grid.dim;
        let mut h = Self::new(grid.clone(), d, codim);
        let na = h.target.ambient_dim;
        let dt = grid.dt();
        for s in 0..=grid.time_steps {
            let t = s as f64 * dt;
            let disp: Vec<SpectralField> =
                (0..na).map(|_| SpectralField::zeros(grid.clone())).collect();
            let dy0: Vec<SpectralField> = (0..na)
                .map(|a| {
                    if a == 0 {
                        SpectralField::constant(grid.clone(), 1.0)
                    } else {
                        SpectralField::zeros(grid.clone())
                    }
                })
                .collect();
            let zero: Vec<SpectralField> =
                (0..na).map(|_| SpectralField::zeros(grid.clone())).collect();
            h.push_slice_with_jets(t, Immersion { disp, dy0 }, zero.clone(), zero);
        }
        h
    }
}
