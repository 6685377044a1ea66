//! Analytic immersions built from finite trigonometric sums, with exact
//! time jets of every order. These drive the identity and convergence
//! suites: spatial representation is exact once the grid resolves the mode
//! set, so measured residuals isolate the property under test.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::spectral::{SpectralField, TorusGrid};

use super::immersion::{Immersion, ImmersionHistory};

/// One travelling mode of a displacement component:
/// `amp · cos(omega·t + ⟨k, x⟩ + phase)`.
#[derive(Clone, Copy, Debug)]
pub struct Mode {
    pub amp: f64,
    pub omega: f64,
    pub k: [i64; 3],
    pub phase: f64,
}

impl Mode {
    /// `∂_t^order` of the mode at time `t`, as a function of `x`.
    fn eval(&self, order: usize, t: f64, x: &[f64]) -> f64 {
        let mut arg = self.omega * t + self.phase;
        for (ax, &xi) in x.iter().enumerate() {
            arg += self.k[ax] as f64 * xi;
        }
        let scale = self.amp * self.omega.powi(order as i32);
        match order % 4 {
            0 => scale * arg.cos(),
            1 => -scale * arg.sin(),
            2 => -scale * arg.cos(),
            _ => scale * arg.sin(),
        }
    }
}

/// Displacement `u^A(t,x)` as a per-component mode list; the immersion is
/// `Y = Y₀ + u`.
#[derive(Clone, Debug)]
pub struct AnalyticImmersion {
    pub spatial_dim: usize,
    pub codim: usize,
    pub modes: Vec<Vec<Mode>>,
}

impl AnalyticImmersion {
    pub fn ambient_dim(&self) -> usize {
        self.spatial_dim + 1 + self.codim
    }

    /// Flat immersion (no modes).
    pub fn flat(spatial_dim: usize, codim: usize) -> Self {
        let na = spatial_dim + 1 + codim;
        AnalyticImmersion { spatial_dim, codim, modes: vec![Vec::new(); na] }
    }

    /// Random perturbation of the flat immersion: `modes_per_component`
    /// modes of amplitude ≤ `amp` with `|k_i| ≤ kmax` on every component.
    pub fn random(
        spatial_dim: usize,
        codim: usize,
        amp: f64,
        kmax: i64,
        modes_per_component: usize,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let na = spatial_dim + 1 + codim;
        let modes = (0..na)
            .map(|_| {
                (0..modes_per_component)
                    .map(|_| {
                        let mut k = [0i64; 3];
                        for item in k.iter_mut().take(spatial_dim) {
                            *item = rng.random_range(-kmax..=kmax);
                        }
                        Mode {
                            amp: amp * rng.random_range(0.3..1.0),
                            omega: rng.random_range(-1.5..1.5),
                            k,
                            phase: rng.random_range(0.0..std::f64::consts::TAU),
                        }
                    })
                    .collect()
            })
            .collect();
        AnalyticImmersion { spatial_dim, codim, modes }
    }

    /// Static graph over the last target direction: `Y = (t; x; f(x))`
    /// with `f` a mode sum (codim must be ≥ 1; only the last component
    /// carries modes).
    pub fn static_graph(spatial_dim: usize, modes: Vec<Mode>) -> Self {
        let mut all = vec![Vec::new(); spatial_dim + 2];
        let last = all.len() - 1;
        all[last] = modes.into_iter().map(|mut m| {
            m.omega = 0.0;
            m
        }).collect();
        AnalyticImmersion { spatial_dim, codim: 1, modes: all }
    }

    /// `∂_t^order u^A(t, ·)` as a field.
    pub fn jet_field(
        &self,
        grid: &Arc<TorusGrid>,
        a: usize,
        order: usize,
        t: f64,
    ) -> SpectralField {
        let modes = self.modes[a].clone();
        SpectralField::from_fn(grid.clone(), move |x| {
            modes.iter().map(|m| m.eval(order, t, x)).sum()
        })
    }

    /// Pointwise evaluation of `∂_t^order u^A` at an arbitrary point.
    pub fn eval(&self, a: usize, order: usize, t: f64, x: &[f64]) -> f64 {
        self.modes[a].iter().map(|m| m.eval(order, t, x)).sum()
    }

    /// Pointwise evaluation of the full immersion `Y^A` (affine part
    /// included).
    pub fn eval_y(&self, a: usize, t: f64, x: &[f64]) -> f64 {
        let affine = if a == 0 {
            t
        } else if a <= self.spatial_dim {
            x[a - 1]
        } else {
            0.0
        };
        affine + self.eval(a, 0, t, x)
    }

    /// Sampled history with exact jets on `slices` slices spaced `dt`.
    pub fn history(
        &self,
        grid: Arc<TorusGrid>,
        t0: f64,
        dt: f64,
        slices: usize,
    ) -> ImmersionHistory {
        let na = self.ambient_dim();
        let mut h = ImmersionHistory::new(grid.clone(), self.spatial_dim, self.codim);
        for s in 0..slices {
            let t = t0 + s as f64 * dt;
            let disp: Vec<SpectralField> =
                (0..na).map(|a| self.jet_field(&grid, a, 0, t)).collect();
            let dy0: Vec<SpectralField> = (0..na)
                .map(|a| {
                    let u1 = self.jet_field(&grid, a, 1, t);
                    if a == 0 {
                        u1.map(|v| v + 1.0)
                    } else {
                        u1
                    }
                })
                .collect();
            let d2: Vec<SpectralField> =
                (0..na).map(|a| self.jet_field(&grid, a, 2, t)).collect();
            let d3: Vec<SpectralField> =
                (0..na).map(|a| self.jet_field(&grid, a, 3, t)).collect();
            h.push_slice_with_jets(t, Immersion { disp, dy0 }, d2, d3);
        }
        h
    }
}
