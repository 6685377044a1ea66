//! Graph lift of a scalar state: `Y = (t; x; f)`, `∂₀Y = (1; 0; ∂₀f)`,
//! with the normalized graph normal as the codimension-one frame.

use crate::geometry::NormalFrame;
use crate::spectral::SpectralField;

use super::scalar::ScalarState;
use super::parametric::ParametricState;

/// Lift the scalar state; returns the parametric state and the unit normal
/// frame `e = m^{−1}dF / √(1+Q)` for the level set `F = x^{d+1} − f`.
pub fn lift_graph(state: &ScalarState) -> (ParametricState, NormalFrame) {
    let grid = state.grid.clone();
    let d = grid.dim;
    let na = d + 2;
    let mut disp = Vec::with_capacity(na);
    let mut dy0 = Vec::with_capacity(na);
    for a in 0..na {
        if a == na - 1 {
            disp.push(state.f.clone());
            dy0.push(state.df.clone());
        } else {
            disp.push(SpectralField::zeros(grid.clone()));
            dy0.push(if a == 0 {
                SpectralField::constant(grid.clone(), 1.0)
            } else {
                SpectralField::zeros(grid.clone())
            });
        }
    }

    // raw normal (∂₀f; −∂_1 f, …, −∂_d f; 1), norm² = 1 + Q
    let fx: Vec<SpectralField> = (0..d).map(|i| state.f.derivative(i)).collect();
    let mut q = state.df.mul(&state.df).scale(-1.0);
    for g in &fx {
        q = q.add(&g.mul(g));
    }
    let inv_norm = q.map(|v| 1.0 / (1.0 + v).sqrt());
    let mut e = Vec::with_capacity(na);
    e.push(state.df.mul(&inv_norm));
    for g in &fx {
        e.push(g.scale(-1.0).mul(&inv_norm));
    }
    e.push(inv_norm);

    (
        ParametricState { grid, codim: 1, disp, dy0 },
        NormalFrame { e: vec![e] },
    )
}
