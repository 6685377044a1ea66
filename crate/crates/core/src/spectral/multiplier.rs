//! Littlewood–Paley projections, fractional operators and the
//! frequency-localized inverse-divergence multipliers.
//!
//! Symbol conventions (period 2π makes `∂_j ↔ iξ_j` exact):
//!
//! * `P_j`: multiplication by `χ_j(|ξ|)` with `χ_j = φ(2^{−j}|ξ|) − φ(2^{−j+1}|ξ|)`
//!   for `j > 0` and `χ_0 = φ(|ξ|)`;
//! * `|D|^p`: `|ξ|^p`; `⟨D⟩^s`: `(1+|ξ|²)^{s/2}`;
//! * `∂_j/|D|`: `i ξ_j / |ξ|` (zero at `ξ=0`) — the literal composition
//!   `∂_j ∘ |D|^{−1}`, which keeps real fields real and makes the flat
//!   Laplace–Beltrami combination `∂_i (∂_i/|D|)` equal `−|D|` exactly;
//! * `𝒯^{(i)}_j`: `−i ξ^i/|ξ|² · χ̃(|ξ|/2^j)` — the localized inverse
//!   divergence `∂_i Δ^{−1} χ̃(|D|/2^j)`, so the divergence identity
//!   `∂_i(𝒯^{(i)}_j P_j f) = P_j f` holds exactly for `j ≥ 1`.

use num_complex::Complex64;

use super::bump::{chi_tilde, phi_lp};
use super::field::SpectralField;
use super::grid::TorusGrid;
use crate::error::{CoreError, Result};

/// Tabulated radial profiles on one grid's Fourier lattice.
pub struct ChiTables {
    /// `χ_j(ξ)` for `j = 0..=jmax`, each of length `N^dim`
    pub chi: Vec<Vec<f64>>,
    /// `φ(2^{−j}|ξ|) = Σ_{j' ≤ j} χ_{j'}(ξ)`
    pub chi_leq: Vec<Vec<f64>>,
    /// `|ξ|`
    pub xi_norm: Vec<f64>,
    /// `Σ_{j ≥ 0} χ̃(|ξ|/2^j)` (finite sum: at most four scales overlap)
    pub t_sum: Vec<f64>,
}

pub(crate) fn tables(grid: &TorusGrid) -> &ChiTables {
    grid.tables.get_or_init(|| {
        let n = grid.len();
        let jmax = grid.jmax();
        let mut xi_norm = vec![0.0; n];
        for (flat, x) in xi_norm.iter_mut().enumerate() {
            *x = grid.xi_norm(flat);
        }
        let mut chi = Vec::with_capacity(jmax + 1);
        let mut chi_leq = Vec::with_capacity(jmax + 1);
        for j in 0..=jmax {
            let scale = 1.0 / (1u64 << j) as f64;
            let leq: Vec<f64> = xi_norm.iter().map(|&r| phi_lp(scale * r)).collect();
            let blk: Vec<f64> = if j == 0 {
                leq.clone()
            } else {
                let prev: &Vec<f64> = &chi_leq[j - 1];
                leq.iter().zip(prev).map(|(&a, &b)| a - b).collect()
            };
            chi.push(blk);
            chi_leq.push(leq);
        }
        let t_sum: Vec<f64> = xi_norm
            .iter()
            .map(|&r| {
                let mut s = 0.0;
                let mut j = 0usize;
                loop {
                    let scale = (1u64 << j) as f64;
                    // χ̃ supported in [1/4, 8]: stop once r/2^j < 1/4
                    let arg = r / scale;
                    if arg < 0.25 && j > 0 {
                        break;
                    }
                    s += chi_tilde(arg);
                    j += 1;
                    if j > 64 {
                        break;
                    }
                }
                s
            })
            .collect();
        ChiTables { chi, chi_leq, xi_norm, t_sum }
    })
}

/// Fourier multiplier families of first-order calculus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FractionalKind {
    /// `|D|^power`; a negative power demands a mean-free input.
    AbsD(f64),
    /// `⟨D⟩^power = (1+|D|²)^{power/2}`.
    Japanese(f64),
    /// `|D|^power` with the `ξ=0` coefficient set to 0 (the paper's
    /// convention for `|D|^{−1}`-type operators).
    AbsDInverseMeanFree(f64),
    /// `∂_axis/|D|`: symbol `iξ_axis/|ξ|`, zero at `ξ=0`.
    DjOverAbsD(usize),
}

/// Wrapper carrying the tabulated cutoffs; constructed per grid on first
/// use and cached there, so this type is mostly a namespace.
pub struct MultiplierBank;

impl MultiplierBank {
    /// Verify the partition of unity `Σ_j χ_j = 1` over the whole lattice;
    /// returns the max deviation.
    pub fn partition_of_unity_defect(grid: &TorusGrid) -> f64 {
        let t = tables(grid);
        let top = &t.chi_leq[grid.jmax()];
        top.iter().fold(0.0f64, |m, &v| m.max((v - 1.0).abs()))
    }

    /// Max over the lattice of `|symbol of 𝒯^{(i)}_j| · 2^j` (measured
    /// Mikhlin constant; the profile choice makes it ≤ 4).
    pub fn riesz_mikhlin_constant(grid: &TorusGrid, axis: usize, j: usize) -> f64 {
        let scale = (1u64 << j) as f64;
        let mut worst = 0.0f64;
        let mut xi = [0i64; 3];
        for flat in 0..grid.len() {
            grid.xi(flat, &mut xi[..grid.dim]);
            let r2: f64 = xi[..grid.dim].iter().map(|&k| (k * k) as f64).sum();
            if r2 == 0.0 {
                continue;
            }
            let r = r2.sqrt();
            let sym = (xi[axis] as f64).abs() / r2 * chi_tilde(r / scale);
            worst = worst.max(sym * scale);
        }
        worst
    }
}

impl SpectralField {
    /// Littlewood–Paley block `P_j f`.
    pub fn lp_project(&self, j: usize) -> Result<SpectralField> {
        self.grid().check_dyadic(j)?;
        let t = tables(self.grid());
        let chi = &t.chi[j];
        let coeffs = self.coeffs();
        let out: Vec<Complex64> = coeffs.iter().zip(chi).map(|(&c, &w)| c * w).collect();
        Ok(SpectralField::from_coeffs(self.grid().clone(), out))
    }

    /// `P_{≤j} f = Σ_{j' ≤ j} P_{j'} f` (sharp telescoped profile).
    pub fn lp_project_leq(&self, j: usize) -> Result<SpectralField> {
        self.grid().check_dyadic(j)?;
        let t = tables(self.grid());
        let chi = &t.chi_leq[j];
        let coeffs = self.coeffs();
        let out: Vec<Complex64> = coeffs.iter().zip(chi).map(|(&c, &w)| c * w).collect();
        Ok(SpectralField::from_coeffs(self.grid().clone(), out))
    }

    /// All blocks `P_0 f ... P_jmax f` at once (shares one transform).
    pub fn lp_blocks(&self) -> Vec<SpectralField> {
        let jmax = self.grid().jmax();
        (0..=jmax).map(|j| self.lp_project(j).expect("j within range")).collect()
    }

    /// Fractional / first-order pseudo-differential operators.
    pub fn fractional(&self, kind: FractionalKind) -> Result<SpectralField> {
        let grid = self.grid().clone();
        let t = tables(&grid);
        let coeffs = self.coeffs();
        match kind {
            FractionalKind::AbsD(p) => {
                if p < 0.0 {
                    let mean = self.mean().abs();
                    if mean > 1e-12 * self.l2_norm().max(1.0) {
                        return Err(CoreError::NonzeroMean { op: "|D|^p, p<0", mean });
                    }
                }
                let out: Vec<Complex64> = coeffs
                    .iter()
                    .enumerate()
                    .map(|(flat, &c)| {
                        let r = t.xi_norm[flat];
                        if r == 0.0 {
                            if p > 0.0 {
                                Complex64::default()
                            } else if p == 0.0 {
                                c
                            } else {
                                Complex64::default() // mean is zero by the check above
                            }
                        } else {
                            c * r.powf(p)
                        }
                    })
                    .collect();
                Ok(SpectralField::from_coeffs(grid, out))
            }
            FractionalKind::Japanese(s) => {
                let out: Vec<Complex64> = coeffs
                    .iter()
                    .enumerate()
                    .map(|(flat, &c)| {
                        let r = t.xi_norm[flat];
                        c * (1.0 + r * r).powf(s / 2.0)
                    })
                    .collect();
                Ok(SpectralField::from_coeffs(grid, out))
            }
            FractionalKind::AbsDInverseMeanFree(p) => {
                let out: Vec<Complex64> = coeffs
                    .iter()
                    .enumerate()
                    .map(|(flat, &c)| {
                        let r = t.xi_norm[flat];
                        if r == 0.0 {
                            Complex64::default()
                        } else {
                            c * r.powf(p)
                        }
                    })
                    .collect();
                Ok(SpectralField::from_coeffs(grid, out))
            }
            FractionalKind::DjOverAbsD(axis) => {
                if axis >= grid.dim {
                    return Err(CoreError::Other(format!("axis {} out of range", axis)));
                }
                let dim = grid.dim;
                let out: Vec<Complex64> = coeffs
                    .iter()
                    .enumerate()
                    .map(|(flat, &c)| {
                        let mut xi = [0i64; 3];
                        grid.xi(flat, &mut xi[..dim]);
                        let r = t.xi_norm[flat];
                        if r == 0.0 {
                            Complex64::default()
                        } else {
                            c * Complex64::new(0.0, xi[axis] as f64 / r)
                        }
                    })
                    .collect();
                Ok(SpectralField::from_coeffs(grid, out))
            }
        }
    }

    /// Shorthand: `|D| f`.
    pub fn abs_d(&self) -> SpectralField {
        self.fractional(FractionalKind::AbsD(1.0)).expect("positive power")
    }

    /// Shorthand: `|D|^{−1}` with the zero mode dropped.
    pub fn abs_d_inv(&self) -> SpectralField {
        self.fractional(FractionalKind::AbsDInverseMeanFree(-1.0)).expect("mean-free by convention")
    }

    /// Shorthand: `⟨D⟩^s f`.
    pub fn japanese(&self, s: f64) -> SpectralField {
        self.fractional(FractionalKind::Japanese(s)).expect("always defined")
    }

    /// Frequency-localized inverse divergence `𝒯^{(i)}_j f`
    /// (symbol `−iξ^i/|ξ|² · χ̃(|ξ|/2^j)`).
    pub fn riesz_t(&self, axis: usize, j: usize) -> Result<SpectralField> {
        let grid = self.grid().clone();
        if axis >= grid.dim {
            return Err(CoreError::Other(format!("axis {} out of range", axis)));
        }
        let t = tables(&grid);
        let scale = (1u64 << j) as f64;
        let dim = grid.dim;
        let coeffs = self.coeffs();
        let out: Vec<Complex64> = coeffs
            .iter()
            .enumerate()
            .map(|(flat, &c)| {
                let r = t.xi_norm[flat];
                if r == 0.0 {
                    return Complex64::default();
                }
                let w = chi_tilde(r / scale);
                if w == 0.0 {
                    return Complex64::default();
                }
                let mut xi = [0i64; 3];
                grid.xi(flat, &mut xi[..dim]);
                c * Complex64::new(0.0, -(xi[axis] as f64) / (r * r) * w)
            })
            .collect();
        Ok(SpectralField::from_coeffs(grid, out))
    }

    /// The summed operator `𝒯^{(i)} = Σ_{j ≥ 0} 𝒯^{(i)}_j` (symbol
    /// `−iξ^i/|ξ|² · Σ_j χ̃(|ξ|/2^j)`, evaluated through the tabulated
    /// finite sum).
    pub fn riesz_t_sum(&self, axis: usize) -> SpectralField {
        let grid = self.grid().clone();
        assert!(axis < grid.dim);
        let t = tables(&grid);
        let dim = grid.dim;
        let coeffs = self.coeffs();
        let out: Vec<Complex64> = coeffs
            .iter()
            .enumerate()
            .map(|(flat, &c)| {
                let r = t.xi_norm[flat];
                if r == 0.0 {
                    return Complex64::default();
                }
                let mut xi = [0i64; 3];
                grid.xi(flat, &mut xi[..dim]);
                c * Complex64::new(0.0, -(xi[axis] as f64) / (r * r) * t.t_sum[flat])
            })
            .collect();
        SpectralField::from_coeffs(grid, out)
    }
}
