//! The fixed C^∞ cutoff family.
//!
//! One smoothstep generates every profile: `smoothstep(t) = ψ(t)/(ψ(t)+ψ(1−t))`
//! with `ψ(t) = e^{−1/t}` for `t > 0`. It is exactly 0 for `t ≤ 0` and
//! exactly 1 for `t ≥ 1`, so plateau values are bit-exact. Only the
//! plateau/support intervals of the profiles matter for the identities; the
//! transition shape is a fixed implementation choice.

#[inline]
fn psi(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

#[inline]
fn psi_d1(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        psi(t) / (t * t)
    }
}

#[inline]
fn psi_d2(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        psi(t) * (1.0 / (t * t * t * t) - 2.0 / (t * t * t))
    }
}

/// C^∞ monotone step: 0 for `t ≤ 0`, 1 for `t ≥ 1`.
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = psi(t);
    let b = psi(1.0 - t);
    a / (a + b)
}

/// First derivative of [`smoothstep`].
pub fn smoothstep_d1(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let a = psi(t);
    let b = psi(1.0 - t);
    let da = psi_d1(t);
    let db = -psi_d1(1.0 - t);
    (da * b - a * db) / ((a + b) * (a + b))
}

/// Second derivative of [`smoothstep`].
pub fn smoothstep_d2(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let a = psi(t);
    let b = psi(1.0 - t);
    let s = a + b;
    let da = psi_d1(t);
    let db = -psi_d1(1.0 - t);
    let dda = psi_d2(t);
    let ddb = psi_d2(1.0 - t);
    let ds = da + db;
    let dds = dda + ddb;
    // d²/dt² (a/s)
    (dda * s - a * dds) / (s * s) - 2.0 * ds * (da * s - a * ds) / (s * s * s)
}

/// Radial cutoff `φ` of the Littlewood–Paley family: `φ(z) = 1` for
/// `z ≤ 3/2`, `φ(z) = 0` for `z ≥ 7/4`.
pub fn phi_lp(z: f64) -> f64 {
    smoothstep((1.75 - z) / 0.25)
}

/// `φ̃`: supported in `[0,2]`, ≡ 1 on `[0,1]`.
pub fn phi_tilde(z: f64) -> f64 {
    smoothstep(2.0 - z)
}

/// `χ̃(s) = φ̃(s/4) − φ̃(4s)`: supported in `[1/4, 8]`, ≡ 1 on `[1/2, 4]`.
pub fn chi_tilde(s: f64) -> f64 {
    phi_tilde(s / 4.0) - phi_tilde(4.0 * s)
}

/// Time bump `Ψ`: supported in `[−1,1]`, ≡ 1 on `[−1/2, 1/2]` (the needed
/// plateau `[0, 1/2]` plus its mirror so the bump is even).
pub fn psi_time(t: f64) -> f64 {
    let a = t.abs();
    if a >= 1.0 {
        return 0.0;
    }
    if a <= 0.5 {
        return 1.0;
    }
    smoothstep(2.0 * (1.0 - a))
}

/// First derivative of [`psi_time`].
pub fn psi_time_d1(t: f64) -> f64 {
    let a = t.abs();
    if a >= 1.0 || a <= 0.5 {
        return 0.0;
    }
    let sign = if t >= 0.0 { 1.0 } else { -1.0 };
    -2.0 * sign * smoothstep_d1(2.0 * (1.0 - a))
}

/// Second derivative of [`psi_time`].
pub fn psi_time_d2(t: f64) -> f64 {
    let a = t.abs();
    if a >= 1.0 || a <= 0.5 {
        return 0.0;
    }
    4.0 * smoothstep_d2(2.0 * (1.0 - a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothstep_plateaus_exact() {
        assert_eq!(smoothstep(-0.3), 0.0);
        assert_eq!(smoothstep(0.0), 0.0);
        assert_eq!(smoothstep(1.0), 1.0);
        assert_eq!(smoothstep(5.0), 1.0);
        assert!(smoothstep(0.5) > 0.0 && smoothstep(0.5) < 1.0);
    }

    #[test]
    fn smoothstep_derivative_matches_fd() {
        for &t in &[0.2, 0.35, 0.5, 0.71, 0.9] {
            let h = 1e-5;
            let fd1 = (smoothstep(t + h) - smoothstep(t - h)) / (2.0 * h);
            assert!((fd1 - smoothstep_d1(t)).abs() < 1e-8, "d1 at {t}");
            let fd2 = (smoothstep(t + h) - 2.0 * smoothstep(t) + smoothstep(t - h)) / (h * h);
            assert!((fd2 - smoothstep_d2(t)).abs() < 1e-5, "d2 at {t}");
        }
    }

    #[test]
    fn phi_plateau_and_support() {
        assert_eq!(phi_lp(0.0), 1.0);
        assert_eq!(phi_lp(1.5), 1.0);
        assert_eq!(phi_lp(1.75), 0.0);
        assert_eq!(phi_lp(3.0), 0.0);
    }

    #[test]
    fn chi_tilde_plateau_and_support() {
        assert_eq!(chi_tilde(0.2), 0.0);
        assert_eq!(chi_tilde(0.5), 1.0);
        assert_eq!(chi_tilde(4.0), 1.0);
        assert_eq!(chi_tilde(8.0), 0.0);
        assert_eq!(chi_tilde(10.0), 0.0);
    }

    #[test]
    fn psi_time_shape() {
        assert_eq!(psi_time(0.0), 1.0);
        assert_eq!(psi_time(0.5), 1.0);
        assert_eq!(psi_time(1.0), 0.0);
        assert_eq!(psi_time(-1.2), 0.0);
        assert_eq!(psi_time_d1(0.25), 0.0);
        assert_eq!(psi_time_d2(0.0), 0.0);
    }
}
