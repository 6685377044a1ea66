//! The small parameters attached to the Sobolev exponent `s`.

use crate::error::{CoreError, Result};

/// `s > 5/2 + 1/6` with the derived parameters
/// `0 < δ₀ < min{(s − 5/2 − 1/6)/10, 1/100}`,
/// `s₀ = s − 5/2 − 1/6 − δ₀`, `s₁ = s₀ − δ₀`; then `8δ₀ < s₁ < s₀` holds
/// automatically.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct SmallConstants {
    pub s: f64,
    pub delta0: f64,
    pub s0: f64,
    pub s1: f64,
}

const THRESHOLD: f64 = 2.5 + 1.0 / 6.0;

impl SmallConstants {
    /// Default choice: `δ₀` at 90% of its allowed ceiling.
    pub fn new(s: f64) -> Result<Self> {
        let ceiling = ((s - THRESHOLD) / 10.0).min(0.01);
        if ceiling <= 0.0 {
            return Err(CoreError::ExponentRange(format!(
                "s = {s} must exceed 5/2 + 1/6 ≈ {THRESHOLD:.4}"
            )));
        }
        Self::with_delta0(s, 0.9 * ceiling)
    }

    pub fn with_delta0(s: f64, delta0: f64) -> Result<Self> {
        let ceiling = ((s - THRESHOLD) / 10.0).min(0.01);
        if !(delta0 > 0.0 && delta0 < ceiling) {
            return Err(CoreError::ExponentRange(format!(
                "δ₀ = {delta0} outside (0, {ceiling:.4}) for s = {s}"
            )));
        }
        let s0 = s - THRESHOLD - delta0;
        let s1 = s0 - delta0;
        debug_assert!(8.0 * delta0 < s1 && s1 < s0);
        Ok(SmallConstants { s, delta0, s0, s1 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_inequalities_hold() {
        for &s in &[2.7, 3.0, 3.5, 4.0] {
            let c = SmallConstants::new(s).unwrap();
            assert!(c.delta0 > 0.0);
            assert!(c.delta0 < ((s - THRESHOLD) / 10.0).min(0.01) + 1e-15);
            assert!((c.s0 - (s - THRESHOLD - c.delta0)).abs() < 1e-15);
            assert!((c.s1 - (c.s0 - c.delta0)).abs() < 1e-15);
            assert!(8.0 * c.delta0 < c.s1 && c.s1 < c.s0);
        }
    }

    #[test]
    fn rejects_subcritical_exponent() {
        assert!(SmallConstants::new(2.6).is_err());
        assert!(SmallConstants::with_delta0(3.0, 0.5).is_err());
    }
}
