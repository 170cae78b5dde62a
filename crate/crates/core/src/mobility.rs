//! Walking speed as a function of slope.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec2;

/// Slope-to-speed law `V(S) = a·exp(-(100S + shift)² / denom)` plus the
/// steep-terrain penalty `P(S) = ½ - ½·tanh((S - center) / scale)`.
///
/// Slopes are rise over run. Speeds carry whatever unit the grid spacing
/// implies per second; nothing is converted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MobilityModel {
    pub v_amp: f64,
    pub v_shift: f64,
    pub v_denom: f64,
    pub pen_center: f64,
    pub pen_scale: f64,
}

impl Default for MobilityModel {
    fn default() -> Self {
        MobilityModel {
            v_amp: 1.11,
            v_shift: 2.0,
            v_denom: 2345.0,
            pen_center: 1.0,
            pen_scale: 1.0,
        }
    }
}

impl MobilityModel {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.v_amp) || !ok(self.v_denom) || !ok(self.pen_scale) {
            return Err(Error::invalid(
                "v_amp, v_denom and pen_scale must be positive and finite",
            ));
        }
        if !self.v_shift.is_finite() || !self.pen_center.is_finite() {
            return Err(Error::invalid("v_shift and pen_center must be finite"));
        }
        Ok(())
    }

    #[inline]
    pub fn velocity(&self, slope: f64) -> f64 {
        let g = 100.0 * slope + self.v_shift;
        self.v_amp * (-g * g / self.v_denom).exp()
    }

    /// The empirical law the default model was fitted against; only used for
    /// comparison plots.
    pub fn velocity_ic(&self, slope: f64) -> f64 {
        let g = 100.0 * slope + 2.0;
        0.11 + (-g * g / 1800.0).exp()
    }

    /// Slope at which [`velocity`](Self::velocity) peaks.
    pub fn peak_slope(&self) -> f64 {
        -self.v_shift / 100.0
    }

    pub fn penalization(&self, slope: f64) -> Result<f64> {
        if !(slope >= 0.0) {
            return Err(Error::invalid(format!(
                "penalization expects a non-negative slope magnitude, got {slope}"
            )));
        }
        Ok(self.penalization_unchecked(slope))
    }

    #[inline]
    pub(crate) fn penalization_unchecked(&self, slope: f64) -> f64 {
        0.5 - 0.5 * ((slope - self.pen_center) / self.pen_scale).tanh()
    }

    /// Speed when heading along `theta` on terrain with gradient `grad_e`.
    #[inline]
    pub fn directional_speed(&self, grad_e: Vec2, theta: f64) -> f64 {
        self.velocity(Vec2::from_angle(theta).dot(grad_e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn m() -> MobilityModel {
        MobilityModel::default()
    }

    #[test]
    fn velocity_pins() {
        assert_eq!(m().velocity(-0.02), 1.11);
        assert!((m().velocity(0.0) - 1.108_108).abs() < 1e-5);
        assert!((m().velocity(1.0) - 0.013_137_116).abs() < 1e-8);
        assert!((m().velocity(-1.0) - 0.018_478_223).abs() < 1e-8);
    }

    #[test]
    fn legacy_velocity_pins() {
        assert!((m().velocity_ic(-0.02) - 1.11).abs() < 1e-15);
        assert!((m().velocity_ic(0.0) - 1.107_780).abs() < 1e-5);
        assert!((m().velocity_ic(1e6) - 0.11).abs() < 1e-15);
        assert!((m().velocity_ic(-1e6) - 0.11).abs() < 1e-15);
    }

    #[test]
    fn penalization_pins() {
        assert_eq!(m().penalization(1.0).unwrap(), 0.5);
        assert!((m().penalization(0.0).unwrap() - 0.880_797).abs() < 1e-6);
        assert!((m().penalization(3.0).unwrap() - 0.017_986).abs() < 1e-6);
        assert!(m().penalization(-0.1).is_err());
        assert!(m().penalization(f64::NAN).is_err());
    }

    #[test]
    fn directional_speed_cases() {
        let g = Vec2::new(1.0, 0.0);
        assert!((m().directional_speed(g, PI / 2.0) - 1.108_108).abs() < 1e-5);
        assert!((m().directional_speed(g, 0.0) - 0.013_137_116).abs() < 1e-8);
        assert!((m().directional_speed(g, PI) - 0.018_478_223).abs() < 1e-8);
    }

    #[test]
    fn laws_agree_for_gentle_slopes() {
        let model = m();
        let mut worst: f64 = 0.0;
        for k in 0..=5000 {
            let s = -0.25 + 0.5 * k as f64 / 5000.0;
            worst = worst.max((model.velocity(s) - model.velocity_ic(s)).abs());
        }
        assert!(worst < 0.05, "max gap {worst}");
    }

    proptest! {
        #[test]
        fn velocity_has_unique_peak(s in -5.0f64..5.0) {
            prop_assume!((s + 0.02).abs() > 1e-9);
            prop_assert!(m().velocity(s) < m().velocity(-0.02));
            prop_assert!(m().velocity(s) > 0.0);
        }

        #[test]
        fn directional_speed_is_periodic(gx in -3.0f64..3.0, gy in -3.0f64..3.0, th in 0.0f64..(2.0 * PI)) {
            let g = Vec2::new(gx, gy);
            let a = m().directional_speed(g, th);
            let b = m().directional_speed(g, th + 2.0 * PI);
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300) + 1e-15);
        }

        #[test]
        fn penalization_decreasing_and_antisymmetric(s in 0.0f64..2.0, ds in 1e-6f64..1.0) {
            let p = |x: f64| m().penalization_unchecked(x);
            prop_assert!(p(s + ds) < p(s));
            prop_assert!(p(s) > 0.0 && p(s) < 1.0);
            prop_assert!((p(s) + p(2.0 - s) - 1.0).abs() < 1e-12);
        }
    }
}
