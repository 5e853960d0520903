//! Piecewise-constant battery drain model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::settings::SettingsProfile;

/// Current draw per setting in mA. Switches count their coefficient when ON;
/// levels scale it by `percent / 100`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct DrainModel<F> {
    pub base_ma: F,
    pub bluetooth_ma: F,
    pub gps_ma: F,
    pub wifi_ma: F,
    pub brightness_ma: F,
    pub ring_volume_ma: F,
    pub vibration_ma: F,
    pub capacity_mah: F,
}

impl<F: Scalar> Default for DrainModel<F> {
    fn default() -> Self {
        Self {
            base_ma: F::lit(8.0),
            bluetooth_ma: F::lit(4.0),
            gps_ma: F::lit(25.0),
            wifi_ma: F::lit(12.0),
            brightness_ma: F::lit(30.0),
            ring_volume_ma: F::zero(),
            vibration_ma: F::zero(),
            capacity_mah: F::lit(1500.0),
        }
    }
}

impl<F: Scalar> DrainModel<F> {
    // negated comparisons so that NaN fails every check
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.capacity_mah > F::zero()) {
            return Err(Error::domain(format!(
                "capacity {} mAh must be positive",
                self.capacity_mah
            )));
        }
        if !(self.base_ma > F::zero()) {
            return Err(Error::domain(format!(
                "base drain {} mA must be positive",
                self.base_ma
            )));
        }
        for (name, v) in [
            ("bluetooth", self.bluetooth_ma),
            ("gps", self.gps_ma),
            ("wifi", self.wifi_ma),
            ("brightness", self.brightness_ma),
            ("ring_volume", self.ring_volume_ma),
            ("vibration", self.vibration_ma),
        ] {
            if !(v >= F::zero()) || !v.is_finite() {
                return Err(Error::domain(format!("{name} coefficient {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    /// Instantaneous draw in mA under `profile`.
    pub fn draw_ma(&self, profile: &SettingsProfile) -> F {
        let on = |s: crate::settings::Switch, c: F| if s.is_on() { c } else { F::zero() };
        let scaled = |l: crate::settings::Level, c: F| c * F::lit(f64::from(l.percent())) / F::lit(100.0);
        self.base_ma
            + on(profile.bluetooth, self.bluetooth_ma)
            + on(profile.gps, self.gps_ma)
            + on(profile.wifi, self.wifi_ma)
            + scaled(profile.brightness, self.brightness_ma)
            + scaled(profile.ring_volume, self.ring_volume_ma)
            + on(profile.vibration, self.vibration_ma)
    }
}

/// Hours until the battery is exhausted along `timeline`, or the timeline's
/// total length if it never is. Segments with non-positive duration are
/// skipped.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn simulate_battery_hours<F: Scalar>(timeline: &[(SettingsProfile, F)], model: &DrainModel<F>) -> Result<F> {
    model.validate()?;
    let mut elapsed = F::zero();
    let mut used = F::zero();
    for (profile, hours) in timeline {
        if !(*hours > F::zero()) {
            continue;
        }
        let draw = model.draw_ma(profile);
        let segment = draw * *hours;
        if used + segment >= model.capacity_mah {
            return Ok(elapsed + (model.capacity_mah - used) / draw);
        }
        used = used + segment;
        elapsed = elapsed + *hours;
    }
    Ok(elapsed)
}
