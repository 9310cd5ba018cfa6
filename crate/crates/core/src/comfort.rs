//! Fanger PMV/PPD thermal comfort and the humidity-dependent comfort band.

use crate::{Error, Result};

/// Half-width of the recommended PMV band.
pub const PMV_LIMIT: f64 = 0.5;
const MIN_AIR_TEMP: f64 = 10.0;
const MAX_AIR_TEMP: f64 = 40.0;
const TCL_TOLERANCE: f64 = 1e-4;
const MAX_ITERATIONS: usize = 150;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComfortConditions {
    /// °C
    pub air_temp: f64,
    /// °C
    pub mean_radiant_temp: f64,
    /// %
    pub relative_humidity: f64,
    /// m/s
    pub air_velocity: f64,
    /// met
    pub metabolic_rate: f64,
    /// clo
    pub clothing: f64,
}

/// Occupant and air-movement assumptions; temperatures and humidity come
/// from the zone.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComfortAssumptions {
    pub air_velocity: f64,
    pub metabolic_rate: f64,
    pub clothing: f64,
}

impl Default for ComfortAssumptions {
    fn default() -> Self {
        Self { air_velocity: 0.1, metabolic_rate: 1.2, clothing: 0.5 }
    }
}

impl ComfortAssumptions {
    /// Conditions with mean radiant temperature equal to air temperature.
    pub fn at(&self, air_temp: f64, relative_humidity: f64) -> ComfortConditions {
        ComfortConditions {
            air_temp,
            mean_radiant_temp: air_temp,
            relative_humidity,
            air_velocity: self.air_velocity,
            metabolic_rate: self.metabolic_rate,
            clothing: self.clothing,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComfortAssessment {
    pub pmv: f64,
    pub ppd: f64,
    pub within_band: bool,
}

impl ComfortConditions {
    fn validate(&self) -> Result<()> {
        for (what, v) in [
            ("air temperature", self.air_temp),
            ("mean radiant temperature", self.mean_radiant_temp),
            ("relative humidity", self.relative_humidity),
            ("air velocity", self.air_velocity),
            ("metabolic rate", self.metabolic_rate),
            ("clothing", self.clothing),
        ] {
            if !v.is_finite() {
                return Err(Error::NonFinite(what));
            }
        }
        if !(MIN_AIR_TEMP..=MAX_AIR_TEMP).contains(&self.air_temp) {
            return Err(Error::OutOfRange { what: "air temperature", value: self.air_temp });
        }
        if !(0.0..=100.0).contains(&self.relative_humidity) {
            return Err(Error::OutOfRange {
                what: "relative humidity",
                value: self.relative_humidity,
            });
        }
        if self.air_velocity < 0.0 {
            return Err(Error::OutOfRange { what: "air velocity", value: self.air_velocity });
        }
        if self.metabolic_rate <= 0.0 {
            return Err(Error::OutOfRange { what: "metabolic rate", value: self.metabolic_rate });
        }
        if self.clothing < 0.0 {
            return Err(Error::OutOfRange { what: "clothing", value: self.clothing });
        }
        Ok(())
    }
}

/// Water vapour partial pressure, Pa.
fn vapour_pressure(air_temp: f64, relative_humidity: f64) -> f64 {
    relative_humidity * 10.0 * libm::exp(16.6536 - 4030.183 / (air_temp + 235.0))
}

/// Predicted mean vote from the Fanger heat balance (no external work).
pub fn pmv(c: &ComfortConditions) -> Result<f64> {
    c.validate()?;
    let pa = vapour_pressure(c.air_temp, c.relative_humidity);
    let icl = 0.155 * c.clothing; // m²K/W
    let m = c.metabolic_rate * 58.15; // W/m²
    let mw = m; // no external work
    let fcl = if icl <= 0.078 { 1.0 + 1.29 * icl } else { 1.05 + 0.645 * icl };
    let hcf = 12.1 * libm::sqrt(c.air_velocity);
    let taa = c.air_temp + 273.0;
    let tra = c.mean_radiant_temp + 273.0;

    // fixed-point iteration on clothing surface temperature, in units of K/100
    let tcla = taa + (35.5 - c.air_temp) / (3.5 * icl + 0.1);
    let p1 = icl * fcl;
    let p2 = p1 * 3.96;
    let p3 = p1 * 100.0;
    let p4 = p1 * taa;
    let p5 = 308.7 - 0.028 * mw + p2 * libm::pow(tra / 100.0, 4.0);
    let mut xn = tcla / 100.0;
    let mut xf = xn;
    let mut hc = hcf;
    let mut converged = false;
    for _ in 0..MAX_ITERATIONS {
        xf = (xf + xn) / 2.0;
        let hcn = 2.38 * libm::pow(libm::fabs(100.0 * xf - taa), 0.25);
        hc = hcf.max(hcn);
        xn = (p5 + p4 * hc - p2 * libm::pow(xf, 4.0)) / (100.0 + p3 * hc);
        if libm::fabs(xn - xf) * 100.0 < TCL_TOLERANCE {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence("clothing surface temperature"));
    }
    let tcl = 100.0 * xn - 273.0;

    let skin_diffusion = 3.05e-3 * (5733.0 - 6.99 * mw - pa);
    let sweating = if mw > 58.15 { 0.42 * (mw - 58.15) } else { 0.0 };
    let latent_respiration = 1.7e-5 * m * (5867.0 - pa);
    let dry_respiration = 0.0014 * m * (34.0 - c.air_temp);
    let radiation = 3.96 * fcl * (libm::pow(xn, 4.0) - libm::pow(tra / 100.0, 4.0));
    let convection = fcl * hc * (tcl - c.air_temp);
    let ts = 0.303 * libm::exp(-0.036 * m) + 0.028;
    Ok(ts
        * (mw
            - skin_diffusion
            - sweating
            - latent_respiration
            - dry_respiration
            - radiation
            - convection))
}

/// Predicted percentage dissatisfied, %.
pub fn ppd(pmv: f64) -> f64 {
    let p2 = pmv * pmv;
    100.0 - 95.0 * libm::exp(-(0.03353 * p2 * p2 + 0.2179 * p2))
}

pub fn assess(c: &ComfortConditions) -> Result<ComfortAssessment> {
    let v = pmv(c)?;
    Ok(ComfortAssessment { pmv: v, ppd: ppd(v), within_band: libm::fabs(v) <= PMV_LIMIT })
}

/// Air temperature (°C) where PMV equals `target`, by bisection on `[10, 40]`.
///
/// Returns `None` when `target` is not bracketed on that range.
pub fn temperature_for_pmv(
    target: f64,
    relative_humidity: f64,
    assumptions: &ComfortAssumptions,
) -> Result<Option<f64>> {
    let f = |t: f64| pmv(&assumptions.at(t, relative_humidity)).map(|v| v - target);
    let (mut lo, mut hi) = (MIN_AIR_TEMP, MAX_AIR_TEMP);
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if flo > 0.0 || fhi < 0.0 {
        return Ok(None);
    }
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Closed air-temperature interval with `|PMV| <= 0.5` at `relative_humidity`.
///
/// Endpoints that fall outside `[10, 40]` °C are clamped to that range.
pub fn comfort_band(relative_humidity: f64, assumptions: &ComfortAssumptions) -> Result<(f64, f64)> {
    if !(0.0..=100.0).contains(&relative_humidity) {
        return Err(Error::OutOfRange { what: "relative humidity", value: relative_humidity });
    }
    let at = |t: f64| pmv(&assumptions.at(t, relative_humidity));
    if at(MIN_AIR_TEMP)? > PMV_LIMIT || at(MAX_AIR_TEMP)? < -PMV_LIMIT {
        return Err(Error::EmptyComfortBand);
    }
    let lower = temperature_for_pmv(-PMV_LIMIT, relative_humidity, assumptions)?.unwrap_or(MIN_AIR_TEMP);
    let upper = temperature_for_pmv(PMV_LIMIT, relative_humidity, assumptions)?.unwrap_or(MAX_AIR_TEMP);
    Ok((lower, upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::vec::Vec;

    fn cond(ta: f64, tr: f64, v: f64, rh: f64, met: f64, clo: f64) -> ComfortConditions {
        ComfortConditions {
            air_temp: ta,
            mean_radiant_temp: tr,
            relative_humidity: rh,
            air_velocity: v,
            metabolic_rate: met,
            clothing: clo,
        }
    }

    // Values from an independent transcription of the standard's reference code.
    #[test]
    fn matches_reference_points() {
        let cases = [
            (cond(24.0, 24.0, 0.1, 50.0, 1.2, 0.5), -0.213_177),
            (cond(22.0, 22.0, 0.1, 60.0, 1.2, 0.5), -0.752_287),
            (cond(27.0, 27.0, 0.1, 60.0, 1.2, 0.5), 0.765_369),
            (cond(23.5, 25.5, 0.1, 60.0, 1.2, 0.5), -0.013_119),
            (cond(19.0, 18.0, 0.1, 40.0, 1.2, 1.0), -0.697_630),
            (cond(30.0, 30.0, 0.2, 30.0, 1.0, 0.3), 0.801_220),
        ];
        for (c, expected) in cases {
            let v = pmv(&c).unwrap();
            assert!((v - expected).abs() < 2e-3, "{c:?}: {v} vs {expected}");
        }
    }

    #[test]
    fn ppd_anchors() {
        assert_eq!(ppd(0.0), 5.0);
        assert!((ppd(0.5) - 10.225).abs() < 0.001);
        assert_eq!(ppd(0.5), ppd(-0.5));
        assert!(ppd(3.0) > 99.0);
    }

    #[test]
    fn pmv_increases_with_air_temp() {
        let a = ComfortAssumptions::default();
        let sweep: Vec<f64> = (0..=100)
            .map(|i| pmv(&a.at(20.0 + 0.1 * i as f64, 50.0)).unwrap())
            .collect();
        assert!(sweep.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn rejects_out_of_range() {
        let a = ComfortAssumptions::default();
        assert!(pmv(&a.at(9.0, 50.0)).is_err());
        assert!(pmv(&a.at(24.0, 101.0)).is_err());
        assert!(pmv(&cond(24.0, 24.0, -0.1, 50.0, 1.2, 0.5)).is_err());
        assert!(pmv(&cond(24.0, 24.0, 0.1, 50.0, 0.0, 0.5)).is_err());
        assert!(pmv(&cond(24.0, 24.0, 0.1, 50.0, 1.2, -0.5)).is_err());
        assert!(pmv(&cond(f64::NAN, 24.0, 0.1, 50.0, 1.2, 0.5)).is_err());
    }

    #[test]
    fn neutral_point() {
        let a = ComfortAssumptions::default();
        let t0 = temperature_for_pmv(0.0, 50.0, &a).unwrap().unwrap();
        assert!(pmv(&a.at(t0, 50.0)).unwrap().abs() < 1e-5);
        let (lo, hi) = comfort_band(50.0, &a).unwrap();
        assert!(lo < t0 && t0 < hi);
    }

    #[test]
    fn band_endpoints_solve_limits() {
        let a = ComfortAssumptions::default();
        for rh in [0.0, 30.0, 50.0, 70.0, 100.0] {
            let (lo, hi) = comfort_band(rh, &a).unwrap();
            assert!((pmv(&a.at(lo, rh)).unwrap() + 0.5).abs() <= 0.005);
            assert!((pmv(&a.at(hi, rh)).unwrap() - 0.5).abs() <= 0.005);
        }
    }

    #[test]
    fn band_moves_down_with_humidity() {
        let a = ComfortAssumptions::default();
        let (lo30, hi30) = comfort_band(30.0, &a).unwrap();
        let (lo70, hi70) = comfort_band(70.0, &a).unwrap();
        assert!(lo70 < lo30 && hi70 < hi30);
    }

    #[test]
    fn pathological_band_is_empty() {
        // heavy work in winter clothing is too warm everywhere on the range
        let hot = ComfortAssumptions { air_velocity: 0.0, metabolic_rate: 4.0, clothing: 2.0 };
        assert_eq!(comfort_band(50.0, &hot), Err(Error::EmptyComfortBand));
    }

    #[test]
    fn assessment_band_flag() {
        let a = ComfortAssumptions::default();
        let r = assess(&a.at(24.0, 50.0)).unwrap();
        assert!(r.within_band);
        assert_eq!(r.ppd, ppd(r.pmv));
        assert!(!assess(&a.at(28.0, 50.0)).unwrap().within_band);
    }
}
