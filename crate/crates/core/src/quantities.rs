//! Physical quantities shared by the link, noise and key-rate models.
//!
//! Each newtype carries its unit in the name so that a loss in dB can never be
//! handed to something expecting a linear transmittance or a power in watts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Planck constant times the speed of light, in J·m.
pub const HC_JOULE_METRE: f64 = 6.626_070_15e-34 * 299_792_458.0;

/// Attenuation in dB. Passive elements have non-negative values.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DecibelLoss(pub f64);

impl DecibelLoss {
    pub const ZERO: DecibelLoss = DecibelLoss(0.0);

    pub fn db(self) -> f64 {
        self.0
    }

    /// Linear transmittance `10^(-dB/10)`.
    pub fn transmittance(self) -> Result<f64> {
        db_to_linear(self)
    }
}

impl std::ops::Add for DecibelLoss {
    type Output = DecibelLoss;

    fn add(self, rhs: DecibelLoss) -> DecibelLoss {
        DecibelLoss(self.0 + rhs.0)
    }
}

impl std::ops::Sub for DecibelLoss {
    type Output = DecibelLoss;

    fn sub(self, rhs: DecibelLoss) -> DecibelLoss {
        DecibelLoss(self.0 - rhs.0)
    }
}

impl std::iter::Sum for DecibelLoss {
    fn sum<I: Iterator<Item = DecibelLoss>>(iter: I) -> DecibelLoss {
        DecibelLoss(iter.map(|l| l.0).sum())
    }
}

/// Optical power in watts.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OpticalPower(f64);

impl OpticalPower {
    pub const ZERO: OpticalPower = OpticalPower(0.0);

    pub fn from_watts(watts: f64) -> Result<Self> {
        if !watts.is_finite() || watts < 0.0 {
            return Err(Error::InvalidQuantity {
                what: "optical power (W)",
                value: watts,
            });
        }
        Ok(OpticalPower(watts))
    }

    pub fn from_dbm(dbm: f64) -> Result<Self> {
        dbm_to_watts(dbm)
    }

    pub fn watts(self) -> f64 {
        self.0
    }

    pub fn dbm(self) -> f64 {
        watts_to_dbm(self)
    }

    /// Power after passing through `loss`.
    pub fn attenuate(self, loss: DecibelLoss) -> Result<Self> {
        Ok(OpticalPower(self.0 * db_to_linear(loss)?))
    }
}

/// Wavelength in nanometres.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Wavelength(f64);

impl Wavelength {
    pub const UPSTREAM_1310: Wavelength = Wavelength(1310.0);
    pub const DOWNSTREAM_1490: Wavelength = Wavelength(1490.0);
    pub const QUANTUM_1550: Wavelength = Wavelength(1550.0);
    pub const CLOCK_1570: Wavelength = Wavelength(1570.0);

    pub fn from_nm(nm: f64) -> Result<Self> {
        if !nm.is_finite() || nm <= 0.0 {
            return Err(Error::InvalidQuantity {
                what: "wavelength (nm)",
                value: nm,
            });
        }
        Ok(Wavelength(nm))
    }

    pub fn nm(self) -> f64 {
        self.0
    }

    pub fn metres(self) -> f64 {
        self.0 * 1e-9
    }
}

/// Detector events per second.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CountRate(f64);

impl CountRate {
    pub const ZERO: CountRate = CountRate(0.0);

    pub fn from_hz(hz: f64) -> Result<Self> {
        if !hz.is_finite() || hz < 0.0 {
            return Err(Error::InvalidQuantity {
                what: "count rate (Hz)",
                value: hz,
            });
        }
        Ok(CountRate(hz))
    }

    pub fn hz(self) -> f64 {
        self.0
    }

    pub(crate) fn scale(self, factor: f64) -> Self {
        CountRate(self.0 * factor)
    }
}

impl std::ops::Add for CountRate {
    type Output = CountRate;

    fn add(self, rhs: CountRate) -> CountRate {
        CountRate(self.0 + rhs.0)
    }
}

pub fn db_to_linear(loss: DecibelLoss) -> Result<f64> {
    if !loss.0.is_finite() {
        return Err(Error::InvalidQuantity {
            what: "loss (dB)",
            value: loss.0,
        });
    }
    Ok(10f64.powf(-loss.0 / 10.0))
}

pub fn dbm_to_watts(dbm: f64) -> Result<OpticalPower> {
    if !dbm.is_finite() {
        return Err(Error::InvalidQuantity {
            what: "power (dBm)",
            value: dbm,
        });
    }
    Ok(OpticalPower(1e-3 * 10f64.powf(dbm / 10.0)))
}

/// Zero power maps to negative infinity.
pub fn watts_to_dbm(p: OpticalPower) -> f64 {
    10.0 * (p.0 / 1e-3).log10()
}

/// Photon arrival rate `P·λ/(h·c)` of monochromatic light.
pub fn photon_rate(p: OpticalPower, lambda: Wavelength) -> Result<CountRate> {
    if !(lambda.0 > 0.0) {
        return Err(Error::InvalidQuantity {
            what: "wavelength (nm)",
            value: lambda.0,
        });
    }
    Ok(CountRate(p.0 * lambda.metres() / HC_JOULE_METRE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn db_to_linear_examples() {
        assert_eq!(db_to_linear(DecibelLoss(0.0)).unwrap(), 1.0);
        assert!(rel(db_to_linear(DecibelLoss(10.0)).unwrap(), 0.1) < 1e-15);
        assert!(rel(db_to_linear(DecibelLoss(6.0206)).unwrap(), 0.25) < 1e-5);
    }

    #[test]
    fn non_finite_inputs_are_rejected() {
        assert!(db_to_linear(DecibelLoss(f64::NAN)).is_err());
        assert!(db_to_linear(DecibelLoss(f64::INFINITY)).is_err());
        assert!(dbm_to_watts(f64::NEG_INFINITY).is_err());
        assert!(Wavelength::from_nm(0.0).is_err());
        assert!(OpticalPower::from_watts(-1.0).is_err());
    }

    #[test]
    fn dbm_examples() {
        assert!(rel(dbm_to_watts(0.0).unwrap().watts(), 1e-3) < 1e-15);
        assert!(rel(dbm_to_watts(30.0).unwrap().watts(), 1.0) < 1e-15);
        assert!(rel(dbm_to_watts(3.0).unwrap().watts(), 1.9953e-3) < 1e-4);
    }

    #[test]
    fn photon_rate_examples() {
        let l = Wavelength::QUANTUM_1550;
        assert_eq!(photon_rate(OpticalPower::ZERO, l).unwrap().hz(), 0.0);
        let one = photon_rate(OpticalPower::from_watts(1.28e-19).unwrap(), l).unwrap();
        assert!(rel(one.hz(), 0.9987) < 1e-4, "{}", one.hz());
        let two = photon_rate(OpticalPower::from_watts(2.56e-19).unwrap(), l).unwrap();
        assert!(rel(two.hz(), 2.0 * one.hz()) < 1e-15);
    }

    proptest! {
        #[test]
        fn db_addition_is_multiplication(a in 0.0..200.0f64, b in 0.0..200.0f64) {
            let joint = db_to_linear(DecibelLoss(a + b)).unwrap();
            let split = db_to_linear(DecibelLoss(a)).unwrap() * db_to_linear(DecibelLoss(b)).unwrap();
            prop_assert!(rel(joint, split) < 1e-12);
        }

        #[test]
        fn dbm_round_trip(dbm in -120.0..30.0f64) {
            let back = watts_to_dbm(dbm_to_watts(dbm).unwrap());
            let tol = 1e-12 * dbm.abs().max(1.0);
            prop_assert!((back - dbm).abs() <= tol, "{} vs {}", back, dbm);
            let w = dbm_to_watts(dbm).unwrap().watts();
            prop_assert!(rel(dbm_to_watts(back).unwrap().watts(), w) < 1e-12);
        }

        #[test]
        fn photon_rate_linear_in_wavelength(p in 1e-15..1e-3f64, nm in 100.0..3000.0f64) {
            let p = OpticalPower::from_watts(p).unwrap();
            let a = photon_rate(p, Wavelength::from_nm(nm).unwrap()).unwrap().hz();
            let b = photon_rate(p, Wavelength::from_nm(2.0 * nm).unwrap()).unwrap().hz();
            prop_assert!(rel(b, 2.0 * a) < 1e-12);
        }
    }
}
