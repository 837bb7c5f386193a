//! Independent oracles shared by the integration tests.
//!
//! Nothing here calls the library's loss, Raman or key-rate arithmetic. Losses
//! are summed in dB from raw scalars, Raman noise is integrated numerically
//! along the link, and decoy-state gains come from summing the Poisson mixture.

#![allow(dead_code)]

use gpon_qkd::noise::{ClassicalSource, DetectorSpec};
use gpon_qkd::quantities::OpticalPower;
use gpon_qkd::topology::{Architecture, AttenuationProfile, Topology};
use rand::rngs::StdRng;
use rand::Rng;

pub const H_PLANCK: f64 = 6.626_070_15e-34;
pub const C_LIGHT: f64 = 299_792_458.0;
pub const LAMBDA_Q_M: f64 = 1550e-9;

pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        ((a - b) / b).abs()
    }
}

fn lin(db: f64) -> f64 {
    10f64.powf(-db / 10.0)
}

/// Composite Simpson rule with `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n.is_multiple_of(2));
    if b <= a {
        return 0.0;
    }
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

const STEPS: usize = 2000;

/// Scatter generated along `[0, L]` by a pump entering at 0, collected at `L`.
pub fn forward_numeric(p: f64, rho: f64, bw: f64, l: f64, alpha: f64) -> f64 {
    simpson(
        |z| p * (-alpha * z).exp() * rho * bw * (-alpha * (l - z)).exp(),
        0.0,
        l,
        STEPS,
    )
}

/// Scatter generated along `[0, L]` by a pump entering at 0, collected back at 0.
pub fn backward_numeric(p: f64, rho: f64, bw: f64, l: f64, alpha: f64) -> f64 {
    simpson(
        |z| p * (-alpha * z).exp() * rho * bw * (-alpha * z).exp(),
        0.0,
        l,
        STEPS,
    )
}

/// Raw link and detector description for the budget oracle.
#[derive(Debug, Clone, Copy)]
pub struct Physics {
    pub bypass: bool,
    pub f1_km: f64,
    pub f2_km: f64,
    pub n: u32,
    pub excess_db: f64,
    pub att_q: f64,
    pub att_down: f64,
    pub att_up: f64,
    pub wdm_q_db: f64,
    pub bypass_extra_db: f64,
    pub p_down_dbm: f64,
    pub p_up_dbm: f64,
    pub rho_down: f64,
    pub rho_up: f64,
    pub duty_down: f64,
    pub duty_up: f64,
    pub bw_ghz: f64,
    pub eff: f64,
    pub dark_hz: f64,
    pub gate_s: f64,
    pub clock_hz: f64,
    pub accept: f64,
    pub mu: f64,
    pub signal_fraction: f64,
}

impl Physics {
    pub fn random(rng: &mut StdRng) -> Self {
        Physics {
            bypass: rng.gen_bool(0.5),
            f1_km: rng.gen_range(0.1..40.0),
            f2_km: rng.gen_range(0.1..20.0),
            n: 1 << rng.gen_range(0..8),
            excess_db: rng.gen_range(0.0..2.0),
            att_q: rng.gen_range(0.18..0.3),
            att_down: rng.gen_range(0.2..0.35),
            att_up: rng.gen_range(0.3..0.5),
            wdm_q_db: rng.gen_range(0.0..3.0),
            bypass_extra_db: rng.gen_range(0.0..2.0),
            p_down_dbm: rng.gen_range(-5.0..8.0),
            p_up_dbm: rng.gen_range(-5.0..8.0),
            rho_down: 10f64.powf(rng.gen_range(-13.0..-8.0)),
            rho_up: 10f64.powf(rng.gen_range(-13.0..-8.0)),
            duty_down: rng.gen_range(0.1..=1.0),
            duty_up: rng.gen_range(0.1..=1.0),
            bw_ghz: rng.gen_range(10.0..200.0),
            eff: rng.gen_range(0.05..0.3),
            dark_hz: rng.gen_range(10.0..1e4),
            gate_s: rng.gen_range(100e-12..1e-9),
            clock_hz: rng.gen_range(1e8..1e9),
            accept: rng.gen_range(0.1..=1.0),
            mu: rng.gen_range(0.1..1.0),
            signal_fraction: rng.gen_range(0.5..=1.0),
        }
    }

    pub fn topology(&self) -> Topology {
        let arch = if self.bypass {
            Architecture::Bypass
        } else {
            Architecture::Through
        };
        let mut t = Topology::new(arch, self.f1_km, self.f2_km, self.n);
        let prof = AttenuationProfile {
            ch1310: self.att_up,
            ch1490: self.att_down,
            ch1550: self.att_q,
            ch1570: self.att_q,
        };
        t.fiber1.attenuation_db_per_km = prof;
        t.fiber2.attenuation_db_per_km = prof;
        t.splitter.excess_loss_db = self.excess_db;
        t.wdm_total_quantum = gpon_qkd::DecibelLoss(self.wdm_q_db);
        t.bypass_wdm_extra = gpon_qkd::DecibelLoss(self.bypass_extra_db);
        t
    }

    pub fn sources(&self) -> [ClassicalSource; 2] {
        let mut d = ClassicalSource::downstream(OpticalPower::from_dbm(self.p_down_dbm).unwrap());
        d.raman_per_km_ghz = self.rho_down;
        d.duty_factor = self.duty_down;
        let mut u = ClassicalSource::upstream(OpticalPower::from_dbm(self.p_up_dbm).unwrap());
        u.raman_per_km_ghz = self.rho_up;
        u.duty_factor = self.duty_up;
        [d, u]
    }

    pub fn detector(&self) -> DetectorSpec {
        DetectorSpec {
            efficiency: self.eff,
            dark_rate_hz: self.dark_hz,
            gate_width_s: self.gate_s,
            clock_hz: self.clock_hz,
            filter_bandwidth_ghz: self.bw_ghz,
            noise_acceptance: self.accept,
            misalignment_error: 0.01,
        }
    }

    fn split_classical_db(&self) -> f64 {
        10.0 * (self.n as f64).log10() + self.excess_db
    }

    fn split_quantum_db(&self) -> f64 {
        if self.bypass {
            self.bypass_extra_db
        } else {
            self.split_classical_db()
        }
    }

    fn counts(&self, watts: f64, duty_src: f64) -> f64 {
        watts * LAMBDA_Q_M / (H_PLANCK * C_LIGHT) * self.eff * self.gate_s * self.clock_hz * self.accept * duty_src
    }

    /// `[d0, d1, d2, d3, d4, q_signal]` by integrating every scattering point
    /// along the link and propagating it to Bob. `z` runs from the start of
    /// each span in the downstream direction.
    pub fn budget(&self) -> [f64; 6] {
        let (l1, l2) = (self.f1_km, self.f2_km);
        let p_down = 1e-3 * 10f64.powf(self.p_down_dbm / 10.0);
        let p_up = 1e-3 * 10f64.powf(self.p_up_dbm / 10.0);
        let split_c = self.split_classical_db();
        let bob_wdm = self.wdm_q_db / 2.0;
        let to_bob_1 = |z: f64| lin(self.att_q * (l1 - z) + self.split_quantum_db() + self.att_q * l2 + bob_wdm);
        let to_bob_2 = |z: f64| lin(self.att_q * (l2 - z) + bob_wdm);
        // inside a span the pump decays at the 1550 nm coefficient, as in the
        // single-alpha closed forms; before a span it sees its own wavelength
        let down_1 = |z: f64| p_down * lin(self.att_q * z);
        let down_2 = |z: f64| p_down * lin(self.att_down * l1 + split_c + self.att_q * z);
        let up_2 = |z: f64| p_up * lin(self.att_q * (l2 - z));
        let up_1 = |z: f64| p_up * lin(self.att_up * l2 + split_c + self.att_q * (l1 - z));

        let gd = self.rho_down * self.bw_ghz;
        let gu = self.rho_up * self.bw_ghz;
        let d1 = self.counts(
            simpson(|z| gd * down_1(z) * to_bob_1(z), 0.0, l1, STEPS),
            self.duty_down,
        );
        let d2 = self.counts(
            simpson(|z| gd * down_2(z) * to_bob_2(z), 0.0, l2, STEPS),
            self.duty_down,
        );
        let d3 = self.counts(simpson(|z| gu * up_2(z) * to_bob_2(z), 0.0, l2, STEPS), self.duty_up);
        let d4 = self.counts(simpson(|z| gu * up_1(z) * to_bob_1(z), 0.0, l1, STEPS), self.duty_up);
        let d0 = self.dark_hz * self.gate_s * self.clock_hz;
        let path_db = self.att_q * (l1 + l2) + self.split_quantum_db() + self.wdm_q_db;
        let q = self.mu * lin(path_db) * self.eff * self.clock_hz * self.signal_fraction;
        [d0, d1, d2, d3, d4, q]
    }
}

/// Exact decoy-state statistics of an ideal Poisson source over a channel of
/// overall transmittance `eta`, summed photon number by photon number.
pub struct PoissonOracle {
    pub eta: f64,
    pub y0: f64,
    pub e0: f64,
    pub ed: f64,
}

impl PoissonOracle {
    fn yield_n(&self, n: u32) -> f64 {
        self.y0 + 1.0 - (1.0 - self.eta).powi(n as i32)
    }

    fn error_yield_n(&self, n: u32) -> f64 {
        self.e0 * self.y0 + self.ed * (1.0 - (1.0 - self.eta).powi(n as i32))
    }

    /// `(gain, qber)` for mean photon number `m`.
    pub fn gain_qber(&self, m: f64) -> (f64, f64) {
        let mut p = (-m).exp();
        let (mut q, mut eq) = (0.0, 0.0);
        for n in 0..400u32 {
            if n > 0 {
                p *= m / n as f64;
            }
            q += p * self.yield_n(n);
            eq += p * self.error_yield_n(n);
            if n as f64 > m && p < 1e-30 {
                break;
            }
        }
        (q, eq / q)
    }

    pub fn y1(&self) -> f64 {
        self.yield_n(1)
    }

    pub fn e1(&self) -> f64 {
        self.error_yield_n(1) / self.yield_n(1)
    }
}

/// `-x·log2 x − (1−x)·log2(1−x)`.
pub fn h2(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}
