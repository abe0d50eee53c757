//! Superexchange map from Bose-Hubbard energies to XXZ couplings.
//!
//! With tunneling `t` and on-site energies `U_uu`, `U_dd`, `U_ud`:
//!
//! ```text
//! J  = -4 t² / U_ud
//! Jz =  4 t² (1/U_ud - 1/U_uu - 1/U_dd)
//! hz =  4 t² (1/U_uu - 1/U_dd)
//! ```
//!
//! Simulation units divide every energy by the signed `J`, so the engine
//! always sees `J = 1`, `Jz = Δ` and `hz = hz/J`. Overall sign reversal of
//! a real Hamiltonian only mirrors `Sy` for the x-polarized initial state,
//! which leaves spin length and squeezing unchanged.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HubbardParams {
    pub t_tunnel: f64,
    pub u_uu: f64,
    pub u_dd: f64,
    pub u_ud: f64,
}

impl HubbardParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.t_tunnel, self.u_uu, self.u_dd, self.u_ud]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::domain("Hubbard parameters must be finite"));
        }
        if self.t_tunnel <= 0.0 {
            return Err(Error::domain(format!(
                "tunneling must be positive, got {}",
                self.t_tunnel
            )));
        }
        for (name, u) in [("U_uu", self.u_uu), ("U_dd", self.u_dd), ("U_ud", self.u_ud)] {
            if u == 0.0 {
                return Err(Error::domain(format!("{name} must be nonzero")));
            }
        }
        Ok(())
    }
}

/// XXZ couplings plus the derived ratios the engine and reports use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinCouplings {
    pub j: f64,
    pub jz: f64,
    pub hz: f64,
    /// Anisotropy `Jz / J`.
    pub delta: f64,
    /// Hole tunneling in units of `|J|`.
    pub t_over_j: f64,
    /// `hz / J`.
    pub hz_over_j: f64,
}

impl SpinCouplings {
    /// Couplings already in simulation units (`J = 1`).
    pub fn sim(delta: f64, hz_over_j: f64, t_over_j: f64) -> Self {
        SpinCouplings {
            j: 1.0,
            jz: delta,
            hz: hz_over_j,
            delta,
            t_over_j,
            hz_over_j,
        }
    }

    /// Builds couplings from raw `J`, `Jz`, `hz` and tunneling, filling the
    /// ratios.
    pub fn from_raw(j: f64, jz: f64, hz: f64, t_tunnel: f64) -> Result<Self> {
        if j == 0.0 || !j.is_finite() {
            return Err(Error::domain("exchange coupling J must be finite and nonzero"));
        }
        Ok(SpinCouplings {
            j,
            jz,
            hz,
            delta: jz / j,
            t_over_j: t_tunnel / j.abs(),
            hz_over_j: hz / j,
        })
    }

    /// Recomputes the ratio fields from `j`, `jz`, `hz`.
    pub fn with_ratios(self) -> Self {
        SpinCouplings {
            delta: self.jz / self.j,
            hz_over_j: self.hz / self.j,
            ..self
        }
    }
}

pub fn derive_couplings(p: &HubbardParams) -> Result<SpinCouplings> {
    p.validate()?;
    let scale = 4.0 * p.t_tunnel * p.t_tunnel;
    let j = -scale / p.u_ud;
    let jz = scale * (1.0 / p.u_ud - 1.0 / p.u_uu - 1.0 / p.u_dd);
    let hz = scale * (1.0 / p.u_uu - 1.0 / p.u_dd);
    SpinCouplings::from_raw(j, jz, hz, p.t_tunnel)
}

/// Wall-clock meaning of one simulation time unit `ħ/|J|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeScale {
    /// `|J| / h` in Hz.
    pub j_hz: f64,
    /// Duration of one `ħ/|J|` in seconds.
    pub seconds_per_unit: f64,
}

impl TimeScale {
    pub fn new(j_hz: f64) -> Result<Self> {
        if !(j_hz > 0.0 && j_hz.is_finite()) {
            return Err(Error::domain(format!("J/h must be positive, got {j_hz}")));
        }
        Ok(TimeScale {
            j_hz,
            seconds_per_unit: 1.0 / (2.0 * std::f64::consts::PI * j_hz),
        })
    }
}

/// Rescales all energies by the signed `J` so that `J = 1`; `t_over_j` is
/// unchanged.
pub fn to_sim_units(c: &SpinCouplings, j_hz: f64) -> Result<(SpinCouplings, TimeScale)> {
    let scale = TimeScale::new(j_hz)?;
    if c.j == 0.0 {
        return Err(Error::domain("cannot normalize a zero exchange coupling"));
    }
    let sim = SpinCouplings {
        j: 1.0,
        jz: c.jz / c.j,
        hz: c.hz / c.j,
        delta: c.jz / c.j,
        t_over_j: c.t_over_j,
        hz_over_j: c.hz / c.j,
    };
    Ok((sim, scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn symmetric_interactions_give_heisenberg_point() {
        let c = derive_couplings(&HubbardParams {
            t_tunnel: 1.0,
            u_uu: 4.0,
            u_dd: 4.0,
            u_ud: 4.0,
        })
        .unwrap();
        assert_eq!(c.j, -1.0);
        assert_eq!(c.jz, -1.0);
        assert_eq!(c.hz, 0.0);
        assert_eq!(c.delta, 1.0);
    }

    #[test]
    fn hard_core_same_spin_limit() {
        let c = derive_couplings(&HubbardParams {
            t_tunnel: 1.0,
            u_uu: 1e12,
            u_dd: 1e12,
            u_ud: 4.0,
        })
        .unwrap();
        assert_eq!(c.j, -1.0);
        assert!((c.jz - 1.0).abs() < 1e-9);
        assert!((c.delta + 1.0).abs() < 1e-9);
        assert!(c.hz.abs() < 1e-12);
    }

    #[test]
    fn operating_point_from_interaction_ratios() {
        // u1 = U_ud/U_uu, u2 = U_ud/U_dd; Δ = -(1-u1-u2), hz/J = -(u1-u2).
        let u_ud = 4.0;
        let (u1, u2) = (0.96, -0.14);
        let c = derive_couplings(&HubbardParams {
            t_tunnel: 1.0,
            u_uu: u_ud / u1,
            u_dd: u_ud / u2,
            u_ud,
        })
        .unwrap();
        assert!((c.delta - (-0.18)).abs() < 1e-12);
        assert!((c.hz_over_j - (-1.10)).abs() < 1e-12);
    }

    #[test]
    fn zero_interaction_is_rejected() {
        for (uu, dd, ud) in [(0.0, 1.0, 1.0), (1.0, 0.0, 1.0), (1.0, 1.0, 0.0)] {
            let err = derive_couplings(&HubbardParams {
                t_tunnel: 1.0,
                u_uu: uu,
                u_dd: dd,
                u_ud: ud,
            })
            .unwrap_err();
            assert!(matches!(err, Error::Domain(_)));
        }
        assert!(derive_couplings(&HubbardParams {
            t_tunnel: 0.0,
            u_uu: 1.0,
            u_dd: 1.0,
            u_ud: 1.0
        })
        .is_err());
    }

    #[test]
    fn time_unit_for_quoted_exchange_rates() {
        let one_d = TimeScale::new(38.0).unwrap();
        assert!((one_d.seconds_per_unit * 1e3 - 4.188).abs() < 1e-3);
        let three_d = TimeScale::new(27.0).unwrap();
        assert!((three_d.seconds_per_unit * 1e3 - 5.895).abs() < 1e-3);
        assert!(TimeScale::new(0.0).is_err());
    }

    #[test]
    fn normalized_couplings_are_fixed_by_rescaling() {
        let c = SpinCouplings::sim(-0.18, -1.1, 4.2);
        let (s, _) = to_sim_units(&c, 38.0).unwrap();
        assert_eq!(s, c);
    }

    proptest! {
        #[test]
        fn common_rescaling_leaves_couplings_fixed(
            t in 0.1f64..10.0,
            uu in prop_oneof![-20.0f64..-0.5, 0.5f64..20.0],
            dd in prop_oneof![-20.0f64..-0.5, 0.5f64..20.0],
            ud in 0.5f64..20.0,
            lambda in 0.1f64..10.0,
        ) {
            let base = derive_couplings(&HubbardParams { t_tunnel: t, u_uu: uu, u_dd: dd, u_ud: ud }).unwrap();
            let scaled = derive_couplings(&HubbardParams {
                t_tunnel: t * lambda.sqrt(),
                u_uu: uu * lambda,
                u_dd: dd * lambda,
                u_ud: ud * lambda,
            }).unwrap();
            let rel = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()));
            prop_assert!(rel(base.j, scaled.j));
            prop_assert!(rel(base.jz, scaled.jz));
            prop_assert!(rel(base.hz, scaled.hz));
        }

        #[test]
        fn ratios_are_consistent_and_idempotent(
            t in 0.1f64..10.0,
            uu in prop_oneof![-20.0f64..-0.5, 0.5f64..20.0],
            dd in prop_oneof![-20.0f64..-0.5, 0.5f64..20.0],
            ud in 0.5f64..20.0,
        ) {
            let c = derive_couplings(&HubbardParams { t_tunnel: t, u_uu: uu, u_dd: dd, u_ud: ud }).unwrap();
            prop_assert_eq!(c.delta, c.jz / c.j);
            prop_assert_eq!(c.hz_over_j, c.hz / c.j);
            prop_assert_eq!(c.with_ratios(), c);
            if uu == dd {
                prop_assert_eq!(c.hz, 0.0);
            }
        }
    }
}
