//! Phasor-domain sequence networks for a grid-forming converter behind an
//! equivalent saturation resistance, connected through a split grid
//! impedance to an infinite bus, with shunt faults at the split point.
//!
//! The positive- and negative-sequence networks share the same series
//! impedances (`r_eq + Z_g1` on the converter side, `Z_g2` on the grid
//! side); the zero-sequence network is open at the converter (three-wire
//! bridge). Fault-point sequence voltages use the closed forms of the
//! equivalent-resistance model; an independent interconnection oracle for
//! them lives in the test suite.

use crate::error::{Error, Result};
use crate::phasor::{Phasor, SequenceSet};
use serde::{Deserialize, Serialize};

/// Grid-side electrical parameters, per unit on the converter base.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NetworkParams {
    /// Grid (infinite bus) voltage magnitude.
    pub v_g_mag: f64,
    /// Total grid reactance between PCC and infinite bus.
    pub x_g: f64,
    /// Total grid resistance between PCC and infinite bus.
    pub r_g: f64,
    /// Fault-location fraction: `Z_g1 = split * Z_g` lies converter-side
    /// of the fault point, `Z_g2 = (1 - split) * Z_g` grid-side.
    pub split: f64,
    /// Converter filter inductance (time-domain model only).
    pub l_f: f64,
    /// Converter filter capacitance (time-domain model only).
    pub c_f: f64,
    /// Nominal angular frequency in rad/s.
    pub omega_n: f64,
}

impl NetworkParams {
    /// Converter-side share of the grid impedance.
    pub fn z_g1(&self) -> Phasor {
        Phasor::new(self.r_g * self.split, self.x_g * self.split)
    }

    /// Grid-side share of the grid impedance.
    pub fn z_g2(&self) -> Phasor {
        Phasor::new(self.r_g * (1.0 - self.split), self.x_g * (1.0 - self.split))
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, field: &'static str, constraint: &'static str, value: f64| {
            if ok {
                Ok(())
            } else {
                Err(Error::Validation {
                    field,
                    constraint,
                    value,
                })
            }
        };
        check(self.v_g_mag.is_finite() && self.v_g_mag > 0.0, "network.v_g_mag", "> 0", self.v_g_mag)?;
        check(self.x_g.is_finite() && self.x_g > 0.0, "network.x_g", "> 0", self.x_g)?;
        check(self.r_g.is_finite() && self.r_g >= 0.0, "network.r_g", ">= 0", self.r_g)?;
        check(
            self.split.is_finite() && self.split > 0.0 && self.split < 1.0,
            "network.split",
            "in (0, 1)",
            self.split,
        )?;
        check(self.l_f.is_finite() && self.l_f > 0.0, "network.l_f", "> 0", self.l_f)?;
        check(self.c_f.is_finite() && self.c_f > 0.0, "network.c_f", "> 0", self.c_f)?;
        check(self.omega_n.is_finite() && self.omega_n > 0.0, "network.omega_n", "> 0", self.omega_n)?;
        Ok(())
    }
}

/// Shunt fault classes at the impedance split point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaultKind {
    /// Healthy network.
    #[serde(alias = "nofault")]
    None,
    /// Single line to ground (phase a).
    Slg,
    /// Double line to ground (phases b and c).
    Dlg,
    /// Line to line (between phases b and c).
    Ll,
}

impl FaultKind {
    pub fn label(&self) -> &'static str {
        match self {
            FaultKind::None => "none",
            FaultKind::Slg => "slg",
            FaultKind::Dlg => "dlg",
            FaultKind::Ll => "ll",
        }
    }
}

/// Fault description: class plus fault resistance.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FaultSpec {
    pub kind: FaultKind,
    /// Fault resistance in pu.
    pub r_f: f64,
}

impl FaultSpec {
    pub fn none() -> Self {
        Self {
            kind: FaultKind::None,
            r_f: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r_f.is_finite() && self.r_f >= 0.0 {
            Ok(())
        } else {
            Err(Error::Validation {
                field: "fault.r_f",
                constraint: ">= 0",
                value: self.r_f,
            })
        }
    }
}

const SINGULAR_EPS: f64 = 1e-14;

/// Thevenin impedance of the positive (and negative) sequence network seen
/// from the fault point: `Z_g2 || (r_eq + Z_g1)`.
pub fn parallel_sequence_impedance(net: &NetworkParams, r_eq: f64) -> Result<Phasor> {
    let z1 = net.z_g1() + r_eq;
    let z2 = net.z_g2();
    let den = z1 + z2;
    if den.norm() < SINGULAR_EPS {
        return Err(Error::SingularNetwork);
    }
    Ok(z2 * z1 / den)
}

/// Zero-sequence impedance seen from the fault point. The converter branch
/// is open, leaving only the grid-side impedance.
pub fn zero_sequence_impedance(net: &NetworkParams) -> Phasor {
    net.z_g2()
}

/// Open-circuit (Thevenin) positive-sequence voltage at the fault point:
/// the divider between the converter internal source and the grid source.
pub fn thevenin_fault_voltage(
    net: &NetworkParams,
    e_ref: Phasor,
    v_g: Phasor,
    r_eq: f64,
) -> Result<Phasor> {
    let z1 = net.z_g1() + r_eq;
    let z2 = net.z_g2();
    let den = z1 + z2;
    if den.norm() < SINGULAR_EPS {
        return Err(Error::SingularNetwork);
    }
    Ok((e_ref * z2 + z1 * v_g) / den)
}

/// Positive- and negative-sequence voltages at the fault point for the
/// given fault class, evaluated with the closed forms of the
/// equivalent-resistance model. For a healthy network this returns the
/// divider voltage with zero negative sequence, so pre-fault curves use
/// the same code path.
pub fn fault_point_voltages(
    fault: &FaultSpec,
    net: &NetworkParams,
    e_ref: Phasor,
    v_g: Phasor,
    r_eq: f64,
) -> Result<SequenceSet> {
    let v_th = thevenin_fault_voltage(net, e_ref, v_g, r_eq)?;
    if fault.kind == FaultKind::None {
        return Ok(SequenceSet::new(v_th, Phasor::new(0.0, 0.0)));
    }
    let z_p = parallel_sequence_impedance(net, r_eq)?;
    let r_f = fault.r_f;
    let (v_pos, v_neg) = match fault.kind {
        FaultKind::None => unreachable!(),
        FaultKind::Slg => {
            let den = 3.0 * z_p + 3.0 * r_f;
            if den.norm() < SINGULAR_EPS {
                return Err(Error::SingularFault { kind: "slg", r_f });
            }
            ((2.0 * z_p + 3.0 * r_f) / den * v_th, -z_p / den * v_th)
        }
        FaultKind::Dlg => {
            let den = 2.0 * z_p + r_f;
            if den.norm() < SINGULAR_EPS {
                return Err(Error::SingularFault { kind: "dlg", r_f });
            }
            ((z_p + r_f) / den * v_th, z_p / den * v_th)
        }
        FaultKind::Ll => {
            let den = 3.0 * z_p + 6.0 * r_f;
            if den.norm() < SINGULAR_EPS {
                return Err(Error::SingularFault { kind: "ll", r_f });
            }
            let v = (z_p + 3.0 * r_f) / den * v_th;
            (v, v)
        }
    };
    Ok(SequenceSet::new(v_pos, v_neg))
}

/// Converter output currents driven by the internal source against the
/// fault-point voltages through `r_eq + Z_g1`. Zero sequence is open.
pub fn converter_currents(
    net: &NetworkParams,
    e_ref: Phasor,
    v_f: &SequenceSet,
    r_eq: f64,
) -> Result<SequenceSet> {
    let branch = net.z_g1() + r_eq;
    if branch.norm() < SINGULAR_EPS {
        return Err(Error::SingularNetwork);
    }
    Ok(SequenceSet::new(
        (e_ref - v_f.pos) / branch,
        -v_f.neg / branch,
    ))
}

/// PCC voltages behind the equivalent saturation resistance:
/// `V_o+ = E_ref - r_eq i_o+`, `V_o- = -r_eq i_o-`.
pub fn pcc_voltages(e_ref: Phasor, i_o: &SequenceSet, r_eq: f64) -> SequenceSet {
    SequenceSet::new(e_ref - r_eq * i_o.pos, -r_eq * i_o.neg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasor::polar;
    use approx::assert_relative_eq;

    fn net(r_g: f64, x_g: f64, split: f64) -> NetworkParams {
        NetworkParams {
            v_g_mag: 1.0,
            x_g,
            r_g,
            split,
            l_f: 0.1,
            c_f: 0.05,
            omega_n: 2.0 * std::f64::consts::PI * 60.0,
        }
    }

    #[test]
    fn equal_impedances_in_parallel_halve() {
        // Z_g1 = Z_g2 = j0.1, r_eq = 0 -> j0.05
        let n = net(0.0, 0.2, 0.5);
        let z = parallel_sequence_impedance(&n, 0.0).unwrap();
        assert_relative_eq!(z.re, 0.0, epsilon = 1e-15);
        assert_relative_eq!(z.im, 0.05, epsilon = 1e-15);
    }

    #[test]
    fn open_converter_branch_leaves_grid_side() {
        let n = net(0.04, 0.2, 0.5);
        let z = parallel_sequence_impedance(&n, 1e9).unwrap();
        let z2 = n.z_g2();
        assert_relative_eq!(z.re, z2.re, max_relative = 1e-8);
        assert_relative_eq!(z.im, z2.im, max_relative = 1e-8);
    }

    #[test]
    fn parallel_impedance_matches_direct_complex_evaluation() {
        let n = net(0.04, 0.2, 0.5);
        let r_eq = 0.5;
        let z1 = Phasor::new(0.02 + r_eq, 0.1);
        let z2 = Phasor::new(0.02, 0.1);
        let expect = z1 * z2 / (z1 + z2);
        let z = parallel_sequence_impedance(&n, r_eq).unwrap();
        assert_relative_eq!(z.re, expect.re, epsilon = 1e-15);
        assert_relative_eq!(z.im, expect.im, epsilon = 1e-15);
    }

    #[test]
    fn zero_sequence_is_grid_side_impedance() {
        let n = net(0.04, 0.2, 0.3);
        assert_eq!(zero_sequence_impedance(&n), n.z_g2());
    }

    #[test]
    fn singular_network_reported() {
        let mut n = net(0.0, 0.2, 0.5);
        n.x_g = 0.0; // bypass validation on purpose: degenerate series path
        assert!(matches!(
            parallel_sequence_impedance(&n, 0.0),
            Err(Error::SingularNetwork)
        ));
        assert!(matches!(
            thevenin_fault_voltage(&n, polar(1.1, 0.0), polar(1.0, 0.0), 0.0),
            Err(Error::SingularNetwork)
        ));
    }

    #[test]
    fn identical_sources_leave_divider_at_source() {
        let n = net(0.04, 0.2, 0.5);
        let e = polar(1.0, 0.0);
        let v = thevenin_fault_voltage(&n, e, e, 0.37).unwrap();
        assert_relative_eq!(v.re, 1.0, epsilon = 1e-14);
        assert_relative_eq!(v.im, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn grid_side_collapse_pins_divider_to_grid() {
        // split -> 1 collapses Z_g2 to zero.
        let n = net(0.04, 0.2, 1.0 - 1e-12);
        let v =
            thevenin_fault_voltage(&n, polar(1.1, 0.8), polar(1.0, 0.0), 0.2).unwrap();
        assert_relative_eq!(v.re, 1.0, epsilon = 1e-9);
        assert_relative_eq!(v.im, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn bolted_fault_ratios() {
        let n = net(0.04, 0.2, 0.5);
        let e = polar(1.1, 0.6);
        let vg = polar(1.0, 0.0);
        let r_eq = 0.3;
        let v_th = thevenin_fault_voltage(&n, e, vg, r_eq).unwrap();

        let slg = fault_point_voltages(&FaultSpec { kind: FaultKind::Slg, r_f: 0.0 }, &n, e, vg, r_eq).unwrap();
        assert_relative_eq!((slg.pos - v_th * 2.0 / 3.0).norm(), 0.0, epsilon = 1e-14);
        assert_relative_eq!((slg.neg + v_th / 3.0).norm(), 0.0, epsilon = 1e-14);

        let dlg = fault_point_voltages(&FaultSpec { kind: FaultKind::Dlg, r_f: 0.0 }, &n, e, vg, r_eq).unwrap();
        assert_relative_eq!((dlg.pos - v_th * 0.5).norm(), 0.0, epsilon = 1e-14);
        assert_relative_eq!((dlg.neg - v_th * 0.5).norm(), 0.0, epsilon = 1e-14);

        let ll = fault_point_voltages(&FaultSpec { kind: FaultKind::Ll, r_f: 0.0 }, &n, e, vg, r_eq).unwrap();
        assert_relative_eq!((ll.pos - v_th / 3.0).norm(), 0.0, epsilon = 1e-14);
        assert_relative_eq!((ll.neg - v_th / 3.0).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn no_fault_keeps_negative_sequence_at_zero() {
        let n = net(0.04, 0.2, 0.5);
        let e = polar(1.1, 0.4);
        let vg = polar(1.0, 0.0);
        let v = fault_point_voltages(&FaultSpec::none(), &n, e, vg, 0.0).unwrap();
        assert_eq!(v.neg, Phasor::new(0.0, 0.0));
        let i = converter_currents(&n, e, &v, 0.0).unwrap();
        assert_eq!(i.neg, Phasor::new(0.0, 0.0));
        assert_eq!(i.zero, Phasor::new(0.0, 0.0));
    }

    #[test]
    fn large_fault_resistance_recovers_healthy_network_where_defined() {
        // With r_f >= 1e6 pu the slg/dlg forms return to the unfaulted
        // divider; the ll form approaches the bolted phase-b/c short
        // instead (its resistance sits in the ground path only).
        let n = net(0.04, 0.2, 0.5);
        let e = polar(1.1, 0.7);
        let vg = polar(1.0, 0.0);
        let r_eq = 0.2;
        let v_th = thevenin_fault_voltage(&n, e, vg, r_eq).unwrap();
        for kind in [FaultKind::Slg, FaultKind::Dlg] {
            let v = fault_point_voltages(&FaultSpec { kind, r_f: 1e6 }, &n, e, vg, r_eq).unwrap();
            assert!((v.pos - v_th).norm() < 1e-5, "{kind:?}");
            assert!(v.neg.norm() < 1e-5, "{kind:?}");
        }
        let v = fault_point_voltages(&FaultSpec { kind: FaultKind::Ll, r_f: 1e6 }, &n, e, vg, r_eq).unwrap();
        assert!((v.pos - v_th * 0.5).norm() < 1e-5);
        assert!((v.neg - v_th * 0.5).norm() < 1e-5);
    }

    #[test]
    fn no_driving_voltage_means_no_current() {
        let n = net(0.04, 0.2, 0.5);
        let e = polar(1.1, 0.3);
        let v_f = SequenceSet::new(e, Phasor::new(0.0, 0.0));
        let i = converter_currents(&n, e, &v_f, 0.4).unwrap();
        assert_eq!(i.pos, Phasor::new(0.0, 0.0));
        assert_eq!(i.neg, Phasor::new(0.0, 0.0));
    }

    #[test]
    fn pcc_voltage_reduces_to_source_without_saturation() {
        let e = polar(1.1, 0.3);
        let i = SequenceSet::new(polar(0.9, -0.2), polar(0.3, 2.0));
        let v = pcc_voltages(e, &i, 0.0);
        assert_eq!(v.pos, e);
        assert_eq!(v.neg, Phasor::new(0.0, 0.0));
    }

    #[test]
    fn pcc_voltage_direct_complex_evaluation() {
        let e = polar(1.1, 0.0);
        let i_pos = polar(1.0, -30f64.to_radians());
        let i = SequenceSet::new(i_pos, Phasor::new(0.0, 0.0));
        let v = pcc_voltages(e, &i, 0.5);
        let expect = e - 0.5 * i_pos;
        assert_relative_eq!((v.pos - expect).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn kirchhoff_closure_across_converter_branch() {
        // V_o - V_f = Z_g1 * i_o in both sequences.
        let n = net(0.04, 0.2, 0.4);
        let e = polar(1.1, 1.0);
        let vg = polar(1.0, 0.0);
        for kind in [FaultKind::Slg, FaultKind::Dlg, FaultKind::Ll] {
            for r_eq in [0.0, 0.2, 1.5] {
                let fault = FaultSpec { kind, r_f: 0.05 };
                let v_f = fault_point_voltages(&fault, &n, e, vg, r_eq).unwrap();
                let i_o = converter_currents(&n, e, &v_f, r_eq).unwrap();
                let v_o = pcc_voltages(e, &i_o, r_eq);
                let z1 = n.z_g1();
                assert!((v_o.pos - v_f.pos - z1 * i_o.pos).norm() < 1e-12);
                assert!((v_o.neg - v_f.neg - z1 * i_o.neg).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn outputs_are_continuous_in_r_eq() {
        // Scan r_eq over [0, 10]; refining the grid around the largest
        // local difference must shrink it (no hidden jump).
        let n = net(0.04, 0.2, 0.5);
        let e = polar(1.1, 0.9);
        let vg = polar(1.0, 0.0);
        let fault = FaultSpec { kind: FaultKind::Slg, r_f: 0.01 };
        let eval = |r: f64| {
            let v_f = fault_point_voltages(&fault, &n, e, vg, r).unwrap();
            let i_o = converter_currents(&n, e, &v_f, r).unwrap();
            let v_o = pcc_voltages(e, &i_o, r);
            [v_f.pos, v_f.neg, i_o.pos, i_o.neg, v_o.pos, v_o.neg]
        };
        let h = 1e-3;
        let mut worst = (0.0f64, 0.0f64);
        let mut prev = eval(0.0);
        let mut r = h;
        while r <= 10.0 + 1e-12 {
            let cur = eval(r);
            let jump = prev
                .iter()
                .zip(cur.iter())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            if jump > worst.0 {
                worst = (jump, r);
            }
            prev = cur;
            r += h;
        }
        // refine tenfold around the worst location
        let r0 = (worst.1 - h).max(0.0);
        let mut refined: f64 = 0.0;
        let mut prev = eval(r0);
        for k in 1..=20 {
            let cur = eval(r0 + k as f64 * h / 10.0);
            let jump = prev
                .iter()
                .zip(cur.iter())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            refined = refined.max(jump);
            prev = cur;
        }
        assert!(
            refined < worst.0 / 5.0,
            "jump {:.3e} at r_eq={:.3} does not shrink under refinement ({:.3e})",
            worst.0,
            worst.1,
            refined
        );
    }
}
