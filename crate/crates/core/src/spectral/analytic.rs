//! Closed-form eigenstates and energies under the counter-intuitive schedule.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::hamiltonian::ci_pulse;
use crate::spin::{BasisTriple, StateVector, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum D2Branch {
    Dark,
    Plus,
    Minus,
}

fn ket(label: &str) -> BasisTriple {
    label.parse().expect("valid basis label")
}

fn state(terms: &[(&str, f64)]) -> Result<StateVector> {
    let terms: Vec<(BasisTriple, C64)> =
        terms.iter().map(|&(l, a)| (ket(l), C64::from(a))).collect();
    StateVector::from_terms(&terms)
}

/// `(E_-, E_0, E_+)` of the m = 2 manifold.
pub fn d2_energies(t: f64, t_max: f64, d: f64, zeeman: f64) -> (f64, f64, f64) {
    let half = 0.5 * d * (3.0 + (2.0 * PI * t / t_max).cos()).sqrt();
    let e0 = 2.0 * zeeman;
    (e0 - half, e0, e0 + half)
}

/// Normalized m = 2 eigenstate on `{|011>, |101>, |110>}` and its energy.
pub fn analytic_d2(
    t: f64,
    t_max: f64,
    d: f64,
    zeeman: f64,
    branch: D2Branch,
) -> Result<(StateVector, f64)> {
    ci_pulse(t, t_max, d)?;
    let x = PI * t / (2.0 * t_max);
    let (s2, c2) = (x.sin().powi(2), x.cos().powi(2));
    let r = (s2 * s2 + c2 * c2).sqrt();
    let (e_minus, e0, e_plus) = d2_energies(t, t_max, d, zeeman);
    match branch {
        D2Branch::Dark => Ok((state(&[("011", c2), ("110", -s2)])?, e0)),
        D2Branch::Plus => Ok((state(&[("011", s2), ("101", r), ("110", c2)])?, e_plus)),
        D2Branch::Minus => Ok((state(&[("011", s2), ("101", -r), ("110", c2)])?, e_minus)),
    }
}

/// Exactly degenerate `E = B` states.
#[derive(Clone, Debug, PartialEq)]
pub struct D1States {
    pub d1_1: StateVector,
    pub d1_2: StateVector,
    /// Transport state on `{|m11>, |010>, |11m>}`.
    pub d1: StateVector,
}

pub fn analytic_d1(d12: f64, d23: f64) -> Result<D1States> {
    if d12 == 0.0 && d23 == 0.0 {
        return Err(Error::DegenerateManifold);
    }
    let d1_1 = state(&[("11m", 1.0), ("1m1", -1.0), ("m11", 1.0)])?;
    let d1_2 = state(&[
        ("11m", d23 * d23 - d12 * d12),
        ("1m1", -d23 * d23),
        ("010", d12 * d23),
    ])?;
    let d1 = state(&[("m11", d23 * d23), ("010", -d12 * d23), ("11m", d12 * d12)])?;
    Ok(D1States { d1_1, d1_2, d1 })
}

/// Zero-energy state of the m = 0 sector.
pub fn analytic_d0(d12: f64, d23: f64) -> Result<StateVector> {
    if d12 == 0.0 && d23 == 0.0 {
        return Err(Error::DegenerateManifold);
    }
    state(&[("01m", d23), ("0m1", -d23), ("1m0", -d12), ("m10", d12)])
}
