//! Adiabaticity between instantaneous eigenstates.

use std::f64::consts::PI;

use nalgebra::DVector;

use super::{eigensystem, SpectralFrame};
use crate::error::{Error, Result};
use crate::hamiltonian::PulseSchedule;
use crate::spin::{StateVector, C64, DIM, SECTORS};

/// How an instantaneous eigenstate is picked out of a frame.
#[derive(Clone, Debug, PartialEq)]
pub enum StateSelector {
    /// `level`-th eigenstate (ascending) of sector `m`; must not sit in a
    /// degenerate cluster.
    Level { m: i32, level: usize },
    /// Projection of the reference onto the eigenspace it overlaps most.
    Reference(StateVector),
}

/// An eigenstate picked from a frame together with its energy.
struct Picked {
    vector: DVector<C64>,
    energy: f64,
    m: i32,
}

fn frame_at(schedule: &PulseSchedule, t: f64) -> Result<SpectralFrame> {
    eigensystem(&schedule.hamiltonian_at(t)?, t)
}

fn sector_of(v: &DVector<C64>) -> i32 {
    let sv = StateVector::from_dvector(v.clone());
    *SECTORS
        .iter()
        .max_by(|a, b| {
            sv.weight_in_sector(**a)
                .total_cmp(&sv.weight_in_sector(**b))
                .then(b.cmp(a))
        })
        .unwrap()
}

/// Normalized projection of `v` onto the sector-`m` eigenspace of `frame` it
/// overlaps most, phase-aligned with `v`.
fn follow(frame: &SpectralFrame, v: &DVector<C64>, m: i32) -> Result<Picked> {
    let clusters = frame.clusters(m);
    let weight = |c: &Vec<usize>| -> f64 {
        c.iter()
            .map(|&j| frame.eigenvectors[j].amplitudes().dotc(v).norm_sqr())
            .sum()
    };
    let best = clusters
        .iter()
        .max_by(|a, b| weight(a).total_cmp(&weight(b)).then(b[0].cmp(&a[0])))
        .ok_or_else(|| Error::InvalidArgument(format!("empty sector {m}")))?;
    let mut p = DVector::<C64>::zeros(DIM);
    for &j in best {
        let e = frame.eigenvectors[j].amplitudes();
        p += e * e.dotc(v);
    }
    let norm = p.norm();
    if norm < 1e-6 {
        return Err(Error::InvalidArgument(
            "reference state has no overlap with any eigenspace".into(),
        ));
    }
    p /= C64::from(norm);
    let inner = p.dotc(v);
    if inner.norm() > 0.0 {
        p *= inner / inner.norm();
    }
    Ok(Picked {
        vector: p,
        energy: frame.eigenvalues[best[0]],
        m,
    })
}

fn pick(frame: &SpectralFrame, selector: &StateSelector) -> Result<Picked> {
    match selector {
        StateSelector::Level { m, level } => {
            let levels = frame.sector_levels(*m);
            let &k = levels.get(*level).ok_or(Error::AmbiguousLevel {
                m: *m,
                level: *level,
            })?;
            let in_cluster = frame
                .clusters(*m)
                .iter()
                .any(|c| c.len() > 1 && c.contains(&k));
            if in_cluster {
                return Err(Error::AmbiguousLevel {
                    m: *m,
                    level: *level,
                });
            }
            Ok(Picked {
                vector: frame.eigenvectors[k].amplitudes().clone(),
                energy: frame.eigenvalues[k],
                m: *m,
            })
        }
        StateSelector::Reference(r) => {
            let v = r.amplitudes();
            follow(frame, v, sector_of(v))
        }
    }
}

/// Index (within `frame`) of the level nearest in energy to `k` in the same
/// sector but outside its degenerate cluster; lower energy wins ties.
pub fn nearest_outside_cluster(frame: &SpectralFrame, k: usize) -> Result<usize> {
    let m = frame.m_labels[k];
    let cluster = frame
        .clusters(m)
        .into_iter()
        .find(|c| c.contains(&k))
        .ok_or(Error::DegenerateManifold)?;
    let e = frame.eigenvalues[k];
    frame
        .sector_levels(m)
        .into_iter()
        .filter(|j| !cluster.contains(j))
        .min_by(|&a, &b| {
            let da = (frame.eigenvalues[a] - e).abs();
            let db = (frame.eigenvalues[b] - e).abs();
            da.total_cmp(&db).then(a.cmp(&b))
        })
        .ok_or(Error::DegenerateManifold)
}

/// `|<a|d/dt b>|` at step `h`, with one-sided stencils at the schedule ends.
fn coupling_derivative(
    schedule: &PulseSchedule,
    t: f64,
    a: &DVector<C64>,
    b: &Picked,
    h: f64,
) -> Result<f64> {
    let t_max = schedule.t_max();
    let at = |s: f64| -> Result<DVector<C64>> {
        Ok(follow(&frame_at(schedule, s)?, &b.vector, b.m)?.vector)
    };
    let derivative = if t - h < 0.0 {
        (at(t + h)? * C64::from(4.0) - at(t + 2.0 * h)? - &b.vector * C64::from(3.0))
            / C64::from(2.0 * h)
    } else if t + h > t_max {
        (&b.vector * C64::from(3.0) - at(t - h)? * C64::from(4.0) + at(t - 2.0 * h)?)
            / C64::from(2.0 * h)
    } else {
        (at(t + h)? - at(t - h)?) / C64::from(2.0 * h)
    };
    Ok(a.dotc(&derivative).norm())
}

/// `|<a|d/dt b>| / |E_a - E_b|` from finite differences of continuously
/// followed eigenvectors. `dt` defaults to `t_max * 1e-6`; the result at
/// `dt / 2` is returned after checking it against the one at `dt`.
pub fn adiabaticity_numeric(
    schedule: &PulseSchedule,
    t: f64,
    a: &StateSelector,
    b: &StateSelector,
    dt: Option<f64>,
) -> Result<f64> {
    let t_max = schedule.t_max();
    if !(0.0..=t_max).contains(&t) {
        return Err(Error::TimeOutOfRange { t, t_max });
    }
    let h = dt.unwrap_or(t_max * 1e-6);
    if !(h > 0.0 && 4.0 * h < t_max) {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step {h}"
        )));
    }
    let frame = frame_at(schedule, t)?;
    let pa = pick(&frame, a)?;
    let pb = pick(&frame, b)?;
    let gap = (pa.energy - pb.energy).abs();
    if gap < 1e-12 {
        return Err(Error::DegeneratePair);
    }
    let coarse = coupling_derivative(schedule, t, &pa.vector, &pb, h)? / gap;
    let fine = coupling_derivative(schedule, t, &pa.vector, &pb, h / 2.0)? / gap;
    if (coarse - fine).abs() > 1e-4 * fine.abs() + 1e-8 {
        return Err(Error::FiniteDifference { coarse, fine });
    }
    Ok(fine)
}

/// Closed-form adiabaticity between the dark and either bright m = 2 state.
pub fn adiabaticity_a2_closed(t: f64, t_max: f64, d: f64) -> f64 {
    let c = 3.0 + (2.0 * PI * t / t_max).cos();
    2.0 * 2f64.sqrt() * PI * (PI * t / t_max).sin() / (d * t_max * c.powf(1.5))
}

/// Closed-form midpoint adiabaticities `(A2_mid, A1_mid)`.
pub fn midpoint_adiabaticities(t_max: f64, d: f64) -> Result<(f64, f64)> {
    if !(t_max > 0.0 && d > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "t_max = {t_max}, d = {d}; both must be positive"
        )));
    }
    let a2 = PI / (t_max * d);
    let a1 = 2.0 * PI / (t_max * d) * (3.0 / 7.0 * (4.0 + 2f64.sqrt())).sqrt();
    Ok((a2, a1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{analytic_d1, analytic_d2, D2Branch};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ci() -> PulseSchedule {
        PulseSchedule::counter_intuitive(100.0, 0.2, 1.0).unwrap()
    }

    const DARK: StateSelector = StateSelector::Level { m: 2, level: 1 };
    const BRIGHT: StateSelector = StateSelector::Level { m: 2, level: 2 };

    #[test]
    fn closed_form_values() {
        assert_eq!(adiabaticity_a2_closed(0.0, 100.0, 0.2), 0.0);
        assert_relative_eq!(
            adiabaticity_a2_closed(50.0, 100.0, 0.2),
            PI / 20.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            adiabaticity_a2_closed(20.0, 100.0, 0.2),
            adiabaticity_a2_closed(80.0, 100.0, 0.2),
            max_relative = 1e-12
        );
        let (a2, a1) = midpoint_adiabaticities(100.0, 0.2).unwrap();
        assert_relative_eq!(a2, 0.15707963267948966, max_relative = 1e-15);
        assert_relative_eq!(a1, 0.47855203928234773, max_relative = 1e-14);
        assert!(midpoint_adiabaticities(0.0, 0.2).is_err());
    }

    #[test]
    fn numeric_matches_closed_form() {
        let s = ci();
        assert!(adiabaticity_numeric(&s, 0.0, &DARK, &BRIGHT, None).unwrap() < 1e-8);
        for t in [10.0, 35.0, 50.0, 90.0, 100.0] {
            let a = adiabaticity_numeric(&s, t, &DARK, &BRIGHT, None).unwrap();
            let expected = adiabaticity_a2_closed(t, 100.0, 0.2);
            assert!((a - expected).abs() <= 1e-6, "t={t}: {a} vs {expected}");
        }
    }

    #[test]
    fn reference_selection_agrees_with_level_selection() {
        let s = ci();
        let (dark, _) = analytic_d2(30.0, 100.0, 0.2, 1.0, D2Branch::Dark).unwrap();
        let (bright, _) = analytic_d2(30.0, 100.0, 0.2, 1.0, D2Branch::Minus).unwrap();
        let by_ref = adiabaticity_numeric(
            &s,
            30.0,
            &StateSelector::Reference(dark),
            &StateSelector::Reference(bright),
            None,
        )
        .unwrap();
        let by_level = adiabaticity_numeric(
            &s,
            30.0,
            &DARK,
            &StateSelector::Level { m: 2, level: 0 },
            None,
        )
        .unwrap();
        assert_relative_eq!(by_ref, by_level, max_relative = 1e-6);
    }

    #[test]
    fn degenerate_pair_rejected() {
        let s = ci();
        let st = analytic_d1(0.1, 0.1).unwrap();
        let r = adiabaticity_numeric(
            &s,
            50.0,
            &StateSelector::Reference(st.d1_1),
            &StateSelector::Reference(st.d1),
            None,
        );
        assert!(matches!(r, Err(Error::DegeneratePair)));
    }

    #[test]
    fn ambiguous_level_rejected() {
        let s = ci();
        let frame = frame_at(&s, 50.0).unwrap();
        let ones = frame.sector_levels(1);
        let level = ones
            .iter()
            .position(|&k| (frame.eigenvalues[k] - 1.0).abs() < 1e-9)
            .unwrap();
        let r = adiabaticity_numeric(&s, 50.0, &StateSelector::Level { m: 1, level }, &DARK, None);
        assert!(matches!(r, Err(Error::AmbiguousLevel { .. })));
    }

    #[test]
    fn nearest_neighbour_of_degenerate_pair() {
        let frame = frame_at(&ci(), 50.0).unwrap();
        let k = (0..DIM)
            .find(|&k| frame.m_labels[k] == 1 && (frame.eigenvalues[k] - 1.0).abs() < 1e-9)
            .unwrap();
        let j = nearest_outside_cluster(&frame, k).unwrap();
        assert!(((frame.eigenvalues[j] - 1.0).abs() - 0.1).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn a1_mid_exceeds_a2_mid(t_max in 1.0f64..1e4, d in 1e-3f64..10.0) {
            let (a2, a1) = midpoint_adiabaticities(t_max, d).unwrap();
            prop_assert!(a1 > a2);
        }
    }
}
