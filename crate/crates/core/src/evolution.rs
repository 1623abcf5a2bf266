//! Time propagation under a pulse schedule, population time series, DSAP
//! transfers and qutrit transport.

use std::f64::consts::FRAC_1_SQRT_2;
use std::io::Write;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{sector_blocks, PulseSchedule};
use crate::linalg::apply_real_propagator;
use crate::output::{write_header, write_row};
use crate::spin::{BasisTriple, SpinLabel, StateVector, C64, DIM, NORM_TOL};

/// Default step count: `10^4` per `100` time units.
pub fn default_steps(t_max: f64) -> usize {
    ((1e4 * t_max / 100.0).ceil() as usize).max(1)
}

/// Final state of a propagation together with the accumulated `∫B dt`.
#[derive(Clone, Debug)]
pub struct PropagationEnd {
    pub state: StateVector,
    pub zeeman_integral: f64,
}

/// Midpoint piecewise-exponential propagation that hands every step's state
/// to `observe` (including the initial one) instead of storing it.
pub fn propagate_with(
    schedule: &PulseSchedule,
    psi0: &StateVector,
    n_steps: usize,
    mut observe: impl FnMut(f64, &StateVector),
) -> Result<PropagationEnd> {
    if n_steps < 1 {
        return Err(Error::InvalidArgument("n_steps must be at least 1".into()));
    }
    if !psi0.is_normalized() {
        return Err(Error::NotNormalized(psi0.norm()));
    }
    let t_max = schedule.t_max();
    let mut psi = psi0.amplitudes().clone();
    let mut zeeman_integral = 0.0;
    let time = |k: usize| {
        if k == n_steps {
            t_max
        } else {
            t_max * k as f64 / n_steps as f64
        }
    };
    observe(0.0, psi0);
    for k in 0..n_steps {
        let (t0, t1) = (time(k), time(k + 1));
        let mid = 0.5 * (t0 + t1);
        let dt = t1 - t0;
        let snap = schedule.sample(mid)?;
        zeeman_integral += snap.zeeman * dt;
        for (idx, block) in sector_blocks(&snap, schedule.convention())? {
            if idx.iter().all(|&i| psi[i] == C64::from(0.0)) {
                continue;
            }
            let sub = DVector::from_fn(idx.len(), |r, _| psi[idx[r]]);
            let evolved = apply_real_propagator(block, &sub, dt);
            for (r, &i) in idx.iter().enumerate() {
                psi[i] = evolved[r];
            }
        }
        observe(t1, &StateVector::from_dvector(psi.clone()));
    }
    Ok(PropagationEnd {
        state: StateVector::from_dvector(psi),
        zeeman_integral,
    })
}

/// States at every step of a propagation.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub schedule: PulseSchedule,
    pub zeeman_integral: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &StateVector {
        self.states
            .last()
            .expect("trajectory has at least one state")
    }

    /// `t,re_00,im_00,...,re_26,im_26`.
    pub fn write_amplitudes_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        let mut header = vec!["t".to_string()];
        for k in 0..DIM {
            header.push(format!("re_{k:02}"));
            header.push(format!("im_{k:02}"));
        }
        write_header(out, &header)?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let amps = s.amplitudes().iter().flat_map(|z| [z.re, z.im]);
            write_row(out, std::iter::once(*t).chain(amps))?;
        }
        Ok(())
    }
}

pub fn propagate(
    schedule: &PulseSchedule,
    psi0: &StateVector,
    n_steps: usize,
) -> Result<Trajectory> {
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    let end = propagate_with(schedule, psi0, n_steps, |t, s| {
        times.push(t);
        states.push(s.clone());
    })?;
    Ok(Trajectory {
        times,
        states,
        schedule: schedule.clone(),
        zeeman_integral: end.zeeman_integral,
    })
}

/// Populations of selected basis states over time.
#[derive(Clone, Debug, PartialEq)]
pub struct PopulationTable {
    pub labels: Vec<BasisTriple>,
    pub times: Vec<f64>,
    /// `rows[n][j]` is the population of `labels[j]` at `times[n]`.
    pub rows: Vec<Vec<f64>>,
}

impl PopulationTable {
    pub fn new(labels: Vec<BasisTriple>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidArgument("watchlist must not be empty".into()));
        }
        Ok(PopulationTable {
            labels,
            times: Vec::new(),
            rows: Vec::new(),
        })
    }

    pub fn record(&mut self, t: f64, psi: &StateVector) {
        self.times.push(t);
        self.rows
            .push(self.labels.iter().map(|&l| psi.population(l)).collect());
    }

    pub fn column(&self, label: BasisTriple) -> Option<Vec<f64>> {
        let j = self.labels.iter().position(|&l| l == label)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    /// `t,P_<label>,...`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        let mut header = vec!["t".to_string()];
        header.extend(self.labels.iter().map(|l| format!("P_{l}")));
        write_header(out, &header)?;
        for (t, row) in self.times.iter().zip(&self.rows) {
            write_row(out, std::iter::once(*t).chain(row.iter().copied()))?;
        }
        Ok(())
    }
}

pub fn populations_timeseries(
    traj: &Trajectory,
    watchlist: &[BasisTriple],
) -> Result<PopulationTable> {
    let mut table = PopulationTable::new(watchlist.to_vec())?;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        table.record(*t, s);
    }
    Ok(table)
}

/// Result of a single-channel transfer `|a b b> -> |b b a>`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransferOutcome {
    pub final_fidelity: f64,
    pub max_intermediate: f64,
    #[serde(serialize_with = "serialize_display")]
    pub intermediate: BasisTriple,
}

fn serialize_display<S: serde::Serializer>(
    t: &BasisTriple,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(t)
}

/// Intermediate state of the channel `|a b b> -> |b b a>`: `|b a b>` for a
/// single spin flip, `|0 b 0>` for a double one.
pub fn channel_intermediate(start: BasisTriple, target: BasisTriple) -> Result<BasisTriple> {
    if start.magnetization() != target.magnetization() {
        return Err(Error::SectorMismatch {
            from: start,
            to: target,
        });
    }
    let [a, b, c] = start.0;
    let unsupported = || {
        Error::InvalidArgument(format!(
            "{start} -> {target} is not a |abb> -> |bba> channel"
        ))
    };
    if a == b || b != c || target != BasisTriple([b, b, a]) {
        return Err(unsupported());
    }
    match (a.m() - b.m()).abs() {
        1 => Ok(BasisTriple([b, a, b])),
        2 => Ok(BasisTriple([SpinLabel::Zero, b, SpinLabel::Zero])),
        _ => Err(unsupported()),
    }
}

pub fn dsap_transfer(
    schedule: &PulseSchedule,
    start: BasisTriple,
    target: BasisTriple,
    n_steps: usize,
) -> Result<TransferOutcome> {
    let intermediate = channel_intermediate(start, target)?;
    let mut max_intermediate: f64 = 0.0;
    let end = propagate_with(schedule, &StateVector::product(start), n_steps, |_, s| {
        max_intermediate = max_intermediate.max(s.population(intermediate));
    })?;
    Ok(TransferOutcome {
        final_fidelity: end.state.population(target),
        max_intermediate,
        intermediate,
    })
}

/// State of sites 2 and 3 accompanying the transported qutrit.
#[derive(Clone, Debug, PartialEq)]
pub enum ChainState {
    UpUp,
    DownDown,
    /// `(|1 m> - |m 1>)/√2`.
    Singlet,
    /// `(|1 m> + |m 1>)/√2`.
    Triplet,
    /// `sin φ |1 1> - cos φ |m m>`.
    Entangled(f64),
    /// Amplitudes indexed by `3 * code(site 2) + code(site 3)`.
    Custom([C64; 9]),
}

impl ChainState {
    pub fn coefficients(&self) -> [C64; 9] {
        let mut c = [C64::from(0.0); 9];
        match *self {
            ChainState::UpUp => c[0] = C64::from(1.0),
            ChainState::DownDown => c[8] = C64::from(1.0),
            ChainState::Singlet => {
                c[2] = C64::from(FRAC_1_SQRT_2);
                c[6] = C64::from(-FRAC_1_SQRT_2);
            }
            ChainState::Triplet => {
                c[2] = C64::from(FRAC_1_SQRT_2);
                c[6] = C64::from(FRAC_1_SQRT_2);
            }
            ChainState::Entangled(phi) => {
                c[0] = C64::from(phi.sin());
                c[8] = C64::from(-phi.cos());
            }
            ChainState::Custom(v) => c = v,
        }
        c
    }

    pub fn label(&self) -> String {
        match self {
            ChainState::UpUp => "up_up".into(),
            ChainState::DownDown => "down_down".into(),
            ChainState::Singlet => "singlet".into(),
            ChainState::Triplet => "triplet".into(),
            ChainState::Entangled(phi) => format!("entangled({phi:?})"),
            ChainState::Custom(_) => "custom".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QutritTransferReport {
    /// `(α, β, γ)` as `[re, im]` pairs.
    pub input_coeffs: [[f64; 2]; 3],
    pub chain_state_spec: String,
    pub t_max: f64,
    pub n_steps: usize,
    pub fidelity_raw: f64,
    pub fidelity_phase_corrected: f64,
    /// Phase-corrected fidelity for `|1>`, `|0>`, `|m>` alone.
    pub per_component_transfer: [f64; 3],
}

fn check_normalized(v: &[C64]) -> Result<()> {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (n - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized(n));
    }
    Ok(())
}

/// `|a b c> -> |b c a>`: moves the site-1 qutrit to site 3.
fn permute_to_end(v: &DVector<C64>) -> DVector<C64> {
    let mut out = DVector::zeros(DIM);
    for (i, z) in v.iter().enumerate() {
        let (a, b, c) = (i / 9, (i / 3) % 3, i % 3);
        out[9 * b + 3 * c + a] = *z;
    }
    out
}

/// Symmetric and antisymmetric parts of a two-site state under exchange.
fn exchange_parts(chain: &[C64; 9]) -> ([C64; 9], [C64; 9]) {
    let mut sym = [C64::from(0.0); 9];
    let mut anti = [C64::from(0.0); 9];
    for b in 0..3 {
        for c in 0..3 {
            let (x, y) = (chain[3 * b + c], chain[3 * c + b]);
            sym[3 * b + c] = 0.5 * (x + y);
            anti[3 * b + c] = 0.5 * (x - y);
        }
    }
    (sym, anti)
}

/// Sign acquired by the qutrit component `q` (codes of `1`, `0`, `m`) along
/// the adiabatic channels, for a chain part of the given exchange parity.
fn transport_sign(q: usize, parity: f64) -> f64 {
    if q == 1 {
        -1.0
    } else {
        parity
    }
}

/// Ideal final state: the chain state on sites 1, 2, the qutrit on site 3,
/// with the channel signs applied per exchange-parity component.
pub fn qutrit_target(coeffs: &[C64; 3], chain: &[C64; 9]) -> StateVector {
    let (sym, anti) = exchange_parts(chain);
    let mut target = DVector::zeros(DIM);
    for (part, parity) in [(sym, 1.0), (anti, -1.0)] {
        let signed: [C64; 3] = std::array::from_fn(|q| coeffs[q] * transport_sign(q, parity));
        target += StateVector::qutrit_on_chain(&signed, &part).amplitudes();
    }
    StateVector::from_dvector(permute_to_end(&target))
}

/// Transports the site-1 qutrit `α|1> + β|0> + γ|m>` across the chain.
///
/// One propagation per qutrit basis state; the final state is assembled by
/// linearity. The phase-corrected fidelity removes `exp(-i m ∫B dt)` from each
/// magnetization sector before taking the overlap with [`qutrit_target`].
pub fn qutrit_transport(
    coeffs: [C64; 3],
    chain: &ChainState,
    schedule: &PulseSchedule,
    n_steps: usize,
) -> Result<QutritTransferReport> {
    check_normalized(&coeffs)?;
    let chain_coeffs = chain.coefficients();
    check_normalized(&chain_coeffs)?;
    let mut final_state = DVector::<C64>::zeros(DIM);
    let mut zeeman_integral = 0.0;
    let mut per_component = [0.0; 3];
    for q in 0..3 {
        let mut unit = [C64::from(0.0); 3];
        unit[q] = C64::from(1.0);
        let end = propagate_with(
            schedule,
            &StateVector::qutrit_on_chain(&unit, &chain_coeffs),
            n_steps,
            |_, _| {},
        )?;
        zeeman_integral = end.zeeman_integral;
        let corrected = end.state.with_sector_phases(|m| m as f64 * zeeman_integral);
        per_component[q] = qutrit_target(&unit, &chain_coeffs)
            .inner(&corrected)
            .norm_sqr();
        final_state += end.state.amplitudes() * coeffs[q];
    }
    let psi = StateVector::from_dvector(final_state);
    let target = qutrit_target(&coeffs, &chain_coeffs);
    let corrected = psi.with_sector_phases(|m| m as f64 * zeeman_integral);
    Ok(QutritTransferReport {
        input_coeffs: coeffs.map(|z| [z.re, z.im]),
        chain_state_spec: chain.label(),
        t_max: schedule.t_max(),
        n_steps,
        fidelity_raw: target.inner(&psi).norm_sqr(),
        fidelity_phase_corrected: target.inner(&corrected).norm_sqr(),
        per_component_transfer: per_component,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::total_magnetization_operator;

    fn ket(s: &str) -> BasisTriple {
        s.parse().unwrap()
    }

    fn ci(t_max: f64) -> PulseSchedule {
        PulseSchedule::counter_intuitive(t_max, 0.2, 1.0).unwrap()
    }

    #[test]
    fn pure_zeeman_is_a_phase() {
        let sched = PulseSchedule::constant(10.0, 0.0, 0.0, 1.0).unwrap();
        let traj = propagate(&sched, &StateVector::product(ket("011")), 50).unwrap();
        let expected = StateVector::product(ket("011")).scale(C64::from_polar(1.0, -20.0));
        assert!(traj.final_state().distance(&expected) < 1e-12);
        assert!((traj.zeeman_integral - 10.0).abs() < 1e-12);
    }

    #[test]
    fn fully_polarized_state_is_stationary() {
        let traj = propagate(&ci(100.0), &StateVector::product(ket("111")), 200).unwrap();
        assert!(traj
            .states
            .iter()
            .all(|s| (s.population(ket("111")) - 1.0).abs() < 1e-12));
    }

    #[test]
    fn input_validation() {
        let sched = ci(10.0);
        assert!(propagate(&sched, &StateVector::product(ket("011")), 0).is_err());
        let bad = StateVector::product(ket("011")).scale(C64::from(2.0));
        assert!(matches!(
            propagate(&sched, &bad, 10),
            Err(Error::NotNormalized(_))
        ));
        assert!(PopulationTable::new(vec![]).is_err());
    }

    #[test]
    fn unitarity_and_magnetization() {
        let psi0 = StateVector::from_terms(&[
            (ket("011"), C64::new(0.3, 0.1)),
            (ket("m11"), C64::new(-0.5, 0.2)),
            (ket("0m0"), C64::new(0.1, -0.4)),
        ])
        .unwrap();
        let jz = total_magnetization_operator();
        let m0 = psi0.expectation(&jz);
        let traj = propagate(&ci(100.0), &psi0, 500).unwrap();
        for s in &traj.states {
            assert!((s.norm() - 1.0).abs() <= 1e-9);
            assert!((s.expectation(&jz) - m0).abs() <= 1e-9);
        }
    }

    #[test]
    fn population_table_rows() {
        let traj = propagate(&ci(100.0), &StateVector::product(ket("011")), 400).unwrap();
        let watch = [ket("011"), ket("101"), ket("110")];
        let table = populations_timeseries(&traj, &watch).unwrap();
        assert_eq!(table.rows[0], vec![1.0, 0.0, 0.0]);
        for row in &table.rows {
            assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,P_011,P_101,P_110\n0.0,1.0,0.0,0.0\n"));
        assert_eq!(text.lines().count(), 402);
    }

    #[test]
    fn amplitude_dump() {
        let traj = propagate(&ci(1.0), &StateVector::product(ket("011")), 2).unwrap();
        let mut buf = Vec::new();
        traj.write_amplitudes_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header.split(',').count(), 1 + 2 * DIM);
        assert!(header.ends_with("re_26,im_26"));
    }

    #[test]
    fn channel_intermediates() {
        assert_eq!(
            channel_intermediate(ket("011"), ket("110")).unwrap(),
            ket("101")
        );
        assert_eq!(
            channel_intermediate(ket("m11"), ket("11m")).unwrap(),
            ket("010")
        );
        assert_eq!(
            channel_intermediate(ket("0mm"), ket("mm0")).unwrap(),
            ket("m0m")
        );
        assert!(matches!(
            channel_intermediate(ket("011"), ket("11m")),
            Err(Error::SectorMismatch { .. })
        ));
        assert!(channel_intermediate(ket("101"), ket("110")).is_err());
    }

    #[test]
    fn mirrored_channel_has_equal_fidelity() {
        let sched = ci(100.0);
        let up = dsap_transfer(&sched, ket("011"), ket("110"), 2000).unwrap();
        let down = dsap_transfer(&sched, ket("0mm"), ket("mm0"), 2000).unwrap();
        assert!((up.final_fidelity - down.final_fidelity).abs() <= 1e-9);
        assert!((up.max_intermediate - down.max_intermediate).abs() <= 1e-9);
    }

    #[test]
    fn chain_state_coefficients_normalized() {
        for c in [
            ChainState::UpUp,
            ChainState::DownDown,
            ChainState::Singlet,
            ChainState::Triplet,
            ChainState::Entangled(0.3),
        ] {
            let n: f64 = c.coefficients().iter().map(|z| z.norm_sqr()).sum();
            assert!((n - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn target_moves_qutrit_to_site_three() {
        let one = C64::from(1.0);
        let zero = C64::from(0.0);
        let up = ChainState::UpUp.coefficients();
        let t = qutrit_target(&[zero, one, zero], &up);
        assert_eq!(t.amplitude(ket("110")), -one);
        let t = qutrit_target(&[zero, zero, one], &up);
        assert_eq!(t.amplitude(ket("11m")), one);
        let singlet = ChainState::Singlet.coefficients();
        let t = qutrit_target(&[one, zero, zero], &singlet);
        assert!((t.amplitude(ket("1m1")) + C64::from(FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!((t.amplitude(ket("m11")) - C64::from(FRAC_1_SQRT_2)).norm() < 1e-15);
    }

    #[test]
    fn polarized_qutrit_is_exact() {
        let r = qutrit_transport(
            [C64::from(1.0), C64::from(0.0), C64::from(0.0)],
            &ChainState::UpUp,
            &ci(100.0),
            100,
        )
        .unwrap();
        assert!((r.fidelity_raw - 1.0).abs() < 1e-12);
        assert!((r.fidelity_phase_corrected - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_component_reduces_to_channel_transfer() {
        let sched = ci(100.0);
        let r = qutrit_transport(
            [C64::from(0.0), C64::from(1.0), C64::from(0.0)],
            &ChainState::UpUp,
            &sched,
            1000,
        )
        .unwrap();
        let d = dsap_transfer(&sched, ket("011"), ket("110"), 1000).unwrap();
        assert!((r.fidelity_raw - d.final_fidelity).abs() <= 1e-12);
        assert!((r.per_component_transfer[1] - d.final_fidelity).abs() <= 1e-12);
    }

    #[test]
    fn qutrit_coefficients_validated() {
        let r = qutrit_transport([C64::from(1.0); 3], &ChainState::UpUp, &ci(10.0), 10);
        assert!(matches!(r, Err(Error::NotNormalized(_))));
    }

    #[test]
    fn report_serializes() {
        let r = qutrit_transport(
            [C64::from(1.0), C64::from(0.0), C64::from(0.0)],
            &ChainState::Singlet,
            &ci(10.0),
            10,
        )
        .unwrap();
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"chain_state_spec\":\"singlet\""));
        assert!(json.contains("\"per_component_transfer\""));
    }
}
