//! Dispatches an [`ExperimentConfig`] to the library and writes its outputs.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::{ExperimentConfig, Mode, ScheduleKind};
use crate::dipole::{magic_schedule, magic_trajectory, DipoleGeometry};
use crate::error::{Error, Result};
use crate::evolution::{
    default_steps, propagate, propagate_with, qutrit_transport, PopulationTable,
};
use crate::hamiltonian::PulseSchedule;
use crate::spectral::{
    adiabaticity_a2_closed, adiabaticity_numeric, track_eigenstates, StateSelector,
};
use crate::spin::StateVector;

/// Bundled example configurations, `(file name, contents)`.
pub const EXAMPLES: &[(&str, &str)] = &[
    (
        "pulse_sequence.cfg",
        include_str!("../examples/pulse_sequence.cfg"),
    ),
    (
        "spectrum_ci.cfg",
        include_str!("../examples/spectrum_ci.cfg"),
    ),
    ("dsap_m2.cfg", include_str!("../examples/dsap_m2.cfg")),
    ("dsap_m1.cfg", include_str!("../examples/dsap_m1.cfg")),
    (
        "magic_trajectory.cfg",
        include_str!("../examples/magic_trajectory.cfg"),
    ),
    (
        "spectrum_magic.cfg",
        include_str!("../examples/spectrum_magic.cfg"),
    ),
    (
        "qutrit_singlet.cfg",
        include_str!("../examples/qutrit_singlet.cfg"),
    ),
    (
        "adiabaticity_m2.cfg",
        include_str!("../examples/adiabaticity_m2.cfg"),
    ),
];

impl Error {
    /// Whether the error stems from the configuration rather than the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::MissingMode | Error::ConfigSyntax { .. } | Error::Config { .. }
        )
    }
}

/// Reads and parses a config file; relative schedule files resolve against
/// the config's directory.
pub fn load_config(path: &Path, mode: Option<Mode>) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
        key: "--config".into(),
        message: format!("{}: {e}", path.display()),
    })?;
    ExperimentConfig::parse_with_mode(&text, mode, path.parent())
}

pub fn build_schedule(cfg: &ExperimentConfig) -> Result<PulseSchedule> {
    let schedule = match &cfg.schedule {
        ScheduleKind::CounterIntuitive => {
            PulseSchedule::counter_intuitive(cfg.t_max, cfg.d, cfg.zeeman)?
        }
        ScheduleKind::Magic => {
            let geom = DipoleGeometry::equilateral_with_peak(cfg.d, cfg.zeeman)?;
            magic_schedule(&geom, cfg.t_max, cfg.n_samples, cfg.zeeman_mode)?
        }
        ScheduleKind::Tabulated(path) => PulseSchedule::from_csv_path(path)?,
    };
    Ok(schedule.with_convention(cfg.convention))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// `dir/stem_sectors.ext` next to `path`.
pub fn sectors_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map_or("spectrum".into(), |s| s.to_string_lossy().into_owned());
    let name = match path.extension() {
        Some(ext) => format!("{stem}_sectors.{}", ext.to_string_lossy()),
        None => format!("{stem}_sectors"),
    };
    path.with_file_name(name)
}

/// Runs the experiment and returns the files written.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let schedule = build_schedule(cfg)?;
    let n_steps = cfg
        .n_steps
        .unwrap_or_else(|| default_steps(schedule.t_max()));
    let out = cfg.output_path.clone();
    let mut written = Vec::new();

    if let Some(path) = &cfg.schedule_out {
        let mut w = create(path)?;
        schedule.write_csv(&mut w, cfg.n_samples)?;
        w.flush()?;
        written.push(path.clone());
    }

    match cfg.mode {
        Mode::Spectrum => {
            let tracked = track_eigenstates(&schedule, cfg.n_samples)?;
            let mut w = create(&out)?;
            tracked.write_energies_csv(&mut w)?;
            w.flush()?;
            let companion = sectors_path(&out);
            let mut w = create(&companion)?;
            tracked.write_sectors_csv(&mut w)?;
            w.flush()?;
            written.push(out);
            written.push(companion);
        }
        Mode::Evolve => {
            let psi0 = StateVector::product(cfg.initial_state);
            let mut table = PopulationTable::new(cfg.watchlist.clone())?;
            let keep = |k: usize| k.is_multiple_of(cfg.record_every) || k == n_steps;
            if let Some(dump) = &cfg.dump_amplitudes {
                let traj = propagate(&schedule, &psi0, n_steps)?;
                for (k, (t, s)) in traj.times.iter().zip(&traj.states).enumerate() {
                    if keep(k) {
                        table.record(*t, s);
                    }
                }
                let mut w = create(dump)?;
                traj.write_amplitudes_csv(&mut w)?;
                w.flush()?;
                written.push(dump.clone());
            } else {
                let mut k = 0;
                propagate_with(&schedule, &psi0, n_steps, |t, s| {
                    if keep(k) {
                        table.record(t, s);
                    }
                    k += 1;
                })?;
            }
            let mut w = create(&out)?;
            table.write_csv(&mut w)?;
            w.flush()?;
            written.push(out);
        }
        Mode::Qutrit => {
            let report = qutrit_transport(cfg.qutrit_coeffs, &cfg.chain_state, &schedule, n_steps)?;
            let mut w = create(&out)?;
            serde_json::to_writer_pretty(&mut w, &report).map_err(std::io::Error::from)?;
            writeln!(w)?;
            w.flush()?;
            written.push(out);
        }
        Mode::Dipole => {
            let geom = DipoleGeometry::equilateral_with_peak(cfg.d, cfg.zeeman)?;
            let traj = magic_trajectory(&geom, cfg.t_max, cfg.n_samples, cfg.zeeman_mode)?;
            let mut w = create(&out)?;
            traj.write_csv(&mut w)?;
            w.flush()?;
            written.push(out);
        }
        Mode::Adiabaticity => {
            if cfg.schedule != ScheduleKind::CounterIntuitive {
                return Err(Error::Config {
                    key: "schedule".into(),
                    message:
                        "adiabaticity mode compares against the closed form and needs schedule = ci"
                            .into(),
                });
            }
            let dark = StateSelector::Level { m: 2, level: 1 };
            let bright = StateSelector::Level { m: 2, level: 2 };
            let mut w = create(&out)?;
            writeln!(w, "t,A_numeric,A_closed_form")?;
            for t in schedule.uniform_times(cfg.n_samples)? {
                let a = adiabaticity_numeric(&schedule, t, &dark, &bright, None)?;
                crate::output::write_row(
                    &mut w,
                    [t, a, adiabaticity_a2_closed(t, cfg.t_max, cfg.d)],
                )?;
            }
            w.flush()?;
            written.push(out);
        }
        Mode::Schedule => {
            let mut w = create(&out)?;
            schedule.write_csv(&mut w, cfg.n_samples)?;
            w.flush()?;
            written.push(out);
        }
    }
    Ok(written)
}
