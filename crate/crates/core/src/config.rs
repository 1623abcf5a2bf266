//! Experiment configuration: one `key = value` pair per line, `#` comments.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dipole::ZeemanMode;
use crate::error::{Error, Result};
use crate::evolution::ChainState;
use crate::hamiltonian::CouplingConvention;
use crate::spin::{parse_label_list, BasisTriple, C64, NORM_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Spectrum,
    Evolve,
    Qutrit,
    Dipole,
    Adiabaticity,
    /// Coupling schedule samples `t,d12,d23,B`.
    Schedule,
}

impl Mode {
    pub const ALL: [Mode; 6] = [
        Mode::Spectrum,
        Mode::Evolve,
        Mode::Qutrit,
        Mode::Dipole,
        Mode::Adiabaticity,
        Mode::Schedule,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Spectrum => "spectrum",
            Mode::Evolve => "evolve",
            Mode::Qutrit => "qutrit",
            Mode::Dipole => "dipole",
            Mode::Adiabaticity => "adiabaticity",
            Mode::Schedule => "schedule",
        }
    }

    fn default_output(self) -> &'static str {
        match self {
            Mode::Qutrit => "qutrit.json",
            Mode::Spectrum => "spectrum.csv",
            Mode::Evolve => "evolve.csv",
            Mode::Dipole => "dipole.csv",
            Mode::Adiabaticity => "adiabaticity.csv",
            Mode::Schedule => "schedule.csv",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config {
                key: "mode".into(),
                message: format!("unknown mode {s:?}"),
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScheduleKind {
    CounterIntuitive,
    /// Magic-angle sweep over a unit equilateral triangle with peak coupling
    /// `d` and Zeeman coefficient `B`.
    Magic,
    Tabulated(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub zeeman: f64,
    pub d: f64,
    pub t_max: f64,
    /// `None` selects [`crate::evolution::default_steps`].
    pub n_steps: Option<usize>,
    pub n_samples: usize,
    /// Evolve mode writes every `record_every`-th step (and the last one).
    pub record_every: usize,
    pub initial_state: BasisTriple,
    pub watchlist: Vec<BasisTriple>,
    pub chain_state: ChainState,
    pub qutrit_coeffs: [C64; 3],
    pub zeeman_mode: ZeemanMode,
    pub convention: CouplingConvention,
    pub schedule: ScheduleKind,
    pub output_path: PathBuf,
    pub schedule_out: Option<PathBuf>,
    pub dump_amplitudes: Option<PathBuf>,
}

const KEYS: [&str; 19] = [
    "record_every",
    "mode",
    "B",
    "d",
    "t_max",
    "n_steps",
    "n_samples",
    "initial_state",
    "watchlist",
    "chain_state",
    "chain_phi",
    "qutrit_coeffs",
    "zeeman_mode",
    "convention",
    "schedule",
    "schedule_file",
    "schedule_out",
    "dump_amplitudes",
    "output_path",
];

fn config_err(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

fn tokenize(document: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, raw) in document.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::ConfigSyntax {
            line: n + 1,
            message: format!("expected `key = value`, got {line:?}"),
        })?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(config_err(key, "unknown key"));
        }
        if map
            .insert(key.to_string(), value.trim().to_string())
            .is_some()
        {
            return Err(config_err(key, "duplicate key"));
        }
    }
    Ok(map)
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e: T::Err| config_err(key, format!("cannot parse {value:?}: {e}")))
}

fn positive(key: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(config_err(
            key,
            format!("must be positive and finite, got {x}"),
        ))
    }
}

fn label(key: &str, value: &str) -> Result<BasisTriple> {
    value
        .parse()
        .map_err(|_| config_err(key, format!("invalid label token {value:?}")))
}

fn complex_triple(value: &str) -> Result<[C64; 3]> {
    let key = "qutrit_coeffs";
    let parts: Vec<C64> = value
        .split(',')
        .map(|t| parse_value::<C64>(key, &t.trim().replace(' ', "")))
        .collect::<Result<_>>()?;
    let coeffs: [C64; 3] = parts
        .try_into()
        .map_err(|_| config_err(key, "expected three complex numbers"))?;
    let norm = coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(config_err(
            key,
            format!("coefficients are not normalized (norm = {norm})"),
        ));
    }
    Ok(coeffs)
}

impl ExperimentConfig {
    /// Parses a document that names its own mode.
    pub fn parse(document: &str) -> Result<Self> {
        Self::parse_with_mode(document, None, None)
    }

    /// Parses `document`, taking the mode from `mode` when given (a mode in
    /// the document must then agree). Relative `schedule_file` paths resolve
    /// against `base_dir`.
    pub fn parse_with_mode(
        document: &str,
        mode: Option<Mode>,
        base_dir: Option<&Path>,
    ) -> Result<Self> {
        let map = tokenize(document)?;
        let get = |k: &str| map.get(k).map(String::as_str);
        let doc_mode = get("mode").map(Mode::from_str).transpose()?;
        let mode = match (mode, doc_mode) {
            (Some(a), Some(b)) if a != b => {
                return Err(config_err(
                    "mode",
                    format!("command line says {a}, config says {b}"),
                ))
            }
            (Some(a), _) => a,
            (None, Some(b)) => b,
            (None, None) => return Err(Error::MissingMode),
        };

        let real = |k: &str, default: f64| -> Result<f64> {
            get(k).map_or(Ok(default), |v| parse_value(k, v))
        };
        let zeeman = real("B", 1.0)?;
        if !zeeman.is_finite() {
            return Err(config_err("B", "must be finite"));
        }
        let d = real("d", 0.2)?;
        if !d.is_finite() {
            return Err(config_err("d", "must be finite"));
        }
        let t_max = positive("t_max", real("t_max", 100.0)?)?;
        let n_steps = get("n_steps")
            .map(|v| parse_value::<usize>("n_steps", v))
            .transpose()?;
        if n_steps == Some(0) {
            return Err(config_err("n_steps", "must be at least 1"));
        }
        let n_samples =
            get("n_samples").map_or(Ok(201), |v| parse_value::<usize>("n_samples", v))?;
        if n_samples < 2 {
            return Err(config_err("n_samples", "must be at least 2"));
        }
        let record_every =
            get("record_every").map_or(Ok(1), |v| parse_value::<usize>("record_every", v))?;
        if record_every == 0 {
            return Err(config_err("record_every", "must be at least 1"));
        }
        let initial_state = label("initial_state", get("initial_state").unwrap_or("011"))?;
        let watchlist = match get("watchlist") {
            Some(v) => parse_label_list(v)
                .map_err(|_| config_err("watchlist", format!("invalid label token in {v:?}")))?,
            None => ["011", "101", "110"]
                .map(|l| l.parse().expect("valid label"))
                .to_vec(),
        };
        if watchlist.is_empty() {
            return Err(config_err("watchlist", "must not be empty"));
        }
        let chain_state = match get("chain_state").unwrap_or("up_up") {
            "up_up" => ChainState::UpUp,
            "down_down" => ChainState::DownDown,
            "singlet" => ChainState::Singlet,
            "triplet" => ChainState::Triplet,
            "entangled" => ChainState::Entangled(
                get("chain_phi")
                    .map(|v| parse_value::<f64>("chain_phi", v))
                    .transpose()?
                    .ok_or_else(|| {
                        config_err("chain_phi", "required for chain_state = entangled")
                    })?,
            ),
            other => {
                return Err(config_err(
                    "chain_state",
                    format!("unknown chain state {other:?}"),
                ))
            }
        };
        let qutrit_coeffs = match get("qutrit_coeffs") {
            Some(v) => complex_triple(v)?,
            None => [C64::from(1.0 / 3f64.sqrt()); 3],
        };
        let zeeman_mode = match get("zeeman_mode").unwrap_or("constant_magnitude") {
            "constant_magnitude" => ZeemanMode::ConstantMagnitude,
            "lab_z_projection" => ZeemanMode::LabZProjection,
            other => {
                return Err(config_err(
                    "zeeman_mode",
                    format!("unknown zeeman mode {other:?}"),
                ))
            }
        };
        let convention = match get("convention").unwrap_or("matrix_element") {
            "matrix_element" => CouplingConvention::MatrixElement,
            "operator_coefficient" => CouplingConvention::OperatorCoefficient,
            other => {
                return Err(config_err(
                    "convention",
                    format!("unknown convention {other:?}"),
                ))
            }
        };
        let schedule = match get("schedule").unwrap_or("ci") {
            "ci" => ScheduleKind::CounterIntuitive,
            "magic" => ScheduleKind::Magic,
            "tabulated" => {
                let file = get("schedule_file").ok_or_else(|| {
                    config_err("schedule_file", "required for schedule = tabulated")
                })?;
                let path = PathBuf::from(file);
                ScheduleKind::Tabulated(match base_dir {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path,
                })
            }
            other => {
                return Err(config_err(
                    "schedule",
                    format!("unknown schedule {other:?}"),
                ))
            }
        };
        if get("schedule_file").is_some() && !matches!(schedule, ScheduleKind::Tabulated(_)) {
            return Err(config_err(
                "schedule_file",
                "only used with schedule = tabulated",
            ));
        }
        let path = |k: &str| get(k).map(PathBuf::from);
        Ok(ExperimentConfig {
            mode,
            zeeman,
            d,
            t_max,
            n_steps,
            n_samples,
            record_every,
            initial_state,
            watchlist,
            chain_state,
            qutrit_coeffs,
            zeeman_mode,
            convention,
            schedule,
            output_path: path("output_path")
                .unwrap_or_else(|| PathBuf::from(mode.default_output())),
            schedule_out: path("schedule_out"),
            dump_amplitudes: path("dump_amplitudes"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_mode() {
        assert!(matches!(
            ExperimentConfig::parse(""),
            Err(Error::MissingMode)
        ));
        assert_eq!(
            ExperimentConfig::parse("# nothing\n")
                .unwrap_err()
                .to_string(),
            "missing mode"
        );
    }

    #[test]
    fn spectrum_defaults() {
        let c = ExperimentConfig::parse("mode = spectrum").unwrap();
        assert_eq!(c.mode, Mode::Spectrum);
        assert_eq!(
            (c.zeeman, c.d, c.t_max, c.n_samples),
            (1.0, 0.2, 100.0, 201)
        );
        assert_eq!(c.schedule, ScheduleKind::CounterIntuitive);
        assert_eq!(c.output_path, PathBuf::from("spectrum.csv"));
        assert_eq!(c.n_steps, None);
    }

    #[test]
    fn invalid_label_token() {
        let e = ExperimentConfig::parse("mode = evolve\ninitial_state = 0q1").unwrap_err();
        assert!(e.to_string().contains("invalid label token"), "{e}");
        assert!(e.to_string().contains("initial_state"));
        let e = ExperimentConfig::parse("mode = evolve\nwatchlist = 011,1x1").unwrap_err();
        assert!(e.to_string().contains("invalid label token"));
    }

    #[test]
    fn unknown_and_malformed() {
        let e = ExperimentConfig::parse("mode = evolve\nfoo = 1").unwrap_err();
        assert!(e.to_string().contains("`foo`"));
        assert!(matches!(
            ExperimentConfig::parse("mode evolve"),
            Err(Error::ConfigSyntax { line: 1, .. })
        ));
        assert!(ExperimentConfig::parse("mode = evolve\nmode = spectrum").is_err());
        assert!(ExperimentConfig::parse("mode = nonsense").is_err());
        assert!(ExperimentConfig::parse("mode = evolve\nt_max = -1").is_err());
        assert!(ExperimentConfig::parse("mode = evolve\nn_samples = 1").is_err());
    }

    #[test]
    fn qutrit_coefficients() {
        let c = ExperimentConfig::parse("mode = qutrit\nqutrit_coeffs = 0, 0.6+0.8i, 0").unwrap();
        assert_eq!(c.qutrit_coeffs[1], C64::new(0.6, 0.8));
        let e = ExperimentConfig::parse("mode = qutrit\nqutrit_coeffs = 1, 1, 0").unwrap_err();
        assert!(e.to_string().contains("not normalized"));
        assert!(ExperimentConfig::parse("mode = qutrit\nqutrit_coeffs = 1, 0").is_err());
    }

    #[test]
    fn chain_states() {
        let c = ExperimentConfig::parse("mode = qutrit\nchain_state = entangled\nchain_phi = 0.5")
            .unwrap();
        assert_eq!(c.chain_state, ChainState::Entangled(0.5));
        assert!(ExperimentConfig::parse("mode = qutrit\nchain_state = entangled").is_err());
        assert!(ExperimentConfig::parse("mode = qutrit\nchain_state = upup").is_err());
    }

    #[test]
    fn mode_override_and_paths() {
        let c = ExperimentConfig::parse_with_mode(
            "schedule = tabulated\nschedule_file = s.csv # comment",
            Some(Mode::Evolve),
            Some(Path::new("/cfg")),
        )
        .unwrap();
        assert_eq!(
            c.schedule,
            ScheduleKind::Tabulated(PathBuf::from("/cfg/s.csv"))
        );
        assert!(ExperimentConfig::parse("mode = evolve\nschedule_file = s.csv").is_err());
        assert!(
            ExperimentConfig::parse_with_mode("mode = spectrum", Some(Mode::Evolve), None).is_err()
        );
    }
}
