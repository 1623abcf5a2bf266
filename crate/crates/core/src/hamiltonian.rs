//! The nearest-neighbour flip-flop Hamiltonian and the pulse schedules that
//! drive it.
//!
//! ```text
//! H = B sum_i Jz_i + s [ d12 (J1+ J2- + h.c.) + d23 (J2+ J3- + h.c.) ]
//! ```
//!
//! The prefactor `s` is set by [`CouplingConvention`]. With the default
//! [`CouplingConvention::MatrixElement`] (`s = 1/2`) every single flip-flop
//! matrix element equals the coupling itself, e.g. `<101|H|011> = d12`, which
//! reproduces `E = 2B ± (d/2) sqrt(3 + cos(2 pi t / t_max))` for the `m = 2`
//! manifold. [`CouplingConvention::OperatorCoefficient`] (`s = 1`) uses the
//! couplings as bare operator coefficients, doubling every matrix element.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::dipole::MagicSweep;
use crate::error::{Error, Result};
use crate::output::{write_header, write_row};
use crate::spin::{
    embed_site_operator, sector_indices, spin1_operators, total_magnetization_operator, Operator,
    SECTORS,
};

/// Couplings and Zeeman coefficient at one instant (energies in units of B).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingSnapshot {
    pub t: f64,
    pub zeeman: f64,
    pub d12: f64,
    pub d23: f64,
}

impl CouplingSnapshot {
    pub fn new(t: f64, zeeman: f64, d12: f64, d23: f64) -> Self {
        CouplingSnapshot {
            t,
            zeeman,
            d12,
            d23,
        }
    }

    fn check_finite(&self) -> Result<()> {
        if [self.t, self.zeeman, self.d12, self.d23]
            .iter()
            .all(|x| x.is_finite())
        {
            Ok(())
        } else {
            Err(Error::NonFinite("coupling snapshot"))
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CouplingConvention {
    /// Flip-flop matrix elements equal the couplings (`<101|H|011> = d12`).
    #[default]
    MatrixElement,
    /// Couplings multiply `J+J- + h.c.` directly (`<101|H|011> = 2 d12`).
    OperatorCoefficient,
}

impl CouplingConvention {
    fn prefactor(self) -> f64 {
        match self {
            CouplingConvention::MatrixElement => 0.5,
            CouplingConvention::OperatorCoefficient => 1.0,
        }
    }
}

struct Terms {
    zeeman: Operator,
    hop12: Operator,
    hop23: Operator,
}

fn terms() -> &'static Terms {
    static TERMS: OnceLock<Terms> = OnceLock::new();
    TERMS.get_or_init(|| {
        let ops = spin1_operators();
        let site = |op, s| embed_site_operator(op, s).expect("valid site");
        let flip_flop = |a: usize, b: usize| {
            let forward = &site(&ops.jplus, a) * &site(&ops.jminus, b);
            &forward + &forward.adjoint()
        };
        Terms {
            zeeman: total_magnetization_operator(),
            hop12: flip_flop(1, 2),
            hop23: flip_flop(2, 3),
        }
    })
}

/// Counter-intuitive sin²/cos² couplings `(d12, d23)` at time `t`.
pub fn ci_pulse(t: f64, t_max: f64, d: f64) -> Result<(f64, f64)> {
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(Error::InvalidSchedule(format!(
            "t_max must be positive, got {t_max}"
        )));
    }
    if !(0.0..=t_max).contains(&t) {
        return Err(Error::TimeOutOfRange { t, t_max });
    }
    let phase = std::f64::consts::PI * t / (2.0 * t_max);
    let (s, c) = phase.sin_cos();
    Ok((d * s * s, d * c * c))
}

pub fn build_hamiltonian(snap: &CouplingSnapshot) -> Result<Operator> {
    build_hamiltonian_with(snap, CouplingConvention::default())
}

pub fn build_hamiltonian_with(
    snap: &CouplingSnapshot,
    convention: CouplingConvention,
) -> Result<Operator> {
    snap.check_finite()?;
    let terms = terms();
    let s = convention.prefactor();
    let m = terms.zeeman.matrix() * nalgebra::Complex::from(snap.zeeman)
        + terms.hop12.matrix() * nalgebra::Complex::from(s * snap.d12)
        + terms.hop23.matrix() * nalgebra::Complex::from(s * snap.d23);
    Operator::from_matrix(m)
}

#[derive(Clone, Debug)]
pub enum PulseShape {
    /// `d12 = d sin²(pi t / 2 t_max)`, `d23 = d cos²(pi t / 2 t_max)` at
    /// constant Zeeman coefficient.
    CounterIntuitive { d: f64, zeeman: f64 },
    /// Linear interpolation between samples; the first sample is at `t = 0`
    /// and the last at `t_max`.
    Tabulated(Vec<CouplingSnapshot>),
    /// Magic-angle field sweep, see [`crate::dipole`].
    DipoleTrajectory(MagicSweep),
}

/// A time-parameterized coupling schedule on `[0, t_max]`.
#[derive(Clone, Debug)]
pub struct PulseSchedule {
    t_max: f64,
    shape: PulseShape,
    convention: CouplingConvention,
}

impl PulseSchedule {
    pub fn counter_intuitive(t_max: f64, d: f64, zeeman: f64) -> Result<Self> {
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::InvalidSchedule(format!(
                "t_max must be positive, got {t_max}"
            )));
        }
        if !d.is_finite() || !zeeman.is_finite() {
            return Err(Error::NonFinite("schedule parameters"));
        }
        Ok(PulseSchedule {
            t_max,
            shape: PulseShape::CounterIntuitive { d, zeeman },
            convention: CouplingConvention::default(),
        })
    }

    /// Time-independent couplings over `[0, t_max]`.
    pub fn constant(t_max: f64, d12: f64, d23: f64, zeeman: f64) -> Result<Self> {
        Self::tabulated(vec![
            CouplingSnapshot::new(0.0, zeeman, d12, d23),
            CouplingSnapshot::new(t_max, zeeman, d12, d23),
        ])
    }

    pub fn tabulated(samples: Vec<CouplingSnapshot>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidSchedule("need at least two samples".into()));
        }
        for s in &samples {
            s.check_finite()?;
        }
        if samples[0].t != 0.0 {
            return Err(Error::InvalidSchedule(format!(
                "first sample must be at t = 0, got {}",
                samples[0].t
            )));
        }
        if let Some(w) = samples.windows(2).find(|w| w[1].t <= w[0].t) {
            return Err(Error::InvalidSchedule(format!(
                "times must be strictly increasing ({} then {})",
                w[0].t, w[1].t
            )));
        }
        let t_max = samples.last().unwrap().t;
        Ok(PulseSchedule {
            t_max,
            shape: PulseShape::Tabulated(samples),
            convention: CouplingConvention::default(),
        })
    }

    /// Reads a table with header `t,d12,d23,B`.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["t", "d12", "d23", "B"] {
            return Err(Error::InvalidSchedule(format!(
                "expected header t,d12,d23,B, got {}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut samples = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            let field = |i: usize| -> Result<f64> {
                record[i].parse::<f64>().map_err(|_| {
                    Error::InvalidSchedule(format!(
                        "row {}: cannot parse {:?} as a number",
                        line + 2,
                        &record[i]
                    ))
                })
            };
            samples.push(CouplingSnapshot::new(
                field(0)?,
                field(3)?,
                field(1)?,
                field(2)?,
            ));
        }
        Self::tabulated(samples)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    pub(crate) fn dipole(t_max: f64, sweep: MagicSweep) -> Result<Self> {
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::InvalidSchedule(format!(
                "t_max must be positive, got {t_max}"
            )));
        }
        Ok(PulseSchedule {
            t_max,
            shape: PulseShape::DipoleTrajectory(sweep),
            convention: CouplingConvention::default(),
        })
    }

    pub fn with_convention(mut self, convention: CouplingConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn convention(&self) -> CouplingConvention {
        self.convention
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn shape(&self) -> &PulseShape {
        &self.shape
    }

    /// Largest `|d12|` or `|d23|` reached by the schedule.
    pub fn peak_coupling(&self) -> f64 {
        match &self.shape {
            PulseShape::CounterIntuitive { d, .. } => d.abs(),
            PulseShape::Tabulated(samples) => samples
                .iter()
                .map(|s| s.d12.abs().max(s.d23.abs()))
                .fold(0.0, f64::max),
            PulseShape::DipoleTrajectory(sweep) => sweep.peak_coupling(),
        }
    }

    pub fn sample(&self, t: f64) -> Result<CouplingSnapshot> {
        if !t.is_finite() || !(0.0..=self.t_max).contains(&t) {
            return Err(Error::TimeOutOfRange {
                t,
                t_max: self.t_max,
            });
        }
        match &self.shape {
            PulseShape::CounterIntuitive { d, zeeman } => {
                let (d12, d23) = ci_pulse(t, self.t_max, *d)?;
                Ok(CouplingSnapshot::new(t, *zeeman, d12, d23))
            }
            PulseShape::Tabulated(samples) => Ok(interpolate(samples, t)),
            PulseShape::DipoleTrajectory(sweep) => Ok(sweep.snapshot(t, self.t_max)),
        }
    }

    pub fn hamiltonian_at(&self, t: f64) -> Result<Operator> {
        build_hamiltonian_with(&self.sample(t)?, self.convention)
    }

    /// `n_samples` uniformly spaced times covering `[0, t_max]`.
    pub fn uniform_times(&self, n_samples: usize) -> Result<Vec<f64>> {
        uniform_grid(self.t_max, n_samples)
    }

    /// Writes `n_samples` rows of `t,d12,d23,B`, readable by
    /// [`PulseSchedule::from_csv_reader`].
    pub fn write_csv<W: Write>(&self, out: &mut W, n_samples: usize) -> Result<()> {
        write_header(out, &["t", "d12", "d23", "B"])?;
        for t in self.uniform_times(n_samples)? {
            let s = self.sample(t)?;
            write_row(out, [s.t, s.d12, s.d23, s.zeeman])?;
        }
        Ok(())
    }
}

pub fn hamiltonian_at(schedule: &PulseSchedule, t: f64) -> Result<Operator> {
    schedule.hamiltonian_at(t)
}

/// Real per-sector blocks of the three Hamiltonian terms, in `SECTORS` order.
struct SectorTerms {
    indices: Vec<Vec<usize>>,
    zeeman: Vec<DMatrix<f64>>,
    hop12: Vec<DMatrix<f64>>,
    hop23: Vec<DMatrix<f64>>,
}

fn sector_terms() -> &'static SectorTerms {
    static SECTOR_TERMS: OnceLock<SectorTerms> = OnceLock::new();
    SECTOR_TERMS.get_or_init(|| {
        let t = terms();
        let indices: Vec<Vec<usize>> = SECTORS.iter().map(|&m| sector_indices(m)).collect();
        let blocks = |op: &Operator| -> Vec<DMatrix<f64>> {
            indices
                .iter()
                .map(|idx| op.block(idx).map(|z| z.re))
                .collect()
        };
        SectorTerms {
            zeeman: blocks(&t.zeeman),
            hop12: blocks(&t.hop12),
            hop23: blocks(&t.hop23),
            indices,
        }
    })
}

/// Basis indices and real Hamiltonian block of every magnetization sector.
pub(crate) fn sector_blocks(
    snap: &CouplingSnapshot,
    convention: CouplingConvention,
) -> Result<Vec<(&'static [usize], DMatrix<f64>)>> {
    snap.check_finite()?;
    let st = sector_terms();
    let s = convention.prefactor();
    Ok((0..SECTORS.len())
        .map(|k| {
            let block = &st.zeeman[k] * snap.zeeman
                + &st.hop12[k] * (s * snap.d12)
                + &st.hop23[k] * (s * snap.d23);
            (st.indices[k].as_slice(), block)
        })
        .collect())
}

pub(crate) fn uniform_grid(t_max: f64, n_samples: usize) -> Result<Vec<f64>> {
    if n_samples < 2 {
        return Err(Error::InvalidArgument(format!(
            "n_samples must be >= 2, got {n_samples}"
        )));
    }
    let last = (n_samples - 1) as f64;
    Ok((0..n_samples)
        .map(|k| {
            if k + 1 == n_samples {
                t_max
            } else {
                t_max * k as f64 / last
            }
        })
        .collect())
}

fn interpolate(samples: &[CouplingSnapshot], t: f64) -> CouplingSnapshot {
    let hi = samples
        .partition_point(|s| s.t < t)
        .clamp(1, samples.len() - 1);
    let (a, b) = (&samples[hi - 1], &samples[hi]);
    let w = (t - a.t) / (b.t - a.t);
    let lerp = |x: f64, y: f64| (1.0 - w) * x + w * y;
    CouplingSnapshot::new(
        t,
        lerp(a.zeeman, b.zeeman),
        lerp(a.d12, b.d12),
        lerp(a.d23, b.d23),
    )
}
