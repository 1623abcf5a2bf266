//! Magic-angle dipolar control.
//!
//! The field follows `B = B_mag [cos phi, cot theta_m, sin phi]`, which keeps
//! the magic angle `theta_m = arccos(1/sqrt3)` to the y axis for every `phi`.
//! With the 1-3 ray placed along y the 1-3 dipolar coupling therefore
//! vanishes identically, while sweeping `phi` between the nulls of `d12` and
//! `d23` realizes a counter-intuitive sequence on the remaining two pairs.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::hamiltonian::{uniform_grid, CouplingSnapshot, PulseSchedule};
use crate::output::{write_header, write_row};

/// `arccos(1/sqrt3)`.
pub fn magic_angle() -> f64 {
    (1.0 / 3f64.sqrt()).acos()
}

fn cot_magic() -> f64 {
    // cos / sin of arccos(1/sqrt3) = (1/sqrt3) / sqrt(2/3)
    std::f64::consts::FRAC_1_SQRT_2
}

/// `d = (gamma_j gamma_k / r^3) (3 cos² theta - 1)`.
pub fn dipole_coupling(gamma_j: f64, gamma_k: f64, r_jk: f64, theta_jk: f64) -> Result<f64> {
    coupling_from_cos(gamma_j, gamma_k, r_jk, theta_jk.cos())
}

fn coupling_from_cos(gamma_j: f64, gamma_k: f64, r_jk: f64, cos_theta: f64) -> Result<f64> {
    if !(r_jk > 0.0) || !r_jk.is_finite() {
        return Err(Error::InvalidGeometry(format!(
            "separation must be positive, got {r_jk}"
        )));
    }
    Ok(gamma_j * gamma_k / r_jk.powi(3) * (3.0 * cos_theta * cos_theta - 1.0))
}

pub fn magic_field(phi: f64, b_mag: f64) -> Vector3<f64> {
    Vector3::new(phi.cos(), cot_magic(), phi.sin()) * b_mag
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairCouplings {
    pub d12: f64,
    pub d23: f64,
    pub d13: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DipoleGeometry {
    pub positions: [Vector3<f64>; 3],
    pub gammas: [f64; 3],
    pub field_magnitude: f64,
}

impl DipoleGeometry {
    /// Equilateral triangle of side `side` in the x-y plane with spin 1 at
    /// the origin, spin 3 at `(0, side, 0)` and spin 2 at
    /// `(sqrt3 side / 2, side / 2, 0)`.
    pub fn equilateral(side: f64, gamma: f64, field_magnitude: f64) -> Result<Self> {
        let geom = DipoleGeometry {
            positions: [
                Vector3::zeros(),
                Vector3::new(3f64.sqrt() * side / 2.0, side / 2.0, 0.0),
                Vector3::new(0.0, side, 0.0),
            ],
            gammas: [gamma; 3],
            field_magnitude,
        };
        geom.validate()?;
        Ok(geom)
    }

    /// Unit-side equilateral layout whose moments are scaled so the largest
    /// coupling on the counter-intuitive arc is `peak`, and whose field gives
    /// a Zeeman coefficient `gamma |B| = zeeman`.
    pub fn equilateral_with_peak(peak: f64, zeeman: f64) -> Result<Self> {
        if !(peak > 0.0) || !peak.is_finite() {
            return Err(Error::InvalidGeometry(format!(
                "peak coupling must be positive, got {peak}"
            )));
        }
        let unit = DipoleGeometry::equilateral(1.0, 1.0, 1.0)?;
        let (phi0, phi_max) = solve_endpoints(&unit)?;
        let unit_peak = arc_peak(&unit, phi0, phi_max)?;
        let gamma = (peak / unit_peak).sqrt();
        let field = zeeman / (gamma * magic_field(0.0, 1.0).norm());
        DipoleGeometry::equilateral(1.0, gamma, field)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self
            .positions
            .iter()
            .all(|p| p.iter().all(|x| x.is_finite()))
            && self.gammas.iter().all(|g| g.is_finite())
            && self.field_magnitude.is_finite();
        if !finite {
            return Err(Error::NonFinite("dipole geometry"));
        }
        for (j, k) in [(0, 1), (1, 2), (0, 2)] {
            if (self.positions[k] - self.positions[j]).norm() <= 0.0 {
                return Err(Error::InvalidGeometry(format!(
                    "spins {} and {} coincide",
                    j + 1,
                    k + 1
                )));
            }
        }
        Ok(())
    }

    fn ray(&self, j: usize, k: usize) -> Vector3<f64> {
        self.positions[k] - self.positions[j]
    }

    fn check_axis(&self) -> Result<()> {
        let r13 = self.ray(0, 2).normalize();
        if (r13.y.abs() - 1.0).abs() > 1e-12 {
            return Err(Error::AxisMismatch);
        }
        Ok(())
    }

    /// Mean moment, used for the Zeeman coefficient `gamma |B|`.
    pub fn mean_gamma(&self) -> f64 {
        self.gammas.iter().sum::<f64>() / 3.0
    }

    fn pair(&self, j: usize, k: usize, field_dir: &Vector3<f64>) -> Result<f64> {
        let ray = self.ray(j, k);
        let r = ray.norm();
        let cos = field_dir.dot(&ray) / r;
        coupling_from_cos(self.gammas[j], self.gammas[k], r, cos.clamp(-1.0, 1.0))
    }
}

/// Couplings for the field direction `magic_field(phi)`.
pub fn trajectory_couplings(geom: &DipoleGeometry, phi: f64) -> Result<PairCouplings> {
    geom.validate()?;
    geom.check_axis()?;
    let dir = magic_field(phi, 1.0).normalize();
    Ok(PairCouplings {
        d12: geom.pair(0, 1, &dir)?,
        d23: geom.pair(1, 2, &dir)?,
        d13: geom.pair(0, 2, &dir)?,
    })
}

const ROOT_SCAN: usize = 3600;

fn roots_on_circle(f: impl Fn(f64) -> Result<f64>) -> Result<Vec<f64>> {
    let step = TAU / ROOT_SCAN as f64;
    let mut roots = Vec::new();
    let mut prev = f(0.0)?;
    for k in 1..=ROOT_SCAN {
        let x = step * k as f64;
        let cur = f(x)?;
        if prev == 0.0 {
            roots.push(step * (k - 1) as f64);
        } else if prev.signum() != cur.signum() && cur != 0.0 {
            roots.push(bisect(&f, x - step, x, prev)?);
        }
        prev = cur;
    }
    Ok(roots)
}

fn bisect(f: &impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64, f_lo: f64) -> Result<f64> {
    let mut sign_lo = f_lo.signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid)?;
        if v == 0.0 {
            return Ok(mid);
        }
        if v.signum() == sign_lo {
            lo = mid;
            sign_lo = v.signum();
        } else {
            hi = mid;
        }
    }
    let (a, b) = (f(lo)?.abs(), f(hi)?.abs());
    Ok(if a <= b { lo } else { hi })
}

/// Signed arc length from `a` to `b` in direction `dir` (+1 or -1).
fn arc_length(a: f64, b: f64, dir: f64) -> f64 {
    (dir * (b - a)).rem_euclid(TAU)
}

fn strictly_inside(x: f64, start: f64, dir: f64, len: f64) -> bool {
    let s = arc_length(start, x, dir);
    s > 1e-9 && s < len - 1e-9
}

/// Angles `(phi0, phi_max)` where `d12` and `d23` vanish respectively.
///
/// Among all pairs of nulls, picks the shortest arc that contains no other
/// null of either coupling (so both stay single-signed along it); ties go to
/// the increasing direction, then to the smaller `phi0`. `phi_max` is
/// returned unwrapped so that `phi` sweeps linearly from `phi0` to `phi_max`.
pub fn solve_endpoints(geom: &DipoleGeometry) -> Result<(f64, f64)> {
    geom.validate()?;
    geom.check_axis()?;
    let d12 = |phi: f64| trajectory_couplings(geom, phi).map(|c| c.d12);
    let d23 = |phi: f64| trajectory_couplings(geom, phi).map(|c| c.d23);
    let zeros12 = roots_on_circle(d12)?;
    let zeros23 = roots_on_circle(d23)?;
    let all: Vec<f64> = zeros12.iter().chain(&zeros23).copied().collect();

    // (arc length, -direction, phi0, end root)
    let mut best: Option<(f64, f64, f64, f64)> = None;
    for &a in &zeros12 {
        for &b in &zeros23 {
            for dir in [1.0, -1.0] {
                let len = arc_length(a, b, dir);
                if len < 1e-9 || all.iter().any(|&z| strictly_inside(z, a, dir, len)) {
                    continue;
                }
                let key = (len, -dir, a, b);
                let better = best.is_none_or(|cur| (key.0, key.1, key.2) < (cur.0, cur.1, cur.2));
                if better {
                    best = Some(key);
                }
            }
        }
    }
    let (len, neg_dir, phi0, end) = best.ok_or(Error::NoCounterIntuitiveArc)?;
    // unwrap the end root so phi runs monotonically from phi0
    let unwrapped = phi0 - neg_dir * len;
    let phi_max = end + ((unwrapped - end) / TAU).round() * TAU;
    Ok((phi0, phi_max))
}

/// The endpoint cosines printed alongside the trajectory: `pi - X` for the
/// start and `X` for the end, with `X = cot theta_m sin(2pi/3) / (cos(2pi/3) - 1)`.
///
/// `X` equals `cos(phi_max)` of the solved arc; the start expression only
/// matches once read as an angle relation, `phi0 = pi - phi_max`.
pub fn printed_endpoint_cosines() -> (f64, f64) {
    let x = cot_magic() * (2.0 * PI / 3.0).sin() / ((2.0 * PI / 3.0).cos() - 1.0);
    (PI - x, x)
}

fn arc_peak(geom: &DipoleGeometry, phi0: f64, phi_max: f64) -> Result<f64> {
    let mut peak = 0.0f64;
    for k in 0..=1000 {
        let phi = phi0 + (phi_max - phi0) * k as f64 / 1000.0;
        let c = trajectory_couplings(geom, phi)?;
        peak = peak.max(c.d12.abs()).max(c.d23.abs());
    }
    Ok(peak)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ZeemanMode {
    /// `gamma |B|`, constant along the trajectory.
    #[default]
    ConstantMagnitude,
    /// `gamma B_z(t) = gamma B_mag sin phi(t)`.
    LabZProjection,
}

/// Linear sweep of the field angle between the two coupling nulls.
#[derive(Clone, Debug, PartialEq)]
pub struct MagicSweep {
    pub geometry: DipoleGeometry,
    pub phi0: f64,
    pub phi_max: f64,
    pub zeeman_mode: ZeemanMode,
}

impl MagicSweep {
    pub fn new(geometry: DipoleGeometry, zeeman_mode: ZeemanMode) -> Result<Self> {
        let (phi0, phi_max) = solve_endpoints(&geometry)?;
        Ok(MagicSweep {
            geometry,
            phi0,
            phi_max,
            zeeman_mode,
        })
    }

    pub fn phi_at(&self, t: f64, t_max: f64) -> f64 {
        if t >= t_max {
            return self.phi_max;
        }
        self.phi0 + (self.phi_max - self.phi0) * (t / t_max)
    }

    pub fn field_at(&self, t: f64, t_max: f64) -> Vector3<f64> {
        magic_field(self.phi_at(t, t_max), self.geometry.field_magnitude)
    }

    pub fn zeeman_at(&self, t: f64, t_max: f64) -> f64 {
        let gamma = self.geometry.mean_gamma();
        match self.zeeman_mode {
            ZeemanMode::ConstantMagnitude => {
                gamma * self.geometry.field_magnitude * magic_field(0.0, 1.0).norm()
            }
            ZeemanMode::LabZProjection => gamma * self.field_at(t, t_max).z,
        }
    }

    pub fn couplings_at(&self, t: f64, t_max: f64) -> PairCouplings {
        trajectory_couplings(&self.geometry, self.phi_at(t, t_max))
            .expect("geometry validated at construction")
    }

    pub fn snapshot(&self, t: f64, t_max: f64) -> CouplingSnapshot {
        let c = self.couplings_at(t, t_max);
        CouplingSnapshot::new(t, self.zeeman_at(t, t_max), c.d12, c.d23)
    }

    pub fn peak_coupling(&self) -> f64 {
        arc_peak(&self.geometry, self.phi0, self.phi_max)
            .expect("geometry validated at construction")
    }
}

pub fn magic_schedule(
    geom: &DipoleGeometry,
    t_max: f64,
    n_samples: usize,
    zeeman_mode: ZeemanMode,
) -> Result<PulseSchedule> {
    if n_samples < 2 {
        return Err(Error::InvalidArgument(format!(
            "n_samples must be >= 2, got {n_samples}"
        )));
    }
    PulseSchedule::dipole(t_max, MagicSweep::new(geom.clone(), zeeman_mode)?)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub phi: f64,
    pub field: Vector3<f64>,
    pub couplings: PairCouplings,
    pub zeeman: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MagicTrajectory {
    pub phi0: f64,
    pub phi_max: f64,
    pub theta_m: f64,
    pub samples: Vec<TrajectorySample>,
}

impl MagicTrajectory {
    /// CSV with header `t,phi,Bx,By,Bz,d12,d23,d13,B_coeff`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        write_header(
            out,
            &["t", "phi", "Bx", "By", "Bz", "d12", "d23", "d13", "B_coeff"],
        )?;
        for s in &self.samples {
            write_row(
                out,
                [
                    s.t,
                    s.phi,
                    s.field.x,
                    s.field.y,
                    s.field.z,
                    s.couplings.d12,
                    s.couplings.d23,
                    s.couplings.d13,
                    s.zeeman,
                ],
            )?;
        }
        Ok(())
    }
}

pub fn magic_trajectory(
    geom: &DipoleGeometry,
    t_max: f64,
    n_samples: usize,
    zeeman_mode: ZeemanMode,
) -> Result<MagicTrajectory> {
    let sweep = MagicSweep::new(geom.clone(), zeeman_mode)?;
    let samples = uniform_grid(t_max, n_samples)?
        .into_iter()
        .map(|t| TrajectorySample {
            t,
            phi: sweep.phi_at(t, t_max),
            field: sweep.field_at(t, t_max),
            couplings: sweep.couplings_at(t, t_max),
            zeeman: sweep.zeeman_at(t, t_max),
        })
        .collect();
    Ok(MagicTrajectory {
        phi0: sweep.phi0,
        phi_max: sweep.phi_max,
        theta_m: magic_angle(),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit() -> DipoleGeometry {
        DipoleGeometry::equilateral(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn coupling_formula() {
        assert_abs_diff_eq!(
            dipole_coupling(1.0, 1.0, 1.0, magic_angle()).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            dipole_coupling(1.0, 1.0, 1.0, 0.0).unwrap(),
            2.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            dipole_coupling(1.0, 1.0, 1.0, PI / 2.0).unwrap(),
            -1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            dipole_coupling(2.0, 3.0, 2.0, 0.0).unwrap(),
            1.5,
            epsilon = 1e-15
        );
        assert!(dipole_coupling(1.0, 1.0, 0.0, 0.0).is_err());
        assert!(dipole_coupling(1.0, 1.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn coupling_symmetry() {
        for k in 0..50 {
            let th = 0.03 * k as f64;
            let d = dipole_coupling(1.3, 0.7, 1.1, th).unwrap();
            assert_abs_diff_eq!(
                d,
                dipole_coupling(1.3, 0.7, 1.1, -th).unwrap(),
                epsilon = 1e-14
            );
            assert_abs_diff_eq!(
                d,
                dipole_coupling(1.3, 0.7, 1.1, PI - th).unwrap(),
                epsilon = 1e-14
            );
            assert_abs_diff_eq!(
                d,
                dipole_coupling(1.3, 0.7, 1.1, PI + th).unwrap(),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn field_on_magic_cone() {
        let f = magic_field(PI / 2.0, 2.0);
        assert_abs_diff_eq!(f.x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.y, 2.0 * std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(f.z, 2.0, epsilon = 1e-15);
        for phi in [0.0, 1.0, 2.0, 3.0] {
            let f = magic_field(phi, 1.7);
            let angle = (f.y / f.norm()).acos();
            assert_abs_diff_eq!(angle, 0.9553166181245093, epsilon = 1e-12);
            assert_abs_diff_eq!(f.norm(), 1.7 * 1.5f64.sqrt(), epsilon = 1e-14);
        }
    }

    #[test]
    fn d13_vanishes_everywhere() {
        let g = unit();
        for k in 0..720 {
            let c = trajectory_couplings(&g, TAU * k as f64 / 720.0).unwrap();
            assert!(c.d13.abs() <= 1e-12, "d13 = {}", c.d13);
        }
    }

    #[test]
    fn axis_mismatch() {
        let mut g = unit();
        g.positions[2] = Vector3::new(1.0, 0.0, 0.0);
        g.positions[1] = Vector3::new(0.5, 0.8, 0.0);
        assert!(matches!(
            trajectory_couplings(&g, 0.3),
            Err(Error::AxisMismatch)
        ));
        assert!(matches!(solve_endpoints(&g), Err(Error::AxisMismatch)));
    }

    #[test]
    fn coincident_spins_rejected() {
        let mut g = unit();
        g.positions[1] = g.positions[0];
        assert!(matches!(g.validate(), Err(Error::InvalidGeometry(_))));
    }

    #[test]
    fn endpoints() {
        let g = unit();
        let (phi0, phi_max) = solve_endpoints(&g).unwrap();
        // independent oracle: d12 = 0 needs B^.r12^ = 1/sqrt3 on the cone,
        // i.e. cos phi = 1/sqrt6; d23 = 0 needs cos phi = -1/sqrt6
        assert_abs_diff_eq!(phi0.cos(), 1.0 / 6f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(phi_max.cos(), -1.0 / 6f64.sqrt(), epsilon = 1e-12);
        assert!(phi_max > phi0);
        let start = trajectory_couplings(&g, phi0).unwrap();
        let end = trajectory_couplings(&g, phi_max).unwrap();
        assert!(start.d12.abs() <= 1e-12 && start.d23.abs() > 0.1);
        assert!(end.d23.abs() <= 1e-12 && end.d12.abs() > 0.1);
        assert!(start.d13.abs() <= 1e-12 && end.d13.abs() <= 1e-12);
        for k in 1..100 {
            let c = trajectory_couplings(&g, phi0 + (phi_max - phi0) * k as f64 / 100.0).unwrap();
            assert!(c.d12 < 0.0 && c.d23 < 0.0);
        }
    }

    #[test]
    fn printed_end_formula_matches_end_root() {
        let (phi0, phi_max) = solve_endpoints(&unit()).unwrap();
        let (start_expr, end_expr) = printed_endpoint_cosines();
        assert_abs_diff_eq!(end_expr, phi_max.cos(), epsilon = 1e-12);
        // the start expression is not a cosine at all (> 1); as an angle
        // relation it reads phi0 = pi - phi_max
        assert!(start_expr > 1.0);
        assert_abs_diff_eq!(phi0, PI - phi_max, epsilon = 1e-12);
    }

    #[test]
    fn mirror_symmetry_swaps_couplings() {
        let g = unit();
        let (phi0, phi_max) = solve_endpoints(&g).unwrap();
        let mid = 0.5 * (phi0 + phi_max);
        for k in 0..=20 {
            let delta = (phi_max - phi0) * 0.5 * k as f64 / 20.0;
            let a = trajectory_couplings(&g, mid - delta).unwrap();
            let b = trajectory_couplings(&g, mid + delta).unwrap();
            assert_abs_diff_eq!(a.d12.abs(), b.d23.abs(), epsilon = 1e-10);
            assert_abs_diff_eq!(a.d23.abs(), b.d12.abs(), epsilon = 1e-10);
        }
    }

    #[test]
    fn schedule_endpoints_and_zeeman() {
        let g = DipoleGeometry::equilateral_with_peak(0.2, 1.0).unwrap();
        let sched = magic_schedule(&g, 100.0, 201, ZeemanMode::ConstantMagnitude).unwrap();
        assert_abs_diff_eq!(sched.peak_coupling(), 0.2, epsilon = 1e-9);
        let s0 = sched.sample(0.0).unwrap();
        let s1 = sched.sample(100.0).unwrap();
        assert!(s0.d12.abs() <= 1e-12);
        assert!(s1.d23.abs() <= 1e-12);
        for t in sched.uniform_times(101).unwrap() {
            assert_abs_diff_eq!(sched.sample(t).unwrap().zeeman, 1.0, epsilon = 1e-12);
        }
        let lab = magic_schedule(&g, 100.0, 201, ZeemanMode::LabZProjection).unwrap();
        let mid = lab.sample(50.0).unwrap();
        // phi = pi/2 at the midpoint: B_z is the full magnitude B_mag
        assert_abs_diff_eq!(mid.zeeman, 1.0 / 1.5f64.sqrt(), epsilon = 1e-12);
        assert!(magic_schedule(&g, 100.0, 1, ZeemanMode::ConstantMagnitude).is_err());
    }

    #[test]
    fn trajectory_export() {
        let g = DipoleGeometry::equilateral_with_peak(0.2, 1.0).unwrap();
        let traj = magic_trajectory(&g, 10.0, 5, ZeemanMode::ConstantMagnitude).unwrap();
        assert_eq!(traj.samples.len(), 5);
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,phi,Bx,By,Bz,d12,d23,d13,B_coeff");
        assert_eq!(lines.count(), 5);
        for s in &traj.samples {
            assert!(s.couplings.d13.abs() <= 1e-12);
        }
    }
}
