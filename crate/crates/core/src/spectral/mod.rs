//! Instantaneous eigensystems, continuity tracking across a schedule, the
//! closed-form eigenstates of the counter-intuitive protocol and adiabaticity
//! measures.

mod adiabaticity;
mod analytic;

pub use adiabaticity::{
    adiabaticity_a2_closed, adiabaticity_numeric, midpoint_adiabaticities, nearest_outside_cluster,
    StateSelector,
};
pub use analytic::{analytic_d0, analytic_d1, analytic_d2, d2_energies, D1States, D2Branch};

use std::io::Write;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::hamiltonian::PulseSchedule;
use crate::linalg::hermitian_eigen;
use crate::output::{write_header, write_row};
use crate::spin::{magnetization_of, sector_indices, Operator, StateVector, C64, DIM, SECTORS};

/// Eigenvalues closer than this form one degenerate cluster.
pub const DEGENERACY_GAP: f64 = 1e-9;

/// Matched overlaps below this are reported as tracking diagnostics.
pub const TRACKING_WARN_OVERLAP: f64 = 0.9;

/// Full eigensystem of the Hamiltonian at one time.
#[derive(Clone, Debug)]
pub struct SpectralFrame {
    pub t: f64,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<StateVector>,
    /// Magnetization sector of each eigenvector.
    pub m_labels: Vec<i32>,
}

impl SpectralFrame {
    /// Frame indices in sector `m`, ascending in energy.
    pub fn sector_levels(&self, m: i32) -> Vec<usize> {
        (0..self.eigenvalues.len())
            .filter(|&k| self.m_labels[k] == m)
            .collect()
    }

    /// Sector-`m` indices grouped into degenerate clusters.
    pub fn clusters(&self, m: i32) -> Vec<Vec<usize>> {
        group_clusters(&self.sector_levels(m), &self.eigenvalues)
    }

    pub fn sector_eigenvalues(&self, m: i32) -> Vec<f64> {
        self.sector_levels(m)
            .iter()
            .map(|&k| self.eigenvalues[k])
            .collect()
    }
}

fn group_clusters(levels: &[usize], energies: &[f64]) -> Vec<Vec<usize>> {
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &k in levels {
        match clusters.last_mut() {
            Some(c) if energies[k] - energies[*c.last().unwrap()] < DEGENERACY_GAP => c.push(k),
            _ => clusters.push(vec![k]),
        }
    }
    clusters
}

/// Multiplies `v` by the phase that makes its largest component real and
/// positive (the first such component on ties).
fn fix_phase(v: &mut DVector<C64>) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-12))
        .unwrap();
    let phase = v[pivot].conj() / v[pivot].norm();
    v.iter_mut().for_each(|z| *z *= phase);
}

pub fn eigensystem(h: &Operator, t: f64) -> Result<SpectralFrame> {
    let defect = h.hermiticity_defect();
    if defect > 1e-12 * h.max_abs().max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    let mut pairs: Vec<(f64, i32, DVector<C64>)> = Vec::with_capacity(DIM);
    if h.sector_leakage() == 0.0 {
        for m in SECTORS {
            let idx = sector_indices(m);
            let (values, vectors) = hermitian_eigen(&h.block(&idx));
            for (k, &e) in values.iter().enumerate() {
                let mut v = DVector::zeros(DIM);
                for (r, &i) in idx.iter().enumerate() {
                    v[i] = vectors[(r, k)];
                }
                pairs.push((e, m, v));
            }
        }
    } else {
        let (values, vectors) = hermitian_eigen(h.matrix());
        for (k, &e) in values.iter().enumerate() {
            let v: DVector<C64> = vectors.column(k).into_owned();
            pairs.push((e, dominant_sector(&v), v));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut frame = SpectralFrame {
        t,
        eigenvalues: Vec::with_capacity(DIM),
        eigenvectors: Vec::with_capacity(DIM),
        m_labels: Vec::with_capacity(DIM),
    };
    for (e, m, mut v) in pairs {
        fix_phase(&mut v);
        frame.eigenvalues.push(e);
        frame.eigenvectors.push(StateVector::from_dvector(v));
        frame.m_labels.push(m);
    }
    Ok(frame)
}

fn dominant_sector(v: &DVector<C64>) -> i32 {
    let mut weights = [0.0f64; 7];
    for (i, z) in v.iter().enumerate() {
        weights[(3 - magnetization_of(i)) as usize] += z.norm_sqr();
    }
    let best = (0..7).fold(0, |b, k| if weights[k] > weights[b] { k } else { b });
    SECTORS[best]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackingDiagnostic {
    pub frame: usize,
    pub curve: usize,
    pub overlap: f64,
}

/// Eigenvalue curves followed continuously through a sequence of frames.
///
/// Curve `k` starts at index `k` of the first frame; `assignment[n][k]` is its
/// index in frame `n`. Tracked frames hold eigenvectors re-oriented inside
/// degenerate clusters and phase-aligned with their predecessor.
#[derive(Clone, Debug)]
pub struct TrackedSpectrum {
    pub frames: Vec<SpectralFrame>,
    pub assignment: Vec<Vec<usize>>,
    pub diagnostics: Vec<TrackingDiagnostic>,
}

impl TrackedSpectrum {
    pub fn n_curves(&self) -> usize {
        self.frames.first().map_or(0, |f| f.eigenvalues.len())
    }

    pub fn times(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.t).collect()
    }

    pub fn curve_energies(&self, curve: usize) -> Vec<f64> {
        self.frames
            .iter()
            .zip(&self.assignment)
            .map(|(f, a)| f.eigenvalues[a[curve]])
            .collect()
    }

    pub fn curve_sector(&self, curve: usize) -> i32 {
        self.frames[0].m_labels[curve]
    }

    pub fn curve_state(&self, frame: usize, curve: usize) -> &StateVector {
        &self.frames[frame].eigenvectors[self.assignment[frame][curve]]
    }

    /// Curves of sector `m`, ordered by their starting energy.
    pub fn sector_curves(&self, m: i32) -> Vec<usize> {
        (0..self.n_curves())
            .filter(|&k| self.curve_sector(k) == m)
            .collect()
    }

    /// `t,E00,...,E26` in tracked order.
    pub fn write_energies_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        let mut header = vec!["t".to_string()];
        header.extend((0..self.n_curves()).map(|k| format!("E{k:02}")));
        write_header(out, &header)?;
        for (f, a) in self.frames.iter().zip(&self.assignment) {
            write_row(
                out,
                std::iter::once(f.t).chain(a.iter().map(|&i| f.eigenvalues[i])),
            )?;
        }
        Ok(())
    }

    /// `t,m00,...,m26` in tracked order.
    pub fn write_sectors_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        let mut header = vec!["t".to_string()];
        header.extend((0..self.n_curves()).map(|k| format!("m{k:02}")));
        write_header(out, &header)?;
        for (f, a) in self.frames.iter().zip(&self.assignment) {
            let labels: Vec<String> = a.iter().map(|&i| f.m_labels[i].to_string()).collect();
            writeln!(
                out,
                "{},{}",
                crate::output::fmt_float(f.t),
                labels.join(",")
            )?;
        }
        Ok(())
    }
}

pub fn track_eigenstates(schedule: &PulseSchedule, n_samples: usize) -> Result<TrackedSpectrum> {
    let frames = schedule
        .uniform_times(n_samples)?
        .into_iter()
        .map(|t| eigensystem(&schedule.hamiltonian_at(t)?, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(track_frames(frames))
}

/// Links successive frames by maximal overlap within each magnetization
/// sector (ties: lowest curve, then lowest frame index).
pub fn track_frames(mut frames: Vec<SpectralFrame>) -> TrackedSpectrum {
    let mut assignment: Vec<Vec<usize>> = Vec::with_capacity(frames.len());
    let mut diagnostics = Vec::new();
    if frames.is_empty() {
        return TrackedSpectrum {
            frames,
            assignment,
            diagnostics,
        };
    }
    let n = frames[0].eigenvalues.len();
    assignment.push((0..n).collect());
    let labels: Vec<i32> = frames[0].m_labels.clone();

    for step in 1..frames.len() {
        let (done, rest) = frames.split_at_mut(step);
        let prev_frame = &done[step - 1];
        let frame = &mut rest[0];
        let prev: Vec<DVector<C64>> = assignment[step - 1]
            .iter()
            .map(|&i| prev_frame.eigenvectors[i].amplitudes().clone())
            .collect();

        let sector_counts_match = SECTORS.iter().all(|&m| {
            labels.iter().filter(|&&l| l == m).count()
                == frame.m_labels.iter().filter(|&&l| l == m).count()
        });
        let groups: Vec<(Vec<usize>, Vec<usize>)> = if sector_counts_match {
            SECTORS
                .iter()
                .map(|&m| {
                    let curves = (0..n).filter(|&k| labels[k] == m).collect();
                    (curves, frame.sector_levels(m))
                })
                .collect()
        } else {
            vec![((0..n).collect(), (0..n).collect())]
        };

        let mut next = vec![usize::MAX; n];
        for (curves, levels) in groups {
            for cluster in group_clusters(&levels, &frame.eigenvalues) {
                if cluster.len() > 1 {
                    reorient_cluster(frame, &cluster, &curves, &prev);
                }
            }
            let mut candidates: Vec<(f64, usize, usize)> =
                Vec::with_capacity(curves.len() * levels.len());
            for &k in &curves {
                for &j in &levels {
                    let o = prev[k].dotc(frame.eigenvectors[j].amplitudes()).norm();
                    candidates.push((o, k, j));
                }
            }
            candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
            let mut used = vec![false; n];
            let mut assigned = vec![false; n];
            for (o, k, j) in candidates {
                if assigned[k] || used[j] {
                    continue;
                }
                assigned[k] = true;
                used[j] = true;
                next[k] = j;
                let inner = prev[k].dotc(frame.eigenvectors[j].amplitudes());
                if inner.norm() > 0.0 {
                    let phase = inner.conj() / inner.norm();
                    frame.eigenvectors[j] = frame.eigenvectors[j].scale(phase);
                }
                if o < TRACKING_WARN_OVERLAP {
                    diagnostics.push(TrackingDiagnostic {
                        frame: step,
                        curve: k,
                        overlap: o,
                    });
                }
            }
        }
        assignment.push(next);
    }
    TrackedSpectrum {
        frames,
        assignment,
        diagnostics,
    }
}

/// Replaces the eigenvectors of a degenerate cluster by the orthonormalized
/// projections of the previous frame's vectors that overlap it most.
fn reorient_cluster(
    frame: &mut SpectralFrame,
    cluster: &[usize],
    curves: &[usize],
    prev: &[DVector<C64>],
) {
    let basis: Vec<DVector<C64>> = cluster
        .iter()
        .map(|&j| frame.eigenvectors[j].amplitudes().clone())
        .collect();
    let project = |v: &DVector<C64>| -> DVector<C64> {
        basis
            .iter()
            .fold(DVector::zeros(DIM), |acc, b| acc + b * b.dotc(v))
    };
    let mut ranked: Vec<(f64, usize)> = curves
        .iter()
        .map(|&k| {
            (
                basis
                    .iter()
                    .map(|b| b.dotc(&prev[k]).norm_sqr())
                    .sum::<f64>(),
                k,
            )
        })
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let mut accepted: Vec<DVector<C64>> = Vec::with_capacity(cluster.len());
    let push_orthogonal = |mut v: DVector<C64>, accepted: &mut Vec<DVector<C64>>| {
        for a in accepted.iter() {
            let c = a.dotc(&v);
            v -= a * c;
        }
        let norm = v.norm();
        if norm > 1e-6 {
            accepted.push(v / C64::from(norm));
        }
    };
    let mut chosen: Vec<usize> = ranked.iter().take(cluster.len()).map(|&(_, k)| k).collect();
    chosen.sort_unstable();
    for k in chosen {
        push_orthogonal(project(&prev[k]), &mut accepted);
    }
    for b in &basis {
        if accepted.len() == cluster.len() {
            break;
        }
        push_orthogonal(b.clone(), &mut accepted);
    }
    for (&j, v) in cluster.iter().zip(accepted) {
        frame.eigenvectors[j] = StateVector::from_dvector(v);
    }
}
