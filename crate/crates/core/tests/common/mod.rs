//! Independent reference implementations used as test oracles.
//!
//! The Hamiltonian here is assembled entry by entry from spin-one ladder
//! matrix elements on the basis labels, without Kronecker products, and the
//! dynamics are integrated with classical RK4 instead of exponentials.

#![allow(dead_code)]

use num_complex::Complex64 as C;

pub const DIM: usize = 27;

/// `m` of each site for basis index `i` (codes 0, 1, 2 map to m = 1, 0, -1).
pub fn site_ms(i: usize) -> [i32; 3] {
    [i / 9, (i / 3) % 3, i % 3].map(|c| 1 - c as i32)
}

pub fn index_of(ms: [i32; 3]) -> usize {
    let c = ms.map(|m| (1 - m) as usize);
    9 * c[0] + 3 * c[1] + c[2]
}

pub fn label_index(label: &str) -> usize {
    let ms: Vec<i32> = label
        .chars()
        .map(|ch| match ch {
            '1' => 1,
            '0' => 0,
            'm' => -1,
            _ => panic!("bad label {label}"),
        })
        .collect();
    index_of([ms[0], ms[1], ms[2]])
}

/// `<m+1|J+|m>` for spin one.
fn raise(m: i32) -> f64 {
    ((2 - m * (m + 1)) as f64).sqrt()
}

/// `<m-1|J-|m>` for spin one.
fn lower(m: i32) -> f64 {
    ((2 - m * (m - 1)) as f64).sqrt()
}

/// Sparse Hamiltonian `(row, col, value)` with flip-flop prefactor `s`.
pub fn sparse_hamiltonian(b: f64, d12: f64, d23: f64, s: f64) -> Vec<(usize, usize, f64)> {
    let mut entries = Vec::new();
    for i in 0..DIM {
        let ms = site_ms(i);
        entries.push((i, i, b * ms.iter().sum::<i32>() as f64));
        for (j, k, d) in [(0, 1, d12), (1, 2, d23)] {
            // J_j^+ J_k^- and its conjugate J_j^- J_k^+
            for dir in [1, -1] {
                let (mj, mk) = (ms[j], ms[k]);
                let (nj, nk) = (mj + dir, mk - dir);
                if nj.abs() > 1 || nk.abs() > 1 {
                    continue;
                }
                let amp = if dir == 1 {
                    raise(mj) * lower(mk)
                } else {
                    lower(mj) * raise(mk)
                };
                let mut out = ms;
                out[j] = nj;
                out[k] = nk;
                entries.push((index_of(out), i, s * d * amp));
            }
        }
    }
    entries
}

pub fn dense(entries: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; DIM]; DIM];
    for &(r, c, v) in entries {
        m[r][c] += v;
    }
    m
}

pub fn ci_couplings(t: f64, t_max: f64, d: f64) -> (f64, f64) {
    let x = std::f64::consts::PI * t / (2.0 * t_max);
    (d * x.sin().powi(2), d * x.cos().powi(2))
}

/// RK4 integration of `i dpsi/dt = H(t) psi`, calling `observe` after each
/// step. `couplings(t)` returns `(B, d12, d23)`.
pub fn rk4(
    couplings: impl Fn(f64) -> (f64, f64, f64),
    psi0: &[C],
    t_max: f64,
    n_steps: usize,
    mut observe: impl FnMut(f64, &[C]),
) -> Vec<C> {
    let zeeman = sparse_hamiltonian(1.0, 0.0, 0.0, 0.5);
    let hop12: Vec<_> = sparse_hamiltonian(0.0, 1.0, 0.0, 0.5)
        .into_iter()
        .filter(|e| e.2 != 0.0)
        .collect();
    let hop23: Vec<_> = sparse_hamiltonian(0.0, 0.0, 1.0, 0.5)
        .into_iter()
        .filter(|e| e.2 != 0.0)
        .collect();
    let dt = t_max / n_steps as f64;
    let rhs = |t: f64, psi: &[C], out: &mut Vec<C>| {
        let (b, d12, d23) = couplings(t);
        out.iter_mut().for_each(|z| *z = C::new(0.0, 0.0));
        for (terms, c) in [(&zeeman, b), (&hop12, d12), (&hop23, d23)] {
            for &(r, col, v) in terms.iter() {
                out[r] += psi[col] * (v * c);
            }
        }
        out.iter_mut().for_each(|z| *z *= C::new(0.0, -1.0));
    };
    let zero = vec![C::new(0.0, 0.0); DIM];
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (zero.clone(), zero.clone(), zero.clone(), zero.clone(), zero);
    let mut psi = psi0.to_vec();
    for k in 0..n_steps {
        let t = k as f64 * dt;
        rhs(t, &psi, &mut k1);
        for i in 0..DIM {
            tmp[i] = psi[i] + k1[i] * (dt / 2.0);
        }
        rhs(t + dt / 2.0, &tmp, &mut k2);
        for i in 0..DIM {
            tmp[i] = psi[i] + k2[i] * (dt / 2.0);
        }
        rhs(t + dt / 2.0, &tmp, &mut k3);
        for i in 0..DIM {
            tmp[i] = psi[i] + k3[i] * dt;
        }
        rhs(t + dt, &tmp, &mut k4);
        for i in 0..DIM {
            psi[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0);
        }
        observe(t + dt, &psi);
    }
    psi
}

pub fn basis(label: &str) -> Vec<C> {
    let mut v = vec![C::new(0.0, 0.0); DIM];
    v[label_index(label)] = C::new(1.0, 0.0);
    v
}

/// Final target population and maximum intermediate population along a
/// counter-intuitive run.
pub fn oracle_transfer(
    start: &str,
    target: &str,
    intermediate: &str,
    t_max: f64,
    n_steps: usize,
) -> (f64, f64) {
    let (it, ii) = (label_index(target), label_index(intermediate));
    let mut max_mid: f64 = 0.0;
    let psi = rk4(
        |t| {
            let (a, b) = ci_couplings(t, t_max, 0.2);
            (1.0, a, b)
        },
        &basis(start),
        t_max,
        n_steps,
        |_, psi| max_mid = max_mid.max(psi[ii].norm_sqr()),
    );
    (psi[it].norm_sqr(), max_mid)
}
