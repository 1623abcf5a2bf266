//! Spin-one operators and the 27-dimensional three-site product space.
//!
//! Basis states are ordered lexicographically with site 1 most significant,
//! using the per-site code `|1> -> 0`, `|0> -> 1`, `|1bar> -> 2`. Under this
//! ordering `|111>` is index 0 and `|1bar 1bar 1bar>` is index 26.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Matrix3};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Dimension of the three-qutrit product space.
pub const DIM: usize = 27;

/// Total magnetization sectors, from `+3` down to `-3`.
pub const SECTORS: [i32; 7] = [3, 2, 1, 0, -1, -2, -3];

/// Tolerance on the norm of a physical state.
pub const NORM_TOL: f64 = 1e-9;

/// z-projection label of a single spin-one particle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpinLabel {
    /// `|1>`, m = +1
    Plus,
    /// `|0>`, m = 0
    Zero,
    /// `|1bar>`, m = -1
    Minus,
}

impl SpinLabel {
    pub const ALL: [SpinLabel; 3] = [SpinLabel::Plus, SpinLabel::Zero, SpinLabel::Minus];

    pub fn m(self) -> i32 {
        match self {
            SpinLabel::Plus => 1,
            SpinLabel::Zero => 0,
            SpinLabel::Minus => -1,
        }
    }

    /// Position in the single-site basis `(|1>, |0>, |1bar>)`.
    pub fn code(self) -> usize {
        match self {
            SpinLabel::Plus => 0,
            SpinLabel::Zero => 1,
            SpinLabel::Minus => 2,
        }
    }

    pub fn from_code(code: usize) -> Option<Self> {
        Self::ALL.get(code).copied()
    }

    pub fn from_m(m: i32) -> Option<Self> {
        match m {
            1 => Some(SpinLabel::Plus),
            0 => Some(SpinLabel::Zero),
            -1 => Some(SpinLabel::Minus),
            _ => None,
        }
    }

    /// Text token: `1`, `0` or `m` (for 1bar).
    pub fn token(self) -> char {
        match self {
            SpinLabel::Plus => '1',
            SpinLabel::Zero => '0',
            SpinLabel::Minus => 'm',
        }
    }

    pub fn from_token(c: char) -> Option<Self> {
        match c {
            '1' => Some(SpinLabel::Plus),
            '0' => Some(SpinLabel::Zero),
            'm' => Some(SpinLabel::Minus),
            _ => None,
        }
    }
}

/// A product basis state `|alpha, beta, gamma>` of the three sites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisTriple(pub [SpinLabel; 3]);

impl BasisTriple {
    pub fn new(site1: SpinLabel, site2: SpinLabel, site3: SpinLabel) -> Self {
        BasisTriple([site1, site2, site3])
    }

    pub fn index(self) -> usize {
        basis_index(self)
    }

    pub fn from_index(index: usize) -> Option<Self> {
        if index >= DIM {
            return None;
        }
        Some(index_to_triple(index))
    }

    /// All 27 triples in basis order.
    pub fn all() -> impl Iterator<Item = BasisTriple> {
        (0..DIM).map(index_to_triple)
    }

    pub fn magnetization(self) -> i32 {
        self.0.iter().map(|s| s.m()).sum()
    }

    /// Label at `site` (1-based).
    pub fn site(self, site: usize) -> Result<SpinLabel> {
        check_site(site)?;
        Ok(self.0[site - 1])
    }

    /// The triple with sites 1 and 3 exchanged.
    pub fn reversed(self) -> Self {
        let [a, b, c] = self.0;
        BasisTriple([c, b, a])
    }

    /// The triple with every projection negated.
    pub fn flipped(self) -> Self {
        let neg = |s: SpinLabel| SpinLabel::from_m(-s.m()).unwrap();
        let [a, b, c] = self.0;
        BasisTriple([neg(a), neg(b), neg(c)])
    }
}

impl fmt::Display for BasisTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in self.0 {
            write!(f, "{}", s.token())?;
        }
        Ok(())
    }
}

impl FromStr for BasisTriple {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let invalid = || Error::InvalidLabel(s.to_string());
        let labels: Vec<SpinLabel> = s
            .trim()
            .chars()
            .map(|c| SpinLabel::from_token(c).ok_or_else(invalid))
            .collect::<Result<_>>()?;
        match labels.as_slice() {
            [a, b, c] => Ok(BasisTriple([*a, *b, *c])),
            _ => Err(invalid()),
        }
    }
}

pub fn basis_index(triple: BasisTriple) -> usize {
    let [a, b, c] = triple.0;
    9 * a.code() + 3 * b.code() + c.code()
}

/// Inverse of [`basis_index`]. Panics if `index >= 27`.
pub fn index_to_triple(index: usize) -> BasisTriple {
    assert!(index < DIM, "basis index {index} out of range");
    let code = |c| SpinLabel::from_code(c).unwrap();
    BasisTriple([code(index / 9), code((index / 3) % 3), code(index % 3)])
}

/// Total magnetization of basis state `index`.
pub fn magnetization_of(index: usize) -> i32 {
    index_to_triple(index).magnetization()
}

/// Basis indices belonging to sector `m`, in ascending order.
pub fn sector_indices(m: i32) -> Vec<usize> {
    (0..DIM).filter(|&i| magnetization_of(i) == m).collect()
}

fn check_site(site: usize) -> Result<()> {
    if (1..=3).contains(&site) {
        Ok(())
    } else {
        Err(Error::SiteOutOfRange(site))
    }
}

/// Single-site spin-one operators in the basis `(|1>, |0>, |1bar>)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinOperators {
    pub jz: Matrix3<C64>,
    pub jplus: Matrix3<C64>,
    pub jminus: Matrix3<C64>,
}

pub fn spin1_operators() -> SpinOperators {
    let r2 = C64::new(std::f64::consts::SQRT_2, 0.0);
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let jz = Matrix3::from_diagonal(&nalgebra::Vector3::new(one, z, -one));
    // J+ |0> = sqrt2 |1>, J+ |1bar> = sqrt2 |0>
    let jplus = Matrix3::new(
        z, r2, z, //
        z, z, r2, //
        z, z, z,
    );
    let jminus = jplus.adjoint();
    SpinOperators { jz, jplus, jminus }
}

/// A 27x27 complex operator on the three-site space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator(DMatrix<C64>);

impl Operator {
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != DIM || m.ncols() != DIM {
            return Err(Error::DimensionMismatch {
                expected: DIM * DIM,
                got: m.len(),
            });
        }
        Ok(Operator(m))
    }

    pub fn zeros() -> Self {
        Operator(DMatrix::zeros(DIM, DIM))
    }

    pub fn identity() -> Self {
        Operator(DMatrix::identity(DIM, DIM))
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn get(&self, row: BasisTriple, col: BasisTriple) -> C64 {
        self.0[(row.index(), col.index())]
    }

    pub fn adjoint(&self) -> Self {
        Operator(self.0.adjoint())
    }

    /// Largest entrywise deviation `|H_ij - conj(H_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..DIM {
            for j in i..DIM {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn apply(&self, psi: &StateVector) -> StateVector {
        StateVector(&self.0 * &psi.0)
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        Operator(&self.0 * &other.0 - &other.0 * &self.0)
    }

    /// Largest entry connecting different magnetization sectors.
    pub fn sector_leakage(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..DIM {
            let mi = magnetization_of(i);
            for j in 0..DIM {
                if magnetization_of(j) != mi {
                    worst = worst.max(self.0[(i, j)].norm());
                }
            }
        }
        worst
    }

    /// Sub-matrix on the given basis indices.
    pub fn block(&self, indices: &[usize]) -> DMatrix<C64> {
        let n = indices.len();
        DMatrix::from_fn(n, n, |r, c| self.0[(indices[r], indices[c])])
    }
}

impl std::ops::Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator(&self.0 + &rhs.0)
    }
}

impl std::ops::Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator(&self.0 - &rhs.0)
    }
}

impl std::ops::Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator(&self.0 * &rhs.0)
    }
}

impl std::ops::Mul<&Operator> for f64 {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator(rhs.0.map(|z| z * self))
    }
}

/// Embeds a single-site operator at `site` (1-based; site 1 is the most
/// significant tensor factor).
pub fn embed_site_operator(op: &Matrix3<C64>, site: usize) -> Result<Operator> {
    check_site(site)?;
    let id = DMatrix::<C64>::identity(3, 3);
    let local = DMatrix::from_fn(3, 3, |r, c| op[(r, c)]);
    let factors: [&DMatrix<C64>; 3] = match site {
        1 => [&local, &id, &id],
        2 => [&id, &local, &id],
        _ => [&id, &id, &local],
    };
    Ok(Operator(
        factors[0].kronecker(factors[1]).kronecker(factors[2]),
    ))
}

/// `sum_i J_{z,i}`; diagonal with the total magnetization of each basis state.
pub fn total_magnetization_operator() -> Operator {
    let diag = DVector::from_fn(DIM, |i, _| C64::new(magnetization_of(i) as f64, 0.0));
    Operator(DMatrix::from_diagonal(&diag))
}

/// Amplitudes over the 27-state product basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(DVector<C64>);

impl StateVector {
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != DIM {
            return Err(Error::DimensionMismatch {
                expected: DIM,
                got: amplitudes.len(),
            });
        }
        if amplitudes
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite("state amplitudes"));
        }
        Ok(StateVector(DVector::from_vec(amplitudes)))
    }

    pub(crate) fn from_dvector(v: DVector<C64>) -> Self {
        debug_assert_eq!(v.len(), DIM);
        StateVector(v)
    }

    pub fn zeros() -> Self {
        StateVector(DVector::zeros(DIM))
    }

    pub fn product(triple: BasisTriple) -> Self {
        product_state(triple)
    }

    /// Builds a state from sparse `(triple, amplitude)` terms, then normalizes.
    pub fn from_terms(terms: &[(BasisTriple, C64)]) -> Result<Self> {
        let mut v = DVector::zeros(DIM);
        for &(t, a) in terms {
            v[t.index()] += a;
        }
        StateVector(v).normalized()
    }

    /// `(site-1 qutrit) ⊗ (two-site state on sites 2, 3)`.
    pub fn qutrit_on_chain(qutrit: &[C64; 3], chain: &[C64; 9]) -> Self {
        StateVector(DVector::from_fn(DIM, |i, _| qutrit[i / 9] * chain[i % 9]))
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn amplitude(&self, triple: BasisTriple) -> C64 {
        self.0[triple.index()]
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= NORM_TOL
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::NotNormalized(n));
        }
        Ok(StateVector(self.0.unscale(n)))
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.0.dotc(&other.0)
    }

    pub fn scale(&self, factor: C64) -> Self {
        StateVector(self.0.map(|z| z * factor))
    }

    pub fn population(&self, triple: BasisTriple) -> f64 {
        population(self, triple)
    }

    pub fn populations(&self) -> Vec<f64> {
        self.0.iter().map(|z| z.norm_sqr()).collect()
    }

    /// `<psi|O|psi>` (real part; exact for Hermitian `O`).
    pub fn expectation(&self, op: &Operator) -> f64 {
        self.0.dotc(&(&op.0 * &self.0)).re
    }

    pub fn magnetization(&self) -> f64 {
        self.0
            .iter()
            .enumerate()
            .map(|(i, z)| z.norm_sqr() * magnetization_of(i) as f64)
            .sum()
    }

    /// Probability weight in sector `m`.
    pub fn weight_in_sector(&self, m: i32) -> f64 {
        self.0
            .iter()
            .enumerate()
            .filter(|(i, _)| magnetization_of(*i) == m)
            .map(|(_, z)| z.norm_sqr())
            .sum()
    }

    /// Applies `exp(i * phase(m))` to each sector component.
    pub fn with_sector_phases(&self, phase: impl Fn(i32) -> f64) -> Self {
        StateVector(DVector::from_fn(DIM, |i, _| {
            self.0[i] * C64::from_polar(1.0, phase(magnetization_of(i)))
        }))
    }

    /// Distance `||self - other||`.
    pub fn distance(&self, other: &StateVector) -> f64 {
        (&self.0 - &other.0).norm()
    }
}

impl std::ops::Add for &StateVector {
    type Output = StateVector;
    fn add(self, rhs: &StateVector) -> StateVector {
        StateVector(&self.0 + &rhs.0)
    }
}

pub fn product_state(triple: BasisTriple) -> StateVector {
    let mut v = DVector::zeros(DIM);
    v[triple.index()] = C64::new(1.0, 0.0);
    StateVector(v)
}

/// `P_{alpha beta gamma} = |<alpha beta gamma|psi>|^2`.
pub fn population(psi: &StateVector, triple: BasisTriple) -> f64 {
    psi.0[triple.index()].norm_sqr()
}

/// Parses a comma separated list of basis labels such as `011,101,110`.
pub fn parse_label_list(s: &str) -> Result<Vec<BasisTriple>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(BasisTriple::from_str)
        .collect()
}
