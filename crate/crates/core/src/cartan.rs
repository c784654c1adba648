//! Cartan projection of elements of a product of `SL(n, R)` factors.
//!
//! The projection of `g` is the vector of logarithms of its singular values,
//! in nonincreasing order, block by block. Singular values are read off the
//! eigenvalues of `g^T g`; the small ones are taken from the inverse instead,
//! where they are the large ones and carry full relative accuracy.

use nalgebra::DMatrix;
use rand::Rng;

use crate::chamber::{standard_normal, ChamberVector, RootSystem};
use crate::error::{Error, Result};

/// Entries beyond this size are treated as overflow.
pub const ENTRY_LIMIT: f64 = 1e150;

const DET_TOL: f64 = 1e-9;

/// Square integer matrix with overflow-checked arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExactMatrix {
    n: usize,
    entries: Vec<i128>,
}

impl ExactMatrix {
    /// Row-major entries.
    pub fn new(n: usize, entries: Vec<i128>) -> Self {
        assert_eq!(entries.len(), n * n, "expected {n}x{n} entries");
        Self { n, entries }
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1;
        }
        Self { n, entries }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[i128] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> i128 {
        self.entries[i * self.n + j]
    }

    pub fn checked_mul(&self, other: &Self) -> Option<Self> {
        let n = self.n;
        debug_assert_eq!(n, other.n);
        let mut entries = vec![0i128; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0i128;
                for k in 0..n {
                    acc = acc.checked_add(self.get(i, k).checked_mul(other.get(k, j))?)?;
                }
                entries[i * n + j] = acc;
            }
        }
        Some(Self { n, entries })
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn checked_det(&self) -> Option<i128> {
        let n = self.n;
        if n == 0 {
            return Some(1);
        }
        let mut a = self.entries.clone();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..n - 1 {
            if a[k * n + k] == 0 {
                let pivot = (k + 1..n).find(|&r| a[r * n + k] != 0);
                match pivot {
                    Some(r) => {
                        for c in 0..n {
                            a.swap(k * n + c, r * n + c);
                        }
                        sign = -sign;
                    }
                    None => return Some(0),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let t = a[i * n + j]
                        .checked_mul(a[k * n + k])?
                        .checked_sub(a[i * n + k].checked_mul(a[k * n + j])?)?;
                    a[i * n + j] = t / prev;
                }
            }
            prev = a[k * n + k];
        }
        sign.checked_mul(a[n * n - 1])
    }

    /// Inverse of a matrix with determinant `+-1`, via the adjugate.
    pub fn checked_unimodular_inverse(&self) -> Option<Self> {
        let n = self.n;
        let det = self.checked_det()?;
        if det != 1 && det != -1 {
            return None;
        }
        if n == 1 {
            return Some(Self::new(1, vec![det]));
        }
        let mut entries = vec![0i128; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut minor = Vec::with_capacity((n - 1) * (n - 1));
                for r in (0..n).filter(|&r| r != j) {
                    for c in (0..n).filter(|&c| c != i) {
                        minor.push(self.get(r, c));
                    }
                }
                let cof = Self::new(n - 1, minor).checked_det()?;
                let signed = if (i + j) % 2 == 0 { cof } else { -cof };
                entries[i * n + j] = signed.checked_mul(det)?;
            }
        }
        Some(Self { n, entries })
    }

    pub fn to_float(&self) -> DMatrix<f64> {
        DMatrix::from_row_iterator(self.n, self.n, self.entries.iter().map(|&x| x as f64))
    }
}

/// An element of `SL(n_1, R) x ... x SL(n_k, R)`, optionally with its exact
/// integer form and its inverse.
#[derive(Debug, Clone)]
pub struct GroupElement {
    factors: Vec<DMatrix<f64>>,
    inverse: Option<Vec<DMatrix<f64>>>,
    exact: Option<Vec<ExactMatrix>>,
}

impl GroupElement {
    pub fn new(factors: Vec<DMatrix<f64>>) -> Result<Self> {
        for (i, m) in factors.iter().enumerate() {
            if !m.is_square() || m.nrows() < 2 {
                return Err(Error::InvalidGenerators(format!(
                    "factor {i} is {}x{}, expected a square matrix of size >= 2",
                    m.nrows(),
                    m.ncols()
                )));
            }
            check_unimodular(i, m)?;
        }
        Ok(Self {
            factors,
            inverse: None,
            exact: None,
        })
    }

    /// Integer element; the float form and the inverse are derived exactly.
    pub fn from_exact(factors: Vec<ExactMatrix>) -> Result<Self> {
        let mut inverse = Vec::with_capacity(factors.len());
        for (i, m) in factors.iter().enumerate() {
            if m.size() < 2 {
                return Err(Error::InvalidGenerators(format!("factor {i} has size {}", m.size())));
            }
            let det = m.checked_det().ok_or_else(|| Error::Overflow { word: format!("det of factor {i}") })?;
            if det == 0 {
                return Err(Error::SingularMatrix { factor: i });
            }
            let inv = m
                .checked_unimodular_inverse()
                .ok_or(Error::NotUnimodular { factor: i, det: det as f64 })?;
            inverse.push(inv.to_float());
        }
        Ok(Self {
            factors: factors.iter().map(ExactMatrix::to_float).collect(),
            inverse: Some(inverse),
            exact: Some(factors),
        })
    }

    pub fn identity(sizes: &[usize]) -> Self {
        let factors: Vec<_> = sizes.iter().map(|&n| DMatrix::identity(n, n)).collect();
        Self {
            inverse: Some(factors.clone()),
            exact: Some(sizes.iter().map(|&n| ExactMatrix::identity(n)).collect()),
            factors,
        }
    }

    pub fn factors(&self) -> &[DMatrix<f64>] {
        &self.factors
    }

    pub fn exact(&self) -> Option<&[ExactMatrix]> {
        self.exact.as_deref()
    }

    pub fn carried_inverse(&self) -> Option<&[DMatrix<f64>]> {
        self.inverse.as_deref()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.factors.iter().map(|m| m.nrows()).collect()
    }

    /// The inverse element, swapping in the carried inverse when present.
    pub fn inverse(&self) -> Result<Self> {
        let inv = match &self.inverse {
            Some(inv) => inv.clone(),
            None => self
                .factors
                .iter()
                .enumerate()
                .map(|(i, m)| m.clone().lu().try_inverse().ok_or(Error::SingularMatrix { factor: i }))
                .collect::<Result<Vec<_>>>()?,
        };
        let exact = match &self.exact {
            Some(ex) => Some(
                ex.iter()
                    .map(|m| m.checked_unimodular_inverse())
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| Error::Overflow { word: "inverse".into() })?,
            ),
            None => None,
        };
        Ok(Self {
            factors: inv,
            inverse: Some(self.factors.clone()),
            exact,
        })
    }

    /// Product `self * other`. The exact form is dropped silently when it
    /// overflows `i128`; callers needing it check [`GroupElement::exact`].
    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.factors.len(), other.factors.len());
        let factors = self.factors.iter().zip(&other.factors).map(|(a, b)| a * b).collect();
        let inverse = match (&self.inverse, &other.inverse) {
            (Some(a), Some(b)) => Some(b.iter().zip(a).map(|(x, y)| x * y).collect()),
            _ => None,
        };
        let exact = match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => a
                .iter()
                .zip(b)
                .map(|(x, y)| x.checked_mul(y))
                .collect::<Option<Vec<_>>>(),
            _ => None,
        };
        Self {
            factors,
            inverse,
            exact,
        }
    }

    /// Largest absolute entry over all factors (and the carried inverse).
    pub fn max_abs_entry(&self) -> f64 {
        let m = |ms: &[DMatrix<f64>]| {
            ms.iter()
                .flat_map(|m| m.iter())
                .fold(0.0_f64, |acc, x| if x.is_finite() { acc.max(x.abs()) } else { f64::INFINITY })
        };
        let mut out = m(&self.factors);
        if let Some(inv) = &self.inverse {
            out = out.max(m(inv));
        }
        out
    }
}

fn check_unimodular(factor: usize, m: &DMatrix<f64>) -> Result<()> {
    // LU rather than nalgebra's cofactor formula, which cancels badly for
    // ill-conditioned 2x2..4x4 matrices.
    let det = m.clone().lu().determinant();
    if !det.is_finite() {
        return Err(Error::Overflow { word: format!("det of factor {factor}") });
    }
    if det == 0.0 {
        return Err(Error::SingularMatrix { factor });
    }
    // Rounding in the determinant grows with the Hadamard bound.
    let hadamard: f64 = m.column_iter().map(|c| c.norm()).product();
    if (det.abs() - 1.0).abs() > DET_TOL * hadamard.max(1.0) {
        return Err(Error::NotUnimodular { factor, det });
    }
    Ok(())
}

/// Logs of the singular values of one unimodular factor, nonincreasing.
fn log_singular_values(m: &DMatrix<f64>, inv: Option<&DMatrix<f64>>, factor: usize) -> Result<Vec<f64>> {
    let n = m.nrows();
    if n == 2 {
        // sigma_1 sigma_2 = 1 and sigma_1^2 + sigma_2^2 = |m|_F^2
        let f = m.norm_squared();
        let top = 0.5 * (0.5 * (f + ((f - 2.0).max(0.0) * (f + 2.0)).sqrt())).ln();
        return Ok(vec![top, -top]);
    }
    let owned;
    let inv = match inv {
        Some(inv) => inv,
        None => {
            owned = m.clone().lu().try_inverse().ok_or(Error::SingularMatrix { factor })?;
            &owned
        }
    };
    let half = n / 2;
    let top = top_log_singular_values(m, half);
    let bottom = top_log_singular_values(inv, half);
    let mut logs = Vec::with_capacity(n);
    logs.extend_from_slice(&top);
    if n % 2 == 1 {
        // the remaining value is fixed by |det| = 1
        logs.push(-(top.iter().sum::<f64>() - bottom.iter().sum::<f64>()));
    }
    logs.extend(bottom.iter().rev().map(|x| -x));
    logs.sort_by(|a, b| b.total_cmp(a));
    let mean = logs.iter().sum::<f64>() / n as f64;
    for x in &mut logs {
        *x -= mean;
    }
    Ok(logs)
}

// A direct SVD keeps an absolute error near eps * sigma_1; going through
// the Gram matrix would square the condition number.
fn top_log_singular_values(m: &DMatrix<f64>, k: usize) -> Vec<f64> {
    let mut vals: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    vals.iter().take(k).map(|&s| s.max(f64::MIN_POSITIVE).ln()).collect()
}

/// Cartan projection: per factor, log singular values in nonincreasing
/// order, recentered to trace zero, concatenated across factors.
pub fn cartan_projection(rs: &RootSystem, g: &GroupElement) -> Result<ChamberVector> {
    let sizes = g.sizes();
    if sizes != rs.descriptor().factors() {
        return Err(Error::DimensionMismatch {
            expected: rs.ambient_dim(),
            got: sizes.iter().sum(),
        });
    }
    if g.max_abs_entry() > ENTRY_LIMIT {
        return Err(Error::Overflow { word: "element".into() });
    }
    let mut out = Vec::with_capacity(rs.ambient_dim());
    // Unimodularity is checked when an element is built and preserved by
    // products, so it is not rechecked here: the float determinant of a
    // long product is pure cancellation noise.
    for (i, m) in g.factors.iter().enumerate() {
        let inv = g.inverse.as_ref().map(|v| &v[i]);
        out.extend(log_singular_values(m, inv, i)?);
    }
    Ok(ChamberVector::new(out))
}

/// `d(o, g o) = |mu(g)|`.
pub fn riemannian_length(rs: &RootSystem, g: &GroupElement) -> Result<f64> {
    Ok(rs.norm(&cartan_projection(rs, g)?))
}

/// A Haar-random special orthogonal matrix.
pub fn random_rotation<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| standard_normal(rng));
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

/// `k1 diag(exp(h)) k2` for random rotations `k1`, `k2`; its projection is `h` sorted.
pub fn element_with_projection<R: Rng>(h: &[f64], rng: &mut R) -> DMatrix<f64> {
    let n = h.len();
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, h.iter().map(|x| x.exp())));
    random_rotation(n, rng) * d * random_rotation(n, rng)
}
