//! Root data, the trace-form inner product and Weyl chamber geometry for
//! products of `SL(n, R)` factors.
//!
//! Vectors of the Cartan subspace are stored in ambient diagonal coordinates:
//! one block of `n_i` coordinates per factor, each block summing to zero.
//! The inner product is the sum of the per-block trace forms, i.e. the plain
//! dot product of the diagonal entries. Every norm, pairing and exponent in the
//! crate is measured with this one form.

use std::fmt;
use std::ops::{Index, Range};
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

/// Label of the only supported inner-product normalization. Written into every
/// dataset header so files measured with another form are rejected.
pub const FORM_LABEL: &str = "trace";

/// Slack for the closed-chamber predicate, absorbing rounding from SVDs.
pub const CHAMBER_TOL: f64 = 1e-12;

const TRACE_TOL: f64 = 1e-12;

/// `G = SL(n_1, R) x ... x SL(n_k, R)`, written `sl3`, `sl2xsl2`, ...
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupDescriptor {
    factors: Vec<usize>,
}

impl GroupDescriptor {
    pub fn new(factors: Vec<usize>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidGroup("at least one factor is required".into()));
        }
        if let Some(&n) = factors.iter().find(|&&n| n < 2) {
            return Err(Error::InvalidGroup(format!("factor size {n} < 2")));
        }
        Ok(Self { factors })
    }

    pub fn sl(n: usize) -> Result<Self> {
        Self::new(vec![n])
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn rank(&self) -> usize {
        self.factors.iter().map(|n| n - 1).sum()
    }

    pub fn ambient_dim(&self) -> usize {
        self.factors.iter().sum()
    }
}

impl fmt::Display for GroupDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, n) in self.factors.iter().enumerate() {
            if i > 0 {
                f.write_str("x")?;
            }
            write!(f, "sl{n}")?;
        }
        Ok(())
    }
}

impl FromStr for GroupDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::InvalidGroup("empty descriptor".into()));
        }
        let factors = s
            .split(['x', '*'])
            .map(|part| {
                let part = part.trim().to_ascii_lowercase();
                part.strip_prefix("sl")
                    .and_then(|n| n.parse::<usize>().ok())
                    .ok_or_else(|| Error::InvalidGroup(format!("cannot parse factor `{part}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(factors)
    }
}

/// A point of the Cartan subspace in ambient diagonal coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ChamberVector(Vec<f64>);

impl ChamberVector {
    /// Wraps raw coordinates. Use [`RootSystem::vector`] to validate them.
    pub fn new(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self(self.0.iter().map(|x| x * t).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// `self + t * other`
    pub fn add_scaled(&self, t: f64, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + t * b).collect())
    }
}

impl Index<usize> for ChamberVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositiveRoot {
    pub vector: ChamberVector,
    pub multiplicity: u32,
}

/// Root data of a product of `SL(n)` factors under the trace form.
#[derive(Debug, Clone)]
pub struct RootSystem {
    descriptor: GroupDescriptor,
    blocks: Vec<Range<usize>>,
    positive_roots: Vec<PositiveRoot>,
    simple_roots: Vec<ChamberVector>,
    rho: ChamberVector,
    rho_norm: f64,
}

impl RootSystem {
    /// Type `A_{n-1}` data per factor: roots `e_i - e_j` (`i < j`) with
    /// multiplicity one, and `rho = ((n-1)/2, (n-3)/2, ..., -(n-1)/2)`.
    pub fn new(descriptor: &GroupDescriptor) -> Self {
        let dim = descriptor.ambient_dim();
        let mut blocks = Vec::with_capacity(descriptor.factors().len());
        let mut start = 0;
        for &n in descriptor.factors() {
            blocks.push(start..start + n);
            start += n;
        }

        let mut positive_roots = Vec::new();
        let mut simple_roots = Vec::new();
        for block in &blocks {
            for i in block.clone() {
                for j in i + 1..block.end {
                    let mut v = vec![0.0; dim];
                    v[i] = 1.0;
                    v[j] = -1.0;
                    if j == i + 1 {
                        simple_roots.push(ChamberVector(v.clone()));
                    }
                    positive_roots.push(PositiveRoot {
                        vector: ChamberVector(v),
                        multiplicity: 1,
                    });
                }
            }
        }

        let mut rho = vec![0.0; dim];
        for root in &positive_roots {
            for (r, a) in rho.iter_mut().zip(root.vector.coords()) {
                *r += 0.5 * f64::from(root.multiplicity) * a;
            }
        }
        let rho_norm = rho.iter().map(|x| x * x).sum::<f64>().sqrt();

        Self {
            descriptor: descriptor.clone(),
            blocks,
            positive_roots,
            simple_roots,
            rho: ChamberVector(rho),
            rho_norm,
        }
    }

    pub fn descriptor(&self) -> &GroupDescriptor {
        &self.descriptor
    }

    pub fn rank(&self) -> usize {
        self.descriptor.rank()
    }

    pub fn ambient_dim(&self) -> usize {
        self.descriptor.ambient_dim()
    }

    pub fn form_label(&self) -> &'static str {
        FORM_LABEL
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    pub fn positive_roots(&self) -> &[PositiveRoot] {
        &self.positive_roots
    }

    pub fn simple_roots(&self) -> &[ChamberVector] {
        &self.simple_roots
    }

    pub fn rho(&self) -> &ChamberVector {
        &self.rho
    }

    pub fn rho_norm(&self) -> f64 {
        self.rho_norm
    }

    /// `rho / |rho|`, the direction of the polyhedral gauge.
    pub fn rho_direction(&self) -> ChamberVector {
        self.rho.scaled(1.0 / self.rho_norm)
    }

    /// Validated trace-form pairing.
    pub fn pairing(&self, v: &ChamberVector, w: &ChamberVector) -> Result<f64> {
        self.check_dim(v)?;
        self.check_dim(w)?;
        Ok(self.inner(v, w))
    }

    /// Trace-form pairing without dimension checks.
    #[inline]
    pub fn inner(&self, v: &ChamberVector, w: &ChamberVector) -> f64 {
        debug_assert_eq!(v.len(), w.len());
        v.0.iter().zip(&w.0).map(|(a, b)| a * b).sum()
    }

    #[inline]
    pub fn norm(&self, v: &ChamberVector) -> f64 {
        self.inner(v, v).sqrt()
    }

    #[inline]
    pub fn rho_pairing(&self, v: &ChamberVector) -> f64 {
        self.inner(&self.rho, v)
    }

    pub fn normalized(&self, v: &ChamberVector) -> ChamberVector {
        v.scaled(1.0 / self.norm(v))
    }

    fn check_dim(&self, v: &ChamberVector) -> Result<()> {
        if v.len() != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Checks dimension and that every block sums to zero.
    pub fn check_vector(&self, v: &ChamberVector) -> Result<()> {
        self.check_dim(v)?;
        for (b, block) in self.blocks.iter().enumerate() {
            let coords = &v.0[block.clone()];
            let sum: f64 = coords.iter().sum();
            let scale = coords.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
            if sum.abs() > TRACE_TOL * scale {
                return Err(Error::NotTraceFree { block: b, sum });
            }
        }
        Ok(())
    }

    pub fn vector(&self, coords: Vec<f64>) -> Result<ChamberVector> {
        let v = ChamberVector(coords);
        self.check_vector(&v)?;
        Ok(v)
    }

    /// Smallest simple-root pairing; nonnegative on the closed chamber.
    pub fn min_simple_pairing(&self, v: &ChamberVector) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| (b.start..b.end - 1).map(move |i| v.0[i] - v.0[i + 1]))
            .fold(f64::INFINITY, f64::min)
    }

    /// `<alpha, H> >= -1e-12` for every simple (hence every positive) root.
    pub fn in_closed_chamber(&self, v: &ChamberVector) -> bool {
        v.len() == self.ambient_dim() && self.min_simple_pairing(v) >= -CHAMBER_TOL
    }

    pub fn check_chamber(&self, v: &ChamberVector) -> Result<()> {
        self.check_dim(v)?;
        let pairing = self.min_simple_pairing(v);
        if pairing < -CHAMBER_TOL {
            return Err(Error::OutsideChamber { pairing });
        }
        Ok(())
    }

    /// Reflection in the hyperplane orthogonal to the `i`-th simple root.
    pub fn simple_reflection(&self, i: usize, v: &ChamberVector) -> ChamberVector {
        let alpha = &self.simple_roots[i];
        let c = 2.0 * self.inner(alpha, v) / self.inner(alpha, alpha);
        v.add_scaled(-c, alpha)
    }

    /// Maps a vector to its Weyl-group representative in the closed chamber
    /// (sorts every block in nonincreasing order).
    pub fn fold_into_chamber(&self, v: &ChamberVector) -> ChamberVector {
        let mut out = v.0.clone();
        for block in &self.blocks {
            out[block.clone()].sort_by(|a, b| b.total_cmp(a));
        }
        ChamberVector(out)
    }

    /// Orthogonal projection onto the trace-free subspace.
    pub fn project_trace_free(&self, v: &ChamberVector) -> ChamberVector {
        let mut out = v.0.clone();
        for block in &self.blocks {
            let n = block.len() as f64;
            let mean = out[block.clone()].iter().sum::<f64>() / n;
            for x in &mut out[block.clone()] {
                *x -= mean;
            }
        }
        ChamberVector(out)
    }

    /// Unit generators of the (simplicial) closed chamber: the fundamental
    /// coweights of every block, in block order.
    pub fn extreme_rays(&self) -> Vec<ChamberVector> {
        let dim = self.ambient_dim();
        let mut rays = Vec::with_capacity(self.rank());
        for block in &self.blocks {
            let n = block.len();
            for k in 1..n {
                let mut v = vec![0.0; dim];
                for (offset, i) in block.clone().enumerate() {
                    let ones = if offset < k { 1.0 } else { 0.0 };
                    v[i] = ones - k as f64 / n as f64;
                }
                let w = ChamberVector(v);
                rays.push(self.normalized(&w));
            }
        }
        rays
    }

    /// Orthonormal basis of the trace-free subspace (Helmert vectors per block).
    pub fn trace_free_basis(&self) -> Vec<ChamberVector> {
        let dim = self.ambient_dim();
        let mut basis = Vec::with_capacity(self.rank());
        for block in &self.blocks {
            for k in 1..block.len() {
                let mut v = vec![0.0; dim];
                let scale = 1.0 / ((k * (k + 1)) as f64).sqrt();
                v[block.start..block.start + k].fill(scale);
                v[block.start + k] = -(k as f64) * scale;
                basis.push(ChamberVector(v));
            }
        }
        basis
    }

    /// Combination `sum_i c_i b_i` of the trace-free basis.
    pub fn from_basis_coords(&self, c: &[f64]) -> ChamberVector {
        let mut out = ChamberVector::zeros(self.ambient_dim());
        for (ci, b) in c.iter().zip(self.trace_free_basis()) {
            out = out.add_scaled(*ci, &b);
        }
        out
    }

    /// A standard Gaussian vector of the trace-free subspace.
    pub fn random_vector<R: Rng + ?Sized>(&self, rng: &mut R) -> ChamberVector {
        let c: Vec<f64> = (0..self.rank()).map(|_| standard_normal(rng)).collect();
        self.from_basis_coords(&c)
    }

    /// A Gaussian vector folded into the closed chamber.
    pub fn random_chamber_vector<R: Rng + ?Sized>(&self, rng: &mut R) -> ChamberVector {
        self.fold_into_chamber(&self.random_vector(rng))
    }
}

/// Box-Muller draw of a standard normal.
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
