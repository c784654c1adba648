//! Direction sets on the unit sphere of the closed chamber, and maximization
//! of functions over that sphere patch.
//!
//! Rank 1 has a single unit direction. In rank 2 the patch is an arc between
//! the two extreme rays, parameterized by angle. From rank 3 on, directions
//! come from a Halton sequence pushed to the sphere and folded into the
//! chamber by the Weyl group.

use rayon::prelude::*;

use crate::chamber::{ChamberVector, RootSystem};

/// The rank-2 chamber arc `u(theta) = cos(theta) e1 + sin(theta) e_perp`,
/// `theta` in `[0, opening]`.
#[derive(Debug, Clone)]
pub struct ChamberArc {
    pub start: ChamberVector,
    pub perp: ChamberVector,
    pub opening: f64,
}

impl ChamberArc {
    pub fn new(rs: &RootSystem) -> Option<Self> {
        if rs.rank() != 2 {
            return None;
        }
        let rays = rs.extreme_rays();
        let (e1, e2) = (&rays[0], &rays[1]);
        let c = rs.inner(e1, e2).clamp(-1.0, 1.0);
        let perp = rs.normalized(&e2.add_scaled(-c, e1));
        Some(Self {
            start: e1.clone(),
            perp,
            opening: c.acos(),
        })
    }

    pub fn point(&self, theta: f64) -> ChamberVector {
        self.start
            .scaled(theta.cos())
            .add_scaled(theta.sin(), &self.perp)
    }

    /// Angle of a chamber vector along the arc.
    pub fn angle_of(&self, rs: &RootSystem, v: &ChamberVector) -> f64 {
        rs.inner(v, &self.perp).atan2(rs.inner(v, &self.start))
    }

    /// `n >= 2` equally spaced angles including both walls.
    pub fn angles(&self, n: usize) -> Vec<f64> {
        if n <= 1 {
            return vec![0.5 * self.opening];
        }
        (0..n)
            .map(|i| self.opening * i as f64 / (n - 1) as f64)
            .collect()
    }
}

/// A finite set of unit chamber directions.
#[derive(Debug, Clone)]
pub struct DirectionGrid {
    pub directions: Vec<ChamberVector>,
    /// Typical angular distance between neighboring directions, when known.
    pub spacing: Option<f64>,
}

impl DirectionGrid {
    /// Uniform-in-angle grid (rank 2), the single direction (rank 1), or a
    /// folded low-discrepancy set (rank >= 3).
    pub fn new(rs: &RootSystem, resolution: usize) -> Self {
        match rs.rank() {
            1 => Self {
                directions: vec![rs.rho_direction()],
                spacing: None,
            },
            2 => {
                let arc = ChamberArc::new(rs).expect("rank 2");
                let n = resolution.max(2);
                Self {
                    directions: arc.angles(n).into_iter().map(|t| arc.point(t)).collect(),
                    spacing: Some(arc.opening / (n - 1) as f64),
                }
            }
            _ => {
                let directions = halton_directions(rs, resolution.max(2));
                let spacing = typical_spacing(rs, directions.len());
                Self {
                    directions,
                    spacing: Some(spacing),
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }
}

/// Rough angular spacing of `n` points on the chamber's sphere patch.
fn typical_spacing(rs: &RootSystem, n: usize) -> f64 {
    let r = rs.rank() as f64;
    // The patch is a 1/|W| fraction of the (r-1)-sphere; crude but monotone in n.
    let weyl: f64 = rs
        .descriptor()
        .factors()
        .iter()
        .map(|&k| (1..=k).map(|i| i as f64).product::<f64>())
        .product();
    let area = sphere_area(r) / weyl;
    (area / n as f64).powf(1.0 / (r - 1.0))
}

fn sphere_area(r: f64) -> f64 {
    // surface area of the unit (r-1)-sphere in R^r, for small integer r
    match r as usize {
        1 => 2.0,
        2 => std::f64::consts::TAU,
        3 => 4.0 * std::f64::consts::PI,
        k => {
            let mut area = 4.0 * std::f64::consts::PI;
            for d in 4..=k {
                // A_{d} = 2 pi A_{d-2} / (d-2)
                area = if d % 2 == 0 {
                    2.0 * std::f64::consts::PI.powi(2) * area / (4.0 * std::f64::consts::PI)
                } else {
                    area * 2.0 * std::f64::consts::PI / (d as f64 - 2.0)
                };
            }
            area
        }
    }
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while i > 0 {
        f /= b;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

fn halton_directions(rs: &RootSystem, n: usize) -> Vec<ChamberVector> {
    let rank = rs.rank();
    let dims = 2 * rank.div_ceil(2);
    assert!(dims <= PRIMES.len(), "rank too large for the Halton grid");
    (1..=n as u64)
        .map(|i| {
            let u: Vec<f64> = (0..dims).map(|d| radical_inverse(i, PRIMES[d])).collect();
            let mut g = Vec::with_capacity(dims);
            for pair in u.chunks(2) {
                let r = (-2.0 * (1.0 - pair[0]).max(1e-300).ln()).sqrt();
                let t = std::f64::consts::TAU * pair[1];
                g.push(r * t.cos());
                g.push(r * t.sin());
            }
            g.truncate(rank);
            let v = rs.fold_into_chamber(&rs.from_basis_coords(&g));
            rs.normalized(&v)
        })
        .collect()
}

/// Settings of [`sup_on_sphere`].
#[derive(Debug, Clone, Copy)]
pub struct SupOptions {
    /// Coarse grid size (directions).
    pub grid: usize,
    /// Final resolution of the local refinement (radians of arc in rank 2).
    pub tol: f64,
}

impl SupOptions {
    pub fn for_rank(rank: usize) -> Self {
        Self {
            grid: if rank <= 2 { 2048 } else { 4096 },
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SupResult {
    pub value: f64,
    pub argmax: ChamberVector,
}

#[inline]
fn finite_or_neg_inf(x: f64) -> f64 {
    if x.is_nan() {
        f64::NEG_INFINITY
    } else {
        x
    }
}

/// Supremum of `f` over the unit sphere of the closed chamber: a coarse grid
/// followed by local refinement around the best cell. `f` may return `-inf`
/// to mark directions outside its domain; returns `None` when every sampled
/// direction is `-inf`.
pub fn sup_on_sphere<F>(rs: &RootSystem, f: F, opts: SupOptions) -> Option<SupResult>
where
    F: Fn(&ChamberVector) -> f64 + Sync,
{
    match rs.rank() {
        1 => {
            let u = rs.rho_direction();
            let value = finite_or_neg_inf(f(&u));
            (value > f64::NEG_INFINITY).then_some(SupResult { value, argmax: u })
        }
        2 => sup_on_arc(rs, &f, opts),
        _ => sup_compass(rs, &f, opts),
    }
}

fn argmax_of(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if v > f64::NEG_INFINITY && best.is_none_or(|b| v > values[b]) {
            best = Some(i);
        }
    }
    best
}

fn sup_on_arc<F>(rs: &RootSystem, f: &F, opts: SupOptions) -> Option<SupResult>
where
    F: Fn(&ChamberVector) -> f64 + Sync,
{
    let arc = ChamberArc::new(rs).expect("rank 2");
    let angles = arc.angles(opts.grid.max(3));
    let values: Vec<f64> = angles
        .par_iter()
        .map(|&t| finite_or_neg_inf(f(&arc.point(t))))
        .collect();
    let i = argmax_of(&values)?;
    let lo = angles[i.saturating_sub(1)];
    let hi = angles[(i + 1).min(angles.len() - 1)];
    let g = |t: f64| finite_or_neg_inf(f(&arc.point(t)));
    let (t, v) = golden_max(g, lo, hi, opts.tol);
    let (theta, value) = if v > values[i] { (t, v) } else { (angles[i], values[i]) };
    Some(SupResult {
        value,
        argmax: arc.point(theta),
    })
}

/// Golden-section search for the maximum of a unimodal function on `[a, b]`.
pub(crate) fn golden_max<G: Fn(f64) -> f64>(g: G, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut gc = g(c);
    let mut gd = g(d);
    while (b - a).abs() > tol {
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - INV_PHI * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + INV_PHI * (b - a);
            gd = g(d);
        }
    }
    let candidates = [(a, g(a)), (b, g(b)), (c, gc), (d, gd)];
    candidates
        .into_iter()
        .fold((a, f64::NEG_INFINITY), |best, x| if x.1 > best.1 { x } else { best })
}

fn sup_compass<F>(rs: &RootSystem, f: &F, opts: SupOptions) -> Option<SupResult>
where
    F: Fn(&ChamberVector) -> f64 + Sync,
{
    let mut grid = halton_directions(rs, opts.grid.max(16));
    grid.extend(rs.extreme_rays());
    grid.push(rs.rho_direction());
    let values: Vec<f64> = grid.par_iter().map(|u| finite_or_neg_inf(f(u))).collect();
    let i = argmax_of(&values)?;
    let mut best = grid[i].clone();
    let mut best_value = values[i];
    let basis = rs.trace_free_basis();
    let mut step = typical_spacing(rs, grid.len());
    while step > opts.tol {
        let mut improved = false;
        for b in &basis {
            for sign in [1.0, -1.0] {
                let cand = rs.normalized(&rs.fold_into_chamber(&best.add_scaled(sign * step, b)));
                let v = finite_or_neg_inf(f(&cand));
                if v > best_value {
                    best = cand;
                    best_value = v;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Some(SupResult {
        value: best_value,
        argmax: best,
    })
}
