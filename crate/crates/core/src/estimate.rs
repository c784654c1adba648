//! Counting estimators of growth rates from orbit datasets.
//!
//! Every estimate is the least-squares slope of `log N(R)` against `R` over
//! the top `window_fraction` of a radius range, where `N(R)` is the weighted
//! count of records with gauge value at most `R`. The range ends at the
//! largest radius up to which the dataset is complete: the outer sphere of a
//! word ball, or the full extent of a synthetic cloud.

use std::io::Write;

use rayon::prelude::*;

use crate::chamber::{ChamberVector, RootSystem};
use crate::error::{Error, Result};
use crate::orbit::OrbitDataset;
use crate::sphere::{sup_on_sphere, DirectionGrid, SupOptions};

pub const DEFAULT_WINDOW_FRACTION: f64 = 0.4;
/// Fewest records a regression window (or a cone) may hold.
pub const MIN_WINDOW_RECORDS: usize = 10;
const REGRESSION_POINTS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthRateEstimate {
    pub value: f64,
    pub window: (f64, f64),
    pub stderr: f64,
    pub sample_count: usize,
}

/// Radius (in the norm) up to which the dataset holds every orbit point.
///
/// For a word ball this is the smallest norm on its outer sphere; a finite
/// group whose ball closed up early, and synthetic clouds, use the largest
/// norm present.
pub fn coverage_radius(ds: &OrbitDataset) -> f64 {
    let max_norm = ds.records.iter().map(|r| r.norm).fold(0.0, f64::max);
    if ds.header.synthetic || ds.header.max_length == 0 {
        return max_norm;
    }
    let outer = ds
        .records
        .iter()
        .filter(|r| r.word_length == ds.header.max_length)
        .map(|r| r.norm)
        .fold(f64::INFINITY, f64::min);
    if outer.is_finite() {
        outer
    } else {
        max_norm
    }
}

/// Slope of `log N(R)` on `[lo, hi]` for `N(R) = sum of weights with value <= R`.
fn regress(mut points: Vec<(f64, f64)>, lo: f64, hi: f64) -> Result<GrowthRateEstimate> {
    if !(hi > lo) || !(hi > 0.0) {
        return Err(Error::InsufficientData("zero radius range".into()));
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let in_window = points.iter().filter(|p| p.0 > lo && p.0 <= hi).count();
    if in_window < MIN_WINDOW_RECORDS {
        return Err(Error::InsufficientData(format!(
            "{in_window} records in the window [{lo:.4}, {hi:.4}], need {MIN_WINDOW_RECORDS}"
        )));
    }
    let mut prefix = Vec::with_capacity(points.len());
    let mut acc = 0.0;
    for p in &points {
        acc += p.1;
        prefix.push(acc);
    }
    let count_at = |r: f64| -> f64 {
        let idx = points.partition_point(|p| p.0 <= r);
        if idx == 0 {
            0.0
        } else {
            prefix[idx - 1]
        }
    };
    let mut xs = Vec::with_capacity(REGRESSION_POINTS);
    let mut ys = Vec::with_capacity(REGRESSION_POINTS);
    for i in 0..REGRESSION_POINTS {
        let r = lo + (hi - lo) * i as f64 / (REGRESSION_POINTS - 1) as f64;
        let n = count_at(r);
        if n > 0.0 {
            xs.push(r);
            ys.push(n.ln());
        }
    }
    if xs.len() < 3 {
        return Err(Error::InsufficientData("window holds no counts".into()));
    }
    let (slope, stderr) = least_squares(&xs, &ys);
    Ok(GrowthRateEstimate {
        value: slope,
        window: (lo, hi),
        stderr,
        sample_count: in_window,
    })
}

/// Slope and its standard error for `y ~ a + b x`.
fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - icept - slope * x).powi(2)).sum();
    let stderr = (rss / (n - 2.0) / sxx).sqrt();
    (slope, stderr)
}

fn check_fraction(window_fraction: f64) -> Result<()> {
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "window fraction must lie in (0, 1], got {window_fraction}"
        )));
    }
    Ok(())
}

/// Smallest value of a positive homogeneous gauge on the unit chamber sphere.
fn gauge_minimum<G>(rs: &RootSystem, gauge: &G) -> f64
where
    G: Fn(&ChamberVector) -> f64 + Sync,
{
    sup_on_sphere(rs, |u| -gauge(u), SupOptions::for_rank(rs.rank()))
        .map_or(0.0, |s| -s.value)
}

/// Exponential growth rate of `#{records : gauge(mu) <= R}`.
pub fn counting_exponent<G>(ds: &OrbitDataset, gauge: G, window_fraction: f64) -> Result<GrowthRateEstimate>
where
    G: Fn(&ChamberVector) -> f64 + Sync,
{
    check_fraction(window_fraction)?;
    if ds.is_empty() {
        return Err(Error::InsufficientData("empty dataset".into()));
    }
    let rs = ds.root_system();
    let top = coverage_radius(ds) * gauge_minimum(&rs, &gauge);
    let points: Vec<(f64, f64)> = ds.records.par_iter().map(|r| (gauge(&r.mu), r.weight)).collect();
    regress(points, (1.0 - window_fraction) * top, top)
}

/// `(R, log N(R))` on `n` radii covering the whole range, for plotting.
pub fn counting_curve<G>(ds: &OrbitDataset, gauge: G, n: usize) -> Vec<(f64, f64)>
where
    G: Fn(&ChamberVector) -> f64 + Sync,
{
    let rs = ds.root_system();
    let top = coverage_radius(ds) * gauge_minimum(&rs, &gauge);
    let mut values: Vec<(f64, f64)> = ds.records.iter().map(|r| (gauge(&r.mu), r.weight)).collect();
    values.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Vec::with_capacity(n);
    let (mut idx, mut acc) = (0, 0.0);
    for i in 0..n.max(2) {
        let r = top * i as f64 / (n.max(2) - 1) as f64;
        while idx < values.len() && values[idx].0 <= r {
            acc += values[idx].1;
            idx += 1;
        }
        out.push((r, if acc > 0.0 { acc.ln() } else { f64::NEG_INFINITY }));
    }
    out
}

/// Critical exponent: growth rate of the Riemannian ball counts.
pub fn critical_exponent(ds: &OrbitDataset, window_fraction: f64) -> Result<GrowthRateEstimate> {
    let rs = ds.root_system();
    counting_exponent(ds, |h| rs.norm(h), window_fraction)
}

/// Growth rate of the polyhedral balls `<rho/|rho|, H> <= R`.
pub fn polyhedral_exponent(ds: &OrbitDataset, window_fraction: f64) -> Result<GrowthRateEstimate> {
    let rs = ds.root_system();
    let dir = rs.rho_direction();
    counting_exponent(ds, |h| rs.inner(&dir, h), window_fraction)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModifiedExponentEstimate {
    pub estimate: GrowthRateEstimate,
    /// Growth rate of the polyhedral ball counts.
    pub polyhedral: GrowthRateEstimate,
    /// Growth rate of the `rho`-damped sums, when the polyhedral rate exceeds `|rho|`.
    pub damped: Option<GrowthRateEstimate>,
    /// The raw value fell outside `[0, 2|rho|]`.
    pub clamped: bool,
}

/// Modified critical exponent by the two-stage procedure: the polyhedral
/// counting rate when it is at most `|rho|`, and otherwise `|rho|` plus the
/// growth rate of `S(R) = sum over |mu| <= R of exp(-<rho, mu>)`.
pub fn modified_critical_exponent_detailed(
    ds: &OrbitDataset,
    window_fraction: f64,
) -> Result<ModifiedExponentEstimate> {
    let rs = ds.root_system();
    let rn = rs.rho_norm();
    let polyhedral = polyhedral_exponent(ds, window_fraction)?;
    let (raw, damped) = if polyhedral.value <= rn {
        (polyhedral, None)
    } else {
        let top = coverage_radius(ds);
        let points: Vec<(f64, f64)> = ds
            .records
            .par_iter()
            .map(|r| (r.norm, r.weight * (-r.rho_pairing).exp()))
            .collect();
        let beta = regress(points, (1.0 - window_fraction) * top, top)?;
        (
            GrowthRateEstimate {
                value: rn + beta.value,
                ..beta
            },
            Some(beta),
        )
    };
    let value = raw.value.clamp(0.0, 2.0 * rn);
    Ok(ModifiedExponentEstimate {
        estimate: GrowthRateEstimate { value, ..raw },
        polyhedral,
        damped,
        clamped: value != raw.value,
    })
}

pub fn modified_critical_exponent(ds: &OrbitDataset) -> Result<GrowthRateEstimate> {
    Ok(modified_critical_exponent_detailed(ds, DEFAULT_WINDOW_FRACTION)?.estimate)
}

/// Cone half-angles suited to a direction grid: the two smallest isolate a
/// single grid ray in rank 2.
pub fn default_cone_angles(rs: &RootSystem, grid: &DirectionGrid) -> Vec<f64> {
    match (rs.rank(), grid.spacing) {
        (1, _) => vec![0.3, 0.2, 0.1],
        (2, Some(h)) => vec![1.5 * h, 0.75 * h, 0.4 * h],
        _ => vec![0.2, 0.1, 0.05],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthIndicatorEstimate {
    pub directions: Vec<ChamberVector>,
    /// Per direction; `-inf` where the smallest cone is empty.
    pub values: Vec<f64>,
    pub cone_angles: Vec<f64>,
    pub extrapolated: bool,
    /// `slopes[j][e]` for direction `j` and cone angle `cone_angles[e]`.
    pub slopes: Vec<Vec<f64>>,
    pub stderrs: Vec<Vec<f64>>,
    pub window: (f64, f64),
}

impl GrowthIndicatorEstimate {
    /// Largest finite value, or `None` when every direction is empty.
    pub fn max_value(&self) -> Option<f64> {
        self.values
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
    }

    /// Value at the grid direction closest to `h`.
    pub fn value_near(&self, rs: &RootSystem, h: &ChamberVector) -> f64 {
        let u = rs.normalized(h);
        let j = (0..self.directions.len())
            .max_by(|&a, &b| {
                rs.inner(&self.directions[a], &u)
                    .total_cmp(&rs.inner(&self.directions[b], &u))
            })
            .expect("nonempty direction set");
        self.values[j]
    }

    /// CSV rows `direction_index,u_1..u_d,epsilon,slope,stderr`; the row with
    /// `epsilon = 0` holds the reported value.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let d = self.directions.first().map_or(0, ChamberVector::len);
        let cols: Vec<String> = (1..=d).map(|i| format!("u_{i}")).collect();
        writeln!(out, "direction_index,{},epsilon,slope,stderr", cols.join(","))?;
        for (j, u) in self.directions.iter().enumerate() {
            let coords: Vec<String> = u.coords().iter().map(|x| format!("{x}")).collect();
            let coords = coords.join(",");
            for (e, eps) in self.cone_angles.iter().enumerate() {
                writeln!(out, "{j},{coords},{eps},{},{}", self.slopes[j][e], self.stderrs[j][e])?;
            }
            let last = self.stderrs[j].last().copied().unwrap_or(f64::NAN);
            writeln!(out, "{j},{coords},0,{},{last}", self.values[j])?;
        }
        Ok(())
    }
}

/// Directional growth rates: for each direction and cone half-angle, the
/// growth rate of the counts of records inside the cone, then a linear
/// extrapolation to a zero angle from the two smallest cones.
pub fn growth_indicator(
    ds: &OrbitDataset,
    directions: &[ChamberVector],
    cone_angles: &[f64],
    window_fraction: f64,
    extrapolate: bool,
) -> Result<GrowthIndicatorEstimate> {
    check_fraction(window_fraction)?;
    if ds.is_empty() {
        return Err(Error::InsufficientData("empty dataset".into()));
    }
    if directions.is_empty() || cone_angles.is_empty() {
        return Err(Error::InvalidConfig("need at least one direction and one cone angle".into()));
    }
    if cone_angles.windows(2).any(|w| !(w[0] > w[1])) || cone_angles.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidConfig("cone angles must be positive and strictly decreasing".into()));
    }
    if extrapolate && cone_angles.len() < 2 {
        return Err(Error::InvalidConfig("extrapolation needs at least two cone angles".into()));
    }
    let rs = ds.root_system();
    for u in directions {
        rs.check_vector(u)?;
    }
    let top = coverage_radius(ds);
    let (lo, hi) = ((1.0 - window_fraction) * top, top);
    let cosines: Vec<f64> = cone_angles.iter().map(|e| e.cos()).collect();

    let rows: Vec<(Vec<f64>, Vec<f64>, f64)> = directions
        .par_iter()
        .map(|dir| {
            let u = rs.normalized(dir);
            let cos_to_u: Vec<f64> = ds
                .records
                .iter()
                .map(|r| if r.norm == 0.0 { 1.0 } else { rs.inner(&u, &r.mu) / r.norm })
                .collect();
            let mut slopes = Vec::with_capacity(cosines.len());
            let mut errs = Vec::with_capacity(cosines.len());
            let mut smallest_count = 0;
            for &c in &cosines {
                let points: Vec<(f64, f64)> = ds
                    .records
                    .iter()
                    .zip(&cos_to_u)
                    .filter(|(_, &cu)| cu >= c)
                    .map(|(r, _)| (r.norm, r.weight))
                    .collect();
                smallest_count = points.iter().filter(|p| p.0 > 0.0).count();
                match regress(points, lo, hi) {
                    Ok(est) => {
                        slopes.push(est.value);
                        errs.push(est.stderr);
                    }
                    Err(_) => {
                        slopes.push(f64::NEG_INFINITY);
                        errs.push(f64::NAN);
                    }
                }
            }
            let k = slopes.len() - 1;
            let value = if smallest_count < MIN_WINDOW_RECORDS || !slopes[k].is_finite() {
                f64::NEG_INFINITY
            } else if extrapolate && slopes[k - 1].is_finite() {
                let (e1, e2) = (cone_angles[k - 1], cone_angles[k]);
                slopes[k] - e2 * (slopes[k - 1] - slopes[k]) / (e1 - e2)
            } else {
                slopes[k]
            };
            (slopes, errs, value)
        })
        .collect();

    let mut slopes = Vec::with_capacity(rows.len());
    let mut stderrs = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len());
    for (s, e, v) in rows {
        slopes.push(s);
        stderrs.push(e);
        values.push(v);
    }
    Ok(GrowthIndicatorEstimate {
        directions: directions.iter().map(|u| rs.normalized(u)).collect(),
        values,
        cone_angles: cone_angles.to_vec(),
        extrapolated: extrapolate,
        slopes,
        stderrs,
        window: (lo, hi),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalCheck {
    /// Largest directional value, `0` when every direction is empty.
    pub sup_psi: f64,
    pub delta: f64,
    pub discrepancy: f64,
}

/// Compares the critical exponent with the largest directional growth rate.
pub fn classical_exponent_from_psi_check(est: &GrowthIndicatorEstimate, delta: &GrowthRateEstimate) -> ClassicalCheck {
    let sup_psi = est.max_value().unwrap_or(0.0).max(0.0);
    ClassicalCheck {
        sup_psi,
        delta: delta.value,
        discrepancy: (sup_psi - delta.value).abs(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chamber::GroupDescriptor;
    use crate::orbit::{enumerate, DedupMode, EnumerateOptions, GeneratorSet};
    use crate::synth::{sample_orbit, PsiModel, SynthConfig};

    fn rs(d: &str) -> RootSystem {
        RootSystem::new(&d.parse::<GroupDescriptor>().unwrap())
    }

    #[test]
    fn least_squares_recovers_a_line() {
        let xs: Vec<f64> = (0..10).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 0.5 * x).collect();
        let (b, se) = least_squares(&xs, &ys);
        assert!((b + 0.5).abs() < 1e-12);
        assert!(se < 1e-12);
    }

    #[test]
    fn exact_exponential_counts() {
        // N(R) = floor(e^{R}) on a single ray: slope 1
        let r = rs("sl2");
        let ds = sample_orbit(&r, &PsiModel::radial(1.0), &SynthConfig::new(2, 12.0)).unwrap();
        let est = critical_exponent(&ds, 0.4).unwrap();
        assert!((est.value - 1.0).abs() < 1e-3, "{est:?}");
        assert!(est.window.0 < est.window.1);
        assert!(est.sample_count >= MIN_WINDOW_RECORDS);
    }

    #[test]
    fn cyclic_group_has_zero_exponent() {
        let r = rs("sl2");
        let g = GeneratorSet::parse("2:2,1,1,1").unwrap();
        let mut o = EnumerateOptions::new(40, DedupMode::Exact);
        o.record_cap = u64::MAX;
        let ds = enumerate(&r, &g, &o).unwrap();
        let d = critical_exponent(&ds, 0.4).unwrap();
        assert!(d.value.abs() <= 0.05, "{d:?}");
        let dt = modified_critical_exponent(&ds).unwrap();
        assert!(dt.value <= 0.05);
        let dirs = DirectionGrid::new(&r, 2).directions;
        let psi = growth_indicator(&ds, &dirs, &[0.3, 0.2, 0.1], 0.4, true).unwrap();
        assert!(psi.values[0] <= 0.05);
    }

    #[test]
    fn empty_cones_are_negative_infinity() {
        let r = rs("sl3");
        let cap = PsiModel::spherical_cap(1.0, r.rho_direction(), 0.15);
        let ds = sample_orbit(&r, &cap, &SynthConfig::new(33, 8.0)).unwrap();
        let grid = DirectionGrid::new(&r, 33);
        let psi = growth_indicator(&ds, &grid.directions, &default_cone_angles(&r, &grid), 0.4, true).unwrap();
        let wall = psi.values[0];
        let centre = psi.values[16];
        assert_eq!(wall, f64::NEG_INFINITY);
        assert!((centre - 1.0).abs() < 0.05, "{centre}");
    }

    #[test]
    fn argument_validation() {
        let r = rs("sl2");
        let ds = sample_orbit(&r, &PsiModel::radial(1.0), &SynthConfig::new(2, 6.0)).unwrap();
        let dirs = vec![r.rho_direction()];
        assert!(growth_indicator(&ds, &dirs, &[0.1, 0.2], 0.4, true).is_err());
        assert!(growth_indicator(&ds, &dirs, &[0.1], 0.4, true).is_err());
        assert!(growth_indicator(&ds, &dirs, &[0.1], 0.4, false).is_ok());
        assert!(critical_exponent(&ds, 0.0).is_err());
        let mut empty = ds.clone();
        empty.records.clear();
        assert!(critical_exponent(&empty, 0.4).is_err());
        let mut tiny = ds.clone();
        tiny.records.truncate(5);
        assert!(matches!(critical_exponent(&tiny, 0.4), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn csv_layout() {
        let r = rs("sl2");
        let ds = sample_orbit(&r, &PsiModel::radial(1.0), &SynthConfig::new(2, 8.0)).unwrap();
        let est = growth_indicator(&ds, &[r.rho_direction()], &[0.3, 0.1], 0.4, true).unwrap();
        let mut buf = Vec::new();
        est.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "direction_index,u_1,u_2,epsilon,slope,stderr");
        assert_eq!(lines.len(), 4);
        assert!(lines[3].starts_with("0,") && lines[3].split(',').nth(3) == Some("0"));
    }
}
