//! Synthetic orbit models with a prescribed directional growth.
//!
//! Along every direction `u` of a chamber grid with `psi(u) > 0`, the point
//! cloud holds the points `r_k u`, `r_k = log(k) / psi(u)`, so the count of
//! points of norm at most `R` on that ray is exactly `floor(exp(psi(u) R))`.
//! The point `k = 1` is the origin and is emitted once for the whole cloud.
//!
//! Past `dense_limit` points per ray, consecutive points are merged into
//! weighted records: each record sits at the radius of the last point it
//! stands for and carries the number of points it replaces. Cumulative
//! counts stay exact at every record radius.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::chamber::{ChamberVector, RootSystem};
use crate::error::{Error, Result};
use crate::orbit::{DatasetHeader, DedupMode, OrbitDataset, OrbitRecord};
use crate::sphere::{sup_on_sphere, DirectionGrid, SupOptions};

/// Where a model is finite.
#[derive(Debug, Clone, PartialEq)]
pub enum SupportCone {
    /// The whole closed chamber.
    Chamber,
    /// Directions within `half_angle` of the unit vector `axis`.
    Cap { axis: ChamberVector, half_angle: f64 },
}

impl SupportCone {
    pub fn contains(&self, rs: &RootSystem, h: &ChamberVector) -> bool {
        match self {
            SupportCone::Chamber => true,
            SupportCone::Cap { axis, half_angle } => {
                let n = rs.norm(h);
                n == 0.0 || rs.inner(axis, h) / n >= half_angle.cos() - 1e-12
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PsiShape {
    /// `<phi, H>`.
    Linear(ChamberVector),
    /// `min_i <phi_i, H>`.
    MinLinear(Vec<ChamberVector>),
    /// `c |H|`.
    Radial(f64),
}

/// A degree-one homogeneous growth profile, `-inf` off its support.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiModel {
    pub shape: PsiShape,
    pub support: SupportCone,
}

impl PsiModel {
    pub fn linear(phi: ChamberVector) -> Self {
        Self {
            shape: PsiShape::Linear(phi),
            support: SupportCone::Chamber,
        }
    }

    /// `c rho`.
    pub fn scaled_rho(rs: &RootSystem, c: f64) -> Self {
        Self::linear(rs.rho().scaled(c))
    }

    pub fn min_linear(phis: Vec<ChamberVector>) -> Result<Self> {
        if phis.is_empty() {
            return Err(Error::InvalidModel("min of an empty family of linear forms".into()));
        }
        Ok(Self {
            shape: PsiShape::MinLinear(phis),
            support: SupportCone::Chamber,
        })
    }

    /// `c |H|` on a cap of the chamber.
    pub fn spherical_cap(c: f64, axis: ChamberVector, half_angle: f64) -> Self {
        Self {
            shape: PsiShape::Radial(c),
            support: SupportCone::Cap { axis, half_angle },
        }
    }

    /// `c |H|` on the whole chamber.
    pub fn radial(c: f64) -> Self {
        Self {
            shape: PsiShape::Radial(c),
            support: SupportCone::Chamber,
        }
    }

    pub fn with_support(mut self, support: SupportCone) -> Self {
        self.support = support;
        self
    }

    /// Checks dimensions and support data against a root system.
    pub fn validate(&self, rs: &RootSystem) -> Result<()> {
        let check = |v: &ChamberVector| rs.check_vector(v).map_err(|e| Error::InvalidModel(e.to_string()));
        match &self.shape {
            PsiShape::Linear(phi) => check(phi)?,
            PsiShape::MinLinear(phis) => phis.iter().try_for_each(check)?,
            PsiShape::Radial(c) if !c.is_finite() => {
                return Err(Error::InvalidModel(format!("radial scale {c}")))
            }
            PsiShape::Radial(_) => {}
        }
        if let SupportCone::Cap { axis, half_angle } = &self.support {
            check(axis)?;
            if (rs.norm(axis) - 1.0).abs() > 1e-9 || !rs.in_closed_chamber(axis) {
                return Err(Error::InvalidModel("cap axis must be a unit chamber vector".into()));
            }
            if !(*half_angle > 0.0) {
                return Err(Error::InvalidModel(format!("cap half-angle {half_angle}")));
            }
        }
        Ok(())
    }

    /// `psi(H)`: `0` at the origin, `-inf` off the support.
    pub fn evaluate(&self, rs: &RootSystem, h: &ChamberVector) -> f64 {
        if h.is_zero() {
            return 0.0;
        }
        if !self.support.contains(rs, h) {
            return f64::NEG_INFINITY;
        }
        match &self.shape {
            PsiShape::Linear(phi) => rs.inner(phi, h),
            PsiShape::MinLinear(phis) => phis.iter().map(|p| rs.inner(p, h)).fold(f64::INFINITY, f64::min),
            PsiShape::Radial(c) => c * rs.norm(h),
        }
    }

    /// Largest value of `psi(u) - 2 <rho, u>` on the unit chamber sphere;
    /// the model is admissible when this is not positive.
    pub fn admissibility_excess(&self, rs: &RootSystem) -> f64 {
        let rho = rs.rho().clone();
        sup_on_sphere(
            rs,
            |u| self.evaluate(rs, u) - 2.0 * rs.inner(&rho, u),
            SupOptions::for_rank(rs.rank()),
        )
        .map_or(f64::NEG_INFINITY, |s| s.value)
    }

    pub fn is_admissible(&self, rs: &RootSystem) -> bool {
        self.admissibility_excess(rs) <= 1e-9
    }
}

/// `psi(H)` for a model; see [`PsiModel::evaluate`].
pub fn evaluate_psi(rs: &RootSystem, m: &PsiModel, h: &ChamberVector) -> f64 {
    m.evaluate(rs, h)
}

fn join(v: &ChamberVector) -> String {
    v.coords().iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(";")
}

impl fmt::Display for PsiModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.shape {
            PsiShape::Linear(phi) => write!(f, "linear[{}]", join(phi))?,
            PsiShape::MinLinear(phis) => {
                let parts: Vec<String> = phis.iter().map(join).collect();
                write!(f, "minlinear[{}]", parts.join("/"))?
            }
            PsiShape::Radial(c) => write!(f, "radial[{c}]")?,
        }
        if let SupportCone::Cap { axis, half_angle } = &self.support {
            write!(f, " cap[{};{half_angle}]", join(axis))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    /// Direction grid resolution (points along the rank-2 arc).
    pub resolution: usize,
    pub r_max: f64,
    pub seed: u64,
    /// Direction jitter as a fraction of half a grid cell; 0 disables it.
    pub jitter: f64,
    /// Points per ray emitted one by one before merging into weighted records.
    pub dense_limit: u64,
    /// Radial spacing of merged records.
    pub block_step: f64,
    pub record_cap: u64,
}

impl SynthConfig {
    pub fn new(resolution: usize, r_max: f64) -> Self {
        Self {
            resolution,
            r_max,
            seed: 0,
            jitter: 0.0,
            dense_limit: 2048,
            block_step: 0.005,
            record_cap: 10_000_000,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.resolution < 2 {
            return Err(Error::InvalidConfig("resolution must be at least 2".into()));
        }
        if !(self.r_max > 0.0 && self.r_max.is_finite()) {
            return Err(Error::InvalidConfig(format!("r_max must be positive, got {}", self.r_max)));
        }
        if !(0.0..=1.0).contains(&self.jitter) {
            return Err(Error::InvalidConfig("jitter must lie in [0, 1]".into()));
        }
        if self.dense_limit < 2 || !(self.block_step > 0.0) {
            return Err(Error::InvalidConfig("dense_limit >= 2 and block_step > 0 required".into()));
        }
        Ok(())
    }
}

/// `(radius, weight)` pairs of one ray, excluding the origin.
fn ray_points(rate: f64, r_max: f64, dense_limit: u64, block_step: f64) -> Vec<(f64, f64)> {
    let top = (rate * r_max).exp().floor();
    let mut out = Vec::new();
    let dense_top = top.min(dense_limit as f64) as u64;
    for k in 2..=dense_top {
        out.push(((k as f64).ln() / rate, 1.0));
    }
    if top <= dense_limit as f64 {
        return out;
    }
    let mut prev = dense_limit as f64;
    let mut radius = prev.ln() / rate;
    while prev < top {
        radius += block_step;
        let end = (rate * radius).exp().floor().min(top);
        if end > prev {
            out.push((end.ln() / rate, end - prev));
            prev = end;
        }
    }
    out
}

/// Number of records `sample_orbit` will emit for one ray.
fn ray_record_count(rate: f64, r_max: f64, dense_limit: u64, block_step: f64) -> f64 {
    let top = (rate * r_max).exp().floor();
    if top <= dense_limit as f64 {
        return (top - 1.0).max(0.0);
    }
    (dense_limit - 1) as f64 + ((top.ln() - (dense_limit as f64).ln()) / rate / block_step).ceil() + 1.0
}

fn jitter_direction(rs: &RootSystem, u: &ChamberVector, amount: f64, rng: &mut ChaCha8Rng) -> ChamberVector {
    let g = rs.random_vector(rng);
    let tangent = g.add_scaled(-rs.inner(&g, u), u);
    let tn = rs.norm(&tangent);
    if tn == 0.0 {
        return u.clone();
    }
    let angle = amount * rng.random::<f64>();
    let v = u.scaled(angle.cos()).add_scaled(angle.sin() / tn, &tangent);
    rs.normalized(&rs.fold_into_chamber(&v))
}

/// Hex SHA-256 identifying a model and configuration.
pub fn synth_fingerprint(rs: &RootSystem, m: &PsiModel, cfg: &SynthConfig) -> String {
    let text = format!(
        "{}|{m}|{}|{:.16e}|{}|{:.16e}|{}|{:.16e}",
        rs.descriptor(),
        cfg.resolution,
        cfg.r_max,
        cfg.seed,
        cfg.jitter,
        cfg.dense_limit,
        cfg.block_step
    );
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Synthetic point cloud whose directional counts grow like `exp(psi(u) R)`
/// along the grid directions.
pub fn sample_orbit(rs: &RootSystem, m: &PsiModel, cfg: &SynthConfig) -> Result<OrbitDataset> {
    cfg.validate()?;
    m.validate(rs)?;
    if !m.is_admissible(rs) {
        return Err(Error::InvalidModel(format!("{m} exceeds 2 rho somewhere on the chamber")));
    }
    let grid = DirectionGrid::new(rs, cfg.resolution);
    let rates: Vec<(usize, &ChamberVector, f64)> = grid
        .directions
        .iter()
        .enumerate()
        .map(|(j, u)| (j, u, m.evaluate(rs, u)))
        .filter(|&(_, _, rate)| rate > 0.0 && rate.is_finite())
        .collect();
    if rates.is_empty() {
        return Err(Error::InvalidModel(format!("{m} is nonpositive on every grid direction; nothing to sample")));
    }
    let predicted: f64 = 1.0
        + rates
            .iter()
            .map(|&(_, _, rate)| ray_record_count(rate, cfg.r_max, cfg.dense_limit, cfg.block_step))
            .sum::<f64>();
    if predicted > cfg.record_cap as f64 {
        return Err(Error::RecordCap {
            predicted,
            cap: cfg.record_cap,
        });
    }
    let half_cell = 0.5 * grid.spacing.unwrap_or(0.0) * cfg.jitter;

    let rays: Vec<Vec<OrbitRecord>> = rates
        .par_iter()
        .map(|&(j, u, rate)| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ j as u64);
            ray_points(rate, cfg.r_max, cfg.dense_limit, cfg.block_step)
                .into_iter()
                .map(|(r, w)| {
                    let dir = if half_cell > 0.0 {
                        jitter_direction(rs, u, half_cell, &mut rng)
                    } else {
                        u.clone()
                    };
                    OrbitRecord::new(rs, 0, dir.scaled(r), w)
                })
                .collect()
        })
        .collect();

    let mut records = Vec::with_capacity(predicted as usize);
    records.push(OrbitRecord::new(rs, 0, ChamberVector::zeros(rs.ambient_dim()), 1.0));
    for ray in rays {
        records.extend(ray);
    }
    let weighted = records.iter().any(|r| r.weight != 1.0);
    let mut ds = OrbitDataset {
        header: DatasetHeader {
            group: rs.descriptor().clone(),
            synthetic: true,
            form: rs.form_label().to_string(),
            fingerprint: synth_fingerprint(rs, m, cfg),
            max_length: 0,
            dedup: DedupMode::None,
            weighted,
            meta: vec![
                ("model".into(), m.to_string()),
                ("resolution".into(), cfg.resolution.to_string()),
                ("rmax".into(), format!("{}", cfg.r_max)),
                ("seed".into(), cfg.seed.to_string()),
                ("jitter".into(), format!("{}", cfg.jitter)),
            ],
        },
        records,
    };
    ds.sort_canonical();
    Ok(ds)
}
