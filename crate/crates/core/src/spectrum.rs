//! From growth data to the bottom of the spectrum.
//!
//! The modified critical exponent is computed from a growth profile `psi` as
//! `sup psi(u) |rho| / <rho, u>` when `psi <= rho`, and as
//! `|rho| + sup (psi(u) - <rho, u>)` otherwise, with both suprema over the
//! unit sphere of the closed chamber. The bottom of the spectrum is then
//! `|rho|^2` below `|rho|` and `|rho|^2 - (delta_tilde - |rho|)^2` above it.

use std::fmt::Write as _;
use std::io::Write;

use crate::chamber::{ChamberVector, RootSystem};
use crate::error::{Error, Result};
use crate::estimate::GrowthIndicatorEstimate;
use crate::gauge::GaugeFamily;
use crate::sphere::{sup_on_sphere, SupOptions};
use crate::synth::PsiModel;

/// A growth profile: an analytic model or a directional estimate.
#[derive(Debug, Clone, Copy)]
pub enum PsiInput<'a> {
    Model(&'a PsiModel),
    Estimate(&'a GrowthIndicatorEstimate),
}

impl<'a> From<&'a PsiModel> for PsiInput<'a> {
    fn from(m: &'a PsiModel) -> Self {
        PsiInput::Model(m)
    }
}

impl<'a> From<&'a GrowthIndicatorEstimate> for PsiInput<'a> {
    fn from(e: &'a GrowthIndicatorEstimate) -> Self {
        PsiInput::Estimate(e)
    }
}

impl PsiInput<'_> {
    /// Supremum of `f(psi(u), u)` over unit chamber directions with finite
    /// `psi(u)`; `None` when there are none.
    pub fn sup<F>(&self, rs: &RootSystem, f: F) -> Option<f64>
    where
        F: Fn(f64, &ChamberVector) -> f64 + Sync,
    {
        match self {
            PsiInput::Model(m) => sup_on_sphere(
                rs,
                |u| {
                    let p = m.evaluate(rs, u);
                    if p.is_finite() {
                        f(p, u)
                    } else {
                        f64::NEG_INFINITY
                    }
                },
                SupOptions::for_rank(rs.rank()),
            )
            .map(|s| s.value),
            PsiInput::Estimate(e) => e
                .directions
                .iter()
                .zip(&e.values)
                .filter(|(_, p)| p.is_finite())
                .map(|(u, &p)| f(p, u))
                .filter(|v| !v.is_nan())
                .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v)))),
        }
    }

    /// `psi` at the unit `rho` direction.
    pub fn at_rho_axis(&self, rs: &RootSystem) -> f64 {
        let axis = rs.rho_direction();
        match self {
            PsiInput::Model(m) => m.evaluate(rs, &axis),
            PsiInput::Estimate(e) => e.value_near(rs, &axis),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `psi <= rho`.
    Tame,
    /// `psi` exceeds `rho` somewhere.
    Excess,
    /// `psi` is `-inf` on every direction.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaTilde {
    pub value: f64,
    pub branch: Branch,
    /// `sup (psi(u) - <rho, u>)`, or `-inf` for a degenerate profile.
    pub excess: f64,
}

/// `sup (psi(u) - <rho, u>)` over unit chamber directions.
pub fn rho_excess(rs: &RootSystem, psi: PsiInput<'_>) -> Option<f64> {
    let rho = rs.rho().clone();
    psi.sup(rs, |p, u| p - rs.inner(&rho, u))
}

/// Modified critical exponent of a growth profile. Profiles that are
/// nonpositive wherever finite give `0`.
pub fn delta_tilde_from_psi(rs: &RootSystem, psi: PsiInput<'_>) -> DeltaTilde {
    let rn = rs.rho_norm();
    let Some(excess) = rho_excess(rs, psi) else {
        return DeltaTilde {
            value: 0.0,
            branch: Branch::Degenerate,
            excess: f64::NEG_INFINITY,
        };
    };
    if excess <= 0.0 {
        let rho = rs.rho().clone();
        let ratio = psi
            .sup(rs, |p, u| {
                let pairing = rs.inner(&rho, u);
                debug_assert!(pairing > 1e-9, "rho pairing vanished on a unit chamber vector");
                p * rn / pairing
            })
            .unwrap_or(0.0);
        DeltaTilde {
            value: ratio.max(0.0),
            branch: Branch::Tame,
            excess,
        }
    } else {
        DeltaTilde {
            value: rn + excess,
            branch: Branch::Excess,
            excess,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lambda0 {
    pub value: f64,
    /// The input exponent was outside `[0, 2|rho|]` and was clamped.
    pub clamped: bool,
}

pub fn lambda0_from_delta_tilde(rs: &RootSystem, delta_tilde: f64) -> Lambda0 {
    let rn = rs.rho_norm();
    let d = delta_tilde.clamp(0.0, 2.0 * rn);
    let value = if d <= rn { rn * rn } else { rn * rn - (d - rn).powi(2) };
    Lambda0 {
        value: value.clamp(0.0, rn * rn),
        clamped: d != delta_tilde,
    }
}

/// `|rho|^2 - max(0, sup (psi(u) - <rho, u>))^2`.
pub fn lambda0_from_psi(rs: &RootSystem, psi: PsiInput<'_>) -> f64 {
    let rn = rs.rho_norm();
    let excess = rho_excess(rs, psi).unwrap_or(f64::NEG_INFINITY).max(0.0);
    (rn * rn - excess * excess).clamp(0.0, rn * rn)
}

/// `sup (psi(u) - d_s(u))` over unit chamber directions.
fn gauge_gap(rs: &RootSystem, psi: PsiInput<'_>, gauge: &dyn GaugeFamily, s: f64) -> Option<f64> {
    psi.sup(rs, |p, u| p - gauge.eval(rs, s, u))
}

const BISECTION_STEPS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeBoundReport {
    /// `inf { s : d_s(u) > psi(u) for every unit chamber u }`.
    pub threshold: f64,
    pub delta: f64,
    /// `threshold - delta`; nonnegative when the exponent is below the threshold.
    pub threshold_margin: f64,
    /// `inf_u (d_delta(u) - psi(u))`; nonnegative when `psi <= d_delta`.
    pub domination_margin: f64,
}

/// The two bounds tying the convergence exponent `delta` of a gauge family
/// to the growth profile: `delta` is at most the threshold where `d_s`
/// starts to dominate `psi`, and `psi <= d_delta`.
pub fn gauge_bounds(rs: &RootSystem, psi: PsiInput<'_>, gauge: &dyn GaugeFamily, delta: f64) -> Result<GaugeBoundReport> {
    let rn = rs.rho_norm();
    let upper = 4.0 * rn;
    let Some(gap0) = gauge_gap(rs, psi, gauge, 0.0) else {
        return Err(Error::InvalidModel("growth profile is -inf on every direction".into()));
    };
    let threshold = if gap0 < 0.0 {
        0.0
    } else {
        let top = gauge_gap(rs, psi, gauge, upper).unwrap_or(f64::NEG_INFINITY);
        if top >= 0.0 {
            return Err(Error::Bracket(format!(
                "{} never dominates psi up to s = {upper}",
                gauge.label()
            )));
        }
        let (mut lo, mut hi) = (0.0, upper);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if gauge_gap(rs, psi, gauge, mid).unwrap_or(f64::NEG_INFINITY) < 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let domination = -gauge_gap(rs, psi, gauge, delta).unwrap_or(f64::NEG_INFINITY);
    Ok(GaugeBoundReport {
        threshold,
        delta,
        threshold_margin: threshold - delta,
        domination_margin: domination,
    })
}

/// Convergence exponent of `sum exp(-d_s(mu))` over a point cloud realizing
/// `psi`: the largest, over directions, of the `s` at which `d_s(u)`
/// reaches `psi(u)`. Each direction is solved separately, so the result is
/// independent of the bisection in [`gauge_bounds`].
pub fn gauge_exponent(rs: &RootSystem, psi: PsiInput<'_>, gauge: &dyn GaugeFamily) -> Result<f64> {
    let upper = 4.0 * rs.rho_norm();
    let crossing = |p: f64, u: &ChamberVector| -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        if gauge.eval(rs, upper, u) <= p {
            return f64::INFINITY;
        }
        let (mut lo, mut hi) = (0.0, upper);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if gauge.eval(rs, mid, u) > p {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let value = psi
        .sup(rs, crossing)
        .ok_or_else(|| Error::InvalidModel("growth profile is -inf on every direction".into()))?;
    if value.is_infinite() {
        return Err(Error::Bracket(format!("{} never dominates psi up to s = {upper}", gauge.label())));
    }
    Ok(value)
}

/// Where an input to the report came from; selects the flag tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Analytic,
    Dataset,
}

impl Source {
    pub fn tolerance(self) -> f64 {
        match self {
            Source::Analytic => 1e-6,
            Source::Dataset => 0.05,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Source::Analytic => "analytic",
            Source::Dataset => "dataset",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ConditionInputs<'a> {
    pub delta: Option<f64>,
    pub delta_tilde: Option<f64>,
    pub psi: Option<PsiInput<'a>>,
    pub source: Option<Source>,
    /// Finite covolume, as declared by the user; never computed.
    pub lattice: Option<bool>,
    /// Temperedness, as declared by the user; never computed.
    pub tempered: Option<bool>,
}

/// Flags of the equivalent small-exponent conditions and of the
/// large-exponent conditions. `None` means the needed input is missing.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConditionFlags {
    /// `delta_tilde <= |rho|`.
    pub a: Option<bool>,
    /// `psi <= rho`.
    pub b: Option<bool>,
    /// `lambda_0 = |rho|^2`.
    pub c: Option<bool>,
    /// `delta = 2|rho|`.
    pub i: Option<bool>,
    /// `delta_tilde = 2|rho|`.
    pub ii: Option<bool>,
    /// `lambda_0 = 0`.
    pub iv: Option<bool>,
    /// `psi = 2 rho`.
    pub v: Option<bool>,
    /// `psi(rho/|rho|) = 2|rho|`.
    pub vi: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub group: String,
    pub rho_norm: f64,
    pub delta: Option<f64>,
    pub delta_tilde: Option<f64>,
    pub delta_tilde_from_psi: Option<f64>,
    pub lambda0_from_delta_tilde: Option<f64>,
    pub lambda0_from_psi: Option<f64>,
    pub source: Source,
    pub tolerance: f64,
    /// Withheld (`None`) when the inputs contradict each other.
    pub flags: Option<ConditionFlags>,
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
    pub lattice: Option<bool>,
    pub tempered: Option<bool>,
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

/// Evaluates both spectral formulas and every computable condition flag.
pub fn check_conditions(rs: &RootSystem, inputs: &ConditionInputs<'_>) -> Result<SpectralReport> {
    if inputs.delta_tilde.is_none() && inputs.psi.is_none() {
        return Err(Error::InvalidConfig(
            "a spectral report needs the modified exponent or a growth profile".into(),
        ));
    }
    let rn = rs.rho_norm();
    let source = inputs.source.unwrap_or(Source::Analytic);
    let tol = source.tolerance();
    let mut warnings = Vec::new();
    let mut violations = Vec::new();

    let from_psi = inputs.psi.map(|p| delta_tilde_from_psi(rs, p));
    if matches!(from_psi, Some(d) if d.branch == Branch::Degenerate) {
        warnings.push("growth profile is -inf everywhere; modified exponent taken as 0".into());
    }
    let sup_psi = inputs
        .psi
        .and_then(|p| p.sup(rs, |v, _| v))
        .map(|s| s.max(0.0));
    let delta = inputs.delta.or(sup_psi);
    let delta_tilde = inputs.delta_tilde.or(from_psi.map(|d| d.value));

    let lambda_dt = delta_tilde.map(|d| {
        let l = lambda0_from_delta_tilde(rs, d);
        if l.clamped {
            warnings.push(format!("modified exponent {d} clamped to [0, {}]", 2.0 * rn));
        }
        l.value
    });
    let lambda_psi = inputs.psi.map(|p| lambda0_from_psi(rs, p));

    if let (Some(given), Some(derived)) = (inputs.delta_tilde, from_psi) {
        if (given - derived.value).abs() > 2.0 * tol {
            violations.push(format!(
                "modified exponent {given} disagrees with {} derived from psi",
                derived.value
            ));
        }
    }
    if let (Some(given), Some(s)) = (inputs.delta, sup_psi) {
        if (given - s).abs() > 2.0 * tol {
            violations.push(format!("critical exponent {given} disagrees with sup psi = {s}"));
        }
    }
    if let (Some(d), Some(dt)) = (delta, delta_tilde) {
        if d > dt + tol {
            violations.push(format!("critical exponent {d} exceeds modified exponent {dt}"));
        }
    }

    let flags = violations.is_empty().then(|| {
        let rho = rs.rho().clone();
        let lambda = lambda_dt.or(lambda_psi);
        let psi_rho_gap = inputs.psi.and_then(|p| rho_excess(rs, p));
        let psi_two_rho = inputs.psi.map(|p| match p {
            PsiInput::Estimate(e) if e.values.iter().any(|v| !v.is_finite()) => false,
            _ => {
                let over = p.sup(rs, |v, u| v - 2.0 * rs.inner(&rho, u));
                let under = p.sup(rs, |v, u| 2.0 * rs.inner(&rho, u) - v);
                matches!((over, under), (Some(a), Some(b)) if a <= tol && b <= tol)
            }
        });
        ConditionFlags {
            a: delta_tilde.map(|d| d <= rn + tol),
            b: inputs.psi.map(|_| psi_rho_gap.is_none_or(|g| g <= tol)),
            c: lambda.map(|l| within(l, rn * rn, tol * tol)),
            i: delta.map(|d| within(d, 2.0 * rn, tol)),
            ii: delta_tilde.map(|d| within(d, 2.0 * rn, tol)),
            iv: lambda.map(|l| l <= 2.0 * rn * tol - tol * tol),
            v: psi_two_rho,
            vi: inputs.psi.map(|p| within(p.at_rho_axis(rs), 2.0 * rn, tol)),
        }
    });

    Ok(SpectralReport {
        group: rs.descriptor().to_string(),
        rho_norm: rn,
        delta,
        delta_tilde,
        delta_tilde_from_psi: from_psi.map(|d| d.value),
        lambda0_from_delta_tilde: lambda_dt,
        lambda0_from_psi: lambda_psi,
        source,
        tolerance: tol,
        flags,
        violations,
        warnings,
        lattice: inputs.lattice,
        tempered: inputs.tempered,
    })
}

fn opt_num(x: Option<f64>) -> String {
    x.map_or_else(|| "na".into(), |v| format!("{v}"))
}

fn opt_flag(x: Option<bool>) -> String {
    x.map_or_else(|| "na".into(), |v| v.to_string())
}

impl SpectralReport {
    /// `(key, value)` pairs in a fixed order.
    pub fn fields(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = vec![
            ("group".into(), self.group.clone()),
            ("rho_norm".into(), format!("{}", self.rho_norm)),
            ("source".into(), self.source.label().into()),
            ("tolerance".into(), format!("{}", self.tolerance)),
            ("delta".into(), opt_num(self.delta)),
            ("delta_tilde".into(), opt_num(self.delta_tilde)),
            ("delta_tilde_from_psi".into(), opt_num(self.delta_tilde_from_psi)),
            ("lambda0_from_delta_tilde".into(), opt_num(self.lambda0_from_delta_tilde)),
            ("lambda0_from_psi".into(), opt_num(self.lambda0_from_psi)),
            ("consistent".into(), self.flags.is_some().to_string()),
        ];
        let withheld = "withheld".to_string();
        let f = self.flags;
        let flag = |get: fn(&ConditionFlags) -> Option<bool>| f.as_ref().map_or(withheld.clone(), |f| opt_flag(get(f)));
        out.push(("flag_A".into(), flag(|f| f.a)));
        out.push(("flag_B".into(), flag(|f| f.b)));
        out.push(("flag_C".into(), flag(|f| f.c)));
        out.push(("flag_i".into(), flag(|f| f.i)));
        out.push(("flag_ii".into(), flag(|f| f.ii)));
        out.push(("flag_iii".into(), opt_flag(self.lattice)));
        out.push(("flag_iv".into(), flag(|f| f.iv)));
        out.push(("flag_v".into(), flag(|f| f.v)));
        out.push(("flag_vi".into(), flag(|f| f.vi)));
        out.push(("flag_D".into(), opt_flag(self.tempered)));
        for (i, v) in self.violations.iter().enumerate() {
            out.push((format!("violation_{}", i + 1), v.clone()));
        }
        for (i, w) in self.warnings.iter().enumerate() {
            out.push((format!("warning_{}", i + 1), w.clone()));
        }
        out
    }

    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.fields() {
            writeln!(s, "{k}={v}").unwrap();
        }
        s
    }

    /// Header row and a single value row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let fields: Vec<(String, String)> = self
            .fields()
            .into_iter()
            .filter(|(k, _)| !k.starts_with("violation_") && !k.starts_with("warning_"))
            .collect();
        let keys: Vec<&str> = fields.iter().map(|(k, _)| k.as_str()).collect();
        let values: Vec<String> = fields.iter().map(|(_, v)| v.replace(',', ";")).collect();
        writeln!(out, "{}", keys.join(","))?;
        writeln!(out, "{}", values.join(","))
    }
}
