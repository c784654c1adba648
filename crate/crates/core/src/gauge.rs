//! Gauge families `s -> d_s` on the closed chamber.
//!
//! A gauge family is a map `(s, H) -> d_s(H) >= 0` that vanishes at `s = 0`,
//! is positive for `s > 0` and `H != 0`, is homogeneous of degree one in `H`,
//! and is nondecreasing and continuous in `s`. The convergence exponent of
//! `sum exp(-d_s(mu(gamma)))` is bounded by the growth indicator through any
//! such family (see [`crate::spectrum::gauge_bounds`]).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chamber::{ChamberVector, RootSystem};
use crate::error::Result;

/// The hybrid polyhedral/Riemannian gauge
/// `min{s, |rho|} <rho/|rho|, H> + max{s - |rho|, 0} |H|`.
pub fn polyhedral_gauge(rs: &RootSystem, s: f64, h: &ChamberVector) -> Result<f64> {
    rs.check_chamber(h)?;
    Ok(polyhedral_gauge_unchecked(rs, s, h))
}

#[inline]
pub(crate) fn polyhedral_gauge_unchecked(rs: &RootSystem, s: f64, h: &ChamberVector) -> f64 {
    let rn = rs.rho_norm();
    s.min(rn) * (rs.rho_pairing(h) / rn) + (s - rn).max(0.0) * rs.norm(h)
}

pub trait GaugeFamily: Sync {
    fn label(&self) -> String;

    /// `d_s(H)` for `H` in the closed chamber.
    fn eval(&self, rs: &RootSystem, s: f64, h: &ChamberVector) -> f64;
}

/// `d_s(H) = s |H|`; its convergence exponent is the classical critical exponent.
#[derive(Debug, Clone, Copy, Default)]
pub struct RiemannianGauge;

impl GaugeFamily for RiemannianGauge {
    fn label(&self) -> String {
        "riemannian".into()
    }

    fn eval(&self, rs: &RootSystem, s: f64, h: &ChamberVector) -> f64 {
        s * rs.norm(h)
    }
}

/// The polyhedral gauge; its convergence exponent is the modified critical exponent.
#[derive(Debug, Clone, Copy, Default)]
pub struct PolyhedralGauge;

impl GaugeFamily for PolyhedralGauge {
    fn label(&self) -> String {
        "polyhedral".into()
    }

    fn eval(&self, rs: &RootSystem, s: f64, h: &ChamberVector) -> f64 {
        polyhedral_gauge_unchecked(rs, s, h)
    }
}

/// `(1 - w) a_s + w b_s`.
pub struct ConvexGauge<A, B> {
    pub first: A,
    pub second: B,
    pub weight: f64,
}

impl<A: GaugeFamily, B: GaugeFamily> GaugeFamily for ConvexGauge<A, B> {
    fn label(&self) -> String {
        format!(
            "{}*{}+{}*{}",
            1.0 - self.weight,
            self.first.label(),
            self.weight,
            self.second.label()
        )
    }

    fn eval(&self, rs: &RootSystem, s: f64, h: &ChamberVector) -> f64 {
        (1.0 - self.weight) * self.first.eval(rs, s, h) + self.weight * self.second.eval(rs, s, h)
    }
}

/// A gauge given by a closure, mostly for audits of hand-written families.
pub struct FnGauge<F> {
    pub label: String,
    pub f: F,
}

impl<F> GaugeFamily for FnGauge<F>
where
    F: Fn(&RootSystem, f64, &ChamberVector) -> f64 + Sync,
{
    fn label(&self) -> String {
        self.label.clone()
    }

    fn eval(&self, rs: &RootSystem, s: f64, h: &ChamberVector) -> f64 {
        (self.f)(rs, s, h)
    }
}

/// Worst violation of one gauge axiom over the sampled pairs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AxiomCheck {
    pub worst: f64,
    pub failures: usize,
}

impl AxiomCheck {
    fn record(&mut self, violation: f64, failed: bool) {
        if violation > self.worst {
            self.worst = violation;
        }
        if failed {
            self.failures += 1;
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaugeAudit {
    pub label: String,
    pub samples: usize,
    pub zero_at_origin: AxiomCheck,
    pub positivity: AxiomCheck,
    pub homogeneity: AxiomCheck,
    pub monotonicity: AxiomCheck,
    pub continuity: AxiomCheck,
}

impl GaugeAudit {
    pub fn passed(&self) -> bool {
        [
            &self.zero_at_origin,
            &self.positivity,
            &self.homogeneity,
            &self.monotonicity,
            &self.continuity,
        ]
        .iter()
        .all(|c| c.passed())
    }
}

const AUDIT_TOL: f64 = 1e-12;
const CONTINUITY_STEP: f64 = 1e-9;
const LIPSCHITZ_BOUND: f64 = 1e3;

/// Audits the gauge-family axioms on `samples` random `(s, H)` pairs.
///
/// Violations are measured relative to `max(1, |d|)`. Continuity in `s` is
/// probed as a Lipschitz modulus: a step of `1e-9` in `s` may move `d_s(H)` by
/// at most `1e3 * 1e-9 * (1 + |H|)`.
pub fn verify_gauge_family(
    gauge: &dyn GaugeFamily,
    rs: &RootSystem,
    samples: usize,
    seed: u64,
) -> GaugeAudit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s_max = 3.0 * rs.rho_norm();
    let mut audit = GaugeAudit {
        label: gauge.label(),
        samples,
        zero_at_origin: AxiomCheck::default(),
        positivity: AxiomCheck::default(),
        homogeneity: AxiomCheck::default(),
        monotonicity: AxiomCheck::default(),
        continuity: AxiomCheck::default(),
    };

    for _ in 0..samples.max(1) {
        let scale = 10f64.powf(rng.random_range(-2.0..2.0));
        let h = rs.random_chamber_vector(&mut rng).scaled(scale);
        if h.is_zero() {
            continue;
        }
        let hn = rs.norm(&h);
        let s1 = rng.random_range(0.0..s_max);
        let s2 = rng.random_range(0.0..s_max);
        let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };

        let d0 = gauge.eval(rs, 0.0, &h);
        audit.zero_at_origin.record(d0.abs(), d0.abs() > AUDIT_TOL * hn.max(1.0));

        if hi > 0.0 {
            let d = gauge.eval(rs, hi, &h);
            audit.positivity.record((-d).max(0.0), !(d > 0.0));
        }

        let t = 10f64.powf(rng.random_range(-1.5..1.5));
        let d = gauge.eval(rs, hi, &h);
        let dt = gauge.eval(rs, hi, &h.scaled(t));
        let err = (dt - t * d).abs() / (t * d.abs()).max(1.0);
        audit.homogeneity.record(err, err > AUDIT_TOL);

        let dlo = gauge.eval(rs, lo, &h);
        let dhi = gauge.eval(rs, hi, &h);
        let drop = (dlo - dhi).max(0.0) / dhi.abs().max(1.0);
        audit.monotonicity.record(drop, drop > AUDIT_TOL);

        let step = gauge.eval(rs, lo + CONTINUITY_STEP, &h) - dlo;
        let excess = (step.abs() - LIPSCHITZ_BOUND * CONTINUITY_STEP * (1.0 + hn)).max(0.0);
        audit.continuity.record(excess, excess > 0.0);
    }
    audit
}
