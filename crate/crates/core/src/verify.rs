//! Self-check suites run by `cpd verify`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cartan::{cartan_projection, element_with_projection, random_rotation, GroupElement};
use crate::chamber::{ChamberVector, GroupDescriptor, RootSystem};
use crate::error::{Error, Result};
use crate::estimate::{
    classical_exponent_from_psi_check, critical_exponent, default_cone_angles, growth_indicator,
    modified_critical_exponent, DEFAULT_WINDOW_FRACTION,
};
use crate::gauge::{polyhedral_gauge, verify_gauge_family, ConvexGauge, GaugeFamily, PolyhedralGauge, RiemannianGauge};
use crate::orbit::{enumerate, DedupMode, EnumerateOptions, GeneratorSet};
use crate::spectrum::{
    delta_tilde_from_psi, gauge_exponent, lambda0_from_delta_tilde, lambda0_from_psi, gauge_bounds, rho_excess,
    Branch,
};
use crate::sphere::DirectionGrid;
use crate::synth::{sample_orbit, PsiModel, SynthConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Analytic,
    Estimators,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(Suite::Analytic),
            "estimators" => Ok(Suite::Estimators),
            "all" => Ok(Suite::All),
            other => Err(Error::InvalidConfig(format!("unknown suite '{other}'"))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Analytic => "analytic",
            Suite::Estimators => "estimators",
            Suite::All => "all",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuiteReport {
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail,
        });
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        Ok(())
    }
}

fn root_system(desc: &str) -> RootSystem {
    RootSystem::new(&desc.parse::<GroupDescriptor>().expect("built-in descriptor"))
}

/// A random minimum of one to three linear forms, bounded by `c rho` for
/// some `c` in `[0.2, 2]`, so it never exceeds `2 rho`.
pub fn random_min_linear<R: Rng>(rs: &RootSystem, rng: &mut R) -> PsiModel {
    let rn = rs.rho_norm();
    let c = rng.random_range(0.2..2.0);
    let mut phis = vec![rs.rho().scaled(c)];
    for _ in 0..rng.random_range(0..3) {
        let g = rs.random_vector(rng);
        let tilt = rs.normalized(&g).scaled(rng.random_range(0.0..0.6) * rn);
        phis.push(rs.rho().scaled(rng.random_range(0.2..2.5)).add(&tilt));
    }
    PsiModel::min_linear(phis).expect("nonempty")
}

/// Root systems of ranks one to three.
pub fn sample_root_systems() -> Vec<RootSystem> {
    ["sl2", "sl3", "sl2xsl2", "sl4", "sl2xsl3"]
        .iter()
        .map(|d| root_system(d))
        .collect()
}

fn gauge_checks(report: &mut SuiteReport, seed: u64) {
    let rs = root_system("sl3");
    let convex = ConvexGauge {
        first: RiemannianGauge,
        second: PolyhedralGauge,
        weight: 0.5,
    };
    let gauges: [&dyn GaugeFamily; 3] = [&PolyhedralGauge, &RiemannianGauge, &convex];
    for g in gauges {
        let audit = verify_gauge_family(g, &rs, 10_000, seed);
        report.push(
            &format!("gauge axioms ({})", g.label()),
            audit.passed(),
            format!(
                "worst homogeneity {:.1e}, monotonicity {:.1e}",
                audit.homogeneity.worst, audit.monotonicity.worst
            ),
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let h = rs.random_chamber_vector(&mut rng).scaled(rng.random_range(0.0..10.0));
        let d = polyhedral_gauge(&rs, rs.rho_norm(), &h).expect("chamber vector");
        worst = worst.max((d - rs.rho_pairing(&h)).abs() / rs.rho_pairing(&h).max(1.0));
    }
    report.push("gauge at |rho| is <rho, H>", worst <= 1e-12, format!("worst {worst:.1e}"));
}

fn cartan_checks(report: &mut SuiteReport, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for n in [2usize, 3] {
        let rs = root_system(&format!("sl{n}"));
        for _ in 0..200 {
            let mut h: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let mean = h.iter().sum::<f64>() / n as f64;
            h.iter_mut().for_each(|x| *x -= mean);
            let g = element_with_projection(&h, &mut rng);
            let k1 = random_rotation(n, &mut rng);
            let k2 = random_rotation(n, &mut rng);
            let mu = |m| cartan_projection(&rs, &GroupElement::new(vec![m]).expect("unimodular"));
            let (Ok(a), Ok(b)) = (mu(g.clone()), mu(&k1 * &g * &k2)) else {
                worst = f64::INFINITY;
                continue;
            };
            let inv = mu(g.clone().lu().try_inverse().expect("invertible")).expect("unimodular");
            let mut reversed: Vec<f64> = a.coords().iter().map(|x| -x).collect();
            reversed.reverse();
            for i in 0..n {
                worst = worst.max((a[i] - b[i]).abs()).max((inv[i] - reversed[i]).abs());
            }
            if !rs.in_closed_chamber(&a) {
                worst = f64::INFINITY;
            }
        }
    }
    report.push(
        "cartan projection invariances",
        worst <= 1e-9,
        format!("worst deviation {worst:.1e}"),
    );
}

fn exponent_formula_checks(report: &mut SuiteReport, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for rs in sample_root_systems() {
        let rn = rs.rho_norm();
        for (c, want) in [(0.8, 0.8 * rn), (2.0, 2.0 * rn)] {
            let m = PsiModel::scaled_rho(&rs, c);
            let got = delta_tilde_from_psi(&rs, (&m).into()).value;
            report.push(
                &format!("modified exponent of {c} rho on {}", rs.descriptor()),
                (got - want).abs() <= 1e-6,
                format!("{got} vs {want}"),
            );
        }
    }

    let (mut identity, mut coherent, mut monotone, mut bounded) = (0.0_f64, true, true, true);
    for i in 0..100 {
        let rs = &sample_root_systems()[i % 5];
        let rn = rs.rho_norm();
        let m = random_min_linear(rs, &mut rng);
        let dt = delta_tilde_from_psi(rs, (&m).into());
        let a = lambda0_from_psi(rs, (&m).into());
        let b = lambda0_from_delta_tilde(rs, dt.value).value;
        identity = identity.max((a - b).abs());
        let below_rho = rho_excess(rs, (&m).into()).is_none_or(|e| e <= 1e-12);
        coherent &= (dt.value <= rn + 1e-12) == below_rho && (dt.branch == Branch::Tame) == below_rho;
        bounded &= (0.0..=rn * rn).contains(&a) && (0.0..=rn * rn).contains(&b);
        let bump = crate::synth::PsiShape::MinLinear(match &m.shape {
            crate::synth::PsiShape::MinLinear(phis) => phis.iter().map(|p| p.add(&rs.rho().scaled(0.1))).collect(),
            _ => unreachable!(),
        });
        let bigger = PsiModel {
            shape: bump,
            support: m.support.clone(),
        };
        monotone &= delta_tilde_from_psi(rs, (&bigger).into()).value >= dt.value - 1e-12;
    }
    report.push(
        "lambda0 from psi equals lambda0 of the modified exponent",
        identity <= 1e-9,
        format!("worst {identity:.1e} over 100 models"),
    );
    report.push("branch coherence", coherent, "100 models".into());
    report.push("monotone in psi", monotone, "100 models".into());
    report.push("lambda0 within [0, |rho|^2]", bounded, "100 models".into());

    let rs = root_system("sl2");
    let mut collapse: f64 = 0.0;
    for delta in [0.1, 0.3, 0.5, 0.7, 1.0, 1.4] {
        let m = PsiModel::radial(delta);
        collapse = collapse.max((delta_tilde_from_psi(&rs, (&m).into()).value - delta).abs());
    }
    report.push("rank one: modified exponent equals critical exponent", collapse <= 1e-12, format!("worst {collapse:.1e}"));
}

fn gauge_bound_checks(report: &mut SuiteReport, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let convex = ConvexGauge {
        first: RiemannianGauge,
        second: PolyhedralGauge,
        weight: 0.5,
    };
    let gauges: [&dyn GaugeFamily; 3] = [&RiemannianGauge, &PolyhedralGauge, &convex];
    let systems = sample_root_systems();
    let mut worst = f64::INFINITY;
    let mut detail = String::new();
    for i in 0..20 {
        let rs = &systems[i % 3];
        let m = random_min_linear(rs, &mut rng);
        for g in gauges {
            let outcome = gauge_exponent(rs, (&m).into(), g)
                .and_then(|delta| gauge_bounds(rs, (&m).into(), g, delta));
            match outcome {
                Ok(rep) => {
                    let margin = rep.threshold_margin.min(rep.domination_margin);
                    if margin < worst {
                        worst = margin;
                        detail = format!("worst margin {margin:.1e} ({} on {})", g.label(), rs.descriptor());
                    }
                }
                Err(e) => {
                    worst = f64::NEG_INFINITY;
                    detail = e.to_string();
                }
            }
        }
    }
    report.push("gauge exponent bounds", worst >= -1e-6, detail);
}

fn estimator_checks(report: &mut SuiteReport) {
    let rs = root_system("sl3");
    let rn = rs.rho_norm();
    let grid = DirectionGrid::new(&rs, 33);
    let cones = default_cone_angles(&rs, &grid);
    for c in [0.8, 2.0] {
        let m = PsiModel::scaled_rho(&rs, c);
        let outcome = sample_orbit(&rs, &m, &SynthConfig::new(33, 12.0)).and_then(|ds| {
            let dt = modified_critical_exponent(&ds)?;
            let d = critical_exponent(&ds, DEFAULT_WINDOW_FRACTION)?;
            let psi = growth_indicator(&ds, &grid.directions, &cones, DEFAULT_WINDOW_FRACTION, true)?;
            Ok((dt, d, psi))
        });
        match outcome {
            Ok((dt, d, psi)) => {
                let want = delta_tilde_from_psi(&rs, (&m).into()).value;
                report.push(
                    &format!("estimated modified exponent, {c} rho"),
                    (dt.value - want).abs() <= 0.05,
                    format!("{:.4} vs {want:.4}", dt.value),
                );
                let axis = psi.value_near(&rs, &rs.rho_direction());
                report.push(
                    &format!("estimated growth indicator on the rho axis, {c} rho"),
                    (axis - c * rn).abs() <= 0.05,
                    format!("{axis:.4} vs {:.4}", c * rn),
                );
                let check = classical_exponent_from_psi_check(&psi, &d);
                report.push(
                    &format!("critical exponent is sup psi, {c} rho"),
                    check.discrepancy <= 0.1,
                    format!("discrepancy {:.4}", check.discrepancy),
                );
            }
            Err(e) => report.push(&format!("synthetic pipeline, {c} rho"), false, e.to_string()),
        }
    }

    let sl2 = root_system("sl2");
    let cyclic = GeneratorSet::parse("2:2,1,1,1").expect("valid generator");
    let mut opts = EnumerateOptions::new(40, DedupMode::Exact);
    opts.record_cap = u64::MAX;
    match enumerate(&sl2, &cyclic, &opts).and_then(|ds| critical_exponent(&ds, DEFAULT_WINDOW_FRACTION)) {
        Ok(d) => report.push("cyclic group has exponent 0", d.value <= 0.05, format!("{:.4}", d.value)),
        Err(e) => report.push("cyclic group has exponent 0", false, e.to_string()),
    }

    let free = GeneratorSet::parse("2:1,2,0,1\n2:1,0,2,1").expect("valid generators");
    let want = 2 * 3usize.pow(8) - 1;
    match enumerate(&sl2, &free, &EnumerateOptions::new(8, DedupMode::Exact)) {
        Ok(ds) => report.push("free group ball size", ds.len() == want, format!("{} vs {want}", ds.len())),
        Err(e) => report.push("free group ball size", false, e.to_string()),
    }
}

/// Runs a suite; every check carries its own tolerance.
pub fn run_suite(suite: Suite, seed: u64) -> SuiteReport {
    let mut report = SuiteReport::default();
    if matches!(suite, Suite::Analytic | Suite::All) {
        gauge_checks(&mut report, seed);
        cartan_checks(&mut report, seed);
        exponent_formula_checks(&mut report, seed);
        gauge_bound_checks(&mut report, seed);
    }
    if matches!(suite, Suite::Estimators | Suite::All) {
        estimator_checks(&mut report);
    }
    report
}

/// Unit vector along `rho`, the reference direction of the reports.
pub fn rho_axis(rs: &RootSystem) -> ChamberVector {
    rs.rho_direction()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_models_are_admissible() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for rs in sample_root_systems() {
            for _ in 0..5 {
                assert!(random_min_linear(&rs, &mut rng).is_admissible(&rs));
            }
        }
    }

    #[test]
    fn analytic_suite_passes() {
        let report = run_suite(Suite::Analytic, 7);
        assert!(report.passed(), "{report}");
        assert!(report.checks.len() > 10);
    }

    #[test]
    fn suite_names() {
        assert_eq!("all".parse::<Suite>().unwrap(), Suite::All);
        assert!("everything".parse::<Suite>().is_err());
        assert_eq!(Suite::Estimators.to_string(), "estimators");
    }
}
