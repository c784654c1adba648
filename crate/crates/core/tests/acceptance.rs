//! Acceptance gate. Every criterion runs at its stated tolerance and
//! runtime budget and prints one PASS/FAIL line. Criterion 10 carries a
//! generous budget but finishes in well under a second, so it always runs.
//!
//! Run with `cargo test -p cpd-core --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cpd_core::cartan::{cartan_projection, element_with_projection, random_rotation, GroupElement};
use cpd_core::estimate::{
    classical_exponent_from_psi_check, critical_exponent, default_cone_angles, growth_indicator,
    modified_critical_exponent, GrowthIndicatorEstimate, GrowthRateEstimate, DEFAULT_WINDOW_FRACTION,
};
use cpd_core::gauge::{polyhedral_gauge, ConvexGauge, GaugeFamily, PolyhedralGauge, RiemannianGauge};
use cpd_core::orbit::{enumerate, DedupMode, EnumerateOptions, GeneratorSet, UNLIMITED_RECORDS};
use cpd_core::spectrum::{
    check_conditions, delta_tilde_from_psi, gauge_exponent, lambda0_from_delta_tilde, lambda0_from_psi,
    gauge_bounds, ConditionInputs, PsiInput, Source,
};
use cpd_core::sphere::DirectionGrid;
use cpd_core::synth::{sample_orbit, PsiModel, SynthConfig};
use cpd_core::verify::random_min_linear;
use cpd_core::{ChamberVector, GroupDescriptor, RootSystem};

fn rs(desc: &str) -> RootSystem {
    RootSystem::new(&desc.parse::<GroupDescriptor>().unwrap())
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

/// Everything estimated from one synthetic dataset.
struct Pipeline {
    delta: GrowthRateEstimate,
    delta_tilde: GrowthRateEstimate,
    psi: GrowthIndicatorEstimate,
}

const SYNTH_RESOLUTION: usize = 33;
const SYNTH_RMAX: f64 = 12.0;
// The flag pipeline fixes no radius. At 12 the polynomial prefactor of a
// single maximizing direction biases the classical slope by about -0.64/R,
// right at the dataset tolerance, so it runs further out.
const FLAGS_RMAX: f64 = 16.0;

fn pipeline(r: &RootSystem, m: &PsiModel, r_max: f64) -> cpd_core::Result<Pipeline> {
    let ds = sample_orbit(r, m, &SynthConfig::new(SYNTH_RESOLUTION, r_max))?;
    let grid = DirectionGrid::new(r, SYNTH_RESOLUTION);
    let cones = default_cone_angles(r, &grid);
    Ok(Pipeline {
        delta: critical_exponent(&ds, DEFAULT_WINDOW_FRACTION)?,
        delta_tilde: modified_critical_exponent(&ds)?,
        psi: growth_indicator(&ds, &grid.directions, &cones, DEFAULT_WINDOW_FRACTION, true)?,
    })
}

// Independent oracle for the hybrid gauge, written as the case split on `s`.
fn gauge_oracle(r: &RootSystem, s: f64, h: &ChamberVector) -> f64 {
    let rn = r.rho_norm();
    let pairing: f64 = h.coords().iter().zip(r.rho().coords()).map(|(a, b)| a * b).sum();
    if s <= rn {
        s * pairing / rn
    } else {
        pairing + (s - rn) * h.coords().iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

fn gauge_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = [0.0_f64; 4];
    for (k, desc) in ["sl2", "sl3", "sl2xsl2"].iter().enumerate() {
        let r = rs(desc);
        let rn = r.rho_norm();
        let samples = if k == 1 { 5_000 } else { 2_500 };
        for _ in 0..samples {
            let h = r.random_chamber_vector(&mut rng).scaled(rng.random_range(0.0..20.0));
            let s = rng.random_range(0.0..3.0 * rn);
            let d = polyhedral_gauge(&r, s, &h).unwrap();
            let scale = d.abs().max(1.0);
            worst[0] = worst[0].max((d - gauge_oracle(&r, s, &h)).abs() / scale);
            let t = rng.random_range(0.01..50.0);
            let dt = polyhedral_gauge(&r, s, &h.scaled(t)).unwrap();
            worst[1] = worst[1].max((dt - t * d).abs() / dt.abs().max(1.0));
            let s2 = s + rng.random_range(0.0..rn);
            worst[2] = worst[2].max((d - polyhedral_gauge(&r, s2, &h).unwrap()).max(0.0) / scale);
            let at_rho = polyhedral_gauge(&r, rn, &h).unwrap();
            worst[3] = worst[3].max((at_rho - r.rho_pairing(&h)).abs() / at_rho.abs().max(1.0));
        }
    }
    let max = worst.iter().cloned().fold(0.0, f64::max);
    outcome(
        max <= 1e-12,
        format!(
            "10^4 samples; case-split {:.1e}, homogeneity {:.1e}, monotonicity {:.1e}, at |rho| {:.1e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn random_projection(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut h: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
    let mean = h.iter().sum::<f64>() / n as f64;
    h.iter_mut().for_each(|x| *x -= mean);
    h
}

fn element(m: DMatrix<f64>) -> GroupElement {
    GroupElement::new(vec![m]).unwrap()
}

fn cartan_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut bi, mut inv, mut sub, mut svd, mut outside) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, 0usize);
    for n in [2usize, 3] {
        let r = rs(&format!("sl{n}"));
        for _ in 0..500 {
            let g = element_with_projection(&random_projection(n, &mut rng), &mut rng);
            let h = element_with_projection(&random_projection(n, &mut rng), &mut rng);
            let mu = cartan_projection(&r, &element(g.clone())).unwrap();
            if !r.in_closed_chamber(&mu) {
                outside += 1;
            }

            // oracle: sorted logs of a full SVD
            let mut logs: Vec<f64> = g.clone().svd(false, false).singular_values.iter().map(|x| x.ln()).collect();
            logs.sort_by(|a, b| b.total_cmp(a));
            let mean = logs.iter().sum::<f64>() / n as f64;
            for (a, b) in mu.coords().iter().zip(&logs) {
                svd = svd.max((a - (b - mean)).abs());
            }

            let k = random_rotation(n, &mut rng) * &g * random_rotation(n, &mut rng);
            let mu_k = cartan_projection(&r, &element(k)).unwrap();
            bi = bi.max(mu.sub(&mu_k).coords().iter().fold(0.0, |m, x| m.max(x.abs())));

            let mu_inv = cartan_projection(&r, &element(g.clone().lu().try_inverse().unwrap())).unwrap();
            for i in 0..n {
                inv = inv.max((mu_inv[i] + mu[n - 1 - i]).abs());
            }

            let mu_h = cartan_projection(&r, &element(h.clone())).unwrap();
            let mu_gh = cartan_projection(&r, &element(&g * &h)).unwrap();
            sub = sub.max(r.norm(&mu_gh) - r.norm(&mu) - r.norm(&mu_h));
        }
    }
    let worst = bi.max(inv).max(sub).max(svd);
    outcome(
        worst <= 1e-9 && outside == 0,
        format!(
            "10^3 elements; bi-invariance {bi:.1e}, inverse {inv:.1e}, subadditivity excess {sub:.1e}, svd {svd:.1e}, outside chamber {outside}"
        ),
    )
}

// Brute-force oracle for the sup term: dense direction grid, no refinement.
// It can only undershoot the true supremum.
fn sup_term_oracle(r: &RootSystem, m: &PsiModel) -> f64 {
    let grid = DirectionGrid::new(r, if r.rank() == 2 { 20_000 } else { 100_000 });
    grid.directions
        .iter()
        .map(|u| (m.evaluate(r, u) - r.rho_pairing(u)) / r.norm(u))
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0)
}

fn lambda_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let systems = [rs("sl2"), rs("sl3"), rs("sl2xsl2"), rs("sl4"), rs("sl2xsl3")];
    let (mut identity, mut oracle, mut overshoot) = (0.0_f64, 0.0_f64, 0.0_f64);
    for i in 0..100 {
        let r = &systems[i % systems.len()];
        let rn = r.rho_norm();
        let m = random_min_linear(r, &mut rng);
        let a = lambda0_from_psi(r, (&m).into());
        let b = lambda0_from_delta_tilde(r, delta_tilde_from_psi(r, (&m).into()).value).value;
        identity = identity.max((a - b).abs());
        let excess = sup_term_oracle(r, &m);
        let brute = rn * rn - excess * excess;
        oracle = oracle.max((a - brute).abs());
        overshoot = overshoot.max(a - brute);
    }
    outcome(
        identity <= 1e-9 && oracle <= 1e-2 && overshoot <= 1e-9,
        format!("100 models in ranks 1-3; identity {identity:.1e}, grid oracle {oracle:.1e} (above oracle by {overshoot:.1e})"),
    )
}

fn synthetic_modified_exponent(runs: &[(f64, cpd_core::Result<Pipeline>)]) -> Outcome {
    let r = rs("sl3");
    let mut ok = true;
    let mut parts = Vec::new();
    for (c, run) in runs {
        let want = delta_tilde_from_psi(&r, (&PsiModel::scaled_rho(&r, *c)).into()).value;
        match run {
            Ok(p) => {
                let err = (p.delta_tilde.value - want).abs();
                ok &= err <= 0.05;
                parts.push(format!("c={c}: {:.4} vs {want:.4}", p.delta_tilde.value));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("c={c}: {e}"));
            }
        }
    }
    outcome(ok, parts.join("; "))
}

fn rank_one_collapse() -> Outcome {
    let r = rs("sl2");
    let m = PsiModel::radial(1.0);
    match pipeline(&r, &m, 20.0) {
        Ok(p) => {
            let gap = (p.delta_tilde.value - p.delta.value).abs();
            outcome(
                gap <= 0.02,
                format!("modified {:.4}, classical {:.4}, gap {gap:.4}", p.delta_tilde.value, p.delta.value),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn classical_is_sup_psi(runs: &[(f64, cpd_core::Result<Pipeline>)]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (c, run) in runs {
        match run {
            Ok(p) => {
                let check = classical_exponent_from_psi_check(&p.psi, &p.delta);
                ok &= check.discrepancy <= 0.1;
                parts.push(format!("c={c}: {:.4} vs {:.4}", check.delta, check.sup_psi));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("c={c}: {e}"));
            }
        }
    }
    outcome(ok, parts.join("; "))
}

fn gauge_bound_margins() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let systems = [rs("sl2"), rs("sl3"), rs("sl2xsl2")];
    let convex = ConvexGauge {
        first: RiemannianGauge,
        second: PolyhedralGauge,
        weight: 0.5,
    };
    let mut worst = f64::INFINITY;
    let mut failures = Vec::new();
    for i in 0..20 {
        let r = &systems[i % systems.len()];
        let m = random_min_linear(r, &mut rng);
        let psi: PsiInput = (&m).into();
        // closed-form exponents for the canonical gauges, bisection for the mixture
        let riemannian = psi.sup(r, |v, _| v).unwrap().max(0.0);
        let polyhedral = delta_tilde_from_psi(r, psi).value;
        let cases: [(&dyn GaugeFamily, cpd_core::Result<f64>); 3] = [
            (&RiemannianGauge, Ok(riemannian)),
            (&PolyhedralGauge, Ok(polyhedral)),
            (&convex, gauge_exponent(r, psi, &convex)),
        ];
        for (g, delta) in cases {
            match delta.and_then(|d| gauge_bounds(r, psi, g, d)) {
                Ok(rep) => worst = worst.min(rep.threshold_margin).min(rep.domination_margin),
                Err(e) => failures.push(format!("{} model {i}: {e}", g.label())),
            }
        }
    }
    outcome(
        worst >= -1e-6 && failures.is_empty(),
        format!("20 models x 3 gauges; worst margin {worst:.1e}{}", failures.join("; ")),
    )
}

fn report_for(r: &RootSystem, p: &Pipeline) -> cpd_core::Result<cpd_core::spectrum::SpectralReport> {
    check_conditions(
        r,
        &ConditionInputs {
            delta: Some(p.delta.value),
            delta_tilde: Some(p.delta_tilde.value),
            psi: Some((&p.psi).into()),
            source: Some(Source::Dataset),
            ..Default::default()
        },
    )
}

fn condition_flags() -> Outcome {
    let r = rs("sl3");
    let run = |c: f64| -> cpd_core::Result<String> {
        let p = pipeline(&r, &PsiModel::scaled_rho(&r, c), FLAGS_RMAX)?;
        Ok(report_for(&r, &p)?.to_key_value())
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for (c, want) in [
        (0.8, &["flag_A=true", "flag_B=true", "flag_C=true"][..]),
        (
            2.0,
            &[
                "flag_A=false",
                "flag_B=false",
                "flag_C=false",
                "flag_i=true",
                "flag_ii=true",
                "flag_iv=true",
                "flag_v=true",
                "flag_vi=true",
            ][..],
        ),
    ] {
        match (run(c), run(c)) {
            (Ok(a), Ok(b)) => {
                let lines: Vec<&str> = a.lines().collect();
                let missing: Vec<&str> = want.iter().copied().filter(|w| !lines.contains(w)).collect();
                ok &= missing.is_empty() && a == b;
                parts.push(if missing.is_empty() {
                    format!("c={c}: as expected{}", if a == b { "" } else { ", NOT deterministic" })
                } else {
                    format!("c={c}: missing {}", missing.join(","))
                });
            }
            (Err(e), _) | (_, Err(e)) => {
                ok = false;
                parts.push(format!("c={c}: {e}"));
            }
        }
    }
    outcome(ok, parts.join("; "))
}

fn small_group(r: &RootSystem, gens: &str, max_length: u32, dedup: DedupMode) -> cpd_core::Result<(f64, f64, f64)> {
    let g = GeneratorSet::parse(gens).unwrap();
    let mut opts = EnumerateOptions::new(max_length, dedup);
    opts.record_cap = UNLIMITED_RECORDS;
    let ds = enumerate(r, &g, &opts)?;
    let d = critical_exponent(&ds, DEFAULT_WINDOW_FRACTION)?.value;
    let dt = modified_critical_exponent(&ds)?.value;
    Ok((d, dt, lambda0_from_delta_tilde(r, dt).value))
}

fn matrix_group_sanity() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let hyperbolic = "2:2,1,1,1";
    for (label, r, gens, l, mode) in [
        ("cyclic", rs("sl2"), hyperbolic.to_string(), 40, DedupMode::Exact),
        // exact i128 entries overflow near length 90, so compare in floats
        (
            "Z^2",
            rs("sl2xsl2"),
            format!("{hyperbolic} | 2:1,0,0,1\n2:1,0,0,1 | {hyperbolic}"),
            100,
            DedupMode::Float,
        ),
    ] {
        match small_group(&r, &gens, l, mode) {
            Ok((d, dt, lambda)) => {
                let rn2 = r.rho_norm().powi(2);
                ok &= d <= 0.05 && dt <= 0.05 && (lambda - rn2).abs() <= 1e-3;
                parts.push(format!("{label} L={l}: delta {d:.4}, modified {dt:.4}, lambda0 {lambda:.4} vs {rn2:.4}"));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{label}: {e}"));
            }
        }
    }
    let r = rs("sl2");
    let free = GeneratorSet::parse("2:1,2,0,1\n2:1,0,2,1").unwrap();
    let mut counts = true;
    for l in 0..=8u32 {
        let got = enumerate(&r, &free, &EnumerateOptions::new(l, DedupMode::Exact)).map(|d| d.len());
        counts &= matches!(got, Ok(n) if n == 2 * 3usize.pow(l) - 1);
    }
    ok &= counts;
    parts.push(format!("free ball counts 2*3^L-1 for L<=8: {counts}"));
    outcome(ok, parts.join("; "))
}

fn lattice_probe() -> Outcome {
    let r = rs("sl2");
    let g = GeneratorSet::parse("S = 2:0,-1,1,0\nT = 2:1,1,0,1").unwrap();
    let mut opts = EnumerateOptions::new(16, DedupMode::Exact);
    opts.record_cap = UNLIMITED_RECORDS;
    match enumerate(&r, &g, &opts).and_then(|ds| {
        let n = ds.len();
        critical_exponent(&ds, DEFAULT_WINDOW_FRACTION).map(|d| (n, d))
    }) {
        Ok((n, d)) => {
            let ratio = d.value / (2.0 * r.rho_norm());
            outcome(
                (0.8..=1.2).contains(&ratio),
                format!("{n} elements; delta {:.4}, ratio to 2|rho| {ratio:.4}", d.value),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn main() -> ExitCode {
    // `cargo test -- --list` is part of the libtest protocol
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }

    let mut failed = 0;
    let mut report = |n: u32, name: &str, budget: Duration, run: &mut dyn FnMut() -> (Outcome, Duration)| {
        let (o, elapsed) = run();
        let in_budget = elapsed <= budget;
        let passed = o.passed && in_budget;
        if !passed {
            failed += 1;
        }
        println!(
            "criterion {n:>2} {}: {name}: {} [{:.2}s of {}s{}]",
            if passed { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64(),
            budget.as_secs(),
            if in_budget { "" } else { ", over budget" }
        );
    };
    let timed = |f: fn() -> Outcome| {
        move || {
            let t = Instant::now();
            let o = f();
            (o, t.elapsed())
        }
    };

    report(1, "gauge identities", Duration::from_secs(5), &mut timed(gauge_identities));
    report(2, "cartan projection invariants", Duration::from_secs(10), &mut timed(cartan_invariants));
    report(3, "bottom-of-spectrum identity", Duration::from_secs(30), &mut timed(lambda_identity));
    // criteria 4 and 6 share the same four runs and the same budget
    let sl3 = rs("sl3");
    let t = Instant::now();
    let runs: Vec<_> = [0.5, 0.8, 1.5, 2.0]
        .into_iter()
        .map(|c| (c, pipeline(&sl3, &PsiModel::scaled_rho(&sl3, c), SYNTH_RMAX)))
        .collect();
    let synth_elapsed = t.elapsed();
    report(4, "synthetic modified exponent", Duration::from_secs(120), &mut || {
        (synthetic_modified_exponent(&runs), synth_elapsed)
    });
    report(5, "rank-one collapse", Duration::from_secs(30), &mut timed(rank_one_collapse));
    report(6, "classical exponent is sup psi", Duration::from_secs(120), &mut || {
        (classical_is_sup_psi(&runs), synth_elapsed)
    });
    report(7, "gauge exponent bounds", Duration::from_secs(30), &mut timed(gauge_bound_margins));
    report(8, "condition flags", Duration::from_secs(60), &mut timed(condition_flags));
    report(9, "matrix group sanity", Duration::from_secs(60), &mut timed(matrix_group_sanity));
    report(10, "lattice probe", Duration::from_secs(900), &mut timed(lattice_probe));

    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
