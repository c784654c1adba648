//! `cpd`: batch front-end for orbit enumeration, synthetic sampling,
//! growth-rate estimation, spectral reports and self-checks.
//!
//! Exit codes: 0 success, 1 verification failure or inconsistent report,
//! 2 usage or rejected input, 3 unreadable or malformed file.

mod args;
mod config;
mod output;

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;

use cpd_core::chamber::{ChamberVector, GroupDescriptor, RootSystem};
use cpd_core::estimate::{
    classical_exponent_from_psi_check, counting_curve, coverage_radius, critical_exponent, default_cone_angles,
    growth_indicator, modified_critical_exponent_detailed,
};
use cpd_core::orbit::{enumerate, read_dataset, write_dataset, DedupMode, EnumerateOptions, GeneratorSet};
use cpd_core::spectrum::{check_conditions, ConditionInputs, PsiInput, Source};
use cpd_core::sphere::DirectionGrid;
use cpd_core::synth::{sample_orbit, PsiModel, SupportCone, SynthConfig};
use cpd_core::verify::{run_suite, Suite};

use args::{
    Cli, Command, DedupArg, EnumerateArgs, EstimateArgs, ModelArgs, ModelKind, SourceArg, SpectrumArgs, SuiteArg,
    SynthArgs, VerifyArgs,
};
use output::{comment_block, provenance, read_estimate};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Format(String),
    Core(cpd_core::Error),
    Verification(Vec<String>),
}

impl From<cpd_core::Error> for CliError {
    fn from(e: cpd_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) | CliError::Format(_) => 3,
            CliError::Core(e) if e.is_format_or_io() => 3,
            CliError::Core(_) => 2,
        }
    }

    fn report(&self) {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Format(m) => eprintln!("cpd: error: {m}"),
            CliError::Core(e) => eprintln!("cpd: error: {e}"),
            CliError::Verification(failures) => {
                for f in failures {
                    eprintln!("cpd: failed: {f}");
                }
            }
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_text(path: Option<&Path>, text: &str) -> CliResult<()> {
    let io = |e: std::io::Error, p: &Path| CliError::Io(format!("{}: {e}", p.display()));
    match path {
        Some(p) => {
            let mut w = create(p)?;
            w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(|e| io(e, p))
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| io(e, Path::new("<stdout>"))),
    }
}

fn root_system(desc: &str) -> CliResult<RootSystem> {
    Ok(RootSystem::new(&desc.parse::<GroupDescriptor>()?))
}

fn coords(rs: &RootSystem, flag: &str, text: &str) -> CliResult<ChamberVector> {
    let values = text
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| CliError::Usage(format!("--{flag}: cannot parse `{text}` as comma-separated numbers")))?;
    rs.vector(values)
        .map_err(|e| CliError::Usage(format!("--{flag}: {e}")))
}

fn build_model(rs: &RootSystem, m: &ModelArgs) -> CliResult<Option<PsiModel>> {
    let Some(kind) = m.model else {
        if m.phi_scale.is_some() || !m.phi.is_empty() || m.cap_axis.is_some() || m.half_angle.is_some() {
            return Err(CliError::Usage("model parameters given without --model".into()));
        }
        return Ok(None);
    };
    let scale = |what: &str| {
        m.phi_scale
            .ok_or_else(|| CliError::Usage(format!("--model {what} needs --phi-scale")))
    };
    let axis = || -> CliResult<ChamberVector> {
        let axis = match &m.cap_axis {
            Some(t) => coords(rs, "cap-axis", t)?,
            None => rs.rho_direction(),
        };
        if axis.is_zero() || !rs.in_closed_chamber(&axis) {
            return Err(CliError::Usage("--cap-axis must be a nonzero chamber vector".into()));
        }
        Ok(rs.normalized(&axis))
    };
    let restrict = |model: PsiModel| -> CliResult<PsiModel> {
        Ok(match m.half_angle {
            Some(half_angle) => model.with_support(SupportCone::Cap {
                axis: axis()?,
                half_angle,
            }),
            None => model,
        })
    };
    let model = match kind {
        ModelKind::Linear => {
            let phi = match (m.phi.as_slice(), m.phi_scale) {
                ([one], None) => coords(rs, "phi", one)?,
                ([], Some(c)) => rs.rho().scaled(c),
                _ => return Err(CliError::Usage("--model linear takes one --phi or --phi-scale".into())),
            };
            restrict(PsiModel::linear(phi))?
        }
        ModelKind::MinLinear => {
            if m.phi.is_empty() || m.phi_scale.is_some() {
                return Err(CliError::Usage("--model min-linear takes one or more --phi and no --phi-scale".into()));
            }
            let phis = m.phi.iter().map(|t| coords(rs, "phi", t)).collect::<CliResult<Vec<_>>>()?;
            restrict(PsiModel::min_linear(phis)?)?
        }
        ModelKind::Cap => {
            let half_angle = m
                .half_angle
                .ok_or_else(|| CliError::Usage("--model cap needs --half-angle".into()))?;
            PsiModel::spherical_cap(scale("cap")?, axis()?, half_angle)
        }
        ModelKind::Radial => restrict(PsiModel::radial(scale("radial")?))?,
    };
    model.validate(rs)?;
    Ok(Some(model))
}

fn run_enumerate(a: &EnumerateArgs) -> CliResult<()> {
    let rs = root_system(&a.group)?;
    let gens = GeneratorSet::read(&a.gens)?;
    let mut opts = EnumerateOptions::new(
        a.maxlen,
        match a.dedup {
            DedupArg::Exact => DedupMode::Exact,
            DedupArg::Float => DedupMode::Float,
        },
    );
    opts.record_cap = a.record_cap.0;
    opts.checkpoint = a.checkpoint.clone();
    opts.resume = a.resume;
    let mut ds = enumerate(&rs, &gens, &opts)?;
    ds.header.meta.extend(provenance(a, &[("gens", &a.gens)])?);
    write_dataset(&ds, &a.output)?;
    eprintln!("cpd: wrote {} records to {}", ds.len(), a.output.display());
    Ok(())
}

fn run_synth(a: &SynthArgs) -> CliResult<()> {
    let rs = root_system(&a.group)?;
    let model = build_model(&rs, &a.model)?.ok_or_else(|| CliError::Usage("synth needs --model".into()))?;
    let mut cfg = SynthConfig::new(a.resolution, a.rmax);
    cfg.seed = a.seed;
    cfg.jitter = a.jitter;
    cfg.record_cap = a.record_cap.0;
    let mut ds = sample_orbit(&rs, &model, &cfg)?;
    ds.header.meta.extend(provenance(a, &[])?);
    write_dataset(&ds, &a.output)?;
    eprintln!("cpd: wrote {} records to {}", ds.len(), a.output.display());
    Ok(())
}

fn parse_angles(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| CliError::Usage(format!("--cone-angles: cannot parse `{text}`")))
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn run_estimate(a: &EstimateArgs) -> CliResult<()> {
    let ds = read_dataset(&a.input)?;
    let rs = ds.root_system();
    let grid = DirectionGrid::new(&rs, a.resolution);
    let cones = match &a.cone_angles {
        Some(t) => parse_angles(t)?,
        None => default_cone_angles(&rs, &grid),
    };
    let delta = critical_exponent(&ds, a.window_fraction)?;
    let modified = modified_critical_exponent_detailed(&ds, a.window_fraction)?;
    let psi = growth_indicator(&ds, &grid.directions, &cones, a.window_fraction, !a.no_extrapolate)?;
    let check = classical_exponent_from_psi_check(&psi, &delta);

    let summary: Vec<(&str, String)> = vec![
        ("group", rs.descriptor().to_string()),
        ("synthetic", ds.header.synthetic.to_string()),
        ("records", ds.len().to_string()),
        ("total_weight", num(ds.total_weight())),
        ("coverage_radius", num(coverage_radius(&ds))),
        ("rho_norm", num(rs.rho_norm())),
        ("delta", num(delta.value)),
        ("delta_stderr", num(delta.stderr)),
        ("delta_window_lo", num(delta.window.0)),
        ("delta_window_hi", num(delta.window.1)),
        ("delta_samples", delta.sample_count.to_string()),
        ("delta_tilde", num(modified.estimate.value)),
        ("delta_tilde_stderr", num(modified.estimate.stderr)),
        ("polyhedral_exponent", num(modified.polyhedral.value)),
        ("damped_slope", modified.damped.as_ref().map_or("na".into(), |d| num(d.value))),
        ("delta_tilde_clamped", modified.clamped.to_string()),
        ("cone_angles", cones.iter().map(|c| num(*c)).collect::<Vec<_>>().join(";")),
        ("psi_extrapolated", psi.extrapolated.to_string()),
        ("psi_directions", psi.directions.len().to_string()),
        ("psi_empty_directions", psi.values.iter().filter(|v| !v.is_finite()).count().to_string()),
        ("psi_max", psi.max_value().map_or("na".into(), num)),
        ("psi_rho_axis", num(psi.value_near(&rs, &rs.rho_direction()))),
        ("sup_psi_discrepancy", num(check.discrepancy)),
    ];
    let header = provenance(a, &[("dataset", &a.input)])?;
    let mut text = comment_block(&header);
    for (k, v) in &summary {
        writeln!(text, "#summary {k}={v}").unwrap();
    }
    let mut table = Vec::new();
    psi.write_csv(&mut table).expect("writing to memory");
    text.push_str(std::str::from_utf8(&table).expect("ascii table"));
    write_text(Some(&a.output), &text)?;

    if let Some(path) = &a.curve_csv {
        let mut curve = comment_block(&header);
        curve.push_str("gauge,radius,log_count\n");
        let polyhedral = |h: &ChamberVector| rs.rho_pairing(h) / rs.rho_norm();
        for (label, points) in [
            ("riemannian", counting_curve(&ds, |h| rs.norm(h), a.curve_points)),
            ("polyhedral", counting_curve(&ds, polyhedral, a.curve_points)),
        ] {
            for (r, l) in points {
                writeln!(curve, "{label},{r},{l}").unwrap();
            }
        }
        write_text(Some(path), &curve)?;
    }
    eprintln!(
        "cpd: delta={:.4} delta_tilde={:.4} psi_max={}",
        delta.value,
        modified.estimate.value,
        psi.max_value().map_or("na".into(), |v| format!("{v:.4}"))
    );
    Ok(())
}

fn run_spectrum(a: &SpectrumArgs) -> CliResult<()> {
    let estimate = a.estimate.as_deref().map(read_estimate).transpose()?;
    let rs = match (&estimate, &a.group) {
        (Some(e), None) => RootSystem::new(&e.group()?),
        (Some(e), Some(g)) => {
            let given = root_system(g)?;
            if given.descriptor() != &e.group()? {
                return Err(CliError::Usage(format!("--group {g} does not match the estimate file")));
            }
            given
        }
        (None, Some(g)) => root_system(g)?,
        (None, None) => return Err(CliError::Usage("spectrum needs --estimate or --group".into())),
    };
    let model = build_model(&rs, &a.model)?;
    let (delta, delta_tilde) = match &estimate {
        Some(e) => (
            a.delta.or(e.number("delta")?),
            a.delta_tilde.or(e.number("delta_tilde")?),
        ),
        None => (a.delta, a.delta_tilde),
    };
    let psi: Option<PsiInput> = match (&estimate, &model) {
        (Some(e), _) => Some((&e.psi).into()),
        (None, Some(m)) => Some(m.into()),
        (None, None) => None,
    };
    let source = match (a.source, &estimate) {
        (Some(SourceArg::Analytic), _) => Source::Analytic,
        (Some(SourceArg::Dataset), _) | (None, Some(_)) => Source::Dataset,
        (None, None) => Source::Analytic,
    };
    let report = check_conditions(
        &rs,
        &ConditionInputs {
            delta,
            delta_tilde,
            psi,
            source: Some(source),
            lattice: a.lattice,
            tempered: a.tempered,
        },
    )?;

    let inputs: Vec<(&str, &Path)> = a.estimate.iter().map(|p| ("estimate", p.as_path())).collect();
    let header = comment_block(&provenance(a, &inputs)?);
    write_text(a.output.as_deref(), &format!("{header}{}", report.to_key_value()))?;
    if let Some(path) = &a.csv {
        let mut csv = header.into_bytes();
        report.write_csv(&mut csv).expect("writing to memory");
        write_text(Some(path), std::str::from_utf8(&csv).expect("ascii table"))?;
    }
    if report.violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(
            report.violations.iter().map(|v| format!("consistency check: {v}")).collect(),
        ))
    }
}

fn run_verify(a: &VerifyArgs) -> CliResult<()> {
    let suite = match a.suite {
        SuiteArg::Analytic => Suite::Analytic,
        SuiteArg::Estimators => Suite::Estimators,
        SuiteArg::All => Suite::All,
    };
    let report = run_suite(suite, a.seed);
    let header = comment_block(&provenance(a, &[])?);
    let verdict = if report.passed() { "pass" } else { "fail" };
    write_text(a.output.as_deref(), &format!("{header}{report}result={verdict}\n"))?;
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Verification(
            report.failures().map(|c| format!("{}: {}", c.name, c.detail)).collect(),
        ))
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    }
    match &cli.command {
        Command::Enumerate(a) => run_enumerate(a),
        Command::Synth(a) => run_synth(a),
        Command::Estimate(a) => run_estimate(a),
        Command::Spectrum(a) => run_spectrum(a),
        Command::Verify(a) => run_verify(a),
    }
}

fn main() -> ExitCode {
    let argv = match config::merge(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(config::ConfigError::Io(m)) => {
            eprintln!("cpd: error: {m}");
            return ExitCode::from(3);
        }
        Err(config::ConfigError::Syntax(m)) => {
            eprintln!("cpd: error: {m}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            e.report();
            ExitCode::from(e.exit_code())
        }
    }
}
