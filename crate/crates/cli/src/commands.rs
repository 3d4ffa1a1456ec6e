use std::fmt::Write as _;
use std::path::Path;

use netclear_core::format::{read_instance, read_schedule};
use netclear_core::graph::{globally_reachable, StabilityVerdict};
use netclear_core::model::{penalized_loss, system_loss};
use netclear_core::validation::{default_tolerance, priority_tolerance};
use netclear_core::{
    certify_clearing, certify_schedule, clear_matrix, clear_prorata_fda, clear_prorata_lp, scenario_compare,
    strong_components, submatrix_schur_stable, Certification, Clearing, ClearingReport, FdaOptions, InstanceFile,
    PaymentMode, ScenarioEntry, ScheduleFile, StaticPayments, WeightedDigraph,
};
use serde::Serialize;

use crate::error::{CliError, Outcome};
use crate::output::{self, fmt2, Document};
use crate::{
    CompareArgs, DynamicArgs, GraphArgs, MethodArg, ModeArg, OutputArgs, Overrides, StaticArgs, ValidateArgs,
};

fn load(path: &Path, overrides: Option<&Overrides>) -> Result<InstanceFile, CliError> {
    let mut file = read_instance(path)?;
    if let Some(o) = overrides {
        if let Some(a) = o.alpha {
            file.alpha = a;
        }
        if let Some(e) = o.eta {
            file.eta = e;
        }
        if let Some(h) = o.horizon {
            file.horizon = Some(h);
        }
    }
    Ok(file)
}

fn title(file: &InstanceFile, path: &Path) -> String {
    file.name.clone().unwrap_or_else(|| path.display().to_string())
}

fn check_tol(tol: Option<f64>) -> Result<Option<f64>, CliError> {
    match tol {
        Some(t) if !(t.is_finite() && t >= 0.0) => {
            Err(CliError::Usage(format!("--tol must be finite and nonnegative, got {t}")))
        }
        _ => Ok(tol),
    }
}

#[derive(Serialize)]
struct ClearBody<'a> {
    report: &'a ClearingReport,
    schedule: ScheduleFile,
}

fn emit<T: Serialize>(
    output: &OutputArgs,
    command: &str,
    instance: Option<&str>,
    body: T,
) -> Result<(), CliError> {
    if let Some(path) = &output.out {
        let doc = Document {
            generated_at_unix: output::now_unix(!output.no_timestamp),
            command,
            instance,
            body,
        };
        output::write_json(path, &doc)?;
    }
    Ok(())
}

fn finish_clearing(
    command: &str,
    file: &InstanceFile,
    path: &Path,
    clearing: &Clearing,
    output: &OutputArgs,
) -> Result<Outcome, CliError> {
    print!("{}", output::clearing_table(&title(file, path), &clearing.report, &clearing.schedule));
    let body = ClearBody {
        report: &clearing.report,
        schedule: ScheduleFile::from_schedule(&clearing.schedule),
    };
    emit(output, command, file.name.as_deref(), body)?;
    Ok(Outcome::from_certified(clearing.report.certified()))
}

pub fn clear_static(args: &StaticArgs) -> Result<Outcome, CliError> {
    let tol = check_tol(args.tol)?;
    let file = load(&args.file, None)?;
    let inst = file.static_instance()?;
    let mut clearing = match (args.mode, args.method) {
        (ModeArg::Matrix, MethodArg::Full) => clear_matrix(&inst)?,
        (ModeArg::Prorata, MethodArg::Full) => clear_prorata_lp(&inst)?,
        (ModeArg::Prorata, MethodArg::Fda) => clear_prorata_fda(&inst, &FdaOptions::default())?.0,
        (_, MethodArg::Sequential) => {
            return Err(CliError::Usage(
                "static clearing has a single period; use --method full or fda".into(),
            ))
        }
        (ModeArg::Matrix, MethodArg::Fda) => {
            return Err(CliError::Usage("--method fda requires --mode prorata".into()))
        }
    };
    if let Some(tol) = tol {
        let payments = match clearing.vector() {
            Some(v) => StaticPayments::ProRata(v),
            None => StaticPayments::Matrix(clearing.payments()),
        };
        clearing.report.certification = certify_clearing(&inst, payments, tol);
    }
    finish_clearing("clear static", &file, &args.file, &clearing, &args.output)
}

pub fn clear_dynamic(args: &DynamicArgs) -> Result<Outcome, CliError> {
    let tol = check_tol(args.tol)?;
    if args.mode == ModeArg::Matrix && args.method == MethodArg::Fda {
        return Err(CliError::Usage("--method fda requires --mode prorata".into()));
    }
    let file = load(&args.file, Some(&args.overrides))?;
    let inst = file.dynamic_instance()?;
    let mut clearing = netclear_core::clear_dynamic(
        &inst,
        args.mode.into(),
        args.method.into(),
        &FdaOptions::default(),
    )?;
    if let Some(tol) = tol {
        clearing.report.certification = certify_schedule(&inst, &clearing.schedule, tol);
    }
    finish_clearing("clear dynamic", &file, &args.file, &clearing, &args.output)
}

#[derive(Serialize)]
struct ValidationBody<'a> {
    mode: PaymentMode,
    horizon: usize,
    alpha: f64,
    eta: f64,
    tolerance: f64,
    loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    penalized_loss: Option<f64>,
    objective: f64,
    total_residual: f64,
    residual_by_node: Vec<f64>,
    /// 1-based
    default_set: Vec<usize>,
    worths: &'a [f64],
    certification: &'a Certification,
}

pub fn validate(args: &ValidateArgs) -> Result<Outcome, CliError> {
    let tol = check_tol(args.tol)?;
    let file = load(&args.file, Some(&args.overrides))?;
    let inst = file.dynamic_instance()?;
    let schedule = read_schedule(&args.schedule)?.to_schedule(&inst)?;
    let tol = tol.unwrap_or_else(|| priority_tolerance(&inst));
    let cert = certify_schedule(&inst, &schedule, tol);
    let residual = schedule.residual();
    let body = ValidationBody {
        mode: schedule.mode(),
        horizon: schedule.horizon(),
        alpha: inst.alpha(),
        eta: inst.eta(),
        tolerance: tol,
        loss: system_loss(&schedule),
        penalized_loss: (inst.eta() > 0.0).then(|| penalized_loss(&schedule, inst.eta())),
        objective: schedule.weighted_payments(&inst.weights()),
        total_residual: residual.sum(),
        residual_by_node: residual.row_sums(),
        default_set: schedule.default_set(default_tolerance(&inst)).iter().map(|i| i + 1).collect(),
        worths: schedule.worth(schedule.horizon()),
        certification: &cert,
    };

    let mut out = String::new();
    let _ = writeln!(out, "{}", title(&file, &args.file));
    let _ = writeln!(
        out,
        "schedule {}: mode {}, horizon {}, tolerance {:.3e}",
        args.schedule.display(),
        body.mode,
        body.horizon,
        tol
    );
    let _ = writeln!(out, "loss               {}", fmt2(body.loss));
    if let Some(j) = body.penalized_loss {
        let _ = writeln!(out, "penalized loss     {}", fmt2(j));
    }
    let _ = writeln!(out, "objective          {}", fmt2(body.objective));
    let _ = writeln!(out, "total residual     {}", fmt2(body.total_residual));
    let defaults: Vec<String> = body.default_set.iter().map(usize::to_string).collect();
    let _ = writeln!(out, "default set        {{{}}}", defaults.join(", "));
    output::certification_lines(&mut out, &cert);
    print!("{out}");

    emit(&args.output, "validate", file.name.as_deref(), body)?;
    Ok(Outcome::from_certified(cert.passed()))
}

#[derive(Serialize)]
struct ComponentSummary {
    nodes: Vec<usize>,
    sink: bool,
    source: bool,
    isolated: bool,
}

#[derive(Serialize)]
struct StabilitySummary {
    subset: Vec<usize>,
    stable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<Vec<usize>>,
    spectral_radius_estimate: f64,
}

impl StabilitySummary {
    fn new(subset: &[usize], v: StabilityVerdict) -> Self {
        StabilitySummary {
            subset: one_based(subset),
            stable: v.stable,
            witness: v.witness.as_deref().map(one_based),
            spectral_radius_estimate: v.spectral_radius_estimate,
        }
    }
}

#[derive(Serialize)]
struct GraphBody {
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    external_node: Option<usize>,
    arcs: usize,
    acyclic: bool,
    components: Vec<ComponentSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    unique_sink_node: Option<usize>,
    /// Every node has a path into the unique sink node.
    sink_reachable_from_all: bool,
    /// Nodes that owe nothing.
    zero_outflow: Vec<usize>,
    stability: Vec<StabilitySummary>,
}

fn one_based(nodes: &[usize]) -> Vec<usize> {
    nodes.iter().map(|i| i + 1).collect()
}

fn set(nodes: &[usize]) -> String {
    let s: Vec<String> = nodes.iter().map(usize::to_string).collect();
    format!("{{{}}}", s.join(", "))
}

pub fn analyze_graph(args: &GraphArgs) -> Result<Outcome, CliError> {
    let file = load(&args.file, None)?;
    let liabilities = file.liability_matrix()?;
    let n = liabilities.n();
    let graph = WeightedDigraph::from_matrix(liabilities.matrix())?;
    let cond = strong_components(&graph);
    let relative = liabilities.relative();
    let sink = cond.unique_sink_node();
    let sink_reachable_from_all = match sink {
        Some(s) => globally_reachable(&graph, &[s])?,
        None => false,
    };

    let mut subsets: Vec<Vec<usize>> = Vec::new();
    if let Some(s) = liabilities.external_node() {
        let banks: Vec<usize> = (0..n).filter(|&i| i != s).collect();
        if !banks.is_empty() {
            subsets.push(banks);
        }
    }
    if let Some(labels) = &args.subset {
        if let Some(&bad) = labels.iter().find(|&&l| l == 0 || l > n) {
            return Err(CliError::Usage(format!("--subset: {bad} is not a node label in 1..={n}")));
        }
        subsets.push(labels.iter().map(|l| l - 1).collect());
    }
    let stability = subsets
        .iter()
        .map(|s| Ok(StabilitySummary::new(s, submatrix_schur_stable(&relative, s)?)))
        .collect::<Result<Vec<_>, CliError>>()?;

    let body = GraphBody {
        n,
        external_node: liabilities.external_node().map(|s| s + 1),
        arcs: graph.arcs().count(),
        acyclic: cond.is_acyclic(&graph),
        components: cond
            .components
            .iter()
            .map(|c| ComponentSummary {
                nodes: one_based(&c.nodes),
                sink: c.is_sink,
                source: c.is_source,
                isolated: c.is_isolated,
            })
            .collect(),
        unique_sink_node: sink.map(|s| s + 1),
        sink_reachable_from_all,
        zero_outflow: one_based(
            &liabilities
                .nominal_outflow()
                .iter()
                .enumerate()
                .filter(|(_, &v)| v == 0.0)
                .map(|(i, _)| i)
                .collect::<Vec<_>>(),
        ),
        stability,
    };

    let mut out = String::new();
    let _ = writeln!(out, "{}", title(&file, &args.file));
    let _ = writeln!(
        out,
        "{} nodes, {} arcs, {}",
        body.n,
        body.arcs,
        if body.acyclic { "acyclic" } else { "has cycles" }
    );
    let _ = writeln!(out, "strongly connected components:");
    for c in &body.components {
        let mut tags = Vec::new();
        if c.sink {
            tags.push("sink");
        }
        if c.source {
            tags.push("source");
        }
        if c.isolated {
            tags.push("isolated");
        }
        let _ = writeln!(out, "  {} {}", set(&c.nodes), tags.join(" "));
    }
    match body.unique_sink_node {
        Some(s) => {
            let _ = writeln!(
                out,
                "unique sink node {s}, {}reachable from every node",
                if body.sink_reachable_from_all { "" } else { "not " }
            );
        }
        None => {
            let _ = writeln!(out, "no unique sink node");
        }
    }
    let _ = writeln!(out, "nodes owing nothing: {}", set(&body.zero_outflow));
    for s in &body.stability {
        let _ = write!(
            out,
            "relative liabilities on {}: {} (spectral radius ~ {:.6})",
            set(&s.subset),
            if s.stable { "Schur stable" } else { "not Schur stable" },
            s.spectral_radius_estimate
        );
        if let Some(w) = &s.witness {
            let _ = write!(out, ", contains sink component {}", set(w));
        }
        out.push('\n');
    }
    print!("{out}");

    emit(&args.output, "analyze-graph", file.name.as_deref(), body)?;
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct CompareBody<'a> {
    scenarios: &'a [ScenarioEntry],
}

pub fn compare(args: &CompareArgs) -> Result<Outcome, CliError> {
    let file = load(&args.file, Some(&args.overrides))?;
    let inst = file.dynamic_instance()?;
    let cmp = scenario_compare(&inst)?;
    print!("{}", output::comparison_table(&title(&file, &args.file), &cmp));
    let certified = cmp.entries.iter().all(|e| e.report.certified());
    emit(
        &args.output,
        "compare",
        file.name.as_deref(),
        CompareBody { scenarios: &cmp.entries },
    )?;
    Ok(Outcome::from_certified(certified))
}
