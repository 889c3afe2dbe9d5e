use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use forestconc::bounds::{
    generalization_bound, m_dependent_generalization_bound, BetaSchedule, Family,
    GeneralizationBound, LipschitzVector, StabilitySchedule, TailCurve,
};
use forestconc::complexity::{
    best_upper_bound_with_workers, cycle_upper_bound, grid_upper_bound, heuristic_report,
    m_dependent_upper_bound, ComplexityResult,
};
use forestconc::graph::families;
use forestconc::simulation::rng::{stream, Domain};
use forestconc::simulation::{
    applicable_curves, estimate_tail, graph_curves, quantile_grid, validate_bound, ApplicableCurves,
    Centering, CurveBudget, DependentSampler, EstimateConfig, Rect,
};
use forestconc::stability::{gap_experiment, GapConfig};
use forestconc::Graph;
use rand::Rng;
use serde_json::json;

use crate::args::{
    BoundArgs, BoundChoice, BudgetArgs, CenteringName, Cli, ComplexityArgs, FamilyName, GapArgs,
    GenboundArgs, GraphArgs, SamplerName, SimulateArgs,
};
use crate::graph_file::GraphFile;
use crate::{fmt_f64, CliError, Sinks, Status};

/// Tail levels targeted by `--t-grid auto`.
pub const AUTO_LEVELS: [f64; 6] = [0.3, 0.1, 0.03, 0.01, 0.003, 0.0005];

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// A graph with the closed-form constructions that apply to its family.
pub struct GraphSpec {
    pub graph: Graph,
    pub hints: Vec<ComplexityResult>,
    pub description: String,
}

pub fn build_graph(args: &GraphArgs, seed: u64) -> Result<GraphSpec, CliError> {
    let spec = match (&args.graph, args.family) {
        (Some(path), _) => GraphSpec {
            graph: GraphFile::read(path)?.to_graph()?,
            hints: Vec::new(),
            description: path.display().to_string(),
        },
        (None, Some(family)) => built_in(family, args.n, args.m, seed)?,
        (None, None) => return Err(usage("give --graph <file> or --family <name>")),
    };
    if let Some(path) = &args.emit_graph {
        fs::write(path, GraphFile::from_graph(&spec.graph).to_json())?;
    }
    Ok(spec)
}

fn built_in(family: FamilyName, n: Option<usize>, m: Option<usize>, seed: u64) -> Result<GraphSpec, CliError> {
    let need_n = || n.filter(|&n| n >= 1).ok_or_else(|| usage("this family needs --n >= 1"));
    let mut hints = Vec::new();
    let (graph, description) = match family {
        FamilyName::Path => (families::path(need_n()?), format!("path n={}", need_n()?)),
        FamilyName::Tree => {
            let n = need_n()?;
            (families::random_tree(n, &mut stream(seed, Domain::Layout, 0)), format!("random tree n={n} seed={seed}"))
        }
        FamilyName::Cycle => {
            let n = need_n()?;
            let g = families::cycle(n)?;
            hints.push(cycle_upper_bound(n)?);
            (g, format!("cycle n={n}"))
        }
        FamilyName::Grid => {
            let m = m.ok_or_else(|| usage("grid needs --m (side length)"))?;
            if m < 1 {
                return Err(usage("grid side must be >= 1"));
            }
            if m >= 2 {
                hints.push(grid_upper_bound(m)?);
            }
            (families::grid(m, m), format!("grid {m}x{m}"))
        }
        FamilyName::Mdep => {
            let n = need_n()?;
            let m = m.ok_or_else(|| usage("mdep needs --m"))?;
            if m >= 1 {
                hints.push(m_dependent_upper_bound(n, m)?);
            }
            (families::m_dependent(n, m), format!("m-dependent chain n={n} m={m}"))
        }
        FamilyName::Star => {
            let n = need_n()?;
            (families::star(n - 1), format!("star n={n}"))
        }
        FamilyName::Edgeless => (Graph::edgeless(need_n()?), format!("edgeless n={}", need_n()?)),
        FamilyName::Complete => (families::complete(need_n()?), format!("complete n={}", need_n()?)),
    };
    Ok(GraphSpec { graph, hints, description })
}

pub fn parse_list(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| usage(format!("{what}: cannot parse {s:?} as a number")))
        })
        .collect()
}

/// `uniform:x` or an explicit comma-separated vector of length `n`.
pub fn parse_lipschitz(text: &str, n: usize) -> Result<LipschitzVector, CliError> {
    let c = match text.strip_prefix("uniform:") {
        Some(x) => LipschitzVector::uniform(n, parse_list(x, "--c")?[0])?,
        None => LipschitzVector::new(parse_list(text, "--c")?)?,
    };
    if c.len() != n {
        return Err(usage(format!("--c has {} entries for {n} coordinates", c.len())));
    }
    Ok(c)
}

fn curve_budget(b: &BudgetArgs, workers: usize) -> CurveBudget {
    CurveBudget { forest_complexity: b.budget, chromatic: b.chromatic_budget, workers }
}

/// Writes the artifact to `--out` or stdout, and returns the sink for the
/// human report.
fn emit<'s>(cli: &Cli, artifact: &str, sinks: &'s mut Sinks<'_>) -> Result<&'s mut dyn Write, CliError> {
    match &cli.out {
        Some(path) => {
            write_file(path, artifact)?;
            Ok(&mut *sinks.stdout)
        }
        None => {
            sinks.stdout.write_all(artifact.as_bytes())?;
            Ok(&mut *sinks.stderr)
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn blocks_text(result: &ComplexityResult) -> String {
    result
        .witness
        .partition
        .blocks()
        .iter()
        .map(|b| format!("{{{}}}", b.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn complexity(cli: &Cli, a: &ComplexityArgs, sinks: &mut Sinks<'_>) -> Result<Status, CliError> {
    let spec = build_graph(&a.graph, cli.seed)?;
    let g = &spec.graph;
    let best = best_upper_bound_with_workers(g, a.budget, cli.workers)?;
    let mut candidates = heuristic_report(g)?;
    candidates.extend(spec.hints.iter().cloned());
    let best = candidates.iter().fold(best, |b, c| if c.value < b.value { c.clone() } else { b });

    let mut text = String::new();
    writeln!(text, "graph: {} (n={}, edges={})", spec.description, g.n(), g.edge_count()).ok();
    let kind = if best.exact { "exact" } else { "upper bound" };
    writeln!(text, "forest complexity: {} ({kind}, {})", best.value, best.method.name()).ok();
    writeln!(text, "witness blocks: {}", blocks_text(&best)).ok();
    let forest: Vec<String> = best.witness.forest.edges().iter().map(|(u, v)| format!("{u}-{v}")).collect();
    writeln!(text, "forest edges: {}", forest.join(" ")).ok();
    writeln!(text, "constructions:").ok();
    for c in &candidates {
        writeln!(text, "  {:<16}{}", c.method.name(), c.value).ok();
    }

    let report = json!({
        "n": g.n(),
        "edges": g.edge_count(),
        "forest_complexity": best.value,
        "exact": best.exact,
        "method": best.method.name(),
        "witness": {
            "blocks": best.witness.partition.blocks(),
            "forest_edges": best.witness.forest.edges(),
        },
        "constructions": candidates
            .iter()
            .map(|c| json!({"method": c.method.name(), "value": c.value}))
            .collect::<Vec<_>>(),
    });
    let json_text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    if let Some(path) = &cli.out {
        write_file(path, &json_text)?;
    }
    if a.json {
        sinks.stdout.write_all(json_text.as_bytes())?;
    } else {
        sinks.stdout.write_all(text.as_bytes())?;
    }
    Ok(Status::Pass)
}

fn bound_header() -> String {
    let mut h = String::from("t");
    for f in Family::ALL {
        write!(h, ",bound_{}", f.name()).ok();
    }
    h
}

fn bound_cells(curves: &[&TailCurve], t: f64) -> String {
    let mut row = String::new();
    for f in Family::ALL {
        row.push(',');
        if let Some(c) = curves.iter().find(|c| c.family == f) {
            row.push_str(&fmt_f64(c.at(t).probability));
        }
    }
    row
}

fn inapplicable(family: Family) -> &'static str {
    match family {
        Family::McDiarmid => "the McDiarmid bound needs an edgeless dependency graph",
        Family::Janson => "the graph exceeds --chromatic-budget, so chi* is not available",
        Family::Tree => "the tree bound needs a tree",
        Family::Forest => "the forest bound needs a forest",
        Family::General => "the general bound always applies",
    }
}

fn choice_family(choice: BoundChoice) -> Option<Family> {
    match choice {
        BoundChoice::All => None,
        BoundChoice::Mcdiarmid => Some(Family::McDiarmid),
        BoundChoice::Janson => Some(Family::Janson),
        BoundChoice::Tree => Some(Family::Tree),
        BoundChoice::Forest => Some(Family::Forest),
        BoundChoice::General => Some(Family::General),
    }
}

fn describe_curves(text: &mut String, curves: &ApplicableCurves) {
    let lambda = &curves.complexity;
    let kind = if lambda.exact { "exact" } else { "upper bound" };
    writeln!(text, "forest complexity: {} ({kind}, {})", lambda.value, lambda.method.name()).ok();
    for c in &curves.curves {
        writeln!(text, "  {:<10} exp(-2t^2/D), D = {}", c.family.name(), fmt_f64(c.denominator)).ok();
    }
}

pub fn bound(cli: &Cli, a: &BoundArgs, sinks: &mut Sinks<'_>) -> Result<Status, CliError> {
    let spec = build_graph(&a.graph, cli.seed)?;
    let g = &spec.graph;
    let c = parse_lipschitz(&a.c, g.n())?;
    let ts = parse_list(&a.t, "--t")?;
    let curves = graph_curves(g, &c, curve_budget(&a.budget, cli.workers), spec.hints)?;
    let selected: Vec<&TailCurve> = match choice_family(a.bound) {
        None => curves.curves.iter().collect(),
        Some(f) => vec![curves.get(f).ok_or_else(|| usage(inapplicable(f)))?],
    };
    let mut csv = bound_header() + "\n";
    for &t in &ts {
        csv.push_str(&fmt_f64(t));
        csv.push_str(&bound_cells(&selected, t));
        csv.push('\n');
    }
    let mut text = format!("graph: {} (n={}, edges={})\n", spec.description, g.n(), g.edge_count());
    describe_curves(&mut text, &curves);
    emit(cli, &csv, sinks)?.write_all(text.as_bytes())?;
    Ok(Status::Pass)
}

fn random_regions(count: usize, seed: u64) -> Result<Vec<Rect>, CliError> {
    let mut rng = stream(seed, Domain::Layout, 1);
    (0..count)
        .map(|_| {
            let w = rng.random_range(0.15..0.4);
            let h = rng.random_range(0.15..0.4);
            let x0 = rng.random::<f64>() * (1.0 - w);
            let y0 = rng.random::<f64>() * (1.0 - h);
            Ok(Rect::new(x0, y0, x0 + w, y0 + h)?)
        })
        .collect()
}

fn read_regions(path: &Path) -> Result<Vec<Rect>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let raw: Vec<[f64; 4]> =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("regions file: {e}")))?;
    raw.into_iter().map(|[x0, y0, x1, y1]| Ok(Rect::new(x0, y0, x1, y1)?)).collect()
}

pub fn simulate(cli: &Cli, a: &SimulateArgs, sinks: &mut Sinks<'_>) -> Result<Status, CliError> {
    let budget = curve_budget(&a.budget, cli.workers);
    let (sampler, description, hints) = match a.sampler {
        SamplerName::Edgegen => {
            let spec = build_graph(&a.graph, cli.seed)?;
            (DependentSampler::edge_generator(spec.graph), spec.description, spec.hints)
        }
        SamplerName::Mdep => {
            let n = a.graph.n.ok_or_else(|| usage("mdep needs --n"))?;
            let m = a.graph.m.ok_or_else(|| usage("mdep needs --m"))?;
            (DependentSampler::m_dependent(n, m)?, format!("m-dependent n={n} m={m}"), Vec::new())
        }
        SamplerName::Poisson => {
            let regions = match &a.regions_file {
                Some(path) => read_regions(path)?,
                None => random_regions(a.regions, cli.seed)?,
            };
            let count = regions.len();
            let sampler = DependentSampler::poisson_regions(regions, a.intensity, a.cap)?;
            (sampler, format!("poisson regions={count} intensity={} cap={}", a.intensity, a.cap), Vec::new())
        }
    };
    if a.sampler != SamplerName::Edgegen {
        if let Some(path) = &a.graph.emit_graph {
            fs::write(path, GraphFile::from_graph(sampler.graph()).to_json())?;
        }
    }
    let c = parse_lipschitz(&a.c, sampler.n())?;
    let mut curves = if hints.is_empty() {
        applicable_curves(&sampler, &c, budget)?
    } else {
        graph_curves(sampler.graph(), &c, budget, hints)?
    };
    if a.corrupt_bound {
        for curve in &mut curves.curves {
            *curve = curve.scaled(0.5)?;
        }
    }
    let t_grid = if a.t_grid.trim() == "auto" {
        quantile_grid(&sampler, &c, &AUTO_LEVELS, a.trials, cli.seed, cli.workers)?
    } else {
        parse_list(&a.t_grid, "--t-grid")?
    };
    let config = EstimateConfig {
        trials: a.trials,
        seed: cli.seed,
        confidence: a.confidence,
        centering: match a.centering {
            CenteringName::Exact => Centering::Exact,
            CenteringName::Pilot => Centering::Pilot,
        },
        workers: cli.workers,
    };
    let estimate = estimate_tail(&sampler, &c, &t_grid, &config)?;
    let tightest = *curves.tightest();
    let verdict = validate_bound(&estimate, &estimate.bound_curve(&tightest))?;

    let all: Vec<&TailCurve> = curves.curves.iter().collect();
    let mut csv = String::from("t,empirical_freq,ci_upper");
    csv.push_str(&bound_header()[1..]);
    csv.push('\n');
    for ((t, eff), (f, ci)) in t_grid
        .iter()
        .zip(estimate.effective_thresholds())
        .zip(estimate.frequencies.iter().zip(&estimate.ci_upper))
    {
        write!(csv, "{},{},{}{}", fmt_f64(*t), fmt_f64(*f), fmt_f64(*ci), bound_cells(&all, eff)).ok();
        csv.push('\n');
    }

    let g = sampler.graph();
    let mut text = format!("sampler: {description} (n={}, edges={})\n", g.n(), g.edge_count());
    if a.corrupt_bound {
        text.push_str("negative control: every bound denominator halved\n");
    }
    describe_curves(&mut text, &curves);
    writeln!(
        text,
        "trials: {}  center: {} (radius {})  mean estimate: {} +- {}",
        estimate.trials,
        fmt_f64(estimate.center),
        fmt_f64(estimate.center_radius),
        fmt_f64(estimate.mean_estimate),
        fmt_f64(estimate.mean_radius)
    )
    .ok();
    writeln!(text, "validating against {} (confidence {})", tightest.family.name(), a.confidence).ok();
    for v in &verdict.thresholds {
        writeln!(
            text,
            "  t={:<12} freq={:<12} ci_upper={:<12} bound={:<12} {}",
            format!("{:.4}", v.t),
            format!("{:.3e}", v.frequency),
            format!("{:.3e}", v.ci_upper),
            format!("{:.3e}", v.bound),
            if v.pass { "ok" } else { "VIOLATED" }
        )
        .ok();
    }
    writeln!(text, "{}", if verdict.pass { "PASS" } else { "FAIL" }).ok();
    emit(cli, &csv, sinks)?.write_all(text.as_bytes())?;
    Ok(if verdict.pass { Status::Pass } else { Status::Fail })
}

fn beta_schedule(a: &GenboundArgs) -> Result<BetaSchedule, CliError> {
    match (a.beta_const, &a.beta_table) {
        (Some(b), None) => Ok(BetaSchedule::Harmonic(b)),
        (None, Some(table)) => Ok(BetaSchedule::Table(parse_list(table, "--beta-table")?)),
        _ => Err(usage("give exactly one of --beta-const or --beta-table")),
    }
}

pub fn genbound(cli: &Cli, a: &GenboundArgs, sinks: &mut Sinks<'_>) -> Result<Status, CliError> {
    let beta = beta_schedule(a)?;
    let (bound, setting): (GeneralizationBound, String) = if let Some(m) = a.m {
        let s = StabilitySchedule::new(beta, a.loss_bound, a.n, 0)?;
        let b = m_dependent_generalization_bound(&s, m, a.empirical_risk, a.delta)?;
        (b, format!("m-dependent data, m={m} (Delta={}, Lambda<=4mn)", 2 * m))
    } else if a.iid {
        let s = StabilitySchedule::new(beta, a.loss_bound, a.n, 0)?;
        let b = generalization_bound(&s, a.n as u64, a.empirical_risk, a.delta)?;
        (b, format!("independent data (Delta=0, Lambda={})", a.n))
    } else if let (Some(lambda), Some(delta_g)) = (a.lambda, a.max_degree) {
        let s = StabilitySchedule::new(beta, a.loss_bound, a.n, delta_g)?;
        let b = generalization_bound(&s, lambda, a.empirical_risk, a.delta)?;
        (b, format!("dependency graph with Lambda={lambda}, Delta={delta_g}"))
    } else {
        return Err(usage("give --m, --iid, or both --lambda and --max-degree"));
    };
    let terms = [
        ("empirical_risk", bound.empirical_risk),
        ("expectation_term", bound.expectation_term),
        ("deviation_term", bound.deviation_term),
        ("total", bound.total),
    ];
    let mut csv = String::from("term,value\n");
    for (name, value) in terms {
        writeln!(csv, "{name},{}", fmt_f64(value)).ok();
    }
    let mut text = format!("{setting}, n={}, M={}, delta={}\n", a.n, a.loss_bound, a.delta);
    for (name, value) in terms {
        writeln!(text, "  {name:<18}{}", fmt_f64(value)).ok();
    }
    writeln!(text, "with probability at least {}: R <= {}", 1.0 - a.delta, fmt_f64(bound.total)).ok();
    emit(cli, &csv, sinks)?.write_all(text.as_bytes())?;
    Ok(Status::Pass)
}

pub fn gap(cli: &Cli, a: &GapArgs, sinks: &mut Sinks<'_>) -> Result<Status, CliError> {
    if !(0.0..=1.0).contains(&a.min_pass_fraction) {
        return Err(usage("--min-pass-fraction must lie in [0, 1]"));
    }
    let config = GapConfig {
        n: a.n,
        q: a.q,
        regularization: a.regularization,
        noise: a.noise,
        delta: a.delta,
        repetitions: a.reps,
        test_trials: a.test_trials,
        seed: cli.seed,
        workers: cli.workers,
    };
    let report = gap_experiment(&config)?;
    let mut csv = String::from("repetition,empirical_risk,test_risk,test_std_error,gap,bound,pass\n");
    for r in &report.records {
        writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            r.repetition,
            fmt_f64(r.empirical_risk),
            fmt_f64(r.test_risk),
            fmt_f64(r.test_std_error),
            fmt_f64(r.gap),
            fmt_f64(r.bound),
            r.pass
        )
        .ok();
    }
    let max_gap = report.records.iter().map(|r| r.gap).fold(f64::NEG_INFINITY, f64::max);
    let mean_gap = report.records.iter().map(|r| r.gap).sum::<f64>() / report.records.len() as f64;
    let status = if report.pass_fraction >= a.min_pass_fraction { Status::Pass } else { Status::Fail };
    let mut text = format!(
        "ridge on {}-dependent windows: n={} q={} lambda={} noise={} reps={}\n",
        2 * a.q,
        a.n,
        a.q,
        a.regularization,
        a.noise,
        a.reps
    );
    writeln!(text, "stability: beta_i = B/i with B = {}", fmt_f64(report.stability_constant)).ok();
    writeln!(
        text,
        "bound on R - R_hat: {} + {} = {}",
        fmt_f64(report.expectation_term),
        fmt_f64(report.deviation_term),
        fmt_f64(report.expectation_term + report.deviation_term)
    )
    .ok();
    writeln!(text, "gap: mean {} max {}", fmt_f64(mean_gap), fmt_f64(max_gap)).ok();
    writeln!(text, "pass fraction: {} (required {})", report.pass_fraction, a.min_pass_fraction).ok();
    writeln!(text, "{}", if status == Status::Pass { "PASS" } else { "FAIL" }).ok();
    emit(cli, &csv, sinks)?.write_all(text.as_bytes())?;
    Ok(status)
}
