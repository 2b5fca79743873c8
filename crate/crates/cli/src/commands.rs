//! Subcommand implementations. Each returns whether the run succeeded
//! (exit 0) or produced a failing report (exit 1).

use serde_json::json;

use conekit::affine_params::validate;
use conekit::exotic::{
    polyhedral_drift_estimate, polyhedral_path_with, vinberg_path_with, ExoticEnsemble, PolyhedralConeSpec,
    VinbergProcessSpec,
};
use conekit::jordan::{min_eigenvalue, Algebra, Element};
use conekit::riccati::{closed_flow_grid, closed_form_delta, solve_numeric, RiccatiFlow, RiccatiOptions, RiccatiSolver, SplitSolver};
use conekit::simulate::{
    boundary_stats, euler_path_with, exact_bru_path_with, jump_augmented_path_with, mc_laplace, sample_or_simulate,
    PathEnsemble, SimConfig,
};
use conekit::wishart::{
    central_density, ln_laplace, noncentral_density, SeriesOptions, WishartLaw, ZonalMode,
};

use crate::args::*;
use crate::io::*;

fn manifest(cmd: &Command, algebra: Option<Algebra>, out: Option<&std::path::Path>, summary: serde_json::Value) -> Manifest {
    Manifest {
        tool: "conekit",
        version: env!("CARGO_PKG_VERSION"),
        library_version: conekit::VERSION,
        command: cmd.name(),
        config: serde_json::to_value(cmd).expect("config serializes"),
        algebra: algebra.map(|a| a.to_string()),
        output: out.map(|p| p.display().to_string()),
        summary,
    }
}

fn coords(x: &Element) -> Vec<f64> {
    x.coords().iter().copied().collect()
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("serializes") + "\n"
}

pub fn run(cmd: &Command) -> CliResult<bool> {
    match cmd {
        Command::Validate(a) => run_validate(cmd, a),
        Command::Riccati(a) => run_riccati(cmd, a),
        Command::Laplace(a) => run_laplace(cmd, a),
        Command::Density(a) => run_density(cmd, a),
        Command::Sample(a) => run_sample(cmd, a),
        Command::Simulate(a) => run_simulate(cmd, a),
        Command::Examples(a) => run_examples(cmd, a),
        Command::Selftest(a) => run_selftest(a),
    }
}

fn run_validate(cmd: &Command, a: &ValidateArgs) -> CliResult<bool> {
    let (_, p) = load_params(&a.params)?;
    let report = validate(&p, a.samples, a.seed);
    let ok = report.all_passed();
    let data = match a.output.format {
        Format::Json => pretty(&serde_json::to_value(&report).expect("report serializes")),
        Format::Csv => {
            let mut s = String::new();
            push_row(&mut s, ["check", "passed", "samples", "worst", "detail"].map(String::from));
            for c in &report.checks {
                push_row(
                    &mut s,
                    [csv_field(&c.name), c.passed.to_string(), c.samples.to_string(), num(c.worst), csv_field(&c.detail)],
                );
            }
            s
        }
    };
    let failed: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
    let summary = json!({ "all_passed": ok, "failed": failed });
    emit(a.output.out.as_deref(), &data, &manifest(cmd, Some(p.algebra()), a.output.out.as_deref(), summary))?;
    Ok(ok)
}

fn flow_json(f: &RiccatiFlow) -> serde_json::Value {
    json!({
        "method": format!("{:?}", f.method),
        "times": f.times,
        "phi": f.phi,
        "psi": f.psi.iter().map(coords).collect::<Vec<_>>(),
        "stats": f.stats,
    })
}

fn run_riccati(cmd: &Command, a: &RiccatiArgs) -> CliResult<bool> {
    let (_, p) = load_params(&a.params)?;
    let alg = p.algebra();
    let u = parse_element(&a.u, alg)?;
    if a.points < 2 || !(a.t >= 0.0) {
        return Err(CliError::Usage("need --points ≥ 2 and --t ≥ 0".into()));
    }
    let times: Vec<f64> = (0..a.points).map(|k| a.t * k as f64 / (a.points - 1) as f64).collect();
    let opts = RiccatiOptions { rtol: a.rtol, atol: a.atol };
    let n = alg.dim();
    let flow = match a.method {
        FlowMethodArg::Numeric | FlowMethodArg::Both => RiccatiSolver::new(&p, opts)?.solve(&u, &times)?,
        FlowMethodArg::Closed => closed_flow_grid(&p, &u, &times)?,
        FlowMethodArg::Split => {
            let solver = SplitSolver::new(&p, opts)?;
            let mut phi = Vec::new();
            let mut psi = Vec::new();
            for &t in &times {
                let (f, s, _) = if t == 0.0 { (0.0, u.clone(), Default::default()) } else { solver.flow(&u, t, a.split_steps)? };
                phi.push(f);
                psi.push(s);
            }
            RiccatiFlow {
                u0: u.clone(),
                times: times.clone(),
                phi,
                psi,
                method: conekit::riccati::FlowMethod::Split(a.split_steps),
                stats: Default::default(),
            }
        }
    };
    let closed = match a.method {
        FlowMethodArg::Both => Some(closed_flow_grid(&p, &u, &times)?),
        _ => None,
    };
    let errors: Option<Vec<f64>> = closed.as_ref().map(|c| {
        (0..times.len())
            .map(|k| (flow.phi[k] - c.phi[k]).abs().max((&flow.psi[k] - &c.psi[k]).coords().amax()))
            .collect()
    });
    let max_error = errors.as_ref().map(|e| e.iter().copied().fold(0.0, f64::max));

    let data = match a.output.format {
        Format::Json => {
            let mut v = flow_json(&flow);
            if let (Some(c), Some(e)) = (&closed, &errors) {
                v["closed"] = flow_json(c);
                v["error"] = json!(e);
                v["max_error"] = json!(max_error);
            }
            pretty(&v)
        }
        Format::Csv => {
            let mut s = String::new();
            let mut head = vec!["t".to_string(), "phi".into()];
            head.extend(coord_header("psi", n));
            if closed.is_some() {
                head.push("phi_closed".into());
                head.extend(coord_header("psi_closed", n));
                head.push("max_error".into());
            }
            push_row(&mut s, head);
            for k in 0..times.len() {
                let mut row = vec![num(times[k]), num(flow.phi[k])];
                row.extend(flow.psi[k].coords().iter().map(|v| num(*v)));
                if let (Some(c), Some(e)) = (&closed, &errors) {
                    row.push(num(c.phi[k]));
                    row.extend(c.psi[k].coords().iter().map(|v| num(*v)));
                    row.push(num(e[k]));
                }
                push_row(&mut s, row);
            }
            s
        }
    };
    let summary = json!({ "method": format!("{:?}", flow.method), "stats": flow.stats, "max_error": max_error });
    emit(a.output.out.as_deref(), &data, &manifest(cmd, Some(alg), a.output.out.as_deref(), summary))?;
    Ok(true)
}

fn law_of(spec: &LawSpec) -> CliResult<WishartLaw> {
    let alg = parse_algebra(&spec.algebra)?;
    let alpha = parse_element(&spec.alpha, alg)?;
    let x = parse_element(&spec.x, alg)?;
    Ok(WishartLaw::new(spec.delta, alpha, spec.t, x)?)
}

fn run_laplace(cmd: &Command, a: &LawArgs) -> CliResult<bool> {
    let law = law_of(&a.law)?;
    let u = parse_element(&a.u, law.algebra())?;
    let l = ln_laplace(&law, &u)?;
    let data = match a.output.format {
        Format::Json => pretty(&json!({ "log_value": l, "value": l.exp() })),
        Format::Csv => format!("value,log_value\n{},{}\n", num(l.exp()), num(l)),
    };
    let summary = json!({ "value": l.exp() });
    emit(a.output.out.as_deref(), &data, &manifest(cmd, Some(law.algebra()), a.output.out.as_deref(), summary))?;
    Ok(true)
}

fn run_density(cmd: &Command, a: &DensityArgs) -> CliResult<bool> {
    let law = law_of(&a.law)?;
    let xi = parse_element(&a.xi, law.algebra())?;
    let row = if law.x.is_zero() {
        let d = central_density(&law, &xi)?;
        json!({ "log_value": d.log_value, "value": d.value, "tail_bound": 0.0, "degree": 0, "zonal_std_error": 0.0 })
    } else {
        let mode = match a.zonal {
            ZonalArg::Auto => None,
            ZonalArg::Recursive => Some(ZonalMode::Recursive),
            ZonalArg::MonteCarlo => Some(ZonalMode::MonteCarlo { samples: a.mc_samples, seed: a.seed }),
        };
        let d = noncentral_density(&law, &xi, &SeriesOptions { cap: a.cap, target_tol: a.tail_tol, mode })?;
        serde_json::to_value(d).expect("serializes")
    };
    let cols = ["log_value", "value", "tail_bound", "degree", "zonal_std_error"];
    let data = match a.output.format {
        Format::Json => pretty(&row),
        Format::Csv => {
            let vals: Vec<String> = cols
                .iter()
                .map(|c| match &row[*c] {
                    serde_json::Value::Number(v) if v.is_f64() => num(v.as_f64().expect("f64")),
                    v => v.to_string(),
                })
                .collect();
            format!("{}\n{}\n", cols.join(","), vals.join(","))
        }
    };
    emit(a.output.out.as_deref(), &data, &manifest(cmd, Some(law.algebra()), a.output.out.as_deref(), row))?;
    Ok(true)
}

fn run_sample(cmd: &Command, a: &SampleArgs) -> CliResult<bool> {
    let law = law_of(&a.law)?;
    let (xs, exact) = sample_or_simulate(&law, a.paths, a.seed, a.steps)?;
    let n = law.algebra().dim();
    let data = match a.output.format {
        Format::Json => pretty(&json!({ "exact": exact, "samples": xs.iter().map(coords).collect::<Vec<_>>() })),
        Format::Csv => {
            let mut s = String::new();
            push_row(&mut s, std::iter::once("sample_id".to_string()).chain(coord_header("coord", n)));
            for (i, x) in xs.iter().enumerate() {
                push_row(&mut s, std::iter::once(i.to_string()).chain(x.coords().iter().map(|v| num(*v))));
            }
            s
        }
    };
    let summary = json!({ "count": xs.len(), "exact_sampler": exact });
    emit(a.output.out.as_deref(), &data, &manifest(cmd, Some(law.algebra()), a.output.out.as_deref(), summary))?;
    Ok(true)
}

/// Rows `path_id, t, coord_1..n, min_eigen` (CSV) or nested arrays (JSON).
fn ensemble_output(
    format: Format,
    count: usize,
    dim: usize,
    times: &[f64],
    recorded: &[usize],
    state: impl Fn(usize, usize) -> Vec<f64>,
    margin: impl Fn(&[f64]) -> f64,
) -> String {
    match format {
        Format::Csv => {
            let mut s = String::new();
            let mut head = vec!["path_id".to_string(), "t".into()];
            head.extend(coord_header("coord", dim));
            head.push("min_eigen".into());
            push_row(&mut s, head);
            for p in 0..count {
                for (j, &k) in recorded.iter().enumerate() {
                    let x = state(p, j);
                    let mut row = vec![p.to_string(), num(times[k])];
                    row.extend(x.iter().map(|v| num(*v)));
                    row.push(num(margin(&x)));
                    push_row(&mut s, row);
                }
            }
            s
        }
        Format::Json => {
            let paths: Vec<Vec<Vec<f64>>> =
                (0..count).map(|p| (0..recorded.len()).map(|j| state(p, j)).collect()).collect();
            let t: Vec<f64> = recorded.iter().map(|&k| times[k]).collect();
            pretty(&json!({ "times": t, "paths": paths }))
        }
    }
}

fn run_simulate(cmd: &Command, a: &SimulateArgs) -> CliResult<bool> {
    let (_, p) = load_params(&a.params)?;
    let alg = p.algebra();
    let x0 = parse_element(&a.x, alg)?;
    let record = parse_record(&a.record)?;
    let cfg = SimConfig::new(a.steps, a.paths, a.seed).record(record);
    let ens: PathEnsemble = match a.scheme {
        SchemeArg::Auto if p.has_jumps() => jump_augmented_path_with(&p, &x0, a.t, &cfg)?,
        SchemeArg::Auto | SchemeArg::Euler => euler_path_with(&p, &x0, a.t, &cfg)?,
        SchemeArg::Jumps => jump_augmented_path_with(&p, &x0, a.t, &cfg)?,
        SchemeArg::Exact => {
            let delta = closed_form_delta(&p)
                .filter(|_| p.drift.matrix().amax() == 0.0)
                .ok_or_else(|| CliError::Failure("exact transitions need Bru parameters (b = δα, B = 0, no jumps)".into()))?;
            if a.steps == 0 {
                return Err(CliError::Usage("--steps must be positive".into()));
            }
            let grid: Vec<f64> = (0..=a.steps).map(|k| a.t * k as f64 / a.steps as f64).collect();
            exact_bru_path_with(&p.alpha, delta, &x0, &grid, a.paths, a.seed, record)?
        }
    };
    let data = ensemble_output(
        a.output.format,
        ens.count,
        alg.dim(),
        &ens.times,
        &ens.recorded,
        |p, j| ens.coords(p, j).to_vec(),
        |x| Element::from_slice(alg, x).and_then(|e| min_eigenvalue(&e)).unwrap_or(f64::NAN),
    );
    let stats = boundary_stats(&ens, a.eps);
    let mut summary = json!({
        "scheme": ens.scheme,
        "paths": ens.count,
        "fraction_touching": stats.fraction_touching,
        "eps": a.eps,
        "jumps": ens.jump_counts.iter().sum::<usize>(),
    });
    if let Some(spec) = &a.u {
        let u = parse_element(spec, alg)?;
        let (mean, se) = mc_laplace(&ens, &u, ens.final_index())?;
        let reference = solve_numeric(&p, &u, a.t, 1e-10, 1e-12).map(|f| {
            let (phi, psi) = f.last();
            (-phi - psi.inner(&x0)).exp()
        });
        summary["transform"] = json!({
            "u": coords(&u),
            "t": a.t,
            "monte_carlo": mean,
            "std_error": se,
            "riccati": reference.as_ref().ok(),
            "z_score": reference.as_ref().ok().map(|r| (mean - r) / se),
        });
    }
    emit(a.output.out.as_deref(), &data, &manifest(cmd, Some(alg), a.output.out.as_deref(), summary))?;
    Ok(true)
}

fn run_examples(cmd: &Command, a: &ExamplesArgs) -> CliResult<bool> {
    if a.y0.len() != 4 || a.z1.len() != 2 || a.z2.len() != 2 {
        return Err(CliError::Usage("--y0 takes 4 comma-separated values, --z1 and --z2 take 2".into()));
    }
    let record = parse_record(&a.record)?;
    let cfg = SimConfig::new(a.steps, a.paths, a.seed).record(record);
    let (ens, summary): (ExoticEnsemble, serde_json::Value) = match a.kind {
        ExampleKind::Polyhedral => {
            let y0 = [a.y0[0], a.y0[1], a.y0[2], a.y0[3]];
            let ens = polyhedral_path_with(&PolyhedralConeSpec::default(), y0, a.t, &cfg)?;
            let drift = polyhedral_drift_estimate(&ens).ok();
            (ens, json!({ "drift_estimate": drift.map(|d| d.0), "drift_std_error": drift.map(|d| d.1) }))
        }
        ExampleKind::Vinberg => {
            let spec = VinbergProcessSpec::new(a.b, a.a0, [a.z1[0], a.z1[1]], [a.z2[0], a.z2[1]])?;
            (vinberg_path_with(&spec, a.t, &cfg)?, json!({ "x0": spec.x0() }))
        }
    };
    let data = ensemble_output(
        a.output.format,
        ens.count,
        ens.dim,
        &ens.times,
        &ens.recorded,
        |p, j| ens.coords(p, j).to_vec(),
        |x| ens.margin(x),
    );
    emit(a.output.out.as_deref(), &data, &manifest(cmd, None, a.output.out.as_deref(), summary))?;
    Ok(true)
}

fn run_selftest(a: &SelftestArgs) -> CliResult<bool> {
    let ids: Vec<usize> = if a.only.is_empty() { (1..=conekit::selftest::CRITERIA).collect() } else { a.only.clone() };
    if let Some(id) = ids.iter().find(|id| !(1..=conekit::selftest::CRITERIA).contains(*id)) {
        return Err(CliError::Usage(format!("no criterion {id} (1..={})", conekit::selftest::CRITERIA)));
    }
    let mut outcomes = Vec::new();
    for id in ids {
        let o = conekit::selftest::run(id).expect("id checked above");
        println!("{} [{:>2}] {} ({:.1} s): {}", if o.passed { "PASS" } else { "FAIL" }, o.id, o.title, o.seconds, o.detail);
        outcomes.push(o);
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!("{passed} of {} criteria passed", outcomes.len());
    if let Some(path) = &a.out {
        std::fs::write(path, pretty(&serde_json::to_value(&outcomes).expect("serializes")))
            .map_err(|e| CliError::Failure(format!("{}: {e}", path.display())))?;
    }
    Ok(passed == outcomes.len())
}
