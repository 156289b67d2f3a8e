//! One runner per subcommand.

use serde::Serialize;
use serde_json::{json, Value};
use upsilon::cylinder::{
    energy_monte_carlo, CylinderFunction, OuterSpec, SmoothTestFunction, TestFunctionSpec, BUILTIN_OUTER_FUNCTIONS,
    BUILTIN_TEST_FUNCTIONS,
};
use upsilon::diffusion::{
    gaussian_bound_check, rademacher_check, semigroup_profile, stationarity_test, varadhan_profile,
};
use upsilon::samplers::{
    check_laplace, check_mecke, default_grid, tightness_profile, IntensityMeasure, MonteCarlo, PointProcessModel,
};
use upsilon::stats::{poisson_pmf, MeanAccumulator};
use upsilon::transport::optimal_matching;
use upsilon::{Configuration, Point};

use crate::config::{
    parse, DistanceConfig, EnergyConfig, GaussianBoundConfig, LaplaceConfig, LaplaceFunction, MeckeConfig,
    MeckeFunctional, RademacherConfig, RunConfig, SampleConfig, SemigroupConfig, StationarityConfig,
    TightnessConfig, VaradhanConfig, SCHEMA,
};
use crate::output::{float, num, opt_float, opt_num, sha256_hex, ResultRecord, Table, Verdict};
use crate::specs::{
    BUILTIN_EVENT_SETS, BUILTIN_GEOMETRIES, BUILTIN_LIPSCHITZ, BUILTIN_MODELS, BUILTIN_POTENTIALS,
};
use crate::{CliError, ARTIFACT_VERSION};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subcommand {
    Sample,
    Distance,
    MeckeCheck,
    LaplaceCheck,
    Tightness,
    Energy,
    Semigroup,
    Varadhan,
    GaussianBound,
    Rademacher,
    Stationarity,
    ListBuiltins,
}

impl Subcommand {
    pub const ALL: [Subcommand; 12] = [
        Subcommand::Sample,
        Subcommand::Distance,
        Subcommand::MeckeCheck,
        Subcommand::LaplaceCheck,
        Subcommand::Tightness,
        Subcommand::Energy,
        Subcommand::Semigroup,
        Subcommand::Varadhan,
        Subcommand::GaussianBound,
        Subcommand::Rademacher,
        Subcommand::Stationarity,
        Subcommand::ListBuiltins,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Sample => "sample",
            Subcommand::Distance => "distance",
            Subcommand::MeckeCheck => "mecke-check",
            Subcommand::LaplaceCheck => "laplace-check",
            Subcommand::Tightness => "tightness",
            Subcommand::Energy => "energy",
            Subcommand::Semigroup => "semigroup",
            Subcommand::Varadhan => "varadhan",
            Subcommand::GaussianBound => "gaussian-bound",
            Subcommand::Rademacher => "rademacher",
            Subcommand::Stationarity => "stationarity",
            Subcommand::ListBuiltins => "list-builtins",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Subcommand::ALL.into_iter().find(|s| s.name() == name)
    }
}

/// Everything a run produces.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    /// The primary JSON output of `sample`, `distance` and `list-builtins`.
    pub primary: Option<String>,
    pub csv: String,
    pub record: ResultRecord,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.record.verdict.pass
    }

    pub fn verdict_line(&self) -> String {
        serde_json::to_string(&self.record.verdict).expect("verdict serializes")
    }

    pub fn record_json(&self) -> String {
        serde_json::to_string(&self.record).expect("record serializes")
    }
}

struct Produced {
    primary: Option<String>,
    table: Table,
    pass: bool,
    details: Value,
}

impl Produced {
    fn new(table: Table, pass: bool, details: Value) -> Self {
        Produced { primary: None, table, pass, details }
    }
}

/// Run `subcommand` on the configuration `text` with optional overrides of `seed` and `workers`.
/// `list-builtins` ignores `text`.
pub fn run(
    subcommand: Subcommand,
    text: &str,
    seed: Option<u64>,
    workers: Option<usize>,
) -> Result<Outcome, CliError> {
    match subcommand {
        Subcommand::Sample => execute(subcommand, text, seed, workers, sample),
        Subcommand::Distance => execute(subcommand, text, seed, workers, distance),
        Subcommand::MeckeCheck => execute(subcommand, text, seed, workers, mecke),
        Subcommand::LaplaceCheck => execute(subcommand, text, seed, workers, laplace),
        Subcommand::Tightness => execute(subcommand, text, seed, workers, tightness),
        Subcommand::Energy => execute(subcommand, text, seed, workers, energy),
        Subcommand::Semigroup => execute(subcommand, text, seed, workers, semigroup),
        Subcommand::Varadhan => execute(subcommand, text, seed, workers, varadhan),
        Subcommand::GaussianBound => execute(subcommand, text, seed, workers, gaussian_bound),
        Subcommand::Rademacher => execute(subcommand, text, seed, workers, rademacher),
        Subcommand::Stationarity => execute(subcommand, text, seed, workers, stationarity),
        Subcommand::ListBuiltins => Ok(finish(subcommand, Value::Null, list_builtins())),
    }
}

fn execute<C: RunConfig>(
    subcommand: Subcommand,
    text: &str,
    seed: Option<u64>,
    workers: Option<usize>,
    body: fn(&C) -> Result<Produced, CliError>,
) -> Result<Outcome, CliError> {
    let config: C = parse(text, seed, workers)?;
    let produced = body(&config)?;
    Ok(finish(subcommand, serde_json::to_value(&config)?, produced))
}

fn finish(subcommand: Subcommand, config: Value, produced: Produced) -> Outcome {
    let csv = produced.table.render();
    let canonical = config.to_string();
    let record = ResultRecord {
        artifact_version: ARTIFACT_VERSION,
        subcommand: subcommand.name().to_string(),
        input_digest: sha256_hex(canonical.as_bytes()),
        config,
        csv_digest: sha256_hex(csv.as_bytes()),
        verdict: Verdict { pass: produced.pass, details: produced.details },
    };
    Outcome { primary: produced.primary, csv, record }
}

/// Configuration text for `distance` from two configuration files.
pub fn distance_config_from_files(gamma: &str, eta: &str) -> Result<String, CliError> {
    let gamma: Configuration = serde_json::from_str(gamma)?;
    let eta: Configuration = serde_json::from_str(eta)?;
    let config = DistanceConfig { schema: SCHEMA.to_string(), gamma, eta, seed: 0, workers: 1 };
    Ok(serde_json::to_string(&config)?)
}

fn mc(n: usize, seed: u64, workers: usize) -> MonteCarlo {
    MonteCarlo::new(n, seed, workers)
}

fn json_line<T: Serialize>(x: &T) -> String {
    serde_json::to_string(x).expect("serializable")
}

fn within(a: f64, b: f64, sigmas: f64, stderr: f64) -> bool {
    (a - b).abs() <= sigmas * stderr
}

fn poisson_intensity<'a>(model: &'a PointProcessModel, what: &str) -> Result<&'a IntensityMeasure, CliError> {
    match model {
        PointProcessModel::Poisson { intensity } => Ok(intensity),
        _ => Err(CliError::schema(format!("{what} needs a poisson model"))),
    }
}

fn sample(c: &SampleConfig) -> Result<Produced, CliError> {
    let model = c.model.build()?;
    let samples = model.sample_many(c.n_samples, c.seed, c.workers)?;
    let mut table = Table::new(&["index", "total_mass", "configuration"]);
    let mut lines = String::new();
    let mut mass = MeanAccumulator::new();
    for (i, g) in samples.iter().enumerate() {
        let line = json_line(g);
        table.push(vec![i.to_string(), g.total_mass().to_string(), line.clone()]);
        lines.push_str(&line);
        lines.push('\n');
        mass.push(g.total_mass() as f64);
    }
    let details = json!({ "model": c.model.kind(), "n_samples": c.n_samples, "mean_mass": num(mass.mean()) });
    Ok(Produced { primary: Some(lines), ..Produced::new(table, true, details) })
}

fn distance(c: &DistanceConfig) -> Result<Produced, CliError> {
    if c.gamma.dim() != c.eta.dim() {
        return Err(CliError::schema(format!("dimensions differ: {} vs {}", c.gamma.dim(), c.eta.dim())));
    }
    let mut table = Table::new(&["gamma_index", "eta_index", "squared_displacement"]);
    let (d, pairs) = if c.gamma.total_mass() == c.eta.total_mass() {
        let m = optimal_matching(&c.gamma, &c.eta)?;
        let (xs, ys) = (c.gamma.expanded(), c.eta.expanded());
        for &(i, j) in &m.pairs {
            table.push(vec![i.to_string(), j.to_string(), float(xs[i].squared_distance(ys[j]))]);
        }
        (num(m.distance()), m.pairs)
    } else {
        (Value::from("inf"), Vec::new())
    };
    let primary = json!({ "d": d, "matching": pairs });
    let verdict = json!({ "d": d, "mass": [c.gamma.total_mass(), c.eta.total_mass()] });
    Ok(Produced { primary: Some(format!("{primary}\n")), ..Produced::new(table, true, verdict) })
}

fn nearest_other(g: &Configuration, x: &Point, cap: f64) -> f64 {
    let mut best = cap;
    let mut skipped = false;
    for a in g.atoms() {
        if a.point == *x {
            if a.multiplicity > 1 {
                return 0.0;
            }
            if !skipped {
                skipped = true;
                continue;
            }
        }
        best = best.min(a.point.distance(x));
    }
    best
}

fn mecke(c: &MeckeConfig) -> Result<Produced, CliError> {
    let model = c.model.build()?;
    let m = poisson_intensity(&model, "mecke-check")?;
    let mut table = Table::new(&["functional", "lhs", "rhs", "stderr", "z", "closed_form", "pass"]);
    let mut rows = Vec::new();
    let mut all = true;
    for (i, functional) in c.functionals.iter().enumerate() {
        let run = mc(c.n_samples, c.seed.wrapping_add(i as u64), c.workers);
        let strata = c.strata_per_axis;
        let (name, report, closed) = match functional {
            MeckeFunctional::Indicator { window } => {
                let r = check_mecke(m, |_, x| if window.contains(x) { 1.0 } else { 0.0 }, run, strata);
                ("indicator".to_string(), r, None)
            }
            MeckeFunctional::CountIndicator { window, n } => {
                let count = |g: &Configuration| g.count(window).expect("dimension checked");
                let r = check_mecke(
                    m,
                    |g, x| if window.contains(x) && count(g) == *n { 1.0 } else { 0.0 },
                    run,
                    strata,
                );
                let exact = *n as f64 * poisson_pmf(*n, m.measure_of(window));
                (format!("count_indicator_{n}"), r, Some(exact))
            }
            MeckeFunctional::TestFunction { f } => {
                let f = f.build()?;
                (format!("test_function_{}", f.name()), check_mecke(m, |_, x| f.value(x), run, strata), None)
            }
            MeckeFunctional::MassDamped { f } => {
                let f = f.build()?;
                let r = check_mecke(m, |g, x| f.value(x) / (1.0 + g.total_mass() as f64), run, strata);
                (format!("mass_damped_{}", f.name()), r, None)
            }
            MeckeFunctional::NearestNeighbor { cap } => {
                if !(*cap > 0.0) || !cap.is_finite() {
                    return Err(CliError::schema("nearest_neighbor cap must be positive and finite"));
                }
                ("nearest_neighbor".to_string(), check_mecke(m, |g, x| nearest_other(g, x, *cap), run, strata), None)
            }
        };
        let mut pass = report.within(c.sigmas);
        let closed_ok = closed.map(|exact| {
            let n = match functional {
                MeckeFunctional::CountIndicator { n, .. } => *n as f64,
                _ => unreachable!(),
            };
            let p = exact / n;
            let sd = n * (p * (1.0 - p) / c.n_samples as f64).sqrt();
            within(report.lhs, exact, c.sigmas, sd)
        });
        pass &= closed_ok.unwrap_or(true);
        all &= pass;
        let z = (report.lhs - report.rhs) / report.stderr;
        table.push(vec![
            name.clone(),
            float(report.lhs),
            float(report.rhs),
            float(report.stderr),
            float(z),
            opt_float(closed),
            pass.to_string(),
        ]);
        rows.push(json!({
            "functional": name, "lhs": num(report.lhs), "rhs": num(report.rhs), "stderr": num(report.stderr),
            "closed_form": opt_num(closed), "closed_form_pass": closed_ok, "pass": pass,
        }));
    }
    Ok(Produced::new(table, all, json!({ "sigmas": c.sigmas, "functionals": rows })))
}

fn laplace(c: &LaplaceConfig) -> Result<Produced, CliError> {
    let model = c.model.build()?;
    let m = poisson_intensity(&model, "laplace-check")?;
    let mut table = Table::new(&["function", "empirical", "closed_form", "stderr", "relative_error", "pass"]);
    let mut rows = Vec::new();
    let mut all = true;
    for (i, function) in c.functions.iter().enumerate() {
        let run = mc(c.n_samples, c.seed.wrapping_add(i as u64), c.workers);
        let (name, report) = match function {
            LaplaceFunction::Zero => ("zero".to_string(), check_laplace(m, |_| 0.0, run)),
            LaplaceFunction::ConstantOn { window, c: height } => {
                if !(*height >= 0.0) {
                    return Err(CliError::schema("constant_on needs c >= 0"));
                }
                let r = check_laplace(m, |x| if window.contains_coords(x) { *height } else { 0.0 }, run);
                ("constant_on".to_string(), r)
            }
            LaplaceFunction::TestFunction { f } => {
                let f = f.build()?;
                let negative = m.integrate(|x| if f.value_at(x) < 0.0 { 1.0 } else { 0.0 }, default_grid(m.dim()));
                if negative > 0.0 {
                    return Err(CliError::schema(format!("test function `{}` takes negative values", f.name())));
                }
                (format!("test_function_{}", f.name()), check_laplace(m, |x| f.value_at(x), run))
            }
        };
        let rel = report.relative_error();
        let pass = rel <= c.tolerance;
        all &= pass;
        table.push(vec![
            name.clone(),
            float(report.empirical),
            float(report.closed_form),
            float(report.stderr),
            float(rel),
            pass.to_string(),
        ]);
        rows.push(json!({
            "function": name, "empirical": num(report.empirical), "closed_form": num(report.closed_form),
            "relative_error": num(rel), "pass": pass,
        }));
    }
    Ok(Produced::new(table, all, json!({ "tolerance": c.tolerance, "functions": rows })))
}

fn tightness(c: &TightnessConfig) -> Result<Produced, CliError> {
    let model = c.model.build()?;
    // One extra row gives the empirical strict tail `n · μ̂(γE > n)` at `n_max`.
    let rows = tightness_profile(&model, &c.window, c.n_max + 1, mc(c.n_samples, c.seed, c.workers))?;
    let total = c.n_samples as f64;
    let null_sd = |n: usize, exact: f64| {
        let p = if n == 0 { 0.0 } else { exact / n as f64 };
        n as f64 * (p * (1.0 - p) / total).sqrt()
    };
    let mut table = Table::new(&[
        "n",
        "empirical_geq",
        "stderr",
        "exact_geq",
        "empirical_gt",
        "incomplete_gamma_form",
        "z_geq",
        "z_gt",
        "pass",
    ]);
    let mut all = true;
    let mut checked = false;
    let mut worst = 0.0f64;
    for n in 0..=c.n_max {
        let row = rows[n];
        let next = rows[n + 1];
        let empirical_gt = if n == 0 { 0.0 } else { n as f64 * next.empirical / (n + 1) as f64 };
        let z = |emp: f64, exact: Option<f64>| {
            exact.map(|e| {
                let sd = null_sd(n, e);
                if sd > 0.0 { (emp - e) / sd } else if emp == e { 0.0 } else { f64::INFINITY }
            })
        };
        let z_geq = z(row.empirical, row.exact);
        let z_gt = z(empirical_gt, row.incomplete_gamma_form);
        let pass = [z_geq, z_gt].iter().flatten().all(|z| z.abs() <= c.sigmas);
        checked |= row.exact.is_some();
        worst = [z_geq, z_gt].iter().flatten().fold(worst, |w, z| w.max(z.abs()));
        all &= pass;
        table.push(vec![
            n.to_string(),
            float(row.empirical),
            float(row.stderr),
            opt_float(row.exact),
            float(empirical_gt),
            opt_float(row.incomplete_gamma_form),
            opt_float(z_geq),
            opt_float(z_gt),
            pass.to_string(),
        ]);
    }
    let details = json!({
        "model": c.model.kind(), "sigmas": c.sigmas, "checked_against_closed_form": checked, "max_abs_z": num(worst),
    });
    Ok(Produced::new(table, all, details))
}

fn outer_coefficients(outer: &OuterSpec) -> Option<Vec<f64>> {
    match outer {
        OuterSpec::Identity => Some(vec![1.0]),
        OuterSpec::Linear { coefficients } => Some(coefficients.clone()),
        _ => None,
    }
}

fn built_inner(specs: &[TestFunctionSpec]) -> Result<Vec<SmoothTestFunction>, CliError> {
    Ok(specs.iter().map(|f| f.build()).collect::<Result<Vec<_>, _>>()?)
}

/// `Σ c_i d_j ∫ ∇f_i · ∇g_j dm` for linear `u`, `v` under a Poisson model.
fn energy_oracle(c: &EnergyConfig, model: &PointProcessModel) -> Result<Option<f64>, CliError> {
    let PointProcessModel::Poisson { intensity } = model else { return Ok(None) };
    let v = c.v.as_ref().unwrap_or(&c.u);
    let (Some(cu), Some(cv)) = (outer_coefficients(&c.u.outer), outer_coefficients(&v.outer)) else {
        return Ok(None);
    };
    let (fu, fv) = (built_inner(&c.u.inner)?, built_inner(&v.inner)?);
    let grid = default_grid(intensity.dim());
    let mut total = 0.0;
    for (a, f) in cu.iter().zip(&fu) {
        for (b, g) in cv.iter().zip(&fv) {
            let overlap = intensity.integrate(
                |x| f.gradient_at(x).iter().zip(g.gradient_at(x)).map(|(p, q)| p * q).sum::<f64>(),
                grid,
            );
            total += a * b * overlap;
        }
    }
    Ok(Some(total))
}

fn cylinder_name(u: &CylinderFunction) -> String {
    let inner: Vec<&str> = u.inner().iter().map(|f| f.name()).collect();
    format!("{}({})", u.outer().name(), inner.join(";"))
}

fn energy(c: &EnergyConfig) -> Result<Produced, CliError> {
    let model = c.model.build()?;
    let u = c.u.build()?;
    let v = c.v.as_ref().unwrap_or(&c.u).build()?;
    let est = energy_monte_carlo(&u, &v, &model, mc(c.n_samples, c.seed, c.workers))?;
    let oracle = energy_oracle(c, &model)?;
    let pass = oracle.is_none_or(|o| within(est.estimate, o, c.sigmas, est.stderr));
    let (u_name, v_name) = (cylinder_name(&u), cylinder_name(&v));
    let mut table = Table::new(&["u_name", "v_name", "model", "estimate", "stderr", "oracle", "n_samples", "seed"]);
    table.push(vec![
        u_name.clone(),
        v_name.clone(),
        c.model.kind().to_string(),
        float(est.estimate),
        float(est.stderr),
        opt_float(oracle),
        c.n_samples.to_string(),
        c.seed.to_string(),
    ]);
    let details = json!({
        "u": u_name, "v": v_name, "estimate": num(est.estimate), "stderr": num(est.stderr),
        "oracle": opt_num(oracle), "sigmas": c.sigmas,
    });
    Ok(Produced::new(table, pass, details))
}

fn semigroup(c: &SemigroupConfig) -> Result<Produced, CliError> {
    let spec = c.dynamics.build(&c.times)?;
    let (xi, lambda) = (c.xi.build(), c.lambda.build());
    let forward = semigroup_profile(&xi, &lambda, &c.times, &spec, mc(c.n_paths, c.seed, c.workers))?;
    let swapped = match c.check_symmetry {
        true => Some(semigroup_profile(&lambda, &xi, &c.times, &spec, mc(c.n_paths, c.seed.wrapping_add(1), c.workers))?),
        false => None,
    };
    let mut table = Table::new(&["t", "estimate", "stderr", "hits", "paths", "swapped_estimate", "swapped_stderr"]);
    let mut pass = true;
    for (k, e) in forward.iter().enumerate() {
        let s = swapped.as_ref().map(|s| s[k]);
        if let Some(s) = s {
            pass &= within(e.estimate, s.estimate, 3.0, e.stderr.hypot(s.stderr));
        }
        table.push(vec![
            float(e.t),
            float(e.estimate),
            float(e.stderr),
            e.hits.to_string(),
            e.paths.to_string(),
            opt_float(s.map(|s| s.estimate)),
            opt_float(s.map(|s| s.stderr)),
        ]);
    }
    let details = json!({ "symmetry_checked": c.check_symmetry, "times": c.times.len(), "dt": num(spec.dt) });
    Ok(Produced::new(table, pass, details))
}

fn varadhan(c: &VaradhanConfig) -> Result<Produced, CliError> {
    let spec = c.dynamics.build(&c.t_grid)?;
    let (xi, lambda) = (c.xi.build(), c.lambda.build());
    let report = varadhan_profile(&xi, &lambda, &c.t_grid, &spec, mc(c.n_paths, c.seed, c.workers))?;
    let reference = c.reference.or(report.reference);
    let mut table = Table::new(&["t", "estimate", "hits", "minus_2t_log", "stderr"]);
    for r in &report.rows {
        table.push(vec![float(r.t), float(r.estimate), r.hits.to_string(), float(r.value), float(r.stderr)]);
    }
    let relative = reference.filter(|r| *r > 0.0).map(|r| ((report.intercept - r) / r).abs());
    let pass = match (report.xi_open, reference) {
        (false, _) => true,
        (true, None) => false,
        (true, Some(r)) if r > 0.0 => relative.is_some_and(|e| e <= c.tolerance),
        (true, Some(_)) => report.intercept.abs() <= 3.0 * report.intercept_stderr,
    };
    let details = json!({
        "intercept": num(report.intercept),
        "intercept_stderr": num(report.intercept_stderr),
        "slope": num(report.slope),
        "reference": opt_num(reference),
        "declared_reference": opt_num(c.reference),
        "sampled_reference": opt_num(report.reference),
        "relative_error": opt_num(relative),
        "tolerance": c.tolerance,
        "xi_open": report.xi_open,
        "asserted": report.xi_open,
    });
    Ok(Produced::new(table, pass, details))
}

fn gaussian_bound(c: &GaussianBoundConfig) -> Result<Produced, CliError> {
    let mut times = c.t_grid.clone();
    for p in &c.pairs {
        times.extend(p.t_grid.iter().flatten());
    }
    let spec = c.dynamics.build(&times)?;
    let mut table = Table::new(&[
        "pair",
        "t",
        "estimate",
        "stderr",
        "bound",
        "distance_lower_bound",
        "mass_1",
        "mass_2",
        "violated",
    ]);
    let mut all = true;
    let mut pairs = Vec::new();
    for (i, p) in c.pairs.iter().enumerate() {
        let grid = p.t_grid.as_ref().unwrap_or(&c.t_grid);
        let run = mc(c.n_paths, c.seed.wrapping_add(i as u64), c.workers);
        let r = gaussian_bound_check(&p.lambda_1.build(), &p.lambda_2.build(), grid, &spec, run)?;
        for row in &r.rows {
            table.push(vec![
                p.name.clone(),
                float(row.t),
                float(row.estimate),
                float(row.stderr),
                float(row.bound),
                float(r.distance_lower_bound),
                float(r.mass_1),
                float(r.mass_2),
                row.violated.to_string(),
            ]);
        }
        all &= r.pass;
        pairs.push(json!({ "pair": p.name, "distance_lower_bound": num(r.distance_lower_bound), "pass": r.pass }));
    }
    Ok(Produced::new(table, all, json!({ "pairs": pairs })))
}

fn rademacher(c: &RademacherConfig) -> Result<Produced, CliError> {
    let spec = c.dynamics.build(&c.t_grid)?;
    let r = rademacher_check(&c.u, &spec, c.n_pairs, c.n_configs, &c.t_grid, c.paths_per_config, c.seed, c.workers)?;
    let mut table = Table::new(&["quantity", "index", "value"]);
    for (i, x) in r.pair_ratios.iter().enumerate() {
        table.push(vec!["pair_ratio".into(), i.to_string(), float(*x)]);
    }
    for (i, x) in r.carre_du_champ.iter().enumerate() {
        table.push(vec!["carre_du_champ".into(), i.to_string(), float(*x)]);
    }
    let details = json!({
        "lip": num(r.lip),
        "pairs_checked": r.pairs_checked,
        "max_pair_ratio": num(r.max_pair_ratio),
        "max_carre_du_champ": num(r.max_carre_du_champ),
        "carre_du_champ_limit": num(1.1 * r.lip * r.lip),
    });
    Ok(Produced::new(table, r.pass, details))
}

fn stationarity(c: &StationarityConfig) -> Result<Produced, CliError> {
    let spec = c.dynamics.build(&[c.horizon])?;
    let r = stationarity_test(&spec, c.horizon, &c.windows, c.n_chains, c.seed, c.workers)?;
    let mut table = Table::new(&["window", "statistic", "df", "p_value", "pass"]);
    for t in &r.tests {
        table.push(vec![
            json_line(&t.window),
            float(t.statistic),
            t.df.to_string(),
            float(t.p_value),
            (t.p_value > r.threshold).to_string(),
        ]);
    }
    let min_p = r.tests.iter().map(|t| t.p_value).fold(1.0, f64::min);
    let details = json!({
        "threshold": num(r.threshold), "min_p_value": num(min_p), "reversed_drift": c.dynamics.reversed_drift,
    });
    Ok(Produced::new(table, r.pass, details))
}

fn list_builtins() -> Produced {
    let groups: [(&str, &[(&str, &str)]); 7] = [
        ("test_functions", BUILTIN_TEST_FUNCTIONS),
        ("outer_functions", BUILTIN_OUTER_FUNCTIONS),
        ("models", BUILTIN_MODELS),
        ("potentials", BUILTIN_POTENTIALS),
        ("geometries", BUILTIN_GEOMETRIES),
        ("event_sets", BUILTIN_EVENT_SETS),
        ("lipschitz", BUILTIN_LIPSCHITZ),
    ];
    let mut table = Table::new(&["category", "name", "parameters"]);
    let mut catalog = serde_json::Map::new();
    for (category, entries) in groups {
        let list: Vec<Value> = entries.iter().map(|(n, p)| json!({ "name": n, "parameters": p })).collect();
        for (n, p) in entries {
            table.push(vec![category.to_string(), n.to_string(), p.to_string()]);
        }
        catalog.insert(category.to_string(), Value::Array(list));
    }
    let subcommands: Vec<&str> = Subcommand::ALL.iter().map(|s| s.name()).collect();
    catalog.insert("subcommands".into(), json!(subcommands));
    catalog.insert("schema".into(), json!(SCHEMA));
    let primary = format!("{}\n", Value::Object(catalog));
    let entries: usize = groups.iter().map(|g| g.1.len()).sum();
    Produced { primary: Some(primary), ..Produced::new(table, true, json!({ "entries": entries })) }
}
