//! The six subcommands. Each builds one [`Table`]; a solver failure marks
//! its rows and is reported through [`Outcome::failure`].

use num_complex::Complex64 as C64;
use std::f64::consts::FRAC_PI_2;

use scjc::dopa::{dopa_propagator, shoot, BoundaryData, ComplexTrajectory, DopaSolution, MAX_HORIZON};
use scjc::exact::full_propagator_element;
use scjc::export::{trajectory_table, Cell, Kind, Table};
use scjc::fluct::{corrected_survival, integrate_su11, xi_closed_form};
use scjc::model::{conserved_pair, hamiltonian_charted, ChartedPoint, Method, ModelParams, PhasePoint, SpinCoord};
use scjc::par::map_bounded;
use scjc::poles::{north_bvp_solution, south_bvp_solution};
use scjc::JcError;

use crate::config::{ConfigError, Observable, Settings, StateLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Exact,
    Dopa,
    Linearized,
    Fluct,
    Compare,
    Scan,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Exact => "exact",
            Command::Dopa => "dopa",
            Command::Linearized => "linearized",
            Command::Fluct => "fluct",
            Command::Compare => "compare",
            Command::Scan => "scan",
        }
    }
}

pub struct Outcome {
    pub table: Table,
    /// Largest residual among failed rows, if any row failed.
    pub failure: Option<f64>,
}

const OK: &str = "ok";

pub fn run(cmd: Command, s: &Settings, workers: Option<usize>) -> Result<Outcome, ConfigError> {
    s.validate()?;
    if cmd != Command::Scan {
        s.lambda.single("lambda")?;
        s.delta.single("delta")?;
    }
    match cmd {
        Command::Exact => series(s, Method::Exact),
        Command::Dopa if s.trajectory => dopa_trajectory(s),
        Command::Dopa => series(s, Method::Dopa),
        Command::Linearized => linearized(s),
        Command::Fluct => fluct(s),
        Command::Compare => compare(s),
        Command::Scan => scan(s, workers),
    }
}

fn params(lambda: f64, delta: f64) -> Result<ModelParams, ConfigError> {
    ModelParams::new(lambda, delta).map_err(|e| ConfigError(e.to_string()))
}

fn single_params(s: &Settings) -> Result<ModelParams, ConfigError> {
    params(s.lambda.single("lambda")?, s.delta.single("delta")?)
}

/// Best residual a failed computation reached, when it reports one.
fn best_residual(e: &JcError) -> f64 {
    match e {
        JcError::ShootingNotConverged { best_residual, .. } => *best_residual,
        JcError::RepresentationMismatch { discrepancy } => *discrepancy,
        JcError::InverseNotConverged { residual } => *residual,
        _ => f64::NAN,
    }
}

/// One amplitude of a time series.
#[derive(Debug, Clone)]
struct Sample {
    value: C64,
    residual: f64,
    tolerance: f64,
    status: String,
}

impl Sample {
    fn ok(value: C64, residual: f64, tolerance: f64) -> Self {
        Self { value, residual, tolerance, status: OK.into() }
    }

    fn failed(e: &JcError, tolerance: f64) -> Self {
        Self { value: C64::new(f64::NAN, f64::NAN), residual: best_residual(e), tolerance, status: e.to_string() }
    }

    fn is_ok(&self) -> bool {
        self.status == OK
    }
}

fn failure_of<'a>(samples: impl IntoIterator<Item = &'a Sample>) -> Option<f64> {
    samples
        .into_iter()
        .filter(|x| !x.is_ok())
        .map(|x| x.residual)
        .reduce(|a, b| if b > a || a.is_nan() { b } else { a })
}

fn check_applicable(method: Method, s: &Settings) -> Result<(), ConfigError> {
    match method {
        Method::FluctuationCorrected if s.state != StateLabel::UpVacuum => {
            Err(ConfigError("the fluctuation-corrected amplitude is available for up-vacuum only".into()))
        }
        Method::Linearized => {
            Err(ConfigError("the linearized method yields paths, not amplitudes; use `linearized`".into()))
        }
        Method::Dopa => {
            if let StateLabel::Coherent { theta, .. } = s.state {
                if theta > FRAC_PI_2 {
                    return Err(ConfigError("dominant-path amplitudes need a spin state with theta <= pi/2".into()));
                }
                if s.t_end > MAX_HORIZON {
                    return Err(ConfigError(format!("t_end exceeds the dominant-path maximum {MAX_HORIZON}")));
                }
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

fn exact_samples(s: &Settings, p: &ModelParams, times: &[f64]) -> Vec<Sample> {
    let st = s.state.jc_state();
    let n_max = s.fock_cutoff();
    times
        .iter()
        .map(|&t| match full_propagator_element(&st, &st, t, p, n_max) {
            Ok(e) if e.residual <= s.tol.truncation => Sample::ok(e.value, e.residual, s.tol.truncation),
            Ok(e) => Sample {
                value: e.value,
                residual: e.residual,
                tolerance: s.tol.truncation,
                status: format!("truncation weight {:e} above tolerance", e.residual),
            },
            Err(e) => Sample::failed(&e, s.tol.truncation),
        })
        .collect()
}

fn corrected_samples(s: &Settings, p: &ModelParams, times: &[f64]) -> Vec<Sample> {
    let exact = exact_samples(s, p, times);
    times
        .iter()
        .zip(&exact)
        .map(|(&t, ex)| {
            let v = corrected_survival(t, p).value;
            Sample::ok(v, (v - ex.value).norm(), s.tol.agreement)
        })
        .collect()
}

/// Extra dominant-path diagnostics alongside the amplitude.
#[derive(Debug, Clone, Default)]
struct DopaExtras {
    action_form: C64,
    shooting_residual: f64,
    drift: f64,
}

impl DopaExtras {
    fn failed() -> Self {
        Self { action_form: C64::new(f64::NAN, f64::NAN), shooting_residual: f64::NAN, drift: f64::NAN }
    }
}

fn pole_point(state: StateLabel) -> Option<ChartedPoint> {
    match state {
        StateLabel::UpVacuum => Some(PhasePoint::north_pole().charted()),
        StateLabel::DownVacuum => Some(ChartedPoint::south_pole()),
        StateLabel::Coherent { .. } => None,
    }
}

fn boundary(s: &Settings, t: f64) -> Result<BoundaryData, JcError> {
    let (spin, field) = (s.state.spin(), s.state.field());
    BoundaryData::from_states((&spin, &field), (&spin, &field), t)
}

/// Dominant-path amplitudes along the time grid, each solve seeded with
/// the previous one.
fn dopa_samples(s: &Settings, p: &ModelParams, times: &[f64]) -> Vec<(Sample, DopaExtras)> {
    let opts = s.tol.dopa_options();
    let tol = opts.agreement_tol;
    if let Some(pole) = pole_point(s.state) {
        // a fixed point: the amplitude is a pure energy phase
        return times
            .iter()
            .map(|&t| match hamiltonian_charted(&pole, p) {
                Ok(h) => {
                    let v = (C64::new(0.0, -t) * h).exp();
                    (Sample::ok(v, 0.0, tol), DopaExtras { action_form: v, ..DopaExtras::default() })
                }
                Err(e) => (Sample::failed(&e, tol), DopaExtras::failed()),
            })
            .collect();
    }
    let mut guess = None;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        if t == 0.0 {
            let v = C64::new(1.0, 0.0);
            out.push((Sample::ok(v, 0.0, tol), DopaExtras { action_form: v, ..DopaExtras::default() }));
            continue;
        }
        let solved = boundary(s, t).and_then(|bd| {
            let sol = shoot(&bd, p, guess, &opts.shoot)?;
            guess = Some((sol.beta_initial, sol.eta_initial));
            let k = dopa_propagator(&sol, &bd, p, &opts)?;
            Ok((sol, k))
        });
        out.push(match solved {
            Ok((sol, k)) => (
                Sample::ok(k.element.value, k.discrepancy, tol),
                DopaExtras {
                    action_form: k.action_form,
                    shooting_residual: sol.residual,
                    drift: sol.trajectory.max_drift(),
                },
            ),
            Err(e) => {
                guess = None;
                (Sample::failed(&e, tol), DopaExtras::failed())
            }
        });
    }
    out
}

fn samples_for(method: Method, s: &Settings, p: &ModelParams, times: &[f64]) -> Vec<Sample> {
    match method {
        Method::Exact => exact_samples(s, p, times),
        Method::FluctuationCorrected => corrected_samples(s, p, times),
        Method::Dopa => dopa_samples(s, p, times).into_iter().map(|(x, _)| x).collect(),
        Method::Linearized => unreachable!("rejected by check_applicable"),
    }
}

fn only_method(s: &Settings, default: Method) -> Result<Method, ConfigError> {
    match s.method.as_slice() {
        [] => Ok(default),
        [m] => Ok(*m),
        _ => Err(ConfigError("this command takes a single --method".into())),
    }
}

fn series(s: &Settings, method: Method) -> Result<Outcome, ConfigError> {
    if only_method(s, method)? != method {
        return Err(ConfigError(format!("--method conflicts with the `{}` command", method.tag())));
    }
    check_applicable(method, s)?;
    let p = single_params(s)?;
    let times = s.times();
    let mut columns = vec![("t", Kind::Real), ("amplitude", Kind::Complex), ("probability", Kind::Real)];
    if method == Method::Dopa {
        columns.extend([("action_form", Kind::Complex), ("shooting_residual", Kind::Real), ("drift", Kind::Real)]);
    }
    columns.extend([
        ("method", Kind::Text),
        ("residual", Kind::Real),
        ("tolerance", Kind::Real),
        ("status", Kind::Text),
    ]);
    let mut table = Table::new(&columns);

    let (samples, extras): (Vec<Sample>, Vec<Option<DopaExtras>>) = if method == Method::Dopa {
        dopa_samples(s, &p, &times).into_iter().map(|(a, b)| (a, Some(b))).unzip()
    } else {
        samples_for(method, s, &p, &times).into_iter().map(|a| (a, None)).unzip()
    };
    for ((t, x), extra) in times.iter().zip(&samples).zip(extras) {
        let mut row: Vec<Cell> = vec![(*t).into(), x.value.into(), x.value.norm_sqr().into()];
        if let Some(d) = extra {
            row.extend([d.action_form.into(), d.shooting_residual.into(), d.drift.into()]);
        }
        row.extend([method.into(), x.residual.into(), x.tolerance.into(), Cell::Text(x.status.clone())]);
        table.push(row).expect("row matches columns");
    }
    Ok(Outcome { table, failure: failure_of(&samples) })
}

/// Sampled dominant path at `t_end` with conserved-quantity drift.
fn dopa_trajectory(s: &Settings) -> Result<Outcome, ConfigError> {
    only_method(s, Method::Dopa)?;
    if s.t_end > MAX_HORIZON {
        return Err(ConfigError(format!("t_end exceeds the dominant-path maximum {MAX_HORIZON}")));
    }
    let p = single_params(s)?;
    let opts = s.tol.dopa_options();
    let bd = boundary(s, s.t_end).map_err(|e| ConfigError(e.to_string()))?;
    let sampled = shoot(&bd, &p, None, &opts.shoot).and_then(|sol| sample_path(&sol, &p, &s.times(), s));
    match sampled {
        Ok((traj, residual)) => {
            let table = trajectory_table(&traj, Method::Dopa, residual, opts.shoot.tol).expect("trajectory columns");
            Ok(Outcome { table, failure: None })
        }
        Err(e) => {
            let empty = ComplexTrajectory {
                times: Vec::new(),
                points: Vec::new(),
                constants: conserved_pair(&PhasePoint::north_pole().charted(), &p).expect("north pole is regular"),
                n_drift: Vec::new(),
                c_drift: Vec::new(),
            };
            let mut table = trajectory_table(&empty, Method::Dopa, 0.0, 0.0).expect("trajectory columns");
            let nan = C64::new(f64::NAN, f64::NAN);
            let r = best_residual(&e);
            table
                .push(vec![
                    s.t_end.into(),
                    nan.into(),
                    nan.into(),
                    nan.into(),
                    nan.into(),
                    f64::NAN.into(),
                    f64::NAN.into(),
                    Method::Dopa.into(),
                    r.into(),
                    opts.shoot.tol.into(),
                ])
                .expect("trajectory columns");
            eprintln!("dominant path failed: {e}");
            Ok(Outcome { table, failure: Some(r) })
        }
    }
}

fn sample_path(
    sol: &DopaSolution,
    p: &ModelParams,
    times: &[f64],
    s: &Settings,
) -> Result<(ComplexTrajectory, f64), JcError> {
    let ode = s.tol.dopa_options().shoot.ode;
    let c0 = sol.constants;
    let mut traj = ComplexTrajectory {
        times: times.to_vec(),
        points: Vec::with_capacity(times.len()),
        constants: c0,
        n_drift: Vec::with_capacity(times.len()),
        c_drift: Vec::with_capacity(times.len()),
    };
    for &t in times {
        let pt = sol.trajectory.state_at(t, p, &ode)?;
        let c = conserved_pair(&pt, p)?;
        traj.n_drift.push((c.n_value - c0.n_value).norm());
        traj.c_drift.push((c.c_value - c0.c_value).norm());
        traj.points.push(pt);
    }
    Ok((traj, sol.residual))
}

/// Linear boundary-value path about the pole of the state's hemisphere,
/// with its deviation from the full path.
fn linearized(s: &Settings) -> Result<Outcome, ConfigError> {
    if only_method(s, Method::Linearized)? != Method::Linearized {
        return Err(ConfigError("--method conflicts with the `linearized` command".into()));
    }
    if s.t_end > MAX_HORIZON {
        return Err(ConfigError(format!("t_end exceeds the maximum horizon {MAX_HORIZON}")));
    }
    let p = single_params(s)?;
    let opts = s.tol.dopa_options();
    let bd = boundary(s, s.t_end).map_err(|e| ConfigError(e.to_string()))?;
    let north = bd.is_direct();
    if !north && (bd.zeta_initial.is_reciprocal() != bd.eta_final.is_reciprocal()) {
        return Err(ConfigError("boundary data straddles the two charts".into()));
    }
    let mut table = Table::new(&[
        ("t", Kind::Real),
        ("alpha", Kind::Complex),
        ("beta", Kind::Complex),
        ("zeta", Kind::Complex),
        ("eta", Kind::Complex),
        ("chart", Kind::Text),
        ("method", Kind::Text),
        ("residual", Kind::Real),
        ("tolerance", Kind::Real),
        ("status", Kind::Text),
    ]);
    let full = shoot(&bd, &p, None, &opts.shoot);
    let tol = opts.shoot.tol;
    let in_chart = |c: SpinCoord| match (north, c) {
        (true, c) => c.direct(),
        (false, SpinCoord::Reciprocal(r)) => r,
        (false, SpinCoord::Direct(z)) => z.inv(),
    };
    let mut failure = None;
    for t in s.times() {
        let lin =
            if north { north_bvp_solution(&bd, &p, t).map(|x| x.charted()) } else { south_bvp_solution(&bd, &p, t) }
                .map_err(|e| ConfigError(e.to_string()))?;
        let lin = [lin.alpha, lin.beta, in_chart(lin.zeta), in_chart(lin.eta)];
        let (residual, status) = match full.as_ref().map(|sol| sol.trajectory.state_at(t, &p, &opts.shoot.ode)) {
            Ok(Ok(f)) => {
                let f = [f.alpha, f.beta, in_chart(f.zeta), in_chart(f.eta)];
                let dev = f.iter().zip(&lin).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                (dev, OK.to_string())
            }
            Ok(Err(e)) => {
                failure = Some(best_residual(&e));
                (best_residual(&e), e.to_string())
            }
            Err(e) => {
                failure = Some(best_residual(e));
                (best_residual(e), e.to_string())
            }
        };
        table
            .push(vec![
                t.into(),
                lin[0].into(),
                lin[1].into(),
                lin[2].into(),
                lin[3].into(),
                Cell::Text(if north { "direct" } else { "reciprocal" }.into()),
                Method::Linearized.into(),
                residual.into(),
                tol.into(),
                Cell::Text(status),
            ])
            .expect("row matches columns");
    }
    Ok(Outcome { table, failure })
}

/// Fluctuation-corrected survival of |↑0⟩ with both determinant phases.
fn fluct(s: &Settings) -> Result<Outcome, ConfigError> {
    if only_method(s, Method::FluctuationCorrected)? != Method::FluctuationCorrected {
        return Err(ConfigError("--method conflicts with the `fluct` command".into()));
    }
    check_applicable(Method::FluctuationCorrected, s)?;
    let p = single_params(s)?;
    let times = s.times();
    let samples = corrected_samples(s, &p, &times);
    let ode = s.tol.dopa_options().shoot.ode;
    let nan = C64::new(f64::NAN, f64::NAN);
    let mut table = Table::new(&[
        ("t", Kind::Real),
        ("amplitude", Kind::Complex),
        ("probability", Kind::Real),
        ("xi", Kind::Complex),
        ("xi_rate_equations", Kind::Complex),
        ("method", Kind::Text),
        ("residual", Kind::Real),
        ("tolerance", Kind::Real),
        ("status", Kind::Text),
    ]);
    for (&t, x) in times.iter().zip(&samples) {
        let xi = xi_closed_form(t, &p).unwrap_or(nan);
        let rate = integrate_su11(t, &p, &ode).map(|st| st.xi).unwrap_or(nan);
        table
            .push(vec![
                t.into(),
                x.value.into(),
                x.value.norm_sqr().into(),
                xi.into(),
                rate.into(),
                Method::FluctuationCorrected.into(),
                x.residual.into(),
                x.tolerance.into(),
                Cell::Text(x.status.clone()),
            ])
            .expect("row matches columns");
    }
    Ok(Outcome { table, failure: failure_of(&samples) })
}

fn column_name(m: Method) -> String {
    m.tag().replace('-', "_")
}

/// Amplitudes of several methods side by side with their deviation from
/// the exact one.
fn compare(s: &Settings) -> Result<Outcome, ConfigError> {
    let mut methods = vec![Method::Exact];
    let requested = if s.method.is_empty() {
        let mut d = vec![Method::Dopa];
        if s.state == StateLabel::UpVacuum {
            d.push(Method::FluctuationCorrected);
        }
        d
    } else {
        s.method.clone()
    };
    for m in requested {
        check_applicable(m, s)?;
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    let p = single_params(s)?;
    let times = s.times();
    let all: Vec<Vec<Sample>> = methods.iter().map(|&m| samples_for(m, s, &p, &times)).collect();

    let names: Vec<String> = methods.iter().map(|&m| column_name(m)).collect();
    let mut cols: Vec<(String, Kind)> = vec![("t".into(), Kind::Real)];
    for (i, n) in names.iter().enumerate() {
        cols.push((n.clone(), Kind::Complex));
        if i > 0 {
            cols.push((format!("dev_{n}"), Kind::Real));
        }
        cols.push((format!("residual_{n}"), Kind::Real));
        cols.push((format!("tolerance_{n}"), Kind::Real));
    }
    cols.push(("methods".into(), Kind::Text));
    cols.push(("status".into(), Kind::Text));
    let refs: Vec<(&str, Kind)> = cols.iter().map(|(n, k)| (n.as_str(), *k)).collect();
    let mut table = Table::new(&refs);
    let tags = methods.iter().map(|m| m.tag()).collect::<Vec<_>>().join("+");

    for (k, &t) in times.iter().enumerate() {
        let exact = all[0][k].value;
        let mut row: Vec<Cell> = vec![t.into()];
        let mut status = Vec::new();
        for (i, series) in all.iter().enumerate() {
            let x = &series[k];
            row.push(x.value.into());
            if i > 0 {
                row.push((x.value - exact).norm().into());
            }
            row.extend([x.residual.into(), x.tolerance.into()]);
            if !x.is_ok() {
                status.push(format!("{}: {}", methods[i].tag(), x.status));
            }
        }
        row.push(Cell::Text(tags.clone()));
        row.push(Cell::Text(if status.is_empty() { OK.into() } else { status.join("; ") }));
        table.push(row).expect("row matches columns");
    }
    Ok(Outcome { table, failure: failure_of(all.iter().flatten()) })
}

/// Minimises |f(t)|² on [a, b] by golden-section search.
fn refine_minimum(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (1.0 + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

struct ScanRow {
    lambda: f64,
    delta: f64,
    value: f64,
    t_at: f64,
    residual: f64,
    tolerance: f64,
    status: String,
}

fn scan_point(s: &Settings, method: Method, lambda: f64, delta: f64) -> Result<ScanRow, ConfigError> {
    let p = params(lambda, delta)?;
    let times = s.times();
    let samples = samples_for(method, s, &p, &times);
    let residual = samples.iter().map(|x| x.residual).fold(0.0, f64::max);
    let tolerance = samples.first().map_or(0.0, |x| x.tolerance);
    let status = samples.iter().find(|x| !x.is_ok()).map_or(OK.to_string(), |x| x.status.clone());
    let (value, t_at) = match s.observable {
        Observable::SurvivalMin => {
            let (k, x) = samples
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.value.norm_sqr().total_cmp(&b.1.value.norm_sqr()))
                .expect("at least two samples");
            let grid = (x.value.norm_sqr(), times[k]);
            // closed forms are cheap enough to polish the grid minimum
            if matches!(method, Method::Exact | Method::FluctuationCorrected) && x.is_ok() {
                let lo = times[k.saturating_sub(1)];
                let hi = times[(k + 1).min(times.len() - 1)];
                let prob = |t: f64| samples_for(method, s, &p, &[t])[0].value.norm_sqr();
                let (t, v) = refine_minimum(prob, lo, hi);
                if v < grid.0 {
                    (v, t)
                } else {
                    grid
                }
            } else {
                grid
            }
        }
        Observable::MaxDeviation => {
            let exact = if method == Method::Exact { samples.clone() } else { exact_samples(s, &p, &times) };
            samples
                .iter()
                .zip(&exact)
                .zip(&times)
                .map(|((x, e), &t)| ((x.value - e.value).norm(), t))
                .fold((0.0, 0.0), |acc, v| if v.0 > acc.0 || v.0.is_nan() { v } else { acc })
        }
    };
    Ok(ScanRow { lambda, delta, value, t_at, residual, tolerance, status })
}

/// Observable over the (λ, Δ) grid. Points run concurrently; rows come
/// back in grid order.
fn scan(s: &Settings, workers: Option<usize>) -> Result<Outcome, ConfigError> {
    let method = only_method(s, Method::Exact)?;
    check_applicable(method, s)?;
    let points: Vec<(f64, f64)> =
        s.lambda.points().into_iter().flat_map(|l| s.delta.points().into_iter().map(move |d| (l, d))).collect();
    let rows = map_bounded(&points, workers, |&(l, d)| scan_point(s, method, l, d));
    let mut table = Table::new(&[
        ("lambda", Kind::Real),
        ("delta", Kind::Real),
        ("observable", Kind::Text),
        ("value", Kind::Real),
        ("t_at", Kind::Real),
        ("method", Kind::Text),
        ("residual", Kind::Real),
        ("tolerance", Kind::Real),
        ("status", Kind::Text),
    ]);
    let observable = match s.observable {
        Observable::SurvivalMin => "survival-min",
        Observable::MaxDeviation => "max-deviation",
    };
    let mut failure: Option<f64> = None;
    for r in rows {
        let r = r?;
        if r.status != OK {
            failure = Some(failure.map_or(r.residual, |f| f.max(r.residual)));
        }
        table
            .push(vec![
                r.lambda.into(),
                r.delta.into(),
                Cell::Text(observable.into()),
                r.value.into(),
                r.t_at.into(),
                method.into(),
                r.residual.into(),
                r.tolerance.into(),
                Cell::Text(r.status),
            ])
            .expect("row matches columns");
    }
    Ok(Outcome { table, failure })
}
