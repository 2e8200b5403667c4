use serde::Serialize;
use serde_json::{json, Map, Value};

use ptkit_core::analytic::{
    solve_case_a, solve_case_b, solve_case_c, AnalyticSolution, CaseCParams, TanhSign,
};
use ptkit_core::circuit::threshold_sweep;
use ptkit_core::expr::EvalError;
use ptkit_core::floquet::{phase_boundaries, phase_intervals, phase_sweep, PhasePoint};
use ptkit_core::mat2::vec_norm;
use ptkit_core::model::GaugeTracker;
use ptkit_core::propagate::{
    propagate_state_partial, uniform_grid, Frame, IntegratorConfig, Trajectory,
};
use ptkit_core::{Error, C64};

use crate::config::{
    param_map, AnalyticConfig, CaseConfig, EffectiveConfig, EpConfig, FloquetConfig, SignConfig,
    SimulateConfig, SweepConfig, SystemConfig,
};
use crate::output::{Field, Table};

/// Samples used to check that modulations stay nonzero before a run.
const INTERVAL_CHECK_SAMPLES: usize = 1001;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl From<Error> for ConfigError {
    fn from(e: Error) -> Self {
        ConfigError(e.to_string())
    }
}

/// A finished or partially finished run.
pub struct Run {
    pub table: Table,
    pub meta: Map<String, Value>,
    pub failure: Option<String>,
}

impl Run {
    fn new<C: Serialize>(command: &str, config: &C, table: Table) -> Self {
        let mut meta = Map::new();
        meta.insert("command".into(), json!(command));
        meta.insert(
            "config".into(),
            serde_json::to_value(config).unwrap_or(Value::Null),
        );
        Run {
            table,
            meta,
            failure: None,
        }
    }

    fn fail(&mut self, err: impl ToString) {
        self.failure.get_or_insert_with(|| err.to_string());
    }
}

/// Whether an error from the numerical layers stems from the input itself.
fn is_config_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Parse(_)
            | Error::Param(_)
            | Error::InvalidModel(_)
            | Error::InvalidIntegration(_)
            | Error::Eval(EvalError::UnboundParameter(_))
    )
}

fn check_integrator(cfg: &IntegratorConfig) -> Result<(), ConfigError> {
    Ok(cfg.validate()?)
}

fn complex(z: C64) -> [Field; 2] {
    [Field::Num(z.re), Field::Num(z.im)]
}

fn state_fields(t: f64, psi: &[C64; 2]) -> Vec<Field> {
    let mut row = vec![Field::Num(t)];
    row.extend(complex(psi[0]));
    row.extend(complex(psi[1]));
    row.push(Field::Num(vec_norm(psi)));
    row
}

fn record_trajectory(run: &mut Run, traj: &Trajectory) {
    run.meta.insert("truncated".into(), json!(traj.truncated));
    run.meta.insert(
        "solver".into(),
        json!({
            "accepted": traj.stats.accepted,
            "rejected": traj.stats.rejected,
            "rhs_evals": traj.stats.rhs_evals,
        }),
    );
}

pub fn simulate(cfg: &SimulateConfig) -> Result<Run, ConfigError> {
    cfg.time.validate().map_err(ConfigError)?;
    check_integrator(&cfg.integrator)?;
    let spec = cfg.system.model()?;
    spec.check_interval(cfg.time.t0, cfg.time.t1, INTERVAL_CHECK_SAMPLES)?;
    let circuit = match &cfg.system {
        SystemConfig::Circuit(c) if cfg.frame == Frame::Original => {
            if cfg.initial.iter().any(|z| z.im != 0.0) {
                return Err(ConfigError(
                    "circuit initial state (V0, I0) must be real".into(),
                ));
            }
            Some(c.build()?)
        }
        _ => None,
    };
    let mut columns = vec!["t", "re_psi1", "im_psi1", "re_psi2", "im_psi2", "norm"];
    if circuit.is_some() {
        columns.extend(["U_L", "U_C", "U_total"]);
    }
    let mut run = Run::new("simulate", cfg, Table::new(&columns));

    let frame = cfg.frame;
    let (traj, err) = propagate_state_partial(
        |t| match frame {
            Frame::Original => spec.hamiltonian(t),
            Frame::Effective => spec.effective_closed(t),
        },
        cfg.initial,
        cfg.time.t0,
        cfg.time.t1,
        &cfg.integrator,
        &cfg.time.grid(),
    );
    if let Some(e) = err {
        run.fail(e);
    }
    record_trajectory(&mut run, &traj);
    let mut max_imag: f64 = 0.0;
    for s in &traj.samples {
        let mut row = state_fields(s.t, &s.state);
        if let Some(c) = &circuit {
            match c.elements(s.t) {
                Ok((l, cap, _)) => {
                    let (v, i) = (s.state[0], s.state[1]);
                    let scale = vec_norm(&s.state).max(f64::MIN_POSITIVE);
                    max_imag = max_imag.max(v.im.abs().max(i.im.abs()) / scale);
                    let u_l = 0.5 * l * i.re * i.re;
                    let u_c = 0.5 * cap * v.re * v.re;
                    row.extend([Field::Num(u_l), Field::Num(u_c), Field::Num(u_l + u_c)]);
                }
                Err(e) => {
                    run.fail(e);
                    break;
                }
            }
        }
        run.table.push(row);
    }
    if circuit.is_some() {
        run.meta.insert("max_relative_imag".into(), json!(max_imag));
    }
    Ok(run)
}

pub fn effective(cfg: &EffectiveConfig) -> Result<Run, ConfigError> {
    cfg.time.validate().map_err(ConfigError)?;
    let spec = cfg.system.model()?;
    spec.check_interval(cfg.time.t0, cfg.time.t1, INTERVAL_CHECK_SAMPLES)?;
    let columns = [
        "t",
        "re_gamma",
        "im_gamma",
        "re_h11",
        "im_h11",
        "re_h12",
        "im_h12",
        "re_h21",
        "im_h21",
        "re_h22",
        "im_h22",
        "trace_abs",
        "offdiag_dev",
    ];
    let mut run = Run::new("effective", cfg, Table::new(&columns));
    let (nu, nu_prime) = (spec.nu_eff(), spec.nu_prime_eff());
    let mut tracker = GaugeTracker::new(&spec)?;
    for t in cfg.time.grid() {
        let sample = spec
            .gamma_eff(t)
            .and_then(|g| Ok((g, tracker.effective_numeric(t)?)));
        let (g, h) = match sample {
            Ok(x) => x,
            Err(e) => {
                run.fail(e);
                break;
            }
        };
        let mut row = vec![Field::Num(t)];
        row.extend(complex(g));
        for z in h.entries() {
            row.extend(complex(z));
        }
        row.push(Field::Num(h.trace().norm()));
        row.push(Field::Num(
            (h.m12 - nu).norm().max((h.m21 - nu_prime).norm()),
        ));
        run.table.push(row);
    }
    Ok(run)
}

fn solve(cfg: &AnalyticConfig) -> ptkit_core::Result<AnalyticSolution> {
    let [a, b] = cfg.initial;
    match cfg.case {
        CaseConfig::A { gamma } => solve_case_a(gamma, a, b, cfg.nu, cfg.nu_prime),
        CaseConfig::B { sign } => {
            let sign = match sign {
                SignConfig::Minus => TanhSign::Minus,
                SignConfig::Plus => TanhSign::Plus,
            };
            solve_case_b(sign, a, b, cfg.nu, cfg.nu_prime)
        }
        CaseConfig::C { alpha, beta, gamma } => solve_case_c(
            CaseCParams::new(alpha, beta, gamma)?,
            a,
            b,
            cfg.nu,
            cfg.nu_prime,
        ),
    }
}

pub fn analytic(cfg: &AnalyticConfig) -> Result<Run, ConfigError> {
    if !(cfg.tau.t1 > 0.0 && cfg.tau.t1.is_finite() && cfg.tau.dt_out > 0.0) {
        return Err(ConfigError(format!("invalid τ window {:?}", cfg.tau)));
    }
    check_integrator(&cfg.integrator)?;
    let columns = [
        "tau",
        "re_zeta_minus",
        "im_zeta_minus",
        "re_zeta_plus",
        "im_zeta_plus",
        "re_num_minus",
        "im_num_minus",
        "re_num_plus",
        "im_num_plus",
        "abs_err",
        "residual",
    ];
    let mut run = Run::new("analytic", cfg, Table::new(&columns));
    let sol = match solve(cfg) {
        Ok(sol) => sol,
        Err(e) if is_config_error(&e) => return Err(e.into()),
        Err(e) => {
            run.fail(e);
            return Ok(run);
        }
    };
    let grid = uniform_grid(0.0, cfg.tau.t1, cfg.tau.dt_out);
    let (traj, err) = propagate_state_partial(
        |tau| Ok(sol.hamiltonian(C64::new(tau, 0.0))),
        sol.initial,
        0.0,
        cfg.tau.t1,
        &cfg.integrator,
        &grid,
    );
    if let Some(e) = err {
        run.fail(e);
    }
    record_trajectory(&mut run, &traj);
    let (mut max_abs_err, mut residual_max): (f64, f64) = (0.0, 0.0);
    for s in &traj.samples {
        let (z, res) = match sol.zeta(s.t).and_then(|z| Ok((z, sol.residual(s.t)?))) {
            Ok(x) => x,
            Err(e) => {
                run.fail(e);
                break;
            }
        };
        let err = vec_norm(&[z[0] - s.state[0], z[1] - s.state[1]]);
        max_abs_err = max_abs_err.max(err);
        residual_max = residual_max.max(res);
        let mut row = vec![Field::Num(s.t)];
        for w in z.iter().chain(&s.state) {
            row.extend(complex(*w));
        }
        row.extend([Field::Num(err), Field::Num(res)]);
        run.table.push(row);
    }
    let diagnostics = sol.diagnostics();
    run.meta.insert(
        "summary".into(),
        json!({
            "max_abs_err": max_abs_err,
            "residual_max": residual_max,
            "constants": sol.constants,
            "reference_constant_diagnostics": diagnostics,
        }),
    );
    Ok(run)
}

fn sweep_points(cfg: &FloquetConfig) -> Result<Vec<PhasePoint>, ConfigError> {
    let ic = &cfg.integrator;
    Ok(match &cfg.sweep {
        SweepConfig::Drive(d) => {
            if !(d.step > 0.0 && d.omega_min > 0.0 && d.omega_max >= d.omega_min) {
                return Err(ConfigError(format!("invalid drive sweep {d:?}")));
            }
            d.circuit(d.omega_min)?.to_model()?;
            d.run(ic)
        }
        SweepConfig::Threshold(s) => {
            s.gammas.validate().map_err(ConfigError)?;
            threshold_sweep(s.l0, s.c0, s.mode, &s.gammas.values(), ic)
        }
        SweepConfig::Model(s) => {
            s.values.validate().map_err(ConfigError)?;
            if !(s.period > 0.0 && s.period.is_finite()) {
                return Err(ConfigError(format!(
                    "period must be positive, got {}",
                    s.period
                )));
            }
            let base = param_map(&s.model.params)?;
            let build = |value: f64| {
                let mut params = base.clone();
                params.set(&s.param, C64::new(value, 0.0))?;
                s.model.build_with(&params)
            };
            build(s.values.start)?;
            let frame = s.frame;
            phase_sweep(
                |value| {
                    let spec = build(value)?;
                    let h = move |t| match frame {
                        Frame::Original => spec.hamiltonian(t),
                        Frame::Effective => spec.effective_closed(t),
                    };
                    Ok((h, s.period))
                },
                &s.values.values(),
                ic,
            )
        }
    })
}

pub fn floquet(cfg: &FloquetConfig) -> Result<Run, ConfigError> {
    check_integrator(&cfg.integrator)?;
    let points = sweep_points(cfg)?;
    let columns = [
        "sweep_value",
        "abs_lambda1",
        "abs_lambda2",
        "re_eps1",
        "im_eps1",
        "re_eps2",
        "im_eps2",
        "phase",
    ];
    let mut run = Run::new("floquet", cfg, Table::new(&columns));
    let mut failures = Vec::new();
    let mut product_defect: f64 = 0.0;
    for p in &points {
        let mut row = vec![
            Field::Num(p.sweep_value),
            Field::Num(p.abs_lambda[0]),
            Field::Num(p.abs_lambda[1]),
        ];
        row.extend(complex(p.quasienergies[0]));
        row.extend(complex(p.quasienergies[1]));
        row.push(Field::from(p.phase.map_or("error", |ph| ph.as_str())));
        run.table.push(row);
        match &p.error {
            Some(e) => failures.push(json!({ "sweep_value": p.sweep_value, "error": e })),
            None => product_defect = product_defect.max((p.eig_product - 1.0).norm()),
        }
    }
    if let Some(first) = failures.first() {
        run.fail(format!(
            "{} sweep points failed, first: {first}",
            failures.len()
        ));
    }
    let intervals: Vec<Value> = phase_intervals(&points)
        .iter()
        .map(|(lo, hi, ph)| json!({ "from": lo, "to": hi, "phase": ph.as_str() }))
        .collect();
    run.meta.insert("intervals".into(), Value::Array(intervals));
    run.meta
        .insert("boundaries".into(), json!(phase_boundaries(&points)));
    run.meta
        .insert("max_eig_product_defect".into(), json!(product_defect));
    run.meta.insert("failures".into(), Value::Array(failures));
    Ok(run)
}

pub fn ep(cfg: &EpConfig) -> Result<Run, ConfigError> {
    cfg.time.validate().map_err(ConfigError)?;
    if !(cfg.tol_ep > 0.0) {
        return Err(ConfigError(format!(
            "tol_ep must be positive, got {}",
            cfg.tol_ep
        )));
    }
    let spec = cfg.system.model()?;
    spec.check_interval(cfg.time.t0, cfg.time.t1, INTERVAL_CHECK_SAMPLES)?;
    let columns = [
        "t",
        "re_B",
        "im_B",
        "re_Bbar",
        "im_Bbar",
        "b_r",
        "b_i",
        "dist_orig",
        "dist_eff",
    ];
    let mut run = Run::new("ep", cfg, Table::new(&columns));
    let report = match spec.ep_report(&cfg.time.grid(), cfg.tol_ep) {
        Ok(r) => r,
        Err(e) if is_config_error(&e) => return Err(e.into()),
        Err(e) => {
            run.fail(e);
            return Ok(run);
        }
    };
    for s in &report.samples {
        let mut row = vec![Field::Num(s.t)];
        row.extend(complex(s.b_orig));
        row.extend(complex(s.b_eff));
        row.extend(complex(s.shift));
        row.extend([Field::Num(s.dist_orig), Field::Num(s.dist_eff)]);
        run.table.push(row);
    }
    run.meta
        .insert("crossings_orig".into(), json!(report.crossings_orig));
    run.meta
        .insert("crossings_eff".into(), json!(report.crossings_eff));
    Ok(run)
}
