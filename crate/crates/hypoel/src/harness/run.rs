//! Experiment dispatch: one config in, a deterministic artifact set out.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

use crate::bspde::{smoothing_table, solve_backward, SolutionLedger};
use crate::feynman_kac::{
    cross_validate, estimate_u_streamed, Example12Model, MarkovianModel, Probe, Reference,
};
use crate::sde::{simulate_path, CompiledDynamics, Example12, HistoryKind, NoiseGrid};
use crate::spectral::{commutator_ratio, random_band_limited};
use crate::symbolic::{
    check_hormander_at, parse_expr, sample_lattice, CertificateOutcome, FirstOrderOperator,
    HormanderCertificate,
};

use super::config::{ExperimentConfig, ExperimentKind, HarnessError};
use super::emit::{fmt_f64, Emitter};

/// Substream reserved for scenario (frozen-history) noise so that estimator
/// continuations, which use substreams counted from zero, never reuse it.
const SCENARIO_SUBSTREAM: u64 = u64::MAX;

pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub artifacts: Vec<String>,
}

/// Load a config, apply CLI overrides, run the experiment, and emit the
/// artifact set plus a manifest. Config problems surface before anything is
/// written; runtime failures still write a manifest recording the error.
pub fn run_experiment(
    config_path: &Path,
    expected_kind: Option<ExperimentKind>,
    seed_override: Option<u64>,
    out_override: Option<PathBuf>,
) -> Result<RunOutcome, HarnessError> {
    let started = Instant::now();
    let mut cfg = ExperimentConfig::load(config_path)?;
    if let Some(expected) = expected_kind {
        if cfg.kind != expected {
            return Err(HarnessError::Config(format!(
                "config kind `{}` does not match subcommand `{}`",
                cfg.kind.as_str(),
                expected.as_str()
            )));
        }
    }
    if let Some(seed) = seed_override {
        cfg.seed = seed;
    }
    let out_dir = out_override
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let mut emitter = Emitter::new(&out_dir)?;

    let result = dispatch(&cfg, &mut emitter);
    let artifacts = emitter.artifacts().to_vec();
    let wall = started.elapsed().as_secs_f64();
    match result {
        Ok(()) => {
            emitter.manifest(cfg.kind.as_str(), cfg.seed, wall, None)?;
            Ok(RunOutcome { out_dir, artifacts })
        }
        Err(e) => {
            // Partial manifest with the failure recorded.
            let msg = e.to_string();
            emitter.manifest(cfg.kind.as_str(), cfg.seed, wall, Some(&msg))?;
            Err(e)
        }
    }
}

fn dispatch(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<(), HarnessError> {
    match cfg.kind {
        ExperimentKind::Certify => run_certify(cfg, em),
        ExperimentKind::Solve => run_solve(cfg, em),
        ExperimentKind::Simulate => run_simulate(cfg, em),
        ExperimentKind::CrossValidate => run_cross_validate(cfg, em),
        ExperimentKind::SmoothingStudy => run_smoothing(cfg, em),
        ExperimentKind::Lemma42Probe => run_lemma42(cfg, em),
        ExperimentKind::Example12Verify => run_example12(cfg, em),
    }
}

fn certificate_json(cert: &HormanderCertificate) -> serde_json::Value {
    let generations: Vec<Vec<String>> = cert
        .generations
        .iter()
        .map(|g| {
            g.members()
                .iter()
                .map(|m| {
                    m.coeffs()
                        .iter()
                        .map(|c| c.to_string())
                        .collect::<Vec<_>>()
                        .join(", ")
                })
                .collect()
        })
        .collect();
    json!({
        "n0": cert.n0,
        "eta": cert.eta,
        "tolerance": cert.tolerance,
        "generations": generations,
        "worst_point": cert.worst_point().point,
        "min_relative_sv": cert.min_relative_sv(),
    })
}

fn run_certificate_check(
    fields: &[FirstOrderOperator],
    dim: usize,
    per_axis: usize,
    period: f64,
    tolerance: f64,
    n_max: usize,
    time: f64,
) -> Result<CertificateOutcome, HarnessError> {
    let points = sample_lattice(dim, per_axis, period);
    Ok(check_hormander_at(fields, &points, tolerance, n_max, time)?)
}

fn run_certify(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<(), HarnessError> {
    let grid = cfg.grid.as_ref().expect("validated");
    let cert_cfg = cfg.certify.as_ref().expect("validated");
    let fields = cert_cfg.build_fields(grid.dim)?;
    let outcome = run_certificate_check(
        &fields,
        grid.dim,
        cert_cfg.sample_points_per_axis,
        grid.period,
        cert_cfg.tolerance,
        cert_cfg.n_max,
        cert_cfg.time,
    )?;
    match outcome {
        CertificateOutcome::Satisfied(cert) => {
            em.json("certificate.json", &certificate_json(&cert))
        }
        CertificateOutcome::NotSatisfied(ns) => em.json(
            "certificate.json",
            &json!({
                "satisfied": false,
                "levels_checked": ns.levels_checked,
                "worst_point": ns.worst_point,
                "rank_achieved": ns.rank_achieved,
                "min_relative_sv": ns.min_relative_sv,
            }),
        ),
    }
}

fn norm_ledger_rows(ledger: &SolutionLedger) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (i, t) in ledger.times.iter().enumerate() {
        for (j, order) in ledger.norm_orders.iter().enumerate() {
            let tail = ledger
                .tail_mass
                .as_ref()
                .map(|tm| fmt_f64(tm[i]))
                .unwrap_or_default();
            rows.push(vec![
                fmt_f64(*t),
                fmt_f64(*order),
                fmt_f64(ledger.u_norms[i][j]),
                tail,
            ]);
        }
    }
    rows
}

fn run_solve(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<(), HarnessError> {
    let grid = cfg.grid.as_ref().expect("validated").build()?;
    let problem = cfg.problem.as_ref().expect("validated").build(&grid)?;
    let solve_cfg = cfg.solve.as_ref().expect("validated");
    let opts = solve_cfg.options();
    let ledger = solve_backward(&problem, &grid, &opts)?;
    em.csv(
        "norms.csv",
        &["t", "order", "value", "tail_mass"],
        &norm_ledger_rows(&ledger),
    )?;
    if solve_cfg.dump_snapshots {
        for (i, snap) in ledger.snapshots.iter().enumerate() {
            em.field_binary(&format!("snapshot_{i:04}.bin"), snap)?;
        }
    }
    if let Some(m) = opts.energy_order {
        let report = crate::bspde::energy_ledger(&ledger, m)?;
        em.json(
            "energy.json",
            &json!({
                "order": report.order,
                "times": report.times,
                "lhs": report.lhs,
                "rhs": report.rhs,
                "ratio": report.ratio,
            }),
        )?;
    }
    Ok(())
}

fn run_simulate(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<(), HarnessError> {
    let grid = cfg.grid.as_ref().expect("validated").build()?;
    let problem = cfg.problem.as_ref().expect("validated").build(&grid)?;
    let sim = cfg.simulate.as_ref().expect("validated");
    if sim.start.len() != problem.dim {
        return Err(HarnessError::Config(format!(
            "`start` must have {} components",
            problem.dim
        )));
    }
    let dynamics = CompiledDynamics::new(&problem.drift, &problem.sigma, &problem.theta)?;
    let mesh = NoiseGrid::uniform_mesh(sim.start_time, problem.horizon, sim.steps);
    let d = problem.dim;
    let mut mean = vec![0.0f64; d];
    let mut m2 = vec![0.0f64; d];
    for i in 0..sim.n_paths {
        let noise = NoiseGrid::sample(cfg.seed, i, mesh.clone(), problem.noise_dim)?;
        let path = simulate_path(&dynamics, sim.start_time, &sim.start, &noise)?;
        let terminal = path.terminal();
        for (c, x) in terminal.iter().enumerate() {
            let delta = x - mean[c];
            mean[c] += delta / (i + 1) as f64;
            m2[c] += delta * (x - mean[c]);
        }
        if (i as usize) < sim.dump_paths {
            let header: Vec<String> = std::iter::once("t".to_string())
                .chain((1..=d).map(|a| format!("x{a}")))
                .collect();
            let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
            let rows: Vec<Vec<String>> = path
                .times
                .iter()
                .zip(&path.values)
                .map(|(t, v)| {
                    std::iter::once(fmt_f64(*t))
                        .chain(v.iter().map(|x| fmt_f64(*x)))
                        .collect()
                })
                .collect();
            em.csv(&format!("path_{i:04}.csv"), &header_refs, &rows)?;
        }
    }
    let n = sim.n_paths.max(1) as f64;
    let std: Vec<f64> = m2.iter().map(|s| (s / (n - 1.0).max(1.0)).sqrt()).collect();
    em.json(
        "summary.json",
        &json!({
            "n_paths": sim.n_paths,
            "steps": sim.steps,
            "start_time": sim.start_time,
            "start": sim.start,
            "terminal_mean": mean,
            "terminal_std": std,
            "seed": cfg.seed,
        }),
    )
}

fn probe_report_rows(
    dim: usize,
    probes: &[crate::feynman_kac::ProbeResult],
) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header: Vec<String> = vec!["t".into()];
    header.extend((1..=dim).map(|a| format!("x{a}")));
    header.extend(
        ["mc_mean", "stderr", "reference", "pass"]
            .iter()
            .map(|s| s.to_string()),
    );
    let rows = probes
        .iter()
        .map(|p| {
            let mut row = vec![fmt_f64(p.t)];
            row.extend(p.x.iter().map(|x| fmt_f64(*x)));
            row.push(fmt_f64(p.estimate.mean));
            row.push(fmt_f64(p.estimate.stderr));
            row.push(fmt_f64(p.reference));
            row.push(p.pass.to_string());
            row
        })
        .collect();
    (header, rows)
}

fn run_cross_validate(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<(), HarnessError> {
    let grid = cfg.grid.as_ref().expect("validated").build()?;
    let problem = cfg.problem.as_ref().expect("validated").build(&grid)?;
    let solve_cfg = cfg.solve.as_ref().expect("validated");
    let cv = cfg.cross_validate.as_ref().expect("validated");
    let probes: Vec<Probe> = cv
        .probes
        .iter()
        .map(|row| {
            if row.len() != problem.dim + 1 {
                return Err(HarnessError::Config(format!(
                    "each probe row needs 1 + {} entries",
                    problem.dim
                )));
            }
            Ok(Probe {
                t: row[0],
                x: row[1..].to_vec(),
            })
        })
        .collect::<Result<_, _>>()?;
    let ledger = solve_backward(&problem, &grid, &solve_cfg.options())?;
    let model = MarkovianModel::new(&problem, cv.path_steps)?;
    let report = cross_validate(
        &model,
        &probes,
        cv.n_samples,
        cfg.seed,
        &Reference::Ledger(&ledger),
        cv.confidence_k,
        cv.budget,
    )?;
    let (header, rows) = probe_report_rows(problem.dim, &report.probes);
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    em.csv("report.csv", &header_refs, &rows)?;
    em.json(
        "summary.json",
        &json!({
            "n_probes": report.probes.len(),
            "n_pass": report.n_pass,
            "max_z": report.max_z,
        }),
    )
}

fn run_smoothing(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<(), HarnessError> {
    let grid = cfg.grid.as_ref().expect("validated").build()?;
    let problem = cfg.problem.as_ref().expect("validated").build(&grid)?;
    let sm = cfg.smoothing.as_ref().expect("validated");
    let eta = match sm.eta_override {
        Some(eta) => eta,
        None => {
            let fields: Vec<FirstOrderOperator> = problem
                .sigma_operators()
                .into_iter()
                .filter(|f| !f.is_zero())
                .collect();
            if fields.is_empty() {
                return Err(HarnessError::Runtime(
                    "no diffusion fields to certify; set `eta_override`".into(),
                ));
            }
            let outcome = run_certificate_check(
                &fields,
                problem.dim,
                sm.sample_points_per_axis,
                grid.period(),
                sm.tolerance,
                sm.n_max,
                0.0,
            )?;
            match outcome {
                CertificateOutcome::Satisfied(cert) => {
                    em.json("certificate.json", &certificate_json(&cert))?;
                    cert.eta
                }
                CertificateOutcome::NotSatisfied(ns) => {
                    return Err(HarnessError::Runtime(format!(
                        "spanning condition not satisfied up to level {}; \
                         set `eta_override` to run an uncertified control",
                        ns.levels_checked
                    )));
                }
            }
        }
    };
    let opts = cfg.solve.as_ref().map(|s| s.options()).unwrap_or_default();
    let rows = smoothing_table(
        &problem,
        eta,
        sm.base_order,
        sm.epsilon,
        sm.j_max,
        &grid,
        sm.tail_axis,
        &opts,
    )?;
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.t),
                fmt_f64(r.order),
                fmt_f64(r.value),
                fmt_f64(r.tail_mass),
            ]
        })
        .collect();
    em.csv(
        "smoothing.csv",
        &["t", "order", "value", "tail_mass"],
        &csv_rows,
    )
}

fn run_lemma42(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<(), HarnessError> {
    let grid_cfg = cfg.grid.as_ref().expect("validated");
    let grid = grid_cfg.build()?;
    let lm = cfg.lemma42.as_ref().expect("validated");
    for eps in &lm.epsilons {
        if !(0.0..=1.0).contains(eps) {
            return Err(HarnessError::Config(format!(
                "epsilon {eps} outside [0, 1]"
            )));
        }
    }
    let fields: Vec<FirstOrderOperator> = lm
        .fields
        .iter()
        .map(|row| {
            let coeffs = row
                .iter()
                .map(|e| {
                    parse_expr(e, grid_cfg.dim).map_err(|err| HarnessError::Config(err.to_string()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(FirstOrderOperator::new(coeffs))
        })
        .collect::<Result<_, HarnessError>>()?;
    let outcome = run_certificate_check(
        &fields,
        grid_cfg.dim,
        lm.sample_points_per_axis,
        grid_cfg.period,
        lm.tolerance,
        lm.n_max,
        0.0,
    )?;
    let cert = match outcome {
        CertificateOutcome::Satisfied(c) => c,
        CertificateOutcome::NotSatisfied(ns) => {
            return Err(HarnessError::Runtime(format!(
                "family not certified up to level {}",
                ns.levels_checked
            )));
        }
    };
    em.json("certificate.json", &certificate_json(&cert))?;
    let members = cert.generations[cert.n0].members();
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut summary = Vec::new();
    for eps in &lm.epsilons {
        let mut bound = 0.0f64;
        for probe in 0..lm.n_probes {
            let phi = random_band_limited(
                &grid,
                cfg.seed.wrapping_add(probe as u64),
                lm.band,
                lm.decay,
            )?;
            for i in 0..members.len() {
                for j in (i + 1)..members.len() {
                    let r =
                        commutator_ratio(&members[i], &members[j], &phi, lm.base_order, *eps, 0.0)?;
                    bound = bound.max(r.ratio);
                    rows.push(vec![
                        format!("[{}]x[{}]", i, j),
                        fmt_f64(*eps),
                        probe.to_string(),
                        fmt_f64(r.lhs),
                        fmt_f64(r.rhs),
                        fmt_f64(r.ratio),
                    ]);
                }
            }
        }
        summary.push(json!({"epsilon": eps, "bound": bound}));
    }
    em.csv(
        "probes.csv",
        &["pair", "epsilon", "probe", "lhs", "rhs", "ratio"],
        &rows,
    )?;
    em.json(
        "summary.json",
        &json!({
            "n0": cert.n0,
            "eta": cert.eta,
            "n_probes": lm.n_probes,
            "band": lm.band,
            "decay": lm.decay,
            "bounds": summary,
        }),
    )
}

fn run_example12(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<(), HarnessError> {
    let ex_cfg = cfg.example12.as_ref().expect("validated");
    let utility =
        parse_expr(&ex_cfg.utility, 1).map_err(|e| HarnessError::Config(e.to_string()))?;
    let history = match ex_cfg.case.as_str() {
        "shifted-noise" => HistoryKind::ShiftedNoise,
        "bridge" => HistoryKind::Bridge {
            start: ex_cfg.start,
        },
        "drifted" => {
            let drift = ex_cfg.drift.as_ref().ok_or_else(|| {
                HarnessError::Config("`drifted` case requires a `drift` expression".into())
            })?;
            HistoryKind::Drifted {
                bbar: parse_expr(drift, 1).map_err(|e| HarnessError::Config(e.to_string()))?,
                start: ex_cfg.start,
            }
        }
        other => {
            return Err(HarnessError::Config(format!(
                "unknown example case `{other}` (expected shifted-noise, bridge, or drifted)"
            )));
        }
    };
    let example = Example12 {
        alpha: ex_cfg.alpha,
        utility,
        horizon: ex_cfg.horizon,
        history,
    };
    let frozen = example.sample_history(
        cfg.seed,
        SCENARIO_SUBSTREAM,
        ex_cfg.freeze_time,
        ex_cfg.scenario_steps,
    )?;
    let h_t = frozen.h_end();
    let w_t = frozen.w_end();
    let t = frozen.end_time();
    let model = Example12Model::new(example.clone(), frozen, ex_cfg.path_steps);

    let mut rows = Vec::new();
    let mut n_pass = 0usize;
    let mut max_z = 0.0f64;
    for (i, x) in ex_cfg.probes.iter().enumerate() {
        let est = estimate_u_streamed(
            &model,
            t,
            &[*x],
            ex_cfg.n_samples,
            cfg.seed,
            (i as u64) * ex_cfg.n_samples,
        )?;
        let (u_ref, _v_ref) = example.oracle(h_t, w_t, t, *x);
        let dev = (est.mean - u_ref).abs();
        let pass = dev <= ex_cfg.confidence_k * est.stderr + ex_cfg.budget;
        let z = if est.stderr > 0.0 {
            dev / est.stderr
        } else if dev == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        if pass {
            n_pass += 1;
        }
        max_z = max_z.max(z);
        rows.push(vec![
            fmt_f64(t),
            fmt_f64(*x),
            fmt_f64(est.mean),
            fmt_f64(est.stderr),
            fmt_f64(u_ref),
            pass.to_string(),
        ]);
    }
    em.csv(
        "report.csv",
        &["t", "x1", "mc_mean", "stderr", "reference", "pass"],
        &rows,
    )?;
    em.json(
        "summary.json",
        &json!({
            "n_probes": ex_cfg.probes.len(),
            "n_pass": n_pass,
            "max_z": max_z,
            "alpha": ex_cfg.alpha,
            "case": ex_cfg.case,
            "freeze_time": t,
            "h_t": h_t,
            "w_t": w_t,
        }),
    )
}
