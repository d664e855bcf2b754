//! Acceptance suite: one test per criterion, each printing a PASS line.
//! Run with `cargo test --test acceptance -- --nocapture` to see them.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use hypoel::bspde::{
    default_test_bank, energy_ledger, solve_backward, weak_residual, BspdeProblem, FieldSpec,
    SolveOptions, StochasticTerm,
};
use hypoel::feynman_kac::{
    cross_validate, estimate_u, Example12Model, MarkovianModel, Probe, Reference,
};
use hypoel::sde::{Example12, HistoryKind, NoiseGrid};
use hypoel::spectral::{
    bessel_apply, commutator_ratio, h_norm, random_band_limited, GridField, TorusGrid,
};
use hypoel::symbolic::{
    check_hormander, lie_bracket, parse_expr, sample_lattice, CertificateOutcome, Expr,
    FirstOrderOperator,
};

const PI: f64 = std::f64::consts::PI;

fn pass(criterion: usize, detail: &str) {
    println!("ACCEPTANCE {criterion} PASS: {detail}");
}

fn rotating_family() -> Vec<FirstOrderOperator> {
    vec![
        FirstOrderOperator::coordinate(1, 2),
        FirstOrderOperator::new(vec![Expr::zero(), parse_expr("sin(x1)", 2).unwrap()]),
    ]
}

// --- 1 -------------------------------------------------------------------

#[test]
fn acceptance_01_certificates() {
    let started = Instant::now();
    let grid = sample_lattice(2, 32, 1.0);

    let cert = check_hormander(&rotating_family(), &grid, 1e-8, 3)
        .unwrap()
        .certificate()
        .cloned()
        .expect("rotating family certifies");
    assert_eq!(cert.n0, 1);
    assert_eq!(cert.eta, 0.5);

    let spanning = vec![
        FirstOrderOperator::coordinate(1, 2),
        FirstOrderOperator::coordinate(2, 2),
    ];
    let cert0 = check_hormander(&spanning, &grid, 1e-8, 3)
        .unwrap()
        .certificate()
        .cloned()
        .expect("coordinate frame certifies");
    assert_eq!(cert0.n0, 0);
    assert_eq!(cert0.eta, 1.0);

    let lone = vec![FirstOrderOperator::coordinate(1, 2)];
    match check_hormander(&lone, &grid, 1e-8, 3).unwrap() {
        CertificateOutcome::NotSatisfied(ns) => assert_eq!(ns.levels_checked, 3),
        CertificateOutcome::Satisfied(_) => panic!("lone direction must not certify"),
    }

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    pass(1, &format!("certificates correct in {elapsed:?}"));
}

// --- 2 -------------------------------------------------------------------

fn random_trig_poly(rng: &mut ChaCha12Rng, dim: usize) -> Expr {
    let c0: f64 = rng.gen_range(-1.0..1.0);
    let c1: f64 = rng.gen_range(-1.0..1.0);
    let c2: f64 = rng.gen_range(-1.0..1.0);
    let a1 = rng.gen_range(1..=dim);
    let a2 = rng.gen_range(1..=dim);
    Expr::constant(c0)
        .add(&Expr::var(a1).sin().scale(c1))
        .add(&Expr::var(a2).cos().scale(c2))
}

fn random_operator(rng: &mut ChaCha12Rng, dim: usize) -> FirstOrderOperator {
    FirstOrderOperator::new((0..dim).map(|_| random_trig_poly(rng, dim)).collect())
}

/// Finite-difference application of a first-order operator to a closure.
fn fd_apply(op: &FirstOrderOperator, phi: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> f64 {
    let mut acc = 0.0;
    for j in 0..x.len() {
        let a = op.coeff(j + 1).eval(x, 0.0);
        if a == 0.0 {
            continue;
        }
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        acc += a * (phi(xp.as_slice()) - phi(xm.as_slice())) / (2.0 * h);
    }
    acc
}

#[test]
fn acceptance_02_bracket_algebra() {
    let mut rng = ChaCha12Rng::seed_from_u64(2024);
    let dim = 2;

    // Antisymmetry and Jacobi, structurally, for 50 random triples.
    for _ in 0..50 {
        let f = random_operator(&mut rng, dim);
        let g = random_operator(&mut rng, dim);
        let h = random_operator(&mut rng, dim);

        let fg = lie_bracket(&f, &g).unwrap();
        let gf = lie_bracket(&g, &f).unwrap();
        for j in 1..=dim {
            assert!(fg.coeff(j).add(gf.coeff(j)).is_zero(), "antisymmetry");
        }

        let jacobi_terms = [
            lie_bracket(&f, &lie_bracket(&g, &h).unwrap()).unwrap(),
            lie_bracket(&g, &lie_bracket(&h, &f).unwrap()).unwrap(),
            lie_bracket(&h, &lie_bracket(&f, &g).unwrap()).unwrap(),
        ];
        for j in 1..=dim {
            let total = jacobi_terms
                .iter()
                .fold(Expr::zero(), |acc, t| acc.add(t.coeff(j)));
            assert!(total.is_zero(), "Jacobi identity");
        }
    }

    // Symbolic brackets match nested finite-difference commutators to O(h^2):
    // Richardson halving cuts the worst error by ~4x.
    let psi = |x: &[f64]| (x[0] + 2.0 * x[1] + 0.3).sin();
    let dpsi = |x: &[f64], j: usize| {
        let c = (x[0] + 2.0 * x[1] + 0.3).cos();
        if j == 0 {
            c
        } else {
            2.0 * c
        }
    };
    let mut worst = [0.0f64; 2]; // errors at h and h/2
    let mut points = 0;
    while points < 100 {
        let f = random_operator(&mut rng, dim);
        let g = random_operator(&mut rng, dim);
        let bracket = lie_bracket(&f, &g).unwrap();
        for _ in 0..10 {
            let x = [rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI)];
            let exact: f64 = (0..dim)
                .map(|j| bracket.coeff(j + 1).eval(&x, 0.0) * dpsi(&x, j))
                .sum();
            for (slot, h) in [(0usize, 2e-2), (1usize, 1e-2)] {
                let fg = fd_apply(&f, &|y: &[f64]| fd_apply(&g, &psi, y, h), &x, h);
                let gf = fd_apply(&g, &|y: &[f64]| fd_apply(&f, &psi, y, h), &x, h);
                worst[slot] = worst[slot].max((fg - gf - exact).abs());
            }
            points += 1;
        }
    }
    let ratio = worst[0] / worst[1];
    assert!(
        ratio > 2.5,
        "expected ~4x error reduction under h halving, got {ratio} ({worst:?})"
    );
    assert!(worst[1] < 5e-2, "fd error too large: {:?}", worst[1]);
    pass(
        2,
        &format!(
            "antisymmetry+Jacobi structural for 50 triples; fd ratio {ratio:.2} at 100 points"
        ),
    );
}

// --- 3 -------------------------------------------------------------------

#[test]
fn acceptance_03_sobolev_engine() {
    let grid = TorusGrid::new(1, 64, 1.0).unwrap();
    let mode = GridField::from_fn(&grid, |p| p[0].sin());
    for n in [-2.0, -1.0, 0.0, 0.5, 1.0, 2.0] {
        let got = h_norm(&mode, n);
        let want = 2f64.powf(n / 2.0) * PI.sqrt();
        assert!(
            (got - want).abs() / want <= 1e-10,
            "order {n}: {got} vs {want}"
        );
    }

    let grid2 = TorusGrid::new(2, 32, 1.0).unwrap();
    let phi = random_band_limited(&grid2, 99, 6, 1.5).unwrap();
    let orders = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0];
    for a in orders {
        for b in orders {
            let two_step = bessel_apply(&bessel_apply(&phi, a), b);
            let one_step = bessel_apply(&phi, a + b);
            let rel = two_step.sub(&one_step).linf() / one_step.linf().max(1e-300);
            assert!(rel <= 1e-10, "composition ({a},{b}): {rel}");
        }
        let back = bessel_apply(&bessel_apply(&phi, a), -a);
        let rel = back.sub(&phi).linf() / phi.linf();
        assert!(rel <= 1e-10, "inverse pair {a}: {rel}");
    }
    pass(3, "single-mode norms and multiplier algebra exact to 1e-10");
}

// --- 4 -------------------------------------------------------------------

#[test]
fn acceptance_04_bracket_estimate_grid_stability() {
    let started = Instant::now();
    let lattice = sample_lattice(2, 32, 1.0);
    let cert = check_hormander(&rotating_family(), &lattice, 1e-8, 2)
        .unwrap()
        .certificate()
        .cloned()
        .unwrap();
    let members = cert.generations[cert.n0].members().to_vec();
    assert_eq!(members.len(), 3);

    let bound_at = |n: usize| -> Vec<f64> {
        let grid = TorusGrid::new(2, n, 1.0).unwrap();
        [0.0, 0.5, 1.0]
            .iter()
            .map(|eps| {
                let mut bound = 0.0f64;
                for probe in 0..100u64 {
                    let phi = random_band_limited(&grid, 4200 + probe, 10, 2.0).unwrap();
                    for i in 0..members.len() {
                        for j in (i + 1)..members.len() {
                            let r =
                                commutator_ratio(&members[i], &members[j], &phi, 0.0, *eps, 0.0)
                                    .unwrap();
                            bound = bound.max(r.ratio);
                        }
                    }
                }
                bound
            })
            .collect()
    };
    let coarse = bound_at(64);
    let fine = bound_at(128);
    for (eps, (c, f)) in [0.0, 0.5, 1.0].iter().zip(coarse.iter().zip(&fine)) {
        let drift = (c - f).abs() / c;
        assert!(
            drift < 0.10,
            "epsilon {eps}: bound drifted {drift:.3} (N=64: {c}, N=128: {f})"
        );
        assert!(c.is_finite() && *c > 0.0);
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    pass(
        4,
        &format!("empirical bounds {coarse:?} stable under N doubling in {elapsed:?}"),
    );
}

// --- 5 -------------------------------------------------------------------

#[test]
fn acceptance_05_solver_oracle() {
    // Error bound at N = 64 with the rule step.
    let grid = TorusGrid::new(1, 64, 1.0).unwrap();
    let problem = BspdeProblem::heat(1, 1.0, FieldSpec::Expr(parse_expr("sin(x1)", 1).unwrap()));
    let ledger = solve_backward(&problem, &grid, &SolveOptions::default()).unwrap();
    let u0 = ledger.snapshot_at(0.0).unwrap();
    let exact = GridField::from_fn(&grid, |p| (-0.5f64).exp() * p[0].sin());
    let err = u0.sub(&exact).linf();
    assert!(
        err <= 5.0 * ledger.dt_used,
        "heat error {err} exceeds 5 dt = {}",
        5.0 * ledger.dt_used
    );

    // Observed time order on a coarse grid where large rule-compliant steps
    // keep the truncation error far above round-off.
    let coarse_grid = TorusGrid::new(1, 8, 1.0).unwrap();
    let error_at = |dt: f64| {
        let opts = SolveOptions {
            dt: Some(dt),
            ..SolveOptions::default()
        };
        let ledger = solve_backward(&problem, &coarse_grid, &opts).unwrap();
        let u0 = ledger.snapshot_at(0.0).unwrap();
        let exact = GridField::from_fn(&coarse_grid, |p| (-0.5f64).exp() * p[0].sin());
        u0.sub(&exact).linf()
    };
    let e1 = error_at(1.0 / 16.0);
    let e2 = error_at(1.0 / 32.0);
    let order = (e1 / e2).log2();
    assert!(order >= 3.0, "observed order {order} (errors {e1}, {e2})");
    pass(
        5,
        &format!("heat error {err:.2e} <= 5 dt; observed time order {order:.2}"),
    );
}

// --- 6 -------------------------------------------------------------------

#[test]
fn acceptance_06_feynman_kac_agreement() {
    let started = Instant::now();

    // Heat problem: PDE ledger vs Monte Carlo at 10 probes, k = 3.
    let grid = TorusGrid::new(1, 64, 1.0).unwrap();
    let problem = BspdeProblem::heat(1, 1.0, FieldSpec::Expr(parse_expr("sin(x1)", 1).unwrap()));
    let opts = SolveOptions {
        snapshot_times: vec![0.0, 0.5],
        ..SolveOptions::default()
    };
    let ledger = solve_backward(&problem, &grid, &opts).unwrap();
    let path_steps = 50;
    let model = MarkovianModel::new(&problem, path_steps).unwrap();
    let probes: Vec<Probe> = [0.0, 0.5]
        .iter()
        .flat_map(|t| {
            (0..5).map(move |i| Probe {
                t: *t,
                x: vec![i as f64 * 2.0 * PI / 5.0],
            })
        })
        .collect();
    assert_eq!(probes.len(), 10);
    let dt = (1.0 - 0.0) / path_steps as f64;
    let dx = grid.spacing();
    let budget = dt + dx * dx;
    let report = cross_validate(
        &model,
        &probes,
        100_000,
        60,
        &Reference::Ledger(&ledger),
        3.0,
        budget,
    )
    .unwrap();
    assert!(
        report.all_pass(),
        "heat cross-validation failed: {:#?}",
        report.probes.iter().filter(|p| !p.pass).collect::<Vec<_>>()
    );

    // Shifted-noise case, alpha = 0, U = cos: future increments cancel, so
    // the estimate is exact with collapsed variance.
    let t = 0.5;
    let steps = 32;
    let ex = Example12 {
        alpha: 0.0,
        utility: parse_expr("cos(x1)", 1).unwrap(),
        horizon: 1.0,
        history: HistoryKind::ShiftedNoise,
    };
    let frozen = ex.sample_history(61, u64::MAX, t, steps).unwrap();
    let w_t = frozen.w_end();
    let model_i = Example12Model::new(ex, frozen, steps);
    let x = 1.1;
    let est = estimate_u(&model_i, t, &[x], 100_000, 62).unwrap();
    let dt_path = (1.0 - t) / steps as f64;
    assert!((est.mean - (x - w_t).cos()).abs() < 1e-10);
    let variance = est.stderr * est.stderr * est.n_samples as f64;
    assert!(variance <= 10.0 * dt_path, "variance {variance}");

    // Bridge case: exact up to endpoint round-off.
    let ex = Example12 {
        alpha: 0.0,
        utility: parse_expr("cos(x1)", 1).unwrap(),
        horizon: 1.0,
        history: HistoryKind::Bridge { start: 0.8 },
    };
    let frozen = ex.sample_history(63, u64::MAX, t, steps).unwrap();
    let h_t = frozen.h_end();
    let model_ii = Example12Model::new(ex, frozen, steps);
    let est = estimate_u(&model_ii, t, &[x], 100_000, 64).unwrap();
    assert!(
        (est.mean - (x - h_t).cos()).abs() <= 1e-12,
        "bridge deviation {}",
        (est.mean - (x - h_t).cos()).abs()
    );

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}");
    pass(
        6,
        &format!(
            "10 heat probes pass at k=3 (max z {:.2}); closed forms exact; {elapsed:?}",
            report.max_z
        ),
    );
}

// --- 7 -------------------------------------------------------------------

#[test]
fn acceptance_07_closed_form_weak_residual() {
    // Closed form u = U(x - W_t) M_t, v = (alpha U - U') M, on one frozen
    // W-path, with the noise derivative of v supplied for the compensated
    // stochastic quadrature. Simultaneous (dt, N) doubling must cut the
    // residual by at least 1.8x, twice.
    let alpha = 0.3;
    let big_t = 1.0;
    let seed = 30;
    let fine_steps = 400;
    let fine =
        NoiseGrid::sample(seed, 0, NoiseGrid::uniform_mesh(0.0, big_t, fine_steps), 1).unwrap();

    // The equation for this case: sigma = 0, theta = 1, b = c = gamma = 0.
    let mut problem = BspdeProblem::empty(1, 1);
    problem.theta = hypoel::symbolic::ExprMatrix::from_rows(vec![vec![Expr::one()]]).unwrap();
    problem.markovian = false;

    let u_of = |x: f64, w: f64, m: f64| (x - w).cos() * m;
    let v_of = |x: f64, w: f64, m: f64| alpha * (x - w).cos() * m + (x - w).sin() * m;
    // dW-coefficient of dv for v = F(x - W) M, F = alpha U - U':
    // vt = M (alpha^2 U - 2 alpha U' + U'').
    let vt_of = |x: f64, w: f64, m: f64| {
        m * (alpha * alpha * (x - w).cos() + 2.0 * alpha * (x - w).sin() - (x - w).cos())
    };

    let mut residuals = Vec::new();
    for level in 0..3 {
        let factor = 4usize >> level; // 4, 2, 1: coarse to fine
        let steps = fine_steps / factor;
        let n = 32 << level; // 32, 64, 128
        let grid = TorusGrid::new(1, n, 1.0).unwrap();
        let bank = default_test_bank(1, big_t);

        let mut times = Vec::with_capacity(steps + 1);
        let mut dw = Vec::with_capacity(steps);
        let mut w_path = Vec::with_capacity(steps + 1);
        let mut w = 0.0;
        times.push(0.0);
        w_path.push(0.0);
        for k in 0..steps {
            let mut inc = 0.0;
            for sub in 0..factor {
                inc += fine.dw(k * factor + sub)[0];
            }
            w += inc;
            dw.push(vec![inc]);
            times.push(fine.mesh()[(k + 1) * factor]);
            w_path.push(w);
        }

        let mut u_snaps = Vec::with_capacity(steps + 1);
        let mut v_snaps = Vec::with_capacity(steps + 1);
        let mut vt_snaps = Vec::with_capacity(steps + 1);
        for (t, w) in times.iter().zip(&w_path) {
            let m = (alpha * w - alpha * alpha * t / 2.0).exp();
            u_snaps.push(GridField::from_fn(&grid, |p| u_of(p[0], *w, m)));
            v_snaps.push(vec![GridField::from_fn(&grid, |p| v_of(p[0], *w, m))]);
            vt_snaps.push(vec![GridField::from_fn(&grid, |p| vt_of(p[0], *w, m))]);
        }
        let stochastic = StochasticTerm {
            dw,
            v: v_snaps,
            v_noise_deriv: Some(vt_snaps),
        };
        let r = weak_residual(&times, &u_snaps, &problem, Some(&stochastic), &bank).unwrap();
        residuals.push(r);
    }
    let r1 = residuals[0] / residuals[1];
    let r2 = residuals[1] / residuals[2];
    assert!(
        r1 >= 1.8 && r2 >= 1.8,
        "residuals {residuals:?} decrease by {r1:.2}, {r2:.2}"
    );
    pass(
        7,
        &format!("pathwise residuals {residuals:?} shrink {r1:.2}x then {r2:.2}x"),
    );
}

// --- 8 -------------------------------------------------------------------

#[test]
fn acceptance_08_smoothing_contrast() {
    let started = Instant::now();
    let epsilon = 0.5;
    let m = 0.0;
    let j_max = 4;
    let eta = {
        let lattice = sample_lattice(2, 32, 1.0);
        let cert = check_hormander(&rotating_family(), &lattice, 1e-8, 2)
            .unwrap()
            .certificate()
            .cloned()
            .expect("certified family");
        cert.eta
    };
    assert_eq!(eta, 0.5);

    let certified_problem = {
        let mut p = BspdeProblem::empty(2, 2);
        p.sigma = hypoel::symbolic::ExprMatrix::from_rows(vec![
            vec![Expr::one(), Expr::zero()],
            vec![Expr::zero(), parse_expr("sin(x1)", 2).unwrap()],
        ])
        .unwrap();
        p.terminal = FieldSpec::SquareWave { axis: 2 };
        p
    };
    let control_problem = {
        let mut p = BspdeProblem::empty(2, 1);
        p.sigma =
            hypoel::symbolic::ExprMatrix::from_rows(vec![vec![Expr::one()], vec![Expr::zero()]])
                .unwrap();
        p.terminal = FieldSpec::SquareWave { axis: 2 };
        p
    };

    let table = |problem: &BspdeProblem, n: usize| {
        let grid = TorusGrid::new(2, n, 1.0).unwrap();
        hypoel::bspde::smoothing_table(
            problem,
            eta,
            m,
            epsilon,
            j_max,
            &grid,
            2,
            &SolveOptions::default(),
        )
        .unwrap()
    };

    let mut contrast_ok = true;
    let mut cert_tables = Vec::new();
    let mut ctrl_tables = Vec::new();
    for n in [64usize, 128] {
        let cert_rows = table(&certified_problem, n);
        let ctrl_rows = table(&control_problem, n);
        // Certified: tail collapses below 10% of its terminal value.
        let cert_ratio = cert_rows[1].tail_mass / cert_rows[0].tail_mass;
        assert!(
            cert_ratio <= 0.10,
            "N={n}: certified tail ratio {cert_ratio}"
        );
        // Control: tail persists above 90%.
        let ctrl_ratio = ctrl_rows[1].tail_mass / ctrl_rows[0].tail_mass;
        assert!(ctrl_ratio >= 0.90, "N={n}: control tail ratio {ctrl_ratio}");
        // Contrast of at least 5x between control and certified tails.
        let contrast = ctrl_rows[1].tail_mass / cert_rows[1].tail_mass.max(1e-300);
        contrast_ok &= contrast >= 5.0;
        assert!(contrast >= 5.0, "N={n}: contrast {contrast}");
        cert_tables.push(cert_rows);
        ctrl_tables.push(ctrl_rows);
    }
    // Certified norms stable under N doubling for every j <= 4.
    for (j, coarse_row) in cert_tables[0].iter().enumerate() {
        let a = coarse_row.value;
        let b = cert_tables[1][j].value;
        let drift = (a - b).abs() / a;
        assert!(drift <= 0.10, "certified j={j}: drift {drift} ({a} vs {b})");
    }
    // Control grows without bound at order eta: measurably with N.
    let g64 = ctrl_tables[0][1].value;
    let g128 = ctrl_tables[1][1].value;
    assert!(
        g128 >= 1.03 * g64,
        "control order-eta norm must grow: {g64} -> {g128}"
    );

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 300.0, "took {elapsed:?}");
    assert!(contrast_ok);
    pass(
        8,
        &format!(
            "tail collapse vs persistence confirmed at N=64,128 (control growth {:.1}%) in {elapsed:?}",
            100.0 * (g128 / g64 - 1.0)
        ),
    );
}

// --- 9 -------------------------------------------------------------------

#[test]
fn acceptance_09_energy_ledger() {
    let problem = BspdeProblem::heat(1, 1.0, FieldSpec::Expr(parse_expr("sin(x1)", 1).unwrap()));
    let ratio_at = |n: usize, dt: f64| {
        let grid = TorusGrid::new(1, n, 1.0).unwrap();
        let opts = SolveOptions {
            snapshot_times: vec![0.0, 0.5],
            norm_orders: vec![0.0],
            energy_order: Some(0.0),
            dt: Some(dt),
            ..SolveOptions::default()
        };
        let ledger = solve_backward(&problem, &grid, &opts).unwrap();
        energy_ledger(&ledger, 0.0).unwrap().ratio
    };
    let coarse = ratio_at(32, 0.004);
    let fine = ratio_at(64, 0.002);
    assert!(coarse.is_finite() && fine.is_finite());
    let drift = (coarse - fine).abs() / coarse;
    assert!(drift < 0.10, "ratio drift {drift} ({coarse} vs {fine})");

    // Zero data: every ledger quantity identically zero.
    let zero = BspdeProblem::heat(1, 1.0, FieldSpec::Zero);
    let grid = TorusGrid::new(1, 16, 1.0).unwrap();
    let opts = SolveOptions {
        energy_order: Some(0.0),
        ..SolveOptions::default()
    };
    let ledger = solve_backward(&zero, &grid, &opts).unwrap();
    let report = energy_ledger(&ledger, 0.0).unwrap();
    assert_eq!(report.rhs, 0.0);
    assert_eq!(report.ratio, 0.0);
    assert!(report.lhs.iter().all(|l| *l == 0.0));
    pass(
        9,
        &format!("energy ratio {coarse:.6} stable under refinement; zero data exact"),
    );
}

// --- 10 ------------------------------------------------------------------

#[test]
fn acceptance_10_end_to_end_determinism() {
    let configs_dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .join("configs");
    let mut checked = 0;
    for entry in std::fs::read_dir(&configs_dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        let name = path.file_stem().unwrap().to_str().unwrap().to_string();
        let out_a = tempfile::tempdir().unwrap();
        let out_b = tempfile::tempdir().unwrap();
        for out in [out_a.path(), out_b.path()] {
            hypoel::harness::run_experiment(&path, None, None, Some(out.to_path_buf()))
                .unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        let mut names_a: Vec<String> = std::fs::read_dir(out_a.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names_a.sort();
        let mut names_b: Vec<String> = std::fs::read_dir(out_b.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names_b.sort();
        assert_eq!(names_a, names_b, "{name}: artifact sets differ");
        for file in &names_a {
            if file == "manifest.json" {
                // The manifest records wall time, the one run-varying field;
                // compare it with that field masked.
                let mask = |p: &std::path::Path| {
                    let v: serde_json::Value =
                        serde_json::from_slice(&std::fs::read(p).unwrap()).unwrap();
                    let mut v = v;
                    v["wall_time_s"] = serde_json::Value::Null;
                    v
                };
                assert_eq!(
                    mask(&out_a.path().join(file)),
                    mask(&out_b.path().join(file)),
                    "{name}/{file}: manifests differ beyond wall time"
                );
                continue;
            }
            let a = std::fs::read(out_a.path().join(file)).unwrap();
            let b = std::fs::read(out_b.path().join(file)).unwrap();
            assert_eq!(a, b, "{name}/{file}: bytes differ between runs");
        }
        checked += 1;
    }
    assert_eq!(checked, 7, "expected all seven bundled configs");
    pass(10, "all bundled configs byte-identical across two runs");
}
