//! The experiment drivers behind each subcommand.

use crate::config::{ProblemKind, RunConfig};
use crate::report::{write_divergence_table, write_energy_csv, write_table};
use crate::vtk::write_fields;
use polymhd::analysis::{compute_errors, convergence_rates, example1_solution, ErrorReport};
use polymhd::forms::{dot, local_bilinear, FormTag};
use polymhd::mesh::{build_mesh, mesh_size, MeshFamily, Rect};
use polymhd::sav::{Integrator, Problem, SavError, SchemeParams};
use polymhd::spaces::{Discretization, SpaceKind};
use polymhd::system::{boundary_velocity_dofs, constraint_values, MhdOperators};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

/// A failed run maps to exit code 3 (configuration problems are caught
/// before dispatch and exit with 2).
#[derive(Debug)]
pub enum CmdError {
    Run(String),
}

impl fmt::Display for CmdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CmdError::Run(m) => write!(f, "run failed: {m}"),
        }
    }
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        3
    }
}

impl From<SavError> for CmdError {
    fn from(e: SavError) -> Self {
        CmdError::Run(e.to_string())
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Run(format!("io error: {e}"))
    }
}

fn run_err(e: impl fmt::Display) -> CmdError {
    CmdError::Run(e.to_string())
}

fn ensure_out(dir: &Path) -> Result<(), CmdError> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn scheme_for(cfg: &RunConfig, h: f64) -> Result<SchemeParams, CmdError> {
    let physics = cfg.physics();
    match cfg.dt {
        Some(dt) => {
            let n = (cfg.t_final / dt).ceil().max(2.0) as usize;
            SchemeParams::new(physics, cfg.t_final, n).map_err(run_err)
        }
        None => SchemeParams::from_mesh_size(physics, cfg.t_final, h).map_err(run_err),
    }
}

/// One manufactured-solution run on one level; returns the error report and
/// the largest divergence norm over all computed levels.
fn run_example1_level(cfg: &RunConfig, level: u32) -> Result<(ErrorReport, f64), CmdError> {
    let mesh = build_mesh(cfg.family, level, Rect::UNIT).map_err(run_err)?;
    let h = mesh_size(&mesh);
    let disc = Discretization::build(mesh, cfg.k).map_err(run_err)?;
    let scheme = scheme_for(cfg, h)?;
    let mut ms = example1_solution();
    ms.params = cfg.physics();
    ms.t_final = cfg.t_final;
    let exact = Arc::new(ms);
    let mut integ =
        Integrator::new(&disc, scheme, Problem::manufactured(exact.clone()), &Rect::UNIT)?;
    let mut div_max = 0.0_f64;
    let (state, _) = integ.run(|info| {
        if info.step >= 1 {
            div_max = div_max.max(info.energy.div_u);
        }
    })?;
    let report = compute_errors(
        &disc,
        &exact,
        cfg.t_final,
        &state.u,
        &state.b,
        &state.p,
        state.q,
        level,
        h,
    );
    Ok((report, div_max))
}

/// Acceptance bands for the observed rates, checked on the finest two level
/// pairs (or every pair when only two levels ran).
pub struct RateBands;

impl RateBands {
    pub const U_L2: (f64, f64) = (1.8, 2.3);
    pub const U_H1: (f64, f64) = (0.85, 1.15);
    pub const B_L2: (f64, f64) = (1.8, 2.2);
    pub const B_H1: (f64, f64) = (0.85, 1.15);
    pub const Q_MIN: f64 = 1.8;
    pub const P_MIN: f64 = 0.9;
    pub const DIV_MAX: f64 = 1e-10;
}

pub fn check_rate_bands(reports: &[ErrorReport], div_max: &[f64]) -> Vec<String> {
    let mut failures = Vec::new();
    let hs: Vec<f64> = reports.iter().map(|r| r.h).collect();
    let finest = |rates: &[Option<f64>]| -> Vec<f64> {
        rates.iter().rev().take(2).filter_map(|r| *r).collect()
    };
    let mut check_band = |name: &str, es: Vec<f64>, lo: f64, hi: f64| {
        let rates = convergence_rates(&es, &hs);
        for r in finest(&rates) {
            if r < lo || r > hi {
                let band = if hi == f64::MAX {
                    format!(">= {lo}")
                } else {
                    format!("[{lo}, {hi}]")
                };
                failures.push(format!("{name} rate {r:.3} outside {band}"));
            }
        }
    };
    check_band(
        "error(u,L2)",
        reports.iter().map(|r| r.err_u_l2).collect(),
        RateBands::U_L2.0,
        RateBands::U_L2.1,
    );
    check_band(
        "error(u,H1)",
        reports.iter().map(|r| r.err_u_h1).collect(),
        RateBands::U_H1.0,
        RateBands::U_H1.1,
    );
    check_band(
        "error(b,L2)",
        reports.iter().map(|r| r.err_b_l2).collect(),
        RateBands::B_L2.0,
        RateBands::B_L2.1,
    );
    check_band(
        "error(b,H1)",
        reports.iter().map(|r| r.err_b_h1).collect(),
        RateBands::B_H1.0,
        RateBands::B_H1.1,
    );
    check_band("error(q)", reports.iter().map(|r| r.err_q).collect(), RateBands::Q_MIN, f64::MAX);
    check_band(
        "error(p,L2)",
        reports.iter().map(|r| r.err_p_l2).collect(),
        RateBands::P_MIN,
        f64::MAX,
    );
    for (r, &d) in reports.iter().zip(div_max) {
        if d > RateBands::DIV_MAX {
            failures.push(format!("level {}: max div {d:.3e} above {:.1e}", r.level, RateBands::DIV_MAX));
        }
    }
    failures
}

pub fn cmd_convergence(cfg: &RunConfig, check: bool) -> Result<i32, CmdError> {
    ensure_out(&cfg.out_dir)?;
    let mut reports = Vec::new();
    let mut div_rows = Vec::new();
    let mut div_maxes = Vec::new();
    for level in cfg.level_range() {
        let t0 = std::time::Instant::now();
        let (report, div_max) = run_example1_level(cfg, level)?;
        println!(
            "level {level}: h = {:.4}, error(u,L2) = {:.4e}, error(b,L2) = {:.4e}, div = {:.2e}  [{:.2?}]",
            report.h,
            report.err_u_l2,
            report.err_b_l2,
            report.div_u,
            t0.elapsed()
        );
        div_rows.push((level, report.h, report.div_u, div_max));
        div_maxes.push(div_max);
        reports.push(report);
    }
    let family = cfg.family.to_string();
    let table = write_table(&family, &reports);
    std::fs::write(cfg.out_dir.join("convergence.csv"), &table)?;
    let div_table = write_divergence_table(&family, &div_rows);
    std::fs::write(cfg.out_dir.join("divergence.csv"), &div_table)?;
    println!("{table}");
    if reports.len() < 2 {
        eprintln!("warning: a single level gives no rates; nothing to check");
        return Ok(0);
    }
    if check {
        let failures = check_rate_bands(&reports, &div_maxes);
        if !failures.is_empty() {
            for f in &failures {
                eprintln!("check failed: {f}");
            }
            return Ok(1);
        }
        println!("all rate bands satisfied");
    }
    Ok(0)
}

pub fn cmd_cavity(cfg: &RunConfig) -> Result<i32, CmdError> {
    ensure_out(&cfg.out_dir)?;
    let level = cfg.single_level(5);
    let mesh = build_mesh(cfg.family, level, Rect::UNIT).map_err(run_err)?;
    let h = mesh_size(&mesh);
    let disc = Discretization::build(mesh, cfg.k).map_err(run_err)?;
    let mut cavity_cfg = cfg.clone();
    cavity_cfg.problem = ProblemKind::Cavity;
    let scheme = scheme_for(&cavity_cfg, h)?;
    println!(
        "cavity: level {level} (h = {h:.4}), {} steps, nu = {}, sigma = {}",
        scheme.n_steps, scheme.physics.nu, scheme.physics.sigma
    );
    let mut integ = Integrator::new(&disc, scheme, Problem::cavity(), &Rect::UNIT)?;
    let snapshots = if cavity_cfg.snapshots.is_empty() {
        vec![cavity_cfg.t_final]
    } else {
        cavity_cfg.snapshots.clone()
    };
    let mut pending: Vec<f64> = snapshots;
    let mut taken: Vec<(f64, polymhd::sav::SavState)> = Vec::new();
    let dt = scheme.dt;
    let (final_state, records) = integ.run(|info| {
        pending.retain(|&t| {
            if (info.time - t).abs() <= 0.5 * dt || info.time >= t {
                taken.push((t, info.state.clone()));
                false
            } else {
                true
            }
        });
    })?;
    for (t, state) in &taken {
        let text = write_fields(&disc, state, &format!("cavity fields at t = {t}"));
        let name = format!("cavity_t{t:.4}.vtk");
        std::fs::write(cfg.out_dir.join(&name), text)?;
        println!("wrote {name}");
    }
    let div_max = records.iter().skip(1).fold(0.0_f64, |m, r| m.max(r.div_u));
    println!("max div over steps: {div_max:.3e}");
    if div_max > 1e-10 {
        eprintln!("warning: divergence above 1e-10");
        return Ok(1);
    }
    let _ = final_state;
    Ok(0)
}

pub fn cmd_stability(cfg: &RunConfig) -> Result<i32, CmdError> {
    ensure_out(&cfg.out_dir)?;
    let level = cfg.single_level(2);
    let mesh = build_mesh(cfg.family, level, Rect::UNIT).map_err(run_err)?;
    let h = mesh_size(&mesh);
    let disc = Discretization::build(mesh, cfg.k).map_err(run_err)?;
    let physics = cfg.physics();
    let flip = std::env::var("POLYMHD_TEST_FLIP_DISSIPATION").is_ok();
    let n_steps = 50usize;
    let ms = Arc::new(example1_solution());
    let mut worst: Option<(f64, usize, f64)> = None;
    for factor in [1.0, 10.0, 100.0] {
        let dt = factor * h;
        let scheme =
            SchemeParams::new(physics, dt * n_steps as f64, n_steps).map_err(run_err)?;
        let (mu, mb) = (ms.clone(), ms.clone());
        let problem = Problem::decay(move |x| (mu.u)(x, 0.0), move |x| (mb.b)(x, 0.0));
        let mut integ = Integrator::new(&disc, scheme, problem, &Rect::UNIT)?;
        let s0 = integ.initial_state();
        let mut records = vec![(0usize, 0.0, integ.energy(&s0))];
        let mut state = integ.bdf1_step(&s0)?;
        records.push((1, dt, integ.energy(&state)));
        let mut prev_tele = integ.telescoped_energy(&state);
        for step in 2..=n_steps {
            state = integ.bdf2_step(&state)?;
            records.push((step, step as f64 * dt, integ.energy(&state)));
            let tele = integ.telescoped_energy(&state);
            let diss = integ.dissipation_increment(&state);
            if tele + diss > prev_tele * (1.0 + 1e-10) + 1e-12 && worst.is_none() {
                worst = Some((factor, step, tele + diss - prev_tele));
            }
            prev_tele = tele;
        }
        if flip {
            // test hook: corrupt the recorded dissipation so the
            // nonnegativity validation below must fire
            for (_, _, e) in records.iter_mut() {
                e.diss_velocity = -e.diss_velocity;
                e.diss_magnetic = -e.diss_magnetic;
            }
        }
        // every energy-record field is a quadratic form and must be >= 0
        for (step, _, e) in &records {
            let fields =
                [e.kinetic, e.magnetic, e.q_sq, e.diss_velocity, e.diss_magnetic, e.div_u];
            if fields.iter().any(|&v| v < 0.0) && worst.is_none() {
                worst = Some((factor, *step, f64::NAN));
            }
        }
        let csv = write_energy_csv(&records);
        let name = format!("energy_dt{factor}h.csv");
        std::fs::write(cfg.out_dir.join(&name), csv)?;
        println!(
            "dt = {factor:>5}h: final kinetic {:.4e}, magnetic {:.4e}, wrote {name}",
            records.last().unwrap().2.kinetic,
            records.last().unwrap().2.magnetic
        );
    }
    if let Some((factor, step, gap)) = worst {
        eprintln!(
            "telescoped energy increased at dt = {factor}h, step {step} (gap {gap:.3e})"
        );
        return Ok(1);
    }
    println!("telescoped energy non-increasing in all runs");
    Ok(0)
}

pub fn cmd_meshgen(cfg: &RunConfig) -> Result<i32, CmdError> {
    ensure_out(&cfg.out_dir)?;
    for level in cfg.level_range() {
        let mesh = build_mesh(cfg.family, level, Rect::UNIT).map_err(run_err)?;
        let name = format!("{}_level{}.txt", cfg.family, level);
        std::fs::write(cfg.out_dir.join(&name), mesh.to_text())?;
        println!(
            "wrote {name}: {} vertices, {} cells, h = {:.4}",
            mesh.n_vertices(),
            mesh.n_cells(),
            mesh_size(&mesh)
        );
    }
    Ok(0)
}

/// Projector-reproduction, k-consistency, and Stokes polynomial patch tests
/// on every mesh family; prints one pass/fail line per (family, k, test).
pub fn cmd_patch_test(cfg: &RunConfig) -> Result<i32, CmdError> {
    let mut all_pass = true;
    let params = cfg.physics();
    for family in [MeshFamily::Square, MeshFamily::Nonconvex, MeshFamily::Voronoi] {
        for k in 1..=2usize {
            let mesh = build_mesh(family, 1, Rect::UNIT).map_err(run_err)?;
            let disc = Discretization::build(mesh, k).map_err(run_err)?;

            let dev = reproduction_deviation(&disc);
            report_line(&mut all_pass, family, k, "projector reproduction", dev, 1e-12);

            let dev = k_consistency_deviation(&disc, &params);
            report_line(&mut all_pass, family, k, "k-consistency", dev, 1e-11);

            let dev = stokes_patch_deviation(&disc, k, &params).map_err(run_err)?;
            report_line(&mut all_pass, family, k, "Stokes patch solve", dev, 1e-10);
        }
    }
    Ok(if all_pass { 0 } else { 1 })
}

fn report_line(
    all_pass: &mut bool,
    family: MeshFamily,
    k: usize,
    what: &str,
    dev: f64,
    tol: f64,
) {
    let ok = dev <= tol;
    *all_pass &= ok;
    println!(
        "{:9} k={k} {:24} max deviation {dev:9.3e} (tol {tol:.0e})  {}",
        family.to_string(),
        what,
        if ok { "PASS" } else { "FAIL" }
    );
}

/// max |Π·D - I| over cells, spaces, and both projectors.
pub fn reproduction_deviation(disc: &Discretization) -> f64 {
    let mut worst = 0.0_f64;
    for el in &disc.elements {
        for proj in [&el.velocity, &el.magnetic] {
            for p in [&proj.pi_nabla, &proj.pi0] {
                let prod = p.matmul(&proj.dof_of_poly);
                let n = prod.nrows();
                for i in 0..n {
                    for j in 0..n {
                        let expect = if i == j { 1.0 } else { 0.0 };
                        worst = worst.max((prod[(i, j)] - expect).abs());
                    }
                }
            }
        }
    }
    worst
}

/// k-consistency on random dof vectors: pairing a dof vector
/// with the interpolant of any degree-k vector monomial through a stabilized
/// form equals the corresponding consistency pairing.
pub fn k_consistency_deviation(disc: &Discretization, params: &polymhd::forms::MhdParams) -> f64 {
    let mut worst = 0.0_f64;
    let mut seed = 0x51ab_u64;
    let mut rand = move || {
        seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    for el in &disc.elements {
        let nk2 = 2 * el.basis.dim();
        let nv = el.velocity.n_dofs;
        let nm = el.magnetic.n_dofs;
        let v: Vec<f64> = (0..nv).map(|_| rand()).collect();
        let b: Vec<f64> = (0..nm).map(|_| rand()).collect();
        let m0 = local_bilinear(el, FormTag::M0h, params);
        let a0 = local_bilinear(el, FormTag::A0h, params);
        let m1 = local_bilinear(el, FormTag::M1h, params);
        let a1 = local_bilinear(el, FormTag::A1h, params);
        let pi0v = el.velocity.pi0.matvec(&v);
        let pinv = el.velocity.pi_nabla.matvec(&v);
        let pi0b = el.magnetic.pi0.matvec(&b);
        let curlb = el.magnetic.curl.as_ref().unwrap().matvec(&b);
        let divb = el.magnetic.div.matvec(&b);
        let scale = el.geom.area;
        for j in 0..nk2 {
            // q_I dofs are the dof values of the j-th vector monomial
            let qv: Vec<f64> = (0..nv).map(|i| el.velocity.dof_of_poly[(i, j)]).collect();
            let qm: Vec<f64> = (0..nm).map(|i| el.magnetic.dof_of_poly[(i, j)]).collect();
            // m0h(v, q_I) = (Π⁰v, q)
            let lhs = dot(&m0.matvec(&qv), &v);
            let rhs: f64 = (0..nk2).map(|i| pi0v[i] * el.vmass[(i, j)]).sum();
            worst = worst.max((lhs - rhs).abs() / scale);
            // a0h(v, q_I) = ν(∇v, ∇q) = ν(∇Π^∇v, ∇q)
            let lhs = dot(&a0.matvec(&qv), &v);
            let rhs: f64 =
                params.nu * (0..nk2).map(|i| pinv[i] * el.vstiff[(i, j)]).sum::<f64>();
            worst = worst.max((lhs - rhs).abs() / scale);
            // m1h(b, q_I) = μ(Π⁰b, q)
            let lhs = dot(&m1.matvec(&qm), &b);
            let rhs: f64 =
                params.mu * (0..nk2).map(|i| pi0b[i] * el.vmass[(i, j)]).sum::<f64>();
            worst = worst.max((lhs - rhs).abs() / scale);
            // a1h(b, q_I) = σ⁻¹[(Π⁰curl b, curl q) + (Π⁰div b, div q)]
            let lhs = dot(&a1.matvec(&qm), &b);
            let (curlq, divq) = monomial_curl_div(el, j);
            let n1 = curlq.len();
            let mut rhs = 0.0;
            for a in 0..n1 {
                for g in 0..n1 {
                    rhs += el.mass_km1[(a, g)] * (curlb[a] * curlq[g] + divb[a] * divq[g]);
                }
            }
            rhs /= params.sigma;
            worst = worst.max((lhs - rhs).abs() / scale);
        }
    }
    worst
}

/// curl and div coefficient vectors (degree k-1) of the j-th vector monomial.
fn monomial_curl_div(el: &polymhd::spaces::ElementSpaces, j: usize) -> (Vec<f64>, Vec<f64>) {
    let nk = el.basis.dim();
    let (comp, s) = if j < nk { (0usize, j) } else { (1usize, j - nk) };
    let mut mono = vec![0.0; nk];
    mono[s] = 1.0;
    let [gx, gy] = polymhd::poly::gradient(&el.basis, &mono).expect("sized");
    // vector (m_s, 0): curl = -∂₂m_s, div = ∂₁m_s; (0, m_s): curl = ∂₁m_s, div = ∂₂m_s
    if comp == 0 {
        (gy.iter().map(|v| -v).collect(), gx)
    } else {
        (gx, gy)
    }
}

/// Solve the Stokes system with polynomial manufactured data and report the
/// max dof deviation from the interpolant.
pub fn stokes_patch_deviation(
    disc: &Discretization,
    k: usize,
    params: &polymhd::forms::MhdParams,
) -> Result<f64, polymhd::system::SystemError> {
    use polymhd::forms::load_vector;
    use polymhd::mesh::Point2;
    let nu = params.nu;
    let exact = move |p: Point2| -> (f64, f64) {
        if k == 1 {
            (1.0 + 2.0 * p.x - 3.0 * p.y, -1.0 + 0.5 * p.x - 2.0 * p.y)
        } else {
            (p.x * p.x, -2.0 * p.x * p.y)
        }
    };
    let u_i = disc.interpolate(SpaceKind::Velocity, exact);
    let vel_fixed = boundary_velocity_dofs(disc);
    let values = constraint_values(disc, SpaceKind::Velocity, &vel_fixed, |p, c| {
        let v = exact(p);
        if c == 0 {
            v.0
        } else {
            v.1
        }
    });
    let mut ops = MhdOperators::new(disc, params, vel_fixed, Vec::new())?;
    let f = move |p: Point2| {
        let v = exact(p);
        if k == 1 {
            v
        } else {
            // f = u - νΔu + ∇p with Δu = (2, 0) and p = x - 1/2
            (v.0 - nu * 2.0 + 1.0, v.1)
        }
    };
    let rhs = load_vector(disc, SpaceKind::Velocity, f);
    let (u, p, _) = ops.solve_stokes(1.0, 1.0, &rhs, &values)?;
    let mut dev = 0.0_f64;
    for (a, b) in u.iter().zip(u_i.iter()) {
        dev = dev.max((a - b).abs());
    }
    if k == 2 {
        let p_i = disc.interpolate_pressure(|pt| pt.x - 0.5);
        for (a, b) in p.iter().zip(p_i.iter()) {
            dev = dev.max((a - b).abs());
        }
    } else {
        dev = dev.max(p.norm_inf());
    }
    Ok(dev)
}
