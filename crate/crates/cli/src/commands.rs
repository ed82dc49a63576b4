//! One function per command, each returning a [`Report`].

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ske_core::dfcheck::{
    bath_df_constraint, bv_ratio_check, constraint_by_configuration, df_residual, liouville_df,
    triangulate_block, Branch, DFReport, InitialSystemState,
};
use ske_core::gates::{
    conditional_phase, corrected_swap, delta_t_correction, ideal_swap, swap_phases, swap_sqrt,
    xor_gate, LevelShift,
};
use ske_core::model::SYSTEM_DIM;
use ske_core::operator::Matrix;
use ske_core::oracle::{exact_projector, exact_propagate_density};
use ske_core::subdyn::{fidelity, propagate_projected, ProjectedState};
use ske_core::{
    build_hamiltonians, exact_eigensystem, unperturbed_basis, EigenSystem, Execution, Hamiltonians,
    ModelConfig, OperatorMatrix, Order, Subdynamics, Tolerances, UnperturbedBasis,
};

use crate::config::Command;
use crate::report::{Cell, Report, Table};
use crate::CliError;

/// Everything a command needs, already validated.
#[derive(Debug, Clone)]
pub struct Context {
    pub model: ModelConfig,
    pub tol: Tolerances,
    pub order: Order,
    pub branch: Branch,
    pub swap_branch: usize,
    pub time: Option<f64>,
    pub initial: InitialSystemState,
    pub fidelity_samples: usize,
    pub fidelity_seed: u64,
    pub fidelity_time: f64,
    pub df_occupations: Option<Vec<usize>>,
    pub exec: Execution,
}

pub fn execute(command: Command, ctx: &Context) -> Result<Report, CliError> {
    match command {
        Command::Spectrum => spectrum(ctx),
        Command::Subdyn => subdyn(ctx),
        Command::Gates => gates(ctx),
        Command::Correct => correct(ctx),
        Command::Fidelity => fidelity_cmd(ctx),
        Command::DfCheck => df_check(ctx),
        Command::Triangulate => triangulate(ctx),
        Command::Liouville => liouville(ctx),
        Command::Sweep => Err(CliError::Schema("sweep needs an inner command".into())),
    }
}

fn order_name(order: Order) -> &'static str {
    match order {
        Order::Exact => "exact",
        Order::Order1 => "order1",
    }
}

struct Model {
    hams: Hamiltonians,
    basis: UnperturbedBasis,
    es: EigenSystem,
}

impl Model {
    fn build(ctx: &Context) -> Result<Self, CliError> {
        let hams = build_hamiltonians(&ctx.model)?;
        let basis = unperturbed_basis(&ctx.model)?;
        let es = exact_eigensystem(&hams.h, &basis, &ctx.tol)?;
        Ok(Self { hams, basis, es })
    }

    fn subdynamics(&self, ctx: &Context) -> Result<Subdynamics<'_>, CliError> {
        Ok(Subdynamics::new(
            &self.hams,
            &self.basis,
            Some(&self.es),
            ctx.tol,
        )?)
    }
}

fn max(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, f64::max)
}

fn spectrum(ctx: &Context) -> Result<Report, CliError> {
    let m = Model::build(ctx)?;
    let mut r = Report::new("spectrum");
    r.scalar("dim", m.hams.dim());
    r.scalar("bath_dim", m.basis.bath_dim);
    r.scalar(
        "reconstruction_residual",
        m.es.reconstruction_residual(&m.hams.h),
    );
    r.scalar("ambiguous_labels", m.es.ambiguous.len());
    let mut t = Table::new("levels", &["nu", "flat", "j", "e0", "eigenvalue", "shift"]);
    for (nu, label) in m.basis.labels.iter().enumerate() {
        let e = m.es.eigenvalue(nu).ok();
        let e0 = m.basis.energies[nu];
        t.push(vec![
            label.to_string().into(),
            nu.into(),
            label.j.into(),
            e0.into(),
            e.into(),
            e.map(|e| e - e0).into(),
        ]);
    }
    r.tables.push(t);
    Ok(r)
}

fn subdyn(ctx: &Context) -> Result<Report, CliError> {
    let m = Model::build(ctx)?;
    let sd = m.subdynamics(ctx)?;
    let sets = sd.build_sets(ctx.order, ctx.exec)?;
    let theta = sd.intermediate_operator(&sets);
    let residuals = theta.eigen_residuals();
    let h = OperatorMatrix::new(m.hams.h.matrix().clone());
    let rows = ctx.exec.map(&sets, |s| {
        let pi = s.pi();
        let oracle_e = m.es.eigenvalue(s.index).ok();
        let oracle_pi = exact_projector(&m.es, s.index).ok();
        vec![
            s.nu.to_string().into(),
            s.e0.into(),
            s.delta_e.into(),
            s.delta_e_degenerate.into(),
            s.delta_e_printed.into(),
            s.energy().re.into(),
            oracle_e.into(),
            oracle_e.map(|e| (s.energy().re - e).abs()).into(),
            oracle_pi.map(|p| (&pi - &p).norm()).into(),
            (&(&pi * &pi) - &pi).norm().into(),
            h.commutator(&pi).norm().into(),
            s.c().norm().into(),
            s.d().norm().into(),
            s.normalization().into(),
            residuals[s.index].into(),
            s.warnings.join("; ").into(),
        ]
    });
    let mut t = Table::new(
        "sets",
        &[
            "nu",
            "e0",
            "delta_e",
            "delta_e_degenerate",
            "delta_e_printed",
            "energy",
            "oracle_eigenvalue",
            "energy_error",
            "projector_error",
            "idempotence",
            "commutator",
            "c_norm",
            "d_norm",
            "normalization",
            "theta_residual",
            "warnings",
        ],
    );
    let col = |rows: &[Vec<Cell>], i: usize| {
        max(rows.iter().filter_map(|r| match r[i] {
            Cell::Float(x) => Some(x),
            _ => None,
        }))
    };
    let mut r = Report::new("subdyn");
    r.scalar("dim", m.hams.dim());
    r.scalar("order", order_name(ctx.order));
    let at = |name: &str| t.columns.iter().position(|c| c == name).unwrap_or(0);
    r.scalar("max_energy_error", col(&rows, at("energy_error")));
    r.scalar("max_projector_error", col(&rows, at("projector_error")));
    r.scalar("max_idempotence", col(&rows, at("idempotence")));
    r.scalar("max_commutator", col(&rows, at("commutator")));
    r.scalar("max_theta_residual", max(residuals.iter().cloned()));
    r.scalar("max_literal_leakage", theta.max_literal_leakage());
    for row in rows {
        t.push(row);
    }
    r.tables.push(t);
    Ok(r)
}

fn matrix_table(name: &str, u: &OperatorMatrix) -> Table {
    let mut t = Table::new(name, &["row", "col", "value"]);
    for row in 0..u.dim() {
        for col in 0..u.dim() {
            t.push(vec![row.into(), col.into(), u[(row, col)].into()]);
        }
    }
    t
}

fn gates(ctx: &Context) -> Result<Report, CliError> {
    let profile = &ctx.model.j;
    let tau = profile.swap_duration(ctx.swap_branch)?;
    let integral = profile.integral(tau);
    let u = ideal_swap(profile, ctx.swap_branch)?;
    let root = swap_sqrt(profile, ctx.swap_branch)?;
    let xor = xor_gate(profile, ctx.swap_branch)?;
    let mut r = Report::new("gates");
    r.scalar("tau_s", tau);
    r.scalar("swap_integral", integral);
    r.scalar(
        "swap_unitarity_defect",
        (&(&u.adjoint() * &u) - &OperatorMatrix::identity(SYSTEM_DIM)).norm(),
    );
    r.scalar("sqrt_defect", (&(&root * &root) - &u).norm());
    // |01⟩ is computational index 1, |10⟩ index 2
    r.scalar("swap_01_to_10", u[(2, 1)]);
    r.scalar("xor_conditional_phase", conditional_phase(&xor));
    let mut p = Table::new("phases", &["j", "phase", "argument"]);
    for (j, z) in swap_phases(integral).iter().enumerate() {
        p.push(vec![(j + 1).into(), (*z).into(), z.arg().into()]);
    }
    r.tables.push(p);
    r.tables.push(matrix_table("swap", &u));
    r.tables.push(matrix_table("swap_sqrt", &root));
    r.tables.push(matrix_table("xor", &xor));
    Ok(r)
}

fn correct(ctx: &Context) -> Result<Report, CliError> {
    let m = Model::build(ctx)?;
    let sd = m.subdynamics(ctx)?;
    let sets = sd.build_sets(ctx.order, ctx.exec)?;
    let shifts = LevelShift::from_sets(&sets, ctx.model.j.initial());
    let first = delta_t_correction(&ctx.model.j, &shifts, ctx.swap_branch, &ctx.tol)?;
    let applied = first
        .uniform_delta_t
        .unwrap_or_else(|| first.delta_t.iter().sum::<f64>() / first.delta_t.len().max(1) as f64);
    let rep = corrected_swap(&ctx.model.j, &shifts, applied, ctx.swap_branch, &ctx.tol)?;
    let mut r = Report::new("correct");
    r.scalar("order", order_name(ctx.order));
    r.scalar("tau_s", rep.tau_s);
    r.scalar("uniform", rep.uniform_delta_t.is_some());
    r.scalar("uniform_delta_t", rep.uniform_delta_t);
    r.scalar("applied_delta_t", applied);
    r.scalar("deviation", rep.deviation);
    r.scalar("max_integral_error", rep.max_integral_error());
    r.scalar("residual", rep.residual);
    let mut t = Table::new(
        "shifts",
        &[
            "nu",
            "delta_e",
            "delta_t",
            "integral_lhs",
            "integral_rhs",
            "residual",
            "bath_phase_mismatch",
        ],
    );
    for (i, s) in shifts.iter().enumerate() {
        t.push(vec![
            s.label.to_string().into(),
            s.delta_e.into(),
            rep.delta_t[i].into(),
            rep.integral_lhs[i].into(),
            rep.integral_rhs[i].into(),
            rep.residuals[i].into(),
            rep.bath_phase_mismatch[i].into(),
        ]);
    }
    r.tables.push(t);
    Ok(r)
}

fn fidelity_cmd(ctx: &Context) -> Result<Report, CliError> {
    let m = Model::build(ctx)?;
    let sd = m.subdynamics(ctx)?;
    let sets = sd.build_sets(ctx.order, ctx.exec)?;
    let theta = sd.intermediate_operator(&sets);
    let n = sets.len();
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.fidelity_seed);
    let weights: Vec<Vec<f64>> = (0..ctx.fidelity_samples)
        .map(|_| {
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            let s: f64 = w.iter().sum();
            w.into_iter().map(|x| x / s).collect()
        })
        .collect();
    let t = ctx.fidelity_time;
    let bath = m.basis.bath_dim;
    let rows = ctx
        .exec
        .try_map(&weights, |w| -> Result<Vec<Cell>, CliError> {
            let diag = Matrix::from_fn(n, n, |a, b| {
                if a == b {
                    C64::new(w[a], 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            });
            let rho0 = ProjectedState::Density(diag.clone());
            let rho_t = propagate_projected(&rho0, &theta, t);
            let f_proj = fidelity(
                &OperatorMatrix::new(diag.clone()),
                &OperatorMatrix::new(rho_t.to_density()),
                &ctx.tol,
            )?;
            let lab = m.basis.from_phi_basis(&OperatorMatrix::new(diag));
            let evolved = exact_propagate_density(&m.es, &lab, t);
            let s0 = lab.partial_trace_second(SYSTEM_DIM, bath);
            let st = evolved.partial_trace_second(SYSTEM_DIM, bath);
            let f_reduced = fidelity(&s0, &st, &ctx.tol)?;
            Ok(vec![f_proj.into(), f_reduced.into(), rho_t.norm().into()])
        })?;
    let mut table = Table::new(
        "samples",
        &[
            "sample",
            "fidelity_projected",
            "fidelity_reduced_exact",
            "trace",
        ],
    );
    let mut worst = 0.0f64;
    for (i, mut row) in rows.into_iter().enumerate() {
        if let Cell::Float(f) = row[0] {
            worst = worst.max((f - 1.0).abs());
        }
        row.insert(0, i.into());
        table.push(row);
    }
    let mut r = Report::new("fidelity");
    r.scalar("order", order_name(ctx.order));
    r.scalar("samples", ctx.fidelity_samples);
    r.scalar("seed", ctx.fidelity_seed as usize);
    r.scalar("time", t);
    r.scalar("max_projected_deviation", worst);
    r.tables.push(table);
    Ok(r)
}

fn occupation_text(n: &[usize]) -> String {
    n.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn df_check(ctx: &Context) -> Result<Report, CliError> {
    let cfg = &ctx.model;
    let g: Vec<C64> = cfg.modes.iter().map(|m| m.g).collect();
    let mut summary = DFReport::default();
    let mut r = Report::new("df-check");
    let mut constraint = Table::new("constraint", &["occupations", "sum", "abs", "holds"]);
    let mut failing = 0usize;
    for (occ, v) in constraint_by_configuration(cfg)? {
        let holds = v.norm() <= ctx.tol.df_constraint;
        failing += usize::from(!holds);
        constraint.push(vec![
            occupation_text(&occ).into(),
            v.into(),
            v.norm().into(),
            holds.into(),
        ]);
    }
    r.scalar("constraint_failing_configurations", failing);
    if let Some(n) = &ctx.df_occupations {
        let v = bath_df_constraint(&g, n)?;
        summary.residual_bath_constraint = Some(v);
        r.scalar("target_occupations", occupation_text(n));
        let mut ratios = Table::new(
            "ratios",
            &["k", "occupation_ratio", "coupling_ratio", "holds"],
        );
        match bv_ratio_check(&g, n, ctx.tol.df_constraint.max(1e-12)) {
            Ok(checks) => {
                for c in checks {
                    ratios.push(vec![
                        c.k.into(),
                        c.occupation_ratio.into(),
                        c.coupling_ratio.into(),
                        c.holds.into(),
                    ]);
                }
            }
            Err(e) => r.scalar("ratio_check", e.to_string()),
        }
        r.tables.push(ratios);
    }
    let m = Model::build(ctx)?;
    let sd = m.subdynamics(ctx)?;
    let sets = sd.build_sets(ctx.order, ctx.exec)?;
    let hil = df_residual(cfg, &sd, &sets)?;
    summary.residual_hilbert = Some(hil.residual);
    let mut hilbert = Table::new(
        "hilbert",
        &["nu", "residual", "second_order", "common_denominator"],
    );
    for (i, label) in hil.labels.iter().enumerate() {
        hilbert.push(vec![
            label.to_string().into(),
            hil.per_nu[i].into(),
            hil.second_order_per_nu[i].into(),
            hil.common_denominator.as_ref().map(|v| v[i]).into(),
        ]);
    }
    r.scalar("order", order_name(ctx.order));
    r.scalar("residual_hilbert", summary.residual_hilbert);
    r.scalar("residual_hilbert_second_order", hil.second_order);
    r.scalar("residual_bath_constraint", summary.residual_bath_constraint);
    r.scalar(
        "residual_bath_constraint_abs",
        summary.residual_bath_constraint.map(|z| z.norm()),
    );
    r.tables.push(constraint);
    r.tables.push(hilbert);
    Ok(r)
}

fn triangulate(ctx: &Context) -> Result<Report, CliError> {
    let mut t = Table::new(
        "blocks",
        &[
            "oscillator",
            "n",
            "omega",
            "g",
            "gamma",
            "zeta",
            "det",
            "lower_left",
            "relative_lower_left",
            "diagonal_low",
            "diagonal_high",
            "eigenvalue_low",
            "eigenvalue_high",
            "fallback_column",
        ],
    );
    let mut worst = 0.0f64;
    let mut spectral = 0.0f64;
    for (k, mode) in ctx.model.oscillators().iter().enumerate() {
        for n in 0..ctx.model.n_max {
            let b = triangulate_block(mode.omega, mode.g, n, ctx.branch, &ctx.tol)?;
            let (d, e) = (b.diagonal(), b.eigenvalues());
            worst = worst.max(b.relative_lower_left());
            spectral = spectral.max((d[0] - e[0]).abs()).max((d[1] - e[1]).abs());
            t.push(vec![
                k.into(),
                n.into(),
                b.omega.into(),
                b.g.into(),
                b.gamma.into(),
                b.zeta.into(),
                b.det().into(),
                b.m_tri[(1, 0)].into(),
                b.relative_lower_left().into(),
                d[0].into(),
                d[1].into(),
                e[0].into(),
                e[1].into(),
                b.fallback_column.into(),
            ]);
        }
    }
    let mut r = Report::new("triangulate");
    r.scalar("blocks", t.rows.len());
    r.scalar("max_relative_lower_left", worst);
    r.scalar("max_diagonal_error", spectral);
    r.tables.push(t);
    Ok(r)
}

fn liouville(ctx: &Context) -> Result<Report, CliError> {
    let rep = liouville_df(&ctx.model, &ctx.initial, ctx.time, ctx.branch, &ctx.tol)?;
    let mut r = Report::new("liouville");
    r.scalar("dim", rep.dim);
    r.scalar("liouville_dim", rep.liouville_dim);
    r.scalar("lambda", rep.lambda);
    r.scalar("df_levels", occupation_text(&rep.df_levels));
    r.scalar("blocks", rep.blocks);
    r.scalar("fallback_blocks", rep.fallback_blocks);
    r.scalar("second_order_residual", rep.second_order_residual);
    r.scalar("degenerate_coupling", rep.degenerate_coupling);
    r.scalar("lower_triangle_norm", rep.lower_triangle_norm);
    r.scalar("offdiagonal_norm", rep.offdiagonal_norm);
    r.scalar("t", rep.t);
    r.scalar("projected_weight", rep.projected_weight);
    r.scalar("fidelity_projected", rep.fidelity_projected);
    r.scalar("fidelity_subspace", rep.fidelity_subspace);
    r.scalar("fidelity_total", rep.fidelity_total);
    r.scalar("tau_s", rep.tau_s);
    r.scalar("swap_invariance_lambda", rep.swap_invariance_lambda);
    r.scalar("swap_invariance_ideal", rep.swap_invariance_ideal);
    Ok(r)
}
