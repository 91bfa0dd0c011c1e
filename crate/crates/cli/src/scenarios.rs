//! Scenario execution: each runner validates its inputs, computes every table
//! in memory and hands them back in emission order.

use rayon::prelude::*;
use uniformize_core::algebra::{HamiltonianFunctionalSpec, StateDensity};
use uniformize_core::dynamics::{
    classical_vlasov_evolve, hartree_evolve, sector_propagate, sector_propagate_modulated, vlasov_evolve_density,
    TimeGrid, Trajectory,
};
use uniformize_core::meanfield::{
    convergence_rows, epsilon_soliton, finish_table, generalized_soliton_check, hartree_fixed_point,
    spectral_gap_frequency, symmetric_power_vector, GapRow, Profile, SolitonProblem,
};
use uniformize_core::tensor::{kron_power, CMatrix, CVector, Ket, Metric, Parity, SectorBasis, SpaceLabel, C64};
use uniformize_core::uniformize::appendix_identity_suite;
use uniformize_core::uniformize::{full_power_hamiltonian, sector_hamiltonian};
use uniformize_core::verify::{algebra_suite, classical_limit_study, commutation_suite, VerifyReport, VerifySizes};

use crate::config::{complex_matrix, ExperimentConfig, ModelConfig, ProfileConfig, Scenario, StorageConfig};
use crate::output::{Cell, ResultTable};
use crate::CliError;

/// Tables of one run and whether its built-in checks passed.
#[derive(Debug)]
pub struct ScenarioOutput {
    pub tables: Vec<ResultTable>,
    pub passed: bool,
}

impl ScenarioOutput {
    fn ok(tables: Vec<ResultTable>) -> Self {
        Self { tables, passed: true }
    }
}

pub struct RunOptions {
    pub seed: u64,
    pub timing: bool,
}

pub fn run_scenario(config: &ExperimentConfig, opts: &RunOptions) -> Result<ScenarioOutput, CliError> {
    match config.scenario {
        Scenario::AlgebraVerify => algebra_verify(config, opts.seed),
        Scenario::Hartree => hartree(config),
        Scenario::VlasovQuantum => vlasov_quantum(config),
        Scenario::VlasovClassical => vlasov_classical(config),
        Scenario::Uniformized => uniformized(config),
        Scenario::EpsilonConvergence => epsilon_convergence(config, opts.timing),
        Scenario::Gap => gap(config),
        Scenario::Soliton => soliton(config),
        Scenario::EpsilonSoliton => epsilon_soliton_scenario(config),
    }
}

fn metric_of(spec: &HamiltonianFunctionalSpec) -> Result<Metric, CliError> {
    spec.metric().cloned().ok_or_else(|| CliError::Validation("this scenario needs a quantum model".into()))
}

fn check_len(v: &CVector, d: usize, what: &str) -> Result<(), CliError> {
    if v.len() != d {
        return Err(CliError::Validation(format!("{what} has {} entries, the model has d = {d}", v.len())));
    }
    Ok(())
}

fn quantum_inputs(config: &ExperimentConfig) -> Result<(HamiltonianFunctionalSpec, CVector, TimeGrid), CliError> {
    let spec = config.spec()?;
    let metric = metric_of(&spec)?;
    let psi = config.initial()?.psi()?;
    check_len(&psi, metric.d(), "initial.psi")?;
    Ok((spec, psi, config.run.time_grid()?))
}

/// Runs every suite with the configured appendix sizes; the four suites run
/// as independent jobs.
pub fn verify_report(seed: u64, sizes: &VerifySizes) -> Result<VerifyReport, CliError> {
    let ((algebra, appendix), (commutation, limit)) = rayon::join(
        || {
            rayon::join(
                || algebra_suite(sizes.algebra_draws, seed),
                || appendix_identity_suite(sizes.appendix_d, sizes.appendix_n_max, sizes.appendix_trials, seed),
            )
        },
        || {
            rayon::join(
                || commutation_suite(sizes.commutation_d, sizes.commutation_n_max, sizes.commutation_pairs, seed),
                || classical_limit_study(sizes.limit_eps0, sizes.limit_halvings, sizes.limit_draws, seed),
            )
        },
    );
    Ok(VerifyReport {
        seed,
        algebra: algebra?,
        appendix: appendix?,
        commutation: commutation?,
        classical_limit: limit?,
    })
}

pub fn verify_tables(report: &VerifyReport) -> Vec<ResultTable> {
    let mut checks = ResultTable::new("checks", &["check", "value", "bound", "passed"]);
    for c in report.checks() {
        checks.push(vec![c.name.into(), c.value.into(), c.bound.into(), c.passed.into()]);
    }
    let mut limit = ResultTable::new("classical_limit", &["epsilon", "max_deviation"]);
    for (e, dev) in report.classical_limit.epsilons.iter().zip(&report.classical_limit.deviations) {
        limit.push(vec![(*e).into(), (*dev).into()]);
    }
    vec![checks, limit]
}

fn algebra_verify(config: &ExperimentConfig, seed: u64) -> Result<ScenarioOutput, CliError> {
    let sizes = VerifySizes {
        appendix_d: config.run.d.unwrap_or(2),
        appendix_n_max: config.run.n_max.unwrap_or(3),
        appendix_trials: config.run.trials.unwrap_or(50),
        ..VerifySizes::default()
    };
    let report = verify_report(seed, &sizes)?;
    Ok(ScenarioOutput { tables: verify_tables(&report), passed: report.passed() })
}

fn hartree(config: &ExperimentConfig) -> Result<ScenarioOutput, CliError> {
    let (spec, psi, grid) = quantum_inputs(config)?;
    let traj = hartree_evolve(&spec, &psi, &grid)?;
    Ok(ScenarioOutput::ok(vec![ResultTable::trajectory("trajectory", &traj)]))
}

fn vlasov_quantum(config: &ExperimentConfig) -> Result<ScenarioOutput, CliError> {
    let spec = config.spec()?;
    let metric = metric_of(&spec)?;
    let initial = config.initial()?;
    let rho = match (&initial.rho, &initial.psi) {
        (Some(m), _) => StateDensity::quantum(&metric, complex_matrix(m, "initial.rho")?)?,
        (None, Some(_)) => {
            let psi = initial.psi()?;
            check_len(&psi, metric.d(), "initial.psi")?;
            StateDensity::pure(&metric, psi.as_slice())?
        }
        (None, None) => return Err(CliError::Validation("vlasov-quantum needs initial.rho or initial.psi".into())),
    };
    let traj = vlasov_evolve_density(&spec, &rho, &config.run.time_grid()?)?;
    Ok(ScenarioOutput::ok(vec![ResultTable::trajectory("trajectory", &traj)]))
}

fn vlasov_classical(config: &ExperimentConfig) -> Result<ScenarioOutput, CliError> {
    let ModelConfig::Classical { grid, .. } = config.model()? else {
        return Err(CliError::Validation("vlasov-classical needs a classical model".into()));
    };
    let spec = config.spec()?;
    let field = config.initial()?.field(&grid.build()?)?;
    let traj = classical_vlasov_evolve(&spec, &field, &config.run.time_grid()?)?;
    Ok(ScenarioOutput::ok(vec![ResultTable::trajectory("trajectory", &traj)]))
}

/// Initial ket on the chosen `n`-particle space: either given directly with the
/// space's dimension, or as a single-particle `φ` lifted to `φ^⊗n`.
fn initial_ket(psi: &CVector, d: usize, n: usize, parity: Parity, storage: StorageConfig) -> Result<Ket, CliError> {
    let (space, lifted) = match storage {
        StorageConfig::Sector => {
            let basis = SectorBasis::new(d, n, parity);
            let lifted = if psi.len() == basis.dim() {
                psi.clone()
            } else if psi.len() == d {
                symmetric_power_vector(&basis, psi)?
            } else {
                return Err(CliError::Validation(format!(
                    "initial.psi must have d = {d} or sector dimension {} entries",
                    basis.dim()
                )));
            };
            (basis.space(), lifted)
        }
        StorageConfig::Full => {
            let space = SpaceLabel::full(d, n);
            let dim = space.dim();
            let lifted = if psi.len() == dim {
                psi.clone()
            } else if psi.len() == d {
                kron_power(&CMatrix::from_column_slice(d, 1, psi.as_slice()), n)?.column(0).into_owned()
            } else {
                return Err(CliError::Validation(format!("initial.psi must have d = {d} or {dim} entries")));
            };
            (space, lifted)
        }
    };
    Ok(Ket::new(space, lifted)?)
}

fn uniformized(config: &ExperimentConfig) -> Result<ScenarioOutput, CliError> {
    let spec = config.spec()?;
    let metric = metric_of(&spec)?;
    let run = &config.run;
    let n = run.n.ok_or_else(|| CliError::Validation("run.n is required".into()))?;
    let epsilon = run.require_epsilon()?;
    let parity = run.parity.parity();
    let psi = config.initial()?.psi()?;
    let ket = initial_ket(&psi, metric.d(), n, parity, run.storage)?;
    let grid = run.time_grid()?;
    let traj = match run.storage {
        StorageConfig::Sector if spec.is_time_dependent() => {
            sector_propagate_modulated(&spec, epsilon, parity, &ket, &grid)?
        }
        StorageConfig::Sector => sector_propagate(&sector_hamiltonian(&spec, n, epsilon, parity, 0.0)?, &ket, &grid)?,
        StorageConfig::Full if spec.is_time_dependent() => {
            return Err(CliError::Validation("full-power propagation takes time-independent models".into()))
        }
        StorageConfig::Full => sector_propagate(&full_power_hamiltonian(&spec, n, epsilon, 0.0)?, &ket, &grid)?,
    };
    Ok(ScenarioOutput::ok(vec![ResultTable::trajectory("trajectory", &traj)]))
}

fn epsilon_convergence(config: &ExperimentConfig, timing: bool) -> Result<ScenarioOutput, CliError> {
    let (spec, phi, grid) = quantum_inputs(config)?;
    let eps = config.run.epsilon_list()?;
    let n_max = config.run.require_n_max()?;
    let reference = hartree_evolve(&spec, &phi, &grid)?;
    let per_eps = eps
        .par_iter()
        .map(|&e| convergence_rows(&spec, &phi, e, n_max, &grid, &reference))
        .collect::<Result<Vec<_>, _>>()?;
    let table = finish_table(per_eps.into_iter().flatten().collect());
    let mut rows = ResultTable::new("convergence", &["epsilon", "n_max", "t", "error", "tail_weight", "runtime_ms"]);
    for r in &table.rows {
        let runtime = if timing { r.runtime_ms } else { 0.0 };
        rows.push(vec![
            r.epsilon.into(),
            r.n_max.into(),
            r.t.into(),
            r.error.into(),
            r.tail_weight.into(),
            runtime.into(),
        ]);
    }
    let mut orders = ResultTable::new("orders", &["epsilon_coarse", "epsilon_fine", "order", "monotone"]);
    let finals = table.final_errors();
    for (w, order) in finals.windows(2).zip(table.empirical_orders()) {
        orders.push(vec![w[0].0.into(), w[1].0.into(), order.into(), table.monotone.into()]);
    }
    Ok(ScenarioOutput::ok(vec![rows, orders]))
}

fn gap(config: &ExperimentConfig) -> Result<ScenarioOutput, CliError> {
    let spec = config.spec()?;
    let d = metric_of(&spec)?.d();
    let nu = config.run.require_nu()?;
    let mut ns = config.run.ns.clone();
    if ns.is_empty() || ns.contains(&0) {
        return Err(CliError::Validation("run.ns must list positive particle numbers".into()));
    }
    ns.sort_unstable();
    ns.dedup();
    let seed = match config.initial.as_ref().and_then(|i| i.psi.as_ref()) {
        Some(_) => config.initial()?.psi()?,
        None => CVector::from_element(d, C64::new(1.0, 0.0)),
    };
    check_len(&seed, d, "initial.psi")?;
    let fp = hartree_fixed_point(&spec, nu, &seed)?;
    let points = ns.par_iter().map(|&n| spectral_gap_frequency(&spec, nu, n)).collect::<Result<Vec<_>, _>>()?;
    let mut table =
        ResultTable::new("gap", &["n", "epsilon", "lambda_n", "lambda_n1", "gap", "omega_hartree", "abs_diff"]);
    for p in points {
        let r = GapRow::new(p, fp.omega);
        table.push(vec![
            r.n.into(),
            r.epsilon.into(),
            r.lambda_n.into(),
            r.lambda_n1.into(),
            r.gap.into(),
            r.omega_hartree.into(),
            r.abs_diff.into(),
        ]);
    }
    Ok(ScenarioOutput::ok(vec![table]))
}

fn soliton_problem(config: &ExperimentConfig) -> Result<(SolitonProblem, TimeGrid), CliError> {
    let (spec, phi, grid) = quantum_inputs(config)?;
    let extra = config
        .run
        .integrals
        .iter()
        .enumerate()
        .map(|(j, m)| complex_matrix(m, &format!("run.integrals[{j}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let problem = if config.run.targets.is_empty() {
        SolitonProblem::new(spec, extra, phi)?
    } else {
        SolitonProblem::solve(spec, extra, &config.run.targets, &phi)?
    };
    let profile = match config.run.profile {
        ProfileConfig::MeanField => Profile::MeanField,
        ProfileConfig::Sectors => Profile::Sectors,
    };
    Ok((problem.with_profile(profile), grid))
}

fn soliton(config: &ExperimentConfig) -> Result<ScenarioOutput, CliError> {
    let (problem, grid) = soliton_problem(config)?;
    let report = generalized_soliton_check(&problem, &grid)?;
    let mut deviations = ResultTable::new("deviations", &["t", "deviation"]);
    for &(t, dev) in &report.deviations {
        deviations.push(vec![t.into(), dev.into()]);
    }
    let mut summary = ResultTable::new("summary", &["quantity", "value"]);
    summary.push(vec!["residual".into(), report.residual.into()]);
    summary.push(vec!["max_deviation".into(), report.max_deviation.into()]);
    summary.push(vec!["ray_derivative".into(), report.ray_derivative.into()]);
    summary.push(vec!["ray_derivative_fd".into(), report.ray_derivative_fd.into()]);
    for (j, nu) in report.multipliers.iter().enumerate() {
        summary.push(vec![format!("multiplier_{j}").into(), (*nu).into()]);
    }
    for (j, nu) in report.fd_multipliers.iter().flatten().enumerate() {
        summary.push(vec![format!("fd_multiplier_{j}").into(), (*nu).into()]);
    }
    Ok(ScenarioOutput::ok(vec![deviations, summary]))
}

fn distance_rows(epsilon: f64, traj: &Trajectory<CVector>, target: &Trajectory<CVector>) -> Vec<Vec<Cell>> {
    traj.times
        .iter()
        .zip(&traj.states)
        .zip(&target.states)
        .map(|((&t, a), b)| vec![epsilon.into(), t.into(), (a - b).norm().into()])
        .collect()
}

fn epsilon_soliton_scenario(config: &ExperimentConfig) -> Result<ScenarioOutput, CliError> {
    let (problem, grid) = soliton_problem(config)?;
    let mut eps = config.run.epsilon_list()?;
    eps.sort_by(|a, b| b.total_cmp(a));
    let target = problem.soliton_trajectory(&grid)?;
    let per_eps = eps
        .par_iter()
        .map(|&e| epsilon_soliton(&problem, e, &grid).map(|traj| distance_rows(e, &traj, &target)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut table = ResultTable::new("distance", &["epsilon", "t", "distance"]);
    for row in per_eps.into_iter().flatten() {
        table.push(row);
    }
    Ok(ScenarioOutput::ok(vec![table]))
}
