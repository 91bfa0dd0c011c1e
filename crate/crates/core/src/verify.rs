//! Seeded property suites over the algebra and its uniformization, with a
//! flat pass/fail summary used by the command-line `verify`.

use rand::Rng;

use crate::algebra::{
    classical_bracket_functionals, gamma_eval_complex, jordan, pairing, poisson, vlasov_hamiltonian, Element, Field,
    GridSpec, HamiltonianFunctionalSpec, Realization, StateDensity,
};
use crate::dynamics::{classical_vlasov_evolve, vlasov_evolve_density, TimeGrid};
use crate::random;
use crate::tensor::{max_abs, CMatrix, Metric, Operator, Parity, C64};
use crate::uniformize::{
    appendix_identity_suite, number_observable, random_spec, traceless_density, uniformized_poisson, AppendixReport,
    FockTruncation, PolyFunctional, Storage,
};
use crate::{Error, Result};

pub const DEFAULT_SEED: u64 = 42;
pub const DERIVATIVE_STEP: f64 = 1e-5;

/// Worst residuals of the algebra laws over seeded draws.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AlgebraReport {
    pub draws: usize,
    /// Quantum derivation law, max entry.
    pub derivation: f64,
    /// Classical derivation defect on periodic grids of 32² and 64² points.
    pub derivation_classical: (f64, f64),
    /// Element-level `{H,A} + {A,H}` in both realizations.
    pub antisymmetry: f64,
    /// `|{γ,α}(ρ) + {α,γ}(ρ)|`, `|{γ,γ}(ρ)|` and `|{γ,ν}(ρ)|`.
    pub functional_antisymmetry: f64,
    /// Relative error of `⟨σ, H(ρ)⟩` against a centered difference of `γ`.
    pub derivative_identity: f64,
    /// Largest drift of `⟨ρ(t), I⟩` along von Neumann trajectories.
    pub conservation: f64,
    /// Mass drift of a phase-space blob under harmonic rotation.
    pub conservation_classical: f64,
}

impl AlgebraReport {
    /// Observed order of the classical derivation defect under grid doubling.
    pub fn classical_order(&self) -> f64 {
        (self.derivation_classical.0 / self.derivation_classical.1).log2()
    }
}

fn periodic_grid(n: usize) -> Result<GridSpec> {
    let two_pi = 2.0 * std::f64::consts::PI;
    GridSpec::new((0.0, two_pi, n, true), (0.0, two_pi, n, true))
}

fn classical_derivation_defect(n: usize) -> Result<f64> {
    let grid = periodic_grid(n)?;
    let realization = Realization::classical(grid);
    let field = |f: &dyn Fn(f64, f64) -> f64| Element::Classical(grid.sample(f));
    let h = field(&|q, p| q.sin() * p.cos() + 0.5 * (2.0 * q).cos());
    let a = field(&|q, p| (q + p).cos());
    let b = field(&|q, p| (2.0 * p).sin() + q.cos());
    let lhs = poisson(&realization, &h, &jordan(&realization, &a, &b)?)?;
    let rhs = jordan(&realization, &a, &poisson(&realization, &h, &b)?)?.add(&jordan(
        &realization,
        &poisson(&realization, &h, &a)?,
        &b,
    )?)?;
    let defect = lhs.sub(&rhs)?;
    Ok(defect.as_field().expect("classical").amax())
}

fn quantum_element(m: CMatrix) -> Element {
    Element::Quantum(m)
}

/// Derivation law, antisymmetry, the derivative identity and conservation of
/// `⟨ρ, I⟩`, over `draws` random inputs at `d ≤ 3` and degree `≤ 3`.
pub fn algebra_suite(draws: usize, seed: u64) -> Result<AlgebraReport> {
    let mut rng = random::rng(seed);
    let mut report = AlgebraReport { draws, ..Default::default() };
    for _ in 0..draws {
        let d = rng.gen_range(1..=3);
        let degree = rng.gen_range(1..=3);
        let metric = Metric::identity(d);
        let realization = Realization::quantum(d);
        let h = quantum_element(random::hermitian(&mut rng, d));
        let a = quantum_element(random::hermitian(&mut rng, d));
        let b = quantum_element(random::hermitian(&mut rng, d));
        let lhs = poisson(&realization, &h, &jordan(&realization, &a, &b)?)?;
        let rhs = jordan(&realization, &a, &poisson(&realization, &h, &b)?)?.add(&jordan(
            &realization,
            &poisson(&realization, &h, &a)?,
            &b,
        )?)?;
        report.derivation = report.derivation.max(max_abs(lhs.sub(&rhs)?.as_matrix().expect("quantum")));
        let swap = poisson(&realization, &h, &a)?.add(&poisson(&realization, &a, &h)?)?;
        report.antisymmetry = report.antisymmetry.max(max_abs(swap.as_matrix().expect("quantum")));

        let gamma = random_spec(&mut rng, &metric, degree);
        let alpha_degree = rng.gen_range(1..=3);
        let alpha = random_spec(&mut rng, &metric, alpha_degree);
        let nu = HamiltonianFunctionalSpec::quantum(metric.clone(), vec![CMatrix::identity(d, d)])?;
        let rho = StateDensity::quantum(&metric, random::hermitian(&mut rng, d))?;
        let ga = classical_bracket_functionals(&gamma, &alpha, &rho, 0.0)?;
        let ag = classical_bracket_functionals(&alpha, &gamma, &rho, 0.0)?;
        let gg = classical_bracket_functionals(&gamma, &gamma, &rho, 0.0)?;
        let gn = classical_bracket_functionals(&gamma, &nu, &rho, 0.0)?;
        report.functional_antisymmetry =
            report.functional_antisymmetry.max((ga + ag).norm()).max(gg.norm()).max(gn.norm());

        let sigma = random::hermitian(&mut rng, d);
        let base = rho.matrix().expect("quantum").clone();
        let shifted = |s: f64| StateDensity::quantum(&metric, &base + sigma.scale(s));
        let fd = (gamma_eval_complex(&gamma, &shifted(DERIVATIVE_STEP)?, 0.0)?
            - gamma_eval_complex(&gamma, &shifted(-DERIVATIVE_STEP)?, 0.0)?)
            / (2.0 * DERIVATIVE_STEP);
        let exact = pairing(&StateDensity::quantum(&metric, sigma.clone())?, &vlasov_hamiltonian(&gamma, &rho, 0.0)?)?;
        report.derivative_identity = report.derivative_identity.max((fd - exact).norm() / exact.norm());

        let start = StateDensity::quantum(&metric, random::density(&mut rng, &metric))?;
        let traj = vlasov_evolve_density(&gamma, &start, &TimeGrid::new(0.0, 0.5, 0.01, 10)?)?;
        report.conservation = report.conservation.max(traj.max_norm_drift());
    }

    let grid = periodic_grid(32)?;
    let realization = Realization::classical(grid);
    let h = Element::Classical(grid.sample(|q, p| q.sin() * p.cos()));
    let a = Element::Classical(grid.sample(|q, p| (q - 2.0 * p).cos()));
    let swap = poisson(&realization, &h, &a)?.add(&poisson(&realization, &a, &h)?)?;
    report.antisymmetry = report.antisymmetry.max(swap.as_field().expect("classical").amax());
    report.derivation_classical = (classical_derivation_defect(32)?, classical_derivation_defect(64)?);

    let open = GridSpec::new((-6.0, 6.0, 96, false), (-6.0, 6.0, 96, false))?;
    let spec = HamiltonianFunctionalSpec::classical(open, open.sample(|q, p| 0.5 * (q * q + p * p)), None)?;
    let blob: Field = open.sample(|q, p| (-2.0 * ((q - 1.5).powi(2) + p * p)).exp());
    let traj = classical_vlasov_evolve(&spec, &blob, &TimeGrid::new(0.0, 1.0, 0.01, 10)?)?;
    report.conservation_classical = traj.max_norm_drift();
    Ok(report)
}

/// Worst sector-wise residual of `i[n̂(H), n̂(A)] = n̂(i[H, A])`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CommutationReport {
    pub d: usize,
    pub n_max: usize,
    pub pairs: usize,
    pub max_residual: f64,
}

pub fn commutation_suite(d: usize, n_max: usize, pairs: usize, seed: u64) -> Result<CommutationReport> {
    let mut rng = random::rng(seed);
    let metric = Metric::identity(d);
    let mut max_residual: f64 = 0.0;
    for parity in [Parity::Boson, Parity::Fermion] {
        let fock = FockTruncation::new(metric.clone(), parity, n_max);
        for _ in 0..pairs {
            let h = random::hermitian(&mut rng, d);
            let a = random::hermitian(&mut rng, d);
            let bracket = (&h * &a - &a * &h) * C64::new(0.0, 1.0);
            let nh = number_observable(&Operator::single(h)?, &fock)?;
            let na = number_observable(&Operator::single(a)?, &fock)?;
            let lhs = nh.commutator(&na)?.scale(C64::new(0.0, 1.0));
            let rhs = number_observable(&Operator::single(bracket)?, &fock)?;
            max_residual = max_residual.max(lhs.sub(&rhs)?.max_abs());
        }
    }
    Ok(CommutationReport { d, n_max, pairs, max_residual })
}

/// Deviation of the uniformized bracket from the classical one at each ε.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalLimit {
    pub epsilons: Vec<f64>,
    /// Worst deviation over the draws, per ε.
    pub deviations: Vec<f64>,
    /// Deviation ratios between successive ε, per draw.
    pub ratios: Vec<f64>,
}

/// Quadratic `γ, α` at `d = 2` on traceless states, where the encoded series is
/// exact, for `ε = eps0, eps0/2, …` (`halvings` times).
pub fn classical_limit_study(eps0: f64, halvings: usize, draws: usize, seed: u64) -> Result<ClassicalLimit> {
    if !(eps0 > 0.0) || halvings == 0 {
        return Err(Error::InvalidArgument("need ε₀ > 0 and at least one halving".into()));
    }
    let mut rng = random::rng(seed);
    let metric = Metric::identity(2);
    let epsilons: Vec<f64> = (0..=halvings).map(|k| eps0 / f64::powi(2.0, k as i32)).collect();
    let mut deviations = vec![0.0f64; epsilons.len()];
    let mut ratios = Vec::new();
    for _ in 0..draws {
        let gamma = random_spec(&mut rng, &metric, 2);
        let alpha = random_spec(&mut rng, &metric, 2);
        let rho = StateDensity::quantum(&metric, traceless_density(&mut rng, 2))?;
        let classical = classical_bracket_functionals(&gamma, &alpha, &rho, 0.0)?;
        let mut devs = Vec::with_capacity(epsilons.len());
        for &eps in &epsilons {
            let f = PolyFunctional::from_spec(&gamma, eps, 4, Storage::Full)?;
            let g = PolyFunctional::from_spec(&alpha, eps, 4, Storage::Full)?;
            devs.push((uniformized_poisson(&f, &g)?.eval(&rho)? - classical).norm());
        }
        for (k, v) in devs.iter().enumerate() {
            deviations[k] = deviations[k].max(*v);
        }
        ratios.extend(devs.windows(2).map(|w| w[0] / w[1]));
    }
    Ok(ClassicalLimit { epsilons, deviations, ratios })
}

/// One line of a verification summary.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub bound: String,
    pub passed: bool,
}

fn at_most(name: &'static str, value: f64, tol: f64) -> Check {
    Check { name, value, bound: format!("<= {tol:e}"), passed: value <= tol }
}

fn within(name: &'static str, value: f64, lo: f64, hi: f64) -> Check {
    Check { name, value, bound: format!("in [{lo}, {hi}]"), passed: (lo..=hi).contains(&value) }
}

/// Results of every suite at the default sizes.
#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub seed: u64,
    pub algebra: AlgebraReport,
    pub appendix: AppendixReport,
    pub commutation: CommutationReport,
    pub classical_limit: ClassicalLimit,
}

impl VerifyReport {
    pub fn checks(&self) -> Vec<Check> {
        let a = &self.algebra;
        let mut out = vec![
            at_most("derivation", a.derivation, 1e-10),
            within("derivation_classical_order", a.classical_order(), 3.5, 5.0),
            at_most("antisymmetry", a.antisymmetry, 1e-12),
            at_most("functional_antisymmetry", a.functional_antisymmetry, 1e-10),
            at_most("derivative_identity", a.derivative_identity, 1e-6),
            at_most("conservation", a.conservation, 1e-9),
            at_most("conservation_classical", a.conservation_classical, 1e-6),
            at_most("appendix_power_contraction", self.appendix.power_contraction, 1e-9),
            at_most("appendix_bracket_contraction", self.appendix.bracket_contraction, 1e-9),
            at_most("appendix_jordan_product", self.appendix.jordan_product, 1e-9),
            at_most("appendix_poisson_product", self.appendix.poisson_product, 1e-9),
            at_most("number_commutation", self.commutation.max_residual, 1e-12),
        ];
        let worst = |f: fn(f64, f64) -> f64, init: f64| self.classical_limit.ratios.iter().copied().fold(init, f);
        out.push(within("classical_limit_min_ratio", worst(f64::min, f64::INFINITY), 1.6, 2.4));
        out.push(within("classical_limit_max_ratio", worst(f64::max, 0.0), 1.6, 2.4));
        out
    }

    pub fn passed(&self) -> bool {
        self.appendix.failures.is_empty() && self.checks().iter().all(|c| c.passed)
    }
}

/// Sizes of each suite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifySizes {
    pub algebra_draws: usize,
    pub appendix_d: usize,
    pub appendix_n_max: usize,
    pub appendix_trials: usize,
    pub commutation_d: usize,
    pub commutation_n_max: usize,
    pub commutation_pairs: usize,
    pub limit_eps0: f64,
    pub limit_halvings: usize,
    pub limit_draws: usize,
}

impl Default for VerifySizes {
    fn default() -> Self {
        Self {
            algebra_draws: 100,
            appendix_d: 2,
            appendix_n_max: 3,
            appendix_trials: 50,
            commutation_d: 2,
            commutation_n_max: 5,
            commutation_pairs: 20,
            limit_eps0: 0.2,
            limit_halvings: 2,
            limit_draws: 5,
        }
    }
}

pub fn verify_with(seed: u64, sizes: &VerifySizes) -> Result<VerifyReport> {
    Ok(VerifyReport {
        seed,
        algebra: algebra_suite(sizes.algebra_draws, seed)?,
        appendix: appendix_identity_suite(sizes.appendix_d, sizes.appendix_n_max, sizes.appendix_trials, seed)?,
        commutation: commutation_suite(sizes.commutation_d, sizes.commutation_n_max, sizes.commutation_pairs, seed)?,
        classical_limit: classical_limit_study(sizes.limit_eps0, sizes.limit_halvings, sizes.limit_draws, seed)?,
    })
}

pub fn verify_all(seed: u64) -> Result<VerifyReport> {
    verify_with(seed, &VerifySizes::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli() -> [CMatrix; 3] {
        let c = |re: f64, im: f64| C64::new(re, im);
        [
            CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]),
            CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]),
            CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]),
        ]
    }

    #[test]
    fn pauli_number_observables() {
        let [x, y, z] = pauli();
        let fock = FockTruncation::new(Metric::identity(2), Parity::Boson, 5);
        let nx = number_observable(&Operator::single(x).unwrap(), &fock).unwrap();
        let ny = number_observable(&Operator::single(y).unwrap(), &fock).unwrap();
        let nz = number_observable(&Operator::single(z).unwrap(), &fock).unwrap();
        let residual = nx.commutator(&ny).unwrap().sub(&nz.scale(C64::new(0.0, 2.0))).unwrap();
        assert!(residual.max_abs() < 1e-12);
    }

    #[test]
    fn algebra_laws_hold() {
        let r = algebra_suite(20, 3).unwrap();
        assert!(r.derivation < 1e-10 && r.antisymmetry < 1e-12 && r.functional_antisymmetry < 1e-10);
        assert!(r.derivative_identity < 1e-6, "{}", r.derivative_identity);
        assert!(r.conservation < 1e-9, "{}", r.conservation);
        assert!(r.conservation_classical < 1e-6, "{}", r.conservation_classical);
        assert!(r.classical_order() > 3.5, "{:?}", r.derivation_classical);
    }

    #[test]
    fn classical_limit_is_first_order() {
        let study = classical_limit_study(0.2, 2, 3, 7).unwrap();
        assert!(study.ratios.iter().all(|r| (1.6..=2.4).contains(r)), "{:?}", study.ratios);
        assert!(study.deviations.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn default_report_passes() {
        let report = verify_all(DEFAULT_SEED).unwrap();
        for c in report.checks() {
            assert!(c.passed, "{} = {:e} not {}", c.name, c.value, c.bound);
        }
    }
}
