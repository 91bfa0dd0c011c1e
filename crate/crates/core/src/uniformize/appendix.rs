use rand::Rng;

use super::functional::{
    functional_jordan_expansion, functional_poisson_expansion, tensor_jordan, tensor_poisson, uniformized_jordan,
    uniformized_poisson, PolyFunctional, Storage,
};
use crate::algebra::{HamiltonianFunctionalSpec, StateDensity};
use crate::random;
use crate::tensor::{contract_matrix, kron_power, CMatrix, Metric, C64};
use crate::{Error, Result};

/// Largest residuals seen by [`appendix_identity_suite`], per identity.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AppendixReport {
    pub d: usize,
    pub n_max: usize,
    pub trials: usize,
    /// `⟨ρ^⊗n, (I+εH)^⊗n · (I+εA)^⊗n⟩ = ⟨ρ, (I+εH)·(I+εA)⟩^n`.
    pub power_contraction: f64,
    /// `⟨ρ^⊗n, {(I+εH)^⊗n, (I+εA)^⊗n}⟩ = n⟨ρ, (I+εH)·(I+εA)⟩^(n−1) ⟨ρ, {εH, εA}⟩`.
    pub bracket_contraction: f64,
    /// Functional-side Jordan expansion against componentwise products.
    pub jordan_product: f64,
    /// Functional-side bracket expansion against componentwise brackets.
    pub poisson_product: f64,
    pub failures: Vec<String>,
}

impl AppendixReport {
    pub fn max_residual(&self) -> f64 {
        [self.power_contraction, self.bracket_contraction, self.jordan_product, self.poisson_product]
            .into_iter()
            .fold(0.0, f64::max)
    }

    pub fn passed(&self, tol: f64) -> bool {
        self.failures.is_empty() && self.max_residual() <= tol
    }
}

fn relative(lhs: C64, rhs: C64) -> f64 {
    (lhs - rhs).norm() / rhs.norm().max(1.0)
}

fn power_pairing(rho: &CMatrix, x: &CMatrix, n: usize) -> C64 {
    contract_matrix(x, rho.nrows(), &vec![rho.clone(); n])[(0, 0)]
}

fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    (a * b).trace()
}

/// A random metric-Hermitian density with `⟨ρ, I⟩ = 0`, on which representing
/// functionals of finite degree are evaluated without truncation error.
pub fn traceless_density<R: Rng>(rng: &mut R, d: usize) -> CMatrix {
    let mut r = random::hermitian(rng, d);
    let shift = r.trace() / C64::new(d as f64, 0.0);
    for i in 0..d {
        r[(i, i)] -= shift;
    }
    r
}

/// A random functional of the given degree with permutation-symmetric Hermitian terms.
pub fn random_spec<R: Rng>(rng: &mut R, metric: &Metric, degree: usize) -> HamiltonianFunctionalSpec {
    let terms = (1..=degree).map(|m| random::symmetric_interaction(rng, metric, m)).collect();
    HamiltonianFunctionalSpec::quantum(metric.clone(), terms).expect("random terms are valid")
}

/// Check the contraction identities for tensor powers and the exponential-form
/// products of representing functionals on seeded random inputs.
pub fn appendix_identity_suite(d: usize, n_max: usize, trials: usize, seed: u64) -> Result<AppendixReport> {
    if d == 0 || d > 3 || n_max == 0 || n_max > 4 {
        return Err(Error::InvalidArgument(format!(
            "suite runs at 1 ≤ d ≤ 3 and 1 ≤ n_max ≤ 4, got d={d}, n_max={n_max}"
        )));
    }
    let mut rng = random::rng(seed);
    let metric = Metric::identity(d);
    let id = CMatrix::identity(d, d);
    let mut report = AppendixReport { d, n_max, trials, ..Default::default() };
    for trial in 0..trials {
        let eps: f64 = rng.gen_range(0.1..1.0);
        let h = random::hermitian(&mut rng, d);
        let a = random::hermitian(&mut rng, d);
        let rho = random::hermitian(&mut rng, d);
        let one_h = &id + h.scale(eps);
        let one_a = &id + a.scale(eps);
        let single_jordan = trace_product(&rho, &(&one_h * &one_a + &one_a * &one_h).scale(0.5));
        let single_bracket = trace_product(&rho, &((&h * &a - &a * &h) * C64::new(0.0, eps * eps)));
        for n in 1..=n_max {
            let x = kron_power(&one_h, n)?;
            let y = kron_power(&one_a, n)?;
            let lhs = power_pairing(&rho, &tensor_jordan(&x, &y, d, n), n);
            let rhs = single_jordan.powi(n as i32);
            report.power_contraction = report.power_contraction.max(relative(lhs, rhs));
            let lhs = power_pairing(&rho, &tensor_poisson(&x, &y, d, n), n);
            let rhs = single_jordan.powi(n as i32 - 1) * single_bracket * n as f64;
            report.bracket_contraction = report.bracket_contraction.max(relative(lhs, rhs));
        }

        if n_max >= 2 {
            let dg = rng.gen_range(1..n_max.min(4));
            let da = rng.gen_range(1..=(n_max - dg).min(3));
            let gamma = random_spec(&mut rng, &metric, dg);
            let alpha = random_spec(&mut rng, &metric, da);
            let state = StateDensity::quantum(&metric, traceless_density(&mut rng, d))?;
            let f = PolyFunctional::from_spec(&gamma, eps, n_max, Storage::Full)?;
            let g = PolyFunctional::from_spec(&alpha, eps, n_max, Storage::Full)?;
            let direct = uniformized_jordan(&f, &g)?.eval(&state)?;
            let expanded = functional_jordan_expansion(&gamma, &alpha, &state, eps)?;
            let r = relative(direct, expanded);
            report.jordan_product = report.jordan_product.max(r);
            let direct = uniformized_poisson(&f, &g)?.eval(&state)?;
            let expanded = functional_poisson_expansion(&gamma, &alpha, &state, eps)?;
            let r2 = relative(direct, expanded);
            report.poisson_product = report.poisson_product.max(r2);
            if !(r.is_finite() && r2.is_finite()) {
                report.failures.push(format!("trial {trial}: non-finite product residual"));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_slot_power_contraction() {
        let mut rng = random::rng(11);
        let h = random::hermitian(&mut rng, 2);
        let a = random::hermitian(&mut rng, 2);
        let rho = random::hermitian(&mut rng, 2);
        let eps = 0.37;
        let id = CMatrix::identity(2, 2);
        let x = &id + h.scale(eps);
        let y = &id + a.scale(eps);
        let lhs = power_pairing(&rho, &tensor_jordan(&x, &y, 2, 1), 1);
        let ha = (&h * &a + &a * &h).scale(0.5);
        let rhs = trace_product(&rho, &(&id + a.scale(eps) + h.scale(eps) + ha.scale(eps * eps)));
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn two_slot_bracket_contraction_closed_form() {
        let mut rng = random::rng(12);
        let h = random::hermitian(&mut rng, 2);
        let a = random::hermitian(&mut rng, 2);
        let rho = random::hermitian(&mut rng, 2);
        let eps = 0.6;
        let id = CMatrix::identity(2, 2);
        let x = &id + h.scale(eps);
        let y = &id + a.scale(eps);
        let lhs =
            power_pairing(&rho, &tensor_poisson(&kron_power(&x, 2).unwrap(), &kron_power(&y, 2).unwrap(), 2, 2), 2);
        let jordan = trace_product(&rho, &(&x * &y + &y * &x).scale(0.5));
        let bracket = trace_product(&rho, &((&h * &a - &a * &h) * C64::new(0.0, eps * eps)));
        assert!((lhs - jordan * bracket * 2.0).norm() < 1e-13);
    }

    #[test]
    fn small_suite_passes() {
        let report = appendix_identity_suite(2, 3, 5, 7).unwrap();
        assert!(report.passed(1e-9), "{report:?}");
        assert!(appendix_identity_suite(4, 3, 1, 0).is_err());
    }
}
