//! JSON experiment configuration and its validation into core objects.

use serde::{Deserialize, Serialize};
use uniformize_core::algebra::{Field, GridSpec, HamiltonianFunctionalSpec, Modulation};
use uniformize_core::dynamics::TimeGrid;
use uniformize_core::tensor::{CMatrix, CVector, Metric, Parity, Tolerances, C64};
use uniformize_core::uniformize::build_lattice_hartree;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    AlgebraVerify,
    Hartree,
    VlasovQuantum,
    VlasovClassical,
    Uniformized,
    EpsilonConvergence,
    Gap,
    Soliton,
    EpsilonSoliton,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::AlgebraVerify => "algebra-verify",
            Scenario::Hartree => "hartree",
            Scenario::VlasovQuantum => "vlasov-quantum",
            Scenario::VlasovClassical => "vlasov-classical",
            Scenario::Uniformized => "uniformized",
            Scenario::EpsilonConvergence => "epsilon-convergence",
            Scenario::Gap => "gap",
            Scenario::Soliton => "soliton",
            Scenario::EpsilonSoliton => "epsilon-soliton",
        }
    }
}

/// A complex number as `[re, im]`.
pub type ComplexValue = [f64; 2];
/// A complex matrix as rows of `[re, im]` pairs.
pub type ComplexMatrix = Vec<Vec<ComplexValue>>;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub initial: Option<InitialConfig>,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    /// `W¹, W², …` given explicitly; `metric` is the signature of a diagonal `J`.
    Quantum {
        #[serde(default)]
        metric: Option<Vec<f64>>,
        terms: Vec<ComplexMatrix>,
        #[serde(default)]
        modulation: Vec<ModulationConfig>,
    },
    /// Periodic ring with nearest-neighbour hopping and on-site coupling `g`.
    Lattice {
        sites: usize,
        hopping: f64,
        coupling: f64,
        #[serde(default)]
        onsite: f64,
    },
    /// Phase-space model: one-body field on the grid, optional q-only pair kernel.
    Classical {
        grid: GridConfig,
        one_body: Vec<Vec<f64>>,
        #[serde(default)]
        pair: Option<Vec<Vec<f64>>>,
    },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulationConfig {
    /// Degree `m` of the modulated term (1-based).
    pub term: usize,
    pub amplitude: f64,
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    #[serde(default)]
    pub periodic: bool,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub q: AxisConfig,
    pub p: AxisConfig,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default)]
    pub psi: Option<Vec<ComplexValue>>,
    #[serde(default)]
    pub rho: Option<ComplexMatrix>,
    #[serde(default)]
    pub field: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParityConfig {
    #[default]
    Boson,
    Fermion,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StorageConfig {
    #[default]
    Sector,
    Full,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileConfig {
    #[default]
    MeanField,
    Sectors,
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    #[serde(default)]
    pub hermiticity: Option<f64>,
    #[serde(default)]
    pub commutation: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub t0: f64,
    #[serde(default = "default_t1")]
    pub t1: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_store_every")]
    pub store_every: usize,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub epsilon_list: Vec<f64>,
    #[serde(default)]
    pub n_max: Option<usize>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub ns: Vec<usize>,
    #[serde(default)]
    pub nu: Option<f64>,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub parity: ParityConfig,
    #[serde(default)]
    pub storage: StorageConfig,
    #[serde(default)]
    pub integrals: Vec<ComplexMatrix>,
    #[serde(default)]
    pub targets: Vec<f64>,
    #[serde(default)]
    pub profile: ProfileConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
}

fn default_t1() -> f64 {
    1.0
}

fn default_dt() -> f64 {
    1e-3
}

fn default_store_every() -> usize {
    1
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("every run field has a default")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default)]
    pub format: Option<Format>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn complex(v: &ComplexValue) -> Result<C64, CliError> {
    if !(v[0].is_finite() && v[1].is_finite()) {
        return Err(invalid("complex entries must be finite"));
    }
    Ok(C64::new(v[0], v[1]))
}

pub fn complex_matrix(m: &ComplexMatrix, what: &str) -> Result<CMatrix, CliError> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    if rows == 0 || m.iter().any(|r| r.len() != cols) {
        return Err(invalid(format!("{what}: expected a non-empty rectangular matrix")));
    }
    let mut out = CMatrix::zeros(rows, cols);
    for (i, row) in m.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            out[(i, j)] = complex(v)?;
        }
    }
    Ok(out)
}

pub fn complex_vector(v: &[ComplexValue]) -> Result<CVector, CliError> {
    if v.is_empty() {
        return Err(invalid("initial state must not be empty"));
    }
    Ok(CVector::from_iterator(v.len(), v.iter().map(complex).collect::<Result<Vec<_>, _>>()?))
}

fn real_matrix(m: &[Vec<f64>], rows: usize, cols: usize, what: &str) -> Result<Field, CliError> {
    if m.len() != rows || m.iter().any(|r| r.len() != cols) {
        return Err(invalid(format!("{what}: expected {rows} × {cols} values")));
    }
    if m.iter().flatten().any(|v| !v.is_finite()) {
        return Err(invalid(format!("{what}: values must be finite")));
    }
    Ok(Field::from_fn(rows, cols, |i, j| m[i][j]))
}

impl GridConfig {
    pub fn build(&self) -> Result<GridSpec, CliError> {
        let axis = |a: &AxisConfig| (a.min, a.max, a.points, a.periodic);
        Ok(GridSpec::new(axis(&self.q), axis(&self.p))?)
    }
}

impl ParityConfig {
    pub fn parity(self) -> Parity {
        match self {
            ParityConfig::Boson => Parity::Boson,
            ParityConfig::Fermion => Parity::Fermion,
        }
    }
}

impl RunConfig {
    pub fn time_grid(&self) -> Result<TimeGrid, CliError> {
        Ok(TimeGrid::new(self.t0, self.t1, self.dt, self.store_every)?)
    }

    pub fn tolerances(&self) -> Result<Tolerances, CliError> {
        let mut tol = Tolerances::default();
        for (slot, value) in
            [(&mut tol.hermiticity, self.tolerances.hermiticity), (&mut tol.commutation, self.tolerances.commutation)]
        {
            if let Some(v) = value {
                if !(v.is_finite() && v > 0.0) {
                    return Err(invalid(format!("tolerances must be positive, got {v}")));
                }
                *slot = v;
            }
        }
        Ok(tol)
    }

    pub fn require_epsilon(&self) -> Result<f64, CliError> {
        self.epsilon.ok_or_else(|| invalid("run.epsilon is required"))
    }

    pub fn require_n_max(&self) -> Result<usize, CliError> {
        self.n_max.ok_or_else(|| invalid("run.n_max is required"))
    }

    pub fn require_nu(&self) -> Result<f64, CliError> {
        self.nu.ok_or_else(|| invalid("run.nu is required"))
    }

    pub fn epsilon_list(&self) -> Result<Vec<f64>, CliError> {
        if self.epsilon_list.is_empty() {
            return Err(invalid("run.epsilon_list must not be empty"));
        }
        if self.epsilon_list.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(invalid("run.epsilon_list entries must be positive"));
        }
        Ok(self.epsilon_list.clone())
    }
}

impl ModelConfig {
    /// Build the functional, checking Hermiticity and slot symmetry of every term.
    pub fn build(&self, tol: &Tolerances) -> Result<HamiltonianFunctionalSpec, CliError> {
        match self {
            ModelConfig::Quantum { metric, terms, modulation } => {
                let w = terms
                    .iter()
                    .enumerate()
                    .map(|(m, t)| complex_matrix(t, &format!("model.terms[{m}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                let d = w.first().map(|m| m.nrows()).ok_or_else(|| invalid("model.terms must not be empty"))?;
                let metric = match metric {
                    Some(signs) => Metric::signature(signs)?,
                    None => Metric::identity(d),
                };
                let mut spec = HamiltonianFunctionalSpec::quantum_with(metric, w, tol)?;
                for m in modulation {
                    let modulation =
                        Modulation::Harmonic { amplitude: m.amplitude, frequency: m.frequency, phase: m.phase };
                    spec = spec.with_modulation(m.term, modulation)?;
                }
                Ok(spec)
            }
            ModelConfig::Lattice { sites, hopping, coupling, onsite } => Ok(build_lattice_hartree(
                *sites,
                *hopping,
                &uniformize_core::uniformize::onsite_kernel(*sites, *coupling),
                *onsite,
            )?),
            ModelConfig::Classical { grid, one_body, pair } => {
                let g = grid.build()?;
                let field: Field = real_matrix(one_body, g.n_q, g.n_p, "model.one_body")?;
                let kernel = pair.as_ref().map(|k| real_matrix(k, g.n_q, g.n_q, "model.pair")).transpose()?;
                Ok(HamiltonianFunctionalSpec::classical(g, field, kernel)?)
            }
        }
    }

    pub fn d(&self) -> Option<usize> {
        match self {
            ModelConfig::Quantum { terms, .. } => terms.first().map(Vec::len),
            ModelConfig::Lattice { sites, .. } => Some(*sites),
            ModelConfig::Classical { .. } => None,
        }
    }
}

impl InitialConfig {
    pub fn psi(&self) -> Result<CVector, CliError> {
        complex_vector(self.psi.as_deref().ok_or_else(|| invalid("initial.psi is required"))?)
    }

    pub fn field(&self, grid: &GridSpec) -> Result<Field, CliError> {
        let f = self.field.as_ref().ok_or_else(|| invalid("initial.field is required"))?;
        real_matrix(f, grid.n_q, grid.n_p, "initial.field")
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<(Self, serde_json::Value), CliError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| invalid(format!("config is not valid JSON: {e}")))?;
        let config: Self = serde_json::from_value(value.clone())
            .map_err(|e| invalid(format!("config does not match the schema: {e}")))?;
        Ok((config, value))
    }

    pub fn model(&self) -> Result<&ModelConfig, CliError> {
        self.model.as_ref().ok_or_else(|| invalid(format!("scenario {} needs a model", self.scenario.name())))
    }

    pub fn initial(&self) -> Result<&InitialConfig, CliError> {
        self.initial
            .as_ref()
            .ok_or_else(|| invalid(format!("scenario {} needs an initial state", self.scenario.name())))
    }

    pub fn spec(&self) -> Result<HamiltonianFunctionalSpec, CliError> {
        self.model()?.build(&self.run.tolerances()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
        ExperimentConfig::parse(text).map(|(c, _)| c)
    }

    #[test]
    fn rejects_unknown_fields_and_bad_json() {
        assert!(matches!(parse(r#"{"scenario": "gap", "extra": 1}"#), Err(CliError::Validation(_))));
        assert!(matches!(parse(r#"{"scenario": "nope"}"#), Err(CliError::Validation(_))));
        assert!(matches!(parse("{"), Err(CliError::Validation(_))));
    }

    #[test]
    fn non_hermitian_term_fails_validation() {
        let c = parse(
            r#"{"scenario": "hartree", "model": {"kind": "quantum", "terms": [[[[1,0],[1,0]],[[0,0],[-1,0]]]]}}"#,
        )
        .unwrap();
        assert!(matches!(c.spec(), Err(CliError::Validation(_))));
    }

    #[test]
    fn indefinite_metric_accepts_pseudo_hermitian_terms() {
        // J W is Hermitian for W = [[1, 1], [-1, 2]] under J = diag(1, -1).
        let c = parse(
            r#"{"scenario": "hartree", "model": {"kind": "quantum", "metric": [1, -1],
                "terms": [[[[1,0],[1,0]],[[-1,0],[2,0]]]]}}"#,
        )
        .unwrap();
        assert!(c.spec().is_ok());
    }

    #[test]
    fn run_defaults_and_checks() {
        let run = RunConfig::default();
        assert_eq!((run.t0, run.t1, run.dt, run.store_every), (0.0, 1.0, 1e-3, 1));
        assert!(run.require_epsilon().is_err());
        let bad = RunConfig { epsilon_list: vec![0.5, -0.1], ..RunConfig::default() };
        assert!(bad.epsilon_list().is_err());
        let tol = RunConfig { tolerances: ToleranceConfig { hermiticity: Some(0.0), commutation: None }, ..run };
        assert!(tol.tolerances().is_err());
    }

    #[test]
    fn complex_inputs() {
        let m = complex_matrix(&vec![vec![[1.0, 2.0], [0.0, -1.0]]], "m").unwrap();
        assert_eq!(m[(0, 0)], C64::new(1.0, 2.0));
        assert!(complex_matrix(&vec![vec![[1.0, 0.0]], vec![]], "m").is_err());
        assert!(complex_vector(&[[f64::NAN, 0.0]]).is_err());
        assert!(complex_vector(&[]).is_err());
    }

    #[test]
    fn lattice_and_classical_models_build() {
        let c = parse(r#"{"scenario": "gap", "model": {"kind": "lattice", "sites": 4, "hopping": 1, "coupling": -2}}"#)
            .unwrap();
        assert_eq!(c.spec().unwrap().d(), Some(4));
        let row = format!("[{}]", vec!["0"; 8].join(","));
        let field = format!("[{}]", vec![row; 8].join(","));
        let c = parse(&format!(
            r#"{{"scenario": "vlasov-classical", "model": {{"kind": "classical",
                "grid": {{"q": {{"min": -1, "max": 1, "points": 8, "periodic": true}}, "p": {{"min": -1, "max": 1, "points": 8}}}},
                "one_body": {field}}}}}"#
        ))
        .unwrap();
        assert!(c.spec().is_ok());
    }
}
