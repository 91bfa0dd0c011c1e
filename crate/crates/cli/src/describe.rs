//! Pre-run summary: sector sizes, memory, Poisson tail and full-power policy.

use std::fmt::Write;

use uniformize_core::meanfield::{poisson_tail, TAIL_GUARD};
use uniformize_core::tensor::{sector_dim, Sector, FULL_POWER_DIM_CAP};

use crate::config::{ExperimentConfig, ModelConfig, StorageConfig};
use crate::CliError;

const COMPLEX_BYTES: usize = 16;

fn human_bytes(bytes: f64) -> String {
    let units = ["B", "KiB", "MiB", "GiB", "TiB"];
    let mut v = bytes;
    let mut unit = 0;
    while v >= 1024.0 && unit + 1 < units.len() {
        v /= 1024.0;
        unit += 1;
    }
    format!("{v:.2} {}", units[unit])
}

/// Highest particle number the run touches.
fn top_sector(config: &ExperimentConfig) -> Option<usize> {
    let run = &config.run;
    run.n_max.or(run.n).or_else(|| run.ns.iter().max().map(|n| n + 1))
}

pub fn describe(config: &ExperimentConfig) -> Result<String, CliError> {
    let mut out = String::new();
    writeln!(out, "scenario: {}", config.scenario.name()).unwrap();
    let Some(model) = config.model.as_ref() else {
        writeln!(out, "model: none (built-in random trials)").unwrap();
        return Ok(out);
    };
    let spec = config.spec()?;
    if let ModelConfig::Classical { grid, .. } = model {
        let g = grid.build()?;
        let points = g.n_q * g.n_p;
        let stored = config.run.time_grid()?.steps() / config.run.store_every.max(1) + 2;
        writeln!(out, "model: classical, grid {} × {} ({points} points)", g.n_q, g.n_p).unwrap();
        writeln!(
            out,
            "memory estimate: {} per field, {} for {stored} stored states",
            human_bytes((points * 8) as f64),
            human_bytes((points * 8 * stored) as f64)
        )
        .unwrap();
        return Ok(out);
    }
    let d = model.d().expect("quantum models have a dimension");
    let metric = spec.metric().expect("quantum model");
    writeln!(
        out,
        "model: quantum, d = {d}, degree {}, metric {}",
        spec.degree(),
        if metric.is_identity() { "identity".to_string() } else { format!("{:?}", metric.diagonal().unwrap_or(&[])) }
    )
    .unwrap();
    let Some(n_top) = top_sector(config) else {
        writeln!(out, "no particle-number range in run (set n_max, n or ns)").unwrap();
        return Ok(out);
    };
    let parity = config.run.parity.parity();
    let sector = parity.sector();
    let dims: Vec<usize> = (0..=n_top).map(|n| sector_dim(d, n, sector)).collect();
    let label = match sector {
        Sector::Symmetric => "+",
        _ => "-",
    };
    writeln!(
        out,
        "sector dimensions ({label}), n = 0..{n_top}: {}",
        dims.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
    )
    .unwrap();
    writeln!(out, "total: {}", dims.iter().sum::<usize>()).unwrap();
    let sector_bytes: f64 = dims.iter().map(|&v| (v * v * COMPLEX_BYTES) as f64).sum();
    writeln!(out, "memory estimate: {} (one dense complex matrix per sector)", human_bytes(sector_bytes)).unwrap();
    let full = (d as f64).powi(n_top as i32);
    if config.run.storage == StorageConfig::Full {
        if full > FULL_POWER_DIM_CAP as f64 {
            writeln!(
                out,
                "full power refused: {d}^{n_top} = {full} exceeds the full-sector cap of {FULL_POWER_DIM_CAP}; the {} sector (dimension {}) is allowed",
                if sector == Sector::Symmetric { "symmetric" } else { "antisymmetric" },
                dims[n_top]
            )
            .unwrap();
        } else {
            writeln!(out, "full power: {d}^{n_top} = {full} (cap {FULL_POWER_DIM_CAP})").unwrap();
        }
    }
    let mut eps: Vec<f64> = config.run.epsilon.into_iter().chain(config.run.epsilon_list.iter().copied()).collect();
    eps.sort_by(|a, b| b.total_cmp(a));
    eps.dedup();
    if let (Some(psi), Some(n_max)) = (config.initial.as_ref().and_then(|i| i.psi.as_ref()), config.run.n_max) {
        let phi = crate::config::complex_vector(psi)?;
        if phi.len() == d {
            let j = metric.matrix();
            let norm2 = phi.dotc(&(j * &phi)).re.abs();
            for e in eps {
                let tail = poisson_tail(norm2 / e, n_max);
                let flag = if tail > TAIL_GUARD { " (exceeds guard)" } else { "" };
                writeln!(
                    out,
                    "poisson tail beyond n_max = {n_max} at epsilon = {e}, |phi|^2 = {norm2}: {tail:.6e}{flag}"
                )
                .unwrap();
            }
        }
    }
    Ok(out)
}
