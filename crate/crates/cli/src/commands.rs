//! Subcommand bodies. Each writes its artifacts into the output directory
//! plus a `timing.json` sidecar; everything except the sidecar is a pure
//! function of the config and seed.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use phasequant::qdynamics::{compare_classical_quantum, run_evolution, weak_equation_residuals, EvolutionRecord};
use phasequant::quantize::{hermitian_eigenvalues, quantize_closed_form, quantize_grid_route, QuantizedOperator};
use phasequant::symbol::Symbol;
use phasequant::Complex64;
use serde_json::{json, Value};

use crate::config::{Config, HamiltonianKind, MatrixFormat, RouteChoice, RunOutput, SymbolChoice};
use crate::error::CliError;
use crate::output::{sci, write_csv, write_json};
use crate::scenario::{evolution_config, polynomial, Hamiltonian, Scenario};
use crate::verify::{needs_seed, resolve_suites, run_suites};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Verify,
    Evolve,
    Spectrum,
    Quantize,
    Compare,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Verify => "verify",
            Self::Evolve => "evolve",
            Self::Spectrum => "spectrum",
            Self::Quantize => "quantize",
            Self::Compare => "compare",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config: PathBuf,
    pub out: PathBuf,
    /// `--suite` values; empty means the config's selection (or all).
    pub suites: Vec<String>,
    pub seed: Option<u64>,
}

/// What a finished command reports back to the terminal.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub success: bool,
    pub message: String,
}

pub fn execute(inv: &Invocation) -> Result<Outcome, CliError> {
    let config = Config::load(&inv.config)?;
    let start = Instant::now();
    let scenario = Scenario::build(config)?;
    fs::create_dir_all(&inv.out)?;
    let outcome = match inv.command {
        Command::Verify => verify(&scenario, inv)?,
        Command::Evolve => evolve(&scenario, inv)?,
        Command::Spectrum => spectrum(&scenario, inv)?,
        Command::Quantize => quantize(&scenario, inv)?,
        Command::Compare => compare(&scenario, inv)?,
    };
    let timing = json!({ "command": inv.command.name(), "wall_seconds": start.elapsed().as_secs_f64() });
    write_json(&inv.out.join("timing.json"), &timing)?;
    Ok(outcome)
}

fn header(sc: &Scenario, command: Command, seed: Option<u64>) -> Value {
    json!({
        "command": command.name(),
        "library_version": phasequant::VERSION,
        "seed": seed,
        "scenario": serde_json::to_value(&sc.config).expect("config serializes"),
    })
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(b), Value::Object(e)) = (&mut base, extra) {
        b.extend(e);
    }
    base
}

fn constants_json(h: &Hamiltonian) -> Value {
    let c = &h.constants;
    json!({ "e0": c.e0, "e1": c.e1, "chi2": c.chi2, "eta2": c.eta2, "lambda": c.lambda, "mass": c.mass, "omega": c.omega })
}

fn verify(sc: &Scenario, inv: &Invocation) -> Result<Outcome, CliError> {
    let section = sc.config.verify.as_ref();
    let requested: Vec<String> = if !inv.suites.is_empty() {
        inv.suites.clone()
    } else {
        section.and_then(|v| v.suites.clone()).unwrap_or_else(|| vec!["all".into()])
    };
    let suites = resolve_suites(&requested)?;
    let seed = inv.seed.or(section.and_then(|v| v.seed));
    if seed.is_none() && needs_seed(&suites) {
        return Err(CliError::Config("randomized suites need `verify.seed` or --seed".into()));
    }
    let reports = run_suites(sc, &suites, seed)?;
    let pass = reports.iter().all(|r| r.pass);
    let report = merge(header(sc, Command::Verify, seed), json!({ "pass": pass, "suites": reports }));
    write_json(&inv.out.join("verify.json"), &report)?;
    let mut lines = Vec::new();
    for r in &reports {
        lines.push(format!("{:<12} {}", r.name, if r.pass { "PASS" } else { "FAIL" }));
        for c in r.checks.iter().filter(|c| !c.pass) {
            lines.push(format!("    {}: residual {:.3e} > tolerance {:.1e}", c.name, c.residual, c.tolerance));
        }
    }
    Ok(Outcome { success: pass, message: lines.join("\n") })
}

fn axis_columns(prefix: &str, d: usize) -> Vec<String> {
    (0..d).map(|i| format!("{prefix}_{i}")).collect()
}

fn evolve(sc: &Scenario, inv: &Invocation) -> Result<Outcome, CliError> {
    let run = sc.config.run()?;
    let seed = inv.seed.or(run.seed);
    let h = sc.hamiltonian()?;
    let psi = sc.initial_state(run, seed)?;
    let rec = run_evolution(&psi, &h.operator, &h.symbol, &sc.frame, &evolution_config(run)).map_err(CliError::runtime)?;
    let d = sc.dim();
    let n = rec.len();
    // fewer than three samples leave the time derivative undefined
    let weak = weak_equation_residuals(&rec).ok();
    let nan = vec![f64::NAN; d];
    if run.wants(RunOutput::Timeseries) {
        let mut cols = vec!["t".to_string()];
        cols.extend(axis_columns("reQ", d));
        cols.extend(axis_columns("reP", d));
        cols.extend(["energy".into(), "norm".into()]);
        cols.extend(axis_columns("weak_res_q", d));
        cols.extend(axis_columns("weak_res_p", d));
        cols.push("liouville_res".into());
        let rows = (0..n).map(|k| {
            let mut row = vec![rec.times[k]];
            row.extend(&rec.q_mean[k]);
            row.extend(&rec.p_mean[k]);
            row.extend([rec.energy[k], rec.norm[k]]);
            row.extend(weak.as_ref().map_or(&nan, |w| &w.position[k]));
            row.extend(weak.as_ref().map_or(&nan, |w| &w.momentum[k]));
            row.push(rec.liouville_residual[k]);
            row
        });
        write_csv(&inv.out.join("evolution.csv"), &cols, rows)?;
    }
    if run.wants(RunOutput::Summary) {
        let summary = merge(
            header(sc, Command::Evolve, seed),
            json!({
                "rows": n,
                "hamiltonian": rec.hamiltonian,
                "window": rec.window,
                "integrator": rec.integrator,
                "step": rec.step,
                "energy_constants": constants_json(&h),
                "hamiltonian_metadata": h.metadata,
                "max_norm_deviation": rec.max_norm_deviation(),
                "max_energy_drift": rec.max_energy_drift(),
                "max_weak_residual": weak.as_ref().map(|w| w.max()),
                "liouville_residual": residual_range(&rec),
                "final": final_means(&rec),
            }),
        );
        write_json(&inv.out.join("summary.json"), &summary)?;
    }
    Ok(Outcome { success: true, message: format!("{n} samples written to {}", inv.out.display()) })
}

fn residual_range(rec: &EvolutionRecord) -> Value {
    let finite: Vec<f64> = rec.liouville_residual.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return Value::Null;
    }
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    json!({ "min": lo, "max": hi })
}

fn final_means(rec: &EvolutionRecord) -> Value {
    match rec.times.len() {
        0 => Value::Null,
        n => json!({ "t": rec.times[n - 1], "q": rec.q_mean[n - 1], "p": rec.p_mean[n - 1], "energy": rec.energy[n - 1] }),
    }
}

fn compare(sc: &Scenario, inv: &Invocation) -> Result<Outcome, CliError> {
    let run = sc.config.run()?;
    let seed = inv.seed.or(run.seed);
    let h = sc.hamiltonian()?;
    let psi = sc.initial_state(run, seed)?;
    let cmp = compare_classical_quantum(&psi, &h.operator, &h.symbol, &sc.frame, &evolution_config(run))
        .map_err(CliError::runtime)?;
    let d = sc.dim();
    let n = cmp.quantum.len();
    if run.wants(RunOutput::Timeseries) {
        let mut cols = vec!["t".to_string()];
        for tag in ["classical", "quantum"] {
            cols.extend(axis_columns(&format!("q_{tag}"), d));
            cols.extend(axis_columns(&format!("p_{tag}"), d));
        }
        cols.extend(["q_gap".into(), "p_gap".into(), "l1_distance".into()]);
        let rows = (0..n).map(|k| {
            let mut row = vec![cmp.quantum.times[k]];
            for rec in [&cmp.classical, &cmp.quantum] {
                row.extend(&rec.q_mean[k]);
                row.extend(&rec.p_mean[k]);
            }
            row.extend([cmp.q_gap[k], cmp.p_gap[k], cmp.l1_distance[k]]);
            row
        });
        write_csv(&inv.out.join("comparison.csv"), &cols, rows)?;
    }
    if run.wants(RunOutput::Summary) {
        let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        let summary = merge(
            header(sc, Command::Compare, seed),
            json!({
                "rows": n,
                "energy_constants": constants_json(&h),
                "max_expectation_gap": cmp.max_expectation_gap(),
                "max_l1_distance": max(&cmp.l1_distance),
                "quantum_liouville_residual": residual_range(&cmp.quantum),
                "classical_liouville_residual": residual_range(&cmp.classical),
            }),
        );
        write_json(&inv.out.join("summary.json"), &summary)?;
    }
    Ok(Outcome { success: true, message: format!("{n} samples compared, written to {}", inv.out.display()) })
}

/// Closed-form levels the dense spectrum is compared against, when the
/// Hamiltonian has them.
fn reference_levels(sc: &Scenario, h: &Hamiltonian, count: usize) -> Option<Vec<f64>> {
    let cfg = sc.config.hamiltonian.as_ref()?;
    let d = sc.dim();
    let c = &h.constants;
    let hbar = sc.xgrid.hbar();
    match cfg.kind {
        // ħω(N + d/2) + E₀ + E₁ with multiplicity C(N+d−1, d−1)
        HamiltonianKind::Harmonic => {
            let mut levels = Vec::with_capacity(count);
            let mut shell = 0usize;
            while levels.len() < count {
                let mult = binomial(shell + d - 1, d - 1);
                let e = hbar * c.omega * (shell as f64 + 0.5 * d as f64) + c.e0 + c.e1;
                levels.extend(std::iter::repeat_n(e, mult));
                shell += 1;
            }
            levels.truncate(count);
            Some(levels)
        }
        // Σ (ħk_i)²/2M over the grid wavenumbers, plus E₀
        HamiltonianKind::Free => {
            let ks = sc.xgrid.wavenumbers();
            let one: Vec<f64> = ks.iter().map(|k| (hbar * k).powi(2) / (2.0 * c.mass)).collect();
            let mut levels = vec![c.e0];
            for _ in 0..d {
                levels = levels.iter().flat_map(|a| one.iter().map(move |b| a + b)).collect();
            }
            levels.sort_by(f64::total_cmp);
            levels.truncate(count);
            Some(levels)
        }
        _ => None,
    }
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn spectrum(sc: &Scenario, inv: &Invocation) -> Result<Outcome, CliError> {
    let levels = sc.config.spectrum.as_ref().map_or(20, |s| s.levels);
    let h = sc.hamiltonian()?;
    let dense = h.operator.to_dense().map_err(CliError::runtime)?;
    let mut ev = hermitian_eigenvalues(&dense);
    ev.truncate(levels);
    let reference = reference_levels(sc, &h, ev.len());
    let cols = ["index".to_string(), "energy".into()];
    write_csv(&inv.out.join("spectrum.csv"), &cols, ev.iter().enumerate().map(|(k, &e)| vec![k as f64, e]))?;
    let deviation = reference
        .as_ref()
        .map(|r| r.iter().zip(&ev).map(|(a, b)| ((b - a) / a.abs().max(f64::MIN_POSITIVE)).abs()).fold(0.0, f64::max));
    let meta = merge(
        header(sc, Command::Spectrum, inv.seed),
        json!({
            "operator": h.operator.provenance().symbol,
            "dimension": dense.nrows(),
            "e0": h.constants.e0,
            "e1": h.constants.e1,
            "energy_constants": constants_json(&h),
            "eigenvalues": ev,
            "reference": reference,
            "max_relative_deviation": deviation,
        }),
    );
    write_json(&inv.out.join("spectrum.json"), &meta)?;
    Ok(Outcome { success: true, message: format!("{} levels written to {}", ev.len(), inv.out.display()) })
}

fn quantize(sc: &Scenario, inv: &Invocation) -> Result<Outcome, CliError> {
    let q = sc.config.quantize.as_ref().ok_or_else(|| CliError::Config("missing section [quantize]".into()))?;
    let d = sc.dim();
    let route = |s: &Symbol| -> Result<QuantizedOperator, CliError> {
        match q.route {
            RouteChoice::Grid => quantize_grid_route(s, &sc.frame),
            RouteChoice::ClosedForm => quantize_closed_form(s, &sc.frame),
        }
        .map_err(CliError::setup)
    };
    let op = match q.symbol {
        SymbolChoice::One => route(&Symbol::constant(d, 1.0).labeled("1"))?,
        SymbolChoice::Polynomial => route(&Symbol::polynomial(polynomial(d, q.terms.as_deref().unwrap_or_default())))?,
        SymbolChoice::Hamiltonian => sc.hamiltonian()?.operator,
    };
    let m = op.to_dense().map_err(CliError::runtime)?;
    let n = m.nrows();
    let mut herm: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            herm = herm.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    let entries = (0..n).flat_map(|i| (0..n).map(move |j| (i, j)));
    let data_file = match q.format {
        MatrixFormat::Binary => {
            let mut bytes = Vec::with_capacity(16 * n * n);
            for (i, j) in entries {
                let v: Complex64 = m[(i, j)];
                bytes.extend_from_slice(&v.re.to_le_bytes());
                bytes.extend_from_slice(&v.im.to_le_bytes());
            }
            write_bytes(&inv.out.join("operator.bin"), &bytes)?;
            "operator.bin"
        }
        MatrixFormat::Text => {
            let mut text = String::with_capacity(48 * n * n);
            for i in 0..n {
                let row: Vec<String> = (0..n).flat_map(|j| [sci(m[(i, j)].re), sci(m[(i, j)].im)]).collect();
                text.push_str(&row.join(" "));
                text.push('\n');
            }
            write_bytes(&inv.out.join("operator.txt"), text.as_bytes())?;
            "operator.txt"
        }
    };
    let p = op.provenance();
    let meta = merge(
        header(sc, Command::Quantize, inv.seed),
        json!({
            "symbol": p.symbol,
            "window": p.window,
            "route": p.route,
            "rows": n,
            "cols": n,
            "data_file": data_file,
            "format": match q.format { MatrixFormat::Binary => "binary", MatrixFormat::Text => "text" },
            "layout": "row-major; grid points flattened in C order (last axis fastest)",
            "element": "complex: real part then imaginary part",
            "binary_encoding": "IEEE-754 float64, little-endian, 16 bytes per entry",
            "text_encoding": "one matrix row per line, space-separated re im pairs",
            "hermiticity_residual": herm,
        }),
    );
    write_json(&inv.out.join("operator.json"), &meta)?;
    Ok(Outcome { success: true, message: format!("{n}×{n} operator written to {}", inv.out.display()) })
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(CliError::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(2, 2), 1);
    }
}
