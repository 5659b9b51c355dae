//! Experiment drivers. Every mode writes `config.toml` (the resolved configuration)
//! and `manifest.json` next to its results in the output directory.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use lgap::analytic::{
    bethe_energy, meanfield_steady_state, reference_energy, solve_bethe_m1, solve_bethe_m2,
    xxz_gap, Branch, MeanFieldPhase,
};
use lgap::exact::{
    classify_decay_modes, dense_liouvillian, full_spectrum, spectrum_records, subspace_fidelity,
    SpectrumResult, DEGENERACY_TOL, MAX_DENSE_SITES,
};
use lgap::optimizer::{gap_estimate, run_with_observer, RunTrace};
use lgap::rbm::checkpoint::Checkpoint;
use lgap::{LindbladModel, RbmParameters, TrialState, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, Mode};
use crate::CliError;

pub const TRACE_FILE: &str = "trace.jsonl";
pub const CHECKPOINT_FILE: &str = "checkpoint.txt";
pub const SUMMARY_FILE: &str = "summary.json";
pub const SPECTRUM_FILE: &str = "spectrum.csv";
pub const BETHE_FILE: &str = "bethe.json";
pub const MEANFIELD_FILE: &str = "meanfield.json";
pub const REPORT_FILE: &str = "report.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.toml";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_json(dir: &Path, name: &str, value: &Value) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value).expect("json value serializes");
    text.push('\n');
    fs::write(&path, text).map_err(io_err(&path))?;
    Ok(path)
}

fn complex(z: C64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

/// Hex SHA-256 of the resolved configuration text.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    hex::encode(Sha256::digest(cfg.to_toml().as_bytes()))
}

fn write_manifest(dir: &Path, cfg: &ExperimentConfig, mode: Mode) -> Result<(), CliError> {
    let text = cfg.to_toml();
    let path = dir.join(CONFIG_FILE);
    fs::write(&path, &text).map_err(io_err(&path))?;
    write_json(
        dir,
        MANIFEST_FILE,
        &json!({
            "mode": mode.name(),
            "config_sha256": config_hash(cfg),
            "seed": cfg.sampler.seed,
            "lgap_version": env!("CARGO_PKG_VERSION"),
            "config_file": CONFIG_FILE,
        }),
    )?;
    Ok(())
}

/// Validates `cfg` for `mode`, runs it and writes all artifacts into the output directory.
pub fn run_experiment(cfg: &ExperimentConfig, mode: Mode) -> Result<(), CliError> {
    let mut cfg = cfg.clone();
    cfg.mode = Some(mode);
    cfg.validate(mode)?;
    let dir = cfg.output.dir.clone();
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    write_manifest(&dir, &cfg, mode)?;
    match mode {
        Mode::Rbm => run_rbm(&cfg, &dir).map(|_| ()),
        Mode::Ed => run_ed(&cfg, &dir).map(|_| ()),
        Mode::Bethe => run_bethe(&cfg, &dir),
        Mode::Meanfield => run_meanfield(&cfg, &dir),
        Mode::Compare => run_compare(&cfg, &dir),
    }
}

/// Outcome of an RBM optimization.
pub struct RbmOutcome {
    pub trial: TrialState,
    pub trace: RunTrace,
    pub gap: f64,
    pub std_error: f64,
    pub im: f64,
}

fn run_rbm(cfg: &ExperimentConfig, dir: &Path) -> Result<RbmOutcome, CliError> {
    let model = cfg.model()?;
    let liouv = model.vectorize();
    let n = model.sites();
    let hidden = cfg.hidden_units()?;
    let seed = cfg.sampler.seed.expect("validated");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rbm = RbmParameters::random(n, hidden, cfg.rbm.init_scale, &mut rng)?;
    let trial = TrialState::new(rbm, cfg.ancillary(n))?.with_variant(cfg.variant());
    let opt = cfg.optimizer_config(seed);

    let trace_path = dir.join(TRACE_FILE);
    let file = File::create(&trace_path).map_err(io_err(&trace_path))?;
    let mut writer = BufWriter::new(file);
    let mut write_error = None;
    let start = Instant::now();
    let result = run_with_observer(trial, &liouv, &opt, &mut |record, _| {
        if write_error.is_some() {
            return;
        }
        let line = serde_json::to_string(record).expect("record serializes");
        if let Err(e) = writeln!(writer, "{line}") {
            write_error = Some(e);
        }
    });
    let wall = start.elapsed().as_secs_f64();
    writer.flush().map_err(io_err(&trace_path))?;
    if let Some(e) = write_error {
        return Err(io_err(&trace_path)(e));
    }

    let (trial, trace, failure) = match result {
        Ok((trial, trace)) => (trial, trace, None),
        Err(f) => {
            let f = *f;
            (f.trial, f.trace, Some(f.error))
        }
    };
    let ckpt_path = dir.join(CHECKPOINT_FILE);
    Checkpoint {
        rbm: trial.rbm().clone(),
        ancillary: trial.ancillary().clone(),
        iteration: trace.len(),
    }
    .save(&ckpt_path)?;

    let estimate = gap_estimate(&trace, opt.window);
    let mut summary = json!({
        "sites": n,
        "hidden": hidden,
        "real_parameters": trial.rbm().real_len(),
        "iterations": trace.len(),
        "converged": trace.converged,
        "beta_start": trace.beta_start,
        "wall_time_s": wall,
        "gap": estimate.map(|g| g.gap),
        "std_error": estimate.map(|g| g.std_error),
        "im_l": estimate.map(|g| g.im),
    });
    if let Some(e) = &failure {
        summary["error"] = json!(e.to_string());
    }
    write_json(dir, SUMMARY_FILE, &summary)?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    let estimate = estimate
        .ok_or_else(|| CliError::Runtime("optimizer produced no iterations".into()))?;
    log::info!(
        "gap {:.6} +- {:.2e} after {} iterations",
        estimate.gap,
        estimate.std_error,
        trace.len()
    );
    Ok(RbmOutcome {
        trial,
        trace,
        gap: estimate.gap,
        std_error: estimate.std_error,
        im: estimate.im,
    })
}

fn dense_spectrum(model: &LindbladModel) -> Result<SpectrumResult, CliError> {
    if model.sites() > MAX_DENSE_SITES {
        return Err(CliError::Runtime(format!(
            "exact diagonalization supports at most {MAX_DENSE_SITES} sites, got {}",
            model.sites()
        )));
    }
    Ok(full_spectrum(&dense_liouvillian(&model.vectorize())?)?)
}

fn run_ed(cfg: &ExperimentConfig, dir: &Path) -> Result<SpectrumResult, CliError> {
    let model = cfg.model()?;
    let spec = dense_spectrum(&model)?;
    let path = dir.join(SPECTRUM_FILE);
    let mut out = String::from("re,im,degeneracy\n");
    for r in spectrum_records(&spec.eigenvalues, DEGENERACY_TOL) {
        out.push_str(&format!("{},{},{}\n", r.re, r.im, r.degeneracy));
    }
    fs::write(&path, out).map_err(io_err(&path))?;
    let case = classify_decay_modes(&spec);
    let first: Vec<Value> = spec
        .first_decay
        .iter()
        .map(|&k| complex(spec.eigenvalues[k]))
        .collect();
    write_json(
        dir,
        SUMMARY_FILE,
        &json!({
            "sites": model.sites(),
            "gap": spec.gap,
            "case": case.label(),
            "steady_eigenvalue": complex(spec.eigenvalues[spec.steady_index]),
            "first_decay": first,
        }),
    )?;
    log::info!("ED gap {:.8}, first decay case {}", spec.gap, case.label());
    Ok(spec)
}

fn run_bethe(cfg: &ExperimentConfig, dir: &Path) -> Result<(), CliError> {
    let model = cfg.model()?;
    let n = model.sites();
    // The Bethe coupling is the flip-flop amplitude of the right Hamiltonian.
    let j = (model.jx() + model.jy()) / 4.0;
    let (jz, gamma) = (model.jz(), model.gamma());
    let e_g = reference_energy(n, jz, Branch::Minus);
    let m1: Vec<Value> = solve_bethe_m1(n)?
        .into_iter()
        .map(|k| {
            let e = bethe_energy(&[C64::new(k, 0.0)], j, jz, gamma, Branch::Minus);
            json!({ "k": k, "energy": complex(e), "energy_with_reference": complex(e + e_g) })
        })
        .collect();
    let report = solve_bethe_m2(n, j, jz, gamma, Branch::Minus)?;
    if report.missing() > 0 {
        log::warn!(
            "{} of {} two-magnon states were not found by the root search",
            report.missing(),
            report.expected
        );
    }
    let m2: Vec<Value> = report
        .solutions
        .iter()
        .map(|s| {
            json!({
                "momenta": s.momenta.iter().map(|&k| complex(k)).collect::<Vec<_>>(),
                "energy": complex(s.energy),
                "energy_with_reference": complex(s.energy + e_g),
                "residual": s.residual,
            })
        })
        .collect();
    write_json(
        dir,
        BETHE_FILE,
        &json!({
            "sites": n,
            "j": j,
            "jz": jz,
            "gamma": gamma,
            "branch": "minus",
            "reference_energy": complex(e_g),
            "m1": m1,
            "m2": { "solutions": m2, "expected": report.expected, "missing": report.missing() },
        }),
    )?;
    Ok(())
}

fn run_meanfield(cfg: &ExperimentConfig, dir: &Path) -> Result<(), CliError> {
    let m = &cfg.model;
    let r = meanfield_steady_state(m.jx, m.jy, m.jz, m.gamma)?;
    write_json(
        dir,
        MEANFIELD_FILE,
        &json!({
            "sx": r.sx,
            "sy": r.sy,
            "sz": r.sz,
            "phase": match r.phase {
                MeanFieldPhase::UniqueGapped => "unique-gapped",
                MeanFieldPhase::Degenerate => "degenerate",
            },
            "discriminant": r.discriminant,
        }),
    )?;
    Ok(())
}

fn run_compare(cfg: &ExperimentConfig, dir: &Path) -> Result<(), CliError> {
    let model = cfg.model()?;
    let outcome = run_rbm(cfg, dir)?;
    let (oracle, exact, fidelity) = if model.is_isotropic() {
        ("xxz-analytic", xxz_gap(model.gamma())?, None)
    } else {
        let spec = dense_spectrum(&model)?;
        let modes: Vec<_> = spec
            .first_decay
            .iter()
            .map(|&k| spec.vectors.column(k).to_owned())
            .collect();
        let f = subspace_fidelity(&outcome.trial, &modes)?;
        ("exact-diagonalization", spec.gap, Some(f))
    };
    let eps_rel = ((outcome.gap - exact) / exact).abs();
    write_json(
        dir,
        REPORT_FILE,
        &json!({
            "oracle": oracle,
            "gap_rbm": outcome.gap,
            "std_error": outcome.std_error,
            "im_l": outcome.im,
            "gap_exact": exact,
            "eps_rel": eps_rel,
            "fidelity": fidelity,
            "iterations": outcome.trace.len(),
            "converged": outcome.trace.converged,
        }),
    )?;
    log::info!("relative error {eps_rel:.3e} against {oracle}");
    Ok(())
}
