//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run with `cargo test -p spinbath-cli --test acceptance`.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spinbath_core::analysis::window_until_below;
use spinbath_core::*;

type Outcome = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    let step = (stop - start) / (points - 1) as f64;
    (0..points).map(|i| start + step * i as f64).collect()
}

fn random_env(rng: &mut ChaCha8Rng, max_spins: usize) -> Environment {
    let n = rng.random_range(0..=max_spins);
    (0..n)
        .map(|_| {
            BathSpin::from_populations(
                rng.random_range(-2.0..2.0),
                rng.random_range(0.0..=1.0),
                rng.random_range(-3.2..3.2),
                rng.random_range(-3.2..3.2),
            )
            .unwrap()
        })
        .collect()
}

fn random_system(rng: &mut ChaCha8Rng) -> SystemState {
    SystemState::from_population(rng.random_range(0.0..=1.0), rng.random_range(-3.2..3.2)).unwrap()
}

/// 200 environments with N <= 14, 50 times each.
fn sweep() -> Vec<(Environment, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    (0..200)
        .map(|_| {
            let env = random_env(&mut rng, 14);
            let times = (0..50).map(|_| rng.random_range(-10.0..10.0)).collect();
            (env, times)
        })
        .collect()
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (env, times) in sweep() {
        for &t in &times {
            let a = decoherence_factor(&env, t).map_err(|e| e.to_string())?;
            let b = decoherence_factor_expansion(&env, t, 20).map_err(|e| e.to_string())?;
            worst = worst.max((a - b).norm());
        }
    }
    let elapsed = start.elapsed();
    ensure(worst < 1e-10, || {
        format!("max |product - expansion| = {worst:e}")
    })?;
    ensure(elapsed < Duration::from_secs(10), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!("max deviation {worst:.2e} in {elapsed:.2?}"))
}

fn fourier_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for (env, times) in sweep() {
        for merge in [false, true] {
            let spec = enumerate_spectrum(&env, merge).map_err(|e| e.to_string())?;
            for &t in &times {
                let direct = decoherence_factor(&env, t).map_err(|e| e.to_string())?;
                worst = worst.max((characteristic_function(&spec, t) - direct).norm());
            }
        }
    }
    ensure(worst < 1e-10, || format!("max |char fn - r| = {worst:e}"))?;
    Ok(format!(
        "max deviation {worst:.2e} (raw and merged spectra)"
    ))
}

fn binomial_limit() -> Outcome {
    let start = Instant::now();
    let (n, g) = (100usize, 1.0);
    let env = Environment::balanced(&vec![g; n]).map_err(|e| e.to_string())?;
    let times = linspace(0.0, 0.5, 50_001);
    let moduli = decoherence_series(&env, &times)
        .map_err(|e| e.to_string())?
        .moduli();
    // Initial decay only; |cos(gt)|^N revives at t = pi/g.
    let end = moduli
        .iter()
        .position(|&m| m <= 0.1)
        .ok_or("no decay below 0.1 on grid")?;
    let worst = times[..end]
        .iter()
        .zip(&moduli)
        .map(|(t, m)| (m - (-(n as f64) * (g * t).powi(2) / 2.0).exp()).abs())
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    ensure(worst < 0.02, || format!("max deviation {worst}"))?;
    ensure(elapsed < Duration::from_secs(1), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "max deviation {worst:.4} over t < {:.4} in {elapsed:.2?}",
        times[end]
    ))
}

fn uniform_bath(n: usize, n_realizations: usize, seed: u64) -> EnsembleSpec {
    EnsembleSpec::new(
        CouplingDistribution::Uniform { lo: 0.5, hi: 1.5 },
        n,
        n_realizations,
        seed,
    )
}

fn clt_convergence() -> Outcome {
    let env = sample_environment(&uniform_bath(24, 1, 11), 0).map_err(|e| e.to_string())?;
    let params = gaussian_params(&env);
    let times = linspace(0.0, 1.0, 2001);
    let moduli = decoherence_series(&env, &times)
        .map_err(|e| e.to_string())?
        .moduli();
    let window = window_until_below(&times, &moduli, 0.05).ok_or("no fit window")?;
    let fit =
        fit_decay(&times, &moduli, DecayModel::Gaussian, window).map_err(|e| e.to_string())?;
    let rel = (fit.timescale / params.decay_time() - 1.0).abs();
    ensure(rel < 0.10, || {
        format!(
            "T = {} vs sqrt(2)/B = {}",
            fit.timescale,
            params.decay_time()
        )
    })?;

    let walker = WalkEnumerator::new(&env, 24).map_err(|e| e.to_string())?;
    let m = walker.moments();
    let (dm, dv) = (
        (m.mean - params.mean).abs(),
        (m.variance - params.variance()).abs(),
    );
    ensure(dm < 1e-10 && dv < 1e-10, || {
        format!("moment errors mean {dm:e}, variance {dv:e}")
    })?;
    Ok(format!(
        "T = {:.5} vs {:.5} ({:.1}%); moment errors {dm:.1e}, {dv:.1e} over 2^24 walks",
        fit.timescale,
        params.decay_time(),
        100.0 * rel
    ))
}

fn lorentzian_exception() -> Outcome {
    let (n, gamma) = (100usize, 0.1);
    let spec = EnsembleSpec::new(
        CouplingDistribution::Lorentzian { center: 0.0, gamma },
        n,
        200,
        2024,
    );
    let times = linspace(0.0, 0.5, 201);
    let avg = ensemble_average_r(&spec, &times).map_err(|e| e.to_string())?;
    let modulus = avg.modulus_of_mean();
    let window = analysis::Window::new(0.0, 0.25).map_err(|e| e.to_string())?;
    let fit =
        fit_decay(&times, &modulus, DecayModel::Exponential, window).map_err(|e| e.to_string())?;
    let expected = n as f64 * gamma;
    let rel = (fit.rate() / expected - 1.0).abs();
    ensure(rel < 0.15, || {
        format!("rate {} vs N gamma = {expected}", fit.rate())
    })?;
    let class = classify_decay(&times, &modulus, window, ClassifyOptions::default())
        .map_err(|e| e.to_string())?;
    ensure(class.class == DecayClass::Exponential, || {
        format!(
            "classified {:?} (residuals gaussian {}, exponential {})",
            class.class, class.gaussian.residual_rms, class.exponential.residual_rms
        )
    })?;
    Ok(format!(
        "rate {:.3} vs {expected} ({:.1}%), classified exponential",
        fit.rate(),
        100.0 * rel
    ))
}

fn saturation() -> Outcome {
    let env = sample_environment(&uniform_bath(10, 1, 6), 0).map_err(|e| e.to_string())?;
    let times = linspace(1e2, 1e4, 400_001);
    let level = saturation_level(
        &decoherence_series(&env, &times)
            .map_err(|e| e.to_string())?
            .moduli(),
    );
    let scale = 2f64.powi(-5);
    ensure(level >= 0.5 * scale && level <= 2.0 * scale, || {
        format!("RMS {level} outside [{}, {}]", 0.5 * scale, 2.0 * scale)
    })?;
    Ok(format!(
        "RMS |r| = {level:.5} = {:.3} x 2^-5",
        level / scale
    ))
}

fn echo_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_full: f64 = 0.0;
    let mut worst_pointer: f64 = 0.0;
    for _ in 0..100 {
        let t_r = rng.random_range(0.0..5.0);
        let full = EchoExperiment::new(
            random_system(&mut rng),
            Environment::empty(),
            random_env(&mut rng, 30),
            t_r,
        )
        .map_err(|e| e.to_string())?;
        let mu = echo_fidelity(&full, 2.0 * t_r).map_err(|e| e.to_string())?;
        worst_full = worst_full.max((mu - 1.0).abs());

        let (unrev, rev) = (random_env(&mut rng, 20), random_env(&mut rng, 20));
        for pointer in [SystemState::zero(), SystemState::one()] {
            let exp = EchoExperiment::new(pointer, unrev.clone(), rev.clone(), t_r)
                .map_err(|e| e.to_string())?;
            for t in linspace(0.0, 4.0 * t_r + 1.0, 25) {
                let mu = echo_fidelity(&exp, t).map_err(|e| e.to_string())?;
                worst_pointer = worst_pointer.max((mu - 1.0).abs());
            }
        }
    }
    ensure(worst_full < 1e-12, || {
        format!("full reversal |mu - 1| = {worst_full:e}")
    })?;
    ensure(worst_pointer < 1e-12, || {
        format!("pointer |mu - 1| = {worst_pointer:e}")
    })?;
    Ok(format!(
        "full reversal max |mu-1| = {worst_full:.1e}; pointer states {worst_pointer:.1e}"
    ))
}

fn gaussian_echo_deficit() -> Outcome {
    let start = Instant::now();
    let unrev = sample_environment(&uniform_bath(24, 1, 5), 0).map_err(|e| e.to_string())?;
    let rev = sample_environment(&uniform_bath(8, 1, 6), 0).map_err(|e| e.to_string())?;
    let sys = SystemState::new(
        Complex64::new(FRAC_1_SQRT_2, 0.0),
        Complex64::new(FRAC_1_SQRT_2, 0.0),
    )
    .map_err(|e| e.to_string())?;
    let exp = EchoExperiment::new(sys, unrev, rev, 0.0).map_err(|e| e.to_string())?;
    let t_r = linspace(0.005, 0.4, 80);
    let sweep = echo::reacquisition_sweep(&exp, &t_r).map_err(|e| e.to_string())?;
    let signal: Vec<f64> = sweep
        .iter()
        .map(|r| exp.normalized_signal(r.mu))
        .collect::<Result<_>>()
        .map_err(|e| e.to_string())?;
    // Pre-saturation window: normalized signal between 0.05 and 0.95.
    let inside: Vec<f64> = t_r
        .iter()
        .zip(&signal)
        .filter(|(_, &s)| (0.05..=0.95).contains(&s))
        .map(|(&t, _)| t)
        .collect();
    let window = analysis::Window::new(inside[0], *inside.last().ok_or("empty window")?)
        .map_err(|e| e.to_string())?;
    let fit = loglog_slope(&t_r, &signal, window).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure((1.9..=2.1).contains(&fit.slope), || {
        format!("slope {}", fit.slope)
    })?;
    ensure(elapsed < Duration::from_secs(5), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "slope {:.4} +- {:.4} over t_R in [{:.3}, {:.3}] ({} points) in {elapsed:.2?}",
        fit.slope,
        fit.stderr,
        window.lo,
        window.hi,
        inside.len()
    ))
}

fn reversal_independence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let unrev = random_env(&mut rng, 16);
    let sys = random_system(&mut rng);
    let t_r = 0.73;
    let reference = EchoExperiment::new(sys, unrev.clone(), Environment::empty(), t_r)
        .map_err(|e| e.to_string())?;
    let mu_ref = echo_at_reacquisition(&reference).mu;
    let fid_ref = echo_fidelity(&reference, 2.0 * t_r).map_err(|e| e.to_string())?;
    for trial in 0..50 {
        let rev = random_env(&mut rng, 24);
        let exp =
            EchoExperiment::new(sys, unrev.clone(), rev.clone(), t_r).map_err(|e| e.to_string())?;
        let mu = echo_at_reacquisition(&exp).mu;
        let fid = echo_fidelity(&exp, 2.0 * t_r).map_err(|e| e.to_string())?;
        ensure(
            mu.to_bits() == mu_ref.to_bits() && fid.to_bits() == fid_ref.to_bits(),
            || {
                format!(
                    "trial {trial} ({} reversed spins): {mu} / {fid} vs {mu_ref}",
                    rev.len()
                )
            },
        )?;
    }
    Ok(format!(
        "mu(2 t_R) = {mu_ref} bit-identical across 50 reversed baths"
    ))
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// All files of a run, with the manifest's timestamp removed.
fn snapshot(dir: &Path) -> std::result::Result<BTreeMap<String, Vec<u8>>, String> {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        let mut bytes = fs::read(&path).map_err(|e| e.to_string())?;
        if name == "manifest.json" {
            let mut v: serde_json::Value =
                serde_json::from_slice(&bytes).map_err(|e| e.to_string())?;
            ensure(v["status"] == "complete", || {
                format!("{}: status {}", dir.display(), v["status"])
            })?;
            v.as_object_mut().unwrap().remove("timestamp");
            bytes = serde_json::to_vec(&v).unwrap();
        }
        files.insert(name, bytes);
    }
    Ok(files)
}

fn cli_determinism() -> Outcome {
    let scratch = tempfile::tempdir().map_err(|e| e.to_string())?;
    let configs = workspace_root().join("configs");
    let mut names: Vec<PathBuf> = fs::read_dir(&configs)
        .map_err(|e| format!("{}: {e}", configs.display()))?
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    names.sort();
    let mut experiments = Vec::new();
    let mut total = 0;
    for config in &names {
        let stem = config.file_stem().unwrap().to_string_lossy().into_owned();
        let mut runs = Vec::new();
        for threads in ["1", "8"] {
            let out = scratch.path().join(format!("{stem}-{threads}"));
            let status = Command::new(env!("CARGO_BIN_EXE_spinbath"))
                .arg("--config")
                .arg(config)
                .arg("--out")
                .arg(&out)
                .args(["--threads", threads])
                .output()
                .map_err(|e| e.to_string())?;
            ensure(status.status.success(), || {
                format!(
                    "{stem} --threads {threads}: {}",
                    String::from_utf8_lossy(&status.stderr)
                )
            })?;
            runs.push(snapshot(&out)?);
        }
        ensure(runs[0] == runs[1], || {
            let differing: Vec<_> = runs[0]
                .iter()
                .filter(|(k, v)| runs[1].get(*k) != Some(v))
                .map(|(k, _)| k.clone())
                .collect();
            format!("{stem}: files differ between 1 and 8 threads: {differing:?}")
        })?;
        total += runs[0].len();
        experiments.push(stem);
    }
    let kinds = ["decoherence", "spectrum", "ensemble", "echo", "saturation"];
    for kind in kinds {
        ensure(experiments.iter().any(|e| e.starts_with(kind)), || {
            format!("no config for {kind}")
        })?;
    }
    Ok(format!(
        "{} configs, {total} files byte-identical with 1 and 8 threads",
        experiments.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("oracle equivalence", oracle_equivalence),
        ("Fourier identity", fourier_identity),
        ("binomial limit", binomial_limit),
        ("CLT convergence", clt_convergence),
        ("Lorentzian exception", lorentzian_exception),
        ("saturation", saturation),
        ("echo exactness", echo_exactness),
        ("Gaussian echo deficit", gaussian_echo_deficit),
        ("reversal-detail independence", reversal_independence),
        ("CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS  {:>2}. {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL  {:>2}. {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
