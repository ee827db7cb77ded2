//! Same grid, orthogonal reservoirs, three activations: tanh collapses to
//! one, ReLU sits at a constant level well below N (it is positively
//! homogeneous, so the input scale cancels out), LogSig decays slowly.
//!
//! cargo run --release --example activation_comparison -- [replications]

use memcap::dynamics::{default_washout, Regime};
use memcap::{
    classify_regime, run, run_sweep, Activation, Ensemble, InputProcess, ReservoirSpec, SweepConfig,
};
use nalgebra::DVector;

fn main() -> memcap::Result<()> {
    let replications: usize = std::env::args()
        .nth(1)
        .map_or(3, |s| s.parse().expect("replications"));
    let acts = [Activation::Tanh, Activation::Relu, Activation::LogSig];
    let mut columns = Vec::new();
    let mut sigmas = Vec::new();
    for act in acts {
        let mut cfg = SweepConfig::new(Ensemble::OrthogonalGaussian, act);
        cfg.replications = replications;
        let res = run_sweep(&cfg, 1)?;
        sigmas = res.sigmas();
        columns.push(res.means());
    }
    println!(
        "{:>11} {:>8} {:>8} {:>8}",
        "sigma", "tanh", "relu", "logsig"
    );
    for (i, sigma) in sigmas.iter().enumerate() {
        println!(
            "{sigma:>11.3e} {:>8.3} {:>8.3} {:>8.3}",
            columns[0][i], columns[1][i], columns[2][i]
        );
    }

    // LogSig never saturates exactly, but at huge scales its states are
    // two-valued to within a tiny fraction of their spread.
    let n = 30;
    let spec = ReservoirSpec::sample(n, Ensemble::OrthogonalGaussian, 0.95, 0)?;
    for sigma in [1e2, 1e8] {
        let traj = run(
            &spec,
            Activation::LogSig,
            &InputProcess::new(sigma, 20_000, default_washout(n), 1),
            &DVector::zeros(n),
        )?;
        let regime = classify_regime(&traj, sigma);
        println!(
            "LogSig at sigma={sigma:e}: {regime:?}{}",
            if regime == Regime::Saturated {
                ""
            } else {
                " (not yet)"
            }
        );
    }
    Ok(())
}
