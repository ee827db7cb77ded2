//! Total memory capacity of a single tanh reservoir as the input scale
//! grows, with the per-lag profile at each scale.
//!
//! cargo run --release --example memory_capacity -- [n]

use memcap::dynamics::default_washout;
use memcap::{
    estimate_total_mc, run, Activation, Ensemble, EstimatorConfig, InputProcess, ReservoirSpec,
};
use nalgebra::DVector;

fn main() -> memcap::Result<()> {
    let n: usize = std::env::args()
        .nth(1)
        .map_or(20, |s| s.parse().expect("n"));
    let spec = ReservoirSpec::sample(n, Ensemble::OrthogonalGaussian, 0.95, 1)?;
    let config = EstimatorConfig::default();

    for sigma in [1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0] {
        let process = InputProcess::new(sigma, 100_000, default_washout(n), 2);
        let traj = run(&spec, Activation::Tanh, &process, &DVector::zeros(n))?;
        let profile = estimate_total_mc(&traj, &config)?;
        let head: Vec<String> = profile
            .per_lag
            .iter()
            .take(8)
            .map(|m| format!("{m:.2}"))
            .collect();
        println!(
            "sigma={sigma:<7} MC={:>7.3}  lags used={:>3}  first lags [{}]",
            profile.total,
            profile.per_lag.len(),
            head.join(" ")
        );
    }
    Ok(())
}
