//! Compare the sample estimator on a linear network with the analytic
//! per-lag capacity from the stationary covariance.

use memcap::capacity::{estimate_mc_tau, Ridge};
use memcap::dynamics::default_washout;
use memcap::{linear_mc_oracle, run, Activation, Ensemble, InputProcess, ReservoirSpec};
use nalgebra::DVector;

fn main() -> memcap::Result<()> {
    let n = 10;
    for ensemble in [Ensemble::OrthogonalGaussian, Ensemble::DenseGaussian] {
        let spec = ReservoirSpec::sample(n, ensemble, 0.95, 3)?;
        let oracle = linear_mc_oracle(&spec, 200)?;
        let traj = run(
            &spec,
            Activation::Identity,
            &InputProcess::new(1.0, 100_000, default_washout(n), 4),
            &DVector::zeros(n),
        )?;
        println!(
            "{} (oracle total over 201 lags: {:.6})",
            ensemble.label(),
            oracle.total
        );
        println!("{:>4} {:>10} {:>10}", "tau", "oracle", "sample");
        for tau in (0..=30).step_by(3) {
            let est = estimate_mc_tau(&traj, tau, Ridge::default())?;
            println!("{tau:>4} {:>10.5} {est:>10.5}", oracle.per_lag[tau]);
        }
        println!();
    }
    Ok(())
}
