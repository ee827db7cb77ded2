//! One reservoir, three input scales: exactly linear below the lower
//! threshold, exactly two-valued above the upper one, and something in
//! between.

use memcap::dynamics::{default_washout, linear_deviation};
use memcap::{
    classify_regime, compute_thresholds, estimate_total_mc, extreme_states, run, Activation,
    Ensemble, EstimatorConfig, InputProcess, ReservoirSpec,
};
use nalgebra::DVector;

fn main() -> memcap::Result<()> {
    let n = 20;
    let act = Activation::piecewise(0.5, 2.0)?;
    let spec = ReservoirSpec::sample(n, Ensemble::OrthogonalGaussian, 0.95, 11)?;
    let th = compute_thresholds(&spec, act)?;
    let ext = extreme_states(&spec, act)?;
    println!(
        "lower threshold {:.3e}, upper threshold {:.3e}",
        th.sigma_lower, th.sigma_upper
    );

    let mid = (th.sigma_lower * th.sigma_upper).sqrt();
    for (label, sigma) in [
        ("0.5 x lower", 0.5 * th.sigma_lower),
        ("geometric mid", mid),
        ("2 x upper", 2.0 * th.sigma_upper),
    ] {
        let process = InputProcess::new(sigma, 50_000, default_washout(n), 5);
        let traj = run(&spec, act, &process, &DVector::zeros(n))?;
        let distinct_extreme = (0..traj.len())
            .filter(|&t| {
                let s = traj.state(t);
                s == ext.x_plus || s == ext.x_minus
            })
            .count();
        let mc = estimate_total_mc(&traj, &EstimatorConfig::default())?;
        println!(
            "{label:>14}: sigma={sigma:.3e} regime={:?} max|x|={:.3} linear gap={:.1e} extreme states={}/{} MC={:.3}",
            classify_regime(&traj, sigma),
            traj.max_abs_state(),
            linear_deviation(&traj),
            distinct_extreme,
            traj.len(),
            mc.total
        );
    }
    Ok(())
}
