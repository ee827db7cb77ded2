//! Draw one reservoir from each ensemble and print what the thresholds and
//! the spectrum look like.
//!
//! cargo run --example sample_reservoirs -- [n] [seed]

use memcap::ensembles::{induced_inf_norm, max_abs_matrix_entry, sample_sparse_gaussian};
use memcap::{compute_thresholds, Activation, Ensemble, ReservoirSpec};

fn main() -> memcap::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(30, |s| s.parse().expect("n"));
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed"));
    let act = Activation::piecewise(0.5, 2.0)?;

    for ensemble in [
        Ensemble::OrthogonalGaussian,
        Ensemble::sparse_default(),
        Ensemble::DenseGaussian,
    ] {
        let spec = ReservoirSpec::sample(n, ensemble, 0.95, seed)?;
        let s = spec.connectivity.singular_values();
        let th = compute_thresholds(&spec, act)?;
        println!("{}", ensemble.label());
        println!(
            "  ||A||_2 = {:.6}  sigma_min(A) = {:.4}",
            spec.spectral_norm(),
            s.min()
        );
        println!(
            "  max |A_ij| = {:.4}  ||A||_inf = {:.4}",
            max_abs_matrix_entry(&spec.connectivity),
            induced_inf_norm(&spec.connectivity)
        );
        println!(
            "  |C| in [{:.4}, {:.4}]",
            spec.mask_floor(),
            spec.mask_sup()
        );
        println!(
            "  linear below sigma = {:.3e}, saturated above sigma = {:.3e}",
            th.sigma_lower, th.sigma_upper
        );
    }

    let raw = sample_sparse_gaussian(n, 0.1, seed);
    let nonzero = raw.iter().filter(|v| **v != 0.0).count();
    println!(
        "\nsparse stage before conditioning keeps {nonzero} of {} entries",
        n * n
    );
    Ok(())
}
