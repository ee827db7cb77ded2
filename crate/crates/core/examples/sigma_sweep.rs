//! Full replicated sweep over an automatic sigma grid for the three
//! ensembles with tanh, written as CSV and SVG bar charts into `out/`.
//!
//! cargo run --release --example sigma_sweep -- [replications] [jobs]

use std::path::Path;

use memcap::experiment::{emit_csv, emit_plot};
use memcap::{run_sweep, Activation, Ensemble, SweepConfig};

fn main() -> memcap::Result<()> {
    let mut args = std::env::args().skip(1);
    let replications: usize = args.next().map_or(3, |s| s.parse().expect("replications"));
    let jobs: usize = args.next().map_or(1, |s| s.parse().expect("jobs"));
    let out = Path::new("out");
    std::fs::create_dir_all(out).map_err(|e| memcap::Error::Io {
        path: out.to_path_buf(),
        source: e,
    })?;

    for ensemble in [
        Ensemble::OrthogonalGaussian,
        Ensemble::sparse_default(),
        Ensemble::DenseGaussian,
    ] {
        let mut cfg = SweepConfig::new(ensemble, Activation::Tanh);
        cfg.replications = replications;
        let res = run_sweep(&cfg, jobs)?;
        println!("{}", ensemble.label());
        for row in &res.rows {
            println!(
                "  sigma={:>10.3e}  MC={:>7.3} +- {:.3}  saturated {}/{}",
                row.sigma, row.mc_mean, row.mc_sd, row.regime_saturated, row.n_ok
            );
        }
        let stem = format!("tanh_{}", ensemble.label().replace(' ', "_"));
        emit_csv(&res, &out.join(format!("{stem}.csv")))?;
        emit_plot(&res, &out.join(format!("{stem}.svg")))?;
    }
    println!("wrote out/*.csv and out/*.svg");
    Ok(())
}
