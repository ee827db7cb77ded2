//! Tabulate the activations and show where each one stops being linear.

use memcap::Activation;

fn main() -> memcap::Result<()> {
    let acts = [
        Activation::piecewise(0.5, 2.0)?,
        Activation::Tanh,
        Activation::LogSig,
        Activation::Relu,
        Activation::Identity,
    ];
    print!("{:>8}", "x");
    for a in &acts {
        print!("{:>22}", a.to_string());
    }
    println!();
    for x in [-10.0, -2.0, -1.0, -0.5, -0.1, 0.0, 0.1, 0.5, 1.0, 2.0, 10.0] {
        print!("{x:>8}");
        for a in &acts {
            print!("{:>22.6}", a.apply(x)?);
        }
        println!();
    }

    println!();
    for a in &acts {
        let exact = a
            .linear_radius()
            .map_or("none".to_string(), |r| format!("{r}"));
        let approx = a
            .approximate_linear_radius(1e-3)
            .map_or("-".to_string(), |r| format!("{r:.4}"));
        println!(
            "{:<20} saturating={:<5} bounded={:<5} exact linear radius={exact:<6} within 0.1%: {approx}",
            a.to_string(),
            a.is_saturating(),
            a.is_bounded()
        );
    }
    Ok(())
}
