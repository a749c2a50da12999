//! Stationary distributions, distance to stationarity and mixing times,
//! including a closed-loop check for a linear policy.

use simplex_control::mixing::{closed_loop, mixing_profile, t_mix, tau_mixes};
use simplex_control::simplex::{ScaledStochasticMatrix, StochasticMatrix};

fn main() -> simplex_control::Result<()> {
    let lazy = StochasticMatrix::from_rows(&[&[0.9, 0.2], &[0.1, 0.8]])?;
    let profile = mixing_profile(&lazy, 8)?;
    println!("stationary {:.4?}", profile.stationary.as_slice());
    println!("{:>3} {:>10} {:>10}", "t", "D(t)", "Dbar(t)");
    for (t, (d, db)) in profile.d_values.iter().zip(&profile.dbar_values).enumerate() {
        println!("{t:>3} {d:>10.6} {db:>10.6}");
    }
    println!("t_mix = {}", profile.t_mix_quarter);

    // A periodic chain never mixes.
    let flip = StochasticMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]])?;
    println!("t_mix(flip) = {}", t_mix(&flip));

    // Feeding back half the mass through K makes the flip chain mix.
    let b = StochasticMatrix::identity(2);
    let k = ScaledStochasticMatrix::from_rows(&[&[0.25, 0.25], &[0.25, 0.25]])?;
    let closed = closed_loop(&flip, &b, &k)?;
    println!("closed loop {:?}, t_mix = {}", closed.entries().as_slice(), t_mix(&closed));
    println!("K is 4-mixing: {}", tau_mixes(&flip, &b, &k, 4.0)?);
    Ok(())
}
