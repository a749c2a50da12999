//! Converts raw population counts with births/arrivals into normalized
//! states, perturbation strengths and arrival compositions.

use nalgebra::DVector;
use simplex_control::dynamics::{ingest_counts, Transition};
use simplex_control::simplex::StochasticMatrix;

fn main() -> simplex_control::Result<()> {
    let a = StochasticMatrix::from_rows(&[&[0.9, 0.2], &[0.1, 0.8]])?;
    let transition = Transition::linear(a, StochasticMatrix::identity(2))?;

    // 1000 individuals; 100 arrive in round 1 (all type 1), none in round 2.
    let no_control = DVector::zeros(2);
    let x0 = DVector::from_vec(vec![600.0, 400.0]);
    let moved = transition.bracket(&(&x0 / 1000.0), &no_control) * 1000.0;
    let x1 = &moved + DVector::from_vec(vec![100.0, 0.0]);
    let x2 = transition.bracket(&(&x1 / 1100.0), &no_control) * 1100.0;

    let steps = ingest_counts(&[x0, x1, x2], &[no_control.clone(), no_control], &transition)?;
    for (t, s) in steps.iter().enumerate() {
        println!(
            "round {}: x = {:.4?}  gamma = {:.4}  w = {:.4?}",
            t + 1,
            s.x.as_slice(),
            s.gamma,
            s.w.as_slice()
        );
    }
    Ok(())
}
