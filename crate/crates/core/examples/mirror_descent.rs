//! The entropic optimizers on their own: lazy mirror descent over a scaled
//! product of simplices, and fixed-scale exponentiated gradient, fed the
//! same linear losses.

use nalgebra::DVector;
use rand::Rng;
use simplex_control::optimizer::{DacDomain, ExpWeights, LazyMd};
use simplex_control::seed;

fn main() -> simplex_control::Result<()> {
    let domain = DacDomain::square(3, 2, 0.1, 1.0)?;
    let fixed = DacDomain::square(3, 2, 1.0, 1.0)?;
    let n = domain.num_coords();
    println!("{} blocks, {} coordinates", domain.num_blocks(), n);

    let rounds = 500;
    let eta = 0.05;
    let mut md = LazyMd::new(domain, eta)?;
    let mut ew = ExpWeights::new(fixed, eta)?;
    let mut rng = seed::stream(11, "losses");

    let (mut loss_md, mut loss_ew) = (0.0, 0.0);
    let mut total = DVector::zeros(n);
    for _ in 0..rounds {
        // coordinate 0 of every block is slightly better on average
        let g = DVector::from_fn(n, |i, _| rng.gen::<f64>() - if i % 3 == 0 { 0.2 } else { 0.0 });
        loss_md += md.params().flat().dot(&g);
        loss_ew += ew.params().flat().dot(&g);
        total += &g;
        md.update(&g)?;
        ew.update(&g)?;
    }

    // best fixed point: each block on its smallest total coordinate, at an extreme scale
    let vertex_sum: f64 = total.as_slice().chunks(3).map(|b| b.iter().cloned().fold(f64::INFINITY, f64::min)).sum();
    let best = (0.1 * vertex_sum).min(vertex_sum);
    println!("lazy md:     loss {loss_md:>8.3}, scale {:.3}", md.params().scale());
    println!("exp weights: loss {loss_ew:>8.3}");
    println!("best fixed:  loss {best:>8.3}");
    println!("p after training {:.3?}", md.params().p().as_slice());
    Ok(())
}
