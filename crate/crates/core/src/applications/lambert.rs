//! Principal branch of the Lambert W function.

use std::f64::consts::E;

use crate::error::{Error, Result};

const MAX_ITERS: usize = 50;

/// `W₀(x)`: the solution `w ≥ −1` of `w·eʷ = x`, for `x ≥ −1/e`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    let branch = -1.0 / E;
    if x.is_nan() || x < branch - 1e-15 {
        return Err(Error::Domain(x));
    }
    if x <= branch {
        return Ok(-1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let mut w = if x < -0.25 {
        // series about the branch point in p = √(2(e·x + 1))
        let p = (2.0 * (E * x + 1.0)).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else {
        x.ln_1p()
    };
    for _ in 0..MAX_ITERS {
        let ew = w.exp();
        let f = w * ew - x;
        if f == 0.0 {
            break;
        }
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            break;
        }
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        let next = w - step;
        let done = (next - w).abs() <= 1e-16 * (1.0 + next.abs());
        w = next.max(-1.0);
        if done {
            break;
        }
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!((lambert_w0(E).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(lambert_w0(-1.0 / E).unwrap(), -1.0);
        assert!(matches!(lambert_w0(-0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn residual_on_log_grid() {
        let mut xs: Vec<f64> = (0..=400).map(|i| 10f64.powf(-12.0 + 18.0 * i as f64 / 400.0)).collect();
        xs.extend((0..=400).map(|i| -1.0 / E * (1.0 - 10f64.powf(-12.0 + 12.0 * i as f64 / 400.0))));
        for x in xs {
            let w = lambert_w0(x).unwrap();
            assert!(w >= -1.0);
            let r = (w * w.exp() - x).abs();
            assert!(r <= 1e-12 * x.abs().max(1.0), "x={x} w={w} r={r}");
        }
    }
}
