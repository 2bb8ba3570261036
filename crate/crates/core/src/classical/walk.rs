use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{stream, unit};

/// Result of one `n`-step walk of step `d` starting at 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkOutcome {
    /// Number of steps taken to the right, binomial `B(n, p)`.
    pub rights: u64,
    /// Final position `(2 m - n) d`.
    pub position: f64,
}

/// `n` independent steps of size `d`, rightwards with probability `p`.
pub fn symmetric_walk<R: Rng + ?Sized>(n: u64, p: f64, d: f64, rng: &mut R) -> Result<WalkOutcome> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("step probability must lie in [0, 1], got {p}")));
    }
    let rights = (0..n).filter(|_| unit::<f64, _>(rng) < p).count() as u64;
    Ok(WalkOutcome { rights, position: (2.0 * rights as f64 - n as f64) * d })
}

/// Spread of a batch of walks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkStatistics {
    pub walks: u64,
    /// Mean of the right-step count.
    pub mean_rights: f64,
    /// Standard deviation of the right-step count measured in steps of `d`:
    /// `sqrt(n p (1 - p)) d`, i.e. `sqrt(n) d / 2` for the symmetric walk.
    pub count_sigma: f64,
    pub mean_position: f64,
    /// Standard deviation of the final position, `2 sqrt(n p (1 - p)) d`.
    pub position_sigma: f64,
}

/// Runs `walks` walks, walk `i` on stream `seed + i`.
pub fn walk_statistics(n: u64, p: f64, d: f64, walks: u64, seed: u64) -> Result<WalkStatistics> {
    if walks < 2 {
        return Err(Error::invalid("need at least two walks for a spread"));
    }
    let mut counts = Vec::with_capacity(walks as usize);
    let mut positions = Vec::with_capacity(walks as usize);
    for i in 0..walks {
        let w = symmetric_walk(n, p, d, &mut stream(seed, i))?;
        counts.push(w.rights as f64 * d);
        positions.push(w.position);
    }
    let (mc, sc) = mean_sd(&counts);
    let (mp, sp) = mean_sd(&positions);
    Ok(WalkStatistics { walks, mean_rights: mc / d, count_sigma: sc, mean_position: mp, position_sigma: sp })
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
