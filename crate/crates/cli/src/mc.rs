//! Parallel driver for the Monte Carlo pair-energy integral. Batches carry
//! fixed per-index seeds, so any thread count reproduces the single-threaded
//! result bit for bit.

use rayon::prelude::*;

use gravispin_core::feasibility::{
    batch_layout, kappa_mc_batch, kappa_mc_finish, BatchSums, MonteCarloEstimate, PhysicalConfig,
};

pub fn kappa_monte_carlo_parallel(
    config: &PhysicalConfig,
    d: f64,
    samples: u64,
    seed: u64,
) -> MonteCarloEstimate {
    let batches = batch_layout(samples);
    let sums: Vec<BatchSums> = batches
        .par_iter()
        .map(|&(index, size)| kappa_mc_batch(config, d, seed, index, size))
        .collect();
    let total = sums.into_iter().fold(BatchSums::default(), BatchSums::merge);
    kappa_mc_finish(config, total, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use gravispin_core::feasibility::kappa_monte_carlo;

    #[test]
    fn parallel_equals_serial_bit_for_bit() {
        let cfg = PhysicalConfig {
            mass: 1.0,
            sigma: 1.0,
            separation: 2.0,
            time: 1.0,
            repetitions: 1,
            g: 1.0,
            hbar: 1.0,
        };
        let serial = kappa_monte_carlo(&cfg, 0.0, 600_000, 9);
        let parallel = kappa_monte_carlo_parallel(&cfg, 0.0, 600_000, 9);
        assert_eq!(serial.mean.to_bits(), parallel.mean.to_bits());
        assert_eq!(serial.std_error.to_bits(), parallel.std_error.to_bits());
    }
}
