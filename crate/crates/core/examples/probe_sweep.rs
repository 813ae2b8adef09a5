//! Sweeps the gradient checks and every probe family over 20 seeds and
//! prints any failing report.

use redor::analysis::{gradient_check, run_probe};

fn main() {
    let t = std::time::Instant::now();
    let mut fails = 0;
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        for width in [4usize, 8] {
            for r in gradient_check(seed, width).unwrap() {
                worst = worst.max(r.statistic);
                fails += usize::from(!r.passed);
            }
        }
        for r in run_probe("all", seed).unwrap() {
            if !r.passed {
                println!(
                    "{} {} stat={:.6e} bound={:.6e} {:?}",
                    r.probe, r.instance, r.statistic, r.bound, r.measured
                );
            }
            fails += usize::from(!r.passed);
        }
    }
    println!("fails={fails} worst_fd={worst:e} elapsed={:?}", t.elapsed());
}
