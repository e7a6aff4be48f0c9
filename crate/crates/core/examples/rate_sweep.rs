//! Scaled MOAAAR decay rates approaching H* as K grows.
use spectator::analysis::{default_window, fit_rate, optimize_theta};
use spectator::control::Strategy;
use spectator::engine::{run_exact_tree, Schedule, TreeOptions};
use spectator::rtp::NoiseParams;

fn main() -> spectator::Result<()> {
    let (_, h_star) = optimize_theta();
    let horizon = 4.0;
    let opts = TreeOptions {
        prune_eps: 1e-9,
        merge_tol: Some(1e-10),
        ..Default::default()
    };
    for k in [10.0, 20.0, 40.0, 80.0] {
        let params = NoiseParams::new(1.0, 1.0, 0.2, k)?;
        let window = default_window(&params, horizon);
        let grid: Vec<f64> = (0..=40)
            .map(|i| window.0 + (window.1 - window.0) * i as f64 / 40.0)
            .collect();
        let schedule = Schedule::new(horizon, Strategy::default(), params)?;
        let r = run_exact_tree(&schedule, &opts, &grid)?;
        let series: Vec<_> = r.points.iter().map(|p| (p.t, p.coherence)).collect();
        let fit = fit_rate(&series, window, &params)?;
        println!(
            "K={k:>4}  scaled={:.4}  H*-scaled={:.4}  residual={:.2e}",
            fit.scaled_rate,
            h_star - fit.scaled_rate,
            fit.relative_residual
        );
    }
    Ok(())
}
