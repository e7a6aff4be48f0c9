//! Cross-check the exact tree against seeded Monte Carlo.
use spectator::control::Strategy;
use spectator::engine::{run_exact_tree, run_monte_carlo, McOptions, Schedule, TreeOptions};
use spectator::rtp::NoiseParams;

fn main() -> spectator::Result<()> {
    let params = NoiseParams::default();
    let schedule = Schedule::new(0.6, Strategy::default(), params)?;
    let grid = [0.15, 0.3, 0.45, 0.6];
    let exact = run_exact_tree(&schedule, &TreeOptions::default(), &grid)?;
    let mc = run_monte_carlo(&schedule, &McOptions::new(20_000, 7), &grid)?;
    for (e, m) in exact.points.iter().zip(&mc) {
        let z = (e.coherence - m.coherence) / m.std_error;
        println!(
            "t={:.2} tree={:.6} mc={:.6}±{:.1e} z={z:+.2}",
            e.t, e.coherence, m.coherence, m.std_error
        );
    }
    Ok(())
}
