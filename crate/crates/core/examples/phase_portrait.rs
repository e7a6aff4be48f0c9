//! Where the record probability sits in the (α, ζ) plane after n steps.
use spectator::control::{Strategy, THETA_STAR};
use spectator::engine::{phase_portrait, Schedule, TreeOptions};
use spectator::rtp::NoiseParams;

fn main() -> spectator::Result<()> {
    let params = NoiseParams::default();
    for theta in [THETA_STAR, 1.0] {
        let schedule = Schedule::new(3.0, Strategy::Moaaar { theta }, params)?;
        let r = phase_portrait(&schedule, 10, &TreeOptions::default())?;
        let mut last: Vec<_> = r.points.iter().filter(|p| p.n == 10).collect();
        last.sort_by(|a, b| b.weight.total_cmp(&a.weight));
        println!(
            "Θ = {theta}: {} distinct states at n=10, heaviest:",
            last.len()
        );
        for p in last.iter().take(6) {
            println!(
                "  alpha={:8.4} zeta={:+.4} weight={:.4}",
                p.alpha, p.zeta, p.weight
            );
        }
    }
    Ok(())
}
