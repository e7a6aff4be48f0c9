//! Controlled coherence under MOAAAR versus no control, from the exact tree.
use spectator::analysis::nc_coherence;
use spectator::control::Strategy;
use spectator::engine::{run_exact_tree, uniform_grid, Schedule, TreeOptions};
use spectator::rtp::NoiseParams;

fn main() -> spectator::Result<()> {
    let params = NoiseParams::default();
    let schedule = Schedule::new(3.0, Strategy::default(), params)?;
    let opts = TreeOptions {
        prune_eps: 1e-6,
        merge_tol: Some(1e-10),
        ..Default::default()
    };
    let report = run_exact_tree(&schedule, &opts, &uniform_grid(3.0, 7))?;
    println!("t      1-C(control)   1-C(none)      bound");
    for p in &report.points {
        let nc = nc_coherence(p.t, &params)?;
        println!(
            "{:.2}  {:.6e}  {:.6e}  {:.1e}",
            p.t,
            1.0 - p.coherence,
            1.0 - nc,
            p.bound
        );
    }
    let last = report.points.last().unwrap();
    let factor = (1.0 - nc_coherence(last.t, &params)?) / (1.0 - last.coherence);
    println!("suppression factor at T: {factor:.1}");
    Ok(())
}
