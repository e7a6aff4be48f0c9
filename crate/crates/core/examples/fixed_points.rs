//! Null-outcome fixed points E⁰± and the ergodic rate in the deep regime.
use spectator::analysis::{ergodic_rate, fixed_points, h_theta};
use spectator::control::THETA_STAR;
use spectator::rtp::NoiseParams;

fn main() -> spectator::Result<()> {
    let reference = NoiseParams::default();
    let fp = fixed_points(THETA_STAR, None, &reference)?;
    println!("E+ = {:?}", fp.e_plus);
    println!("E- = {:?}", fp.e_minus);
    println!("eigenvalues = {:?}", fp.eigenvalues);

    // The scaled rate approaches H_Θ as κ → 0 and K → ∞.
    for (kappa, k) in [(1e-2, 1e2), (1e-3, 1e3), (1e-4, 1e4)] {
        let p = NoiseParams::new(1.0, 1.0, kappa, k)?;
        let scaled = ergodic_rate(THETA_STAR, None, &p)? * p.rate_scale();
        println!("kappa={kappa:e} K={k:e}  scaled rate {scaled:.6}");
    }
    println!("H_Θ* = {:.6}", h_theta(THETA_STAR)?);
    Ok(())
}
