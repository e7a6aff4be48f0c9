//! Locate the optimal MOAAAR angle and print the H_Θ curve around it.
use spectator::analysis::{h_theta, optimize_theta};

fn main() -> spectator::Result<()> {
    let (theta, h) = optimize_theta();
    println!("theta* = {theta:.6}  H* = {h:.6}");
    for i in 0..=8 {
        let t = 1.1 + 0.1 * i as f64;
        println!("{t:.2}  {:.6}", h_theta(t)?);
    }
    println!("H(pi/2) = {:.6}", h_theta(std::f64::consts::FRAC_PI_2)?);
    Ok(())
}
