//! Walk one record by hand: pick a setting, apply the Bayes map for the
//! observed outcome and read off the sufficient statistics.
use spectator::bayes::{bayes_map, control_and_coherence, stats, Outcome};
use spectator::control::{next_setting, Strategy};
use spectator::linalg::AVector;
use spectator::rtp::{stationary_vector, NoiseParams};

fn main() -> spectator::Result<()> {
    let params = NoiseParams::default();
    let strategy = Strategy::default();
    let mut a: AVector = stationary_vector(&params);
    let record = [Outcome::Null, Outcome::Null, Outcome::Click, Outcome::Null];
    for y in record {
        let setting = next_setting(&strategy, &a, &params)?.expect("MOAAAR always measures");
        let f = bayes_map(&setting, y, &params);
        let next = f.apply(&a);
        println!(
            "theta={:+.4} tau={:.4} y={} p(y)={:.4}",
            setting.theta,
            setting.tau,
            y.bit(),
            next.total().re,
        );
        a = next.scale_real(&(1.0 / next.norm1()));
        let s = stats(&a, &params)?;
        println!("   alpha={:?} zeta={:+.4}", s.alpha, s.zeta);
    }
    let c = control_and_coherence(&a);
    println!("control phase {:?}, coherence {:.6}", c.phase, c.coherence);
    Ok(())
}
