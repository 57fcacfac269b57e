//! Relative entropy of entanglement w.r.t. PPT states, with the certified
//! Frank–Wolfe interval, for a few standard states.

use resmono::fw::FwOptions;
use resmono::ree;
use resmono::states;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let opts = FwOptions::default();
    let cases = vec![
        ("phi_2", states::max_entangled(2)?),
        ("phi_3", states::max_entangled(3)?),
        ("isotropic(2, 0.8)", states::isotropic(2, 0.8)?),
        ("werner(2, 0.2)", states::werner(2, 0.2)?),
        ("tiles", states::tiles_upb()),
    ];
    println!("{:<20} {:>12} {:>12} {:>10}", "state", "lower", "upper", "fw gap");
    for (name, rho) in cases {
        let b = ree::ree_ppt(&rho, &opts)?;
        println!("{name:<20} {:>12.8} {:>12.8} {:>10.2e}", b.lower, b.upper, b.gap.unwrap_or(f64::NAN));
    }

    // per-copy values on two copies never exceed the single-copy bound
    let rho = states::isotropic(2, 0.7)?;
    for (n, b) in ree::regularized_ree_sequence(&rho, 2, &opts)?.iter().enumerate() {
        println!("isotropic(2, 0.7), n = {}: [{:.6}, {:.6}] per copy", n + 1, b.lower, b.upper);
    }
    Ok(())
}
