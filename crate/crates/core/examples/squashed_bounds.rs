//! Upper bounds on the squashed entanglement and on the conditional
//! entanglement of mutual information from explicit extensions.

use resmono::extension::{self, ExtensionOptions};
use resmono::states;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let opts = ExtensionOptions::default();
    let cases = vec![
        ("phi_2", states::max_entangled(2)?),
        ("isotropic(2, 0.8)", states::isotropic(2, 0.8)?),
        ("separable fixture", extension::separable_fixture(3, 5)?),
    ];
    for (name, rho) in &cases {
        let sq = extension::squashed_upper(rho, &opts)?;
        let ce = extension::cemi_upper(rho, &opts)?;
        println!("{name:<18} E_sq <= {:.6} (trivial {:.6}), cemi <= {:.6}", sq.value, sq.trivial_value, ce.value);
    }
    let (record, _, _) = extension::check_sandwich(&states::isotropic(2, 0.8)?, &opts)?;
    println!("sandwich check on isotropic(2, 0.8): {:?}, slack {:.3e}", record.status, record.slack);
    Ok(())
}
