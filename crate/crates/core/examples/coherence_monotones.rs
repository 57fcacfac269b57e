//! Relative entropy of coherence, the quintessential coherence and the
//! coherence of formation on a handful of states.

use resmono::coherence::{self, CfOptions};
use resmono::states;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cases = vec![
        ("plus", states::plus_state()),
        ("max coherent (3)", states::max_coherent(3)?),
        ("random pure (3)", states::random_pure(3, 4)?),
        ("random mixed (3)", states::random_density(3, 9)?),
        ("saturated block", coherence::saturated_block_fixture()),
    ];
    println!("{:<18} {:>10} {:>10} {:>10}", "state", "C_r", "Q", "C_f <=");
    for (name, rho) in &cases {
        let cf = coherence::c_f(rho, &CfOptions::default())?;
        println!("{name:<18} {:>10.6} {:>10.6} {:>10.6}", coherence::c_r(rho), coherence::quintessential(rho)?, cf.value);
    }

    // C_r equals the coherent information of the maximally correlated state
    let rho = states::random_density(4, 3)?;
    println!("identity residual on a random qudit: {:.2e}", coherence::check_cr_identity(&rho)?);

    // qubit C_f against a dense search over two-member decompositions
    let q = states::random_density(2, 11)?;
    let cf = coherence::c_f(&q, &CfOptions::default())?;
    println!("qubit C_f: optimizer {:.8}, brute force {:.8}", cf.optimizer, coherence::c_f_qubit_bruteforce(&q, 1e-3));
    Ok(())
}
