//! Singlet fidelity achievable with PPT-preserving maps, with and without a
//! correlated catalyst, on the tiles bound entangled state and on an NPT
//! isotropic state.

use resmono::catalysis::{self, CatalysisOptions, CatalystMode, SearchOptions};
use resmono::states;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let opts = CatalysisOptions { build_choi: false, ..Default::default() };
    let tiles = states::tiles_upb();
    let plain = catalysis::ppt_ops_fidelity(&tiles, 1, &CatalysisOptions::default())?;
    println!("tiles, no catalyst: F in [{:.6}, {:.6}]", plain.lower.unwrap_or(0.0), plain.upper);
    if let Some(choi) = &plain.choi {
        println!("  optimal map re-verified: {:?}", choi.verify()?);
    }

    let cats = catalysis::default_catalysts(0)?;
    for cat in cats.iter().filter(|c| !c.name.starts_with("random")) {
        let f = catalysis::catalytic_fidelity(&tiles, &cat.state, 1, CatalystMode::Correlated, &opts)?;
        println!("tiles + {:<20} F <= {:.6}", cat.name, f.upper);
    }

    let iso = states::isotropic(2, 0.8)?;
    let base = catalysis::ppt_ops_fidelity(&iso, 1, &opts)?;
    let search = catalysis::catalyst_search(&iso, 1, &SearchOptions { rounds: 3, ..Default::default() })?;
    println!("isotropic(2, 0.8): plain {:.6}, best catalytic {:.6}", base.upper, search.fidelity.lower.unwrap_or(0.0));
    Ok(())
}
