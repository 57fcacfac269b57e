//! Writes a state file, reads it back and evaluates every applicable
//! monotone through the uniform interface. With a directory argument it
//! (re)writes the sample states used in the README there.

use resmono::harness::{monotone, state_file};
use resmono::states;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    if let Some(dir) = std::env::args().nth(1) {
        let dir = std::path::PathBuf::from(dir);
        std::fs::create_dir_all(&dir)?;
        state_file::write_state(&dir.join("phi2.json"), &states::max_entangled(2)?)?;
        state_file::write_state(&dir.join("tiles.json"), &states::tiles_upb())?;
        state_file::write_state(&dir.join("werner3.json"), &states::werner(3, 0.3)?)?;
        return Ok(());
    }
    let dir = std::env::temp_dir().join("resmono-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("isotropic.json");
    state_file::write_state(&path, &states::isotropic(2, 0.75)?)?;
    println!("{}", std::fs::read_to_string(&path)?);

    let rho = state_file::read_state(&path)?;
    for name in monotone::NAMES {
        let m = monotone::by_name(name).expect("listed name");
        let e = m.evaluate(&rho, 0)?;
        println!("{name:<5} [{:.6}, {:.6}] declares {:?}", e.lower, e.upper, m.properties());
    }
    Ok(())
}
