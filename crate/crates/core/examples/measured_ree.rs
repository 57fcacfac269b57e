//! Measured relative entropy under PPT measurement families, compared with
//! the unrestricted quantity and the quasi-normalization value.

use resmono::measurement;
use resmono::ree::{self, MeasuredOptions};
use resmono::states;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let opts = MeasuredOptions::default();
    for d in 2..=4 {
        let phi = states::max_entangled(d)?;
        let family = measurement::default_family(&phi, 2, 7)?;
        let m = ree::measured_ree(&phi, &family, &opts)?;
        let target = ((d + 1) as f64).log2() - 1.0;
        println!("phi_{d}: measured in [{:.9}, {:.9}], log2(d+1)-1 = {target:.9} ({} measurements)", m.lower, m.upper, family.len());
    }

    let rho = states::isotropic(2, 0.9)?;
    let family = measurement::default_family(&rho, 4, 1)?;
    let full = ree::ree_ppt(&rho, &opts.ree)?;
    let m = ree::measured_ree_with_upper(&rho, &family, &opts, full.clone())?;
    println!("isotropic(2, 0.9): measured [{:.6}, {:.6}] below unrestricted [{:.6}, {:.6}]", m.lower, m.upper, full.lower, full.upper);
    Ok(())
}
