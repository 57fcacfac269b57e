//! Runs two small suites from code and shows the report formats.

use resmono::harness::{self, Suite, SuiteConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let normalization = SuiteConfig { dims: "2..4".into(), ..SuiteConfig::defaults(Suite::Normalization) };
    let report = harness::run_suite(&normalization)?;
    for t in &report.trials {
        println!("{}: {:?}, slack {:.3e}", t.label, t.status, t.slack);
    }

    let text = "[pinsker]\ntrials = 5\nseed = 42\n";
    for config in harness::parse_config(text)? {
        let report = harness::run_suite(&config)?;
        println!("{}: {:?}", config.suite.name(), report.summary);
        print!("{}", report.to_csv());
    }
    Ok(())
}
