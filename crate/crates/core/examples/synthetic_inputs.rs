//! Writes synthetic GCB, SOI and scenario files simulated from the published
//! restricted-model estimates, for trying the command-line tool without the real data.
//!
//! ```text
//! cargo run -p gcb-cvar --example synthetic_inputs -- <DIR> [SEED]
//! ```

use std::fs::File;

use gcb_cvar::data::SAMPLE_END;
use gcb_cvar::simulate::{ramp_scenario, simulate_structural, to_sources, StructuralSimulation};
use gcb_cvar::StructuralTheta;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dir = std::path::PathBuf::from(args.next().unwrap_or_else(|| "synthetic".into()));
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);
    std::fs::create_dir_all(&dir)?;

    let sim = StructuralSimulation::new(64, seed);
    let ds = simulate_structural(&StructuralTheta::GCB_1959_2022, &sim)?;
    let (gcb, soi) = to_sources(&ds);
    gcb.write_csv(File::create(dir.join("gcb.csv"))?)?;
    soi.write_csv(File::create(dir.join("soi.csv"))?)?;

    let e_last = *ds.emissions.last().expect("non-empty");
    let sc = ramp_scenario("rising", e_last, 0.25, SAMPLE_END + 1, 2100, 2080);
    let mut w = csv::Writer::from_path(dir.join("scenario.csv"))?;
    w.write_record(["year", "emissions"])?;
    for (y, e) in sc.years.iter().zip(&sc.emissions) {
        w.write_record([y.to_string(), e.to_string()])?;
    }
    w.flush()?;
    println!("wrote gcb.csv, soi.csv and scenario.csv to {}", dir.display());
    Ok(())
}
