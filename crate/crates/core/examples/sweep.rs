//! A reduced recall-versus-σ sweep printed as CSV.

use svgraph::experiment::{sweep, sweep_csv, Preset, SweepOptions};

fn main() -> svgraph::Result<()> {
    let options = SweepOptions {
        seeds: Some(3),
        n: Some(60),
        dims: Some(vec![2, 8]),
        ..SweepOptions::default()
    };
    let rows = sweep(Preset::Fig8, &options)?;
    print!("{}", sweep_csv(&rows));
    Ok(())
}
