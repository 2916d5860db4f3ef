//! Builds a support vector graph on random points and prints a few nodes.

use svgraph::builder::build_svg;
use svgraph::data::generate_uniform;
use svgraph::kernels::KernelSpec;
use svgraph::solvers::NnlsSettings;

fn main() -> svgraph::Result<()> {
    let data = generate_uniform(200, 3, 42)?;
    let kernel = KernelSpec::rbf(data.median_pairwise_distance())?;
    let g = build_svg(&data, &kernel, &NnlsSettings::default())?;

    let stats = g.degree_stats();
    println!(
        "n={} d={} sigma={:.4}: {} edges, out-degree min {} mean {:.2} max {}",
        data.len(),
        data.dim(),
        kernel.sigma(),
        g.edge_count(),
        stats.min,
        stats.mean,
        stats.max
    );
    for i in 0..3 {
        let weights = g.weights(i)?.unwrap_or_default();
        let edges: Vec<String> = g
            .out(i)
            .iter()
            .zip(weights)
            .map(|(j, w)| format!("{j} ({w:.3e})"))
            .collect();
        println!("node {i}: {}", edges.join(", "));
    }
    Ok(())
}
