//! LP Delaunay neighbors against SVG neighbors on a small planar set.

use svgraph::builder::build_svg;
use svgraph::data::generate_uniform;
use svgraph::kernels::KernelSpec;
use svgraph::navigability::{delaunay_graph, delaunay_subset_check};
use svgraph::solvers::NnlsSettings;

fn main() -> svgraph::Result<()> {
    let data = generate_uniform(30, 2, 4)?;
    let delaunay = delaunay_graph(&data)?;
    for (i, nb) in delaunay.iter().take(5).enumerate() {
        println!("{i}: delaunay {:?} degenerate {:?}", nb.neighbors, nb.degenerate);
    }
    for sigma in [1.0, 0.1, 0.02] {
        let g = build_svg(&data, &KernelSpec::rbf(sigma)?, &NnlsSettings::default())?;
        let check = delaunay_subset_check(&g, &delaunay)?;
        println!(
            "σ={sigma}: svg degree {:.2}, delaunay degree {:.2}, exceptions {:?}",
            g.degree_stats().mean,
            check.mean_delaunay_degree,
            check.exceptions
        );
    }
    Ok(())
}
