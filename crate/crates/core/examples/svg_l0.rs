//! Degree-bounded SVG-L0 graphs for a range of M, with the exhaustive and
//! incremental candidate pools.

use svgraph::builder::{build_svg_l0, BuildConfig, CandidatePool};
use svgraph::data::generate_uniform;
use svgraph::kernels::KernelSpec;
use svgraph::navigability::{evaluate_recall, EvalMode, Traversal};

fn main() -> svgraph::Result<()> {
    let data = generate_uniform(300, 8, 1)?;
    let kernel = KernelSpec::rbf(data.median_pairwise_distance())?;
    println!("M  pool         mean-deg  greedy  beam2");
    for m in [4, 8, 16] {
        for (name, pool) in [("full", CandidatePool::Full), ("incremental", CandidatePool::CurrentGraph)] {
            let config = BuildConfig::new(kernel.clone()).with_max_out_degree(m).with_pool(pool);
            let g = build_svg_l0(&data, &config)?;
            let greedy = evaluate_recall(&g, &data, &kernel, Traversal::greedy(), EvalMode::AllPairs)?;
            let beam = evaluate_recall(&g, &data, &kernel, Traversal::beam(2), EvalMode::AllPairs)?;
            println!(
                "{m:<2} {name:<12} {:>8.2}  {:.4}  {:.4}",
                g.degree_stats().mean,
                greedy.recall,
                beam.recall
            );
        }
    }
    Ok(())
}
