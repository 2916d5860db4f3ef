//! The triangle-pruning family side by side: kernel rule, MRNG, Vamana and
//! SSG, each with and without a degree bound.

use svgraph::builder::{build_pruned, BuildConfig, PruneRule};
use svgraph::data::generate_uniform;
use svgraph::kernels::KernelSpec;
use svgraph::navigability::{evaluate_recall, EvalMode, Traversal};

fn main() -> svgraph::Result<()> {
    let data = generate_uniform(200, 4, 3)?;
    let kernel = KernelSpec::rbf(1.0)?;
    let rules = [
        ("kernel", PruneRule::Kernel),
        ("mrng", PruneRule::Mrng),
        ("vamana 1.2", PruneRule::Vamana(1.2)),
        ("ssg 60", PruneRule::Ssg(60.0)),
    ];
    println!("rule        M   mean-deg  euclidean-greedy");
    for (name, rule) in rules {
        for m in [0, 6] {
            let config = BuildConfig::new(kernel.clone()).with_max_out_degree(m);
            let g = build_pruned(&data, rule, &config)?;
            let r = evaluate_recall(&g, &data, &kernel, Traversal::Euclidean, EvalMode::AllPairs)?;
            let bound = if m == 0 { "-".to_string() } else { m.to_string() };
            println!("{name:<11} {bound:<3} {:>8.2}  {:.4}", g.degree_stats().mean, r.recall);
        }
    }
    Ok(())
}
