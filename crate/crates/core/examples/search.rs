//! Greedy and backtracking search on an SVG, for a query outside the data.

use svgraph::builder::build_svg;
use svgraph::data::{brute_force_top1, generate_uniform};
use svgraph::kernels::KernelSpec;
use svgraph::search::{beam_search_kernel, greedy_search_euclidean, greedy_search_kernel, SearchParams};
use svgraph::solvers::NnlsSettings;

fn main() -> svgraph::Result<()> {
    let data = generate_uniform(500, 2, 9)?;
    let kernel = KernelSpec::rbf(0.2)?;
    let g = build_svg(&data, &kernel, &NnlsSettings::default())?;
    let query = [0.31, 0.77];
    let truth = brute_force_top1(&kernel, &data, &query)?;
    println!("exact top-1: {}", truth.best);

    let r = greedy_search_euclidean(&g, &data, &query, 0)?;
    println!("euclidean greedy: terminal {} after {} hops", r.terminal, r.path.len() - 1);
    let r = greedy_search_kernel(&g, &data, &kernel, &query, 0)?;
    println!("kernel greedy:    terminal {} path {:?}", r.terminal, r.path);
    for l in [2, 4] {
        let params = SearchParams { queue_length: l, entry: 0 };
        let r = beam_search_kernel(&g, &data, &kernel, &query, params)?;
        println!("beam L={l}:         terminal {} with {} kernel evaluations", r.terminal, r.kernel_evals);
    }
    Ok(())
}
