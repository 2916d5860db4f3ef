//! One node's NNLS problem solved exactly and with a degree bound, and the
//! resulting SVM decision function evaluated at the anchor and its support.

use svgraph::data::generate_uniform;
use svgraph::kernels::{KernelSpec, LogKernelTable};
use svgraph::solvers::{decision_function, nonneg_subspace_pursuit, solve_svg_node, NnlsSettings, PursuitSettings};

fn main() -> svgraph::Result<()> {
    let data = generate_uniform(60, 5, 11)?;
    let kernel = KernelSpec::rbf(data.median_pairwise_distance())?;
    let table = LogKernelTable::new(&data, &kernel);
    let anchor = 0;
    let candidates: Vec<usize> = (1..data.len()).collect();
    let view = table.view(anchor, candidates);

    let exact = solve_svg_node(&view, &NnlsSettings::default())?;
    println!("NNLS support {:?}", exact.support_ids());
    println!("residual {:.3e}", exact.residual_sq);
    for (j, w) in exact.weights() {
        let f = decision_function(&kernel, &data, &exact, data.row(j))?;
        println!("  s[{j}] = {w:.4e}, f(x_{j}) = {f:+.9}");
    }
    let f = decision_function(&kernel, &data, &exact, data.row(anchor))?;
    println!("f(x_anchor) = {f:+.9}");

    for m in [1, 2, 4] {
        let sparse = nonneg_subspace_pursuit(&view, m, &PursuitSettings::default())?;
        println!("M={m}: support {:?} residual {:.3e}", sparse.support_ids(), sparse.residual_sq);
    }
    Ok(())
}
