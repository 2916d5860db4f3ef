//! Dataset round trip through fvecs and CSV, subsetting and ground truth.

use svgraph::data::{generate_uniform, ground_truth, load_any, save_csv, save_fvecs};
use svgraph::kernels::{KernelSpec, SimilarityKind};

fn main() -> svgraph::Result<()> {
    let dir = std::env::temp_dir();
    let data = generate_uniform(1000, 16, 2)?;
    let fvecs = dir.join("svgraph_example.fvecs");
    let csv = dir.join("svgraph_example.csv");
    save_fvecs(&data, &fvecs)?;
    save_csv(&data, &csv)?;
    let back = load_any(&fvecs)?;
    println!("fvecs: {} x {}, values stored as f32", back.len(), back.dim());
    println!("csv:   {} x {}", load_any(&csv)?.len(), load_any(&csv)?.dim());

    let subset = back.sample(100, 7)?;
    println!("sampled {} rows, median distance {:.4}", subset.len(), subset.median_pairwise_distance());
    let kernel = KernelSpec::new(SimilarityKind::DotProduct, 1.0)?;
    let truth = ground_truth(&kernel, &subset);
    let own = truth.entries.iter().enumerate().filter(|(i, t)| t.best == *i).count();
    println!("dot product: {own}/{} queries are their own top-1", subset.len());
    Ok(())
}
