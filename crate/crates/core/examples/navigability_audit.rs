//! Audits an SVG: per-node ε bounds, the quasi-monotone certificate, recall
//! and the Delaunay subset check, then writes the report files.

use svgraph::data::generate_uniform;
use svgraph::kernels::KernelSpec;
use svgraph::navigability::{audit, AuditOptions};

fn main() -> svgraph::Result<()> {
    let data = generate_uniform(100, 2, 5)?;
    let kernel = KernelSpec::rbf(1.0)?;
    let options = AuditOptions {
        delaunay_check: true,
        ..AuditOptions::default()
    };
    let report = audit(&data, &kernel, &options)?;
    let eps = &report.general_summary;
    println!("ε: mean {:.4}, p95 {:.4}, max {:.4}", eps.mean, eps.p95, eps.max);
    println!("certified {}/{}, violations {:?}", report.certified_nodes, report.n, report.violations);
    for r in &report.recall {
        println!("recall {} {}: {:.4}", r.traversal, r.mode, r.recall);
    }
    if let Some(check) = &report.delaunay {
        println!(
            "delaunay: {} edges checked, exceptions {:?}",
            check.checked_edges, check.exceptions
        );
    }
    let prefix = std::env::temp_dir().join("svgraph_audit");
    for path in report.write(&prefix)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
