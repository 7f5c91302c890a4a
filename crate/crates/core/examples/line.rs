//! Fits the three-point cloud on [-1, 1] at several degrees and prints the results.

use levelfit::verify::{count_components_anchored, nonnegativity_scan};
use levelfit::{fit, BoxDomain, FitOptions, PointCloud};

fn main() -> levelfit::Result<()> {
    let cloud = PointCloud::new(vec![vec![-0.5], vec![0.0], vec![0.25]])?;
    let domain = BoxDomain::cube(1, -1.0, 1.0)?;
    for degree in [0, 2, 7, 17, 26] {
        let start = std::time::Instant::now();
        let r = fit(&cloud, &domain, &FitOptions::new(degree))?;
        let comps = count_components_anchored(&r.polynomial, &domain, 512, cloud.points())?;
        let scan = nonnegativity_scan(&r.polynomial, &domain, &r.grid.refined(4))?;
        println!(
            "d={degree:2} w={:.9} components={comps} margin={:e} scan_min={:e} pivots={} ({:.2}s)",
            r.objective,
            r.diagnostics.containment_margin,
            scan.min_value,
            r.diagnostics.iterations,
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
