use roict_core::geometry::FanBeamGeometry;
use roict_core::metrics::rel_err_roi;
use roict_core::objective::{Formulation, ObjectiveSpec, Regularizer};
use roict_core::phantom::generate_phantom;
use roict_core::projector::assemble;
use roict_core::roi::{build_mask, roi_pixels, truncate, RoiDisk};
use roict_core::sgp::{sgp_solve, SgpParams};

fn main() {
    let n = 128usize;
    for offset in [1.5f64, -1.5] {
        let g = FanBeamGeometry::uniform(182, 130, 0.8, 291.20, 115.84, offset).unwrap();
        let w = assemble(&g, n).unwrap();
        let truth = generate_phantom(n).unwrap().with_pixel_size(w.pixel_size);
        let y = w.forward(&truth).unwrap();
        let fov = n as f64 * w.pixel_size;
        let center = (0.05 * fov, -0.05 * fov);
        for delta in [5e-3, 1e-2, 2e-2, 3e-2, 5e-2] {
            let radius = 0.15 * n as f64 * w.pixel_size;
            let roi = RoiDisk::new(center, radius).unwrap();
            let mask = build_mask(&g, &roi);
            let y0 = truncate(&y, &mask).unwrap();
            let obj = ObjectiveSpec::new(Formulation::Implicit, &w, &mask, &y0, Regularizer::None, 0.0, 0.1, delta).unwrap();
            let pixels = roi_pixels(n, w.pixel_size, &roi);
            let params = SgpParams { max_iter: 8000, stop_tol: 0.0, ..Default::default() };
            let f0 = roict_core::phantom::Image::zeros(n, w.pixel_size);
            let res = sgp_solve(&obj, &params, &f0, None, None).unwrap();
            let rel = rel_err_roi(&res.f_hat, &truth, &pixels).unwrap();
            println!("offset={offset} delta={delta:.0e}: rel={rel:.4}");
        }
    }
}
