use horoflow::density::{
    self, affine_minimality_probe, coverage_trend, cylinder_im_bound, dichotomy_experiment, sample_orbit, AffineSweep,
    CoverageGrid, FlowKind, HitSet, Verdict,
};
use horoflow::fuchsian::{genus2_octagon_group, DirichletReducer, HyperbolicCylinder};
use horoflow::hyperbolic::{horocycle_flow, Frame, Moebius};

fn start() -> Frame {
    Frame::new(Moebius::new(2.0, -1.0, 1.0, 0.0).unwrap())
}

#[test]
fn coverage_never_drops_as_budget_grows() {
    let g = genus2_octagon_group();
    let grid = CoverageGrid::for_group(&g, 20, 20, 16).unwrap();
    for flow in [FlowKind::Horocycle, FlowKind::Geodesic] {
        let rows = coverage_trend(&g, &start(), flow, &[10.0, 50.0, 200.0], 0.01, &grid, 3, 1.0).unwrap();
        assert!(rows.windows(2).all(|w| w[1].cells_hit >= w[0].cells_hit), "{flow:?}");
    }
}

#[test]
fn folded_frames_lie_in_the_domain_and_match_the_flow() {
    let g = genus2_octagon_group();
    let reducer = DirichletReducer::new(&g);
    let sample = sample_orbit(&g, &start(), FlowKind::Horocycle, 20.0, 0.01).unwrap();
    assert_eq!(sample.count, 2001);
    for (n, f) in sample.frames.iter().enumerate().step_by(97) {
        assert!(reducer.is_reduced(f.base));
        // Independent folding of the directly computed frame.
        let direct = reducer.reduce(&horocycle_flow(&start(), n as f64 * 0.01)).unwrap().frame;
        let dz = direct.base().to_complex() - f.base.to_complex();
        assert!(dz.norm() < 1e-6, "sample {n}: {dz}");
    }
}

#[test]
fn samples_do_not_depend_on_thread_count() {
    let g = genus2_octagon_group();
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| sample_orbit(&g, &start(), FlowKind::Horocycle, 100.0, 0.01).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn affine_sweep_contains_the_horocycle() {
    let g = genus2_octagon_group();
    let grid = CoverageGrid::for_group(&g, 20, 20, 16).unwrap();
    let sweep = AffineSweep { t_max: 1.0, rows: 3, s_max: 100.0, ds: 0.01 };
    assert_eq!(sweep.row_times()[1], 0.0);
    let probe = affine_minimality_probe(&g, &start(), 100.0, 0.01, &grid, &sweep).unwrap();
    assert!(probe.contains_horocycle);
    assert!(probe.affine.cells_hit >= probe.horocycle.cells_hit);
}

#[test]
fn cylinder_rows_above_the_bound_stay_empty() {
    let cyl = HyperbolicCylinder::new(2.0).unwrap();
    let g = cyl.group();
    let grid = CoverageGrid::for_group(&g, 20, 20, 16).unwrap();
    let bound = cylinder_im_bound(&cyl, &start());
    let sample = sample_orbit(&g, &start(), FlowKind::Horocycle, 2000.0, 0.01).unwrap();
    let highest = sample.frames.iter().map(|f| f.base.im()).fold(0.0, f64::max);
    assert!(highest <= bound + 1e-9, "{highest} > {bound}");

    let hits = HitSet::from_frames(&grid, &sample.frames);
    let above: Vec<usize> = (0..grid.y_bins).filter(|&iy| grid.row_floor(iy) > bound).collect();
    assert!(!above.is_empty());
    assert!(above.iter().all(|&iy| !hits.row_hit(&grid, iy)));

    let report = dichotomy_experiment(&g, &start(), &[100.0, 1000.0], 0.01, &grid, None).unwrap();
    assert_eq!(report.empty_rows, above);
    assert_eq!(report.verdict, Verdict::Stall);
}

#[test]
fn csv_layout() {
    let g = genus2_octagon_group();
    let grid = CoverageGrid::for_group(&g, 4, 4, 2).unwrap();
    let report = dichotomy_experiment(&g, &start(), &[1.0, 2.0], 0.1, &grid, None).unwrap();
    let csv = report.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("budget,flow,cells_hit,cells_total,coverage,verdict"));
    assert_eq!(lines.count(), 2);
    let sample = sample_orbit(&g, &start(), FlowKind::Horocycle, 1.0, 0.1).unwrap();
    let points = density::orbit_points_csv(&sample, 5);
    assert!(points.starts_with("base_re,base_im,direction\n"));
    assert!((2..=6).contains(&points.lines().count()));
}
