mod common;

use std::f64::consts::FRAC_PI_2;

use common::builtin;
use ncp_core::dynamics::IntegratorTolerances;
use ncp_core::measure::{
    linspace, midpoints, ncp_grid, nm_estimate, nm_estimate_with_grid, nm_from_grid, nm_random, nm_sweep,
    representative_region, CellFlag, NmOptions, DEFAULT_NEG_THRESHOLD,
};

fn coarse() -> NmOptions {
    NmOptions {
        resolution: 60,
        refine: false,
        ..Default::default()
    }
}

#[test]
fn nm_is_the_plain_mean_of_positive_cells() {
    let b = builtin("damped_jc", &[("R", 5.0)]);
    let region = representative_region(&b, &IntegratorTolerances::fine()).unwrap();
    let (est, grid) = nm_estimate_with_grid(&b.model::<f64>(), &region, &coarse()).unwrap();
    let pos: Vec<f64> = grid
        .cells()
        .filter(|c| c.3.has_value() && c.2 > 0.0)
        .map(|c| c.2)
        .collect();
    let mean = pos.iter().sum::<f64>() / pos.len() as f64;
    assert_eq!(est.nm, mean);
    assert_eq!(est.n_cells_positive, pos.len());
    assert_eq!(nm_from_grid(&grid).nm, est.nm);
    for (_, _, v, f) in grid.cells() {
        match f {
            CellFlag::Ok => assert!((0.0..FRAC_PI_2).contains(&v)),
            CellFlag::SingularLimit => assert_eq!(v, FRAC_PI_2),
            _ => assert!(v.is_nan()),
        }
    }
}

#[test]
fn grid_is_thread_count_independent() {
    let b = builtin("spin_bath", &[("N", 3.0)]);
    let m = b.model::<f64>();
    let t1 = midpoints(0.0, 3.0, 17);
    let dt = linspace(0.0, 2.0, 9);
    let tol = IntegratorTolerances::default();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let a = one.install(|| ncp_grid(&m, &t1, &dt, &tol, DEFAULT_NEG_THRESHOLD).unwrap());
    let c = three.install(|| ncp_grid(&m, &t1, &dt, &tol, DEFAULT_NEG_THRESHOLD).unwrap());
    assert_eq!(a.flags, c.flags);
    for (x, y) in a.values.iter().zip(&c.values) {
        assert!(x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()));
    }
    // The Δt = 0 column is exactly zero wherever it has a value.
    for i in 0..t1.len() {
        if a.flag(i, 0).has_value() {
            assert_eq!(a.value(i, 0), 0.0);
        }
    }
}

#[test]
fn spin_bath_pattern_is_periodic() {
    let b = builtin("spin_bath", &[("N", 2.0)]);
    let p = b.period().unwrap();
    let m = b.model::<f64>();
    let t1 = midpoints(0.0, p, 12);
    let shifted: Vec<f64> = t1.iter().map(|t| t + p).collect();
    let dt = midpoints(0.0, p, 12);
    let tol = IntegratorTolerances::precise();
    let a = ncp_grid(&m, &t1, &dt, &tol, DEFAULT_NEG_THRESHOLD).unwrap();
    let c = ncp_grid(&m, &shifted, &dt, &tol, DEFAULT_NEG_THRESHOLD).unwrap();
    let mut compared = 0;
    for (x, y) in a.cells().zip(c.cells()) {
        if x.3 == CellFlag::Ok && y.3 == CellFlag::Ok {
            assert!((x.2 - y.2).abs() < 1e-8, "{x:?} vs {y:?}");
            compared += 1;
        }
    }
    assert!(compared > 100);
}

#[test]
fn threshold_stability() {
    for b in [
        builtin("damped_jc", &[("R", 5.0)]),
        builtin("spin_bath", &[("N", 1.0)]),
        builtin("detuned_jc", &[("gamma0", 0.3), ("delta", 10.0)]),
    ] {
        let region = representative_region(&b, &IntegratorTolerances::fine()).unwrap();
        let m = b.model::<f64>();
        let nm = |thr: f64| {
            let opts = NmOptions {
                neg_threshold: thr,
                ..coarse()
            };
            nm_estimate(&m, &region, &opts).unwrap().nm
        };
        let (lo, hi) = (nm(1e-12), nm(1e-9));
        assert!(lo > 0.0);
        assert!((lo - hi).abs() / lo < 1e-3, "{}: {lo} vs {hi}", b.name());
    }
}

#[test]
fn random_sampler_agrees_with_grid() {
    let b = builtin("spin_bath", &[("N", 1.0)]);
    let region = representative_region(&b, &IntegratorTolerances::fine()).unwrap();
    let m = b.model::<f64>();
    let grid = nm_estimate(&m, &region, &coarse()).unwrap();
    let r = nm_random(&m, &region, 2000, 11, &coarse()).unwrap();
    assert!(
        (r.nm - grid.nm).abs() < 4.0 * r.std_error + 0.01,
        "{} vs {}",
        r.nm,
        grid.nm
    );
    assert!((r.support_fraction - grid.support_fraction).abs() < 0.05);
    assert_eq!(r, nm_random(&m, &region, 2000, 11, &coarse()).unwrap());
}

#[test]
fn sweep_records_markovian_points_as_zero() {
    let b = builtin("damped_jc", &[("R", 5.0)]);
    let s = nm_sweep(&b, "R", &[0.3, 2.0], &coarse()).unwrap();
    assert_eq!(s.points[0].estimate.as_ref().unwrap().nm, 0.0);
    assert!(s.points[1].estimate.as_ref().unwrap().nm > 0.5);
    assert_eq!(s.diagnostics.first_positive, Some(2.0));
    assert!(s.diagnostics.nondecreasing);
    assert!(nm_sweep(&b, "bogus", &[1.0], &coarse()).unwrap().points[0]
        .error
        .is_some());
}
