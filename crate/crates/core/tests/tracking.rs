use elasto::init::{ncc_track, NccParams};
use elasto::io;
use elasto::phantom::{analytic_displacement, generate_speckle, warp_frame, DeformationSpec, PhantomSpec, DEFAULT_WARP_ITERATIONS};
use elasto::solver::{run_tracking, Method, SolverParams};
use elasto::RfFrame;
use ndarray::{s, Array2};

fn pair(rows: usize, cols: usize, seed: u64) -> (RfFrame, RfFrame) {
    let spec = PhantomSpec {
        rows,
        cols,
        seed,
        ..PhantomSpec::default()
    };
    let pre = generate_speckle(&spec).unwrap();
    let truth = analytic_displacement(&DeformationSpec::uniform(0.02, 0.49), (rows, cols)).unwrap();
    let post = warp_frame(&pre, &truth.displacement, DEFAULT_WARP_ITERATIONS).unwrap().frame;
    (pre, post)
}

fn interior_mean(a: &Array2<f64>) -> f64 {
    let (m, n) = a.dim();
    a.slice(s![m / 8..m - m / 8, n / 8..n - n / 8]).mean().unwrap()
}

fn through_file(frame: &RfFrame) -> RfFrame {
    let mut buf = Vec::new();
    io::write_frame(frame, &mut buf).unwrap();
    io::read_frame(buf.as_slice()).unwrap()
}

#[test]
fn frames_stored_on_disk_track_like_the_originals() {
    let (pre, post) = pair(96, 48, 11);
    let r = run_tracking(&through_file(&pre), &through_file(&post), Method::MechSoul, &SolverParams::default(), None).unwrap();
    assert!(r.converged);
    let syy = interior_mean(r.strains.s_yy());
    let sxx = interior_mean(r.strains.s_xx());
    assert!((syy + 0.02).abs() < 0.002, "s_yy {syy}");
    assert!((sxx - 0.0098).abs() < 0.0015, "s_xx {sxx}");
}

#[test]
fn ncc_seed_reaches_the_same_solution() {
    let (pre, post) = pair(96, 48, 12);
    let p = SolverParams::default();
    let from_dp = run_tracking(&pre, &post, Method::Soul, &p, None).unwrap();
    let seed = ncc_track(&pre, &post, &NccParams::default()).unwrap();
    let from_ncc = run_tracking(&pre, &post, Method::Soul, &p, Some(&seed)).unwrap();
    let a = interior_mean(from_dp.strains.s_yy());
    let b = interior_mean(from_ncc.strains.s_yy());
    assert!((a - b).abs() < 5e-4, "{a} vs {b}");
}

#[test]
fn convergence_flag_follows_the_tolerances() {
    let (pre, post) = pair(64, 32, 13);
    let strict = SolverParams {
        outer_iterations: 2,
        step_tolerance: 0.0,
        cost_tolerance: 0.0,
        ..SolverParams::default()
    };
    assert!(!run_tracking(&pre, &post, Method::L1Soul, &strict, None).unwrap().converged);
    let loose = SolverParams {
        cost_tolerance: 1.0,
        ..strict
    };
    let r = run_tracking(&pre, &post, Method::L1Soul, &loose, None).unwrap();
    assert!(r.converged);
    assert_eq!(r.iterations, 2);
}
