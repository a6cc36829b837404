use elasto_web::Demo;

#[test]
fn tracking_a_uniform_phantom_recovers_the_strain() {
    let mut demo = Demo::new(96, 48, "uniform", 0.02, 5, f64::NAN).unwrap();
    assert_eq!((demo.rows(), demo.cols()), (96, 48));
    let trace = demo.track("mechsoul", 20.0).unwrap();
    assert!(trace.windows(2).all(|w| w[1] <= w[0]));
    let [rmse, psnr] = demo.score("axial_strain").unwrap()[..] else { panic!() };
    assert!(rmse < 2e-3, "{rmse}");
    assert!(psnr > 50.0);
}

#[test]
fn rendering_is_deterministic() {
    let a = Demo::new(64, 32, "different_pr", 0.02, 9, 30.0).unwrap();
    let b = Demo::new(64, 32, "different_pr", 0.02, 9, 30.0).unwrap();
    assert_eq!(a.image("post", "gray", 0.0, 0.0).unwrap(), b.image("post", "gray", 0.0, 0.0).unwrap());
}
