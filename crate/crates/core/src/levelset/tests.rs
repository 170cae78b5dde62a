use super::*;
use crate::terrain::{synth, SynthKind};

fn flat(n: usize, h: f64) -> TerrainGrid {
    let half = (n - 1) as f64 * h / 2.0;
    let spec = GridSpec::square(n, h, Vec2::new(-half, -half)).unwrap();
    synth(spec, &SynthKind::Flat { height: 0.0 }).unwrap()
}

fn flat_speed() -> f64 {
    let m = MobilityModel::default();
    m.penalization(0.0).unwrap() * m.velocity(0.0)
}

#[test]
fn flat_crossing_time_matches_distance_over_speed() {
    let terrain = flat(61, 0.5);
    let opts = SolverOptions::default();
    let mut run = init_run(
        &terrain,
        &MobilityModel::default(),
        &ControlDisc::default(),
        Mode::Forward,
        Vec2::ZERO,
        &opts,
    )
    .unwrap();
    assert_eq!(run.delta(), 1.5);
    let t = run.run_until_point(Vec2::new(10.0, 0.0)).unwrap();
    let exact = (10.0 - 1.5) / flat_speed();
    assert!((t - exact).abs() / exact < 0.02, "{t} vs {exact}");
    let snaps = run.snapshots();
    assert_eq!(snaps[0].time, 0.0);
    assert_eq!(snaps.last().unwrap().time, run.time());
    assert!(run.time() >= t);
}

#[test]
fn phi_never_increases_without_redistancing() {
    let terrain = flat(41, 0.5);
    let opts = SolverOptions { redistance_every: 0, ..Default::default() };
    let mut run = init_run(
        &terrain,
        &MobilityModel::default(),
        &ControlDisc::new(16, 3).unwrap(),
        Mode::Forward,
        Vec2::new(1.0, -0.5),
        &opts,
    )
    .unwrap();
    for _ in 0..15 {
        let before = run.phi().to_vec();
        run.advance().unwrap();
        for (a, b) in before.iter().zip(run.phi()) {
            assert!(*b <= *a + 1e-12);
        }
    }
    // arrival times only at swept nodes, and zero inside the start disk
    let arr = run.arrival();
    for (k, t) in arr.times().iter().enumerate() {
        let p = arr.spec().node(k % 41, k / 41);
        if p.distance(Vec2::new(1.0, -0.5)) <= 1.5 {
            assert_eq!(*t, 0.0);
        }
        if !t.is_nan() {
            assert!(*t <= run.time() + 1e-12);
            assert!(run.phi()[k] <= 0.0);
        }
    }
}

#[test]
fn forward_and_reverse_agree_on_a_ramp() {
    let spec = GridSpec::square(81, 0.5, Vec2::new(-20.0, -20.0)).unwrap();
    let terrain = TerrainGrid::from_fn(spec, |p| 0.08 * p.x + 0.03 * p.y).unwrap();
    let (a, b) = (Vec2::new(-8.0, -3.0), Vec2::new(9.0, 4.0));
    let model = MobilityModel::default();
    let disc = ControlDisc::default();
    let opts = SolverOptions { snapshot_every: 0, ..Default::default() };
    let fwd = init_run(&terrain, &model, &disc, Mode::Forward, a, &opts)
        .unwrap()
        .run_until_point(b)
        .unwrap();
    let mut rev = init_run(&terrain, &model, &disc, Mode::Reverse, b, &opts).unwrap();
    let field = rev.run_until_region(a, 1.0).unwrap();
    let back = field.sample(a).unwrap();
    assert!((fwd - back).abs() / fwd < 0.03, "{fwd} vs {back}");
}

#[test]
fn redistancing_happens_on_schedule() {
    let terrain = flat(41, 0.5);
    let opts = SolverOptions { redistance_every: 4, ..Default::default() };
    let mut run = init_run(
        &terrain,
        &MobilityModel::default(),
        &ControlDisc::new(16, 3).unwrap(),
        Mode::Forward,
        Vec2::ZERO,
        &opts,
    )
    .unwrap();
    for _ in 0..9 {
        run.advance().unwrap();
    }
    assert_eq!(run.redistance_count(), 2);
    let stats = run.band_gradient_stats(3).unwrap();
    assert!(stats.near_unit > 0.95, "{stats:?}");
}

#[test]
fn gradient_lookup_respects_stored_range() {
    let terrain = flat(41, 0.5);
    let mut run = init_run(
        &terrain,
        &MobilityModel::default(),
        &ControlDisc::new(16, 3).unwrap(),
        Mode::Forward,
        Vec2::ZERO,
        &SolverOptions::default(),
    )
    .unwrap();
    for _ in 0..4 {
        run.advance().unwrap();
    }
    let t = run.time();
    let g = run.gradient_at(Vec2::new(4.0, 0.0), 0.5 * t).unwrap();
    assert!((g.x - 1.0).abs() < 0.05 && g.y.abs() < 0.05, "{g:?}");
    assert!(matches!(
        run.gradient_at(Vec2::new(4.0, 0.0), 1.5 * t),
        Err(Error::TimeOutOfRange { .. })
    ));
    assert!(matches!(run.gradient_at(Vec2::new(40.0, 0.0), 0.0), Err(Error::OutOfDomain { .. })));
    let phi = run.phi_at(Vec2::new(4.0, 0.0), 0.0).unwrap();
    assert!((phi - 2.5).abs() < 1e-12);
}

#[test]
fn preconditions() {
    let terrain = flat(41, 0.5);
    let model = MobilityModel::default();
    let disc = ControlDisc::new(16, 3).unwrap();
    let opts = SolverOptions::default();
    let near_edge = init_run(&terrain, &model, &disc, Mode::Forward, Vec2::new(9.0, 0.0), &opts);
    assert!(matches!(near_edge, Err(Error::Precondition(_))));
    let outside = init_run(&terrain, &model, &disc, Mode::Forward, Vec2::new(11.0, 0.0), &opts);
    assert!(matches!(outside, Err(Error::OutOfDomain { .. })));
    let thin = SolverOptions { delta: Some(0.6), ..Default::default() };
    assert!(matches!(
        init_run(&terrain, &model, &disc, Mode::Forward, Vec2::ZERO, &thin),
        Err(Error::InvalidParameter(_))
    ));
    let mut run = init_run(&terrain, &model, &disc, Mode::Forward, Vec2::ZERO, &opts).unwrap();
    assert!(matches!(run.run_until_point(Vec2::new(1.0, 0.0)), Err(Error::Precondition(_))));
    assert!(matches!(run.run_until_region(Vec2::new(5.0, 0.0), 1.0), Err(Error::Precondition(_))));
    let mut rev = init_run(&terrain, &model, &disc, Mode::Reverse, Vec2::ZERO, &opts).unwrap();
    assert!(matches!(rev.run_until_region(Vec2::new(2.0, 0.0), 1.0), Err(Error::Precondition(_))));
}

#[test]
fn step_budget_is_reported() {
    let terrain = flat(41, 0.5);
    let opts = SolverOptions { max_steps: 3, ..Default::default() };
    let mut run = init_run(
        &terrain,
        &MobilityModel::default(),
        &ControlDisc::new(16, 3).unwrap(),
        Mode::Forward,
        Vec2::ZERO,
        &opts,
    )
    .unwrap();
    match run.run_until_point(Vec2::new(7.0, 0.0)) {
        Err(Error::Timeout { steps, covered, .. }) => {
            assert_eq!(steps, 3);
            assert!(covered > 0.0 && covered < 100.0);
        }
        other => panic!("expected timeout, got {other:?}"),
    }
}

#[test]
fn arrival_field_sampling() {
    let spec = GridSpec::square(3, 1.0, Vec2::ZERO).unwrap();
    let f = ArrivalField::new(spec, vec![0.0, 1.0, 2.0, 1.0, 2.0, 3.0, f64::NAN, 3.0, 4.0]).unwrap();
    assert!((f.sample(Vec2::new(1.5, 0.5)).unwrap() - 2.0).abs() < 1e-12);
    assert!(matches!(f.sample(Vec2::new(0.5, 1.5)), Err(Error::NoArrival { .. })));
    assert!((f.coverage() - 8.0 / 9.0).abs() < 1e-12);
    assert!(ArrivalField::new(spec, vec![0.0; 4]).is_err());
}

#[test]
fn crossing_time_interpolates() {
    assert!((crossing_time(2.0, 0.1, 0.3, -0.1) - 2.075).abs() < 1e-12);
}

#[test]
fn single_step_respects_flux_bound() {
    let terrain = flat(41, 0.5);
    let mut run = init_run(
        &terrain,
        &MobilityModel::default(),
        &ControlDisc::default(),
        Mode::Forward,
        Vec2::ZERO,
        &SolverOptions::default(),
    )
    .unwrap();
    let spec = *run.spec();
    let before = run.phi().to_vec();
    // largest gradient the upwind flux can see: per axis the bigger one-sided
    // ENO slope
    let nx = spec.nx;
    let max_grad = (0..spec.len())
        .map(|k| {
            let (i, j) = (k % nx, k / nx);
            let row = &before[j * nx..(j + 1) * nx];
            let col: Vec<f64> = (0..spec.ny).map(|jj| before[jj * nx + i]).collect();
            let (mx, px) = eno2_onesided(row, i, spec.dx);
            let (my, py) = eno2_onesided(&col, j, spec.dy);
            mx.abs().max(px.abs()).hypot(my.abs().max(py.abs()))
        })
        .fold(0.0, f64::max);
    let dt = step(&mut run).unwrap();
    assert!((dt - 0.5 * 0.5 / 1.11).abs() < 1e-12);
    let change = before
        .iter()
        .zip(run.phi())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(change <= dt * flat_speed() * max_grad * (1.0 + 1e-9), "{change}");
}
