use nstorus::config::uniform_grid;
use nstorus::initial::{random_hs_with_norm, single_mode, taylor_green};
use nstorus::mild::{
    duhamel_apply, initial_continuity_check, momentum_residual, picard_solve, pressure_recover, MildMap,
    PicardSolver,
};
use nstorus::{Complex64, Lattice, ProductMethod, SolverConfig, SpectralField};

fn exact_taylor_green(lat: &std::sync::Arc<Lattice>, t: f64, nu: f64) -> SpectralField {
    taylor_green(lat).unwrap().scaled((-2.0 * nu * t).exp())
}

#[test]
fn taylor_green_decays_at_rate_two_nu() {
    let cfg = SolverConfig::new(2, 16, 1.0, 1.0, 128);
    let lat = Lattice::new(2, 16).unwrap();
    let (traj, report) = picard_solve(&taylor_green(&lat).unwrap(), &cfg).unwrap();
    assert!(report.converged);
    for (&t, v) in traj.times().iter().zip(traj.states()) {
        assert!(v.distance_l1(&exact_taylor_green(&lat, t, 1.0)).unwrap() <= 1e-8, "t = {t}");
    }
}

#[test]
fn taylor_green_pressure_from_the_elimination_formula() {
    // p = -Delta^{-1} d_i d_j (v^i v^j) for (sin x cos y, -cos x sin y) is
    // +(cos 2x + cos 2y) / 4.
    let lat = Lattice::new(2, 8).unwrap();
    for t in [0.0, 0.5] {
        let p = pressure_recover(&exact_taylor_green(&lat, t, 1.0)).unwrap();
        let amp = 0.125 * (-4.0 * t).exp();
        for k in [[2, 0], [-2, 0], [0, 2], [0, -2]] {
            assert!((p.coeff_at(0, &k).unwrap() - Complex64::new(amp, 0.0)).norm() < 1e-15);
        }
        assert!((p.norm_l1() - 4.0 * amp).abs() < 1e-15);
    }
}

#[test]
fn taylor_green_residual_is_second_order_in_time() {
    let lat = Lattice::new(2, 8).unwrap();
    let v0 = taylor_green(&lat).unwrap();
    let max_residual = |m: usize| {
        let cfg = SolverConfig::new(2, 8, 1.0, 1.0, m);
        let (traj, _) = picard_solve(&v0, &cfg).unwrap();
        momentum_residual(&traj).unwrap().iter().map(|p| p.1).fold(0.0, f64::max)
    };
    let ratio = max_residual(64) / max_residual(128);
    assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn single_mode_heat_flow_residual() {
    // one solenoidal Fourier pair: the nonlinearity vanishes identically
    let lat = Lattice::new(2, 4).unwrap();
    let v0 = single_mode(&lat, &[1, 2], 0.3, &[1.0, 0.0]).unwrap();
    let cfg = SolverConfig::new(2, 4, 0.5, 1.0, 64);
    let (traj, _) = picard_solve(&v0, &cfg).unwrap();
    let h = 1.0 / 64.0;
    let decay = 0.5 * 5.0;
    // centred difference of e^{-c t} has relative error c^2 h^2 / 6
    let bound = v0.norm_l1() * decay * decay * decay * h * h / 6.0 * 1.01;
    for (_, r) in momentum_residual(&traj).unwrap() {
        assert!(r <= bound, "{r} > {bound}");
    }
}

#[test]
fn converged_trajectory_is_a_fixed_point() {
    let lat = Lattice::new(2, 6).unwrap();
    let v0 = random_hs_with_norm(&lat, 2.0, 0.05, 3).unwrap();
    let cfg = SolverConfig::new(2, 6, 1.0, 0.5, 32);
    let (traj, report) = picard_solve(&v0, &cfg).unwrap();
    assert!(report.converged);
    let map = MildMap::new(&lat, 1.0, cfg.times(), ProductMethod::Fft);
    let image = map.apply(&v0, traj.states()).unwrap();
    let gap = image
        .iter()
        .zip(traj.states())
        .map(|(a, b)| a.distance_l1(b).unwrap())
        .fold(0.0, f64::max);
    assert!(gap <= cfg.picard_tol, "{gap}");
}

#[test]
fn every_iterate_is_solenoidal_with_fixed_mean() {
    let lat = Lattice::new(2, 6).unwrap();
    let mut v0 = random_hs_with_norm(&lat, 2.0, 0.1, 8).unwrap();
    v0.set(0, lat.zero_index(), Complex64::new(0.3, 0.0));
    v0.set(1, lat.zero_index(), Complex64::new(-0.1, 0.0));
    let cfg = SolverConfig::new(2, 6, 1.0, 0.3, 24);
    let mut checked = 0;
    PicardSolver::new(&cfg)
        .observe(|_, states| {
            for s in states {
                assert!(s.divergence_defect().unwrap() <= 1e-12);
                assert_eq!(s.mean(0), Complex64::new(0.3, 0.0));
                assert_eq!(s.mean(1), Complex64::new(-0.1, 0.0));
            }
            checked += 1;
        })
        .solve(&v0)
        .unwrap();
    assert!(checked >= 2);
}

#[test]
fn galerkin_energy_never_increases() {
    for seed in [1, 2, 3] {
        let lat = Lattice::new(2, 8).unwrap();
        let v0 = random_hs_with_norm(&lat, 2.0, 0.2, seed).unwrap();
        let cfg = SolverConfig::new(2, 8, 0.5, 0.2, 64);
        let (traj, _) = picard_solve(&v0, &cfg).unwrap();
        let e = traj.energies();
        for w in e.windows(2) {
            assert!(w[1] <= w[0] + 1e-10 * e[0], "{} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn direct_and_fast_sweeps_agree() {
    let lat = Lattice::new(2, 6).unwrap();
    let v0 = random_hs_with_norm(&lat, 2.0, 0.5, 4).unwrap();
    let times = uniform_grid(0.2, 8);
    let fast = MildMap::new(&lat, 1.0, times.clone(), ProductMethod::Fft);
    let direct = MildMap::new(&lat, 1.0, times, ProductMethod::Direct);
    let start = fast.linear_part(&v0);
    let a = fast.apply(&v0, &start).unwrap();
    let b = direct.apply(&v0, &start).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!(x.distance_l1(y).unwrap() <= 1e-11);
    }
}

#[test]
fn time_grid_refinement_is_second_order() {
    let lat = Lattice::new(2, 6).unwrap();
    let v0 = random_hs_with_norm(&lat, 2.0, 0.3, 12).unwrap();
    let solve = |m: usize| {
        let cfg = SolverConfig::new(2, 6, 1.0, 0.5, m).with_picard_tol(1e-14);
        picard_solve(&v0, &cfg).unwrap().0
    };
    let reference = solve(1024);
    let deviation = |m: usize| {
        let traj = solve(m);
        let stride = 1024 / m;
        traj.states()
            .iter()
            .enumerate()
            .map(|(i, s)| s.distance_l1(&reference.states()[i * stride]).unwrap())
            .fold(0.0, f64::max)
    };
    let (d16, d32, d64) = (deviation(16), deviation(32), deviation(64));
    assert!(d16 / d32 >= 3.5, "{d16} / {d32}");
    assert!(d32 / d64 >= 3.5, "{d32} / {d64}");
}

#[test]
fn duhamel_matches_closed_form_at_second_order() {
    let lat = Lattice::new(2, 3).unwrap();
    let (nu, t, omega): (f64, f64, f64) = (0.7, 1.0, 3.0);
    let k = [1, -2];
    let c = nu * 5.0;
    // int_0^t e^{-c (t - tau)} cos(omega tau) d tau
    let exact = (c * (omega * t).cos() + omega * (omega * t).sin() - c * (-c * t).exp()) / (c * c + omega * omega);
    let error = |m: usize| {
        let times = uniform_grid(t, m);
        let forcing: Vec<SpectralField> = times
            .iter()
            .map(|tau| SpectralField::single_mode(&lat, 1, 0, &k, Complex64::new((omega * tau).cos(), 0.0)).unwrap())
            .collect();
        let u = duhamel_apply(&SpectralField::zeros(&lat, 1), &forcing, nu, &times).unwrap();
        (u.coeff_at(0, &k).unwrap().re - exact).abs()
    };
    let errs: Vec<f64> = [8, 16, 32, 64].iter().map(|&m| error(m)).collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.9, "order {order} from {errs:?}");
    }
}

#[test]
fn constant_forcing_closed_form() {
    let lat = Lattice::new(2, 2).unwrap();
    let k = [2, 1];
    let (nu, t): (f64, f64) = (0.4, 0.8);
    let c = nu * 5.0;
    let exact = (1.0 - (-c * t).exp()) / c;
    let times = uniform_grid(t, 400);
    let f = SpectralField::single_mode(&lat, 1, 0, &k, Complex64::new(1.0, 0.0)).unwrap();
    let forcing = vec![f; times.len()];
    let u = duhamel_apply(&SpectralField::zeros(&lat, 1), &forcing, nu, &times).unwrap();
    let h = t / 400.0;
    assert!((u.coeff_at(0, &k).unwrap().re - exact).abs() <= c * h * h);
}

#[test]
fn early_time_continuity() {
    let lat = Lattice::new(2, 8).unwrap();
    let v0 = random_hs_with_norm(&lat, 2.0, 0.1, 5).unwrap();
    let cfg = SolverConfig::new(2, 8, 1.0, 0.01, 16);
    let (traj, _) = picard_solve(&v0, &cfg).unwrap();
    for kappa in [[0, 0], [1, 0]] {
        let rep = initial_continuity_check(&traj, &kappa, 2.0, 8).unwrap();
        assert!(rep.decreasing, "{kappa:?}: {rep:?}");
        assert!(rep.velocity[0] < rep.velocity[7] / 4.0);
    }
    let tg = taylor_green(&lat).unwrap();
    let (traj, _) = picard_solve(&tg, &cfg).unwrap();
    let rep = initial_continuity_check(&traj, &[0, 0], 2.0, 8).unwrap();
    // |v(t) - v0|_2 = (1 - e^{-2t}) |v0|_2 <= 2 t |v0|_2
    for (t, n) in rep.times.iter().zip(&rep.velocity) {
        assert!(*n <= 2.0 * t * tg.norm_hs(2.0) * (1.0 + 1e-12));
    }
}

#[test]
fn large_data_on_a_long_interval_diverges() {
    let lat = Lattice::new(2, 8).unwrap();
    let v0 = random_hs_with_norm(&lat, 2.0, 40.0, 1).unwrap();
    let cfg = SolverConfig::new(2, 8, 0.01, 5.0, 16);
    assert!(matches!(picard_solve(&v0, &cfg), Err(nstorus::Error::Diverged { .. })));
}
