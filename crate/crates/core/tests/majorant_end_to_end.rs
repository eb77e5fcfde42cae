use nstorus::config::uniform_grid;
use nstorus::initial::{random_hs_with_norm, single_mode};
use nstorus::majorant::{
    calculus_check, certified_constants, certified_time, dominates_trajectory, global_threshold, majorize_initial,
    random_case, run_probe, run_scans, MajorantSequence, MajorantSolver, ProbeConfig, Property,
};
use nstorus::mild::PicardSolver;
use nstorus::{Lattice, ProductMethod, SolverConfig};

#[test]
fn majorant_grows_with_its_data() {
    let lat = Lattice::new(2, 4).unwrap();
    let small = majorize_initial(&random_hs_with_norm(&lat, 2.0, 0.01, 3).unwrap());
    let big = MajorantSequence::new(
        &lat,
        small.coeffs().iter().enumerate().map(|(i, c)| c * (1.5 + (i % 3) as f64)).collect(),
    )
    .unwrap();
    let solver = MajorantSolver::new(4.0, 0.5, uniform_grid(0.5, 16)).unwrap();
    let (a, _) = solver.solve(&small).unwrap();
    let (b, _) = solver.solve(&big).unwrap();
    for (x, y) in a.states.iter().zip(&b.states) {
        assert!(x.coeffs().iter().zip(y.coeffs()).all(|(p, q)| p <= q));
    }
}

#[test]
fn first_sweep_from_a_single_pair() {
    // V0 = c at +-k0: V0^2 at 2 k0 is c^2 and the sweep gives
    // a c^2 |2 k0|_1 (1 - e^{-beta t}) / beta with beta = rho |2 k0|_e^2
    let lat = Lattice::new(2, 4).unwrap();
    let c = 0.2;
    let v = single_mode(&lat, &[1, 1], c, &[1.0, -1.0]).unwrap();
    let v0 = majorize_initial(&v);
    let (a, rho, t, m) = (4.0, 0.5, 0.4, 400);
    let times = uniform_grid(t, m);
    let solver = MajorantSolver::new(a, rho, times.clone()).unwrap().method(ProductMethod::Direct);
    let states = vec![v0.coeffs().to_vec(); times.len()];
    let next = solver.apply(&v0, &states).unwrap();
    let amp = v0.get(lat.index_of(&[1, 1]).unwrap());
    let beta = rho * 8.0;
    let idx = lat.index_of(&[2, 2]).unwrap();
    let exact = a * amp * amp * 4.0 * (1.0 - (-beta * t).exp()) / beta;
    let h = t / m as f64;
    assert!((next[m][idx] - exact).abs() <= exact * beta * beta * h * h);
    // no forcing reaches the mean, and the data mode keeps its value
    assert_eq!(next[m][lat.zero_index()], 0.0);
    assert_eq!(next[m][lat.index_of(&[1, 1]).unwrap()], amp);
    assert_eq!(next[m][lat.index_of(&[3, 3]).unwrap()], 0.0);
}

#[test]
fn certified_time_shrinks_with_the_data() {
    let lat = Lattice::new(2, 6).unwrap();
    let k = certified_constants(2, 1.0).unwrap();
    let shape = majorize_initial(&random_hs_with_norm(&lat, 2.0, 1.0, 7).unwrap());
    let mut last = f64::INFINITY;
    for norm in [1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.3, 1.0] {
        let t = certified_time(&shape.scaled(norm), 2.0, &k, 32, 100.0).unwrap();
        assert!(t.t_cert <= last, "{norm}: {} after {last}", t.t_cert);
        assert!(t.bound.closes);
        last = t.t_cert;
    }
}

#[test]
fn majorant_dominates_every_picard_iterate_on_the_certified_interval() {
    let lat = Lattice::new(2, 4).unwrap();
    let nu = 1.0;
    let k = certified_constants(2, nu).unwrap();
    for seed in [11, 12] {
        let v0 = random_hs_with_norm(&lat, 2.0, 0.05, seed).unwrap();
        let bound = majorize_initial(&v0);
        let t = certified_time(&bound, 2.0, &k, 16, 10.0).unwrap().t_cert;
        let times = uniform_grid(t, 16);
        let (majorant, _) = MajorantSolver::new(k.a, k.rho, times).unwrap().solve(&bound).unwrap();
        let cfg = SolverConfig::new(2, 4, nu, t, 16);
        let mut failures = Vec::new();
        PicardSolver::new(&cfg)
            .method(ProductMethod::Direct)
            .observe(|iter, states| {
                let d = dominates_trajectory(states, &majorant, nu).unwrap();
                if !d.holds {
                    failures.push((iter, d));
                }
            })
            .solve(&v0)
            .unwrap();
        assert!(failures.is_empty(), "{failures:?}");
    }
}

#[test]
fn probe_separates_small_and_large_data() {
    let lat = Lattice::new(2, 4).unwrap();
    let k = certified_constants(2, 1.0).unwrap();
    let probe = ProbeConfig {
        horizon: 10.0,
        intervals: 100,
        midpoint: 5.0,
        fraction: 0.5,
    };
    let shape = majorize_initial(&random_hs_with_norm(&lat, 2.0, 1.0, 2).unwrap());
    let th = global_threshold(&lat, 2.0, &k, &probe, Some(&shape)).unwrap();
    let low = th.probe.unwrap();
    assert!(low.converged && !low.diverged);
    assert!(low.growth.abs() < 1e-3);
    let high = run_probe(&shape, 2.0, &k, 1000.0 * th.mu, &probe).unwrap();
    assert!(high.diverged);
}

#[test]
fn constant_scans_pass_in_two_dimensions() {
    for r in run_scans(2, 1.0, 6, 3, 5).unwrap() {
        assert!(r.passed, "{r:?}");
        assert!(r.checked > 0);
    }
}

#[test]
fn calculus_rows_hold_on_random_cases() {
    let lat = Lattice::new(2, 3).unwrap();
    for seed in 0..10 {
        let case = random_case(&lat, 5, seed);
        for p in Property::ALL {
            let out = calculus_check(p, &case).unwrap();
            assert!(out.passed, "{} seed {seed}: {:?}", p.name(), out.witness);
        }
    }
}
