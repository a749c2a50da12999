//! Acceptance suite. Every criterion prints one `PASS`/`FAIL` line (written
//! straight to stdout so it shows without `--nocapture`) and then asserts.

mod common;

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use common::*;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use simplex_control::applications::lower_bound::{
    comparator_bound, make_scalar_pair, make_simplex_pair, ScalarLinear, Variant,
};
use simplex_control::applications::replicator::trailing_means;
use simplex_control::controller::{
    compute_lambdas, counterfactual_rollout, proxy_loss_gradient, proxy_loss_gradient_exact, History,
};
use simplex_control::dynamics::{recover_perturbation, rollout_linear_policy, step, Cost, Trajectory, Transition};
use simplex_control::experiment::{execute, run_experiment, ExperimentConfig, RunOutput};
use simplex_control::mixing::{dbar, dist_to_stationarity, matrix_power, mixing_time, MixingTime};
use simplex_control::optimizer::{DacDomain, DacParams, LazyMd};
use simplex_control::simplex::{l1_norm, one_one_norm, ControlSet, Dist, ScaledDist, ScaledStochasticMatrix, StochasticMatrix};

fn report(n: u32, name: &str, pass: bool, detail: &str) {
    let line = format!(
        "acceptance criterion {n:>2} [{}] {name}: {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
}

fn cfg(text: &str) -> ExperimentConfig {
    ExperimentConfig::parse(text).unwrap()
}

fn total(out: &RunOutput, policy: &str) -> f64 {
    out.trajectory(policy).unwrap().total_cost()
}

fn max_simplex_violation(t: &Trajectory) -> f64 {
    t.steps
        .iter()
        .map(|s| (s.x.sum() - 1.0).abs().max(-s.x.min()))
        .fold(0.0, f64::max)
}

fn sir_run(c2: f64, c3: f64) -> RunOutput {
    execute(&cfg(&format!("experiment = sir\nc2 = {c2}\nc3 = {c3}\n"))).unwrap()
}

#[test]
fn criterion_01_sir_baseline_dominance() {
    let start = Instant::now();
    let out = sir_run(1.0, 10.0);
    let secs = start.elapsed().as_secs_f64();
    let (g, f, n) = (total(&out, "gpc-simplex"), total(&out, "full-prevention"), total(&out, "no-prevention"));
    let pass = g < f && g < n && secs <= 60.0;
    report(
        1,
        "SIR dominance at (c2, c3) = (1, 10)",
        pass,
        &format!("gpc {g:.3}, full {f:.3}, none {n:.3}, {secs:.2}s"),
    );
    assert!(pass);
}

#[test]
fn criterion_02_sir_parameter_grid() {
    let mut pass = true;
    let mut parts = Vec::new();
    for (c2, c3) in [(1.0, 20.0), (1.0, 10.0), (1.0, 5.0), (1.0, 1.0)] {
        let out = sir_run(c2, c3);
        let (g, f, n) = (total(&out, "gpc-simplex"), total(&out, "full-prevention"), total(&out, "no-prevention"));
        let ok = if c3 == 1.0 {
            g <= 1.05 * f.min(n)
        } else {
            g < f && g < n
        };
        pass &= ok;
        parts.push(format!(
            "({c2},{c3}) gpc {g:.2} full {f:.2} none {n:.2} {}",
            if ok { "ok" } else { "MISS" }
        ));
    }
    report(2, "SIR parameter grid", pass, &parts.join("; "));
    assert!(pass, "{}", parts.join("; "));
}

#[test]
fn criterion_03_hospital_capacity() {
    let out = execute(&cfg("experiment = hospital\n")).unwrap();
    let peak = |p: &str| out.trajectory(p).unwrap().steps.iter().map(|s| s.x[1]).fold(0.0, f64::max);
    let (open, gpc) = (peak("no-control"), peak("gpc-simplex"));
    let pass = open > 0.25 && gpc <= 0.12;
    report(
        3,
        "hospital capacity",
        pass,
        &format!("uncontrolled peak {open:.4} (> 0.25), controlled peak {gpc:.4} (<= 0.12)"),
    );
    assert!(pass);
}

fn final_mean(t: &Trajectory, n: usize) -> f64 {
    let c: Vec<f64> = t.steps.iter().map(|s| s.cost).collect();
    c[c.len() - n..].iter().sum::<f64>() / n as f64
}

#[test]
fn criterion_04_replicator_improvement() {
    let out = execute(&cfg("experiment = replicator\n")).unwrap();
    let g = final_mean(out.trajectory("gpc-simplex").unwrap(), 20);
    let u = final_mean(out.trajectory("uniform-default").unwrap(), 20);
    let pass = g <= 0.5 * u;
    report(
        4,
        "replicator improvement",
        pass,
        &format!("final-20 mean: gpc {g:.6}, uniform {u:.6} (need <= {:.6})", 0.5 * u),
    );
    assert!(pass);
}

#[test]
fn criterion_05_random_cost_robustness() {
    let mut wins = 0;
    let mut parts = Vec::new();
    for seed in 0..10u64 {
        let out = execute(&cfg(&format!("experiment = replicator-random-cost\nseed = {seed}\n"))).unwrap();
        let tail = |p: &str| {
            let c: Vec<f64> = out.trajectory(p).unwrap().steps.iter().map(|s| s.cost).collect();
            let sm = trailing_means(&c, 15);
            sm[sm.len() - 50..].iter().sum::<f64>() / 50.0
        };
        let (g, b) = (tail("gpc-simplex"), tail("best-response"));
        if g < b {
            wins += 1;
        }
        parts.push(format!("{g:.3}/{b:.3}"));
    }
    let pass = wins >= 8;
    report(
        5,
        "random-cost robustness",
        pass,
        &format!("gpc beats best response in {wins}/10 seeds (gpc/br: {})", parts.join(" ")),
    );
    assert!(pass);
}

#[test]
fn criterion_06_mirror_descent_bounds() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let horizon = 1000;
    let l = 1.0;
    let (mut worst_regret_ratio, mut worst_move_ratio) = (f64::NEG_INFINITY, 0.0f64);
    for _ in 0..50 {
        let d = rng.gen_range(2..=4);
        let h = rng.gen_range(1..=4);
        let lo = rng.gen_range(0.0..0.5);
        let hi = lo + rng.gen_range(0.0..(1.0 - lo));
        let domain = DacDomain::square(d, h, lo, hi).unwrap();
        let mv = lazy_md_movement_bound(d, h, horizon);
        let mut md = LazyMd::new(domain, mv / l).unwrap();
        let mut sum = DVector::zeros(domain.num_coords());
        let mut loss = 0.0;
        // a biased random direction keeps the comparator away from the centre
        let bias = DVector::from_fn(domain.num_coords(), |_, _| rng.gen_range(-0.3..0.3));
        for _ in 0..horizon {
            let g = DVector::from_fn(domain.num_coords(), |i, _| (bias[i] + rng.gen_range(-0.7f64..0.7)).clamp(-l, l));
            let before = md.params().clone();
            loss += before.flat().dot(&g);
            sum += &g;
            let after = md.update(&g).unwrap();
            let mut moved = l1_norm((after.p() - before.p()).as_slice());
            for j in 1..=h {
                moved = moved.max(one_one_norm(&(after.m(j) - before.m(j))));
            }
            worst_move_ratio = worst_move_ratio.max(moved / mv);
        }
        let regret = loss - best_fixed_linear(&sum, &domain);
        worst_regret_ratio = worst_regret_ratio.max(regret / lazy_md_regret_bound(l, d, h, horizon));
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst_regret_ratio <= 1.0 && worst_move_ratio <= 1.0 + 1e-6 && secs <= 60.0;
    report(
        6,
        "mirror-descent bounds",
        pass,
        &format!(
            "max regret/bound {worst_regret_ratio:.4}, max movement/bound {worst_move_ratio:.6}, {secs:.2}s"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_07_lower_bound_comparators() {
    let beta = 32.0;
    let mut pass = true;
    let mut parts = Vec::new();
    for horizon in [100, 1000] {
        let pair = make_simplex_pair(beta, horizon).unwrap();
        let pi1 = rollout_linear_policy(&pair.systems[1], &pair.comparators[1], horizon).unwrap().total_cost();
        let pi0 = rollout_linear_policy(&pair.systems[0], &pair.comparators[0], horizon).unwrap().total_cost();
        let sb = comparator_bound(Variant::Simplex, beta, horizon);
        let scalar = make_scalar_pair(beta, horizon).unwrap();
        let s1 = scalar[1].rollout(&mut ScalarLinear(0.0));
        let s0 = scalar[0].rollout(&mut ScalarLinear(1.0));
        let cb = comparator_bound(Variant::Scalar, beta, horizon);
        pass &= pi1 == 0.0 && pi0 <= sb && s1 == 0.0 && s0 <= cb;
        parts.push(format!(
            "T={horizon}: simplex pi1 {pi1}, pi0 {pi0:.3e} <= {sb:.3e}; scalar pi1 {s1}, pi0 {s0:.3e} <= {cb:.3e}"
        ));
    }
    report(7, "lower-bound comparators", pass, &parts.join("; "));
    assert!(pass);
}

#[test]
fn criterion_08_lower_bound_linear_regret() {
    let start = Instant::now();
    let out = execute(&cfg("experiment = lowerbound\nhorizons = 200,400,800\ntrials = 40\nbeta_lb = 32\n")).unwrap();
    let h = out.harness.unwrap();
    let (r200, r800) = (h.regret_at(200).unwrap(), h.regret_at(800).unwrap());
    let ratio = r800 / r200;
    let pass = ratio >= 2.5;
    report(
        8,
        "lower-bound linear regret",
        pass,
        &format!(
            "regret T=200 {r200:.3}, T=400 {:.3}, T=800 {r800:.3}, ratio {ratio:.2} (>= 2.5), {:.1}s",
            h.regret_at(400).unwrap(),
            start.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

fn random_instance(rng: &mut ChaCha8Rng) -> (StochasticMatrix, StochasticMatrix, DacParams, Vec<f64>, Vec<DVector<f64>>, Dist) {
    let d = rng.gen_range(2..=5);
    let k = rng.gen_range(1..=3);
    let h = rng.gen_range(1..=4);
    let a = random_stochastic(d, d, rng);
    let b = random_stochastic(d, k, rng);
    let scale = rng.gen::<f64>();
    let p = ScaledDist::scaled(&random_dist(k, rng), scale);
    let m: Vec<ScaledStochasticMatrix> = (0..h)
        .map(|_| ScaledStochasticMatrix::scaled(&random_stochastic(k, d, rng), scale))
        .collect();
    let params = DacParams::new(DacDomain::new(d, k, h, 0.0, 1.0).unwrap(), &p, &m).unwrap();
    let t = rng.gen_range(1..=20);
    let gammas = (0..t).map(|_| if rng.gen_bool(0.5) { rng.gen::<f64>() } else { 0.0 }).collect();
    let ws = (0..t).map(|_| random_dist(d, rng).into_inner()).collect();
    (a, b, params, gammas, ws, random_dist(d, rng))
}

#[test]
fn criterion_09_numerical_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut checks: Vec<(String, bool)> = Vec::new();

    // simplex closure over every emitted trajectory of the default experiments
    let mut closure: f64 = 0.0;
    for text in [
        "experiment = sir\n",
        "experiment = sir-noisy\n",
        "experiment = hospital\n",
        "experiment = replicator\n",
        "experiment = replicator-random-cost\n",
        "experiment = custom-simplex-lds\ngamma = 0.1\n",
    ] {
        for r in execute(&cfg(text)).unwrap().runs {
            closure = closure.max(max_simplex_violation(&r.trajectory));
        }
    }
    // and over random linear steps with ambient-mass controls
    for _ in 0..1000 {
        let (a, b, ..) = random_instance(&mut rng);
        let x = random_dist(a.nrows(), &mut rng);
        let u = ScaledDist::scaled(&random_dist(b.ncols(), &mut rng), rng.gen());
        let w = random_dist(a.nrows(), &mut rng);
        let next = step(&x, &u, rng.gen(), &w, &a, &b, &ControlSet::new(0.0, 1.0).unwrap()).unwrap();
        closure = closure.max((next.values().sum() - 1.0).abs());
    }
    checks.push((format!("closure {closure:.1e}"), closure <= 1e-9));

    // λ normalisation
    let mut lam_err: f64 = 0.0;
    for _ in 0..1000 {
        let h = rng.gen_range(1..10);
        let recent: Vec<f64> = (0..h).map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen() }).collect();
        let lw = compute_lambdas(&recent, h);
        lam_err = lam_err.max((lw.lambda.iter().sum::<f64>() - 1.0).abs());
    }
    checks.push((format!("lambda {lam_err:.1e}"), lam_err <= 1e-12));

    // perturbation recovery
    let mut rec_err: f64 = 0.0;
    for _ in 0..1000 {
        let (a, b, ..) = random_instance(&mut rng);
        let tr = Transition::linear(a.clone(), b.clone()).unwrap();
        let x = random_dist(a.nrows(), &mut rng);
        let u = ScaledDist::scaled(&random_dist(b.ncols(), &mut rng), rng.gen());
        let w = random_dist(a.nrows(), &mut rng);
        let gamma = rng.gen_range(1e-3..1.0);
        let next = step(&x, &u, gamma, &w, &a, &b, &ControlSet::new(0.0, 1.0).unwrap()).unwrap();
        let got = recover_perturbation(&x, u.values(), &next, gamma, &tr).unwrap();
        rec_err = rec_err.max((got - w.values()).amax());
    }
    checks.push((format!("recovery {rec_err:.1e}"), rec_err <= 1e-9));

    // closed form vs iterative rollout, and FD vs exact gradients
    let (mut cf_err, mut grad_err): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let (a, b, params, gammas, ws, x1) = random_instance(&mut rng);
        let h = params.domain().h;
        let t = gammas.len();
        let mut hist = History::new(&x1, h);
        for s in 0..t - 1 {
            hist.push(gammas[s], ws[s].clone());
        }
        let tr = Transition::linear(a.clone(), b.clone()).unwrap();
        let z = params.flat().as_slice();
        let (x, _) = counterfactual_rollout(params.domain(), z, &tr, &hist, t);
        let m: Vec<DMatrix<f64>> = (1..=h).map(|j| params.m(j)).collect();
        let oracle = closed_form_state(a.entries(), b.entries(), &params.p(), &m, &gammas, &ws, x1.values(), t as i64);
        cf_err = cf_err.max((x - oracle).amax());

        let target = random_dist(a.nrows(), &mut rng).into_inner();
        let cost = Cost::new(move |x, u| (x - &target).norm_squared() + 0.5 * u.norm_squared());
        let fd = proxy_loss_gradient(params.domain(), z, &tr, &cost, &hist, t);
        let ex = proxy_loss_gradient_exact(params.domain(), z, &tr, &cost, &hist, t).unwrap();
        if ex.norm() > 1e-8 {
            grad_err = grad_err.max((&fd - &ex).norm() / ex.norm());
        }
    }
    checks.push((format!("closed form {cf_err:.1e}"), cf_err <= 1e-9));
    checks.push((format!("gradient rel {grad_err:.1e}"), grad_err <= 1e-4));

    // mixing inequalities on 100 random chains each
    let (mut dd_ok, mut perp_ok, mut pert_ok) = (true, true, true);
    for _ in 0..100 {
        let d = rng.gen_range(2..=6);
        let x = random_mixing(d, &mut rng);
        for t in 0..=20 {
            let (dv, dbv) = (dist_to_stationarity(&x, t).unwrap(), dbar(&x, t).unwrap());
            dd_ok &= dv <= dbv + 1e-12 && dbv <= 2.0 * dv + 1e-12;
        }
        if let MixingTime::Finite(tau) = mixing_time(&x, 0.25, 10_000) {
            let mut v = DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
            v.add_scalar_mut(-v.mean());
            for i in 0..=5 * tau {
                let lhs = (matrix_power(x.entries(), i) * &v).abs().sum();
                perp_ok &= lhs <= 0.5f64.powi((i / tau) as i32) * v.abs().sum() + 1e-12;
            }
        } else {
            perp_ok = false;
        }
        let mut y = x.entries().clone();
        let c = rng.gen_range(0..d);
        let (from, to) = (rng.gen_range(0..d), rng.gen_range(0..d));
        let moved = rng.gen_range(0.0..0.25f64).min(y[(from, c)]);
        y[(from, c)] -= moved;
        y[(to, c)] += moved;
        let y = StochasticMatrix::new(y).unwrap();
        let delta = one_one_norm(&(y.entries() - x.entries()));
        for t in 0..=15 {
            if let Ok(dy) = dist_to_stationarity(&y, t) {
                pert_ok &= dy <= 2.0 * t as f64 * delta + 2.0 * dist_to_stationarity(&x, t).unwrap() + 1e-9;
            }
        }
    }
    checks.push(("d-dbar".into(), dd_ok));
    checks.push(("perp-mixing".into(), perp_ok));
    checks.push(("mixing-perturb".into(), pert_ok));

    let pass = checks.iter().all(|c| c.1);
    let detail: Vec<String> = checks
        .iter()
        .map(|(n, ok)| format!("{n} {}", if *ok { "ok" } else { "MISS" }))
        .collect();
    report(9, "numerical invariant suite", pass, &detail.join(", "));
    assert!(pass);
}

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn criterion_10_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(configs_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "conf"))
        .collect();
    paths.sort();
    let mut mismatched = Vec::new();
    let mut compared = 0;
    for path in &paths {
        let stem = path.file_stem().unwrap().to_string_lossy().into_owned();
        let mut outputs = Vec::new();
        for run in ["a", "b"] {
            let mut c = ExperimentConfig::from_file(path).unwrap();
            c.set("out", &tmp.path().join(&stem).join(run).to_string_lossy()).unwrap();
            c.set("seed", "1234").unwrap();
            outputs.push(run_experiment(&c).unwrap());
        }
        for (fa, fb) in outputs[0].files.iter().zip(&outputs[1].files) {
            compared += 1;
            if std::fs::read(fa).unwrap() != std::fs::read(fb).unwrap() {
                mismatched.push(fa.display().to_string());
            }
        }
        if outputs[0].files.len() != outputs[1].files.len() {
            mismatched.push(format!("{stem}: different file sets"));
        }
    }
    let pass = mismatched.is_empty() && paths.len() == 8;
    report(
        10,
        "determinism",
        pass,
        &format!("{} configs, {compared} files compared, {} mismatches", paths.len(), mismatched.len()),
    );
    assert!(pass, "{mismatched:?}");
}
