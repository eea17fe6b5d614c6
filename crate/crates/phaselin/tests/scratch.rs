// Temporary instrumentation; delete before commit.
use phaselin::init::init_big;
use phaselin::numerics::{dist_to_signal, norm2, SeededRng};
use phaselin::proxlin::{canonicalize, prox_linear_solve, ProxLinearConfig};
use phaselin::sensing::{
    corrupt, gen_gaussian_ensemble, operator_norm_over_m, CorruptionKind, CorruptionSpec,
    GroundTruth,
};
use phaselin::subsolver::{pogs_solve, PogsConfig, ProjectorKind};
use phaselin::Error;

fn setup(n: usize, m: usize, seed: u64) -> (phaselin::sensing::MeasurementEnsemble, Vec<f64>, phaselin::sensing::Observations) {
    let root = SeededRng::new(seed);
    let mut ens_rng = root.substream(1);
    let mut sig_rng = root.substream(2);
    let mut cor_rng = root.substream(3);
    let ensemble = gen_gaussian_ensemble(m, n, &mut ens_rng);
    let truth = GroundTruth::rademacher(n, &mut sig_rng);
    let b: Vec<f64> = ensemble
        .apply_vec(&truth.x_star)
        .iter()
        .map(|z| z * z)
        .collect();
    let obs = corrupt(&b, CorruptionSpec::new(0.0, CorruptionKind::Zero), &mut cor_rng);
    (ensemble, truth.x_star, obs)
}

fn profile(n: usize, m: usize, seed: u64) {
    let (ensemble, xstar, obs) = setup(n, m, seed);
    let root = SeededRng::new(seed);
    let mut init_rng = root.substream(4);
    let est = init_big(&ensemble, &obs.b, &mut init_rng).expect("init");
    let cfg = ProxLinearConfig::default();
    let t0 = std::time::Instant::now();
    let report = prox_linear_solve(&ensemble, &obs, &est.x0, &cfg, ProjectorKind::Dense);
    let rel = dist_to_signal(&report.final_x, &xstar).unwrap() / norm2(&xstar);
    println!(
        "profile n={} m={} seed={}: term={} rel={:.3e} outer={} wall={:.1}s",
        n,
        m,
        seed,
        report.termination,
        rel,
        report.outer_iters,
        t0.elapsed().as_secs_f64()
    );
    println!("  inner={:?}", report.inner_iters);
    let steps: Vec<String> = report.step_norms.iter().map(|s| format!("{:.2e}", s)).collect();
    println!("  steps=[{}]", steps.join(", "));
}

fn checkpoint_curve(n: usize, m: usize, seed: u64, dist: f64, eps: f64, checkpoints: &[usize]) {
    let (ensemble, xstar, obs) = setup(n, m, seed);
    let root = SeededRng::new(seed);
    let mut pert = root.substream(9);
    // x0 = x* + dist * unit gaussian direction
    let g: Vec<f64> = (0..n).map(|_| pert.normal()).collect();
    let gn = norm2(&g);
    let x0: Vec<f64> = xstar.iter().zip(&g).map(|(x, gi)| x + dist * gi / gn).collect();
    let mut op_rng = SeededRng::new(0x70_67_73);
    let l = 2.0 * operator_norm_over_m(&ensemble, &mut op_rng).unwrap();
    let sub = canonicalize(&ensemble, &obs.b, &x0, l);
    println!(
        "curve n={} m={} seed={} dist={:.1e} eps={:.0e}: |c|inf={:.2e} |c|1={:.3e}",
        n,
        m,
        seed,
        dist,
        eps,
        sub.c.iter().fold(0.0f64, |a, v| a.max(v.abs())),
        sub.c.iter().map(|v| v.abs()).sum::<f64>()
    );
    for &mi in checkpoints {
        let cfg = PogsConfig { eps, max_iter: mi, ..PogsConfig::default() };
        let t0 = std::time::Instant::now();
        match pogs_solve(&sub, &sub.c, &cfg, ProjectorKind::Dense, None) {
            Ok(out) => {
                println!(
                    "  max={}: CONVERGED iters={} |u|={:.3e} wall={:.1}s",
                    mi,
                    out.iters,
                    norm2(&out.u),
                    t0.elapsed().as_secs_f64()
                );
                break;
            }
            Err(Error::PogsMaxIter { primal, dual, state, .. }) => {
                let sqrt_n = (n as f64).sqrt();
                let ps = eps * (sqrt_n + norm2(&state.x).max(norm2(&state.y)));
                let ds = eps * (sqrt_n + norm2(&state.lambda).max(norm2(&state.nu)));
                println!(
                    "  max={}: pri={:.3e} (need {:.1e}) dual={:.3e} (need {:.1e}) |u|={:.3e} wall={:.1}s",
                    mi, primal, ps, dual, ds, norm2(&state.x), t0.elapsed().as_secs_f64()
                );
            }
            Err(e) => println!("  max={}: ERR {}", mi, e),
        }
    }
}

fn rho_probe(n: usize, m: usize, seed: u64, dist: f64, eps: f64, rho: f64, max_iter: usize) {
    let (ensemble, xstar, obs) = setup(n, m, seed);
    let root = SeededRng::new(seed);
    let mut pert = root.substream(9);
    let g: Vec<f64> = (0..n).map(|_| pert.normal()).collect();
    let gn = norm2(&g);
    let x0: Vec<f64> = xstar.iter().zip(&g).map(|(x, gi)| x + dist * gi / gn).collect();
    let mut op_rng = SeededRng::new(0x70_67_73);
    let l = 2.0 * operator_norm_over_m(&ensemble, &mut op_rng).unwrap();
    let sub = canonicalize(&ensemble, &obs.b, &x0, l);
    let cfg = PogsConfig { rho, eps, max_iter, ..PogsConfig::default() };
    let t0 = std::time::Instant::now();
    match pogs_solve(&sub, &sub.c, &cfg, ProjectorKind::Dense, None) {
        Ok(out) => println!(
            "  rho={}: CONVERGED iters={} wall={:.1}s",
            rho,
            out.iters,
            t0.elapsed().as_secs_f64()
        ),
        Err(Error::PogsMaxIter { primal, dual, .. }) => println!(
            "  rho={}: capped at {} pri={:.3e} dual={:.3e} wall={:.1}s",
            rho,
            max_iter,
            primal,
            dual,
            t0.elapsed().as_secs_f64()
        ),
        Err(e) => println!("  rho={}: ERR {}", rho, e),
    }
}

#[test]
fn probe() {
    println!("=== E1: n=100 m=200 profiles ===");
    for seed in 0..4 {
        profile(100, 200, seed);
    }
    println!("=== E2: n=200 m=540 profiles ===");
    for seed in 0..2 {
        profile(200, 540, seed);
    }
    println!("=== E3: n=400 m=800 phase-2-like instance, eps 1e-8 cold ===");
    checkpoint_curve(400, 800, 11, 0.04, 1e-8, &[2_000, 8_000, 32_000, 128_000]);
    println!("=== E3b: n=400 m=800 early instance (big-init distance), eps 1e-5 cold ===");
    checkpoint_curve(400, 800, 11, 16.0, 1e-5, &[2_000, 8_000, 32_000]);
    println!("=== E4: rho sweep on the phase-2-like instance ===");
    for rho in [0.3, 3.0, 10.0] {
        rho_probe(400, 800, 11, 0.04, 1e-8, rho, 64_000);
    }
}

fn clip_g(nu: &[f64], rho: f64) -> Vec<f64> {
    nu.iter().map(|v| (-rho * v).clamp(-1.0, 1.0)).collect()
}

fn inner_accuracy_probe(n: usize, m: usize, seed: u64, outer_cap: usize) {
    let (ensemble, xstar, obs) = setup(n, m, seed);
    let root = SeededRng::new(seed);
    let mut init_rng = root.substream(4);
    let est = init_big(&ensemble, &obs.b, &mut init_rng).expect("init");
    println!(
        "init rel dist = {:.3}",
        dist_to_signal(&est.x0, &xstar).unwrap() / norm2(&xstar)
    );
    let cfg = ProxLinearConfig { max_outer: outer_cap, ..ProxLinearConfig::default() };
    let report = prox_linear_solve(&ensemble, &obs, &est.x0, &cfg, ProjectorKind::Dense);
    let xk = report.final_x.clone();
    println!(
        "after {} outers: rel dist = {:.3}, last step = {:.3e}",
        report.outer_iters,
        dist_to_signal(&xk, &xstar).unwrap() / norm2(&xstar),
        report.step_norms.last().unwrap()
    );
    let mut op_rng = SeededRng::new(0x70_67_73);
    let l = 2.0 * operator_norm_over_m(&ensemble, &mut op_rng).unwrap();
    let sub = canonicalize(&ensemble, &obs.b, &xk, l);

    let loose = PogsConfig { eps: 1e-5, ..PogsConfig::default() };
    let tight = PogsConfig { eps: 1e-8, max_iter: 400_000, ..PogsConfig::default() };
    let r1 = pogs_solve(&sub, &sub.c, &loose, ProjectorKind::Dense, None);
    let r2 = pogs_solve(&sub, &sub.c, &tight, ProjectorKind::Dense, None);
    match (r1, r2) {
        (Ok(o1), Ok(o2)) => {
            let du: f64 = o1
                .u
                .iter()
                .zip(&o2.u)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let p1 = sub.canonical_objective(&o1.u);
            let p2 = sub.canonical_objective(&o2.u);
            let g1 = phaselin::subsolver::duality_gap(&sub, &sub.c, &o1.u, &clip_g(&o1.state.nu, 1.0)).unwrap();
            let g2 = phaselin::subsolver::duality_gap(&sub, &sub.c, &o2.u, &clip_g(&o2.state.nu, 1.0)).unwrap();
            println!(
                "loose: iters={} |u|={:.3e} p={:.6e} gap={:.3e}",
                o1.iters, norm2(&o1.u), p1, g1
            );
            println!(
                "tight: iters={} |u|={:.3e} p={:.6e} gap={:.3e}",
                o2.iters, norm2(&o2.u), p2, g2
            );
            println!(
                "|u_loose − u_tight| = {:.3e}  (x-space: {:.3e})",
                du,
                du / l.sqrt()
            );
        }
        (a, b) => {
            for (tag, r) in [("loose", a), ("tight", b)] {
                match r {
                    Ok(o) => println!("{}: ok iters={}", tag, o.iters),
                    Err(Error::PogsMaxIter { primal, dual, .. }) => {
                        println!("{}: capped pri={:.3e} dual={:.3e}", tag, primal, dual)
                    }
                    Err(e) => println!("{}: ERR {}", tag, e),
                }
            }
        }
    }
}

#[test]
fn probe_inner_accuracy() {
    println!("=== E5: inner-solution accuracy at hover, n=200 m=540 seed 0 ===");
    inner_accuracy_probe(200, 540, 0, 6);
    println!("=== E5b: deeper hover k=10 ===");
    inner_accuracy_probe(200, 540, 0, 10);
    println!("=== E6: big-init quality ===");
    for (n, m) in [(100usize, 200usize), (200, 540), (400, 800)] {
        for seed in 0..3u64 {
            let (ensemble, xstar, obs) = setup(n, m, seed);
            let root = SeededRng::new(seed);
            let mut init_rng = root.substream(4);
            let est = init_big(&ensemble, &obs.b, &mut init_rng).expect("init");
            println!(
                "  n={} m={} seed={}: init rel dist = {:.3}",
                n,
                m,
                seed,
                dist_to_signal(&est.x0, &xstar).unwrap() / norm2(&xstar)
            );
        }
    }
}

fn top_eigvec_dense(mat: &[Vec<f64>], n: usize, iters: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|i| ((i * 37 + 11) % 101) as f64 / 101.0 - 0.5).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut w = vec![0.0; n];
    for _ in 0..iters {
        for r in 0..n {
            w[r] = mat[r].iter().zip(&v).map(|(a, b)| a * b).sum();
        }
        let nw = norm2(&w);
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
    }
    v
}

#[test]
fn probe_init_eig() {
    for (n, m) in [(200usize, 540usize), (400, 800)] {
        for seed in 0..3u64 {
            let (ensemble, xstar, obs) = setup(n, m, seed);
            // extract rows
            let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
            for i in 0..m {
                let mut e = vec![0.0; m];
                e[i] = 1.0;
                let mut out = vec![0.0; n];
                ensemble.apply_adjoint(&e, &mut out);
                rows.push(out);
            }
            let ell: Vec<f64> = obs
                .b
                .iter()
                .zip(&rows)
                .map(|(bi, a)| bi / a.iter().map(|x| x * x).sum::<f64>())
                .collect();
            let mut sorted = ell.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let tau = sorted[(5 * m) / 6];
            // weighted gram over selected rows
            let mut mat = vec![vec![0.0f64; n]; n];
            let mut nsel = 0;
            for (i, a) in rows.iter().enumerate() {
                if ell[i] >= tau {
                    nsel += 1;
                    let w = 1.0 / a.iter().map(|x| x * x).sum::<f64>();
                    for r in 0..n {
                        let ar = a[r] * w;
                        for s in 0..n {
                            mat[r][s] += ar * a[s];
                        }
                    }
                }
            }
            let v = top_eigvec_dense(&mat, n, 100_000);
            let xn = norm2(&xstar);
            let cos_true = v.iter().zip(&xstar).map(|(a, b)| a * b).sum::<f64>().abs() / xn;
            let root = SeededRng::new(seed);
            let mut init_rng = root.substream(4);
            let est = init_big(&ensemble, &obs.b, &mut init_rng).expect("init");
            let dn = norm2(&est.d_hat);
            let cos_mine = est
                .d_hat
                .iter()
                .zip(&xstar)
                .map(|(a, b)| a * b)
                .sum::<f64>()
                .abs()
                / (dn * xn);
            let agree = est
                .d_hat
                .iter()
                .zip(&v)
                .map(|(a, b)| a * b)
                .sum::<f64>()
                .abs()
                / dn;
            println!(
                "n={} m={} seed={}: nsel={} cos(exact top evec, x*)={:.4} cos(init d, x*)={:.4} |<d,evec>|={:.6}",
                n, m, seed, nsel, cos_true, cos_mine, agree
            );
        }
    }
}
