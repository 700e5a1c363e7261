//! End-to-end acceptance run: one line per criterion, nonzero exit on any failure.

use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use cgdisk::fd::{central_wirtinger, derivative_jet};
use cgdisk::grid::{sample, DiscGrid, ScalarField};
use cgdisk::holder::{level_norm, norms, polynomial_jet};
use cgdisk::ledger::{
    base_constants, check_theorem_conditions, delta_eta_ledger, feasibility_search, operator_gain, Binding,
    Envelopes, SweepOptions, Thresholds,
};
use cgdisk::ops::{apply_t, apply_t2, compose_green};
use cgdisk::problems::{self, cp_coefficients, expand_brute_force, harmonic_jet, real_to_complex, BuiltinParams, MetricChart};
use cgdisk::solver::{effective_system, residual, solve, solve_holomorphic, solve_real, SolveOptions};
use cgdisk::system::{make_seed, JetMode, JetSpec};
use cgdisk::{jet_pairs, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Poly = Vec<(usize, usize, C64)>;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn rand_poly(rng: &mut ChaCha8Rng, lowest: usize, degree: usize, r: f64) -> Poly {
    let mut out = Vec::new();
    for d in lowest..=degree {
        for a in 0..=d {
            let v = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            out.push((a, d - a, v / r.powi(d as i32)));
        }
    }
    out
}

fn eval(p: &Poly, z: C64) -> C64 {
    p.iter().map(|&(a, b, v)| v * z.powi(a as i32) * z.conj().powi(b as i32)).sum()
}

fn sup_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    a.values().zip(b.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c1_cauchy_monomials() -> Outcome {
    let t0 = Instant::now();
    let r = 0.5;
    let err = |n_r: usize, l: i32| {
        let g = DiscGrid::new(r, n_r, 2 * n_r).unwrap();
        let f = sample(&g, |z| z.conj().powi(l)).unwrap();
        let exact = sample(&g, |z| z.conj().powi(l + 1) / (l + 1) as f64).unwrap();
        sup_diff(&apply_t(&f), &exact)
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for l in 0..=3 {
        let (coarse, fine) = (err(128, l), err(256, l));
        let scale = r.powi(l + 1);
        let floor = 1e-13 * scale;
        let reduced = fine * 2.0 <= coarse || (coarse <= floor && fine <= floor);
        pass &= coarse <= 1e-3 * scale && reduced;
        parts.push(format!("l={l}: {coarse:.2e} -> {fine:.2e}"));
    }
    let secs = t0.elapsed().as_secs_f64();
    pass &= secs <= 60.0;
    outcome(pass, format!("{} ({secs:.1} s)", parts.join(", ")))
}

fn c2_dbar_inverts_t() -> Outcome {
    let t0 = Instant::now();
    let r = 0.7;
    let g = DiscGrid::new(r, 64, 128).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let p = rand_poly(&mut rng, 0, 4, r);
        let f = sample(&g, |z| eval(&p, z)).unwrap();
        let (_, db) = central_wirtinger(&apply_t(&f));
        let (mut num, mut den) = (0.0f64, 0.0f64);
        for (k, z) in g.interior_nodes().iter().enumerate() {
            if z.norm() <= 0.8 * r {
                num = num.max((db[k] - f.interior()[k]).norm());
                den = den.max(f.interior()[k].norm());
            }
        }
        worst = worst.max(num / den);
    }
    let secs = t0.elapsed().as_secs_f64();
    outcome(worst <= 1e-2 && secs <= 60.0, format!("worst relative error {worst:.3e} ({secs:.1} s)"))
}

fn c3_t_bound() -> Outcome {
    let r = 0.8;
    let g = DiscGrid::new(r, 32, 64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut violations, mut worst) = (0, 0.0f64);
    for k in 0..100 {
        let f = match k % 3 {
            0 => {
                let p = rand_poly(&mut rng, 0, 5, r);
                sample(&g, |z| eval(&p, z)).unwrap()
            }
            1 => {
                let n = g.n_interior() + g.n_boundary();
                let v: Vec<C64> = (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
                ScalarField::new(g.clone(), v[..g.n_interior()].to_vec(), v[g.n_interior()..].to_vec()).unwrap()
            }
            _ => {
                let w = C64::from_polar(rng.gen_range(0.0..r), rng.gen_range(0.0..6.3));
                sample(&g, move |z| (w - z).conj() / (w - z).norm().max(1e-3)).unwrap()
            }
        };
        let q = apply_t(&f).sup() / (4.0 * r * f.sup());
        worst = worst.max(q);
        if q > 1.0 {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("{violations} violations, max |Tf| / (4R|f|) = {worst:.3}"))
}

fn c4_second_transform() -> Outcome {
    let g = DiscGrid::new(0.5, 128, 256).unwrap();
    let f = sample(&g, |z| z.conj()).unwrap();
    let v = apply_t2(&f).sup();
    outcome(v <= 1e-3, format!("sup |2T(conj z)| = {v:.3e}"))
}

fn c5_norm_inequalities() -> Outcome {
    let r = 0.6;
    let alpha = 0.5;
    let g = DiscGrid::new(r, 32, 64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let safety = 1.25;
    let fact = |k: usize| (1..=k).map(|x| x as f64).product::<f64>();
    let (mut product, mut power_bound, mut nesting) = (0usize, 0usize, 0usize);
    for s in 0..50 {
        let (a, b) = (rand_poly(&mut rng, 0, 3, r), rand_poly(&mut rng, 0, 3, r));
        let f = sample(&g, |z| eval(&a, z)).unwrap();
        let h = sample(&g, |z| eval(&b, z)).unwrap();
        let lhs = norms(&f.mul(&h).unwrap(), alpha).unwrap().composite;
        if lhs > safety * norms(&f, alpha).unwrap().composite * norms(&h, alpha).unwrap().composite {
            product += 1;
        }
        let m = 1 + s % 4;
        let p = rand_poly(&mut rng, m, m + 2, r);
        let jet = polynomial_jet(&g, m, &p);
        let top = level_norm(&jet, m, alpha).unwrap().composite;
        for l in 0..m {
            let k = m - l;
            let bound = 6f64.powi(k as i32) / fact(k) * r.powi(k as i32) * top * safety;
            let v = level_norm(&jet, l, alpha).unwrap().composite;
            if v > bound {
                if l == 0 {
                    power_bound += 1;
                }
                nesting += 1;
            }
        }
    }
    let z = norms(&sample(&g, |z| z).unwrap(), alpha).unwrap().composite;
    let z_ok = z >= 2.94 * r && z <= 3.0 * r * (1.0 + 1e-12);
    outcome(
        product + power_bound + nesting == 0 && z_ok,
        format!(
            "violations: product {product}, 6^k/k! {power_bound}, nesting {nesting}; ||z|| / R = {:.6}",
            z / r
        ),
    )
}

fn c6_word_engine() -> Outcome {
    let r = 1.0;
    let g = DiscGrid::new(r, 64, 128).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut worst, mut exact) = (0.0f64, true);
    for m in 1..=3 {
        for nu in 0..=m {
            let mu = m - nu;
            let p = rand_poly(&mut rng, 0, 2, r);
            let h = sample(&g, |z| eval(&p, z)).unwrap();
            let jet = compose_green(nu, mu, &h).unwrap();
            let fd = derivative_jet(jet.entry(0, 0, 0), m).unwrap();
            for (i, j) in jet_pairs(m).skip(1) {
                let e = jet.entry(0, i, j);
                let d = e.sub(fd.entry(0, i, j)).unwrap().sup_within(0.9 * r);
                worst = worst.max(d / e.sup().max(h.sup()));
            }
            exact &= jet.entry(0, mu, nu).values().zip(h.values()).all(|(a, b)| a == b);
        }
    }
    outcome(
        worst <= 1e-2 && exact,
        format!("relative difference {worst:.3e} on |z| <= 0.9R; (mu, nu) entry bit-identical: {exact}"),
    )
}

fn c7_closed_form() -> Outcome {
    let g = DiscGrid::new(0.5, 64, 128).unwrap();
    let sys = problems::conj_z().unwrap();
    let spec = JetSpec::new(0, 1, 1, JetMode::Vanishing).set(1, 0, vec![c(1.0)]);
    let rep = solve(&sys, &spec, &g, &SolveOptions::default()).unwrap();
    let exact = sample(&g, |z| z + z.conj() * z.conj() / 2.0).unwrap();
    let err = sup_diff(rep.solution.entry(0, 0, 0), &exact);

    let zero = problems::zero(1, 2, 1).unwrap();
    let spec0 = JetSpec::new(1, 2, 1, JetMode::Vanishing)
        .set(3, 0, vec![C64::new(0.5, -1.0)])
        .set(2, 1, vec![c(2.0)])
        .set(0, 3, vec![C64::new(0.0, 0.25)]);
    let rep0 = solve(&zero, &spec0, &g, &SolveOptions::default()).unwrap();
    let psi = make_seed(&spec0, &g).unwrap();
    let same = psi.entries().iter().zip(rep0.solution.entries()).all(|(a, b)| a.values().zip(b.values()).all(|(x, y)| x == y));
    outcome(
        err <= 1e-6 && rep.converged() && same,
        format!("sup |u - (z + conj z^2 / 2)| = {err:.3e}; a = 0 returns the seed exactly: {same}"),
    )
}

fn c8_liouville() -> Outcome {
    let t0 = Instant::now();
    let sys = problems::liouville().unwrap();
    let g = DiscGrid::new(0.5, 128, 256).unwrap();
    let u = sample(&g, |z| c((2.0 / (1.0 - z.norm_sqr())).ln())).unwrap();
    let exact_res = residual(&sys, &derivative_jet(&u, 2).unwrap()).unwrap();

    let f = feasibility_search(&sys, &SweepOptions::default()).unwrap();
    let Some((r, gamma)) = f.chosen else {
        return outcome(false, "no feasible disk".into());
    };
    let g = DiscGrid::new(r, 32, 64).unwrap();
    let spec = JetSpec::new(1, 1, 1, JetMode::Vanishing);
    let opts = SolveOptions {
        gamma: Some(gamma),
        residual_tol: 1e-4,
        ..SolveOptions::default()
    };
    let rep = solve_real(&sys, &spec, &g, &opts).unwrap();
    let fd_res = residual(&sys, &derivative_jet(rep.solution.entry(0, 0, 0), 2).unwrap()).unwrap();
    let ratios: Vec<f64> = rep.iterations.iter().filter_map(|i| i.ratio).collect();
    let ratio_ok = ratios.iter().all(|&q| q <= 0.75);
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        exact_res <= 1e-4 && rep.converged() && rep.residual_sup <= 1e-4 && fd_res <= 1e-4 && ratio_ok && secs <= 300.0,
        format!(
            "u* residual {exact_res:.3e}; disk R = {r:e}, gamma = {gamma:e}: solver residual {:.3e}, differenced residual {fd_res:.3e}, ratios [{}] ({secs:.1} s)",
            rep.residual_sup,
            ratios.iter().map(|q| format!("{q:.2e}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn c9_harmonic_maps() -> Outcome {
    let t0 = Instant::now();
    let flat = problems::harmonic_map(Arc::new(MetricChart::flat(2, 1e6).unwrap())).unwrap();
    let g = DiscGrid::new(0.5, 32, 64).unwrap();
    let spec = harmonic_jet(&[0.3, -0.2], &[1.0, 0.5]);
    let rep = solve_real(&flat, &spec, &g, &SolveOptions::default()).unwrap();
    let flat_ok = rep.converged() && rep.residual_sup <= 1e-10 && rep.jet_error <= 1e-13;

    let chart = Arc::new(MetricChart::sphere(1e6).unwrap());
    let sys = problems::harmonic_map(chart).unwrap();
    let spec = harmonic_jet(&[0.0, 0.0], &[1.0, 0.0]);
    let f = feasibility_search(&effective_system(&sys, &spec).unwrap(), &SweepOptions::default()).unwrap();
    let Some((r, gamma)) = f.chosen else {
        return outcome(false, "sphere: no feasible disk".into());
    };
    let g = DiscGrid::new(r, 32, 64).unwrap();
    let opts = SolveOptions {
        gamma: Some(gamma),
        residual_tol: 1e-4,
        ..SolveOptions::default()
    };
    let sph = solve_real(&sys, &spec, &g, &opts).unwrap();
    let sphere_ok = sph.converged() && sph.residual_sup <= 1e-4 && sph.jet_error <= 1e-6;
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        flat_ok && sphere_ok && secs <= 600.0,
        format!(
            "flat: residual {:.1e}, jet {:.1e}; sphere on R = {r:e}: {}, residual {:.1e}, jet {:.1e} ({secs:.1} s)",
            rep.residual_sup, rep.jet_error, sph.termination, sph.residual_sup, sph.jet_error
        ),
    )
}

fn c10_mizohata(bin: &Path, tmp: &Path) -> Outcome {
    let sys = problems::mizohata(|_| C64::new(0.0, 0.0)).unwrap();
    let cond = check_theorem_conditions(&sys, &Thresholds::default());
    let measured_ok = (cond.d_eta_m - 1.0).abs() <= 1e-10 && !cond.cond1;
    let g = DiscGrid::new(0.5, 32, 64).unwrap();
    let spec = JetSpec::new(0, 1, 1, JetMode::Vanishing).set(1, 0, vec![c(1.0)]);
    let opts = SolveOptions {
        forced: true,
        max_iter: 50,
        ..SolveOptions::default()
    };
    let rep = solve(&sys, &spec, &g, &opts).unwrap();
    let min_ratio = rep.iterations.iter().filter_map(|i| i.ratio).fold(f64::INFINITY, f64::min);
    let cfg = tmp.join("mizohata.json");
    std::fs::write(&cfg, r#"{"system": {"builtin": "mizohata"}}"#).unwrap();
    let out = tmp.join("mizohata");
    let status = Command::new(bin).args(["solve", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    let report = std::fs::read_to_string(out.join("report.txt")).unwrap_or_default();
    let code = status.status.code();
    outcome(
        measured_ok && rep.iterations.len() == 50 && min_ratio > 0.75 && code == Some(2) && report.contains("condition (1) violated"),
        format!(
            "|d_eta a(0)| - 1 = {:.1e}, condition (1) violated: {}; forced min ratio {min_ratio:.3}; CLI exit {code:?}",
            cond.d_eta_m - 1.0,
            !cond.cond1
        ),
    )
}

/// `(d + dbar)^k (i (d - dbar))^l` by repeated polynomial multiplication.
fn expand(k: usize, l: usize) -> Vec<C64> {
    let mut poly = vec![c(1.0)];
    let mul = |p: &[C64], lo: C64, hi: C64| {
        let mut out = vec![c(0.0); p.len() + 1];
        for (e, &v) in p.iter().enumerate() {
            out[e] += v * lo;
            out[e + 1] += v * hi;
        }
        out
    };
    for _ in 0..k {
        poly = mul(&poly, c(1.0), c(1.0));
    }
    for _ in 0..l {
        poly = mul(&poly, C64::new(0.0, -1.0), C64::new(0.0, 1.0));
    }
    poly
}

fn c11_coefficient_expansion() -> Outcome {
    let mut mismatches = 0;
    for m in 0..=6 {
        for nu in 0..=m {
            let mu = m - nu;
            let rc = real_to_complex(mu, nu);
            if rc.coeffs != expand_brute_force(mu, nu) || rc.complex() != expand(mu, nu) {
                mismatches += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut cp_bad = 0;
    for _ in 0..20 {
        let m = rng.gen_range(1..=4usize);
        let a: Vec<C64> = (0..=m).map(|_| c(rng.gen_range(-9..=9) as f64)).collect();
        let mut want = vec![c(0.0); m + 1];
        for (k, &ak) in a.iter().enumerate() {
            for (p, v) in real_to_complex(k, m - k).complex().into_iter().enumerate() {
                want[p] += ak * v;
            }
        }
        if cp_coefficients(&a).values != want {
            cp_bad += 1;
        }
    }
    let lap = cp_coefficients(&[c(1.0), c(0.0), c(1.0)]);
    let lap_ok = lap.values == vec![c(0.0), c(4.0), c(0.0)];
    outcome(
        mismatches == 0 && cp_bad == 0 && lap_ok,
        format!("expansion mismatches {mismatches}, cp mismatches {cp_bad}, Laplacian {:?}", lap.values.iter().map(|v| v.re).collect::<Vec<_>>()),
    )
}

fn c12_holomorphic() -> Outcome {
    let g = DiscGrid::new(0.5, 64, 128).unwrap();
    let sys = problems::builtin("holo_linear", &BuiltinParams::default()).unwrap();
    let spec = JetSpec::new(1, 0, 1, JetMode::Polynomial).set(0, 0, vec![c(1.0)]);
    let rep = solve_holomorphic(&sys, &spec, &g, &SolveOptions::default()).unwrap();
    let exact = sample(&g, |z| z.exp()).unwrap();
    let err = sup_diff(rep.solution.entry(0, 0, 0), &exact);
    outcome(
        rep.converged() && err <= 1e-3 && rep.holomorphic_defect <= 1e-6,
        format!("sup |f - e^z| = {err:.3e}, max dbar defect over iterations {:.1e}", rep.holomorphic_defect),
    )
}

fn c13_ledger() -> Outcome {
    let (c0, c1, c2) = base_constants(0.5).unwrap();
    let base_ok = c0 == 48.0 && (c1 - 4.0 * 2f64.sqrt()).abs() <= 4.0 * f64::EPSILON * 4.0 && c2 == 16.0;
    let gain = operator_gain(1, 0.5, 0.3).unwrap();
    let gain_ok = (gain - 53.657).abs() <= 1e-3;
    let zero = delta_eta_ledger(3, 0.5, 0.1, 1.0, &Envelopes::default(), 0.0).unwrap();
    let homog = [zero.delta1, zero.delta2, zero.delta3, zero.delta4, zero.delta5, zero.delta, zero.eta]
        .iter()
        .all(|&v| v == 0.0);
    let mut failed = Vec::new();
    let coef = BuiltinParams {
        coefficient: Some(c(1.0)),
        ..BuiltinParams::default()
    };
    let mut systems: Vec<_> = ["zero", "conj_z", "liouville", "director", "m_laplace", "holo_linear", "holo_riccati", "harmonic_map"]
        .iter()
        .map(|n| problems::builtin(n, &coef).unwrap())
        .collect();
    systems.push(problems::harmonic_map(Arc::new(MetricChart::sphere(1e6).unwrap())).unwrap());
    for sys in &systems {
        if feasibility_search(sys, &SweepOptions::default()).unwrap().chosen.is_none() {
            failed.push(sys.name.clone());
        }
    }
    let miz = feasibility_search(&problems::mizohata(|_| c(0.0)).unwrap(), &SweepOptions::default()).unwrap();
    let miz_ok = miz.chosen.is_none() && miz.report.binding == Some(Binding::Delta);
    outcome(
        base_ok && gain_ok && homog && failed.is_empty() && miz_ok,
        format!(
            "C = ({c0}, {c1}, {c2}), M(1) = {gain:.6}, zero ledger: {homog}, infeasible B = 0 systems: {failed:?}, mizohata binding: {}",
            miz.report.binding.map_or("none".into(), |b| b.to_string())
        ),
    )
}

fn c14_determinism(bin: &Path, tmp: &Path) -> Outcome {
    let cfg = tmp.join("det.json");
    std::fs::write(
        &cfg,
        r#"{"system": {"builtin": "j_holomorphic", "coefficient": [0.5, 0.0]},
            "jet": {"entries": [{"i": 1, "j": 0, "value": [[0.3, 0.1]]}]},
            "sweep": {"strategy": "fixed", "gamma": 1.0},
            "grid": {"radius": 0.2, "n_r": 24, "n_theta": 48}}"#,
    )
    .unwrap();
    let mut runs = Vec::new();
    for threads in ["1", "2"] {
        let out = tmp.join(format!("det{threads}"));
        let st = Command::new(bin)
            .args(["solve", "--threads", threads, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        runs.push((st.status.code(), out));
    }
    let csvs = |dir: &Path| {
        let mut files: Vec<(String, Vec<u8>)> = Vec::new();
        for sub in [dir.to_path_buf(), dir.join("fields")] {
            for e in std::fs::read_dir(&sub).unwrap().flatten() {
                let p = e.path();
                if p.extension().is_some_and(|x| x == "csv") {
                    files.push((p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()));
                }
            }
        }
        files.sort();
        files
    };
    let (a, b) = (csvs(&runs[0].1), csvs(&runs[1].1));
    let same = !a.is_empty() && a == b;
    outcome(
        same && runs[0].0 == Some(0) && runs[1].0 == Some(0),
        format!("{} CSV files, byte-identical across --threads 1 / 2: {same}; exits {:?} {:?}", a.len(), runs[0].0, runs[1].0),
    )
}

fn main() {
    let bin = Path::new(env!("CARGO_BIN_EXE_cgdisk"));
    let tmp = tempfile::tempdir().unwrap();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("operator identities T(conj z^l)", Box::new(c1_cauchy_monomials)),
        ("dbar T f = f", Box::new(c2_dbar_inverts_t)),
        ("|Tf| <= 4R|f|", Box::new(c3_t_bound)),
        ("2T(conj z) vanishes", Box::new(c4_second_transform)),
        ("norm inequalities", Box::new(c5_norm_inequalities)),
        ("word engine soundness", Box::new(c6_word_engine)),
        ("closed-form solve", Box::new(c7_closed_form)),
        ("Liouville consistency", Box::new(c8_liouville)),
        ("harmonic maps", Box::new(c9_harmonic_maps)),
        ("Mizohata negative control", Box::new(|| c10_mizohata(bin, tmp.path()))),
        ("coefficient expansion oracle", Box::new(c11_coefficient_expansion)),
        ("holomorphic system", Box::new(c12_holomorphic)),
        ("constants ledger", Box::new(c13_ledger)),
        ("determinism", Box::new(|| c14_determinism(bin, tmp.path()))),
    ];
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failures += 1;
        }
        println!("criterion {:>2} [{}] {name}: {}", k + 1, if o.pass { "pass" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
