use std::sync::Arc;

use cgdisk::grid::{sample, DiscGrid};
use cgdisk::holder::{norms, origin_value, polynomial_jet, taylor_subtract};
use cgdisk::ledger::{base_constants, delta_eta_ledger, operator_gain, Envelopes};
use cgdisk::ops::apply_t;
use cgdisk::problems::{builtin, BuiltinParams};
use cgdisk::solver::{theta_step, Structure};
use cgdisk::{jet_pairs, C64};
use proptest::prelude::*;

fn grid() -> Arc<DiscGrid> {
    DiscGrid::new(0.6, 16, 32).unwrap()
}

fn envelopes(v: &[f64]) -> Envelopes {
    Envelopes {
        a: v[0],
        b: v[1],
        c: v[2],
        h_alpha_a: v[3],
        h_alpha_b: v[4],
        h_alpha_c: v[5],
        h1_a: v[6],
        h1_b: v[7],
        h1_c: v[8],
    }
}

fn coeff() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| C64::new(a, b))
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

#[test]
fn frozen_gains() {
    // closed form 2^(m(m-1)/2) (C1 m + C0 + (m-1) C2 R^alpha)^m, evaluated offline
    assert!(close(operator_gain(1, 0.5, 0.3).unwrap(), 53.65685424949238, 1e-14));
    assert!(close(operator_gain(2, 0.5, 0.25).unwrap(), 9062.270703772589, 1e-13));
    assert!(close(operator_gain(3, 0.5, 0.1).unwrap(), 3387144.4578886773, 1e-13));
    let (c0, c1, c2) = base_constants(0.5).unwrap();
    assert_eq!((c0, c2), (48.0, 16.0));
    assert!(close(c1, 4.0 * 2f64.sqrt(), 1e-15));
}

#[test]
fn t_of_zeta_matches_closed_form() {
    let g = DiscGrid::new(0.7, 64, 128).unwrap();
    let tf = apply_t(&sample(&g, |z| z).unwrap());
    let exact = sample(&g, |z| z * z.conj() - 0.49).unwrap();
    let err = tf.sub(&exact).unwrap().sup();
    assert!(err <= 1e-10, "{err}");
}

#[test]
fn theta_reconstructs_only_the_leading_entry() {
    let g = grid();
    let sys = builtin("liouville", &BuiltinParams::default()).unwrap();
    let u = polynomial_jet(
        &g,
        2,
        &[(0, 0, C64::new(0.2, 0.0)), (1, 1, C64::new(0.5, 0.0)), (2, 0, C64::new(0.1, 0.3)), (0, 2, C64::new(0.1, -0.3))],
    );
    let th = theta_step(&sys, &u, Structure::General).unwrap();
    for (i, j) in jet_pairs(2) {
        let v = origin_value(th.entry(0, i, j));
        if (i, j) == (1, 1) {
            assert!(v.norm() > 0.1, "leading entry {v}");
        } else {
            assert!(v.norm() <= 1e-6, "({i}, {j}) origin value {v}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ledger_is_homogeneous(v in prop::collection::vec(0.0..2.0f64, 9), a0 in 0.0..2.0f64, lambda in 0.1..10.0f64) {
        let e = envelopes(&v);
        let scaled: Vec<f64> = v.iter().map(|x| x * lambda).collect();
        let l1 = delta_eta_ledger(2, 0.5, 0.1, 0.01, &e, a0).unwrap();
        let l2 = delta_eta_ledger(2, 0.5, 0.1, 0.01, &envelopes(&scaled), a0 * lambda).unwrap();
        prop_assert!(close(l2.delta, lambda * l1.delta, 1e-12));
        prop_assert!(close(l2.eta, lambda * l1.eta, 1e-12));
    }

    #[test]
    fn ledger_is_monotone(v in prop::collection::vec(0.0..2.0f64, 9), k in 0usize..9, bump in 0.0..1.0f64, r in 0.01..0.5f64) {
        let base = delta_eta_ledger(2, 0.5, r, 0.01, &envelopes(&v), 0.3).unwrap();
        let mut w = v.clone();
        w[k] += bump;
        let up = delta_eta_ledger(2, 0.5, r, 0.01, &envelopes(&w), 0.3).unwrap();
        prop_assert!(up.delta >= base.delta && up.eta >= base.eta);
        let wider = delta_eta_ledger(2, 0.5, r * 1.5, 0.01, &envelopes(&v), 0.3).unwrap();
        prop_assert!(wider.delta >= base.delta && wider.eta >= base.eta);
        prop_assert!(base.delta1 >= 0.0 && base.delta5 >= 0.0);
    }

    #[test]
    fn taylor_subtract_is_idempotent(cs in prop::collection::vec(coeff(), 10)) {
        let g = grid();
        let terms: Vec<(usize, usize, C64)> = (0..=3)
            .flat_map(|d| (0..=d).map(move |a| (a, d - a)))
            .zip(cs)
            .map(|((a, b), c)| (a, b, c))
            .collect();
        let jet = polynomial_jet(&g, 2, &terms);
        let once = taylor_subtract(&jet, 1, 1).unwrap();
        let twice = taylor_subtract(&once, 1, 1).unwrap();
        let d = once.sub(&twice).unwrap().entries().iter().map(|e| e.sup()).fold(0.0, f64::max);
        prop_assert!(d <= 1e-8, "{}", d);
        prop_assert!(once.entry(0, 1, 1).values().eq(jet.entry(0, 1, 1).values()));
    }

    #[test]
    fn norm_invariants(cs in prop::collection::vec(coeff(), 6), s in coeff(), alpha in 0.05..0.95f64) {
        let g = grid();
        let f = sample(&g, |z| cs[0] + cs[1] * z + cs[2] * z.conj() + cs[3] * z * z + cs[4] * z * z.conj() + cs[5] * z.conj().powi(2)).unwrap();
        let n = norms(&f, alpha).unwrap();
        prop_assert_eq!(n.composite, n.sup_norm + (2.0 * g.radius()).powf(alpha) * n.holder);
        prop_assert!(n.sup_norm >= 0.0 && n.holder >= 0.0);
        let scaled = norms(&f.scale(s), alpha).unwrap();
        prop_assert!(close(scaled.composite, s.norm() * n.composite, 1e-12));
        let shifted = norms(&f.add(&sample(&g, |_| cs[0]).unwrap()).unwrap(), alpha).unwrap();
        prop_assert!(close(shifted.holder, n.holder, 1e-9));
    }
}
