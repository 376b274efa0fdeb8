//! Event algebra, expectation and mixture properties on a small phase grid.

use phasequant::phase_grid::{collapse, event_projector, expectation, make_grid, DensityModel, Interval, PhaseGrid, Region};
use phasequant::states::{random_phase_field, seeded_rng};
use phasequant::symbol::{Polynomial, Symbol};
use proptest::prelude::*;

fn grid() -> PhaseGrid {
    make_grid(1, Interval::symmetric(6.0), Interval::symmetric(6.0), 48, 48, 1.0).unwrap()
}

fn ordered(a: f64, b: f64) -> (f64, f64) {
    (a.min(b), a.max(b))
}

fn region((p0, p1, q0, q1): (f64, f64, f64, f64)) -> Region {
    let (pl, ph) = ordered(p0, p1);
    let (ql, qh) = ordered(q0, q1);
    Region::boxed(vec![pl], vec![ph], vec![ql], vec![qh])
}

fn corners() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (-6.0..6.0f64, -6.0..6.0f64, -6.0..6.0f64, -6.0..6.0f64)
}

/// Quadratic polynomial in `(p, q)` with the given coefficients of
/// `1, p, q, p², pq, q²`.
fn quadratic(c: [f64; 6]) -> Symbol {
    let exps = [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]];
    let mut poly = Polynomial::zero(1);
    for (e, c) in exps.iter().zip(c) {
        poly = poly.add(&Polynomial::monomial(1, e.to_vec(), c));
    }
    Symbol::polynomial(poly)
}

fn coefs() -> impl Strategy<Value = [f64; 6]> {
    prop::array::uniform6(-2.0..2.0f64)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn events_form_a_boolean_algebra(a in corners(), b in corners()) {
        let g = grid();
        let (ra, rb) = (region(a), region(b));
        let lhs = event_projector(&g, &ra.or(&rb)).mask() + event_projector(&g, &ra.and(&rb)).mask();
        let rhs = event_projector(&g, &ra).mask() + event_projector(&g, &rb).mask();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn event_projectors_are_idempotent(a in corners()) {
        let g = grid();
        let pa = event_projector(&g, &region(a));
        let twice = pa.compose(&pa).unwrap();
        prop_assert_eq!(twice.mask(), pa.mask());
    }

    #[test]
    fn expectation_is_linear_in_the_symbol(seed in any::<u64>(), cf in coefs(), cg in coefs(), a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let g = grid();
        let mut rng = seeded_rng(seed);
        let d = DensityModel::pure(random_phase_field(&g, &mut rng)).unwrap();
        let (f, h) = (quadratic(cf), quadratic(cg));
        let combo = f.linear_combination(a, &h, b).unwrap();
        let lhs = expectation(&d, &combo).unwrap();
        let rhs = a * expectation(&d, &f).unwrap() + b * expectation(&d, &h).unwrap();
        prop_assert!(rel(lhs, rhs) < 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn expectation_is_affine_in_weights(seed in any::<u64>(), w in 0.0..1.0f64, cf in coefs()) {
        let g = grid();
        let mut rng = seeded_rng(seed);
        let (s1, s2) = (random_phase_field(&g, &mut rng), random_phase_field(&g, &mut rng));
        let f = quadratic(cf);
        let mix = DensityModel::new(vec![(w, s1.clone()), (1.0 - w, s2.clone())]).unwrap();
        let e1 = expectation(&DensityModel::pure(s1).unwrap(), &f).unwrap();
        let e2 = expectation(&DensityModel::pure(s2).unwrap(), &f).unwrap();
        let lhs = expectation(&mix, &f).unwrap();
        prop_assert!(rel(lhs, w * e1 + (1.0 - w) * e2) < 1e-12);
    }

    #[test]
    fn mixture_and_root_density_state_agree(seed in any::<u64>(), w in 0.0..1.0f64, cf in coefs()) {
        let g = grid();
        let mut rng = seeded_rng(seed);
        let mix = DensityModel::new(vec![
            (w, random_phase_field(&g, &mut rng)),
            (1.0 - w, random_phase_field(&g, &mut rng)),
        ]).unwrap();
        let pure = DensityModel::pure(mix.equivalent_pure_state()).unwrap();
        let f = quadratic(cf);
        let (a, b) = (expectation(&mix, &f).unwrap(), expectation(&pure, &f).unwrap());
        prop_assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }

    #[test]
    fn collapsed_density_lies_in_the_event(seed in any::<u64>(), a in corners()) {
        let g = grid();
        let mut rng = seeded_rng(seed);
        let d = DensityModel::pure(random_phase_field(&g, &mut rng)).unwrap();
        let r = region(a);
        // boxes thinner than a cell can miss every sample
        prop_assume!(event_projector(&g, &r).mask().sum() > 0.0);
        let c = collapse(&d, &r).unwrap();
        let inside = r.clone();
        let chi = Symbol::callable(1, move |p, q| if inside.contains(p, q) { 1.0 } else { 0.0 });
        let e = expectation(&c, &chi).unwrap();
        prop_assert!((e - 1.0).abs() < 1e-10, "{e}");
    }
}

#[test]
fn collapse_on_an_empty_event_fails() {
    let g = grid();
    let d = DensityModel::pure(random_phase_field(&g, &mut seeded_rng(1))).unwrap();
    assert!(collapse(&d, &Region::empty()).is_err());
}
