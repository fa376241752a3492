mod common;

use proptest::prelude::*;
use spinthermo::meanfield::{MeanFieldModel, PointKind};
use spinthermo::spinspace::CouplingVector;
use spinthermo::thermo::SourceField;

fn field(h1: f64, h2: f64) -> SourceField {
    SourceField::new(vec![h1, h2]).unwrap()
}

#[test]
fn pure_mixing_at_zero_coupling() {
    let mf = MeanFieldModel::new(CouplingVector::zeros(3).unwrap(), 0.7).unwrap();
    assert!((mf.free_energy(&[0.0; 3]).unwrap() + 0.7 * 3.0 * 2f64.ln()).abs() < 1e-15);
    assert!(mf.free_energy(&[1.0, 0.0, 0.0]).is_err());
}

#[test]
fn slice_matches_closed_form() {
    let mf = MeanFieldModel::inverter(1.5, 1.0).unwrap();
    for m in [-0.9, -0.3, 0.0, 0.45, 0.99] {
        let want = -1.5 * m * m + 2.0 * common::mixing(m);
        assert!((mf.slice_free_energy(m).unwrap() - want).abs() < 1e-14);
    }
}

#[test]
fn bistable_stationary_points() {
    let mf = MeanFieldModel::inverter(1.5, 1.0).unwrap();
    let pts = mf.solve(&SourceField::zeros(2)).unwrap();
    assert_eq!(pts.len(), 3);
    let m_star = common::tanh_fixed_point(1.5);
    let minima: Vec<_> = pts
        .iter()
        .filter(|p| p.kind == PointKind::Minimum)
        .collect();
    assert_eq!(minima.len(), 2);
    for p in &minima {
        assert!((p.m[0].abs() - m_star).abs() < 1e-12);
        assert!((p.m[0] + p.m[1]).abs() < 1e-12);
    }
    let saddle: Vec<_> = pts.iter().filter(|p| p.kind == PointKind::Saddle).collect();
    assert_eq!(saddle.len(), 1);
    assert!(saddle[0].m.iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn subcritical_and_strong_field_are_single_minimum() {
    let weak = MeanFieldModel::inverter(0.5, 1.0).unwrap();
    let pts = weak.solve(&SourceField::zeros(2)).unwrap();
    assert_eq!(pts.len(), 1);
    assert!(pts[0].m.iter().all(|v| v.abs() < 1e-12));
    assert_eq!(weak.slice_minima_count().unwrap(), 1);

    let mf = MeanFieldModel::inverter(1.5, 1.0).unwrap();
    assert_eq!(mf.minima(&field(2.0, -2.0)).unwrap().len(), 1);
}

#[test]
fn bifurcation_at_unit_ratio() {
    let count = |j: f64| {
        MeanFieldModel::inverter(j, 1.0)
            .unwrap()
            .slice_minima_count()
            .unwrap()
    };
    assert_eq!(count(0.999), 1);
    assert_eq!(count(1.001), 2);
    let mut lo = 0.5;
    let mut hi = 1.5;
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if count(mid) == 1 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!((0.5 * (lo + hi) - 1.0).abs() < 1e-3);
}

#[test]
fn spinodals() {
    let s = |j: f64| {
        MeanFieldModel::inverter(j, 1.0)
            .unwrap()
            .spinodals()
            .unwrap()
    };
    let (lo, hi) = s(1.5).unwrap();
    assert!((hi - (1.0f64 / 3.0).sqrt()).abs() < 1e-9);
    assert!((lo + (1.0f64 / 3.0).sqrt()).abs() < 1e-9);
    let (lo, hi) = s(2.0).unwrap();
    assert!((hi - 0.5f64.sqrt()).abs() < 1e-9 && (lo + 0.5f64.sqrt()).abs() < 1e-9);
    assert_eq!(s(1.0), Some((0.0, 0.0)));
    assert_eq!(s(0.8), None);
    // the curvature changes sign exactly there
    let mf = MeanFieldModel::inverter(1.5, 1.0).unwrap();
    assert!(mf.slice_curvature(0.57).unwrap() < 0.0 && mf.slice_curvature(0.58).unwrap() > 0.0);
}

#[test]
fn phase_boundary_endpoint() {
    let pb = |j: f64| {
        MeanFieldModel::inverter(j, 1.0)
            .unwrap()
            .phase_boundary()
            .unwrap()
    };
    let (hc, m0) = pb(1.5).unwrap();
    assert!((m0 - 0.57735).abs() < 1e-5);
    assert!((hc - 1.52451).abs() < 1e-4);
    let (hc, m0) = pb(2.0).unwrap();
    assert!((m0 - 0.5f64.sqrt()).abs() < 1e-15);
    assert!((hc - (2.0 * 0.5f64.sqrt() + 0.5f64.sqrt().atanh())).abs() < 1e-12);
    assert!(pb(1.0 + 1e-8).unwrap().0 < 1e-3);
    assert!(pb(0.9).is_none());
}

#[test]
fn phase_boundary_ends_bistability_in_uniform_field() {
    // along h₁ = h₂ the two antiparallel minima survive up to h_c
    let mf = MeanFieldModel::inverter(1.5, 1.0).unwrap();
    let (hc, _) = mf.phase_boundary().unwrap().unwrap();
    assert_eq!(mf.minima(&field(hc - 1e-3, hc - 1e-3)).unwrap().len(), 2);
    assert_eq!(mf.minima(&field(hc + 1e-3, hc + 1e-3)).unwrap().len(), 1);
}

#[test]
fn susceptibility_is_positive_on_minima() {
    let mf = MeanFieldModel::inverter(1.5, 1.0).unwrap();
    let d = 1e-6;
    for h in [0.0, 0.3, 0.8] {
        for (i, p) in mf.minima(&field(h, -h)).unwrap().iter().enumerate() {
            let shifted = mf.minima(&field(h + d, -h)).unwrap();
            let q = shifted
                .iter()
                .min_by(|a, b| (a.m[0] - p.m[0]).abs().total_cmp(&(b.m[0] - p.m[0]).abs()))
                .unwrap();
            assert!(q.m[0] > p.m[0], "minimum {i} at h={h}");
        }
    }
}

#[test]
fn mean_field_bounds_the_exact_gibbs_energy() {
    for (j, t) in [(1.5, 1.0), (0.5, 1.0), (2.0, 0.6)] {
        let mf = MeanFieldModel::inverter(j, t).unwrap();
        for h in [-1.7, -0.4, 0.0, 0.9, 2.5] {
            let (g, _, _) = common::two_spin_exact(j, t, h, -0.6 * h);
            let best = mf.minima(&field(h, -0.6 * h)).unwrap()[0].tilted_value;
            assert!(best >= g - 1e-12, "J={j} T={t} h={h}");
        }
    }
}

#[test]
fn xor_model_stationary_points() {
    let c = CouplingVector::zeros(3).unwrap().with(0b111, -1.0).unwrap();
    let mf = MeanFieldModel::new(c, 0.4).unwrap();
    let pts = mf.solve(&SourceField::zeros(3)).unwrap();
    assert!(pts.iter().all(|p| p.gradient_norm < 1e-10));
    let origin = pts.iter().find(|p| p.m.iter().all(|v| v.abs() < 1e-12));
    assert!(origin.is_some());
    // paramagnetic origin is a minimum: the triple term has no quadratic part
    assert_eq!(origin.unwrap().kind, PointKind::Minimum);
}

proptest! {
    #[test]
    fn gradient_and_hessian_match_differences(
        j in prop::collection::vec(-2.0f64..2.0, 8),
        m in prop::collection::vec(-0.9f64..0.9, 3),
        t in 0.3f64..2.0,
    ) {
        let mf = MeanFieldModel::new(CouplingVector::new(j, 3).unwrap(), t).unwrap();
        let d = 1e-5;
        let g = mf.tilted_gradient(&m, &[0.0; 3]);
        let hess = mf.hessian(&m);
        for a in 0..3 {
            let mut p = m.clone();
            let mut q = m.clone();
            p[a] += d;
            q[a] -= d;
            let fd = (mf.free_energy(&p).unwrap() - mf.free_energy(&q).unwrap()) / (2.0 * d);
            prop_assert!((fd - g[a]).abs() < 1e-7);
            let gp = mf.tilted_gradient(&p, &[0.0; 3]);
            let gq = mf.tilted_gradient(&q, &[0.0; 3]);
            for b in 0..3 {
                prop_assert!(((gp[b] - gq[b]) / (2.0 * d) - hess[(a, b)]).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn branches_at_zero_field_are_degenerate() {
    let mf = MeanFieldModel::inverter(1.5, 1.0).unwrap();
    let grid: Vec<f64> = (0..=40).map(|i| -2.0 + 0.1 * i as f64).collect();
    let br = mf.restricted_gibbs_branches(&grid).unwrap();
    let zero = br.iter().find(|p| p.h.abs() < 1e-12).unwrap();
    let (p, m) = (zero.plus.as_ref().unwrap(), zero.minus.as_ref().unwrap());
    assert!((p.gibbs - m.gibbs).abs() < 1e-12);
    let edge = br.iter().find(|p| (p.h - 2.0).abs() < 1e-12).unwrap();
    assert!(edge.plus.is_some() ^ edge.minus.is_some());
    // branch values coincide with the solver's minima
    for point in br.iter().step_by(5) {
        let minima = mf.minima(&field(point.h, -point.h)).unwrap();
        for s in [&point.plus, &point.minus].into_iter().flatten() {
            assert!(minima
                .iter()
                .any(|q| (q.tilted_value - s.gibbs).abs() < 1e-10));
        }
    }
}

#[test]
fn saddle_point_form_matches_legendre_value() {
    let mf = MeanFieldModel::inverter(1.5, 1.0).unwrap();
    for i in 0..100 {
        let h = -3.0 + 6.0 * i as f64 / 99.0;
        for v in mf.saddle_point_gibbs(h, -h).unwrap() {
            assert!((v.gibbs - v.legendre_gibbs).abs() < 1e-9, "h={h}");
        }
    }
    let br = mf.restricted_gibbs_branches(&[0.0]).unwrap();
    let g = br[0].plus.as_ref().unwrap().gibbs;
    let minima: Vec<_> = mf
        .saddle_point_gibbs(0.0, 0.0)
        .unwrap()
        .into_iter()
        .filter(|v| v.kind == PointKind::Minimum)
        .collect();
    assert_eq!(minima.len(), 2);
    assert!(minima.iter().all(|v| (v.gibbs - g).abs() < 1e-12));

    let weak = MeanFieldModel::inverter(0.6, 1.0).unwrap();
    let v = weak.saddle_point_gibbs(0.4, -0.1).unwrap();
    assert_eq!(v.len(), 1);
    assert!((v[0].gibbs - v[0].legendre_gibbs).abs() < 1e-12);
}
