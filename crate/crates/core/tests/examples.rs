//! Worked examples for each public operation.

mod common;

use common::*;
use netclear_core::dense::sup_dist;
use netclear_core::dynamic::{DYNAMIC_MATRIX, DYNAMIC_MATRIX_SEQUENTIAL, DYNAMIC_PRORATA, STATIC_MATRIX};
use netclear_core::graph::spectral_radius_estimate;
use netclear_core::model::{loss, nominal_closed_form, worth_closed_form};
use netclear_core::static_clearing::SINK_PAYMENT;
use netclear_core::validation::{
    check_absolute_priority, check_earliest_payment, check_payment_acyclicity, fixed_point_residual, PRIORITY,
};
use netclear_core::*;

#[test]
fn nominal_after_optimal_first_period() {
    let inst = example_one();
    let traj = evolve_nominal(inst.liabilities(), &example_one_optimal(), 1.0).unwrap();
    let mut expect = Matrix::square_zeros(4);
    expect[(0, 1)] = 1.0;
    expect[(1, 3)] = 1.0;
    assert_eq!(traj[1], expect);
    assert_eq!(traj[2].row_sums(), vec![1.0, 0.0, 0.0, 0.0]);
}

#[test]
fn stream_residual_and_worth() {
    let inst = en5_dynamic();
    let payments = clear_dynamic_matrix(&inst).unwrap().schedule.matrices().to_vec();
    let traj = evolve_nominal(inst.liabilities(), &payments, 1.01).unwrap();
    assert!((traj[3][(2, 4)] - 10.51).abs() < 0.005, "{}", traj[3][(2, 4)]);
    let by_hand = nominal_by_hand(inst.liabilities().matrix(), &payments, 1.01);
    for t in 0..=3 {
        let closed = nominal_closed_form(inst.liabilities().matrix(), &payments, 1.01, t);
        assert!(closed.combine(1.0, &traj[t], -1.0).max_abs() < 1e-9);
        assert!(by_hand[t].combine(1.0, &traj[t], -1.0).max_abs() < 1e-9);
    }
    let w = evolve_worth(&inst, &payments).unwrap();
    assert!((w[3][0] - 0.39).abs() < 0.005, "{}", w[3][0]);
    assert!(sup_dist(&w[3], &worth_closed_form(inst.inflows(), &payments, 3)) < 1e-9);

    // The two-decimal schedule rounds 0.606 up to 0.61 on the last period.
    let rounded = reference_schedule();
    assert!(matches!(
        evolve_nominal(inst.liabilities(), &rounded, 1.01),
        Err(ModelError::PaymentExceedsNominal { t: 2, i: 0, j: 4, .. })
    ));
    let w = evolve_worth(&inst, &rounded).unwrap();
    assert!((w[3][0] - 0.39).abs() < 0.005, "{}", w[3][0]);
}

#[test]
fn worth_of_optimal_diamond_schedule() {
    let inst = example_one();
    let w = evolve_worth(&inst, &example_one_optimal()).unwrap();
    assert_eq!(w[2], vec![0.0, 0.0, 0.0, 2.0]);
    let zero = DynamicInstance::new(inst.liabilities().clone(), vec![vec![0.0; 4]; 3], 1.0, 0.0).unwrap();
    let w = evolve_worth(&zero, &vec![Matrix::square_zeros(4); 3]).unwrap();
    assert!(w.iter().all(|v| v.iter().all(|&x| x == 0.0)));
}

#[test]
fn losses_of_diamond_schedules() {
    let inst = example_one();
    let opt = PaymentSchedule::from_matrices(&inst, example_one_optimal()).unwrap();
    assert_eq!(loss(&inst, &opt).unwrap(), 3.0);
    let greedy = PaymentSchedule::from_matrices(&inst, example_one_node_two_first()).unwrap();
    assert_eq!(loss(&inst, &greedy).unwrap(), 4.0);
    let bad = PaymentSchedule::from_matrices(&inst, vec![inst.liabilities().matrix().clone(), Matrix::square_zeros(4)])
        .unwrap();
    assert!(matches!(loss(&inst, &bad), Err(ModelError::Inadmissible(_))));
}

#[test]
fn full_payment_has_zero_loss() {
    let s = en5_static([400.0, 400.0, 400.0, 400.0, 0.0]);
    let inst = DynamicInstance::from(s.clone());
    let sched = PaymentSchedule::from_matrices(&inst, vec![s.liabilities().matrix().clone()]).unwrap();
    assert_eq!(loss(&inst, &sched).unwrap(), 0.0);
}

#[test]
fn diamond_and_network_components() {
    let inst = example_one();
    let g = WeightedDigraph::from_matrix(inst.liabilities().matrix()).unwrap();
    let cond = strong_components(&g);
    assert_eq!(cond.components.len(), 4);
    assert!(cond.components.iter().all(|c| c.is_trivial));
    assert_eq!(cond.unique_sink_node(), Some(3));
    assert!(reachable(&g, 0, &[3]).unwrap());
    assert!(!reachable(&g, 3, &[0]).unwrap());
    assert!(reachable(&g, 2, &[2]).unwrap());

    let g = WeightedDigraph::from_matrix(en5_liabilities().matrix()).unwrap();
    let cond = strong_components(&g);
    let sinks: Vec<_> = cond.sinks().map(|c| c.nodes.clone()).collect();
    assert_eq!(sinks, vec![vec![4]]);
    assert!(cond.components.iter().any(|c| c.nodes == vec![0, 1, 2, 3]));
}

#[test]
fn schur_stability_of_network_submatrices() {
    let a = en5_liabilities().relative();
    let banks = submatrix_schur_stable(&a, &[0, 1, 2, 3]).unwrap();
    assert!(banks.stable);
    assert!(banks.spectral_radius_estimate < 1.0 - 1e-8);
    let with_sink = submatrix_schur_stable(&a, &[1, 4]).unwrap();
    assert!(!with_sink.stable);
    assert_eq!(with_sink.witness, Some(vec![4]));
    assert!(submatrix_schur_stable(&a, &[0]).unwrap().stable);
    assert!(matches!(
        submatrix_schur_stable(&a, &[0, 1, 2, 3, 4]),
        Err(GraphError::ImproperSubset)
    ));
    assert!((spectral_radius_estimate(a.matrix(), 1000) - 1.0).abs() < 1e-9);
}

#[test]
fn shocked_prorata_certificate() {
    let inst = en5_static(C_SHOCK);
    let p = clear_prorata_lp(&inst).unwrap();
    let cert = certify_clearing(&inst, StaticPayments::ProRata(p.vector().unwrap()), 1e-7);
    assert!(cert.passed(), "{}", cert.summary());
    assert!(cert.get("clearing equation").unwrap().max_violation < 1e-6);
    assert!(cert.get(SINK_PAYMENT).unwrap().passed);
    let (fda, _) = clear_prorata_fda(&inst, &FdaOptions::default()).unwrap();
    assert!(sup_dist(fda.vector().unwrap(), p.vector().unwrap()) < 1e-6);
    let nominal = clear_prorata_lp(&en5_static(C_NOM)).unwrap();
    assert_eq!(nominal.vector().unwrap(), en5_liabilities().nominal_outflow().as_slice());
}

#[test]
fn single_period_horizon_matches_static_matrix() {
    let s = en5_static(C_SHOCK);
    let d = clear_dynamic_matrix(&DynamicInstance::from(s.clone())).unwrap();
    let m = clear_matrix(&s).unwrap();
    assert!((d.report.objective - m.report.objective).abs() < 1e-9);
    assert!((d.report.total_residual - 20.0).abs() < 1e-6);
}

#[test]
fn payable_up_front_prorata() {
    let inst = DynamicInstance::new(
        en5_liabilities(),
        vec![vec![400.0, 400.0, 400.0, 400.0, 0.0], vec![0.0; 5]],
        1.05,
        0.0,
    )
    .unwrap();
    let c = clear_dynamic_prorata(&inst).unwrap();
    let v = c.schedule.vectors().unwrap();
    assert!(sup_dist(&v[0], &en5_liabilities().nominal_outflow()) < 1e-9);
    assert!(v[1].iter().all(|&x| x.abs() < 1e-9));
    assert!(c.report.loss.abs() < 1e-9);
}

#[test]
fn zero_inflow_acyclic_prorata_pays_nothing() {
    let inst = DynamicInstance::new(example_one().liabilities().clone(), vec![vec![0.0; 4]; 3], 1.1, 0.0).unwrap();
    let c = clear_dynamic_prorata_sequential(&inst).unwrap();
    assert!(c.schedule.vectors().unwrap().iter().flatten().all(|&x| x == 0.0));
}

#[test]
fn diamond_prorata_is_no_better_than_matrix() {
    let c = clear_dynamic_prorata(&example_one()).unwrap();
    assert!(c.report.loss >= 3.0 - 1e-9);
}

#[test]
fn stream_per_period_fda_matches_lp() {
    let inst = en5_dynamic();
    let lp = clear_dynamic_prorata_sequential(&inst).unwrap();
    let fda = clear_dynamic_prorata_fda(&inst, &FdaOptions::default()).unwrap();
    for t in 0..3 {
        assert!(sup_dist(&lp.schedule.vectors().unwrap()[t], &fda.schedule.vectors().unwrap()[t]) < 1e-6);
    }
    let (r, _) = fixed_point_residual(&inst, &lp.schedule).unwrap();
    assert!(r < 1e-6);
}

#[test]
fn stream_comparison_table() {
    let cmp = scenario_compare(&en5_dynamic()).unwrap();
    let st = cmp.get(STATIC_MATRIX).unwrap();
    assert!((st.final_shortfall - 340.0).abs() < 1e-6);
    assert!((st.total_residual - 343.40).abs() < 1e-6);
    assert!((cmp.get(DYNAMIC_MATRIX).unwrap().residual_liabilities[(2, 4)] - 10.51).abs() < 0.01);
    assert!((cmp.get(DYNAMIC_PRORATA).unwrap().total_residual - 21.07).abs() < 0.01);
    assert!(cmp.entries.iter().all(|e| e.report.certified()));

    let cmp = scenario_compare(&example_one()).unwrap();
    let full = cmp.get(DYNAMIC_MATRIX).unwrap().loss;
    assert_eq!(full, 3.0);
    assert!(cmp.get(DYNAMIC_MATRIX_SEQUENTIAL).unwrap().loss >= full);
}

#[test]
fn optimal_schedules_certify() {
    let inst = en5_dynamic();
    let m = clear_dynamic_matrix(&inst).unwrap();
    let tol = 1e-6 * inst.liabilities().scale();
    assert!(check_absolute_priority(&inst, &m.schedule, tol).passed());
    assert!(check_earliest_payment(&inst, &m.schedule, tol).passed);
    let acyclic = check_payment_acyclicity(&m.schedule);
    assert!(acyclic.passed);
    let arcs: Vec<_> = WeightedDigraph::from_matrix(m.schedule.payment(1)).unwrap().arcs().collect();
    assert_eq!(arcs, vec![(0, 4), (1, 4), (3, 0), (3, 4)]);

    let p = clear_dynamic_prorata(&inst).unwrap();
    let cert = check_absolute_priority(&inst, &p.schedule, tol);
    assert!(cert.get(PRIORITY).unwrap().passed);
}
