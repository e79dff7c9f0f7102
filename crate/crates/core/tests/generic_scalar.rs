use layered_noma::analytic::{connection_prob_exact, rational_to_f64};
use layered_noma::{AccessModel, AccessModelF32, LayerPlan, LayerPlanF32, SystemParams, SystemParamsF32};

#[test]
fn single_and_double_precision_agree() {
    let m64 = AccessModel::from_population(48, 300, 5, 0.5, 0.2).unwrap();
    let m32 = AccessModelF32::from_population(48, 300, 5, 0.5, 0.2).unwrap();
    let (t64, t32) = (m64.throughput().unwrap(), m32.throughput().unwrap());
    assert!((t64 - t32 as f64).abs() / t64 < 1e-5, "{t64} vs {t32}");

    let p64 = SystemParams::reference();
    let p32 = SystemParamsF32::reference();
    let l64 = LayerPlan::new(p64.target_sinr(), 1.0, 5).unwrap();
    let l32 = LayerPlanF32::new(p32.target_sinr(), 1.0, 5).unwrap();
    for (a, b) in l64.power_levels().iter().zip(l32.power_levels()) {
        assert!((a - *b as f64).abs() / a < 1e-5);
    }
}

#[test]
fn exact_route_matches_floating_point() {
    for m in [2u32, 5, 48] {
        for c in [1u32, 3, 10] {
            for l in 1..=4 {
                let exact = rational_to_f64(&connection_prob_exact(m, c, l).unwrap());
                let float = layered_noma::analytic::connection_prob(m, c as f64, l).unwrap();
                assert!((exact - float).abs() <= 1e-13 * exact.max(1e-300), "m={m} c={c} l={l}");
            }
        }
    }
}
