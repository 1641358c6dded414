use eri_bench::cost::{growth_per_feature, shapley_cost};

// Kept in its own test binary so timing is not shared with other tests.
#[test]
fn exact_shapley_cost_grows_exponentially() {
    let dims: Vec<usize> = (10..=16).collect();
    let points = shapley_cost(&dims, 3, 0).unwrap();
    assert_eq!(points.len(), dims.len());
    let growth = growth_per_feature(&points).unwrap();
    assert!(growth >= 1.8, "growth per feature {growth:.2}: {points:?}");
}
