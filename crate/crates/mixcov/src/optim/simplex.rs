//! Euclidean projection onto the probability simplex.

/// Project v onto {p : p_j >= 0, sum p_j = 1} in O(m log m) by the sorting
/// construction: p_j = max(v_j - tau, 0) with tau chosen so the result sums
/// to one.
pub fn simplex_project(v: &[f64]) -> Vec<f64> {
    assert!(!v.is_empty(), "simplex projection needs at least one coordinate");
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    let mut rho = 0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if u - t > 0.0 {
            rho = j + 1;
            tau = t;
        }
    }
    debug_assert!(rho >= 1);
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}
