//! Manufactured-solution convergence of the transformed solve.

mod common;

use common::mms_error;

#[test]
fn second_order_in_max_norm() {
    for eps in [0.3, 1.0] {
        let e: Vec<f64> = [33, 65, 129].iter().map(|&n| mms_error(n, eps)).collect();
        for w in e.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 1.8, "eps {eps}: errors {e:?}, order {order}");
        }
    }
}
