mod common;

use common::{gradient_check, random_case};

#[test]
fn backprop_matches_central_differences() {
    let mut worst = (0.0, 0);
    for seed in 0..100 {
        let err = gradient_check(&random_case(seed));
        if err > worst.0 {
            worst = (err, seed);
        }
    }
    eprintln!("worst {:e}", worst.0);
    assert!(
        worst.0 < 1e-5,
        "max relative error {:e} (seed {})",
        worst.0,
        worst.1
    );
}
