//! Correctly rounded floating-point summation.
//!
//! Cluster volumes are compared against the capacity with no tolerance, and
//! reports recomputed from exported files must match the originals bit for
//! bit. Both need a sum that does not depend on the order of its terms, so
//! totals use Shewchuk's exact partials with a final correctly rounded
//! collapse (the algorithm behind Python's `math.fsum`). Inputs must be finite.

pub fn exact_sum<I>(values: I) -> f64
where
    I: IntoIterator<Item = f64>,
{
    let mut partials: Vec<f64> = Vec::new();
    for mut x in values {
        let mut i = 0;
        for j in 0..partials.len() {
            let mut y = partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        partials.truncate(i);
        partials.push(x);
    }
    collapse(&partials)
}

fn collapse(partials: &[f64]) -> f64 {
    let mut n = partials.len();
    if n == 0 {
        return 0.0;
    }
    n -= 1;
    let mut hi = partials[n];
    let mut lo = 0.0;
    while n > 0 {
        let x = hi;
        n -= 1;
        let y = partials[n];
        hi = x + y;
        let yr = hi - x;
        lo = y - yr;
        if lo != 0.0 {
            break;
        }
    }
    // Round-half-even correction when the remaining partials push the
    // discarded part past the halfway point.
    if n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0)) {
        let y = lo * 2.0;
        let x = hi + y;
        let yr = x - hi;
        if y == yr {
            hi = x;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn simple_sums() {
        assert_eq!(exact_sum([]), 0.0);
        assert_eq!(exact_sum([1.5]), 1.5);
        assert_eq!(exact_sum([0.1; 10]), 1.0);
        assert_eq!(exact_sum([1e100, 1.0, -1e100]), 1.0);
        // Naive left-to-right gives 0.6000000000000001.
        assert_eq!(exact_sum([0.1, 0.2, 0.3]), 0.6);
    }

    proptest! {
        #[test]
        fn order_independent(mut xs in prop::collection::vec(-1e3f64..1e3, 0..40), seed in any::<u64>()) {
            let forward = exact_sum(xs.iter().copied());
            let mut rng = crate::rng::SplitMix64::new(seed);
            for i in (1..xs.len()).rev() {
                let j = rng.next_index(i + 1);
                xs.swap(i, j);
            }
            prop_assert_eq!(forward.to_bits(), exact_sum(xs.iter().copied()).to_bits());
        }
    }
}
