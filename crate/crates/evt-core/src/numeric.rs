//! Compensated floating-point accumulation shared by the other modules.

/// Neumaier variant of Kahan summation. The compensation also covers the
/// case where the incoming term is larger than the running sum.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_terms() {
        // Naive summation loses the 1.0 entirely.
        let sum = compensated_sum([1e16, 1.0, -1e16]);
        assert_eq!(sum, 1.0);
    }

    #[test]
    fn empty_sum_is_zero() {
        assert_eq!(compensated_sum([]), 0.0);
    }
}
