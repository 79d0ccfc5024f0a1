//! Set partitions of small index sets.

use alloc::vec;
use alloc::vec::Vec;

/// All set partitions of `{0, …, m-1}` as block labels (restricted growth
/// strings): `labels[i]` is the block of element `i`, blocks numbered in
/// order of first appearance.
pub(crate) fn set_partitions(m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if m == 0 {
        out.push(Vec::new());
        return out;
    }
    let mut a = vec![0usize; m];
    loop {
        out.push(a.clone());
        // next restricted growth string
        let mut i = m - 1;
        loop {
            let max_prev = a[..i].iter().copied().max().unwrap_or(0);
            if i > 0 && a[i] <= max_prev {
                a[i] += 1;
                for x in a[i + 1..].iter_mut() {
                    *x = 0;
                }
                break;
            }
            if i == 0 {
                return out;
            }
            i -= 1;
        }
    }
}

/// Number of blocks of a partition in label form.
pub(crate) fn block_count(labels: &[usize]) -> usize {
    labels.iter().copied().max().map_or(0, |b| b + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_numbers() {
        let bell = [1, 1, 2, 5, 15, 52, 203];
        for (m, &b) in bell.iter().enumerate() {
            assert_eq!(set_partitions(m).len(), b, "m={m}");
        }
    }

    #[test]
    fn partitions_are_distinct_and_canonical() {
        let parts = set_partitions(5);
        for p in &parts {
            let mut seen = 0;
            for &x in p {
                assert!(x <= seen);
                if x == seen {
                    seen += 1;
                }
            }
        }
        let mut sorted = parts.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), parts.len());
        assert_eq!(parts.iter().filter(|p| block_count(p) == 2).count(), 15);
    }
}
