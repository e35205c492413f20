//! Base-2 information measures on finite laws.
//!
//! Zero-probability terms contribute exactly zero (`0 log 0 = 0`).

/// `-p log2 p`, zero at `p = 0`.
#[inline]
pub fn neg_plogp(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// Shannon entropy in bits of a (not necessarily normalized) mass vector.
pub fn entropy<I: IntoIterator<Item = f64>>(masses: I) -> f64 {
    masses.into_iter().map(neg_plogp).sum()
}

/// Binary entropy function h(p) in bits.
pub fn binary_entropy(p: f64) -> f64 {
    neg_plogp(p) + neg_plogp(1.0 - p)
}

/// Mutual information in bits of a joint law given as rows (first variable) by
/// columns (second variable).
pub fn mutual_information(joint: &[Vec<f64>]) -> f64 {
    let rows: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
    let ncols = joint.first().map_or(0, Vec::len);
    let cols: Vec<f64> = (0..ncols)
        .map(|j| joint.iter().map(|r| r[j]).sum())
        .collect();
    let h_joint = entropy(joint.iter().flatten().copied());
    (entropy(rows) + entropy(cols) - h_joint).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_entropy_values() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert!((binary_entropy(0.5) - 1.0).abs() < 1e-15);
        // h(0.1) = 0.468995593589281...
        assert!((binary_entropy(0.1) - 0.468_995_593_589_281_2).abs() < 1e-14);
    }

    #[test]
    fn independent_joint_has_zero_information() {
        let joint = vec![vec![0.06, 0.14], vec![0.24, 0.56]];
        assert!(mutual_information(&joint) < 1e-12);
    }

    #[test]
    fn copy_channel_information_is_entropy() {
        let joint = vec![vec![0.3, 0.0], vec![0.0, 0.7]];
        assert!((mutual_information(&joint) - binary_entropy(0.3)).abs() < 1e-14);
    }
}
