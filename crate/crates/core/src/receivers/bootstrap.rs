use super::stats::DetectedStore;

/// Cold start of a store-based receiver from its first counts.
///
/// The counts are ranked (ties by arrival); the `cap0` smallest fill the
/// 0-store and the `cap1` largest fill the 1-store, each inserted in arrival
/// order. Provisional bits come from a median split: the upper half of the
/// ranks is called 1.
pub fn bootstrap_warmup(counts: &[u32], cap0: usize, cap1: usize) -> (DetectedStore, Vec<u8>) {
    let n = counts.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (counts[i], i));
    let mut rank = vec![0usize; n];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r;
    }
    let low = cap0.min(n);
    let high_from = n - cap1.min(n);
    let ones_from = n - n / 2;
    let mut store = DetectedStore::new(cap0, cap1);
    let mut bits = Vec::with_capacity(n);
    for (i, &c) in counts.iter().enumerate() {
        let r = rank[i];
        if r >= high_from {
            store.buf1.push(c);
        } else if r < low {
            store.buf0.push(c);
        }
        bits.push(u8::from(r >= ones_from));
    }
    (store, bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::receivers::metrics::glrt_nr_nb_estimates;

    #[test]
    fn equal_counts_give_identical_buffers() {
        let (store, bits) = bootstrap_warmup(&[6; 8], 2, 2);
        assert_eq!(store.buf0.iter().collect::<Vec<_>>(), vec![6, 6]);
        assert_eq!(store.buf1.iter().collect::<Vec<_>>(), vec![6, 6]);
        let (nr, nb) = glrt_nr_nb_estimates(&store.stats()).unwrap();
        assert_eq!((nr, nb), (0.0, 6.0));
        assert_eq!(bits.iter().filter(|&&b| b == 1).count(), 4);
    }

    #[test]
    fn buffers_are_full_and_time_ordered() {
        let counts = [30, 2, 41, 5, 7, 33, 1, 50];
        let (store, bits) = bootstrap_warmup(&counts, 2, 2);
        assert!(store.buf0.is_full() && store.buf1.is_full());
        assert_eq!(store.buf0.iter().collect::<Vec<_>>(), vec![2, 1]);
        assert_eq!(store.buf1.iter().collect::<Vec<_>>(), vec![41, 50]);
        assert_eq!(bits, vec![1, 0, 1, 0, 0, 1, 0, 1]);
        assert!(store.is_consistent());
    }

    #[test]
    fn one_sided_store() {
        let (store, _) = bootstrap_warmup(&[3, 9, 4, 8], 0, 2);
        assert!(store.buf0.is_empty());
        assert_eq!(store.buf1.iter().collect::<Vec<_>>(), vec![9, 8]);
    }
}
