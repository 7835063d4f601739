//! Order-preserving parallel map over sample sets.
//!
//! Per-sample work in this crate is pure, so results are identical for any
//! thread count; chunks are reassembled in input order, which keeps reports
//! byte-reproducible.

/// Map `f` over `items` using up to `threads` scoped worker threads.
pub fn par_map<T, U, F>(items: &[T], threads: usize, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync,
{
    let threads = threads.max(1).min(items.len().max(1));
    if threads == 1 || items.len() < 2 {
        return items.iter().map(&f).collect();
    }
    let chunk_size = items.len().div_ceil(threads);
    let mut pieces: Vec<(usize, Vec<U>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk_size)
            .enumerate()
            .map(|(idx, chunk)| {
                let f = &f;
                scope.spawn(move || (idx, chunk.iter().map(f).collect::<Vec<U>>()))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    pieces.sort_by_key(|(idx, _)| *idx);
    pieces.into_iter().flat_map(|(_, v)| v).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order() {
        let items: Vec<u64> = (0..1000).collect();
        for threads in [1, 2, 3, 8, 64] {
            let out = par_map(&items, threads, |&x| x * x);
            assert_eq!(out, items.iter().map(|&x| x * x).collect::<Vec<_>>());
        }
    }

    #[test]
    fn empty_input() {
        let items: Vec<u64> = Vec::new();
        assert!(par_map(&items, 4, |&x| x).is_empty());
    }
}
