//! The shared drop-the-tail loop of both selection stages.

/// Outcome of pruning one importance-sorted list of units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Selection {
    /// Units `0..kept` survive.
    pub kept: usize,
    pub removed_tokens: usize,
}

/// Walks units in importance order and stops at the first position whose
/// suffix fits entirely in `budget`; that suffix is removed. A zero budget
/// keeps everything.
pub fn select_prefix(sizes: &[usize], budget: usize) -> Selection {
    let total: usize = sizes.iter().sum();
    if budget == 0 {
        return Selection {
            kept: sizes.len(),
            removed_tokens: 0,
        };
    }
    let mut suffix = total;
    for (i, &size) in sizes.iter().enumerate() {
        if budget >= suffix {
            return Selection {
                kept: i,
                removed_tokens: suffix,
            };
        }
        suffix -= size;
    }
    Selection {
        kept: sizes.len(),
        removed_tokens: 0,
    }
}

/// Chunk stage: `sorted_sizes` are token counts in descending importance.
pub fn select_chunks(sorted_sizes: &[usize], e_chunk: usize) -> Selection {
    select_prefix(sorted_sizes, e_chunk)
}

/// Sentence stage for one chunk; a chunk may lose every sentence.
pub fn select_sentences(sorted_sizes: &[usize], e_sent_i: usize) -> Selection {
    select_prefix(sorted_sizes, e_sent_i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunk_trace() {
        let s = select_chunks(&[50, 40, 30, 20], 45);
        assert_eq!(s, Selection { kept: 3, removed_tokens: 20 });
        assert!(45 - s.removed_tokens < 30);
    }

    #[test]
    fn zero_and_exhaustive_budgets() {
        assert_eq!(select_chunks(&[50, 40], 0), Selection { kept: 2, removed_tokens: 0 });
        assert_eq!(select_chunks(&[50, 40], 90), Selection { kept: 0, removed_tokens: 90 });
        assert_eq!(select_chunks(&[50, 40], 1000).kept, 0);
    }

    #[test]
    fn budget_below_smallest_tail_keeps_all() {
        assert_eq!(select_chunks(&[50, 40, 30], 29), Selection { kept: 3, removed_tokens: 0 });
    }

    #[test]
    fn sentence_trace() {
        let s = select_sentences(&[10, 8, 5], 12);
        assert_eq!(s, Selection { kept: 2, removed_tokens: 5 });
        assert!(12 - s.removed_tokens < 8);
        assert_eq!(select_sentences(&[10, 8, 5], 0).kept, 3);
        assert_eq!(select_sentences(&[10, 8, 5], 23).kept, 0);
    }
}
