//! Exhaustive reference solver used by tests and the acceptance suite.
//!
//! Enumerates every permutation with the first city pinned, so it shares no
//! code path with any of the heuristic solvers.

use crate::tspio::{TspInstance, Tour};

/// Shortest tour by full enumeration. Practical up to ~10 cities.
pub fn brute_force_optimum(instance: &TspInstance) -> (Tour, f64) {
    let n = instance.dimension;
    assert!(n >= 2, "need at least 2 cities");
    assert!(n <= 10, "brute force capped at 10 cities");
    let mut rest: Vec<usize> = (1..n).collect();
    let mut best_tour: Option<Tour> = None;
    let mut best_len = f64::INFINITY;
    permute(&mut rest, 0, &mut |perm| {
        let mut tour = Vec::with_capacity(n);
        tour.push(0);
        tour.extend_from_slice(perm);
        let len = instance.tour_length(&tour);
        if len < best_len {
            best_len = len;
            best_tour = Some(tour);
        }
    });
    (best_tour.unwrap(), best_len)
}

fn permute(items: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}
