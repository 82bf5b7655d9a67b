//! Block languages and their downward closures under domination.

use std::collections::HashSet;

use crate::bitseq::{BitWindow, MAX_BLOCK_LEN};
use crate::error::{Error, Result};

/// Cap on the number of (submask, predecessor) checks one closure may take.
const MAX_CLOSURE_WORK: u128 = 1 << 34;

/// Cap on the size of a materialized closure.
const MAX_CLOSURE_MEMBERS: u128 = 1 << 26;

fn check_len(n: usize) -> Result<()> {
    if n == 0 || n > MAX_BLOCK_LEN {
        return Err(Error::BlockLength(n));
    }
    Ok(())
}

/// Distinct codes of the length-`n` factors of `w`, ascending.
pub fn factors(w: &BitWindow, n: usize) -> Result<Vec<u64>> {
    check_len(n)?;
    if w.len() < n {
        return Err(Error::WindowTooShort { len: w.len(), k: n });
    }
    let mut seen = HashSet::new();
    for i in 0..=w.len() - n {
        seen.insert(w.code_at(i, n));
    }
    let mut out: Vec<u64> = seen.into_iter().collect();
    out.sort_unstable();
    Ok(out)
}

/// Elements not strictly dominated by another element, ascending.
pub fn maximal(codes: &[u64]) -> Vec<u64> {
    let mut sorted: Vec<u64> = codes.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    // a strict superset has strictly more ones, so check heavier elements first
    sorted.sort_by_key(|c| std::cmp::Reverse(c.count_ones()));
    let mut kept: Vec<u64> = Vec::new();
    for c in sorted {
        if !kept.iter().any(|&k| c & !k == 0) {
            kept.push(c);
        }
    }
    kept.sort_unstable();
    kept
}

fn closure_work(tops: &[u64]) -> u128 {
    tops.iter()
        .enumerate()
        .map(|(i, t)| (1u128 << t.count_ones()) * (i as u128 + 1))
        .sum()
}

/// Calls `f` on every submask of `top`, including `top` and 0.
fn for_each_submask(top: u64, mut f: impl FnMut(u64)) {
    let mut s = top;
    loop {
        f(s);
        if s == 0 {
            break;
        }
        s = (s - 1) & top;
    }
}

/// `|{v : v <= u for some u in codes}|`, counted without materializing.
pub fn closure_size(codes: &[u64], n: usize) -> Result<u128> {
    check_len(n)?;
    let tops = maximal(codes);
    if closure_work(&tops) > MAX_CLOSURE_WORK {
        return Err(Error::TooLarge(format!(
            "downward closure of {} maximal blocks of length {n}",
            tops.len()
        )));
    }
    let mut total = 0u128;
    for (i, &top) in tops.iter().enumerate() {
        let earlier = &tops[..i];
        for_each_submask(top, |s| {
            if !earlier.iter().any(|&e| s & !e == 0) {
                total += 1;
            }
        });
    }
    Ok(total)
}

/// The downward closure itself, ascending.
pub fn closure(codes: &[u64], n: usize) -> Result<Vec<u64>> {
    let size = closure_size(codes, n)?;
    if size > MAX_CLOSURE_MEMBERS {
        return Err(Error::TooLarge(format!(
            "downward closure with {size} members"
        )));
    }
    let tops = maximal(codes);
    let mut out = Vec::with_capacity(size as usize);
    for (i, &top) in tops.iter().enumerate() {
        let earlier = &tops[..i];
        for_each_submask(top, |s| {
            if !earlier.iter().any(|&e| s & !e == 0) {
                out.push(s);
            }
        });
    }
    out.sort_unstable();
    Ok(out)
}
