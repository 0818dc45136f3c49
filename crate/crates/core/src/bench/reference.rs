//! Plain-Rust statements of what each benchmark task computes. These never
//! touch the model sources and serve as the data oracle for generated
//! examples.

pub const BLANK: u8 = 2;

/// Inverts every binary symbol up to the first blank.
pub fn invert(tape: &[u8]) -> Vec<u8> {
    let end = tape.iter().position(|&s| s == BLANK).unwrap_or(tape.len());
    tape.iter().enumerate().map(|(i, &s)| if i < end { 1 - s } else { s }).collect()
}

/// Shifts the symbols before the first blank right by one and writes a 0 in
/// front. The tape must contain a blank.
pub fn prepend_zero(tape: &[u8]) -> Vec<u8> {
    let end = tape.iter().position(|&s| s == BLANK).expect("tape without blank");
    let mut out = tape.to_vec();
    out[0] = 0;
    out[1..=end].copy_from_slice(&tape[..end]);
    out
}

/// Decrements the most-significant-first binary number before the first
/// blank, keeping its width.
pub fn binary_decrement(tape: &[u8]) -> Vec<u8> {
    let end = tape.iter().position(|&s| s == BLANK).unwrap_or(tape.len());
    let value = tape[..end].iter().fold(0u64, |acc, &b| acc * 2 + b as u64);
    assert!(value > 0, "decrement of zero");
    let mut v = value - 1;
    let mut out = tape.to_vec();
    for i in (0..end).rev() {
        out[i] = (v % 2) as u8;
        v /= 2;
    }
    out
}

/// `(r1, r2, r3)` unchanged if `r1 == 0`, otherwise `(r1, r3, r2)`.
pub fn controlled_shift(r: [u8; 3]) -> [u8; 3] {
    if r[0] == 0 {
        r
    } else {
        [r[0], r[2], r[1]]
    }
}

/// `(s, c_out)` with `s + 2 c_out = c_in + a + b`.
pub fn full_adder(c_in: u8, a: u8, b: u8) -> (u8, u8) {
    let t = c_in + a + b;
    (t % 2, t / 2)
}

/// `(s1, s2, c_out)` with `s1 + 2 s2 + 4 c_out = a1 + b1 + 2 (a2 + b2)`.
pub fn two_bit_adder(a1: u8, a2: u8, b1: u8, b2: u8) -> (u8, u8, u8) {
    let t = a1 + b1 + 2 * (a2 + b2);
    (t % 2, (t / 2) % 2, t / 4)
}

pub fn nand(a: u8, b: u8) -> u8 {
    1 - (a & b)
}

/// Final heap for the array access task: `heap[0]` becomes `A[heap[0]]`
/// where `A` starts at cell 1.
pub fn access(heap: &[u8]) -> u8 {
    heap[1 + heap[0] as usize]
}

/// Decrements every cell before the first zero.
pub fn decrement(heap: &[u8]) -> Vec<u8> {
    let end = heap.iter().position(|&x| x == 0).unwrap_or(heap.len());
    heap.iter().enumerate().map(|(i, &x)| if i < end { x - 1 } else { x }).collect()
}

/// Value of the `heap[0]`-th element of the linked list whose head pair is at
/// `heap[1]`; pairs are `[next, value]` and the last `next` is 0.
pub fn list_k(heap: &[u8]) -> u8 {
    let mut p = heap[1] as usize;
    for _ in 0..heap[0] {
        p = heap[p] as usize;
    }
    heap[p + 1]
}

/// Merges the zero-terminated sorted lists at `heap[0]` and `heap[1]` into
/// the region starting at `heap[2]`.
pub fn merge(heap: &[u8]) -> Vec<u8> {
    let list = |mut p: usize| {
        let mut v = Vec::new();
        while heap[p] != 0 {
            v.push(heap[p]);
            p += 1;
        }
        v
    };
    let mut all = list(heap[0] as usize);
    all.extend(list(heap[1] as usize));
    all.sort_unstable();
    let mut out = heap.to_vec();
    let base = heap[2] as usize;
    out[base..base + all.len()].copy_from_slice(&all);
    out
}
