/// Stationary marginal patterns of the parity chain of length `k` with
/// `x_0` pinned to 0, excluding the all-zero optimum.
///
/// Entries are 0, 0.5 or 1. A 0.5 entry sits between a 0 and a 1; a
/// saturated entry never touches a saturated entry of the other value, so
/// islands of 1s are separated from 0s by 0.5 boundaries.
pub fn island_configs(k: usize) -> Vec<Vec<f64>> {
    assert!(k >= 3, "the chain needs at least three variables");
    // 0 -> 0, 1 -> 0.5, 2 -> 1
    let mut out = Vec::new();
    let mut code = vec![0u8; k];
    let total = 3usize.pow(k as u32 - 1);
    for idx in 0..total {
        let mut rest = idx;
        for c in code.iter_mut().skip(1).rev() {
            *c = (rest % 3) as u8;
            rest /= 3;
        }
        if code.iter().all(|&c| c == 0) {
            continue;
        }
        let ok = (0..k).all(|i| {
            let prev = code[(i + k - 1) % k];
            let next = code[(i + 1) % k];
            match code[i] {
                1 => (prev == 0 && next == 2) || (prev == 2 && next == 0),
                c => prev != 2 - c && next != 2 - c,
            }
        });
        if ok {
            out.push(code.iter().map(|&c| c as f64 / 2.0).collect());
        }
    }
    out
}
