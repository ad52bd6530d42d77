//! In-place fast Walsh–Hadamard transform (Sylvester ordering, unnormalized).

/// Transform `data` in place: `data <- H data` with `H[i][j] = (-1)^popcount(i & j)`.
///
/// `data.len()` must be a power of two.
pub fn fwht(data: &mut [f64]) {
    let n = data.len();
    assert!(n.is_power_of_two(), "FWHT length must be a power of two");
    let mut half = 1;
    while half < n {
        for chunk in data.chunks_exact_mut(2 * half) {
            let (lo, hi) = chunk.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let s = *a + *b;
                let d = *a - *b;
                *a = s;
                *b = d;
            }
        }
        half *= 2;
    }
}
