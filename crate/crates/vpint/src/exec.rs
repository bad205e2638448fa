//! Deterministic parallel execution helpers.
//!
//! All reductions in this crate run over fixed-size chunks whose boundaries
//! depend only on the input length, and partial results are merged in chunk
//! order. Output is therefore bitwise identical regardless of thread count,
//! and identical between the `parallel` feature and the serial fallback.

/// Chunk boundaries depend only on `len`, never on the machine.
pub fn chunk_size(len: usize) -> usize {
    const TARGET_CHUNKS: usize = 64;
    len.div_ceil(TARGET_CHUNKS).max(1024)
}

/// Map fixed chunks of `items` to partial results, then fold the partials in
/// chunk order.
pub fn chunked_reduce<T, P, FMap, FFold>(
    items: &[T],
    map: FMap,
    init: P,
    fold: FFold,
) -> P
where
    T: Sync,
    P: Send,
    FMap: Fn(usize, &[T]) -> P + Sync,
    FFold: Fn(P, P) -> P,
{
    chunked_reduce_sized(items, chunk_size(items.len().max(1)), map, init, fold)
}

/// [`chunked_reduce`] with an explicit chunk size, for callers whose partial
/// results are memory-heavy. The size must be a pure function of the problem
/// shape to keep results machine-independent.
pub fn chunked_reduce_sized<T, P, FMap, FFold>(
    items: &[T],
    size: usize,
    map: FMap,
    init: P,
    fold: FFold,
) -> P
where
    T: Sync,
    P: Send,
    FMap: Fn(usize, &[T]) -> P + Sync,
    FFold: Fn(P, P) -> P,
{
    let partials = map_chunks(items, size.max(1), &map);
    partials.into_iter().fold(init, fold)
}

#[cfg(feature = "parallel")]
fn map_chunks<T, P, FMap>(items: &[T], size: usize, map: &FMap) -> Vec<P>
where
    T: Sync,
    P: Send,
    FMap: Fn(usize, &[T]) -> P + Sync,
{
    use rayon::prelude::*;
    items
        .par_chunks(size)
        .enumerate()
        .map(|(i, chunk)| map(i * size, chunk))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn map_chunks<T, P, FMap>(items: &[T], size: usize, map: &FMap) -> Vec<P>
where
    T: Sync,
    P: Send,
    FMap: Fn(usize, &[T]) -> P + Sync,
{
    items
        .chunks(size)
        .enumerate()
        .map(|(i, chunk)| map(i * size, chunk))
        .collect()
}

/// Apply `op` to aligned chunks of an input slice and a mutable output slice.
/// Embarrassingly parallel; no reduction involved.
pub fn chunked_zip_mut<T, U, F>(input: &[T], output: &mut [U], op: F)
where
    T: Sync,
    U: Send,
    F: Fn(usize, &[T], &mut [U]) + Sync,
{
    assert_eq!(input.len(), output.len());
    let size = chunk_size(input.len().max(1));

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        input
            .par_chunks(size)
            .zip(output.par_chunks_mut(size))
            .enumerate()
            .for_each(|(i, (inp, out))| op(i * size, inp, out));
    }
    #[cfg(not(feature = "parallel"))]
    {
        input
            .chunks(size)
            .zip(output.chunks_mut(size))
            .enumerate()
            .for_each(|(i, (inp, out))| op(i * size, inp, out));
    }
}

/// Monotonic wall-clock seconds; zero on targets without a clock.
#[cfg(not(target_arch = "wasm32"))]
pub fn now_secs() -> f64 {
    use std::sync::OnceLock;
    use std::time::Instant;
    static START: OnceLock<Instant> = OnceLock::new();
    START.get_or_init(Instant::now).elapsed().as_secs_f64()
}

#[cfg(target_arch = "wasm32")]
pub fn now_secs() -> f64 {
    0.0
}
