//! Batch-parallel helpers with a fixed reduction order.
//!
//! Parameter gradients are reduced over chunks of `GRAD_CHUNK` samples. The
//! chunk boundaries do not depend on the thread count and partial sums are
//! added in chunk order, so results are bit-identical for any pool size.

use std::ops::Range;

use rayon::prelude::*;

pub(crate) const GRAD_CHUNK: usize = 16;

/// Fills `out` (`per_sample` values per sample) in parallel over samples.
pub(crate) fn per_sample<F>(out: &mut [f64], per_sample: usize, work: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    if per_sample == 0 {
        return;
    }
    out.par_chunks_mut(per_sample)
        .enumerate()
        .for_each(|(b, o)| work(b, o));
}

/// Runs `work(samples, partial_grad, input_grad_slice)` on fixed chunks and
/// returns the chunk-ordered sum of the partial gradients.
pub(crate) fn chunked_backward<F>(
    batch: usize,
    grad_len: usize,
    input_grad: Option<(&mut [f64], usize)>,
    work: F,
) -> Vec<f64>
where
    F: Fn(Range<usize>, &mut [f64], &mut [f64]) + Sync + Send,
{
    let chunk_range = |c: usize| c * GRAD_CHUNK..((c + 1) * GRAD_CHUNK).min(batch);
    let partials: Vec<Vec<f64>> = match input_grad {
        Some((dx, per)) if per > 0 => dx
            .par_chunks_mut(GRAD_CHUNK * per)
            .enumerate()
            .map(|(c, slice)| {
                let mut partial = vec![0.0; grad_len];
                work(chunk_range(c), &mut partial, slice);
                partial
            })
            .collect(),
        _ => (0..batch.div_ceil(GRAD_CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut partial = vec![0.0; grad_len];
                work(chunk_range(c), &mut partial, &mut []);
                partial
            })
            .collect(),
    };
    let mut total = vec![0.0; grad_len];
    for partial in partials {
        for (t, p) in total.iter_mut().zip(partial) {
            *t += p;
        }
    }
    total
}

pub(crate) fn add_into(target: &mut [f64], values: &[f64]) {
    for (t, v) in target.iter_mut().zip(values) {
        *t += v;
    }
}
