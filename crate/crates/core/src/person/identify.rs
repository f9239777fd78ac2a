use crate::model::HexId;

pub fn descriptor_distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (*x as f64 - *y as f64).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Nearest gallery entry by Euclidean distance, if it is closer than
/// `threshold`. Ties go to the smaller person id.
pub fn identify<'a, I>(descriptor: &[f32], gallery: I, threshold: f64) -> Option<(HexId, f64)>
where
    I: IntoIterator<Item = (HexId, &'a [f32])>,
{
    let mut best: Option<(HexId, f64)> = None;
    for (id, d) in gallery {
        if d.len() != descriptor.len() {
            continue;
        }
        let dist = descriptor_distance(descriptor, d);
        let better = match best {
            None => true,
            Some((bid, bd)) => dist < bd || (dist == bd && id < bid),
        };
        if better {
            best = Some((id, dist));
        }
    }
    best.filter(|(_, d)| *d < threshold)
}

/// Running mean of `n` previous samples and one new sample.
pub fn update_descriptor(mean: &mut [f32], sample: &[f32], n: u32) {
    let n = n as f32;
    for (m, s) in mean.iter_mut().zip(sample) {
        *m = (*m * n + *s) / (n + 1.0);
    }
}
