//! Information entropy and the image-security metrics the cipher's security
//! story leans on: histogram and its variance, adjacent-pixel correlation,
//! NPCR/UACI, float bit distance, flat-histogram constructions and the
//! integer-conversion utilization ratio.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::image::Image;

/// 256-bin pixel histogram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    pub counts: [u64; 256],
    pub total: u64,
}

pub fn histogram(img: &Image) -> Histogram {
    let mut counts = [0u64; 256];
    for &p in img.pixels() {
        counts[p as usize] += 1;
    }
    Histogram { counts, total: img.len() as u64 }
}

/// Shannon entropy of a count vector with an explicit denominator:
/// `H = -sum p_i log2 p_i` with `p_i = count_i / denominator`, zero counts
/// skipped. An empty block has entropy 0.
///
/// The denominator is a parameter because the cipher evaluates sub-blocks
/// with the full-image pixel count in the divisor.
///
/// Terms are summed over the sorted nonzero counts, not in bin order, so the
/// result is a function of the count multiset alone. Relabeling pixel values
/// then yields a bit-identical entropy instead of one differing in the last
/// ulp from the reordered float additions.
pub fn entropy_with_denominator(counts: &[u64; 256], denominator: u64) -> f64 {
    if denominator == 0 {
        return 0.0;
    }
    let mut nonzero: Vec<u64> = counts.iter().copied().filter(|&k| k > 0).collect();
    nonzero.sort_unstable();
    let mut h = 0.0f64;
    for k in nonzero {
        let p = k as f64 / denominator as f64;
        h -= p * p.log2();
    }
    h
}

/// Entropy of a whole image, denominator = pixel count.
pub fn image_entropy(img: &Image) -> f64 {
    let hist = histogram(img);
    entropy_with_denominator(&hist.counts, hist.total)
}

/// Population variance of the 256 histogram counts.
pub fn histogram_variance(hist: &Histogram) -> f64 {
    let mean = hist.counts.iter().sum::<u64>() as f64 / 256.0;
    hist.counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / 256.0
}

/// Build an image in which every byte value occurs exactly `M*N/256` times,
/// shuffled by `seed`. Distinct seeds give visually distinct images with one
/// shared flat histogram and entropy exactly 8.
pub fn flat_histogram_image(m: usize, n: usize, seed: u64) -> Result<Image> {
    if (m * n) % 256 != 0 {
        return Err(Error::BadDimensions { m, n, reason: "pixel count must be divisible by 256" });
    }
    let per_value = m * n / 256;
    let mut pixels: Vec<u8> = (0..=255u8).flat_map(|v| std::iter::repeat_n(v, per_value)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pixels.shuffle(&mut rng);
    Image::new(m, n, pixels)
}

/// An entropy-preserving rewrite of an image.
pub enum Transform<'a> {
    /// `perm[k]` is the destination raster index of source raster index `k`.
    PositionPermutation(&'a [usize]),
    /// `map[v]` is the replacement for value `v`. Must be injective on the
    /// values present in the image.
    ValueBijection(&'a [u8; 256]),
}

/// Apply a position permutation or a value bijection. Both leave the
/// histogram count multiset, and therefore the entropy, bit-identical.
pub fn entropy_preserving_transform(img: &Image, t: &Transform) -> Result<Image> {
    match t {
        Transform::PositionPermutation(perm) => {
            assert_eq!(perm.len(), img.len(), "permutation length mismatch");
            let mut seen = vec![false; img.len()];
            for &d in perm.iter() {
                if d >= img.len() || seen[d] {
                    return Err(Error::NotAPermutation { len: perm.len(), range: img.len() });
                }
                seen[d] = true;
            }
            let mut pixels = vec![0u8; img.len()];
            for (k, &d) in perm.iter().enumerate() {
                pixels[d] = img.pixels()[k];
            }
            Image::new(img.rows(), img.cols(), pixels)
        }
        Transform::ValueBijection(map) => {
            let hist = histogram(img);
            let mut hit = [false; 256];
            for v in 0..256 {
                if hist.counts[v] > 0 {
                    let dst = map[v] as usize;
                    if hit[dst] {
                        return Err(Error::NonInjectiveValueMap(map[v]));
                    }
                    hit[dst] = true;
                }
            }
            let pixels = img.pixels().iter().map(|&p| map[p as usize]).collect();
            Image::new(img.rows(), img.cols(), pixels)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Horizontal,
    Vertical,
    Diagonal,
}

/// Pearson correlation of adjacent pixel pairs.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Correlation {
    pub r: f64,
    /// Set when a sample had zero variance (constant image); `r` is then 0.
    pub degenerate: bool,
}

/// Correlation of neighboring pixels along `direction`. `sample_count = 0`
/// means the full population of adjacent pairs; otherwise that many pairs are
/// sampled with a seeded RNG so results reproduce.
pub fn adjacent_correlation(
    img: &Image,
    direction: Direction,
    sample_count: usize,
    seed: u64,
) -> Correlation {
    let (di, dj) = match direction {
        Direction::Horizontal => (0usize, 1usize),
        Direction::Vertical => (1, 0),
        Direction::Diagonal => (1, 1),
    };
    let max_i = img.rows() - di;
    let max_j = img.cols() - dj;
    let pair_at = |i: usize, j: usize| (img.get(i, j) as f64, img.get(i + di, j + dj) as f64);

    let pairs: Vec<(f64, f64)> = if sample_count == 0 {
        (0..max_i).flat_map(|i| (0..max_j).map(move |j| (i, j))).map(|(i, j)| pair_at(i, j)).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..sample_count)
            .map(|_| pair_at(rng.gen_range(0..max_i), rng.gen_range(0..max_j)))
            .collect()
    };
    let n = pairs.len() as f64;
    let mean_x = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (x, y) in &pairs {
        cov += (x - mean_x) * (y - mean_y);
        var_x += (x - mean_x).powi(2);
        var_y += (y - mean_y).powi(2);
    }
    if var_x == 0.0 || var_y == 0.0 {
        return Correlation { r: 0.0, degenerate: true };
    }
    Correlation { r: cov / (var_x.sqrt() * var_y.sqrt()), degenerate: false }
}

/// Number of pixels changing rate, in percent. Standard definition; the
/// analyzed scheme's write-up names the metric without a formula.
pub fn npcr(c1: &Image, c2: &Image) -> Result<f64> {
    c1.same_dims(c2)?;
    let diff = c1.pixels().iter().zip(c2.pixels()).filter(|(a, b)| a != b).count();
    Ok(100.0 * diff as f64 / c1.len() as f64)
}

/// Unified averaged changed intensity, in percent.
pub fn uaci(c1: &Image, c2: &Image) -> Result<f64> {
    c1.same_dims(c2)?;
    let sum: u64 = c1
        .pixels()
        .iter()
        .zip(c2.pixels())
        .map(|(&a, &b)| (a as i32 - b as i32).unsigned_abs() as u64)
        .sum();
    Ok(100.0 * sum as f64 / (255.0 * c1.len() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FloatFormat {
    Binary32,
    Binary64,
}

/// Bitwise distance between two encoded floats, split by field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BitDistance {
    pub fraction_bits: u32,
    pub exponent_bits: u32,
    pub sign_differs: bool,
}

/// Count differing mantissa-fraction bits between the encodings of `a` and
/// `b`; exponent and sign differences are reported separately.
pub fn float_bit_distance(a: f64, b: f64, format: FloatFormat) -> Result<BitDistance> {
    if !a.is_finite() {
        return Err(Error::NonFinite(a));
    }
    if !b.is_finite() {
        return Err(Error::NonFinite(b));
    }
    let (xor, frac_bits, exp_bits) = match format {
        FloatFormat::Binary32 => {
            let x = (a as f32).to_bits() ^ (b as f32).to_bits();
            (x as u64, 23u32, 8u32)
        }
        FloatFormat::Binary64 => (a.to_bits() ^ b.to_bits(), 52, 11),
    };
    Ok(BitDistance {
        fraction_bits: (xor & ((1u64 << frac_bits) - 1)).count_ones(),
        exponent_bits: ((xor >> frac_bits) & ((1u64 << exp_bits) - 1)).count_ones(),
        sign_differs: (xor >> (frac_bits + exp_bits)) & 1 == 1,
    })
}

/// Useful-bit fraction of the scaled-ceiling conversion
/// `f(10^m * x) mod D`: only `ceil(log2 D)` of the `m * ceil(log2 10)`
/// computed bits survive the modulus. Returned as an exact reduced rational.
pub fn utilization_ratio(m: u64, d: u64) -> (u64, u64) {
    assert!(m >= 1 && d >= 2);
    let ceil_log2 = |v: u64| 64 - (v - 1).leading_zeros() as u64;
    let num = ceil_log2(d);
    let den = m * 4; // ceil(log2 10) = 4
    let g = gcd(num, den);
    (num / g, den / g)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// The metrics the `metrics` CLI subcommand reports for a single image.
#[derive(Debug, Serialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub entropy: f64,
    pub hist_variance: f64,
    pub correlations: CorrelationSet,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub npcr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uaci: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct CorrelationSet {
    pub horizontal: Correlation,
    pub vertical: Correlation,
    pub diagonal: Correlation,
}

pub fn metrics_report(img: &Image, pair: Option<&Image>, sample_count: usize, seed: u64) -> Result<MetricsReport> {
    let hist = histogram(img);
    Ok(MetricsReport {
        schema_version: 1,
        entropy: entropy_with_denominator(&hist.counts, hist.total),
        hist_variance: histogram_variance(&hist),
        correlations: CorrelationSet {
            horizontal: adjacent_correlation(img, Direction::Horizontal, sample_count, seed),
            vertical: adjacent_correlation(img, Direction::Vertical, sample_count, seed),
            diagonal: adjacent_correlation(img, Direction::Diagonal, sample_count, seed),
        },
        npcr: pair.map(|p| npcr(img, p)).transpose()?,
        uaci: pair.map(|p| uaci(img, p)).transpose()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_basics() {
        let constant = Image::filled(4, 4, 7).unwrap();
        assert_eq!(image_entropy(&constant), 0.0);

        let flat = Image::new(16, 16, (0..=255u8).collect()).unwrap();
        assert_eq!(image_entropy(&flat), 8.0);
    }

    #[test]
    fn entropy_depends_only_on_histogram_shape() {
        // one pixel a, n-1 pixels c: identical entropy for any a != c
        let n = 64;
        let mk = |a: u8, c: u8| {
            let mut px = vec![c; n];
            px[5] = a;
            Image::new(8, 8, px).unwrap()
        };
        let h_ref = image_entropy(&mk(1, 0));
        for (a, c) in [(2u8, 0u8), (200, 13), (0, 255)] {
            assert_eq!(image_entropy(&mk(a, c)).to_bits(), h_ref.to_bits());
        }
        let expect = -((1.0 / 64.0f64) * (1.0 / 64.0f64).log2() + (63.0 / 64.0f64) * (63.0 / 64.0f64).log2());
        assert_eq!(h_ref, expect);
    }

    #[test]
    fn histogram_variance_flat_is_zero() {
        let flat = flat_histogram_image(16, 16, 0).unwrap();
        let h = histogram(&flat);
        assert_eq!(histogram_variance(&h), 0.0);
        assert!(h.counts.iter().all(|&c| c == 1));
    }

    #[test]
    fn histogram_variance_distinguishes_shapes() {
        // paper-shaped counterexample: same multiset size, different variances
        let var = |counts: &[f64]| {
            let mean = counts.iter().sum::<f64>() / counts.len() as f64;
            counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / counts.len() as f64
        };
        let v1 = var(&[2.0, 2.0, 3.0, 4.0, 7.0]);
        let v2 = var(&[2.0, 2.0, 3.0, 5.0, 6.0]);
        assert_ne!(v1, v2);
    }

    #[test]
    fn flat_image_construction() {
        let img = flat_histogram_image(512, 512, 42).unwrap();
        let h = histogram(&img);
        assert!(h.counts.iter().all(|&c| c == 1024));
        assert_eq!(image_entropy(&img), 8.0);

        let a = flat_histogram_image(16, 16, 1).unwrap();
        let b = flat_histogram_image(16, 16, 2).unwrap();
        assert_ne!(a, b);
        assert_eq!(histogram(&a), histogram(&b));

        assert!(flat_histogram_image(10, 10, 0).is_err());
    }

    #[test]
    fn transforms_preserve_entropy() {
        let img = Image::new(8, 8, (0..64).map(|i| (i * 3 % 17) as u8).collect()).unwrap();
        let h0 = image_entropy(&img);

        // position shuffle
        let mut perm: Vec<usize> = (0..64).collect();
        perm.rotate_left(13);
        let shuffled = entropy_preserving_transform(&img, &Transform::PositionPermutation(&perm)).unwrap();
        assert_eq!(image_entropy(&shuffled).to_bits(), h0.to_bits());

        // relabel 7 -> 250 (250 absent)
        let mut map = [0u8; 256];
        for v in 0..256 {
            map[v] = v as u8;
        }
        map[7] = 250;
        let relabeled = entropy_preserving_transform(&img, &Transform::ValueBijection(&map)).unwrap();
        assert_eq!(image_entropy(&relabeled).to_bits(), h0.to_bits());

        // merging two present values must be rejected by the transform...
        let mut merge = map;
        merge[3] = 4;
        assert!(entropy_preserving_transform(&img, &Transform::ValueBijection(&merge)).is_err());
        // ...and applying it manually strictly lowers entropy
        let merged: Vec<u8> = img.pixels().iter().map(|&p| merge[p as usize]).collect();
        let merged = Image::new(8, 8, merged).unwrap();
        assert!(image_entropy(&merged) < h0);
    }

    #[test]
    fn correlation_ramp_and_checkerboard() {
        // monotone ramp restricted to one period: perfect positive correlation
        let ramp = Image::new(
            16,
            16,
            (0..16).flat_map(|i| (0..16).map(move |j| (i + j) as u8)).collect(),
        )
        .unwrap();
        let c = adjacent_correlation(&ramp, Direction::Horizontal, 0, 0);
        assert!(!c.degenerate);
        assert!((c.r - 1.0).abs() < 1e-9, "r = {}", c.r);

        let checker = Image::new(
            8,
            8,
            (0..8).flat_map(|i| (0..8).map(move |j| if (i + j) % 2 == 0 { 0u8 } else { 255 })).collect(),
        )
        .unwrap();
        let c = adjacent_correlation(&checker, Direction::Horizontal, 0, 0);
        assert_eq!(c.r, -1.0);

        let constant = Image::filled(4, 4, 9).unwrap();
        let c = adjacent_correlation(&constant, Direction::Vertical, 0, 0);
        assert!(c.degenerate);
        assert_eq!(c.r, 0.0);
    }

    #[test]
    fn npcr_uaci_examples() {
        let z = Image::filled(4, 4, 0).unwrap();
        assert_eq!(npcr(&z, &z).unwrap(), 0.0);
        assert_eq!(uaci(&z, &z).unwrap(), 0.0);

        let inv = Image::filled(4, 4, 255).unwrap();
        assert_eq!(npcr(&z, &inv).unwrap(), 100.0);
        assert_eq!(uaci(&z, &inv).unwrap(), 100.0);

        let mut one = Image::filled(16, 16, 0).unwrap();
        one.set(3, 3, 255);
        assert_eq!(npcr(&z16(), &one).unwrap(), 100.0 / 256.0);
        assert_eq!(uaci(&z16(), &one).unwrap(), 100.0 / 256.0);

        assert!(npcr(&z, &z16()).is_err());
    }

    fn z16() -> Image {
        Image::filled(16, 16, 0).unwrap()
    }

    #[test]
    fn bit_distance_paper_example() {
        let d = float_bit_distance(1e-12, 1e-12 - 1e-14, FloatFormat::Binary32).unwrap();
        assert_eq!(d.fraction_bits, 11);
        assert_eq!(d.exponent_bits, 0);
        assert!(!d.sign_differs);

        let same = float_bit_distance(0.625, 0.625, FloatFormat::Binary64).unwrap();
        assert_eq!((same.fraction_bits, same.exponent_bits, same.sign_differs), (0, 0, false));

        // flip exactly one stored fraction bit
        let a = 0.625f64;
        let b = f64::from_bits(a.to_bits() ^ 1);
        let d = float_bit_distance(a, b, FloatFormat::Binary64).unwrap();
        assert_eq!(d.fraction_bits, 1);
    }

    #[test]
    fn utilization_ratio_examples() {
        assert_eq!(utilization_ratio(14, 256), (1, 7));
        assert_eq!(utilization_ratio(1, 2), (1, 4));
        assert_eq!(utilization_ratio(7, 256), (2, 7));
    }
}
