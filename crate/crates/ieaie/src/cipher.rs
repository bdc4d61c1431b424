//! The encryption pipeline: column/row permutations, the gray-level shift,
//! the per-column diffusion factors `d_j` and the diffusion pass itself.
//!
//! One round is `permute columns -> permute rows -> gray shift -> diffuse`.
//! Multiple rounds reuse a single keystream; only the `d_j` vector is
//! recomputed per round because it reads the round's own pre-diffusion image.

use crate::error::Result;
use crate::image::{Container, Image};
use crate::keystream::{derive_keystream, Keystream, ModulusConvention};
use crate::lasm::SecretKey;
use crate::metrics::{entropy_with_denominator, image_entropy};
use crate::numeric::ceil_scaled_mod_plus1;

/// Move every input column `j` to output column `u[j]` (1-based values).
pub fn permute_horizontal(img: &Image, u: &[usize]) -> Image {
    let (m, n) = (img.rows(), img.cols());
    assert_eq!(u.len(), n);
    let mut out = Image::filled(m, n, 0).unwrap();
    for j in 0..n {
        let dst = u[j] - 1;
        for i in 0..m {
            out.set(i, dst, img.get(i, j));
        }
    }
    out
}

pub fn permute_horizontal_inv(img: &Image, u: &[usize]) -> Image {
    let (m, n) = (img.rows(), img.cols());
    assert_eq!(u.len(), n);
    let mut out = Image::filled(m, n, 0).unwrap();
    for j in 0..n {
        let src = u[j] - 1;
        for i in 0..m {
            out.set(i, j, img.get(i, src));
        }
    }
    out
}

/// Move every input row `i` to output row `v[i]` (1-based values).
pub fn permute_vertical(img: &Image, v: &[usize]) -> Image {
    let (m, n) = (img.rows(), img.cols());
    assert_eq!(v.len(), m);
    let mut out = Image::filled(m, n, 0).unwrap();
    for i in 0..m {
        let dst = v[i] - 1;
        for j in 0..n {
            out.set(dst, j, img.get(i, j));
        }
    }
    out
}

pub fn permute_vertical_inv(img: &Image, v: &[usize]) -> Image {
    let (m, n) = (img.rows(), img.cols());
    assert_eq!(v.len(), m);
    let mut out = Image::filled(m, n, 0).unwrap();
    for i in 0..m {
        let src = v[i] - 1;
        for j in 0..n {
            out.set(i, j, img.get(src, j));
        }
    }
    out
}

/// The combined position map of one round's two permutation passes:
/// source `(i, j)` lands at `(v[i], u[j])`, 0-based in and out.
pub fn compose_permutation(u: &[usize], v: &[usize]) -> Vec<Vec<(usize, usize)>> {
    v.iter().map(|&vi| u.iter().map(|&uj| (vi - 1, uj - 1)).collect()).collect()
}

/// Position-dependent gray-level shift: `out = in + M*N + i + j (mod 256)`
/// with 1-based `i`, `j`.
pub fn gray_shift(img: &Image) -> Image {
    let (m, n) = (img.rows(), img.cols());
    let mut out = img.clone();
    for i in 0..m {
        for j in 0..n {
            let s = (m * n + (i + 1) + (j + 1)) % 256;
            out.set(i, j, img.get(i, j).wrapping_add(s as u8));
        }
    }
    out
}

pub fn gray_unshift(img: &Image) -> Image {
    let (m, n) = (img.rows(), img.cols());
    let mut out = img.clone();
    for i in 0..m {
        for j in 0..n {
            let s = (m * n + (i + 1) + (j + 1)) % 256;
            out.set(i, j, img.get(i, j).wrapping_sub(s as u8));
        }
    }
    out
}

fn d_from_counts(counts: &[u64; 256], total_pixels: u64, n: usize) -> Result<usize> {
    let h = entropy_with_denominator(counts, total_pixels);
    ceil_scaled_mod_plus1(h, 14, n)
}

/// Per-column diffusion factors for the pre-diffusion image `r`. `d_j` is
/// derived from the entropy of the column suffix `j+1..N` (1-based), with the
/// full pixel count `M*N` as the probability denominator; the empty suffix
/// gives `d_N = 1`. Values lie in `1..=N`.
pub fn compute_dj(r: &Image) -> Result<Vec<usize>> {
    let (m, n) = (r.rows(), r.cols());
    let total = (m * n) as u64;
    let mut d = vec![1usize; n];
    let mut counts = [0u64; 256];
    // walk suffixes right to left, growing one histogram
    for j in (0..n - 1).rev() {
        for i in 0..m {
            counts[r.get(i, j + 1) as usize] += 1;
        }
        d[j] = d_from_counts(&counts, total, n)?;
    }
    Ok(d)
}

/// Column-chained diffusion:
/// `C(i,j) = R(i,j) + d_j*C(i,j-1) + d_j*K(i,j) + K(i,d_j) (mod 256)` with
/// `C(i,0) = 0`. Rows are independent of each other.
pub fn diffuse(r: &Image, d: &[usize], ks: &Keystream) -> Image {
    let (m, n) = (r.rows(), r.cols());
    assert_eq!(d.len(), n);
    let mut out = Image::filled(m, n, 0).unwrap();
    for i in 0..m {
        let mut prev = 0u8;
        for j in 0..n {
            let dj = d[j] as u8; // d_j <= N < 256 in supported sizes
            let c = r
                .get(i, j)
                .wrapping_add(dj.wrapping_mul(prev))
                .wrapping_add(dj.wrapping_mul(ks.k_at(i, j)))
                .wrapping_add(ks.k_at(i, d[j] - 1));
            out.set(i, j, c);
            prev = c;
        }
    }
    out
}

/// Inverse of [`diffuse`] when `d` is already known.
pub fn undiffuse(c: &Image, d: &[usize], ks: &Keystream) -> Image {
    let (m, n) = (c.rows(), c.cols());
    assert_eq!(d.len(), n);
    let mut out = Image::filled(m, n, 0).unwrap();
    for i in 0..m {
        for j in 0..n {
            let prev = if j == 0 { 0 } else { c.get(i, j - 1) };
            let dj = d[j] as u8;
            let r = c
                .get(i, j)
                .wrapping_sub(dj.wrapping_mul(prev))
                .wrapping_sub(dj.wrapping_mul(ks.k_at(i, j)))
                .wrapping_sub(ks.k_at(i, d[j] - 1));
            out.set(i, j, r);
        }
    }
    out
}

/// Invert one diffusion pass without knowing `d` up front. `d_j` only reads
/// columns `j+1..N` of the pre-diffusion image, so recovering columns from
/// right to left always has the needed suffix available.
pub fn undiffuse_recovering_d(c: &Image, ks: &Keystream) -> Result<(Image, Vec<usize>)> {
    let (m, n) = (c.rows(), c.cols());
    let total = (m * n) as u64;
    let mut out = Image::filled(m, n, 0).unwrap();
    let mut d = vec![1usize; n];
    let mut counts = [0u64; 256];
    for j in (0..n).rev() {
        if j < n - 1 {
            for i in 0..m {
                counts[out.get(i, j + 1) as usize] += 1;
            }
            d[j] = d_from_counts(&counts, total, n)?;
        }
        let dj = d[j] as u8;
        for i in 0..m {
            let prev = if j == 0 { 0 } else { c.get(i, j - 1) };
            let r = c
                .get(i, j)
                .wrapping_sub(dj.wrapping_mul(prev))
                .wrapping_sub(dj.wrapping_mul(ks.k_at(i, j)))
                .wrapping_sub(ks.k_at(i, d[j] - 1));
            out.set(i, j, r);
        }
    }
    Ok((out, d))
}

/// One round forward, returning the round's `d` vector alongside the output.
pub fn encrypt_round(img: &Image, ks: &Keystream) -> Result<(Image, Vec<usize>)> {
    let permuted = permute_vertical(&permute_horizontal(img, &ks.u), &ks.v);
    let shifted = gray_shift(&permuted);
    let d = compute_dj(&shifted)?;
    Ok((diffuse(&shifted, &d, ks), d))
}

pub fn decrypt_round(img: &Image, ks: &Keystream) -> Result<Image> {
    let (shifted, _) = undiffuse_recovering_d(img, ks)?;
    let permuted = gray_unshift(&shifted);
    Ok(permute_horizontal_inv(&permute_vertical_inv(&permuted, &ks.v), &ks.u))
}

/// Full encryption. The plain-image entropy `s` seeds the keystream and is
/// carried in the container because decryption cannot rederive it.
pub fn encrypt(
    img: &Image,
    key: &SecretKey,
    rounds: u32,
    convention: ModulusConvention,
) -> Result<Container> {
    let (c, s, _) = encrypt_traced(img, key, rounds, convention)?;
    Ok(Container { rounds, s, image: c })
}

/// Like [`encrypt`] but also returns the per-round `d` vectors, which the
/// analysis side compares against recovered values.
pub fn encrypt_traced(
    img: &Image,
    key: &SecretKey,
    rounds: u32,
    convention: ModulusConvention,
) -> Result<(Image, f64, Vec<Vec<usize>>)> {
    assert!(rounds >= 1);
    let s = image_entropy(img);
    let ks = derive_keystream(key, s, img.rows(), img.cols(), convention)?;
    let mut cur = img.clone();
    let mut trace = Vec::with_capacity(rounds as usize);
    for _ in 0..rounds {
        let (next, d) = encrypt_round(&cur, &ks)?;
        cur = next;
        trace.push(d);
    }
    Ok((cur, s, trace))
}

pub fn decrypt(c: &Container, key: &SecretKey, convention: ModulusConvention) -> Result<Image> {
    assert!(c.rounds >= 1);
    let ks = derive_keystream(key, c.s, c.image.rows(), c.image.cols(), convention)?;
    let mut cur = c.image.clone();
    for _ in 0..c.rounds {
        cur = decrypt_round(&cur, &ks)?;
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keystream::is_permutation;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn paper_key() -> SecretKey {
        SecretKey::new(0.0056, 0.3678, 0.6229, 0.7676, 0.8116).unwrap()
    }

    fn base_image() -> Image {
        let mut img = Image::filled(8, 8, 0).unwrap();
        img.set(0, 0, 1);
        img
    }

    fn paper_keystream() -> Keystream {
        let s = image_entropy(&base_image());
        derive_keystream(&paper_key(), s, 8, 8, ModulusConvention::Corrected).unwrap()
    }

    #[test]
    fn permutation_direction() {
        // u = [3,1,2] sends input column 0 to output column 2
        let img = Image::new(2, 3, vec![10, 20, 30, 40, 50, 60]).unwrap();
        let out = permute_horizontal(&img, &[3, 1, 2]);
        assert_eq!(out.pixels(), &[20, 30, 10, 50, 60, 40]);
        assert_eq!(permute_horizontal_inv(&out, &[3, 1, 2]), img);

        let img = Image::new(3, 2, vec![1, 2, 3, 4, 5, 6]).unwrap();
        let out = permute_vertical(&img, &[2, 3, 1]);
        assert_eq!(out.pixels(), &[5, 6, 1, 2, 3, 4]);
        assert_eq!(permute_vertical_inv(&out, &[2, 3, 1]), img);
    }

    #[test]
    fn compose_matches_sequential_passes() {
        let u = [3, 5, 2, 1, 4, 6, 7, 8];
        let v = [3, 5, 7, 1, 4, 6, 8, 2];
        let img = Image::new(8, 8, (0..64).collect()).unwrap();
        let two_pass = permute_vertical(&permute_horizontal(&img, &u), &v);
        let map = compose_permutation(&u, &v);
        for i in 0..8 {
            for j in 0..8 {
                let (di, dj) = map[i][j];
                assert_eq!(two_pass.get(di, dj), img.get(i, j));
            }
        }
    }

    #[test]
    fn gray_shift_roundtrip_and_values() {
        let img = Image::new(2, 2, vec![0, 10, 250, 128]).unwrap();
        let shifted = gray_shift(&img);
        // M*N = 4, so out(0,0) = 0 + 4 + 1 + 1 = 6
        assert_eq!(shifted.get(0, 0), 6);
        assert_eq!(shifted.get(1, 1), 136);
        assert_eq!(gray_unshift(&shifted), img);
    }

    #[test]
    fn dj_of_constant_suffixes() {
        // constant image: every nonempty suffix has a one-term entropy sum
        let img = Image::filled(4, 4, 9).unwrap();
        let d = compute_dj(&img).unwrap();
        // suffix of k columns: p = 4k/16, H = -p log2 p
        // k=3: H = 0.75*log2(4/3) -> ceil(H*1e14) mod 4 + 1
        assert_eq!(d[3], 1); // empty suffix
        let h1 = {
            let p = 4.0 / 16.0f64;
            -(p * p.log2())
        };
        let expect = ceil_scaled_mod_plus1(h1, 14, 4).unwrap();
        assert_eq!(d[2], expect);
    }

    #[test]
    fn paper_key_one_round_matches_cross_implementation_oracle() {
        let ks = paper_keystream();
        let (c, d) = encrypt_round(&base_image(), &ks).unwrap();
        assert_eq!(d, vec![6, 6, 7, 5, 3, 1, 1, 1]);
        let expected: [[u8; 8]; 8] = [
            [146, 67, 22, 240, 28, 113, 64, 60],
            [67, 186, 184, 254, 43, 128, 207, 84],
            [237, 130, 40, 192, 75, 182, 3, 73],
            [245, 202, 7, 2, 237, 23, 245, 44],
            [116, 73, 59, 54, 225, 232, 173, 139],
            [6, 85, 55, 161, 158, 137, 255, 6],
            [77, 242, 151, 110, 191, 92, 176, 87],
            [141, 182, 138, 70, 195, 228, 106, 181],
        ];
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(c.get(i, j), expected[i][j], "C({i},{j})");
            }
        }
    }

    #[test]
    fn paper_key_two_rounds_matches_cross_implementation_oracle() {
        let key = paper_key();
        let (c2, _, trace) =
            encrypt_traced(&base_image(), &key, 2, ModulusConvention::Corrected).unwrap();
        assert_eq!(trace[0], vec![6, 6, 7, 5, 3, 1, 1, 1]);
        assert_eq!(trace[1], vec![7, 1, 1, 1, 1, 1, 1, 1]);
        let expected: [[u8; 8]; 8] = [
            [231, 27, 94, 121, 85, 193, 133, 173],
            [25, 187, 70, 206, 250, 51, 236, 38],
            [217, 235, 91, 60, 164, 128, 13, 143],
            [110, 232, 132, 69, 214, 232, 115, 53],
            [121, 102, 14, 156, 160, 39, 187, 237],
            [209, 23, 228, 146, 88, 204, 65, 78],
            [180, 128, 190, 248, 104, 187, 18, 2],
            [220, 6, 120, 95, 136, 5, 59, 221],
        ];
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(c2.get(i, j), expected[i][j], "C2({i},{j})");
            }
        }
    }

    #[test]
    fn undiffuse_recovers_d() {
        let ks = paper_keystream();
        let (c, d) = encrypt_round(&base_image(), &ks).unwrap();
        let (shifted, d_rec) = undiffuse_recovering_d(&c, &ks).unwrap();
        assert_eq!(d_rec, d);
        assert_eq!(diffuse(&shifted, &d, &ks), c);
    }

    #[test]
    fn encrypt_decrypt_roundtrip() {
        let key = paper_key();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for rounds in [1u32, 2, 3] {
            let pixels: Vec<u8> = (0..80).map(|_| rng.gen()).collect();
            let img = Image::new(8, 10, pixels).unwrap();
            let c = encrypt(&img, &key, rounds, ModulusConvention::Corrected).unwrap();
            assert_ne!(c.image, img);
            let back = decrypt(&c, &key, ModulusConvention::Corrected).unwrap();
            assert_eq!(back, img);
        }
    }

    #[test]
    fn wrong_key_fails_roundtrip() {
        let img = Image::new(8, 8, (0..64).map(|i| (i * 7) as u8).collect()).unwrap();
        let c = encrypt(&img, &paper_key(), 1, ModulusConvention::Corrected).unwrap();
        let other = SecretKey::new(0.0056, 0.3678, 0.6229, 0.7677, 0.8116).unwrap();
        let back = decrypt(&c, &other, ModulusConvention::Corrected).unwrap();
        assert_ne!(back, img);
    }

    #[test]
    fn diffusion_rows_are_independent() {
        let ks = paper_keystream();
        let d = vec![3, 1, 4, 1, 5, 2, 6, 5];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let r1 = Image::new(8, 8, (0..64).map(|_| rng.gen()).collect()).unwrap();
        let mut r2 = r1.clone();
        for j in 0..8 {
            r2.set(4, j, rng.gen()); // rewrite one row only
        }
        let c1 = diffuse(&r1, &d, &ks);
        let c2 = diffuse(&r2, &d, &ks);
        for i in 0..8 {
            for j in 0..8 {
                if i != 4 {
                    assert_eq!(c1.get(i, j), c2.get(i, j));
                }
            }
        }
    }

    #[test]
    fn msb_flips_propagate_as_msb_flips() {
        // adding 128 mod 256 anywhere in R can only toggle top bits of C:
        // d * 128 mod 256 is 0 or 128, so the chain never leaves {0, 0x80}
        let ks = paper_keystream();
        let d = vec![6, 6, 7, 5, 3, 1, 1, 1];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let r1 = Image::new(8, 8, (0..64).map(|_| rng.gen()).collect()).unwrap();
            let mut r2 = r1.clone();
            for i in 0..8 {
                for j in 0..8 {
                    if rng.gen_bool(0.3) {
                        r2.set(i, j, r1.get(i, j).wrapping_add(128));
                    }
                }
            }
            let c1 = diffuse(&r1, &d, &ks);
            let c2 = diffuse(&r2, &d, &ks);
            for (a, b) in c1.pixels().iter().zip(c2.pixels()) {
                assert!(a ^ b == 0 || a ^ b == 0x80);
            }
        }
    }

    #[test]
    fn multi_round_reuses_one_keystream() {
        // per-round u/v/K are identical; only d varies with the round input
        let key = paper_key();
        let img = base_image();
        let s = image_entropy(&img);
        let ks = derive_keystream(&key, s, 8, 8, ModulusConvention::Corrected).unwrap();
        assert!(is_permutation(&ks.u, 8) && is_permutation(&ks.v, 8));
        let (r1, _) = encrypt_round(&img, &ks).unwrap();
        let (r2, _) = encrypt_round(&r1, &ks).unwrap();
        let (direct, _, _) = encrypt_traced(&img, &key, 2, ModulusConvention::Corrected).unwrap();
        assert_eq!(r2, direct);
    }
}
