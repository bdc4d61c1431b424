//! Chosen-plaintext recovery of an equivalent key for the one-round cipher.
//!
//! The cipher's only plain-image input to the keystream is the image entropy,
//! so any two chosen plaintexts with the same histogram shape get the same
//! permutations and `K` matrix. Whether they also get the same per-column
//! diffusion factors `d_j` is subtler: the gray-level shift adds a
//! position-dependent ramp before the column entropies are taken, so `d`
//! depends on where a differing pixel lands after permutation. The attack
//! therefore works in two stages:
//!
//! 1. the shared-base differential pass (one base image plus one probe per
//!    pixel), which succeeds for a probe only when base and probe happen to
//!    share the full `(entropy, d)` class, and
//! 2. an authoritative per-position pass using value pairs chosen outside the
//!    ramp's byte range, which pins both plaintexts of each pair into one
//!    class by construction.
//!
//! The recovered material is an equivalent key: the composed position
//! permutation, the `d` vector of the attack's plaintext class, and a byte
//! matrix `D` absorbing every `K`-derived term of the diffusion. It decrypts
//! any ciphertext whose plaintext lies in the same class.

use serde::Serialize;

use crate::cipher::{encrypt_traced, gray_shift, gray_unshift};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::keystream::ModulusConvention;
use crate::lasm::SecretKey;
use crate::metrics::image_entropy;

// ---------------------------------------------------------------------------
// Oracle
// ---------------------------------------------------------------------------

/// A chosen-plaintext encryption oracle for the one-round cipher.
pub trait EncryptionOracle {
    fn encrypt_image(&mut self, img: &Image) -> Result<Image>;
    fn query_count(&self) -> u64;
}

/// The straightforward oracle: holds the secret key, encrypts one round.
pub struct KeyedOracle {
    key: SecretKey,
    convention: ModulusConvention,
    queries: u64,
}

impl KeyedOracle {
    pub fn new(key: SecretKey, convention: ModulusConvention) -> Self {
        KeyedOracle { key, convention, queries: 0 }
    }
}

impl EncryptionOracle for KeyedOracle {
    fn encrypt_image(&mut self, img: &Image) -> Result<Image> {
        self.queries += 1;
        let (c, _, _) = encrypt_traced(img, &self.key, 1, self.convention)?;
        Ok(c)
    }

    fn query_count(&self) -> u64 {
        self.queries
    }
}

// ---------------------------------------------------------------------------
// Crafting helpers
// ---------------------------------------------------------------------------

/// Probe values for the shared-base pass: base pixel `a`, probe pixel `b`,
/// background `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CraftValues {
    pub a: u8,
    pub b: u8,
    pub c: u8,
}

impl Default for CraftValues {
    fn default() -> Self {
        CraftValues { a: 1, b: 2, c: 0 }
    }
}

impl CraftValues {
    pub fn validate(&self) -> Result<()> {
        if self.a == self.b || self.a == self.c || self.b == self.c {
            return Err(Error::CraftValuesNotDistinct { a: self.a, b: self.b, c: self.c });
        }
        Ok(())
    }
}

/// Background `bg` everywhere except `value` at `pos`.
pub fn craft_single(m: usize, n: usize, bg: u8, value: u8, pos: (usize, usize)) -> Image {
    let mut img = Image::filled(m, n, bg).expect("craft dimensions");
    img.set(pos.0, pos.1, value);
    img
}

/// Two images differing only in the value of the pixel at `pos`. Their
/// histograms have identical count multisets, so their entropies, and hence
/// their keystreams, are bit-identical.
pub fn craft_pair(
    m: usize,
    n: usize,
    pos: (usize, usize),
    a: u8,
    b: u8,
    c: u8,
) -> Result<(Image, Image)> {
    CraftValues { a, b, c }.validate()?;
    let p = craft_single(m, n, c, a, pos);
    let q = craft_single(m, n, c, b, pos);
    debug_assert_eq!(image_entropy(&p).to_bits(), image_entropy(&q).to_bits());
    Ok((p, q))
}

/// The gray-level shift adds `M*N + i + j (mod 256)` per position, so the
/// shifted background occupies a contiguous run of `M+N-1` byte values. A
/// special pixel whose offset from the background stays outside
/// `[-(M+N-2), M+N-2] (mod 256)` never collides with that run at any
/// position, which makes every column-suffix histogram shape, and with it the
/// whole `d` vector, independent of the special value.
pub fn ramp_bound(m: usize, n: usize) -> usize {
    m + n - 2
}

pub fn is_out_of_ramp(m: usize, n: usize, offset: u8) -> bool {
    let t = ramp_bound(m, n);
    (offset as usize) > t && (offset as usize) < 256 - t
}

/// Two adjacent out-of-ramp offsets (their difference is 1, hence odd, which
/// the diffusion-factor recovery needs).
pub fn out_of_ramp_offsets(m: usize, n: usize) -> Result<(u8, u8)> {
    let t = ramp_bound(m, n);
    if t + 2 > 255 - t {
        return Err(Error::BadDimensions { m, n, reason: "too large for out-of-ramp craft values" });
    }
    Ok(((t + 1) as u8, (t + 2) as u8))
}

// ---------------------------------------------------------------------------
// Differentials
// ---------------------------------------------------------------------------

/// Bytewise `c1 - c2 (mod 256)`.
pub fn differential(c1: &Image, c2: &Image) -> Result<Vec<u8>> {
    c1.same_dims(c2)?;
    Ok(c1.pixels().iter().zip(c2.pixels()).map(|(&a, &b)| a.wrapping_sub(b)).collect())
}

pub fn nonzero_rows(diff: &[u8], n: usize) -> usize {
    diff.chunks(n).filter(|row| row.iter().any(|&b| b != 0)).count()
}

/// First nonzero entry in raster order. For a single-source diffusion
/// differential this is exactly the permuted position of the differing pixel:
/// rows above the source stay zero, and inside the source row everything left
/// of the source column stays zero.
pub fn locate_first_nonzero(diff: &[u8], n: usize) -> Result<(usize, usize)> {
    diff.iter()
        .position(|&b| b != 0)
        .map(|k| (k / n, k % n))
        .ok_or(Error::ZeroDifferential)
}

/// Predicted ciphertext differential for two plaintexts of one keystream
/// class, from the class's permutation and diffusion factors alone. The gray
/// shift cancels in the difference, and the `K` terms drop out, leaving the
/// degenerate recurrence `dC(i,j) = dR(i,j) + d_j*dC(i,j-1) (mod 256)` with
/// `dR` the permuted plaintext difference.
pub fn predict_differential(
    p1: &Image,
    p2: &Image,
    perm: &[(usize, usize)],
    d: &[usize],
) -> Result<Vec<u8>> {
    p1.same_dims(p2)?;
    let (m, n) = (p1.rows(), p1.cols());
    assert_eq!(perm.len(), m * n);
    assert_eq!(d.len(), n);
    let mut dr = vec![0u8; m * n];
    for k in 0..m * n {
        let (di, dj) = perm[k];
        dr[di * n + dj] = p1.pixels()[k].wrapping_sub(p2.pixels()[k]);
    }
    let mut dc = vec![0u8; m * n];
    for i in 0..m {
        let mut prev = 0u8;
        for j in 0..n {
            let v = dr[i * n + j].wrapping_add((d[j] as u8).wrapping_mul(prev));
            dc[i * n + j] = v;
            prev = v;
        }
    }
    Ok(dc)
}

/// Multiplicative inverse of an odd byte modulo 256 (`x^63 = x^-1` because
/// the unit group of Z/256 has exponent 64).
pub fn inv_mod256(x: u8) -> u8 {
    assert!(x % 2 == 1, "only odd bytes are invertible mod 256");
    let mut acc = 1u8;
    for _ in 0..63 {
        acc = acc.wrapping_mul(x);
    }
    acc
}

// ---------------------------------------------------------------------------
// Equivalent key
// ---------------------------------------------------------------------------

/// Everything needed to decrypt ciphertexts of the attack's plaintext class
/// without the secret key.
#[derive(Debug, Clone, Serialize)]
pub struct EquivalentKey {
    pub m: usize,
    pub n: usize,
    /// Destination of source raster index `k` under the composed row/column
    /// permutation, 0-based.
    pub perm: Vec<(usize, usize)>,
    /// Per-column diffusion factors of the class. Entry 0 is a placeholder:
    /// it multiplies the all-zero virtual column and never reaches any
    /// ciphertext byte.
    pub d: Vec<usize>,
    /// `D(i,j) = C(i,j) - R(i,j) - d_j*C(i,j-1) (mod 256)`, absorbing the
    /// `K`-matrix terms of the diffusion.
    pub dmat: Vec<u8>,
    /// Entropy shared by all plaintexts of the class.
    pub entropy_class: f64,
    /// Position of the class's distinguished pixel; images of the class keep
    /// the background everywhere else.
    pub pivot: (usize, usize),
    pub background: u8,
}

impl EquivalentKey {
    /// Sample `count` distinct fresh plaintexts of the key's class: the
    /// background image with one out-of-ramp value at the pivot.
    pub fn class_images(&self, count: usize, seed: u64) -> Vec<Image> {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut offsets: Vec<u8> = (0..=255u8).filter(|&o| is_out_of_ramp(self.m, self.n, o)).collect();
        assert!(offsets.len() >= count, "class too small for requested sample");
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        offsets.shuffle(&mut rng);
        offsets[..count]
            .iter()
            .map(|&o| craft_single(self.m, self.n, self.background, self.background.wrapping_add(o), self.pivot))
            .collect()
    }
}

/// Invert one round with the equivalent key. Correct exactly for ciphertexts
/// whose plaintext shares the key's `(entropy, d)` class.
pub fn decrypt_with_equivalent_key(c: &Image, ek: &EquivalentKey) -> Result<Image> {
    if c.rows() != ek.m || c.cols() != ek.n {
        return Err(Error::DimensionMismatch(c.rows(), c.cols(), ek.m, ek.n));
    }
    let (m, n) = (ek.m, ek.n);
    let mut shifted = Image::filled(m, n, 0).unwrap();
    for i in 0..m {
        for j in 0..n {
            let prev = if j == 0 { 0 } else { c.get(i, j - 1) };
            let r = c
                .get(i, j)
                .wrapping_sub((ek.d[j] as u8).wrapping_mul(prev))
                .wrapping_sub(ek.dmat[i * n + j]);
            shifted.set(i, j, r);
        }
    }
    let permuted = gray_unshift(&shifted);
    let mut plain = Image::filled(m, n, 0).unwrap();
    for k in 0..m * n {
        let (di, dj) = ek.perm[k];
        plain.set(k / n, k % n, permuted.get(di, dj));
    }
    Ok(plain)
}

// ---------------------------------------------------------------------------
// Attack transcript
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct QueryRecord {
    pub index: u64,
    pub phase: &'static str,
    pub background: u8,
    /// Pixels set away from the background: `(i, j, value)`.
    pub special: Vec<(usize, usize, u8)>,
    /// FNV-1a digest of the returned ciphertext.
    pub ciphertext_digest: String,
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

#[derive(Debug, Serialize)]
pub struct AttackOutcome {
    pub key: EquivalentKey,
    /// Queries spent by the shared-base pass alone (1 base + MN-1 probes).
    pub protocol_queries: u64,
    /// Queries spent in total before the permutation was fully determined,
    /// including the per-position pairs the shared-base pass could not avoid.
    pub permutation_queries: u64,
    pub total_queries: u64,
    /// Probe positions the shared-base pass could resolve on its own, i.e.
    /// probes that landed in the base's `(entropy, d)` class.
    pub in_class_matches: usize,
    pub transcript: Vec<QueryRecord>,
}

// ---------------------------------------------------------------------------
// The attack
// ---------------------------------------------------------------------------

struct Session<'a, O: EncryptionOracle> {
    oracle: &'a mut O,
    m: usize,
    n: usize,
    transcript: Vec<QueryRecord>,
}

impl<'a, O: EncryptionOracle> Session<'a, O> {
    fn query(&mut self, phase: &'static str, bg: u8, img: &Image) -> Result<Image> {
        let c = self.oracle.encrypt_image(img)?;
        let special = (0..self.m * self.n)
            .filter_map(|k| {
                let v = img.pixels()[k];
                (v != bg).then_some((k / self.n, k % self.n, v))
            })
            .collect();
        self.transcript.push(QueryRecord {
            index: self.oracle.query_count(),
            phase,
            background: bg,
            special,
            ciphertext_digest: format!("{:016x}", fnv1a64(c.pixels())),
        });
        Ok(c)
    }
}

/// Recover an equivalent key from a one-round chosen-plaintext oracle.
///
/// Runs the shared-base differential protocol first and records how many
/// probe positions it resolves, then recovers every position with
/// per-position out-of-ramp pairs, extracts the diffusion factors from a
/// pivot pair in the first column, and derives the `D` matrix from a known
/// plaintext/ciphertext pair of the class.
pub fn run_attack<O: EncryptionOracle>(
    oracle: &mut O,
    m: usize,
    n: usize,
    craft: CraftValues,
) -> Result<AttackOutcome> {
    craft.validate()?;
    let start_queries = oracle.query_count();
    let mut s = Session { oracle, m, n, transcript: Vec::new() };
    let (bg, a, b) = (craft.c, craft.a, craft.b);

    // ---- stage 1: shared-base pass -------------------------------------
    let base = craft_single(m, n, bg, a, (0, 0));
    let c_base = s.query("shared-base", bg, &base)?;
    let mut near_class: Vec<((usize, usize), Vec<u8>)> = Vec::new();
    for k in 1..m * n {
        let p = (k / n, k % n);
        let probe = craft_single(m, n, bg, b, p);
        let c_probe = s.query("shared-base", bg, &probe)?;
        let dc = differential(&c_probe, &c_base)?;
        // an in-class two-source differential touches at most two rows;
        // a d-mismatch term touches essentially all of them
        if nonzero_rows(&dc, n) <= 2 {
            near_class.push((p, dc));
        }
    }
    let protocol_queries = s.oracle.query_count() - start_queries;

    // extract what the shared-base pass can: cancel the base pixel's source
    // with a reference single-source differential, leaving the probe source
    let mut class_candidates: Vec<((usize, usize), (usize, usize))> = Vec::new();
    if !near_class.is_empty() && a.wrapping_sub(b) % 2 == 1 {
        let ref_img = craft_single(m, n, bg, b, (0, 0));
        let c_ref = s.query("shared-base-ref", bg, &ref_img)?;
        let dc_ref = differential(&c_ref, &c_base)?;
        if nonzero_rows(&dc_ref, n) == 1 {
            // base source is (c - a) at perm(0,0); ref source is (b - a)
            let k_cancel = bg.wrapping_sub(a).wrapping_mul(inv_mod256(b.wrapping_sub(a)));
            for (p, dc) in &near_class {
                let e: Vec<u8> = dc
                    .iter()
                    .zip(&dc_ref)
                    .map(|(&x, &r)| x.wrapping_sub(k_cancel.wrapping_mul(r)))
                    .collect();
                if nonzero_rows(&e, n) == 1 {
                    if let Ok(dst) = locate_first_nonzero(&e, n) {
                        class_candidates.push((*p, dst));
                    }
                }
            }
        }
    }

    // ---- stage 2: per-position out-of-ramp pairs ------------------------
    let (o1, o2) = out_of_ramp_offsets(m, n)?;
    let (v1, v2) = (bg.wrapping_add(o1), bg.wrapping_add(o2));
    let mut perm = vec![(usize::MAX, usize::MAX); m * n];
    let mut taken = vec![false; m * n];
    // per position: the pair's plaintexts, ciphertexts and differential
    let mut pairs: Vec<(Image, Image, Image, Image, Vec<u8>)> = Vec::with_capacity(m * n);
    for k in 0..m * n {
        let p = (k / n, k % n);
        let p1 = craft_single(m, n, bg, v1, p);
        let p2 = craft_single(m, n, bg, v2, p);
        let c1 = s.query("pair", bg, &p1)?;
        let c2 = s.query("pair", bg, &p2)?;
        let dc = differential(&c2, &c1)?;
        let dst = locate_first_nonzero(&dc, n)?;
        if taken[dst.0 * n + dst.1] {
            return Err(Error::ClassViolation(dst.0, dst.1));
        }
        taken[dst.0 * n + dst.1] = true;
        perm[k] = dst;
        pairs.push((p1, p2, c1, c2, dc));
    }
    let permutation_queries = s.oracle.query_count() - start_queries;
    let in_class_matches =
        class_candidates.iter().filter(|(p, dst)| perm[p.0 * n + p.1] == *dst).count();

    // ---- stage 3: diffusion factors from a first-column pivot -----------
    let pivot_k = (0..m * n).find(|&k| perm[k].1 == 0).expect("bijection covers column 0");
    let pivot = (pivot_k / n, pivot_k % n);
    let i0 = perm[pivot_k].0;
    let delta: Vec<u8> = (0..n).map(|j| pairs[pivot_k].4[i0 * n + j]).collect();
    debug_assert_eq!(delta[0], v2.wrapping_sub(v1));
    // candidate sets for each d_j from delta[j] = d_j * delta[j-1]
    let mut cand: Vec<Vec<usize>> = vec![vec![1]]; // d_1 never observable, never used
    for j in 1..n {
        let prev = delta[j - 1];
        let cur = delta[j];
        let set: Vec<usize> =
            (1..=n).filter(|&x| (x as u8).wrapping_mul(prev) == cur).collect();
        if set.is_empty() {
            return Err(Error::ClassViolation(i0, j));
        }
        cand.push(set);
    }

    // ---- stage 4: D matrix plus verification of the candidate choice ----
    let (ref p1, ref p2, ref c1, ref c2, _) = pairs[pivot_k];
    let entropy_class = image_entropy(p1);
    let build = |d: &[usize]| -> EquivalentKey {
        let mut permuted = Image::filled(m, n, 0).unwrap();
        for k in 0..m * n {
            let (di, dj) = perm[k];
            permuted.set(di, dj, p1.pixels()[k]);
        }
        let r = gray_shift(&permuted);
        let mut dmat = vec![0u8; m * n];
        for i in 0..m {
            for j in 0..n {
                let prev = if j == 0 { 0 } else { c1.get(i, j - 1) };
                dmat[i * n + j] = c1
                    .get(i, j)
                    .wrapping_sub(r.get(i, j))
                    .wrapping_sub((d[j] as u8).wrapping_mul(prev));
            }
        }
        EquivalentKey {
            m,
            n,
            perm: perm.clone(),
            d: d.to_vec(),
            dmat,
            entropy_class,
            pivot,
            background: bg,
        }
    };
    // walk candidate combinations (nearly always singletons) until one
    // decrypts the second pair member; bounded so a broken oracle cannot
    // stall the search
    let mut chosen: Option<EquivalentKey> = None;
    let mut combo: Vec<usize> = vec![0; n];
    let mut tried = 0u32;
    'search: loop {
        let d: Vec<usize> = (0..n).map(|j| cand[j][combo[j]]).collect();
        let ek = build(&d);
        if decrypt_with_equivalent_key(c2, &ek)? == *p2 {
            chosen = Some(ek);
            break;
        }
        tried += 1;
        if tried >= 10_000 {
            break;
        }
        // odometer increment over the candidate sets
        for j in (0..n).rev() {
            combo[j] += 1;
            if combo[j] < cand[j].len() {
                continue 'search;
            }
            combo[j] = 0;
        }
        break;
    }
    let key = chosen.ok_or(Error::ClassViolation(pivot.0, pivot.1))?;
    debug_assert_eq!(decrypt_with_equivalent_key(c1, &key)?, *p1);

    Ok(AttackOutcome {
        key,
        protocol_queries,
        permutation_queries,
        total_queries: s.oracle.query_count() - start_queries,
        in_class_matches,
        transcript: s.transcript,
    })
}

/// Encrypt fresh class plaintexts through the oracle and check the recovered
/// key decrypts them. Returns `(successes, attempts)`.
pub fn verify_equivalent_key<O: EncryptionOracle>(
    oracle: &mut O,
    key: &EquivalentKey,
    images: &[Image],
) -> Result<(usize, usize)> {
    let mut ok = 0;
    for img in images {
        let c = oracle.encrypt_image(img)?;
        if decrypt_with_equivalent_key(&c, key)? == *img {
            ok += 1;
        }
    }
    Ok((ok, images.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keystream::derive_keystream;

    fn paper_key() -> SecretKey {
        SecretKey::new(0.0056, 0.3678, 0.6229, 0.7676, 0.8116).unwrap()
    }

    #[test]
    fn inv_mod256_is_correct_for_all_odd_bytes() {
        for x in (1..=255u8).step_by(2) {
            assert_eq!(x.wrapping_mul(inv_mod256(x)), 1, "x = {x}");
        }
    }

    #[test]
    fn craft_pair_validation_and_entropy() {
        assert!(craft_pair(4, 4, (1, 1), 1, 1, 0).is_err());
        assert!(craft_pair(4, 4, (1, 1), 1, 2, 2).is_err());
        let (p, q) = craft_pair(4, 4, (1, 1), 1, 2, 0).unwrap();
        assert_eq!(image_entropy(&p).to_bits(), image_entropy(&q).to_bits());
        assert_eq!(p.get(1, 1), 1);
        assert_eq!(q.get(1, 1), 2);
    }

    #[test]
    fn out_of_ramp_offset_bounds() {
        let (o1, o2) = out_of_ramp_offsets(8, 8).unwrap();
        assert_eq!((o1, o2), (15, 16));
        assert!(is_out_of_ramp(8, 8, o1) && is_out_of_ramp(8, 8, o2));
        assert!(!is_out_of_ramp(8, 8, 14));
        assert!(!is_out_of_ramp(8, 8, 242));
        // 64x64 is exactly at the limit
        assert!(out_of_ramp_offsets(64, 64).is_ok());
        assert!(out_of_ramp_offsets(64, 66).is_err());
    }

    #[test]
    fn differential_and_locator() {
        let a = Image::new(2, 2, vec![5, 6, 7, 8]).unwrap();
        let b = Image::new(2, 2, vec![5, 6, 9, 8]).unwrap();
        let d = differential(&b, &a).unwrap();
        assert_eq!(d, vec![0, 0, 2, 0]);
        assert_eq!(locate_first_nonzero(&d, 2).unwrap(), (1, 0));
        assert_eq!(nonzero_rows(&d, 2), 1);
        let z = differential(&a, &a).unwrap();
        assert!(matches!(locate_first_nonzero(&z, 2), Err(Error::ZeroDifferential)));
    }

    #[test]
    fn attack_recovers_permutation_on_paper_key() {
        let mut oracle = KeyedOracle::new(paper_key(), ModulusConvention::Corrected);
        let out = run_attack(&mut oracle, 8, 8, CraftValues::default()).unwrap();
        assert_eq!(out.protocol_queries, 64);

        // ground truth: the keystream of the attack's plaintext class
        let s = out.key.entropy_class;
        let ks = derive_keystream(&paper_key(), s, 8, 8, ModulusConvention::Corrected).unwrap();
        for k in 0..64 {
            let (i, j) = (k / 8, k % 8);
            assert_eq!(out.key.perm[k], (ks.v[i] - 1, ks.u[j] - 1), "source ({i},{j})");
        }
    }

    #[test]
    fn attack_d_matches_class_ground_truth() {
        let key = paper_key();
        let mut oracle = KeyedOracle::new(key, ModulusConvention::Corrected);
        let out = run_attack(&mut oracle, 8, 8, CraftValues::default()).unwrap();
        // encrypt a genuine class member and compare its traced d: every
        // entry past the placeholder must reproduce the class value
        let img = out.key.class_images(1, 99)[0].clone();
        let (_, _, trace) = encrypt_traced(&img, &key, 1, ModulusConvention::Corrected).unwrap();
        assert_eq!(&out.key.d[1..], &trace[0][1..]);
    }

    #[test]
    fn attack_decrypts_fresh_class_images() {
        let mut oracle = KeyedOracle::new(paper_key(), ModulusConvention::Corrected);
        let out = run_attack(&mut oracle, 8, 8, CraftValues::default()).unwrap();
        let images = out.key.class_images(20, 7);
        let (ok, total) = verify_equivalent_key(&mut oracle, &out.key, &images).unwrap();
        assert_eq!((ok, total), (20, 20));
    }

    #[test]
    fn attack_works_on_small_and_nonsquare_images() {
        for (m, n) in [(2usize, 2usize), (4, 6)] {
            let mut oracle = KeyedOracle::new(paper_key(), ModulusConvention::Corrected);
            let out = run_attack(&mut oracle, m, n, CraftValues::default()).unwrap();
            let s = out.key.entropy_class;
            let ks = derive_keystream(&paper_key(), s, m, n, ModulusConvention::Corrected).unwrap();
            for k in 0..m * n {
                assert_eq!(out.key.perm[k], (ks.v[k / n] - 1, ks.u[k % n] - 1));
            }
            let images = out.key.class_images(5, 3);
            let (ok, total) = verify_equivalent_key(&mut oracle, &out.key, &images).unwrap();
            assert_eq!((ok, total), (5, 5));
        }
    }

    #[test]
    fn equivalent_key_is_class_bound() {
        // a plaintext with a different histogram shape gets a different
        // keystream, so the recovered key must not decrypt it
        let key = paper_key();
        let mut oracle = KeyedOracle::new(key, ModulusConvention::Corrected);
        let out = run_attack(&mut oracle, 8, 8, CraftValues::default()).unwrap();
        let foreign = Image::new(8, 8, (0..64).collect()).unwrap();
        let (c, _, _) = encrypt_traced(&foreign, &key, 1, ModulusConvention::Corrected).unwrap();
        assert_ne!(decrypt_with_equivalent_key(&c, &out.key).unwrap(), foreign);
    }

    #[test]
    fn transcript_accounts_for_every_query() {
        let mut oracle = KeyedOracle::new(paper_key(), ModulusConvention::Corrected);
        let out = run_attack(&mut oracle, 4, 4, CraftValues::default()).unwrap();
        assert_eq!(out.transcript.len() as u64, out.total_queries);
        assert_eq!(oracle.query_count(), out.total_queries);
        assert!(out.transcript.iter().all(|r| r.ciphertext_digest.len() == 16));
    }

    #[test]
    fn predicted_differentials_match_observation() {
        // same-position out-of-ramp pairs share one class, so the degenerate
        // recurrence must reproduce the observed differential exactly
        let key = paper_key();
        let (m, n) = (4usize, 4usize);
        let (o1, o2) = out_of_ramp_offsets(m, n).unwrap();
        for k in 0..m * n {
            let pos = (k / n, k % n);
            let p1 = craft_single(m, n, 0, o1, pos);
            let p2 = craft_single(m, n, 0, o2, pos);
            let (c1, _, trace) = encrypt_traced(&p1, &key, 1, ModulusConvention::Corrected).unwrap();
            let (c2, _, _) = encrypt_traced(&p2, &key, 1, ModulusConvention::Corrected).unwrap();
            let observed = differential(&c1, &c2).unwrap();
            let s = image_entropy(&p1);
            let ks = derive_keystream(&key, s, m, n, ModulusConvention::Corrected).unwrap();
            let perm: Vec<(usize, usize)> =
                (0..m * n).map(|q| (ks.v[q / n] - 1, ks.u[q % n] - 1)).collect();
            let predicted = predict_differential(&p1, &p2, &perm, &trace[0]).unwrap();
            assert_eq!(observed, predicted, "position {pos:?}");
        }
    }

    #[test]
    fn fnv_digest_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
    }
}
