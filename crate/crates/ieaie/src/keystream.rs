//! Key-dependent material derivation: entropy-perturbed seeds, the chaos
//! matrix, the row/column indices `a`/`b`, the permutation vectors `u`/`v`
//! and the diffusion byte matrix `K`.
//!
//! The only plain-image influence on any of this is the scalar entropy `s`;
//! two images with equal entropy produce bit-identical keystreams.

use crate::error::{Error, Result};
use crate::lasm::{lasm_sequence, ControlParam, SecretKey, StateVector};
use crate::numeric::{ceil_scaled_mod256, ceil_scaled_mod_plus1, mod1};

/// Post-transient chaotic values arranged as an `M x N` matrix in raster
/// order, `x` before `y` within each iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosMatrix {
    m: usize,
    n: usize,
    values: Vec<f64>,
}

impl ChaosMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }
}

/// Which modulus Eq.-style index extraction uses for the permutation vectors.
///
/// The scheme as printed sends the length-N vector `u` through `mod M` and
/// the length-M vector `v` through `mod N`, which is only coherent for square
/// images. The corrected convention uses each vector's own range so both
/// permutations are well-defined for any `M x N`; the two coincide when
/// `M == N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModulusConvention {
    #[default]
    Corrected,
    /// Reproduce the printed formula; square images only.
    StrictPaper,
}

/// All key-dependent material one encryption needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Keystream {
    pub chaos: ChaosMatrix,
    /// Row of the chaos matrix feeding `u`, in `1..=M`.
    pub a: usize,
    /// Column of the chaos matrix feeding `v`, in `1..=N`.
    pub b: usize,
    /// Column destination map, a permutation of `1..=N`.
    pub u: Vec<usize>,
    /// Row destination map, a permutation of `1..=M`.
    pub v: Vec<usize>,
    /// Diffusion byte matrix, raster order.
    pub k: Vec<u8>,
}

impl Keystream {
    pub fn k_at(&self, i: usize, j: usize) -> u8 {
        self.k[i * self.u.len() + j]
    }
}

/// Seed for the chaos-matrix orbit: the secret seeds perturbed by the
/// plain-image entropy `s`.
pub fn entropy_seed(key: &SecretKey, s: f64) -> Result<StateVector> {
    let dx = s + key.x0p + key.y0p + 1.0;
    let dy = s + key.x0p + key.y0p + 2.0;
    assert!(dx >= 1.0 && dy >= 2.0, "entropy_seed denominators degenerate");
    let x = mod1(key.x0 + (s + 1.0) / dx)?;
    let y = mod1(key.y0 + (s + 2.0) / dy)?;
    StateVector::new(x, y)
}

/// Seed for the `K`-matrix orbit. Independent of the plain-image.
pub fn k_seed(key: &SecretKey) -> Result<StateVector> {
    let x = mod1(key.x0p + 1.0 / (key.x0 + key.y0 + 1.0))?;
    let y = mod1(key.y0p + 2.0 / (key.x0 + key.y0 + 2.0))?;
    StateVector::new(x, y)
}

/// The chaos-matrix row/column selectors, each in `1..=M` / `1..=N`.
pub fn compute_ab(key: &SecretKey, m: usize, n: usize) -> Result<(usize, usize)> {
    assert!(m >= 1 && n >= 1);
    let a = ceil_scaled_mod_plus1(key.x0 + key.y0 + 1.0, 7, m)?;
    let b = ceil_scaled_mod_plus1(key.x0p + key.y0p + 2.0, 7, n)?;
    Ok((a, b))
}

/// Run the orbit past the 200-step transient and reshape `M*N` values into a
/// matrix in raster order.
pub fn generate_chaos_matrix(
    seed: StateVector,
    mu: ControlParam,
    m: usize,
    n: usize,
) -> Result<ChaosMatrix> {
    if (m * n) % 2 != 0 {
        return Err(Error::BadDimensions { m, n, reason: "chaos matrix needs an even pixel count" });
    }
    let values = lasm_sequence(seed, mu, 200, m * n / 2);
    debug_assert_eq!(values.len(), m * n);
    Ok(ChaosMatrix { m, n, values })
}

/// Raw (pre-deduplication) index vectors from row `a` and column `b` of the
/// chaos matrix.
pub fn extract_uv(
    chaos: &ChaosMatrix,
    a: usize,
    b: usize,
    convention: ModulusConvention,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let (m, n) = (chaos.rows(), chaos.cols());
    assert!((1..=m).contains(&a) && (1..=n).contains(&b));
    let (u_mod, v_mod) = match convention {
        ModulusConvention::Corrected => (n, m),
        ModulusConvention::StrictPaper => {
            if m != n {
                return Err(Error::StrictPaperNonSquare(m, n));
            }
            (m, n)
        }
    };
    let u_raw = (0..n)
        .map(|j| ceil_scaled_mod_plus1(chaos.get(a - 1, j), 14, u_mod))
        .collect::<Result<Vec<_>>>()?;
    let v_raw = (0..m)
        .map(|i| ceil_scaled_mod_plus1(chaos.get(i, b - 1), 14, v_mod))
        .collect::<Result<Vec<_>>>()?;
    Ok((u_raw, v_raw))
}

/// Repair duplicates so the vector becomes a permutation of `1..=range_max`:
/// the first occurrence of each value is kept, each later duplicate is
/// replaced by the least value absent from the vector at that moment.
pub fn deduplicate(vec: &[usize], range_max: usize) -> Vec<usize> {
    assert_eq!(vec.len(), range_max);
    assert!(vec.iter().all(|&v| (1..=range_max).contains(&v)));
    let mut out = vec.to_vec();
    let mut present = vec![0usize; range_max + 1];
    for &v in out.iter() {
        present[v] += 1;
    }
    for idx in 0..out.len() {
        let v = out[idx];
        if out[..idx].contains(&v) {
            let least = (1..=range_max).find(|&c| present[c] == 0).expect("pigeonhole");
            present[v] -= 1;
            present[least] += 1;
            out[idx] = least;
        }
    }
    out
}

/// The `K` byte matrix from the second orbit.
pub fn generate_k_matrix(
    seed: StateVector,
    mu: ControlParam,
    m: usize,
    n: usize,
) -> Result<Vec<u8>> {
    if (m * n) % 2 != 0 {
        return Err(Error::BadDimensions { m, n, reason: "K matrix needs an even pixel count" });
    }
    lasm_sequence(seed, mu, 200, m * n / 2)
        .into_iter()
        .map(|x| ceil_scaled_mod256(x, 14))
        .collect()
}

/// Full keystream derivation for an `M x N` image with entropy `s`.
pub fn derive_keystream(
    key: &SecretKey,
    s: f64,
    m: usize,
    n: usize,
    convention: ModulusConvention,
) -> Result<Keystream> {
    let chaos = generate_chaos_matrix(entropy_seed(key, s)?, key.mu, m, n)?;
    let (a, b) = compute_ab(key, m, n)?;
    let (u_raw, v_raw) = extract_uv(&chaos, a, b, convention)?;
    let u = deduplicate(&u_raw, n);
    let v = deduplicate(&v_raw, m);
    let k = generate_k_matrix(k_seed(key)?, key.mu, m, n)?;
    Ok(Keystream { chaos, a, b, u, v, k })
}

pub fn is_permutation(vec: &[usize], range_max: usize) -> bool {
    if vec.len() != range_max {
        return false;
    }
    let mut seen = vec![false; range_max + 1];
    vec.iter().all(|&v| {
        if v == 0 || v > range_max || seen[v] {
            false
        } else {
            seen[v] = true;
            true
        }
    })
}
