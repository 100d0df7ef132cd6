//! One-ring channel model on DFT subspaces.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::geometry::{NetworkArea, Point};
use crate::pathloss::LsfcMatrix;
use crate::rng::{stream, Stream};

/// Entry `(a, b)` of the unitary `m x m` DFT matrix.
pub fn dft_entry(m: usize, a: usize, b: usize) -> Complex64 {
    let phase = -2.0 * PI * ((a * b) % m) as f64 / m as f64;
    Complex64::from_polar(1.0 / (m as f64).sqrt(), phase)
}

/// Circular complex Gaussian with unit variance.
pub fn complex_normal<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * FRAC_1_SQRT_2
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceBasis {
    pub index_set: Vec<usize>,
    /// `M x |S|` DFT columns.
    pub columns: DMatrix<Complex64>,
    pub center_angle: f64,
    pub spread: f64,
}

fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// DFT indices whose angle `2 pi m / M` falls in `[theta - spread/2, theta + spread/2)`
/// modulo `2 pi`; the nearest single index if none does.
pub fn angular_index_set(theta: f64, antennas: usize, spread: f64) -> Vec<usize> {
    let lo = theta - spread / 2.0;
    let step = 2.0 * PI / antennas as f64;
    let set: Vec<usize> = (0..antennas).filter(|&m| (m as f64 * step - lo).rem_euclid(2.0 * PI) < spread).collect();
    if !set.is_empty() {
        return set;
    }
    let nearest = (0..antennas)
        .min_by(|&a, &b| angular_distance(a as f64 * step, theta).total_cmp(&angular_distance(b as f64 * step, theta)))
        .expect("at least one antenna");
    vec![nearest]
}

impl SubspaceBasis {
    pub fn from_angle(theta: f64, antennas: usize, spread: f64) -> Self {
        let index_set = angular_index_set(theta, antennas, spread);
        let columns = DMatrix::from_fn(antennas, index_set.len(), |a, j| dft_entry(antennas, a, index_set[j]));
        SubspaceBasis { index_set, columns, center_angle: theta, spread }
    }

    pub fn dim(&self) -> usize {
        self.index_set.len()
    }

    pub fn antennas(&self) -> usize {
        self.columns.nrows()
    }

    /// Orthogonal projection `F F^H x`.
    pub fn project(&self, x: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|o| *o = Complex64::default());
        for j in 0..self.dim() {
            let col = self.columns.column(j);
            let c: Complex64 = col.iter().zip(x).map(|(f, x)| f.conj() * x).sum();
            for (o, f) in out.iter_mut().zip(col.iter()) {
                *o += f * c;
            }
        }
    }

    /// `||F_a^H F_b||_F^2`, which for DFT columns is the size of the index intersection.
    pub fn overlap_energy(&self, other: &SubspaceBasis) -> usize {
        self.index_set.iter().filter(|m| other.index_set.binary_search(m).is_ok()).count()
    }

    /// Overlap normalized by the smaller subspace dimension, in `[0, 1]`.
    pub fn normalized_overlap(&self, other: &SubspaceBasis) -> f64 {
        self.overlap_energy(other) as f64 / self.dim().min(other.dim()) as f64
    }
}

pub fn build_subspace(ru: Point, ue: Point, antennas: usize, spread: f64, area: &NetworkArea) -> SubspaceBasis {
    let (dx, dy) = area.displacement(ru, ue);
    SubspaceBasis::from_angle(dy.atan2(dx), antennas, spread)
}

/// Bases for every RU-UE pair, indexed `[l][k]`.
#[derive(Clone, Debug)]
pub struct SubspaceSet {
    num_ues: usize,
    bases: Vec<SubspaceBasis>,
}

impl SubspaceSet {
    pub fn build(rus: &[Point], ues: &[Point], antennas: usize, spread: f64, area: &NetworkArea) -> Self {
        let bases =
            rus.iter().flat_map(|&r| ues.iter().map(move |&u| build_subspace(r, u, antennas, spread, area))).collect();
        SubspaceSet { num_ues: ues.len(), bases }
    }

    #[inline]
    pub fn get(&self, l: usize, k: usize) -> &SubspaceBasis {
        &self.bases[l * self.num_ues + k]
    }
}

/// `sqrt(beta M / |S|) F nu` with `nu` i.i.d. unit complex Gaussian.
pub fn draw_channel<R: Rng>(beta: f64, basis: &SubspaceBasis, rng: &mut R) -> Vec<Complex64> {
    let m = basis.antennas();
    let scale = (beta * m as f64 / basis.dim() as f64).sqrt();
    let mut h = vec![Complex64::default(); m];
    for j in 0..basis.dim() {
        let nu = complex_normal(rng) * scale;
        for (h, f) in h.iter_mut().zip(basis.columns.column(j).iter()) {
            *h += f * nu;
        }
    }
    h
}

/// Per-pair vectors of length `M`, laid out `[l][k][m]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairVectors {
    num_ues: usize,
    antennas: usize,
    data: Vec<Complex64>,
}

impl PairVectors {
    pub fn zeros(num_rus: usize, num_ues: usize, antennas: usize) -> Self {
        PairVectors { num_ues, antennas, data: vec![Complex64::default(); num_rus * num_ues * antennas] }
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    #[inline]
    pub fn get(&self, l: usize, k: usize) -> &[Complex64] {
        let s = (l * self.num_ues + k) * self.antennas;
        &self.data[s..s + self.antennas]
    }

    #[inline]
    pub fn get_mut(&mut self, l: usize, k: usize) -> &mut [Complex64] {
        let s = (l * self.num_ues + k) * self.antennas;
        &mut self.data[s..s + self.antennas]
    }
}

/// One small-scale fading realization of every RU-UE channel.
pub type ChannelRealization = PairVectors;

/// Draws all channels for realization `r`; each pair uses its own stream.
pub fn draw_realization(
    lsfc: &LsfcMatrix,
    bases: &SubspaceSet,
    antennas: usize,
    seed: u64,
    drop: u64,
    r: u64,
) -> ChannelRealization {
    let (nl, nk) = (lsfc.num_rus(), lsfc.num_ues());
    let mut h = PairVectors::zeros(nl, nk, antennas);
    for l in 0..nl {
        for k in 0..nk {
            let mut rng = stream(seed, Stream::Channel, &[drop, r, l as u64, k as u64]);
            let v = draw_channel(lsfc.get(l, k), bases.get(l, k), &mut rng);
            h.get_mut(l, k).copy_from_slice(&v);
        }
    }
    h
}

/// `a^H b`.
#[inline]
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(a, b)| a.conj() * b).sum()
}

#[inline]
pub fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn index_set_examples() {
        assert_eq!(angular_index_set(0.0, 10, PI / 8.0), vec![0]);
        assert_eq!(angular_index_set(0.0, 10, PI / 2.0), vec![0, 1, 9]);
        // Falls between grid angles; nearest index is used.
        assert_eq!(angular_index_set(0.3 * 2.0 * PI / 10.0, 10, 0.1), vec![0]);
        assert_eq!(angular_index_set(-0.1, 10, 0.05), vec![0]);
    }

    #[test]
    fn orthonormal_columns() {
        let b = SubspaceBasis::from_angle(1.0, 10, PI);
        let g = b.columns.adjoint() * &b.columns;
        for i in 0..b.dim() {
            for j in 0..b.dim() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((g[(i, j)] - Complex64::new(e, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn channel_in_span() {
        let b = SubspaceBasis::from_angle(2.0, 10, PI / 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = draw_channel(0.3, &b, &mut rng);
        let mut p = vec![Complex64::default(); 10];
        b.project(&h, &mut p);
        let res: f64 = h.iter().zip(&p).map(|(a, b)| (a - b).norm_sqr()).sum();
        assert!(res.sqrt() < 1e-12);
    }
}
