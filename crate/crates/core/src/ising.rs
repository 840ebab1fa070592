//! Finite-range Ising dynamics of spatially distributed atoms.
//!
//! Atoms interact through the soft-core kernel
//! `J_ij = J0 / (1 + d_ij^6)`, `d_ij^2 = sum_a ((r_i - r_j)_a / r_c^a)^2`,
//! and evolve under `H = -sum_{i<j} J_ij sz_i sz_j / 4` from a product state.
//! With uniform couplings `J = 2Q/(N t)` this is exactly one-axis twisting
//! with strength `Q` in the convention of [`CollectiveSpinState::oat_evolve`].
//!
//! Heisenberg-picture raising operators pick up one phase factor per
//! partner, `s+_i(t) = s+_i prod_j exp(-i x_ij sz_j)` with `x_ij = J_ij t/2`,
//! so every first and second moment is a sum of products of single-site
//! expectation values. The cost is `O(N^3)` per time point.
//!
//! [`CollectiveSpinState::oat_evolve`]: crate::spin::CollectiveSpinState::oat_evolve

use std::io::{BufRead, Write};

use nalgebra::Vector3;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dressing::{chi_pair, critical_radius, DressingParams};
use crate::error::{invalid, Error, Result};
use crate::optimize::minimize_on_interval;
use crate::seeds::rng;
use crate::spin::{squeezing_scan, wineland_extrema, MomentSet, RawMoments, SqueezingResult};

#[derive(Debug, Clone, PartialEq)]
pub struct AtomCloud {
    pub positions: Vec<Vector3<f64>>,
    /// Gaussian rms widths, or the box edge lengths for a periodic box.
    pub rms_dims: Vector3<f64>,
    /// Edge lengths when separations use the minimum-image convention.
    pub periodic_box: Option<Vector3<f64>>,
    pub seed: u64,
}

impl AtomCloud {
    /// `n_atoms` independent Gaussian positions with the given rms widths.
    pub fn sample_gaussian(n_atoms: usize, rms_dims: Vector3<f64>, seed: u64) -> Result<Self> {
        if rms_dims.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(invalid("rms_dims", "widths must be positive"));
        }
        let mut r = rng(seed);
        let positions = (0..n_atoms)
            .map(|_| {
                Vector3::new(
                    r.sample::<f64, _>(StandardNormal) * rms_dims.x,
                    r.sample::<f64, _>(StandardNormal) * rms_dims.y,
                    r.sample::<f64, _>(StandardNormal) * rms_dims.z,
                )
            })
            .collect();
        Ok(Self { positions, rms_dims, periodic_box: None, seed })
    }

    /// Uniform positions in a periodic box with the given edges.
    pub fn sample_periodic_box(n_atoms: usize, edges: Vector3<f64>, seed: u64) -> Result<Self> {
        if edges.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(invalid("edges", "box edges must be positive"));
        }
        let mut r = rng(seed);
        let positions = (0..n_atoms)
            .map(|_| Vector3::new(r.random::<f64>() * edges.x, r.random::<f64>() * edges.y, r.random::<f64>() * edges.z))
            .collect();
        Ok(Self { positions, rms_dims: edges, periodic_box: Some(edges), seed })
    }

    /// Periodic box at number density `density` whose edges are proportional
    /// to `shape`.
    pub fn sample_uniform_density(n_atoms: usize, density: f64, shape: Vector3<f64>, seed: u64) -> Result<Self> {
        if !(density > 0.0) || n_atoms == 0 {
            return Err(invalid("density", "density and atom number must be positive"));
        }
        let volume = n_atoms as f64 / density;
        let edges = shape * (volume / shape.product()).cbrt();
        Self::sample_periodic_box(n_atoms, edges, seed)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Peak density `N / ((2 pi)^{3/2} sx sy sz)` of a Gaussian cloud, or the
    /// uniform density `N / V` of a periodic box.
    pub fn peak_density(&self) -> f64 {
        let n = self.len() as f64;
        match self.periodic_box {
            Some(edges) => n / edges.product(),
            None => n / ((2.0 * std::f64::consts::PI).powf(1.5) * self.rms_dims.product()),
        }
    }

    pub fn separation(&self, i: usize, j: usize) -> Vector3<f64> {
        let mut d = self.positions[i] - self.positions[j];
        if let Some(edges) = self.periodic_box {
            for a in 0..3 {
                d[a] -= edges[a] * (d[a] / edges[a]).round();
            }
        }
        d
    }

    /// `d^2 = sum_a (delta_a / radius_a)^2` for every pair, row-major.
    fn scaled_distances(&self, radii: &Vector3<f64>) -> Vec<f64> {
        let n = self.len();
        (0..n * n)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / n, idx % n);
                if i == j {
                    0.0
                } else {
                    self.separation(i, j).component_div(radii).norm_squared()
                }
            })
            .collect()
    }

    /// Columnar text: `index,x,y,z` in metres.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "index,x,y,z")?;
        for (i, p) in self.positions.iter().enumerate() {
            writeln!(out, "{i},{:.17e},{:.17e},{:.17e}", p.x, p.y, p.z)?;
        }
        Ok(())
    }

    /// Reads positions written by [`write_csv`](Self::write_csv); the cloud
    /// is treated as non-periodic with rms widths taken from the sample.
    pub fn read_csv(input: impl BufRead) -> Result<Self> {
        let mut positions = Vec::new();
        for (line_no, line) in input.lines().enumerate() {
            let line = line?;
            if line_no == 0 || line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(Error::Format(format!("line {}: expected 4 fields", line_no + 1)));
            }
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Format(format!("line {}: {e}", line_no + 1)));
            positions.push(Vector3::new(parse(fields[1])?, parse(fields[2])?, parse(fields[3])?));
        }
        let n = positions.len().max(1) as f64;
        let mean = positions.iter().sum::<Vector3<f64>>() / n;
        let rms = positions.iter().map(|p| (p - mean).component_mul(&(p - mean))).sum::<Vector3<f64>>() / n;
        Ok(Self { positions, rms_dims: rms.map(f64::sqrt), periodic_box: None, seed: 0 })
    }
}

/// Symmetric pairwise couplings with zero diagonal (rad/s, or dimensionless
/// for a bare kernel).
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    n: usize,
    values: Vec<f64>,
    /// Contact value `J0`.
    pub peak: f64,
}

impl CouplingMatrix {
    /// From a row-major `n x n` table; symmetry and the zero diagonal are
    /// checked exactly.
    pub fn from_values(n: usize, values: Vec<f64>, peak: f64) -> Result<Self> {
        if values.len() != n * n {
            return Err(invalid("values", format!("expected {} entries, got {}", n * n, values.len())));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(invalid("values", format!("diagonal entry {i} is non-zero")));
            }
            for j in 0..i {
                if values[i * n + j] != values[j * n + i] {
                    return Err(invalid("values", format!("entries ({i},{j}) and ({j},{i}) differ")));
                }
            }
        }
        Ok(Self { n, values, peak })
    }

    /// Every pair coupled with strength `value`.
    pub fn uniform(n: usize, value: f64) -> Self {
        let values = (0..n * n).map(|idx| if idx / n == idx % n { 0.0 } else { value }).collect();
        Self { n, values, peak: value }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { n: self.n, values: self.values.iter().map(|v| v * factor).collect(), peak: self.peak * factor }
    }

    /// Same couplings with atoms relabelled by `perm` (`new[i] = old[perm[i]]`).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n;
        let values = (0..n * n).map(|idx| self.get(perm[idx / n], perm[idx % n])).collect();
        Self { n, values, peak: self.peak }
    }

    /// Mean over atoms of `sum_j J_ij`.
    pub fn mean_row_sum(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        (0..self.n).map(|i| self.row(i).iter().sum::<f64>()).sum::<f64>() / self.n as f64
    }

    /// Columnar text: `i,j,J_ij` for `i < j`.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "i,j,J_ij")?;
        for i in 0..self.n {
            for j in i + 1..self.n {
                writeln!(out, "{i},{j},{:.17e}", self.get(i, j))?;
            }
        }
        Ok(())
    }
}

/// Dimensionless kernel `1 / (1 + d^6)` for the given per-axis radii.
pub fn soft_core_kernel(cloud: &AtomCloud, radii: &Vector3<f64>) -> Result<CouplingMatrix> {
    if radii.iter().any(|r| !(*r > 0.0)) {
        return Err(invalid("radii", "must be positive"));
    }
    let n = cloud.len();
    let values = cloud
        .scaled_distances(radii)
        .into_iter()
        .enumerate()
        .map(|(idx, d2)| if idx / n == idx % n { 0.0 } else { 1.0 / (1.0 + d2 * d2 * d2) })
        .collect();
    Ok(CouplingMatrix { n, values, peak: 1.0 })
}

/// Soft-core couplings in rad/s with `J0 = 2 chi_pair(Omega_p)`; the hint
/// sets the neighbour count inside the effective detuning.
pub fn soft_core_couplings(cloud: &AtomCloud, params: &DressingParams, n_neighbors_hint: f64) -> Result<CouplingMatrix> {
    let radii = critical_radius(params)?;
    let peak = 2.0 * chi_pair(params, params.rabi_peak, n_neighbors_hint)?;
    Ok(soft_core_kernel(cloud, &radii)?.scaled(peak))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborCount {
    /// Per-atom mean of `sum_j 1/(1 + d_ij^6)`.
    pub weighted: f64,
    /// Per-atom mean number of partners with `d_ij < 1`.
    pub hard: f64,
}

pub fn count_neighbors(cloud: &AtomCloud, radii: &Vector3<f64>) -> Result<NeighborCount> {
    if radii.iter().any(|r| !(*r > 0.0)) {
        return Err(invalid("radii", "must be positive"));
    }
    let n = cloud.len();
    if n == 0 {
        return Ok(NeighborCount { weighted: 0.0, hard: 0.0 });
    }
    let d2 = cloud.scaled_distances(radii);
    let mut weighted = 0.0;
    let mut hard = 0usize;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let v = d2[i * n + j];
                weighted += 1.0 / (1.0 + v * v * v);
                hard += usize::from(v < 1.0);
            }
        }
    }
    Ok(NeighborCount { weighted: weighted / n as f64, hard: hard as f64 / n as f64 })
}

struct SiteTables {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl SiteTables {
    fn new(couplings: &CouplingMatrix, time: f64) -> Self {
        let (sin, cos) = couplings.values.iter().map(|j| (0.5 * j * time).sin_cos()).unzip();
        Self { cos, sin }
    }
}

/// `<exp(-i x sz)>` for a site with `<sz> = c`, from `cos x` and `sin x`.
#[inline]
fn site_factor(cos: f64, sin: f64, c: f64) -> Complex64 {
    Complex64::new(cos, -c * sin)
}

#[derive(Default, Clone, Copy)]
struct Partial {
    s_plus: Complex64,
    s_plus_sq: Complex64,
    flip_flop: f64,
    s_plus_s_z: Complex64,
}

/// Exact moments after evolving `(cos(theta/2)|up> + sin(theta/2)|down>)^N`
/// for `time` under the Ising couplings.
pub fn ising_moments(couplings: &CouplingMatrix, time: f64, theta: f64) -> Result<MomentSet> {
    let n = couplings.len();
    if n == 0 {
        return Err(Error::InvalidEnsemble("ensemble must contain at least one atom".into()));
    }
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(invalid("theta", format!("{theta} is outside [0, pi]")));
    }
    let (a, b, c) = ((theta / 2.0).cos(), (theta / 2.0).sin(), theta.cos());
    let ab = a * b;
    let tables = SiteTables::new(couplings, time);
    let (cs, sn) = (&tables.cos, &tables.sin);
    let real_path = c == 0.0;

    let partials: Vec<Partial> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row = i * n;
            let factors: Vec<Complex64> = (0..n)
                .map(|j| if j == i { Complex64::new(1.0, 0.0) } else { site_factor(cs[row + j], sn[row + j], c) })
                .collect();
            // prefix/suffix products for the leave-one-out terms
            let mut prefix = vec![Complex64::new(1.0, 0.0); n + 1];
            for j in 0..n {
                prefix[j + 1] = prefix[j] * factors[j];
            }
            let mut suffix = vec![Complex64::new(1.0, 0.0); n + 1];
            for j in (0..n).rev() {
                suffix[j] = suffix[j + 1] * factors[j];
            }
            let mut p = Partial { s_plus: ab * prefix[n], ..Partial::default() };
            for k in 0..n {
                if k == i {
                    continue;
                }
                let without_k = prefix[k] * suffix[k + 1];
                let z_factor = Complex64::new(c * cs[row + k], -sn[row + k]);
                p.s_plus_s_z += ab * z_factor * without_k;
            }
            for k in i + 1..n {
                let rk = k * n;
                if real_path {
                    let mut sum_prod = 1.0;
                    let mut diff_prod = 1.0;
                    for j in 0..n {
                        if j == i || j == k {
                            continue;
                        }
                        let (c1, s1, c2, s2) = (cs[row + j], sn[row + j], cs[rk + j], sn[rk + j]);
                        sum_prod *= c1 * c2 - s1 * s2;
                        diff_prod *= c1 * c2 + s1 * s2;
                    }
                    p.s_plus_sq += Complex64::new(2.0 * ab * ab * sum_prod, 0.0);
                    p.flip_flop += 2.0 * ab * ab * diff_prod;
                } else {
                    let mut sum_prod = Complex64::new(1.0, 0.0);
                    let mut diff_prod = Complex64::new(1.0, 0.0);
                    for j in 0..n {
                        if j == i || j == k {
                            continue;
                        }
                        let (c1, s1, c2, s2) = (cs[row + j], sn[row + j], cs[rk + j], sn[rk + j]);
                        sum_prod *= site_factor(c1 * c2 - s1 * s2, s1 * c2 + c1 * s2, c);
                        diff_prod *= site_factor(c1 * c2 + s1 * s2, s1 * c2 - c1 * s2, c);
                    }
                    p.s_plus_sq += 2.0 * ab * ab * sum_prod;
                    p.flip_flop += 2.0 * ab * ab * diff_prod.re;
                }
            }
            p
        })
        .collect();

    let mut total = Partial::default();
    for p in &partials {
        total.s_plus += p.s_plus;
        total.s_plus_sq += p.s_plus_sq;
        total.flip_flop += p.flip_flop;
        total.s_plus_s_z += p.s_plus_s_z;
    }
    let nf = n as f64;
    let s_z_sq = nf / 4.0 + nf * (nf - 1.0) * c * c / 4.0;
    Ok(RawMoments {
        n_atoms: n,
        s_plus: total.s_plus,
        s_z: nf * c / 2.0,
        s_z_sq,
        s_plus_sq: total.s_plus_sq,
        transverse_sq: 0.5 * nf + total.flip_flop,
        s_plus_s_z_sym: total.s_plus_s_z,
    }
    .into_moments())
}

/// Squeezing scan at each time on a monotone grid, starting from the
/// equatorial product state.
pub fn ising_squeezing_curve(couplings: &CouplingMatrix, times: &[f64], grid_points: usize) -> Result<Vec<SqueezingResult>> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("times", "time grid must be non-decreasing"));
    }
    times
        .iter()
        .map(|&t| squeezing_scan(&ising_moments(couplings, t, std::f64::consts::FRAC_PI_2)?, grid_points))
        .collect()
}

/// Minimum over `[0, t_max]` of the optimal-quadrature Wineland parameter:
/// `(time, xi2_min)`. The time axis is scanned on `grid` points and the best
/// bracket refined by golden section.
pub fn min_squeezing_over_time(couplings: &CouplingMatrix, t_max: f64, grid: usize) -> Result<(f64, f64)> {
    let mut failure = None;
    let best = minimize_on_interval(
        |t| match ising_moments(couplings, t, std::f64::consts::FRAC_PI_2).and_then(|m| wineland_extrema(&m)) {
            Ok((lo, _)) => lo,
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        },
        0.0,
        t_max,
        grid,
        1e-6 * t_max,
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(best),
    }
}
