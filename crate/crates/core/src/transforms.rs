//! Invertible transforms behind the DWT-DCT-SVD scheme.

use crate::error::{Error, Result};
use crate::imagecore::Plane;

/// One-level orthonormal Haar decomposition.
///
/// `width`/`height` record the size of the source plane so that the inverse
/// can crop away edge-replication padding added for odd dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandSet {
    pub ll: Plane,
    pub lh: Plane,
    pub hl: Plane,
    pub hh: Plane,
    pub width: usize,
    pub height: usize,
}

impl SubbandSet {
    pub fn energy(&self) -> f64 {
        self.ll.energy() + self.lh.energy() + self.hl.energy() + self.hh.energy()
    }
}

/// Replicates the last row/column until the plane is `w` × `h`.
pub fn pad_edge(p: &Plane, w: usize, h: usize) -> Plane {
    debug_assert!(w >= p.width && h >= p.height);
    let mut out = Plane::zeros(w, h);
    for y in 0..h {
        let sy = y.min(p.height - 1);
        for x in 0..w {
            out.set(x, y, p.at(x.min(p.width - 1), sy));
        }
    }
    out
}

fn crop(p: &Plane, w: usize, h: usize) -> Plane {
    if p.width == w && p.height == h {
        return p.clone();
    }
    let mut out = Plane::zeros(w, h);
    for y in 0..h {
        out.data[y * w..(y + 1) * w].copy_from_slice(&p.data[y * p.width..y * p.width + w]);
    }
    out
}

pub fn dwt_haar_forward(p: &Plane) -> Result<SubbandSet> {
    if p.width == 0 || p.height == 0 {
        return Err(Error::invalid("cannot transform an empty plane"));
    }
    let (w, h) = (p.width + p.width % 2, p.height + p.height % 2);
    let padded;
    let src = if (w, h) == (p.width, p.height) {
        p
    } else {
        padded = pad_edge(p, w, h);
        &padded
    };
    let (hw, hh) = (w / 2, h / 2);
    let mut ll = Plane::zeros(hw, hh);
    let mut lh = Plane::zeros(hw, hh);
    let mut hl = Plane::zeros(hw, hh);
    let mut hh_band = Plane::zeros(hw, hh);
    for y in 0..hh {
        for x in 0..hw {
            let a = src.at(2 * x, 2 * y);
            let b = src.at(2 * x + 1, 2 * y);
            let c = src.at(2 * x, 2 * y + 1);
            let d = src.at(2 * x + 1, 2 * y + 1);
            ll.set(x, y, 0.5 * (a + b + c + d));
            hl.set(x, y, 0.5 * (a - b + c - d));
            lh.set(x, y, 0.5 * (a + b - c - d));
            hh_band.set(x, y, 0.5 * (a - b - c + d));
        }
    }
    Ok(SubbandSet { ll, lh, hl, hh: hh_band, width: p.width, height: p.height })
}

pub fn dwt_haar_inverse(s: &SubbandSet) -> Result<Plane> {
    let (hw, hh) = (s.ll.width, s.ll.height);
    for band in [&s.lh, &s.hl, &s.hh] {
        if band.width != hw || band.height != hh {
            return Err(Error::DimensionMismatch("subbands differ in size".into()));
        }
    }
    if hw == 0 || hh == 0 || s.width > 2 * hw || s.height > 2 * hh {
        return Err(Error::invalid("subband set does not cover the recorded source size"));
    }
    let mut out = Plane::zeros(2 * hw, 2 * hh);
    for y in 0..hh {
        for x in 0..hw {
            let (l, v, hz, d) = (s.ll.at(x, y), s.lh.at(x, y), s.hl.at(x, y), s.hh.at(x, y));
            out.set(2 * x, 2 * y, 0.5 * (l + hz + v + d));
            out.set(2 * x + 1, 2 * y, 0.5 * (l - hz + v - d));
            out.set(2 * x, 2 * y + 1, 0.5 * (l + hz - v - d));
            out.set(2 * x + 1, 2 * y + 1, 0.5 * (l - hz - v + d));
        }
    }
    Ok(crop(&out, s.width, s.height))
}

/// Orthonormal DCT-II basis for `b`-point transforms.
#[derive(Debug, Clone)]
pub struct DctBasis {
    size: usize,
    // row k holds basis vector k
    m: Vec<f64>,
}

impl DctBasis {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::invalid("DCT size must be positive"));
        }
        let n = size as f64;
        let mut m = vec![0.0; size * size];
        for k in 0..size {
            let alpha = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            for i in 0..size {
                m[k * size + i] = alpha * (std::f64::consts::PI * (2 * i + 1) as f64 * k as f64 / (2.0 * n)).cos();
            }
        }
        Ok(Self { size, m })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Entry `i` of basis vector `k`.
    #[inline]
    pub fn coefficient(&self, k: usize, i: usize) -> f64 {
        self.m[k * self.size + i]
    }

    fn check(&self, p: &Plane) -> Result<()> {
        if p.width != p.height {
            return Err(Error::DimensionMismatch(format!("DCT block must be square, got {}x{}", p.width, p.height)));
        }
        if p.width != self.size {
            return Err(Error::DimensionMismatch(format!("expected {0}x{0} block, got {1}x{1}", self.size, p.width)));
        }
        Ok(())
    }

    /// `C · X · Cᵀ`
    pub fn forward(&self, block: &Plane) -> Result<Plane> {
        self.check(block)?;
        Ok(self.sandwich(block, false))
    }

    /// `Cᵀ · Y · C`
    pub fn inverse(&self, coeffs: &Plane) -> Result<Plane> {
        self.check(coeffs)?;
        Ok(self.sandwich(coeffs, true))
    }

    fn sandwich(&self, x: &Plane, transpose: bool) -> Plane {
        let b = self.size;
        let c = |r: usize, col: usize| if transpose { self.m[col * b + r] } else { self.m[r * b + col] };
        let mut tmp = vec![0.0; b * b];
        for r in 0..b {
            for col in 0..b {
                tmp[r * b + col] = (0..b).map(|k| c(r, k) * x.data[k * b + col]).sum();
            }
        }
        let mut out = Plane::zeros(b, b);
        for r in 0..b {
            for col in 0..b {
                out.data[r * b + col] = (0..b).map(|k| tmp[r * b + k] * c(col, k)).sum();
            }
        }
        out
    }
}

/// Orthonormal 2-D DCT-II of a square block.
pub fn dct2_forward(block: &Plane) -> Result<Plane> {
    if block.width != block.height {
        return Err(Error::DimensionMismatch(format!(
            "DCT block must be square, got {}x{}",
            block.width, block.height
        )));
    }
    DctBasis::new(block.width)?.forward(block)
}

/// Inverse of [`dct2_forward`] (2-D DCT-III).
pub fn dct2_inverse(coeffs: &Plane) -> Result<Plane> {
    if coeffs.width != coeffs.height {
        return Err(Error::DimensionMismatch(format!(
            "DCT block must be square, got {}x{}",
            coeffs.width, coeffs.height
        )));
    }
    DctBasis::new(coeffs.width)?.inverse(coeffs)
}

/// Thin singular value decomposition `m = u · diag(s) · vᵀ`.
///
/// For an `r × c` input with `p = min(r, c)`: `u` is `r × p`, `v` is `c × p`
/// (both row-major planes, `width` = number of columns) and `s` has length
/// `p`, sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdTriple {
    pub u: Plane,
    pub s: Vec<f64>,
    pub v: Plane,
}

impl SvdTriple {
    pub fn reconstruct(&self) -> Plane {
        let (rows, cols, p) = (self.u.height, self.v.height, self.s.len());
        let mut out = Plane::zeros(cols, rows);
        for i in 0..rows {
            for j in 0..cols {
                out.data[i * cols + j] = (0..p).map(|k| self.u.at(k, i) * self.s[k] * self.v.at(k, j)).sum();
            }
        }
        out
    }
}

pub const SVD_MAX_DIM: usize = 16;

/// One-sided Jacobi SVD for small matrices (at most 16 × 16).
pub fn svd_small(m: &Plane) -> Result<SvdTriple> {
    if m.width == 0 || m.height == 0 {
        return Err(Error::invalid("empty matrix"));
    }
    if m.width > SVD_MAX_DIM || m.height > SVD_MAX_DIM {
        return Err(Error::invalid(format!("svd_small supports up to {SVD_MAX_DIM}x{SVD_MAX_DIM}")));
    }
    if m.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if m.height >= m.width {
        jacobi_tall(m)
    } else {
        let t = transpose(m);
        let SvdTriple { u, s, v } = jacobi_tall(&t)?;
        Ok(SvdTriple { u: v, s, v: u })
    }
}

fn transpose(m: &Plane) -> Plane {
    let mut t = Plane::zeros(m.height, m.width);
    for y in 0..m.height {
        for x in 0..m.width {
            t.set(y, x, m.at(x, y));
        }
    }
    t
}

// Requires rows >= cols.
fn jacobi_tall(m: &Plane) -> Result<SvdTriple> {
    let (rows, cols) = (m.height, m.width);
    // Column-major working copies.
    let mut a: Vec<Vec<f64>> = (0..cols).map(|j| (0..rows).map(|i| m.at(j, i)).collect()).collect();
    let mut v: Vec<Vec<f64>> = (0..cols).map(|j| (0..cols).map(|i| if i == j { 1.0 } else { 0.0 }).collect()).collect();

    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = dot(&a[p], &a[p]);
                let beta = dot(&a[q], &a[q]);
                let gamma = dot(&a[p], &a[q]);
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let (ap, aq) = (a[p][i], a[q][i]);
                    a[p][i] = c * ap - s * aq;
                    a[q][i] = s * ap + c * aq;
                }
                for i in 0..cols {
                    let (vp, vq) = (v[p][i], v[q][i]);
                    v[p][i] = c * vp - s * vq;
                    v[q][i] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(f64, usize)> = a.iter().enumerate().map(|(j, col)| (dot(col, col).sqrt(), j)).collect();
    order.sort_by(|x, y| y.0.total_cmp(&x.0));

    let scale = order.first().map(|o| o.0).unwrap_or(0.0);
    let tiny = scale * 1e-13 + f64::MIN_POSITIVE;
    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(cols);
    let mut s = Vec::with_capacity(cols);
    let mut v_cols = Vec::with_capacity(cols);
    for &(sigma, j) in &order {
        v_cols.push(v[j].clone());
        if sigma > tiny {
            s.push(sigma);
            u_cols.push(a[j].iter().map(|x| x / sigma).collect());
        } else {
            s.push(0.0);
            u_cols.push(Vec::new());
        }
    }
    // Complete missing left singular vectors with an orthonormal basis.
    for k in 0..cols {
        if !u_cols[k].is_empty() {
            continue;
        }
        let mut filled = false;
        for e in 0..rows {
            let mut cand: Vec<f64> = (0..rows).map(|i| if i == e { 1.0 } else { 0.0 }).collect();
            for other in u_cols.iter().filter(|c| !c.is_empty()) {
                let proj = dot(&cand, other);
                cand.iter_mut().zip(other).for_each(|(c, o)| *c -= proj * o);
            }
            let norm = dot(&cand, &cand).sqrt();
            if norm > 1e-6 {
                u_cols[k] = cand.into_iter().map(|c| c / norm).collect();
                filled = true;
                break;
            }
        }
        debug_assert!(filled);
    }

    let mut u = Plane::zeros(cols, rows);
    let mut vm = Plane::zeros(cols, cols);
    for k in 0..cols {
        for i in 0..rows {
            u.set(k, i, u_cols[k][i]);
        }
        for i in 0..cols {
            vm.set(k, i, v_cols[k][i]);
        }
    }
    Ok(SvdTriple { u, s, v: vm })
}

/// Raster-order tiling of a plane into `size × size` blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockGrid {
    pub size: usize,
    pub blocks_x: usize,
    pub blocks_y: usize,
    pub width: usize,
    pub height: usize,
    pub blocks: Vec<Plane>,
}

impl BlockGrid {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

/// Splits `p` into blocks, edge-replicating to a multiple of `size` first.
pub fn block_partition(p: &Plane, size: usize) -> Result<BlockGrid> {
    if size == 0 {
        return Err(Error::invalid("block size must be positive"));
    }
    if p.width == 0 || p.height == 0 {
        return Err(Error::invalid("cannot partition an empty plane"));
    }
    let bx = p.width.div_ceil(size);
    let by = p.height.div_ceil(size);
    let padded = pad_edge(p, bx * size, by * size);
    let mut blocks = Vec::with_capacity(bx * by);
    for j in 0..by {
        for i in 0..bx {
            let mut b = Plane::zeros(size, size);
            for y in 0..size {
                for x in 0..size {
                    b.set(x, y, padded.at(i * size + x, j * size + y));
                }
            }
            blocks.push(b);
        }
    }
    Ok(BlockGrid { size, blocks_x: bx, blocks_y: by, width: p.width, height: p.height, blocks })
}

/// Inverse of [`block_partition`], cropping the padding away.
pub fn block_assemble(grid: &BlockGrid) -> Result<Plane> {
    let size = grid.size;
    if grid.blocks.len() != grid.blocks_x * grid.blocks_y {
        return Err(Error::DimensionMismatch("block count does not match grid".into()));
    }
    if grid.blocks.iter().any(|b| b.width != size || b.height != size) {
        return Err(Error::DimensionMismatch("block of unexpected size".into()));
    }
    let mut full = Plane::zeros(grid.blocks_x * size, grid.blocks_y * size);
    for (idx, b) in grid.blocks.iter().enumerate() {
        let (i, j) = (idx % grid.blocks_x, idx / grid.blocks_x);
        for y in 0..size {
            for x in 0..size {
                full.set(i * size + x, j * size + y, b.at(x, y));
            }
        }
    }
    Ok(crop(&full, grid.width, grid.height))
}
