//! Metric bookkeeping shared by the sphere decoder and the best-first search.
//!
//! Both searches must score a node with bit-identical arithmetic, otherwise
//! their visited-node counts are not comparable on exact ties.

use num_complex::Complex64;

use super::{GramDecomposition, MetricMode, Pinning};
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::linalg::UpperTriangular;

pub(crate) struct SearchTree<'a> {
    pub r: &'a UpperTriangular,
    pub points: &'a [Complex64],
    pub energies: Vec<f64>,
    pub e_max: f64,
    pub mode: MetricMode,
    pub t: usize,
    pinning: &'a Pinning,
}

impl<'a> SearchTree<'a> {
    pub fn new(
        g: &'a GramDecomposition,
        c: &'a Constellation,
        pinning: &'a Pinning,
        mode: MetricMode,
    ) -> Result<Self> {
        let t = g.t_coh();
        pinning.validate(t, c)?;
        if mode == MetricMode::ConstantModulus && !c.is_constant_modulus() {
            return Err(Error::NonConstantModulus);
        }
        Ok(Self {
            r: g.r_factor(),
            points: c.points(),
            energies: c.points().iter().map(|p| p.norm_sqr()).collect(),
            e_max: c.e_max(),
            mode,
            t,
            pinning,
        })
    }

    /// Candidate indices at `pos`, in enumeration order.
    pub fn candidates(&self, pos: usize) -> std::ops::Range<usize> {
        match self.pinning.at(pos, self.t) {
            Some(i) => i..i + 1,
            None => 0..self.points.len(),
        }
    }

    /// Σ_{k>pos} R[pos][k] s_k, the part of row `pos` fixed by the parent.
    /// `s` must hold valid symbols at positions pos+1..T.
    pub fn row_base(&self, pos: usize, s: &[Complex64]) -> Complex64 {
        let row = self.r.row(pos);
        let mut acc = Complex64::new(0.0, 0.0);
        for k in pos + 1..self.t {
            acc += row[k] * s[k];
        }
        acc
    }

    /// Unnormalized partial metric of a child.
    #[inline]
    pub fn child_metric(&self, pos: usize, base: Complex64, parent_metric: f64, sym: usize) -> f64 {
        let rpp = self.r.row(pos)[pos];
        parent_metric + (base + rpp * self.points[sym]).norm_sqr()
    }

    /// The value compared against the radius: M itself, or M divided by
    /// e_max·pos + ‖s_pos..T‖² in normalized mode.
    #[inline]
    pub fn search_key(&self, pos: usize, metric: f64, energy: f64) -> f64 {
        match self.mode {
            MetricMode::ConstantModulus => metric,
            MetricMode::Normalized => metric / (self.e_max * pos as f64 + energy),
        }
    }
}

/// Partial metrics M_{p:T} of a full sequence, for p = 0..T.
pub fn partial_metrics(r: &UpperTriangular, s: &[Complex64]) -> Vec<f64> {
    let t = r.dim();
    let mut out = vec![0.0; t];
    let mut acc = 0.0;
    for p in (0..t).rev() {
        let row = r.row(p);
        let mut v = Complex64::new(0.0, 0.0);
        for k in p..t {
            v += row[k] * s[k];
        }
        acc += v.norm_sqr();
        out[p] = acc;
    }
    out
}

/// Energy-normalized partial metrics M_{p:T} / (e_max·p + ‖s_{p:T}‖²).
pub fn normalized_partial_metrics(r: &UpperTriangular, s: &[Complex64], e_max: f64) -> Vec<f64> {
    let m = partial_metrics(r, s);
    let t = s.len();
    let mut energy = 0.0;
    let mut out = vec![0.0; t];
    for p in (0..t).rev() {
        energy += s[p].norm_sqr();
        out[p] = m[p] / (e_max * p as f64 + energy);
    }
    out
}
