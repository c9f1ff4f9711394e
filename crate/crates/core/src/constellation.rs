//! Modulation alphabets and the geometric constants the decoders need.
//!
//! Points are kept sorted lexicographically by (real, imaginary). That order
//! is the child enumeration order of every tree search and the tie-break
//! order of every argmin in the crate.

use std::cmp::Ordering;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

const MODULUS_TOL: f64 = 1e-12;

/// Finite complex alphabet with precomputed distance and energy constants.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    name: String,
    points: Vec<Complex64>,
    d_min_sq: f64,
    e_max: f64,
    e_min: f64,
    e_avg: f64,
    constant_modulus: bool,
}

impl Constellation {
    /// Build a constellation from arbitrary distinct, nonzero points.
    ///
    /// The points are re-ordered lexicographically by (re, im).
    pub fn new(name: impl Into<String>, mut points: Vec<Complex64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidConstellation("no points".into()));
        }
        if points.iter().any(|p| !p.re.is_finite() || !p.im.is_finite()) {
            return Err(Error::InvalidConstellation("non-finite point".into()));
        }
        points.sort_by(|a, b| lex_cmp(*a, *b));
        if points.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidConstellation("duplicate points".into()));
        }
        if points.iter().any(|p| p.norm_sqr() == 0.0) {
            return Err(Error::InvalidConstellation(
                "the origin cannot be a symbol (sequence energy would vanish)".into(),
            ));
        }

        let energies: Vec<f64> = points.iter().map(|p| p.norm_sqr()).collect();
        let e_max = energies.iter().copied().fold(f64::MIN, f64::max);
        let e_min = energies.iter().copied().fold(f64::MAX, f64::min);
        let e_avg = energies.iter().sum::<f64>() / energies.len() as f64;
        let constant_modulus = energies.iter().all(|e| (e - e_avg).abs() <= MODULUS_TOL * e_avg);

        let mut d_min_sq = f64::INFINITY;
        for (i, p) in points.iter().enumerate() {
            for q in &points[i + 1..] {
                d_min_sq = d_min_sq.min((p - q).norm_sqr());
            }
        }
        if points.len() == 1 {
            d_min_sq = 0.0;
        }

        Ok(Self {
            name: name.into(),
            points,
            d_min_sq,
            e_max,
            e_min,
            e_avg,
            constant_modulus,
        })
    }

    /// Antipodal {-1, +1}.
    pub fn bpsk() -> Self {
        Self::new("bpsk", vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)])
            .expect("bpsk is well formed")
    }

    /// Unit-average-energy QPSK, points (±1 ± j)/√2.
    pub fn qpsk() -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        let points = [(-a, -a), (-a, a), (a, -a), (a, a)]
            .into_iter()
            .map(|(re, im)| Complex64::new(re, im))
            .collect();
        Self::new("qpsk", points).expect("qpsk is well formed")
    }

    /// Unnormalized 16-QAM on the {±1, ±3}² grid.
    pub fn qam16() -> Self {
        let levels = [-3.0, -1.0, 1.0, 3.0];
        let points = levels
            .iter()
            .flat_map(|&re| levels.iter().map(move |&im| Complex64::new(re, im)))
            .collect();
        Self::new("16qam", points).expect("16qam is well formed")
    }

    /// Look up a built-in constellation by its CLI name.
    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Self::bpsk()),
            "qpsk" => Ok(Self::qpsk()),
            "16qam" | "qam16" | "16-qam" => Ok(Self::qam16()),
            other => Err(Error::InvalidConstellation(format!("unknown constellation '{other}'"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, index: usize) -> Complex64 {
        self.points[index]
    }

    /// Minimum squared distance between distinct points.
    pub fn d_min_sq(&self) -> f64 {
        self.d_min_sq
    }

    /// Largest squared magnitude of a point.
    pub fn e_max(&self) -> f64 {
        self.e_max
    }

    /// Smallest squared magnitude of a point.
    pub fn e_min(&self) -> f64 {
        self.e_min
    }

    /// Mean squared magnitude over the points.
    pub fn e_avg(&self) -> f64 {
        self.e_avg
    }

    pub fn is_constant_modulus(&self) -> bool {
        self.constant_modulus
    }

    /// Index of `p` if it is (numerically) one of the points.
    pub fn index_of(&self, p: Complex64) -> Option<usize> {
        self.points.iter().position(|q| (q - p).norm_sqr() <= 1e-18 * (1.0 + q.norm_sqr()))
    }

    /// Nearest point by Euclidean distance; exact ties go to the smaller index.
    pub fn nearest(&self, z: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    /// Map symbol indices to their complex values.
    pub fn symbols(&self, indices: &[usize]) -> Vec<Complex64> {
        indices.iter().map(|&i| self.points[i]).collect()
    }

    /// Index of the point `-p`, when the alphabet is closed under negation.
    pub fn negation_of(&self, index: usize) -> Option<usize> {
        self.index_of(-self.points[index])
    }

    /// Default sphere radius r² for the constant-modulus decoder: T·D_min/6.
    pub fn default_cm_radius_sq(&self, t_coh: usize) -> f64 {
        t_coh as f64 * self.d_min_sq / 6.0
    }

    /// Separation bound of the normalized metric under the expected Gram
    /// matrix: D_min·e_min² / (e_max·(e_max + e_min)).
    ///
    /// Evaluates to 2/45 for the unnormalized 16-QAM grid.
    pub fn ncm_separation_bound(&self) -> f64 {
        self.d_min_sq * self.e_min * self.e_min / (self.e_max * (self.e_max + self.e_min))
    }
}

impl fmt::Display for Constellation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

fn lex_cmp(a: Complex64, b: Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(c: &Constellation) -> (f64, f64, f64) {
        let pts = c.points();
        let mut d = f64::INFINITY;
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                if i != j {
                    let dr = pts[i].re - pts[j].re;
                    let di = pts[i].im - pts[j].im;
                    d = d.min(dr * dr + di * di);
                }
            }
        }
        let e: Vec<f64> = pts.iter().map(|p| p.re * p.re + p.im * p.im).collect();
        let e_max = e.iter().cloned().fold(0.0, f64::max);
        let e_avg = e.iter().sum::<f64>() / e.len() as f64;
        (d, e_max, e_avg)
    }

    #[test]
    fn qpsk_constants() {
        let c = Constellation::qpsk();
        assert_eq!(c.len(), 4);
        assert!((c.d_min_sq() - 2.0).abs() < 1e-12);
        assert!((c.e_max() - 1.0).abs() < 1e-12);
        assert!((c.e_avg() - 1.0).abs() < 1e-12);
        assert!(c.is_constant_modulus());
        for t in 2..40 {
            let t = t as f64;
            assert!((t * c.d_min_sq() / 2.0 - t).abs() < 1e-12);
        }
    }

    #[test]
    fn qam16_constants() {
        let c = Constellation::qam16();
        assert_eq!(c.len(), 16);
        assert_eq!(c.e_max(), 18.0);
        assert_eq!(c.d_min_sq(), 4.0);
        assert_eq!(c.e_avg(), 10.0);
        assert!(!c.is_constant_modulus());
        assert!((c.ncm_separation_bound() - 2.0 / 45.0).abs() < 1e-15);
    }

    #[test]
    fn bpsk_constants() {
        let c = Constellation::bpsk();
        assert_eq!(c.len(), 2);
        assert_eq!(c.d_min_sq(), 4.0);
        assert_eq!(c.e_avg(), 1.0);
        assert!(c.is_constant_modulus());
    }

    #[test]
    fn stored_fields_match_brute_force() {
        for c in [Constellation::bpsk(), Constellation::qpsk(), Constellation::qam16()] {
            let (d, e_max, e_avg) = brute_force(&c);
            assert_eq!(c.d_min_sq(), d, "{c}");
            assert_eq!(c.e_max(), e_max, "{c}");
            assert_eq!(c.e_avg(), e_avg, "{c}");
        }
    }

    #[test]
    fn points_are_lexicographic() {
        for c in [Constellation::bpsk(), Constellation::qpsk(), Constellation::qam16()] {
            for w in c.points().windows(2) {
                assert_eq!(lex_cmp(w[0], w[1]), Ordering::Less);
            }
        }
        assert_eq!(Constellation::bpsk().point(0), Complex64::new(-1.0, 0.0));
        assert_eq!(Constellation::qam16().point(0), Complex64::new(-3.0, -3.0));
    }

    #[test]
    fn nearest_ties_go_to_smaller_index() {
        let c = Constellation::bpsk();
        assert_eq!(c.nearest(Complex64::new(0.0, 0.0)), 0);
        assert_eq!(c.nearest(Complex64::new(0.2, 5.0)), 1);
        let q = Constellation::qpsk();
        // On the imaginary axis, equidistant from index 0 (-,-) and 2 (+,-).
        assert_eq!(q.nearest(Complex64::new(0.0, -0.5)), 0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(Constellation::new("x", vec![]).is_err());
        let p = Complex64::new(1.0, 0.0);
        assert!(Constellation::new("x", vec![p, p]).is_err());
        assert!(Constellation::new("x", vec![p, Complex64::new(0.0, 0.0)]).is_err());
        assert!(Constellation::from_name("8psk").is_err());
        assert_eq!(Constellation::from_name("16QAM").unwrap().len(), 16);
    }

    #[test]
    fn negation_closure() {
        for c in [Constellation::bpsk(), Constellation::qpsk(), Constellation::qam16()] {
            for i in 0..c.len() {
                let j = c.negation_of(i).unwrap();
                assert_eq!(c.point(j), -c.point(i));
            }
        }
    }
}
