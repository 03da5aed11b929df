//! Square M-QAM alphabets with per-dimension Gray labelling.
//!
//! Points are indexed by their bit label read MSB first: the upper half of
//! the label is the Gray code of the in-phase level, the lower half the Gray
//! code of the quadrature level. Levels are the odd integers
//! `{±1, ±3, …, ±(√M−1)}` scaled to unit average energy, and a zero label bit
//! selects the positive level, so `00` in QPSK is `(1+j)/√2`.

use std::f64::consts::FRAC_PI_2;
use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstellationError {
    #[error("unsupported QAM order {0} (expected 4, 16, 64 or 256)")]
    UnsupportedOrder(usize),
    #[error("bit count {len} is not a multiple of {bits_per_symbol} bits per symbol")]
    BitLength { len: usize, bits_per_symbol: usize },
}

/// One of the four open quadrants of the complex plane, counted
/// anticlockwise from the positive-real/positive-imaginary one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quadrant {
    First,
    Second,
    Third,
    Fourth,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] = [
        Quadrant::First,
        Quadrant::Second,
        Quadrant::Third,
        Quadrant::Fourth,
    ];

    /// Quadrant of `z`. Points on an axis are assigned to the quadrant
    /// anticlockwise of it (the positive real axis belongs to the first).
    pub fn of(z: Complex64) -> Quadrant {
        match (z.re >= 0.0, z.im >= 0.0) {
            (true, true) => Quadrant::First,
            (false, true) => Quadrant::Second,
            (false, false) => Quadrant::Third,
            (true, false) => Quadrant::Fourth,
        }
    }

    /// Zero-based position, `First` is 0.
    pub fn index(self) -> usize {
        self as usize
    }

    /// `j^k` for the `k`-th quadrant: rotates the first quadrant onto this one.
    pub fn rotation(self) -> Complex64 {
        match self {
            Quadrant::First => Complex64::new(1.0, 0.0),
            Quadrant::Second => Complex64::new(0.0, 1.0),
            Quadrant::Third => Complex64::new(-1.0, 0.0),
            Quadrant::Fourth => Complex64::new(0.0, -1.0),
        }
    }

    /// Unit-modulus QPSK anchor on the `π/4 + kπ/2` diagonal.
    pub fn qpsk_anchor(self) -> Complex64 {
        Complex64::from_polar(1.0, FRAC_PI_4 + self.index() as f64 * FRAC_PI_2)
    }
}

/// Hard decisions for a block of received symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct HardDecisions {
    pub indices: Vec<usize>,
    pub points: Vec<Complex64>,
    pub bits: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    order: usize,
    bits_per_symbol: usize,
    side: usize,
    scale: f64,
    points: Vec<Complex64>,
}

fn gray(k: usize) -> usize {
    k ^ (k >> 1)
}

fn gray_inverse(mut g: usize) -> usize {
    let mut k = g;
    while g > 0 {
        g >>= 1;
        k ^= g;
    }
    k
}

impl Constellation {
    pub fn new(order: usize) -> Result<Self, ConstellationError> {
        if !matches!(order, 4 | 16 | 64 | 256) {
            return Err(ConstellationError::UnsupportedOrder(order));
        }
        let bits_per_symbol = order.trailing_zeros() as usize;
        let half = bits_per_symbol / 2;
        let side = 1usize << half;
        let scale = 1.0 / (2.0 * (order as f64 - 1.0) / 3.0).sqrt();
        let level = |g: usize| ((side - 1) as f64 - 2.0 * gray_inverse(g) as f64) * scale;
        let mask = side - 1;
        let points = (0..order)
            .map(|idx| Complex64::new(level(idx >> half), level(idx & mask)))
            .collect();
        Ok(Self {
            order,
            bits_per_symbol,
            side,
            scale,
            points,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    /// Points in canonical (bit-label) order.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, index: usize) -> Complex64 {
        self.points[index]
    }

    /// Distance between horizontally or vertically adjacent points.
    pub fn min_distance(&self) -> f64 {
        2.0 * self.scale
    }

    /// The maximum-modulus point of quadrant `q`.
    pub fn corner(&self, q: Quadrant) -> Complex64 {
        let a = (self.side - 1) as f64 * self.scale;
        Complex64::new(a, a) * q.rotation()
    }

    /// Arithmetic mean of the `M/4` points lying in quadrant `q`.
    pub fn quadrant_centroid(&self, q: Quadrant) -> Complex64 {
        // Mean of the positive odd levels 1, 3, …, √M−1 is √M/2.
        let a = (self.side / 2) as f64 * self.scale;
        Complex64::new(a, a) * q.rotation()
    }

    /// Label bits (MSB first) of the point at `index`.
    pub fn bits_of(&self, index: usize) -> impl Iterator<Item = bool> + '_ {
        (0..self.bits_per_symbol)
            .rev()
            .map(move |b| (index >> b) & 1 == 1)
    }

    pub fn modulate(&self, bits: &[bool]) -> Result<Vec<Complex64>, ConstellationError> {
        if bits.len() % self.bits_per_symbol != 0 {
            return Err(ConstellationError::BitLength {
                len: bits.len(),
                bits_per_symbol: self.bits_per_symbol,
            });
        }
        Ok(bits
            .chunks_exact(self.bits_per_symbol)
            .map(|group| {
                let idx = group.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
                self.points[idx]
            })
            .collect())
    }

    // Slices one real dimension to a Gray label. Ties go to the smaller label,
    // which matches the smallest-index rule of a full nearest-point search
    // because the in-phase label occupies the high bits.
    fn slice(&self, u: f64) -> usize {
        let max = (self.side - 1) as f64;
        let k = ((max - u / self.scale) / 2.0).clamp(0.0, max);
        if k.is_nan() {
            return gray(0);
        }
        let lo = k.floor();
        let frac = k - lo;
        let lo = lo as usize;
        let hi = (lo + 1).min(self.side - 1);
        if frac < 0.5 {
            gray(lo)
        } else if frac > 0.5 {
            gray(hi)
        } else {
            gray(lo).min(gray(hi))
        }
    }

    /// Index of the nearest point in Euclidean distance.
    pub fn decide(&self, z: Complex64) -> usize {
        let half = self.bits_per_symbol / 2;
        (self.slice(z.re) << half) | self.slice(z.im)
    }

    pub fn demodulate(&self, symbols: &[Complex64]) -> HardDecisions {
        let mut out = HardDecisions {
            indices: Vec::with_capacity(symbols.len()),
            points: Vec::with_capacity(symbols.len()),
            bits: Vec::with_capacity(symbols.len() * self.bits_per_symbol),
        };
        for &z in symbols {
            let idx = self.decide(z);
            out.indices.push(idx);
            out.points.push(self.points[idx]);
            out.bits.extend(self.bits_of(idx));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ORDERS: [usize; 4] = [4, 16, 64, 256];

    fn brute_nearest(c: &Constellation, z: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in c.points().iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    #[test]
    fn rejects_unsupported_orders() {
        for m in [0, 2, 8, 32, 128, 1024] {
            assert_eq!(
                Constellation::new(m),
                Err(ConstellationError::UnsupportedOrder(m))
            );
        }
    }

    #[test]
    fn qpsk_zero_bits_map_to_first_quadrant() {
        let c = Constellation::new(4).unwrap();
        let s = c.modulate(&[false, false]).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s[0] - Complex64::new(r, r)).norm() < 1e-15);
    }

    #[test]
    fn bit_length_mismatch() {
        let c = Constellation::new(64).unwrap();
        assert_eq!(
            c.modulate(&[true; 7]),
            Err(ConstellationError::BitLength {
                len: 7,
                bits_per_symbol: 6
            })
        );
    }

    #[test]
    fn unit_average_energy() {
        for m in ORDERS {
            let c = Constellation::new(m).unwrap();
            let e: f64 = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / m as f64;
            assert!((e - 1.0).abs() < 1e-12, "M={m}: {e}");
        }
        // 64-QAM before scaling: mean of re²+im² over odd levels ±1..±7 is 42.
        let raw: f64 = [1.0f64, 3.0, 5.0, 7.0].iter().map(|l| l * l).sum::<f64>() / 4.0;
        assert_eq!(2.0 * raw, 42.0);
    }

    #[test]
    fn quadrants_are_balanced_and_off_axis() {
        for m in ORDERS {
            let c = Constellation::new(m).unwrap();
            let mut count = [0usize; 4];
            for p in c.points() {
                assert!(p.re != 0.0 && p.im != 0.0);
                count[Quadrant::of(*p).index()] += 1;
            }
            assert_eq!(count, [m / 4; 4]);
        }
    }

    #[test]
    fn corners_and_centroids_match_enumeration() {
        for m in ORDERS {
            let c = Constellation::new(m).unwrap();
            let c1 = c.corner(Quadrant::First);
            assert!(c1.re > 0.0 && c1.im > 0.0);
            for q in Quadrant::ALL {
                let members: Vec<_> = c
                    .points()
                    .iter()
                    .copied()
                    .filter(|p| Quadrant::of(*p) == q)
                    .collect();
                let max = members
                    .iter()
                    .copied()
                    .max_by(|a, b| a.norm_sqr().partial_cmp(&b.norm_sqr()).unwrap())
                    .unwrap();
                assert!((max - c.corner(q)).norm() < 1e-12);
                assert!((c.corner(q) - c1 * q.rotation()).norm() < 1e-12);
                let mean = members.iter().sum::<Complex64>() / members.len() as f64;
                assert!((mean - c.quadrant_centroid(q)).norm() < 1e-12);
                let rotated = c.quadrant_centroid(Quadrant::First) * q.rotation();
                assert!((c.quadrant_centroid(q) - rotated).norm() < 1e-12);
            }
        }
        let c = Constellation::new(64).unwrap();
        let want = Complex64::new(4.0, 4.0) / 42f64.sqrt();
        assert!((c.quadrant_centroid(Quadrant::First) - want).norm() < 1e-12);
    }

    #[test]
    fn qpsk_anchors_on_diagonals() {
        for q in Quadrant::ALL {
            let a = q.qpsk_anchor();
            assert!((a.norm() - 1.0).abs() < 1e-15);
            let want = FRAC_PI_4 + q.index() as f64 * FRAC_PI_2;
            let got = a.arg().rem_euclid(2.0 * std::f64::consts::PI);
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn exhaustive_round_trip() {
        for m in ORDERS {
            let c = Constellation::new(m).unwrap();
            for idx in 0..m {
                let bits: Vec<bool> = c.bits_of(idx).collect();
                let s = c.modulate(&bits).unwrap();
                let d = c.demodulate(&s);
                assert_eq!(d.indices, vec![idx]);
                assert_eq!(d.bits, bits);
                assert_eq!(d.points, s);
            }
        }
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        for m in ORDERS {
            let c = Constellation::new(m).unwrap();
            let dmin = c.min_distance();
            for i in 0..m {
                for j in (i + 1)..m {
                    let d = (c.point(i) - c.point(j)).norm();
                    if (d - dmin).abs() < 1e-9 {
                        assert_eq!((i ^ j).count_ones(), 1, "M={m} {i} {j}");
                    }
                }
            }
        }
    }

    #[test]
    fn perturbed_points_decide_back() {
        let c = Constellation::new(64).unwrap();
        let r = 0.99 * c.min_distance() / 2.0;
        for (i, p) in c.points().iter().enumerate() {
            for k in 0..8 {
                let z = p + Complex64::from_polar(r, k as f64 * 0.7);
                assert_eq!(c.decide(z), i);
            }
        }
    }

    #[test]
    fn ties_resolve_to_smallest_index() {
        for m in ORDERS {
            let c = Constellation::new(m).unwrap();
            let z = Complex64::new(0.0, 0.0);
            assert_eq!(c.decide(z), brute_nearest(&c, z));
        }
    }

    #[test]
    fn matches_brute_force_on_random_symbols() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for m in ORDERS {
            let c = Constellation::new(m).unwrap();
            for _ in 0..1000 {
                let z = Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
                assert_eq!(c.decide(z), brute_nearest(&c, z));
            }
        }
    }

    #[test]
    fn non_finite_input_is_total() {
        let c = Constellation::new(16).unwrap();
        for z in [
            Complex64::new(f64::NAN, 0.0),
            Complex64::new(f64::INFINITY, f64::NEG_INFINITY),
        ] {
            assert!(c.decide(z) < 16);
        }
    }
}
