//! Quantile-format forecasts and their tail-extended piecewise-linear density
//! representative.

use rand::{Rng, RngCore};

use crate::error::{Error, Rejection, Result};
use crate::families::{Law, Support};

/// Identifies one submitted forecast.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ForecastMeta {
    pub forecaster: String,
    pub location: String,
    pub date: String,
    pub horizon: String,
}

/// Quantile values at ascending probability levels.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileForecast {
    pub levels: Vec<f64>,
    pub values: Vec<f64>,
    pub meta: ForecastMeta,
}

impl QuantileForecast {
    pub fn new(levels: Vec<f64>, values: Vec<f64>) -> Self {
        QuantileForecast {
            levels,
            values,
            meta: ForecastMeta::default(),
        }
    }

    pub fn with_meta(mut self, meta: ForecastMeta) -> Self {
        self.meta = meta;
        self
    }
}

/// A forecast that passed [`validate_quantiles`].
#[derive(Debug, Clone, PartialEq)]
pub struct ValidQuantiles(QuantileForecast);

impl ValidQuantiles {
    pub fn inner(&self) -> &QuantileForecast {
        &self.0
    }
}

/// Accepts a forecast iff its levels are strictly ascending in (0, 1), there
/// are at least four of them, and the values strictly increase. Equal
/// neighbours are atoms, decreasing neighbours are crossings.
pub fn validate_quantiles(q: QuantileForecast) -> std::result::Result<ValidQuantiles, Rejection> {
    if q.levels.len() != q.values.len() {
        return Err(Rejection::LengthMismatch);
    }
    if q.levels.len() < 4 {
        return Err(Rejection::TooFewLevels(q.levels.len()));
    }
    let levels_ok = q.levels.iter().all(|&t| t > 0.0 && t < 1.0)
        && q.levels.windows(2).all(|w| w[0] < w[1]);
    if !levels_ok {
        return Err(Rejection::InvalidLevels);
    }
    if q.values.iter().any(|v| !v.is_finite()) {
        return Err(Rejection::NonFiniteValue);
    }
    for i in 0..q.values.len() - 1 {
        let (lower_level, upper_level) = (q.levels[i], q.levels[i + 1]);
        if q.values[i + 1] == q.values[i] {
            return Err(Rejection::Atom {
                lower_level,
                upper_level,
            });
        }
        if q.values[i + 1] < q.values[i] {
            return Err(Rejection::Crossing {
                lower_level,
                upper_level,
            });
        }
    }
    Ok(ValidQuantiles(q))
}

/// Linear density piece on [a, b] running from `left` to `right`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Piece {
    a: f64,
    b: f64,
    left: f64,
    right: f64,
    /// CDF at `a`.
    base: f64,
}

impl Piece {
    fn width(&self) -> f64 {
        self.b - self.a
    }

    fn slope(&self) -> f64 {
        (self.right - self.left) / self.width()
    }

    fn pdf(&self, x: f64) -> f64 {
        self.left + self.slope() * (x - self.a)
    }

    fn mass_to(&self, x: f64) -> f64 {
        let t = x - self.a;
        self.left * t + 0.5 * self.slope() * t * t
    }

    /// Offset t with mass_to(a + t) = c.
    fn invert(&self, c: f64) -> f64 {
        let s = self.slope();
        let disc = (self.left * self.left + 2.0 * s * c).max(0.0);
        let denom = self.left + disc.sqrt();
        if denom > 0.0 {
            (2.0 * c / denom).min(self.width())
        } else {
            0.0
        }
    }

    /// (∫ (x−c) f, ∫ (x−c)² f) over the piece.
    fn moments_about(&self, c: f64) -> (f64, f64) {
        let h = self.width();
        let s = self.slope();
        let d = self.left;
        let m0 = d * h + s * h * h / 2.0;
        let m1 = d * h * h / 2.0 + s * h * h * h / 3.0;
        let m2 = d * h * h * h / 3.0 + s * h * h * h * h / 4.0;
        let a = self.a - c;
        (a * m0 + m1, a * a * m0 + 2.0 * a * m1 + m2)
    }
}

/// The representative of a quantile forecast: exponential tails below the
/// lowest and above the highest quantile, piecewise-linear density between.
#[derive(Debug, Clone, PartialEq)]
pub struct TailExtendedDensity {
    pieces: Vec<Piece>,
    levels: Vec<f64>,
    knots: Vec<f64>,
    lower_rate: f64,
    upper_rate: f64,
    meta: ForecastMeta,
}

/// Converts a validated forecast to its tail-extended density.
///
/// Tail rates come from the two outermost quantiles on each side. Interior
/// knot densities follow the recursion f_{i+1} = 2Δτ/Δq − f_i from the
/// tail-continuous seed f_1 = λ_lo·τ_1, so each segment carries exactly its
/// probability Δτ; a negative knot value is clamped to zero and that segment
/// rescaled to keep its mass.
pub fn quantile_to_distribution(q: &ValidQuantiles) -> Result<TailExtendedDensity> {
    let QuantileForecast {
        levels,
        values,
        meta,
    } = q.inner();
    let m = levels.len();
    for w in values.windows(2) {
        if w[1] - w[0] < 1e-12 {
            return Err(Error::DegenerateSpacing {
                lower: w[0],
                upper: w[1],
            });
        }
    }
    let lower_rate = (levels[1] / levels[0]).ln() / (values[1] - values[0]);
    let upper_rate =
        ((1.0 - levels[m - 2]) / (1.0 - levels[m - 1])).ln() / (values[m - 1] - values[m - 2]);

    let mut pieces = Vec::with_capacity(m - 1);
    let mut f = lower_rate * levels[0];
    for i in 0..m - 1 {
        let (a, b) = (values[i], values[i + 1]);
        let mass = levels[i + 1] - levels[i];
        let h = b - a;
        let mut next = 2.0 * mass / h - f;
        let mut left = f;
        if next < 0.0 {
            // Clamp, then restore the segment mass by rescaling the triangle.
            next = 0.0;
            left = 2.0 * mass / h;
        }
        pieces.push(Piece {
            a,
            b,
            left,
            right: next,
            base: levels[i],
        });
        f = next;
    }
    Ok(TailExtendedDensity {
        pieces,
        levels: levels.clone(),
        knots: values.clone(),
        lower_rate,
        upper_rate,
        meta: meta.clone(),
    })
}

impl TailExtendedDensity {
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn lower_rate(&self) -> f64 {
        self.lower_rate
    }

    pub fn upper_rate(&self) -> f64 {
        self.upper_rate
    }

    pub fn meta(&self) -> &ForecastMeta {
        &self.meta
    }

    /// Knot densities, left and right limits at each interior knot.
    pub fn knot_densities(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.knots.len());
        let mut prev = self.lower_rate * self.levels[0];
        for p in &self.pieces {
            out.push((prev, p.left));
            prev = p.right;
        }
        let m = self.levels.len();
        out.push((prev, self.upper_rate * (1.0 - self.levels[m - 1])));
        out
    }

    /// Law of a + b·X.
    pub fn affine(&self, a: f64, b: f64) -> Self {
        TailExtendedDensity {
            pieces: self
                .pieces
                .iter()
                .map(|p| Piece {
                    a: a + b * p.a,
                    b: a + b * p.b,
                    left: p.left / b,
                    right: p.right / b,
                    base: p.base,
                })
                .collect(),
            levels: self.levels.clone(),
            knots: self.knots.iter().map(|q| a + b * q).collect(),
            lower_rate: self.lower_rate / b,
            upper_rate: self.upper_rate / b,
            meta: self.meta.clone(),
        }
    }

    fn lo_knot(&self) -> f64 {
        self.knots[0]
    }

    fn hi_knot(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    fn tau_lo(&self) -> f64 {
        self.levels[0]
    }

    fn tau_hi(&self) -> f64 {
        self.levels[self.levels.len() - 1]
    }

    fn piece_at(&self, x: f64) -> &Piece {
        let i = self.knots.partition_point(|&q| q <= x);
        &self.pieces[i.saturating_sub(1).min(self.pieces.len() - 1)]
    }

    /// (mean, variance) in closed form.
    fn moments(&self) -> (f64, f64) {
        let c = self.knots[self.knots.len() / 2];
        let (lo, hi) = (self.lo_knot() - c, self.hi_knot() - c);
        let (rl, ru) = (self.lower_rate, self.upper_rate);
        // Exponential tails: X = q₁ − E/λ below, q_m + E/λ above.
        let ml = lo - 1.0 / rl;
        let mu = hi + 1.0 / ru;
        let mut s1 = self.tau_lo() * ml + (1.0 - self.tau_hi()) * mu;
        let mut s2 = self.tau_lo() * (ml * ml + 1.0 / (rl * rl))
            + (1.0 - self.tau_hi()) * (mu * mu + 1.0 / (ru * ru));
        for p in &self.pieces {
            let (a, b) = p.moments_about(c);
            s1 += a;
            s2 += b;
        }
        (c + s1, (s2 - s1 * s1).max(0.0))
    }
}

impl Law for TailExtendedDensity {
    fn pdf(&self, x: f64) -> f64 {
        if x < self.lo_knot() {
            self.tau_lo() * self.lower_rate * (self.lower_rate * (x - self.lo_knot())).exp()
        } else if x > self.hi_knot() {
            (1.0 - self.tau_hi()) * self.upper_rate * (-self.upper_rate * (x - self.hi_knot())).exp()
        } else {
            self.piece_at(x).pdf(x).max(0.0)
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        if x < self.lo_knot() {
            self.tau_lo() * (self.lower_rate * (x - self.lo_knot())).exp()
        } else if x >= self.hi_knot() {
            1.0 - self.sf(x)
        } else {
            let p = self.piece_at(x);
            p.base + p.mass_to(x)
        }
    }

    fn sf(&self, x: f64) -> f64 {
        if x >= self.hi_knot() {
            (1.0 - self.tau_hi()) * (-self.upper_rate * (x - self.hi_knot())).exp()
        } else {
            1.0 - self.cdf(x)
        }
    }

    fn quantile(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return f64::NEG_INFINITY;
        }
        if u >= 1.0 {
            return f64::INFINITY;
        }
        if u < self.tau_lo() {
            return self.lo_knot() + (u / self.tau_lo()).ln() / self.lower_rate;
        }
        if u > self.tau_hi() {
            return self.hi_knot() - ((1.0 - u) / (1.0 - self.tau_hi())).ln() / self.upper_rate;
        }
        let i = self.levels.partition_point(|&t| t <= u);
        let p = &self.pieces[i.saturating_sub(1).min(self.pieces.len() - 1)];
        p.a + p.invert(u - p.base)
    }

    fn mean(&self) -> f64 {
        self.moments().0
    }

    fn variance(&self) -> f64 {
        self.moments().1
    }

    fn support(&self) -> Support {
        Support::real_line()
    }

    fn kinks(&self) -> Vec<f64> {
        self.knots.clone()
    }

    fn center(&self) -> f64 {
        self.mean()
    }

    fn spread(&self) -> f64 {
        self.variance().sqrt()
    }

    fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        let u: f64 = rng.random();
        self.quantile(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{expect, make_family};
    use crate::quad::QuadConfig;

    fn from_law(law: &dyn Law, levels: &[f64]) -> TailExtendedDensity {
        let values = levels.iter().map(|&t| law.quantile(t)).collect();
        let q = validate_quantiles(QuantileForecast::new(levels.to_vec(), values)).unwrap();
        quantile_to_distribution(&q).unwrap()
    }

    #[test]
    fn validation_outcomes() {
        let lv = vec![0.1, 0.25, 0.5, 0.75];
        assert!(validate_quantiles(QuantileForecast::new(lv.clone(), vec![0.0, 1.0, 2.0, 3.0])).is_ok());
        assert!(matches!(
            validate_quantiles(QuantileForecast::new(lv.clone(), vec![1.0, 2.0, 2.0, 3.0])),
            Err(Rejection::Atom { .. })
        ));
        assert!(matches!(
            validate_quantiles(QuantileForecast::new(lv.clone(), vec![1.0, 3.0, 2.0, 4.0])),
            Err(Rejection::Crossing { .. })
        ));
        assert!(matches!(
            validate_quantiles(QuantileForecast::new(vec![0.25, 0.5, 0.75], vec![1.0, 2.0, 3.0])),
            Err(Rejection::TooFewLevels(3))
        ));
    }

    #[test]
    fn exponential_upper_tail_rate() {
        let e = make_family("exponential", &[1.0]).unwrap();
        let t = from_law(&e, &[0.25, 0.5, 0.75, 0.9]);
        assert!((t.upper_rate() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cdf_at_knots_and_total_mass() {
        let n = make_family("normal", &[0.0, 1.0]).unwrap();
        let levels = [0.01, 0.025, 0.05, 0.2, 0.5, 0.8, 0.95, 0.975, 0.99];
        let t = from_law(&n, &levels);
        for (tau, q) in levels.iter().zip(t.knots()) {
            assert!((t.cdf(*q) - tau).abs() < 1e-9);
            assert!((t.quantile(*tau) - q).abs() < 1e-8);
        }
        let mass = expect(&t, |_| 1.0, &QuadConfig::default()).value;
        assert!((mass - 1.0).abs() < 1e-10);
    }

    #[test]
    fn closed_form_moments_match_quadrature() {
        let g = make_family("gamma", &[2.0, 1.5]).unwrap();
        let t = from_law(&g, &[0.05, 0.1, 0.3, 0.5, 0.7, 0.9, 0.95]);
        let cfg = QuadConfig::default();
        let m = expect(&t, |x| x, &cfg).value;
        let v = expect(&t, |x| (x - m) * (x - m), &cfg).value;
        assert!((m - t.mean()).abs() < 1e-9);
        assert!((v - t.variance()).abs() < 1e-8);
    }

    #[test]
    fn clamping_keeps_segment_mass() {
        // A steep jump forces a negative recursion value.
        let q = validate_quantiles(QuantileForecast::new(
            vec![0.1, 0.2, 0.5, 0.6, 0.9],
            vec![0.0, 0.01, 5.0, 5.01, 6.0],
        ))
        .unwrap();
        let t = quantile_to_distribution(&q).unwrap();
        for (tau, x) in q.inner().levels.iter().zip(&q.inner().values) {
            assert!((t.cdf(*x) - tau).abs() < 1e-12);
        }
        assert!(t.knot_densities().iter().all(|(l, r)| *l >= 0.0 && *r >= 0.0));
    }

    #[test]
    fn degenerate_spacing_rejected() {
        let q = validate_quantiles(QuantileForecast::new(
            vec![0.1, 0.2, 0.5, 0.9],
            vec![0.0, 1e-13, 1.0, 2.0],
        ))
        .unwrap();
        assert!(matches!(quantile_to_distribution(&q), Err(Error::DegenerateSpacing { .. })));
    }
}
