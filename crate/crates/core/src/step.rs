//! Nondecreasing right-continuous step functions with exact generalized
//! inverses and exact integrals of the inverse.

use crate::error::{input, Result};

/// A nondecreasing, right-continuous, piecewise-constant map from `[0, inf)`
/// into `[0, 1]`.
///
/// Stored as breakpoints `(b_k, l_k)` with strictly increasing `b_k` and
/// strictly increasing levels; the value at `b` is the level of the last
/// breakpoint not exceeding `b`, or 0 before the first one.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepFunction {
    points: Vec<(f64, f64)>,
}

impl StepFunction {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        for w in points.windows(2) {
            if w[1].0 < w[0].0 {
                return input("step breakpoints must be sorted");
            }
            if w[1].1 < w[0].1 {
                return input("step levels must be nondecreasing");
            }
        }
        for &(b, l) in &points {
            if !b.is_finite() || b < 0.0 {
                return input(format!("step breakpoint {b} outside [0, inf)"));
            }
            if !(0.0..=1.0).contains(&l) {
                return input(format!("step level {l} outside [0, 1]"));
            }
        }
        Ok(Self::normalized(points))
    }

    /// The identically zero function.
    pub fn zero() -> Self {
        Self::default()
    }

    /// Jumps from 0 to `level` at `at`.
    pub fn step(at: f64, level: f64) -> Self {
        Self::normalized(vec![(at, level)])
    }

    /// Drops redundant breakpoints; assumes sorted input with nondecreasing levels.
    fn normalized(points: Vec<(f64, f64)>) -> Self {
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(points.len());
        for (b, l) in points {
            let l = l.clamp(0.0, 1.0);
            if let Some(last) = out.last_mut() {
                if b == last.0 {
                    last.1 = last.1.max(l);
                    continue;
                }
                if l <= last.1 {
                    continue;
                }
            } else if l <= 0.0 {
                continue;
            }
            out.push((b, l));
        }
        // merging equal breakpoints can leave a level below its predecessor's
        let mut clean: Vec<(f64, f64)> = Vec::with_capacity(out.len());
        for p in out {
            if clean.last().is_none_or(|q| p.1 > q.1) {
                clean.push(p);
            }
        }
        Self { points: clean }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn is_zero(&self) -> bool {
        self.points.is_empty()
    }

    pub fn eval(&self, b: f64) -> f64 {
        let k = self.points.partition_point(|p| p.0 <= b);
        if k == 0 {
            0.0
        } else {
            self.points[k - 1].1
        }
    }

    /// Level reached for large inputs.
    pub fn sup_level(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.1)
    }

    /// Generalized inverse `inf { b : f(b) >= x }`; 0 for `x <= 0` and
    /// `+inf` above the supremum level.
    pub fn inverse(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let k = self.points.partition_point(|p| p.1 < x);
        self.points.get(k).map_or(f64::INFINITY, |p| p.0)
    }

    /// `int_a^z inverse(x) dx` for `0 <= a <= z`; `+inf` when the range
    /// reaches above the supremum level. Returns 0 when `z <= a`.
    pub fn inverse_integral(&self, a: f64, z: f64) -> f64 {
        let a = a.max(0.0);
        if z <= a {
            return 0.0;
        }
        if z > self.sup_level() {
            return f64::INFINITY;
        }
        let mut total = 0.0;
        let mut lo = 0.0f64;
        for &(b, l) in &self.points {
            // inverse equals b on (lo, l]
            let left = lo.max(a);
            let right = l.min(z);
            if right > left {
                total += b * (right - left);
            }
            if l >= z {
                break;
            }
            lo = l;
        }
        total
    }

    /// Same integral with the inverse zeroed wherever it falls below `floor`.
    pub fn inverse_integral_above(&self, floor: f64, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        if z > self.sup_level() {
            return f64::INFINITY;
        }
        let mut total = 0.0;
        let mut lo = 0.0;
        for &(b, l) in &self.points {
            let right = l.min(z);
            if b >= floor && right > lo {
                total += b * (right - lo);
            }
            if l >= z {
                break;
            }
            lo = l;
        }
        total
    }

    /// Pointwise weighted sum of step functions.
    pub fn weighted_sum<'a, I>(parts: I) -> Self
    where
        I: IntoIterator<Item = (f64, &'a StepFunction)>,
    {
        let mut events: Vec<(f64, f64)> = Vec::new();
        for (w, f) in parts {
            let mut prev = 0.0;
            for &(b, l) in &f.points {
                events.push((b, w * (l - prev)));
                prev = l;
            }
        }
        events.sort_by(|p, q| p.0.total_cmp(&q.0));
        let mut points: Vec<(f64, f64)> = Vec::with_capacity(events.len());
        let mut level = 0.0;
        for (b, d) in events {
            level += d;
            match points.last_mut() {
                Some(last) if last.0 == b => last.1 = level,
                _ => points.push((b, level)),
            }
        }
        // rounding can leave tiny dips; restore monotonicity
        let mut run = 0.0f64;
        for p in &mut points {
            run = run.max(p.1);
            p.1 = run;
        }
        Self::normalized(points)
    }

    /// The function zeroed below `floor`: inputs under `floor` map to 0.
    pub fn floored(&self, floor: f64) -> Self {
        if floor <= 0.0 {
            return self.clone();
        }
        let mut points = vec![(floor, self.eval(floor))];
        points.extend(self.points.iter().copied().filter(|p| p.0 > floor));
        Self::normalized(points)
    }
}
