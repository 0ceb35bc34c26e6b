//! Steering maps over a control grid and the varactor-Q sweep.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Antenna, BeamSolution};
use crate::components::ControlState;
use crate::dispersion::{dispersion, harmonic_angles};
use crate::error::{Error, Result};

/// Beam solutions over a control-state grid at one frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeringMap {
    pub f: f64,
    pub entries: Vec<BeamSolution>,
    /// Convex hull of the reached `(θ, φ)` directions, counter-clockwise.
    pub hull: Vec<(f64, f64)>,
}

impl SteeringMap {
    fn from_entries(f: f64, entries: Vec<BeamSolution>) -> Self {
        let pts: Vec<(f64, f64)> = entries.iter().map(|e| (e.theta_peak, e.phi_peak)).collect();
        Self {
            f,
            hull: convex_hull(&pts),
            entries,
        }
    }

    pub fn median_gain_dbi(&self) -> f64 {
        let mut g: Vec<f64> = self.entries.iter().map(|e| e.realized_gain_dbi).collect();
        if g.is_empty() {
            return f64::NAN;
        }
        g.sort_by(f64::total_cmp);
        let m = g.len() / 2;
        if g.len() % 2 == 1 {
            g[m]
        } else {
            0.5 * (g[m - 1] + g[m])
        }
    }

    /// Realized-gain spread, dB.
    pub fn gain_ripple_db(&self) -> f64 {
        let (lo, hi) = self
            .entries
            .iter()
            .map(|e| e.realized_gain_dbi)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), g| (lo.min(g), hi.max(g)));
        hi - lo
    }

    /// `(min, max)` of the peak θ over the map.
    pub fn theta_span(&self) -> (f64, f64) {
        self.entries
            .iter()
            .map(|e| e.theta_peak)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| (lo.min(t), hi.max(t)))
    }

    /// Whether `p = (θ, φ)` lies inside the reached hull, with `tol` degrees
    /// of slack on every edge.
    pub fn hull_contains_tol(&self, p: (f64, f64), tol: f64) -> bool {
        let h = &self.hull;
        match h.len() {
            0 => false,
            1 => (h[0].0 - p.0).hypot(h[0].1 - p.1) <= tol,
            2 => segment_distance(h[0], h[1], p) <= tol,
            n => (0..n).all(|i| {
                let (a, b) = (h[i], h[(i + 1) % n]);
                let len = (b.0 - a.0).hypot(b.1 - a.1);
                cross(a, b, p) / len >= -tol
            }),
        }
    }

    pub fn hull_contains(&self, p: (f64, f64)) -> bool {
        self.hull_contains_tol(p, 1e-9)
    }
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn segment_distance(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let l2 = dx * dx + dy * dy;
    let t = if l2 > 0.0 {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p.0 - a.0 - t * dx).hypot(p.1 - a.1 - t * dy)
}

/// Andrew's monotone chain; collinear points are dropped.
fn convex_hull(pts: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut p: Vec<(f64, f64)> = pts.iter().copied().filter(|q| q.0.is_finite() && q.1.is_finite()).collect();
    p.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &q in &p {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], q) <= 0.0 {
            lower.pop();
        }
        lower.push(q);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &q in p.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], q) <= 0.0 {
            upper.pop();
        }
        upper.push(q);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Sorted capacitance grid with near-duplicates removed.
pub fn dedup_grid(c_grid: &[f64]) -> Vec<f64> {
    let mut g = c_grid.to_vec();
    g.sort_by(f64::total_cmp);
    g.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs().max(1e-30));
    g
}

fn run(ant: &Antenna, f: f64, states: Vec<ControlState>) -> Result<SteeringMap> {
    let entries = states
        .par_iter()
        .map(|s| ant.forward(s, f))
        .collect::<Result<Vec<_>>>()?;
    Ok(SteeringMap::from_entries(f, entries))
}

/// Forward evaluation over `c_grid` × the 13 canonical asymmetry indices.
/// Entries are ordered by capacitance, then index from `−n` to `n`.
pub fn steering_map(ant: &Antenna, f: f64, c_grid: &[f64]) -> Result<SteeringMap> {
    let grid = dedup_grid(c_grid);
    if grid.is_empty() {
        return Err(Error::invalid("empty capacitance grid"));
    }
    let n = ant.geom.n_cells;
    let states = grid
        .iter()
        .flat_map(|&c| (-(n as i32)..=n as i32).map(move |k| ControlState::canonical(n, c, k)))
        .collect();
    run(ant, f, states)
}

/// Like [`steering_map`] but over every diode pattern, `4^n` per capacitance.
pub fn steering_map_full(ant: &Antenna, f: f64, c_grid: &[f64]) -> Result<SteeringMap> {
    let grid = dedup_grid(c_grid);
    if grid.is_empty() {
        return Err(Error::invalid("empty capacitance grid"));
    }
    let n = ant.geom.n_cells;
    if n > 16 {
        return Err(Error::invalid(format!("full enumeration over {n} cells is too large")));
    }
    let mut states = Vec::with_capacity(grid.len() << (2 * n));
    for &c in &grid {
        for bits in 0u64..(1u64 << (2 * n)) {
            let mut s = ControlState::uniform(n, c);
            for (i, cell) in s.cells.iter_mut().enumerate() {
                cell.diode_left = bits >> i & 1 == 1;
                cell.diode_right = bits >> (n + i) & 1 == 1;
            }
            states.push(s);
        }
    }
    run(ant, f, states)
}

/// One row of the Q sweep; deltas are against the highest-Q row at the same
/// frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QRow {
    pub f: f64,
    pub q: f64,
    pub s11_db: f64,
    pub gain_dbi: f64,
    pub d_s11_db: f64,
    pub d_gain_db: f64,
}

/// Forward evaluation of `state` with the varactor Q replaced by each of
/// `q_values`, frequency-major.
pub fn q_sensitivity(ant: &Antenna, freqs: &[f64], q_values: &[f64], state: &ControlState) -> Result<Vec<QRow>> {
    if q_values.is_empty() {
        return Err(Error::invalid("no Q values"));
    }
    if let Some(q) = q_values.iter().find(|q| !(**q > 0.0)) {
        return Err(Error::invalid(format!("Q = {q} must be positive")));
    }
    let q_ref = q_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let variant = |q: f64| {
        let mut a = ant.clone();
        a.specs.varactor.q_at_f0 = q;
        a.specs.varactor.q_table.clear();
        a
    };
    let jobs: Vec<(f64, f64)> = freqs
        .iter()
        .flat_map(|&f| q_values.iter().map(move |&q| (f, q)))
        .collect();
    let sols = jobs
        .par_iter()
        .map(|&(f, q)| variant(q).forward(state, f))
        .collect::<Result<Vec<_>>>()?;
    let refs = freqs
        .par_iter()
        .map(|&f| variant(q_ref).forward(state, f))
        .collect::<Result<Vec<_>>>()?;
    Ok(jobs
        .iter()
        .zip(&sols)
        .enumerate()
        .map(|(i, (&(f, q), s))| {
            let r = &refs[i / q_values.len()];
            QRow {
                f,
                q,
                s11_db: s.s11_db,
                gain_dbi: s.realized_gain_dbi,
                d_s11_db: s.s11_db - r.s11_db,
                d_gain_db: s.realized_gain_dbi - r.realized_gain_dbi,
            }
        })
        .collect())
}

/// Cell-averaged dispersion and port match at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionRow {
    pub f: f64,
    pub beta: f64,
    pub alpha: f64,
    pub k0: f64,
    /// Fundamental and `n = −1` harmonic angles, degrees; `NaN` when not
    /// radiating.
    pub theta_n0: f64,
    pub theta_nm1: f64,
    pub s11_db: f64,
}

pub fn dispersion_sweep(ant: &Antenna, state: &ControlState, freqs: &[f64]) -> Result<Vec<DispersionRow>> {
    freqs
        .par_iter()
        .map(|&f| {
            let d = dispersion(&ant.geom, state, &ant.specs, &ant.cal, f)?;
            let h = harmonic_angles(d.beta, f, ant.geom.cell_period, -1..=0);
            Ok(DispersionRow {
                f,
                beta: d.beta,
                alpha: d.alpha,
                k0: d.k0,
                theta_n0: h[1].theta_deg,
                theta_nm1: h[0].theta_deg,
                s11_db: ant.scattering(state, f)?.s11_db(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_of_square() {
        let pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.5, 0.5), (0.5, 0.0)];
        let h = convex_hull(&pts);
        assert_eq!(h.len(), 4);
        let m = SteeringMap {
            f: 1.0,
            entries: vec![],
            hull: h,
        };
        assert!(m.hull_contains((0.5, 0.5)));
        assert!(m.hull_contains((1.0, 0.5)));
        assert!(!m.hull_contains((1.1, 0.5)));
        assert!(m.hull_contains_tol((1.1, 0.5), 0.2));
    }

    #[test]
    fn grid_dedup() {
        let g = dedup_grid(&[0.5e-12, 0.2e-12, 0.5e-12, 0.2e-12 * (1.0 + 1e-13)]);
        assert_eq!(g, vec![0.2e-12, 0.5e-12]);
    }
}
