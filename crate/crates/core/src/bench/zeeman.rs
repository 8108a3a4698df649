//! Sensitivity of the benchmarked fidelity to the uncompensated ac-Zeeman
//! shift, swept over the displacement between rf null and gradient centre.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::cb::{estimate_composite_fidelity, generate_cb_circuits, measure_circuits, CbCircuit, CbConfig};
use crate::error::{Error, Result};
use crate::noise::NoiseConfig;
use crate::rng::task_rng;
use crate::transpile::{SimMode, Simulator, DEFAULT_RABI_RATES};

/// c0 + cx·dx + cy·dy + cxx·dx² + cxy·dx·dy + cyy·dy², in rad/s with dx, dy in μm.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShiftPolynomial {
    pub c0: f64,
    pub cx: f64,
    pub cy: f64,
    pub cxx: f64,
    pub cxy: f64,
    pub cyy: f64,
}

impl ShiftPolynomial {
    pub fn eval(&self, dx: f64, dy: f64) -> f64 {
        self.c0 + self.cx * dx + self.cy * dy + self.cxx * dx * dx + self.cxy * dx * dy + self.cyy * dy * dy
    }

    pub fn scaled(&self, s: f64) -> Self {
        ShiftPolynomial {
            c0: s * self.c0,
            cx: s * self.cx,
            cy: s * self.cy,
            cxx: s * self.cxx,
            cxy: s * self.cxy,
            cyy: s * self.cyy,
        }
    }

    /// a·(1 + ((dx−x0)/wx)² + ((dy−y0)/wy)²) expanded into coefficients.
    pub fn bowl(a: f64, centre: (f64, f64), width: (f64, f64)) -> Self {
        let (x0, y0) = centre;
        let (kx, ky) = (1.0 / (width.0 * width.0), 1.0 / (width.1 * width.1));
        ShiftPolynomial {
            c0: a * (1.0 + kx * x0 * x0 + ky * y0 * y0),
            cx: -2.0 * a * kx * x0,
            cy: -2.0 * a * ky * y0,
            cxx: a * kx,
            cxy: 0.0,
            cyy: a * ky,
        }
    }
}

/// Δ^(k)_m(dx, dy); `terms[k][m]` for addressed ion k and shifted ion m.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftModel {
    pub terms: [[ShiftPolynomial; 2]; 2],
}

impl ShiftModel {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn evaluate(&self, dx: f64, dy: f64) -> Result<[[f64; 2]; 2]> {
        let mut out = [[0.0; 2]; 2];
        for k in 0..2 {
            for m in 0..2 {
                let v = self.terms[k][m].eval(dx, dy);
                if !v.is_finite() {
                    return Err(Error::InvalidNoise(format!(
                        "shift model gives non-finite Δ[{k}][{m}] at ({dx}, {dy})"
                    )));
                }
                out[k][m] = v;
            }
        }
        Ok(out)
    }

    pub fn scaled(&self, s: f64) -> Self {
        ShiftModel {
            terms: self.terms.map(|row| row.map(|p| p.scaled(s))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl GridAxis {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        (0..self.points)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.points - 1) as f64)
            .collect()
    }

    pub fn violations(&self, name: &str) -> Vec<(String, String)> {
        let mut out = Vec::new();
        if !(self.min.is_finite() && self.max.is_finite()) {
            out.push((name.to_string(), "bounds must be finite".into()));
        } else if self.points > 1 && !(self.max > self.min) {
            out.push((format!("{name}.max"), format!("must exceed min ({} <= {})", self.max, self.min)));
        }
        if self.points == 0 {
            out.push((format!("{name}.points"), "must be at least 1".into()));
        }
        out
    }
}

/// A fixed benchmarking circuit set evaluated under different shift maps.
pub struct CbProbe {
    config: CbConfig,
    circuits: Vec<CbCircuit>,
    base: NoiseConfig,
    rabi_rates: [f64; 2],
}

impl CbProbe {
    pub fn new(config: &CbConfig, base: &NoiseConfig) -> Result<Self> {
        base.validate()?;
        Ok(CbProbe {
            config: *config,
            circuits: generate_cb_circuits(config, &mut task_rng(config.seed, 0))?,
            base: base.clone(),
            rabi_rates: DEFAULT_RABI_RATES,
        })
    }

    pub fn with_rabi_rates(mut self, rates: [f64; 2]) -> Result<Self> {
        Simulator::new(self.base.clone(), rates)?;
        self.rabi_rates = rates;
        Ok(self)
    }

    /// Exact-mode composite fidelity at one displacement.
    pub fn fidelity(&self, model: &ShiftModel, dx: f64, dy: f64) -> Result<f64> {
        let mut noise = self.base.clone();
        noise.zeeman_shift_rad_per_s = model.evaluate(dx, dy)?;
        let sim = Simulator::new(noise, self.rabi_rates)?;
        let records = measure_circuits(&self.circuits, &sim, SimMode::Exact, self.config.seed)?;
        Ok(estimate_composite_fidelity(&records, &self.config)?.f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointError {
    pub ix: usize,
    pub iy: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub points: Vec<(f64, f64)>,
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeemanSweep {
    pub dx_um: Vec<f64>,
    pub dy_um: Vec<f64>,
    /// `f[ix][iy]`; NaN where the point failed.
    pub f: Vec<Vec<f64>>,
    pub errors: Vec<PointError>,
    pub level: f64,
    pub contours: Vec<Contour>,
}

impl ZeemanSweep {
    pub fn has_closed_contour(&self) -> bool {
        self.contours.iter().any(|c| c.closed)
    }
}

/// Runs the exact benchmarking pipeline at every grid point. Failing points
/// are recorded and skipped; the `level` contour is extracted afterwards.
pub fn zeeman_sweep(
    dx: &GridAxis,
    dy: &GridAxis,
    model: &ShiftModel,
    cb: &CbConfig,
    base: &NoiseConfig,
    rabi_rates: [f64; 2],
    level: f64,
) -> Result<ZeemanSweep> {
    let violations: Vec<_> = dx.violations("dx").into_iter().chain(dy.violations("dy")).collect();
    if let Some((field, msg)) = violations.first() {
        return Err(Error::InvalidConfig(format!("{field}: {msg}")));
    }
    let probe = CbProbe::new(cb, base)?.with_rabi_rates(rabi_rates)?;
    let xs = dx.values();
    let ys = dy.values();
    let cells: Vec<(usize, usize)> = (0..xs.len()).flat_map(|i| (0..ys.len()).map(move |j| (i, j))).collect();
    let results: Vec<Result<f64>> = cells
        .par_iter()
        .map(|&(i, j)| probe.fidelity(model, xs[i], ys[j]))
        .collect();

    let mut f = vec![vec![f64::NAN; ys.len()]; xs.len()];
    let mut errors = Vec::new();
    for (&(i, j), r) in cells.iter().zip(results) {
        match r {
            Ok(v) => f[i][j] = v,
            Err(e) => {
                log::warn!("sweep point ({}, {}) failed: {e}", xs[i], ys[j]);
                errors.push(PointError {
                    ix: i,
                    iy: j,
                    message: e.to_string(),
                });
            }
        }
    }
    let contours = contour_lines(&xs, &ys, &f, level);
    Ok(ZeemanSweep {
        dx_um: xs,
        dy_um: ys,
        f,
        errors,
        level,
        contours,
    })
}

/// Cell edge: (vertical?, i, j). Horizontal edge (i, j) joins (i, j)–(i+1, j);
/// vertical edge (i, j) joins (i, j)–(i, j+1).
type EdgeId = (bool, usize, usize);

/// Marching-squares iso-lines of `f[ix][iy]` at `level`. Saddle cells are
/// resolved by the cell-centre average. Cells touching NaN are skipped.
pub fn contour_lines(xs: &[f64], ys: &[f64], f: &[Vec<f64>], level: f64) -> Vec<Contour> {
    let mut points: BTreeMap<EdgeId, (f64, f64)> = BTreeMap::new();
    let mut links: BTreeMap<EdgeId, Vec<EdgeId>> = BTreeMap::new();
    let above = |i: usize, j: usize| f[i][j] >= level;
    let interp = |a: (f64, f64, f64), b: (f64, f64, f64)| {
        let t = (level - a.2) / (b.2 - a.2);
        (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1))
    };

    for i in 0..xs.len().saturating_sub(1) {
        for j in 0..ys.len().saturating_sub(1) {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            if corners.iter().any(|&(a, b)| f[a][b].is_nan()) {
                continue;
            }
            // Edges in order bottom, right, top, left; edge e joins corners e and e+1.
            let edges: [EdgeId; 4] = [(false, i, j), (true, i + 1, j), (false, i, j + 1), (true, i, j)];
            let mut crossed = Vec::with_capacity(4);
            for e in 0..4 {
                let (a, b) = (corners[e], corners[(e + 1) % 4]);
                if above(a.0, a.1) != above(b.0, b.1) {
                    let pa = (xs[a.0], ys[a.1], f[a.0][a.1]);
                    let pb = (xs[b.0], ys[b.1], f[b.0][b.1]);
                    points.entry(edges[e]).or_insert_with(|| interp(pa, pb));
                    crossed.push(e);
                }
            }
            let pairs: Vec<(usize, usize)> = match crossed.len() {
                2 => vec![(crossed[0], crossed[1])],
                4 => {
                    let centre = corners.iter().map(|&(a, b)| f[a][b]).sum::<f64>() / 4.0;
                    // Corner c is adjacent to edges c−1 and c. Isolate the corners
                    // on the other side of the level from the centre.
                    let isolate: Vec<usize> = (0..4)
                        .filter(|&c| above(corners[c].0, corners[c].1) != (centre >= level))
                        .collect();
                    isolate.iter().map(|&c| ((c + 3) % 4, c)).collect()
                }
                _ => Vec::new(),
            };
            for (a, b) in pairs {
                links.entry(edges[a]).or_default().push(edges[b]);
                links.entry(edges[b]).or_default().push(edges[a]);
            }
        }
    }

    let mut visited: BTreeMap<EdgeId, bool> = links.keys().map(|&k| (k, false)).collect();
    let mut contours = Vec::new();
    let starts: Vec<EdgeId> = links
        .iter()
        .filter(|(_, v)| v.len() == 1)
        .map(|(&k, _)| k)
        .chain(links.keys().copied())
        .collect();
    for start in starts {
        if visited[&start] {
            continue;
        }
        let mut chain = vec![start];
        visited.insert(start, true);
        let mut current = start;
        let closed = loop {
            let next = links[&current].iter().copied().find(|n| !visited[n]);
            match next {
                Some(n) => {
                    visited.insert(n, true);
                    chain.push(n);
                    current = n;
                }
                None => break chain.len() > 2 && links[&current].contains(&start) && links[&start].len() == 2,
            }
        };
        let mut pts: Vec<(f64, f64)> = chain.iter().map(|e| points[e]).collect();
        if closed {
            pts.push(pts[0]);
        }
        contours.push(Contour { points: pts, closed });
    }
    contours
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleSearch {
    pub scale: f64,
    pub f: f64,
    pub iterations: usize,
}

/// Bisection on the overall shift magnitude s for F(s·model at `at`) = target,
/// assuming F falls with s. Stops once |F − target| ≤ `tol`.
pub fn bisect_shift_scale(
    probe: &CbProbe,
    model: &ShiftModel,
    at: (f64, f64),
    target: f64,
    bracket: (f64, f64),
    tol: f64,
) -> Result<ScaleSearch> {
    let eval = |s: f64| probe.fidelity(&model.scaled(s), at.0, at.1);
    let (mut lo, mut hi) = bracket;
    let (f_lo, f_hi) = (eval(lo)?, eval(hi)?);
    if !(f_lo >= target && f_hi <= target) {
        return Err(Error::InvalidConfig(format!(
            "scale bracket [{lo}, {hi}] gives F in [{f_hi}, {f_lo}], which does not contain {target}"
        )));
    }
    for iteration in 1..=100 {
        let mid = 0.5 * (lo + hi);
        let f = eval(mid)?;
        if (f - target).abs() <= tol {
            return Ok(ScaleSearch {
                scale: mid,
                f,
                iterations: iteration,
            });
        }
        if f > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let scale = 0.5 * (lo + hi);
    Ok(ScaleSearch {
        scale,
        f: eval(scale)?,
        iterations: 100,
    })
}
