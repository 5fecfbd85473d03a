//! Quantum-number assignment from the interval structure of dip centres.
//!
//! For a trial radius every dip gets a short list of candidate labels
//! `(q, l, m, pol)` with `l - m` bounded. The objective is the sum over dip
//! pairs of squared differences between observed and model intervals, which
//! equals `N Σ (r_i - r̄)²` for per-dip residuals `r_i`. Residuals are linear
//! in the ellipticity, so ε is solved in closed form for each labelling, and
//! the labellings are searched by branch and bound. The radius is scanned on a
//! grid fine compared with `a / l` and the best labellings are then refined
//! by golden-section search.
//!
//! Intervals alone cannot tell apart some labellings: two dips `2ε·FSR` apart
//! are matched equally well by a TE/TM pair or by two sublevels of one
//! family, and a lone sublevel dip is fitted exactly by ε whichever family it
//! is given. Labellings are therefore ranked by `χ² + c·k`, where
//! `χ² = Σ (r_i - r̄)² / σ²` for the centre uncertainty `σ` and `k` counts the
//! units of `l - |m|` plus the distinct `(l, pol)` families used. The simplest
//! explanation wins unless a more complex one fits clearly better.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AnalysisError, AnalysisResult};
use crate::error::WgmError;
use crate::geometry::SpheroidGeometry;
use crate::material::OpticalMaterial;
use crate::mode::{ModeId, Polarization};
use crate::modes::{free_spectral_range, nearest_l, sphere_frequency, MIN_ANGULAR_L};
use crate::numeric::minimize_golden;
use crate::scalar::{speed_of_light, Real};

const CHEB_NODES: usize = 7;

/// Search bounds and acceptance settings for [`assign_modes`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[serde(deny_unknown_fields)]
pub struct AssignOptions<T> {
    /// Relative half-width of the radius search around the prior.
    pub radius_tolerance: T,
    pub ellipticity_range: [T; 2],
    pub q: u32,
    pub max_l_minus_m: u32,
    pub polarizations: Vec<Polarization>,
    /// Largest mean offset between observed and model frequencies, in FSR.
    pub max_offset_fsr: T,
    /// Accept only if the rms interval residual (GHz) is below this.
    pub threshold_rms_ghz: T,
    /// Uncertainty of a dip centre, GHz; sets the scale of χ².
    pub center_sigma_ghz: T,
    /// χ² penalty per unit of `l - |m|` and per `(l, pol)` family.
    pub complexity_penalty: T,
    /// Radius grid step as a fraction of `a / l`.
    pub radius_step: T,
    /// Number of candidate labellings kept and reported.
    pub top_k: usize,
}

impl<T: Real> Default for AssignOptions<T> {
    fn default() -> Self {
        AssignOptions {
            radius_tolerance: T::lit(0.1),
            ellipticity_range: [T::zero(), T::lit(0.6)],
            q: 1,
            max_l_minus_m: 3,
            polarizations: Polarization::BOTH.to_vec(),
            max_offset_fsr: T::lit(0.5),
            threshold_rms_ghz: T::lit(20.0),
            center_sigma_ghz: T::one(),
            complexity_penalty: T::lit(2.0),
            radius_step: T::lit(0.25),
            top_k: 16,
        }
    }
}

impl<T: Real> AssignOptions<T> {
    pub fn validate(&self) -> crate::Result<()> {
        let [e0, e1] = self.ellipticity_range;
        if !(self.radius_tolerance > T::zero() && self.radius_tolerance < T::one()) {
            return Err(WgmError::invalid("assign.radius_tolerance", "must lie in (0, 1)"));
        }
        if !(e0 >= T::zero() && e1 >= e0 && e1 < T::one()) {
            return Err(WgmError::invalid("assign.ellipticity_range", "need 0 <= lo <= hi < 1"));
        }
        if self.q < 1 {
            return Err(WgmError::invalid("assign.q", "radial order must be at least 1"));
        }
        if self.polarizations.is_empty() {
            return Err(WgmError::invalid("assign.polarizations", "must not be empty"));
        }
        if !(self.max_offset_fsr > T::zero()) || !(self.threshold_rms_ghz > T::zero()) {
            return Err(WgmError::invalid("assign", "offset bound and threshold must be positive"));
        }
        if !(self.center_sigma_ghz > T::zero()) || !(self.complexity_penalty >= T::zero()) {
            return Err(WgmError::invalid("assign", "need center_sigma_ghz > 0 and complexity_penalty >= 0"));
        }
        if !(self.radius_step > T::zero()) {
            return Err(WgmError::invalid("assign.radius_step", "must be positive"));
        }
        if self.top_k == 0 {
            return Err(WgmError::invalid("assign.top_k", "must be at least 1"));
        }
        Ok(())
    }
}

/// Labels per dip (input order) with the fitted spheroid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeAssignment<T> {
    pub labels: Vec<ModeId>,
    /// µm
    pub fitted_radius: T,
    pub fitted_ellipticity: T,
    /// Sum of squared interval residuals, GHz².
    pub objective_value: T,
    /// rms interval residual, GHz.
    pub rms_interval_residual: T,
    /// Mean observed minus model frequency, GHz.
    pub offset_ghz: T,
    /// Per-dip residual after removing the offset, GHz.
    pub residuals_ghz: Vec<T>,
}

impl<T: Real> ModeAssignment<T> {
    fn to_f64(&self) -> ModeAssignment<f64> {
        ModeAssignment {
            labels: self.labels.clone(),
            fitted_radius: self.fitted_radius.to_f64_lossy(),
            fitted_ellipticity: self.fitted_ellipticity.to_f64_lossy(),
            objective_value: self.objective_value.to_f64_lossy(),
            rms_interval_residual: self.rms_interval_residual.to_f64_lossy(),
            offset_ghz: self.offset_ghz.to_f64_lossy(),
            residuals_ghz: self.residuals_ghz.iter().map(|v| v.to_f64_lossy()).collect(),
        }
    }
}

/// Sphere frequencies `f_s(l, a)` for every needed `(pol, l)`, interpolated in
/// the radius through Chebyshev nodes of `f_s · a`.
struct SphereTable<T> {
    pols: Vec<Polarization>,
    l_lo: u32,
    nodes: [T; CHEB_NODES],
    weights: [T; CHEB_NODES],
    /// `[pol][l - l_lo][node]`, THz·µm
    fa: Vec<Vec<[T; CHEB_NODES]>>,
}

impl<T: Real> SphereTable<T> {
    fn build(
        material: &OpticalMaterial<T>,
        q: u32,
        pols: &[Polarization],
        l_lo: u32,
        l_hi: u32,
        a_lo: T,
        a_hi: T,
    ) -> crate::Result<Self> {
        let mid = (a_lo + a_hi) * T::lit(0.5);
        let half = (a_hi - a_lo) * T::lit(0.5);
        let mut nodes = [T::zero(); CHEB_NODES];
        let mut weights = [T::zero(); CHEB_NODES];
        for j in 0..CHEB_NODES {
            let theta = (2 * j + 1) as f64 * PI / (2 * CHEB_NODES) as f64;
            nodes[j] = mid + half * T::lit(theta.cos());
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            weights[j] = T::lit(sign * theta.sin());
        }
        let l_count = (l_hi - l_lo + 1) as usize;
        let jobs: Vec<(usize, u32)> = (0..pols.len())
            .flat_map(|p| (l_lo..=l_hi).map(move |l| (p, l)))
            .collect();
        let rows: Vec<crate::Result<[T; CHEB_NODES]>> = jobs
            .par_iter()
            .map(|&(p, l)| {
                let mut row = [T::zero(); CHEB_NODES];
                for (j, &a) in nodes.iter().enumerate() {
                    let g = SpheroidGeometry::sphere(a);
                    row[j] = sphere_frequency(&g, material, q, l, pols[p])? * a;
                }
                Ok(row)
            })
            .collect();
        let mut fa = vec![Vec::with_capacity(l_count); pols.len()];
        for ((p, _), row) in jobs.iter().zip(rows) {
            fa[*p].push(row?);
        }
        Ok(SphereTable { pols: pols.to_vec(), l_lo, nodes, weights, fa })
    }

    /// Barycentric weights at radius `a`, or the node index hit exactly.
    fn basis(&self, a: T) -> Result<[T; CHEB_NODES], usize> {
        let mut w = [T::zero(); CHEB_NODES];
        let mut sum = T::zero();
        for j in 0..CHEB_NODES {
            let d = a - self.nodes[j];
            if d == T::zero() {
                return Err(j);
            }
            w[j] = self.weights[j] / d;
            sum = sum + w[j];
        }
        w.iter_mut().for_each(|v| *v = *v / sum);
        Ok(w)
    }

    /// Sphere frequency (GHz) of one family at radius `a`.
    fn frequency(&self, pol: Polarization, l: u32, a: T) -> T {
        let p = self.pols.iter().position(|&x| x == pol).unwrap_or(0);
        let row = &self.fa[p][(l - self.l_lo) as usize];
        let v = match self.basis(a) {
            Ok(w) => w.iter().zip(row).fold(T::zero(), |s, (w, v)| s + *w * *v),
            Err(j) => row[j],
        };
        v / a * T::lit(1000.0)
    }

    /// All sphere frequencies (GHz) at radius `a`, `[pol][l - l_lo]`.
    fn frequencies_at(&self, a: T) -> Vec<Vec<T>> {
        let basis = self.basis(a);
        let ghz = T::lit(1000.0);
        self.fa
            .iter()
            .map(|rows| {
                rows.iter()
                    .map(|row| {
                        let p = match basis {
                            Ok(w) => w.iter().zip(row).fold(T::zero(), |s, (w, v)| s + *w * *v),
                            Err(j) => row[j],
                        };
                        p / a * ghz
                    })
                    .collect()
            })
            .collect()
    }
}

/// One candidate label for one dip at a fixed radius.
#[derive(Clone, Copy)]
struct Cand<T> {
    id: ModeId,
    /// observed minus sphere frequency, GHz
    u: T,
    /// sublevel shift per unit ellipticity, GHz
    h: T,
    /// `-df/da` of the sphere frequency, GHz/µm
    g: T,
    order: u32,
}

fn sublevel_weight<T: Real>(l: u32, m: i32) -> T {
    let lf = T::lit(l as f64);
    let mf = T::lit(m as f64);
    (lf * lf - mf * mf) / (T::lit(2.0) * lf * (lf + T::one()))
}

/// Centred second moments of `(u, h, g)`.
#[derive(Clone, Copy)]
struct Moments<T> {
    uu: T,
    uh: T,
    hh: T,
    ug: T,
    hg: T,
    gg: T,
}

impl<T: Real> Moments<T> {
    /// `Σ (r - r̄)²` for `r = u + ε h + δ g`.
    fn spread(&self, eps: T, d: T) -> T {
        let two = T::lit(2.0);
        (self.uu + two * eps * self.uh + two * d * self.ug + eps * eps * self.hh + two * eps * d * self.hg + d * d * self.gg)
            .max(T::zero())
    }
}

/// Running sums over a partial labelling.
#[derive(Clone, Copy)]
struct Sums<T> {
    n: usize,
    u: T,
    h: T,
    g: T,
    uu: T,
    uh: T,
    hh: T,
    ug: T,
    hg: T,
    gg: T,
    order: u32,
}

impl<T: Real> Sums<T> {
    fn empty() -> Self {
        let z = T::zero();
        Sums { n: 0, u: z, h: z, g: z, uu: z, uh: z, hh: z, ug: z, hg: z, gg: z, order: 0 }
    }

    fn push(&self, c: &Cand<T>) -> Self {
        Sums {
            n: self.n + 1,
            u: self.u + c.u,
            h: self.h + c.h,
            g: self.g + c.g,
            uu: self.uu + c.u * c.u,
            uh: self.uh + c.u * c.h,
            hh: self.hh + c.h * c.h,
            ug: self.ug + c.u * c.g,
            hg: self.hg + c.h * c.g,
            gg: self.gg + c.g * c.g,
            order: self.order + c.order,
        }
    }

    fn moments(&self) -> Moments<T> {
        let n = T::from_usize_lossy(self.n);
        Moments {
            uu: (self.uu - self.u * self.u / n).max(T::zero()),
            uh: self.uh - self.u * self.h / n,
            hh: (self.hh - self.h * self.h / n).max(T::zero()),
            ug: self.ug - self.u * self.g / n,
            hg: self.hg - self.h * self.g / n,
            gg: (self.gg - self.g * self.g / n).max(T::zero()),
        }
    }

    /// `(ε, δ)` minimizing the spread over the box. ε falls back to
    /// `fallback` when it does not affect the intervals.
    fn best(&self, eps_range: [T; 2], d_range: [T; 2], fallback: T) -> (T, T) {
        let m = self.moments();
        let tiny = T::epsilon() * T::lit(64.0);
        let clamp = |v: T, r: [T; 2]| v.max(r[0]).min(r[1]);
        let h_flat = m.hh <= self.hh.max(T::min_positive_value()) * tiny;
        let g_flat = m.gg <= self.gg.max(T::min_positive_value()) * tiny;
        let eps_at = |d: T| if h_flat { clamp(fallback, eps_range) } else { clamp(-(m.uh + d * m.hg) / m.hh, eps_range) };
        let d_at = |e: T| if g_flat { clamp(T::zero(), d_range) } else { clamp(-(m.ug + e * m.hg) / m.gg, d_range) };
        if h_flat {
            let e = eps_at(T::zero());
            return (e, d_at(e));
        }
        if g_flat {
            let d = clamp(T::zero(), d_range);
            return (eps_at(d), d);
        }
        let det = m.hh * m.gg - m.hg * m.hg;
        if det > m.hh * m.gg * tiny {
            let e = (m.ug * m.hg - m.uh * m.gg) / det;
            let d = (m.uh * m.hg - m.ug * m.hh) / det;
            if e >= eps_range[0] && e <= eps_range[1] && d >= d_range[0] && d <= d_range[1] {
                return (e, d);
            }
        }
        let edges = [
            (eps_range[0], d_at(eps_range[0])),
            (eps_range[1], d_at(eps_range[1])),
            (eps_at(d_range[0]), d_range[0]),
            (eps_at(d_range[1]), d_range[1]),
        ];
        let mut best = edges[0];
        for &(e, d) in &edges[1..] {
            if m.spread(e, d) < m.spread(best.0, best.1) {
                best = (e, d);
            }
        }
        best
    }
}

/// Solves `(ε, δ)` for a complete labelling subject to the offset bound.
/// Returns `(eps, delta, objective)`.
fn solve_leaf<T: Real>(s: &Sums<T>, eps_range: [T; 2], d_range: [T; 2], max_offset: T, fallback: T) -> Option<(T, T, T)> {
    let n = T::from_usize_lossy(s.n);
    let (e, d) = s.best(eps_range, d_range, fallback);
    if ((s.u + e * s.h + d * s.g) / n).abs() <= max_offset {
        return Some((e, d, n * s.moments().spread(e, d)));
    }
    let (ubar, hbar) = (s.u / n, s.h / n);
    // mean residual ubar + ε hbar must stay within ±max_offset
    let (mut lo, mut hi) = (eps_range[0], eps_range[1]);
    if hbar > T::zero() {
        lo = lo.max((-max_offset - ubar) / hbar);
        hi = hi.min((max_offset - ubar) / hbar);
    } else if ubar.abs() > max_offset {
        return None;
    }
    if lo > hi {
        return None;
    }
    let (eps, _) = s.best([lo, hi], [T::zero(); 2], fallback);
    Some((eps, T::zero(), n * s.moments().spread(eps, T::zero())))
}

#[derive(Clone)]
struct Leaf<T> {
    score: T,
    objective: T,
    eps: T,
    labels: Vec<ModeId>,
    a: T,
    order: u32,
}

fn leaf_order<T: Real>(x: &Leaf<T>, y: &Leaf<T>) -> Ordering {
    x.score
        .partial_cmp(&y.score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| x.labels.cmp(&y.labels))
        .then_with(|| x.a.partial_cmp(&y.a).unwrap_or(Ordering::Equal))
}

struct Search<'a, T> {
    cands: &'a [Vec<Cand<T>>],
    eps_range: [T; 2],
    /// radius offsets from `a` covered by the linearisation
    d_range: [T; 2],
    max_offset: T,
    penalty: T,
    fallback: T,
    top_k: usize,
    a: T,
    best: Vec<Leaf<T>>,
    chosen: Vec<ModeId>,
}

impl<T: Real> Search<'_, T> {
    fn cutoff(&self) -> T {
        if self.best.len() < self.top_k {
            T::infinity()
        } else {
            self.best[self.best.len() - 1].score
        }
    }

    fn run(&mut self, depth: usize, sums: Sums<T>) {
        let total = self.cands.len();
        if depth == total {
            let Some((eps, d, objective)) = solve_leaf(&sums, self.eps_range, self.d_range, self.max_offset, self.fallback)
            else {
                return;
            };
            let score = objective + self.penalty * T::lit(sums.order as f64);
            if score >= self.cutoff() {
                return;
            }
            let leaf = Leaf { score, objective, eps, labels: self.chosen.clone(), a: self.a + d, order: sums.order };
            let pos = self.best.partition_point(|x| leaf_order(x, &leaf) == Ordering::Less);
            self.best.insert(pos, leaf);
            self.best.truncate(self.top_k);
            return;
        }
        let n_total = T::from_usize_lossy(total);
        for c in &self.cands[depth] {
            if self.chosen.contains(&c.id) {
                continue;
            }
            let mut next = sums.push(c);
            if !self.chosen.iter().any(|id| id.l == c.id.l && id.pol == c.id.pol) {
                next.order += 1;
            }
            let (eps, d) = next.best(self.eps_range, self.d_range, self.fallback);
            let bound = n_total * next.moments().spread(eps, d) + self.penalty * T::lit(next.order as f64);
            if bound >= self.cutoff() {
                continue;
            }
            self.chosen.push(c.id);
            self.run(depth + 1, next);
            self.chosen.pop();
        }
    }
}

struct Context<'a, T> {
    obs_ghz: Vec<T>,
    table: SphereTable<T>,
    options: &'a AssignOptions<T>,
    max_offset: T,
    window: T,
    fallback: T,
    /// GHz² per unit of complexity
    penalty: T,
}

impl<T: Real> Context<'_, T> {
    /// Candidate labels per dip at radius `a`, with slopes from `a ± eta`.
    fn candidates(&self, a: T, eta: T) -> Vec<Vec<Cand<T>>> {
        let fs = self.table.frequencies_at(a);
        let below = self.table.frequencies_at(a - eta);
        let above = self.table.frequencies_at(a + eta);
        let [e0, e1] = self.options.ellipticity_range;
        let q = self.options.q;
        self.obs_ghz
            .iter()
            .map(|&obs| {
                let mut out = Vec::new();
                for (p, &pol) in self.table.pols.iter().enumerate() {
                    for k in 0..=self.options.max_l_minus_m {
                        for (i, &f) in fs[p].iter().enumerate() {
                            let l = self.table.l_lo + i as u32;
                            if k > l {
                                continue;
                            }
                            let m = (l - k) as i32;
                            let h = f * sublevel_weight::<T>(l, m);
                            // reachable frequencies over the ellipticity range
                            let (f_lo, f_hi) = (f - e1 * h, f - e0 * h);
                            if f_lo - self.window <= obs && obs <= f_hi + self.window {
                                let g = (below[p][i] - above[p][i]) / (eta + eta);
                                out.push(Cand { id: ModeId { q, l, m, pol }, u: obs - f, h, g, order: k });
                            }
                        }
                    }
                }
                out.sort_by(|x, y| {
                    let dx = (x.u + x.h * self.fallback).abs();
                    let dy = (y.u + y.h * self.fallback).abs();
                    dx.partial_cmp(&dy).unwrap_or(Ordering::Equal).then(x.id.cmp(&y.id))
                });
                out
            })
            .collect()
    }

    /// Best labellings for radii in `a + d_range`, linearised about `a`.
    fn search(&self, a: T, d_range: [T; 2]) -> Vec<Leaf<T>> {
        let eta = (d_range[1] - d_range[0]) * T::lit(0.5);
        let cands = self.candidates(a, eta.max(a * T::lit(1e-6)));
        if cands.iter().any(|c| c.is_empty()) {
            return Vec::new();
        }
        let mut s = Search {
            cands: &cands,
            eps_range: self.options.ellipticity_range,
            d_range,
            max_offset: self.max_offset,
            penalty: self.penalty,
            fallback: self.fallback,
            top_k: self.options.top_k,
            a,
            best: Vec::new(),
            chosen: Vec::new(),
        };
        s.run(0, Sums::empty());
        s.best
    }

    /// Sums for fixed labels at radius `a`.
    fn sums_for(&self, labels: &[ModeId], a: T) -> Sums<T> {
        let mut s = Sums::empty();
        for (&obs, id) in self.obs_ghz.iter().zip(labels) {
            let f = self.table.frequency(id.pol, id.l, a);
            let c = Cand {
                id: *id,
                u: obs - f,
                h: f * sublevel_weight::<T>(id.l, id.m),
                g: T::zero(),
                order: id.l - id.m.unsigned_abs(),
            };
            s = s.push(&c);
        }
        s
    }

    fn evaluate(&self, labels: &[ModeId], a: T) -> Option<(T, T)> {
        let s = self.sums_for(labels, a);
        solve_leaf(&s, self.options.ellipticity_range, [T::zero(); 2], self.max_offset, self.fallback).map(|(e, _, o)| (e, o))
    }

    fn finish(&self, labels: Vec<ModeId>, a: T, eps: T, objective: T) -> ModeAssignment<T> {
        let r: Vec<T> = self
            .obs_ghz
            .iter()
            .zip(&labels)
            .map(|(&obs, id)| {
                let f = self.table.frequency(id.pol, id.l, a);
                obs - f * (T::one() - eps * sublevel_weight::<T>(id.l, id.m))
            })
            .collect();
        let n = T::from_usize_lossy(r.len());
        let mean = r.iter().fold(T::zero(), |s, v| s + *v) / n;
        let pairs = T::from_usize_lossy(r.len() * (r.len() - 1) / 2);
        ModeAssignment {
            labels,
            fitted_radius: a,
            fitted_ellipticity: eps,
            objective_value: objective,
            rms_interval_residual: (objective / pairs).sqrt(),
            offset_ghz: mean,
            residuals_ghz: r.iter().map(|v| *v - mean).collect(),
        }
    }
}

/// Assigns `(q, l, m, pol)` to each dip centre (THz) by matching pairwise
/// intervals, fitting the radius within the prior's tolerance and the
/// ellipticity within its range.
///
/// Labels come back in input order. If even the best labelling leaves an rms
/// interval residual above the threshold the result is
/// [`AnalysisError::Unassigned`] carrying the best candidates.
pub fn assign_modes<T: Real>(
    dip_centers: &[T],
    prior: &SpheroidGeometry<T>,
    material: &OpticalMaterial<T>,
    options: &AssignOptions<T>,
) -> AnalysisResult<ModeAssignment<T>> {
    options.validate()?;
    prior.validate()?;
    if dip_centers.len() < 2 {
        return Err(WgmError::domain("assignment needs at least two dips").into());
    }
    if dip_centers.iter().any(|f| !f.is_finite() || *f <= T::zero()) {
        return Err(WgmError::invalid("dip_centers", "must be finite and positive").into());
    }
    let ghz = T::lit(1000.0);
    let f_min = dip_centers.iter().fold(T::infinity(), |m, f| m.min(*f));
    let f_max = dip_centers.iter().fold(T::neg_infinity(), |m, f| m.max(*f));
    let f_mid = (f_min + f_max) * T::lit(0.5);
    let fsr = free_spectral_range(prior, material, speed_of_light::<T>() / f_mid)?;
    if (f_max - f_min) * ghz < T::lit(0.3) * fsr {
        return Err(WgmError::domain(format!(
            "dips span {:.1} GHz, less than 0.3 FSR ({:.1} GHz)",
            ((f_max - f_min) * ghz).to_f64_lossy(),
            fsr.to_f64_lossy()
        ))
        .into());
    }

    let a0 = prior.equatorial_radius;
    let a_lo = a0 * (T::one() - options.radius_tolerance);
    let a_hi = a0 * (T::one() + options.radius_tolerance);
    let fsr_max = fsr / (T::one() - options.radius_tolerance);
    let max_offset = options.max_offset_fsr * fsr;
    let n = dip_centers.len();
    let window = max_offset + options.threshold_rms_ghz * T::lit(n as f64).sqrt();
    let k_max = T::lit(options.max_l_minus_m as f64);
    let thz = |g: T| g / ghz;

    let q = options.q;
    let below = f_min - thz(window + fsr_max);
    let above = f_max + thz(window + fsr_max * (T::one() + options.ellipticity_range[1] * k_max));
    let mut l_lo = u32::MAX;
    let mut l_hi = 0;
    for &pol in &options.polarizations {
        l_lo = l_lo.min(nearest_l(&SpheroidGeometry::sphere(a_lo), material, q, pol, below)?);
        l_hi = l_hi.max(nearest_l(&SpheroidGeometry::sphere(a_hi), material, q, pol, above)?);
    }
    let l_lo = l_lo.saturating_sub(1).max(MIN_ANGULAR_L);
    let l_hi = l_hi + 1;
    let table = SphereTable::build(material, q, &options.polarizations, l_lo, l_hi, a_lo, a_hi)?;

    let ctx = Context {
        obs_ghz: dip_centers.iter().map(|&f| f * ghz).collect(),
        table,
        options,
        max_offset,
        window,
        fallback: prior.ellipticity.max(options.ellipticity_range[0]).min(options.ellipticity_range[1]),
        penalty: options.complexity_penalty * T::lit(n as f64) * options.center_sigma_ghz * options.center_sigma_ghz,
    };

    let l0 = nearest_l(prior, material, q, Polarization::TE, f_mid)?;
    let step = a0 * options.radius_step / T::lit(l0 as f64);
    let steps = ((a_hi - a_lo) / step).ceil().to_usize().unwrap_or(1).max(1);
    let grid: Vec<T> = (0..=steps)
        .map(|i| a_lo + (a_hi - a_lo) * T::from_usize_lossy(i) / T::from_usize_lossy(steps))
        .collect();

    let spacing = (a_hi - a_lo) / T::from_usize_lossy(steps);
    let per_a: Vec<Vec<Leaf<T>>> = grid
        .par_iter()
        .map(|&a| {
            let half = spacing * T::lit(0.5);
            ctx.search(a, [(-half).max(a_lo - a), half.min(a_hi - a)])
        })
        .collect();
    let mut merged: BTreeMap<Vec<ModeId>, Leaf<T>> = BTreeMap::new();
    for leaf in per_a.into_iter().flatten() {
        match merged.get(&leaf.labels) {
            Some(old) if leaf_order(old, &leaf) != Ordering::Greater => {}
            _ => {
                merged.insert(leaf.labels.clone(), leaf);
            }
        }
    }
    let mut pool: Vec<Leaf<T>> = merged.into_values().collect();
    pool.sort_by(leaf_order);
    // grid-level scores are linearised in the radius; refine a wider pool than reported
    pool.truncate((4 * options.top_k).max(64));

    let mut refined: Vec<Leaf<T>> = pool
        .par_iter()
        .filter_map(|leaf| {
            let lo = (leaf.a - spacing).max(a_lo);
            let hi = (leaf.a + spacing).min(a_hi);
            let cost = |a: T| ctx.evaluate(&leaf.labels, a).map_or(T::infinity(), |(_, o)| o);
            let (a, _) = minimize_golden(cost, lo, hi, T::tol(1e-10), 100);
            let (a, (eps, objective)) = match ctx.evaluate(&leaf.labels, a) {
                Some(v) => (a, v),
                None => (leaf.a, ctx.evaluate(&leaf.labels, leaf.a)?),
            };
            let score = objective + ctx.penalty * T::lit(leaf.order as f64);
            Some(Leaf { score, objective, eps, labels: leaf.labels.clone(), a, order: leaf.order })
        })
        .collect();
    refined.sort_by(leaf_order);

    let results: Vec<ModeAssignment<T>> = refined
        .into_iter()
        .take(options.top_k)
        .map(|l| ctx.finish(l.labels, l.a, l.eps, l.objective))
        .collect();
    match results.first() {
        Some(best) if best.rms_interval_residual <= options.threshold_rms_ghz => Ok(best.clone()),
        Some(best) => Err(AnalysisError::Unassigned {
            best_rms_ghz: best.rms_interval_residual.to_f64_lossy(),
            candidates: results.iter().map(ModeAssignment::to_f64).collect(),
        }),
        None => Err(AnalysisError::Unassigned { best_rms_ghz: f64::INFINITY, candidates: Vec::new() }),
    }
}
