//! Homography refinement by Lucas-Kanade alignment of distance images.
//!
//! The template is the truncated distance image of the field markings
//! rendered under the initial homography; the target is the truncated
//! distance image of the observed edges. Gauss-Newton (forward additive)
//! estimates the image-space homography `W` minimising
//! `sum_x (D_obs(W x) - D_model(x))^2`, and the refined field-to-image map is
//! `W ∘ H_init`. `W` is parameterised by eight entries in normalised image
//! coordinates (centred, half-width scaled) with the last entry fixed to one.
//! Optimisation runs coarse to fine over truncation radii
//! `truncation * 2^level`.

use crate::error::Result;
use crate::field::{distance_transform, render_edge_image, DistanceImage, EdgeImage, FieldTemplate};
use crate::geometry::{Homography, ImageSize};
use crate::linalg::{self, Mat3};
use crate::num::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefinementParams {
    /// Per truncation level.
    pub max_iterations: usize,
    /// Stop when the parameter update norm falls below this.
    pub convergence_threshold: f64,
    /// Final truncation radius in pixels.
    pub truncation: f32,
    /// Initial Levenberg-Marquardt damping, relative to the normal-matrix
    /// diagonal.
    pub damping: f64,
    /// Damping increases (x10 each) tried before an iteration gives up.
    pub damping_retries: usize,
    /// Extra levels with doubled truncation run before the final one.
    pub coarse_levels: usize,
    /// Stroke width used to render the model, pixels.
    pub line_width: f64,
    /// Pixel stride of the alignment grid.
    pub stride: u32,
    /// Alignment passes; each re-renders the model at the current estimate.
    pub passes: usize,
}

impl Default for RefinementParams {
    fn default() -> Self {
        RefinementParams {
            max_iterations: 50,
            convergence_threshold: 1e-4,
            truncation: 30.0,
            damping: 1e-3,
            damping_retries: 8,
            coarse_levels: 2,
            line_width: 4.0,
            stride: 2,
            passes: 3,
        }
    }
}

impl RefinementParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iterations >= 1
            && self.convergence_threshold > 0.0
            && self.truncation > 0.0
            && self.damping >= 0.0
            && self.line_width > 0.0
            && self.stride >= 1
            && self.passes >= 1;
        if ok {
            Ok(())
        } else {
            Err(crate::Error::InvalidArgument(format!("invalid refinement parameters {self:?}")))
        }
    }

    fn max_truncation(&self) -> f32 {
        self.truncation * (1u32 << self.coarse_levels.min(16)) as f32
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnrefinedReason {
    EmptyObservation,
    /// The initial homography renders no marking inside the image.
    EmptyModel,
    SingularNormalEquations,
    Diverged,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefineStatus {
    /// Initial residual already zero.
    AlreadyOptimal,
    Converged,
    MaxIterations,
    /// A step could not reduce the cost within the damping retries after
    /// earlier progress.
    Stalled,
    Unrefined(UnrefinedReason),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Refinement<T: Real = f64> {
    pub homography: Homography<T>,
    /// RMS difference of truncated distance images (pixels) at the final
    /// truncation, over the alignment grid.
    pub residual: f64,
    pub initial_residual: f64,
    pub iterations: usize,
    pub status: RefineStatus,
}

impl<T: Real> Refinement<T> {
    pub fn is_refined(&self) -> bool {
        !matches!(self.status, RefineStatus::Unrefined(_))
    }
}

/// Observed distance image and template, reusable across several initial
/// homographies.
pub struct Aligner<'a, T: Real> {
    observed: DistanceImage,
    template: &'a FieldTemplate<T>,
    params: RefinementParams,
    observed_empty: bool,
}

struct Evaluation {
    cost: f64,
    jtj: [f64; 64],
    jtr: [f64; 8],
}

impl<'a, T: Real> Aligner<'a, T> {
    pub fn new(observed: &EdgeImage, template: &'a FieldTemplate<T>, params: RefinementParams) -> Result<Self> {
        params.validate()?;
        Ok(Aligner {
            observed: distance_transform(observed, params.max_truncation())?,
            template,
            params,
            observed_empty: observed.is_empty(),
        })
    }

    pub fn size(&self) -> ImageSize {
        self.observed.size
    }

    pub fn observed_distance(&self) -> &DistanceImage {
        &self.observed
    }

    fn model_distance(&self, h: &Homography<T>) -> Result<Option<DistanceImage>> {
        let edges = render_edge_image(self.template, h, self.size(), self.params.line_width)?;
        if edges.is_empty() {
            return Ok(None);
        }
        Ok(Some(distance_transform(&edges, self.params.max_truncation())?))
    }

    /// Grid pixels near a model or an observed edge at truncation `trunc`;
    /// the grid coarsens with the level.
    fn domain(&self, model: &DistanceImage, trunc: f64, level: usize) -> Vec<(f64, f64, f64)> {
        let s = (self.params.stride as usize) << level.min(8);
        let (w, h) = (self.size().width as usize, self.size().height as usize);
        let mut out = Vec::new();
        for y in (0..h).step_by(s) {
            for x in (0..w).step_by(s) {
                let m = model.values[y * w + x] as f64;
                let o = self.observed.values[y * w + x] as f64;
                if m < trunc || o < trunc {
                    out.push((x as f64, y as f64, m.min(trunc)));
                }
            }
        }
        out
    }

    /// Symmetric alignment score of `h`: RMS difference between the model
    /// and observed truncated distance images over the whole grid.
    pub fn residual(&self, h: &Homography<T>) -> f64 {
        let t = self.params.truncation as f64;
        let Ok(Some(model)) = self.model_distance(h) else { return t };
        let s = self.params.stride as usize;
        let (w, hgt) = (self.size().width as usize, self.size().height as usize);
        let (mut sum, mut n) = (0.0, 0usize);
        for y in (0..hgt).step_by(s) {
            for x in (0..w).step_by(s) {
                let d = (model.values[y * w + x] as f64).min(t) - (self.observed.values[y * w + x] as f64).min(t);
                sum += d * d;
                n += 1;
            }
        }
        (sum / n as f64).sqrt()
    }

    pub fn refine(&self, h_init: &Homography<T>) -> Refinement<T> {
        let mut best = self.refine_pass(h_init);
        if !best.is_refined() || best.status == RefineStatus::AlreadyOptimal {
            return best;
        }
        let mut score = self.residual(&best.homography);
        for _ in 1..self.params.passes {
            let next = self.refine_pass(&best.homography);
            if !next.is_refined() || next.status == RefineStatus::AlreadyOptimal || next.residual > best.residual {
                break;
            }
            let next_score = self.residual(&next.homography);
            if next_score > score {
                break;
            }
            score = next_score;
            best = Refinement { initial_residual: best.initial_residual, iterations: best.iterations + next.iterations, ..next };
        }
        best
    }

    fn refine_pass(&self, h_init: &Homography<T>) -> Refinement<T> {
        let t_final = self.params.truncation as f64;
        let unrefined = |reason, residual: f64, iterations| Refinement {
            homography: *h_init,
            residual,
            initial_residual: residual,
            iterations,
            status: RefineStatus::Unrefined(reason),
        };
        if self.observed_empty {
            return unrefined(UnrefinedReason::EmptyObservation, t_final, 0);
        }
        let model = match self.model_distance(h_init) {
            Ok(Some(m)) => m,
            _ => return unrefined(UnrefinedReason::EmptyModel, t_final, 0),
        };
        let final_domain = self.domain(&model, t_final, 0);
        let rms = |cost: f64| if final_domain.is_empty() { 0.0 } else { (cost / final_domain.len() as f64).sqrt() };
        let identity = [0.0; 8];
        let initial_cost = self.evaluate(&identity, &final_domain, t_final, false).cost;
        if initial_cost <= 1e-12 * final_domain.len().max(1) as f64 {
            return Refinement {
                homography: *h_init,
                residual: rms(initial_cost),
                initial_residual: rms(initial_cost),
                iterations: 0,
                status: RefineStatus::AlreadyOptimal,
            };
        }

        let mut p = identity;
        let mut iterations = 0usize;
        let mut accepted_any = false;
        let mut status = RefineStatus::MaxIterations;
        let mut lambda = self.params.damping;
        for level in (0..=self.params.coarse_levels).rev() {
            let trunc = t_final * (1u64 << level) as f64;
            let domain = self.domain(&model, trunc, level);
            status = RefineStatus::MaxIterations;
            for _ in 0..self.params.max_iterations {
                let ev = self.evaluate(&p, &domain, trunc, true);
                if (0..8).all(|i| ev.jtj[i * 9] == 0.0) {
                    if !accepted_any {
                        return unrefined(UnrefinedReason::SingularNormalEquations, rms(initial_cost), iterations);
                    }
                    status = RefineStatus::Stalled;
                    break;
                }
                iterations += 1;
                let mut accepted = None;
                for _ in 0..=self.params.damping_retries {
                    let mut a = ev.jtj;
                    for i in 0..8 {
                        a[i * 9] += lambda * ev.jtj[i * 9].max(1e-12);
                    }
                    let mut delta = ev.jtr.map(|g| -g);
                    if linalg::solve(&mut a, &mut delta, 8).is_ok() {
                        let trial: [f64; 8] = std::array::from_fn(|i| p[i] + delta[i]);
                        let c = self.evaluate(&trial, &domain, trunc, false).cost;
                        if c < ev.cost && c.is_finite() {
                            accepted = Some((trial, delta));
                            lambda = (lambda * 0.1).max(1e-9);
                            break;
                        }
                    }
                    lambda *= 10.0;
                }
                let Some((trial, delta)) = accepted else {
                    status = RefineStatus::Stalled;
                    break;
                };
                accepted_any = true;
                p = trial;
                let update = delta.iter().map(|d| d * d).sum::<f64>().sqrt();
                if update < self.params.convergence_threshold {
                    status = RefineStatus::Converged;
                    break;
                }
            }
        }

        let final_cost = self.evaluate(&p, &final_domain, t_final, false).cost;
        if !accepted_any || final_cost > initial_cost {
            return Refinement { initial_residual: rms(initial_cost), ..unrefined(UnrefinedReason::Diverged, rms(initial_cost), iterations) };
        }
        let warp = self.warp_pixels(&p);
        match Homography::new(linalg::mat_mul(&warp, h_init.cast::<f64>().matrix())) {
            Ok(h) => Refinement {
                homography: h.cast(),
                residual: rms(final_cost),
                initial_residual: rms(initial_cost),
                iterations,
                status,
            },
            Err(_) => unrefined(UnrefinedReason::Diverged, rms(initial_cost), iterations),
        }
    }

    fn normalization(&self) -> (f64, f64, f64) {
        let s = self.size();
        (s.width as f64 / 2.0, s.width as f64 / 2.0, s.height as f64 / 2.0)
    }

    /// Pixel-space warp `N^-1 · W(p) · N`.
    fn warp_pixels(&self, p: &[f64; 8]) -> Mat3<f64> {
        let (s, cx, cy) = self.normalization();
        let n = [[1.0 / s, 0.0, -cx / s], [0.0, 1.0 / s, -cy / s], [0.0, 0.0, 1.0]];
        let n_inv = [[s, 0.0, cx], [0.0, s, cy], [0.0, 0.0, 1.0]];
        let w = [[1.0 + p[0], p[1], p[2]], [p[3], 1.0 + p[4], p[5]], [p[6], p[7], 1.0]];
        linalg::mat_mul(&linalg::mat_mul(&n_inv, &w), &n)
    }

    #[inline]
    fn sample(&self, u: f64, v: f64, trunc: f64) -> f64 {
        // Border replication keeps the cost continuous as points leave the
        // image.
        let (w, h) = (self.size().width as f64 - 1.0, self.size().height as f64 - 1.0);
        if !(u.is_finite() && v.is_finite()) {
            return trunc;
        }
        self.observed.sample(u.clamp(0.0, w), v.clamp(0.0, h)).map_or(trunc, |d| d.min(trunc))
    }

    fn evaluate(&self, p: &[f64; 8], domain: &[(f64, f64, f64)], trunc: f64, jacobian: bool) -> Evaluation {
        let (s, cx, cy) = self.normalization();
        let mut ev = Evaluation { cost: 0.0, jtj: [0.0; 64], jtr: [0.0; 8] };
        for &(px, py, target) in domain {
            let (x, y) = ((px - cx) / s, (py - cy) / s);
            let c = p[6] * x + p[7] * y + 1.0;
            if c <= 1e-6 {
                ev.cost += (trunc - target).powi(2);
                continue;
            }
            let un = ((1.0 + p[0]) * x + p[1] * y + p[2]) / c;
            let vn = (p[3] * x + (1.0 + p[4]) * y + p[5]) / c;
            let (u, v) = (un * s + cx, vn * s + cy);
            let obs = self.sample(u, v, trunc);
            let r = obs - target;
            ev.cost += r * r;
            if !jacobian {
                continue;
            }
            let gx = self.sample(u + 0.5, v, trunc) - self.sample(u - 0.5, v, trunc);
            let gy = self.sample(u, v + 0.5, trunc) - self.sample(u, v - 0.5, trunc);
            if gx == 0.0 && gy == 0.0 {
                continue;
            }
            let ic = s / c;
            let (gxs, gys) = (gx * ic, gy * ic);
            let j = [gxs * x, gxs * y, gxs, gys * x, gys * y, gys, -(gxs * un + gys * vn) * x, -(gxs * un + gys * vn) * y];
            for a in 0..8 {
                ev.jtr[a] += j[a] * r;
                for b in a..8 {
                    ev.jtj[a * 8 + b] += j[a] * j[b];
                }
            }
        }
        for a in 0..8 {
            for b in 0..a {
                ev.jtj[a * 8 + b] = ev.jtj[b * 8 + a];
            }
        }
        ev
    }
}

/// Refines `h_init` (field to image) against the observed edge image.
pub fn refine_homography<T: Real>(
    h_init: &Homography<T>,
    observed: &EdgeImage,
    template: &FieldTemplate<T>,
    params: &RefinementParams,
) -> Result<Refinement<T>> {
    Ok(Aligner::new(observed, template, *params)?.refine(h_init))
}
