//! Soccer field template and its rasterisation into edge and distance images.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::geometry::{Homography, ImageSize, Point2};
use crate::num::Real;

/// Angular step used when turning arcs into polylines, degrees.
pub const ARC_STEP_DEG: f64 = 1.0;
/// Minimum projective depth (in the front-facing orientation) for rendering.
pub const RENDER_DEPTH_EPS: f64 = 1e-6;

pub const CENTER_CIRCLE_RADIUS: f64 = 9.15;
pub const PENALTY_AREA_DEPTH: f64 = 16.5;
pub const PENALTY_AREA_WIDTH: f64 = 40.32;
pub const GOAL_AREA_DEPTH: f64 = 5.5;
pub const GOAL_AREA_WIDTH: f64 = 18.32;
pub const PENALTY_MARK_DISTANCE: f64 = 11.0;
/// Spots are drawn as small circles.
pub const MARK_RADIUS: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Marking {
    Touchline,
    GoalLine,
    HalfwayLine,
    CenterCircle,
    PenaltyArea,
    GoalArea,
    PenaltyArc,
    CenterMark,
    PenaltyMark,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape<T: Real = f64> {
    Segment { a: Point2<T>, b: Point2<T> },
    /// Counter-clockwise from `start_deg` to `end_deg`.
    Arc { center: Point2<T>, radius: T, start_deg: T, end_deg: T },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Primitive<T: Real = f64> {
    pub marking: Marking,
    pub shape: Shape<T>,
}

impl<T: Real> Primitive<T> {
    /// Vertices of the primitive; arcs are split every [`ARC_STEP_DEG`].
    pub fn polyline(&self) -> Vec<Point2<T>> {
        match self.shape {
            Shape::Segment { a, b } => vec![a, b],
            Shape::Arc { center, radius, start_deg, end_deg } => {
                let sweep = (end_deg - start_deg).as_f64();
                let steps = ((sweep / ARC_STEP_DEG).ceil() as usize).max(1);
                (0..=steps)
                    .map(|k| {
                        let deg = start_deg.as_f64() + sweep * k as f64 / steps as f64;
                        let (s, c) = deg.to_radians().sin_cos();
                        Point2::new(center.x + radius * T::lit(c), center.y + radius * T::lit(s))
                    })
                    .collect()
            }
        }
    }
}

/// Field dimensions and line markings in field coordinates (metres).
#[derive(Clone, Debug, PartialEq)]
pub struct FieldTemplate<T: Real = f64> {
    pub length: T,
    pub width: T,
    pub primitives: Vec<Primitive<T>>,
}

impl<T: Real> FieldTemplate<T> {
    /// Lawful pitch: the full marking set with regulation marking sizes,
    /// positioned for the given touchline and goal line lengths.
    pub fn standard(length: T, width: T) -> Result<Self> {
        let (l, w) = (length.as_f64(), width.as_f64());
        if !(90.0..=120.0).contains(&l) || !(45.0..=90.0).contains(&w) {
            return Err(Error::FieldDimensions { length: l, width: w });
        }
        let p = |x: f64, y: f64| Point2::new(T::lit(x), T::lit(y));
        let mut prims = Vec::new();
        let mut seg = |marking, a: Point2<T>, b: Point2<T>| prims.push(Primitive { marking, shape: Shape::Segment { a, b } });
        seg(Marking::Touchline, p(0.0, 0.0), p(l, 0.0));
        seg(Marking::Touchline, p(0.0, w), p(l, w));
        seg(Marking::GoalLine, p(0.0, 0.0), p(0.0, w));
        seg(Marking::GoalLine, p(l, 0.0), p(l, w));
        seg(Marking::HalfwayLine, p(l / 2.0, 0.0), p(l / 2.0, w));
        for (marking, depth, span) in
            [(Marking::PenaltyArea, PENALTY_AREA_DEPTH, PENALTY_AREA_WIDTH), (Marking::GoalArea, GOAL_AREA_DEPTH, GOAL_AREA_WIDTH)]
        {
            let (y0, y1) = (w / 2.0 - span / 2.0, w / 2.0 + span / 2.0);
            for (x_line, x_box) in [(0.0, depth), (l, l - depth)] {
                seg(marking, p(x_line, y0), p(x_box, y0));
                seg(marking, p(x_box, y0), p(x_box, y1));
                seg(marking, p(x_box, y1), p(x_line, y1));
            }
        }
        let arc = |marking, c: Point2<T>, r: f64, a0: f64, a1: f64| Primitive {
            marking,
            shape: Shape::Arc { center: c, radius: T::lit(r), start_deg: T::lit(a0), end_deg: T::lit(a1) },
        };
        prims.push(arc(Marking::CenterCircle, p(l / 2.0, w / 2.0), CENTER_CIRCLE_RADIUS, 0.0, 360.0));
        prims.push(arc(Marking::CenterMark, p(l / 2.0, w / 2.0), MARK_RADIUS, 0.0, 360.0));
        let half = ((PENALTY_AREA_DEPTH - PENALTY_MARK_DISTANCE) / CENTER_CIRCLE_RADIUS).acos().to_degrees();
        for (mx, mid) in [(PENALTY_MARK_DISTANCE, 0.0), (l - PENALTY_MARK_DISTANCE, 180.0)] {
            prims.push(arc(Marking::PenaltyMark, p(mx, w / 2.0), MARK_RADIUS, 0.0, 360.0));
            prims.push(arc(Marking::PenaltyArc, p(mx, w / 2.0), CENTER_CIRCLE_RADIUS, mid - half, mid + half));
        }
        Ok(FieldTemplate { length, width, primitives: prims })
    }

    pub fn contains(&self, p: Point2<T>, margin: T) -> bool {
        p.x >= -margin && p.y >= -margin && p.x <= self.length + margin && p.y <= self.width + margin
    }

    /// Field corners, counter-clockwise from the origin.
    pub fn corners(&self) -> [Point2<T>; 4] {
        let z = T::zero();
        [Point2::new(z, z), Point2::new(self.length, z), Point2::new(self.length, self.width), Point2::new(z, self.width)]
    }

    /// Polyline edges of every primitive.
    pub fn edges(&self) -> impl Iterator<Item = (Point2<T>, Point2<T>)> + '_ {
        self.primitives.iter().flat_map(|p| {
            let v = p.polyline();
            (0..v.len() - 1).map(move |i| (v[i], v[i + 1])).collect::<Vec<_>>()
        })
    }

    /// Points along every marking, at most `spacing` metres apart.
    pub fn sample_points(&self, spacing: T) -> Vec<Point2<T>> {
        let mut out = Vec::new();
        for (a, b) in self.edges() {
            let len = a.distance(&b);
            let n = (len / spacing).ceil().to_usize().unwrap_or(1).max(1);
            for k in 0..n {
                let t = T::from_count(k) / T::from_count(n);
                out.push(Point2::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t));
            }
        }
        out
    }
}

/// Binary raster of field markings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeImage {
    pub size: ImageSize,
    /// Row-major, one byte per pixel, values 0 or 1.
    pub pixels: Vec<u8>,
}

impl EdgeImage {
    pub fn new(size: ImageSize) -> Result<Self> {
        if size.pixel_count() == 0 {
            return Err(Error::InvalidArgument("edge image must have positive size".into()));
        }
        Ok(EdgeImage { size, pixels: vec![0; size.pixel_count()] })
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.pixels[y as usize * self.size.width as usize + x as usize] != 0
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32) {
        let w = self.size.width as usize;
        self.pixels[y as usize * w + x as usize] = 1;
    }

    pub fn count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p != 0).count()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.iter().all(|&p| p == 0)
    }

    /// Resizes by OR-pooling: a target pixel is lit when any source pixel
    /// mapping into it is lit.
    pub fn resize(&self, target: ImageSize) -> Result<EdgeImage> {
        let mut out = EdgeImage::new(target)?;
        let (sw, sh) = (self.size.width as u64, self.size.height as u64);
        for y in 0..self.size.height {
            let ty = (y as u64 * target.height as u64 / sh) as u32;
            for x in 0..self.size.width {
                if self.get(x, y) {
                    out.set((x as u64 * target.width as u64 / sw) as u32, ty);
                }
            }
        }
        Ok(out)
    }

    /// Binary PGM (`P5`), lit pixels written as 255.
    pub fn write_pgm<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.size.width, self.size.height)?;
        let bytes: Vec<u8> = self.pixels.iter().map(|&p| if p != 0 { 255 } else { 0 }).collect();
        w.write_all(&bytes)?;
        Ok(())
    }

    /// Reads a binary PGM; pixels above half the maximum value are lit.
    pub fn read_pgm<R: BufRead>(mut r: R) -> Result<EdgeImage> {
        let mut tokens = Vec::new();
        let mut line = String::new();
        while tokens.len() < 4 {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                return Err(Error::Format("truncated PGM header".into()));
            }
            let content = line.split('#').next().unwrap_or("");
            tokens.extend(content.split_whitespace().map(str::to_owned));
        }
        if tokens[0] != "P5" || tokens.len() != 4 {
            return Err(Error::Format("expected binary PGM (P5) with header on separate lines".into()));
        }
        let num = |s: &str| s.parse::<u32>().map_err(|_| Error::Format(format!("bad PGM header value '{s}'")));
        let (w, h, maxval) = (num(&tokens[1])?, num(&tokens[2])?, num(&tokens[3])?);
        if maxval == 0 || maxval > 255 {
            return Err(Error::Format("only 8-bit PGM supported".into()));
        }
        let mut img = EdgeImage::new(ImageSize::new(w, h))?;
        let mut buf = vec![0u8; img.pixels.len()];
        r.read_exact(&mut buf).map_err(|_| Error::Format("truncated PGM raster".into()))?;
        for (dst, &src) in img.pixels.iter_mut().zip(&buf) {
            *dst = u8::from(src as u32 * 2 > maxval);
        }
        Ok(img)
    }
}

/// Rasterises the template under `h` at `size`, with strokes of `line_width` pixels.
pub fn render_edge_image<T: Real>(template: &FieldTemplate<T>, h: &Homography<T>, size: ImageSize, line_width: f64) -> Result<EdgeImage> {
    let mut img = EdgeImage::new(size)?;
    let w = size.width as usize;
    rasterize_template(template, h, size, line_width, |x, y| img.pixels[y as usize * w + x as usize] = 1);
    Ok(img)
}

/// Renders at `size` and OR-pools into `target` without materialising the
/// full-resolution raster; identical to `render_edge_image(..).resize(target)`.
pub fn render_resized<T: Real>(
    template: &FieldTemplate<T>,
    h: &Homography<T>,
    size: ImageSize,
    line_width: f64,
    target: ImageSize,
) -> Result<EdgeImage> {
    let mut img = EdgeImage::new(target)?;
    let (sw, sh) = (size.width as u64, size.height as u64);
    let tw = target.width as usize;
    rasterize_template(template, h, size, line_width, |x, y| {
        let tx = (x as u64 * target.width as u64 / sw) as usize;
        let ty = (y as u64 * target.height as u64 / sh) as usize;
        img.pixels[ty * tw + tx] = 1;
    });
    Ok(img)
}

fn rasterize_template<T: Real, F: FnMut(u32, u32)>(template: &FieldTemplate<T>, h: &Homography<T>, size: ImageSize, line_width: f64, mut plot: F) {
    let h = h.cast::<f64>();
    let sign = h.front_sign(size);
    for (a, b) in template.edges() {
        let (a, b) = (a.cast::<f64>(), b.cast::<f64>());
        let (pa, pb) = (h.project(a), h.project(b));
        let (wa, wb) = (sign * pa[2], sign * pb[2]);
        if wa <= RENDER_DEPTH_EPS && wb <= RENDER_DEPTH_EPS {
            continue;
        }
        let clip = |from: Point2, to: Point2, wf: f64, wt: f64| {
            let t = (RENDER_DEPTH_EPS - wf) / (wt - wf);
            Point2::new(from.x + (to.x - from.x) * t, from.y + (to.y - from.y) * t)
        };
        let (a, b) = if wa <= RENDER_DEPTH_EPS {
            (clip(a, b, wa, wb), b)
        } else if wb <= RENDER_DEPTH_EPS {
            (a, clip(b, a, wb, wa))
        } else {
            (a, b)
        };
        let (Ok(ia), Ok(ib)) = (h.apply(a), h.apply(b)) else { continue };
        draw_thick_segment(ia, ib, line_width / 2.0, size, &mut plot);
    }
}

/// Liang-Barsky clip of the segment `a-b` against `[x0, x1] x [y0, y1]`.
pub(crate) fn clip_segment(a: Point2, b: Point2, x0: f64, x1: f64, y0: f64, y1: f64) -> Option<(Point2, Point2)> {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for (p, q) in [(-dx, a.x - x0), (dx, x1 - a.x), (-dy, a.y - y0), (dy, y1 - a.y)] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
            if t0 > t1 {
                return None;
            }
        }
    }
    Some((Point2::new(a.x + t0 * dx, a.y + t0 * dy), Point2::new(a.x + t1 * dx, a.y + t1 * dy)))
}

fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    Point2::new(a.x + t * dx, a.y + t * dy).distance(&p)
}

/// Lights every pixel whose centre lies within `radius` of the segment or
/// whose unit cell the segment crosses.
fn draw_thick_segment<F: FnMut(u32, u32)>(a: Point2, b: Point2, radius: f64, size: ImageSize, plot: &mut F) {
    let reach = radius.max(std::f64::consts::FRAC_1_SQRT_2) + 1.0;
    let (w, h) = (size.width as f64, size.height as f64);
    let Some((a, b)) = clip_segment(a, b, -reach, w - 1.0 + reach, -reach, h - 1.0 + reach) else { return };
    let steep = (b.y - a.y).abs() > (b.x - a.x).abs();
    // iterate along the major axis; (u, v) = (major, minor)
    let (ua, va, ub, vb) = if steep { (a.y, a.x, b.y, b.x) } else { (a.x, a.y, b.x, b.y) };
    let (umax, vmax) = if steep { (size.height as i64 - 1, size.width as i64 - 1) } else { (size.width as i64 - 1, size.height as i64 - 1) };
    let (ulo, uhi) = (ua.min(ub), ua.max(ub));
    let slope = if ub != ua { (vb - va) / (ub - ua) } else { 0.0 };
    let v_at = |u: f64| va + slope * (u.clamp(ulo, uhi) - ua);
    let i0 = ((ulo - reach).floor() as i64).max(0);
    let i1 = ((uhi + reach).ceil() as i64).min(umax);
    for i in i0..=i1 {
        let u = i as f64;
        let (v0, v1) = (v_at(u - reach), v_at(u + reach));
        let j0 = ((v0.min(v1) - reach).floor() as i64).max(0);
        let j1 = ((v0.max(v1) + reach).ceil() as i64).min(vmax);
        for j in j0..=j1 {
            let (x, y) = if steep { (j, i) } else { (i, j) };
            let c = Point2::new(x as f64, y as f64);
            let lit = point_segment_distance(c, a, b) <= radius
                || clip_segment(a, b, c.x - 0.5, c.x + 0.5, c.y - 0.5, c.y + 0.5).is_some();
            if lit {
                plot(x as u32, y as u32);
            }
        }
    }
}

/// Per-pixel Euclidean distance to the nearest lit pixel, clamped at `truncation`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceImage {
    pub size: ImageSize,
    pub truncation: f32,
    pub values: Vec<f32>,
}

impl DistanceImage {
    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f32 {
        self.values[y as usize * self.size.width as usize + x as usize]
    }

    /// Bilinear interpolation; `None` outside the pixel-centre grid.
    pub fn sample(&self, x: f64, y: f64) -> Option<f64> {
        let (w, h) = (self.size.width as f64, self.size.height as f64);
        if !(x >= 0.0 && y >= 0.0 && x <= w - 1.0 && y <= h - 1.0) {
            return None;
        }
        let (x0, y0) = (x.floor().min(w - 2.0).max(0.0), y.floor().min(h - 2.0).max(0.0));
        let (fx, fy) = (x - x0, y - y0);
        let (xi, yi) = (x0 as u32, y0 as u32);
        let x1 = (xi + 1).min(self.size.width - 1);
        let y1 = (yi + 1).min(self.size.height - 1);
        let v00 = self.get(xi, yi) as f64;
        let v10 = self.get(x1, yi) as f64;
        let v01 = self.get(xi, y1) as f64;
        let v11 = self.get(x1, y1) as f64;
        Some(v00 * (1.0 - fx) * (1.0 - fy) + v10 * fx * (1.0 - fy) + v01 * (1.0 - fx) * fy + v11 * fx * fy)
    }

    /// Same distances, clamped at a smaller truncation.
    pub fn clamped(&self, truncation: f32) -> DistanceImage {
        let t = truncation.min(self.truncation);
        DistanceImage { size: self.size, truncation: t, values: self.values.iter().map(|&v| v.min(t)).collect() }
    }
}

/// Exact Euclidean distance transform (separable lower-envelope algorithm),
/// clamped at `truncation`.
pub fn distance_transform(edges: &EdgeImage, truncation: f32) -> Result<DistanceImage> {
    if !(truncation > 0.0) {
        return Err(Error::InvalidArgument("truncation must be positive".into()));
    }
    let (w, h) = (edges.size.width as usize, edges.size.height as usize);
    let inf = 1e20f64;
    let mut grid: Vec<f64> = edges.pixels.iter().map(|&p| if p != 0 { 0.0 } else { inf }).collect();
    let mut buf = vec![0.0; w.max(h)];
    let mut out = vec![0.0; w.max(h)];
    let mut scratch = Envelope::new(w.max(h));
    for x in 0..w {
        for y in 0..h {
            buf[y] = grid[y * w + x];
        }
        scratch.transform(&buf[..h], &mut out[..h]);
        for y in 0..h {
            grid[y * w + x] = out[y];
        }
    }
    for y in 0..h {
        buf[..w].copy_from_slice(&grid[y * w..(y + 1) * w]);
        scratch.transform(&buf[..w], &mut out[..w]);
        grid[y * w..(y + 1) * w].copy_from_slice(&out[..w]);
    }
    let t = truncation as f64;
    let values = grid.iter().map(|&d2| d2.sqrt().min(t) as f32).collect();
    Ok(DistanceImage { size: edges.size, truncation, values })
}

struct Envelope {
    v: Vec<usize>,
    z: Vec<f64>,
}

impl Envelope {
    fn new(n: usize) -> Self {
        Envelope { v: vec![0; n], z: vec![0.0; n + 1] }
    }

    /// One-dimensional squared distance transform of the sampled function `f`.
    fn transform(&mut self, f: &[f64], d: &mut [f64]) {
        let n = f.len();
        let finite: Vec<usize> = (0..n).filter(|&q| f[q] < 1e19).collect();
        if finite.is_empty() {
            d.iter_mut().for_each(|x| *x = 1e20);
            return;
        }
        let (v, z) = (&mut self.v, &mut self.z);
        let mut k = 0usize;
        v[0] = finite[0];
        z[0] = f64::NEG_INFINITY;
        z[1] = f64::INFINITY;
        let parabola_cut = |q: usize, p: usize| ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
        for &q in &finite[1..] {
            let mut s = parabola_cut(q, v[k]);
            while s <= z[k] {
                k -= 1;
                s = parabola_cut(q, v[k]);
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
        }
        let mut k = 0;
        for (q, out) in d.iter_mut().enumerate() {
            while z[k + 1] < q as f64 {
                k += 1;
            }
            let p = v[k];
            let dq = q as f64 - p as f64;
            *out = dq * dq + f[p];
        }
    }
}
