//! Histogram and top-down scene exports as CSV plus SVG.

use std::fmt::Write as _;

use lidarxai_core::attribution::{outline_width, AttributionFrame, TraceRow};
use lidarxai_core::world::lidar::{ray_angle, RAYS_PER_SECTOR};
use lidarxai_core::world::{Bounds, Pose, Scene, Shape, Vec2, NUM_RAYS};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistBin {
    pub series: &'static str,
    pub bin: usize,
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

pub const SERIES: [&str; 3] = ["lidar_raw", "goal_raw", "g_star"];

/// Values of each series across all trace rows, in [`SERIES`] order.
pub fn series_values(rows: &[TraceRow]) -> [Vec<f64>; 3] {
    let lidar = rows.iter().flat_map(|r| r.g).collect();
    let goal = rows.iter().flat_map(|r| r.g_goal).collect();
    let g_star = rows.iter().flat_map(|r| r.g_star).collect();
    [lidar, goal, g_star]
}

fn bins_for(series: &'static str, values: &[f64], lo: f64, hi: f64, n: usize) -> Vec<HistBin> {
    let width = if hi > lo { (hi - lo) / n as f64 } else { 1.0 };
    let mut counts = vec![0u64; n];
    for &v in values {
        let i = (((v - lo) / width).floor().max(0.0) as usize).min(n - 1);
        counts[i] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(bin, count)| HistBin {
            series,
            bin,
            lo: lo + bin as f64 * width,
            hi: lo + (bin + 1) as f64 * width,
            count,
        })
        .collect()
}

/// Raw lidar and goal gradients share one range so their spreads compare
/// directly; `g*` is binned over `[0, 1]`.
pub fn histogram(rows: &[TraceRow], n_bins: usize) -> Vec<HistBin> {
    let [lidar, goal, g_star] = series_values(rows);
    let raw = lidar.iter().chain(&goal);
    let lo = raw.clone().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 1.0) };
    let mut bins = bins_for(SERIES[0], &lidar, lo, hi, n_bins);
    bins.extend(bins_for(SERIES[1], &goal, lo, hi, n_bins));
    bins.extend(bins_for(SERIES[2], &g_star, 0.0, 1.0, n_bins));
    bins
}

/// Three stacked panels with a log10 count axis; empty bins are left blank.
pub fn histogram_svg(bins: &[HistBin]) -> String {
    const W: f64 = 640.0;
    const PANEL: f64 = 180.0;
    const PAD: f64 = 40.0;
    let colors = ["#1f77b4", "#d62728", "#2ca02c"];
    let max_count = bins.iter().map(|b| b.count).max().unwrap_or(1).max(1) as f64;
    let top = max_count.log10().ceil().max(1.0);
    let height = SERIES.len() as f64 * (PANEL + PAD) + PAD;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (p, series) in SERIES.iter().enumerate() {
        let panel: Vec<&HistBin> = bins.iter().filter(|b| b.series == *series).collect();
        let y0 = PAD + p as f64 * (PANEL + PAD);
        let x0 = 60.0;
        let plot_w = W - x0 - 20.0;
        let _ = writeln!(svg, r#"<text x="{x0}" y="{}">{series} (log count)</text>"#, y0 - 8.0);
        let _ = writeln!(
            svg,
            r##"<rect x="{x0}" y="{y0}" width="{plot_w}" height="{PANEL}" fill="none" stroke="#888"/>"##
        );
        for decade in 0..=top as u32 {
            let y = y0 + PANEL - PANEL * decade as f64 / top;
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" text-anchor="end">1e{decade}</text>"#,
                x0 - 4.0,
                y + 4.0
            );
        }
        let (Some(first), Some(last)) = (panel.first(), panel.last()) else {
            continue;
        };
        let bar_w = plot_w / panel.len() as f64;
        for (i, b) in panel.iter().enumerate() {
            if b.count == 0 {
                continue;
            }
            let h = PANEL * ((b.count as f64).log10() + 0.05 * top).min(top) / top;
            let _ = writeln!(
                svg,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{h:.2}" fill="{}"/>"#,
                x0 + i as f64 * bar_w,
                y0 + PANEL - h,
                bar_w.max(1.0),
                colors[p]
            );
        }
        let _ = writeln!(svg, r#"<text x="{x0}" y="{}">{:.3e}</text>"#, y0 + PANEL + 14.0, first.lo);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end">{:.3e}</text>"#,
            x0 + plot_w,
            y0 + PANEL + 14.0,
            last.hi
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RayRow {
    pub ray: usize,
    pub sector: usize,
    pub angle: f64,
    pub distance: f64,
    pub end_x: f64,
    pub end_y: f64,
    pub hit: Option<u32>,
    /// Whether this ray set its sector's pooled minimum.
    pub pooled: bool,
    pub g_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectRow {
    pub id: u32,
    pub kind: &'static str,
    pub center_x: f64,
    pub center_y: f64,
    pub score: f64,
    pub outline_width: f64,
    pub rank: usize,
}

pub fn ray_rows(pose: &Pose, frame: &AttributionFrame) -> Vec<RayRow> {
    let scan = &frame.observation.scan;
    (0..NUM_RAYS)
        .map(|k| {
            let sector = k / RAYS_PER_SECTOR;
            let end = scan.endpoint(pose, k);
            RayRow {
                ray: k,
                sector,
                angle: ray_angle(pose.heading, k),
                distance: scan.distances[k],
                end_x: end.x,
                end_y: end.y,
                hit: scan.hit_object[k].map(|id| id.0),
                pooled: frame.observation.pooled.contributing_ray[sector] == k,
                g_star: frame.processed.g_star[sector],
            }
        })
        .collect()
}

pub fn object_rows(scene: &Scene, frame: &AttributionFrame) -> Vec<ObjectRow> {
    let ranking = &frame.importance.ground_truth_ranking;
    scene
        .obstacles
        .iter()
        .map(|o| {
            let score = frame.importance.score(o.id).unwrap_or(0.0);
            let c = o.shape.center();
            ObjectRow {
                id: o.id.0,
                kind: match o.shape {
                    Shape::Rect { .. } => "rect",
                    Shape::Circle { .. } => "circle",
                },
                center_x: c.x,
                center_y: c.y,
                score,
                outline_width: outline_width(score),
                rank: ranking.iter().position(|&id| id == o.id).map_or(0, |p| p + 1),
            }
        })
        .collect()
}

/// Blue (0) to red (1).
fn heat(score: f64) -> String {
    let s = score.clamp(0.0, 1.0);
    let r = (255.0 * s).round() as u8;
    let b = (255.0 * (1.0 - s)).round() as u8;
    format!("#{r:02x}30{b:02x}")
}

struct View {
    bounds: Bounds,
    scale: f64,
}

impl View {
    fn px(&self, p: Vec2) -> (f64, f64) {
        (
            (p.x - self.bounds.min.x) * self.scale,
            (self.bounds.max.y - p.y) * self.scale,
        )
    }
}

/// Top-down map: obstacles outlined by importance, pooled rays colored by `g*`,
/// other rays faint, the goal as a green circle and the robot as a triangle.
pub fn scene_svg(scene: &Scene, pose: &Pose, frame: &AttributionFrame) -> String {
    const SIZE: f64 = 600.0;
    let width = scene.bounds.max.x - scene.bounds.min.x;
    let view = View {
        bounds: scene.bounds,
        scale: SIZE / width,
    };
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{:.0}">"#,
        (scene.bounds.max.y - scene.bounds.min.y) * view.scale
    );
    let _ = writeln!(svg, r##"<rect width="100%" height="100%" fill="#202020"/>"##);
    let (rx, ry) = view.px(pose.position);
    for row in ray_rows(pose, frame) {
        let (ex, ey) = view.px(Vec2::new(row.end_x, row.end_y));
        let (color, w, opacity) = if row.pooled {
            (heat(row.g_star), 2.0, 1.0)
        } else {
            ("#707070".to_string(), 0.5, 0.35)
        };
        let _ = writeln!(
            svg,
            r#"<line x1="{rx:.2}" y1="{ry:.2}" x2="{ex:.2}" y2="{ey:.2}" stroke="{color}" stroke-width="{w}" stroke-opacity="{opacity}"/>"#
        );
    }
    for o in &scene.obstacles {
        let score = frame.importance.score(o.id).unwrap_or(0.0);
        let stroke = outline_width(score);
        match o.shape {
            Shape::Circle { center, radius } => {
                let (cx, cy) = view.px(center);
                let _ = writeln!(
                    svg,
                    r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="#8c6d46" stroke="white" stroke-width="{stroke:.2}"/>"##,
                    radius * view.scale
                );
            }
            Shape::Rect { center, half_extents } => {
                let (x, y) = view.px(Vec2::new(center.x - half_extents.x, center.y + half_extents.y));
                let _ = writeln!(
                    svg,
                    r##"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="#8c6d46" stroke="white" stroke-width="{stroke:.2}"/>"##,
                    2.0 * half_extents.x * view.scale,
                    2.0 * half_extents.y * view.scale
                );
            }
        }
        let (cx, cy) = view.px(o.shape.center());
        let _ = writeln!(
            svg,
            r#"<text x="{cx:.2}" y="{cy:.2}" fill="white" font-size="12" text-anchor="middle">{}</text>"#,
            o.id
        );
    }
    let (gx, gy) = view.px(scene.goal);
    let _ = writeln!(
        svg,
        r##"<circle cx="{gx:.2}" cy="{gy:.2}" r="{:.2}" fill="none" stroke="#2ecc40" stroke-width="3"/>"##,
        0.3 * view.scale
    );
    let _ = writeln!(
        svg,
        r##"<line x1="{rx:.2}" y1="{ry:.2}" x2="{gx:.2}" y2="{gy:.2}" stroke="#2ecc40" stroke-dasharray="4 4"/>"##
    );
    let tip = pose.position + Vec2::from_angle(pose.heading) * 0.35;
    let left = pose.position + Vec2::from_angle(pose.heading + 2.5) * 0.2;
    let right = pose.position + Vec2::from_angle(pose.heading - 2.5) * 0.2;
    let pts: Vec<String> = [tip, left, right]
        .iter()
        .map(|p| {
            let (x, y) = view.px(*p);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let _ = writeln!(svg, r##"<polygon points="{}" fill="#ffdc00"/>"##, pts.join(" "));
    svg.push_str("</svg>\n");
    svg
}
