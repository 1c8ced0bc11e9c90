use std::fmt::Write;

use crate::capacity_tree::{geographic_mean, TerritoryCluster};
use crate::ingest::Order;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const PAD_LEFT: f64 = 70.0;
const PAD_RIGHT: f64 = 20.0;
const PAD_TOP: f64 = 40.0;
const PAD_BOTTOM: f64 = 50.0;
const MARGIN_FRACTION: f64 = 0.05;

// Tableau 20.
const PALETTE: [&str; 20] = [
    "#1f77b4", "#aec7e8", "#ff7f0e", "#ffbb78", "#2ca02c", "#98df8a", "#d62728", "#ff9896", "#9467bd", "#c5b0d5",
    "#8c564b", "#c49c94", "#e377c2", "#f7b6d2", "#7f7f7f", "#c7c7c7", "#bcbd22", "#dbdb8d", "#17becf", "#9edae5",
];

pub fn cluster_color(cluster_id: usize) -> &'static str {
    PALETTE[cluster_id.saturating_sub(1) % PALETTE.len()]
}

struct Viewport {
    min_x: f64,
    max_x: f64,
    min_y: f64,
    max_y: f64,
}

impl Viewport {
    fn fit<'a>(orders: impl Iterator<Item = &'a Order>) -> Option<Self> {
        let mut v: Option<Viewport> = None;
        for o in orders {
            let b = v.get_or_insert(Viewport {
                min_x: o.lon,
                max_x: o.lon,
                min_y: o.lat,
                max_y: o.lat,
            });
            b.min_x = b.min_x.min(o.lon);
            b.max_x = b.max_x.max(o.lon);
            b.min_y = b.min_y.min(o.lat);
            b.max_y = b.max_y.max(o.lat);
        }
        v.map(|mut b| {
            let pad = |lo: &mut f64, hi: &mut f64| {
                let span = *hi - *lo;
                let m = if span > 0.0 { span * MARGIN_FRACTION } else { 1e-3 };
                *lo -= m;
                *hi += m;
            };
            pad(&mut b.min_x, &mut b.max_x);
            pad(&mut b.min_y, &mut b.max_y);
            b
        })
    }

    fn px(&self, lon: f64) -> f64 {
        PAD_LEFT + (lon - self.min_x) / (self.max_x - self.min_x) * (WIDTH - PAD_LEFT - PAD_RIGHT)
    }

    fn py(&self, lat: f64) -> f64 {
        HEIGHT - PAD_BOTTOM - (lat - self.min_y) / (self.max_y - self.min_y) * (HEIGHT - PAD_TOP - PAD_BOTTOM)
    }
}

/// Scatter of numbered groups: members filled with the group's palette
/// color, a cross at each group's mean position, oversized orders as hollow
/// gray circles. Output is a pure function of the input.
pub fn render_groups_svg(title: &str, groups: &[(usize, &[Order])], oversized: &[Order]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{PAD_LEFT}" y="{PAD_TOP}" width="{:.2}" height="{:.2}" fill="none" stroke="black" stroke-width="1"/>"#,
        WIDTH - PAD_LEFT - PAD_RIGHT,
        HEIGHT - PAD_TOP - PAD_BOTTOM
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">longitude</text>"#,
        (WIDTH + PAD_LEFT - PAD_RIGHT) / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.2})">latitude</text>"#,
        (HEIGHT + PAD_TOP - PAD_BOTTOM) / 2.0,
        (HEIGHT + PAD_TOP - PAD_BOTTOM) / 2.0
    );

    let all = groups.iter().flat_map(|(_, g)| g.iter()).chain(oversized);
    if let Some(view) = Viewport::fit(all) {
        let bottom = HEIGHT - PAD_BOTTOM;
        let _ = writeln!(
            s,
            r#"<g font-family="sans-serif" font-size="10"><text x="{PAD_LEFT}" y="{:.2}" text-anchor="start">{:.4}</text><text x="{:.2}" y="{:.2}" text-anchor="end">{:.4}</text><text x="{:.2}" y="{bottom:.2}" text-anchor="end">{:.4}</text><text x="{:.2}" y="{:.2}" text-anchor="end">{:.4}</text></g>"#,
            bottom + 14.0,
            view.min_x,
            WIDTH - PAD_RIGHT,
            bottom + 14.0,
            view.max_x,
            PAD_LEFT - 4.0,
            view.min_y,
            PAD_LEFT - 4.0,
            PAD_TOP + 10.0,
            view.max_y
        );

        s.push_str("<g stroke=\"none\">\n");
        for (id, members) in groups {
            let color = cluster_color(*id);
            for o in members.iter() {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                    view.px(o.lon),
                    view.py(o.lat)
                );
            }
        }
        s.push_str("</g>\n<g fill=\"none\" stroke=\"#808080\" stroke-width=\"1.2\">\n");
        for o in oversized {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="4.5"/>"#, view.px(o.lon), view.py(o.lat));
        }
        s.push_str("</g>\n<g stroke=\"black\" stroke-width=\"1.5\">\n");
        for (_, members) in groups {
            if let Some((lon, lat)) = geographic_mean(members) {
                let (x, y) = (view.px(lon), view.py(lat));
                let _ = writeln!(
                    s,
                    r#"<path d="M{:.2} {:.2}L{:.2} {:.2}M{:.2} {:.2}L{:.2} {:.2}"/>"#,
                    x - 5.0,
                    y - 5.0,
                    x + 5.0,
                    y + 5.0,
                    x - 5.0,
                    y + 5.0,
                    x + 5.0,
                    y - 5.0
                );
            }
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}

/// Final-state plot of the numbered clusters.
pub fn export_svg_plot(clusters: &[TerritoryCluster], oversized: &[Order]) -> String {
    let groups: Vec<(usize, &[Order])> = clusters.iter().map(|c| (c.cluster_id, c.members.as_slice())).collect();
    let title = format!("{} clusters, {} oversized orders", clusters.len(), oversized.len());
    render_groups_svg(&title, &groups, oversized)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
