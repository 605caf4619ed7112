//! Plain SVG rendering of |c_n(t)| and P_r(t).

use std::fmt::Write;

use super::io::TrajectoryData;

const WIDTH: f64 = 720.0;
const MAP_HEIGHT: f64 = 360.0;
const PLOT_HEIGHT: f64 = 140.0;
const MARGIN: f64 = 50.0;
const GAP: f64 = 40.0;

/// Viridis-like stops for amplitudes from 0 to the maximum.
const STOPS: [(f64, [u8; 3]); 5] = [
    (0.0, [68, 1, 84]),
    (0.25, [59, 82, 139]),
    (0.5, [33, 145, 140]),
    (0.75, [94, 201, 98]),
    (1.0, [253, 231, 37]),
];

fn color(x: f64) -> String {
    let x = x.clamp(0.0, 1.0);
    let i = STOPS.iter().position(|s| s.0 >= x).unwrap_or(STOPS.len() - 1).max(1);
    let (a, ca) = STOPS[i - 1];
    let (b, cb) = STOPS[i];
    let f = (x - a) / (b - a);
    let mix = |k: usize| (ca[k] as f64 + f * (cb[k] as f64 - ca[k] as f64)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(0), mix(1), mix(2))
}

/// Heat map of |c_n(t)| (time across, site up) above a line plot of P_r(t).
pub fn render(data: &TrajectoryData) -> String {
    let samples = data.times.len();
    let sites = data.sites();
    let total_height = 2.0 * MARGIN + MAP_HEIGHT + GAP + PLOT_HEIGHT;
    let plot_w = WIDTH - 2.0 * MARGIN;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{total_height}" viewBox="0 0 {WIDTH} {total_height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    let peak = data
        .amplitudes
        .iter()
        .flatten()
        .map(|c| c.norm())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let cw = plot_w / samples as f64;
    let ch = MAP_HEIGHT / sites as f64;
    let _ = writeln!(s, r#"<g shape-rendering="crispEdges">"#);
    for (i, psi) in data.amplitudes.iter().enumerate() {
        for (n, c) in psi.iter().enumerate() {
            let x = MARGIN + i as f64 * cw;
            let y = MARGIN + MAP_HEIGHT - (n + 1) as f64 * ch;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.3}" y="{y:.3}" width="{:.3}" height="{:.3}" fill="{}"/>"#,
                cw + 0.05,
                ch + 0.05,
                color(c.norm() / peak)
            );
        }
    }
    let _ = writeln!(s, "</g>");

    let (t0, t1) = (data.times[0], *data.times.last().unwrap());
    let span = if t1 > t0 { t1 - t0 } else { 1.0 };
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="{}">|c_n(t)|, sites 0..{}, t in [{t0:.4}, {t1:.4}], max {peak:.3}</text>"#,
        MARGIN - 8.0,
        sites.saturating_sub(1)
    );

    let top = MARGIN + MAP_HEIGHT + GAP;
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{top}" width="{plot_w}" height="{PLOT_HEIGHT}" fill="none" stroke="black"/>"#
    );
    let pr = data.revival();
    let points: Vec<String> = data
        .times
        .iter()
        .zip(&pr)
        .map(|(t, p)| {
            let x = if samples == 1 {
                MARGIN + 0.5 * plot_w
            } else {
                MARGIN + (t - t0) / span * plot_w
            };
            let y = top + (1.0 - p.clamp(0.0, 1.0)) * PLOT_HEIGHT;
            format!("{x:.3},{y:.3}")
        })
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline fill="none" stroke="crimson" stroke-width="1.2" points="{}"/>"#,
        points.join(" ")
    );
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="{}">P_r(t)</text>"#, top - 6.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">1</text>"#, MARGIN - 4.0, top + 4.0);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">0</text>"#,
        MARGIN - 4.0,
        top + PLOT_HEIGHT
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn colormap_endpoints() {
        assert_eq!(color(0.0), "#440154");
        assert_eq!(color(1.0), "#fde725");
        assert_eq!(color(2.0), "#fde725");
    }

    #[test]
    fn one_sample_gives_one_column() {
        let data = TrajectoryData {
            times: vec![0.0],
            amplitudes: vec![vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]],
        };
        let svg = render(&data);
        assert_eq!(svg.matches("<rect x=").count(), 3); // two cells + plot frame
        assert!(svg.ends_with("</svg>\n"));
    }
}
