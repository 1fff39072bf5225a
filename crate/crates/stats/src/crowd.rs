//! Crowd rate: participant pixel area over participant-plus-road area,
//! a per-image proxy for traffic flow density.

use tspkit_data::{ClassRegistry, LabelMap, IGNORE_LABEL};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrowdRate {
    /// Pixels of traffic-participant classes (S_t).
    pub participant_area: u64,
    /// Pixels of road classes (S_r).
    pub road_area: u64,
    /// S_t / (S_t + S_r); 0 when both areas are empty.
    pub rate: f64,
    /// True when S_t + S_r == 0 and the rate defaulted to 0.
    pub undefined: bool,
}

pub fn crowd_rate(label: &LabelMap, registry: &ClassRegistry) -> CrowdRate {
    let mut s_t = 0u64;
    let mut s_r = 0u64;
    for &p in label.pixels() {
        if p == IGNORE_LABEL {
            continue;
        }
        if registry.is_participant(p) {
            s_t += 1;
        } else if registry.get(p).is_some_and(|c| c.is_road) {
            s_r += 1;
        }
    }
    let (rate, undefined) = if s_t + s_r == 0 {
        (0.0, true)
    } else {
        (s_t as f64 / (s_t + s_r) as f64, false)
    };
    CrowdRate {
        participant_area: s_t,
        road_area: s_r,
        rate,
        undefined,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrowdEntry {
    pub image_id: String,
    pub participant_area: u64,
    pub road_area: u64,
    pub rate: f64,
}

/// Per-image crowd rates, sorted by image id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CrowdRateSeries {
    pub entries: Vec<CrowdEntry>,
}

impl CrowdRateSeries {
    pub fn compute<'a, I>(items: I, registry: &ClassRegistry) -> CrowdRateSeries
    where
        I: IntoIterator<Item = (&'a str, &'a LabelMap)>,
    {
        let mut entries: Vec<CrowdEntry> = items
            .into_iter()
            .map(|(id, label)| {
                let c = crowd_rate(label, registry);
                CrowdEntry {
                    image_id: id.to_string(),
                    participant_area: c.participant_area,
                    road_area: c.road_area,
                    rate: c.rate,
                }
            })
            .collect();
        entries.sort_by(|a, b| a.image_id.cmp(&b.image_id));
        CrowdRateSeries { entries }
    }

    pub fn min_rate(&self) -> f64 {
        self.entries.iter().map(|e| e.rate).fold(f64::NAN, f64::min)
    }

    pub fn max_rate(&self) -> f64 {
        self.entries.iter().map(|e| e.rate).fold(f64::NAN, f64::max)
    }

    pub fn mean_rate(&self) -> f64 {
        if self.entries.is_empty() {
            return f64::NAN;
        }
        self.entries.iter().map(|e| e.rate).sum::<f64>() / self.entries.len() as f64
    }

    /// `image_id,S_t,S_r,rate` with the rate at six decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("image_id,S_t,S_r,rate\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{:.6}\n",
                e.image_id, e.participant_area, e.road_area, e.rate
            ));
        }
        out
    }

    /// Self-contained SVG bar chart of the per-image rates on a fixed [0, 1]
    /// axis.
    pub fn to_svg(&self) -> String {
        const W: f64 = 800.0;
        const H: f64 = 300.0;
        const MARGIN_L: f64 = 50.0;
        const MARGIN_B: f64 = 30.0;
        const MARGIN_T: f64 = 24.0;
        let plot_w = W - MARGIN_L - 10.0;
        let plot_h = H - MARGIN_T - MARGIN_B;
        let mut svg = String::new();
        svg.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
        ));
        svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"16\" font-family=\"sans-serif\" font-size=\"13\">Crowd rate per image</text>\n",
            MARGIN_L
        ));
        for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let y = MARGIN_T + plot_h * (1.0 - tick);
            svg.push_str(&format!(
                "<line x1=\"{MARGIN_L}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#ddd\"/>\n",
                MARGIN_L + plot_w
            ));
            svg.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">{tick:.2}</text>\n",
                MARGIN_L - 6.0,
                y + 3.0
            ));
        }
        let n = self.entries.len().max(1);
        let step = plot_w / n as f64;
        let bar_w = (step * 0.8).max(0.5);
        for (i, e) in self.entries.iter().enumerate() {
            let x = MARGIN_L + i as f64 * step + (step - bar_w) / 2.0;
            let h = plot_h * e.rate;
            let y = MARGIN_T + plot_h - h;
            svg.push_str(&format!(
                "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{bar_w:.2}\" height=\"{h:.2}\" fill=\"#4878cf\"><title>{}: {:.6}</title></rect>\n",
                e.image_id, e.rate
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">{} images</text>\n",
            MARGIN_L + plot_w / 2.0,
            H - 8.0,
            self.entries.len()
        ));
        svg.push_str("</svg>\n");
        svg
    }
}
