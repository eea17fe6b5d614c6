//! Grayscale phase-transition heatmaps as standalone SVG.

use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::{Method, TrialRecord};

const CELL: usize = 40;
const MARGIN_LEFT: usize = 70;
const MARGIN_TOP: usize = 34;
const MARGIN_RIGHT: usize = 20;
const MARGIN_BOTTOM: usize = 58;

/// Renders the success-rate grid for one (n, method) slice of the records:
/// corruption fraction on the horizontal axis, oversampling ratio m/n
/// ascending upward, one rect per cell shaded rgb(v,v,v) with
/// v = floor(255·rate). Every (ratio, p_fail) pair must be present or the
/// grid is rejected as ragged.
pub fn heatmap_svg(records: &[TrialRecord], n: usize, method: Method) -> Result<String> {
    let slice: Vec<&TrialRecord> = records
        .iter()
        .filter(|r| r.n == n && r.method == method)
        .collect();
    if slice.is_empty() {
        return Err(Error::NoRecords);
    }

    let mut ms: Vec<usize> = slice.iter().map(|r| r.m).collect();
    ms.sort_unstable();
    ms.dedup();
    let mut p_fails: Vec<f64> = slice.iter().map(|r| r.p_fail).collect();
    p_fails.sort_by(|a, b| a.partial_cmp(b).expect("finite p_fail"));
    p_fails.dedup();

    let mut trials = vec![0usize; ms.len() * p_fails.len()];
    let mut successes = vec![0usize; ms.len() * p_fails.len()];
    for r in &slice {
        let row = ms.binary_search(&r.m).expect("m collected above");
        let col = p_fails
            .iter()
            .position(|p| *p == r.p_fail)
            .expect("p_fail collected above");
        trials[row * p_fails.len() + col] += 1;
        successes[row * p_fails.len() + col] += r.success as usize;
    }
    for (idx, &t) in trials.iter().enumerate() {
        if t == 0 {
            let row = idx / p_fails.len();
            let col = idx % p_fails.len();
            return Err(Error::RaggedGrid(format!(
                "no trials at m = {}, p_fail = {} for n = {n}, method = {method}",
                ms[row], p_fails[col]
            )));
        }
    }

    let width = MARGIN_LEFT + CELL * p_fails.len() + MARGIN_RIGHT;
    let height = MARGIN_TOP + CELL * ms.len() + MARGIN_BOTTOM;
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         width=\"{width}\" height=\"{height}\">\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"20\" font-family=\"monospace\" font-size=\"13\">\
         success rate, n = {n}, method = {method}</text>\n",
        MARGIN_LEFT
    ));

    for (row, &m) in ms.iter().enumerate() {
        // Largest ratio on top.
        let y = MARGIN_TOP + CELL * (ms.len() - 1 - row);
        for (col, _) in p_fails.iter().enumerate() {
            let x = MARGIN_LEFT + CELL * col;
            let t = trials[row * p_fails.len() + col];
            let s = successes[row * p_fails.len() + col];
            let rate = s as f64 / t as f64;
            let v = (rate * 255.0).floor() as u8;
            svg.push_str(&format!(
                "<rect x=\"{x}\" y=\"{y}\" width=\"{CELL}\" height=\"{CELL}\" \
                 fill=\"rgb({v},{v},{v})\"/>\n"
            ));
        }
        let ratio = m as f64 / n as f64;
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" \
             text-anchor=\"end\">{ratio}</text>\n",
            MARGIN_LEFT - 6,
            y + CELL / 2 + 4
        ));
    }

    for (col, p) in p_fails.iter().enumerate() {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" \
             text-anchor=\"middle\">{p}</text>\n",
            MARGIN_LEFT + CELL * col + CELL / 2,
            MARGIN_TOP + CELL * ms.len() + 16
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" \
         text-anchor=\"middle\">corruption fraction p_fail</text>\n",
        MARGIN_LEFT + CELL * p_fails.len() / 2,
        MARGIN_TOP + CELL * ms.len() + 40
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" \
         text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">oversampling m/n</text>\n",
        MARGIN_TOP + CELL * ms.len() / 2,
        MARGIN_TOP + CELL * ms.len() / 2
    ));
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_heatmap(
    records: &[TrialRecord],
    n: usize,
    method: Method,
    path: &Path,
) -> Result<()> {
    std::fs::write(path, heatmap_svg(records, n, method)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::InitKind;

    fn rec(n: usize, m: usize, p: f64, success: bool) -> TrialRecord {
        TrialRecord {
            n,
            m,
            p_fail: p,
            method: Method::ProxLinear,
            init: InitKind::Big,
            seed: 0,
            success,
            rel_error: 0.0,
            outer_iters: 0,
            inner_iters: 0,
            matvecs: 0,
            wall_ms: 0.0,
            reason: String::new(),
        }
    }

    #[test]
    fn half_rate_maps_to_127() {
        let records = vec![rec(4, 8, 0.0, true), rec(4, 8, 0.0, false)];
        let svg = heatmap_svg(&records, 4, Method::ProxLinear).unwrap();
        assert!(svg.contains("rgb(127,127,127)"), "{svg}");
    }

    #[test]
    fn full_and_zero_rates() {
        let records = vec![rec(4, 8, 0.0, true), rec(4, 8, 0.1, false)];
        let svg = heatmap_svg(&records, 4, Method::ProxLinear).unwrap();
        assert!(svg.contains("rgb(255,255,255)"));
        assert!(svg.contains("rgb(0,0,0)"));
    }

    #[test]
    fn larger_ratio_sits_higher() {
        let records = vec![
            rec(4, 8, 0.0, true),
            rec(4, 16, 0.0, false),
        ];
        let svg = heatmap_svg(&records, 4, Method::ProxLinear).unwrap();
        let y_of = |needle: &str| {
            // y="..." precedes the fill attribute within the same rect.
            let i = svg.find(needle).unwrap();
            let y0 = svg[..i].rfind(" y=\"").unwrap() + 4;
            svg[y0..y0 + svg[y0..].find('"').unwrap()]
                .parse::<usize>()
                .unwrap()
        };
        // m = 16 row is filled black, m = 8 white; black must be above.
        assert!(y_of("fill=\"rgb(0,0,0)\"") < y_of("fill=\"rgb(255,255,255)\""));
    }

    #[test]
    fn missing_cell_is_ragged() {
        let records = vec![
            rec(4, 8, 0.0, true),
            rec(4, 8, 0.1, true),
            rec(4, 16, 0.0, true),
        ];
        match heatmap_svg(&records, 4, Method::ProxLinear) {
            Err(Error::RaggedGrid(msg)) => assert!(msg.contains("m = 16")),
            other => panic!("expected ragged grid, got {other:?}"),
        }
    }
}
