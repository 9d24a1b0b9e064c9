//! Independent exhaustive scan of the ESL tuning criterion.
#![allow(dead_code)]

use robust_panel::simulation::{contaminate, gen_panel, ContaminationKind, ContaminationScheme, DgpConfig};
use robust_panel::PanelData;

pub struct Scan {
    pub xi: Vec<f64>,
    pub det: Vec<Option<f64>>,
    pub best: Option<usize>,
}

fn sorted_median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

/// Recomputes centering, residuals, MAD, the pseudo-outlier split, ξ and
/// det V̂ for K = 2 with explicit 2×2 algebra.
pub fn scan(panel: &PanelData, beta: [f64; 2], grid: &[f64]) -> Scan {
    let (n, t) = (panel.n_units(), panel.n_periods());
    let mut xc = Vec::new();
    let mut e = Vec::new();
    for i in 0..n {
        let ym = (0..t).map(|s| panel.y(i, s)).sum::<f64>() / t as f64;
        let xm: Vec<f64> = (0..2).map(|c| (0..t).map(|s| panel.x(i, s, c)).sum::<f64>() / t as f64).collect();
        for s in 0..t {
            let x = [panel.x(i, s, 0) - xm[0], panel.x(i, s, 1) - xm[1]];
            e.push(panel.y(i, s) - ym - x[0] * beta[0] - x[1] * beta[1]);
            xc.push(x);
        }
    }
    let nt = e.len() as f64;
    let med = sorted_median(&e);
    let dev: Vec<f64> = e.iter().map(|r| (r - med).abs()).collect();
    let s_mad = 1.4826 * sorted_median(&dev);
    let bad: Vec<bool> = e.iter().map(|r| r.abs() >= 2.5 * s_mad).collect();
    let m = bad.iter().filter(|b| **b).count() as f64;

    let mut out = Scan {
        xi: Vec::new(),
        det: Vec::new(),
        best: None,
    };
    for (g, &c) in grid.iter().enumerate() {
        let mut xi = 2.0 * m / nt;
        for (r, b) in e.iter().zip(&bad) {
            if !b {
                xi += 2.0 / nt * (1.0 - (-r * r / c).exp());
            }
        }
        out.xi.push(xi);
        if !(xi > 0.0 && xi <= 1.0) {
            out.det.push(None);
            continue;
        }
        let mut f = 0.0;
        let mut g2 = [0.0; 3];
        let mut smean = [0.0; 2];
        for (r, x) in e.iter().zip(&xc) {
            f += (-r * r / c).exp() * (2.0 * r * r / c - 1.0) / nt;
            g2[0] += x[0] * x[0] / nt;
            g2[1] += x[0] * x[1] / nt;
            g2[2] += x[1] * x[1] / nt;
            let w = (-r * r / c).exp() * 2.0 * r / c;
            smean[0] += w * x[0] / nt;
            smean[1] += w * x[1] / nt;
        }
        let mut sig = [0.0; 3];
        for (r, x) in e.iter().zip(&xc) {
            let w = (-r * r / c).exp() * 2.0 * r / c;
            let d = [w * x[0] - smean[0], w * x[1] - smean[1]];
            sig[0] += d[0] * d[0] / nt;
            sig[1] += d[0] * d[1] / nt;
            sig[2] += d[1] * d[1] / nt;
        }
        let k = 2.0 / c * f;
        let det_i = k * k * (g2[0] * g2[2] - g2[1] * g2[1]);
        let det_s = sig[0] * sig[2] - sig[1] * sig[1];
        // det(I⁻¹ Σ I⁻¹) = det Σ / det(I)²
        let d = det_s / (det_i * det_i);
        out.det.push(Some(d));
        if out.best.is_none_or(|b| d < out.det[b].unwrap()) {
            out.best = Some(g);
        }
    }
    out
}

pub fn fixture() -> PanelData {
    let p = gen_panel(&DgpConfig::new(120, 2).with_seed(2024)).unwrap();
    contaminate(
        &p,
        &ContaminationScheme {
            kind: ContaminationKind::RandomVertical,
            m: 24,
            seed: 7,
        },
    )
    .unwrap()
}
