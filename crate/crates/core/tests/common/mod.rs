#![allow(dead_code)]

pub mod esl_scan;

use std::path::PathBuf;

use num::{BigInt, BigRational, ToPrimitive, Zero};
use robust_panel::io::read_panel_csv;
use robust_panel::PanelData;

pub fn gasoline_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/gasoline.csv")
}

pub fn gasoline() -> PanelData {
    read_panel_csv(gasoline_path()).expect("gasoline panel")
}

fn rat(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite")
}

/// Within-group LS solved in exact rational arithmetic from the raw cells:
/// exact unit means, exact normal equations, fraction-free Gaussian elimination.
pub fn exact_within_ls(panel: &PanelData) -> Vec<f64> {
    let (n, t, k) = (panel.n_units(), panel.n_periods(), panel.n_regressors());
    let tt = BigRational::from_integer(BigInt::from(t));
    let mut xtx = vec![vec![BigRational::zero(); k]; k];
    let mut xty = vec![BigRational::zero(); k];
    for i in 0..n {
        let ybar = (0..t).map(|s| rat(panel.y(i, s))).fold(BigRational::zero(), |a, b| a + b) / &tt;
        let xbar: Vec<BigRational> = (0..k)
            .map(|c| (0..t).map(|s| rat(panel.x(i, s, c))).fold(BigRational::zero(), |a, b| a + b) / &tt)
            .collect();
        for s in 0..t {
            let yc = rat(panel.y(i, s)) - &ybar;
            let xc: Vec<BigRational> = (0..k).map(|c| rat(panel.x(i, s, c)) - &xbar[c]).collect();
            for a in 0..k {
                xty[a] += &xc[a] * &yc;
                for b in 0..k {
                    xtx[a][b] += &xc[a] * &xc[b];
                }
            }
        }
    }
    // augmented elimination
    let mut m: Vec<Vec<BigRational>> = (0..k)
        .map(|a| {
            let mut row = xtx[a].clone();
            row.push(xty[a].clone());
            row
        })
        .collect();
    for col in 0..k {
        let piv = (col..k).find(|&r| !m[r][col].is_zero()).expect("nonsingular");
        m.swap(col, piv);
        for r in 0..k {
            if r != col && !m[r][col].is_zero() {
                let f = &m[r][col] / &m[col][col];
                for c in col..=k {
                    let v = &m[col][c] * &f;
                    m[r][c] -= v;
                }
            }
        }
    }
    (0..k).map(|a| (&m[a][k] / &m[a][a]).to_f64().expect("representable")).collect()
}
