//! Gauss–Kronrod quadrature for complex-valued integrands.

use num_complex::Complex64 as C64;
use std::collections::BinaryHeap;

use crate::error::Result;

pub(crate) const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
pub(crate) const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// 7-point Gauss weights on XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// The 15 Kronrod nodes mapped onto `[a, b]`, with their weights.
pub fn kronrod_nodes(a: f64, b: f64) -> Vec<(f64, f64)> {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut out = Vec::with_capacity(15);
    for j in 0..7 {
        out.push((mid - half * XGK[j], half * WGK[j]));
    }
    out.push((mid, half * WGK[7]));
    for j in (0..7).rev() {
        out.push((mid + half * XGK[j], half * WGK[j]));
    }
    out
}

/// Kronrod nodes on `[a, b]` as (node, Kronrod weight, Gauss weight); the
/// Gauss weight is zero at the eight Kronrod-only nodes.
pub fn kronrod_gauss_nodes(a: f64, b: f64) -> Vec<(f64, f64, f64)> {
    let half = 0.5 * (b - a);
    let gauss = |j: usize| if j % 2 == 1 { half * WG[j / 2] } else { 0.0 };
    kronrod_nodes(a, b)
        .into_iter()
        .enumerate()
        .map(|(k, (x, w))| {
            let j = if k < 7 {
                k
            } else if k == 7 {
                7
            } else {
                14 - k
            };
            (x, w, gauss(j))
        })
        .collect()
}

/// One G7K15 panel: (Kronrod estimate, |Kronrod − Gauss|).
pub fn gk15<F>(f: &mut F, a: f64, b: f64) -> Result<(C64, f64)>
where
    F: FnMut(f64) -> Result<C64>,
{
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(mid)?;
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(mid - dx)? + f(mid + dx)?;
        kron += s * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    Ok((kron * half, ((kron - gauss) * half).norm()))
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: C64,
    pub error: f64,
    pub evaluations: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: C64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive G7K15 on `[a, b]`, starting from `initial_panels`
/// equal panels and bisecting the worst panel until the summed error
/// estimate drops below `max(abs_tol, rel_tol·|I|)`.
pub fn integrate_adaptive<F>(
    mut f: F,
    a: f64,
    b: f64,
    initial_panels: usize,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<C64>,
{
    let n0 = initial_panels.max(1);
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for i in 0..n0 {
        let pa = a + (b - a) * i as f64 / n0 as f64;
        let pb = a + (b - a) * (i + 1) as f64 / n0 as f64;
        let (value, error) = gk15(&mut f, pa, pb)?;
        evaluations += 15;
        heap.push(Panel { a: pa, b: pb, value, error });
    }
    loop {
        let total: C64 = heap.iter().map(|p| p.value).sum();
        let err: f64 = heap.iter().map(|p| p.error).sum();
        if err <= abs_tol.max(rel_tol * total.norm()) || heap.len() >= max_panels {
            return Ok(QuadResult { value: total, error: err, evaluations });
        }
        let worst = heap.pop().expect("non-empty");
        let m = 0.5 * (worst.a + worst.b);
        for (pa, pb) in [(worst.a, m), (m, worst.b)] {
            let (value, error) = gk15(&mut f, pa, pb)?;
            evaluations += 15;
            heap.push(Panel { a: pa, b: pb, value, error });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exactness() {
        // K15 integrates degree 22 exactly
        let r = integrate_adaptive(|x| Ok(C64::new(x.powi(20), -3.0 * x.powi(7))), 0.0, 1.0, 1, 1e-15, 0.0, 1).unwrap();
        assert!((r.value - C64::new(1.0 / 21.0, -3.0 / 8.0)).norm() < 1e-15);
    }

    #[test]
    fn oscillatory_adaptive() {
        let r = integrate_adaptive(|x| Ok(C64::new(0.0, 7.0 * x).exp()), 0.0, 10.0, 2, 1e-12, 1e-12, 500).unwrap();
        let exact = (C64::new(0.0, 70.0).exp() - 1.0) / C64::new(0.0, 7.0);
        assert!((r.value - exact).norm() < 1e-11);
    }

    #[test]
    fn gauss_subset_weights() {
        let nodes = kronrod_gauss_nodes(-1.0, 3.0);
        let g: f64 = nodes.iter().map(|n| n.2).sum();
        let g2: f64 = nodes.iter().map(|n| n.2 * n.0 * n.0).sum();
        assert!((g - 4.0).abs() < 1e-14);
        assert!((g2 - 28.0 / 3.0).abs() < 1e-13);
        assert_eq!(nodes.iter().filter(|n| n.2 != 0.0).count(), 7);
    }

    #[test]
    fn nodes_integrate_constant() {
        let s: f64 = kronrod_nodes(2.0, 5.0).iter().map(|(_, w)| w).sum();
        assert!((s - 3.0).abs() < 1e-14);
    }
}
