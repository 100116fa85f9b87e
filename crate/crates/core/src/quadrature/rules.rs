//! Fixed quadrature rules: the 10/21-point Gauss-Kronrod pair and
//! Gauss-Hermite / Gauss-Legendre nodes of arbitrary order.

#![allow(clippy::excessive_precision)]

use std::f64::consts::PI;

/// Kronrod abscissae on [-1, 1], descending; the last entry is the center.
/// Odd indices are the 10-point Gauss nodes.
pub(crate) const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

pub(crate) const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_729_187_785_925,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Gauss weights for `XGK[1], XGK[3], .., XGK[9]`.
pub(crate) const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Kronrod estimate and rescaled Gauss-Kronrod error for one panel.
pub(crate) struct PanelEstimate {
    pub value: f64,
    pub error: f64,
    pub finite: bool,
}

pub(crate) fn gauss_kronrod_21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> PanelEstimate {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    let mut res_abs = WGK[10] * fc.abs();
    let mut values = [(0.0, 0.0); 10];
    for (j, (&xk, &wk)) in XGK[..10].iter().zip(&WGK[..10]).enumerate() {
        let dx = half * xk;
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        values[j] = (f1, f2);
        kronrod += wk * (f1 + f2);
        res_abs += wk * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for (j, &(f1, f2)) in values.iter().enumerate() {
        res_asc += WGK[j] * ((f1 - mean).abs() + (f2 - mean).abs());
    }
    let scale = half.abs();
    let value = kronrod * half;
    let res_abs = res_abs * scale;
    let res_asc = res_asc * scale;
    let mut error = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    PanelEstimate {
        value,
        error,
        finite: value.is_finite() && error.is_finite(),
    }
}

/// Gauss-Hermite rule for the weight `exp(-t^2)`, nodes ascending.
pub fn gauss_hermite(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "Gauss-Hermite order must be positive");
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let pim4 = PI.powf(-0.25);
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..m {
        // Standard asymptotic starting guesses for the largest roots.
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-0.166_67),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * nodes[n - 1],
            3 => 1.91 * z - 0.91 * nodes[n - 2],
            _ => 2.0 * z - nodes[n - i + 1],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        nodes[n - 1 - i] = z;
        nodes[i] = -z;
        weights[n - 1 - i] = 2.0 / (pp * pp);
        weights[i] = weights[n - 1 - i];
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss-Legendre rule on [-1, 1], nodes ascending.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "Gauss-Legendre order must be positive");
    let n = order;
    let nf = n as f64;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 1.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn double_factorial_odd(k: usize) -> f64 {
        (1..=k).step_by(2).map(|v| v as f64).product()
    }

    #[test]
    fn kronrod_weights_sum_to_two() {
        let k: f64 = 2.0 * WGK[..10].iter().sum::<f64>() + WGK[10];
        let g: f64 = 2.0 * WG.iter().sum::<f64>();
        assert!((k - 2.0).abs() < 1e-15 && (g - 2.0).abs() < 1e-15);
    }

    #[test]
    fn kronrod_and_gauss_exactness() {
        for deg in 0..=31usize {
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            let f = |x: f64| x.powi(deg as i32);
            let mut k = WGK[10] * f(0.0);
            let mut g = 0.0;
            for j in 0..10 {
                k += WGK[j] * (f(XGK[j]) + f(-XGK[j]));
                if j % 2 == 1 {
                    g += WG[j / 2] * (f(XGK[j]) + f(-XGK[j]));
                }
            }
            assert!((k - exact).abs() < 2e-15, "kronrod degree {deg}: {k} vs {exact}");
            if deg <= 19 {
                assert!((g - exact).abs() < 2e-15, "gauss degree {deg}");
            }
        }
    }

    #[test]
    fn hermite_moments() {
        for order in [1, 2, 5, 40, 80] {
            let (t, w) = gauss_hermite(order);
            assert!(t.windows(2).all(|p| p[0] < p[1]));
            for k in (0..2 * order).step_by(2).take(12) {
                let q: f64 = t.iter().zip(&w).map(|(t, w)| w * t.powi(k as i32)).sum();
                // int t^k exp(-t^2) dt = (k-1)!! sqrt(pi) / 2^(k/2)
                let exact = double_factorial_odd(k.saturating_sub(1)) * PI.sqrt()
                    / 2f64.powi(k as i32 / 2);
                assert!((q - exact).abs() < 1e-12 * exact, "order {order} moment {k}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn legendre_exactness() {
        for order in [1, 3, 8, 24] {
            let (x, w) = gauss_legendre(order);
            for deg in 0..2 * order {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-14, "order {order} degree {deg}");
            }
        }
    }
}
