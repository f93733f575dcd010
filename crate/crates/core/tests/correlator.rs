use collapse_lab::correlator::{
    bessel_k1, bessel_y1, g_fourier_extrapolated, g_fourier_oracle, g_nonrel_limit, g_tachyon,
    nonrel_fourier_oracle, IntervalClass, RegulatedKernel,
};
use collapse_lab::quad::Quad;
use std::f64::consts::PI;

// x, Y1(x), K1(x) at 40 significant digits (rounded to 17).
const TABLE: [(f64, f64, f64); 20] = [
    (1e-6, -636619.77237217501, 999999.99999278428),
    (1e-3, -636.62216723113943, 999.99623815608557),
    (0.1, -6.458951094702027, 9.8538447808706061),
    (0.5, -1.4714723926702431, 1.6564411200033009),
    (1.0, -0.78121282130028872, 0.60190723019723457),
    (2.0, -0.10703243154093755, 0.13986588181652243),
    (2.5, 0.1459181379667858, 0.073890816347747064),
    (5.0, 0.14786314339122684, 0.0040446134454521642),
    (7.9, -0.18172107728057321, 0.0001728843064923899),
    (8.0, -0.15806046173124749, 0.00015536921180500113),
    (8.1, -0.13314879595249584, 0.00013964122894503076),
    (12.0, -0.057099218260896521, 2.2907574647671878e-6),
    (20.0, -0.1655116143625213, 5.8830579695570382e-10),
    (24.9, -0.086002557595554442, 3.9123824362567576e-12),
    (25.0, -0.09882996478323741, 3.5327780731999338e-12),
    (25.1, -0.11062223322783083, 3.1900323186042707e-12),
    (50.0, -0.056795668562014768, 3.4441022267175556e-23),
    (100.0, -0.020372312002759793, 4.6798537356369093e-45),
    (300.0, 0.033245548121310216, 3.7298958583323727e-132),
    (700.0, 0.00630934142145256, 4.6731107967079661e-306),
];

const Y1_ZEROS: [f64; 7] = [
    2.197141326031017,
    5.4296810407941351,
    8.5960058683311689,
    11.749154830839881,
    14.897442128336725,
    18.043402276727856,
    21.188068934142213,
];

fn y1_scale(x: f64, y: f64) -> f64 {
    y.abs().max((2.0 / (PI * x)).sqrt())
}

/// Y1(x) = (1/π)∫₀^π sin(x sinθ − θ)dθ − (2/π)∫₀^∞ sinh t e^{−x sinh t} dt
fn y1_integral(x: f64) -> f64 {
    let q = Quad::new(1e-13, 1e-12).with_max_intervals(100_000);
    let a = q.integrate(|th: f64| (x * th.sin() - th).sin(), 0.0, PI).unwrap().value;
    let b = q
        .integrate_to_inf(|t: f64| if t > 700.0 { 0.0 } else { t.sinh() * (-x * t.sinh()).exp() }, 0.0, 1.0)
        .unwrap()
        .value;
    a / PI - 2.0 * b / PI
}

/// K1(x) = ∫₀^∞ e^{−x cosh t} cosh t dt, computed as e^{−x}·∫ e^{−x(cosh t − 1)} cosh t dt.
fn k1_integral(x: f64) -> f64 {
    let q = Quad::new(1e-16, 1e-13).with_max_intervals(100_000);
    let scale = (1.0 / x).clamp(0.05, 1.0);
    let v = q
        .integrate_to_inf(|t: f64| if t > 700.0 { 0.0 } else { (-x * (t.cosh() - 1.0)).exp() * t.cosh() }, 0.0, scale)
        .unwrap()
        .value;
    v * (-x).exp()
}

#[test]
fn bessel_matches_reference_table() {
    for (x, y1, k1) in TABLE {
        let y = bessel_y1(x).unwrap();
        let k = bessel_k1(x).unwrap();
        assert!((y - y1).abs() <= 1e-10 * y1_scale(x, y1), "Y1({x}) = {y}, want {y1}");
        assert!((k / k1 - 1.0).abs() <= 1e-10, "K1({x}) = {k}, want {k1}");
    }
}

#[test]
fn bessel_matches_integral_representations() {
    let mut x = 1e-6;
    while x <= 700.0 {
        let y = bessel_y1(x).unwrap();
        let yo = y1_integral(x);
        assert!((y - yo).abs() <= 1e-10 * y1_scale(x, yo), "Y1({x}): {y} vs {yo}");
        let k = bessel_k1(x).unwrap();
        let ko = k1_integral(x);
        assert!((k / ko - 1.0).abs() <= 1e-10, "K1({x}): {k} vs {ko}");
        x *= 1.37;
    }
}

#[test]
fn k1_small_argument_singularity() {
    for x in [1e-6, 1e-8, 1e-10] {
        assert!((bessel_k1(x).unwrap() * x - 1.0).abs() < 1e-9);
    }
}

#[test]
fn closed_form_reference_points() {
    let sp = g_tachyon(0.0, 1.0, 1.0).unwrap();
    assert_eq!(sp.interval_class, IntervalClass::Spacelike);
    assert!((sp.value - 0.009_894_175_966_339_42).abs() < 1e-15);
    let tl = g_tachyon(1.0, 0.0, 1.0).unwrap();
    assert_eq!(tl.interval_class, IntervalClass::Timelike);
    assert!((tl.value + 0.004_853_107_940_074_46).abs() < 1e-15);
    let far = g_tachyon(20.0, 0.0, 1.0).unwrap();
    assert!(far.value.abs() < (-20.0f64).exp());
}

#[test]
fn closed_form_is_frame_independent() {
    // equal intervals built from exact integers
    let a = g_tachyon(0.0, 5.0, 1.0).unwrap();
    let b = g_tachyon(12.0, 13.0, 1.0).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    let c = g_tachyon(5.0, 0.0, 1.0).unwrap();
    let d = g_tachyon(13.0, 12.0, 1.0).unwrap();
    assert_eq!(c.value.to_bits(), d.value.to_bits());
}

#[test]
fn spacelike_zeros_match_y1_zeros() {
    for z in Y1_ZEROS {
        let (mut lo, mut hi) = (z - 0.1, z + 0.1);
        let g = |s: f64| g_tachyon(0.0, s, 1.0).unwrap().value;
        assert!(g(lo) * g(hi) < 0.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if g(lo) * g(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((0.5 * (lo + hi) - z).abs() < 1e-6);
    }
}

#[test]
fn asymptotic_envelopes() {
    for s in [20.0, 50.0, 100.0, 300.0] {
        let t = g_tachyon(s, 0.0, 1.0).unwrap().value;
        assert!((t * s.sqrt() * s.exp()).abs() < 0.1);
        let sp = g_tachyon(0.0, s, 1.0).unwrap().value;
        assert!(sp.abs() * s.powf(1.5) < 0.02);
    }
}

#[test]
fn fourier_oracle_matches_closed_form_on_both_branches() {
    for s in [0.1, 0.5, 1.0, 2.0, 5.0, 10.0] {
        let closed_sp = g_tachyon(0.0, s, 1.0).unwrap().value;
        let oracle_sp = g_fourier_extrapolated(0.0, s, 1.0, 1e-2).unwrap().value;
        assert!((closed_sp - oracle_sp).abs() <= 1e-4 * closed_sp.abs(), "spacelike s={s}: {closed_sp} vs {oracle_sp}");
        let closed_tl = g_tachyon(s, 0.0, 1.0).unwrap().value;
        let oracle_tl = g_fourier_extrapolated(s, 0.0, 1.0, 1e-2).unwrap().value;
        assert!((closed_tl - oracle_tl).abs() <= 1e-4 * closed_tl.abs(), "timelike s={s}: {closed_tl} vs {oracle_tl}");
    }
}

#[test]
fn fourier_oracle_is_lorentz_invariant() {
    for (s, eta) in [(1.0f64, 0.6f64), (2.0, 1.1), (0.5, 0.3)] {
        let sp0 = g_fourier_oracle(0.0, s, 1.0, 1e-2).unwrap().value;
        let sp1 = g_fourier_oracle(s * eta.sinh(), s * eta.cosh(), 1.0, 1e-2).unwrap().value;
        assert!((sp0 - sp1).abs() <= 1e-4 * sp0.abs(), "{sp0} vs {sp1}");
        let tl0 = g_fourier_oracle(s, 0.0, 1.0, 1e-2).unwrap().value;
        let tl1 = g_fourier_oracle(s * eta.cosh(), s * eta.sinh(), 1.0, 1e-2).unwrap().value;
        assert!((tl0 - tl1).abs() <= 1e-4 * tl0.abs(), "{tl0} vs {tl1}");
    }
}

#[test]
fn nonrel_limit_matches_spatial_fourier_transform() {
    for r in [0.0, 0.3, 1.0, 2.5, 7.0] {
        let o = nonrel_fourier_oracle(r, 1.0, 1e-2).unwrap().value;
        let g = g_nonrel_limit(r, 1.0);
        assert!((o - g).abs() <= 1e-6 * g.abs().max(1e-3 * g_nonrel_limit(0.0, 1.0)), "r={r}: {o} vs {g}");
    }
}

#[test]
fn regulated_kernel_time_structure() {
    let k = RegulatedKernel::new(1.0, 1e-3, 4.0).unwrap();
    for r in [0.0, 1.5, 4.0] {
        // the long-time slope of the double time integral is ∫G dτ
        let f1 = k.time_factor(r, 20.0).unwrap();
        let f2 = k.time_factor(r, 30.0).unwrap();
        let slope = (f2 - f1) / 10.0;
        let exact = k.time_integral(r);
        assert!((slope - exact).abs() < 1e-7 * exact.abs().max(1e-3), "r={r}: {slope} vs {exact}");
        // cell kernels sum to the full double integral
        let w = 0.5;
        let n = 8;
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                sum += k.cell_pair(r, (i as f64 - j as f64) * w, w).unwrap();
            }
        }
        let full = k.time_factor(r, n as f64 * w).unwrap();
        assert!((sum - full).abs() < 1e-9 * full.abs().max(1e-6));
    }
    // the integrated kernel tends to the nonrelativistic one as the cutoff grows
    let wide = RegulatedKernel::new(1.0, 1e-4, 60.0).unwrap();
    let r = 2.0;
    assert!((wide.time_integral(r) / g_nonrel_limit(r, 1.0) - 1.0).abs() < 1e-3);
}

#[test]
fn regulated_kernel_approaches_closed_form_away_from_the_cone() {
    let k = RegulatedKernel::new(1.0, 1e-4, 40.0).unwrap();
    let g = g_tachyon(0.0, 2.0, 1.0).unwrap().value;
    let v = k.value(0.0, 2.0).unwrap();
    assert!((v - g).abs() < 5e-3 * g.abs(), "{v} vs {g}");
}
