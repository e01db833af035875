use crate::scalar::Real;

fn uniform<T: Real>(t: &[T], lo: usize, hi: usize, h: T) -> bool {
    (lo..hi).all(|k| ((t[k + 1] - t[k]) - h).abs() <= T::lit(1e-9) * h)
}

/// `f'(t_1)` from `f(t_0..t_4)` on a uniform grid.
fn skewed<T: Real>(f: &[T], h: T) -> T {
    (-T::lit(3.0) * f[0] - T::lit(10.0) * f[1] + T::lit(18.0) * f[2] - T::lit(6.0) * f[3] + f[4])
        / (T::lit(12.0) * h)
}

/// Time derivative at each interior sample.
///
/// Uses the central difference with one Richardson step (`(4 D_h - D_2h)/3`)
/// where five equally spaced samples are centred on the point, the
/// fourth-order off-centre five-point stencil next to the ends, the plain
/// central difference on three equally spaced samples, and the three-point
/// nonuniform formula otherwise.
pub fn time_derivatives<T: Real>(t: &[T], f: &[T]) -> Vec<(usize, T)> {
    let m = t.len().min(f.len());
    let mut out = Vec::new();
    for i in 1..m.saturating_sub(1) {
        let hm = t[i] - t[i - 1];
        let hp = t[i + 1] - t[i];
        let d = if (hp - hm).abs() <= T::lit(1e-9) * hp {
            let h = hp;
            let dh = (f[i + 1] - f[i - 1]) / (h + h);
            if i >= 2 && i + 2 < m && uniform(t, i - 2, i + 2, h) {
                let d2h = (f[i + 2] - f[i - 2]) / (T::lit(4.0) * h);
                (T::lit(4.0) * dh - d2h) / T::lit(3.0)
            } else if i == 1 && m >= 5 && uniform(t, 0, 4, h) {
                skewed(&f[0..5], h)
            } else if i + 2 == m && m >= 5 && uniform(t, m - 5, m - 1, h) {
                -skewed(&[f[m - 1], f[m - 2], f[m - 3], f[m - 4], f[m - 5]], h)
            } else {
                dh
            }
        } else {
            let s = hm + hp;
            -hp / (hm * s) * f[i - 1] + (hp - hm) / (hm * hp) * f[i] + hm / (hp * s) * f[i + 1]
        };
        out.push((i, d));
    }
    out
}
