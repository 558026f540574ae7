/// Formats `x` with 9 significant digits: plain decimal for magnitudes in
/// `[1e-4, 1e9)`, scientific otherwise.
pub fn sig9(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs();
    if (1e-4..1e9).contains(&mag) {
        let exp = mag.log10().floor() as i32;
        let decimals = (8 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        // Rounding can carry into a new leading digit (9.99999999996 -> 10.00000000).
        let digits = s.chars().filter(|c| c.is_ascii_digit()).collect::<String>();
        let significant = digits.trim_start_matches('0').len();
        if significant > 9 && decimals > 0 {
            let decimals = decimals - 1;
            return format!("{x:.decimals$}");
        }
        s
    } else {
        format!("{x:.8e}")
    }
}
