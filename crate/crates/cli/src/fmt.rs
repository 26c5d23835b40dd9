//! Deterministic float formatting: 17 significant digits, trailing zeros
//! trimmed, scientific notation outside the `%g`-style exponent range.
//! Identical inputs always produce identical bytes, so repeated runs of
//! the same configuration diff clean.

pub fn g17(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        trim_zeros(&s)
    } else {
        let s = format!("{x:.16e}");
        // normalize "d.dddde-7" with the mantissa trimmed
        match s.split_once('e') {
            Some((mant, e)) => format!("{}e{}", trim_zeros(mant), e),
            None => s,
        }
    }
}

fn trim_zeros(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    let t = s.trim_end_matches('0');
    t.trim_end_matches('.').to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_and_trims() {
        assert_eq!(g17(0.0), "0");
        assert_eq!(g17(1.0), "1");
        assert_eq!(g17(-0.5), "-0.5");
        assert_eq!(g17(0.25), "0.25");
        // 0.1 is not exact in binary; 17 significant digits expose that
        assert_eq!(g17(0.1), "0.10000000000000001");
        for x in [
            std::f64::consts::PI,
            -1.0 / 3.0,
            4.8,
            0.1,
            1e-9,
            2.3e21,
            6.02e-23,
        ] {
            let s = g17(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, x, "{x} -> {s}");
        }
    }
}
