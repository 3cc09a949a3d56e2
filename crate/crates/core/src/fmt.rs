//! Number formatting shared by the CSV and JSON writers.

/// Scientific notation with 17 significant digits, e.g. `-5.7735026918962573e-1`.
pub fn f17(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, -1.0 / 3.0, 6.02214076e23, 5e-324, 0.0] {
            let s = f17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(f17(1.0), "1.0000000000000000e0");
    }
}
