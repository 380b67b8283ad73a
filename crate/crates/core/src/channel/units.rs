//! dB / linear conversions. Everything past the boundary is linear SI.

use crate::math;

pub fn db_to_ratio(db: f64) -> f64 {
    math::powf(10.0, db / 10.0)
}

pub fn ratio_to_db(ratio: f64) -> f64 {
    10.0 * math::log10(ratio)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_ratio(dbm - 30.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    ratio_to_db(watts) + 30.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn anchors() {
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-15);
        assert!((dbm_to_watts(-60.0) - 1e-9).abs() < 1e-24);
        assert!((db_to_ratio(3.0) - 1.995_262_314_968_879_6).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn round_trip(db in -200.0f64..100.0) {
            let back = ratio_to_db(db_to_ratio(db));
            prop_assert!((back - db).abs() <= 1e-12 * db.abs().max(1.0));
            let w = dbm_to_watts(db);
            let again = dbm_to_watts(watts_to_dbm(w));
            prop_assert!((again - w).abs() <= 1e-12 * w);
        }
    }
}
