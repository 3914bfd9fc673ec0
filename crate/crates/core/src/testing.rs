//! Fixtures shared by unit and integration tests.

use std::collections::BTreeSet;

use crate::data::Dataset;

/// The six-property real-estate table, prices in thousands.
pub const TABLE1_CSV: &str = "\
property-type,state,rooms,surface,price
cottage,very good,5,120,510
cottage,very good,3,55,410
cottage,excellent,3,50,350
apartment,excellent,5,85,320
apartment,good,4,52,140
apartment,good,3,45,125
";

pub fn table1() -> Dataset {
    Dataset::from_csv_reader(TABLE1_CSV.as_bytes(), "price", &BTreeSet::new()).expect("fixture parses")
}
