//! Resources compiled into the binary.

use ciupath_core::{CiuDictionary, CoordinateMap};

pub const COORDINATES_TSV: &str = include_str!("../data/cookie_theft_coordinates.tsv");
pub const STARTER_DICTIONARY: &str = include_str!("../data/starter_dictionary.txt");

pub fn coordinate_map() -> CoordinateMap {
    CoordinateMap::from_text(COORDINATES_TSV).expect("bundled coordinate map is valid")
}

pub fn starter_dictionary() -> CiuDictionary {
    CiuDictionary::from_text(STARTER_DICTIONARY).expect("bundled dictionary is valid")
}
