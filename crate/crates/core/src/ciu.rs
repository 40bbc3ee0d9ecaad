//! Canonical content information units, picture coordinates and quadrants.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{CiuError, MapError};

/// Number of content information units in the inventory.
pub const NUM_CIUS: usize = 23;

const NAMES: [&str; NUM_CIUS] = [
    "boy",
    "girl",
    "woman",
    "kitchen",
    "outside",
    "cookie",
    "jar",
    "stool",
    "sink",
    "plate",
    "dishcloth",
    "water",
    "window",
    "cupboard",
    "dishes",
    "curtains",
    "boy taking/stealing",
    "boy or stool falling",
    "woman drying/washing plates",
    "water overflowing",
    "action performed by girl",
    "woman unconcerned by overflowing",
    "woman indifferent to the children",
];

/// One of the 23 Cookie Theft content information units.
///
/// The numeric code (0..23) is stable and doubles as the row index of the
/// classifier head.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CiuId(u8);

impl CiuId {
    pub const BOY: CiuId = CiuId(0);
    pub const GIRL: CiuId = CiuId(1);
    pub const WOMAN: CiuId = CiuId(2);
    pub const KITCHEN: CiuId = CiuId(3);
    pub const OUTSIDE: CiuId = CiuId(4);
    pub const COOKIE: CiuId = CiuId(5);
    pub const JAR: CiuId = CiuId(6);
    pub const STOOL: CiuId = CiuId(7);
    pub const SINK: CiuId = CiuId(8);
    pub const PLATE: CiuId = CiuId(9);
    pub const DISHCLOTH: CiuId = CiuId(10);
    pub const WATER: CiuId = CiuId(11);
    pub const WINDOW: CiuId = CiuId(12);
    pub const CUPBOARD: CiuId = CiuId(13);
    pub const DISHES: CiuId = CiuId(14);
    pub const CURTAINS: CiuId = CiuId(15);
    pub const BOY_TAKING: CiuId = CiuId(16);
    pub const BOY_OR_STOOL_FALLING: CiuId = CiuId(17);
    pub const WOMAN_DRYING: CiuId = CiuId(18);
    pub const WATER_OVERFLOWING: CiuId = CiuId(19);
    pub const GIRL_ACTION: CiuId = CiuId(20);
    pub const WOMAN_UNCONCERNED: CiuId = CiuId(21);
    pub const WOMAN_INDIFFERENT: CiuId = CiuId(22);

    pub fn from_code(code: usize) -> Option<CiuId> {
        (code < NUM_CIUS).then(|| CiuId(code as u8))
    }

    #[inline]
    pub fn code(self) -> usize {
        self.0 as usize
    }

    pub fn name(self) -> &'static str {
        NAMES[self.code()]
    }

    /// All identifiers in code order.
    pub fn all() -> impl DoubleEndedIterator<Item = CiuId> + ExactSizeIterator + Clone {
        (0..NUM_CIUS as u8).map(CiuId)
    }
}

impl fmt::Display for CiuId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for CiuId {
    type Err = CiuError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_ciu_name(s)
    }
}

/// Case-insensitive, whitespace-normalized lookup of a canonical CIU name.
pub fn parse_ciu_name(name: &str) -> Result<CiuId, CiuError> {
    let normalized = normalize_name(name);
    NAMES.iter().position(|n| *n == normalized).map(|code| CiuId(code as u8)).ok_or_else(|| CiuError::UnknownCiu(name.to_string()))
}

fn normalize_name(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for word in name.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars().flat_map(char::to_lowercase));
    }
    out
}

/// An ordered, possibly repeating run of CIUs, optionally tagged with the
/// index of the sentence each item came from.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CiuSequence {
    items: Vec<CiuId>,
    sentences: Option<Vec<usize>>,
}

impl CiuSequence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_ids(items: Vec<CiuId>) -> Self {
        CiuSequence { items, sentences: None }
    }

    /// Sequence carrying sentence indices; `None` if the lengths differ or the
    /// indices decrease anywhere.
    pub fn with_sentences(items: Vec<CiuId>, sentences: Vec<usize>) -> Option<Self> {
        if items.len() != sentences.len() || sentences.windows(2).any(|w| w[0] > w[1]) {
            return None;
        }
        Some(CiuSequence { items, sentences: Some(sentences) })
    }

    pub fn ids(&self) -> &[CiuId] {
        &self.items
    }

    pub fn sentence_indices(&self) -> Option<&[usize]> {
        self.sentences.as_deref()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Appends a sentence's worth of CIUs. Sentence indices are tracked when
    /// every item so far came through this method.
    pub fn push_sentence(&mut self, sentence: usize, ids: &[CiuId]) {
        if self.items.is_empty() && self.sentences.is_none() {
            self.sentences = Some(Vec::new());
        }
        if let Some(idx) = self.sentences.as_mut() {
            let last = idx.last().copied().unwrap_or(0);
            if sentence < last {
                self.sentences = None;
            } else {
                idx.extend(core::iter::repeat_n(sentence, ids.len()));
            }
        }
        self.items.extend_from_slice(ids);
    }

    pub fn into_ids(self) -> Vec<CiuId> {
        self.items
    }
}

impl From<Vec<CiuId>> for CiuSequence {
    fn from(items: Vec<CiuId>) -> Self {
        CiuSequence::from_ids(items)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quadrant {
    UpperLeft,
    UpperRight,
    LowerLeft,
    LowerRight,
}

impl Quadrant {
    /// Points exactly on a split line fall Right / Lower.
    pub fn locate(x: f64, y: f64, split_x: f64, split_y: f64) -> Quadrant {
        match (x < split_x, y < split_y) {
            (true, true) => Quadrant::UpperLeft,
            (false, true) => Quadrant::UpperRight,
            (true, false) => Quadrant::LowerLeft,
            (false, false) => Quadrant::LowerRight,
        }
    }
}

/// Normalized picture position; x grows rightward, y grows downward.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

/// Picture coordinates for all 23 CIUs plus the quadrant split lines.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordinateMap {
    points: [Point; NUM_CIUS],
    split_x: f64,
    split_y: f64,
}

impl CoordinateMap {
    pub const DEFAULT_SPLIT: f64 = 0.5;

    /// Approximate positions of each unit in the Cookie Theft picture, with
    /// the picture split into halves. Action units sit at the figure or
    /// object performing them.
    pub fn cookie_theft() -> Self {
        const POINTS: [(f64, f64); NUM_CIUS] = [
            (0.22, 0.30),
            (0.12, 0.55),
            (0.68, 0.45),
            (0.48, 0.48),
            (0.62, 0.22),
            (0.22, 0.15),
            (0.26, 0.12),
            (0.24, 0.62),
            (0.60, 0.62),
            (0.74, 0.38),
            (0.77, 0.42),
            (0.58, 0.85),
            (0.60, 0.25),
            (0.20, 0.20),
            (0.85, 0.60),
            (0.48, 0.22),
            (0.24, 0.22),
            (0.24, 0.50),
            (0.72, 0.40),
            (0.56, 0.75),
            (0.15, 0.40),
            (0.66, 0.56),
            (0.66, 0.34),
        ];
        let points = POINTS.map(|(x, y)| Point { x, y });
        Self::new(points, Self::DEFAULT_SPLIT, Self::DEFAULT_SPLIT).expect("built-in map is valid")
    }

    /// Builds a map from one point per CIU in code order.
    pub fn new(points: [Point; NUM_CIUS], split_x: f64, split_y: f64) -> Result<Self, MapError> {
        for split in [split_x, split_y] {
            if !(split > 0.0 && split < 1.0) {
                return Err(MapError::BadSplit(split));
            }
        }
        for (ciu, p) in CiuId::all().zip(points.iter()) {
            for v in [p.x, p.y] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(MapError::OutOfRange { line: None, ciu: ciu.name().to_string(), value: v });
                }
            }
        }
        Ok(CoordinateMap { points, split_x, split_y })
    }

    /// Parses the tab-separated coordinate file format:
    ///
    /// ```text
    /// #sx=0.5 sy=0.5
    /// boy	0.22	0.30
    /// ...
    /// ```
    ///
    /// Lines starting with `#` are comments, except that `sx=` / `sy=` pairs
    /// found in them set the split lines.
    pub fn from_text(source: &str) -> Result<Self, MapError> {
        let mut split_x = Self::DEFAULT_SPLIT;
        let mut split_y = Self::DEFAULT_SPLIT;
        let mut slots: [Option<Point>; NUM_CIUS] = [None; NUM_CIUS];

        for (i, raw) in source.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                for part in comment.split_whitespace() {
                    let (key, value) = match part.split_once('=') {
                        Some(kv) => kv,
                        None => continue,
                    };
                    let target = match key {
                        "sx" => &mut split_x,
                        "sy" => &mut split_y,
                        _ => continue,
                    };
                    *target = value
                        .parse()
                        .map_err(|_| MapError::Parse { line: line_no, message: alloc::format!("bad split value `{value}`") })?;
                }
                continue;
            }

            let fields: Vec<&str> = raw.split('\t').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(MapError::Parse {
                    line: line_no,
                    message: alloc::format!("expected `<ciu>\\t<x>\\t<y>`, got {} field(s)", fields.len()),
                });
            }
            let ciu = parse_ciu_name(fields[0]).map_err(|e| MapError::Ciu { line: line_no, source: e })?;
            let mut coord = [0.0; 2];
            for (slot, text) in coord.iter_mut().zip(&fields[1..]) {
                let v: f64 =
                    text.parse().map_err(|_| MapError::Parse { line: line_no, message: alloc::format!("`{text}` is not a number") })?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(MapError::OutOfRange { line: Some(line_no), ciu: ciu.name().to_string(), value: v });
                }
                *slot = v;
            }
            if slots[ciu.code()].is_some() {
                return Err(MapError::Duplicate { line: line_no, ciu: ciu.name().to_string() });
            }
            slots[ciu.code()] = Some(Point { x: coord[0], y: coord[1] });
        }

        let missing: Vec<String> = CiuId::all().filter(|c| slots[c.code()].is_none()).map(|c| c.name().to_string()).collect();
        if !missing.is_empty() {
            return Err(MapError::MissingCiu(missing));
        }
        let points = slots.map(|p| p.unwrap_or(Point { x: 0.0, y: 0.0 }));
        Self::new(points, split_x, split_y)
    }

    /// Inverse of [`CoordinateMap::from_text`].
    pub fn to_text(&self) -> String {
        use core::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "#sx={} sy={}", self.split_x, self.split_y);
        for c in CiuId::all() {
            let p = self.point(c);
            let _ = writeln!(out, "{}\t{}\t{}", c.name(), p.x, p.y);
        }
        out
    }

    #[inline]
    pub fn point(&self, ciu: CiuId) -> Point {
        self.points[ciu.code()]
    }

    pub fn split(&self) -> (f64, f64) {
        (self.split_x, self.split_y)
    }

    pub fn quadrant_of(&self, ciu: CiuId) -> Quadrant {
        let p = self.point(ciu);
        Quadrant::locate(p.x, p.y, self.split_x, self.split_y)
    }
}

/// Free-function form of [`CoordinateMap::quadrant_of`].
pub fn quadrant_of(ciu: CiuId, map: &CoordinateMap) -> Quadrant {
    map.quadrant_of(ciu)
}
