//! Spatio-semantic graph over an ordered CIU sequence and its 12 features.

use alloc::vec::Vec;

use crate::ciu::{CiuId, CiuSequence, CoordinateMap, Quadrant, NUM_CIUS};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphNode {
    pub ciu: CiuId,
    pub x: f64,
    pub y: f64,
    pub quadrant: Quadrant,
}

/// The narrative path: one node per mention, one edge per consecutive pair.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SpatioGraph {
    nodes: Vec<GraphNode>,
}

impl SpatioGraph {
    pub fn build(seq: &[CiuId], map: &CoordinateMap) -> Self {
        let nodes = seq
            .iter()
            .map(|&ciu| {
                let p = map.point(ciu);
                GraphNode { ciu, x: p.x, y: p.y, quadrant: map.quadrant_of(ciu) }
            })
            .collect();
        SpatioGraph { nodes }
    }

    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    /// Consecutive node pairs.
    pub fn edges(&self) -> impl Iterator<Item = (&GraphNode, &GraphNode)> {
        self.nodes.windows(2).map(|w| (&w[0], &w[1]))
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }

    pub fn edge_lengths(&self) -> impl Iterator<Item = f64> + '_ {
        self.edges().map(|(a, b)| libm::hypot(b.x - a.x, b.y - a.y))
    }
}

pub fn build_graph(seq: &CiuSequence, map: &CoordinateMap) -> SpatioGraph {
    SpatioGraph::build(seq.ids(), map)
}

/// Table of spatio-semantic features. `None` marks a value that is undefined
/// for the graph (for example every field of an empty graph).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FeatureVector {
    pub avg_x: Option<f64>,
    pub std_x: Option<f64>,
    pub avg_y: Option<f64>,
    pub std_y: Option<f64>,
    pub total_path: Option<f64>,
    pub unique_nodes: Option<usize>,
    pub path_per_unique: Option<f64>,
    pub nodes: Option<usize>,
    pub self_cycles: Option<usize>,
    pub cycles: Option<usize>,
    pub self_cycles_quadrants: Option<usize>,
    pub cross_ratio_quadrants: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Feature {
    AvgX,
    StdX,
    AvgY,
    StdY,
    TotalPath,
    UniqueNodes,
    PathPerUnique,
    Nodes,
    SelfCycles,
    Cycles,
    SelfCyclesQuadrants,
    CrossRatioQuadrants,
}

impl Feature {
    pub const ALL: [Feature; 12] = [
        Feature::AvgX,
        Feature::StdX,
        Feature::AvgY,
        Feature::StdY,
        Feature::TotalPath,
        Feature::UniqueNodes,
        Feature::PathPerUnique,
        Feature::Nodes,
        Feature::SelfCycles,
        Feature::Cycles,
        Feature::SelfCyclesQuadrants,
        Feature::CrossRatioQuadrants,
    ];

    /// Column name used in feature tables.
    pub fn name(self) -> &'static str {
        match self {
            Feature::AvgX => "avg_x",
            Feature::StdX => "std_x",
            Feature::AvgY => "avg_y",
            Feature::StdY => "std_y",
            Feature::TotalPath => "total_path",
            Feature::UniqueNodes => "unique_nodes",
            Feature::PathPerUnique => "path_per_unique",
            Feature::Nodes => "nodes",
            Feature::SelfCycles => "self_cycles",
            Feature::Cycles => "cycles",
            Feature::SelfCyclesQuadrants => "self_cycles_quadrants",
            Feature::CrossRatioQuadrants => "cross_ratio_quadrants",
        }
    }
}

impl FeatureVector {
    pub fn get(&self, feature: Feature) -> Option<f64> {
        let count = |c: Option<usize>| c.map(|v| v as f64);
        match feature {
            Feature::AvgX => self.avg_x,
            Feature::StdX => self.std_x,
            Feature::AvgY => self.avg_y,
            Feature::StdY => self.std_y,
            Feature::TotalPath => self.total_path,
            Feature::UniqueNodes => count(self.unique_nodes),
            Feature::PathPerUnique => self.path_per_unique,
            Feature::Nodes => count(self.nodes),
            Feature::SelfCycles => count(self.self_cycles),
            Feature::Cycles => count(self.cycles),
            Feature::SelfCyclesQuadrants => count(self.self_cycles_quadrants),
            Feature::CrossRatioQuadrants => self.cross_ratio_quadrants,
        }
    }

    /// Values in [`Feature::ALL`] order.
    pub fn values(&self) -> [Option<f64>; 12] {
        Feature::ALL.map(|f| self.get(f))
    }
}

fn mean_and_population_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, libm::sqrt(var))
}

/// Computes the spatio-semantic features of a graph.
///
/// Coordinate statistics run over every node including repeats and use the
/// population standard deviation. `cycles` counts extra occurrences
/// (`nodes - unique_nodes`). The quadrant cross ratio is inter-quadrant over
/// intra-quadrant edges and is undefined whenever there are no intra-quadrant
/// edges.
pub fn compute_features(graph: &SpatioGraph) -> FeatureVector {
    let nodes = graph.nodes();
    if nodes.is_empty() {
        return FeatureVector::default();
    }

    let (avg_x, std_x) = mean_and_population_std(nodes.iter().map(|n| n.x));
    let (avg_y, std_y) = mean_and_population_std(nodes.iter().map(|n| n.y));
    let total_path: f64 = graph.edge_lengths().sum();

    let mut seen = [false; NUM_CIUS];
    for n in nodes {
        seen[n.ciu.code()] = true;
    }
    let unique = seen.iter().filter(|s| **s).count();

    let self_cycles = graph.edges().filter(|(a, b)| a.ciu == b.ciu).count();
    let intra = graph.edges().filter(|(a, b)| a.quadrant == b.quadrant).count();
    let inter = graph.edge_count() - intra;

    FeatureVector {
        avg_x: Some(avg_x),
        std_x: Some(std_x),
        avg_y: Some(avg_y),
        std_y: Some(std_y),
        total_path: Some(total_path),
        unique_nodes: Some(unique),
        path_per_unique: Some(total_path / unique as f64),
        nodes: Some(nodes.len()),
        self_cycles: Some(self_cycles),
        cycles: Some(nodes.len() - unique),
        self_cycles_quadrants: Some(intra),
        cross_ratio_quadrants: (intra > 0).then(|| inter as f64 / intra as f64),
    }
}

/// Features straight from a CIU sequence.
pub fn sequence_features(seq: &[CiuId], map: &CoordinateMap) -> FeatureVector {
    compute_features(&SpatioGraph::build(seq, map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ciu::Point;

    const A: CiuId = CiuId::BOY;
    const B: CiuId = CiuId::COOKIE;

    fn map_with(points: &[(CiuId, f64, f64)]) -> CoordinateMap {
        let mut all = [Point { x: 0.9, y: 0.9 }; NUM_CIUS];
        for &(c, x, y) in points {
            all[c.code()] = Point { x, y };
        }
        CoordinateMap::new(all, 0.5, 0.5).unwrap()
    }

    #[test]
    fn build_examples() {
        let map = map_with(&[(A, 0.2, 0.3), (B, 0.1, 0.1)]);
        let g = SpatioGraph::build(&[], &map);
        assert_eq!((g.nodes().len(), g.edge_count()), (0, 0));
        let g = SpatioGraph::build(&[A], &map);
        assert_eq!((g.nodes().len(), g.edge_count()), (1, 0));
        let g = SpatioGraph::build(&[A, B, A], &map);
        assert_eq!((g.nodes().len(), g.edge_count()), (3, 2));
        assert_eq!((g.nodes()[0].x, g.nodes()[0].y), (g.nodes()[2].x, g.nodes()[2].y));
    }

    #[test]
    fn empty_graph_all_invalid() {
        let map = map_with(&[]);
        let f = sequence_features(&[], &map);
        assert!(f.values().iter().all(Option::is_none));
    }

    #[test]
    fn singleton() {
        let map = map_with(&[(A, 0.2, 0.3)]);
        let f = sequence_features(&[A], &map);
        assert_eq!(f.avg_x, Some(0.2));
        assert_eq!(f.std_x, Some(0.0));
        assert_eq!(f.total_path, Some(0.0));
        assert_eq!(f.unique_nodes, Some(1));
        assert_eq!(f.nodes, Some(1));
        assert_eq!(f.cycles, Some(0));
        assert_eq!(f.self_cycles, Some(0));
        assert_eq!(f.cross_ratio_quadrants, None);
    }

    #[test]
    fn three_four_five() {
        let map = map_with(&[(A, 0.0, 0.0), (B, 0.3, 0.4)]);
        let f = sequence_features(&[A, B], &map);
        assert!((f.total_path.unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(f.cross_ratio_quadrants, Some(0.0));
        assert_eq!(f.self_cycles_quadrants, Some(1));
    }

    #[test]
    fn repeated_pair() {
        let map = map_with(&[(A, 0.0, 0.0), (B, 1.0, 1.0)]);
        let f = sequence_features(&[A, A, B], &map);
        assert_eq!(f.nodes, Some(3));
        assert_eq!(f.unique_nodes, Some(2));
        assert_eq!(f.cycles, Some(1));
        assert_eq!(f.self_cycles, Some(1));
        assert!((f.total_path.unwrap() - core::f64::consts::SQRT_2).abs() < 1e-15);
        assert!((f.avg_x.unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((f.std_x.unwrap() - core::f64::consts::SQRT_2 / 3.0).abs() < 1e-15);
        assert_eq!(f.self_cycles_quadrants, Some(1));
        assert_eq!(f.cross_ratio_quadrants, Some(1.0));
    }

    #[test]
    fn only_inter_quadrant_edges_invalidate_ratio() {
        let map = map_with(&[(A, 0.1, 0.1), (B, 0.9, 0.9)]);
        let f = sequence_features(&[A, B, A], &map);
        assert_eq!(f.self_cycles_quadrants, Some(0));
        assert_eq!(f.cross_ratio_quadrants, None);
        assert_eq!(f.path_per_unique, Some(f.total_path.unwrap() / 2.0));
    }

    proptest::proptest! {
        #[test]
        fn structural_invariants(codes in proptest::collection::vec(0usize..NUM_CIUS, 1..30),
                                 xs in proptest::collection::vec(0.0f64..=1.0, NUM_CIUS),
                                 ys in proptest::collection::vec(0.0f64..=1.0, NUM_CIUS)) {
            let mut pts = [Point { x: 0.0, y: 0.0 }; NUM_CIUS];
            for i in 0..NUM_CIUS { pts[i] = Point { x: xs[i], y: ys[i] }; }
            let map = CoordinateMap::new(pts, 0.5, 0.5).unwrap();
            let seq: Vec<CiuId> = codes.iter().map(|&c| CiuId::from_code(c).unwrap()).collect();
            let g = SpatioGraph::build(&seq, &map);
            let f = compute_features(&g);
            let nodes = f.nodes.unwrap();
            proptest::prop_assert_eq!(f.cycles.unwrap() + f.unique_nodes.unwrap(), nodes);
            proptest::prop_assert!(f.self_cycles.unwrap() <= nodes - 1);
            let intra = f.self_cycles_quadrants.unwrap();
            let inter = g.edges().filter(|(a, b)| a.quadrant != b.quadrant).count();
            proptest::prop_assert_eq!(intra + inter, g.edge_count());

            let mut rev = seq.clone();
            rev.reverse();
            let fr = sequence_features(&rev, &map);
            proptest::prop_assert!((fr.total_path.unwrap() - f.total_path.unwrap()).abs() < 1e-12);
        }

        #[test]
        fn x_translation(codes in proptest::collection::vec(0usize..4, 1..12), delta in -0.05f64..0.05) {
            // Points kept away from the split lines so quadrants do not move.
            let base = [(0.1, 0.1), (0.3, 0.8), (0.7, 0.2), (0.85, 0.9)];
            let make = |shift: f64| {
                let mut pts = [Point { x: 0.1, y: 0.1 }; NUM_CIUS];
                for (i, (x, y)) in base.iter().enumerate() { pts[i] = Point { x: x + shift, y: *y }; }
                CoordinateMap::new(pts, 0.5, 0.5).unwrap()
            };
            let seq: Vec<CiuId> = codes.iter().map(|&c| CiuId::from_code(c).unwrap()).collect();
            let f0 = sequence_features(&seq, &make(0.0));
            let f1 = sequence_features(&seq, &make(delta));
            proptest::prop_assert!((f1.avg_x.unwrap() - f0.avg_x.unwrap() - delta).abs() < 1e-12);
            proptest::prop_assert!((f1.std_x.unwrap() - f0.std_x.unwrap()).abs() < 1e-12);
            proptest::prop_assert!((f1.total_path.unwrap() - f0.total_path.unwrap()).abs() < 1e-12);
            proptest::prop_assert_eq!(f1.cross_ratio_quadrants, f0.cross_ratio_quadrants);
        }
    }

    #[test]
    fn feature_names_are_distinct() {
        let names: Vec<&str> = Feature::ALL.iter().map(|f| f.name()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 12);
        assert_eq!(names[0], "avg_x");
    }
}
