use proptest::prelude::*;

use shapegraph::io::{self, SummaryFormat};
use shapegraph::summary::{EdgePhase, SummaryEdge, SummaryGraph, SummaryNode};
use shapegraph::{Error, PointCloud};

fn two_node_graph() -> SummaryGraph {
    SummaryGraph {
        nodes: (0..2)
            .map(|id| SummaryNode {
                id,
                landmarks: vec![id, id + 2],
                point_count: 10 + id as u64,
                self_weight: 0.75,
                label_histogram: vec![(1, 7), (4, 3 + id as u64)],
                dominant_label: Some(1),
            })
            .collect(),
        edges: vec![SummaryEdge {
            source: 0,
            target: 1,
            weight: 0.6,
            modularity: 0.125,
            phase: EdgePhase::Spanning,
        }],
        landmark_rows: vec![3, 8, 11, 14],
        point_assignment: vec![0, 0, 1, 1, 0],
    }
}

#[test]
fn binary_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<Vec<f64>> = (0..5).map(|i| (0..3).map(|j| (i * 3 + j) as f64 * 0.25 - 1.5).collect()).collect();
    for labels in [None, Some(vec![3, -1, 0, 7, 2])] {
        let pc = PointCloud::from_rows(&rows, labels).unwrap();
        let path = dir.path().join("pc.bin");
        io::write_binary(&pc, &path).unwrap();
        assert_eq!(io::read_binary(&path).unwrap(), pc);
    }
}

#[test]
fn csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let pc = PointCloud::from_rows(&[vec![0.1, -2.5e-7], vec![3.0, 1e10]], Some(vec![4, 5])).unwrap();
    let path = dir.path().join("pc.csv");
    io::write_csv(&pc, &path).unwrap();
    assert_eq!(io::read_csv(&path, false, Some(2)).unwrap(), pc);
}

#[test]
fn csv_with_header_and_label_column_first() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pc.csv");
    std::fs::write(&path, "label,x,y\n2,0.5,1\n3,1.5,2\n").unwrap();
    let pc = io::read_csv(&path, true, Some(0)).unwrap();
    assert_eq!(pc.dim(), 2);
    assert_eq!(pc.row(1), &[1.5, 2.0]);
    assert_eq!(pc.labels(), Some(&[2, 3][..]));
}

#[test]
fn missing_file_error_names_path() {
    let err = io::read_csv("/definitely/not/here.csv", false, None).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains("/definitely/not/here.csv"));
}

#[test]
fn truncated_label_block() {
    let dir = tempfile::tempdir().unwrap();
    let pc = PointCloud::from_rows(&[vec![1.0], vec![2.0]], Some(vec![1, 2])).unwrap();
    let path = dir.path().join("pc.bin");
    io::write_binary(&pc, &path).unwrap();
    let mut bytes = std::fs::read(&path).unwrap();
    bytes.pop();
    std::fs::write(&path, &bytes).unwrap();
    match io::read_binary(&path) {
        Err(Error::Truncated { expected, actual }) => assert_eq!(expected, actual + 1),
        other => panic!("{other:?}"),
    }
}

#[test]
fn json_export_import() {
    let dir = tempfile::tempdir().unwrap();
    let g = two_node_graph();
    let path = dir.path().join("g.json");
    io::write_summary(&g, SummaryFormat::Json, &path).unwrap();
    assert_eq!(io::read_summary_json(&path).unwrap(), g);
}

#[test]
fn graphml_structure() {
    let xml = io::summary_to_graphml(&two_node_graph());
    assert_eq!(xml.matches("<node ").count(), 2);
    assert_eq!(xml.matches("<edge ").count(), 1);
    for key in ["weight", "modularity", "phase", "point_count", "dominant_label"] {
        assert!(xml.contains(&format!("<key id=\"{key}\"")), "missing key {key}");
    }
    assert!(xml.contains("<data key=\"phase\">spanning</data>"));
}

#[test]
fn dot_structure() {
    let dot = io::summary_to_dot(&two_node_graph());
    assert!(dot.starts_with("graph "));
    assert!(dot.contains("0 -- 1"));
    assert!(!dot.contains("->"));
}

#[test]
fn unwritable_destination() {
    let err = io::write_summary(&two_node_graph(), SummaryFormat::Dot, "/no/such/dir/g.dot").unwrap_err();
    assert!(err.to_string().contains("/no/such/dir/g.dot"));
}

proptest! {
    #[test]
    fn binary_round_trip_of_f32_values(
        rows in prop::collection::vec(prop::collection::vec(-1e6f32..1e6, 4), 1..30),
        labelled in any::<bool>(),
    ) {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|&x| x as f64).collect()).collect();
        let labels = labelled.then(|| (0..rows.len() as i32).collect());
        let pc = PointCloud::from_rows(&rows, labels).unwrap();
        let mut bytes = Vec::new();
        io::write_binary_to(&pc, &mut bytes).unwrap();
        prop_assert_eq!(io::decode_binary(&bytes).unwrap(), pc);
    }

    #[test]
    fn csv_reproduces_binary_precision(rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 1..20)) {
        let dir = tempfile::tempdir().unwrap();
        let pc = PointCloud::from_rows(&rows, None).unwrap();
        let path = dir.path().join("pc.csv");
        io::write_csv(&pc, &path).unwrap();
        let back = io::read_csv(&path, false, None).unwrap();
        for (a, b) in pc.data().iter().zip(back.data()) {
            prop_assert_eq!(*a as f32, *b as f32);
        }
    }
}
