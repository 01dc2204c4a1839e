use pgdflow::mapping::SwimmerGeometry;
use pgdflow::mesh::{load_mesh, mesh_to_string, parse_mesh, write_mesh, FaceTag};
use pgdflow::meshgen::{swimmer_mesh, SwimmerMeshSpec};

#[test]
fn swimmer_mesh_round_trips_through_the_text_format() {
    let g = SwimmerGeometry::default();
    let mesh = swimmer_mesh(&g, &SwimmerMeshSpec::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("swimmer.mesh");
    write_mesh(&mesh, &path).unwrap();
    let back = load_mesh(&path).unwrap();
    assert_eq!(back.degree(), mesh.degree());
    assert_eq!(back.n_elements(), mesh.n_elements());
    assert_eq!(back.nodes(), mesh.nodes());
    for e in 0..mesh.n_elements() {
        assert_eq!(back.element(e), mesh.element(e));
    }
    assert_eq!(back.boundary_records(), mesh.boundary_records());
    assert_eq!(mesh_to_string(&back), mesh_to_string(&mesh));
}

#[test]
fn swimmer_mesh_carries_every_boundary_kind() {
    let mesh = swimmer_mesh(&SwimmerGeometry::default(), &SwimmerMeshSpec::default()).unwrap();
    let tags: Vec<FaceTag> = mesh.boundary_records().into_iter().map(|r| r.2).collect();
    for t in [FaceTag::Dirichlet, FaceTag::Neumann, FaceTag::Slip] {
        assert!(tags.contains(&t), "missing {t:?}");
    }
    assert!(!mesh.interface_faces().is_empty());
}

#[test]
fn malformed_mesh_files_are_reported_with_their_path() {
    let path = std::path::Path::new("broken.mesh");
    let err = parse_mesh("not a mesh", path).unwrap_err().to_string();
    assert!(err.contains("broken.mesh"), "{err}");
    assert!(load_mesh("/nonexistent/dir/x.mesh").is_err());
}
