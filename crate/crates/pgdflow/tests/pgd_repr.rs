mod common;

use pgdflow::mesh::ParametricGrid;
use pgdflow::pgd::{normalize_mode, Provenance, SeparatedSolution, SnapshotTensor, Variable};

use common::{random_vec, rng};

fn sample_solution() -> SeparatedSolution {
    let mut rng = rng(21);
    let grids = vec![ParametricGrid::new(-1.0, 1.0, 3, 2).unwrap(), ParametricGrid::new(0.0, 2.0, 2, 3).unwrap()];
    // An empty multiplier block exercises zero-length fields.
    let blocks = [5, 0, 6, 3, 12];
    let mut sol = SeparatedSolution::new(grids.clone(), blocks, Provenance::Aposteriori);
    for _ in 0..3 {
        let mut state = random_vec(&mut rng, 26);
        // A vanishing pressure block is stored as a zero field.
        state[11..14].fill(0.0);
        let psi = grids.iter().map(|g| random_vec(&mut rng, g.n_nodes())).collect();
        sol.push(normalize_mode(&state, &blocks, psi).unwrap());
    }
    sol.solves = 17;
    sol
}

#[test]
fn separated_solution_round_trips_exactly() {
    let sol = sample_solution();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.pgd");
    sol.save(&path).unwrap();
    let back = SeparatedSolution::load(&path).unwrap();
    assert_eq!(back.modes, sol.modes);
    assert_eq!(back.blocks, sol.blocks);
    assert_eq!(back.solves, sol.solves);
    assert_eq!(back.provenance, sol.provenance);
    assert_eq!(back.to_text(), sol.to_text());
    for mu in [[-1.0, 0.0], [0.3, 1.7], [1.0, 2.0]] {
        assert_eq!(back.evaluate_at(&mu).unwrap(), sol.evaluate_at(&mu).unwrap());
    }
}

#[test]
fn evaluation_is_the_sum_of_rank_one_terms() {
    let sol = sample_solution();
    let mu = [0.25, 0.6];
    let x = sol.evaluate_at(&mu).unwrap();
    let mut expected = vec![0.0; sol.n_dofs()];
    for m in &sol.modes {
        let p: f64 = sol.grids.iter().zip(&m.psi).zip(mu).map(|((g, v), t)| g.interpolate(v, t).unwrap()).product();
        for (e, s) in expected.iter_mut().zip(m.spatial_state()) {
            *e += p * s;
        }
    }
    for (a, b) in x.iter().zip(&expected) {
        assert!((a - b).abs() < 1e-13);
    }
    let first = sol.evaluate_truncated(&mu, 1).unwrap();
    let single = sol.truncated(1).evaluate_at(&mu).unwrap();
    assert_eq!(first, single);
    assert!(sol.modes.iter().all(|m| m.amplitude(Variable::P) == 0.0 && m.fields[3].iter().all(|&v| v == 0.0)));
}

#[test]
fn parameters_outside_the_grids_are_rejected() {
    let sol = sample_solution();
    assert!(sol.evaluate_at(&[1.5, 0.5]).is_err());
    assert!(sol.evaluate_at(&[0.5]).is_err());
}

#[test]
fn malformed_separated_files_name_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.pgd");
    let text = sample_solution().to_text();
    std::fs::write(&path, &text[..text.len() / 2]).unwrap();
    let err = SeparatedSolution::load(&path).unwrap_err().to_string();
    assert!(err.contains("bad.pgd"), "{err}");
}

#[test]
fn snapshot_tensor_round_trips_exactly() {
    let mut rng = rng(22);
    let grids = vec![ParametricGrid::new(0.0, 1.0, 2, 2).unwrap()];
    let blocks = [3, 1, 4, 2, 8];
    let cols = (0..5).map(|_| random_vec(&mut rng, 18)).collect();
    let t = SnapshotTensor::from_columns(grids, blocks, cols).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.tensor");
    t.save(&path).unwrap();
    let back = SnapshotTensor::load(&path).unwrap();
    assert_eq!(back.data, t.data);
    assert_eq!(back.blocks, t.blocks);
    assert_eq!(back.shape(), t.shape());
}
