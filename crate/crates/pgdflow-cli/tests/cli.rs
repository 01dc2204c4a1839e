use std::path::{Path, PathBuf};
use std::process::{Command, Output};

/// A small but complete run configuration: quadratic swimmer mesh, coarse
/// parametric grids and few modes.
const SMALL: &str = r#"
[mesh]
k = 2

[mapping]
study = "radius"
elements1 = 2
degree = 2
gauss = 3

[apriori]
max_modes = 3

[aposteriori]
max_modes = 3
level = "vertices"

[analysis]
errors = false
"#;

struct Run {
    dir: tempfile::TempDir,
}

impl Run {
    fn new(config: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("run.toml"), config).unwrap();
        Run { dir }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    fn pgdflow(&self, out: &str, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_pgdflow"))
            .args(args)
            .arg("--config")
            .arg(self.path("run.toml"))
            .arg("--out")
            .arg(self.path(out))
            .arg("--threads")
            .arg("1")
            .env("RUST_LOG", "warn")
            .output()
            .unwrap()
    }
}

fn ok(o: &Output) {
    assert!(
        o.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        o.status.code(),
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn solve_prints_drag_and_writes_fields() {
    let run = Run::new(SMALL);
    let o = run.pgdflow("solve", &["solve", "--mu", "-0.4"]);
    ok(&o);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.starts_with("drag left="), "{stdout}");
    let fields = read(&run.path("solve/fields.csv"));
    assert!(fields.starts_with("element,x,y,u1,u2,p,L11,L12,L21,L22"));
    let summary = read(&run.path("solve/summary.txt"));
    assert!(summary.contains("force_total_x"));
    assert!(run.path("solve/config.toml").exists());
}

#[test]
fn constant_boundary_data_gives_uniform_flow() {
    // The mapping's radial factors are not polynomial, so the discrete
    // divergence identity holds up to quadrature error: use a rich rule.
    let run = Run::new(&format!("{SMALL}\n[problem]\nboundary = \"constant\"\nquad_degree = 12\n"));
    ok(&run.pgdflow("c", &["solve", "--mu", "0.3"]));
    let text = read(&run.path("c/fields.csv"));
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let (iu1, iu2, ip) = (col("u1"), col("u2"), col("p"));
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert!((v[iu1] - 1.0).abs() < 1e-7 && v[iu2].abs() < 1e-7, "{line}");
        assert!(v[ip].abs() < 1e-5, "{line}");
    }
}

#[test]
fn apriori_runs_are_byte_identical_and_echo_the_config() {
    let run = Run::new(SMALL);
    ok(&run.pgdflow("a", &["apriori"]));
    ok(&run.pgdflow("b", &["apriori"]));
    for f in ["solution.pgd", "iterations.csv"] {
        assert_eq!(read(&run.path(&format!("a/{f}"))), read(&run.path(&format!("b/{f}"))), "{f} differs");
    }
    // The echoed configuration reproduces the run.
    std::fs::copy(run.path("a/config.toml"), run.path("run.toml")).unwrap();
    ok(&run.pgdflow("c", &["apriori"]));
    assert_eq!(read(&run.path("a/solution.pgd")), read(&run.path("c/solution.pgd")));
    let iterations = read(&run.path("a/iterations.csv"));
    // Three modes of n_i + 1 = 3 spatial solves each.
    assert_eq!(iterations.lines().count(), 1 + 9);
}

#[test]
fn aposteriori_compress_and_surface_chain() {
    let run = Run::new(SMALL);
    ok(&run.pgdflow("post", &["aposteriori"]));
    for f in ["snapshots.tensor", "solution.pgd", "separation.csv", "summary.txt"] {
        assert!(run.path(&format!("post/{f}")).exists(), "missing {f}");
    }
    let input = run.path("post/solution.pgd");
    let input = input.to_str().unwrap();
    ok(&run.pgdflow("comp", &["compress", "--input", input]));
    assert!(read(&run.path("comp/summary.txt")).contains("max_nodal_deviation"));
    let o = run.pgdflow("surf", &["surface", "--input", input, "--mu", "0.1"]);
    ok(&o);
    let surface = read(&run.path("surf/drag_surface.csv"));
    assert!(surface.starts_with("mu1,F_D_left,"), "{surface}");
    assert!(String::from_utf8_lossy(&o.stdout).contains("total"));
}

#[test]
fn compare_writes_the_tables() {
    let run = Run::new(&SMALL.replace("errors = false", "errors = true"));
    let cfg = format!(
        "{}\n[compare]\nmethods = [\"apriori:2\", \"aposteriori:vertices\"]\n",
        read(&run.path("run.toml"))
    );
    std::fs::write(run.path("run.toml"), cfg).unwrap();
    ok(&run.pgdflow("cmp", &["compare"]));
    let table = read(&run.path("cmp/comparison.csv"));
    assert_eq!(table.lines().count(), 3, "{table}");
    assert!(read(&run.path("cmp/matched_accuracy.csv")).lines().count() > 1);
    assert!(read(&run.path("cmp/errors_vs_modes.csv")).lines().count() > 2);
}

#[test]
fn usage_errors_exit_with_code_two() {
    let run = Run::new(SMALL);
    // Missing parameter value.
    assert_eq!(run.pgdflow("x", &["solve"]).status.code(), Some(2));
    // Parameter outside its interval.
    assert_eq!(run.pgdflow("x", &["solve", "--mu", "3.0"]).status.code(), Some(2));
    // Unreadable mesh.
    let bad = Run::new(&format!("{SMALL}\n").replace("[mesh]\nk = 2", "[mesh]\nk = 2\npath = \"/nonexistent/m.mesh\""));
    let o = bad.pgdflow("x", &["solve", "--mu", "0.0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/m.mesh"));
    // A comparison needs at least two methods.
    let single = Run::new(&format!("{SMALL}\n[compare]\nmethods = [\"apriori:2\"]\n"));
    assert_eq!(single.pgdflow("x", &["compare"]).status.code(), Some(2));
    // Unknown configuration keys.
    let unknown = Run::new(&format!("{SMALL}\n[run]\nspeed = 3\n"));
    assert_eq!(unknown.pgdflow("x", &["apriori"]).status.code(), Some(2));
}

#[test]
fn generated_mesh_can_be_read_back() {
    let run = Run::new(SMALL);
    ok(&run.pgdflow("m", &["gen-mesh"]));
    let mesh = run.path("m/swimmer.mesh");
    let cfg = SMALL.replace("[mesh]\nk = 2", &format!("[mesh]\nk = 2\npath = {:?}", mesh.to_str().unwrap()));
    std::fs::write(run.path("run.toml"), cfg).unwrap();
    ok(&run.pgdflow("s", &["solve", "--mu", "0.0"]));
}
