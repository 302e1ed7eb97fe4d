use std::fs;
use std::path::PathBuf;
use std::process::Command;

fn workdir(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("gluelab-cli-{tag}-{}", std::process::id()));
    fs::create_dir_all(&d).unwrap();
    fs::write(d.join("run.toml"), "family = \"std2d\"\nL = 2\nwindow = [\"0,0\", \"1,1\"]\ngen_range = [0, 1]\n").unwrap();
    d
}

fn gluelab(dir: &PathBuf, args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_gluelab"))
        .arg("--config")
        .arg(dir.join("run.toml"))
        .arg("--out")
        .arg(dir.join("out"))
        .args(args)
        .output()
        .unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn dist_prints_exact_value_and_writes_csv() {
    let d = workdir("dist");
    let (code, stdout) = gluelab(&d, &["dist", "--level", "1", "--from", "0,0", "--to", "1,0"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("= 1 "), "{stdout}");
    let csv = fs::read_to_string(d.join("out/dist.csv")).unwrap();
    assert!(csv.starts_with("p,q,level,d,lo,hi"));
}

#[test]
fn build_writes_table_and_svg() {
    let d = workdir("build");
    let (code, _) = gluelab(&d, &["build"]);
    assert_eq!(code, 0);
    assert!(fs::read_to_string(d.join("out/build.csv")).unwrap().lines().count() == 3);
    assert!(fs::read_to_string(d.join("out/complex.svg")).unwrap().contains("<svg"));
}

#[test]
fn gallery_between_neighbours() {
    let d = workdir("gallery");
    let (code, stdout) = gluelab(&d, &["gallery", "--from-cell", "1:0,0", "--to-cell", "1:1,0", "--level", "1"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("valid true"), "{stdout}");
}

#[test]
fn bad_input_exits_with_2() {
    let d = workdir("bad");
    let (code, _) = gluelab(&d, &["dist", "--level", "1", "--from", "zero", "--to", "1,0"]);
    assert_eq!(code, 2);
}
