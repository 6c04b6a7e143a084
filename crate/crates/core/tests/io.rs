use stochastic_greedy::io::{load_instance, save_instance};
use stochastic_greedy::{Instance, IoError};

#[test]
fn save_then_load() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inst.txt");
    let inst = Instance::from_rows(3, &[[0.1, 2.0, 0.0], [1e-7, 0.0, 123456.789]]).unwrap();
    save_instance(&inst, &path).unwrap();
    assert_eq!(load_instance(&path).unwrap(), inst);
}

#[test]
fn errors_name_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.txt");
    let err = load_instance(&missing).unwrap_err();
    assert!(matches!(err, IoError::Io { .. }));
    assert!(err.to_string().contains("nope.txt"));

    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "advertisers 2\nimpressions 1\n1 x\n").unwrap();
    let err = load_instance(&bad).unwrap_err();
    assert!(matches!(err, IoError::Parse { .. }), "{err}");
}
