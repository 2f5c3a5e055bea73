use hhqubit::config::RunSpec;
use hhqubit::output::{read_h_dump, sidecar_path, write_csv, write_h_dump, Sidecar, Table, H_DUMP_MAGIC};
use hhqubit_core::constants::CODATA;

fn small() -> RunSpec {
    RunSpec::parse("basis.nx = 4\nbasis.ny = 4\nbasis.nz = 3\n").unwrap()
}

#[test]
fn h_dump_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("h.bin");
    let wp = small().working_point();
    let h = wp.hamiltonian(&CODATA).unwrap();
    write_h_dump(&p, &h, wp.params_hash()).unwrap();
    let bytes = std::fs::read(&p).unwrap();
    assert_eq!(bytes[..8], H_DUMP_MAGIC);
    assert_eq!(bytes.len(), 24 + 16 * h.dim() * h.dim());
    let (n, hash, entries) = read_h_dump(&p).unwrap();
    assert_eq!(n, 192);
    assert_eq!(hash, wp.params_hash());
    for i in 0..n {
        for j in 0..n {
            assert_eq!(entries[i * n + j], h.get(i, j));
            assert_eq!(entries[i * n + j], entries[j * n + i].conj());
        }
    }
}

#[test]
fn truncated_dump_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("h.bin");
    let wp = small().working_point();
    write_h_dump(&p, &wp.hamiltonian(&CODATA).unwrap(), 0).unwrap();
    let bytes = std::fs::read(&p).unwrap();
    std::fs::write(&p, &bytes[..bytes.len() - 8]).unwrap();
    assert!(read_h_dump(&p).is_err());
    std::fs::write(&p, b"nonsense").unwrap();
    assert!(read_h_dump(&p).is_err());
}

#[test]
fn config_file_round_trip_and_hash() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("run.cfg");
    let text = "# comment\nfield.b_x = 0.5\ndrive.e1 = 2e4\nmask.ratio_factor = 10\n";
    std::fs::write(&p, text).unwrap();
    let spec = RunSpec::load(&p).unwrap();
    assert_eq!(spec.e1, 2e4);
    let again = RunSpec::parse(&spec.to_config_string()).unwrap();
    assert_eq!(again, spec);
    assert_eq!(again.hash(), spec.hash());
    assert_ne!(spec.hash(), RunSpec::default().hash());
}

#[test]
fn csv_carries_hash_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.csv");
    let spec = small();
    let meta = Sidecar {
        run_spec_sha256: spec.hash(),
        subcommand: "test".into(),
        data_file: "t.csv".into(),
        params_hashes: vec![],
        mask_config: (&spec.mask).into(),
        basis_convergence: None,
        wall_time_s: 0.0,
        workers: 1,
        notes: vec![],
        run_spec: spec.to_config_string(),
    };
    let mut t = Table::new(&["omega_over_2pi_GHz", "flag"]);
    t.push(vec!["1".into(), "0".into()]);
    write_csv(&p, &t, &meta).unwrap();
    let text = std::fs::read_to_string(&p).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), format!("# run_spec_sha256={}", spec.hash()));
    assert_eq!(lines.next().unwrap(), "omega_over_2pi_GHz,flag");
    let side: serde_json::Value = serde_json::from_slice(&std::fs::read(sidecar_path(&p)).unwrap()).unwrap();
    let recomputed = RunSpec::parse(side["run_spec"].as_str().unwrap()).unwrap().hash();
    assert_eq!(side["run_spec_sha256"], recomputed.as_str());
}
