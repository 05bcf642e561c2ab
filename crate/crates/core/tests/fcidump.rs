mod common;

use common::*;
use lcu_core::fcidump::*;
use lcu_core::Error;

#[test]
fn serialized_fixtures_parse_back_identically() {
    for name in ["h2", "lih", "h2o"] {
        let rec = read_fcidump(data_dir().join(format!("{name}.fcidump"))).unwrap();
        let again = parse_fcidump(&serialize_fcidump(&rec)).unwrap();
        assert_eq!(again.n_orb, rec.n_orb);
        assert_eq!(again.n_elec, rec.n_elec);
        assert_eq!(again.core_energy, rec.core_energy);
        assert!((&again.eri - &rec.eri).max_abs() == 0.0);
        assert_eq!(again.core_h, rec.core_h);
        assert_eq!(to_chemist(&again).unwrap(), to_chemist(&rec).unwrap());
    }
}

#[test]
fn fixture_headers() {
    for (name, norb, nelec) in [("h2", 2, 2), ("lih", 6, 4), ("beh2", 7, 6), ("h2o", 7, 10), ("nh3", 8, 10)] {
        let rec = read_fcidump(data_dir().join(format!("{name}.fcidump"))).unwrap();
        assert_eq!((rec.n_orb, rec.n_elec), (norb, nelec), "{name}");
        assert!(rec.eri.eightfold_defect() < 1e-12);
    }
}

#[test]
fn fortran_exponents_are_accepted() {
    let text = " &FCI NORB=1,NELEC=2,MS2=0,\n &END\n 0.5D+00 1 1 1 1\n -1.25d0 1 1 0 0\n 7.0D-01 0 0 0 0\n";
    let rec = parse_fcidump(text).unwrap();
    assert_eq!(rec.eri[(0, 0, 0, 0)], 0.5);
    assert_eq!(rec.core_h[(0, 0)], -1.25);
    assert_eq!(rec.core_energy, 0.7);
}

#[test]
fn malformed_input_reports_the_line() {
    let out_of_range = " &FCI NORB=2,NELEC=2,\n &END\n 1.0 3 1 0 0\n";
    assert!(matches!(parse_fcidump(out_of_range), Err(Error::IndexRange { line: 3, .. })));
    let garbage = " &FCI NORB=2,NELEC=2,\n &END\n one 1 1 0 0\n";
    assert!(matches!(parse_fcidump(garbage), Err(Error::Parse { line: 3, .. })));
    assert!(parse_fcidump("no header at all").is_err());
    assert!(matches!(read_fcidump("/nonexistent/file"), Err(Error::Io(_))));
}
