//! File-based ingestion: source tables on disk through to the aligned dataset.

use std::fs;

use gcb_cvar::data::{load_gcb, load_scenario, load_soi, AlignedDataset, Constants, EmissionUnit, GTCO2_PER_GTC};
use gcb_cvar::simulate::{simulate_structural, to_sources, StructuralSimulation};
use gcb_cvar::structural::StructuralTheta;
use gcb_cvar::Error;

/// First simulated sample whose atmospheric stock rises every year, as observed data do.
fn synthetic() -> AlignedDataset {
    (3..)
        .map(|seed| simulate_structural(&StructuralTheta::GCB_1959_2022, &StructuralSimulation::new(64, seed)).unwrap())
        .find(|ds| ds.validate_observed().is_ok())
        .unwrap()
}

#[test]
fn sources_on_disk_rebuild_the_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let ds = synthetic();
    let (gcb, soi) = to_sources(&ds);
    gcb.write_csv(fs::File::create(dir.path().join("gcb.csv")).unwrap()).unwrap();
    soi.write_csv(fs::File::create(dir.path().join("soi.csv")).unwrap()).unwrap();

    let gcb = load_gcb(dir.path().join("gcb.csv")).unwrap();
    let soi = load_soi(dir.path().join("soi.csv")).unwrap();
    let back = AlignedDataset::from_sources(&gcb, &soi, &Constants::default(), 1959, 2022).unwrap();

    assert_eq!(back.years, ds.years);
    let shift = back.concentration[0] - ds.concentration[0];
    for i in 0..ds.len() {
        assert!((back.land_sink[i] - ds.land_sink[i]).abs() < 1e-9);
        assert!((back.ocean_sink[i] - ds.ocean_sink[i]).abs() < 1e-9);
        assert!((back.emissions[i] - ds.emissions[i]).abs() < 1e-9);
        assert!((back.concentration[i] - ds.concentration[i] - shift).abs() < 1e-8);
        assert!((back.soi[i] - ds.soi[i]).abs() < 1e-9);
    }
}

#[test]
fn sub_sample_is_a_window() {
    let ds = synthetic();
    let (gcb, soi) = to_sources(&ds);
    let sub = AlignedDataset::from_sources(&gcb, &soi, &Constants::default(), 1970, 2000).unwrap();
    assert_eq!(sub.first_year(), 1970);
    assert_eq!(sub.len(), 31);
    assert!(matches!(
        AlignedDataset::from_sources(&gcb, &soi, &Constants::default(), 1950, 2000),
        Err(Error::Alignment(_))
    ));
}

#[test]
fn canonical_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dataset.csv");
    let ds = synthetic();
    ds.save(&path).unwrap();
    let back = AlignedDataset::load(&path).unwrap();
    assert_eq!(back.years, ds.years);
    for (a, b) in back.concentration.iter().zip(&ds.concentration) {
        assert!((a - b).abs() <= 5e-7);
    }
}

#[test]
fn bad_files_report_their_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gcb.csv");
    fs::write(&path, "Year,fossil emissions,land-use change emissions\n1959,2.4,1.5\n").unwrap();
    let err = load_gcb(&path).unwrap_err();
    assert!(matches!(err, Error::Schema { .. }), "{err}");
    assert!(err.is_data_error());

    let soi = dir.path().join("soi.csv");
    fs::write(&soi, "year,soi\n1959,0.1\n1960,abc\n").unwrap();
    match load_soi(&soi).unwrap_err() {
        Error::Parse { row, value, .. } => {
            assert_eq!(row, 3);
            assert_eq!(value, "abc");
        }
        e => panic!("unexpected {e}"),
    }

    let missing = load_gcb(dir.path().join("absent.csv")).unwrap_err();
    assert!(matches!(missing, Error::Io { .. }));
}

#[test]
fn scenarios_convert_units_and_must_start_after_the_sample() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ssp.csv");
    fs::write(&path, "year,value,unit\n2023,40.0,GtCO2\n2024,11.0,PgC\n2025,41.0,\n").unwrap();
    let sc = load_scenario(&path, "ssp", EmissionUnit::GtCO2).unwrap();
    assert_eq!(sc.years, vec![2023, 2024, 2025]);
    assert!((sc.emissions[0] - 40.0 / GTCO2_PER_GTC).abs() < 1e-12);
    assert_eq!(sc.emissions[1], 11.0);
    assert!((sc.emissions[2] - 41.0 / GTCO2_PER_GTC).abs() < 1e-12);

    let late = dir.path().join("late.csv");
    fs::write(&late, "2030,10\n2031,10\n").unwrap();
    assert!(matches!(
        load_scenario(&late, "late", EmissionUnit::PgC),
        Err(Error::ScenarioAlignment(_))
    ));
}
