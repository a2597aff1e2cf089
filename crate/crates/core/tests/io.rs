mod common;

use simrep::analysis::{SweepPoint, SweepResult};
use simrep::cli::sweep_outputs;
use simrep::contrastive::{train_ensemble, AugmentationPolicy, TrainConfig};
use simrep::embedding::{project, DistanceSummary};
use simrep::io::container::MAGIC;
use simrep::io::svg::read_marks;
use simrep::io::*;
use simrep::nn::EncoderSpec;
use simrep::simulators::{OutputMeta, ShapeTag, SimulationOutput};

fn grid_output(i: usize) -> SimulationOutput {
    let data = (0..12).map(|k| ((i * 12 + k) % 5) as f64 * 0.25).collect();
    SimulationOutput::new(ShapeTag::Grid, vec![2, 2, 3], data, OutputMeta { params: vec![i as f64, 0.5], seed: 100 + i as u64 })
        .unwrap()
}

fn dataset(n: usize) -> Dataset {
    Dataset::new(vec!["a".into(), "b".into()], (0..n).map(grid_output).collect()).unwrap()
}

#[test]
fn dataset_round_trip_is_exact_for_f32_values() {
    let ds = dataset(3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.simrep");
    ds.save(&path).unwrap();
    assert_eq!(Dataset::load(&path).unwrap(), ds);
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..7], MAGIC);
    let header_len = u32::from_le_bytes(bytes[7..11].try_into().unwrap()) as usize;
    assert_eq!(bytes.len() - 11 - header_len, 4 * 3 * 12 + 4 * 3 * 2);
}

#[test]
fn dataset_round_trip_rounds_to_f32() {
    let mut ds = dataset(2);
    ds.outputs[0].data[0] = 0.1;
    ds.outputs[1].meta.params[1] = std::f64::consts::PI;
    let back = Dataset::from_bytes(&ds.to_bytes().unwrap()).unwrap();
    assert_eq!(back.outputs[0].data[0], 0.1f32 as f64);
    assert_eq!(back.outputs[1].meta.params[1], std::f64::consts::PI as f32 as f64);
    assert_eq!(back.outputs[1].meta.seed, 101);
}

#[test]
fn truncated_payload_is_rejected() {
    let bytes = dataset(3).to_bytes().unwrap();
    let err = Dataset::from_bytes(&bytes[..bytes.len() - 6]).unwrap_err();
    assert!(matches!(err, ContainerError::Truncated(_)), "{err}");
    assert_eq!(err.code(), 11);
    let err = Dataset::from_bytes(&bytes[..9]).unwrap_err();
    assert!(matches!(err, ContainerError::Truncated(_)));
    let err = Dataset::from_bytes(&bytes[..20]).unwrap_err();
    assert!(matches!(err, ContainerError::Truncated(_)));
}

#[test]
fn missing_record_is_a_length_mismatch() {
    let bytes = dataset(10).to_bytes().unwrap();
    let record = 4 * (12 + 2);
    let err = Dataset::from_bytes(&bytes[..bytes.len() - record]).unwrap_err();
    assert!(matches!(err, ContainerError::LengthMismatch { expected: 10, found: 9 }), "{err}");
    assert_eq!(err.code(), 13);
}

#[test]
fn bad_magic_and_version_have_distinct_codes() {
    let mut bytes = dataset(2).to_bytes().unwrap();
    let mut wrong = bytes.clone();
    wrong[0] = b'X';
    let bad_magic = Dataset::from_bytes(&wrong).unwrap_err();
    assert!(matches!(bad_magic, ContainerError::BadMagic));

    let text = String::from_utf8_lossy(&bytes).into_owned();
    let at = text.find("\"schema_version\":1").unwrap() + "\"schema_version\":".len();
    bytes[at] = b'7';
    let version = Dataset::from_bytes(&bytes).unwrap_err();
    assert!(matches!(version, ContainerError::VersionMismatch { found: 7, expected: 1 }), "{version}");

    let codes = [bad_magic.code(), version.code(), ContainerError::Truncated(String::new()).code()];
    assert!(codes[0] != codes[1] && codes[1] != codes[2] && codes[0] != codes[2]);
}

#[test]
fn containers_are_not_interchangeable() {
    let spec = EncoderSpec::default_vector(3, 2);
    let model = common::untrained_ensemble(&spec, &[1, 2]);
    let bytes = model_to_bytes(&model, &Provenance::default()).unwrap();
    assert!(matches!(Dataset::from_bytes(&bytes), Err(ContainerError::Kind { .. })));
    let ds = dataset(2).to_bytes().unwrap();
    assert!(matches!(model_from_bytes(&ds), Err(ContainerError::Kind { .. })));
}

#[test]
fn model_round_trip_reproduces_projections_bit_exactly() {
    let outputs: Vec<SimulationOutput> =
        (0..40).map(|i| SimulationOutput::vector(vec![i as f64, (i * i % 7) as f64, (i as f64).sin()])).collect();
    let spec = EncoderSpec::default_vector(3, 2);
    let config = TrainConfig { epochs: 2, batch_size: 8, ensemble_size: 2, seed: 9, ..TrainConfig::default() };
    let model = train_ensemble(&outputs, &spec, &config, &AugmentationPolicy::default_for(ShapeTag::Vector)).unwrap();
    let provenance = Provenance { config_hash: "abc".into(), seed: 9 };

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.simrep");
    save_model(&path, &model, &provenance).unwrap();
    let (back, prov) = load_model(&path).unwrap();
    assert_eq!(prov, provenance);
    assert_eq!(back.loss_curves, model.loss_curves);
    assert_eq!(back.normalization, model.normalization);
    for out in &outputs {
        assert_eq!(project(&back, out).unwrap(), project(&model, out).unwrap());
    }
    assert_eq!(model_to_bytes(&back, &prov).unwrap(), std::fs::read(&path).unwrap());

    let bytes = std::fs::read(&path).unwrap();
    let err = model_from_bytes(&bytes[..bytes.len() - 3]).unwrap_err();
    assert!(matches!(err, ContainerError::Truncated(_)));
}

#[test]
fn atomic_write_leaves_only_the_target() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sub").join("x.bin");
    write_atomic(&path, b"one").unwrap();
    write_atomic(&path, b"two").unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), b"two");
    let names: Vec<_> = std::fs::read_dir(path.parent().unwrap()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names, vec![std::ffi::OsString::from("x.bin")]);
}

fn summary(mean: f64) -> DistanceSummary {
    DistanceSummary::from_members(vec![mean * 0.9, mean * 1.1], 1)
}

#[test]
fn sweep_csv_and_svg_carry_the_same_numbers() {
    let values = [0.5, 0.75, 1.0, 1.5, 2.0];
    let points = values
        .iter()
        .map(|&v| SweepPoint {
            value: v,
            summary: if v == 1.5 { None } else { Some(summary((v - 1.0_f64).abs() / 3.0)) },
            error: if v == 1.5 { Some("diverged".into()) } else { None },
        })
        .collect();
    let result = SweepResult {
        param_index: 0,
        param_name: "k".into(),
        base_value: 1.0,
        replicates: 1,
        points,
    };
    let (table, plot) = sweep_outputs(&result, None);
    let dir = tempfile::tempdir().unwrap();
    emit_csv(&dir.path().join("s.csv"), &table).unwrap();
    emit_svg(&dir.path().join("s.svg"), &plot).unwrap();

    let csv = read_csv(&dir.path().join("s.csv")).unwrap();
    let svg = std::fs::read_to_string(dir.path().join("s.svg")).unwrap();
    let csv_pairs: Vec<(String, String)> = csv
        .column("value")
        .unwrap()
        .into_iter()
        .zip(csv.column("mean").unwrap())
        .filter(|(_, m)| !m.is_empty())
        .map(|(v, m)| (v.to_string(), m.to_string()))
        .collect();
    let svg_pairs: Vec<(String, String)> =
        read_marks(&svg, "point", "data-x").into_iter().zip(read_marks(&svg, "point", "data-y")).collect();
    assert_eq!(csv_pairs, svg_pairs);
    assert_eq!(csv_pairs.len(), 4);
    for (x, y) in &csv_pairs {
        let v: f64 = x.parse().unwrap();
        let m: f64 = y.parse().unwrap();
        let expected = result.points.iter().find(|p| p.value == v).unwrap().summary.as_ref().unwrap().mean;
        assert_eq!(m, expected);
    }
    assert_eq!(read_marks(&svg, "point base", "data-x"), vec!["1"]);
    assert_eq!(read_marks(&svg, "point base", "data-y"), vec!["0"]);
    assert_eq!(csv.column("error").unwrap()[3], "diverged");
}

#[test]
fn empty_sweep_gives_header_only_csv() {
    let result = SweepResult { param_index: 0, param_name: "k".into(), base_value: 1.0, replicates: 1, points: vec![] };
    let (table, plot) = sweep_outputs(&result, None);
    assert_eq!(table.to_csv().unwrap(), b"value,mean,std,pairs,error\r\n");
    let svg = render_svg(&plot);
    assert!(read_marks(&svg, "point", "data-y").is_empty());
}
