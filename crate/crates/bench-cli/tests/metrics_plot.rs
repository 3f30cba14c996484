use proptest::prelude::*;
use tpil_bench::metrics::{metrics_csv, parse_metrics_csv, sig9, CsvError, METRICS_HEADER};
use tpil_bench::plot::{mean_and_std, render_svg, PlotError, Series};
use tpil_core::orchestrator::MetricsRow;

/// Reference strings produced by C's `%.9g`.
const PRINTF: &[(f64, &str)] = &[
    (0.0, "0"),
    (1.0, "1"),
    (-1.0, "-1"),
    (0.1, "0.1"),
    (1.0 / 3.0, "0.333333333"),
    (-2.0 / 3.0, "-0.666666667"),
    (123456789.0, "123456789"),
    (1234567890.0, "1.23456789e+09"),
    (1e-5, "1e-05"),
    (1.23456789e-6, "1.23456789e-06"),
    (9.999999995, "9.99999999"),
    (99999999.95, "100000000"),
    (-42.125, "-42.125"),
    (3.14159265358979, "3.14159265"),
    (1e300, "1e+300"),
    (-1e-300, "-1e-300"),
    (0.000123456789123, "0.000123456789"),
    (12345.6789012345, "12345.6789"),
    (5e-324, "4.94065646e-324"),
    (2.5, "2.5"),
];

#[test]
fn sig9_matches_printf() {
    for &(v, want) in PRINTF {
        assert_eq!(sig9(v), want, "{v:e}");
    }
    assert_eq!(sig9(f64::NAN), "nan");
    assert_eq!(sig9(f64::NEG_INFINITY), "-inf");
}

proptest! {
    #[test]
    fn sig9_keeps_nine_digits(m in -1.0f64..1.0, e in -30i32..30) {
        let v = m * 10f64.powi(e);
        let back: f64 = sig9(v).parse().unwrap();
        prop_assert!((back - v).abs() <= 5e-9 * v.abs(), "{} -> {}", v, sig9(v));
    }
}

fn row(iter: usize, ret: f64) -> MetricsRow {
    MetricsRow {
        iter,
        mean_true_return: ret,
        std_true_return: 1.5,
        disc_class_acc: 0.75,
        disc_domain_acc: 0.5,
        disc_loss: 0.693147181,
        policy_kl: 0.00912,
        policy_entropy: 1.25,
    }
}

#[test]
fn csv_round_trip_and_layout() {
    let rows = vec![row(0, -50.25), row(1, -40.125), row(2, -1.0 / 3.0)];
    let text = metrics_csv(&rows);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], METRICS_HEADER);
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[3], "2,-0.333333333,1.5,0.75,0.5,0.693147181,0.00912,1.25");
    assert!(lines.iter().all(|l| l.split(',').count() == 8));
    let back = parse_metrics_csv(&text).unwrap();
    assert_eq!(back[..2], rows[..2]);
    assert_eq!(back[2].mean_true_return, -0.333333333);
}

#[test]
fn csv_rejects_bad_input() {
    assert_eq!(parse_metrics_csv(""), Err(CsvError::Empty));
    assert!(matches!(parse_metrics_csv("iter,x\n"), Err(CsvError::Header(_))));
    let mut text = metrics_csv(&[row(0, 1.0), row(1, 2.0)]);
    text.push_str("1,1,1,1,1,1,1,1\n");
    assert!(matches!(parse_metrics_csv(&text), Err(CsvError::Row { line: 4, .. })));
    let short = format!("{METRICS_HEADER}\n0,1,2\n");
    assert!(matches!(parse_metrics_csv(&short), Err(CsvError::Row { line: 2, .. })));
    let nan_ok = format!("{METRICS_HEADER}\n0,1,1,nan,nan,nan,0,0\n");
    assert!(parse_metrics_csv(&nan_ok).unwrap()[0].disc_loss.is_nan());
}

#[test]
fn single_run_is_one_polyline_with_its_points() {
    let s = [Series { label: "a".into(), runs: vec![vec![row(0, -10.0), row(1, -5.0)]] }];
    let svg = render_svg(&s, "mean_true_return", "t").unwrap();
    assert_eq!(svg.matches("<polyline").count(), 1);
    assert_eq!(svg.matches("<polygon").count(), 0);
    let line = svg.lines().find(|l| l.starts_with("<polyline")).unwrap();
    let points = line.split('"').nth(1).unwrap();
    assert_eq!(points.split(' ').count(), 2);
    assert_eq!(svg, render_svg(&s, "mean_true_return", "t").unwrap());
    assert!(svg.contains(">a</text>"));
}

#[test]
fn seeds_sharing_a_label_get_a_band() {
    // Hand calculation at iteration 0: values 1..5, mean 3, population
    // variance (4+1+0+1+4)/5 = 2.
    let runs: Vec<Vec<MetricsRow>> = (1..=5).map(|k| vec![row(0, k as f64), row(1, 10.0)]).collect();
    let stats = mean_and_std(
        &runs.iter().map(|r| r.iter().map(|m| (m.iter as f64, m.mean_true_return)).collect()).collect::<Vec<_>>(),
    );
    assert_eq!(stats[0].1, 3.0);
    assert!((stats[0].2 - 2f64.sqrt()).abs() < 1e-15);
    assert_eq!(stats[1], (1.0, 10.0, 0.0));
    let svg = render_svg(&[Series { label: "five".into(), runs }], "mean_true_return", "").unwrap();
    assert_eq!(svg.matches("<polygon").count(), 1);
    assert_eq!(svg.matches("<polyline").count(), 1);
}

#[test]
fn plot_errors() {
    assert_eq!(render_svg(&[], "mean_true_return", ""), Err(PlotError::NoSeries));
    let s = [Series { label: "a".into(), runs: vec![vec![row(0, 1.0)]] }];
    assert!(matches!(render_svg(&s, "nope", ""), Err(PlotError::Column(_))));
    let empty = [Series { label: "e".into(), runs: vec![vec![]] }];
    assert!(matches!(render_svg(&empty, "mean_true_return", ""), Err(PlotError::Empty(_))));
}
