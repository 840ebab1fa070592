use proptest::prelude::*;
use rydsqueeze_cli::output::{curves_to_csv, curves_to_svg, emit_plot_data, emit_tables, CurveSet, Point, Series, Table};

#[test]
fn empty_curve_set_gives_header_only() {
    let set = CurveSet::new("empty", "x", "y");
    assert_eq!(curves_to_csv(&set), "x,y,yerr,series\n");
    let svg = curves_to_svg(&set);
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn rows_follow_series_order() {
    let set = CurveSet::new("c", "a", "b")
        .with(Series::new("one", vec![Point::new(0.0, 1.0), Point::with_err(1.0, 2.0, 0.5)]))
        .with(Series::new("two", vec![Point::new(0.5, -1.0)]));
    assert_eq!(curves_to_csv(&set), "x,y,yerr,series\n0,1,0,one\n1,2,0.5,one\n0.5,-1,0,two\n");
}

#[test]
fn svg_escapes_labels_and_skips_non_finite_points() {
    let set = CurveSet::new("c", "a<b", "x&y").with(Series::new("s", vec![Point::new(0.0, 1.0), Point::new(f64::NAN, 2.0)]));
    let svg = curves_to_svg(&set);
    assert!(svg.contains("a&lt;b") && svg.contains("x&amp;y"));
    assert!(!svg.contains("NaN"));
}

#[test]
fn emitted_files_land_in_the_directory() {
    let dir = tempfile::tempdir().unwrap();
    let sets = [CurveSet::new("first", "x", "y"), CurveSet::new("second", "x", "y")];
    let written = emit_plot_data(dir.path(), &sets, true).unwrap();
    assert_eq!(written.len(), 4);
    assert!(dir.path().join("second.svg").exists());
    let mut t = Table::new("summary", &["quantity", "value"]);
    t.push(vec!["n".into(), "3".into()]);
    emit_tables(dir.path(), &[t]).unwrap();
    assert_eq!(std::fs::read_to_string(dir.path().join("summary.csv")).unwrap(), "quantity,value\nn,3\n");
}

proptest! {
    #[test]
    fn csv_has_one_row_per_point(ys in prop::collection::vec(-1e6f64..1e6, 0..40)) {
        let points: Vec<Point> = ys.iter().enumerate().map(|(i, &y)| Point::new(i as f64, y)).collect();
        let csv = curves_to_csv(&CurveSet::new("p", "x", "y").with(Series::new("s", points)));
        prop_assert_eq!(csv.lines().count(), ys.len() + 1);
        for (line, y) in csv.lines().skip(1).zip(&ys) {
            let parsed: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            prop_assert_eq!(parsed, *y);
        }
    }
}
