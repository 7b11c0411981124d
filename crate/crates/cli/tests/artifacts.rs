use proptest::prelude::*;
use surfreach::explore::SeriesPoint;
use surfreach_cli::artifacts::{matrix_csv, parse_matrix_csv, pgm16, series_csv};

proptest! {
    #[test]
    fn matrix_csv_round_trips(n in 1usize..12, seed in prop::collection::vec(any::<u32>(), 144)) {
        let values: Vec<u64> = seed[..n * n].iter().map(|&v| v as u64).collect();
        let text = matrix_csv(n, &values);
        prop_assert!(text.ends_with('\n'));
        prop_assert_eq!(text.lines().count(), n);
        prop_assert_eq!(parse_matrix_csv(&text).unwrap(), (n, values));
    }

    #[test]
    fn pgm_is_sized_and_peaks_at_the_maximum(n in 1usize..10, seed in prop::collection::vec(0u64..1000, 100)) {
        let values = &seed[..n * n];
        let img = pgm16(n, values);
        let header = format!("P5\n{n} {n}\n65535\n");
        prop_assert_eq!(img.len(), header.len() + 2 * n * n);
        let px: Vec<u16> = img[header.len()..].chunks(2).map(|b| u16::from_be_bytes([b[0], b[1]])).collect();
        let max = values.iter().copied().max().unwrap();
        for (p, v) in px.iter().zip(values) {
            prop_assert_eq!(*p == 65535, max > 0 && *v == max);
        }
    }

    #[test]
    fn series_rows_are_fixed_point(points in prop::collection::vec((1u64..1_000_000, 0.0..1e4f64, 0usize..5000), 0..20)) {
        let series: Vec<SeriesPoint> = points
            .iter()
            .map(|&(iteration, elapsed_s, covered)| SeriesPoint { iteration, elapsed_s, covered })
            .collect();
        let text = series_csv(&series);
        for (line, p) in text.lines().skip(1).zip(&series) {
            let f: Vec<&str> = line.split(',').collect();
            prop_assert_eq!(f.len(), 3);
            prop_assert_eq!(f[0].parse::<u64>().unwrap(), p.iteration);
            prop_assert_eq!(f[1].split('.').nth(1).map(str::len), Some(6));
            prop_assert!(!f[1].contains('e'));
            prop_assert_eq!(f[2].parse::<usize>().unwrap(), p.covered);
        }
    }
}
