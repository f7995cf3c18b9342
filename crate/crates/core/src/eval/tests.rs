use proptest::prelude::*;
use rand::Rng;

use super::*;
use crate::error::Error;
use crate::rng::{stream_rng, Stream};

fn brute_force(scores: &[f64], labels: &[u8]) -> Vec<PrPoint> {
    let mut ts: Vec<f64> = scores.to_vec();
    ts.sort_by(|a, b| b.total_cmp(a));
    ts.dedup();
    let pos = labels.iter().filter(|&&l| l == 1).count() as f64;
    ts.into_iter()
        .map(|t| {
            let flagged: Vec<u8> = scores
                .iter()
                .zip(labels)
                .filter(|(&s, _)| s >= t)
                .map(|(_, &l)| l)
                .collect();
            let tp = flagged.iter().filter(|&&l| l == 1).count() as f64;
            PrPoint {
                threshold: t,
                precision: tp / flagged.len() as f64,
                recall: tp / pos,
            }
        })
        .collect()
}

#[test]
fn perfect_separation() {
    let c = pr_curve(&[0.9, 0.8, 0.1], &[1, 1, 0]).unwrap();
    assert_eq!(c.points.len(), 3);
    assert_eq!((c.points[1].precision, c.points[1].recall), (1.0, 1.0));
    assert_eq!(auprc(&c), 1.0);
    assert_eq!(c.points.last().unwrap().recall, 1.0);
}

#[test]
fn all_ties_give_prevalence() {
    let c = pr_curve(&[0.5; 5], &[1, 0, 0, 1, 0]).unwrap();
    assert_eq!(c.points.len(), 1);
    assert_eq!(c.points[0].precision, 0.4);
    assert_eq!(c.points[0].recall, 1.0);
    assert!((auprc(&c) - 0.4).abs() < 1e-15);
}

#[test]
fn six_sample_mixed_case() {
    let scores = [0.9, 0.7, 0.7, 0.4, 0.2, 0.1];
    let labels = [1, 0, 1, 1, 0, 0];
    let c = pr_curve(&scores, &labels).unwrap();
    assert_eq!(c.points, brute_force(&scores, &labels));
    // 1/3 * 1 + 1/3 * 2/3 + 1/3 * 3/4
    assert!((auprc(&c) - (1.0 + 2.0 / 3.0 + 0.75) / 3.0).abs() < 1e-12);
}

#[test]
fn single_class_is_rejected() {
    assert!(matches!(
        pr_curve(&[0.1, 0.2], &[0, 0]),
        Err(Error::SingleClass(_))
    ));
    assert!(matches!(
        pr_curve(&[0.1, 0.2], &[1, 1]),
        Err(Error::SingleClass(_))
    ));
    assert!(pr_curve(&[0.1], &[0, 1]).is_err());
}

#[test]
fn random_scorer_concentrates_at_prevalence() {
    let mut rng = stream_rng(11, Stream::Evaluation);
    let n = 100_000;
    let scores: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    let labels: Vec<u8> = (0..n)
        .map(|_| u8::from(rng.random::<f64>() < 0.3))
        .collect();
    let c = pr_curve(&scores, &labels).unwrap();
    assert!((auprc(&c) - c.prevalence()).abs() < 0.01);
}

#[test]
fn boxplot_quartiles() {
    let s = BoxplotStats::of(&[5.0, 1.0, 4.0, 2.0, 3.0]).unwrap();
    assert_eq!(
        (s.min, s.q1, s.median, s.q3, s.max),
        (1.0, 2.0, 3.0, 4.0, 5.0)
    );
    let s = BoxplotStats::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
    assert_eq!((s.q1, s.median, s.q3), (1.75, 2.5, 3.25));
    assert!(matches!(BoxplotStats::of(&[]), Err(Error::Empty(_))));
}

#[test]
fn grouped_boxplot() {
    let g = boxplot_stats(&[1.0, 2.0, 3.0, 1.0, 2.0, 3.0], &[0, 0, 0, 1, 1, 1]).unwrap();
    assert_eq!(g.normal, g.abnormal);
    assert!(boxplot_stats(&[1.0, 2.0], &[0, 0]).is_err());
}

#[test]
fn exports() {
    let c = pr_curve(&[0.9, 0.3, 0.2], &[1, 0, 1]).unwrap();
    let csv = pr_curve_csv(&c).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "threshold,precision,recall");
    assert_eq!(csv.lines().count(), 4);
    let svg = pr_curve_svg(&[("m".into(), c.clone())], "a <b>");
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert!(svg.contains("a &lt;b&gt;"));
    let g = boxplot_stats(&[0.9, 0.3, 0.2], &[1, 0, 1]).unwrap();
    let b = boxplot_csv(&[("critic/m".into(), g)]).unwrap();
    assert_eq!(b.lines().count(), 3);
    assert!(b
        .lines()
        .nth(2)
        .unwrap()
        .starts_with("critic/m,abnormal,2,0.2,"));
}

proptest! {
    #[test]
    fn matches_brute_force(
        data in prop::collection::vec((0u8..6, 0u8..2), 2..20)
    ) {
        let scores: Vec<f64> = data.iter().map(|&(s, _)| s as f64 / 5.0).collect();
        let mut labels: Vec<u8> = data.iter().map(|&(_, l)| l).collect();
        labels[0] = 0;
        labels[1] = 1;
        let c = pr_curve(&scores, &labels).unwrap();
        prop_assert_eq!(&c.points, &brute_force(&scores, &labels));
        for w in c.points.windows(2) {
            prop_assert!(w[1].recall >= w[0].recall);
        }
    }

    #[test]
    fn invariant_under_increasing_transform(
        data in prop::collection::vec((-3.0f64..3.0, 0u8..2), 2..40),
        k in 0.1f64..10.0,
    ) {
        let scores: Vec<f64> = data.iter().map(|&(s, _)| s).collect();
        let mut labels: Vec<u8> = data.iter().map(|&(_, l)| l).collect();
        labels[0] = 0;
        labels[1] = 1;
        let a = average_precision(&scores, &labels).unwrap();
        let scaled: Vec<f64> = scores.iter().map(|s| k * s).collect();
        let exp: Vec<f64> = scores.iter().map(|s| s.exp()).collect();
        prop_assert!((average_precision(&scaled, &labels).unwrap() - a).abs() < 1e-12);
        prop_assert!((average_precision(&exp, &labels).unwrap() - a).abs() < 1e-12);
    }
}
