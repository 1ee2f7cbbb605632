//! Distribution-comparison metrics and tidy CSV exports of plot data.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::graph::DagSpec;
use crate::model::{Dataset, History};
use crate::transform::quantile_sorted;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("empty sample")]
    EmptySample,
    #[error("frequency vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("unknown plot kind `{0}`")]
    UnknownPlotKind(String),
    #[error("inputs do not fit plot kind {0}")]
    InputMismatch(PlotKind),
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a − F_b|`, computed
/// exactly by merging the sorted samples.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64, EvalError> {
    if a.is_empty() || b.is_empty() {
        return Err(EvalError::EmptySample);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut sup: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(sup)
}

/// `½ Σ |p_k − q_k|` after normalizing each frequency vector.
pub fn tv_distance(freq_a: &[f64], freq_b: &[f64]) -> Result<f64, EvalError> {
    if freq_a.len() != freq_b.len() {
        return Err(EvalError::LengthMismatch(freq_a.len(), freq_b.len()));
    }
    let sa: f64 = freq_a.iter().sum();
    let sb: f64 = freq_b.iter().sum();
    if sa <= 0.0 || sb <= 0.0 {
        return Err(EvalError::EmptySample);
    }
    Ok(0.5 * freq_a.iter().zip(freq_b).map(|(p, q)| (p / sa - q / sb).abs()).sum::<f64>())
}

/// Counts of levels `1..=levels`.
pub fn class_frequencies(values: &[f64], levels: usize) -> Vec<f64> {
    let mut out = vec![0.0; levels];
    for &v in values {
        let k = v as usize;
        if (1..=levels).contains(&k) {
            out[k - 1] += 1.0;
        }
    }
    out
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (m, var)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Ks,
    Tv,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Ks => "ks",
            Metric::Tv => "tv",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalEntry {
    pub node: String,
    pub metric: Metric,
    pub value: f64,
    /// `mean(b) − mean(a)`.
    pub mean_diff: f64,
    /// `var(b) / var(a)`; absent for discrete nodes.
    pub var_ratio: Option<f64>,
    pub n_a: usize,
    pub n_b: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MarginalReport {
    pub entries: Vec<MarginalEntry>,
}

impl MarginalReport {
    pub fn get(&self, node: &str) -> Option<&MarginalEntry> {
        self.entries.iter().find(|e| e.node == node)
    }

    pub fn max_statistic(&self) -> f64 {
        self.entries.iter().map(|e| e.value).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["node", "metric", "value", "mean_diff", "var_ratio", "n_a", "n_b"]).expect("in memory");
        for e in &self.entries {
            w.write_record([
                e.node.clone(),
                e.metric.to_string(),
                e.value.to_string(),
                e.mean_diff.to_string(),
                e.var_ratio.map_or_else(String::new, |v| v.to_string()),
                e.n_a.to_string(),
                e.n_b.to_string(),
            ])
            .expect("in memory");
        }
        String::from_utf8(w.into_inner().expect("in memory")).expect("utf-8")
    }
}

/// Per-column comparison of two samples over the columns they share (in the
/// order of `a`). With a graph, ordinal and binary nodes use the total
/// variation of their class frequencies; every other column uses KS.
pub fn marginal_report(a: &Dataset, b: &Dataset, spec: Option<&DagSpec>) -> Result<MarginalReport, EvalError> {
    let mut entries = Vec::new();
    for name in a.columns() {
        let Some(vb) = b.column_by_name(name) else { continue };
        let va = a.column_by_name(name).expect("own column");
        if va.is_empty() || vb.is_empty() {
            return Err(EvalError::EmptySample);
        }
        let levels = spec.and_then(|s| s.index_of(name)).and_then(|j| spec?.node(j).kind.levels());
        let (ma, var_a) = mean_var(&va);
        let (mb, var_b) = mean_var(&vb);
        let (metric, value, var_ratio) = match levels {
            Some(k) => (Metric::Tv, tv_distance(&class_frequencies(&va, k), &class_frequencies(&vb, k))?, None),
            None => (Metric::Ks, ks_statistic(&va, &vb)?, Some(var_b / var_a)),
        };
        entries.push(MarginalEntry {
            node: name.clone(),
            metric,
            value,
            mean_diff: mb - ma,
            var_ratio,
            n_a: va.len(),
            n_b: vb.len(),
        });
    }
    Ok(MarginalReport { entries })
}

/// Freedman–Diaconis bin count; at least 1, at most 1000.
pub fn freedman_diaconis_bins(values: &[f64]) -> usize {
    if values.len() < 2 {
        return 1;
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25);
    let range = s[s.len() - 1] - s[0];
    if iqr <= 0.0 || range <= 0.0 {
        return 1;
    }
    let width = 2.0 * iqr / (s.len() as f64).cbrt();
    ((range / width).ceil() as usize).clamp(1, 1000)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    MarginalHist,
    PairwiseScatter,
    ShiftCurve,
    CfCurve,
    CoefHistory,
}

impl PlotKind {
    pub fn name(self) -> &'static str {
        match self {
            PlotKind::MarginalHist => "marginal_hist",
            PlotKind::PairwiseScatter => "pairwise_scatter",
            PlotKind::ShiftCurve => "shift_curve",
            PlotKind::CfCurve => "cf_curve",
            PlotKind::CoefHistory => "coef_history",
        }
    }
}

impl fmt::Display for PlotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlotKind {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, EvalError> {
        [
            PlotKind::MarginalHist,
            PlotKind::PairwiseScatter,
            PlotKind::ShiftCurve,
            PlotKind::CfCurve,
            PlotKind::CoefHistory,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| EvalError::UnknownPlotKind(s.into()))
    }
}

/// Inputs of [`export_plot_data`]; sample sources are labeled (`dgp`,
/// `model`, …).
#[derive(Debug, Clone, Copy)]
pub enum PlotData<'a> {
    /// Histogram per source and column on shared bin edges; `bins = 0`
    /// picks the Freedman–Diaconis count of the pooled values.
    MarginalHist { samples: &'a [(&'a str, &'a Dataset)], bins: usize },
    PairwiseScatter { samples: &'a [(&'a str, &'a Dataset)] },
    /// Fitted curve and optional ground truth on a grid.
    ShiftCurve { grid: &'a [f64], model: &'a [f64], truth: Option<&'a [f64]> },
    CfCurve { alpha: &'a [f64], model: &'a [f64], oracle: &'a [f64] },
    CoefHistory { history: &'a History, truth: &'a BTreeMap<(String, String), f64> },
}

impl PlotData<'_> {
    pub fn kind(&self) -> PlotKind {
        match self {
            PlotData::MarginalHist { .. } => PlotKind::MarginalHist,
            PlotData::PairwiseScatter { .. } => PlotKind::PairwiseScatter,
            PlotData::ShiftCurve { .. } => PlotKind::ShiftCurve,
            PlotData::CfCurve { .. } => PlotKind::CfCurve,
            PlotData::CoefHistory { .. } => PlotKind::CoefHistory,
        }
    }
}

fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

/// Tidy CSV with one observation per row.
///
/// Columns per kind:
/// - `marginal_hist`: `source, node, bin_left, bin_right, count, density`
/// - `pairwise_scatter`: `source, <node columns…>`
/// - `shift_curve`: `x, source, value`
/// - `cf_curve`: `alpha, model_value, oracle_value`
/// - `coef_history`: `epoch, edge, beta_hat, beta_true`
pub fn export_plot_data(data: &PlotData<'_>) -> Result<String, EvalError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mismatch = || EvalError::InputMismatch(data.kind());
    let put = |w: &mut csv::Writer<Vec<u8>>, rec: Vec<String>| w.write_record(rec).expect("in memory");
    match *data {
        PlotData::MarginalHist { samples, bins } => {
            put(&mut w, ["source", "node", "bin_left", "bin_right", "count", "density"].map(String::from).to_vec());
            let Some((_, first)) = samples.first() else { return Err(EvalError::EmptySample) };
            for node in first.columns() {
                let columns: Vec<(&str, Vec<f64>)> = samples
                    .iter()
                    .map(|(src, d)| d.column_by_name(node).map(|c| (*src, c)).ok_or_else(mismatch))
                    .collect::<Result<_, _>>()?;
                let pooled: Vec<f64> = columns.iter().flat_map(|(_, c)| c.iter().copied()).collect();
                if pooled.is_empty() {
                    return Err(EvalError::EmptySample);
                }
                let lo = pooled.iter().copied().fold(f64::INFINITY, f64::min);
                let mut hi = pooled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if hi <= lo {
                    hi = lo + 1.0;
                }
                let k = if bins == 0 { freedman_diaconis_bins(&pooled) } else { bins };
                let width = (hi - lo) / k as f64;
                for (src, col) in &columns {
                    let mut counts = vec![0u64; k];
                    for &v in col {
                        let b = (((v - lo) / width) as usize).min(k - 1);
                        counts[b] += 1;
                    }
                    for (b, &c) in counts.iter().enumerate() {
                        let left = lo + b as f64 * width;
                        let density = c as f64 / (col.len() as f64 * width);
                        put(
                            &mut w,
                            vec![
                                src.to_string(),
                                node.clone(),
                                num(left),
                                num(left + width),
                                c.to_string(),
                                num(density),
                            ],
                        );
                    }
                }
            }
        }
        PlotData::PairwiseScatter { samples } => {
            let Some((_, first)) = samples.first() else { return Err(EvalError::EmptySample) };
            let mut header = vec!["source".to_string()];
            header.extend(first.columns().iter().cloned());
            put(&mut w, header);
            for (src, d) in samples {
                if d.columns() != first.columns() {
                    return Err(mismatch());
                }
                for row in d.rows() {
                    let mut rec = vec![src.to_string()];
                    rec.extend(row.iter().map(|v| num(*v)));
                    put(&mut w, rec);
                }
            }
        }
        PlotData::ShiftCurve { grid, model, truth } => {
            if model.len() != grid.len() || truth.is_some_and(|t| t.len() != grid.len()) {
                return Err(mismatch());
            }
            put(&mut w, ["x", "source", "value"].map(String::from).to_vec());
            for (i, &x) in grid.iter().enumerate() {
                put(&mut w, vec![num(x), "model".into(), num(model[i])]);
                if let Some(t) = truth {
                    put(&mut w, vec![num(x), "dgp".into(), num(t[i])]);
                }
            }
        }
        PlotData::CfCurve { alpha, model, oracle } => {
            if model.len() != alpha.len() || oracle.len() != alpha.len() {
                return Err(mismatch());
            }
            put(&mut w, ["alpha", "model_value", "oracle_value"].map(String::from).to_vec());
            for i in 0..alpha.len() {
                put(&mut w, vec![num(alpha[i]), num(model[i]), num(oracle[i])]);
            }
        }
        PlotData::CoefHistory { history, truth } => {
            put(&mut w, ["epoch", "edge", "beta_hat", "beta_true"].map(String::from).to_vec());
            for r in &history.records {
                for (edge, beta) in history.linear_edges.iter().zip(&r.coefficients) {
                    let t = truth.get(edge).copied().unwrap_or(f64::NAN);
                    put(&mut w, vec![r.epoch.to_string(), format!("{}-{}", edge.0, edge.1), num(*beta), num(t)]);
                }
            }
        }
    }
    Ok(String::from_utf8(w.into_inner().expect("in memory")).expect("utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::EpochRecord;
    use proptest::prelude::*;

    /// Brute-force oracle: evaluate both empirical CDFs at every data point.
    fn ks_brute(a: &[f64], b: &[f64]) -> f64 {
        let cdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
        a.iter().chain(b).map(|&x| (cdf(a, x) - cdf(b, x)).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn ks_examples() {
        assert_eq!(ks_statistic(&[1.0, 2.0], &[2.0, 1.0]).unwrap(), 0.0);
        assert_eq!(ks_statistic(&[0.0], &[1.0]).unwrap(), 1.0);
        let v = ks_statistic(&[1.0, 2.0, 3.0], &[1.5, 2.5]).unwrap();
        assert!((v - ks_brute(&[1.0, 2.0, 3.0], &[1.5, 2.5])).abs() < 1e-15);
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(ks_statistic(&[], &[1.0]), Err(EvalError::EmptySample));
    }

    #[test]
    fn tv_examples() {
        assert_eq!(tv_distance(&[3.0, 1.0], &[3.0, 1.0]).unwrap(), 0.0);
        assert_eq!(tv_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert!((tv_distance(&[0.5, 0.3, 0.2], &[0.4, 0.4, 0.2]).unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(tv_distance(&[1.0], &[1.0, 2.0]), Err(EvalError::LengthMismatch(1, 2)));
    }

    fn parse_csv(text: &str) -> Vec<Vec<String>> {
        csv::Reader::from_reader(text.as_bytes())
            .records()
            .map(|r| r.unwrap().iter().map(str::to_string).collect())
            .collect()
    }

    #[test]
    fn cf_curve_rows() {
        let alpha: Vec<f64> = (0..25).map(|i| -3.0 + 0.25 * i as f64).collect();
        let model: Vec<f64> = alpha.iter().map(|a| a * 0.5).collect();
        let text = export_plot_data(&PlotData::CfCurve { alpha: &alpha, model: &model, oracle: &model }).unwrap();
        assert!(text.starts_with("alpha,model_value,oracle_value\n"));
        let rows = parse_csv(&text);
        assert_eq!(rows.len(), 25);
        for (r, a) in rows.iter().zip(&alpha) {
            assert_eq!(r[0].parse::<f64>().unwrap(), *a);
        }
    }

    #[test]
    fn histogram_default_bins_and_coef_history() {
        let values: Vec<Vec<f64>> = (0..200).map(|i| vec![(i as f64 * 0.7).sin()]).collect();
        let d = Dataset::new(vec!["X".into()], &values).unwrap();
        let text = export_plot_data(&PlotData::MarginalHist { samples: &[("dgp", &d), ("model", &d)], bins: 0 }).unwrap();
        let rows = parse_csv(&text);
        let pooled: Vec<f64> = d.column(0).into_iter().chain(d.column(0)).collect();
        let k = freedman_diaconis_bins(&pooled);
        assert!(k > 1);
        assert_eq!(rows.len(), 2 * k);
        let total: u64 = rows.iter().filter(|r| r[0] == "dgp").map(|r| r[4].parse::<u64>().unwrap()).sum();
        assert_eq!(total, 200);

        let history = History {
            linear_edges: vec![("X1".into(), "X2".into())],
            records: (1..=3).map(|e| EpochRecord { epoch: e, mean_nll: 1.0, coefficients: vec![e as f64] }).collect(),
        };
        let truth = BTreeMap::from([(("X1".to_string(), "X2".to_string()), 2.0)]);
        let text = export_plot_data(&PlotData::CoefHistory { history: &history, truth: &truth }).unwrap();
        assert_eq!(parse_csv(&text)[2], vec!["3", "X1-X2", "3", "2"]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn ks_symmetric_and_matches_brute_force(
            a in prop::collection::vec(-5i32..5, 1..30),
            b in prop::collection::vec(-5i32..5, 1..30),
        ) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let ab = ks_statistic(&a, &b).unwrap();
            prop_assert_eq!(ab, ks_statistic(&b, &a).unwrap());
            prop_assert!((ab - ks_brute(&a, &b)).abs() < 1e-12);
            let mut sa = a.clone();
            let mut sb = b.clone();
            sa.sort_by(f64::total_cmp);
            sb.sort_by(f64::total_cmp);
            prop_assert_eq!(ab == 0.0, {
                // equal multisets up to the common scaling of empirical CDFs
                ks_brute(&sa, &sb) == 0.0
            });
        }

        #[test]
        fn ks_zero_iff_equal_multisets(a in prop::collection::vec(-5i32..5, 1..20), perm_seed in any::<u64>()) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let mut b = a.clone();
            let n = b.len();
            b.rotate_left((perm_seed as usize) % n);
            prop_assert_eq!(ks_statistic(&a, &b).unwrap(), 0.0);
            let mut c = a.clone();
            c[0] += 0.5;
            prop_assert!(ks_statistic(&a, &c).unwrap() > 0.0);
        }

        #[test]
        fn tv_triangle_inequality(
            p in prop::collection::vec(0.0f64..1.0, 4),
            q in prop::collection::vec(0.0f64..1.0, 4),
            r in prop::collection::vec(0.0f64..1.0, 4),
        ) {
            prop_assume!(p.iter().sum::<f64>() > 0.0 && q.iter().sum::<f64>() > 0.0 && r.iter().sum::<f64>() > 0.0);
            let pq = tv_distance(&p, &q).unwrap();
            let qr = tv_distance(&q, &r).unwrap();
            let pr = tv_distance(&p, &r).unwrap();
            prop_assert!(pr <= pq + qr + 1e-12);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&pq));
        }

        #[test]
        fn plot_csv_round_trip(values in prop::collection::vec(-1e6f64..1e6, 1..20)) {
            let grid: Vec<f64> = (0..values.len()).map(|i| i as f64 * 0.1).collect();
            let text = export_plot_data(&PlotData::ShiftCurve { grid: &grid, model: &values, truth: Some(&values) }).unwrap();
            let rows = parse_csv(&text);
            prop_assert_eq!(rows.len(), 2 * values.len());
            for (i, v) in values.iter().enumerate() {
                prop_assert_eq!(rows[2 * i][2].parse::<f64>().unwrap(), *v);
                prop_assert_eq!(rows[2 * i][0].parse::<f64>().unwrap(), grid[i]);
            }
        }
    }
}
