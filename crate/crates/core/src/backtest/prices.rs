use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::DataPanel;

/// Adjusted close prices, one series per ticker. `None` marks a missing quote.
#[derive(Clone, Debug, PartialEq)]
pub struct PricePanel {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    prices: Vec<Vec<Option<f64>>>,
}

impl PricePanel {
    pub fn new(dates: Vec<NaiveDate>, tickers: Vec<String>, prices: Vec<Vec<Option<f64>>>) -> Result<Self> {
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::PriceData(format!(
                "dates must be strictly increasing ({} followed by {})",
                w[0], w[1]
            )));
        }
        if prices.len() != tickers.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} tickers but {} price series",
                tickers.len(),
                prices.len()
            )));
        }
        if let Some((i, _)) = prices.iter().enumerate().find(|(_, s)| s.len() != dates.len()) {
            return Err(Error::DimensionMismatch(format!(
                "series `{}` has {} values for {} dates",
                tickers[i],
                prices[i].len(),
                dates.len()
            )));
        }
        Ok(PricePanel { dates, tickers, prices })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn series(&self, i: usize) -> &[Option<f64>] {
        &self.prices[i]
    }

    pub fn p(&self) -> usize {
        self.tickers.len()
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn has_missing(&self) -> bool {
        self.prices.iter().flatten().any(Option::is_none)
    }
}

/// Parses a `date,TICKER1,TICKER2,...` CSV with ISO dates. Empty cells are
/// missing quotes; anything else that is not a number is an error.
pub fn parse_prices<R: Read>(reader: R) -> Result<PricePanel> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = r.headers()?.clone();
    if header.len() < 2 || !header[0].eq_ignore_ascii_case("date") {
        return Err(Error::PriceData(
            "header must be `date,TICKER1,TICKER2,...`".into(),
        ));
    }
    let tickers: Vec<String> = header.iter().skip(1).map(String::from).collect();
    let mut dates = Vec::new();
    let mut prices = vec![Vec::new(); tickers.len()];
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        if rec.len() != header.len() {
            return Err(Error::PriceData(format!(
                "line {line}: expected {} fields, found {}",
                header.len(),
                rec.len()
            )));
        }
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
            .map_err(|e| Error::PriceData(format!("line {line}: bad date `{}`: {e}", &rec[0])))?;
        dates.push(date);
        for (j, cell) in rec.iter().skip(1).enumerate() {
            let v = if cell.is_empty() {
                None
            } else {
                Some(cell.parse::<f64>().map_err(|_| {
                    Error::PriceData(format!("line {line}: bad price `{cell}` for {}", tickers[j]))
                })?)
            };
            prices[j].push(v);
        }
    }
    PricePanel::new(dates, tickers, prices)
}

pub fn read_prices<P: AsRef<Path>>(path: P) -> Result<PricePanel> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::PriceData(format!("cannot open {}: {e}", path.display())))?;
    parse_prices(file)
}

/// Why a ticker was removed during cleaning.
#[derive(Clone, Debug, PartialEq)]
pub enum DropReason {
    /// Fraction of missing quotes at or above the threshold.
    TooManyMissing(f64),
    /// The series starts with a gap, so there is nothing to carry forward.
    LeadingGap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CleanedPrices {
    pub panel: PricePanel,
    pub dropped: Vec<(String, DropReason)>,
}

/// Drops sparse tickers and forward-fills the remaining gaps.
pub fn clean_prices(raw: &PricePanel, max_missing_frac: f64) -> Result<CleanedPrices> {
    if !(0.0..=1.0).contains(&max_missing_frac) {
        return Err(Error::InvalidArgument(format!(
            "max_missing_frac must be in [0, 1], got {max_missing_frac}"
        )));
    }
    let t = raw.len();
    let mut tickers = Vec::new();
    let mut series = Vec::new();
    let mut dropped = Vec::new();
    for (ticker, s) in raw.tickers.iter().zip(&raw.prices) {
        if let Some(bad) = s.iter().flatten().find(|&&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::PriceData(format!(
                "{ticker} has a non-positive or non-finite price {bad}"
            )));
        }
        let missing = s.iter().filter(|v| v.is_none()).count();
        let frac = if t == 0 { 0.0 } else { missing as f64 / t as f64 };
        if missing > 0 && frac >= max_missing_frac {
            dropped.push((ticker.clone(), DropReason::TooManyMissing(frac)));
            continue;
        }
        if s.first().is_some_and(Option::is_none) {
            dropped.push((ticker.clone(), DropReason::LeadingGap));
            continue;
        }
        let mut last = None;
        let filled: Vec<Option<f64>> = s
            .iter()
            .map(|v| {
                if v.is_some() {
                    last = *v;
                }
                last
            })
            .collect();
        tickers.push(ticker.clone());
        series.push(filled);
    }
    if tickers.is_empty() || t == 0 {
        return Err(Error::PriceData("no ticker survives cleaning".into()));
    }
    for (ticker, reason) in &dropped {
        log::info!("dropped {ticker}: {reason:?}");
    }
    Ok(CleanedPrices {
        panel: PricePanel::new(raw.dates.clone(), tickers, series)?,
        dropped,
    })
}

/// Simple returns with their dates (the date of the closing price that ends
/// each return period).
#[derive(Clone, Debug, PartialEq)]
pub struct ReturnPanel {
    pub dates: Vec<NaiveDate>,
    pub tickers: Vec<String>,
    pub returns: DataPanel,
}

impl ReturnPanel {
    pub fn p(&self) -> usize {
        self.returns.p()
    }

    pub fn len(&self) -> usize {
        self.returns.n()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }
}

/// `r_t = (s_t − s_{t−1}) / s_{t−1}` for a cleaned panel.
pub fn compute_returns(prices: &PricePanel) -> Result<ReturnPanel> {
    if prices.len() < 2 {
        return Err(Error::PriceData("need at least two dates to form returns".into()));
    }
    if prices.has_missing() {
        return Err(Error::PriceData(
            "panel has missing prices; clean it first".into(),
        ));
    }
    let (p, t) = (prices.p(), prices.len());
    let mut out = DMatrix::zeros(p, t - 1);
    for (i, s) in prices.prices.iter().enumerate() {
        for k in 1..t {
            let (a, b) = (s[k - 1].unwrap_or_default(), s[k].unwrap_or_default());
            if a == 0.0 {
                return Err(Error::PriceData(format!(
                    "zero price for {} on {}",
                    prices.tickers[i],
                    prices.dates[k - 1]
                )));
            }
            out[(i, k - 1)] = (b - a) / a;
        }
    }
    Ok(ReturnPanel {
        dates: prices.dates[1..].to_vec(),
        tickers: prices.tickers.clone(),
        returns: DataPanel::new(out)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2021, 3, 1).unwrap() + chrono::Days::new(day as u64 - 1)
    }

    fn panel(series: Vec<Vec<Option<f64>>>) -> PricePanel {
        let t = series[0].len();
        let tickers = (0..series.len()).map(|i| format!("T{i}")).collect();
        PricePanel::new((1..=t as u32).map(d).collect(), tickers, series).unwrap()
    }

    #[test]
    fn parses_missing_cells() {
        let text = "date,AAA,BBB\n2021-03-01,100,\n2021-03-02,101.5,20\n";
        let p = parse_prices(text.as_bytes()).unwrap();
        assert_eq!(p.tickers(), ["AAA", "BBB"]);
        assert_eq!(p.series(1), [None, Some(20.0)]);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_prices("date,A\n2021-03-01,abc\n".as_bytes()).is_err());
        assert!(parse_prices("date,A\n03/01/2021,1\n".as_bytes()).is_err());
        assert!(parse_prices("date,A\n2021-03-02,1\n2021-03-01,1\n".as_bytes()).is_err());
    }

    #[test]
    fn forward_fill() {
        let raw = panel(vec![vec![Some(100.0), None, None, Some(103.0)]]);
        let c = clean_prices(&raw, 0.9).unwrap();
        assert_eq!(c.panel.series(0), [Some(100.0), Some(100.0), Some(100.0), Some(103.0)]);
    }

    #[test]
    fn drops_sparse_and_leading_gaps() {
        let mut sparse = vec![Some(1.0); 50];
        sparse[10] = None;
        sparse[20] = None;
        sparse[30] = None;
        let mut lead = vec![Some(1.0); 50];
        lead[0] = None;
        let raw = panel(vec![vec![Some(2.0); 50], sparse, lead]);
        let c = clean_prices(&raw, 0.05).unwrap();
        assert_eq!(c.panel.tickers(), ["T0"]);
        assert_eq!(c.dropped.len(), 2);
        assert!(matches!(c.dropped[0].1, DropReason::TooManyMissing(f) if (f - 0.06).abs() < 1e-12));
        assert_eq!(c.dropped[1].1, DropReason::LeadingGap);
    }

    #[test]
    fn cleaning_is_idempotent() {
        let raw = panel(vec![
            vec![Some(1.0), None, Some(2.0), Some(2.5)],
            vec![Some(3.0), Some(3.0), Some(3.1), None],
        ]);
        let once = clean_prices(&raw, 0.3).unwrap().panel;
        let twice = clean_prices(&once, 0.3).unwrap();
        assert_eq!(once, twice.panel);
        assert!(twice.dropped.is_empty());
    }

    #[test]
    fn empty_result_and_bad_prices() {
        let raw = panel(vec![vec![None, Some(1.0)]]);
        assert!(clean_prices(&raw, 0.05).is_err());
        let raw = panel(vec![vec![Some(1.0), Some(-1.0)]]);
        assert!(clean_prices(&raw, 0.05).is_err());
    }

    #[test]
    fn simple_returns() {
        let r = compute_returns(&panel(vec![vec![Some(100.0), Some(110.0), Some(99.0)]])).unwrap();
        let v = r.returns.values();
        assert!((v[(0, 0)] - 0.10).abs() < 1e-15);
        assert!((v[(0, 1)] + 0.10).abs() < 1e-15);
        assert_eq!(r.dates, [d(2), d(3)]);
        let flat = compute_returns(&panel(vec![vec![Some(5.0); 4]])).unwrap();
        assert!(flat.returns.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn returns_round_trip_to_prices() {
        let s = [100.0, 101.3, 99.7, 102.2, 102.2, 98.1];
        let r = compute_returns(&panel(vec![s.iter().map(|&v| Some(v)).collect()])).unwrap();
        let mut price = s[0];
        for (k, x) in r.returns.values().row(0).iter().enumerate() {
            price *= 1.0 + x;
            assert!((price - s[k + 1]).abs() < 1e-10 * s[k + 1]);
        }
    }
}
