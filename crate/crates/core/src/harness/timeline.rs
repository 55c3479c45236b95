//! Daily victim-count series from extracted counts.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::evaluate::ModelOutputs;
use super::svg;
use crate::calibration::{gen_confidence, PredictionSet};
use crate::corpus::{EventRecord, VictimType};
use crate::{Error, Result};

const DATE_FORMATS: [&str; 5] = ["%Y-%m-%d", "%Y/%m/%d", "%d %B %Y", "%B %d, %Y", "%Y%m%d"];

/// Parses a calendar date, ignoring any time-of-day suffix after `T` or a
/// space in ISO timestamps.
pub fn parse_date(raw: &str) -> Option<NaiveDate> {
    let raw = raw.trim();
    let iso_prefix = raw.get(..10).filter(|p| p.as_bytes().get(4) == Some(&b'-'));
    DATE_FORMATS
        .iter()
        .find_map(|f| NaiveDate::parse_from_str(raw, f).ok())
        .or_else(|| iso_prefix.and_then(|p| NaiveDate::parse_from_str(p, "%Y-%m-%d").ok()))
}

/// A count extracted for one event, with the model's confidence when known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventCount {
    pub count: u64,
    pub confidence: Option<f64>,
}

/// Per-record counts and confidences from a prediction file. Classification
/// outputs carry no count and are rejected.
pub fn event_counts(outputs: &ModelOutputs, beam_width: usize) -> Result<BTreeMap<String, EventCount>> {
    let mut out = BTreeMap::new();
    match outputs {
        ModelOutputs::Counts(lines) => {
            for l in lines {
                out.insert(
                    l.id.clone(),
                    EventCount {
                        count: l.count.unwrap_or(0),
                        confidence: l.confidence,
                    },
                );
            }
        }
        ModelOutputs::Model(PredictionSet::Generation(items)) => {
            for p in items {
                let (top, confidence) = gen_confidence(&p.beams, 1.0, beam_width)?;
                out.insert(
                    p.id.clone(),
                    EventCount {
                        count: top.trim().parse().unwrap_or(0),
                        confidence: Some(confidence),
                    },
                );
            }
        }
        ModelOutputs::Model(PredictionSet::Regression(items)) => {
            for p in items {
                out.insert(
                    p.id.clone(),
                    EventCount {
                        count: p.distribution.median().round().max(0.0) as u64,
                        confidence: None,
                    },
                );
            }
        }
        ModelOutputs::Model(PredictionSet::Classification(_)) => {
            return Err(Error::Domain(
                "classification outputs give count classes, not counts".into(),
            ));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineEvent {
    pub id: String,
    pub date: NaiveDate,
    pub count: u64,
    pub confidence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelinePoint {
    pub date: NaiveDate,
    /// Sum of the day's event counts.
    pub count: u64,
    pub events: usize,
    /// Mean confidence over the day's events that carry one.
    pub mean_confidence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    pub victim_type: VictimType,
    pub daily: Vec<TimelinePoint>,
    pub events: Vec<TimelineEvent>,
    /// Records whose date is missing or unparseable.
    pub skipped: Vec<String>,
}

/// Sums counts per day over records dated within `range` (inclusive).
/// Records without a count are ignored; records with a missing or
/// unparseable date are listed in `skipped`.
pub fn emit_timeline(
    records: &[EventRecord],
    counts: &BTreeMap<String, EventCount>,
    victim_type: &VictimType,
    range: Option<(NaiveDate, NaiveDate)>,
) -> Timeline {
    let mut events = Vec::new();
    let mut skipped = Vec::new();
    for record in records {
        let Some(count) = counts.get(&record.id) else { continue };
        let Some(date) = record.date.as_deref().and_then(parse_date) else {
            log::warn!("record `{}` has no usable date", record.id);
            skipped.push(record.id.clone());
            continue;
        };
        if range.is_some_and(|(from, to)| date < from || date > to) {
            continue;
        }
        events.push(TimelineEvent {
            id: record.id.clone(),
            date,
            count: count.count,
            confidence: count.confidence,
        });
    }
    events.sort_by(|a, b| a.date.cmp(&b.date).then_with(|| a.id.cmp(&b.id)));

    let mut by_day: BTreeMap<NaiveDate, Vec<&TimelineEvent>> = BTreeMap::new();
    for e in &events {
        by_day.entry(e.date).or_default().push(e);
    }
    let daily = by_day
        .into_iter()
        .map(|(date, day)| {
            let confs: Vec<f64> = day.iter().filter_map(|e| e.confidence).collect();
            TimelinePoint {
                date,
                count: day.iter().map(|e| e.count).sum(),
                events: day.len(),
                mean_confidence: (!confs.is_empty()).then(|| confs.iter().sum::<f64>() / confs.len() as f64),
            }
        })
        .collect();
    Timeline {
        victim_type: victim_type.clone(),
        daily,
        events,
        skipped,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl Timeline {
    /// CSV with columns `date,count,events,mean_confidence`.
    pub fn daily_csv(&self) -> String {
        let mut out = String::from("date,count,events,mean_confidence\n");
        for p in &self.daily {
            writeln!(out, "{},{},{},{}", p.date, p.count, p.events, opt(p.mean_confidence)).unwrap();
        }
        out
    }

    /// CSV with columns `id,date,count,confidence`.
    pub fn events_csv(&self) -> String {
        let mut out = String::from("id,date,count,confidence\n");
        for e in &self.events {
            writeln!(
                out,
                "{},{},{},{}",
                svg::csv_field(&e.id),
                e.date,
                e.count,
                opt(e.confidence)
            )
            .unwrap();
        }
        out
    }

    pub fn to_svg(&self) -> String {
        let Some(first) = self.daily.first() else {
            return svg::line_chart(&format!("{} counts per day", self.victim_type), "day", "count", &[]);
        };
        let points: Vec<(f64, f64)> = self
            .daily
            .iter()
            .map(|p| ((p.date - first.date).num_days() as f64, p.count as f64))
            .collect();
        svg::line_chart(
            &format!("{} counts per day from {}", self.victim_type, first.date),
            "days",
            "count",
            &[(self.victim_type.to_string(), points)],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Source;

    fn record(id: &str, date: Option<&str>) -> EventRecord {
        EventRecord {
            id: id.into(),
            text: "x".into(),
            gold_counts: BTreeMap::new(),
            source: Source::Custom,
            date: date.map(String::from),
        }
    }

    fn counts(pairs: &[(&str, u64, Option<f64>)]) -> BTreeMap<String, EventCount> {
        pairs
            .iter()
            .map(|&(id, count, confidence)| (id.to_string(), EventCount { count, confidence }))
            .collect()
    }

    #[test]
    fn same_day_counts_add_up() {
        let records = [
            record("a", Some("2012-03-04")),
            record("b", Some("2012-03-04T10:00:00")),
        ];
        let t = emit_timeline(
            &records,
            &counts(&[("a", 2, Some(0.5)), ("b", 3, Some(0.9))]),
            &VictimType::death(),
            None,
        );
        assert_eq!(t.daily.len(), 1);
        assert_eq!(t.daily[0].count, 5);
        assert_eq!(t.daily[0].events, 2);
        assert!((t.daily[0].mean_confidence.unwrap() - 0.7).abs() < 1e-12);
        assert!(t
            .daily_csv()
            .starts_with("date,count,events,mean_confidence\n2012-03-04,5,2,0.7"));
    }

    #[test]
    fn bad_dates_skipped_and_range_applied() {
        let records = [
            record("a", Some("yesterday")),
            record("b", None),
            record("c", Some("2012/05/01")),
            record("d", Some("1 June 2012")),
        ];
        let c = counts(&[("a", 1, None), ("b", 1, None), ("c", 4, None), ("d", 6, None)]);
        let t = emit_timeline(&records, &c, &VictimType::death(), None);
        assert_eq!(t.skipped, vec!["a", "b"]);
        assert_eq!(t.daily.len(), 2);
        let day = |s| NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap();
        let empty = emit_timeline(
            &records,
            &c,
            &VictimType::death(),
            Some((day("2013-01-01"), day("2013-12-31"))),
        );
        assert!(empty.daily.is_empty());
        assert!(t.to_svg().starts_with("<svg"));
        assert!(empty.to_svg().starts_with("<svg"));
    }

    #[test]
    fn beam_confidences_pass_through() {
        let raw = "{\"id\":\"a\",\"beams\":[{\"text\":\"7\",\"score\":0.0},{\"text\":\"8\",\"score\":-1.0986122886681098}]}\n";
        let outputs = super::super::evaluate::parse_model_outputs(raw, "t").unwrap();
        let c = event_counts(&outputs, 5).unwrap();
        assert_eq!(c["a"].count, 7);
        assert!((c["a"].confidence.unwrap() - 0.75).abs() < 1e-12);
    }
}
