use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Daily mean temperatures for one year, day-of-year 1 at index 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemperatureSeries {
    pub year: i32,
    pub temps_c: Vec<f64>,
}

impl TemperatureSeries {
    pub fn new(year: i32, temps_c: Vec<f64>) -> Result<Self> {
        if !matches!(temps_c.len(), 365 | 366) {
            return Err(Error::Data(format!(
                "year {year} has {} days, expected 365 or 366",
                temps_c.len()
            )));
        }
        if let Some(i) = temps_c.iter().position(|t| !t.is_finite()) {
            return Err(Error::Data(format!(
                "year {year} day {} temperature is not finite",
                i + 1
            )));
        }
        Ok(Self { year, temps_c })
    }

    pub fn len_days(&self) -> usize {
        self.temps_c.len()
    }

    /// Temperatures from day `floor(t_start)` to the end of the year.
    pub fn days_from(&self, t_start: f64) -> Result<&[f64]> {
        let first = t_start.floor();
        if !(first >= 1.0 && first <= self.len_days() as f64) {
            return Err(Error::Data(format!(
                "year {} has no temperature for day {first}",
                self.year
            )));
        }
        Ok(&self.temps_c[first as usize - 1..])
    }
}

/// One flowering-to-veraison interval. Days are absolute day-of-year.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventObservation {
    pub year: i32,
    pub start_day: u32,
    pub end_day: Option<u32>,
    pub censored: bool,
}

impl EventObservation {
    pub fn occurred(year: i32, start_day: u32, end_day: u32) -> Result<Self> {
        let o = Self {
            year,
            start_day,
            end_day: Some(end_day),
            censored: false,
        };
        o.validate()?;
        Ok(o)
    }

    pub fn censored(year: i32, start_day: u32) -> Self {
        Self {
            year,
            start_day,
            end_day: None,
            censored: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.censored, self.end_day) {
            (true, Some(_)) => Err(Error::Data("censored observation has an end day".into())),
            (false, None) => Err(Error::Data("uncensored observation needs an end day".into())),
            (false, Some(end)) if end <= self.start_day => Err(Error::Data(format!(
                "end day {end} does not follow start day {}",
                self.start_day
            ))),
            _ => Ok(()),
        }
    }
}

/// Observations bound to the temperature series of their years.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationSet {
    pub observations: Vec<EventObservation>,
    pub series_by_year: BTreeMap<i32, TemperatureSeries>,
}

impl ObservationSet {
    pub fn new(
        observations: Vec<EventObservation>,
        series: impl IntoIterator<Item = TemperatureSeries>,
    ) -> Result<Self> {
        let series_by_year: BTreeMap<_, _> = series.into_iter().map(|s| (s.year, s)).collect();
        for obs in &observations {
            obs.validate()?;
            let series = series_by_year.get(&obs.year).ok_or_else(|| {
                Error::Data(format!("no temperature series for year {}", obs.year))
            })?;
            let days = series.len_days() as u32;
            let last = obs.end_day.unwrap_or(obs.start_day);
            if obs.start_day < 1 || last > days {
                return Err(Error::Data(format!(
                    "observation days {}..{last} fall outside year {} (1..={days})",
                    obs.start_day, obs.year
                )));
            }
        }
        Ok(Self {
            observations,
            series_by_year,
        })
    }

    pub fn series(&self, year: i32) -> Result<&TemperatureSeries> {
        self.series_by_year
            .get(&year)
            .ok_or_else(|| Error::Data(format!("no temperature series for year {year}")))
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    let message = match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
        _ => e.to_string(),
    };
    Error::Parse { line, message }
}

fn expect_header(reader: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let headers = reader.headers().map_err(csv_error)?;
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    if got != expected {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{}`, got `{}`", expected.join(","), got.join(",")),
        });
    }
    Ok(())
}

#[derive(Deserialize)]
struct TempRow {
    year: i32,
    day: u32,
    temp_c: f64,
}

/// Reads a `year,day,temp_c` table into one series per year, ordered by year.
pub fn parse_temperature_table(input: impl Read) -> Result<Vec<TemperatureSeries>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    expect_header(&mut reader, &["year", "day", "temp_c"])?;
    let mut years: BTreeMap<i32, BTreeMap<u32, f64>> = BTreeMap::new();
    for row in reader.deserialize::<TempRow>() {
        let row = row.map_err(csv_error)?;
        if row.day == 0 || row.day > 366 {
            return Err(Error::Data(format!("year {} has invalid day {}", row.year, row.day)));
        }
        if years.entry(row.year).or_default().insert(row.day, row.temp_c).is_some() {
            return Err(Error::Data(format!("year {} repeats day {}", row.year, row.day)));
        }
    }
    years
        .into_iter()
        .map(|(year, days)| {
            let last = days.keys().next_back().copied().unwrap_or(0).max(365);
            if let Some(missing) = (1..=last).find(|d| !days.contains_key(d)) {
                return Err(Error::Data(format!("year {year} missing day {missing}")));
            }
            TemperatureSeries::new(year, days.into_values().collect())
        })
        .collect()
}

pub fn write_temperature_table(out: impl Write, series: &[TemperatureSeries]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Data(e.to_string());
    w.write_record(["year", "day", "temp_c"]).map_err(io)?;
    for s in series {
        for (i, t) in s.temps_c.iter().enumerate() {
            w.write_record([s.year.to_string(), (i + 1).to_string(), t.to_string()])
                .map_err(io)?;
        }
    }
    w.flush().map_err(|e| Error::Data(e.to_string()))
}

#[derive(Deserialize)]
struct EventRow {
    year: i32,
    start_day: u32,
    end_day: Option<u32>,
    censored: bool,
}

/// Reads a `year,start_day,end_day,censored` table.
pub fn parse_event_table(input: impl Read) -> Result<Vec<EventObservation>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    expect_header(&mut reader, &["year", "start_day", "end_day", "censored"])?;
    let mut out = Vec::new();
    let mut record = csv::StringRecord::new();
    let headers = reader.headers().map_err(csv_error)?.clone();
    while reader.read_record(&mut record).map_err(csv_error)? {
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row: EventRow = record
            .deserialize(Some(&headers))
            .map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
        let obs = EventObservation {
            year: row.year,
            start_day: row.start_day,
            end_day: row.end_day,
            censored: row.censored,
        };
        obs.validate().map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        out.push(obs);
    }
    Ok(out)
}

pub fn write_event_table(out: impl Write, observations: &[EventObservation]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Data(e.to_string());
    w.write_record(["year", "start_day", "end_day", "censored"]).map_err(io)?;
    for o in observations {
        w.write_record([
            o.year.to_string(),
            o.start_day.to_string(),
            o.end_day.map(|d| d.to_string()).unwrap_or_default(),
            o.censored.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Data(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(days: impl Iterator<Item = u32>) -> String {
        let mut s = String::from("year,day,temp_c\n");
        for d in days {
            s.push_str(&format!("2003,{d},{}\n", 10.0 + d as f64 * 0.01));
        }
        s
    }

    #[test]
    fn full_year_parses() {
        let series = parse_temperature_table(table(1..=365).as_bytes()).unwrap();
        assert_eq!(series.len(), 1);
        assert_eq!(series[0].len_days(), 365);
        assert!((series[0].temps_c[99] - 11.0).abs() < 1e-12);
    }

    #[test]
    fn missing_day_named() {
        let err = parse_temperature_table(table((1..=365).filter(|&d| d != 100)).as_bytes())
            .unwrap_err();
        assert_eq!(err, Error::Data("year 2003 missing day 100".into()));
        let err = parse_temperature_table(table(1..=300).as_bytes()).unwrap_err();
        assert_eq!(err, Error::Data("year 2003 missing day 301".into()));
    }

    #[test]
    fn non_numeric_reports_line() {
        let mut s = table(1..=365);
        s = s.replacen("2003,5,10.05", "2003,5,warm", 1);
        match parse_temperature_table(s.as_bytes()).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_header_rejected() {
        assert!(matches!(
            parse_temperature_table("yr,day,t\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn event_rows() {
        let input = "year,start_day,end_day,censored\n1987,155,218,false\n1987,155,,true\n";
        let rows = parse_event_table(input.as_bytes()).unwrap();
        assert_eq!(rows[0], EventObservation::occurred(1987, 155, 218).unwrap());
        assert_eq!(rows[1], EventObservation::censored(1987, 155));

        let bad = "year,start_day,end_day,censored\n1987,218,155,false\n";
        assert!(matches!(
            parse_event_table(bad.as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        let bad = "year,start_day,end_day,censored\n1987,155,200,true\n";
        assert!(parse_event_table(bad.as_bytes()).is_err());
    }

    #[test]
    fn binding_requires_series() {
        let obs = vec![EventObservation::occurred(1990, 150, 210).unwrap()];
        let series = TemperatureSeries::new(1991, vec![15.0; 365]).unwrap();
        assert!(matches!(
            ObservationSet::new(obs.clone(), [series]),
            Err(Error::Data(_))
        ));
        let series = TemperatureSeries::new(1990, vec![15.0; 365]).unwrap();
        assert_eq!(ObservationSet::new(obs, [series]).unwrap().len(), 1);
    }
}
