//! Coincidence-count records, their Poissonian simulation, and CSV exchange.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::conversion::{ConversionParams, SourceModel};
use crate::error::{Error, Result};
use crate::linalg::{kron, CMatrix};
use crate::quantum::{linear_projector, projector, DensityMatrix, Pol};

/// One analyzer setting: a tomography label or a linear-polarizer angle in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Setting {
    Label(Pol),
    Angle(f64),
}

impl Setting {
    pub fn projector(&self) -> CMatrix {
        match self {
            Setting::Label(p) => projector(*p),
            Setting::Angle(a) => linear_projector(*a),
        }
    }

    pub fn label(&self) -> Option<Pol> {
        match self {
            Setting::Label(p) => Some(*p),
            Setting::Angle(_) => None,
        }
    }
}

impl From<Pol> for Setting {
    fn from(p: Pol) -> Self {
        Setting::Label(p)
    }
}

impl From<f64> for Setting {
    fn from(a: f64) -> Self {
        Setting::Angle(a)
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Setting::Label(p) => write!(f, "{p}"),
            Setting::Angle(a) => write!(f, "{a}"),
        }
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Ok(p) = s.parse::<Pol>() {
            return Ok(Setting::Label(p));
        }
        s.trim()
            .parse::<f64>()
            .map(Setting::Angle)
            .map_err(|_| Error::UnknownLabel(s.to_string()))
    }
}

/// Counts for one pair of analyzer settings.
///
/// `coincidences` is integral for raw data; it may become fractional after
/// accidental subtraction or when expected (noise-free) counts are used.
#[derive(Debug, Clone, PartialEq)]
pub struct CountRecord {
    pub setting_a: Setting,
    pub setting_b: Setting,
    pub duration: f64,
    pub coincidences: f64,
    pub singles_a: u64,
    pub singles_b: u64,
    /// Expected accidental coincidences over `duration`.
    pub accidental_estimate: f64,
}

impl CountRecord {
    pub fn new(setting_a: impl Into<Setting>, setting_b: impl Into<Setting>, duration: f64, coincidences: f64) -> Self {
        CountRecord {
            setting_a: setting_a.into(),
            setting_b: setting_b.into(),
            duration,
            coincidences,
            singles_a: 0,
            singles_b: 0,
            accidental_estimate: 0.0,
        }
    }

    /// Joint projector `P_a ⊗ P_b`.
    pub fn joint_projector(&self) -> CMatrix {
        kron(&self.setting_a.projector(), &self.setting_b.projector())
    }
}

/// Detector and loss model for a coincidence measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionModel {
    pub det_eff_810: f64,
    pub det_eff_532: f64,
    pub conversion_eff: f64,
    #[serde(rename = "coinc_window_s")]
    pub coinc_window: f64,
    #[serde(rename = "singles_rate_a_cps")]
    pub singles_rate_a: f64,
    #[serde(rename = "singles_rate_b_cps")]
    pub singles_rate_b: f64,
}

impl Default for DetectionModel {
    fn default() -> Self {
        DetectionModel {
            det_eff_810: 1.0,
            det_eff_532: 1.0,
            conversion_eff: 1.0,
            coinc_window: 3e-9,
            singles_rate_a: 0.0,
            singles_rate_b: 0.0,
        }
    }
}

impl DetectionModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("det_eff_810", self.det_eff_810),
            ("det_eff_532", self.det_eff_532),
            ("conversion_eff", self.conversion_eff),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if !(self.coinc_window > 0.0) {
            return Err(Error::InvalidParameter("coincidence window must be positive".into()));
        }
        if !(self.singles_rate_a >= 0.0 && self.singles_rate_b >= 0.0) {
            return Err(Error::InvalidParameter("singles rates must be non-negative".into()));
        }
        Ok(())
    }

    /// Fraction of generated pairs that end up as detected coincidences.
    pub fn pair_efficiency(&self) -> f64 {
        self.conversion_eff * self.det_eff_810 * self.det_eff_532
    }

    /// Rate of coincidences between unrelated photons, counts/s.
    pub fn accidental_rate(&self) -> f64 {
        self.singles_rate_a * self.singles_rate_b * self.coinc_window
    }
}

/// How counts are drawn from their expected values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// Poisson draws from a stream rooted at `seed`.
    Poisson { seed: u64 },
    /// Expected values, rounded to whole counts.
    Expected,
}

/// SplitMix64 finalizer, used to derive independent stream identifiers.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a root seed and a textual tag.
pub fn derive_seed(root: u64, tag: &str) -> u64 {
    tag.bytes().fold(mix64(root), |h, b| mix64(h ^ b as u64))
}

/// Random stream for (index, repetition) under `seed`.
pub fn substream(seed: u64, index: u64, repetition: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(mix64(index ^ mix64(repetition.wrapping_add(0x5851_F42D))));
    rng
}

pub fn sample_poisson<R: rand::Rng + ?Sized>(rng: &mut R, mean: f64) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng)
}

/// Expected coincidence rate (counts/s) for one joint setting, accidentals included.
pub fn expected_rate(
    rho: &DensityMatrix,
    a: &Setting,
    b: &Setting,
    source: &SourceModel,
    det: &DetectionModel,
) -> f64 {
    let joint = kron(&a.projector(), &b.projector());
    let prob = rho.expectation(&joint).max(0.0);
    source.pair_rate * det.pair_efficiency() * prob + det.accidental_rate()
}

/// Simulates Poissonian coincidence counts for each joint setting.
pub fn simulate_counts(
    rho: &DensityMatrix,
    settings: &[(Setting, Setting)],
    source: &SourceModel,
    det: &DetectionModel,
    duration: f64,
    seed: u64,
) -> Result<Vec<CountRecord>> {
    simulate_counts_with(rho, settings, source, det, duration, Sampling::Poisson { seed }, 0)
}

/// [`simulate_counts`] with explicit sampling mode and repetition index.
pub fn simulate_counts_with(
    rho: &DensityMatrix,
    settings: &[(Setting, Setting)],
    source: &SourceModel,
    det: &DetectionModel,
    duration: f64,
    sampling: Sampling,
    repetition: u64,
) -> Result<Vec<CountRecord>> {
    if settings.is_empty() {
        return Err(Error::InvalidParameter("no settings to simulate".into()));
    }
    if !(duration > 0.0) {
        return Err(Error::InvalidParameter(format!("duration {duration} must be positive")));
    }
    det.validate()?;
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, got: rho.dim() });
    }
    let accidental_mean = det.accidental_rate() * duration;
    let records = settings
        .iter()
        .enumerate()
        .map(|(index, (a, b))| {
            let mean = expected_rate(rho, a, b, source, det) * duration;
            let singles_mean_a = det.singles_rate_a * duration;
            let singles_mean_b = det.singles_rate_b * duration;
            let (coincidences, singles_a, singles_b) = match sampling {
                Sampling::Expected => {
                    let n = mean.round();
                    (n, singles_mean_a.round().max(n), singles_mean_b.round().max(n))
                }
                Sampling::Poisson { seed } => {
                    let mut rng = substream(seed, index as u64, repetition);
                    let n = sample_poisson(&mut rng, mean);
                    // Singles always include the photons that produced coincidences.
                    let extra_a = sample_poisson(&mut rng, (singles_mean_a - mean).max(0.0));
                    let extra_b = sample_poisson(&mut rng, (singles_mean_b - mean).max(0.0));
                    (n, n + extra_a, n + extra_b)
                }
            };
            CountRecord {
                setting_a: *a,
                setting_b: *b,
                duration,
                coincidences,
                singles_a: singles_a as u64,
                singles_b: singles_b as u64,
                accidental_estimate: accidental_mean,
            }
        })
        .collect();
    Ok(records)
}

/// Noise-free expected counts, not rounded.
pub fn expected_counts(
    rho: &DensityMatrix,
    settings: &[(Setting, Setting)],
    source: &SourceModel,
    det: &DetectionModel,
    duration: f64,
) -> Vec<CountRecord> {
    settings
        .iter()
        .map(|(a, b)| CountRecord {
            setting_a: *a,
            setting_b: *b,
            duration,
            coincidences: expected_rate(rho, a, b, source, det) * duration,
            singles_a: (det.singles_rate_a * duration).round() as u64,
            singles_b: (det.singles_rate_b * duration).round() as u64,
            accidental_estimate: det.accidental_rate() * duration,
        })
        .collect()
}

/// Single-photon counts for the 36 (input, analyzer) pairs of process tomography.
///
/// `rate` is the detected photon rate for an input that the channel passes
/// completely; filtering by the channel lowers it.
pub fn simulate_process_counts(
    channel: &ConversionParams,
    rate: f64,
    duration: f64,
    sampling: Sampling,
) -> Result<Vec<CountRecord>> {
    channel.validate()?;
    if !(duration > 0.0) || !(rate >= 0.0) {
        return Err(Error::InvalidParameter("rate and duration must be positive".into()));
    }
    let mut records = Vec::with_capacity(36);
    for (i, &input) in Pol::ALL.iter().enumerate() {
        let output = channel.apply_single(&projector(input));
        for (j, &analyzer) in Pol::ALL.iter().enumerate() {
            let prob = crate::linalg::trace_product(&projector(analyzer), &output).re.max(0.0);
            let mean = rate * duration * prob;
            let n = match sampling {
                Sampling::Expected => mean.round(),
                Sampling::Poisson { seed } => {
                    sample_poisson(&mut substream(seed, (i * 6 + j) as u64, 0), mean)
                }
            };
            records.push(CountRecord {
                setting_a: Setting::Label(input),
                setting_b: Setting::Label(analyzer),
                duration,
                coincidences: n,
                singles_a: n as u64,
                singles_b: n as u64,
                accidental_estimate: 0.0,
            });
        }
    }
    Ok(records)
}

pub const CSV_HEADER: [&str; 7] = [
    "setting_a",
    "setting_b",
    "duration_s",
    "coincidences",
    "singles_a",
    "singles_b",
    "accidental_estimate",
];

pub fn write_csv<W: Write>(writer: W, records: &[CountRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let to_err = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(CSV_HEADER).map_err(to_err)?;
    for r in records {
        w.write_record([
            r.setting_a.to_string(),
            r.setting_b.to_string(),
            r.duration.to_string(),
            r.coincidences.to_string(),
            r.singles_a.to_string(),
            r.singles_b.to_string(),
            r.accidental_estimate.to_string(),
        ])
        .map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_csv<R: Read>(reader: R) -> Result<Vec<CountRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Parse(format!("unexpected CSV header: {:?}", header)));
    }
    let mut records = Vec::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| Error::Parse(e.to_string()))?;
        let field = |i: usize| row.get(i).unwrap_or("");
        let num = |i: usize| -> Result<f64> {
            field(i)
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("row {}: bad number `{}`", line + 1, field(i))))
        };
        let int = |i: usize| -> Result<u64> {
            field(i)
                .parse::<u64>()
                .map_err(|_| Error::Parse(format!("row {}: bad count `{}`", line + 1, field(i))))
        };
        let record = CountRecord {
            setting_a: field(0).parse()?,
            setting_b: field(1).parse()?,
            duration: num(2)?,
            coincidences: num(3)?,
            singles_a: int(4)?,
            singles_b: int(5)?,
            accidental_estimate: num(6)?,
        };
        if record.coincidences < 0.0 || record.accidental_estimate < 0.0 || !(record.duration > 0.0) {
            return Err(Error::Parse(format!("row {}: negative count or non-positive duration", line + 1)));
        }
        records.push(record);
    }
    Ok(records)
}

pub fn write_csv_file(path: &Path, records: &[CountRecord]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(std::io::BufWriter::new(file), records)
}

pub fn read_csv_file(path: &Path) -> Result<Vec<CountRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{bell_state, BellKind};

    fn phi() -> DensityMatrix {
        bell_state(BellKind::PhiPlus).density()
    }

    fn ideal_source(rate: f64) -> SourceModel {
        SourceModel::werner(1.0, rate)
    }

    #[test]
    fn orthogonal_setting_gives_zero() {
        let settings = [(Pol::H.into(), Pol::V.into()), (Pol::H.into(), Pol::H.into())];
        let recs = simulate_counts(&phi(), &settings, &ideal_source(1000.0), &DetectionModel::default(), 10.0, 1).unwrap();
        assert_eq!(recs[0].coincidences, 0.0);
        assert!(recs[1].coincidences > 0.0);
        let expected = expected_counts(&phi(), &settings, &ideal_source(1000.0), &DetectionModel::default(), 10.0);
        assert_eq!(expected[0].coincidences, 0.0);
        assert!((expected[1].coincidences - 5000.0).abs() < 1e-9);
    }

    #[test]
    fn full_scale_mean() {
        let det = DetectionModel { conversion_eff: 15.0 / 7.3e4, ..Default::default() };
        let source = ideal_source(7.3e4);
        let rec = &expected_counts(&phi(), &[(Pol::H.into(), Pol::H.into())], &source, &det, 100.0)[0];
        assert!((rec.coincidences - 750.0).abs() < 1e-9);
    }

    #[test]
    fn accidentals_are_uniform() {
        let det = DetectionModel { singles_rate_a: 1e5, singles_rate_b: 400.0, ..Default::default() };
        let recs = expected_counts(&phi(), &[(Pol::H.into(), Pol::V.into())], &ideal_source(10.0), &det, 100.0);
        assert!((recs[0].coincidences - 1e5 * 400.0 * 3e-9 * 100.0).abs() < 1e-9);
        assert_eq!(recs[0].coincidences, recs[0].accidental_estimate);
    }

    #[test]
    fn coincidences_bounded_by_singles() {
        let det = DetectionModel { singles_rate_a: 50.0, singles_rate_b: 20.0, ..Default::default() };
        let settings: Vec<(Setting, Setting)> = Pol::ALL.iter().map(|&p| (p.into(), p.into())).collect();
        let recs = simulate_counts(&phi(), &settings, &ideal_source(100.0), &det, 5.0, 9).unwrap();
        for r in recs {
            assert!(r.coincidences <= r.singles_a.min(r.singles_b) as f64);
        }
    }

    #[test]
    fn same_seed_same_counts() {
        let settings = [(Pol::D.into(), Pol::D.into()), (Setting::Angle(22.5), Setting::Angle(67.5))];
        let a = simulate_counts(&phi(), &settings, &ideal_source(100.0), &DetectionModel::default(), 3.0, 42).unwrap();
        let b = simulate_counts(&phi(), &settings, &ideal_source(100.0), &DetectionModel::default(), 3.0, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_inputs() {
        let det = DetectionModel::default();
        assert!(simulate_counts(&phi(), &[], &ideal_source(1.0), &det, 1.0, 0).is_err());
        let s = [(Pol::H.into(), Pol::H.into())];
        assert!(simulate_counts(&phi(), &s, &ideal_source(1.0), &det, 0.0, 0).is_err());
    }

    #[test]
    fn setting_parse() {
        assert_eq!("R".parse::<Setting>().unwrap(), Setting::Label(Pol::R));
        assert_eq!("67.5".parse::<Setting>().unwrap(), Setting::Angle(67.5));
        assert!("Q".parse::<Setting>().is_err());
    }

    #[test]
    fn csv_rejects_wrong_header() {
        let text = "a,b,c\n1,2,3\n";
        assert!(read_csv(text.as_bytes()).is_err());
    }

    #[test]
    fn csv_layout() {
        let mut rec = CountRecord::new(Pol::H, 22.5, 100.0, 750.0);
        rec.singles_a = 1000;
        rec.singles_b = 800;
        rec.accidental_estimate = 16.125;
        let mut buf = Vec::new();
        write_csv(&mut buf, &[rec.clone()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "setting_a,setting_b,duration_s,coincidences,singles_a,singles_b,accidental_estimate\nH,22.5,100,750,1000,800,16.125\n"
        );
        assert_eq!(read_csv(text.as_bytes()).unwrap(), vec![rec]);
    }
}
