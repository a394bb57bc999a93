//! Discrete M-bit detection patterns: ingestion, binning, classical fake
//! generation and randomized permutation tests.
//!
//! Patterns are stored bit-packed, little-endian within bytes: mode 0 is the
//! least significant bit of byte 0 of each record. The text interchange
//! format is one `{0,1}` string per line; the packed format is the magic
//! `GBSP1`, a little-endian u32 mode count, a little-endian u64 sample count,
//! then ceil(M/8) bytes per pattern.

use crate::error::{Error, Result};
use crate::input::{InputModel, StateFamily};
use crate::network::{Permutation, TransmissionMatrix};
use crate::observables::{lattice_index, BinningSpec};
use crate::rng::{chunks_of, stream_rng, StreamLabel};
use crate::simulate::SimulationSpec;
use crate::statistics::{chi_square, ComparisonReport};
use rand::Rng;
use rayon::prelude::*;
use std::io::Write;
use std::path::Path;

pub const PACKED_MAGIC: &[u8; 5] = b"GBSP1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Experimental,
    ClassicalFake(StateFamily),
    SimulatorDerived,
}

/// A set of M-bit detection patterns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternSet {
    n_modes: usize,
    n_samples: usize,
    bytes_per_pattern: usize,
    bits: Vec<u8>,
    provenance: Provenance,
}

impl PatternSet {
    pub fn new(n_modes: usize, provenance: Provenance) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::PatternFormat(
                "pattern width must be positive".into(),
            ));
        }
        Ok(Self {
            n_modes,
            n_samples: 0,
            bytes_per_pattern: n_modes.div_ceil(8),
            bits: Vec::new(),
            provenance,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    #[inline]
    pub fn bit(&self, sample: usize, mode: usize) -> bool {
        let byte = self.bits[sample * self.bytes_per_pattern + mode / 8];
        (byte >> (mode % 8)) & 1 == 1
    }

    /// Appends one pattern given as a bool slice of width `n_modes`.
    pub fn push(&mut self, pattern: &[bool]) {
        debug_assert_eq!(pattern.len(), self.n_modes);
        let base = self.bits.len();
        self.bits.resize(base + self.bytes_per_pattern, 0);
        for (mode, &bit) in pattern.iter().enumerate() {
            if bit {
                self.bits[base + mode / 8] |= 1 << (mode % 8);
            }
        }
        self.n_samples += 1;
    }

    pub(crate) fn push_packed_record(&mut self, record: &[u8]) {
        debug_assert_eq!(record.len(), self.bytes_per_pattern);
        self.bits.extend_from_slice(record);
        self.n_samples += 1;
    }

    pub fn clicks(&self, sample: usize) -> usize {
        (0..self.n_modes).filter(|&m| self.bit(sample, m)).count()
    }

    pub fn write_text(&self, mut w: impl Write) -> std::io::Result<()> {
        let mut line = vec![0u8; self.n_modes + 1];
        line[self.n_modes] = b'\n';
        for s in 0..self.n_samples {
            for (m, slot) in line[..self.n_modes].iter_mut().enumerate() {
                *slot = if self.bit(s, m) { b'1' } else { b'0' };
            }
            w.write_all(&line)?;
        }
        Ok(())
    }

    pub fn write_packed(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(PACKED_MAGIC)?;
        w.write_all(&(self.n_modes as u32).to_le_bytes())?;
        w.write_all(&(self.n_samples as u64).to_le_bytes())?;
        w.write_all(&self.bits)
    }
}

/// Parses the text format: `#` comment lines before the data, then one
/// pattern per line with exactly M characters from {0,1}.
pub fn parse_text_patterns(text: &str, provenance: Provenance) -> Result<PatternSet> {
    let mut set: Option<PatternSet> = None;
    let mut row = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        row.clear();
        for ch in line.chars() {
            match ch {
                '0' => row.push(false),
                '1' => row.push(true),
                _ => {
                    return Err(Error::PatternFormat(format!(
                        "line {}: invalid character {ch:?}",
                        lineno + 1
                    )));
                }
            }
        }
        match &mut set {
            None => {
                let mut s = PatternSet::new(row.len(), provenance)?;
                s.push(&row);
                set = Some(s);
            }
            Some(s) => {
                if row.len() != s.n_modes() {
                    return Err(Error::PatternFormat(format!(
                        "line {}: width {} differs from first pattern width {}",
                        lineno + 1,
                        row.len(),
                        s.n_modes()
                    )));
                }
                s.push(&row);
            }
        }
    }
    set.ok_or_else(|| Error::PatternFormat("no patterns found".into()))
}

/// Parses the packed binary format.
pub fn parse_packed_patterns(bytes: &[u8], provenance: Provenance) -> Result<PatternSet> {
    if bytes.len() < PACKED_MAGIC.len() + 4 + 8 {
        return Err(Error::PatternFormat("truncated packed header".into()));
    }
    if &bytes[..5] != PACKED_MAGIC {
        return Err(Error::PatternFormat("bad magic, expected GBSP1".into()));
    }
    let n_modes = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
    let declared = u64::from_le_bytes(bytes[9..17].try_into().unwrap()) as usize;
    let mut set = PatternSet::new(n_modes, provenance)?;
    let body = &bytes[17..];
    let per = set.bytes_per_pattern;
    if body.len() != declared * per {
        return Err(Error::PatternFormat(format!(
            "declared {declared} patterns of {per} bytes, found {} body bytes",
            body.len()
        )));
    }
    for rec in body.chunks(per) {
        set.push_packed_record(rec);
    }
    Ok(set)
}

/// Reads a pattern file, sniffing the packed magic and falling back to text.
pub fn ingest_patterns(path: impl AsRef<Path>) -> Result<PatternSet> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    if bytes.starts_with(PACKED_MAGIC) {
        parse_packed_patterns(&bytes, Provenance::Experimental)
    } else {
        let text = String::from_utf8(bytes)
            .map_err(|_| Error::PatternFormat("file is neither GBSP1 nor utf-8 text".into()))?;
        parse_text_patterns(&text, Provenance::Experimental)
    }
}

/// Grouped counts of a pattern set on a binning lattice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinnedCounts {
    pub dims: Vec<usize>,
    pub counts: Vec<u64>,
    pub n_samples: u64,
}

impl BinnedCounts {
    pub fn probabilities(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| c as f64 / self.n_samples as f64)
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Bins patterns into grouped counts. An optional permutation relabels bit
/// positions before grouping: slot `i` reads original bit `perm[i]`, matching
/// the row permutation applied to the transmission matrix on the theory side.
pub fn bin_patterns(
    ps: &PatternSet,
    spec: &BinningSpec,
    perm: Option<&Permutation>,
) -> Result<BinnedCounts> {
    spec.validate_for(ps.n_modes())?;
    if let Some(p) = perm {
        if p.len() != ps.n_modes() {
            return Err(Error::InvalidPermutation { len: p.len() });
        }
    }
    let dims = spec.dims();
    let lattice_len: usize = dims.iter().product();
    let subsets: Vec<Vec<usize>> = spec
        .subsets()
        .iter()
        .map(|s| s.iter().map(|&i| perm.map_or(i, |p| p.source(i))).collect())
        .collect();
    let counts = (0..ps.n_samples())
        .into_par_iter()
        .fold(
            || vec![0u64; lattice_len],
            |mut acc, sample| {
                let coords: Vec<usize> = subsets
                    .iter()
                    .map(|s| s.iter().filter(|&&m| ps.bit(sample, m)).count())
                    .collect();
                acc[lattice_index(&dims, &coords)] += 1;
                acc
            },
        )
        .reduce(
            || vec![0u64; lattice_len],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(BinnedCounts {
        dims,
        counts,
        n_samples: ps.n_samples() as u64,
    })
}

/// One Bernoulli bit draw; the generator consumes exactly one uniform per
/// mode per trajectory, in mode order.
#[inline]
fn draw_bit(rng: &mut impl Rng, p: f64) -> bool {
    rng.random::<f64>() < p
}

/// Generates classical fake patterns: per trajectory, classical amplitudes
/// are transformed through the network, each detector's click probability
/// `p_j = 1 - exp(-|alpha'_j|^2)` is computed, and M independent Bernoulli
/// bits are drawn. One pattern per trajectory; bit draws come from a stream
/// independent of the amplitude stream.
pub fn generate_fakes(
    model: &InputModel,
    matrix: &TransmissionMatrix,
    n_fake: usize,
    seed: u64,
) -> Result<PatternSet> {
    if !model.family().is_classical() {
        return Err(Error::NonClassicalFake(model.family().to_string()));
    }
    if model.sigma() != crate::input::SigmaOrdering::Normal {
        return Err(Error::ParameterDomain(
            "fake generation runs on the diagonal-P branch; use normal ordering".into(),
        ));
    }
    if n_fake == 0 {
        return Err(Error::ParameterDomain(
            "fake pattern count must be at least 1".into(),
        ));
    }
    if matrix.n_inputs() != model.n_modes() {
        return Err(Error::ShapeMismatch(format!(
            "matrix expects {} input modes, model has {}",
            matrix.n_inputs(),
            model.n_modes()
        )));
    }
    let effective = matrix.with_t_scale(matrix.t_scale() * model.t())?;
    let scaled = effective.scaled_elements();
    let widths = crate::input::SamplingWidths::of(model);
    let m_out = matrix.n_outputs();

    let chunks: Vec<(u64, usize, usize)> = chunks_of(n_fake).collect();
    let pieces: Vec<Vec<u8>> = chunks
        .into_par_iter()
        .map(|(chunk, _, len)| {
            let (a, _) = widths.sample_chunk(seed, 0, chunk, len);
            let alpha = scaled.mul_block(&a, false);
            let mut bit_rng = stream_rng(seed, StreamLabel::Bernoulli, 0, chunk);
            let bytes_per = m_out.div_ceil(8);
            let mut out = vec![0u8; len * bytes_per];
            let mut p = vec![0.0f64; m_out];
            for traj in 0..len {
                for (j, pj) in p.iter_mut().enumerate() {
                    *pj = 1.0 - (-alpha.get(j, traj).norm_sqr()).exp();
                }
                let base = traj * bytes_per;
                for (j, &pj) in p.iter().enumerate() {
                    if draw_bit(&mut bit_rng, pj) {
                        out[base + j / 8] |= 1 << (j % 8);
                    }
                }
            }
            out
        })
        .collect();
    let mut set = PatternSet::new(m_out, Provenance::ClassicalFake(model.family()))?;
    for piece in pieces {
        let n = piece.len() / set.bytes_per_pattern;
        set.bits.extend_from_slice(&piece);
        set.n_samples += n;
    }
    Ok(set)
}

/// One permutation trial: the drawn permutation and the comparison outcome.
#[derive(Debug, Clone)]
pub struct TrialReport {
    pub permutation: Permutation,
    pub report: ComparisonReport,
}

#[derive(Debug, Clone)]
pub struct PermutationTestOutcome {
    pub trials: Vec<TrialReport>,
    pub mean_z: f64,
}

/// Runs the comparison with explicitly supplied permutations: each trial
/// permutes the matrix rows on the theory side and the pattern bits on the
/// data side identically, bins both and applies the chi-square and Z tests.
pub fn permutation_test_with_perms(
    theory: &SimulationSpec<'_>,
    ps: &PatternSet,
    spec: &BinningSpec,
    perms: &[Permutation],
) -> Result<PermutationTestOutcome> {
    if perms.is_empty() {
        return Err(Error::ParameterDomain("at least one trial required".into()));
    }
    let mut trials = Vec::with_capacity(perms.len());
    let mut z_sum = 0.0;
    for perm in perms {
        let permuted = theory.matrix.permuted(perm)?;
        let sim = SimulationSpec {
            matrix: &permuted,
            ..theory.clone()
        };
        let estimate = sim.run_gcp(spec)?;
        let binned = bin_patterns(ps, spec, Some(perm))?;
        let report = chi_square(&estimate, &binned)?;
        z_sum += report.z;
        trials.push(TrialReport {
            permutation: perm.clone(),
            report,
        });
    }
    Ok(PermutationTestOutcome {
        mean_z: z_sum / perms.len() as f64,
        trials,
    })
}

/// Randomized permutation test: `trials` uniform permutations drawn from the
/// permutation stream of `seed`, one comparison each.
pub fn permutation_test(
    theory: &SimulationSpec<'_>,
    ps: &PatternSet,
    spec: &BinningSpec,
    trials: usize,
    seed: u64,
) -> Result<PermutationTestOutcome> {
    if trials == 0 {
        return Err(Error::ParameterDomain("at least one trial required".into()));
    }
    let perms: Vec<Permutation> = (0..trials)
        .map(|t| {
            let mut rng = stream_rng(seed, StreamLabel::Permutation, t as u64, 0);
            Permutation::random(ps.n_modes(), &mut rng)
        })
        .collect();
    permutation_test_with_perms(theory, ps, spec, &perms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::input::SigmaOrdering;
    use crate::rng::{stream_rng, StreamLabel};

    fn toy_patterns() -> PatternSet {
        parse_text_patterns("0101\n1100\n", Provenance::Experimental).unwrap()
    }

    #[test]
    fn text_parse_roundtrip() {
        let ps = toy_patterns();
        assert_eq!(ps.n_modes(), 4);
        assert_eq!(ps.n_samples(), 2);
        // "0101": mode 0 = '0', mode 1 = '1', ...
        assert!(!ps.bit(0, 0));
        assert!(ps.bit(0, 1));
        assert!(ps.bit(1, 0));
        assert!(!ps.bit(1, 3));
        let mut text = Vec::new();
        ps.write_text(&mut text).unwrap();
        assert_eq!(String::from_utf8(text).unwrap(), "0101\n1100\n");
    }

    #[test]
    fn text_parse_rejects_bad_input() {
        assert!(parse_text_patterns("", Provenance::Experimental).is_err());
        assert!(parse_text_patterns("# only comments\n", Provenance::Experimental).is_err());
        assert!(parse_text_patterns("0102\n", Provenance::Experimental).is_err());
        assert!(parse_text_patterns("01\n011\n", Provenance::Experimental).is_err());
    }

    #[test]
    fn packed_roundtrip_and_truncation() {
        let ps = toy_patterns();
        let mut packed = Vec::new();
        ps.write_packed(&mut packed).unwrap();
        let back = parse_packed_patterns(&packed, Provenance::Experimental).unwrap();
        assert_eq!(back.n_modes(), 4);
        assert_eq!(back.n_samples(), 2);
        for s in 0..2 {
            for m in 0..4 {
                assert_eq!(back.bit(s, m), ps.bit(s, m));
            }
        }
        // declared count of 10 with only 2 records present
        let mut bad = packed.clone();
        bad[9..17].copy_from_slice(&10u64.to_le_bytes());
        assert!(parse_packed_patterns(&bad, Provenance::Experimental).is_err());
    }

    #[test]
    fn binning_totals_and_hand_grouping() {
        let ps = toy_patterns();
        let full = bin_patterns(&ps, &BinningSpec::full(4).unwrap(), None).unwrap();
        // both patterns have exactly two clicks
        assert_eq!(full.counts[2], 2);
        assert_eq!(full.total(), 2);

        let halves = bin_patterns(&ps, &BinningSpec::equal_split(4, 2).unwrap(), None).unwrap();
        // "0101" -> (1, 1); "1100" -> (2, 0)
        assert_eq!(halves.counts[lattice_index(&halves.dims, &[1, 1])], 1);
        assert_eq!(halves.counts[lattice_index(&halves.dims, &[2, 0])], 1);
        assert_eq!(halves.total(), 2);

        let id = Permutation::identity(4);
        let same = bin_patterns(&ps, &BinningSpec::equal_split(4, 2).unwrap(), Some(&id)).unwrap();
        assert_eq!(same, halves);
    }

    #[test]
    fn total_clicks_are_permutation_invariant() {
        let ps = toy_patterns();
        let spec = BinningSpec::full(4).unwrap();
        let base = bin_patterns(&ps, &spec, None).unwrap();
        let mut rng = stream_rng(5, StreamLabel::Permutation, 0, 0);
        for _ in 0..10 {
            let p = Permutation::random(4, &mut rng);
            assert_eq!(bin_patterns(&ps, &spec, Some(&p)).unwrap(), base);
        }
    }

    #[test]
    fn fakes_reject_nonclassical_models() {
        let pure = InputModel::pure_squeezed(vec![1.0], SigmaOrdering::Normal).unwrap();
        let t = TransmissionMatrix::identity(1);
        assert!(matches!(
            generate_fakes(&pure, &t, 10, 1).unwrap_err(),
            Error::NonClassicalFake(_)
        ));
    }

    #[test]
    fn zero_network_gives_all_zero_patterns() {
        let model = InputModel::squashed_with_photons(&[1.0]).unwrap();
        let zero = TransmissionMatrix::new(crate::linalg::ComplexMatrix::zeros(2, 1), 1.0).unwrap();
        let ps = generate_fakes(&model, &zero, 100, 3).unwrap();
        assert_eq!(ps.n_samples(), 100);
        for s in 0..100 {
            assert_eq!(ps.clicks(s), 0);
        }
    }

    #[test]
    fn squashed_fake_click_rate_matches_closed_form() {
        // p(click) = 1 - (1 + 2n)^(-1/2) for one squashed mode, n = 0.5
        let model = InputModel::squashed_with_photons(&[0.5]).unwrap();
        let t = TransmissionMatrix::identity(1);
        let n = 200_000;
        let ps = generate_fakes(&model, &t, n, 17).unwrap();
        let rate = (0..n).filter(|&s| ps.bit(s, 0)).count() as f64 / n as f64;
        let expect = 1.0 - 1.0 / 2.0f64.sqrt();
        let se = (expect * (1.0 - expect) / n as f64).sqrt();
        assert!(
            (rate - expect).abs() < 3.0 * se,
            "rate {rate}, want {expect} +- {se}"
        );
        assert_eq!(
            ps.provenance(),
            Provenance::ClassicalFake(StateFamily::Squashed)
        );
    }

    #[test]
    fn fakes_are_reproducible_and_seed_sensitive() {
        let model = InputModel::squashed_with_photons(&[0.5, 1.0]).unwrap();
        let t = TransmissionMatrix::identity(2);
        let a = generate_fakes(&model, &t, 1000, 5).unwrap();
        let b = generate_fakes(&model, &t, 1000, 5).unwrap();
        let c = generate_fakes(&model, &t, 1000, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn bits_within_trajectory_are_conditionally_independent() {
        // fixed click probabilities: the 2x2 contingency table of a mode pair
        // must show no association
        let p = [0.3, 0.7];
        let mut rng = stream_rng(11, StreamLabel::Bernoulli, 0, 0);
        let mut table = [[0u64; 2]; 2];
        let n = 100_000;
        for _ in 0..n {
            let b0 = draw_bit(&mut rng, p[0]);
            let b1 = draw_bit(&mut rng, p[1]);
            table[b0 as usize][b1 as usize] += 1;
        }
        let nf = n as f64;
        let p0 = (table[1][0] + table[1][1]) as f64 / nf;
        let p1 = (table[0][1] + table[1][1]) as f64 / nf;
        let mut chi2 = 0.0;
        for (i, row) in table.iter().enumerate() {
            for (j, &obs) in row.iter().enumerate() {
                let pi = if i == 1 { p0 } else { 1.0 - p0 };
                let pj = if j == 1 { p1 } else { 1.0 - p1 };
                let expect = nf * pi * pj;
                chi2 += (obs as f64 - expect).powi(2) / expect;
            }
        }
        // one degree of freedom; 10 is far beyond any usual quantile
        assert!(chi2 < 10.0, "contingency chi2 = {chi2}");
    }
}
