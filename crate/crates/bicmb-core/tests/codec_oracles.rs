//! Independent oracles for the convolutional-code machinery.
//!
//! The distance spectrum from the trellis search is checked against a plain
//! exhaustive enumeration of error-event input sequences, and enumerated
//! events drive the interleaver usage-count identity.

use bicmb_core::codec::{conv_encode, distance_spectrum, CodeSpec};
use bicmb_core::interleaver::{build_interleaver, validate_interleaver};
use bicmb_core::modulation::ModulationSpec;
use bicmb_core::rng::SeedStream;
use std::collections::BTreeMap;

/// Spectrum rows keyed by output weight: (event count, summed input weight).
type EventTable = BTreeMap<usize, (u64, u64)>;

/// Exhaustively enumerates error events by input sequence.
///
/// An event input starts and ends with a 1 and never drives the encoder
/// back to the zero state in between; its output weight is the Hamming
/// weight of the encoded sequence including the flush. Independent of the
/// dynamic-programming search: this walks actual input bit patterns.
fn enumerate_events(
    code: &CodeSpec,
    max_input_len: usize,
) -> (EventTable, Vec<Vec<u8>>) {
    let mut table = EventTable::new();
    let mut inputs = Vec::new();
    for len in 1..=max_input_len {
        let free = len.saturating_sub(2);
        for middle in 0u64..(1u64 << free) {
            let mut input = vec![0u8; len];
            input[0] = 1;
            input[len - 1] = 1;
            for (b, slot) in input.iter_mut().enumerate().take(len - 1).skip(1) {
                *slot = ((middle >> (b - 1)) & 1) as u8;
            }
            // reject compound events: state must stay nonzero mid-path
            let mut state = 0u32;
            let mut compound = false;
            let mem = code.memory() as u32;
            for (t, &u) in input.iter().enumerate() {
                state = (u32::from(u) << (mem - 1)) | (state >> 1);
                if state == 0 && t + 1 < len {
                    compound = true;
                    break;
                }
            }
            if compound {
                continue;
            }
            let coded = conv_encode(&input, code);
            let d: usize = coded.iter().map(|&b| b as usize).sum();
            let w: u64 = input.iter().map(|&b| u64::from(b)).sum();
            let entry = table.entry(d).or_insert((0, 0));
            entry.0 += 1;
            entry.1 += w;
            if d <= 12 {
                inputs.push(input);
            }
        }
    }
    (table, inputs)
}

#[test]
fn spectrum_matches_exhaustive_enumeration() {
    let code = CodeSpec::standard();
    let spectrum = distance_spectrum(&code, 14).unwrap();
    let (oracle, _) = enumerate_events(&code, 20);

    // Events at these weights are short enough for the length-20 oracle.
    for d in [10usize, 12] {
        let line = spectrum.iter().find(|l| l.d == d).unwrap_or_else(|| {
            panic!("spectrum missing d = {d}");
        });
        let &(count, input_weight) = oracle.get(&d).unwrap_or_else(|| {
            panic!("oracle missing d = {d}");
        });
        assert_eq!(line.count, count, "event count at d = {d}");
        assert_eq!(line.input_weight, input_weight, "input weight at d = {d}");
    }
    // no events below the free distance, on either path
    assert!(spectrum.iter().all(|l| l.d >= 10));
    assert!(oracle.keys().all(|&d| d >= 10));

    // The industry-standard code's leading terms.
    let head: Vec<_> = spectrum.iter().take(3).map(|l| (l.d, l.count, l.input_weight)).collect();
    assert_eq!(head, vec![(10, 11, 36), (12, 38, 211), (14, 193, 1404)]);
}

#[test]
fn toy_code_spectrum_matches_enumeration() {
    let code = CodeSpec::new(&[0o5, 0o7], 3).unwrap();
    let spectrum = distance_spectrum(&code, 10).unwrap();
    let (oracle, _) = enumerate_events(&code, 16);
    assert_eq!(spectrum[0].d, 5);
    for line in &spectrum {
        let &(count, input_weight) = oracle.get(&line.d).expect("oracle covers the weight");
        assert_eq!((line.count, line.input_weight), (count, input_weight), "d = {}", line.d);
    }
}

#[test]
fn event_usage_counts_sum_to_event_distance() {
    // Map every short error event through built interleavers and count how
    // often each subchannel is used: the counts must sum to the event's
    // Hamming distance.
    let code = CodeSpec::standard();
    let (_, event_inputs) = enumerate_events(&code, 20);
    assert!(!event_inputs.is_empty());
    let info_len = 120;
    for n_s in [2usize, 3] {
        let coded_len = code.coded_len(info_len);
        let plan = build_interleaver(
            coded_len,
            n_s,
            &ModulationSpec::Bpsk,
            code.d_free().unwrap(),
            SeedStream::new(77),
        )
        .unwrap();
        assert!(validate_interleaver(&plan).all_ok());
        for input in &event_inputs {
            // the event's codeword difference, embedded in a full frame
            let mut frame = input.clone();
            frame.resize(info_len, 0);
            let diff = conv_encode(&frame, &code);
            let d: usize = diff.iter().map(|&b| b as usize).sum();
            let mut alpha = vec![0usize; n_s];
            for (k_prime, &bit) in diff.iter().enumerate() {
                if bit == 1 {
                    alpha[plan.position(k_prime).s as usize] += 1;
                }
            }
            assert_eq!(alpha.iter().sum::<usize>(), d);
        }
    }
}
