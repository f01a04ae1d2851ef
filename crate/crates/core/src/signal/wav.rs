use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use super::Signal;
use crate::error::{Error, Result};

const WAVE_FORMAT_PCM: u16 = 0x0001;
const WAVE_FORMAT_IEEE_FLOAT: u16 = 0x0003;
const WAVE_FORMAT_EXTENSIBLE: u16 = 0xfffe;

/// Read a PCM WAV file (8/16/24/32-bit integer or 32-bit float) into a mono
/// signal normalized by the format's full-scale value. Multichannel frames
/// are averaged.
pub fn load_wav(path: impl AsRef<Path>) -> Result<Signal> {
    let path = path.as_ref();
    let wav_err = |reason: String| Error::Wav {
        path: path.to_path_buf(),
        reason,
    };

    // hound reports unsupported encodings without the tag, so look it up
    // first and refuse anything that is not plain PCM or float.
    let (format_tag, bits) = peek_format(path)?;
    let accepted = matches!(
        (format_tag, bits),
        (WAVE_FORMAT_PCM, 8 | 16 | 24 | 32) | (WAVE_FORMAT_IEEE_FLOAT, 32)
    );
    if !accepted {
        return Err(Error::UnsupportedWav {
            path: path.to_path_buf(),
            format_tag,
            bits,
        });
    }

    let mut reader = hound::WavReader::open(path).map_err(|e| wav_err(e.to_string()))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(wav_err("zero channels".into()));
    }

    let interleaved: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| wav_err(e.to_string()))?,
        hound::SampleFormat::Int => {
            let full_scale = (1u64 << (spec.bits_per_sample - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 / full_scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| wav_err(e.to_string()))?
        }
    };

    let mono: Vec<f64> = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(channels)
            .map(|frame| frame.iter().sum::<f64>() / channels as f64)
            .collect()
    };
    Signal::new(mono, spec.sample_rate)
}

/// Write a mono 16-bit PCM WAV. Samples are clipped to [-1, 1).
pub fn write_wav_16bit(path: impl AsRef<Path>, signal: &Signal) -> Result<()> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate_hz(),
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let wav_err = |e: hound::Error| Error::Wav {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(wav_err)?;
    for &s in signal.samples() {
        let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(v).map_err(wav_err)?;
    }
    writer.finalize().map_err(wav_err)?;
    Ok(())
}

/// Walk the RIFF chunks up to `fmt ` and return (format tag, bits per sample).
/// For WAVE_FORMAT_EXTENSIBLE the tag is taken from the sub-format GUID.
fn peek_format(path: &Path) -> Result<(u16, u16)> {
    let bad = |reason: &str| Error::Wav {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    let mut r = BufReader::new(File::open(path)?);
    let mut header = [0u8; 12];
    r.read_exact(&mut header)
        .map_err(|_| bad("truncated RIFF header"))?;
    if &header[0..4] != b"RIFF" || &header[8..12] != b"WAVE" {
        return Err(bad("not a RIFF/WAVE file"));
    }
    loop {
        let mut chunk = [0u8; 8];
        r.read_exact(&mut chunk)
            .map_err(|_| bad("missing fmt chunk"))?;
        let size = u32::from_le_bytes([chunk[4], chunk[5], chunk[6], chunk[7]]) as usize;
        if &chunk[0..4] == b"fmt " {
            if size < 16 {
                return Err(bad("fmt chunk too small"));
            }
            let mut body = vec![0u8; size];
            r.read_exact(&mut body)
                .map_err(|_| bad("truncated fmt chunk"))?;
            let mut tag = u16::from_le_bytes([body[0], body[1]]);
            let bits = u16::from_le_bytes([body[14], body[15]]);
            if tag == WAVE_FORMAT_EXTENSIBLE && size >= 26 {
                tag = u16::from_le_bytes([body[24], body[25]]);
            }
            return Ok((tag, bits));
        }
        // chunks are word aligned
        let skip = size + (size & 1);
        std::io::copy(&mut (&mut r).take(skip as u64), &mut std::io::sink())?;
    }
}
