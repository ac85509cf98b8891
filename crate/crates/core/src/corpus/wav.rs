use std::io::{Cursor, Read, Seek, Write};
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::dsp::Waveform;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WavEncoding {
    /// IEEE float, 32 bit. Values beyond full scale survive.
    #[default]
    Float32,
    /// Signed 16-bit PCM, clipped to full scale.
    Pcm16,
}

fn wav_err(path: &Path, source: hound::Error) -> Error {
    Error::Wav {
        path: path.to_path_buf(),
        source,
    }
}

fn decode<R: Read>(reader: WavReader<R>, path: &Path) -> Result<Waveform> {
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::InvalidConfig(format!("{}: zero channels", path.display())));
    }
    if channels > 1 {
        log::warn!("{}: {channels} channels, keeping the first", path.display());
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| wav_err(path, e))?,
        (SampleFormat::Int, bits @ (8 | 16 | 24 | 32)) => {
            let scale = 1.0 / (1u64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| wav_err(path, e))?
        }
        (fmt, bits) => {
            return Err(Error::InvalidConfig(format!(
                "{}: unsupported sample format {fmt:?}/{bits} bit",
                path.display()
            )))
        }
    };
    let mono = interleaved.into_iter().step_by(channels).collect();
    Waveform::new(mono, spec.sample_rate)
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    let reader = WavReader::open(path).map_err(|e| wav_err(path, e))?;
    decode(reader, path)
}

pub fn read_wav_bytes(bytes: &[u8]) -> Result<Waveform> {
    let path = Path::new("<memory>");
    let reader = WavReader::new(Cursor::new(bytes)).map_err(|e| wav_err(path, e))?;
    decode(reader, path)
}

fn encode<W: Write + Seek>(out: W, w: &Waveform, enc: WavEncoding, path: &Path) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: w.sample_rate_hz(),
        bits_per_sample: match enc {
            WavEncoding::Float32 => 32,
            WavEncoding::Pcm16 => 16,
        },
        sample_format: match enc {
            WavEncoding::Float32 => SampleFormat::Float,
            WavEncoding::Pcm16 => SampleFormat::Int,
        },
    };
    let mut writer = WavWriter::new(out, spec).map_err(|e| wav_err(path, e))?;
    for &s in w.samples() {
        match enc {
            WavEncoding::Float32 => writer.write_sample(s as f32),
            WavEncoding::Pcm16 => writer.write_sample((s * 32768.0).round().clamp(-32768.0, 32767.0) as i16),
        }
        .map_err(|e| wav_err(path, e))?;
    }
    writer.finalize().map_err(|e| wav_err(path, e))
}

pub fn write_wav(path: impl AsRef<Path>, w: &Waveform, enc: WavEncoding) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    encode(std::io::BufWriter::new(file), w, enc, path)
}

pub fn wav_bytes(w: &Waveform, enc: WavEncoding) -> Result<Vec<u8>> {
    let mut buf = Cursor::new(Vec::new());
    encode(&mut buf, w, enc, Path::new("<memory>"))?;
    Ok(buf.into_inner())
}
