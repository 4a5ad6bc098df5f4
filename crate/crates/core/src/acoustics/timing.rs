use crate::corpus::AudioBuffer;
use crate::error::{Error, Result};

pub fn duration_s(a: &AudioBuffer) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::invalid("empty audio"));
    }
    Ok(a.duration_s())
}

pub fn word_count(transcript: &str) -> usize {
    transcript.split_whitespace().count()
}

/// Words per minute of recording.
pub fn speech_rate_wpm(transcript: &str, a: &AudioBuffer) -> Result<f64> {
    let words = word_count(transcript);
    if words == 0 {
        return Err(Error::invalid("speech rate needs a non-empty transcript"));
    }
    Ok(words as f64 / (duration_s(a)? / 60.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn silence(n: usize) -> AudioBuffer {
        AudioBuffer::new(vec![0.0; n], 16000).unwrap()
    }

    #[test]
    fn durations() {
        assert_eq!(duration_s(&silence(16000)).unwrap(), 1.0);
        assert_eq!(duration_s(&silence(8000)).unwrap(), 0.5);
    }

    #[test]
    fn rates() {
        let ten = "a b c d e f g h i j";
        assert!((speech_rate_wpm(ten, &silence(16000 * 60)).unwrap() - 10.0).abs() < 1e-12);
        assert!((speech_rate_wpm(ten, &silence(16000 * 30)).unwrap() - 20.0).abs() < 1e-12);
        assert!(speech_rate_wpm("  ", &silence(100)).is_err());
    }
}
