import warnings

import numpy as np
import pytest

from cardiorisk.signal import SynthEcgSpec, bandpass_filter, synth_ecg


@pytest.fixture(autouse=True)
def _quiet_expected_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        yield


@pytest.fixture
def clean_ecg():
    """Noiseless 30 s ECG at 200 Hz with its ground-truth R indices."""
    spec = SynthEcgSpec(rr_series_ms=(800.0,) * 38, fs=200.0, seed=0)
    record, truth = synth_ecg(spec)
    return record, truth


@pytest.fixture
def filtered_ecg(clean_ecg):
    record, truth = clean_ecg
    return bandpass_filter(record), truth


def sine_record(freq, fs=200.0, seconds=30.0, amp=1.0):
    from cardiorisk.signal import EcgRecord

    t = np.arange(int(fs * seconds)) / fs
    return EcgRecord(samples=amp * np.sin(2 * np.pi * freq * t), fs=fs)


def locked_amplitude(samples, fs, freq):
    """Lock-in amplitude of the component at freq over the middle of the record."""
    n = samples.size
    mid = slice(n // 6, n - n // 6)
    t = np.arange(n)[mid] / fs
    c = np.cos(2 * np.pi * freq * t)
    s = np.sin(2 * np.pi * freq * t)
    return 2.0 * np.hypot(np.dot(samples[mid], c), np.dot(samples[mid], s)) / t.size
