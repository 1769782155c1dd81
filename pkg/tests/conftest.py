import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nirstress.signal_model import (
    Block,
    BlockSchedule,
    ChannelSeries,
    Level,
    Recording,
)


@pytest.fixture(scope="session")
def small_schedule() -> BlockSchedule:
    """Six-block schedule (3 control + 3 stress): 3000 samples at 10 Hz."""
    return BlockSchedule(
        tuple(Block(Level.CONTROL, 20.0, 30.0) for _ in range(3))
        + tuple(Block(Level.STRESS, 20.0, 30.0) for _ in range(3))
    )


def make_recording(n_channels=4, n_samples=3000, fs=10.0, seed=0, pid="p00"):
    rng = np.random.default_rng(seed)
    channels = tuple(
        ChannelSeries(rng.normal(0, 1, n_samples), rng.normal(0, 1, n_samples))
        for _ in range(n_channels)
    )
    return Recording(participant_id=pid, sampling_rate_hz=fs, channels=channels)


@pytest.fixture()
def noise_recording() -> Recording:
    return make_recording()
