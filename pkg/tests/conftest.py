import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fleam import detection, nn, traffic, unsw_synth  # noqa: E402

CRITERIA = []


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def unsw_small(tmp_path_factory):
    """Synthetic 6k-row UNSW-layout CSV."""
    path = tmp_path_factory.mktemp("unsw") / "small.csv"
    unsw_synth.write_csv(path, 6000, seed=3)
    return path


@pytest.fixture(scope="session")
def unsw_50k(tmp_path_factory):
    """Real data when FLEAM_UNSW_CSV points at a UNSW-NB15 CSV, otherwise synthetic 50k rows."""
    real = os.environ.get("FLEAM_UNSW_CSV")
    if real:
        return Path(real)
    path = tmp_path_factory.mktemp("unsw") / "synth50k.csv"
    unsw_synth.write_csv(path, 50000, seed=0)
    return path


@pytest.fixture(scope="session")
def detector():
    det = detection.train_symbol_model(
        traffic.benign_packets(20000, seed=11),
        config=nn.TrainConfig(learning_rate=0.1, batch_size=64, epochs=5, seed=0),
    )
    det.fit_baseline(traffic.benign_windows(300, seed=12), q=0.05, gamma=0.2)
    return det
