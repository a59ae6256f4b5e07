import os

import pytest

from helpers import synth_rows, write_beth_csv


@pytest.fixture()
def beth_dir(tmp_path):
    """Directory holding a small raw train/test CSV pair."""
    data = tmp_path / "data"
    data.mkdir()
    train = synth_rows(80, seed=11, evil_frac=0.0, sus_frac=0.1)
    test = synth_rows(60, seed=23, evil_frac=0.15, sus_frac=0.2)
    # guarantee both label classes are present in the test split
    test[5]["evil"] = 1
    test[6]["evil"] = 0
    test[7]["sus"] = 1
    test[8]["sus"] = 0
    write_beth_csv(data / "labelled_training_data.csv", train)
    write_beth_csv(data / "labelled_testing_data.csv", test)
    return data


@pytest.fixture()
def real_beth_dir():
    """Path to the full labelled dataset, or a skip when not present."""
    path = os.environ.get("ANOMSTREAM_BETH_DIR")
    if not path:
        pytest.skip("ANOMSTREAM_BETH_DIR not set; full-dataset check skipped")
    for name in ("labelled_training_data.csv", "labelled_testing_data.csv"):
        if not os.path.exists(os.path.join(path, name)):
            pytest.skip(f"{name} missing under ANOMSTREAM_BETH_DIR")
    return path
