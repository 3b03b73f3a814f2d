import csv

import pytest

from castid import pipeline, simgen
from castid.ingest import load_manifest
from castid.svm import TrainConfig


SMALL_SIM = dict(n_characters=6, n_tracks=150, n_actor_images_mean=20,
                 n_segments=40)

# one line per acceptance criterion, filled by test_acceptance.report
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def small_episode(tmp_path_factory):
    out = tmp_path_factory.mktemp("episode")
    config = simgen.SimConfig(seed=11, **SMALL_SIM)
    return simgen.generate_episode(config, out)


@pytest.fixture(scope="session")
def small_run(small_episode):
    manifest = load_manifest(small_episode.manifest_path)
    state = pipeline.run_all(manifest, pipeline.PipelineConfig(
        train=TrainConfig(lambda_grid=(1e-3,), epochs=100, tolerance=1e-7)))
    return small_episode, state


def read_ground_truth(episode_dir):
    with open(episode_dir / "ground_truth.csv", newline="") as f:
        return {r["track_id"]: r["character"] for r in csv.DictReader(f)}


def read_sim_tracks(episode_dir):
    with open(episode_dir / "sim_tracks.csv", newline="") as f:
        return list(csv.DictReader(f))
