from __future__ import annotations

import pytest

from conftest import REPO_ROOT
from qutrit_qrg.config import RunConfig, load_config


def test_repo_default_matches_dataclass():
    cfg = load_config(str(REPO_ROOT / "configs" / "default.yaml"))
    assert cfg == RunConfig()
    assert cfg.depths == [9, 10, 11]


def test_empty_file_gives_defaults(tmp_path):
    p = tmp_path / "empty.yaml"
    p.write_text("", encoding="utf-8")
    assert load_config(str(p)) == RunConfig()


def test_partial_file_and_coercion(tmp_path):
    p = tmp_path / "run.yaml"
    p.write_text("points: '25'\ndepths: 14,15,16\nlog_level: debug\ngnuplot: yes\n", encoding="utf-8")
    cfg = load_config(str(p))
    assert cfg.points == 25
    assert cfg.depths == [14, 15, 16]
    assert cfg.log_level == "DEBUG"
    assert cfg.gnuplot is True
    assert cfg.J == 1.0


@pytest.mark.parametrize("text", [
    "colour: blue\n",
    "points: 1\n",
    "J: 0\n",
    "delta_min: 3\ndelta_max: 2\n",
    "depths: []\n",
    "log_level: LOUD\n",
    "refine_tol: -1\n",
    "gnuplot: maybe\n",
    "- just\n- a list\n",
    "points: [1, 2\n",
])
def test_bad_files_rejected(tmp_path, text):
    p = tmp_path / "bad.yaml"
    p.write_text(text, encoding="utf-8")
    with pytest.raises(ValueError):
        load_config(str(p))


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config(str(tmp_path / "nope.yaml"))


def test_merged_ignores_none_and_wins_over_file():
    base = RunConfig().merged({"points": 50, "jobs": 4})
    cfg = base.merged({"points": 80, "jobs": None, "depths": "2,3"})
    assert cfg.points == 80
    assert cfg.jobs == 4
    assert cfg.depths == [2, 3]
    assert cfg.as_dict()["points"] == 80
