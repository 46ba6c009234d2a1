import json
import os
import signal
import subprocess
import sys
import time
from pathlib import Path

import pytest

from syrlab.census import census
from syrlab.errors import ConfigMismatch
from syrlab.maps import Caps, new_map
from syrlab.sweep import JOURNAL, SweepConfig, run_census, sweep_maps

CAPS = Caps(10**5, 2**128)


def cfg(tmp_path, **kw):
    base = dict(a=3, b=5, N=5000, max_steps=CAPS.max_steps, max_value=CAPS.max_value,
                shard_size=500, checkpoint=str(tmp_path / "ck"))
    base.update(kw)
    return SweepConfig(**base)


@pytest.fixture(scope="module")
def reference():
    return census(new_map(3, 5), 5000, CAPS).to_json()


def test_uninterrupted_matches_census(tmp_path, reference):
    assert run_census(cfg(tmp_path)).to_json() == reference


def test_stop_and_resume(tmp_path, reference):
    c = cfg(tmp_path)
    assert run_census(c, stop_after=3) is None
    lines = (tmp_path / "ck" / JOURNAL).read_text().splitlines()
    assert len(lines) == 4
    seen = []
    rep = run_census(c, on_done=lambda r: seen.append(r.index))
    assert rep.to_json() == reference
    assert len(seen) == 7 and not set(seen) & {json.loads(l)["shard"] for l in lines[1:]}


def test_resume_with_different_workers(tmp_path, reference):
    run_census(cfg(tmp_path), stop_after=2)
    assert run_census(cfg(tmp_path, workers=3)).to_json() == reference


def test_torn_trailing_line(tmp_path, reference):
    c = cfg(tmp_path)
    run_census(c, stop_after=4)
    j = tmp_path / "ck" / JOURNAL
    raw = j.read_bytes()
    last = raw.rstrip(b"\n").rsplit(b"\n", 1)[1]
    j.write_bytes(raw[: len(raw) - len(last) - 1] + last[: len(last) // 2])
    assert run_census(c).to_json() == reference
    # every journal line is intact JSON afterwards
    for line in j.read_text().splitlines():
        json.loads(line)


def test_corrupt_shard_is_recomputed(tmp_path, reference):
    c = cfg(tmp_path)
    run_census(c, stop_after=3)
    victim = sorted((tmp_path / "ck").glob("shard_*.npz"))[0]
    victim.write_bytes(b"garbage")
    recomputed = []
    assert run_census(c, on_done=lambda r: recomputed.append(r.index)).to_json() == reference
    assert int(victim.stem.split("_")[1]) in recomputed


def test_config_mismatch(tmp_path):
    run_census(cfg(tmp_path), stop_after=1)
    for change in (dict(N=6000), dict(b=1), dict(shard_size=250), dict(max_steps=10)):
        with pytest.raises(ConfigMismatch):
            run_census(cfg(tmp_path, **change))


def test_config_identity_ignores_runtime_knobs(tmp_path):
    assert cfg(tmp_path).hash() == cfg(tmp_path, workers=8, checkpoint=None, format="csv").hash()


def test_bad_config():
    with pytest.raises(ValueError):
        SweepConfig(3, 1, 10, 10, 10, shard_size=0)
    with pytest.raises(ValueError):
        SweepConfig(3, 1, 10, 10, 10, format="xml")


def test_sweep_maps(tmp_path):
    maps = [new_map(3, 5), new_map(3, -1)]
    s = sweep_maps(maps, 2000, CAPS, tmp_path, shard_size=700)
    assert [(r["a"], r["b"]) for r in s["maps"]] == [(3, 5), (3, -1)]
    assert [o for o, _ in s["maps"][1]["cycles"]] == [1, 5, 17]
    again = sweep_maps(maps, 2000, CAPS, tmp_path, shard_size=700)
    assert again == s
    assert json.loads((tmp_path / "summary.json").read_text()) == s
    assert (tmp_path / "a3_b5.json").read_text() == census(maps[0], 2000, CAPS).to_json()


@pytest.mark.slow
def test_sigkill_and_resume(tmp_path):
    """Kill a real census process mid-run and check the resumed report is byte-identical."""
    args = [sys.executable, "-m", "syrlab", "census", "--a", "3", "--b", "5", "--N", "120000",
            "--shard-size", "4000", "--checkpoint", str(tmp_path / "ck")]
    env = dict(os.environ, SYRLAB_PURE_PYTHON="1")
    ref = subprocess.run(args[:-2] + ["--out", str(tmp_path / "ref.json")], check=True)
    assert ref.returncode == 0
    proc = subprocess.Popen(args + ["--out", str(tmp_path / "r.json")], env=env)
    journal = tmp_path / "ck" / JOURNAL
    deadline = time.time() + 120
    while time.time() < deadline:
        if journal.exists() and len(journal.read_bytes().splitlines()) >= 3:
            break
        time.sleep(0.01)
    proc.send_signal(signal.SIGKILL)
    proc.wait()
    done = len(journal.read_bytes().splitlines()) - 1
    assert 0 < done < 30
    assert not (tmp_path / "r.json").exists()
    subprocess.run(args + ["--out", str(tmp_path / "r.json")], check=True)
    assert (tmp_path / "r.json").read_bytes() == (tmp_path / "ref.json").read_bytes()
