"""Test sqpcsim from end to end."""
#   Copyright 2018 Intentionet
#   Copyright 2026 The sqpcsim developers
#
#   Licensed under the Apache License, Version 2.0 (the "License");
#   you may not use this file except in compliance with the License.
#   You may obtain a copy of the License at
#
#       http://www.apache.org/licenses/LICENSE-2.0
#
#   Unless required by applicable law or agreed to in writing, software
#   distributed under the License is distributed on an "AS IS" BASIS,
#   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#   See the License for the specific language governing permissions and
#   limitations under the License.

import json

import pytest
from testfixtures import LogCapture

from sqpcsim import __version__
from sqpcsim.sqpcsim import main

SCENARIO = {
    "schema_version": 1,
    "protocol": "sqpc2",
    "n": 4,
    "policy": "balanced",
    "secrets": {"m_a": [1, 0, 1, 1], "m_b": [1, 0, 0, 1]},
    "trials": 5,
    "seed": 2024,
}


def write_scenario(tmpdir, document, name="scenario.json"):
    """Write a scenario document and return its path."""
    path = tmpdir.join(name)
    path.write(json.dumps(document))
    return str(path)


def run_test(scenario_path, report_path, args=()):
    """Run sqpcsim on a scenario and return the parsed report."""
    main(["run", scenario_path, "-o", report_path] + list(args))
    with open(report_path) as f_in:
        return json.load(f_in)


def test_end_to_end(tmpdir):
    """Test sqpcsim main with a comparison scenario of unequal secrets."""
    scenario = write_scenario(tmpdir, SCENARIO)
    report = run_test(scenario, str(tmpdir.join("report.json")), ["--transcript"])

    assert report["schema_version"] == 1
    assert report["result"]["verdict"] == "unequal"
    assert report["result"]["r_bits"] == [0, 0, 1, 0]
    assert report["ledger"] == {
        "type": "ResourceLedger",
        "c": 4,
        "q": 96,
        "b": 9,
        "regenerated": 32,
    }
    assert report["detection"]["trials"] == 5
    assert report["detection"]["detections"] == 0
    assert report["transcript"]["events"][0]["kind"] == "preparation"


def test_end_to_end_is_deterministic(tmpdir):
    """Test two runs of one scenario give byte-identical reports."""
    scenario = write_scenario(tmpdir, dict(SCENARIO, policy="random", oversample=2.0))
    outputs = []
    for name in ("first.json", "second.json"):
        path = str(tmpdir.join(name))
        main(["run", scenario, "-o", path, "--transcript"])
        with open(path, "rb") as f_in:
            outputs.append(f_in.read())
    assert outputs[0] == outputs[1]


def test_end_to_end_overrides(tmpdir):
    """Test --trials and --seed override the scenario and output_path is honoured."""
    report_path = str(tmpdir.join("from_scenario.json"))
    scenario = write_scenario(tmpdir, dict(SCENARIO, output_path=report_path))
    main(["run", scenario, "--trials=3", "--seed=9"])
    with open(report_path) as f_in:
        report = json.load(f_in)
    assert report["config"]["trials"] == 3
    assert report["config"]["seed"] == 9


def test_efficiency(capsys):
    """Test the efficiency command prints its report."""
    main(["efficiency", "sqpc2", "--n=4", "--quiet"])
    report = json.loads(capsys.readouterr().out)
    assert report["efficiency"]["eta"] == "4/105"
    assert report["efficiency"]["formula_eta"] == "4/105"
    assert len(report["comparison"]) == 6


def test_theorem1(tmpdir):
    """Test the entangle-measure command at theta = 0."""
    path = str(tmpdir.join("theorem1.json"))
    main(["theorem1", "--theta=0", "--trials=40", "-o", path])
    with open(path) as f_in:
        report = json.load(f_in)
    assert report["report"]["detection_rate"] == 0


def test_invalid_scenario(tmpdir):
    """Test an invalid scenario logs every error and exits with status 1."""
    scenario = write_scenario(tmpdir, {"protocol": "sqar", "n": 4, "colour": "red"})
    with LogCapture() as log_capture:
        with pytest.raises(SystemExit) as e:
            main(["run", scenario])
    assert e.value.code == 1
    log_capture.check_present(
        ("root", "ERROR", "Unknown key 'colour'"),
        ("root", "ERROR", "Missing required field 'N' for protocol sqar"),
    )


def test_missing_scenario(tmpdir):
    """Test an unreadable scenario file exits with status 2."""
    with LogCapture() as log_capture:
        with pytest.raises(SystemExit) as e:
            main(["run", str(tmpdir.join("missing.json"))])
    assert e.value.code == 2
    log_capture.check_present(("root", "ERROR", "Failed to read or write a file"))
    assert isinstance(log_capture.records[-1].exc_info[1], OSError)


def test_version(capsys):
    """Test that version info is printed."""
    with pytest.raises(SystemExit):
        main(["--version"])
    captured = capsys.readouterr()
    assert __version__ in captured.out
