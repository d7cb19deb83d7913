"""Test sqpcsim argument parsing."""
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

import math

import pytest

from sqpcsim.sqpcsim import _parse_args


def _write_config(tmpdir):
    cfg_file = str(tmpdir.mkdir("config_file").join("config.cfg"))
    with open(cfg_file, "w") as f:
        f.write(
            """[Defaults]
        n=4
        theta=0.5
        log-level=CRITICAL"""
        )
    return cfg_file


def test_defaults():
    """Test default parameters."""
    args = _parse_args(["theorem1"])
    assert "theorem1" == args.command
    assert args.target is None
    assert "INFO" == args.log_level
    assert 8 == args.n
    assert math.pi / 8 == args.theta
    assert args.trials is None
    assert args.seed is None
    assert args.out is None
    assert not args.quiet
    assert not args.transcript
    assert 1 == args.workers


def test_no_config_file():
    """Test command line args are parsed."""
    args = _parse_args(
        [
            "run",
            "scenario.json",
            "--log-level=CRITICAL",
            "--trials=10",
            "--seed=3",
            "--out=report.json",
            "--quiet",
            "--transcript",
            "--workers=2",
        ]
    )

    assert "run" == args.command
    assert "scenario.json" == args.target
    assert "CRITICAL" == args.log_level
    assert 10 == args.trials
    assert 3 == args.seed
    assert "report.json" == args.out
    assert args.quiet
    assert args.transcript
    assert 2 == args.workers


def test_config_file(tmpdir):
    """Test config file args are parsed."""
    args = _parse_args(["efficiency", "sqpc2", "-c={}".format(_write_config(tmpdir))])

    assert "efficiency" == args.command
    assert "sqpc2" == args.target
    assert 4 == args.n
    assert 0.5 == args.theta
    assert "CRITICAL" == args.log_level
    assert args.trials is None


def test_config_file_and_override(tmpdir):
    """Test command line args override config file args."""
    args = _parse_args(
        ["efficiency", "sqka", "-c={}".format(_write_config(tmpdir)), "--n=6"]
    )

    assert 6 == args.n
    assert "CRITICAL" == args.log_level


@pytest.mark.parametrize(
    "argv",
    [
        ["bogus"],
        ["run"],
        ["efficiency"],
        ["efficiency", "sqs"],
        ["theorem1", "extra"],
        ["theorem1", "--seed=-1"],
        ["theorem1", "--trials=0"],
        ["efficiency", "sqpc2", "--n=0"],
    ],
)
def test_usage_errors(argv, capsys):
    """Test usage errors exit with status 1."""
    with pytest.raises(SystemExit) as e:
        _parse_args(argv)
    assert e.value.code == 1
    assert "error" in capsys.readouterr().err
