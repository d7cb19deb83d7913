"""Parse scenario documents, run them and write machine-readable reports."""
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
import logging
import sys
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .adversary import (
    AttackKind,
    AttackScope,
    AttackSpec,
    controlled_rotation_unitary,
)
from .metrics import (
    EFFICIENCY_FUNCTIONS,
    comparison_table,
    monte_carlo,
    protocol_scenario,
    quota_shortfall_probability,
    random_inputs,
    theorem1_check,
)
from .protocols import (
    HASH_FUNCTIONS,
    MAX_USERS,
    PROTOCOL_NAMES,
    SqpcConfig,
    run_protocol,
)
from .qsim import IDENTITY_2Q, TOLERANCE, InvalidArgument, random_stream, unitarity_residual
from .roles import TP, to_document

SCHEMA_VERSION = 1

_TWO_PARTY = ("sqpc2", "sqka", "sqs")

_KEYS = {
    "schema_version",
    "protocol",
    "n",
    "L",
    "N",
    "secrets",
    "attack",
    "trials",
    "seed",
    "threshold",
    "oversample",
    "policy",
    "hash",
    "compare_pair",
    "output_path",
}

_ATTACK_KEYS = {"kind", "u_e", "u_f", "theta", "target_key", "insider", "scope"}

_TWO_PARTY_SECRETS = {
    "sqpc2": ("m_a", "m_b"),
    "sqka": ("m_a", "m_b", "m_t"),
    "sqs": ("ma", "mb"),
}


class ConfigError(ValueError):
    """A scenario document failed validation; `errors` lists every problem found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super(ConfigError, self).__init__(
            "Invalid scenario: {}".format("; ".join(self.errors))
        )


@dataclass(frozen=True)
class ScenarioConfig(object):
    """A validated scenario; `attack` is the normalized attack descriptor."""

    protocol: str
    n: int
    L: int = 2
    N: int = None
    secrets: object = "random"
    attack: dict = field(default_factory=lambda: {"kind": "honest"})
    trials: int = 1
    seed: int = 0
    threshold: float = 0.0
    oversample: float = 1.0
    policy: str = "random"
    hash: str = "sha256"
    compare_pair: tuple = (1, 2)
    output_path: str = None

    def sqpc_config(self):
        """Return the protocol parameters of this scenario."""
        return SqpcConfig(
            self.n, self.L, self.seed, self.threshold, self.oversample, self.policy
        )

    def attack_spec(self):
        """Return the AttackSpec described by `attack`."""
        return attack_spec(self.attack)


def _matrix_entries(matrix):
    return np.array(
        [
            [complex(e[0], e[1]) if isinstance(e, (list, tuple)) else complex(e) for e in row]
            for row in matrix
        ],
        dtype=np.complex128,
    )


def attack_spec(descriptor):
    """Build an AttackSpec from a normalized attack descriptor."""
    kind = AttackKind(descriptor["kind"])
    scope = descriptor.get("scope", {})
    users = scope.get("users")
    options = {
        "scope": AttackScope(
            scope.get("forward", True),
            scope.get("return", True),
            None if users is None else tuple(users),
        )
    }
    if kind is AttackKind.ENTANGLE_MEASURE:
        if "theta" in descriptor:
            options["u_e"] = controlled_rotation_unitary(descriptor["theta"])
            options["u_f"] = IDENTITY_2Q
        else:
            options["u_e"] = _matrix_entries(descriptor["u_e"])
            options["u_f"] = _matrix_entries(descriptor["u_f"])
    if kind is AttackKind.DISHONEST_USER:
        options["target_key"] = tuple(descriptor["target_key"])
        options["insider"] = descriptor.get("insider", "A")
    return AttackSpec(kind, **options)


def _is_integer(value):
    return isinstance(value, int) and not isinstance(value, bool)


def _integer(document, key, errors, default=None, minimum=None, maximum=None):
    if key not in document:
        return default
    value = document[key]
    if not _is_integer(value):
        errors.append("{} must be an integer".format(key))
        return default
    if minimum is not None and value < minimum:
        errors.append("{} must be at least {}".format(key, minimum))
    if maximum is not None and value > maximum:
        errors.append("{} must be at most {}".format(key, maximum))
    return value


def _real(document, key, errors, default, minimum, below=None):
    value = document.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        errors.append("{} must be a number".format(key))
        return default
    if value < minimum or (below is not None and value >= below):
        bound = "[{}, {})".format(minimum, below) if below is not None else ">= {}".format(minimum)
        errors.append("{} must be in {}".format(key, bound))
    return float(value)


def _bit_list(value, name, n, errors):
    if not isinstance(value, list) or any(b not in (0, 1) or isinstance(b, bool) for b in value):
        errors.append("{} must be a list of 0/1 bits".format(name))
        return None
    if len(value) != n:
        errors.append("{} must have length {}".format(name, n))
    return list(value)


def _matrix(value, name, errors):
    try:
        entries = _matrix_entries(value)
    except (TypeError, ValueError, IndexError):
        errors.append("{} must be rows of numbers or [re, im] pairs".format(name))
        return None
    if entries.shape != (4, 4):
        errors.append("{} must be a 4x4 matrix".format(name))
        return None
    residual = unitarity_residual(entries)
    if residual > TOLERANCE:
        errors.append("{} is not unitary (residual {:.3g})".format(name, residual))
        return None
    return [[[e.real, e.imag] for e in row] for row in entries]


def _attack(value, n, errors):
    if isinstance(value, str):
        value = {"kind": value}
    if not isinstance(value, dict):
        errors.append("attack must be a kind name or an object")
        return {"kind": "honest"}
    for key in sorted(set(value) - _ATTACK_KEYS):
        errors.append("Unknown attack key {!r}".format(key))
    try:
        kind = AttackKind(value.get("kind"))
    except ValueError:
        errors.append("Unknown attack kind {!r}".format(value.get("kind")))
        return {"kind": "honest"}
    descriptor = {"kind": kind.value}
    if kind is AttackKind.ENTANGLE_MEASURE:
        if "theta" in value:
            theta = value["theta"]
            if isinstance(theta, bool) or not isinstance(theta, (int, float)):
                errors.append("attack.theta must be a number")
            else:
                descriptor["theta"] = float(theta)
        else:
            for name in ("u_e", "u_f"):
                if name not in value:
                    errors.append("entangle_measure needs attack.{} or attack.theta".format(name))
                    continue
                matrix = _matrix(value[name], "attack." + name, errors)
                if matrix is not None:
                    descriptor[name] = matrix
    if kind is AttackKind.DISHONEST_USER:
        if "target_key" not in value:
            errors.append("dishonest_user needs attack.target_key")
        else:
            descriptor["target_key"] = _bit_list(value["target_key"], "attack.target_key", n, errors)
        insider = value.get("insider", "A")
        if insider not in ("A", "B", TP):
            errors.append("attack.insider must be A, B or TP")
        descriptor["insider"] = insider
    scope = value.get("scope")
    if scope is not None:
        if not isinstance(scope, dict) or set(scope) - {"forward", "return", "users"}:
            errors.append("attack.scope accepts only forward, return and users")
        else:
            descriptor["scope"] = dict(scope)
    return descriptor


def _secrets(value, protocol, n, L, N, errors):
    if value == "random":
        return value
    if not isinstance(value, dict):
        errors.append('secrets must be "random" or an object')
        return "random"
    if protocol in _TWO_PARTY_SECRETS:
        expected = _TWO_PARTY_SECRETS[protocol]
    else:
        expected = ["C{}".format(i + 1) for i in range(L)]
    missing = [k for k in expected if k not in value]
    unknown = sorted(set(value) - set(expected))
    for key in missing:
        errors.append("secrets.{} is missing".format(key))
    for key in unknown:
        errors.append("Unknown secrets key {!r}".format(key))
    for key in expected:
        if key not in value:
            continue
        item = value[key]
        if protocol in ("sqpc2", "sqka", "sqpc_multi"):
            _bit_list(item, "secrets." + key, n, errors)
        elif not _is_integer(item):
            errors.append("secrets.{} must be an integer".format(key))
        elif protocol == "sqar" and N is not None and not 1 <= item <= N:
            errors.append("secrets.{} must be in 1..{}".format(key, N))
    return dict(value)


def parse_config(document):
    """Validate a scenario document and return a ScenarioConfig.

    Every problem found is collected; a ConfigError carrying all of them is
    raised if there is any.
    """
    if not isinstance(document, dict):
        raise ConfigError(["Scenario document must be an object"])
    errors = ["Unknown key {!r}".format(k) for k in sorted(set(document) - _KEYS)]
    version = document.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        errors.append("Unsupported schema_version {!r}".format(version))

    protocol = document.get("protocol")
    if protocol is None:
        errors.append("Missing required field 'protocol'")
    elif protocol not in PROTOCOL_NAMES:
        errors.append("Unknown protocol {!r}".format(protocol))
    if "n" not in document:
        errors.append("Missing required field 'n'")
    n = _integer(document, "n", errors, minimum=1) or 1

    two_party = protocol in _TWO_PARTY
    L = _integer(document, "L", errors, 2 if two_party else 3, 2, MAX_USERS)
    if L is not None and protocol is not None:
        if two_party and L != 2:
            errors.append("{} needs L = 2".format(protocol))
        if protocol in PROTOCOL_NAMES and not two_party and L <= 2:
            errors.append("{} needs L > 2".format(protocol))

    N = None
    if protocol == "sqar":
        if "N" not in document:
            errors.append("Missing required field 'N' for protocol sqar")
        else:
            N = _integer(document, "N", errors, minimum=1)
    elif "N" in document:
        logging.warning("Ignoring N, which only applies to sqar")

    compare_pair = (1, 2)
    if "compare_pair" in document:
        if protocol != "sqpc_multi":
            logging.warning("Ignoring compare_pair, which only applies to sqpc_multi")
        pair = document["compare_pair"]
        if (
            not isinstance(pair, list)
            or len(pair) != 2
            or not all(_is_integer(p) and 1 <= p <= (L or 2) for p in pair)
            or pair[0] == pair[1]
        ):
            errors.append("compare_pair must be two distinct users in 1..L")
        else:
            compare_pair = tuple(pair)

    policy = document.get("policy", "random")
    if policy not in ("random", "balanced"):
        errors.append("policy must be random or balanced")
    hash_name = document.get("hash", "sha256")
    if hash_name not in HASH_FUNCTIONS:
        errors.append("Unknown hash {!r}".format(hash_name))
    output_path = document.get("output_path")
    if output_path is not None and not isinstance(output_path, str):
        errors.append("output_path must be a string")

    config = ScenarioConfig(
        protocol=protocol,
        n=n,
        L=L,
        N=N,
        secrets=_secrets(document.get("secrets", "random"), protocol, n, L, N, errors),
        attack=_attack(document.get("attack", "honest"), n, errors),
        trials=_integer(document, "trials", errors, 1, 1),
        seed=_integer(document, "seed", errors, 0, 0, 2 ** 64 - 1),
        threshold=_real(document, "threshold", errors, 0.0, 0.0, 1.0),
        oversample=_real(document, "oversample", errors, 1.0, 1.0),
        policy=policy,
        hash=hash_name,
        compare_pair=compare_pair,
        output_path=output_path,
    )
    if not errors:
        try:
            config.attack_spec()
        except InvalidArgument as e:
            errors.append("attack: {}".format(e))
    if errors:
        raise ConfigError(errors)
    return config


def serialize_config(config):
    """Return the scenario document describing `config`."""
    document = {
        "schema_version": SCHEMA_VERSION,
        "protocol": config.protocol,
        "n": config.n,
        "L": config.L,
        "secrets": config.secrets,
        "attack": config.attack,
        "trials": config.trials,
        "seed": config.seed,
        "threshold": config.threshold,
        "oversample": config.oversample,
        "policy": config.policy,
        "hash": config.hash,
    }
    if config.N is not None:
        document["N"] = config.N
    if config.protocol == "sqpc_multi":
        document["compare_pair"] = list(config.compare_pair)
    if config.output_path is not None:
        document["output_path"] = config.output_path
    return document


def load_config(path):
    """Read and validate a scenario file; OSError propagates."""
    logging.debug("Reading scenario %s", path)
    with open(path, "r", encoding="utf-8") as f_in:
        try:
            document = json.load(f_in)
        except ValueError as e:
            raise ConfigError(["Malformed scenario document: {}".format(e)])
    return parse_config(document)


def scenario_inputs(config, sqpc_config):
    """Return the protocol inputs: literal secrets, or random ones from the scenario seed."""
    if config.secrets == "random":
        inputs = random_inputs(
            config.protocol, sqpc_config, random_stream(config.seed, 3), config.N
        )
    elif config.protocol in _TWO_PARTY_SECRETS:
        inputs = dict(config.secrets)
    elif config.protocol == "sqar":
        inputs = {"data": dict(config.secrets), "N": config.N}
    else:
        inputs = {"secrets": dict(config.secrets)}
    if config.protocol == "sqpc_multi":
        inputs["compare_pair"] = config.compare_pair
    return inputs


def _efficiency(protocol, n, ledger):
    function = EFFICIENCY_FUNCTIONS.get(protocol)
    if function is not None:
        return to_document(function(n, ledger))
    return {
        "c": ledger.c,
        "q": ledger.q,
        "b": ledger.b,
        "eta": to_document(Fraction(ledger.c, ledger.q + ledger.b)),
    }


def run_scenario(config, transcript=False, workers=1):
    """Run a scenario and return its report document.

    A protocol abort is reported in the result; it is not an error.
    """
    logging.info("Running %s scenario with seed %d", config.protocol, config.seed)
    sqpc_config = config.sqpc_config()
    attack = config.attack_spec()
    outcome = run_protocol(
        config.protocol,
        sqpc_config,
        scenario_inputs(config, sqpc_config),
        attack,
        config.hash,
    )
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "run",
        "config": serialize_config(config),
        "result": to_document(outcome.result),
        "ledger": to_document(outcome.ledger),
        "efficiency": _efficiency(config.protocol, config.n, outcome.ledger),
    }
    if config.trials > 1:
        scenario = protocol_scenario(
            config.protocol,
            attack,
            n=config.n,
            L=config.L,
            N=config.N,
            policy=config.policy,
            oversample=config.oversample,
            threshold=config.threshold,
            hash_function=config.hash,
        )
        stats = monte_carlo(scenario, config.trials, config.seed, workers)
        report["detection"] = to_document(stats)
        if config.policy == "random":
            report["honest_quota_shortfall"] = quota_shortfall_probability(
                config.protocol, config.n, config.L, config.oversample
            )
    if transcript:
        report["transcript"] = outcome.transcript.to_dict()
    logging.info("Finished %s scenario", config.protocol)
    return report


def run_efficiency(protocol, n):
    """Return the efficiency report: measured ledger, closed form and comparison table."""
    try:
        function = EFFICIENCY_FUNCTIONS[protocol]
    except KeyError:
        raise InvalidArgument("No efficiency accounting for {!r}".format(protocol))
    return {
        "schema_version": SCHEMA_VERSION,
        "command": "efficiency",
        "protocol": protocol,
        "n": n,
        "efficiency": to_document(function(n)),
        "comparison": to_document(comparison_table(protocol, n)),
    }


def run_theorem1(theta, trials, seed, workers=1):
    """Return the entangle-measure report for the controlled-rotation entangler at `theta`."""
    report = theorem1_check(
        controlled_rotation_unitary(theta), IDENTITY_2Q, trials, seed, workers
    )
    return {
        "schema_version": SCHEMA_VERSION,
        "command": "theorem1",
        "theta": theta,
        "trials": trials,
        "seed": seed,
        "report": to_document(report),
    }


def write_report(report, output_path=None):
    """Write a report as sorted JSON to output_path, or stdout if None."""
    if output_path is None:
        json.dump(report, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
        return
    with open(output_path, "w", encoding="utf-8") as f_out:
        json.dump(report, f_out, indent=2, sort_keys=True)
        f_out.write("\n")
    logging.info("Wrote report to %s", output_path)
