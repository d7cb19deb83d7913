"""Monte Carlo detection statistics, probe-independence checks and qubit efficiency."""
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

import logging
import math
from collections import namedtuple
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np
from scipy.stats import binom, norm

from .adversary import AttackKind, AttackSpec, build_hooks, build_tp_strategy
from .default_comparison_data import default_comparison_rows, default_own_rows
from .protocols import (
    AbortReason,
    SqkaResult,
    SqpcConfig,
    run_protocol,
    run_sqka,
    run_sqpc2,
    sift_cases,
)
from .qsim import (
    TOLERANCE,
    BellOutcome,
    GhzOutcome,
    InvalidArgument,
    apply_unitary,
    derive_seed,
    new_basis_state,
    new_ghz_plus,
    partial_trace,
    project_z,
    random_stream,
    tensor,
    trace_distance,
    z_probabilities,
)
from .roles import (
    Z_BASIS,
    ActionDisclosure,
    BellResult,
    Decoy,
    EntangledGroup,
    FlightQubit,
    PartyAction,
    SessionRegister,
    SessionTranscript,
    channel_forward,
    channel_return,
    classical_receive,
    scripted_policy,
    tp_measure_returned,
)

TrialOutcome = namedtuple("TrialOutcome", ["detected", "quota_unmet"])

_MEASURE = PartyAction.MEASURE
_REFLECT = PartyAction.REFLECT


@dataclass(frozen=True)
class DetectionStats(object):
    """Detection counts over a batch of trials with a 95% Wilson interval."""

    trials: int
    detections: int
    quota_unmet: int
    rate: float
    wilson_ci_95: tuple


def wilson_interval(successes, trials, confidence=0.95):
    """Return the Wilson score interval (low, high) for a binomial proportion."""
    if trials < 1:
        raise InvalidArgument("Wilson interval needs at least one trial")
    z = norm.ppf(0.5 + confidence / 2)
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z / denom * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials))
    # the interval must hold p; at p = 0 or 1 rounding can push a bound past it
    return (float(min(p, max(0.0, centre - half))), float(max(p, min(1.0, centre + half))))


def monte_carlo(scenario, trials, master_seed, workers=1):
    """Run `scenario(seed)` for seeded trials and return their DetectionStats.

    Trial i uses the seed derived from (master_seed, i), so results do not
    depend on the number of workers.
    """
    trials = int(trials)
    if trials < 1:
        raise InvalidArgument("trials must be at least 1")
    seeds = [derive_seed(master_seed, i) for i in range(trials)]
    logging.debug("Running %d trials of %r", trials, scenario)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunk = max(1, trials // (4 * workers))
            outcomes = list(pool.map(scenario, seeds, chunksize=chunk))
    else:
        outcomes = [scenario(seed) for seed in seeds]
    detections = sum(1 for o in outcomes if o.detected)
    quota_unmet = sum(1 for o in outcomes if o.quota_unmet)
    return DetectionStats(
        trials,
        detections,
        quota_unmet,
        detections / trials,
        wilson_interval(detections, trials),
    )


def _expected_reflect(size):
    return BellOutcome.PHI_PLUS if size == 2 else GhzOutcome.plus(size)


@dataclass(frozen=True)
class GroupScenario(object):
    """One entangled group through the channel with fixed user actions.

    All-Reflect groups count as detected when TP announces anything but the
    honest result; all-Measure groups when the users' bits disagree.
    """

    attack: AttackSpec
    actions: tuple = (_REFLECT, _REFLECT)

    def __call__(self, seed):
        size = len(self.actions)
        transcript = SessionTranscript()
        hooks = build_hooks(self.attack)
        hooks.start(random_stream(seed, 1), transcript)
        tp = build_tp_strategy(self.attack)
        tp_rng = random_stream(seed, 0)
        tags = [EntangledGroup(0, slot) for slot in range(size)]
        register = SessionRegister(tp.prepare_group(size, tp_rng), tags)
        policy = scripted_policy([self.actions])
        flight = [
            channel_forward(FlightQubit(register, tag, "C{}".format(tag.slot + 1)), hooks)
            for tag in tags
        ]
        bits = []
        for slot, q in enumerate(flight):
            _, outcome, flight[slot] = classical_receive(q, policy, random_stream(seed, 2, slot))
            if outcome is not None:
                bits.append(outcome.bit)
        returned = [channel_return(q, hooks) for q in flight]
        announcement = tp.measure_group(returned, tp_rng)
        if all(a is _REFLECT for a in self.actions):
            detected = announcement.payload.outcome != _expected_reflect(size)
        elif all(a is _MEASURE for a in self.actions):
            detected = len(set(bits)) > 1
        else:
            detected = False
        return TrialOutcome(bool(detected), False)


def bell_pair_scenario(attack, actions=(_REFLECT, _REFLECT)):
    """Return the single Bell-pair scenario for monte_carlo."""
    if len(actions) != 2:
        raise InvalidArgument("A Bell pair has exactly two users")
    return GroupScenario(attack, tuple(actions))


@dataclass(frozen=True)
class DecoyScenario(object):
    """One decoy through the channel; detected when a check on it would fail."""

    attack: AttackSpec
    action: PartyAction = _REFLECT

    def __call__(self, seed):
        transcript = SessionTranscript()
        hooks = build_hooks(self.attack)
        hooks.start(random_stream(seed, 1), transcript)
        tp_rng = random_stream(seed, 0)
        bit = int(tp_rng.integers(2))
        tag = Decoy("C1", 0, bit)
        q = FlightQubit(SessionRegister(new_basis_state([bit]), [tag]), tag, "C1")
        q = channel_forward(q, hooks)
        policy = scripted_policy(decoys={"C1": [self.action]})
        _, outcome, q = classical_receive(q, policy, random_stream(seed, 2, 0))
        q = channel_return(q, hooks)
        tp_bit = tp_measure_returned([q], Z_BASIS, tp_rng).bit
        detected = tp_bit != bit or (outcome is not None and outcome.bit != bit)
        return TrialOutcome(bool(detected), False)


def decoy_scenario(attack, action=_REFLECT):
    """Return the single-decoy scenario for monte_carlo."""
    return DecoyScenario(attack, action)


def random_inputs(protocol, config, rng, N=None):
    """Draw secrets for one run; comparisons get equal secrets half the time."""

    def bits():
        return [int(b) for b in rng.integers(2, size=config.n)]

    def integer():
        return int(rng.integers(-(2 ** 31), 2 ** 31))

    users = ["C{}".format(i + 1) for i in range(config.L)]
    if protocol == "sqpc2":
        m_a = bits()
        return {"m_a": m_a, "m_b": list(m_a) if rng.integers(2) else bits()}
    if protocol == "sqpc_multi":
        secrets = {u: bits() for u in users}
        if rng.integers(2):
            secrets["C2"] = list(secrets["C1"])
        return {"secrets": secrets, "compare_pair": (1, 2)}
    if protocol == "sqka":
        return {"m_a": bits(), "m_b": bits(), "m_t": bits()}
    if protocol == "sqs":
        return {"ma": integer(), "mb": integer()}
    if protocol == "sqs_multi":
        return {"secrets": {u: integer() for u in users}}
    if protocol == "sqar":
        if N is None:
            raise InvalidArgument("sqar needs N")
        return {"data": {u: int(rng.integers(1, N + 1)) for u in users}, "N": N}
    raise InvalidArgument("Unknown protocol {!r}".format(protocol))


def trial_outcome(result):
    """Classify a protocol result; a rejected key-agreement reveal counts as detected."""
    abort = result.abort
    if abort is not None:
        return TrialOutcome(
            abort.reason is AbortReason.CHECK_FAILED,
            abort.reason is AbortReason.QUOTA_UNMET,
        )
    if isinstance(result, SqkaResult):
        return TrialOutcome(not all(result.accept.values()), False)
    return TrialOutcome(False, False)


@dataclass(frozen=True)
class ProtocolScenario(object):
    """A complete protocol run with random secrets."""

    protocol: str
    attack: AttackSpec = field(default_factory=AttackSpec)
    n: int = 8
    L: int = 2
    N: int = None
    policy: str = "random"
    oversample: float = 1.0
    threshold: float = 0.0
    hash_function: str = "sha256"

    def __call__(self, seed):
        config = SqpcConfig(self.n, self.L, seed, self.threshold, self.oversample, self.policy)
        inputs = random_inputs(self.protocol, config, random_stream(seed, 3), self.N)
        outcome = run_protocol(self.protocol, config, inputs, self.attack, self.hash_function)
        return trial_outcome(outcome.result)


def protocol_scenario(protocol, attack=None, **options):
    """Return the full-protocol scenario for monte_carlo."""
    return ProtocolScenario(protocol, AttackSpec() if attack is None else attack, **options)


def case1_phi_minus_frequency(transcript):
    """Return the PhiMinus share of TP's announcements on both-Measure pairs.

    Honest runs give about 1/2; an intercept-resend adversary drives it to 0.
    Returns None when the transcript has no both-Measure pairs.
    """
    disclosures = [
        d for d in transcript.payloads_of(ActionDisclosure) if d.sequence == "groups"
    ]
    if len(disclosures) < 2:
        return None
    results = {r.position: r.outcome for r in transcript.payloads_of(BellResult)}
    announced = [results[p] for p in disclosures[0].positions]
    case1, _, _ = sift_cases(disclosures[0].actions, disclosures[1].actions, announced)
    if not case1:
        return None
    minus = sum(1 for p in case1 if announced[p] is BellOutcome.PHI_MINUS)
    return minus / len(case1)


def _branches(state, qubits):
    """Return every state the users can leave behind by Z-measuring `qubits`."""
    states = [state]
    for qubit in qubits:
        states = [
            project_z(s, qubit, bit)
            for s in states
            for bit in (0, 1)
            if z_probabilities(s, qubit)[bit] > TOLERANCE
        ]
    return states


def probe_states(u_e, u_f):
    """Return Eve's final probe states for every branch of the four checked cases.

    Decoys |0> and |1> and one half of a Bell pair, each either reflected or
    measured; measured branches are split by the users' outcomes.
    """
    states = []
    for bit in (0, 1):
        for measured in ((), (0,)):
            start = apply_unitary(new_basis_state([bit, 0]), u_e, [0, 1])
            for branch in _branches(start, measured):
                final = apply_unitary(branch, u_f, [0, 1])
                states.append(partial_trace(final, [1]))
    # qubits 0 and 1 are the pair, 2 and 3 the probes on them
    for measured in ((), (0, 1)):
        start = tensor(new_ghz_plus(2), new_basis_state([0, 0]))
        start = apply_unitary(apply_unitary(start, u_e, [0, 2]), u_e, [1, 3])
        for branch in _branches(start, measured):
            final = apply_unitary(apply_unitary(branch, u_f, [0, 2]), u_f, [1, 3])
            states.append(partial_trace(final, [2]))
    return states


def max_probe_trace_distance(u_e, u_f):
    """Return the largest trace distance between any two probe branch states."""
    states = probe_states(u_e, u_f)
    return max(trace_distance(a, b) for a, b in combinations(states, 2))


@dataclass(frozen=True)
class Theorem1Report(object):
    """Detection versus information for one entangle-measure attack."""

    detection_rate: float
    max_probe_trace_distance: float
    scenario_rates: dict


def theorem1_check(u_e, u_f, trials, seed, workers=1):
    """Measure how often an entangle-measure attack is caught and how much it learns.

    Trials are split evenly over reflected and measured decoys and over
    both-Reflect and both-Measure Bell pairs.
    """
    attack = AttackSpec(AttackKind.ENTANGLE_MEASURE, u_e, u_f)
    scenarios = [
        ("decoy-reflect", decoy_scenario(attack, _REFLECT)),
        ("decoy-measure", decoy_scenario(attack, _MEASURE)),
        ("bell-reflect", bell_pair_scenario(attack, (_REFLECT, _REFLECT))),
        ("bell-measure", bell_pair_scenario(attack, (_MEASURE, _MEASURE))),
    ]
    per_scenario = max(1, int(trials) // len(scenarios))
    rates = {}
    detections = 0
    for index, (name, scenario) in enumerate(scenarios):
        stats = monte_carlo(scenario, per_scenario, derive_seed(seed, index), workers)
        rates[name] = stats.rate
        detections += stats.detections
    distance = max_probe_trace_distance(attack.u_e, attack.u_f)
    logging.debug("Entangle-measure attack: detection %s, probe distance %.3g", rates, distance)
    return Theorem1Report(detections / (per_scenario * len(scenarios)), distance, rates)


@dataclass(frozen=True)
class EfficiencyReport(object):
    """Measured ledger with its exact efficiency next to the closed form."""

    c: int
    q: int
    b: int
    eta: Fraction
    formula_eta: Fraction


def _report(ledger, formula):
    return EfficiencyReport(
        ledger.c, ledger.q, ledger.b, Fraction(ledger.c, ledger.q + ledger.b), formula
    )


def efficiency_sqpc2(n, ledger=None):
    """Return the two-party comparison efficiency, measuring an honest run if no ledger is given."""
    if n < 1:
        raise InvalidArgument("n must be at least 1")
    if ledger is None:
        config = SqpcConfig(n, policy="balanced")
        ledger = run_sqpc2(config, [0] * n, [0] * n).ledger
    return _report(ledger, Fraction(n, 26 * n + 1))


def efficiency_sqka(n=8, ledger=None):
    """Return the key agreement efficiency, measuring an honest run if no ledger is given."""
    if ledger is None:
        config = SqpcConfig(n, policy="balanced")
        ledger = run_sqka(config, [0] * n, [0] * n, [0] * n).ledger
    return _report(ledger, Fraction(1, 36))


EFFICIENCY_FUNCTIONS = {
    "sqpc2": efficiency_sqpc2,
    "sqka": efficiency_sqka,
}


def _all_counts_at_least(trials, categories, p, n):
    """P[each of `categories` outcomes of probability p occurs at least n times in `trials`]."""
    weights = np.zeros(trials + 1)
    weights[trials] = 1.0
    for k in range(categories):
        share = p / (1 - k * p)
        updated = np.zeros(trials + 1)
        for rest in np.nonzero(weights)[0]:
            counts = np.arange(n, rest + 1)
            if counts.size:
                updated[rest - counts] += weights[rest] * binom.pmf(counts, rest, share)
        weights = updated
    return float(weights.sum())


def quota_shortfall_probability(protocol, n, L=2, oversample=1.0):
    """Return the exact probability that an honest fair-coin run ends in QuotaUnmet."""
    config = SqpcConfig(n, L, oversample_factor=oversample)
    if protocol in ("sqpc2", "sqka", "sqs"):
        if L != 2:
            raise InvalidArgument("{} runs with L = 2".format(protocol))
        patterns = 1
    elif protocol in ("sqpc_multi", "sqs_multi"):
        patterns = 1
    elif protocol == "sqar":
        patterns = L
    else:
        raise InvalidArgument("Unknown protocol {!r}".format(protocol))
    keys_ok = _all_counts_at_least(config.group_count, patterns, 2.0 ** -L, n)
    decoys_ok = float(binom.sf(2 * n - 1, config.decoy_count, 0.5))
    return 1 - keys_ok * decoys_ok ** L


_TABLE_FAMILIES = {
    "sqpc2": "sqpc",
    "sqpc_multi": "sqpc",
    "sqpc": "sqpc",
    "sqka": "sqka",
    "sqs": "sqs",
    "sqs_multi": "sqs",
}


def comparison_table(protocol, n=1):
    """Return the comparison rows for a protocol family, this package's row last."""
    try:
        family = _TABLE_FAMILIES[protocol]
    except KeyError:
        raise InvalidArgument("No comparison data for {!r}".format(protocol))
    rows = []
    for label, form, columns in default_comparison_rows[family] + [default_own_rows[family]]:
        eta = None
        if form is not None:
            a, b, c, d = form
            eta = Fraction(a * n + b, c * n + d)
        row = {"protocol": label, "eta": eta}
        row.update(columns)
        rows.append(row)
    return rows
