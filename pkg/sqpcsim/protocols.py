"""Protocol state machines for private comparison, key agreement, summation and ranking."""
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

import hashlib
import logging
import math
from collections import namedtuple
from dataclasses import dataclass, field
from enum import Enum

from .adversary import build_hooks, build_insider, build_tp_strategy
from .qsim import BellOutcome, GhzOutcome, InvalidArgument, new_basis_state, random_stream
from .roles import (
    TP,
    Z_BASIS,
    ActionDisclosure,
    Announcement,
    Ciphertext,
    ComparisonVerdict,
    Decoy,
    EntangledGroup,
    EventKind,
    FlightQubit,
    HashValue,
    PartyAction,
    SessionRegister,
    SessionTranscript,
    channel_forward,
    channel_return,
    classical_receive,
    resolve_policy,
    tp_measure_returned,
)

MAX_USERS = 6

_SEED_LIMIT = 2 ** 64


class AbortReason(Enum):
    """Why a run stopped early."""

    CHECK_FAILED = "check_failed"
    QUOTA_UNMET = "quota_unmet"


@dataclass(frozen=True)
class CheckResult(object):
    """Outcome of one eavesdropping or honesty check."""

    name: str
    passed: bool
    error_rate: float
    checked: int


class ProtocolAbort(Exception):
    """Raised inside a run when the protocol has to stop."""

    reason = None

    def __init__(self, stage, message, error_rate=None, check=None):
        super(ProtocolAbort, self).__init__(message)
        self.stage = stage
        self.message = message
        self.error_rate = error_rate
        self.check = check


class CheckFailed(ProtocolAbort):
    """A check's error rate exceeded the threshold."""

    reason = AbortReason.CHECK_FAILED

    def __init__(self, check):
        super(CheckFailed, self).__init__(
            check.name,
            "{} check failed with error rate {:.4f}".format(check.name, check.error_rate),
            check.error_rate,
            check,
        )


class QuotaUnmet(ProtocolAbort):
    """Too few usable positions to reach the required key length."""

    reason = AbortReason.QUOTA_UNMET


@dataclass(frozen=True)
class Aborted(object):
    """Why, where and how badly a run aborted."""

    reason: AbortReason
    stage: str
    message: str
    error_rate: float = None


@dataclass(frozen=True)
class SqpcConfig(object):
    """Parameters shared by every protocol run."""

    n: int
    L: int = 2
    seed: int = 0
    error_threshold: float = 0.0
    oversample_factor: float = 1.0
    policy: object = "random"

    def __post_init__(self):
        if int(self.n) < 1:
            raise InvalidArgument("n must be at least 1")
        if int(self.L) < 2:
            raise InvalidArgument("L must be at least 2")
        if int(self.L) > MAX_USERS:
            raise InvalidArgument("At most {} classical users are supported".format(MAX_USERS))
        if not 0 <= int(self.seed) < _SEED_LIMIT:
            raise InvalidArgument("seed must be a 64-bit unsigned integer")
        if not 0 <= self.error_threshold < 1:
            raise InvalidArgument("error_threshold must be in [0, 1)")
        if self.oversample_factor < 1:
            raise InvalidArgument("oversample_factor must be at least 1")

    @property
    def group_count(self):
        """Number of entangled groups TP prepares."""
        base = 4 * self.n if self.L == 2 else 2 ** self.L * self.n
        return int(math.ceil(base * self.oversample_factor))

    @property
    def decoy_count(self):
        """Number of decoys TP prepares per user."""
        return int(math.ceil(4 * self.n * self.oversample_factor))


@dataclass
class KeyMaterial(object):
    """Keys established in steps 1 to 6.

    k_ab maps a user pair to their shared key, k_c is the key common to all
    users, k_t holds each user's copy of the key shared with TP and k_t_tp
    holds TP's copies.
    """

    k_ab: dict = field(default_factory=dict)
    k_c: list = None
    k_t: dict = field(default_factory=dict)
    k_t_tp: dict = field(default_factory=dict)


class Verdict(Enum):
    EQUAL = "equal"
    UNEQUAL = "unequal"
    ABORTED = "aborted"


@dataclass
class SqpcResult(object):
    verdict: Verdict
    r_bits: list = None
    abort: Aborted = None


@dataclass
class SqkaResult(object):
    final_key: dict = field(default_factory=dict)
    accept: dict = field(default_factory=dict)
    abort: Aborted = None


@dataclass(frozen=True)
class TpSummationView(object):
    """Everything TP holds when it computes RT; the users' shared key is absent."""

    ciphertexts: tuple
    tp_keys: tuple
    rt: int


@dataclass
class SqsResult(object):
    sum: int = None
    tp_view: TpSummationView = None
    abort: Aborted = None


@dataclass
class SqarResult(object):
    histogram: list = None
    rank: dict = None
    abort: Aborted = None


@dataclass
class ResourceLedger(object):
    """Shared bits c, generated qubits q, published bits b and regenerations."""

    c: int = 0
    q: int = 0
    b: int = 0
    regenerated: int = 0


RunOutcome = namedtuple("RunOutcome", ["result", "transcript", "ledger"])


@dataclass(frozen=True)
class DecoyRecord(object):
    """Everything known about one decoy once its owner disclosed the action."""

    prepared_bit: int
    action: PartyAction
    user_outcome: object
    tp_outcome: object


DecoyKey = namedtuple("DecoyKey", ["checks", "key", "tp_key"])


def _bits(values, name, length=None):
    bits = [int(b) for b in values]
    if any(b not in (0, 1) for b in bits):
        raise InvalidArgument("{} must contain only 0 and 1".format(name))
    if length is not None and len(bits) != length:
        raise InvalidArgument("{} must have length {}, got {}".format(name, length, len(bits)))
    return bits


def _xor(*sequences):
    return [sum(column) % 2 for column in zip(*sequences)]


def sift_cases(actions_a, actions_b, announcements):
    """Split group positions into (both Measure, both Reflect, mixed)."""
    if not len(actions_a) == len(actions_b) == len(announcements):
        raise InvalidArgument("Action and announcement lists must have equal lengths")
    case1, case2, case3 = [], [], []
    for position, (a, b) in enumerate(zip(actions_a, actions_b)):
        if a is b is PartyAction.MEASURE:
            case1.append(position)
        elif a is b is PartyAction.REFLECT:
            case2.append(position)
        else:
            case3.append(position)
    return case1, case2, case3


def _rate_check(name, errors, checked, threshold):
    rate = errors / checked if checked else 0.0
    return CheckResult(name, rate <= threshold, rate, checked)


def check_reflect(outcomes, expected, threshold, name="reflect"):
    """Return the check that every all-Reflect group announced `expected`."""
    outcomes = list(outcomes)
    errors = sum(1 for o in outcomes if o != expected)
    return _rate_check(name, errors, len(outcomes), threshold)


def check_reflect_bell(announcements, threshold):
    """Return the check that every both-Reflect pair announced PhiPlus."""
    return check_reflect(announcements, BellOutcome.PHI_PLUS, threshold, "reflect-bell")


def _derive(outcome_lists, n, threshold, name):
    """Return (check, key); key is None when fewer than n positions match."""
    outcome_lists = [list(o) for o in outcome_lists]
    if len({len(o) for o in outcome_lists}) > 1:
        raise InvalidArgument("Outcome lists must have equal lengths")
    matching = []
    mismatches = 0
    for values in zip(*outcome_lists):
        bits = {v.bit for v in values}
        if len(bits) == 1:
            matching.append(values[0].bit)
        else:
            mismatches += 1
    check = _rate_check(name, mismatches, len(outcome_lists[0]), threshold)
    return check, (matching[:n] if len(matching) >= n else None)


def derive_common_key(outcome_lists, n, threshold=0.0, name="key"):
    """Return the first n positions where every user measured the same bit."""
    check, key = _derive(outcome_lists, n, threshold, name)
    if not check.passed:
        raise CheckFailed(check)
    if key is None:
        raise QuotaUnmet(
            name,
            "{} key needs {} matching positions, {} available".format(
                name, n, check.checked - int(round(check.error_rate * check.checked))
            ),
            check=check,
        )
    return key


def derive_pair_key(outcomes_a, outcomes_b, n, threshold=0.0):
    """Return K_AB from the both-Measure outcomes of two users."""
    return derive_common_key([outcomes_a, outcomes_b], n, threshold, "case-1")


def decoy_check_and_key(records, n, rng, threshold=0.0, name="decoy"):
    """Check a user's decoys and derive the key shared with TP.

    Reflected decoys must come back as prepared. A random n-subset of the
    measured decoys must agree three ways (prepared, user, TP); the first n of
    the remaining measured decoys become the key.
    """
    records = list(records)
    reflected = [r for r in records if r.action is PartyAction.REFLECT]
    measured = [r for r in records if r.action is PartyAction.MEASURE]
    reflect_check = _rate_check(
        name + "-reflect",
        sum(1 for r in reflected if r.tp_outcome.bit != r.prepared_bit),
        len(reflected),
        threshold,
    )
    if not reflect_check.passed:
        raise CheckFailed(reflect_check)
    if len(measured) < 2 * n:
        raise QuotaUnmet(
            name,
            "{} needs {} measured decoys, {} available".format(name, 2 * n, len(measured)),
            check=reflect_check,
        )
    chosen = set(rng.choice(len(measured), size=n, replace=False).tolist())
    checked = [measured[i] for i in sorted(chosen)]
    measure_check = _rate_check(
        name + "-measure",
        sum(
            1
            for r in checked
            if not r.user_outcome.bit == r.tp_outcome.bit == r.prepared_bit
        ),
        len(checked),
        threshold,
    )
    if not measure_check.passed:
        raise CheckFailed(measure_check)
    remaining = [r for i, r in enumerate(measured) if i not in chosen][:n]
    return DecoyKey(
        (reflect_check, measure_check),
        [r.user_outcome.bit for r in remaining],
        [r.tp_outcome.bit for r in remaining],
    )


def compute_comparison(q_a, q_b, k_ta, k_tb):
    """Return R = Q_A xor Q_B xor K_TA xor K_TB."""
    if not len(q_a) == len(q_b) == len(k_ta) == len(k_tb):
        raise InvalidArgument("Comparison inputs must have equal lengths")
    return _xor(q_a, q_b, k_ta, k_tb)


def bits_to_int(k):
    """Return sum(k[j] * 2**j); the first bit is least significant."""
    return sum(int(bit) << j for j, bit in enumerate(k))


def sha256_hash(bits):
    """Return the SHA-256 digest of a bit list."""
    return hashlib.sha256(bytes(bits)).digest()


def identity_prefix_hash(bits):
    """Return the first half of the bit list; collisions are trivial to build."""
    return bytes(bits[: (len(bits) + 1) // 2])


HASH_FUNCTIONS = {
    "sha256": sha256_hash,
    "identity-prefix": identity_prefix_hash,
}


def _signed_bits(value):
    """Bits needed to publish a signed integer."""
    return abs(value).bit_length() + 1


class _Session(object):
    """Steps 1 to 6 shared by every protocol: distribution, actions, checks and keys."""

    def __init__(self, name, config, users, adversary=None):
        self.name = name
        self.config = config
        self.users = list(users)
        self.transcript = SessionTranscript()
        self.ledger = ResourceLedger()
        self.keys = KeyMaterial()
        self.tp_rng = random_stream(config.seed, 0)
        self.user_rngs = {
            user: random_stream(config.seed, 2, slot)
            for slot, user in enumerate(self.users)
        }
        self.hooks = build_hooks(adversary)
        self.hooks.start(random_stream(config.seed, 1), self.transcript)
        self.tp = build_tp_strategy(adversary)
        self.policy = resolve_policy(config.policy, len(self.users))
        self.actions = {user: {} for user in self.users}
        self.outcomes = {user: {} for user in self.users}
        self.announced = []
        self.decoy_records = {}

    def publish(self, author, payload, bits=0):
        """Announce a payload and charge `bits` to the ledger."""
        self.ledger.b += bits
        return self.transcript.announce(Announcement(author, payload))

    def _record_check(self, check):
        self.transcript.record(EventKind.CHECK_RESULT, "users", check=check)
        logging.debug(
            "%s check %s: error rate %.4f over %d",
            check.name,
            "passed" if check.passed else "failed",
            check.error_rate,
            check.checked,
        )

    def enforce(self, check):
        """Record a check and raise CheckFailed if it did not pass."""
        self._record_check(check)
        if not check.passed:
            raise CheckFailed(check)

    def distribute(self):
        """Steps 1 to 4: prepare, send, act, return and let TP measure."""
        config = self.config
        num_users = len(self.users)
        groups = [
            SessionRegister(
                self.tp.prepare_group(num_users, self.tp_rng),
                [EntangledGroup(g, slot) for slot in range(num_users)],
            )
            for g in range(config.group_count)
        ]
        self.ledger.q += num_users * len(groups)
        decoys = {}
        for user in self.users:
            bits = self.tp_rng.integers(2, size=config.decoy_count)
            decoys[user] = [
                SessionRegister(new_basis_state([b]), [Decoy(user, i, int(b))])
                for i, b in enumerate(bits)
            ]
            self.ledger.q += len(bits)
        self.transcript.record(
            EventKind.PREPARATION,
            TP,
            groups=len(groups),
            group_size=num_users,
            decoys_per_user=config.decoy_count,
        )
        logging.debug(
            "%s: prepared %d groups of %d and %d decoys per user",
            self.name,
            len(groups),
            num_users,
            config.decoy_count,
        )

        sequences = {}
        for slot, user in enumerate(self.users):
            flight = [
                FlightQubit(register, EntangledGroup(g, slot), user)
                for g, register in enumerate(groups)
            ]
            flight.extend(FlightQubit(r, r.label(0), user) for r in decoys[user])
            order = self.tp_rng.permutation(len(flight))
            sequences[user] = [channel_forward(flight[i], self.hooks) for i in order]
            self.transcript.record(EventKind.SEND, TP, to=user, qubits=len(flight))

        for user in self.users:
            rng = self.user_rngs[user]
            received = []
            for q in sequences[user]:
                action, outcome, q = classical_receive(q, self.policy, rng)
                self.actions[user][q.origin_tag] = action
                if outcome is not None:
                    self.outcomes[user][q.origin_tag] = outcome
                    self.ledger.q += 1
                    self.ledger.regenerated += 1
                received.append(q)
            sequences[user] = received
            measured = len(self.outcomes[user])
            self.transcript.record(
                EventKind.PARTY_ACTION,
                user,
                measured=measured,
                reflected=len(received) - measured,
            )

        returned = [[None] * num_users for _ in groups]
        decoys_back = {}
        for slot, user in enumerate(self.users):
            back = [channel_return(q, self.hooks) for q in sequences[user]]
            for q in back:
                if isinstance(q.origin_tag, EntangledGroup):
                    returned[q.origin_tag.group_id][slot] = q
            decoys_back[user] = sorted(
                (q for q in back if isinstance(q.origin_tag, Decoy)),
                key=lambda q: q.origin_tag.position,
            )

        for group in returned:
            announcement = self.tp.measure_group(group, self.tp_rng)
            self.transcript.announce(announcement)
            self.announced.append(announcement.payload.outcome)
        self.tp_decoy_outcomes = {
            user: [tp_measure_returned([q], Z_BASIS, self.tp_rng) for q in decoys_back[user]]
            for user in self.users
        }

    def group_actions(self, user):
        """Return a user's actions on the entangled groups, by group id."""
        slot = self.users.index(user)
        return [
            self.actions[user][EntangledGroup(g, slot)]
            for g in range(self.config.group_count)
        ]

    def group_outcomes(self, user, positions):
        """Return a user's Z outcomes at the given group positions."""
        slot = self.users.index(user)
        return [self.outcomes[user][EntangledGroup(g, slot)] for g in positions]

    def positions_where(self, measuring):
        """Return the groups where exactly the users in `measuring` measured."""
        measuring = set(measuring)
        patterns = [self.group_actions(user) for user in self.users]
        return [
            g
            for g in range(self.config.group_count)
            if all(
                (patterns[i][g] is PartyAction.MEASURE) == (user in measuring)
                for i, user in enumerate(self.users)
            )
        ]

    def sift_and_check(self):
        """Step 5: users disclose group actions, then check the all-Reflect groups."""
        positions = tuple(range(self.config.group_count))
        for user in self.users:
            self.publish(user, ActionDisclosure(positions, tuple(self.group_actions(user))))
        if len(self.users) == 2:
            case1, case2, case3 = sift_cases(
                self.group_actions(self.users[0]),
                self.group_actions(self.users[1]),
                self.announced,
            )
            logging.debug(
                "%s: case 1/2/3 counts %d/%d/%d",
                self.name,
                len(case1),
                len(case2),
                len(case3),
            )
            check = check_reflect_bell([self.announced[g] for g in case2], self.config.error_threshold)
        else:
            reflected = self.positions_where(())
            check = check_reflect(
                [self.announced[g] for g in reflected],
                GhzOutcome.plus(len(self.users)),
                self.config.error_threshold,
                "reflect-ghz",
            )
        self.enforce(check)

    def derive_key(self, measuring, name):
        """Derive the key of the users who measured together."""
        positions = self.positions_where(measuring)
        check, key = _derive(
            [self.group_outcomes(user, positions) for user in measuring],
            self.config.n,
            self.config.error_threshold,
            name,
        )
        self.enforce(check)
        if key is None:
            raise QuotaUnmet(
                name,
                "{} key needs {} matching positions out of {}".format(
                    name, self.config.n, len(positions)
                ),
            )
        logging.debug("%s: %s key established from %d groups", self.name, name, len(positions))
        return key

    def decoy_keys(self):
        """Step 6: users disclose decoy actions; check them and derive keys with TP."""
        for user in self.users:
            tags = {t.position: t for t in self.actions[user] if isinstance(t, Decoy)}
            records = []
            for position, tp_outcome in enumerate(self.tp_decoy_outcomes[user]):
                tag = tags[position]
                records.append(
                    DecoyRecord(
                        tag.prepared_bit,
                        self.actions[user][tag],
                        self.outcomes[user].get(tag),
                        tp_outcome,
                    )
                )
            self.decoy_records[user] = records
            self.publish(
                user,
                ActionDisclosure(
                    tuple(range(len(records))),
                    tuple(r.action for r in records),
                    "decoys",
                ),
            )
            try:
                decoy_key = decoy_check_and_key(
                    records,
                    self.config.n,
                    self.user_rngs[user],
                    self.config.error_threshold,
                    "decoy-" + user,
                )
            except CheckFailed as failure:
                self._record_check(failure.check)
                raise
            for check in decoy_key.checks:
                self._record_check(check)
            self.keys.k_t[user] = decoy_key.key
            self.keys.k_t_tp[user] = decoy_key.tp_key

    def establish_keys(self, common=False, pairs=()):
        """Run steps 1 to 6 and fill in the requested keys."""
        self.distribute()
        self.sift_and_check()
        if common:
            self.keys.k_c = self.derive_key(self.users, "common")
        for pair in pairs:
            self.keys.k_ab[pair] = self.derive_key(pair, "pair-" + "".join(pair))
        self.decoy_keys()

    def finish(self, result):
        """Return the run outcome."""
        logging.debug("%s finished: %s", self.name, self.ledger)
        return RunOutcome(result, self.transcript, self.ledger)

    def abort(self, result, abort):
        """Record a terminal abort and return the run outcome with `result`."""
        result.abort = Aborted(abort.reason, abort.stage, abort.message, abort.error_rate)
        self.transcript.abort(
            "users",
            reason=abort.reason,
            stage=abort.stage,
            error_rate=abort.error_rate,
        )
        logging.warning("%s aborted: %s", self.name, abort.message)
        return RunOutcome(result, self.transcript, self.ledger)


def _user_ids(count):
    return ["C{}".format(i + 1) for i in range(count)]


def _secrets_by_user(secrets, users):
    if isinstance(secrets, dict):
        missing = [u for u in users if u not in secrets]
        if missing:
            raise InvalidArgument("Missing secrets for {}".format(", ".join(missing)))
        return {u: secrets[u] for u in users}
    secrets = list(secrets)
    if len(secrets) != len(users):
        raise InvalidArgument("Expected {} secrets, got {}".format(len(users), len(secrets)))
    return dict(zip(users, secrets))


def _require_multi(config):
    if config.L <= 2:
        raise InvalidArgument("Multi-party protocols need L > 2")


def run_sqpc2(config, m_a, m_b, adversary=None):
    """Compare two users' secrets for equality through TP."""
    if config.L != 2:
        raise InvalidArgument("Two-party comparison needs L = 2")
    m_a = _bits(m_a, "m_a", config.n)
    m_b = _bits(m_b, "m_b", config.n)
    session = _Session("sqpc2", config, ("A", "B"), adversary)
    try:
        session.establish_keys(pairs=[("A", "B")])
        k_ab = session.keys.k_ab[("A", "B")]
        q_a = _xor(k_ab, session.keys.k_t["A"], m_a)
        q_b = _xor(k_ab, session.keys.k_t["B"], m_b)
        session.publish("A", Ciphertext(tuple(q_a), TP), config.n)
        session.publish("B", Ciphertext(tuple(q_b), TP), config.n)
        r_bits = compute_comparison(
            q_a, q_b, session.keys.k_t_tp["A"], session.keys.k_t_tp["B"]
        )
        equal = not any(r_bits)
        session.publish(TP, ComparisonVerdict(equal), 1)
        session.ledger.c += config.n
    except ProtocolAbort as abort:
        return session.abort(SqpcResult(Verdict.ABORTED), abort)
    return session.finish(SqpcResult(Verdict.EQUAL if equal else Verdict.UNEQUAL, r_bits))


def run_sqpc_multi(config, secrets, compare_pair=(1, 2), adversary=None):
    """Compare the secrets of users compare_pair (1-based) among L users sharing GHZ groups."""
    _require_multi(config)
    users = _user_ids(config.L)
    secrets = {
        u: _bits(s, "secret of " + u, config.n)
        for u, s in _secrets_by_user(secrets, users).items()
    }
    l, g = compare_pair
    if l == g or not (1 <= l <= config.L and 1 <= g <= config.L):
        raise InvalidArgument("compare_pair must name two distinct users in 1..L")
    first, second = users[l - 1], users[g - 1]
    session = _Session("sqpc_multi", config, users, adversary)
    try:
        session.establish_keys(common=True)
        q = {
            u: _xor(session.keys.k_c, session.keys.k_t[u], secrets[u])
            for u in (first, second)
        }
        for u in (first, second):
            session.publish(u, Ciphertext(tuple(q[u]), TP), config.n)
        r_bits = compute_comparison(
            q[first], q[second], session.keys.k_t_tp[first], session.keys.k_t_tp[second]
        )
        equal = not any(r_bits)
        session.publish(TP, ComparisonVerdict(equal), 1)
        session.ledger.c += config.n
    except ProtocolAbort as abort:
        return session.abort(SqpcResult(Verdict.ABORTED), abort)
    return session.finish(SqpcResult(Verdict.EQUAL if equal else Verdict.UNEQUAL, r_bits))


def run_sqka(config, m_a, m_b, m_t, hash_function="sha256", adversary=None):
    """Agree on K = m_a xor m_b xor m_t with hash commitments before the reveals."""
    if config.L != 2:
        raise InvalidArgument("Key agreement needs L = 2")
    if not callable(hash_function):
        try:
            hash_function = HASH_FUNCTIONS[hash_function]
        except KeyError:
            raise InvalidArgument("Unknown hash function {!r}".format(hash_function))
    parties = ("A", "B", TP)
    secrets = {
        "A": _bits(m_a, "m_a", config.n),
        "B": _bits(m_b, "m_b", config.n),
        TP: _bits(m_t, "m_t", config.n),
    }
    insider = build_insider(adversary)
    if insider is not None:
        if insider.party not in parties:
            raise InvalidArgument("Unknown insider {!r}".format(insider.party))
        _bits(insider.target_key, "target_key", config.n)

    session = _Session("sqka", config, ("A", "B"), adversary)
    try:
        session.establish_keys(pairs=[("A", "B")])
    except ProtocolAbort as abort:
        return session.abort(SqkaResult(), abort)
    keys = session.keys

    def shared(owner, peer):
        if TP not in (owner, peer):
            return keys.k_ab[("A", "B")]
        if owner == TP:
            return keys.k_t_tp[peer]
        return keys.k_t[owner]

    channels = [(s, r) for s in parties for r in parties if s != r]
    ciphertexts = {(s, r): _xor(secrets[s], shared(s, r)) for s, r in channels}
    commitments = {}
    for s, r in channels:
        commitments[(s, r)] = hash_function(ciphertexts[(s, r)])
        # the efficiency accounting charges each hash as n bits
        session.publish(s, HashValue(commitments[(s, r)], r), config.n)

    revealed = {}
    order = [p for p in parties if insider is None or p != insider.party]
    for s in order:
        for r in parties:
            if r != s:
                revealed[(s, r)] = ciphertexts[(s, r)]
                session.publish(s, Ciphertext(tuple(revealed[(s, r)]), r), config.n)
    if insider is not None:
        me = insider.party
        learned = [_xor(revealed[(s, me)], shared(me, s)) for s in parties if s != me]
        forged = insider.forge(learned, {r: shared(me, r) for r in parties if r != me})
        logging.debug("Insider %s publishes forged ciphertexts", me)
        for r, values in forged.items():
            revealed[(me, r)] = values
            session.publish(me, Ciphertext(tuple(values), r), config.n)

    result = SqkaResult()
    for r in parties:
        senders = [s for s in parties if s != r]
        accept = all(
            hash_function(revealed[(s, r)]) == commitments[(s, r)] for s in senders
        )
        result.accept[r] = accept
        if not accept:
            logging.warning("sqka: %s rejected a ciphertext whose hash does not match", r)
            result.final_key[r] = None
        elif insider is not None and r == insider.party:
            result.final_key[r] = list(insider.target_key)
        else:
            recovered = [_xor(revealed[(s, r)], shared(r, s)) for s in senders]
            result.final_key[r] = _xor(secrets[r], *recovered)
    session.ledger.c += config.n
    return session.finish(result)


def run_sqs(config, ma, mb, adversary=None):
    """Let TP compute MA + MB without learning the users' shared key."""
    if config.L != 2:
        raise InvalidArgument("Two-party summation needs L = 2")
    ma, mb = int(ma), int(mb)
    session = _Session("sqs", config, ("A", "B"), adversary)
    try:
        session.establish_keys(pairs=[("A", "B")])
    except ProtocolAbort as abort:
        return session.abort(SqsResult(), abort)
    keys = session.keys
    k_ab = bits_to_int(keys.k_ab[("A", "B")])
    qa = k_ab + bits_to_int(keys.k_t["A"]) + ma
    qb = k_ab + bits_to_int(keys.k_t["B"]) + mb
    session.publish("A", Ciphertext((qa,), TP), _signed_bits(qa))
    session.publish("B", Ciphertext((qb,), TP), _signed_bits(qb))
    tp_keys = (bits_to_int(keys.k_t_tp["A"]), bits_to_int(keys.k_t_tp["B"]))
    rt = qa + qb - sum(tp_keys)
    session.publish(TP, Ciphertext((rt,)), _signed_bits(rt))
    session.ledger.c += config.n
    view = TpSummationView((qa, qb), tp_keys, rt)
    return session.finish(SqsResult(rt - 2 * k_ab, view))


def run_sqs_multi(config, secrets, adversary=None):
    """Let TP compute the sum of L users' integers using a GHZ common key."""
    _require_multi(config)
    users = _user_ids(config.L)
    secrets = {u: int(m) for u, m in _secrets_by_user(secrets, users).items()}
    session = _Session("sqs_multi", config, users, adversary)
    try:
        session.establish_keys(common=True)
    except ProtocolAbort as abort:
        return session.abort(SqsResult(), abort)
    keys = session.keys
    k_c = bits_to_int(keys.k_c)
    published = []
    for u in users:
        value = k_c + bits_to_int(keys.k_t[u]) + secrets[u]
        published.append(value)
        session.publish(u, Ciphertext((value,), TP), _signed_bits(value))
    tp_keys = tuple(bits_to_int(keys.k_t_tp[u]) for u in users)
    rt = sum(published) - sum(tp_keys)
    session.publish(TP, Ciphertext((rt,)), _signed_bits(rt))
    session.ledger.c += config.n
    view = TpSummationView(tuple(published), tp_keys, rt)
    return session.finish(SqsResult(rt - config.L * k_c, view))


def run_sqar(config, data, N, adversary=None):
    """Rank L users' values in 1..N; TP only learns how many users hold each value."""
    _require_multi(config)
    N = int(N)
    if N < 1:
        raise InvalidArgument("N must be at least 1")
    users = _user_ids(config.L)
    data = {u: int(m) for u, m in _secrets_by_user(data, users).items()}
    for u, m in data.items():
        if not 1 <= m <= N:
            raise InvalidArgument("Value of {} must be in 1..{}, got {}".format(u, N, m))
    pairs = [(users[i], users[(i + 1) % config.L]) for i in range(config.L)]
    session = _Session("sqar", config, users, adversary)
    try:
        session.establish_keys(pairs=pairs)
    except ProtocolAbort as abort:
        return session.abort(SqarResult(), abort)
    keys = session.keys
    pair_keys = [bits_to_int(keys.k_ab[pair]) for pair in pairs]
    encoded = []
    for i, u in enumerate(users):
        element = bits_to_int(keys.k_t[u]) - pair_keys[i - 1] + pair_keys[i]
        sub_secret = [element] * N
        sub_secret[data[u] - 1] += 1
        encoded.append(sub_secret)
        session.publish(u, Ciphertext(tuple(sub_secret), TP), sum(_signed_bits(v) for v in sub_secret))
    tp_total = sum(bits_to_int(keys.k_t_tp[u]) for u in users)
    histogram = [sum(column) - tp_total for column in zip(*encoded)]
    session.publish(TP, Ciphertext(tuple(histogram)), sum(_signed_bits(v) for v in histogram))
    rank = {u: sum(histogram[: data[u] - 1]) + 1 for u in users}
    session.ledger.c += config.n
    return session.finish(SqarResult(histogram, rank))


PROTOCOL_NAMES = ("sqpc2", "sqpc_multi", "sqka", "sqs", "sqs_multi", "sqar")


def run_protocol(protocol, config, inputs, adversary=None, hash_function="sha256"):
    """Dispatch a run by protocol name with the inputs dict that protocol takes."""
    if protocol == "sqpc2":
        return run_sqpc2(config, inputs["m_a"], inputs["m_b"], adversary)
    if protocol == "sqpc_multi":
        return run_sqpc_multi(
            config,
            inputs["secrets"],
            tuple(inputs.get("compare_pair", (1, 2))),
            adversary,
        )
    if protocol == "sqka":
        return run_sqka(
            config, inputs["m_a"], inputs["m_b"], inputs["m_t"], hash_function, adversary
        )
    if protocol == "sqs":
        return run_sqs(config, inputs["ma"], inputs["mb"], adversary)
    if protocol == "sqs_multi":
        return run_sqs_multi(config, inputs["secrets"], adversary)
    if protocol == "sqar":
        return run_sqar(config, inputs["data"], inputs["N"], adversary)
    raise InvalidArgument("Unknown protocol {!r}".format(protocol))
