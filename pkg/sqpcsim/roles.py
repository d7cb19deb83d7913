"""Actors of a semi-quantum session: the quantum TP, classical users and the channel."""
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

from dataclasses import dataclass, field, fields, is_dataclass
from enum import Enum
from fractions import Fraction

import numpy as np
from bidict import bidict

from .qsim import (
    DensityMatrix,
    InvalidArgument,
    measure_bell,
    measure_ghz,
    measure_z,
    new_basis_state,
    new_ghz_plus,
    project_z,
    tensor,
)

TP = "TP"


class PartyAction(Enum):
    """What a classical user does with a received qubit."""

    MEASURE = "measure"
    REFLECT = "reflect"


@dataclass(frozen=True)
class EntangledGroup(object):
    """Origin of a qubit that is slot `slot` of entangled group `group_id`."""

    group_id: int
    slot: int


@dataclass(frozen=True)
class Decoy(object):
    """Origin of a single decoy qubit prepared by TP for `owner`."""

    owner: str
    position: int
    prepared_bit: int


@dataclass(frozen=True)
class Probe(object):
    """Label of an adversary qubit attached next to `target`."""

    target: object
    number: int = 0


class SessionRegister(object):
    """State of one entangled group or decoy, plus any probes attached to it.

    `allocation` maps labels (origin tags or probes) to qubit indices in both
    directions.
    """

    def __init__(self, state, labels):
        labels = list(labels)
        if len(labels) != state.num_qubits:
            raise InvalidArgument(
                "{} labels given for a {}-qubit register".format(
                    len(labels), state.num_qubits
                )
            )
        if len(set(labels)) != len(labels):
            raise InvalidArgument("Register labels must be unique")
        self.state = state
        self.allocation = bidict((label, index) for index, label in enumerate(labels))

    def index(self, label):
        """Return the qubit index allocated to `label`."""
        try:
            return self.allocation[label]
        except KeyError:
            raise InvalidArgument("{!r} is not allocated in this register".format(label))

    def label(self, index):
        """Return the label allocated to qubit `index`."""
        return self.allocation.inv[index]

    def allocate(self, label, bit=0):
        """Append a freshly prepared |bit> under `label` and return its index."""
        if label in self.allocation:
            raise InvalidArgument("{!r} is already allocated".format(label))
        index = self.state.num_qubits
        self.state = tensor(self.state, new_basis_state([bit]))
        self.allocation[label] = index
        return index


@dataclass(frozen=True)
class FlightQubit(object):
    """A qubit travelling between TP and `owner`."""

    register: SessionRegister = field(compare=False, repr=False)
    origin_tag: object
    owner: str

    @property
    def qubit(self):
        """Index of this qubit inside its register."""
        return self.register.index(self.origin_tag)


@dataclass(frozen=True)
class BellResult(object):
    position: int
    outcome: object


@dataclass(frozen=True)
class GhzResult(object):
    position: int
    outcome: object


@dataclass(frozen=True)
class ActionDisclosure(object):
    positions: tuple
    actions: tuple
    sequence: str = "groups"


@dataclass(frozen=True)
class Ciphertext(object):
    values: tuple
    recipient: str = None


@dataclass(frozen=True)
class HashValue(object):
    digest: bytes
    recipient: str = None


@dataclass(frozen=True)
class ComparisonVerdict(object):
    equal: bool


@dataclass(frozen=True)
class Announcement(object):
    """A message on the authenticated public classical channel."""

    author: str
    payload: object


class EventKind(Enum):
    """Kinds of transcript events."""

    PREPARATION = "preparation"
    SEND = "send"
    ADVERSARY_HOOK = "adversary-hook"
    PARTY_ACTION = "party-action"
    ANNOUNCEMENT = "announcement"
    CHECK_RESULT = "check-result"
    ABORT = "abort"


@dataclass(frozen=True)
class Event(object):
    kind: EventKind
    actor: str
    detail: dict


class SessionTranscript(object):
    """Append-only log of a session in causal order.

    `announcements` is the public channel: every party and the adversary may
    read it. An Abort event closes the transcript.
    """

    def __init__(self):
        self.events = []
        self.announcements = []

    @property
    def aborted(self):
        """True once an Abort event has been recorded."""
        return bool(self.events) and self.events[-1].kind is EventKind.ABORT

    def record(self, kind, actor, **detail):
        """Append an event and return it."""
        if self.aborted:
            raise InvalidArgument("Transcript already ended with an abort")
        event = Event(kind, actor, detail)
        self.events.append(event)
        return event

    def announce(self, announcement):
        """Publish an announcement and log it."""
        self.record(
            EventKind.ANNOUNCEMENT, announcement.author, payload=announcement.payload
        )
        self.announcements.append(announcement)
        return announcement

    def abort(self, actor, **detail):
        """Record the terminal Abort event."""
        return self.record(EventKind.ABORT, actor, **detail)

    def events_of(self, kind):
        """Return the events of one kind, in order."""
        return [e for e in self.events if e.kind is kind]

    def payloads_of(self, payload_type, author=None):
        """Return announced payloads of one type, optionally from one author."""
        return [
            a.payload
            for a in self.announcements
            if isinstance(a.payload, payload_type)
            and (author is None or a.author == author)
        ]

    def to_dict(self):
        """Return a JSON-compatible rendering of the events."""
        return {"events": [to_document(e) for e in self.events]}


def to_document(value):
    """Convert session values into JSON-compatible structures."""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, DensityMatrix):
        return to_document(value.entries)
    if is_dataclass(value) and not isinstance(value, type):
        document = {"type": type(value).__name__}
        for f in fields(value):
            if f.repr:
                document[f.name] = to_document(getattr(value, f.name))
        return document
    if isinstance(value, dict):
        return {str(k): to_document(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_document(v) for v in value]
    if isinstance(value, bytes):
        return value.hex()
    if isinstance(value, np.ndarray):
        return to_document(value.tolist())
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, Fraction):
        return str(value)
    return value


def random_policy(tag, rng):
    """Choose Measure or Reflect with a fair coin."""
    return PartyAction.MEASURE if rng.integers(2) else PartyAction.REFLECT


def balanced_policy(num_users):
    """Return a deterministic policy realising the exact pattern counts.

    Slot s of group g measures iff bit s of (g mod 2**num_users) is set, so
    every measure/reflect pattern appears equally often. Decoys with an even
    position are measured, the others reflected.
    """
    patterns = 2 ** num_users

    def policy(tag, rng):
        if isinstance(tag, EntangledGroup):
            measure = (tag.group_id % patterns) >> tag.slot & 1
        else:
            measure = tag.position % 2 == 0
        return PartyAction.MEASURE if measure else PartyAction.REFLECT

    return policy


def scripted_policy(groups=None, decoys=None, default=None):
    """Return a policy replaying fixed actions.

    `groups` is indexed by group id and holds one action per slot; `decoys`
    maps an owner to actions indexed by decoy position. Anything not scripted
    gets `default`.
    """
    groups = list(groups or [])
    decoys = dict(decoys or {})

    def policy(tag, rng):
        if isinstance(tag, EntangledGroup):
            if tag.group_id < len(groups):
                return groups[tag.group_id][tag.slot]
        else:
            actions = decoys.get(tag.owner, ())
            if tag.position < len(actions):
                return actions[tag.position]
        if default is None:
            raise InvalidArgument("No scripted action for {!r}".format(tag))
        return default

    return policy


def resolve_policy(policy, num_users):
    """Turn a policy name into a policy; callables pass through."""
    if callable(policy):
        return policy
    if policy == "random":
        return random_policy
    if policy == "balanced":
        return balanced_policy(num_users)
    raise InvalidArgument("Unknown action policy {!r}".format(policy))


def classical_receive(q, policy, rng):
    """Let a classical user act on a received qubit.

    Returns (action, outcome, qubit); the outcome is None on Reflect. On
    Measure the qubit is replaced by a fresh basis state equal to the outcome.
    """
    action = policy(q.origin_tag, rng)
    if action is PartyAction.REFLECT:
        return action, None, q
    outcome, post = measure_z(q.register.state, q.qubit, rng)
    q.register.state = project_z(post, q.qubit, outcome.bit)
    return action, outcome, q


@dataclass(frozen=True)
class MeasurementKind(object):
    """Measurement TP applies to a returned group."""

    name: str
    size: int

    @classmethod
    def ghz(cls, num_qubits):
        """Return the GHZ measurement on num_qubits qubits."""
        return cls("ghz", num_qubits)


BELL = MeasurementKind("bell", 2)
Z_BASIS = MeasurementKind("z", 1)


def _position(q):
    tag = q.origin_tag
    return tag.group_id if isinstance(tag, EntangledGroup) else tag.position


def tp_measure_returned(group, expected_kind, rng):
    """Measure qubits that came back to TP.

    Bell and GHZ results are returned as public Announcements; a Z result on a
    decoy is returned as a private ZOutcome.
    """
    group = list(group)
    if len(group) != expected_kind.size:
        raise InvalidArgument(
            "{} measurement needs {} qubit(s), got {}".format(
                expected_kind.name, expected_kind.size, len(group)
            )
        )
    register = group[0].register
    if any(q.register is not register for q in group):
        raise InvalidArgument("Measured qubits must belong to one register")
    qubits = [q.qubit for q in group]
    if expected_kind.name == "z":
        outcome, post = measure_z(register.state, qubits[0], rng)
        register.state = post
        return outcome
    if expected_kind.name == "bell":
        outcome, post = measure_bell(register.state, qubits[0], qubits[1], rng)
        payload = BellResult(_position(group[0]), outcome)
    elif expected_kind.name == "ghz":
        outcome, post = measure_ghz(register.state, qubits, rng)
        payload = GhzResult(_position(group[0]), outcome)
    else:
        raise InvalidArgument("Unknown measurement kind {!r}".format(expected_kind.name))
    register.state = post
    return Announcement(TP, payload)


class AttackHooks(object):
    """Channel adversary interface; the base class is the honest channel."""

    def __init__(self):
        self.probe_records = []
        self.rng = None
        self.transcript = None

    def start(self, rng, transcript):
        """Bind the adversary's random stream and the session transcript."""
        self.rng = rng
        self.transcript = transcript

    def on_forward(self, q):
        """Act on a qubit travelling from TP to a user."""
        return q

    def on_return(self, q):
        """Act on a qubit travelling from a user back to TP."""
        return q


class TpStrategy(object):
    """Behaviour of the quantum third party; the base class follows the protocol.

    Strategies only see the qubits returned to them, never the users' action
    choices.
    """

    def __init__(self):
        self.learned = []

    def prepare_group(self, num_qubits, rng):
        """Return the state TP sends out as one entangled group."""
        return new_ghz_plus(num_qubits)

    def measure_group(self, group, rng):
        """Measure a returned group and return TP's announcement."""
        if len(group) == 2:
            return tp_measure_returned(group, BELL, rng)
        return tp_measure_returned(group, MeasurementKind.ghz(len(group)), rng)


def channel_forward(q, adversary=None):
    """Carry a qubit from TP to its user through the adversary's hook."""
    if adversary is None:
        return q
    return adversary.on_forward(q)


def channel_return(q, adversary=None):
    """Carry a qubit from its user back to TP through the adversary's hook."""
    if adversary is None:
        return q
    return adversary.on_return(q)
