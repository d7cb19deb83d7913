"""Eavesdropper and insider strategies that can be injected into any protocol run."""
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
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.stats import unitary_group

from .qsim import (
    BellOutcome,
    GhzOutcome,
    InvalidArgument,
    Unitary,
    apply_cnot,
    apply_unitary,
    measure_z,
    new_basis_state,
    partial_trace,
)
from .roles import (
    TP,
    Announcement,
    AttackHooks,
    BellResult,
    EventKind,
    FlightQubit,
    GhzResult,
    Probe,
    SessionRegister,
    TpStrategy,
)


class AttackKind(Enum):
    """Adversary strategies."""

    HONEST = "honest"
    INTERCEPT_RESEND = "intercept_resend"
    MEASURE_RESEND = "measure_resend"
    DOUBLE_CNOT = "double_cnot"
    ENTANGLE_MEASURE = "entangle_measure"
    TP_ZBASIS = "tp_zbasis"
    TP_FAKE_PARTICLES = "tp_fake_particles"
    DISHONEST_USER = "dishonest_user"


@dataclass(frozen=True)
class AttackScope(object):
    """Channel legs and users an outside adversary touches; users=None means all."""

    forward: bool = True
    return_: bool = True
    users: tuple = None

    def covers(self, owner, leg):
        """Return True if the `leg` ("forward" or "return") of `owner` is attacked."""
        if self.users is not None and owner not in self.users:
            return False
        return self.forward if leg == "forward" else self.return_


@dataclass(frozen=True)
class AttackSpec(object):
    """The one adversary strategy active in a run, with its parameters."""

    kind: AttackKind = AttackKind.HONEST
    u_e: Unitary = None
    u_f: Unitary = None
    target_key: tuple = None
    insider: str = "A"
    scope: AttackScope = field(default_factory=AttackScope)

    def __post_init__(self):
        if not isinstance(self.kind, AttackKind):
            object.__setattr__(self, "kind", AttackKind(self.kind))
        if self.kind is AttackKind.ENTANGLE_MEASURE:
            for name in ("u_e", "u_f"):
                u = getattr(self, name)
                if u is None:
                    raise InvalidArgument("entangle_measure needs {}".format(name))
                if not isinstance(u, Unitary):
                    u = Unitary(u, name.upper())
                    object.__setattr__(self, name, u)
                if u.dim != 4:
                    raise InvalidArgument(
                        "{} must act on the flight qubit and one probe (4x4)".format(name)
                    )
        if self.kind is AttackKind.DISHONEST_USER:
            if not self.target_key:
                raise InvalidArgument("dishonest_user needs a target_key")
            key = tuple(int(b) for b in self.target_key)
            if any(b not in (0, 1) for b in key):
                raise InvalidArgument("target_key must be a bit list")
            object.__setattr__(self, "target_key", key)


HONEST = AttackSpec()


@dataclass
class ProbeRecord(object):
    """What the adversary kept from one attacked qubit."""

    target: object
    probe_qubits: tuple
    density: object = None
    outcomes: tuple = ()


class _ScopedHooks(AttackHooks):
    def __init__(self, scope=None):
        super(_ScopedHooks, self).__init__()
        self.scope = AttackScope() if scope is None else scope

    def _log(self, q, leg, **detail):
        logging.debug("%s on %s leg of %r", type(self).__name__, leg, q.origin_tag)
        self.transcript.record(
            EventKind.ADVERSARY_HOOK,
            "Eve",
            leg=leg,
            owner=q.owner,
            target=q.origin_tag,
            **detail
        )

    def _measure(self, q, index):
        outcome, post = measure_z(q.register.state, index, self.rng)
        q.register.state = post
        return outcome.bit


class InterceptResendHooks(_ScopedHooks):
    """Withhold genuine qubits, send random Z-basis fakes and measure them on return."""

    def __init__(self, scope=None):
        super(InterceptResendHooks, self).__init__(scope)
        self._withheld = {}

    def on_forward(self, q):
        if not self.scope.covers(q.owner, "forward"):
            return q
        bit = int(self.rng.integers(2))
        fake = FlightQubit(
            SessionRegister(new_basis_state([bit]), [q.origin_tag]),
            q.origin_tag,
            q.owner,
        )
        self._withheld[q.origin_tag] = q
        self._log(q, "forward", fake_bit=bit)
        return fake

    def on_return(self, q):
        genuine = self._withheld.pop(q.origin_tag, None)
        if genuine is None:
            return q
        outcomes = ()
        if self.scope.covers(q.owner, "return"):
            outcomes = (self._measure(q, q.qubit),)
        self.probe_records.append(ProbeRecord(q.origin_tag, (), None, outcomes))
        self._log(q, "return", outcomes=outcomes)
        return genuine


class MeasureResendHooks(_ScopedHooks):
    """Measure every passing qubit in the Z basis and forward the collapsed qubit."""

    def __init__(self, scope=None):
        super(MeasureResendHooks, self).__init__(scope)
        self._pending = {}

    def on_forward(self, q):
        if self.scope.covers(q.owner, "forward"):
            self._pending[q.origin_tag] = [self._measure(q, q.qubit)]
            self._log(q, "forward")
        return q

    def on_return(self, q):
        outcomes = self._pending.pop(q.origin_tag, [])
        if self.scope.covers(q.owner, "return"):
            outcomes.append(self._measure(q, q.qubit))
            self._log(q, "return")
        if outcomes:
            self.probe_records.append(ProbeRecord(q.origin_tag, (), None, tuple(outcomes)))
        return q


class DoubleCnotHooks(_ScopedHooks):
    """CNOT the passing qubit onto a fresh probe on both legs, then read the probe."""

    def on_forward(self, q):
        if not self.scope.covers(q.owner, "forward"):
            return q
        probe = q.register.allocate(Probe(q.origin_tag))
        q.register.state = apply_cnot(q.register.state, q.qubit, probe)
        self._log(q, "forward")
        return q

    def on_return(self, q):
        label = Probe(q.origin_tag)
        if label not in q.register.allocation:
            return q
        probe = q.register.index(label)
        if self.scope.covers(q.owner, "return"):
            q.register.state = apply_cnot(q.register.state, q.qubit, probe)
        outcome = self._measure(q, probe)
        self.probe_records.append(ProbeRecord(q.origin_tag, (probe,), None, (outcome,)))
        self._log(q, "return", probe_outcome=outcome)
        return q


class EntangleMeasureHooks(_ScopedHooks):
    """Couple a probe to the passing qubit with u_e on the way out and u_f on the way back."""

    def __init__(self, u_e, u_f, scope=None):
        super(EntangleMeasureHooks, self).__init__(scope)
        self.u_e = u_e
        self.u_f = u_f

    def on_forward(self, q):
        if not self.scope.covers(q.owner, "forward"):
            return q
        probe = q.register.allocate(Probe(q.origin_tag))
        q.register.state = apply_unitary(q.register.state, self.u_e, [q.qubit, probe])
        self._log(q, "forward")
        return q

    def on_return(self, q):
        label = Probe(q.origin_tag)
        covered = self.scope.covers(q.owner, "return")
        if label in q.register.allocation:
            probe = q.register.index(label)
        elif covered:
            probe = q.register.allocate(label)
        else:
            return q
        if covered:
            q.register.state = apply_unitary(
                q.register.state, self.u_f, [q.qubit, probe]
            )
        density = partial_trace(q.register.state, [probe])
        self.probe_records.append(ProbeRecord(q.origin_tag, (probe,), density))
        self._log(q, "return")
        return q


def intercept_resend_hooks(scope=None):
    """Return hooks for the intercept-resend attack."""
    return InterceptResendHooks(scope)


def measure_resend_hooks(scope=None):
    """Return hooks for the measure-resend attack."""
    return MeasureResendHooks(scope)


def double_cnot_hooks(scope=None):
    """Return hooks for the double-CNOT attack."""
    return DoubleCnotHooks(scope)


def entangle_measure_hooks(u_e, u_f, scope=None):
    """Return hooks for the entangle-measure attack with unitaries u_e and u_f."""
    for u in (u_e, u_f):
        if not isinstance(u, Unitary):
            raise InvalidArgument("entangle_measure needs Unitary operators")
        if u.dim != 4:
            raise InvalidArgument("entangle_measure operators must be 4x4")
    return EntangleMeasureHooks(u_e, u_f, scope)


def _random_announcement(group, rng):
    """Announce the honest-looking value with a uniformly random sign."""
    position = group[0].origin_tag.group_id
    minus = bool(rng.integers(2))
    if len(group) == 2:
        outcome = BellOutcome.PHI_MINUS if minus else BellOutcome.PHI_PLUS
        return Announcement(TP, BellResult(position, outcome))
    outcome = GhzOutcome((0,) * (len(group) - 1), "-" if minus else "+")
    return Announcement(TP, GhzResult(position, outcome))


class TpZBasisStrategy(TpStrategy):
    """TP measures returned groups in Z and announces a random PhiPlus/PhiMinus."""

    def measure_group(self, group, rng):
        bits = []
        for q in group:
            outcome, post = measure_z(q.register.state, q.qubit, rng)
            q.register.state = post
            bits.append(outcome.bit)
        self.learned.append((group[0].origin_tag.group_id, tuple(bits)))
        logging.debug("Dishonest TP read group %s as %s", group[0].origin_tag.group_id, bits)
        return _random_announcement(group, rng)


class TpFakeParticlesStrategy(TpZBasisStrategy):
    """TP sends independent random Z-basis qubits instead of entangled groups."""

    def prepare_group(self, num_qubits, rng):
        return new_basis_state(rng.integers(2, size=num_qubits))


def tp_zbasis_strategy():
    """Return the Z-basis measurement attack of a dishonest TP."""
    return TpZBasisStrategy()


def tp_fake_particles_strategy():
    """Return the fake-particle attack of a dishonest TP."""
    return TpFakeParticlesStrategy()


class DishonestSqkaUser(object):
    """Key agreement insider who waits for the others' reveals and forces the key."""

    def __init__(self, target_key, party="A"):
        self.target_key = [int(b) for b in target_key]
        self.party = party

    def forge(self, others_secrets, keys):
        """Return {recipient: Q*} so each recipient decrypts to the target key.

        `others_secrets` are the secrets learned from the honest reveals and
        `keys` maps each recipient to the key shared with it.
        """
        forced = list(self.target_key)
        for secret in others_secrets:
            if len(secret) != len(forced):
                raise InvalidArgument("target_key length must match the secrets")
            forced = [a ^ b for a, b in zip(forced, secret)]
        return {
            recipient: [a ^ b for a, b in zip(forced, key)]
            for recipient, key in keys.items()
        }


def dishonest_sqka_user(target_key, party="A"):
    """Return the key-forcing insider strategy."""
    return DishonestSqkaUser(target_key, party)


def build_hooks(spec):
    """Return the channel hooks for an AttackSpec (honest hooks for insider attacks)."""
    spec = HONEST if spec is None else spec
    kind = spec.kind
    if kind is AttackKind.INTERCEPT_RESEND:
        return intercept_resend_hooks(spec.scope)
    if kind is AttackKind.MEASURE_RESEND:
        return measure_resend_hooks(spec.scope)
    if kind is AttackKind.DOUBLE_CNOT:
        return double_cnot_hooks(spec.scope)
    if kind is AttackKind.ENTANGLE_MEASURE:
        return entangle_measure_hooks(spec.u_e, spec.u_f, spec.scope)
    return AttackHooks()


def build_tp_strategy(spec):
    """Return the TP strategy for an AttackSpec (the honest TP unless TP attacks)."""
    kind = HONEST.kind if spec is None else spec.kind
    if kind is AttackKind.TP_ZBASIS:
        return tp_zbasis_strategy()
    if kind is AttackKind.TP_FAKE_PARTICLES:
        return tp_fake_particles_strategy()
    return TpStrategy()


def build_insider(spec):
    """Return the insider strategy for an AttackSpec, or None."""
    if spec is None or spec.kind is not AttackKind.DISHONEST_USER:
        return None
    return dishonest_sqka_user(spec.target_key, spec.insider)


def controlled_rotation_unitary(theta):
    """Return the entangler that rotates the probe by `theta` when the flight qubit is 1.

    The probe operator is |+><+| + exp(2i theta)|-><-|, so theta = 0 gives the
    identity and theta = pi/2 gives CNOT(flight -> probe).
    """
    phase = np.exp(2j * theta)
    rotation = 0.5 * np.array(
        [[1 + phase, 1 - phase], [1 - phase, 1 + phase]], dtype=np.complex128
    )
    matrix = np.eye(4, dtype=np.complex128)
    matrix[2:, 2:] = rotation
    return Unitary(matrix, "CR({:g})".format(theta))


def random_unitary_pair(rng):
    """Return a Haar-random (u_e, u_f) pair of two-qubit unitaries."""
    return (
        Unitary(unitary_group.rvs(4, random_state=rng), "U_E"),
        Unitary(unitary_group.rvs(4, random_state=rng), "U_F"),
    )
