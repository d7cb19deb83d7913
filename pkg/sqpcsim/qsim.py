"""Dense state-vector simulation of the small registers the protocols use."""
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

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

TOLERANCE = 1e-9

# Registers hold one entangled group plus its probes
MAX_QUBITS = 12

_SQRT_HALF = 1 / np.sqrt(2)


class InvalidArgument(ValueError):
    """Raised when an operation receives arguments outside its domain."""


def random_stream(seed, *path):
    """Return an independent generator for the stream named by (seed, path).

    Streams are backed by the counter-based Philox generator, so any trial or
    actor can derive its own stream without touching the others.
    """
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(path))
    return np.random.Generator(np.random.Philox(sequence))


def derive_seed(seed, *path):
    """Return a 64-bit integer seed derived from (seed, path)."""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(path))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


class StateVector(object):
    """Normalized amplitudes of a register.

    Qubit 0 is the most significant bit of the amplitude index. Instances are
    immutable; every operation in this module returns a new one.
    """

    __slots__ = ("_amplitudes",)

    def __init__(self, amplitudes):
        """Wrap a normalized amplitude vector of length 2**k."""
        amps = np.array(amplitudes, dtype=np.complex128).reshape(-1)
        size = amps.shape[0]
        if size < 2 or size & (size - 1):
            raise InvalidArgument(
                "State length {} is not a power of two".format(size)
            )
        if size > 2 ** MAX_QUBITS:
            raise InvalidArgument(
                "Registers are limited to {} qubits".format(MAX_QUBITS)
            )
        norm = np.vdot(amps, amps).real
        if abs(norm - 1) > TOLERANCE:
            raise InvalidArgument(
                "State is not normalized (squared norm {!r})".format(norm)
            )
        amps.setflags(write=False)
        self._amplitudes = amps

    @property
    def amplitudes(self):
        """Read-only complex amplitude array."""
        return self._amplitudes

    @property
    def num_qubits(self):
        """Number of qubits in the register."""
        return self._amplitudes.shape[0].bit_length() - 1

    def isclose(self, other, tol=TOLERANCE):
        """Return True if both states have the same amplitudes within tol."""
        return (
            self.num_qubits == other.num_qubits
            and np.max(np.abs(self._amplitudes - other.amplitudes)) <= tol
        )

    def __repr__(self):
        return "StateVector({})".format(np.round(self._amplitudes, 6).tolist())


class Unitary(object):
    """A validated unitary matrix acting on one or more qubits."""

    def __init__(self, matrix, name=None):
        """Validate `matrix` and wrap it; raises InvalidArgument if not unitary."""
        entries = np.array(matrix, dtype=np.complex128)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise InvalidArgument("Unitary must be a square matrix")
        dim = entries.shape[0]
        if dim < 2 or dim & (dim - 1):
            raise InvalidArgument("Unitary dimension {} is not a power of two".format(dim))
        residual = unitarity_residual(entries)
        if residual > TOLERANCE:
            raise InvalidArgument(
                "Matrix is not unitary (residual {:.3g})".format(residual)
            )
        entries.setflags(write=False)
        self.entries = entries
        self.name = name

    @property
    def dim(self):
        """Matrix dimension."""
        return self.entries.shape[0]

    @property
    def num_qubits(self):
        """Number of qubits the unitary acts on."""
        return self.dim.bit_length() - 1

    def dagger(self):
        """Return the inverse unitary."""
        name = None if self.name is None else self.name + "^dagger"
        return Unitary(self.entries.conj().T, name)

    def __repr__(self):
        return "Unitary({})".format(self.name or self.dim)


def unitarity_residual(matrix):
    """Return the Frobenius norm of U U^dagger - I."""
    entries = np.asarray(matrix, dtype=np.complex128)
    return float(
        np.linalg.norm(entries @ entries.conj().T - np.eye(entries.shape[0]))
    )


IDENTITY_2Q = Unitary(np.eye(4), "I")

# Control is the first target, the flipped bit the second
CNOT = Unitary(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
    "CNOT",
)


class BellOutcome(Enum):
    """Result of a measurement in the Bell basis."""

    PHI_PLUS = "PhiPlus"
    PHI_MINUS = "PhiMinus"
    PSI_PLUS = "PsiPlus"
    PSI_MINUS = "PsiMinus"


_BELL_OUTCOMES = (
    BellOutcome.PHI_PLUS,
    BellOutcome.PHI_MINUS,
    BellOutcome.PSI_PLUS,
    BellOutcome.PSI_MINUS,
)

# Columns are |phi+>, |phi->, |psi+>, |psi->
_BELL_BASIS = _SQRT_HALF * np.array(
    [
        [1, 1, 0, 0],
        [0, 0, 1, 1],
        [0, 0, 1, -1],
        [1, -1, 0, 0],
    ],
    dtype=np.complex128,
)


@dataclass(frozen=True)
class GhzOutcome(object):
    """GHZ-basis result (|b> + sign |b-bar>)/sqrt(2), b carrying a leading 0."""

    bitstring: tuple
    sign: str

    @classmethod
    def plus(cls, num_qubits):
        """Return the outcome of |Psi+> on num_qubits qubits."""
        return cls((0,) * (num_qubits - 1), "+")

    def __str__(self):
        return "".join(str(b) for b in self.bitstring) + self.sign


@dataclass(frozen=True)
class ZOutcome(object):
    """Computational-basis result."""

    bit: int


class DensityMatrix(object):
    """A validated density matrix."""

    def __init__(self, entries):
        """Wrap `entries`; raises InvalidArgument if it is not a valid state."""
        rho = np.array(entries, dtype=np.complex128)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise InvalidArgument("Density matrix must be square")
        if np.max(np.abs(rho - rho.conj().T)) > TOLERANCE:
            raise InvalidArgument("Density matrix is not Hermitian")
        if abs(np.trace(rho).real - 1) > TOLERANCE:
            raise InvalidArgument("Density matrix trace is not 1")
        if np.min(np.linalg.eigvalsh(rho)) < -TOLERANCE:
            raise InvalidArgument("Density matrix has a negative eigenvalue")
        rho.setflags(write=False)
        self.entries = rho

    @classmethod
    def pure(cls, state):
        """Return |psi><psi| for a StateVector."""
        amps = state.amplitudes
        return cls(np.outer(amps, amps.conj()))

    @property
    def dim(self):
        """Matrix dimension."""
        return self.entries.shape[0]

    def __repr__(self):
        return "DensityMatrix({})".format(np.round(self.entries, 6).tolist())


def new_basis_state(bits):
    """Return the computational basis state |bits>, first bit most significant."""
    bits = [int(b) for b in bits]
    if not bits:
        raise InvalidArgument("Basis state needs at least one bit")
    if any(b not in (0, 1) for b in bits):
        raise InvalidArgument("Basis state bits must be 0 or 1")
    amps = np.zeros(2 ** len(bits), dtype=np.complex128)
    amps[int("".join(str(b) for b in bits), 2)] = 1
    return StateVector(amps)


def new_ghz_plus(num_qubits):
    """Return (|0...0> + |1...1>)/sqrt(2) on num_qubits qubits."""
    if num_qubits < 2:
        raise InvalidArgument("GHZ state needs at least 2 qubits")
    amps = np.zeros(2 ** num_qubits, dtype=np.complex128)
    amps[0] = amps[-1] = _SQRT_HALF
    return StateVector(amps)


def new_bell_phi_plus():
    """Return |phi+> = (|00> + |11>)/sqrt(2)."""
    return new_ghz_plus(2)


def tensor(a, b):
    """Return a (x) b, with a occupying the high-order qubits."""
    return StateVector(np.kron(a.amplitudes, b.amplitudes))


def _check_qubits(state, qubits, minimum=1):
    """Validate a list of distinct in-range qubit indices and return it."""
    qubits = [int(q) for q in qubits]
    if len(qubits) < minimum:
        raise InvalidArgument("Need at least {} qubit index(es)".format(minimum))
    if len(set(qubits)) != len(qubits):
        raise InvalidArgument("Duplicate qubit index in {}".format(qubits))
    for q in qubits:
        if q < 0 or q >= state.num_qubits:
            raise InvalidArgument(
                "Qubit {} out of range for a {}-qubit register".format(
                    q, state.num_qubits
                )
            )
    return qubits


def _split(amplitudes, num_qubits, qubits):
    """Reshape amplitudes to (2**k, rest) with `qubits` as the leading axes."""
    order = list(qubits) + [q for q in range(num_qubits) if q not in qubits]
    matrix = np.transpose(amplitudes.reshape((2,) * num_qubits), order)
    return matrix.reshape(2 ** len(qubits), -1), order


def _join(matrix, num_qubits, order):
    """Invert _split."""
    tensor_ = matrix.reshape((2,) * num_qubits)
    return np.transpose(tensor_, np.argsort(order)).reshape(-1)


def _renormalized(amps):
    return amps / np.sqrt(np.vdot(amps, amps).real)


def apply_unitary(state, u, targets):
    """Apply `u` to the listed qubits (first target most significant)."""
    targets = _check_qubits(state, targets)
    if u.dim != 2 ** len(targets):
        raise InvalidArgument(
            "Unitary of dimension {} cannot act on {} qubit(s)".format(
                u.dim, len(targets)
            )
        )
    matrix, order = _split(state.amplitudes, state.num_qubits, targets)
    return StateVector(_renormalized(_join(u.entries @ matrix, state.num_qubits, order)))


def apply_cnot(state, control, target):
    """Flip `target` on every component where `control` is 1."""
    if control == target:
        raise InvalidArgument("CNOT control and target must differ")
    return apply_unitary(state, CNOT, [control, target])


def _sample(probabilities, rng):
    """Draw an index from unnormalized probabilities, skipping empty outcomes."""
    cumulative = np.cumsum(probabilities)
    index = int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))
    return min(index, len(probabilities) - 1)


def _distribution(state, qubits, basis):
    """Return (coefficients, probabilities, order) of `state` in `basis`."""
    matrix, order = _split(state.amplitudes, state.num_qubits, qubits)
    coefficients = basis.conj().T @ matrix
    probabilities = np.sum(np.abs(coefficients) ** 2, axis=1)
    return coefficients, probabilities, order


def _measure(state, qubits, basis, rng):
    """Projectively measure `qubits` in the orthonormal columns of `basis`."""
    coefficients, probabilities, order = _distribution(state, qubits, basis)
    index = _sample(probabilities, rng)
    branch = coefficients[index] / np.sqrt(probabilities[index])
    post = np.outer(basis[:, index], branch)
    return index, StateVector(_join(post, state.num_qubits, order))


_Z_BASIS = np.eye(2, dtype=np.complex128)


def measure_z(state, qubit, rng):
    """Measure one qubit in the Z basis; return (ZOutcome, post-state)."""
    (qubit,) = _check_qubits(state, [qubit])
    index, post = _measure(state, [qubit], _Z_BASIS, rng)
    return ZOutcome(index), post


def z_probabilities(state, qubit):
    """Return (p0, p1) for a Z measurement of one qubit."""
    (qubit,) = _check_qubits(state, [qubit])
    _, probabilities, _ = _distribution(state, [qubit], _Z_BASIS)
    return tuple(float(p) for p in probabilities)


def measure_bell(state, q1, q2, rng):
    """Measure (q1, q2) in the Bell basis; return (BellOutcome, post-state)."""
    if q1 == q2:
        raise InvalidArgument("Bell measurement needs two distinct qubits")
    qubits = _check_qubits(state, [q1, q2])
    index, post = _measure(state, qubits, _BELL_BASIS, rng)
    return _BELL_OUTCOMES[index], post


def bell_probabilities(state, q1, q2):
    """Return the Born distribution of a Bell measurement as a dict."""
    if q1 == q2:
        raise InvalidArgument("Bell measurement needs two distinct qubits")
    qubits = _check_qubits(state, [q1, q2])
    _, probabilities, _ = _distribution(state, qubits, _BELL_BASIS)
    return {o: float(p) for o, p in zip(_BELL_OUTCOMES, probabilities)}


@lru_cache(maxsize=None)
def _ghz_basis(num_qubits):
    """Return (basis matrix, outcome labels) for the num_qubits GHZ basis."""
    size = 2 ** num_qubits
    full = size - 1
    columns = []
    labels = []
    for r in range(size // 2):
        bitstring = tuple(int(b) for b in format(r, "0{}b".format(num_qubits - 1)))
        for sign, factor in (("+", 1), ("-", -1)):
            column = np.zeros(size, dtype=np.complex128)
            column[r] = _SQRT_HALF
            column[full ^ r] = factor * _SQRT_HALF
            columns.append(column)
            labels.append(GhzOutcome(bitstring, sign))
    basis = np.array(columns).T
    basis.setflags(write=False)
    return basis, tuple(labels)


def measure_ghz(state, qubits, rng):
    """Measure `qubits` in the GHZ basis; return (GhzOutcome, post-state)."""
    qubits = _check_qubits(state, qubits, minimum=2)
    basis, labels = _ghz_basis(len(qubits))
    index, post = _measure(state, qubits, basis, rng)
    return labels[index], post


def ghz_probabilities(state, qubits):
    """Return the Born distribution of a GHZ measurement as a dict."""
    qubits = _check_qubits(state, qubits, minimum=2)
    basis, labels = _ghz_basis(len(qubits))
    _, probabilities, _ = _distribution(state, qubits, basis)
    return {o: float(p) for o, p in zip(labels, probabilities)}


def project_z(state, qubit, bit):
    """Return the renormalized state conditioned on Z outcome `bit` of `qubit`.

    On a register already collapsed by measure_z this replaces the measured
    qubit with a freshly prepared |bit>, which is how classical users
    regenerate what they measured.
    """
    (qubit,) = _check_qubits(state, [qubit])
    if bit not in (0, 1):
        raise InvalidArgument("Z outcome must be 0 or 1")
    matrix, order = _split(state.amplitudes, state.num_qubits, [qubit])
    rest = matrix[bit]
    norm = np.sqrt(np.vdot(rest, rest).real)
    if norm < np.sqrt(TOLERANCE):
        raise InvalidArgument("Qubit {} has no |{}> component".format(qubit, bit))
    fresh = np.zeros_like(matrix)
    fresh[bit] = rest / norm
    return StateVector(_join(fresh, state.num_qubits, order))


def partial_trace(state, keep):
    """Return the reduced density matrix of the qubits in `keep`, in that order."""
    keep = _check_qubits(state, keep)
    matrix, _ = _split(state.amplitudes, state.num_qubits, keep)
    return DensityMatrix(matrix @ matrix.conj().T)


def trace_distance(a, b):
    """Return half the trace norm of a - b."""
    if a.dim != b.dim:
        raise InvalidArgument(
            "Cannot compare density matrices of dimension {} and {}".format(
                a.dim, b.dim
            )
        )
    eigenvalues = np.linalg.eigvalsh(a.entries - b.entries)
    return float(min(1.0, max(0.0, 0.5 * np.sum(np.abs(eigenvalues)))))
