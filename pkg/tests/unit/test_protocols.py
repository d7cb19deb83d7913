"""Test the comparison, key agreement, summation and ranking protocols."""
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
from dataclasses import fields

import pytest
from testfixtures import LogCapture

from sqpcsim.adversary import AttackSpec
from sqpcsim.metrics import case1_phi_minus_frequency, quota_shortfall_probability
from sqpcsim.protocols import (
    AbortReason,
    CheckFailed,
    DecoyRecord,
    QuotaUnmet,
    SqpcConfig,
    Verdict,
    bits_to_int,
    check_reflect_bell,
    compute_comparison,
    decoy_check_and_key,
    derive_pair_key,
    identity_prefix_hash,
    run_protocol,
    run_sqar,
    run_sqka,
    run_sqpc2,
    run_sqpc_multi,
    run_sqs,
    run_sqs_multi,
    sha256_hash,
    sift_cases,
)
from sqpcsim.qsim import BellOutcome, InvalidArgument, ZOutcome, random_stream
from sqpcsim.roles import (
    BellResult,
    EventKind,
    PartyAction,
    SessionTranscript,
    scripted_policy,
)

M = PartyAction.MEASURE
R = PartyAction.REFLECT


def _balanced(n, L=2, seed=0):
    return SqpcConfig(n, L, seed, policy="balanced")


def _z(bits):
    return [ZOutcome(b) for b in bits]


def _random_bits(rng, n):
    return [int(b) for b in rng.integers(2, size=n)]


def test_config_sizes():
    """Test group and decoy counts follow n, L and the oversampling factor."""
    assert SqpcConfig(8).group_count == 32
    assert SqpcConfig(8).decoy_count == 32
    assert SqpcConfig(8, L=3).group_count == 64
    assert SqpcConfig(8, oversample_factor=1.5).group_count == 48


@pytest.mark.parametrize(
    "options, message",
    [
        ({"n": 0}, "n must"),
        ({"n": 4, "L": 1}, "L must"),
        ({"n": 4, "L": 7}, "At most"),
        ({"n": 4, "seed": -1}, "seed"),
        ({"n": 4, "error_threshold": 1.0}, "error_threshold"),
        ({"n": 4, "oversample_factor": 0.5}, "oversample_factor"),
    ],
)
def test_config_invalid(options, message):
    """Test configuration bounds."""
    with pytest.raises(InvalidArgument, match=message):
        SqpcConfig(**options)


def test_sift_cases():
    """Test positions are split by the users' joint action."""
    announced = [BellOutcome.PHI_PLUS] * 4
    assert sift_cases([M, R, M, R], [M, R, R, M], announced) == ([0], [1], [2, 3])
    with pytest.raises(InvalidArgument):
        sift_cases([M], [M, R], announced)


def test_check_reflect_bell():
    """Test one wrong announcement among both-Reflect pairs fails a zero threshold."""
    plus = [BellOutcome.PHI_PLUS] * 99
    assert check_reflect_bell(plus, 0.0).passed
    check = check_reflect_bell(plus + [BellOutcome.PHI_MINUS], 0.0)
    assert not check.passed
    assert check.error_rate == pytest.approx(0.01)
    assert check_reflect_bell(plus + [BellOutcome.PHI_MINUS], 0.05).passed
    assert check_reflect_bell([], 0.0).passed


def test_derive_pair_key():
    """Test K_AB is the first n matching both-Measure outcomes."""
    assert derive_pair_key(_z([1, 0, 1, 1]), _z([1, 0, 1, 1]), 3) == [1, 0, 1]
    with pytest.raises(CheckFailed) as e:
        derive_pair_key(_z([1, 0, 1, 1]), _z([1, 1, 1, 1]), 3)
    assert e.value.check.error_rate == pytest.approx(0.25)
    with pytest.raises(QuotaUnmet):
        derive_pair_key(_z([1, 0]), _z([1, 0]), 3)
    assert derive_pair_key(_z([1, 0, 1, 1]), _z([1, 1, 1, 1]), 3, threshold=0.3) == [1, 1, 1]


def _honest_records(bits):
    return [
        DecoyRecord(
            b,
            M if i % 2 == 0 else R,
            ZOutcome(b) if i % 2 == 0 else None,
            ZOutcome(b),
        )
        for i, b in enumerate(bits)
    ]


def test_decoy_check_and_key_honest():
    """Test honest decoys pass both checks and yield matching keys."""
    bits = [1, 0, 1, 1, 0, 0, 1, 0, 0, 1, 1, 1, 0, 1, 0, 0]
    result = decoy_check_and_key(_honest_records(bits), 4, random_stream(1))
    assert [c.name for c in result.checks] == ["decoy-reflect", "decoy-measure"]
    assert all(c.passed for c in result.checks)
    assert len(result.key) == 4
    assert result.key == result.tp_key


def test_decoy_check_and_key_failures():
    """Test wrong reflections, wrong measurements and too few measured decoys."""
    bits = [1, 0] * 8
    records = _honest_records(bits)
    flipped = [
        DecoyRecord(r.prepared_bit, r.action, r.user_outcome, ZOutcome(1 - r.prepared_bit))
        if r.action is R else r
        for r in records
    ]
    with pytest.raises(CheckFailed) as e:
        decoy_check_and_key(flipped, 4, random_stream(0))
    assert e.value.check.name == "decoy-reflect"

    wrong = [
        DecoyRecord(r.prepared_bit, r.action, ZOutcome(1 - r.prepared_bit), r.tp_outcome)
        if r.action is M else r
        for r in records
    ]
    with pytest.raises(CheckFailed) as e:
        decoy_check_and_key(wrong, 4, random_stream(0))
    assert e.value.check.name == "decoy-measure"

    with pytest.raises(QuotaUnmet):
        decoy_check_and_key(records, 5, random_stream(0))


def test_compute_comparison_identity():
    """Test R is zero exactly when the secrets are equal, for random keys."""
    rng = random_stream(11)
    n = 8
    for _ in range(100000 // n):
        k_ab, k_ta, k_tb, m_a = (_random_bits(rng, n) for _ in range(4))
        m_b = list(m_a) if rng.integers(2) else _random_bits(rng, n)
        q_a = [a ^ b ^ c for a, b, c in zip(k_ab, k_ta, m_a)]
        q_b = [a ^ b ^ c for a, b, c in zip(k_ab, k_tb, m_b)]
        r = compute_comparison(q_a, q_b, k_ta, k_tb)
        assert r == [a ^ b for a, b in zip(m_a, m_b)]
    with pytest.raises(InvalidArgument):
        compute_comparison([1], [1, 0], [1], [1])


@pytest.mark.parametrize(
    "bits, value",
    [([], 0), ([1], 1), ([0, 1], 2), ([1, 0, 1], 5), ([1] * 8, 255)],
)
def test_bits_to_int(bits, value):
    """Test the first bit is least significant."""
    assert bits_to_int(bits) == value


def test_hash_functions():
    """Test the strong hash separates inputs the prefix hash confuses."""
    assert sha256_hash([1, 0, 1, 0]) != sha256_hash([1, 0, 1, 1])
    assert identity_prefix_hash([1, 0, 1, 0]) == identity_prefix_hash([1, 0, 1, 1])
    assert len(sha256_hash([0] * 8)) == 32


def test_sqpc2_equal_and_unequal():
    """Test equal secrets compare equal and R marks exactly the differing bits."""
    m_a = [1, 0, 1, 1, 0, 0, 1, 0]
    outcome = run_sqpc2(_balanced(8), m_a, list(m_a))
    assert outcome.result.verdict is Verdict.EQUAL
    assert outcome.result.r_bits == [0] * 8
    for j in (0, 5):
        m_b = list(m_a)
        m_b[j] ^= 1
        result = run_sqpc2(_balanced(8, seed=j), m_a, m_b).result
        assert result.verdict is Verdict.UNEQUAL
        assert result.r_bits == [int(i == j) for i in range(8)]


def test_sqpc2_matches_plain_comparison():
    """Test honest verdicts agree with comparing the secrets directly."""
    rng = random_stream(42)
    for seed in range(200):
        m_a = _random_bits(rng, 8)
        m_b = list(m_a) if rng.integers(2) else _random_bits(rng, 8)
        result = run_sqpc2(_balanced(8, seed=seed), m_a, m_b).result
        assert result.abort is None
        assert (result.verdict is Verdict.EQUAL) == (m_a == m_b)


@pytest.mark.slow
def test_sqpc2_fair_coin_runs():
    """Test fair-coin verdicts and the rate of runs that lack usable positions."""
    rng = random_stream(43)
    runs = 1000
    short = 0
    for seed in range(runs):
        m_a = _random_bits(rng, 8)
        m_b = list(m_a) if seed % 2 == 0 else _random_bits(rng, 8)
        result = run_sqpc2(SqpcConfig(8, seed=seed), m_a, m_b).result
        if result.abort is not None:
            assert result.abort.reason is AbortReason.QUOTA_UNMET
            short += 1
        else:
            assert (result.verdict is Verdict.EQUAL) == (m_a == m_b)
    p = quota_shortfall_probability("sqpc2", 8)
    assert abs(short / runs - p) <= 3 * math.sqrt(p * (1 - p) / runs)


def test_sqpc2_is_reproducible():
    """Test the same seed gives the same transcript."""
    config = SqpcConfig(4, seed=99, oversample_factor=2.0)
    first = run_sqpc2(config, [1, 0, 0, 1], [1, 0, 0, 1])
    second = run_sqpc2(config, [1, 0, 0, 1], [1, 0, 0, 1])
    assert first.transcript.to_dict() == second.transcript.to_dict()
    assert first.ledger == second.ledger


def test_honest_attack_spec_is_no_op():
    """Test an explicit honest adversary leaves the transcript unchanged."""
    config = _balanced(4, seed=3)
    plain = run_sqpc2(config, [1, 1, 0, 0], [1, 0, 0, 0])
    honest = run_sqpc2(config, [1, 1, 0, 0], [1, 0, 0, 0], AttackSpec())
    assert plain.transcript.to_dict() == honest.transcript.to_dict()


@pytest.mark.parametrize("n", [1, 4, 8])
def test_sqpc2_ledger(n):
    """Test the balanced run spends 24n qubits and publishes 2n + 1 bits."""
    ledger = run_sqpc2(_balanced(n), [0] * n, [1] * n).ledger
    assert ledger.c == n
    assert ledger.q == 24 * n
    assert ledger.b == 2 * n + 1


def test_sqpc2_never_announces_decoy_results():
    """Test TP's decoy outcomes stay private."""
    transcript = run_sqpc2(_balanced(4), [0] * 4, [0] * 4).transcript
    assert transcript.payloads_of(ZOutcome) == []
    assert len(transcript.payloads_of(BellResult)) == 16


def test_honest_random_runs_never_fail_checks():
    """Test honest runs only ever abort for lack of positions."""
    for seed in range(30):
        result = run_sqpc2(SqpcConfig(4, seed=seed), [0] * 4, [0] * 4).result
        assert result.abort is None or result.abort.reason is AbortReason.QUOTA_UNMET


def test_sqpc2_quota_abort():
    """Test a run with no both-Measure pairs aborts and logs a warning."""
    config = SqpcConfig(8, policy=scripted_policy(default=R))
    with LogCapture() as log_capture:
        outcome = run_sqpc2(config, [0] * 8, [0] * 8)
    log_capture.check_present(
        (
            "root",
            "WARNING",
            "sqpc2 aborted: pair-AB key needs 8 matching positions out of 0",
        )
    )
    result = outcome.result
    assert result.verdict is Verdict.ABORTED
    assert result.abort.reason is AbortReason.QUOTA_UNMET
    assert result.abort.stage == "pair-AB"
    assert outcome.transcript.aborted


def test_sqpc2_input_validation():
    """Test secret lengths, bit values and L are checked."""
    with pytest.raises(InvalidArgument, match="length"):
        run_sqpc2(_balanced(4), [0] * 3, [0] * 4)
    with pytest.raises(InvalidArgument, match="only 0 and 1"):
        run_sqpc2(_balanced(2), [0, 2], [0, 0])
    with pytest.raises(InvalidArgument, match="L = 2"):
        run_sqpc2(_balanced(2, L=3), [0, 0], [0, 0])


def test_intercept_resend_is_caught():
    """Test intercept-resend aborts and leaves no PhiMinus on both-Measure pairs."""
    attack = AttackSpec("intercept_resend")
    pairs = 0
    for seed in range(32):
        outcome = run_sqpc2(_balanced(8, seed=seed), [0] * 8, [0] * 8, attack)
        assert outcome.result.abort.reason is AbortReason.CHECK_FAILED
        assert case1_phi_minus_frequency(outcome.transcript) == 0
        announced = [r.outcome for r in outcome.transcript.payloads_of(BellResult)]
        assert set(announced) == {BellOutcome.PHI_PLUS}
        pairs += len(announced)
    assert pairs >= 1000


@pytest.mark.slow
def test_honest_both_measure_announcements_split():
    """Test both-Measure pairs announce PhiMinus half the time."""
    frequencies = [
        case1_phi_minus_frequency(run_sqpc2(_balanced(32, seed=s), [0] * 32, [0] * 32).transcript)
        for s in range(40)
    ]
    assert 0.45 <= sum(frequencies) / len(frequencies) <= 0.55


def test_double_cnot_goes_unnoticed():
    """Test the double-CNOT attack never trips a check and its probes read 0."""
    for seed in range(5):
        outcome = run_sqpc2(_balanced(4, seed=seed), [1, 0, 1, 0], [1, 0, 1, 0], AttackSpec("double_cnot"))
        assert outcome.result.verdict is Verdict.EQUAL
        hooks = outcome.transcript.events_of(EventKind.ADVERSARY_HOOK)
        returns = [e for e in hooks if e.detail["leg"] == "return"]
        assert returns
        assert {e.detail["probe_outcome"] for e in returns} == {0}


def test_sqpc_multi():
    """Test multi-party comparison of one chosen pair."""
    secrets = {"C1": [1, 0, 1, 0], "C2": [1, 0, 1, 0], "C3": [0, 0, 0, 1]}
    result = run_sqpc_multi(_balanced(4, L=3), secrets).result
    assert result.verdict is Verdict.EQUAL
    result = run_sqpc_multi(_balanced(4, L=3, seed=1), secrets, compare_pair=(1, 3)).result
    assert result.verdict is Verdict.UNEQUAL
    assert result.r_bits == [1, 0, 1, 1]
    with pytest.raises(InvalidArgument, match="compare_pair"):
        run_sqpc_multi(_balanced(4, L=3), secrets, compare_pair=(2, 2))
    with pytest.raises(InvalidArgument, match="L > 2"):
        run_sqpc_multi(_balanced(4), [[0] * 4, [0] * 4])


def _xor3(a, b, c):
    return [x ^ y ^ z for x, y, z in zip(a, b, c)]


def test_sqka_honest():
    """Test every party accepts and ends with m_a xor m_b xor m_t."""
    m_a, m_b, m_t = [1, 0, 1, 1], [0, 1, 1, 0], [1, 1, 0, 0]
    outcome = run_sqka(_balanced(4), m_a, m_b, m_t)
    result = outcome.result
    assert all(result.accept.values())
    assert result.final_key == {p: _xor3(m_a, m_b, m_t) for p in ("A", "B", "TP")}
    assert outcome.ledger.b == 12 * 4
    assert outcome.ledger.c == 4


@pytest.mark.slow
def test_sqka_repeated_runs():
    """Test honest runs always agree and forged reveals are always rejected."""
    rng = random_stream(36)
    for seed in range(200):
        m_a, m_b, m_t = (_random_bits(rng, 8) for _ in range(3))
        key = _xor3(m_a, m_b, m_t)
        result = run_sqka(_balanced(8, seed=seed), m_a, m_b, m_t).result
        assert result.abort is None
        assert all(result.accept.values())
        assert result.final_key == {p: key for p in ("A", "B", "TP")}

        target = list(key)
        target[seed % 8] ^= 1
        attack = AttackSpec("dishonest_user", target_key=tuple(target))
        forced = run_sqka(_balanced(8, seed=seed), m_a, m_b, m_t, adversary=attack).result
        assert not forced.accept["B"]
        assert not forced.accept["TP"]


def test_sqka_hash_blocks_key_forcing():
    """Test a forged reveal is rejected by both honest parties."""
    m_a, m_b, m_t = [1, 0, 1, 1], [0, 1, 1, 0], [1, 1, 0, 0]
    attack = AttackSpec("dishonest_user", target_key=(1, 1, 1, 1))
    with LogCapture() as log_capture:
        result = run_sqka(_balanced(4), m_a, m_b, m_t, adversary=attack).result
    log_capture.check_present(
        ("root", "WARNING", "sqka: B rejected a ciphertext whose hash does not match"),
        ("root", "WARNING", "sqka: TP rejected a ciphertext whose hash does not match"),
    )
    assert result.accept == {"A": True, "B": False, "TP": False}
    assert result.final_key["B"] is None
    assert result.final_key["A"] == [1, 1, 1, 1]


def test_sqka_weak_hash_allows_key_forcing():
    """Test a colliding hash lets the insider force the key on everyone."""
    m_a, m_b, m_t = [1, 0, 1, 1], [0, 1, 1, 0], [1, 1, 0, 0]
    target = _xor3(m_a, m_b, m_t)
    target[3] ^= 1
    attack = AttackSpec("dishonest_user", target_key=target)
    result = run_sqka(_balanced(4), m_a, m_b, m_t, "identity-prefix", attack).result
    assert all(result.accept.values())
    assert result.final_key == {p: target for p in ("A", "B", "TP")}


def test_sqka_forcing_the_honest_key_is_accepted():
    """Test a target equal to the honest key passes every hash check."""
    m_a, m_b, m_t = [1, 0, 1, 1], [0, 1, 1, 0], [1, 1, 0, 0]
    attack = AttackSpec("dishonest_user", target_key=_xor3(m_a, m_b, m_t))
    result = run_sqka(_balanced(4), m_a, m_b, m_t, adversary=attack).result
    assert all(result.accept.values())


def test_sqka_unknown_hash():
    """Test an unknown hash name is rejected."""
    with pytest.raises(InvalidArgument, match="hash"):
        run_sqka(_balanced(2), [0, 0], [0, 0], [0, 0], "md5")


@pytest.mark.parametrize(
    "ma, mb",
    [(0, 0), (7, 35), (-5, 3), (2 ** 31 - 1, -(2 ** 31))],
)
def test_sqs(ma, mb):
    """Test the sum is exact and TP's view holds no user-pair key."""
    result = run_sqs(_balanced(8), ma, mb).result
    assert result.sum == ma + mb
    assert {f.name for f in fields(result.tp_view)} == {"ciphertexts", "tp_keys", "rt"}


@pytest.mark.slow
def test_sqs_random_pairs():
    """Test random signed pairs up to 2**31 in magnitude sum exactly."""
    rng = random_stream(31)
    for seed in range(1000):
        ma, mb = (int(v) for v in rng.integers(-(2 ** 31), 2 ** 31, size=2, endpoint=True))
        outcome = run_sqs(_balanced(8, seed=seed), ma, mb)
        assert outcome.result.sum == ma + mb
        assert outcome.result.tp_view.rt == sum(outcome.result.tp_view.ciphertexts) - sum(
            outcome.result.tp_view.tp_keys
        )


def test_sqs_multi():
    """Test multi-party summation."""
    result = run_sqs_multi(_balanced(4, L=3), [5, -9, 100]).result
    assert result.sum == 96
    result = run_sqs_multi(_balanced(2, L=4), {"C1": 1, "C2": 2, "C3": 3, "C4": 4}).result
    assert result.sum == 10


@pytest.mark.parametrize(
    "data, histogram, rank",
    [
        ([1, 2, 3], [1, 1, 1], {"C1": 1, "C2": 2, "C3": 3}),
        ([2, 2, 2], [0, 3, 0], {"C1": 1, "C2": 1, "C3": 1}),
        ([3, 1, 3], [1, 0, 2], {"C1": 2, "C2": 1, "C3": 2}),
    ],
)
def test_sqar_examples(data, histogram, rank):
    """Test histogram and ranks for small inputs."""
    result = run_sqar(_balanced(4, L=3), data, 3).result
    assert result.histogram == histogram
    assert result.rank == rank


@pytest.mark.slow
def test_sqar_matches_sorting():
    """Test ranks equal one plus the number of strictly smaller values."""
    rng = random_stream(8)
    for seed in range(200):
        L = 3 + seed % 3
        data = [int(v) for v in rng.integers(1, 11, size=L)]
        result = run_sqar(_balanced(4, L=L, seed=seed), data, 10).result
        users = ["C{}".format(i + 1) for i in range(L)]
        assert result.rank == {u: 1 + sum(1 for w in data if w < v) for u, v in zip(users, data)}
        assert sum(result.histogram) == L


def test_sqar_validation():
    """Test values outside 1..N are rejected."""
    with pytest.raises(InvalidArgument, match="1..3"):
        run_sqar(_balanced(4, L=3), [1, 2, 4], 3)


def test_run_protocol_dispatch():
    """Test dispatch by protocol name."""
    outcome = run_protocol("sqs", _balanced(4), {"ma": 1, "mb": 2})
    assert outcome.result.sum == 3
    with pytest.raises(InvalidArgument, match="Unknown protocol"):
        run_protocol("sqx", _balanced(4), {})


def test_transcript_ends_with_abort_only_on_abort():
    """Test completed runs do not carry an Abort event."""
    transcript = run_sqs(_balanced(2), 1, 1).transcript
    assert not transcript.aborted
    assert transcript.events_of(EventKind.ABORT) == []
    assert isinstance(transcript, SessionTranscript)
