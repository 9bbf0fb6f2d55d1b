"""Acceptance gate: every criterion at its stated tolerance.

Each criterion prints one ``PASS``/``FAIL`` line (shown even under
pytest output capture).  Run standalone with ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import math
import os
import sys

import numpy as np
import pytest

from qubitsim.analytic import ks_transition_integral, pe, pq
from qubitsim.bell import run_protocol
from qubitsim.geometry import Z_AXIS, SeededRng, UnitVec3, planar_axis, rabi_rotation, sample_uniform_sphere_batch
from qubitsim.inequalities import lg_k3, lg_k3_oracle, protocol_chsh
from qubitsim.models import TransitionConfig, model1_prob, simulate_transition
from qubitsim.netharness import alice_service, bob_service, referee_session, start_in_thread
from qubitsim.stats import DEFAULT_SIGMA, ks_uniformity, sigma_distance

N = 1_000_000
# The small-angle scaling check runs at 1e8 samples: at 1e7 Model 2 sees
# only ~250 flips, so a +-10% band would be just 1.6 standard errors wide.
N_SCALING = 100_000_000
GRID = (0.0, math.pi / 6, math.pi / 4, math.pi / 3, math.pi / 2, 2 * math.pi / 3, math.pi)
WORKERS = os.cpu_count() or 1


def report(number: int, title: str, ok: bool, detail: str):
    print(f"{'PASS' if ok else 'FAIL'} criterion {number}: {title} | {detail}", flush=True)


def random_units(seed: int, count: int) -> list[UnitVec3]:
    g = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        v = g.normal(size=3)
        out.append(UnitVec3.normalized(v))
    return out


def transition_grid(model: str, seed: int):
    """Worst sigma distance and absolute error over the angle grid and both s0."""
    worst_sigma, worst_abs = 0.0, 0.0
    for i, theta in enumerate(GRID):
        for j, s0 in enumerate((1, -1)):
            cfg = TransitionConfig(Z_AXIS, rabi_rotation(theta), s0, N, seed)
            rec = simulate_transition(model, cfg, stream=2 * i + j, workers=WORKERS).record()
            worst_sigma = max(worst_sigma, rec["sigma_distance"])
            worst_abs = max(worst_abs, abs(rec["empirical_p"] - rec["oracle_p"]))
    return worst_sigma, worst_abs


# -- criteria -----------------------------------------------------------------


def criterion_1():
    sig, err = transition_grid("model2", seed=101)
    ok = sig <= DEFAULT_SIGMA
    return ok, f"model 2 vs quantum law, 7 angles x 2 s0, N=1e6: max {sig:.2f} sigma, max |err| {err:.1e}"


def criterion_2():
    sig, err = transition_grid("model1", seed=202)
    grid_ok = sig <= DEFAULT_SIGMA
    theta = 0.01
    cfg = TransitionConfig(Z_AXIS, rabi_rotation(theta), 1, N_SCALING, 203)
    f1 = simulate_transition("model1", cfg, stream=0, workers=WORKERS).prob(-1)
    f2 = simulate_transition("model2", cfg, stream=1, workers=WORKERS).prob(-1)
    ratio1 = f1.mean / (theta / math.pi)
    ratio2 = f2.mean / (theta * theta / 4.0)
    scaling_ok = abs(ratio1 - 1.0) <= 0.1 and abs(ratio2 - 1.0) <= 0.1
    detail = (
        f"model 1 grid max {sig:.2f} sigma (|err| {err:.1e}); theta=0.01, N=1e8: "
        f"flip/(theta/pi)={ratio1:.4f}, flip/(theta^2/4)={ratio2:.4f}"
    )
    return grid_ok and scaling_ok, detail


def criterion_3():
    k2 = lg_k3("model2", Z_AXIS, math.pi / 3, N, seed=301, workers=WORKERS)
    sig2 = sigma_distance(k2.estimate, 1.5)
    margin = (k2.value - 1.0) / k2.stderr
    ok = sig2 <= DEFAULT_SIGMA and margin >= 10.0
    worst_over, worst_eq = -math.inf, 0.0
    for theta in np.linspace(0.0, math.pi, 20):
        k1 = lg_k3("model1", Z_AXIS, float(theta), N, seed=302, workers=WORKERS)
        over = (k1.value - 1.0) / k1.stderr if k1.stderr > 0 else (0.0 if k1.value <= 1.0 else math.inf)
        worst_over = max(worst_over, over)
        ok &= k1.value <= 1.0 + DEFAULT_SIGMA * k1.stderr
        ok &= sigma_distance(k1.estimate, lg_k3_oracle("model1", float(theta))) <= DEFAULT_SIGMA
        if theta <= math.pi / 2:
            d = sigma_distance(k1.estimate, 1.0)
            worst_eq = max(worst_eq, d)
            ok &= d <= DEFAULT_SIGMA
    detail = (
        f"model 2 K3(pi/3)={k2.value:.4f}+-{k2.stderr:.4f} ({sig2:.2f} sigma from 1.5, {margin:.1f} stderr above 1); "
        f"model 1 max (K3-1)/stderr={worst_over:.2f}, equality for theta<=pi/2 within {worst_eq:.2f} sigma"
    )
    return ok, detail


def criterion_4():
    ns, vs = random_units(401, 100), random_units(402, 100)
    worst = 0.0
    for n, v in zip(ns, vs):
        for s0 in (1, -1):
            for s1 in (1, -1):
                worst = max(worst, abs(ks_transition_integral(s0, s1, n, v) - pq(s0, s1, n, v)))
    return worst <= 1e-3, f"100 random (n, v), all (s0, s1): max |quadrature - law| = {worst:.2e} (tol 1e-3)"


def criterion_5():
    v0s, v1s = random_units(501, 10), random_units(502, 10)
    worst_cell, worst_pair = 0.0, 0.0
    for i, (v0, v1) in enumerate(zip(v0s, v1s)):
        red = run_protocol("reduced", v0, v1, N, 510 + i)
        full = run_protocol("full", v0, v1, N, 530 + i)
        for a in (1, -1):
            for b in (1, -1):
                p = pe(a, b, v0, v1)
                worst_cell = max(worst_cell, sigma_distance(red.cell(a, b).estimate(), p))
                diff = red.cell(a, b).estimate().mean - full.cell(a, b).estimate().mean
                se = math.sqrt(2.0 * p * (1.0 - p) / N)
                worst_pair = max(worst_pair, abs(diff) / se if se > 0 else (0.0 if diff == 0 else math.inf))
    res = protocol_chsh("reduced", N, seed=550)
    sig = sigma_distance(res.s, 2.0 * math.sqrt(2.0))
    ok = worst_cell <= DEFAULT_SIGMA and worst_pair <= DEFAULT_SIGMA and sig <= DEFAULT_SIGMA
    detail = (
        f"10 random pairs, N=1e6: max cell {worst_cell:.2f} sigma, full vs reduced max {worst_pair:.2f} sigma; "
        f"CHSH S={res.s.mean:.4f}+-{res.s.stderr:.4f} ({sig:.2f} sigma from 2*sqrt(2))"
    )
    return ok, detail


def criterion_6():
    bob, alice = bob_service(), alice_service()
    start_in_thread(bob)
    start_in_thread(alice)
    try:
        checks = []
        cases = [(Z_AXIS, planar_axis(math.pi / 3), 10_000, 7)]
        a, b = random_units(601, 2)
        cases.append((a, b, 20_000, 602))
        for v0, v1, rounds, seed in cases:
            res = referee_session(v0, v1, rounds, seed, bob.server_address, alice.server_address)
            ref = run_protocol("reduced", v0, v1, rounds, seed)
            checks.append((res.triples == ref.triples(), res.bob_to_alice_payload_bytes, rounds))
    finally:
        for s in (bob, alice):
            s.shutdown()
            s.server_close()
    ok = all(same and nbytes == rounds for same, nbytes, rounds in checks)
    detail = "; ".join(f"{rounds} rounds: triples identical={same}, Bob->Alice bytes={nbytes}" for same, nbytes, rounds in checks)
    return ok, detail


def criterion_7():
    parts, ok = [], True

    pts = sample_uniform_sphere_batch(SeededRng(701), N)
    n = random_units(702, 1)[0]
    ks = ks_uniformity(pts @ n.as_array())
    ok &= ks.pvalue > 0.01
    parts.append(f"KS p={ks.pvalue:.3f}")

    worst_norm = 0.0
    for x, y in zip(random_units(703, 200), random_units(704, 200)):
        for s0 in (1, -1):
            worst_norm = max(worst_norm, abs(pq(s0, 1, x, y) + pq(s0, -1, x, y) - 1.0))
            worst_norm = max(worst_norm, abs(model1_prob(s0, 1, x, y) + model1_prob(s0, -1, x, y) - 1.0))
        worst_norm = max(worst_norm, abs(sum(pe(a, b, x, y) for a in (1, -1) for b in (1, -1)) - 1.0))
    ok &= worst_norm <= 2.0 * np.finfo(float).eps
    cfg = TransitionConfig(Z_AXIS, rabi_rotation(1.0), 1, N, 705)
    empirical = []
    for model in ("model1", "model2"):
        r = simulate_transition(model, cfg)
        empirical.append(r.stay.trials == N and r.prob(1).mean + r.prob(-1).mean == pytest.approx(1.0, abs=1e-15))
    bell = run_protocol("full", *random_units(706, 2), N, 707)
    empirical.append(int(bell.counts.sum()) == N)
    ok &= all(empirical)
    parts.append(f"analytic normalization max dev {worst_norm:.1e}, empirical sums to N: {all(empirical)}")

    a = simulate_transition("model2", cfg, workers=1)
    b = simulate_transition("model2", cfg, workers=max(2, WORKERS))
    c = run_protocol("reduced", Z_AXIS, planar_axis(1.0), N, 708)
    d = run_protocol("reduced", Z_AXIS, planar_axis(1.0), N, 708)
    same = a.stay == b.stay and a.r_plus == b.r_plus and np.array_equal(c.s1, d.s1) and np.array_equal(c.r, d.r)
    ok &= same
    parts.append(f"reruns identical: {same}")

    v1 = planar_axis(0.7)
    worst_ns = 0.0
    for i, v0 in enumerate(random_units(709, 5)):
        for variant in ("reduced", "full"):
            res = run_protocol(variant, v0, v1, N, 720 + i)
            worst_ns = max(worst_ns, sigma_distance(res.alice_marginal().estimate(), 0.5))
    ok &= worst_ns <= DEFAULT_SIGMA
    parts.append(f"Alice marginal max {worst_ns:.2f} sigma from 1/2")
    return ok, "; ".join(parts)


CRITERIA = [
    (1, "model 2 exactness", criterion_1),
    (2, "model 1 triangle law and small-angle scaling", criterion_2),
    (3, "Leggett-Garg K3", criterion_3),
    (4, "KS-density integral reproduces the quantum law", criterion_4),
    (5, "Bell protocol exactness and CHSH", criterion_5),
    (6, "networked harness fidelity", criterion_6),
    (7, "property suites", criterion_7),
]


@pytest.mark.parametrize("number,title,fn", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(number, title, fn, capsys):
    ok, detail = fn()
    with capsys.disabled():
        print()
        report(number, title, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    failures = 0
    for number, title, fn in CRITERIA:
        ok, detail = fn()
        report(number, title, ok, detail)
        failures += not ok
    sys.exit(1 if failures else 0)
