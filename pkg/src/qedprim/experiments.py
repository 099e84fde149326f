"""Experiment pipelines shared by the CLI and the acceptance suite.

Sampled pipelines draw shot seeds as ``seed + offset + i`` with fixed
per-circuit offsets, so every result is a pure function of its inputs.
"""
from __future__ import annotations

import numpy as np

from .circuit import Circuit, strip_feedforward
from .metrics import (
    GateFidelityResult,
    MqcResult,
    TomographyResult,
    all_zero_probability,
    gate_fidelity,
    mqc_result,
    tomography,
)
from .postprocess import (
    MitigationSpec,
    PostSelectionRule,
    bootstrap_mean,
    mitigate_then_select,
    post_select,
)
from .protocols.batteries import (
    build_certification_battery,
    build_mqc_battery,
    build_tomography_battery,
)
from .sim.counts import Counts
from .sim.exact import exact_distribution
from .sim.noise import NoiseModel
from .sim.rng import shot_keys, uniforms
from .sim.trajectory import bit_roles, run_shots

SIGN_DRAW = 1 << 40  # counter slot for input-sign sampling, far from simulator draws
BOOTSTRAP_B = 50


def flag_bits(circuit: Circuit) -> list[int]:
    return [b for b, r in enumerate(bit_roles(circuit)) if r == "flag"]


def selection(circuit: Circuit, postselect: bool = True, feedforward: bool = True,
              flags=None) -> tuple[Circuit, PostSelectionRule]:
    """Circuit to execute and its acceptance rule.

    Without feedforward the COND ops are removed and shots needing any
    correction are rejected instead.
    """
    use = list(flags) if flags is not None else flag_bits(circuit)
    rule_flags = tuple(use) if postselect else ()
    if feedforward:
        return circuit, PostSelectionRule(rule_flags)
    stripped, parities = strip_feedforward(circuit)
    return stripped, PostSelectionRule(rule_flags, tuple(parities))


def marginal(dist: dict[str, float], positions) -> dict[str, float]:
    out: dict[str, float] = {}
    for k, v in dist.items():
        kk = "".join(k[i] for i in positions)
        out[kk] = out.get(kk, 0.0) + v
    return out


def accepted_marginal(dist: dict[str, float], rule: PostSelectionRule, positions) -> tuple[dict[str, float], float]:
    """Distribution over ``positions`` conditioned on acceptance, and the acceptance probability."""
    order = list(range(len(next(iter(dist)))))
    acc = {k: v for k, v in dist.items() if rule.accepts(k, order)}
    p = sum(acc.values())
    if p <= 0:
        raise ValueError("acceptance probability is zero")
    return {k: v / p for k, v in marginal(acc, positions).items()}, p


# -- CNOT certification ---------------------------------------------------------


def _term_values(term, records_by_draw, weights, rule) -> tuple[np.ndarray, int]:
    vals = []
    total = 0
    for draw, rec in records_by_draw.items():
        total += rec.shape[0]
        ok = rule.mask(rec)
        par = rec[ok][:, term.parity_positions()].sum(axis=1) % 2
        vals.append(weights[draw] * (1 - 2 * par.astype(float)))
    return np.concatenate(vals) if vals else np.zeros(0), total


def certify_cnot(protocol: Circuit, noise: NoiseModel | None, shots: int, seed: int = 0,
                 postselect: bool = True, feedforward: bool = True, b: int = BOOTSTRAP_B) -> dict:
    """Monte Carlo gate fidelity with uniformly sampled input eigenstates.

    Each of the 16 terms gets ``shots`` shots; shot i of term t uses seed
    ``seed + t*shots + i`` both for its input sign and its simulation.
    """
    run_circ, rule = selection(protocol, postselect, feedforward)
    battery = build_certification_battery(run_circ)
    per_term, kept, total = [], 0, 0
    for t, term in enumerate(battery):
        seeds = seed + t * shots + np.arange(shots, dtype=np.int64)
        draws = np.minimum((uniforms(shot_keys(seeds), SIGN_DRAW) * 4).astype(int), 3)
        recs = {d: run_shots(term.circuits[d], noise, seeds[draws == d]) for d in range(4) if np.any(draws == d)}
        vals, n = _term_values(term, recs, {d: term.weight(d) for d in range(4)}, rule)
        if vals.size == 0:
            raise ValueError(f"no accepted shots for term {term.term}")
        per_term.append(vals)
        kept += vals.size
        total += n
    terms = [t.term for t in battery]
    res = gate_fidelity({t: v.mean() for t, v in zip(terms, per_term)}, terms)
    boots = []
    for i in range(b):
        rng = np.random.default_rng([seed, i])
        est = {t: rng.choice(v, v.size).mean() for t, v in zip(terms, per_term)}
        boots.append(gate_fidelity(est, terms).f_gate_raw)
    return {"result": res, "F_gate": res.f_gate, "std": float(np.std(boots, ddof=1)),
            "discard": 1.0 - kept / total, "shots_kept": kept, "shots": total,
            "term_std": [float(v.std(ddof=1) / np.sqrt(v.size)) if v.size > 1 else 0.0 for v in per_term]}


def exact_certification(protocol: Circuit, noise: NoiseModel | None, postselect: bool = True,
                        feedforward: bool = True) -> tuple[GateFidelityResult, float]:
    """Expected value of the sampled estimator, term by term, from exact distributions.

    Returns the fidelity result and the overall acceptance probability.
    """
    run_circ, rule = selection(protocol, postselect, feedforward)
    battery = build_certification_battery(run_circ)
    vals, acc_total = {}, 0.0
    for term in battery:
        num = den = 0.0
        pos = term.parity_positions()
        for d, circ in enumerate(term.circuits):
            dist = exact_distribution(circ, noise)
            order = list(range(circ.n_bits))
            for k, p in dist.items():
                if rule.accepts(k, order):
                    num += p * term.weight(d) * (-1) ** sum(int(k[i]) for i in pos)
                    den += p
        vals[term.term] = num / den
        acc_total += den / 4
    return gate_fidelity(vals, [t.term for t in battery]), acc_total / len(battery)


# -- GHZ / MQC ---------------------------------------------------------------------


def _ghz_rule(ghz: Circuit, flags_used) -> PostSelectionRule:
    fb = ghz.metadata["flag_bits"]
    return PostSelectionRule(tuple(fb[i] for i in flags_used))


def exact_mqc_distributions(ghz: Circuit, noise: NoiseModel | None) -> list[dict[str, float]]:
    """Exact record distributions for every MQC battery circuit (coherence first, population last)."""
    return [exact_distribution(c, noise) for c in build_mqc_battery(ghz).circuits]


def exact_mqc(ghz: Circuit, noise: NoiseModel | None, flags_used=None, dists=None) -> tuple[MqcResult, float]:
    """MQC result from exact distributions post-selected on the chosen flags.

    ``dists`` may carry precomputed :func:`exact_mqc_distributions`.
    Returns the result and the mean discarded probability over the battery.
    """
    flags_used = range(len(ghz.metadata["flag_bits"])) if flags_used is None else flags_used
    rule = _ghz_rule(ghz, flags_used)
    bat = build_mqc_battery(ghz)
    dists = exact_mqc_distributions(ghz, noise) if dists is None else dists
    s_vals, discards = [], []
    for c, dist in zip(bat.coherence, dists):
        d, p = accepted_marginal(dist, rule, c.metadata["data_bits"])
        s_vals.append(all_zero_probability(d))
        discards.append(1 - p)
    pop, p = accepted_marginal(dists[-1], rule, bat.population.metadata["data_bits"])
    discards.append(1 - p)
    return mqc_result(s_vals, pop, bat.n), float(np.mean(discards))


def _data_dist(counts: Counts, rule: PostSelectionRule, data_bits, mitigation: MitigationSpec | None):
    if mitigation is None:
        sel, disc = post_select(counts, rule)
        if sel.n_shots == 0:
            raise ValueError("post-selection kept no shots")
        pos = [sel.bit_order.index(b) for b in data_bits]
        return marginal(sel.probabilities(), pos), disc
    dist, disc = mitigate_then_select(counts, mitigation, rule)
    order = [b for b in counts.bit_order if b not in set(rule.bits)]
    return marginal(dist, [order.index(b) for b in data_bits]), disc


def _mqc_from_counts(bat, counts, rule, mitigation):
    s_vals, discards = [], []
    for c, cnt in zip(bat.coherence, counts):
        d, disc = _data_dist(cnt, rule, c.metadata["data_bits"], mitigation)
        s_vals.append(all_zero_probability(d))
        discards.append(disc)
    pop, disc = _data_dist(counts[-1], rule, bat.population.metadata["data_bits"], mitigation)
    discards.append(disc)
    return mqc_result(s_vals, pop, bat.n), float(np.mean(discards))


def sampled_mqc(ghz: Circuit, noise: NoiseModel | None, shots: int, seed: int = 0, flags_used=None,
                mitigation: MitigationSpec | None = None, b: int = BOOTSTRAP_B) -> dict:
    """Sampled MQC battery; circuit k uses seeds ``seed + k*shots + i``."""
    flags_used = range(len(ghz.metadata["flag_bits"])) if flags_used is None else flags_used
    rule = _ghz_rule(ghz, flags_used)
    bat = build_mqc_battery(ghz)
    circs = bat.circuits
    counts = []
    for k, c in enumerate(circs):
        rec = run_shots(c, noise, seed + k * shots + np.arange(shots, dtype=np.int64))
        counts.append(Counts.from_records(rec, list(range(c.n_bits)), bit_roles(c)))
    res, disc = _mqc_from_counts(bat, counts, rule, mitigation)
    boots = []
    for i in range(b):
        rng = np.random.default_rng([seed, i])
        resampled = [_resample(c, rng) for c in counts]
        try:
            boots.append(_mqc_from_counts(bat, resampled, rule, mitigation)[0].fidelity)
        except ValueError:
            continue
    std = float(np.std(boots, ddof=1)) if len(boots) > 1 else 0.0
    return {"result": res, "std": std, "discard": disc, "counts": counts}


def _resample(counts: Counts, rng: np.random.Generator) -> Counts:
    keys = sorted(counts.counts)
    p = np.array([counts.counts[k] for k in keys], dtype=float) / counts.n_shots
    draw = rng.multinomial(counts.n_shots, p)
    return Counts({k: int(v) for k, v in zip(keys, draw) if v}, counts.n_shots,
                  list(counts.bit_order), list(counts.roles))


# -- Bell tomography ------------------------------------------------------------------


def _tomo_dists(battery, counts_or_dists, rule, exact: bool):
    out, discards = {}, []
    for basis, c in battery.items():
        pos = c.metadata["output_bits"]
        if exact:
            d, p = accepted_marginal(counts_or_dists[basis], rule, pos)
            discards.append(1 - p)
        else:
            sel, disc = post_select(counts_or_dists[basis], rule, drop=False)
            if sel.n_shots == 0:
                raise ValueError(f"no accepted shots in basis {basis}")
            d = marginal(sel.probabilities(), pos)
            discards.append(disc)
        out[basis] = d
    return out, float(np.mean(discards))


def exact_tomography(bell: Circuit, noise: NoiseModel | None, postselect: bool = True,
                     feedforward: bool = True) -> tuple[TomographyResult, float]:
    run_circ, rule = selection(bell, postselect, feedforward)
    bat = build_tomography_battery(run_circ)
    dists = {k: exact_distribution(c, noise) for k, c in bat.items()}
    d, disc = _tomo_dists(bat, dists, rule, exact=True)
    return tomography(d), disc


def sampled_tomography(bell: Circuit, noise: NoiseModel | None, shots: int, seed: int = 0,
                       postselect: bool = True, feedforward: bool = True, b: int = BOOTSTRAP_B) -> dict:
    run_circ, rule = selection(bell, postselect, feedforward)
    bat = build_tomography_battery(run_circ)
    counts = {}
    for k, (basis, c) in enumerate(bat.items()):
        rec = run_shots(c, noise, seed + k * shots + np.arange(shots, dtype=np.int64))
        counts[basis] = Counts.from_records(rec, list(range(c.n_bits)), bit_roles(c))
    d, disc = _tomo_dists(bat, counts, rule, exact=False)
    res = tomography(d)
    boots = []
    for i in range(b):
        rng = np.random.default_rng([seed, i])
        rd, _ = _tomo_dists(bat, {k: _resample(c, rng) for k, c in counts.items()}, rule, exact=False)
        r = tomography(rd)
        boots.append((r.fidelity, r.purity, r.concurrence))
    std = np.std(np.array(boots), axis=0, ddof=1)
    return {"result": res, "std": {"fidelity": float(std[0]), "purity": float(std[1]), "concurrence": float(std[2])},
            "discard": disc}


def mean_with_error(values, b: int = BOOTSTRAP_B, seed: int = 0) -> tuple[float, float]:
    return bootstrap_mean(values, b, seed)
