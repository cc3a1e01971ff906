"""Acceptance suite: grades the simulator against the reference tables t1..t7
and the structural/oracle contracts, at 20000 runs per cell.

Tolerances: bin masses +/-0.02 absolute, d' +/-0.15, likelihood ratios 15%
relative, strong-vs-simple naive d' gap 0.05.  Each criterion prints one
PASS/FAIL line (run pytest with -s to see them inline).

Two criteria are expected to fail; the implementation follows the documented
procedure definitions exactly and the failures are real, reproducible
discrepancies against the reference tables, not bugs:

* criterion 2 (clamped proper Bayes): clipping belief parameters into
  [.05, .95] leaves more mass in the .89-1.0 bin than the reference
  (~.448 vs .414 at error 0).  Softer suppression schemes (rescaling,
  banded windows, banded generators) bracket the reference values but none
  reproduces all three columns within +/-0.02.
* criterion 6 (default models, Table t7): with per-item marginal likelihood
  ratios, the definition this package implements (and its worked M0 examples
  imply), a stricter threshold produces FEWER extreme conclusions, the
  opposite of the reference ordering, and atom masses deviate by up to ~.19.
  Chain-conditional ratios reproduce the ordering but not the masses.
"""

import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from beliefsim import (ExperimentConfig, Procedure, all_states, joint_table,
                       perturb, run_experiment, sample_true_model,
                       marginal_likelihood, posterior_true, naive_bayes, linear,
                       default_rule, evidence_prob_given_h,
                       conditional_likelihood_given_prefix, joint, accumulate,
                       brier, dprime)
from beliefsim import engine
from beliefsim.metrics import ConditionalSummary
from beliefsim.procedures import DEFAULT_BAND

import oracles
from conftest import as_oracle, random_model

ACCEPT_SEED = 101
RUNS = 20000

MASS_TOL = 0.02
DPRIME_TOL = 0.15
LR_REL_TOL = 0.15

# reference values, transcribed independently of src/beliefsim/reference.py
T1 = {
    (4, 0.0): ([.068, .050, .048, .049, .053, .063, .080, .122, .467], 1.00),
    (4, 0.4): ([.075, .055, .053, .052, .057, .066, .087, .127, .428], 0.88),
    (4, 1.2): ([.151, .082, .071, .063, .066, .072, .083, .114, .298], 0.32),
    (7, 0.0): ([.047, .031, .029, .030, .033, .039, .054, .088, .650], 1.61),
    (7, 0.4): ([.058, .037, .035, .034, .039, .046, .060, .097, .593], 1.34),
    (7, 1.2): ([.159, .065, .052, .049, .051, .056, .068, .100, .399], 0.46),
}
T2 = {
    0.0: ([.046, .053, .053, .056, .062, .075, .094, .146, .414], 1.02),
    0.4: ([.053, .058, .057, .059, .065, .077, .098, .145, .387], 0.91),
    1.2: ([.116, .091, .080, .075, .077, .084, .097, .131, .249], 0.34),
}
T3 = {
    (4, 0.0): ([.091, .070, .066, .066, .070, .080, .097, .137, .321], 0.60),
    (4, 0.4): ([.091, .076, .069, .070, .074, .085, .102, .139, .294], 0.54),
    (4, 1.2): ([.131, .095, .088, .085, .086, .089, .101, .122, .203], 0.19),
    (7, 0.0): ([.090, .068, .060, .065, .067, .073, .090, .131, .356], 0.68),
    (7, 0.4): ([.090, .071, .070, .071, .075, .082, .098, .139, .304], 0.60),
    (7, 1.2): ([.138, .094, .085, .081, .082, .085, .099, .123, .212], 0.21),
}
T4 = {
    (4, 0.0): ([.006, .054, .000, .200, .000, .347, .000, .295, .101], 0.89),
    (4, 0.4): ([.008, .062, .000, .210, .000, .343, .000, .287, .091], 0.82),
    (4, 1.2): ([.020, .111, .000, .274, .000, .337, .000, .209, .050], 0.32),
    (7, 0.0): ([.000, .004, .023, .083, .192, .283, .253, .134, .028], 1.23),
    (7, 0.4): ([.000, .004, .026, .093, .207, .283, .241, .120, .025], 1.00),
    (7, 1.2): ([.002, .016, .067, .165, .255, .262, .165, .058, .010], 0.45),
}
T5 = {
    (4, 0.0): ([.013, .084, .000, .229, .000, .324, .000, .263, .088], 0.63),
    (4, 0.4): ([.015, .090, .000, .236, .000, .327, .000, .250, .082], 0.56),
    (4, 1.2): ([.025, .131, .000, .286, .000, .325, .000, .188, .045], 0.19),
    (7, 0.0): ([.001, .014, .057, .143, .232, .254, .187, .089, .023], 0.66),
    (7, 0.4): ([.002, .015, .061, .151, .238, .253, .183, .080, .017], 0.59),
    (7, 1.2): ([.003, .025, .092, .197, .263, .236, .131, .045, .008], 0.19),
}
T6 = {
    (0.0, "proper_bayes"): [.145, .420, .596, .777, .972, 1.280, 1.650, 2.367, 7.129],
    (0.0, "simple_naive"): [.285, .521, .675, .796, .980, 1.204, 1.452, 1.920, 3.588],
    (0.0, "strong_linear"): [.103, .178, .311, .567, .985, 1.783, 3.119, 5.510, 9.953],
    (1.2, "proper_bayes"): [.517, .719, .830, .882, .976, 1.099, 1.208, 1.378, 1.949],
    (1.2, "simple_naive"): [.654, .796, .844, .933, 1.005, 1.064, 1.194, 1.280, 1.498],
    (1.2, "strong_linear"): [.513, .558, .689, .851, 1.001, 1.202, 1.391, 1.761, 1.942],
}
T7 = {
    (1.5, 0.0): [.098, .575, .327],
    (1.5, 0.4): [.110, .569, .322],
    (1.5, 1.2): [.165, .597, .237],
    (2.5, 0.0): [.182, .391, .426],
    (2.5, 0.4): [.207, .376, .417],
    (2.5, 1.2): [.255, .411, .334],
}


def criterion(number, label, failures, total):
    status = "PASS" if not failures else "FAIL"
    line = f"ACCEPTANCE {number} [{label}]: {status} ({total - len(failures)}/{total} checks)"
    print(line)
    for f in failures[:12]:
        print(f"    {f}")
    assert not failures, line


@pytest.fixture(scope="session")
def panel_n4():
    config = ExperimentConfig(
        master_seed=ACCEPT_SEED, evidence_counts=(4,), error_ranges=(0.0, 0.4, 1.2),
        runs_per_cell=RUNS,
        procedures=(Procedure("proper_bayes"), Procedure("simple_naive"),
                    Procedure("strong_naive"), Procedure("complex_linear"),
                    Procedure("simple_linear"), Procedure("strong_linear"),
                    Procedure("default", threshold=1.5),
                    Procedure("default", threshold=2.5)))
    return {(r.label, r.error_range): r for r in run_experiment(config)}


@pytest.fixture(scope="session")
def panel_n7():
    config = ExperimentConfig(
        master_seed=ACCEPT_SEED, evidence_counts=(7,), error_ranges=(0.0, 0.4, 1.2),
        runs_per_cell=RUNS,
        procedures=(Procedure("proper_bayes"), Procedure("simple_naive"),
                    Procedure("strong_naive"), Procedure("complex_linear"),
                    Procedure("simple_linear")))
    return {(r.label, r.error_range): r for r in run_experiment(config)}


@pytest.fixture(scope="session")
def panel_clamped():
    config = ExperimentConfig(
        master_seed=ACCEPT_SEED, evidence_counts=(4,), error_ranges=(0.0, 0.4, 1.2),
        runs_per_cell=RUNS, clamp=(0.05, 0.95),
        procedures=(Procedure("proper_bayes"),))
    return {r.error_range: r for r in run_experiment(config)}


@pytest.fixture(scope="session")
def panel_brier_high():
    config = ExperimentConfig(
        master_seed=ACCEPT_SEED, evidence_counts=(4,),
        error_ranges=(1.4, 1.6, 1.8, 2.0), runs_per_cell=RUNS,
        procedures=(Procedure("proper_bayes"),))
    return {r.error_range: r for r in run_experiment(config)}


def mass_failures(table, panel, label, n_filter=None):
    failures = []
    total = 0
    for key, (masses, dp) in table.items():
        n, err = key if isinstance(key, tuple) else (4, key)
        if n_filter is not None and n != n_filter:
            continue
        cell = panel[(label, err)] if (label, err) in panel else panel[err]
        for k, want in enumerate(masses):
            total += 1
            got = cell.hist_t[k]
            if abs(got - want) > MASS_TOL:
                failures.append(f"n={n} err={err} bin{k}: got {got:.3f} want {want:.3f}")
        total += 1
        if abs(cell.dprime - dp) > DPRIME_TOL:
            failures.append(f"n={n} err={err} d': got {cell.dprime:.3f} want {dp:.2f}")
    return failures, total


def split_panel(panel_n4, panel_n7, label):
    merged = {}
    for (lbl, err), r in panel_n4.items():
        if lbl == label:
            merged[(4, err)] = r
    for (lbl, err), r in panel_n7.items():
        if lbl == label:
            merged[(7, err)] = r
    return merged


def table_failures(table, cells):
    failures = []
    total = 0
    for (n, err), (masses, dp) in table.items():
        cell = cells[(n, err)]
        for k, want in enumerate(masses):
            total += 1
            got = cell.hist_t[k]
            if abs(got - want) > MASS_TOL:
                failures.append(f"n={n} err={err} bin{k}: got {got:.3f} want {want:.3f}")
        total += 1
        if abs(cell.dprime - dp) > DPRIME_TOL:
            failures.append(f"n={n} err={err} d': got {cell.dprime:.3f} want {dp:.2f}")
    return failures, total


def test_criterion_1_proper_bayes_tables(panel_n4, panel_n7):
    cells = split_panel(panel_n4, panel_n7, "proper_bayes")
    failures, total = table_failures(T1, cells)
    criterion(1, "t1 proper Bayes masses and d'", failures, total)


def test_criterion_2_clamped_dprime_and_ushape(panel_clamped):
    failures = []
    total = 0
    for err, (_, dp) in T2.items():
        total += 1
        got = panel_clamped[err].dprime
        if abs(got - dp) > DPRIME_TOL:
            failures.append(f"err={err} d': got {got:.3f} want {dp:.2f}")
    total += 1
    cell = panel_clamped[1.2]
    if not cell.hist_t[0] > cell.hist_t[1]:
        failures.append(f"U-shape: mass(.00-.11)={cell.hist_t[0]:.3f} "
                        f"not > mass(.11-.22)={cell.hist_t[1]:.3f}")
    criterion(2, "t2 clamped d' and U-shape", failures, total)


def test_criterion_2_clamped_bin_masses(panel_clamped):
    """Known discrepancy: hard clipping leaves ~.03 extra mass in .89-1.0."""
    failures = []
    total = 0
    for err, (masses, _) in T2.items():
        cell = panel_clamped[err]
        for k, want in enumerate(masses):
            total += 1
            got = cell.hist_t[k]
            if abs(got - want) > MASS_TOL:
                failures.append(f"err={err} bin{k}: got {got:.3f} want {want:.3f}")
    criterion(2, "t2 clamped bin masses", failures, total)


def test_criterion_3_naive_bayes(panel_n4, panel_n7):
    cells = split_panel(panel_n4, panel_n7, "simple_naive")
    failures, total = table_failures(T3, cells)
    strong = split_panel(panel_n4, panel_n7, "strong_naive")
    for key, cell in cells.items():
        total += 1
        gap = abs(cell.dprime - strong[key].dprime)
        if gap > 0.05:
            failures.append(f"{key}: strong-vs-simple naive d' gap {gap:.3f} > 0.05")
    criterion(3, "t3 naive Bayes masses, d', strong-naive proximity", failures, total)


def test_criterion_4_linear_tables(panel_n4, panel_n7):
    failures, total = table_failures(T4, split_panel(panel_n4, panel_n7, "complex_linear"))
    f5, t5 = table_failures(T5, split_panel(panel_n4, panel_n7, "simple_linear"))
    failures += f5
    total += t5
    criterion(4, "t4/t5 linear masses and d'", failures, total)


def test_criterion_4_structural_zeros(panel_n4):
    failures = []
    total = 0
    for label in ("complex_linear", "simple_linear"):
        for err in (0.0, 0.4, 1.2):
            cell = panel_n4[(label, err)]
            for k in (2, 4, 6):
                total += 1
                if cell.hist_t[k] != 0.0 or cell.hist_f[k] != 0.0:
                    failures.append(f"{label} err={err} bin{k}: "
                                    f"({cell.hist_t[k]!r}, {cell.hist_f[k]!r}) != 0")
    criterion(4, "linear structural zeros (exact)", failures, total)


def test_criterion_4_linear_outputs_on_lattice():
    # raw engine outputs for the linear procedures sit exactly on k/(n+1)
    failures = []
    total = 0
    for n in (4, 7):
        layout = engine._StateLayout.get(n)
        key = engine.encode_cell_key(n, 0.4, None)
        n_params = 2 ** (n + 1) - 1
        true, rnd = engine._generate_parameters(ACCEPT_SEED, key, 0, 256, n_params)
        lo = np.maximum(0.0, true - 0.2)
        hi = np.minimum(1.0, true + 0.2)
        belief = lo + (hi - lo) * rnd
        prior_b, cond_b = engine._split(belief, n)
        joint_b = engine._joint(prior_b, cond_b)
        w_t = joint_b[:, 1, :] / prior_b[:, None]
        w_f = joint_b[:, 0, :] / (1.0 - prior_b)[:, None]
        marg_t = engine._marginals(w_t, n)
        marg_f = engine._marginals(w_f, n)
        for kind in ("simple_linear", "complex_linear"):
            total += 1
            pb, _ = engine._posteriors(Procedure(kind), prior_b, cond_b, joint_b,
                                       marg_t, marg_f, layout)
            lattice = np.round(pb * (n + 1)) / (n + 1)
            if not np.array_equal(pb, lattice):
                failures.append(f"{kind} n={n}: outputs off the k/(n+1) lattice")
    criterion(4, "linear outputs bit-exact on k/(n+1)", failures, total)


def test_criterion_5_lr_tables(panel_n4):
    failures = []
    total = 0
    for (err, label), wants in T6.items():
        cell = panel_n4[(label, err)]
        for k, want in enumerate(wants):
            total += 1
            got = cell.lr[k]
            if abs(got - want) / want > LR_REL_TOL:
                failures.append(f"{label} err={err} bin{k}: LR {got:.3f} want {want:.3f}")
    total += 1
    top = panel_n4[("proper_bayes", 0.0)].lr[8]
    if not top < 8.1:
        failures.append(f"proper top-bin LR {top:.3f} not < 8.1")
    criterion(5, "t6 likelihood ratios and calibration bound", failures, total)


def test_criterion_6_default_atom_masses(panel_n4):
    """Known discrepancy: marginal-LR default rule misses t7 masses (see module doc)."""
    failures = []
    total = 0
    for (threshold, err), wants in T7.items():
        cell = panel_n4[(f"default_t{threshold:g}", err)]
        for atom_bin, want in zip((0, 4, 8), wants):
            total += 1
            got = cell.hist_t[atom_bin]
            if abs(got - want) > MASS_TOL:
                failures.append(f"T={threshold} err={err} bin{atom_bin}: "
                                f"got {got:.3f} want {want:.3f}")
    criterion(6, "t7 default atom masses", failures, total)


def test_criterion_6_threshold_ordering(panel_n4):
    """Known discrepancy: the implemented rule inverts the stringency ordering."""
    failures = []
    total = 0
    for err in (0.0, 0.4, 1.2):
        total += 1
        lo = panel_n4[("default_t1.5", err)].hist_t[0]
        hi = panel_n4[("default_t2.5", err)].hist_t[0]
        if not hi > lo:
            failures.append(f"err={err}: wrong-extreme mass T=5/2 ({hi:.3f}) "
                            f"not > T=3/2 ({lo:.3f})")
    criterion(6, "t7 wrong-extreme ordering across thresholds", failures, total)


def test_criterion_7_brier(panel_n4, panel_brier_high):
    failures = []
    total = 2
    at_zero = panel_n4[("proper_bayes", 0.0)].brier
    if not at_zero <= 0.25:
        failures.append(f"brier at error 0 is {at_zero:.4f}, not <= 0.25")
    at_12 = panel_n4[("proper_bayes", 1.2)].brier
    if not at_12 > 0.25:
        failures.append(f"brier at error 1.2 is {at_12:.4f}, not > 0.25")
    for err, cell in sorted(panel_brier_high.items()):
        total += 1
        if not cell.brier > 0.25:
            failures.append(f"brier at error {err} is {cell.brier:.4f}, not > 0.25")
    criterion(7, "proper-Bayes Brier above/below 0.25", failures, total)


def test_criterion_8_exact_oracles(m0):
    failures = []
    total = 0
    # proper Bayes at error range 0 equals the true posterior, 1000 models per n
    for n in range(1, 8):
        worst = 0.0
        for k in range(1000):
            rng = np.random.default_rng(np.random.SeedSequence((808, n, k)))
            true_model = sample_true_model(n, rng)
            belief = perturb(true_model, 0.0, rng)
            jt = joint_table(true_model)
            jb = joint_table(belief)
            post = jt[1] / (jt[0] + jt[1])
            pb = jb[1] / (jb[0] + jb[1])
            worst = max(worst, float(np.max(np.abs(pb - post))))
        total += 1
        if worst > 1e-12:
            failures.append(f"n={n}: max |PB - posterior| = {worst:.2e}")
    # marginal likelihoods match brute-force joint sums
    for seed in range(40):
        n = 2 + seed % 4
        model = random_model(n, 10_000 + seed)
        prior, cond, _ = as_oracle(model)
        total += 1
        worst = max(abs(marginal_likelihood(model, i, v, h)
                        - oracles.marginal(prior, cond, n, i, v, h))
                    for i in range(n) for v in (0, 1) for h in (0, 1))
        if worst > 1e-12:
            failures.append(f"marginal mismatch {worst:.2e} on model seed {seed}")
    # M0 worked examples, verified against the enumeration oracle to 5 decimals
    prior, cond, n = as_oracle(m0)
    pbs = {e: posterior_true(m0, e) for e in all_states(2)}
    hist_t, hist_f, sum_t, sum_f = accumulate(m0, pbs)
    cases = [
        ("joint T,(T,T)", joint(m0, 1, (1, 1)), oracles.joint(prior, cond, 1, (1, 1)), 0.50400),
        ("joint F,(F,F)", joint(m0, 0, (0, 0)), oracles.joint(prior, cond, 0, (0, 0)), 0.04800),
        ("posterior (T,T)", posterior_true(m0, (1, 1)), oracles.posterior(prior, cond, (1, 1)), 0.96923),
        ("posterior (T,F)", posterior_true(m0, (1, 0)), oracles.posterior(prior, cond, (1, 0)), 0.46667),
        ("weight T,(T,T)", evidence_prob_given_h(m0, (1, 1), 1), oracles.evidence_weight(prior, cond, (1, 1), 1), 0.63000),
        ("weight F,(F,F)", evidence_prob_given_h(m0, (0, 0), 0), oracles.evidence_weight(prior, cond, (0, 0), 0), 0.24000),
        ("marginal B=T|T", marginal_likelihood(m0, 1, 1, 1), oracles.marginal(prior, cond, 2, 1, 1, 1), 0.78000),
        ("marginal B=T|F", marginal_likelihood(m0, 1, 1, 0), oracles.marginal(prior, cond, 2, 1, 1, 0), 0.44000),
        ("cond B=T|T,A=T", conditional_likelihood_given_prefix(m0, 1, 1, 1, (1,)), oracles.conditional_given_prefix(cond, 1, 1, 1, (1,)), 0.90000),
        ("cond A=T|F", conditional_likelihood_given_prefix(m0, 0, 1, 0, ()), oracles.conditional_given_prefix(cond, 0, 1, 0, ()), 0.40000),
        ("naive (T,T)", naive_bayes(m0, (1, 1)), oracles.naive(prior, cond, 2, (1, 1)), 0.92542),
        ("naive (F,F)", naive_bayes(m0, (0, 0)), oracles.naive(prior, cond, 2, (0, 0)), 0.44000),
        ("proper (F,F)", posterior_true(m0, (0, 0)), oracles.posterior(prior, cond, (0, 0)), 0.71429),
        ("simple lin (T,T)", linear(m0, (1, 1), "simple"), oracles.linear(prior, cond, 2, (1, 1), "simple"), 1.00000),
        ("simple lin (F,F)", linear(m0, (0, 0), "simple"), oracles.linear(prior, cond, 2, (0, 0), "simple"), 0.33333),
        ("complex lin (F,F)", linear(m0, (0, 0), "complex"), oracles.linear(prior, cond, 2, (0, 0), "complex"), 0.66667),
        ("default (T,T) 3/2", default_rule(m0, (1, 1), 1.5), oracles.default(prior, cond, 2, (1, 1), 1.5), 1.00000),
        ("default (T,F) 3/2", default_rule(m0, (1, 0), 1.5), oracles.default(prior, cond, 2, (1, 0), 1.5), 0.50000),
        ("default (T,T) 5/2", default_rule(m0, (1, 1), 2.5), oracles.default(prior, cond, 2, (1, 1), 2.5), 0.50000),
        ("accumulate mean|T", sum_t.mean, oracles.accumulate(prior, cond, 2, pbs)[2][0], 0.84417),
        ("accumulate mean|F", sum_f.mean, oracles.accumulate(prior, cond, 2, pbs)[3][0], 0.62330),
        ("brier true posterior", brier(m0, pbs), oracles.brier(prior, cond, 2, pbs), 0.12466),
        ("dprime hand case", dprime(ConditionalSummary(.8, .04), ConditionalSummary(.2, .04)),
         oracles.dprime(.8, .04, .2, .04), 2.12132),
    ]
    for name, got, oracle_value, frozen in cases:
        total += 1
        if abs(got - oracle_value) > 1e-10 or abs(got - frozen) > 5.1e-6:
            failures.append(f"{name}: got {got!r}, oracle {oracle_value!r}, frozen {frozen}")
    criterion(8, "exact oracle properties and M0 worked examples", failures, total)


def test_criterion_9_dependency_gain(panel_n4, panel_n7):
    failures = []
    gains = {
        label: panel_n7[(label, 0.0)].dprime - panel_n4[(label, 0.0)].dprime
        for label in ("proper_bayes", "complex_linear", "simple_naive", "simple_linear")
    }
    for label in ("proper_bayes", "complex_linear"):
        if not gains[label] > 0.2:
            failures.append(f"{label}: d' gain {gains[label]:.3f} not > 0.2")
    for label in ("simple_naive", "simple_linear"):
        if not abs(gains[label]) < 0.1:
            failures.append(f"{label}: |d' change| {abs(gains[label]):.3f} not < 0.1")
    criterion(9, "d' grows with n only when dependencies are modeled", failures, 4)


def test_criterion_10_determinism(tmp_path):
    failures = []
    digests = []
    for out in ("a", "b"):
        proc = subprocess.run(
            [sys.executable, "-m", "beliefsim", "reproduce", "--table", "t1",
             "--seed", "42", "--runs", "300", "--out", str(tmp_path / out)],
            capture_output=True, text=True,
            cwd=Path(__file__).resolve().parent.parent)
        if proc.returncode not in (0, 3):
            failures.append(f"reproduce exited {proc.returncode}: {proc.stderr[-200:]}")
        digests.append(((tmp_path / out / "histograms.csv").read_bytes(),
                        (tmp_path / out / "summary.csv").read_bytes()))
    if digests[0] != digests[1]:
        failures.append("reproduce CSVs differ between identical invocations")
    config = ExperimentConfig(master_seed=42, evidence_counts=(3, 4),
                              error_ranges=(0.0, 0.8), runs_per_cell=50,
                              procedures=(Procedure("proper_bayes"),
                                          Procedure("default", threshold=1.5)))
    seq = run_experiment(config, workers=1)
    par = run_experiment(config, workers=3)
    for x, y in zip(seq, par):
        if not (np.array_equal(x.hist_t, y.hist_t) and x.dprime == y.dprime
                and x.brier == y.brier):
            failures.append(f"worker-count variance in cell {x.label}")
    criterion(10, "byte-identical reruns and worker invariance", failures, 3)
