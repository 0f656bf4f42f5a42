"""First-order TSK fuzzy rule bases.

Rule ``l`` reads ``IF x_1 is A_1^l AND ... AND x_d is A_d^l THEN
f_l(x) = p_l0 + p_l1 x_1 + ... + p_ld x_d`` with Gaussian fuzzy sets
``exp(-(x - c)**2 / (2 * delta))``. Note ``delta`` divides the squared
distance directly, so it has variance units.

With the antecedents fixed the defuzzified output is linear in the stacked
consequents: ``y = P.T @ g(x)`` where ``g(x)`` concatenates, rule by rule,
the normalized firing strength times ``(1, x)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .fcm import fcm_cluster

SPREAD_FLOOR = 1e-8
LINGUISTIC_LABELS = ("Low", "A little low", "Medium", "A little high", "High")
LABEL_QUANTILES = (0.2, 0.4, 0.6, 0.8)


@dataclass
class Antecedents:
    """Gaussian antecedent parameters of ``L`` rules over ``d`` inputs.

    ``label_cuts`` (``d x 4``) holds the training quantiles used to attach a
    linguistic label to each center in rule dumps.
    """

    centers: np.ndarray
    spreads: np.ndarray
    h: float = 1.0
    label_cuts: np.ndarray | None = None

    def __post_init__(self):
        self.centers = np.ascontiguousarray(np.atleast_2d(self.centers), dtype=float)
        self.spreads = np.ascontiguousarray(np.atleast_2d(self.spreads), dtype=float)
        if self.centers.shape != self.spreads.shape:
            raise ValueError("centers and spreads must have the same shape")
        if np.any(self.spreads <= 0):
            raise ValueError("spreads must be positive")
        if self.label_cuts is not None:
            self.label_cuts = np.asarray(self.label_cuts, dtype=float)

    @property
    def n_rules(self) -> int:
        return self.centers.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.centers.shape[1]

    @property
    def n_features(self) -> int:
        """Length of the mapped vector, ``L * (d + 1)``."""
        return self.n_rules * (self.n_inputs + 1)

    def to_dict(self) -> dict:
        return {
            "centers": self.centers.tolist(),
            "spreads": self.spreads.tolist(),
            "h": self.h,
            "label_cuts": None if self.label_cuts is None else self.label_cuts.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Antecedents":
        return cls(np.asarray(d["centers"], float), np.asarray(d["spreads"], float),
                   float(d["h"]), None if d.get("label_cuts") is None
                   else np.asarray(d["label_cuts"], float))


def estimate_antecedents(data, rules: int, h: float = 1.0, fuzzifier: float = 2.0,
                         max_iter: int = 200, tol: float = 1e-6, seed: int = 0) -> Antecedents:
    """Fit rule centers and spreads from an FCM partition of ``data``.

    Centers are membership-weighted means and spreads ``h`` times the
    membership-weighted squared deviations (weights are the plain FCM
    memberships, not their powers). Spreads are floored at ``1e-8``.
    """
    data = np.asarray(data, dtype=float)
    if rules < 1:
        raise ValueError("rules must be >= 1")
    if h <= 0:
        raise ValueError("h must be positive")
    fcm = fcm_cluster(data, rules, fuzzifier=fuzzifier, max_iter=max_iter, tol=tol, seed=seed)
    u = fcm.memberships
    weight = u.sum(axis=0)[:, None]
    centers = (u.T @ data) / weight
    dev = np.stack([u[:, l] @ (data - centers[l]) ** 2 for l in range(rules)]) / weight
    spreads = np.maximum(h * dev, SPREAD_FLOOR)
    cuts = np.quantile(data, LABEL_QUANTILES, axis=0).T
    return Antecedents(centers, spreads, float(h), cuts)


def membership(x, center, spread):
    """Gaussian membership ``exp(-(x - center)**2 / (2 * spread))``."""
    x = np.asarray(x, dtype=float)
    return np.exp(-((x - center) ** 2) / (2.0 * spread))


def log_firing(x, ant: Antecedents) -> np.ndarray:
    """Log of the product-t-norm firing strength, shape ``(..., L)``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != ant.n_inputs:
        raise ValueError(f"input has {x.shape[-1]} features, rule base expects {ant.n_inputs}")
    diff = x[..., None, :] - ant.centers
    return -np.sum(diff ** 2 / (2.0 * ant.spreads), axis=-1)


def firing_strengths(x, ant: Antecedents):
    """Raw and normalized firing strengths of every rule.

    ``x`` may be one input vector or an ``(n, d)`` batch. The product is formed
    in the log domain and normalized with a max-shift, which only differs from
    ``raw / raw.sum()`` in rounding. When every raw strength underflows to
    zero the normalized strengths fall back to ``1 / L``.
    """
    logf = log_firing(x, ant)
    raw = np.exp(logf)
    shifted = np.exp(logf - logf.max(axis=-1, keepdims=True))
    normalized = shifted / shifted.sum(axis=-1, keepdims=True)
    dead = raw.sum(axis=-1) == 0.0
    if np.any(dead):
        normalized = np.where(dead[..., None], 1.0 / ant.n_rules, normalized)
    return raw, normalized


def map_features(x, ant: Antecedents) -> np.ndarray:
    """Map inputs into the rule-weighted linear feature space.

    Returns a vector of length ``L * (d + 1)`` for a single input, or an
    ``(n, L * (d + 1))`` matrix for a batch; block ``l`` is
    ``normalized_l * (1, x)``.
    """
    x = np.asarray(x, dtype=float)
    _, nf = firing_strengths(x, ant)
    xe = np.concatenate([np.ones(x.shape[:-1] + (1,)), x], axis=-1)
    g = nf[..., :, None] * xe[..., None, :]
    return g.reshape(x.shape[:-1] + (ant.n_features,))


def predict_linear(g, consequents) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    P = np.asarray(consequents, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    if g.shape[-1] != P.shape[0]:
        raise ValueError(f"mapped vector has length {g.shape[-1]}, consequents have {P.shape[0]} rows")
    return g @ P


@dataclass
class FuzzyRuleBase:
    """Antecedents plus a ``(L * (d + 1)) x C`` consequent matrix."""

    antecedents: Antecedents
    consequents: np.ndarray

    def __post_init__(self):
        P = np.ascontiguousarray(self.consequents, dtype=float)
        if P.ndim == 1:
            P = P[:, None]
        if P.shape[0] != self.antecedents.n_features:
            raise ValueError(
                f"consequents need {self.antecedents.n_features} rows, got {P.shape[0]}")
        if not np.all(np.isfinite(P)):
            raise ValueError("consequents must be finite")
        self.consequents = P

    @property
    def n_outputs(self) -> int:
        return self.consequents.shape[1]

    def rule_coefficients(self) -> np.ndarray:
        """Consequents reshaped to ``(L, d + 1, C)``."""
        a = self.antecedents
        return self.consequents.reshape(a.n_rules, a.n_inputs + 1, self.n_outputs)

    def predict(self, x) -> np.ndarray:
        return predict_linear(map_features(x, self.antecedents), self.consequents)

    def to_dict(self) -> dict:
        return {"antecedents": self.antecedents.to_dict(),
                "consequents": self.consequents.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "FuzzyRuleBase":
        return cls(Antecedents.from_dict(d["antecedents"]), np.asarray(d["consequents"], float))


# --------------------------------------------------------------------------
# text dumps

def linguistic_label(value: float, cuts) -> str:
    if cuts is None:
        cuts = LABEL_QUANTILES
    return LINGUISTIC_LABELS[int(np.searchsorted(np.asarray(cuts), value, side="right"))]


def dump_rules(rb: FuzzyRuleBase, feature_names=None, view_name: str = "view",
               precision: int = 6) -> str:
    """Render a rule base as text, one block per rule.

    Each antecedent line gives the linguistic label, center and spread of
    one input; each consequent line lists ``(p_0, p_1, ..., p_d)`` for one
    output. :func:`parse_rule_dump` reads the numbers back.
    """
    ant = rb.antecedents
    d = ant.n_inputs
    names = list(feature_names) if feature_names is not None else [f"x{j + 1}" for j in range(d)]
    if len(names) != d:
        raise ValueError("feature_names length does not match the rule base")
    fmt = f"{{:.{precision}g}}".format
    coef = rb.rule_coefficients()
    lines = [f"# view={view_name} rules={ant.n_rules} inputs={d} "
             f"outputs={rb.n_outputs} h={fmt(ant.h)}"]
    for l in range(ant.n_rules):
        lines.append(f"Rule {l + 1}")
        for j in range(d):
            cuts = None if ant.label_cuts is None else ant.label_cuts[j]
            word = "IF " if j == 0 else "AND"
            c, s = ant.centers[l, j], ant.spreads[l, j]
            lines.append(f"  {word} {names[j]} is {linguistic_label(c, cuts)} "
                         f"(c={fmt(c)}, delta={fmt(s)})")
        lines.append("  THEN")
        for o in range(rb.n_outputs):
            lines.append(f"    output {o + 1}: p = [{', '.join(fmt(v) for v in coef[l, :, o])}]")
    return "\n".join(lines) + "\n"


_HEADER = re.compile(r"#\s*view=(\S*)\s+rules=(\d+)\s+inputs=(\d+)\s+outputs=(\d+)\s+h=(\S+)")
_ANTE = re.compile(r"\(c=([^,]+), delta=([^)]+)\)\s*$")
_CONS = re.compile(r"output\s+(\d+):\s*p\s*=\s*\[([^\]]*)\]")


def parse_rule_dump(text: str) -> FuzzyRuleBase:
    """Rebuild the numeric parameters of a :func:`dump_rules` listing."""
    lines = text.splitlines()
    m = _HEADER.match(lines[0].strip()) if lines else None
    if m is None:
        raise ValueError("missing rule dump header")
    n_rules, d, c_out = int(m.group(2)), int(m.group(3)), int(m.group(4))
    h = float(m.group(5))
    centers, spreads, coef = [], [], []
    for line in lines[1:]:
        line = line.strip()
        if line.startswith("Rule "):
            coef.append([])
        elif (a := _ANTE.search(line)) is not None:
            centers.append(float(a.group(1)))
            spreads.append(float(a.group(2)))
        elif (c := _CONS.search(line)) is not None:
            coef[-1].append([float(v) for v in c.group(2).split(",")])
    centers = np.array(centers).reshape(n_rules, d)
    spreads = np.array(spreads).reshape(n_rules, d)
    P = np.array(coef).reshape(n_rules, c_out, d + 1).transpose(0, 2, 1).reshape(-1, c_out)
    return FuzzyRuleBase(Antecedents(centers, spreads, h), P)
