"""Property selection and compression into per-group amino-acid descriptors.

Pipeline: normality filter -> keyword grouping -> per-group first principal
component. k-means and the Calinski-Harabasz index are provided for exploring
cluster structure in property value vectors; they do not feed the descriptors.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .aaindex import AMINO_ACIDS, PropertyRecord

log = logging.getLogger(__name__)

DESCRIPTOR_SCHEMA_VERSION = 1

KEYWORDS = (
    "alpha_structure",
    "beta_structure",
    "energy",
    "hydropathy",
    "hydrophobicity",
    "other_indexes",
    "secondary_structure",
    "volume",
)
GROUP_IDS = {kw: f"ID-{i + 1:02d}" for i, kw in enumerate(KEYWORDS)}
FALLBACK_KEYWORD = "other_indexes"

# Kolmogorov distribution quantiles: asymptotic critical value is c / sqrt(n)
ASYMPTOTIC_KS_C = {0.10: 1.224, 0.05: 1.358, 0.01: 1.628}

# Critical values of the KS statistic for n = 20 when mean and standard
# deviation are estimated from the same sample (Lilliefors setting).
# Monte Carlo, 2e6 standard-normal samples, seed 12345.
LILLIEFORS_N20 = {0.10: 0.1764, 0.05: 0.1920, 0.01: 0.2233}

# Ordered (keyword, substrings) rules; the first rule with a substring hit
# wins. A keyword may appear in more than one rule so that narrow phrases can
# outrank broad ones (e.g. "window position" before "helix").
DEFAULT_LEXICON: tuple[tuple[str, tuple[str, ...]], ...] = (
    ("secondary_structure", (
        "coil", "termini", "relative preference value", "fractional occurrence",
        "linker", "zeta", "aperiodic", "conformational state", "loop",
        "reversal", "turn", "bend",
    )),
    ("energy", (
        "energy", "energies", "thermodynamic", "entropy", "enthalpy",
        "heat capacity", "gibbs", "stability", "delta g", "melting", "equilibrium",
    )),
    ("beta_structure", ("beta", "sheet", "strand", "extended", "bata-")),
    ("secondary_structure", ("information measure", "n-terminal", "c-terminal")),
    ("hydropathy", (
        "hydropathy", "hydrophilic", "hydration", "solvation", "polarity",
        "polar requirement", "amphiphilic", "partition", "lipophilic", "retention",
    )),
    ("hydrophobicity", ("hydrophob", "hplc", "rf ", "regression analysis")),
    ("alpha_structure", (
        "alpha-helix", "alpha helix", "helix", "helical", "alpha region",
        "alpha-region", "alpha-protein",
    )),
    ("secondary_structure", (
        "secondary structure", "conformation", "composition", "compositino",
        "occurrence", "distribution", "zimm", "flexibility", "population",
        "frequency", "propensit", "probability", "preference",
    )),
    ("volume", (
        "volume", "size", "bulk", "weight", "area", "surface", "length", "width",
        "steric", "radius", "diameter", "atom", "graph", "eigenvalue", "vertices",
        "edges", "eccentricity", "domination", "degree", "distance", "refractiv",
        "polariz", "mass", "gyration", "number of", "side chain", "contact",
        "buried", "accessib", "exposed", "membrane", "chemical shift", "theta",
        "angle", "charge", "van der waals", "pk", "electrical", "kerr", "water",
        "isoelectric", "bitter", "point", "shape", "parameter", "interactivity",
        "pressure",
    )),
)


class DegeneratePartitionError(ValueError):
    pass


@dataclass
class PropertyGroup:
    group_id: str
    keyword: str
    members: list[PropertyRecord] = field(default_factory=list)


@dataclass(frozen=True)
class AminoAcidDescriptor:
    group_id: str
    weights: dict[str, float]
    explained_variance: float
    keyword: str = ""
    member_accessions: tuple[str, ...] = ()

    def vector(self) -> np.ndarray:
        return np.array([self.weights[aa] for aa in AMINO_ACIDS], dtype=float)


@dataclass(frozen=True)
class ClusterPartition:
    labels: np.ndarray
    k: int
    score: float = math.nan


# --------------------------------------------------------------------------
# normality filter


def ks_statistic(values: Sequence[float]) -> float:
    """One-sample KS distance between standardized values and N(0, 1).

    Values are standardized with the sample mean and the (ddof=1) sample
    standard deviation.
    """
    from scipy.special import ndtr

    x = np.asarray(values, dtype=float)
    n = x.size
    sd = x.std(ddof=1)
    z = np.sort((x - x.mean()) / sd)
    cdf = ndtr(z)
    i = np.arange(1, n + 1)
    return float(max((i / n - cdf).max(), (cdf - (i - 1) / n).max()))


def ks_critical_value(alpha: float, n: int = 20, method: str = "lilliefors") -> float:
    if method == "asymptotic":
        if alpha not in ASYMPTOTIC_KS_C:
            raise ValueError(f"alpha must be one of {sorted(ASYMPTOTIC_KS_C)}, got {alpha}")
        return ASYMPTOTIC_KS_C[alpha] / math.sqrt(n)
    if method == "lilliefors":
        if n != 20:
            raise ValueError("tabulated Lilliefors critical values exist only for n=20")
        if alpha not in LILLIEFORS_N20:
            raise ValueError(f"alpha must be one of {sorted(LILLIEFORS_N20)}, got {alpha}")
        return LILLIEFORS_N20[alpha]
    raise ValueError(f"unknown critical value method {method!r}")


def ks_normality_filter(
    records: Iterable[PropertyRecord], alpha: float = 0.05, method: str = "lilliefors"
) -> list[PropertyRecord]:
    """Keep records whose 20 values are compatible with a normal distribution.

    A record is kept when its KS statistic is strictly below the critical
    value. ``method="lilliefors"`` (default) uses critical values for the
    estimated-parameter case; ``method="asymptotic"`` uses c(alpha)/sqrt(20).
    Zero-variance records are dropped.
    """
    crit = ks_critical_value(alpha, 20, method)
    kept = []
    for rec in records:
        v = rec.vector()
        if v.size != 20 or np.isnan(v).any():
            raise AssertionError(f"{rec.accession}: normality filter needs 20 complete values")
        if np.ptp(v) == 0:
            log.info("dropping %s: zero variance", rec.accession)
            continue
        if ks_statistic(v) < crit:
            kept.append(rec)
    return kept


# --------------------------------------------------------------------------
# clustering


def _kmeans_pp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = [X[rng.integers(n)]]
    d2 = ((X - centers[0]) ** 2).sum(1)
    for _ in range(1, k):
        total = d2.sum()
        if total == 0:
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=d2 / total)
        centers.append(X[idx])
        d2 = np.minimum(d2, ((X - X[idx]) ** 2).sum(1))
    return np.array(centers)


def kmeans_cluster(vectors, k: int, seed: int = 0, max_iter: int = 300) -> ClusterPartition:
    """Lloyd's k-means with k-means++ seeding.

    Stops when assignments no longer change or after ``max_iter`` rounds.
    The returned partition carries the Calinski-Harabasz score (NaN when the
    partition is degenerate).
    """
    X = np.asarray(vectors, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] == 0:
        raise ValueError("kmeans_cluster: empty input")
    if k < 2:
        raise ValueError("kmeans_cluster: k must be >= 2")
    n_distinct = np.unique(X, axis=0).shape[0]
    if k > n_distinct:
        raise ValueError(f"kmeans_cluster: k={k} exceeds {n_distinct} distinct vectors")

    rng = np.random.default_rng(seed)
    centers = _kmeans_pp_init(X, k, rng)
    labels = None
    for _ in range(max_iter):
        dist = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(-1)
        new = dist.argmin(1)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for j in range(k):
            members = X[labels == j]
            if len(members):
                centers[j] = members.mean(0)
            else:
                # re-seed an empty cluster at the point farthest from its center
                far = dist[np.arange(len(X)), labels].argmax()
                centers[j] = X[far]
    part = ClusterPartition(labels=labels, k=k)
    try:
        score = calinski_harabasz(X, part)
    except DegeneratePartitionError:
        score = math.nan
    return ClusterPartition(labels=labels, k=k, score=score)


def calinski_harabasz(vectors, partition: ClusterPartition | Sequence[int]) -> float:
    """Between/within dispersion ratio, each normalized by its degrees of freedom."""
    X = np.asarray(vectors, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    labels = np.asarray(partition.labels if isinstance(partition, ClusterPartition) else partition)
    clusters = np.unique(labels)
    n, k = X.shape[0], clusters.size
    if k < 2 or n <= k:
        raise ValueError(f"calinski_harabasz needs 2 <= k < n (k={k}, n={n})")
    centroid = X.mean(0)
    between = within = 0.0
    for c in clusters:
        members = X[labels == c]
        mu = members.mean(0)
        between += len(members) * ((mu - centroid) ** 2).sum()
        within += ((members - mu) ** 2).sum()
    if within == 0:
        raise DegeneratePartitionError("degenerate partition: within-cluster dispersion is zero")
    return float((between / (k - 1)) / (within / (n - k)))


# --------------------------------------------------------------------------
# keyword grouping


def _normalize_lexicon(lexicon) -> list[tuple[str, tuple[str, ...]]]:
    if isinstance(lexicon, Mapping):
        rules = [(kw, tuple(subs)) for kw, subs in lexicon.items()]
    else:
        rules = [(kw, tuple(subs)) for kw, subs in lexicon]
    for kw, _ in rules:
        if kw not in KEYWORDS:
            raise ValueError(f"unknown keyword {kw!r}")
    return rules


def classify_description(description: str, lexicon=DEFAULT_LEXICON) -> str:
    text = description.lower()
    for kw, subs in _normalize_lexicon(lexicon):
        if any(s.lower() in text for s in subs):
            return kw
    return FALLBACK_KEYWORD


def assign_keyword_groups(records: Iterable[PropertyRecord], lexicon=DEFAULT_LEXICON) -> list[PropertyGroup]:
    """Partition records into the eight keyword groups.

    ``lexicon`` is either a mapping keyword -> substrings (dict order is the
    priority order) or an ordered sequence of ``(keyword, substrings)`` rules.
    Matching is case-insensitive substring search on the description; the
    first matching rule wins and unmatched records fall back to
    ``other_indexes``. Always returns eight groups in ID-01..ID-08 order,
    some possibly empty.
    """
    rules = _normalize_lexicon(lexicon)
    groups = {kw: PropertyGroup(GROUP_IDS[kw], kw) for kw in KEYWORDS}
    for rec in records:
        groups[classify_description(rec.description, rules)].members.append(rec)
    return [groups[kw] for kw in KEYWORDS]


# --------------------------------------------------------------------------
# PCA descriptor


def group_pca_descriptor(group: PropertyGroup) -> AminoAcidDescriptor:
    """First principal component of a group's standardized 20 x m value matrix.

    Rows are amino acids, columns are member properties. Each column is
    scaled to zero mean and unit variance; the leading eigenvector of the
    column covariance gives the projection. Weights are the 20 row scores,
    signed so that alanine is non-negative.
    """
    if len(group.members) < 2:
        raise ValueError(f"{group.group_id}: PCA needs at least 2 member properties")
    M = np.column_stack([m.vector() for m in group.members])
    sd = M.std(axis=0, ddof=1)
    if np.any(sd == 0) or np.isnan(M).any():
        raise AssertionError(f"{group.group_id}: constant or incomplete member property")
    Z = (M - M.mean(axis=0)) / sd
    cov = Z.T @ Z / (Z.shape[0] - 1)
    evals, evecs = np.linalg.eigh(cov)
    evals = np.clip(evals, 0.0, None)
    lead = evecs[:, -1]
    scores = Z @ lead
    if scores[0] < 0:
        scores = -scores
    explained = float(evals[-1] / evals.sum())
    weights = {aa: float(s) for aa, s in zip(AMINO_ACIDS, scores)}
    return AminoAcidDescriptor(
        group_id=group.group_id,
        weights=weights,
        explained_variance=min(explained, 1.0),
        keyword=group.keyword,
        member_accessions=tuple(m.accession for m in group.members),
    )


@dataclass
class DescriptorTable:
    descriptors: list[AminoAcidDescriptor]
    group_sizes: dict[str, int] = field(default_factory=dict)
    empty_groups: list[str] = field(default_factory=list)

    def __iter__(self):
        return iter(self.descriptors)

    def __len__(self):
        return len(self.descriptors)

    def to_dict(self) -> dict:
        return {
            "schema_version": DESCRIPTOR_SCHEMA_VERSION,
            "groups": [
                {
                    "group_id": d.group_id,
                    "keyword": d.keyword,
                    "member_accessions": list(d.member_accessions),
                    "explained_variance": d.explained_variance,
                    "weights": {aa: d.weights[aa] for aa in AMINO_ACIDS},
                }
                for d in self.descriptors
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DescriptorTable":
        version = doc.get("schema_version")
        if version != DESCRIPTOR_SCHEMA_VERSION:
            raise ValueError(
                f"descriptor schema_version {version!r} != supported {DESCRIPTOR_SCHEMA_VERSION}"
            )
        descs = []
        for g in doc["groups"]:
            weights = {aa: float(g["weights"][aa]) for aa in AMINO_ACIDS}
            descs.append(AminoAcidDescriptor(
                group_id=g["group_id"],
                weights=weights,
                explained_variance=float(g["explained_variance"]),
                keyword=g.get("keyword", ""),
                member_accessions=tuple(g.get("member_accessions", ())),
            ))
        return cls(descs, {d.group_id: len(d.member_accessions) for d in descs})

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path) -> "DescriptorTable":
        return cls.from_dict(json.loads(Path(path).read_text()))


def build_descriptors(
    records: Iterable[PropertyRecord],
    alpha: float = 0.05,
    lexicon=DEFAULT_LEXICON,
    ks_method: str = "lilliefors",
) -> DescriptorTable:
    """Filter, group and compress complete AAIndex records into descriptors.

    Groups with fewer than two members are reported in ``empty_groups`` and
    get no descriptor.
    """
    from .aaindex import drop_incomplete

    kept = ks_normality_filter(drop_incomplete(list(records)), alpha=alpha, method=ks_method)
    groups = assign_keyword_groups(kept, lexicon)
    descs, sizes, empty = [], {}, []
    for g in groups:
        sizes[g.group_id] = len(g.members)
        if len(g.members) < 2:
            empty.append(g.group_id)
            continue
        descs.append(group_pca_descriptor(g))
    return DescriptorTable(descs, sizes, empty)


def default_descriptors() -> DescriptorTable:
    """Descriptor table computed from the bundled AAIndex1 release."""
    from .aaindex import load_aaindex

    return build_descriptors(load_aaindex())
