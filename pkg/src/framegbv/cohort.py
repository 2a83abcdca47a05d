"""Link encounters to violence notifications and death records, label them,
and build the balanced Violence / Non-violence training set.

Labels are assigned by strict precedence:

1. ``Violence`` if any ICD code is an aggression code, or the same person has
   a positive notification within the short window, or a death record with
   an aggression cause within the short window;
2. ``NonViolence`` if every ICD code is in the non-violence set;
3. ``LikelyViolence`` if the same person has a positive notification within
   the long window;
4. ``Unknown`` otherwise.

Windows are two-sided and inclusive.  Person matching is by ``person_id``;
no probabilistic linkage is attempted.
"""

from __future__ import annotations

import csv
import datetime as dt
import enum
import re
from bisect import bisect_left
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, EmptyClassError, OverrideTargetError, ParseError

ICD_RE = re.compile(r"^[A-Z]\d{2}(\.?[0-9A-Z]{1,2})?$")
_CATEGORY_RE = re.compile(r"^[A-Z]\d{2}$")


class Label(str, enum.Enum):
    VIOLENCE = "Violence"
    NON_VIOLENCE = "NonViolence"
    LIKELY_VIOLENCE = "LikelyViolence"
    UNKNOWN = "Unknown"


class Provenance(str, enum.Enum):
    ICD_AGGRESSION = "IcdAggression"
    NOTIFICATION_WINDOW = "NotificationWindow"
    SIM_WINDOW = "SimWindow"
    NON_VIOLENCE_ICD = "NonViolenceIcd"
    LIKELY_WINDOW = "LikelyWindow"
    DEFAULT = "Default"
    EXPERT_REVIEW = "ExpertReview"


_ALLOWED = {
    Provenance.ICD_AGGRESSION: {Label.VIOLENCE},
    Provenance.NOTIFICATION_WINDOW: {Label.VIOLENCE},
    Provenance.SIM_WINDOW: {Label.VIOLENCE},
    Provenance.NON_VIOLENCE_ICD: {Label.NON_VIOLENCE},
    Provenance.LIKELY_WINDOW: {Label.LIKELY_VIOLENCE},
    Provenance.DEFAULT: {Label.UNKNOWN},
    Provenance.EXPERT_REVIEW: {Label.VIOLENCE, Label.NON_VIOLENCE},
}


def normalize_icd(code):
    return code.strip().upper().replace(".", "")


def is_valid_icd(code):
    return bool(ICD_RE.match(code.strip().upper()))


class IcdSet:
    """Set of ICD-10 codes given as exact codes, 3-char categories, or
    inclusive category ranges like ``"X85-Y09"``.

    Matching is by prefix, so ``"U07"`` covers ``U07.1`` and ``U07.2``.
    """

    def __init__(self, specs):
        self.specs = tuple(specs)
        self._ranges = []
        self._prefixes = []
        for spec in self.specs:
            s = spec.strip().upper()
            if "-" in s:
                lo, hi = (p.strip() for p in s.split("-", 1))
                if not (_CATEGORY_RE.match(lo) and _CATEGORY_RE.match(hi)) or lo > hi:
                    raise ConfigError(f"bad ICD range {spec!r}")
                self._ranges.append((lo, hi))
            else:
                if not ICD_RE.match(s):
                    raise ConfigError(f"bad ICD code {spec!r}")
                self._prefixes.append(normalize_icd(s))

    def __contains__(self, code):
        norm = normalize_icd(code)
        cat = norm[:3]
        if any(lo <= cat <= hi for lo, hi in self._ranges):
            return True
        return any(norm.startswith(p) for p in self._prefixes)

    def __bool__(self):
        return bool(self.specs)

    def __repr__(self):
        return f"IcdSet({list(self.specs)!r})"


DEFAULT_AGGRESSION_ICD = ("X85-Y09",)
DEFAULT_NON_VIOLENCE_ICD = ("U07.1", "U07.2", "Q20-Q28", "Q35-Q37")


@dataclass(frozen=True)
class LabelConfig:
    aggression_icd: tuple = DEFAULT_AGGRESSION_ICD
    non_violence_icd: tuple = DEFAULT_NON_VIOLENCE_ICD
    violence_window_days: int = 2
    likely_window_days: int = 30

    def __post_init__(self):
        if not self.aggression_icd:
            raise ConfigError("aggression ICD set is empty")
        if self.violence_window_days < 0 or self.likely_window_days < 0:
            raise ConfigError("window widths must be nonnegative")
        if self.violence_window_days > self.likely_window_days:
            raise ConfigError("violence window wider than likely-violence window")
        object.__setattr__(self, "aggression_icd", tuple(self.aggression_icd))
        object.__setattr__(self, "non_violence_icd", tuple(self.non_violence_icd))
        object.__setattr__(self, "_aggression", IcdSet(self.aggression_icd))
        object.__setattr__(self, "_non_violence", IcdSet(self.non_violence_icd))

    @property
    def aggression(self):
        return self._aggression

    @property
    def non_violence(self):
        return self._non_violence


@dataclass(frozen=True)
class DatasetConfig:
    max_majority_ratio: float = 4.0

    def __post_init__(self):
        if not self.max_majority_ratio >= 1:
            raise ConfigError("max_majority_ratio must be >= 1")


@dataclass(frozen=True)
class HealthRecord:
    record_id: str
    person_id: str
    encounter_date: dt.date
    icd_codes: tuple = ()
    parameterized: dict = field(default_factory=dict)

    def __post_init__(self):
        for code in self.icd_codes:
            if not is_valid_icd(code):
                raise ParseError(f"record {self.record_id}: malformed ICD code {code!r}")


@dataclass(frozen=True)
class ViolenceNotification:
    notification_id: str
    person_id: str
    notification_date: dt.date
    is_violence_positive: bool
    observation_text: str = ""


@dataclass(frozen=True)
class DeathRecord:
    person_id: str
    death_date: dt.date
    cause_icd: str


@dataclass(frozen=True)
class LabeledCase:
    record: HealthRecord
    label: Label
    provenance: Provenance

    def __post_init__(self):
        if self.label not in _ALLOWED[self.provenance]:
            raise ValueError(f"provenance {self.provenance.value} cannot yield "
                             f"label {self.label.value}")

    @property
    def record_id(self):
        return self.record.record_id


@dataclass
class Dataset:
    cases: list
    counts_before: dict
    counts_after: dict

    @property
    def y(self):
        """+1 for Violence, -1 for Non-violence."""
        return np.array([1 if c.label == Label.VIOLENCE else -1 for c in self.cases])

    @property
    def record_ids(self):
        return [c.record_id for c in self.cases]


# --- linkage indices ------------------------------------------------------------

def index_notifications(notifications):
    """person_id -> sorted dates of *positive* notifications."""
    idx = {}
    for n in notifications:
        if n.is_violence_positive:
            idx.setdefault(n.person_id, []).append(n.notification_date)
    return {k: sorted(v) for k, v in idx.items()}


def index_deaths(deaths):
    """person_id -> sorted (date, cause) pairs."""
    idx = {}
    for d in deaths:
        idx.setdefault(d.person_id, []).append((d.death_date, d.cause_icd))
    return {k: sorted(v) for k, v in idx.items()}


def _any_within(dates, day, window):
    if not dates:
        return False
    i = bisect_left(dates, day - dt.timedelta(days=window))
    return i < len(dates) and dates[i] <= day + dt.timedelta(days=window)


def assign_label(rec, notes, deaths, cfg=None):
    cfg = cfg or LabelConfig()
    day = rec.encounter_date
    person_notes = notes.get(rec.person_id, ())
    short = cfg.violence_window_days

    if any(code in cfg.aggression for code in rec.icd_codes):
        return LabeledCase(rec, Label.VIOLENCE, Provenance.ICD_AGGRESSION)
    if _any_within(person_notes, day, short):
        return LabeledCase(rec, Label.VIOLENCE, Provenance.NOTIFICATION_WINDOW)
    for death_date, cause in deaths.get(rec.person_id, ()):
        if abs((death_date - day).days) <= short and cause in cfg.aggression:
            return LabeledCase(rec, Label.VIOLENCE, Provenance.SIM_WINDOW)
    # an encounter without codes carries no non-violence evidence
    if rec.icd_codes and all(code in cfg.non_violence for code in rec.icd_codes):
        return LabeledCase(rec, Label.NON_VIOLENCE, Provenance.NON_VIOLENCE_ICD)
    if _any_within(person_notes, day, cfg.likely_window_days):
        return LabeledCase(rec, Label.LIKELY_VIOLENCE, Provenance.LIKELY_WINDOW)
    return LabeledCase(rec, Label.UNKNOWN, Provenance.DEFAULT)


def label_records(records, notifications, deaths, cfg=None):
    notes = index_notifications(notifications)
    dead = index_deaths(deaths)
    return [assign_label(r, notes, dead, cfg) for r in records]


def provenance_histogram(cases):
    return Counter((c.label.value, c.provenance.value) for c in cases)


def label_histogram(cases):
    return Counter(c.label.value for c in cases)


def apply_expert_review(cases, overrides):
    """Relabel reviewed ``LikelyViolence`` cases as Violence or NonViolence."""
    by_id = {c.record_id: i for i, c in enumerate(cases)}
    new = {}
    for record_id, label in overrides:
        label = Label(label)
        if label not in (Label.VIOLENCE, Label.NON_VIOLENCE):
            raise OverrideTargetError(f"override for {record_id} must be Violence or "
                                      f"NonViolence, got {label.value}")
        if record_id not in by_id:
            raise OverrideTargetError(f"override targets unknown record {record_id!r}")
        if record_id in new:
            raise OverrideTargetError(f"record {record_id!r} overridden twice")
        case = cases[by_id[record_id]]
        if case.label != Label.LIKELY_VIOLENCE:
            raise OverrideTargetError(f"override targets {record_id!r} labelled "
                                      f"{case.label.value}, not LikelyViolence")
        new[record_id] = label
    return [LabeledCase(c.record, new[c.record_id], Provenance.EXPERT_REVIEW)
            if c.record_id in new else c for c in cases]


def build_dataset(cases, cfg=None, seed=0):
    """Keep Violence/NonViolence cases and undersample NonViolence down to
    ``floor(ratio * n_violence)`` when it exceeds that bound.

    Input order is preserved among kept cases.
    """
    cfg = cfg or DatasetConfig()
    kept = [c for c in cases if c.label in (Label.VIOLENCE, Label.NON_VIOLENCE)]
    pos = [i for i, c in enumerate(kept) if c.label == Label.VIOLENCE]
    neg = [i for i, c in enumerate(kept) if c.label == Label.NON_VIOLENCE]
    if not pos or not neg:
        raise EmptyClassError(f"need both classes, got {len(pos)} Violence and "
                              f"{len(neg)} NonViolence")
    before = {"Violence": len(pos), "NonViolence": len(neg)}
    limit = int(np.floor(cfg.max_majority_ratio * len(pos)))
    if len(neg) > limit:
        rng = np.random.default_rng(seed)
        chosen = rng.choice(len(neg), size=limit, replace=False)
        drop = set(neg) - {neg[i] for i in chosen}
        kept = [c for i, c in enumerate(kept) if i not in drop]
    after = {"Violence": len(pos),
             "NonViolence": sum(c.label == Label.NON_VIOLENCE for c in kept)}
    return Dataset(kept, before, after)


# --- tabular IO -------------------------------------------------------------------

RECORD_COLUMNS = ("record_id", "person_id", "encounter_date", "icd_codes")


def _date(value, where):
    try:
        return dt.date.fromisoformat(value.strip())
    except (ValueError, AttributeError) as exc:
        raise ParseError(f"{where}: invalid date {value!r}") from exc


def _bool(value, where):
    v = value.strip().lower()
    if v in ("1", "true", "yes", "y", "t"):
        return True
    if v in ("0", "false", "no", "n", "f", ""):
        return False
    raise ParseError(f"{where}: invalid boolean {value!r}")


def _rows(path, required):
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            missing = [c for c in required if c not in header]
            if missing:
                raise ParseError(f"{path}: missing columns {missing}")
            return header, list(reader)
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def load_records(path):
    header, rows = _rows(path, RECORD_COLUMNS)
    param_fields = [c for c in header if c not in RECORD_COLUMNS]
    out = []
    for n, row in enumerate(rows, 2):
        where = f"{path}:{n}"
        codes = tuple(c.strip() for c in row["icd_codes"].split(";") if c.strip())
        params = {f: row[f] for f in param_fields if row.get(f, "") != ""}
        out.append(HealthRecord(row["record_id"], row["person_id"],
                                _date(row["encounter_date"], where), codes, params))
    return out


def load_notifications(path):
    _, rows = _rows(path, ("notification_id", "person_id", "notification_date",
                           "is_violence_positive"))
    return [ViolenceNotification(r["notification_id"], r["person_id"],
                                 _date(r["notification_date"], f"{path}:{n}"),
                                 _bool(r["is_violence_positive"], f"{path}:{n}"),
                                 r.get("observation_text", "") or "")
            for n, r in enumerate(rows, 2)]


def load_deaths(path):
    _, rows = _rows(path, ("person_id", "death_date", "cause_icd"))
    return [DeathRecord(r["person_id"], _date(r["death_date"], f"{path}:{n}"),
                        r["cause_icd"].strip())
            for n, r in enumerate(rows, 2)]


def load_overrides(path):
    _, rows = _rows(path, ("record_id", "label"))
    return [(r["record_id"], r["label"]) for r in rows]


def write_records(records, path, fields=None):
    if fields is None:
        fields = sorted({k for r in records for k in r.parameterized})
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(RECORD_COLUMNS) + list(fields))
        for r in records:
            w.writerow([r.record_id, r.person_id, r.encounter_date.isoformat(),
                        ";".join(r.icd_codes)]
                       + [r.parameterized.get(f, "") for f in fields])


def write_notifications(notifications, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["notification_id", "person_id", "notification_date",
                    "is_violence_positive", "observation_text"])
        for n in notifications:
            w.writerow([n.notification_id, n.person_id, n.notification_date.isoformat(),
                        int(n.is_violence_positive), n.observation_text])


def write_deaths(deaths, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["person_id", "death_date", "cause_icd"])
        for d in deaths:
            w.writerow([d.person_id, d.death_date.isoformat(), d.cause_icd])


def write_labeled_cases(cases, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["record_id", "person_id", "label", "provenance"])
        for c in cases:
            w.writerow([c.record_id, c.record.person_id, c.label.value,
                        c.provenance.value])
