"""Seeded synthetic corpora with a controllable semantic signal.

Every generated Violence / NonViolence record carries linkage data that
the cohort rules map back to its ground-truth label, so the whole pipeline
can be exercised end to end without real records.  Annotation sets are
drawn from label-conditioned frame distributions; sentence text is a
template fill-in around the annotated tokens, with optional PII fragments
appended for the anonymizer.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import shutil
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import anonymize
from .annotation import AnnotatedRecord, AnnotationSet, Sentence, write_annotations
from .cohort import (DeathRecord, HealthRecord, Label, ViolenceNotification,
                     write_deaths, write_notifications, write_records)
from .errors import ConfigError
from .lexicon import default_lexicon_path, load_default_lexicon, save_lexicon

NEIGHBORHOODS = (
    "Boa Viagem", "Casa Amarela", "Várzea", "Ibura", "Imbiribeira", "Afogados",
    "Madalena", "Torre", "Graças", "Espinheiro", "Casa Forte", "Aflitos", "Derby",
    "Boa Vista", "Santo Amaro", "Encruzilhada", "Água Fria", "Beberibe",
    "Campo Grande", "Arruda", "Cordeiro", "Iputinga", "Caxangá", "Engenho do Meio",
    "Curado", "Jardim São Paulo", "Areias", "Estância", "Jiquiá", "San Martin",
    "Mustardinha", "Mangueira", "Bongi", "Prado", "Zumbi", "Torrões",
    "Cidade Universitária", "Dois Irmãos", "Apipucos", "Poço", "Tamarineira",
    "Rosarinho", "Pina", "Brasília Teimosa",
)

# 20 parameterized fields, 142 values in total
DEMOGRAPHIC_SCHEMA = {
    "race": ("branca", "parda", "preta", "amarela", "indigena", "ignorada"),
    "gender_identity": ("mulher_cis", "homem_cis", "mulher_trans", "homem_trans",
                        "travesti", "nao_binario", "ignorado"),
    "sexual_orientation": ("heterossexual", "homossexual", "bissexual", "outra",
                           "ignorado"),
    "prosthesis_need": ("sim", "nao"),
    "age_group": ("0-9", "10-14", "15-19", "20-29", "30-39", "40-49", "50-59", "60+"),
    "marital_status": ("solteira", "casada", "uniao_estavel", "divorciada", "viuva",
                       "ignorado"),
    "education_level": ("nenhuma", "fundamental_incompleto", "fundamental_completo",
                        "medio_incompleto", "medio_completo", "superior_incompleto",
                        "superior_completo", "ignorado"),
    "unit_location": NEIGHBORHOODS,
    "referral_timing": ("imediato", "urgente", "eletivo", "sem_encaminhamento"),
    "sex": ("feminino", "masculino"),
    "pregnant": ("sim", "nao", "nao_se_aplica"),
    "disability": ("sim", "nao"),
    "has_income": ("sim", "nao", "ignorado"),
    "household_size": ("1", "2", "3", "4", "5+"),
    "occupation_group": ("estudante", "do_lar", "comercio", "servicos", "industria",
                         "agricultura", "saude", "educacao", "desempregada",
                         "aposentada"),
    "health_district": ("DS-I", "DS-II", "DS-III", "DS-IV", "DS-V", "DS-VI",
                        "DS-VII", "DS-VIII"),
    "encounter_type": ("consulta_agendada", "demanda_espontanea", "visita_domiciliar",
                       "escuta_inicial", "atendimento_odontologico", "procedimento"),
    "professional_category": ("medico", "enfermeiro", "tecnico_enfermagem", "dentista",
                              "psicologo", "assistente_social", "agente_comunitario"),
    "shift": ("manha", "tarde", "noite"),
    "nationality": ("brasileira", "estrangeira", "naturalizada"),
}

# field=value -> (frame, lemma_pos) for the mixed setup
PARAMETERIZED_MAPPING = {
    ("pregnant", "sim"): ("Health_conditions", "gestante.n"),
    ("gender_identity", "mulher_cis"): ("People", "mulher.n"),
    ("gender_identity", "mulher_trans"): ("People", "mulher.n"),
    ("marital_status", "casada"): ("Personal_relationships", "marido.n"),
    ("marital_status", "uniao_estavel"): ("Personal_relationships", "companheiro.n"),
    ("prosthesis_need", "sim"): ("Health_intervention", "curativo.n"),
}

BASE_FRAME_WEIGHTS = {
    "Health_conditions": 10.0, "Health_service": 6.0, "Diagnosing": 4.0,
    "Medicines": 4.0, "Medical_examination": 4.0, "Symptoms": 4.0,
    "Health_intervention": 3.0, "Medical_professionals": 3.0, "Prenatal_care": 2.0,
    "Vaccination": 2.0, "Calendric_unit": 3.0, "People": 3.0,
    "Personal_relationships": 1.0, "Fear": 0.5, "Experience_bodily_harm": 1.0,
    "Attack": 0.2, "Sexual_violence": 0.1, "Threatening": 0.2, "Self_harm": 0.1,
    "Abusing": 0.1, "Weapon": 0.1, "Killing": 0.05,
}

GBV_FRAME_WEIGHTS = {
    "Experience_bodily_harm": 5.0, "Personal_relationships": 5.0, "Fear": 4.0,
    "Health_conditions": 3.0, "Attack": 2.0, "Sexual_violence": 1.5,
    "Threatening": 1.5, "Abusing": 1.5, "Self_harm": 1.0, "Weapon": 0.5,
    "Killing": 0.3, "Health_service": 1.0,
}

FE_FILLERS = ("paciente", "usuária", "ela", "companheiro", "equipe", "unidade",
              "ontem", "casa", "braço", "rosto", "forte", "leve", "exame", "dose")

UNKNOWN_LEMMAS = ("queixa.n", "relatar.v", "orientar.v", "retorno.n", "quadro.n")

NAMES = ("Mariazinha", "Josefa", "Severina", "Cleidiane", "Rosivalda", "Edvaldo",
         "Genivaldo", "Luzinete")

AGGRESSION_CODES = ("X85", "X95", "X99", "Y00", "Y04", "Y05", "Y07", "Y09")
NEUTRAL_CODES = ("N76", "N39", "Z34", "Z32", "H10", "F32", "F41", "R10", "T14", "S00")
NON_VIOLENCE_CODES = ("U07.1", "U07.2", "Q21.0", "Q24.9", "Q35.9", "Q36.0")
OTHER_DEATH_CAUSES = ("I21", "J18", "C50")

SOAP_FIELDS = ("subjective", "objective", "assessment", "plan", "referral_reason",
               "complement", "observation")


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 42
    n_records: int = 800
    violence_fraction: float = 0.2
    signal_strength: float = 0.7
    demographic_informativeness: float = 0.1
    sentences_per_record: int = 3
    max_sets_per_sentence: int = 3
    unresolved_fraction: float = 0.08
    variant_fraction: float = 0.1
    pii_fraction: float = 0.3
    n_likely: int = 0
    likely_violence_share: float = 0.17
    start_date: str = "2021-01-01"
    span_days: int = 730

    def __post_init__(self):
        for name in ("violence_fraction", "signal_strength",
                     "demographic_informativeness", "unresolved_fraction",
                     "variant_fraction", "pii_fraction", "likely_violence_share"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        if self.n_records < 20:
            raise ConfigError("n_records must be >= 20")
        if self.sentences_per_record < 1 or self.max_sets_per_sentence < 1:
            raise ConfigError("need at least one sentence and one set per sentence")
        if self.n_likely < 0:
            raise ConfigError("n_likely must be >= 0")

    def n_violence(self):
        return int(round(self.violence_fraction * self.n_records))


@dataclass
class SynthCorpus:
    records: list
    annotations: list
    notifications: list
    deaths: list
    ground_truth: dict                  # record_id -> Label
    review_verdicts: dict = field(default_factory=dict)   # Likely record_id -> Label
    config: SynthConfig = None


def frame_distribution(lex, positive, s):
    """Label-conditioned frame probabilities over the lexicon's frames."""
    names = [f.name for f in lex.frames]
    base = np.array([BASE_FRAME_WEIGHTS.get(n, 0.5) for n in names])
    base /= base.sum()
    if not positive:
        return names, base
    gbv = np.array([GBV_FRAME_WEIGHTS.get(n, 0.0) for n in names])
    gbv /= gbv.sum()
    return names, (1.0 - s) * base + s * gbv


def _lu_weights(lus, frame, positive, s):
    w = np.ones(len(lus))
    if positive and frame == "Health_conditions":
        for i, lu in enumerate(lus):
            if lu.lemma_pos == "gestante.n":
                w[i] += 3.0 * s
    return w / w.sum()


class _Generator:
    def __init__(self, cfg, lex):
        self.cfg = cfg
        self.lex = lex
        self.rng = np.random.default_rng(cfg.seed)
        self.lus_by_frame = {}
        for lu in lex.lexical_units:
            self.lus_by_frame.setdefault(lu.frame, []).append(lu)
        self.dists = {pos: frame_distribution(lex, pos, cfg.signal_strength)
                      for pos in (False, True)}
        # per-field marker values that co-vary with the label
        self.markers = {}
        for fname, values in DEMOGRAPHIC_SCHEMA.items():
            a, b = self.rng.choice(len(values), size=2, replace=False)
            self.markers[fname] = (values[a], values[b])
        self.start = dt.date.fromisoformat(cfg.start_date)

    def choice(self, seq):
        return seq[int(self.rng.integers(len(seq)))]

    def demographics(self, positive):
        out = {}
        for fname, values in DEMOGRAPHIC_SCHEMA.items():
            if self.rng.random() < self.cfg.demographic_informativeness:
                out[fname] = self.markers[fname][0 if positive else 1]
            else:
                out[fname] = self.choice(values)
        return out

    def annotation_set(self, positive):
        names, probs = self.dists[positive]
        frame = names[int(self.rng.choice(len(names), p=probs))]
        lus = [lu for lu in self.lus_by_frame.get(frame, [])]
        lu = lus[int(self.rng.choice(len(lus), p=_lu_weights(lus, frame, positive,
                                                              self.cfg.signal_strength)))]
        u = self.rng.random()
        if u < self.cfg.unresolved_fraction:
            lemma = self.choice(UNKNOWN_LEMMAS)
        elif u < self.cfg.unresolved_fraction + self.cfg.variant_fraction:
            # surface variants the normaliser has to undo
            lemma = lu.lemma.capitalize() + "," + "." + lu.pos
        else:
            lemma = lu.lemma_pos
        elements = sorted(self.lex.frame(frame).elements)
        n_fe = 1 + int(self.rng.integers(2))
        picked = self.rng.choice(len(elements), size=min(n_fe, len(elements)),
                                 replace=False)
        fes = [elements[i] for i in sorted(picked)]
        return frame, lemma, fes

    def sentence(self, record_id, fname, index, positive):
        n_sets = 1 + int(self.rng.integers(self.cfg.max_sets_per_sentence))
        tokens, sets = [], []
        pos = 0

        def push(tok):
            nonlocal pos
            if tokens:
                pos += 1
            start = pos
            tokens.append(tok)
            pos += len(tok)
            return (start, pos)

        for _ in range(n_sets):
            frame, lemma, fes = self.annotation_set(positive)
            fe_spans = tuple((fe, push(self.choice(FE_FILLERS))) for fe in fes)
            surface = lemma.rsplit(".", 1)[0].strip(",").lower()
            target = push(surface)
            sets.append(AnnotationSet(fname, index, target, frame, lemma, None, fe_spans))
        text = " ".join(tokens)
        if self.rng.random() < self.cfg.pii_fraction:
            text += self.pii_fragment()
        return Sentence(record_id, fname, index, text), sets

    def pii_fragment(self):
        kind = int(self.rng.integers(4))
        if kind == 0:
            d = self.start + dt.timedelta(days=int(self.rng.integers(self.cfg.span_days)))
            return f", retorna em {d.day:02d}/{d.month:02d}/{d.year}"
        if kind == 1:
            return (f", tel (81) 9{self.rng.integers(1000, 9999)}-"
                    f"{self.rng.integers(1000, 9999)}")
        if kind == 2:
            place = self.choice(NEIGHBORHOODS)
            if self.rng.random() < 0.5 and len(place) > 6:
                # one-character misspelling
                i = int(self.rng.integers(1, len(place) - 1))
                place = place[:i] + ("j" if place[i] != "j" else "g") + place[i + 1:]
            return f", mora em {place}"
        return f", acompanhada por {self.choice(NAMES)}"

    def annotated(self, record_id, positive):
        sentences, sets = [], []
        for k in range(self.cfg.sentences_per_record):
            fname = SOAP_FIELDS[k % len(SOAP_FIELDS)]
            s, a = self.sentence(record_id, fname, k // len(SOAP_FIELDS), positive)
            sentences.append(s)
            sets.extend(a)
        return AnnotatedRecord(record_id, tuple(sentences), tuple(sets))

    def day(self):
        return self.start + dt.timedelta(days=int(self.rng.integers(self.cfg.span_days)))


def generate_corpus(cfg=None, lex=None):
    cfg = cfg or SynthConfig()
    lex = lex or load_default_lexicon()
    missing = [f for f in GBV_FRAME_WEIGHTS if not lex.has_frame(f)]
    if missing:
        raise ConfigError(f"lexicon lacks frames the generator needs: {missing}")
    g = _Generator(cfg, lex)
    n_pos = cfg.n_violence()
    labels = np.array([True] * n_pos + [False] * (cfg.n_records - n_pos))
    labels = labels[g.rng.permutation(cfg.n_records)]

    records, annotations, notes, deaths = [], [], [], []
    truth, verdicts = {}, {}
    note_id = 0

    def notify(person, date, positive, text=""):
        nonlocal note_id
        note_id += 1
        notes.append(ViolenceNotification(f"n{note_id:06d}", person, date, positive, text))

    for i, positive in enumerate(labels):
        rid, person = f"r{i + 1:05d}", f"p{i + 1:05d}"
        day = g.day()
        if positive:
            use_icd = g.rng.random() < 0.5
            use_note = g.rng.random() < 0.5
            codes = [g.choice(NEUTRAL_CODES)]
            if use_icd:
                codes.insert(0, g.choice(AGGRESSION_CODES))
            if use_note:
                offset = int(g.rng.integers(-2, 3))
                notify(person, day + dt.timedelta(days=offset), True,
                       "relato de agressão")
            if not use_icd and not use_note:
                offset = int(g.rng.integers(0, 3))
                deaths.append(DeathRecord(person, day + dt.timedelta(days=offset),
                                          g.choice(AGGRESSION_CODES)))
            truth[rid] = Label.VIOLENCE
        else:
            codes = [g.choice(NON_VIOLENCE_CODES)]
            u = g.rng.random()
            if u < 0.1:
                notify(person, day + dt.timedelta(days=int(g.rng.integers(-2, 3))), False)
            elif u < 0.15:
                deaths.append(DeathRecord(person, day + dt.timedelta(days=1),
                                          g.choice(OTHER_DEATH_CAUSES)))
            truth[rid] = Label.NON_VIOLENCE
        records.append(HealthRecord(rid, person, day, tuple(codes),
                                    g.demographics(bool(positive))))
        annotations.append(g.annotated(rid, bool(positive)))

    for j in range(cfg.n_likely):
        rid, person = f"l{j + 1:05d}", f"q{j + 1:05d}"
        day = g.day()
        verdict_pos = g.rng.random() < cfg.likely_violence_share
        offset = int(g.rng.integers(3, 31)) * (1 if g.rng.random() < 0.5 else -1)
        notify(person, day + dt.timedelta(days=offset), True, "suspeita")
        records.append(HealthRecord(rid, person, day, (g.choice(NEUTRAL_CODES),),
                                    g.demographics(verdict_pos)))
        annotations.append(g.annotated(rid, verdict_pos))
        truth[rid] = Label.LIKELY_VIOLENCE
        verdicts[rid] = Label.VIOLENCE if verdict_pos else Label.NON_VIOLENCE

    return SynthCorpus(records, annotations, notes, deaths, truth, verdicts, cfg)


def write_corpus(corpus, outdir, lex=None):
    """Write every pipeline input into ``outdir``; returns the written paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "records": outdir / "records.csv",
        "annotations": outdir / "annotations.jsonl",
        "notifications": outdir / "notifications.csv",
        "deaths": outdir / "deaths.csv",
        "ground_truth": outdir / "ground_truth.csv",
        "lexicon": outdir / "lexicon.json",
        "mapping": outdir / "mapping.csv",
        "gazetteer": outdir / "gazetteer.txt",
        "patterns": outdir / "patterns.txt",
        "config": outdir / "synth_config.json",
    }
    write_records(corpus.records, paths["records"], fields=list(DEMOGRAPHIC_SCHEMA))
    write_annotations(corpus.annotations, paths["annotations"])
    write_notifications(corpus.notifications, paths["notifications"])
    write_deaths(corpus.deaths, paths["deaths"])
    with paths["ground_truth"].open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["record_id", "label"])
        for rid, label in corpus.ground_truth.items():
            w.writerow([rid, label.value])
    if lex is None:
        shutil.copyfile(default_lexicon_path(), paths["lexicon"])
    else:
        save_lexicon(lex, paths["lexicon"])
    write_mapping(PARAMETERIZED_MAPPING, paths["mapping"])
    paths["gazetteer"].write_text("".join(n + "\n" for n in NEIGHBORHOODS),
                                  encoding="utf-8")
    paths["patterns"].write_text(
        "# kind<TAB>regex\n"
        + "".join(f"{k.value}\t{p}\n" for k, p in anonymize.DEFAULT_PATTERNS),
        encoding="utf-8")
    if corpus.review_verdicts:
        paths["overrides"] = outdir / "expert_review.csv"
        with paths["overrides"].open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["record_id", "label"])
            for rid, label in corpus.review_verdicts.items():
                w.writerow([rid, label.value])
    paths["config"].write_text(json.dumps(asdict(corpus.config), indent=2,
                                          sort_keys=True) + "\n", encoding="utf-8")
    return paths


def write_mapping(mapping, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["field", "value", "frame", "lemma_pos"])
        for (fname, value), (frame, lemma_pos) in sorted(mapping.items()):
            w.writerow([fname, value, frame, lemma_pos])
