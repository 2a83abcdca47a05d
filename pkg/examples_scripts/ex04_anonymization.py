"""
=========================
Scrubbing clinical notes
=========================

Regular expressions catch dates, IDs and phone numbers; a gazetteer with
fuzzy matching catches misspelled neighbourhood names; rare capitalised
tokens are flagged for a human rather than removed.
"""

# %%
from framegbv.annotation import Sentence
from framegbv.anonymize import (Gazetteer, anonymize_corpus, fuzzy_place_match,
                                regex_scrub, similarity)
from framegbv.lexicon import load_default_lexicon
from framegbv.synth import NEIGHBORHOODS

lex = load_default_lexicon()
gaz = Gazetteer(NEIGHBORHOODS)

notes = [
    Sentence("r1", "subjective", 0,
             "Paciente mora em Boa Viajem, retorna em 12/05/2023, tel (81) 99876-5432"),
    Sentence("r1", "plan", 0, "encaminhada ao CRAS com Mariazinha, cpf 123.456.789-00"),
]

print(regex_scrub(notes[0]))
print(fuzzy_place_match(notes[0], gaz))
print(f"similarity('boa viajem', 'boa viagem') = {similarity('boa viajem', 'boa viagem')}")

# %%
redacted, audit, review = anonymize_corpus(notes, gaz=gaz, lex=lex)
for row in redacted:
    print(row["text"])
for entry in audit:
    print(entry.to_dict())
print("for review:", [(m.text, round(m.confidence, 2)) for m in review])

# %%
# Scrubbing the output again finds nothing new.
again = [Sentence(r["record_id"], r["field"], r["index"], r["text"]) for r in redacted]
_, audit2, _ = anonymize_corpus(again, gaz=gaz, lex=lex)
print("second pass redactions:", sum(len(a.redactions) for a in audit2))
