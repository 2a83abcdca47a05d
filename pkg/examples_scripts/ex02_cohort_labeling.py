"""
===========================
Labelling linked encounters
===========================

Encounters are linked to violence notifications and death records by
person and date.  The precedence of the four labels decides what ends up
in the training set.
"""

# %%
import datetime as dt

from framegbv.cohort import (DeathRecord, HealthRecord, ViolenceNotification,
                             build_dataset, label_histogram, label_records,
                             provenance_histogram)

day = dt.date(2022, 3, 10)
records = [
    HealthRecord("r1", "ana", day, ("X85",)),          # aggression code
    HealthRecord("r2", "bia", day, ("N76",)),          # notification the day before
    HealthRecord("r3", "cris", day, ("N76",)),         # notification 20 days earlier
    HealthRecord("r4", "dora", day, ("U07.1",)),       # COVID-19 only
    HealthRecord("r5", "eva", day, ("N76",)),          # assault death two days later
    HealthRecord("r6", "fia", day, ("N76",)),          # notification 31 days away
]
notifications = [
    ViolenceNotification("n1", "bia", day - dt.timedelta(days=1), True),
    ViolenceNotification("n2", "cris", day - dt.timedelta(days=20), True),
    ViolenceNotification("n3", "fia", day + dt.timedelta(days=31), True),
]
deaths = [DeathRecord("eva", day + dt.timedelta(days=2), "Y09")]

cases = label_records(records, notifications, deaths)
for c in cases:
    print(f"{c.record_id}: {c.label.value:15s} via {c.provenance.value}")
print(provenance_histogram(cases))

# %%
# Only Violence and NonViolence cases are kept; NonViolence is
# undersampled when it outnumbers Violence by more than the configured
# ratio.
dataset = build_dataset(cases, seed=0)
print(label_histogram(dataset.cases), dataset.y)
