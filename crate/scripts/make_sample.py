#!/usr/bin/env python3
"""Generate the bundled encyclopedic sample corpus.

Writes data/sample/encyclopedia.jsonl: synthetic article-like documents whose
sentences segment to exactly --sentences sentences. Output is fully determined
by --seed.
"""

import argparse
import json
import random
from pathlib import Path

FIRST = [
    "Anna", "Carl", "Maria", "Johan", "Elena", "Tomás", "Ingrid", "Pieter", "Zoë", "Hugo",
    "Clara", "Mateo", "Sofia", "Lukas", "Ada", "Viktor", "Leila", "Oskar", "Nadia", "Henrik",
]
LAST = [
    "Berg", "Lindqvist", "Moreau", "Kowalski", "Santos", "Hartmann", "Novak", "Okafor",
    "Brandt", "Rossi", "Jansen", "Dubois", "Almeida", "Keller", "Nyberg", "Fischer",
]
CITIES = [
    "Uppsala", "Lyon", "Porto", "Kraków", "Leiden", "Graz", "Aarhus", "Turin", "Ghent",
    "Bergen", "Tartu", "Brno", "Málaga", "Bremen", "Cork", "Lugano",
]
REGIONS = ["Västmanland", "Burgundy", "Silesia", "Tyrol", "Flanders", "Galicia", "Jutland", "Umbria"]
RIVERS = ["Rhône", "Vistula", "Douro", "Elbe", "Drava", "Oder", "Tagus", "Mosel"]
ORGS = [
    "Royal Botanical Society", "Northern Railway Company", "National Library", "City Orchestra",
    "Maritime Museum", "Geological Survey", "Chamber of Commerce", "Observatory Trust",
]
BUILDINGS = ["cathedral", "town hall", "lighthouse", "main bridge", "central station", "harbour wall"]
MONTHS = [
    "January", "February", "March", "April", "May", "June", "July", "August", "September",
    "October", "November", "December",
]
WEEKDAYS = ["Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday"]
NUM_WORDS = ["two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "twelve"]
UNITS = ["years", "months", "weeks", "days", "decades"]
FREQ = ["daily", "weekly", "monthly", "annually"]
CLOCKS = ["6 am", "9 pm", "7:30", "18:45", "noon", "midnight"]
DAYPARTS = ["morning", "evening", "afternoon", "night"]


def person(r):
    return f"{r.choice(FIRST)} {r.choice(LAST)}"


def year(r):
    return r.randint(1650, 2019)


def date_full(r):
    return f"{r.choice(MONTHS)} {r.randint(1, 28)}, {year(r)}"


def duration(r):
    if r.random() < 0.5:
        return f"{r.randint(2, 40)} {r.choice(UNITS)}"
    return f"{r.choice(NUM_WORDS)} {r.choice(UNITS)}"


TEMPLATES = [
    (6, lambda r: f"{person(r)} was born on {date_full(r)} in {r.choice(CITIES)}."),
    (6, lambda r: f"The {r.choice(ORGS)} was founded in {year(r)} by {person(r)}."),
    (5, lambda r: f"In {year(r)}, {person(r)} moved to {r.choice(CITIES)}, where she lived for {duration(r)}."),
    (4, lambda r: f"Construction of the {r.choice(BUILDINGS)} took {duration(r)} and was completed in {r.choice(MONTHS)} {year(r)}."),
    (4, lambda r: f"{r.choice(CITIES)} is a city in {r.choice(REGIONS)} with a population of {r.randint(2, 900)},{r.randint(100, 999)}."),
    (4, lambda r: f"The {r.choice(BUILDINGS)} was badly damaged by a storm on {r.choice(WEEKDAYS)}, {date_full(r)}."),
    (4, lambda r: f"{person(r)} served as mayor of {r.choice(CITIES)} from {year(r)} until {year(r)}."),
    (3, lambda r: f"The river {r.choice(RIVERS)} flows through the old town for about {r.randint(3, 90)} kilometres."),
    (1, lambda r: f"A weekly market has been held on the main square since {year(r)}."),
    (2, lambda r: f"The museum is open {r.choice(FREQ)} from {r.choice(CLOCKS)} and closes in the {r.choice(DAYPARTS)}."),
    (3, lambda r: f"During the {r.randint(165, 201)}0s the region saw rapid industrial growth."),
    (1, lambda r: f"Ferries to {r.choice(CITIES)} depart every {r.randint(2, 6)} hours during the summer season."),
    (3, lambda r: f"The original charter was signed on {r.randint(1, 28)} {r.choice(MONTHS)} {year(r)}."),
    (2, lambda r: f"The archive reopened on {r.choice(MONTHS)} {r.randint(1, 28)} after {duration(r)} of restoration."),
    (2, lambda r: f"{person(r)} studied botany in {r.choice(CITIES)} and later taught at the {r.choice(ORGS)}."),
    (1, lambda r: f"The choir rehearses twice a week in the {r.choice(BUILDINGS)}."),
    (2, lambda r: f"The festival, first staged on {r.choice(MONTHS)} {r.randint(1, 28)}, {year(r)}, now draws visitors from across {r.choice(REGIONS)}."),
    (2, lambda r: f"Most of the surrounding farmland belongs to the {r.choice(ORGS)}."),
    (2, lambda r: f"The harbour was dredged in {year(r)} and again in {year(r)}."),
    (2, lambda r: f"Excavations between {year(r)} and {year(r)} uncovered a Roman road."),
    (3, lambda r: f"Trains leave for {r.choice(CITIES)} at {r.choice(CLOCKS)} each day."),
    (3, lambda r: f"The siege lasted {duration(r)} and ended in the spring of {year(r)}."),
    (2, lambda r: f"Tourism has grown steadily over the last decade."),
    (1, lambda r: f"The bells are rung every Sunday at {r.choice(CLOCKS)}."),
    (3, lambda r: f"The opening ceremony began in the {r.choice(DAYPARTS)} and ended at {r.choice(CLOCKS)}."),
    (1, lambda r: f"Its coat of arms shows a silver fish on a blue field."),
    (1, lambda r: f"The old mill on the {r.choice(RIVERS)} still grinds grain for local bakers."),
]


def sentence(r):
    weights = [w for w, _ in TEMPLATES]
    _, make = r.choices(TEMPLATES, weights=weights)[0]
    return make(r)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=20210601)
    ap.add_argument("--sentences", type=int, default=10_000)
    ap.add_argument("--out", type=Path, default=Path("data/sample/encyclopedia.jsonl"))
    args = ap.parse_args()

    r = random.Random(args.seed)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    remaining = args.sentences
    n = 0
    with args.out.open("w", encoding="utf-8") as f:
        while remaining > 0:
            count = min(remaining, r.randint(4, 18))
            paragraphs, current = [], []
            for _ in range(count):
                current.append(sentence(r))
                if r.random() < 0.15:
                    paragraphs.append(" ".join(current))
                    current = []
            if current:
                paragraphs.append(" ".join(current))
            title = f"{r.choice(CITIES)} ({n})"
            doc = {"id": f"enc{n:05d}", "title": title, "text": "\n\n".join(paragraphs)}
            f.write(json.dumps(doc, ensure_ascii=False) + "\n")
            remaining -= count
            n += 1
    print(f"wrote {n} documents, {args.sentences} sentences to {args.out}")


if __name__ == "__main__":
    main()
